"""Jacobson–Matthews moves on the incidence cube of a (possibly improper) Latin square.

The cube ``X[r, c, s]`` is 1 when cell ``(r, c)`` holds symbol ``s``. An
improper state has exactly one entry equal to -1; ``state`` tracks it as
``[flag, r, c, s]``.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def _other_one(line_a, line_b, u):
    # the two positions holding 1 in an improper line; pick one by u
    if u < 0.5:
        return line_a
    return line_b


@njit(cache=True)
def jm_run(cube, state, uniforms, proper_target):
    """Apply moves in place, one row of 3 uniforms per move.

    Stops after ``proper_target`` moves have landed on a proper square or
    when the uniforms run out. Returns the number of proper landings.
    """
    n = cube.shape[0]
    done = 0
    for t in range(uniforms.shape[0]):
        if done >= proper_target:
            break
        u0 = uniforms[t, 0]
        u1 = uniforms[t, 1]
        u2 = uniforms[t, 2]
        if state[0] == 0:
            r = min(int(u0 * n), n - 1)
            c = min(int(u1 * n), n - 1)
            cur = 0
            for v in range(n):
                if cube[r, c, v] == 1:
                    cur = v
                    break
            s = (cur + 1 + min(int(u2 * (n - 1)), n - 2)) % n
            r2 = 0
            for i in range(n):
                if cube[i, c, s] == 1:
                    r2 = i
                    break
            c2 = 0
            for j in range(n):
                if cube[r, j, s] == 1:
                    c2 = j
                    break
            s2 = cur
        else:
            r = state[1]
            c = state[2]
            s = state[3]
            a = -1
            b = -1
            for i in range(n):
                if cube[i, c, s] == 1:
                    if a < 0:
                        a = i
                    else:
                        b = i
            r2 = _other_one(a, b, u0)
            a = -1
            b = -1
            for j in range(n):
                if cube[r, j, s] == 1:
                    if a < 0:
                        a = j
                    else:
                        b = j
            c2 = _other_one(a, b, u1)
            a = -1
            b = -1
            for v in range(n):
                if cube[r, c, v] == 1:
                    if a < 0:
                        a = v
                    else:
                        b = v
            s2 = _other_one(a, b, u2)
        cube[r, c, s] += 1
        cube[r, c2, s2] += 1
        cube[r2, c, s2] += 1
        cube[r2, c2, s] += 1
        cube[r, c, s2] -= 1
        cube[r, c2, s] -= 1
        cube[r2, c, s] -= 1
        cube[r2, c2, s2] -= 1
        if cube[r2, c2, s2] < 0:
            state[0] = 1
            state[1] = r2
            state[2] = c2
            state[3] = s2
        else:
            state[0] = 0
            done += 1
    return done


def cube_to_cells(cube):
    return np.argmax(cube, axis=2) + 1
