"""Input checks shared by the estimators and the command line."""
from __future__ import annotations

import numbers

import numpy as np

from . import exceptions as exc
from .latin import LatinSquare, validate
from .patterns import Pattern, canonicalize
from .step import SemiLatinon, StepLatinon, validate_latinon

__all__ = ["check_latin_square", "check_step_latinon", "check_pattern", "check_positive_int", "check_seed",
           "check_objects"]


def check_latin_square(x) -> LatinSquare:
    """Return ``x`` as a :class:`LatinSquare`, validating raw tables."""
    return x if isinstance(x, LatinSquare) else validate(x)


def check_step_latinon(x, semi=False) -> SemiLatinon:
    """Accept a step Latinon (or, with ``semi=True``, any semilatinon)."""
    if not isinstance(x, SemiLatinon):
        raise exc.ValidationError(f"expected a step Latinon, got {type(x).__name__}")
    if semi or isinstance(x, StepLatinon):
        return x
    return validate_latinon(x)


def check_pattern(A) -> Pattern:
    """Patterns may be given as :class:`Pattern` or as tables with distinct entries."""
    if isinstance(A, Pattern):
        return A
    arr = np.asarray(A)
    if arr.ndim == 1:
        arr = arr[None, :]
    return canonicalize(arr)


def check_positive_int(value, name):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < 1:
        raise exc.ValidationError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def check_seed(seed):
    if isinstance(seed, bool) or not isinstance(seed, numbers.Integral) or not 0 <= seed < 2 ** 64:
        raise exc.ValidationError(f"seed must be an integer in [0, 2^64), got {seed!r}")
    return int(seed)


def check_objects(X):
    """A single square or Latinon becomes a one-element list; tables are validated as squares."""
    if isinstance(X, (LatinSquare, SemiLatinon)):
        return [X]
    if isinstance(X, np.ndarray) and X.ndim == 2:
        return [check_latin_square(X)]
    out = []
    for x in X:
        out.append(x if isinstance(x, SemiLatinon) else check_latin_square(x))
    return out
