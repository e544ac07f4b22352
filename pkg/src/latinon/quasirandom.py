"""Quasirandomness tests through 3 x 2 pattern densities."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from math import factorial

import numpy as np

from . import exceptions as exc
from .density import density_vector, hoeffding_radius
from .latin import LatinSquare
from .patterns import all_pattern_arrays
from .step import IntervalPartition, SemiLatinon, StepLatinon, validate_latinon

EXACT_SQUARE_LIMIT = 40
WITNESS_FILE = "r22_witness.json"
WITNESS_GAP_22 = 1e-3
WITNESS_GAP_32 = 1e-2

__all__ = ["QuasiReport", "quasirandom_test", "r22_insufficiency_witness", "load_witness"]


@dataclass
class QuasiReport:
    max_gap_32: float
    max_gap_22: float
    tolerance: float
    mode: str
    radius: float = 0.0
    densities_32: np.ndarray = field(default=None, repr=False)
    densities_22: np.ndarray = field(default=None, repr=False)
    argmax_32: int = 0

    @property
    def quasirandom(self):
        """Verdict: every 3 x 2 gap is within ``tolerance``."""
        return self.max_gap_32 <= self.tolerance

    def table(self):
        """Per-pattern rows (shape, pattern id, density, gap) for both shapes."""
        rows = []
        for (k, l), dens in (((3, 2), self.densities_32), ((2, 2), self.densities_22)):
            target = 1.0 / factorial(k * l)
            for p, v in zip(all_pattern_arrays(k, l), dens):
                rows.append({"shape": f"{k}x{l}", "pattern_id": "-".join(map(str, p)), "density": repr(float(v)),
                             "gap": repr(abs(float(v) - target))})
        return rows

    def to_dict(self):
        pat = all_pattern_arrays(3, 2)[self.argmax_32]
        return {
            "max_gap_32": self.max_gap_32,
            "max_gap_22": self.max_gap_22,
            "worst_pattern_32": "-".join(map(str, pat)),
            "tolerance": self.tolerance,
            "mode": self.mode,
            "radius": self.radius,
            "quasirandom": bool(self.quasirandom),
        }


def _auto_mode(x):
    if isinstance(x, LatinSquare):
        return "exact" if x.n <= EXACT_SQUARE_LIMIT else "monte_carlo"
    return "exact"


def quasirandom_test(x, tolerance=None, mode="auto", samples=10 ** 6, seed=0, threads=1):
    """Gaps between the 3 x 2 (and 2 x 2) pattern densities of ``x`` and their uniform values.

    Quasirandom objects have every 3 x 2 density equal to ``1/720``.
    ``tolerance`` defaults to ``4`` Hoeffding radii in Monte Carlo mode and
    ``1e-9`` in exact mode.
    """
    if mode == "auto":
        mode = _auto_mode(x)
    if mode == "mc":
        mode = "monte_carlo"
    if mode == "exact" and isinstance(x, LatinSquare) and x.n > EXACT_SQUARE_LIMIT:
        raise exc.BudgetExceeded(f"exact mode on squares is limited to n <= {EXACT_SQUARE_LIMIT}")
    if not isinstance(x, (LatinSquare, SemiLatinon)):
        raise exc.ValidationError("expected a LatinSquare or a step Latinon")
    r32 = density_vector(x, 3, 2, mode=mode, samples=samples, seed=seed, threads=threads)
    r22 = density_vector(x, 2, 2, mode=mode, samples=samples, seed=seed + 1, threads=threads)
    d32 = np.array([r.value for r in r32])
    d22 = np.array([r.value for r in r22])
    g32 = np.abs(d32 - 1.0 / 720)
    g22 = np.abs(d22 - 1.0 / 24)
    radius = hoeffding_radius(samples) if mode == "monte_carlo" else 0.0
    if tolerance is None:
        tolerance = 4 * radius if mode == "monte_carlo" else 1e-9
    return QuasiReport(float(g32.max()), float(g22.max()), float(tolerance), mode, radius, d32, d22,
                       int(np.argmax(g32)))


def _witness_from_dict(data):
    W = StepLatinon(
        IntervalPartition.from_boundaries(data["row_boundaries"]),
        IntervalPartition.from_boundaries(data["col_boundaries"]),
        IntervalPartition.from_boundaries(data["value_boundaries"]),
        np.asarray(data["alpha"], dtype=float),
    )
    return W


def load_witness():
    """The shipped step Latinon, without re-verification."""
    text = resources.files("latinon").joinpath("data", WITNESS_FILE).read_text()
    return _witness_from_dict(json.loads(text))


def r22_insufficiency_witness():
    """A step Latinon that looks uniform on 2 x 2 patterns but not on 3 x 2 patterns.

    The shipped data is checked on every load with exact step densities:
    all 24 gaps of shape 2 x 2 must be at most ``1e-3`` and some 3 x 2 gap
    must reach ``1e-2``; otherwise ``WitnessInvalid`` is raised.
    """
    try:
        W = validate_latinon(load_witness())
    except exc.ValidationError as e:
        raise exc.WitnessInvalid(f"shipped witness is not a step Latinon: {e}") from e
    rep = quasirandom_test(W, mode="exact")
    if rep.max_gap_22 > WITNESS_GAP_22 or rep.max_gap_32 < WITNESS_GAP_32:
        raise exc.WitnessInvalid(
            f"witness gaps 2x2 = {rep.max_gap_22:.3g}, 3x2 = {rep.max_gap_32:.3g} fail the check")
    return W, rep
