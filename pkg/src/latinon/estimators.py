"""scikit-learn style wrappers around the main pipelines.

The "samples" these estimators see are whole Latin squares or step
Latinons, so ``X`` is a sequence of such objects rather than a feature
matrix. They still follow the usual conventions: hyperparameters are set in
``__init__`` and never modified, fitted state ends in an underscore, and
``get_params`` / ``set_params`` / ``clone`` work as usual.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .density import density_vector
from .patterns import enumerate_patterns
from .quasirandom import quasirandom_test
from .synthesis import plan_quotas, step_approximate, synthesize
from .validation import check_objects, check_positive_int, check_seed, check_step_latinon

__all__ = ["PatternDensityTransformer", "QuasirandomnessTester", "LatinSquareSynthesizer", "StepApproximator"]


class PatternDensityTransformer(TransformerMixin, BaseEstimator):
    """Map each square or Latinon to its vector of ``k x l`` pattern densities.

    Columns follow the lexicographic pattern order (``pattern_ids_``).
    """

    def __init__(self, k=2, l=2, mode="exact", samples=10 ** 5, seed=0, threads=1):
        self.k = k
        self.l = l
        self.mode = mode
        self.samples = samples
        self.seed = seed
        self.threads = threads

    def fit(self, X=None, y=None):
        check_positive_int(self.k, "k")
        check_positive_int(self.l, "l")
        check_seed(self.seed)
        self.pattern_ids_ = [p.id for p in enumerate_patterns(self.k, self.l)]
        self.n_features_out_ = len(self.pattern_ids_)
        return self

    def transform(self, X):
        check_is_fitted(self, "pattern_ids_")
        rows = []
        for x in check_objects(X):
            reps = density_vector(x, self.k, self.l, mode=self.mode, samples=self.samples, seed=self.seed,
                                  threads=self.threads)
            rows.append([r.value for r in reps])
        return np.array(rows, dtype=float).reshape(-1, self.n_features_out_)

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "pattern_ids_")
        return np.array([f"t_{pid}" for pid in self.pattern_ids_], dtype=object)


class QuasirandomnessTester(BaseEstimator):
    """``predict`` returns True for objects whose 3 x 2 gaps stay within tolerance."""

    def __init__(self, tolerance=None, mode="auto", samples=10 ** 6, seed=0, threads=1):
        self.tolerance = tolerance
        self.mode = mode
        self.samples = samples
        self.seed = seed
        self.threads = threads

    def fit(self, X=None, y=None):
        check_seed(self.seed)
        self.reports_ = []
        return self

    def _reports(self, X):
        return [quasirandom_test(x, tolerance=self.tolerance, mode=self.mode, samples=self.samples, seed=self.seed,
                                 threads=self.threads) for x in check_objects(X)]

    def predict(self, X):
        check_is_fitted(self, "reports_")
        self.reports_ = self._reports(X)
        return np.array([r.quasirandom for r in self.reports_], dtype=bool)

    def score_samples(self, X):
        """Largest 3 x 2 gap per object (higher means further from quasirandom)."""
        check_is_fitted(self, "reports_")
        self.reports_ = self._reports(X)
        return np.array([r.max_gap_32 for r in self.reports_])


class LatinSquareSynthesizer(BaseEstimator):
    """Fit to a step Latinon, then ``sample`` an order-``n`` Latin square realizing it."""

    def __init__(self, n=64, seed=0, restarts=1):
        self.n = n
        self.seed = seed
        self.restarts = restarts

    def fit(self, W, y=None):
        W = check_step_latinon(W)
        check_positive_int(self.n, "n")
        check_positive_int(self.restarts, "restarts")
        self.plan_ = plan_quotas(W, self.n)
        self.result_ = synthesize(self.plan_, seed=check_seed(self.seed), restarts=self.restarts)
        self.square_ = self.result_.square
        self.deviation_ = self.result_.deviation
        return self

    def sample(self):
        check_is_fitted(self, "square_")
        return self.square_


class StepApproximator(TransformerMixin, BaseEstimator, auto_wrap_output_keys=None):
    """Replace a step Latinon by one with dyadic value cells within ``eps``.

    The output is a Latinon, not an array, so sklearn's output wrapping is off.
    """

    def __init__(self, eps=0.5, r=None, seed=0):
        self.eps = eps
        self.r = r
        self.seed = seed

    def fit(self, W, y=None):
        self.result_ = step_approximate(check_step_latinon(W), self.eps, r=self.r, seed=check_seed(self.seed))
        self.budget_ = self.result_.budget
        return self

    def transform(self, W=None):
        """The fitted approximation when ``W`` is omitted, otherwise a fresh one."""
        check_is_fitted(self, "result_")
        if W is None:
            return self.result_.latinon
        return step_approximate(check_step_latinon(W), self.eps, r=self.r, seed=self.seed).latinon
