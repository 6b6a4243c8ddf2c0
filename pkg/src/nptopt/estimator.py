"""Estimator-style wrapper around the criterion search.

``fit`` runs the negativity filter on a set of training states; the other
methods score new states against the retained criteria under the configured
loss and measurement budget.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .criteria import enumerate_specs, label
from .noise import NoiseModel
from .search import PointReport, evaluate_point, rank_point, step1_filter
from .validation import (check_fraction, check_nonnegative, check_positive,
                         check_positive_int, check_states)


class CriterionSearch(BaseEstimator):
    """Find the criteria able to certify entanglement and rank them by confidence.

    Parameters
    ----------
    d_max, n_max, d_min : search bounds on matrix dimension and moment order.
    eta, n_bar : loss applied when scoring.
    m_tot : total measurement budget per criterion.
    threshold : confidence needed to reject the separability hypothesis.
    cross_mode_only : skip criteria built only from single-mode moments.
    """

    def __init__(self, d_max=2, n_max=2, d_min=1, eta=1.0, n_bar=0.0, m_tot=1000.0,
                 threshold=0.95, cross_mode_only=False):
        self.d_max = d_max
        self.n_max = n_max
        self.d_min = d_min
        self.eta = eta
        self.n_bar = n_bar
        self.m_tot = m_tot
        self.threshold = threshold
        self.cross_mode_only = cross_mode_only

    def _validate_params(self):
        check_positive_int("d_min", self.d_min)
        check_positive_int("d_max", self.d_max, self.d_min)
        check_positive_int("n_max", self.n_max)
        check_fraction("eta", self.eta)
        check_nonnegative("n_bar", self.n_bar)
        check_positive("m_tot", self.m_tot)
        check_fraction("threshold", self.threshold)

    @property
    def noise_(self) -> NoiseModel:
        return NoiseModel(float(self.eta), float(self.n_bar))

    def fit(self, X, y=None):
        """Keep the criteria negative on at least one state in ``X``."""
        self._validate_params()
        states = check_states(X)
        candidates = enumerate_specs(self.d_max, self.n_max, self.d_min, self.cross_mode_only)
        self.specs_ = step1_filter(states, candidates)
        self.names_ = [label(s) for s in self.specs_]
        self.n_features_out_ = len(self.specs_)
        return self

    def _rows(self, state):
        return evaluate_point(state, 0.0, self.specs_, self.noise_, [float(self.m_tot)],
                              self.threshold)

    def transform(self, X) -> np.ndarray:
        """Post-loss determinants, one column per retained criterion."""
        check_is_fitted(self, "specs_")
        return np.array([[r.det_value for r in self._rows(s)] for s in check_states(X)])

    def predict_proba(self, X) -> np.ndarray:
        """Confidence of rejecting separability, one column per retained criterion."""
        check_is_fitted(self, "specs_")
        return np.array([[r.confidence for r in self._rows(s)] for s in check_states(X)])

    def rank(self, state) -> PointReport:
        check_is_fitted(self, "specs_")
        (state,) = check_states(state)
        return rank_point((0.0, float(self.eta), float(self.n_bar), float(self.m_tot)),
                          self._rows(state), self.threshold)

    def predict(self, X) -> np.ndarray:
        """Label of the most confident criterion group per state (empty if none)."""
        check_is_fitted(self, "specs_")
        out = []
        for s in check_states(X):
            best = self.rank(s).best
            out.append(best.group if best is not None else "")
        return np.array(out, dtype=object)

    def get_feature_names_out(self, input_features=None) -> np.ndarray:
        check_is_fitted(self, "specs_")
        return np.array(self.names_, dtype=object)
