"""Scikit-learn compatible front end for the calibration routines.

``X`` holds one row per test with columns ``(strain_amplitude, gauge_area)``;
``y`` holds cycles to crack initiation.  A single column is accepted when
every specimen has the estimator's ``gauge_area``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from . import calibration, ppp
from .calibration import Campaign, FitConfig


class ProbabilisticCMB(RegressorMixin, BaseEstimator):
    """Weibull crack-initiation model with a size-dependent scale.

    Parameters
    ----------
    E : float
        Elastic modulus, held fixed during fitting.
    a_ref : float, default=1.0
        Gauge area of the unit specimen the coefficients refer to.
    gauge_area : float, optional
        Area used when ``X`` has a single strain column.
    quantile : float, default=0.5
        Failure probability returned by :meth:`predict`.
    max_iter, tol, grad_tol, simplex
        Forwarded to :class:`~probcmb.calibration.FitConfig`.
    warm_start : bool, default=False
        Start from the previous solution when refitting.

    Attributes
    ----------
    material_model_ : MaterialModel
    fit_result_ : FitResult
    sigma_f_, b_, eps_f_, c_, m_ : float
    log_likelihood_ : float
    n_iter_ : int

    Examples
    --------
    >>> from probcmb import ProbabilisticCMB
    >>> est = ProbabilisticCMB(E=150000.0).fit(X, cycles)      # doctest: +SKIP
    >>> est.predict([[0.006, 263.9]])                            # doctest: +SKIP
    """

    def __init__(self, E=200000.0, a_ref=1.0, gauge_area=None, quantile=0.5, max_iter=20000,
                 tol=1e-9, grad_tol=1e-3, simplex=True, warm_start=False):
        self.E = E
        self.a_ref = a_ref
        self.gauge_area = gauge_area
        self.quantile = quantile
        self.max_iter = max_iter
        self.tol = tol
        self.grad_tol = grad_tol
        self.simplex = simplex
        self.warm_start = warm_start

    def _split(self, X):
        if X.shape[1] == 2:
            return X[:, 0], X[:, 1]
        if X.shape[1] == 1:
            if self.gauge_area is None:
                raise ValueError("X has one column; set gauge_area or pass (strain, area) columns")
            return X[:, 0], np.full(X.shape[0], float(self.gauge_area))
        raise ValueError(f"X must have 1 or 2 columns, got {X.shape[1]}")

    def _campaign(self, X, y):
        strains, areas = self._split(X)
        return Campaign.from_arrays(y, strains, areas)

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float, y_numeric=True)
        campaign = self._campaign(X, y)
        initial = None
        if self.warm_start and hasattr(self, "material_model_"):
            initial = self.material_model_
        config = FitConfig(
            E=float(self.E),
            a_ref=float(self.a_ref),
            initial=initial,
            max_iter=int(self.max_iter),
            tol=float(self.tol),
            grad_tol=float(self.grad_tol),
            simplex=bool(self.simplex),
        )
        res = calibration.fit_mle(campaign, config)
        self.fit_result_ = res
        self.material_model_ = res.theta_hat
        p = res.theta_hat.cmb
        self.sigma_f_, self.b_, self.eps_f_, self.c_ = p.sigma_f, p.b, p.eps_f, p.c
        self.m_ = res.theta_hat.m
        self.log_likelihood_ = res.log_likelihood
        self.n_iter_ = res.iterations
        self.n_features_in_ = X.shape[1]
        return self

    def scale(self, X):
        """Weibull scale of the first-crack life for every row of ``X``."""
        check_is_fitted(self, "material_model_")
        X = check_array(X, dtype=float)
        strains, areas = self._split(X)
        return ppp.homogeneous_eta(self.material_model_, strains, areas)

    def predict(self, X, quantile=None):
        """Life at failure probability ``quantile`` (default ``self.quantile``)."""
        check_is_fitted(self, "material_model_")
        X = check_array(X, dtype=float)
        strains, areas = self._split(X)
        p = self.quantile if quantile is None else quantile
        return ppp.quantile_lives(self.material_model_, strains, areas, p)

    def sample(self, X, random_state=None):
        """Draw one crack-initiation life per row of ``X``."""
        rng = np.random.default_rng(random_state)
        return self.scale(X) * rng.weibull(self.m_, size=len(X))

    def score_samples(self, X, y):
        """Per-test log-density of the observed lives."""
        eta = self.scale(X)
        y = np.asarray(y, dtype=float)
        lz = np.log(y) - np.log(eta)
        m = self.m_
        return np.log(m) - np.log(eta) + (m - 1.0) * lz - np.exp(m * lz)

    def score(self, X, y, sample_weight=None):
        """Mean log-likelihood per test (higher is better)."""
        return float(np.average(self.score_samples(X, y), weights=sample_weight))
