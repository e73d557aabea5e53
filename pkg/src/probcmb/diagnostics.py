"""Model-adequacy checks on life quotients ``q_i = n_i / eta_i``.

Under a correct model the quotients are i.i.d. Weibull with the fitted
shape and unit scale, whatever strain or gauge area each test ran at.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import kolmogorov
from scipy.stats import rankdata

from ._validation import as_float_array, check_positive
from .exceptions import DomainError


@dataclass(frozen=True)
class QuotientSet:
    strains: np.ndarray
    quotients: np.ndarray

    def __post_init__(self):
        q = as_float_array(self.quotients, "quotients")
        e = as_float_array(self.strains, "strains")
        if q.shape != e.shape:
            raise DomainError("strains and quotients must have equal length")
        if q.size == 0:
            raise DomainError("quotient set is empty")
        check_positive(q, "quotients")
        object.__setattr__(self, "quotients", q)
        object.__setattr__(self, "strains", e)

    def __len__(self):
        return self.quotients.size


def life_quotients(campaign, fit):
    """Observed life over fitted Weibull scale, in record order."""
    if len(fit.eta_hat) != len(campaign):
        raise DomainError(
            f"fit has {len(fit.eta_hat)} fitted scales but the campaign has {len(campaign)} records"
        )
    return QuotientSet(campaign.strains.copy(), campaign.cycles / np.asarray(fit.eta_hat))


def unit_scale_shape(q):
    """Maximum-likelihood Weibull shape of ``q`` with the scale pinned to 1.

    The score ``n/m + sum(log q) - sum(q^m log q)`` is decreasing in ``m``,
    so its root is bracketed by expanding outwards from 1.
    """
    q = q.quotients if isinstance(q, QuotientSet) else as_float_array(q, "q")
    lq = np.log(q)
    n = q.size

    def score(m):
        return n / m + lq.sum() - np.sum(np.exp(m * lq) * lq)

    lo, hi = 1e-3, 1.0
    while score(hi) > 0:
        hi *= 2.0
        if hi > 1e6:
            raise DomainError("unit-scale shape diverges; are all quotients equal to 1?")
    return brentq(score, lo, hi, xtol=1e-12)


def plotting_positions(n):
    """Median-rank positions ``(i - 0.3) / (n + 0.4)``, ``i = 1..n``."""
    i = np.arange(1, n + 1)
    return (i - 0.3) / (n + 0.4)


def qq_points(q, m, refit_shape=False):
    """Q-Q pairs against Weibull(m, 1).

    Parameters
    ----------
    q : QuotientSet
    m : float
        Shape of the reference law; typically the jointly fitted one.
    refit_shape : bool
        Replace ``m`` by :func:`unit_scale_shape` of the quotients.

    Returns
    -------
    ndarray of shape (n, 2)
        Columns ``theoretical, empirical``; both non-decreasing.
    """
    if refit_shape:
        m = unit_scale_shape(q)
    check_positive(m, "m")
    emp = np.sort(q.quotients)
    p = plotting_positions(emp.size)
    theo = (-np.log1p(-p)) ** (1.0 / m)
    return np.column_stack([theo, emp])


def ks_statistic(x, cdf):
    x = np.sort(x)
    n = x.size
    f = cdf(x)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def kolmogorov_pvalue(d, n):
    """Asymptotic p-value of the one-sample KS statistic.

    The Kolmogorov limit law is applied to ``(sqrt(n) + 0.12 + 0.11/sqrt(n)) D``,
    Stephens' first-order finite-sample correction.  Parameters estimated
    from the same data make this p-value conservative.
    """
    rn = math.sqrt(n)
    return float(min(1.0, max(0.0, kolmogorov((rn + 0.12 + 0.11 / rn) * d))))


def ks_test(q, m):
    """Kolmogorov-Smirnov test of the quotients against Weibull(m, 1).

    Returns
    -------
    statistic : float
    p_value : float
    """
    check_positive(m, "m")
    x = q.quotients if isinstance(q, QuotientSet) else as_float_array(q, "q")
    d = ks_statistic(x, lambda t: -np.expm1(-(t**m)))
    return d, kolmogorov_pvalue(d, x.size)


def spearman_trend(q, n_permutations=9999, seed=0):
    """Rank correlation between strain and quotient with a permutation p-value.

    A clear trend means the scatter is not strain independent, which the
    constant-shape model assumes.

    Returns
    -------
    rho : float
    p_value : float
        Two-sided, ``(1 + #{|rho*| >= |rho|}) / (1 + n_permutations)``.
    """
    rx = rankdata(q.strains)
    ry = rankdata(q.quotients)
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    denom = math.sqrt(float(rx @ rx) * float(ry @ ry))
    if denom == 0:
        return float("nan"), 1.0
    rho = float(rx @ ry) / denom
    rng = np.random.default_rng(seed)
    perms = rng.permuted(np.broadcast_to(ry, (n_permutations, ry.size)), axis=1)
    null = perms @ rx / denom
    hits = int(np.sum(np.abs(null) >= abs(rho) - 1e-12))
    return rho, (1 + hits) / (1 + n_permutations)


def summarize(campaign, fit, refit_shape=False, n_permutations=9999, seed=0):
    """All diagnostics for one fit, as arrays plus a JSON-ready summary."""
    q = life_quotients(campaign, fit)
    m_hat = fit.theta_hat.m
    m_ref = unit_scale_shape(q) if refit_shape else m_hat
    d, p = ks_test(q, m_ref)
    rho, rho_p = spearman_trend(q, n_permutations=n_permutations, seed=seed)
    summary = {
        "ks_statistic": d,
        "p_value": p,
        "n": len(q),
        "m_hat": m_hat,
        "m_reference": m_ref,
        "spearman_rho": rho,
        "spearman_p": rho_p,
    }
    return q, qq_points(q, m_ref), summary
