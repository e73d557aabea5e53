"""Maximum-likelihood calibration and parametric bootstrap.

A campaign is a set of strain-controlled tests ``(n_i, eps_i, A_i)``.  Each
test's crack-initiation life is Weibull with shape ``m`` and scale
``(A_i/a_ref)^(-1/m) N_det(eps_i)``; the five parameters
``sigma_f, b, eps_f, c, m`` are estimated jointly with the elastic modulus
held fixed.

The optimizer works in unconstrained coordinates::

    (log sigma_f, log(-b), log eps_f, log(-c), log(m - 1 + delta))

so positivity, negative exponents and ``m >= 1`` hold at every trial point.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize, nnls

from . import cmb
from .cmb import CMBParams, MaterialModel
from .exceptions import BootstrapError, DomainError, IllPosedWarning, OutOfRangeError
from .ppp import LifeDistribution, quantile_lives

MIN_RECORDS = 5
SHAPE_DELTA = 1e-6
EULER_GAMMA = 0.5772156649015329


@dataclass(frozen=True)
class TestRecord:
    """One strain-controlled LCF test.

    Temperature and load ratio are carried along for bookkeeping only.
    """

    __test__ = False  # not a pytest class

    cycles_to_initiation: float
    strain_amplitude: float
    gauge_area: float
    specimen_id: str = ""
    temperature_c: float | None = None
    load_ratio: float | None = None

    def __post_init__(self):
        for name in ("cycles_to_initiation", "strain_amplitude", "gauge_area"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float, np.floating, np.integer)) and math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be a positive finite number, got {v!r}")


class Campaign:
    """Ordered list of :class:`TestRecord` with array views for numerics."""

    def __init__(self, records):
        self.records = list(records)
        if not self.records:
            raise DomainError("a campaign needs at least one record")
        self.cycles = np.array([r.cycles_to_initiation for r in self.records], dtype=float)
        self.strains = np.array([r.strain_amplitude for r in self.records], dtype=float)
        self.areas = np.array([r.gauge_area for r in self.records], dtype=float)

    @classmethod
    def from_arrays(cls, cycles, strains, areas, specimen_ids=None):
        cycles, strains, areas = np.broadcast_arrays(
            np.asarray(cycles, float), np.asarray(strains, float), np.asarray(areas, float)
        )
        if specimen_ids is None:
            specimen_ids = [f"S{i + 1:04d}" for i in range(cycles.size)]
        return cls(
            TestRecord(float(n), float(e), float(a), str(s))
            for n, e, a, s in zip(cycles.ravel(), strains.ravel(), areas.ravel(), specimen_ids)
        )

    def __len__(self):
        return len(self.records)

    def __repr__(self):
        return f"Campaign(n_records={len(self)}, strain_levels={self.n_strain_levels})"

    @property
    def n_strain_levels(self):
        return int(np.unique(self.strains).size)

    def with_cycles(self, cycles):
        """Copy of the campaign with new lives, metadata preserved."""
        return Campaign(
            TestRecord(float(n), r.strain_amplitude, r.gauge_area, r.specimen_id, r.temperature_c, r.load_ratio)
            for n, r in zip(cycles, self.records)
        )


@dataclass(frozen=True)
class FitConfig:
    """Settings for :func:`fit_mle`.

    Parameters
    ----------
    E : float
        Elastic modulus; measured separately and never fitted.
    a_ref : float
        Unit-specimen gauge area the coefficients refer to.
    initial : MaterialModel, optional
        Starting point; a deterministic regression guess is used when absent.
    max_iter : int
        Iteration cap shared by the simplex stage and the gradient polish.
    tol : float
        Absolute convergence tolerance on the log-likelihood.
    grad_tol : float
        Max-norm of the log-likelihood gradient (optimizer coordinates)
        below which a fit counts as converged.
    simplex : bool
        Run a Nelder-Mead search before the quasi-Newton polish.
    """

    E: float
    a_ref: float = 1.0
    initial: MaterialModel | None = None
    max_iter: int = 20000
    tol: float = 1e-9
    grad_tol: float = 1e-3
    simplex: bool = True

    def __post_init__(self):
        if not (self.E > 0 and self.a_ref > 0):
            raise DomainError("E and a_ref must be positive")
        if not (self.tol > 0 and self.grad_tol > 0 and self.max_iter > 0):
            raise DomainError("tolerances and max_iter must be positive")


@dataclass
class FitResult:
    theta_hat: MaterialModel
    log_likelihood: float
    converged: bool
    iterations: int
    eta_hat: np.ndarray
    initial_log_likelihood: float = float("nan")
    gradient_norm: float = float("nan")
    message: str = ""
    warnings: list = field(default_factory=list)

    def distribution(self, i):
        """Fitted life distribution of record ``i``."""
        return LifeDistribution(float(self.eta_hat[i]), self.theta_hat.m)


@dataclass
class BootstrapResult:
    """Percentile intervals for predicted lives at a list of query points.

    ``query`` rows are ``(strain, area_mm2, quantile)``.
    """

    level: float
    n_replicates: int
    n_failed: int
    seed: int
    query: np.ndarray
    point: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    replicate_predictions: np.ndarray | None = None
    replicate_thetas: list | None = None


# ---------------------------------------------------------------------------
# likelihood


def encode(mm):
    """Material model -> optimizer coordinates."""
    p = mm.cmb
    return np.array(
        [
            math.log(p.sigma_f),
            math.log(-p.b),
            math.log(p.eps_f),
            math.log(-p.c),
            math.log(mm.m - 1.0 + SHAPE_DELTA),
        ]
    )


def decode(x, E, a_ref=1.0):
    """Optimizer coordinates -> material model."""
    sf, nb, ef, nc, mu = np.exp(np.asarray(x, dtype=float))
    m = max(mu + 1.0 - SHAPE_DELTA, 1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return MaterialModel(CMBParams(E, float(sf), float(-nb), float(ef), float(-nc)), float(m), a_ref)


class _Objective:
    """Negative log-likelihood and its gradient in optimizer coordinates.

    Strain levels are inverted once per distinct value, which matters for
    campaigns with many replicates per level.
    """

    def __init__(self, campaign, E, a_ref):
        self.E = E
        self.log_E = math.log(E)
        self.levels, self.inverse = np.unique(campaign.strains, return_inverse=True)
        self.counts = np.bincount(self.inverse).astype(float)
        self.log_n = np.log(campaign.cycles)
        self.log_a = np.log(campaign.areas / a_ref)
        self.sum_log_n = float(self.log_n.sum())
        self.sum_log_a = float(self.log_a.sum())
        self.n = len(campaign)
        self.n_calls = 0

    def _unpack(self, x):
        lsf, lnb, lef, lnc, lmu = x
        A = math.exp(lsf - self.log_E)
        b = -math.exp(lnb)
        B = math.exp(lef)
        c = -math.exp(lnc)
        m = math.exp(lmu) + 1.0 - SHAPE_DELTA
        return A, b, B, c, max(m, 1.0)

    def terms(self, x):
        A, b, B, c, m = self._unpack(x)
        if self.levels.size <= 32:
            xl = np.array([cmb._invert_log2n_scalar(e, A, b, B, c) for e in self.levels])
        else:
            xl = cmb._invert_log2n(self.levels, A, b, B, c)
        log_N = xl[self.inverse] - math.log(2.0)
        r = self.log_n - log_N
        ez = np.exp(m * r + self.log_a)
        ll = self.n * math.log(m) + (m - 1.0) * self.sum_log_n + self.sum_log_a - m * log_N.sum() - ez.sum()
        return ll, (A, b, B, c, m), xl, r, ez

    def __call__(self, x):
        self.n_calls += 1
        try:
            with np.errstate(all="ignore"):
                ll = self.terms(x)[0]
        except (OverflowError, ValueError, ZeroDivisionError):
            return math.inf
        return -ll if math.isfinite(ll) else math.inf

    def value_and_grad(self, x):
        self.n_calls += 1
        try:
            with np.errstate(all="ignore"):
                ll, (A, b, B, c, m), xl, r, ez = self.terms(x)
        except (OverflowError, ValueError, ZeroDivisionError):
            return math.inf, np.zeros(5)
        if not math.isfinite(ll):
            return math.inf, np.zeros(5)
        u = A * np.exp(b * xl)
        v = B * np.exp(c * xl)
        slope = b * u + c * v
        # d ll / d log N per record, pooled per strain level
        w = m * (np.bincount(self.inverse, weights=ez, minlength=self.levels.size) - self.counts)
        wu = w * u / slope
        wv = w * v / slope
        g = np.array(
            [
                -wu.sum(),
                -(wu @ xl) * b,
                -wv.sum(),
                -(wv @ xl) * c,
                (self.n / m + r.sum() - r @ ez) * (m - 1.0 + SHAPE_DELTA),
            ]
        )
        return -ll, -g


def _record_log_n_det(mm, campaign):
    try:
        return np.log(cmb.cmb_invert(campaign.strains, mm.cmb))
    except OutOfRangeError as exc:
        rec = campaign.records[exc.index] if exc.index is not None else None
        name = f"record {exc.index} ({rec.specimen_id})" if rec is not None else "a record"
        raise OutOfRangeError(f"{name}: {exc}", strain=exc.strain, index=exc.index) from exc


def fitted_scales(mm, campaign):
    """Weibull scale of every record under model ``mm``."""
    log_n_det = _record_log_n_det(mm, campaign)
    return np.exp(log_n_det - np.log(campaign.areas / mm.a_ref) / mm.m)


def log_likelihood(theta, campaign):
    """Sum of Weibull log-densities of the observed lives.

    Parameters
    ----------
    theta : MaterialModel
    campaign : Campaign

    Returns
    -------
    float
    """
    eta = fitted_scales(theta, campaign)
    m = theta.m
    lz = np.log(campaign.cycles) - np.log(eta)
    return float(np.sum(math.log(m) - np.log(eta) + (m - 1.0) * lz - np.exp(m * lz)))


# ---------------------------------------------------------------------------
# fitting


def initial_guess(campaign, E, a_ref=1.0):
    """Deterministic starting point for the likelihood search.

    Log-strain is regressed on log-reversals separately for the lower and
    upper half of the strain levels: the flatter slope seeds the elastic
    exponent, the steeper one the plastic exponent.  With the exponents
    fixed, both coefficients follow from non-negative least squares on the
    relative strain residual.  The shape comes from the spread of the log
    life quotients, and the coefficients are finally moved from the
    observed gauge areas to the unit specimen.
    """
    eps = campaign.strains
    log_rev = np.log(2.0 * campaign.cycles)
    levels = np.unique(eps)
    b0, c0 = -0.1, -0.6
    if levels.size >= 4:
        half = levels.size // 2
        low = eps <= levels[half - 1]
        slopes = []
        for mask in (low, ~low):
            slope = np.polyfit(log_rev[mask], np.log(eps[mask]), 1)[0]
            slopes.append(slope)
        b0 = float(np.clip(slopes[0], -0.3, -0.02))
        c0 = float(np.clip(slopes[1], -1.5, -0.2))
        if c0 > b0 - 0.1:
            c0 = b0 - 0.1

    design = np.column_stack([np.exp(b0 * log_rev), np.exp(c0 * log_rev)]) / eps[:, None]
    coef, _ = nnls(design, np.ones_like(eps))
    total = float(np.mean(design @ coef)) or 1.0
    alpha = max(coef[0], 1e-3 * total * eps.mean())
    beta = max(coef[1], 1e-3 * total * eps.mean())

    log_fit = cmb._invert_log2n(eps, alpha, b0, beta, c0) - math.log(2.0)
    spread = float(np.std(np.log(campaign.cycles) - log_fit))
    m0 = float(np.clip(math.pi / (math.sqrt(6.0) * spread), 1.2, 50.0)) if spread > 0 else 10.0

    # the regression tracks the log-mean life at the observed areas
    mean_log_area = float(np.mean(np.log(campaign.areas / a_ref)))
    log_k = mean_log_area / m0 + EULER_GAMMA / m0
    sigma_f = E * alpha * math.exp(-b0 * log_k)
    eps_f = beta * math.exp(-c0 * log_k)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return MaterialModel(CMBParams(E, sigma_f, b0, eps_f, c0), m0, a_ref)


def _numerical_gradient(f, x, step=1e-5):
    g = np.empty_like(x)
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = step
        g[k] = (f(x + e) - f(x - e)) / (2 * step)
    return g


def fit_mle(campaign, config):
    """Maximum-likelihood estimate of the material model.

    Parameters
    ----------
    campaign : Campaign
    config : FitConfig

    Returns
    -------
    FitResult
        ``converged`` is False when the gradient max-norm at the returned
        point exceeds ``config.grad_tol``; the best point found is still
        returned.

    Notes
    -----
    A Nelder-Mead search (optional) is followed by BFGS with the analytic
    gradient, repeated until the log-likelihood stops improving by more than
    ``config.tol``.
    """
    if len(campaign) < MIN_RECORDS:
        raise DomainError(f"fitting needs at least {MIN_RECORDS} records, got {len(campaign)}")
    notes = []
    if campaign.n_strain_levels < 2:
        msg = "all records share one strain level; sigma_f, b, eps_f and c are not identifiable"
        warnings.warn(msg, IllPosedWarning, stacklevel=2)
        notes.append(msg)

    theta0 = config.initial
    if theta0 is None:
        theta0 = initial_guess(campaign, config.E, config.a_ref)
    else:
        if theta0.a_ref != config.a_ref:
            theta0 = theta0.rereferenced(config.a_ref)
        if theta0.cmb.E != config.E:
            raise DomainError("initial model and config disagree on E")

    obj = _Objective(campaign, config.E, config.a_ref)
    x0 = encode(theta0)
    f0 = obj(x0)
    if not math.isfinite(f0):
        raise DomainError("log-likelihood is not finite at the initial guess")
    best_x, best_f = x0, f0
    iterations = 0
    messages = []

    if config.simplex:
        res = minimize(
            obj,
            x0,
            method="Nelder-Mead",
            options={"maxiter": config.max_iter, "xatol": 1e-10, "fatol": config.tol, "adaptive": True},
        )
        iterations += res.nit
        messages.append(f"nelder-mead: {res.message}")
        if res.fun < best_f:
            best_x, best_f = res.x, res.fun

    budget = config.max_iter
    for _ in range(20):
        res = minimize(
            obj.value_and_grad,
            best_x,
            jac=True,
            method="BFGS",
            options={"maxiter": budget, "gtol": config.grad_tol / 10},
        )
        iterations += res.nit
        budget -= res.nit
        improved = best_f - res.fun
        if res.fun <= best_f:
            best_x, best_f = res.x, res.fun
        _, grad = obj.value_and_grad(best_x)
        if np.max(np.abs(grad)) < config.grad_tol or improved <= config.tol or budget <= 0:
            messages.append(f"bfgs: {res.message}")
            break

    _, grad = obj.value_and_grad(best_x)
    grad_norm = float(np.max(np.abs(grad)))
    converged = bool(math.isfinite(best_f) and grad_norm < config.grad_tol)
    theta_hat = decode(best_x, config.E, config.a_ref)
    if theta_hat.cmb.c > theta_hat.cmb.b:
        notes.append(f"fitted c={theta_hat.cmb.c:.4g} is flatter than b={theta_hat.cmb.b:.4g}")
    return FitResult(
        theta_hat=theta_hat,
        log_likelihood=-float(best_f),
        converged=converged,
        iterations=int(iterations),
        eta_hat=fitted_scales(theta_hat, campaign),
        initial_log_likelihood=-float(f0),
        gradient_norm=grad_norm,
        message="; ".join(messages),
        warnings=notes,
    )


def gradient_check(theta, campaign, step=1e-5):
    """Central-difference gradient of the log-likelihood in optimizer coordinates."""
    obj = _Objective(campaign, theta.cmb.E, theta.a_ref)
    return -_numerical_gradient(obj, encode(theta), step)


# ---------------------------------------------------------------------------
# bootstrap


def predict_lives(theta, query):
    """Life at each ``(strain, area, p)`` query row."""
    q = np.atleast_2d(np.asarray(query, dtype=float))
    return quantile_lives(theta, q[:, 0], q[:, 1], q[:, 2])


def replicate_rng(seed, index):
    """Independent generator for bootstrap replicate ``index``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def _one_replicate(campaign, fit, query, seed, r, config):
    rng = replicate_rng(seed, r)
    cycles = fit.eta_hat * rng.weibull(fit.theta_hat.m, size=len(campaign))
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = fit_mle(campaign.with_cycles(cycles), config)
        if not res.converged:
            return None
        return res.theta_hat, predict_lives(res.theta_hat, query)
    except (DomainError, FloatingPointError, np.linalg.LinAlgError):
        return None


def parametric_bootstrap(campaign, fit, B=500, level=0.925, query=(), seed=0, config=None,
                         n_jobs=None, keep_replicates=False, max_fail_fraction=0.1):
    """Fully parametric percentile-bootstrap intervals for predicted lives.

    Each replicate redraws every record's life from its fitted Weibull law,
    refits all five parameters starting from ``fit.theta_hat`` and evaluates
    the query points.  Replicate ``r`` uses a generator seeded by
    ``(seed, r)``, so results do not depend on ``n_jobs``.

    Parameters
    ----------
    campaign : Campaign
    fit : FitResult
    B : int
        Number of replicates.
    level : float
        Two-sided confidence level.
    query : array_like of shape (k, 3)
        Rows ``(strain, area_mm2, quantile)``.
    seed : int
    config : FitConfig, optional
        Refit settings; defaults to a gradient-only refit warm-started at
        ``fit.theta_hat``.
    n_jobs : int, optional
        Parallel workers (joblib); ``None`` runs sequentially.

    Returns
    -------
    BootstrapResult

    Raises
    ------
    BootstrapError
        When more than ``max_fail_fraction`` of the refits fail.
    """
    if not fit.converged:
        raise DomainError("bootstrap needs a converged fit")
    if not 0 < level < 1:
        raise DomainError(f"level must lie in (0, 1), got {level!r}")
    if B < 2:
        raise DomainError(f"B must be at least 2, got {B!r}")
    if B < 100:
        warnings.warn(f"B={B} replicates give unstable percentile intervals", UserWarning, stacklevel=2)
    query = np.atleast_2d(np.asarray(query, dtype=float))
    if query.size == 0 or query.shape[1] != 3:
        raise DomainError("query must have rows (strain, area, quantile)")
    theta = fit.theta_hat
    if config is None:
        config = FitConfig(E=theta.cmb.E, a_ref=theta.a_ref, initial=theta, simplex=False)
    elif config.initial is None:
        config = FitConfig(**{**config.__dict__, "initial": theta})

    point = predict_lives(theta, query)
    if n_jobs is None or n_jobs == 1:
        outcomes = [_one_replicate(campaign, fit, query, seed, r, config) for r in range(B)]
    else:
        from joblib import Parallel, delayed

        outcomes = Parallel(n_jobs=n_jobs)(
            delayed(_one_replicate)(campaign, fit, query, seed, r, config) for r in range(B)
        )
    ok = [o for o in outcomes if o is not None]
    n_failed = B - len(ok)
    if n_failed > max_fail_fraction * B:
        raise BootstrapError(f"{n_failed} of {B} bootstrap refits failed")
    preds = np.array([o[1] for o in ok])
    alpha = (1.0 - level) / 2.0
    # outward-rounded order statistics; with two replicates these are min and max
    lower = np.percentile(preds, 100 * alpha, axis=0, method="lower")
    upper = np.percentile(preds, 100 * (1 - alpha), axis=0, method="higher")
    return BootstrapResult(
        level=level,
        n_replicates=B,
        n_failed=n_failed,
        seed=int(seed),
        query=query,
        point=point,
        lower=np.minimum(lower, point),
        upper=np.maximum(upper, point),
        replicate_predictions=preds if keep_replicates else None,
        replicate_thetas=[o[0] for o in ok] if keep_replicates else None,
    )
