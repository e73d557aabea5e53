"""Coffin-Manson-Basquin strain-life relation and its size-effect transforms.

Strain amplitudes are absolute fractions (0.0055, not 0.55 %).  The
coefficients ``sigma_f`` and ``eps_f`` of a :class:`MaterialModel` belong to
the *unit specimen*: a notional specimen whose gauge surface equals
``a_ref`` (1 mm^2 by default).  Every area handed to this package is divided
by ``a_ref`` before it enters a power law.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from ._validation import check_positive
from .exceptions import DomainError, ExponentOrderWarning, OutOfRangeError

#: Life bracket (cycles) inside which strains are inverted.
N_MIN = 1e-6
N_MAX = 1e16

_LOG2N_LO = math.log(2 * N_MIN)
_LOG2N_HI = math.log(2 * N_MAX)


@dataclass(frozen=True)
class CMBParams:
    """Parameters of the strain-life curve ``eps = sigma_f/E (2N)^b + eps_f (2N)^c``.

    Parameters
    ----------
    E : float
        Elastic modulus (stress units, e.g. MPa).
    sigma_f : float
        Fatigue strength coefficient, same units as ``E``.
    b : float
        Fatigue strength exponent, negative.
    eps_f : float
        Fatigue ductility coefficient (strain).
    c : float
        Fatigue ductility exponent, negative.

    One of the two coefficients may be zero, which leaves a pure Basquin or
    pure Coffin-Manson power law.
    """

    E: float
    sigma_f: float
    b: float
    eps_f: float
    c: float

    def __post_init__(self):
        check_positive(self.E, "E")
        check_positive(self.sigma_f, "sigma_f", allow_zero=True)
        check_positive(self.eps_f, "eps_f", allow_zero=True)
        if self.sigma_f == 0 and self.eps_f == 0:
            raise DomainError("sigma_f and eps_f cannot both be zero")
        for name in ("b", "c"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v < 0):
                raise DomainError(f"exponent {name} must be negative, got {v!r}")
        if self.c > self.b and self.sigma_f > 0 and self.eps_f > 0:
            warnings.warn(
                f"plastic exponent c={self.c:g} is flatter than elastic exponent b={self.b:g}",
                ExponentOrderWarning,
                stacklevel=3,
            )

    @property
    def elastic_coefficient(self):
        """``sigma_f / E``, the strain coefficient of the elastic branch."""
        return self.sigma_f / self.E


@dataclass(frozen=True)
class MaterialModel:
    """Strain-life parameters of the unit specimen plus the Weibull shape.

    Parameters
    ----------
    cmb : CMBParams
    m : float
        Weibull shape, ``m >= 1``.  Large ``m`` means little scatter.
    a_ref : float, default=1.0
        Gauge surface area (mm^2) of the unit specimen.
    """

    cmb: CMBParams
    m: float
    a_ref: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.m) and self.m >= 1):
            raise DomainError(f"Weibull shape m must be >= 1, got {self.m!r}")
        check_positive(self.a_ref, "a_ref")

    @classmethod
    def from_values(cls, E, sigma_f, b, eps_f, c, m, a_ref=1.0):
        return cls(CMBParams(E, sigma_f, b, eps_f, c), m, a_ref)

    def as_dict(self):
        p = self.cmb
        return {
            "E": p.E,
            "sigma_f": p.sigma_f,
            "b": p.b,
            "eps_f": p.eps_f,
            "c": p.c,
            "m": self.m,
            "a_ref": self.a_ref,
        }

    def rereferenced(self, a_ref):
        """Return the equivalent model whose unit specimen has area ``a_ref``.

        All predicted life distributions are unchanged; only the stored
        coefficients move.
        """
        check_positive(a_ref, "a_ref")
        k = (a_ref / self.a_ref) ** (1.0 / self.m)
        p = self.cmb
        cmb = replace(p, sigma_f=p.sigma_f * k**p.b, eps_f=p.eps_f * k**p.c)
        return MaterialModel(cmb, self.m, a_ref)


def cmb_strain(n, p):
    """Strain amplitude reached after ``n`` cycles on the strain-life curve.

    Parameters
    ----------
    n : float or array_like
        Cycles, strictly positive.
    p : CMBParams

    Returns
    -------
    float or ndarray
    """
    n = check_positive(n, "n")
    two_n = 2.0 * np.asarray(n, dtype=float)
    out = p.elastic_coefficient * two_n**p.b + p.eps_f * two_n**p.c
    return float(out) if np.ndim(out) == 0 else out


def _strain_at_log2n(x, A, b, B, c):
    return A * np.exp(b * x) + B * np.exp(c * x)


def _bisect_log2n(eps, A, b, B, c, lo=_LOG2N_LO, hi=_LOG2N_HI, rtol=1e-14):
    """Plain bisection for ``x = ln(2N)``; slow but unconditional."""
    eps = np.asarray(eps, dtype=float)
    lo = np.full(eps.shape, lo)
    hi = np.full(eps.shape, hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        above = _strain_at_log2n(mid, A, b, B, c) > eps
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
        if np.all(hi - lo <= rtol * np.maximum(1.0, np.abs(mid))):
            break
    return 0.5 * (lo + hi)


def _invert_log2n(eps, A, b, B, c, max_iter=60):
    """Solve ``A e^(b x) + B e^(c x) = eps`` for ``x = ln(2N)``, no validation.

    ``g(x) = ln(strain(x)) - ln(eps)`` is decreasing and convex, so Newton
    started left of the root climbs to it monotonically.  Each single-branch
    solution lies left of the root, hence the start point.  Entries that
    fail to settle are handed to bisection.
    """
    eps = np.asarray(eps, dtype=float)
    log_eps = np.log(eps)
    with np.errstate(divide="ignore"):
        xb = (log_eps - math.log(A)) / b if A > 0 else np.full(eps.shape, -np.inf)
        xc = (log_eps - math.log(B)) / c if B > 0 else np.full(eps.shape, -np.inf)
    x = np.maximum(np.maximum(xb, xc), _LOG2N_LO)
    done = np.zeros(eps.shape, dtype=bool)
    for _ in range(max_iter):
        u = A * np.exp(b * x)
        v = B * np.exp(c * x)
        s = u + v
        step = (np.log(s) - log_eps) * s / (b * u + c * v)
        x = np.where(done, x, x - step)
        done |= np.abs(step) <= 4e-16 * np.maximum(1.0, np.abs(x))
        if done.all():
            return x
    if not done.all():
        x = np.where(done, x, _bisect_log2n(eps, A, b, B, c))
    return x


def _invert_log2n_scalar(eps, A, b, B, c, max_iter=60):
    """Scalar version of :func:`_invert_log2n` using the math module."""
    log_eps = math.log(eps)
    x = _LOG2N_LO
    if A > 0:
        x = max(x, (log_eps - math.log(A)) / b)
    if B > 0:
        x = max(x, (log_eps - math.log(B)) / c)
    for _ in range(max_iter):
        u = A * math.exp(b * x)
        v = B * math.exp(c * x)
        s = u + v
        step = (math.log(s) - log_eps) * s / (b * u + c * v)
        x -= step
        if abs(step) <= 4e-16 * max(1.0, abs(x)):
            return x
    return float(_bisect_log2n(np.array([eps]), A, b, B, c)[0])


def cmb_invert(eps_a, p):
    """Cycles ``N`` at which the strain-life curve passes through ``eps_a``.

    Parameters
    ----------
    eps_a : float or array_like
        Strain amplitude(s), strictly positive.
    p : CMBParams

    Returns
    -------
    float or ndarray
        Deterministic life ``N`` with ``cmb_strain(N, p) == eps_a``.

    Raises
    ------
    DomainError
        If a strain is not positive.
    OutOfRangeError
        If the solution falls outside ``[N_MIN, N_MAX]`` cycles.
    """
    eps = check_positive(eps_a, "eps_a")
    eps_arr = np.atleast_1d(np.asarray(eps, dtype=float))
    A, B = p.elastic_coefficient, p.eps_f
    hi_strain = _strain_at_log2n(_LOG2N_LO, A, p.b, B, p.c)
    lo_strain = _strain_at_log2n(_LOG2N_HI, A, p.b, B, p.c)
    bad = (eps_arr > hi_strain) | (eps_arr < lo_strain)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        s = float(eps_arr[i])
        raise OutOfRangeError(
            f"strain amplitude {s:g} has no solution within [{N_MIN:g}, {N_MAX:g}] cycles",
            strain=s,
            index=i if np.ndim(eps) else None,
        )
    n = 0.5 * np.exp(_invert_log2n(eps_arr, A, p.b, B, p.c))
    return float(n[0]) if np.ndim(eps) == 0 else n


def coefficients_for_area(mm, area):
    """Median-curve coefficients ``(sigma_f(A), eps_f(A))`` for gauge area ``area``.

    Inserting them in the strain-life equation with the unit-specimen
    exponents gives the 50 % quantile life of a homogeneously strained
    specimen of that gauge surface.
    """
    area = check_positive(area, "area")
    base = (np.asarray(area) / mm.a_ref) / math.log(2.0)
    p = mm.cmb
    sf = base ** (p.b / mm.m) * p.sigma_f
    ef = base ** (p.c / mm.m) * p.eps_f
    if np.ndim(sf) == 0:
        return float(sf), float(ef)
    return sf, ef


def params_for_area(mm, area):
    """:class:`CMBParams` of the median Wöhler curve for gauge area ``area``."""
    sf, ef = coefficients_for_area(mm, area)
    return replace(mm.cmb, sigma_f=sf, eps_f=ef)
