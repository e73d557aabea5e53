"""First-crack life distributions from strain fields on a specimen surface.

Crack initiations form a Poisson point process on surface x cycles with
Weibull-type intensity, so the first-crack life of any surface is
Weibull distributed.  The shape is the material's ``m``; the scale comes from
summing ``N_det^-m`` over the surface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from . import cmb
from ._validation import as_float_array, check_positive, check_probability
from .exceptions import DomainError, OutOfRangeError

ONE_MINUS_INV_E = 1.0 - math.exp(-1.0)


@dataclass(frozen=True)
class LifeDistribution:
    """Two-parameter Weibull law of the cycles to first crack initiation.

    Parameters
    ----------
    eta : float
        Scale (cycles); the 63.2 % quantile.
    m : float
        Shape, ``m >= 1``.
    """

    eta: float
    m: float

    def __post_init__(self):
        check_positive(self.eta, "eta")
        if not (math.isfinite(self.m) and self.m >= 1):
            raise DomainError(f"Weibull shape m must be >= 1, got {self.m!r}")

    def _z(self, n):
        n = check_positive(n, "n", allow_zero=True)
        return np.asarray(n, dtype=float) / self.eta

    def cdf(self, n):
        return _out(-np.expm1(-self._z(n) ** self.m))

    def survival(self, n):
        return _out(np.exp(-self._z(n) ** self.m))

    def hazard(self, n):
        z = self._z(n)
        return _out(self.m / self.eta * z ** (self.m - 1))

    def pdf(self, n):
        z = self._z(n)
        return _out(self.m / self.eta * z ** (self.m - 1) * np.exp(-(z**self.m)))

    def logpdf(self, n):
        n = check_positive(n, "n")
        lz = np.log(n) - math.log(self.eta)
        return _out(math.log(self.m) - math.log(self.eta) + (self.m - 1) * lz - np.exp(self.m * lz))

    def cumulative_hazard(self, n):
        """Expected number of crack initiations up to ``n`` cycles."""
        return _out(self._z(n) ** self.m)

    def quantile(self, p):
        p = check_probability(p)
        return _out(self.eta * (-np.log1p(-np.asarray(p))) ** (1.0 / self.m))

    def median(self):
        return self.eta * math.log(2.0) ** (1.0 / self.m)

    def mean(self):
        return self.eta * math.gamma(1.0 + 1.0 / self.m)

    def std(self):
        g1 = math.gamma(1.0 + 1.0 / self.m)
        g2 = math.gamma(1.0 + 2.0 / self.m)
        return self.eta * math.sqrt(g2 - g1 * g1)


def _out(a):
    return float(a) if np.ndim(a) == 0 else a


def cdf(n, d):
    """Probability that the first crack initiates within ``n`` cycles."""
    return d.cdf(n)


def survival(n, d):
    return d.survival(n)


def pdf(n, d):
    return d.pdf(n)


def hazard(n, d):
    return d.hazard(n)


def quantile(p, d):
    return d.quantile(p)


@dataclass(frozen=True)
class SurfaceElement:
    """One piece of the discretized surface with constant strain amplitude."""

    area: float
    strain: float

    def __post_init__(self):
        check_positive(self.area, "area")
        check_positive(self.strain, "strain")


class SurfaceMesh:
    """Ordered collection of surface elements (area in mm^2, strain amplitude).

    The mesh is piecewise constant: each element carries one strain value,
    which is what finite-element post-processing exports per face.

    Parameters
    ----------
    areas, strains : array_like
        Per-element areas and strain amplitudes, same length, all positive.
    ids : sequence, optional
        Element identifiers, used in error messages and CSV output.
    """

    def __init__(self, areas, strains, ids=None):
        areas = as_float_array(areas, "areas")
        strains = as_float_array(strains, "strains")
        if areas.shape != strains.shape:
            raise DomainError("areas and strains must have the same length")
        if areas.size == 0:
            raise DomainError("a surface mesh needs at least one element")
        check_positive(areas, "element areas")
        check_positive(strains, "element strains")
        if ids is None:
            ids = list(range(areas.size))
        elif len(ids) != areas.size:
            raise DomainError("ids must match the number of elements")
        self.areas = areas
        self.strains = strains
        self.ids = list(ids)
        self.areas.flags.writeable = False
        self.strains.flags.writeable = False

    @classmethod
    def from_elements(cls, elements):
        elements = list(elements)
        return cls([e.area for e in elements], [e.strain for e in elements])

    @classmethod
    def uniform(cls, area, strain):
        """Single-element mesh of a homogeneously strained gauge surface."""
        return cls([area], [strain])

    @property
    def elements(self):
        return [SurfaceElement(float(a), float(s)) for a, s in zip(self.areas, self.strains)]

    @property
    def total_area(self):
        return float(self.areas.sum())

    def __len__(self):
        return self.areas.size

    def __repr__(self):
        return f"SurfaceMesh(n_elements={len(self)}, total_area={self.total_area:g})"

    def scaled(self, factor):
        """Same strain field with every element area multiplied by ``factor``."""
        check_positive(factor, "factor")
        return SurfaceMesh(self.areas * factor, self.strains, self.ids)


@dataclass(frozen=True)
class SpecimenGeometry:
    """Cylindrical gauge section of a test specimen (lengths in mm)."""

    gauge_length: float
    diameter: float

    def __post_init__(self):
        check_positive(self.gauge_length, "gauge_length")
        check_positive(self.diameter, "diameter")


def gauge_surface_area(g):
    """Lateral surface ``pi D L`` of the gauge section; end faces excluded."""
    return math.pi * g.diameter * g.gauge_length


def gauge_volume(g):
    return math.pi * (g.diameter / 2.0) ** 2 * g.gauge_length


def scale_field(mesh, mm):
    """Deterministic life ``N_det`` of every mesh element, in mesh order."""
    try:
        return cmb.cmb_invert(mesh.strains, mm.cmb)
    except OutOfRangeError as exc:
        eid = mesh.ids[exc.index] if exc.index is not None else "?"
        raise OutOfRangeError(f"element {eid}: {exc}", strain=exc.strain, index=exc.index) from exc


def log_composite_eta(mesh, mm):
    """``log eta`` of the mesh, ``eta = (sum_j a_j N_j^-m)^(-1/m)``."""
    log_n = np.log(scale_field(mesh, mm))
    terms = np.log(mesh.areas / mm.a_ref) - mm.m * log_n
    return -logsumexp(terms) / mm.m


def composite_eta(mesh, mm):
    """First-crack life distribution of a whole surface.

    The accumulation runs in log space, so very large shapes or lives
    spanning many decades do not overflow.

    Returns
    -------
    LifeDistribution
    """
    return LifeDistribution(math.exp(log_composite_eta(mesh, mm)), mm.m)


def homogeneous_distribution(mm, strain, area):
    """Life distribution of a gauge surface ``area`` under uniform ``strain``."""
    return LifeDistribution(float(homogeneous_eta(mm, strain, area)), mm.m)


def homogeneous_eta(mm, strain, area):
    """Vectorized Weibull scale ``(area/a_ref)^(-1/m) N_det(strain)``."""
    area = check_positive(area, "area")
    n_det = cmb.cmb_invert(strain, mm.cmb)
    return (np.asarray(area) / mm.a_ref) ** (-1.0 / mm.m) * n_det


def quantile_lives(mm, strains, areas, probs):
    """Life at failure probability ``probs`` for uniform ``strains`` on ``areas``.

    Arguments broadcast against each other.
    """
    strains, areas, probs = np.broadcast_arrays(
        np.asarray(strains, dtype=float), np.asarray(areas, dtype=float), np.asarray(probs, dtype=float)
    )
    check_probability(probs, "quantile")
    eta = homogeneous_eta(mm, strains, areas)
    return eta * (-np.log1p(-probs)) ** (1.0 / mm.m)


def woehler_curve(mm, area, p, strains):
    """Life at probability ``p`` for a homogeneous specimen of gauge ``area``.

    Parameters
    ----------
    mm : MaterialModel
    area : float
        Gauge surface area in mm^2.
    p : float
        Failure probability of the quantile curve (0.5 gives the median).
    strains : array_like
        Strain amplitudes, in any order.

    Returns
    -------
    ndarray of shape (n, 2)
        Columns ``strain, cycles``.
    """
    strains = as_float_array(strains, "strains")
    return np.column_stack([strains, quantile_lives(mm, strains, area, p)])


def stress_drop_transfer(s_standard, d_standard, d_small):
    """Scale a stress-drop criterion to a specimen of another diameter.

    Equal crack areas in both specimens give a force drop that is the same,
    so the nominal stress drop scales with the inverse cross section.
    """
    s_standard = check_positive(s_standard, "s_standard")
    d_standard = check_positive(d_standard, "d_standard")
    d_small = check_positive(d_small, "d_small")
    return s_standard * (d_standard / d_small) ** 2
