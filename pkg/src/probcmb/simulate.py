"""Synthetic campaigns and Monte Carlo checks of the point-process model.

Two independent oracles test the closed-form first-crack law:

* :func:`ppp_first_crack_oracle` draws each element's own first crack and
  takes the minimum over the surface;
* :func:`ppp_count_oracle` draws Poisson crack counts per element inside a
  cycle window and sums them.

Trials are generated in fixed-size blocks, each with a generator derived
from ``(seed, block index)``, so results are reproducible however the
blocks are scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import ppp
from ._validation import check_positive
from .calibration import Campaign, TestRecord
from .exceptions import DomainError

BLOCK = 8192


@dataclass(frozen=True)
class DesignRow:
    strain: float
    area: float
    count: int

    def __post_init__(self):
        check_positive(self.strain, "strain")
        check_positive(self.area, "area")
        if int(self.count) != self.count or self.count < 1:
            raise DomainError(f"replicate count must be a positive integer, got {self.count!r}")


@dataclass(frozen=True)
class CampaignDesign:
    """Test matrix of a synthetic campaign: rows of (strain, area, replicates)."""

    rows: tuple
    seed: int = 0

    def __post_init__(self):
        rows = tuple(r if isinstance(r, DesignRow) else DesignRow(*r) for r in self.rows)
        if not rows:
            raise DomainError("a campaign design needs at least one row")
        object.__setattr__(self, "rows", rows)

    @property
    def n_records(self):
        return sum(r.count for r in self.rows)


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_first_crack(d, rng=None, size=None, u=None):
    """Inverse-CDF draw ``eta (-ln U)^(1/m)`` from a life distribution.

    ``u`` forces the uniform variate(s), which makes the draw exact.
    """
    if u is None:
        u = _rng(rng).random(size)
        # random() is on [0, 1); keep log finite
        u = np.where(u == 0.0, np.finfo(float).tiny, u)
    u = np.asarray(u, dtype=float)
    out = d.eta * (-np.log(u)) ** (1.0 / d.m)
    return float(out) if out.ndim == 0 else out


def sample_campaign(design, theta):
    """Draw a campaign from ``theta`` following ``design``; fixed by ``design.seed``."""
    rng = np.random.default_rng(design.seed)
    records = []
    for row in design.rows:
        d = ppp.homogeneous_distribution(theta, row.strain, row.area)
        lives = sample_first_crack(d, rng, size=row.count)
        for n in lives:
            records.append(
                TestRecord(float(n), row.strain, row.area, specimen_id=f"S{len(records) + 1:04d}")
            )
    return Campaign(records)


def _block_rngs(seed, trials):
    n_blocks = -(-trials // BLOCK)
    for k in range(n_blocks):
        size = min(BLOCK, trials - k * BLOCK)
        yield np.random.default_rng(np.random.SeedSequence([int(seed), k])), size


def ppp_first_crack_oracle(mesh, mm, trials, seed=0):
    """Simulated first-crack lives of a meshed surface.

    Every element is an independent sub-surface whose first crack is
    Weibull with scale ``(area/a_ref)^(-1/m) N_det``; the surface fails at
    the earliest element.

    Returns
    -------
    ndarray of shape (trials,)
    """
    if trials < 1:
        raise DomainError("trials must be at least 1")
    n_det = ppp.scale_field(mesh, mm)
    eta = (mesh.areas / mm.a_ref) ** (-1.0 / mm.m) * n_det
    out = []
    for rng, size in _block_rngs(seed, trials):
        draws = eta[None, :] * rng.weibull(mm.m, size=(size, eta.size))
        out.append(draws.min(axis=1))
    return np.concatenate(out)


def window_intensity(mesh, mm, n1, n2):
    """Expected crack count per element inside the cycle window ``(n1, n2]``."""
    if not (0 <= n1 < n2):
        raise DomainError(f"window must satisfy 0 <= n1 < n2, got ({n1}, {n2})")
    n_det = ppp.scale_field(mesh, mm)
    a = mesh.areas / mm.a_ref
    return a * ((n2 / n_det) ** mm.m - (n1 / n_det) ** mm.m)


def ppp_count_oracle(mesh, mm, window, trials, seed=0):
    """Total simulated crack counts on the surface within ``window = (n1, n2]``.

    Returns
    -------
    ndarray of int, shape (trials,)
    """
    if trials < 1:
        raise DomainError("trials must be at least 1")
    lam = window_intensity(mesh, mm, *window)
    out = []
    for rng, size in _block_rngs(seed, trials):
        out.append(rng.poisson(lam[None, :], size=(size, lam.size)).sum(axis=1))
    return np.concatenate(out)
