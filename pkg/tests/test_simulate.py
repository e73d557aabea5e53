import math

import numpy as np
import pytest
from scipy import stats

from probcmb import DomainError, LifeDistribution, MaterialModel, SurfaceMesh, composite_eta
from probcmb.simulate import (
    CampaignDesign,
    DesignRow,
    ppp_count_oracle,
    ppp_first_crack_oracle,
    sample_campaign,
    sample_first_crack,
    window_intensity,
)

MM = MaterialModel.from_values(150000.0, 1500.0, -0.09, 0.6, -0.6, 6.0)


def test_forced_uniform_gives_scale():
    d = LifeDistribution(4321.0, 3.0)
    assert sample_first_crack(d, u=math.exp(-1.0)) == pytest.approx(4321.0, rel=1e-15)


def test_samples_follow_cdf():
    d = LifeDistribution(1000.0, 2.5)
    x = sample_first_crack(d, rng=3, size=100_000)
    assert stats.kstest(x, d.cdf).statistic < 0.006


def test_large_shape_concentrates():
    x = sample_first_crack(LifeDistribution(1.0, 50.0), rng=4, size=10_000)
    assert x.std() / x.mean() < 0.05


def test_sampler_seed_determinism():
    d = LifeDistribution(10.0, 2.0)
    assert np.array_equal(sample_first_crack(d, rng=1, size=5), sample_first_crack(d, rng=1, size=5))


def test_single_record_matches_seeded_variate():
    design = CampaignDesign(((0.006, 263.9, 1),), seed=0)
    u = np.random.default_rng(0).random(1)[0]
    expected = composite_eta(SurfaceMesh.uniform(263.9, 0.006), MM).eta * (-math.log(u)) ** (1 / 6.0)
    campaign = sample_campaign(design, MM)
    assert len(campaign) == 1
    assert campaign.cycles[0] == pytest.approx(expected, rel=1e-14)
    assert campaign.records[0].specimen_id == "S0001"


def test_campaign_determinism():
    design = CampaignDesign(((0.004, 100.0, 3), (0.01, 100.0, 2)), seed=42)
    a, b = sample_campaign(design, MM), sample_campaign(design, MM)
    assert np.array_equal(a.cycles, b.cycles)
    assert a.n_strain_levels == 2 and design.n_records == 5


def test_design_validation():
    with pytest.raises(DomainError):
        DesignRow(0.005, 10.0, 0)
    with pytest.raises(DomainError):
        DesignRow(-0.005, 10.0, 1)
    with pytest.raises(DomainError):
        CampaignDesign(())


def test_one_element_oracle_is_plain_sampling():
    mesh = SurfaceMesh.uniform(50.0, 0.006)
    x = ppp_first_crack_oracle(mesh, MM, 50_000, seed=2)
    assert stats.kstest(x, composite_eta(mesh, MM).cdf).statistic < 0.008


def test_exponential_minimum_halves_mean():
    mm = MaterialModel(MM.cmb, m=1.0)
    single = composite_eta(SurfaceMesh.uniform(1.0, 0.006), mm).eta
    x = ppp_first_crack_oracle(SurfaceMesh([1.0, 1.0], [0.006, 0.006]), mm, 40_000, seed=8)
    se = x.std() / math.sqrt(x.size)
    assert abs(x.mean() - single / 2) < 3 * se


def test_random_mesh_min_stability():
    rng = np.random.default_rng(21)
    mesh = SurfaceMesh(rng.uniform(0.5, 40.0, 10), rng.uniform(0.003, 0.015, 10))
    x = ppp_first_crack_oracle(mesh, MM, 100_000, seed=1)
    assert stats.kstest(x, composite_eta(mesh, MM).cdf).statistic < 0.006


def test_oracle_blocks_are_reproducible():
    mesh = SurfaceMesh([1.0, 2.0], [0.005, 0.007])
    a = ppp_first_crack_oracle(mesh, MM, 20_000, seed=3)
    b = ppp_first_crack_oracle(mesh, MM, 20_000, seed=3)
    assert np.array_equal(a, b)
    # a shorter run is a prefix of a longer one
    assert np.array_equal(ppp_first_crack_oracle(mesh, MM, 100, seed=3), a[:100])


def test_window_intensity_single_unit_element():
    mesh = SurfaceMesh.uniform(1.0, 0.006)
    n_det = composite_eta(mesh, MM).eta
    lam = window_intensity(mesh, MM, 0.0, 0.8 * n_det)
    assert lam[0] == pytest.approx(0.8**6, rel=1e-13)


def test_hazard_accumulates_to_composite_scale():
    rng = np.random.default_rng(5)
    mesh = SurfaceMesh(rng.uniform(0.5, 40.0, 7), rng.uniform(0.003, 0.015, 7))
    d = composite_eta(mesh, MM)
    n = 0.7 * d.eta
    assert window_intensity(mesh, MM, 0.0, n).sum() == pytest.approx((n / d.eta) ** MM.m, rel=1e-12)
    assert window_intensity(mesh, MM, 0.0, n).sum() == pytest.approx(d.cumulative_hazard(n), rel=1e-12)


def test_disjoint_windows_add_up():
    mesh = SurfaceMesh([3.0, 1.0], [0.005, 0.008])
    d = composite_eta(mesh, MM)
    n1, n2 = 0.6 * d.eta, 1.1 * d.eta
    merged = window_intensity(mesh, MM, 0.0, n2)
    assert np.allclose(window_intensity(mesh, MM, 0.0, n1) + window_intensity(mesh, MM, n1, n2), merged,
                       rtol=1e-13)
    a = ppp_count_oracle(mesh, MM, (0.0, n1), 60_000, seed=1)
    b = ppp_count_oracle(mesh, MM, (n1, n2), 60_000, seed=2)
    c = ppp_count_oracle(mesh, MM, (0.0, n2), 60_000, seed=3)
    # two-sample comparison of the count distributions
    table = np.array([np.bincount(a + b, minlength=25)[:25], np.bincount(c, minlength=25)[:25]])
    table = table[:, table.sum(axis=0) > 20]
    assert stats.chi2_contingency(table).pvalue > 1e-3


def test_counts_dispersion_and_zero_frequency():
    rng = np.random.default_rng(9)
    mesh = SurfaceMesh(rng.uniform(0.5, 40.0, 10), rng.uniform(0.003, 0.015, 10))
    d = composite_eta(mesh, MM)
    n = d.eta * 4.0 ** (1 / MM.m)
    counts = ppp_count_oracle(mesh, MM, (0.0, n), 100_000, seed=4)
    assert counts.mean() == pytest.approx(4.0, abs=0.03)
    assert 0.97 <= counts.var(ddof=1) / counts.mean() <= 1.03
    p0 = d.survival(n)
    assert abs(np.mean(counts == 0) - p0) <= 3 * math.sqrt(p0 * (1 - p0) / counts.size)


def test_oracle_argument_checks():
    mesh = SurfaceMesh.uniform(1.0, 0.006)
    with pytest.raises(DomainError):
        ppp_first_crack_oracle(mesh, MM, 0)
    with pytest.raises(DomainError):
        window_intensity(mesh, MM, 5.0, 5.0)
