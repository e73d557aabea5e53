import pytest

from probcmb import MaterialModel

# criterion number -> (passed, detail); filled by the acceptance suite
ACCEPTANCE = {}


@pytest.fixture
def record_criterion():
    def record(number, passed, detail):
        ACCEPTANCE[number] = (bool(passed), detail)
        print(f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}")


@pytest.fixture
def theta_star():
    return MaterialModel.from_values(150000.0, 1500.0, -0.09, 0.6, -0.6, 6.0)


@pytest.fixture
def small_campaign(theta_star):
    from probcmb.simulate import CampaignDesign, sample_campaign

    design = CampaignDesign(tuple((s, 754.8, 8) for s in (0.0025, 0.0035, 0.006, 0.01, 0.02)), seed=3)
    return sample_campaign(design, theta_star)


@pytest.fixture
def random_params():
    return _random_params


def _random_params(rng, size):
    """Random valid CMB/Weibull parameter sets as columns."""
    return dict(
        E=rng.uniform(5e4, 4e5, size),
        sigma_f=rng.uniform(200.0, 4000.0, size),
        b=rng.uniform(-0.2, -0.03, size),
        eps_f=rng.uniform(0.05, 2.0, size),
        c=rng.uniform(-0.9, -0.3, size),
        m=rng.uniform(1.0, 20.0, size),
    )

