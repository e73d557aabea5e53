"""Probabilistic low-cycle-fatigue life prediction with size effect.

Crack initiation on a strained surface is modelled as a Poisson point
process whose intensity follows a Weibull law scaled by the
Coffin-Manson-Basquin life.  The package calibrates the model from
strain-controlled test campaigns and predicts life distributions for
arbitrary gauge areas or meshed surface strain fields.
"""

__version__ = "0.1.0"

from .calibration import (  # noqa: E402
    BootstrapResult,
    Campaign,
    FitConfig,
    FitResult,
    TestRecord,
    fit_mle,
    log_likelihood,
    parametric_bootstrap,
)
from .cmb import CMBParams, MaterialModel, cmb_invert, cmb_strain, coefficients_for_area  # noqa: E402
from .diagnostics import QuotientSet, ks_test, life_quotients, qq_points  # noqa: E402
from .estimator import ProbabilisticCMB  # noqa: E402
from .exceptions import (  # noqa: E402
    BootstrapError,
    DomainError,
    ExponentOrderWarning,
    IllPosedWarning,
    OutOfRangeError,
    SchemaError,
)
from .ppp import (  # noqa: E402
    LifeDistribution,
    SpecimenGeometry,
    SurfaceElement,
    SurfaceMesh,
    composite_eta,
    gauge_surface_area,
    gauge_volume,
    scale_field,
    stress_drop_transfer,
    woehler_curve,
)
from .simulate import (  # noqa: E402
    CampaignDesign,
    ppp_count_oracle,
    ppp_first_crack_oracle,
    sample_campaign,
    sample_first_crack,
)

__all__ = [
    "BootstrapError",
    "BootstrapResult",
    "Campaign",
    "CampaignDesign",
    "cmb_invert",
    "cmb_strain",
    "CMBParams",
    "coefficients_for_area",
    "composite_eta",
    "DomainError",
    "ExponentOrderWarning",
    "fit_mle",
    "FitConfig",
    "FitResult",
    "gauge_surface_area",
    "gauge_volume",
    "IllPosedWarning",
    "ks_test",
    "life_quotients",
    "LifeDistribution",
    "log_likelihood",
    "MaterialModel",
    "OutOfRangeError",
    "parametric_bootstrap",
    "ppp_count_oracle",
    "ppp_first_crack_oracle",
    "ProbabilisticCMB",
    "qq_points",
    "QuotientSet",
    "sample_campaign",
    "sample_first_crack",
    "scale_field",
    "SchemaError",
    "SpecimenGeometry",
    "stress_drop_transfer",
    "SurfaceElement",
    "SurfaceMesh",
    "TestRecord",
    "woehler_curve",
    "__version__",
]
