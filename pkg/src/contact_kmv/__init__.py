"""Contact metric structures with (kappa, mu, upsilon) nullity on 3-d charts.

Builds the two explicit families of such structures from user-supplied
chart functions, computes connection and curvature quantities from exact
symbolic derivatives, and verifies the defining identities numerically.
"""

from .scalar_field import (
    AXES,
    DomainError,
    ParseError,
    Point,
    ScalarField,
    parse_field,
)
from .tensor_calc import (
    CurvatureBundle,
    MetricField,
    OneForm,
    SingularMetricError,
    VectorField,
    christoffel,
    contact_volume,
    covariant_derivative,
    curvature_bundle,
    exterior_derivative,
    gradient,
    laplacian,
    lie_bracket,
    ricci_and_scalar,
    riemann,
)
from .contact import (
    CheckReport,
    ContactMetricStructure,
    DegenerateFrameError,
    DomainBox,
    HFrame,
    compute_h,
    h_frame,
    validate,
)
from .nullity import (
    IdentityReport,
    NullityTriple,
    boeckx_invariant,
    constant_upsilon_residuals,
    dichotomy_check,
    extract_kmv,
    frame_connection_residuals,
    mu_two_exclusion,
    nullity_condition_residual,
    ricci_identity_residuals,
    scalar_curvature_identity,
    scalar_curvature_residuals,
    xi_invariant_residual,
)
from .families import (
    BuildError,
    DeformParams,
    FamilyParams,
    build_family,
    d_homothetic_deform,
    predicted_deformed_kmv,
)
from .report import RunConfig, VerificationReport, run_verify, sample_points

__all__ = [
    "AXES",
    "BuildError",
    "CheckReport",
    "ContactMetricStructure",
    "CurvatureBundle",
    "DeformParams",
    "DegenerateFrameError",
    "DomainBox",
    "DomainError",
    "FamilyParams",
    "HFrame",
    "IdentityReport",
    "MetricField",
    "NullityTriple",
    "OneForm",
    "ParseError",
    "Point",
    "RunConfig",
    "ScalarField",
    "SingularMetricError",
    "VectorField",
    "VerificationReport",
    "boeckx_invariant",
    "build_family",
    "christoffel",
    "compute_h",
    "constant_upsilon_residuals",
    "contact_volume",
    "covariant_derivative",
    "curvature_bundle",
    "d_homothetic_deform",
    "dichotomy_check",
    "exterior_derivative",
    "extract_kmv",
    "frame_connection_residuals",
    "gradient",
    "h_frame",
    "laplacian",
    "lie_bracket",
    "mu_two_exclusion",
    "nullity_condition_residual",
    "parse_field",
    "predicted_deformed_kmv",
    "ricci_and_scalar",
    "ricci_identity_residuals",
    "riemann",
    "run_verify",
    "sample_points",
    "scalar_curvature_identity",
    "scalar_curvature_residuals",
    "validate",
    "xi_invariant_residual",
]
