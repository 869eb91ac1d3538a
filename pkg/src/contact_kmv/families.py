"""Builders for the two explicit families of contact metric structures
with (kappa, mu, upsilon = const) nullity, and the homothetic
deformation that maps the class to itself.

Family data on the chart (x, y, z), with f, r, s functions of z only,
upsilon a nonzero constant, lambda = r(z) e^{upsilon x} and r > 0 on the
domain box:

    variant I:   a = 2y + f(z)          mu = 2 (1 + lambda)
    variant II:  a = -2y + f(z)         mu = 2 (1 - lambda)

    b = (-/+)(y^2/2) upsilon - y f upsilon / 2 - (y/2) r'/r
        + (2/upsilon) r e^{upsilon x} + s          (sign: I minus, II plus)

    eta = dx - a dz,  xi = d_x,  kappa = 1 - lambda^2

g, phi and h are the displayed closed-form matrices; both variants share
the same metric template with their own a, b.  The two b formulas are
kept literal rather than merged, so each can be audited on its own.

Note the companion kappa is 1 - lambda^2 for both variants (the
alternative reading kappa = lambda does not satisfy the nullity residual
and is not offered); the acceptance suite adjudicates this numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .contact import ContactMetricStructure, DomainBox
from .scalar_field import Const, Coord, Point, ScalarField, as_field, exp, is_zero
from .tensor_calc import MetricField, OneForm, VectorField


class BuildError(ValueError):
    """A family parameter violates a build constraint."""


_VARIANTS = ("I", "II")


def _check_z_only(field: ScalarField, name: str):
    # z-only expressions differentiate to the literal zero constant
    for axis in ("x", "y"):
        if not is_zero(field.partial(axis)):
            raise BuildError(f"{name} must depend only on z, found {axis}-dependence")


@dataclass(frozen=True)
class FamilyParams:
    """Chart functions and constants selecting one member of a family."""

    variant: str
    f: ScalarField
    r: ScalarField
    s: ScalarField
    upsilon: float
    box: DomainBox = DomainBox((-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0))

    def __post_init__(self):
        if self.variant not in _VARIANTS:
            raise BuildError(f"variant must be one of {_VARIANTS}, got {self.variant!r}")
        object.__setattr__(self, "f", as_field(self.f))
        object.__setattr__(self, "r", as_field(self.r))
        object.__setattr__(self, "s", as_field(self.s))
        if not (math.isfinite(self.upsilon) and self.upsilon != 0.0):
            raise BuildError("upsilon must be a nonzero constant (upsilon = 0 is outside this class)")
        for field, name in ((self.f, "f"), (self.r, "r"), (self.s, "s")):
            _check_z_only(field, name)
        _check_r_positive(self.r, self.box)


def _check_r_positive(r: ScalarField, box: DomainBox, samples: int = 2001):
    """r > 0 must hold on the whole z-range: constants are decided
    exactly, anything else is densely sampled."""
    if isinstance(r, Const):
        if r.value <= 0.0:
            raise BuildError(f"r must be positive, got constant {r.value}")
        return
    lo, hi = box.z
    for i in range(samples):
        zv = lo + (hi - lo) * i / (samples - 1)
        v = r.eval(Point(0.0, 0.0, zv))
        if v <= 0.0:
            raise BuildError(f"r must be positive on the domain, r({zv}) = {v}")


@dataclass(frozen=True)
class DeformParams:
    """Homothetic rescaling constant."""

    alpha: float

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 0.0):
            raise BuildError(f"alpha must be a positive constant, got {self.alpha}")


def build_family(params: FamilyParams) -> ContactMetricStructure:
    """Construct the structure for the given parameters, with closed-form
    companion fields (lambda, kappa, mu, h, the unit eigenframe) attached
    so identity checks downstream stay exact."""
    y = Coord("y")
    x = Coord("x")
    f, r, s, ups = params.f, params.r, params.s, params.upsilon

    lam = r * exp(ups * x)
    rp = r.partial("z")

    if params.variant == "I":
        a = 2 * y + f
        b = -(y**2 / 2) * ups - y * f * (ups / 2) - (y / 2) * (rp / r) + (2 / ups) * lam + s
    else:
        a = -2 * y + f
        b = (y**2 / 2) * ups - y * f * (ups / 2) - (y / 2) * (rp / r) + (2 / ups) * lam + s

    neg_a = -a
    neg_b = -b
    eta = OneForm((1, 0, neg_a))
    xi = VectorField((1, 0, 0))
    g = MetricField(
        [
            [1, 0, neg_a],
            [0, 1, neg_b],
            [neg_a, neg_b, 1 + a**2 + b**2],
        ]
    )

    if params.variant == "I":
        phi = (
            (Const(0.0), a, -(a * b)),
            (Const(0.0), b, -(1 + b**2)),
            (Const(0.0), Const(1.0), neg_b),
        )
        h_rows = (
            (Const(0.0), Const(0.0), -(a * lam)),
            (Const(0.0), lam, -(2 * lam * b)),
            (Const(0.0), Const(0.0), -lam),
        )
        mu = 2 * (1 + lam)
        frame_x = VectorField((0, 1, 0))
        frame_phix = VectorField((a, b, 1))
    else:
        phi = (
            (Const(0.0), -a, a * b),
            (Const(0.0), neg_b, 1 + b**2),
            (Const(0.0), Const(-1.0), b),
        )
        h_rows = (
            (Const(0.0), Const(0.0), a * lam),
            (Const(0.0), -lam, 2 * lam * b),
            (Const(0.0), Const(0.0), lam),
        )
        mu = 2 * (1 - lam)
        frame_x = VectorField((a, b, 1))
        frame_phix = VectorField((0, 1, 0))

    kappa = 1 - lam**2
    domain = DomainBox(params.box.x, params.box.y, params.box.z, positivity=(r, lam))

    return ContactMetricStructure(
        eta=eta,
        xi=xi,
        phi=phi,
        g=g,
        domain=domain,
        lam_field=lam,
        kappa_field=kappa,
        mu_field=mu,
        upsilon=ups,
        h_field=h_rows,
        frame_x=frame_x,
        frame_phix=frame_phix,
        variant=params.variant,
    )


def d_homothetic_deform(
    structure: ContactMetricStructure, params: DeformParams
) -> ContactMetricStructure:
    """Homothetic deformation

        eta -> alpha eta,  xi -> xi / alpha,  phi -> phi,
        g -> alpha g + alpha (alpha - 1) eta (x) eta

    which stays in the nullity class with h -> h / alpha and the triple
    transformed as in predicted_deformed_kmv.  Closed-form companions are
    transformed alongside when present; alpha = 1 returns structurally
    identical fields.
    """
    alpha = params.alpha
    eta2 = structure.eta.scaled(alpha)
    xi2 = structure.xi.scaled(1.0 / alpha)

    e = structure.eta.components
    coef = alpha * (alpha - 1.0)
    g_rows = [[None] * 3 for _ in range(3)]
    for i in range(3):
        for j in range(i, 3):
            entry = as_field(alpha) * structure.g.rows[i][j] + as_field(coef) * (e[i] * e[j])
            g_rows[i][j] = entry
            g_rows[j][i] = entry
    g2 = MetricField(g_rows)

    lam2 = kappa2 = mu2 = None
    h2 = fx2 = fp2 = None
    ups2 = None
    if structure.lam_field is not None:
        lam2 = structure.lam_field * (1.0 / alpha)
    if structure.kappa_field is not None:
        kappa2 = (structure.kappa_field + (alpha**2 - 1.0)) * (1.0 / alpha**2)
    if structure.mu_field is not None:
        mu2 = (structure.mu_field + 2.0 * (alpha - 1.0)) * (1.0 / alpha)
    if structure.upsilon is not None:
        ups2 = structure.upsilon / alpha
    if structure.h_field is not None:
        h2 = tuple(
            tuple(entry * (1.0 / alpha) for entry in row) for row in structure.h_field
        )
    scale = 1.0 / math.sqrt(alpha)  # unit vectors of g stay unit for alpha g on ker(eta)
    if structure.frame_x is not None:
        fx2 = structure.frame_x.scaled(scale)
    if structure.frame_phix is not None:
        fp2 = structure.frame_phix.scaled(scale)

    return ContactMetricStructure(
        eta=eta2,
        xi=xi2,
        phi=structure.phi,
        g=g2,
        domain=structure.domain,
        lam_field=lam2,
        kappa_field=kappa2,
        mu_field=mu2,
        upsilon=ups2,
        h_field=h2,
        frame_x=fx2,
        frame_phix=fp2,
        variant=structure.variant,
    )


def predicted_deformed_kmv(kappa: float, mu: float, upsilon: float, alpha: float):
    """Transformation law of the nullity triple under the homothetic
    deformation with constant alpha > 0."""
    if not (math.isfinite(alpha) and alpha > 0.0):
        raise BuildError(f"alpha must be a positive constant, got {alpha}")
    return (
        (kappa + alpha**2 - 1.0) / alpha**2,
        (mu + 2.0 * (alpha - 1.0)) / alpha,
        upsilon / alpha,
    )
