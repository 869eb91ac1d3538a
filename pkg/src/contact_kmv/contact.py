"""Contact metric structures and the operator h = (1/2) L_xi phi.

A structure is the quadruple (eta, xi, phi, g) as coordinate tensor
fields over a box domain, optionally carrying closed-form companion
fields (eigenvalue lambda of h, kappa, mu, the h matrix, unit eigenframe
fields) when it was produced by a builder that knows them.

Normalization note: the pairing check uses
dEta(V, W) = (1/2)(V eta(W) - W eta(V) - eta([V, W])), which is the
convention under which g(V, phi W) = dEta(V, W) holds on the built
families.  The raw exterior-derivative coefficient (no 1/2) is used only
for the contact-volume nonvanishing check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .lcg import Lcg
from .scalar_field import AXES, Point, ScalarField, as_field, eval_fields
from .tensor_calc import MetricField, OneForm, VectorField, exterior_derivative

_DIM = 3

# below this h-eigenvalue the eigenframe direction is numerically
# meaningless (the structure is Sasakian at the point to working precision)
TOL_DEGENERATE = 1e-7

# contact form must satisfy |eta ^ d(eta)| above this floor everywhere
VOLUME_FLOOR = 1e-6


class DegenerateFrameError(ArithmeticError):
    """h has no usable positive eigenvalue at the point (Sasakian locus)."""


@dataclass(frozen=True)
class DomainBox:
    """Box constraints plus admissibility: every ``positivity`` field must
    exceed ``floor`` at admissible points (e.g. r(z) > 0)."""

    x: tuple
    y: tuple
    z: tuple
    positivity: tuple = ()
    floor: float = TOL_DEGENERATE

    def __post_init__(self):
        for name in ("x", "y", "z"):
            lo, hi = getattr(self, name)
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ValueError(f"empty or invalid {name} range: [{lo}, {hi}]")
        object.__setattr__(self, "positivity", tuple(as_field(f) for f in self.positivity))

    def contains(self, p: Point) -> bool:
        return (
            self.x[0] <= p.x <= self.x[1]
            and self.y[0] <= p.y <= self.y[1]
            and self.z[0] <= p.z <= self.z[1]
        )

    def admissible(self, p: Point) -> bool:
        if not self.contains(p):
            return False
        return all(v > self.floor for v in eval_fields(self.positivity, p))


def _rows3(rows):
    rows = tuple(tuple(as_field(e) for e in row) for row in rows)
    if len(rows) != _DIM or any(len(r) != _DIM for r in rows):
        raise ValueError("expected a 3x3 array of fields")
    return rows


@dataclass(frozen=True)
class ContactMetricStructure:
    """(eta, xi, phi, g) over a chart domain.

    The optional fields are closed-form companions attached by builders:
    ``lam_field`` (positive h-eigenvalue), ``kappa_field``, ``mu_field``,
    constant ``upsilon``, the closed-form ``h_field`` matrix, and the unit
    eigenframe fields ``frame_x`` (eigenvalue +lambda) and ``frame_phix``.
    Foreign structures leave them None and downstream code falls back to
    pointwise extraction.
    """

    eta: OneForm
    xi: VectorField
    phi: tuple
    g: MetricField
    domain: DomainBox
    lam_field: ScalarField | None = None
    kappa_field: ScalarField | None = None
    mu_field: ScalarField | None = None
    upsilon: float | None = None
    h_field: tuple | None = None
    frame_x: VectorField | None = None
    frame_phix: VectorField | None = None
    variant: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "phi", _rows3(self.phi))
        if self.h_field is not None:
            object.__setattr__(self, "h_field", _rows3(self.h_field))

    def phi_at(self, p: Point) -> np.ndarray:
        flat = eval_fields([self.phi[i][j] for i in range(_DIM) for j in range(_DIM)], p)
        return np.array(flat).reshape(_DIM, _DIM)

    def h_closed_at(self, p: Point) -> np.ndarray:
        if self.h_field is None:
            raise ValueError("structure carries no closed-form h")
        flat = eval_fields([self.h_field[i][j] for i in range(_DIM) for j in range(_DIM)], p)
        return np.array(flat).reshape(_DIM, _DIM)

    def has_closed_forms(self) -> bool:
        return (
            self.lam_field is not None
            and self.kappa_field is not None
            and self.mu_field is not None
            and self.upsilon is not None
            and self.frame_x is not None
            and self.frame_phix is not None
        )


@dataclass(frozen=True)
class HFrame:
    """Orthonormal frame (xi, x, phix) at a point diagonalizing h with
    eigenvalues (0, +lam, -lam).

    ``a`` and ``b`` are the directional derivatives of lam along x and
    phix; ``c`` and ``d`` are the derivatives of upsilon, zero whenever
    upsilon is constant and NaN for foreign structures where nothing is
    known about it.
    """

    xi: np.ndarray
    x: np.ndarray
    phix: np.ndarray
    lam: float
    a: float
    b: float
    c: float
    d: float


@dataclass
class CheckReport:
    """Max residual per structure axiom over a point sample."""

    residuals: dict
    worst_points: dict
    tol: float

    @property
    def passed(self) -> bool:
        return all(v < self.tol for v in self.residuals.values())

    def __str__(self):
        lines = [f"axiom check (tol {self.tol:g}): {'pass' if self.passed else 'FAIL'}"]
        for name in sorted(self.residuals):
            lines.append(f"  {name:22s} {self.residuals[name]:.3e}")
        return "\n".join(lines)


def axiom_residuals_at(structure: ContactMetricStructure, p: Point, rng: Lcg | None = None) -> dict:
    """Residuals of the structure axioms at one point.

    Keys: eta_xi (eta(xi) = 1), phi_xi (phi xi = 0), phi_squared
    (phi^2 = -I + xi (x) eta), phi_metric_compat
    (g(phi V, phi W) = g(V, W) - eta(V) eta(W) on probe vectors),
    deta_pairing (g(V, phi W) = dEta(V, W)), and contact_volume
    (shortfall of |eta ^ d(eta)| below the floor, 0 when fine).
    """
    if rng is None:
        rng = Lcg(2024)
    e = structure.eta.at(p)
    xi = structure.xi.at(p)
    phi = structure.phi_at(p)
    G = structure.g.at(p)

    out = {}
    out["eta_xi"] = abs(float(e @ xi) - 1.0)
    out["phi_xi"] = float(np.max(np.abs(phi @ xi)))
    out["phi_squared"] = float(np.max(np.abs(phi @ phi + np.eye(_DIM) - np.outer(xi, e))))

    compat = 0.0
    for _ in range(4):
        v = np.array([rng.next_in(-1, 1) for _ in range(_DIM)])
        w = np.array([rng.next_in(-1, 1) for _ in range(_DIM)])
        lhs = float(phi @ v @ G @ (phi @ w))
        rhs = float(v @ G @ w) - float(e @ v) * float(e @ w)
        compat = max(compat, abs(lhs - rhs))
    out["phi_metric_compat"] = compat

    # coordinate fields commute, so the half-convention pairing reduces to
    # (1/2)(d_i eta_j - d_j eta_i) against g(d_i, phi d_j)
    d = exterior_derivative(structure.eta)
    gphi = G @ phi
    pairing = 0.0
    dvals = eval_fields([d[0][1], d[0][2], d[1][2]], p)
    half = {(0, 1): dvals[0], (0, 2): dvals[1], (1, 2): dvals[2]}
    for (i, j), cij in half.items():
        pairing = max(pairing, abs(0.5 * cij - gphi[i, j]))
        pairing = max(pairing, abs(-0.5 * cij - gphi[j, i]))
    for i in range(_DIM):
        pairing = max(pairing, abs(gphi[i, i]))
    out["deta_pairing"] = pairing

    vol = e[0] * dvals[2] - e[1] * dvals[1] + e[2] * dvals[0]
    out["contact_volume"] = max(0.0, VOLUME_FLOOR - abs(vol))
    return out


def validate(structure: ContactMetricStructure, points, tol: float = 1e-9) -> CheckReport:
    """Check the structure axioms over a point sample; raises ValueError
    for points outside the declared domain."""
    residuals = {}
    worst = {}
    for p in points:
        if not structure.domain.contains(p):
            raise ValueError(f"point outside domain: {p}")
        row = axiom_residuals_at(structure, p)
        for name, v in row.items():
            if v >= residuals.get(name, -1.0):
                residuals[name] = v
                worst[name] = p
    return CheckReport(residuals, worst, tol)


def compute_h(structure: ContactMetricStructure, p: Point) -> np.ndarray:
    """h = (1/2) L_xi phi at p, from exact partials:
    (L_xi phi)^i_j = xi^k d_k phi^i_j - phi^k_j d_k xi^i + phi^i_k d_j xi^k.
    """
    return _compute_h_cached(structure, p).copy()


@lru_cache(maxsize=512)
def _compute_h_cached(structure: ContactMetricStructure, p: Point) -> np.ndarray:
    # several identity suites need h at the same point; copy on the way out
    phi = structure.phi
    xi = structure.xi.components
    fields = []
    for k in range(_DIM):
        for i in range(_DIM):
            for j in range(_DIM):
                fields.append(phi[i][j].partial(AXES[k]))
    for k in range(_DIM):
        for i in range(_DIM):
            fields.append(xi[i].partial(AXES[k]))
    fields.extend(phi[i][j] for i in range(_DIM) for j in range(_DIM))
    fields.extend(xi)
    vals = eval_fields(fields, p)

    n3 = _DIM**3
    dphi = np.array(vals[:n3]).reshape(_DIM, _DIM, _DIM)  # [k, i, j] = d_k phi^i_j
    dxi = np.array(vals[n3 : n3 + 9]).reshape(_DIM, _DIM)  # [k, i] = d_k xi^i
    phiv = np.array(vals[n3 + 9 : n3 + 18]).reshape(_DIM, _DIM)
    xiv = np.array(vals[n3 + 18 :])

    lie = (
        np.einsum("k,kij->ij", xiv, dphi)
        - np.einsum("kj,ki->ij", phiv, dxi)
        + np.einsum("ik,jk->ij", phiv, dxi)
    )
    return 0.5 * lie


def _kernel_basis(e: np.ndarray, xiv: np.ndarray, G: np.ndarray):
    """Deterministic g-orthonormal basis of ker(eta) at a point: project
    coordinate axes off xi in axis order, Gram-Schmidt the survivors."""
    basis = []
    for i in range(_DIM):
        v = np.zeros(_DIM)
        v[i] = 1.0
        v = v - float(e @ v) * xiv
        for b in basis:
            v = v - float(v @ G @ b) * b
        n2 = float(v @ G @ v)
        if n2 > 1e-12:
            basis.append(v / math.sqrt(n2))
            if len(basis) == 2:
                return basis
    raise ValueError("could not build a basis of the contact distribution")


def _pointwise_lambda(structure: ContactMetricStructure, p: Point) -> float:
    """Positive h-eigenvalue at p without choosing an eigenvector (sign
    free, so safe to finite-difference)."""
    h = compute_h(structure, p)
    G = structure.g.at(p)
    e = structure.eta.at(p)
    xiv = structure.xi.at(p)
    e1, e2 = _kernel_basis(e, xiv, G)
    s11 = float(h @ e1 @ G @ e1)
    s12 = 0.5 * (float(h @ e1 @ G @ e2) + float(h @ e2 @ G @ e1))
    s22 = float(h @ e2 @ G @ e2)
    t = 0.5 * (s11 + s22)
    return math.hypot(s11 - t, s12)


def h_frame(
    structure: ContactMetricStructure, p: Point, tol_degenerate: float = TOL_DEGENERATE
) -> HFrame:
    """Orthonormal eigenframe of h at p.

    The eigenvector sign is fixed so the first coordinate component of x
    with magnitude above 1e-12 is positive; repeated calls return
    bitwise-identical frames.  Raises DegenerateFrameError when the
    positive eigenvalue is at or below ``tol_degenerate``.
    """
    h = compute_h(structure, p)
    G = structure.g.at(p)
    e = structure.eta.at(p)
    xiv = structure.xi.at(p)
    phi = structure.phi_at(p)

    e1, e2 = _kernel_basis(e, xiv, G)
    s11 = float(h @ e1 @ G @ e1)
    s12 = 0.5 * (float(h @ e1 @ G @ e2) + float(h @ e2 @ G @ e1))
    s22 = float(h @ e2 @ G @ e2)
    t = 0.5 * (s11 + s22)
    pdev = s11 - t
    lam = math.hypot(pdev, s12)
    if lam <= tol_degenerate:
        raise DegenerateFrameError(
            f"h eigenvalue {lam:.3e} at {p} is below {tol_degenerate:g} (Sasakian point)"
        )

    # closed-form eigenvector of [[p, q], [q, -p]] for +lam; branching on
    # the sign of p always picks the representation with norm >= lam
    if pdev >= 0.0:
        c1, c2 = lam + pdev, s12
    else:
        c1, c2 = s12, lam - pdev
    x = c1 * e1 + c2 * e2
    x = x / math.sqrt(float(x @ G @ x))
    for comp in x:
        if abs(comp) > 1e-12:
            if comp < 0:
                x = -x
            break
    phix = phi @ x

    if structure.lam_field is not None:
        grads = eval_fields([structure.lam_field.partial(axis) for axis in AXES], p)
        a = float(np.dot(x, grads))
        b = float(np.dot(phix, grads))
    else:
        step = 1e-5
        a = _fd_directional(lambda q: _pointwise_lambda(structure, q), p, x, step)
        b = _fd_directional(lambda q: _pointwise_lambda(structure, q), p, phix, step)

    if structure.upsilon is not None:
        c = d = 0.0
    else:
        c = d = math.nan
    return HFrame(xiv, x, phix, lam, a, b, c, d)


def _fd_directional(fn, p: Point, direction: np.ndarray, step: float) -> float:
    plus = Point(p.x + step * direction[0], p.y + step * direction[1], p.z + step * direction[2])
    minus = Point(p.x - step * direction[0], p.y - step * direction[1], p.z - step * direction[2])
    return (fn(plus) - fn(minus)) / (2.0 * step)
