"""Coordinate tensor calculus on a 3-d chart.

Tensor components are ScalarFields; pointwise bundles (Christoffel,
Riemann, Ricci) are evaluated lazily per point from exact symbolic
derivatives of the metric components, so the only numeric linear algebra
is 3x3 matrix work at the point.  No finite differences anywhere.

Index conventions, fixed throughout the package:

    christoffel[k, i, j]   Gamma^k_ij, symmetric in (i, j)
    riemann[l, k, i, j]    component l of R(d_i, d_j) d_k, with the sign
                           convention R(U, V) = [grad_U, grad_V] - grad_[U,V]
    ricci operator Q[i, j] Q^i_j with Ric(V, W) = trace(Z -> R(Z, V) W)

The Ricci sign is pinned by the requirement Q xi = 2 kappa xi on the
constructed families; with these conventions the hyperbolic model metric
diag(e^{2z}, e^{2z}, 1) has scalar curvature -6.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scalar_field import (
    AXES,
    Point,
    ScalarField,
    as_field,
    eval_fields,
)

_DIM = 3


class SingularMetricError(ValueError):
    """Metric not positive definite at the requested point."""


def _field_triple(components):
    comps = tuple(as_field(c) for c in components)
    if len(comps) != _DIM:
        raise ValueError(f"expected {_DIM} components, got {len(comps)}")
    return comps


@dataclass(frozen=True)
class VectorField:
    """Vector field in the coordinate basis (d_x, d_y, d_z)."""

    components: tuple

    def __init__(self, components):
        object.__setattr__(self, "components", _field_triple(components))

    def at(self, p: Point) -> np.ndarray:
        return np.array(eval_fields(self.components, p))

    def apply_to(self, f: ScalarField) -> ScalarField:
        """Directional derivative V(f) as a field: sum_i V^i d_i f."""
        out = None
        for comp, axis in zip(self.components, AXES):
            term = comp * f.partial(axis)
            out = term if out is None else out + term
        return out

    def scaled(self, c) -> "VectorField":
        return VectorField(tuple(as_field(c) * comp for comp in self.components))


@dataclass(frozen=True)
class OneForm:
    """One-form in the basis (dx, dy, dz)."""

    components: tuple

    def __init__(self, components):
        object.__setattr__(self, "components", _field_triple(components))

    def at(self, p: Point) -> np.ndarray:
        return np.array(eval_fields(self.components, p))

    def scaled(self, c) -> "OneForm":
        return OneForm(tuple(as_field(c) * comp for comp in self.components))


class MetricField:
    """Symmetric 3x3 array of ScalarFields, positive definite on its
    domain of use.

    Symmetry is enforced structurally: off-diagonal entries must be the
    same node object (builders share them) or print identically.
    """

    def __init__(self, rows):
        rows = [[as_field(e) for e in row] for row in rows]
        if len(rows) != _DIM or any(len(r) != _DIM for r in rows):
            raise ValueError("metric must be 3x3")
        for i in range(_DIM):
            for j in range(i + 1, _DIM):
                if rows[i][j] is not rows[j][i] and rows[i][j].to_text() != rows[j][i].to_text():
                    raise ValueError(f"metric must be symmetric, entries ({i},{j})/({j},{i}) differ")
                rows[j][i] = rows[i][j]
        self.rows = tuple(tuple(r) for r in rows)
        self._d = None
        self._dd = None
        self._inv_fields = None

    def at(self, p: Point) -> np.ndarray:
        flat = eval_fields([self.rows[i][j] for i in range(_DIM) for j in range(_DIM)], p)
        return np.array(flat).reshape(_DIM, _DIM)

    def is_positive_definite_at(self, p: Point, tol: float = 1e-12) -> bool:
        G = self.at(p)
        return _leading_minors_positive(G, tol)

    def _first_partial_fields(self):
        if self._d is None:
            self._d = tuple(
                tuple(tuple(self.rows[i][j].partial(axis) for j in range(_DIM)) for i in range(_DIM))
                for axis in AXES
            )
        return self._d

    def _second_partial_fields(self):
        if self._dd is None:
            d = self._first_partial_fields()
            self._dd = tuple(
                tuple(
                    tuple(tuple(d[k][i][j].partial(AXES[m]) for j in range(_DIM)) for i in range(_DIM))
                    for k in range(_DIM)
                )
                for m in range(_DIM)
            )
        return self._dd

    def first_partials_at(self, p: Point) -> np.ndarray:
        """dG[k, i, j] = d_k g_ij at p."""
        d = self._first_partial_fields()
        flat = eval_fields(
            [d[k][i][j] for k in range(_DIM) for i in range(_DIM) for j in range(_DIM)], p
        )
        return np.array(flat).reshape(_DIM, _DIM, _DIM)

    def second_partials_at(self, p: Point) -> np.ndarray:
        """ddG[m, k, i, j] = d_m d_k g_ij at p."""
        dd = self._second_partial_fields()
        flat = eval_fields(
            [
                dd[m][k][i][j]
                for m in range(_DIM)
                for k in range(_DIM)
                for i in range(_DIM)
                for j in range(_DIM)
            ],
            p,
        )
        return np.array(flat).reshape(_DIM, _DIM, _DIM, _DIM)

    def det_field(self) -> ScalarField:
        r = self.rows
        return (
            r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1])
            - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0])
        )

    def inverse_fields(self):
        """Inverse metric as ScalarFields (adjugate over determinant).
        Used by the oracle-style checks; pointwise code inverts
        numerically instead."""
        if self._inv_fields is None:
            r = self.rows
            det = self.det_field()

            def cof(i, j):
                rows = [k for k in range(_DIM) if k != i]
                cols = [k for k in range(_DIM) if k != j]
                minor = (
                    r[rows[0]][cols[0]] * r[rows[1]][cols[1]]
                    - r[rows[0]][cols[1]] * r[rows[1]][cols[0]]
                )
                return minor if (i + j) % 2 == 0 else -minor

            # adjugate transpose equals adjugate for symmetric matrices
            self._inv_fields = tuple(
                tuple(cof(i, j) / det for j in range(_DIM)) for i in range(_DIM)
            )
        return self._inv_fields


def _leading_minors_positive(G: np.ndarray, tol: float) -> bool:
    if G[0, 0] <= tol:
        return False
    if G[0, 0] * G[1, 1] - G[0, 1] * G[1, 0] <= tol:
        return False
    return float(np.linalg.det(G)) > tol


def _metric_at_checked(g: MetricField, p: Point) -> np.ndarray:
    G = g.at(p)
    if not _leading_minors_positive(G, 1e-12):
        raise SingularMetricError(f"metric not positive definite at {p}")
    return G


def christoffel(g: MetricField, p: Point) -> np.ndarray:
    """Levi-Civita connection coefficients Gamma^k_ij at p from the
    Koszul formula."""
    G = _metric_at_checked(g, p)
    Ginv = np.linalg.inv(G)
    dG = g.first_partials_at(p)
    return _christoffel_from(Ginv, dG)


def _christoffel_from(Ginv, dG):
    # T[l, i, j] = d_i g_jl + d_j g_il - d_l g_ij
    T = np.empty((_DIM, _DIM, _DIM))
    for l in range(_DIM):
        for i in range(_DIM):
            for j in range(_DIM):
                T[l, i, j] = dG[i, j, l] + dG[j, i, l] - dG[l, i, j]
    return 0.5 * np.einsum("kl,lij->kij", Ginv, T)


def _christoffel_and_partials(g: MetricField, p: Point):
    """Gamma and its exact coordinate partials dGamma[m, k, i, j] =
    d_m Gamma^k_ij at p."""
    G = _metric_at_checked(g, p)
    Ginv = np.linalg.inv(G)
    dG = g.first_partials_at(p)
    ddG = g.second_partials_at(p)
    Gam = _christoffel_from(Ginv, dG)

    dGam = np.empty((_DIM, _DIM, _DIM, _DIM))
    for m in range(_DIM):
        # d_m G^{-1} = -G^{-1} (d_m G) G^{-1}, exact at the point
        dGinv_m = -Ginv @ dG[m] @ Ginv
        T = np.empty((_DIM, _DIM, _DIM))
        dT = np.empty((_DIM, _DIM, _DIM))
        for l in range(_DIM):
            for i in range(_DIM):
                for j in range(_DIM):
                    T[l, i, j] = dG[i, j, l] + dG[j, i, l] - dG[l, i, j]
                    dT[l, i, j] = ddG[m, i, j, l] + ddG[m, j, i, l] - ddG[m, l, i, j]
        dGam[m] = 0.5 * (
            np.einsum("kl,lij->kij", dGinv_m, T) + np.einsum("kl,lij->kij", Ginv, dT)
        )
    return Gam, dGam


def riemann(g: MetricField, p: Point) -> np.ndarray:
    """Curvature components R[l, k, i, j]: R(d_i, d_j) d_k = R^l_kij d_l."""
    Gam, dGam = _christoffel_and_partials(g, p)
    R = np.empty((_DIM, _DIM, _DIM, _DIM))
    for l in range(_DIM):
        for k in range(_DIM):
            for i in range(_DIM):
                for j in range(_DIM):
                    R[l, k, i, j] = (
                        dGam[i, l, j, k]
                        - dGam[j, l, i, k]
                        + sum(Gam[l, i, m] * Gam[m, j, k] for m in range(_DIM))
                        - sum(Gam[l, j, m] * Gam[m, i, k] for m in range(_DIM))
                    )
    return R


def ricci_and_scalar(g: MetricField, p: Point):
    """Ricci operator Q (as a (1,1) matrix Q^i_j) and scalar curvature
    tau = trace Q at p."""
    bundle = curvature_bundle(g, p)
    return bundle.ricci_operator, bundle.scalar


@dataclass
class CurvatureBundle:
    """All pointwise curvature data at one point."""

    christoffel: np.ndarray
    riemann: np.ndarray
    ricci_operator: np.ndarray
    scalar: float


def curvature_bundle(g: MetricField, p: Point) -> CurvatureBundle:
    Gam, dGam = _christoffel_and_partials(g, p)
    R = np.empty((_DIM, _DIM, _DIM, _DIM))
    for l in range(_DIM):
        for k in range(_DIM):
            for i in range(_DIM):
                for j in range(_DIM):
                    R[l, k, i, j] = (
                        dGam[i, l, j, k]
                        - dGam[j, l, i, k]
                        + sum(Gam[l, i, m] * Gam[m, j, k] for m in range(_DIM))
                        - sum(Gam[l, j, m] * Gam[m, i, k] for m in range(_DIM))
                    )
    # Ric(V, W) = trace(Z -> R(Z, V) W): Ric[v, w] = sum_m R[m, w, m, v]
    Ric = np.einsum("mwmv->vw", R)
    G = g.at(p)
    Q = np.linalg.inv(G) @ Ric
    return CurvatureBundle(Gam, R, Q, float(np.trace(Q)))


def apply_riemann(R: np.ndarray, U: np.ndarray, V: np.ndarray, W: np.ndarray) -> np.ndarray:
    """R(U, V) W from components, for coordinate vectors at a point."""
    return np.einsum("lkij,i,j,k->l", R, U, V, W)


def lie_bracket(V: VectorField, W: VectorField) -> VectorField:
    """[V, W]^k = V^i d_i W^k - W^i d_i V^k, as ScalarFields."""
    comps = []
    for k in range(_DIM):
        term = None
        for i, axis in enumerate(AXES):
            t = V.components[i] * W.components[k].partial(axis) - W.components[i] * V.components[
                k
            ].partial(axis)
            term = t if term is None else term + t
        comps.append(term)
    return VectorField(tuple(comps))


def covariant_derivative(
    g: MetricField, V: VectorField, W: VectorField, p: Point, christoffel_at=None
) -> np.ndarray:
    """(grad_V W)^k = V^i (d_i W^k + Gamma^k_ij W^j) at p.

    Pass a precomputed ``christoffel_at`` when evaluating several
    derivatives at the same point.
    """
    Gam = christoffel(g, p) if christoffel_at is None else christoffel_at
    Vp = V.at(p)
    Wp = W.at(p)
    dW = np.array(
        eval_fields(
            [W.components[k].partial(axis) for axis in AXES for k in range(_DIM)], p
        )
    ).reshape(_DIM, _DIM)
    return np.einsum("i,ik->k", Vp, dW) + np.einsum("kij,i,j->k", Gam, Vp, Wp)


def gradient(g: MetricField, f: ScalarField, p: Point) -> np.ndarray:
    """Index-raise of df by the inverse metric at p."""
    G = _metric_at_checked(g, p)
    df = np.array(eval_fields([f.partial(axis) for axis in AXES], p))
    return np.linalg.inv(G) @ df


def laplacian(g: MetricField, f: ScalarField, p: Point) -> float:
    """Laplace-Beltrami of f at p: g^ij (d_i d_j f - Gamma^k_ij d_k f)."""
    G = _metric_at_checked(g, p)
    Ginv = np.linalg.inv(G)
    Gam = christoffel(g, p)
    dfs = [f.partial(axis) for axis in AXES]
    ddf_fields = [dfs[i].partial(AXES[j]) for i in range(_DIM) for j in range(_DIM)]
    vals = eval_fields(dfs + ddf_fields, p)
    df = np.array(vals[:_DIM])
    ddf = np.array(vals[_DIM:]).reshape(_DIM, _DIM)
    return float(np.einsum("ij,ij->", Ginv, ddf - np.einsum("kij,k->ij", Gam, df)))


def exterior_derivative(omega: OneForm):
    """(d omega)_ij = d_i omega_j - d_j omega_i as a 3x3 antisymmetric
    array of ScalarFields."""
    c = omega.components
    return tuple(
        tuple(c[j].partial(AXES[i]) - c[i].partial(AXES[j]) for j in range(_DIM))
        for i in range(_DIM)
    )


def contact_volume(eta: OneForm, p: Point) -> float:
    """Coefficient of dx^dy^dz in eta ^ d(eta) at p."""
    d = exterior_derivative(eta)
    vals = eval_fields(list(eta.components) + [d[1][2], d[0][2], d[0][1]], p)
    ex, ey, ez, cyz, cxz, cxy = vals
    return ex * cyz - ey * cxz + ez * cxy
