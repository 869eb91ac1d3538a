import math

import numpy as np
import pytest

from contact_kmv.lcg import Lcg
from contact_kmv.scalar_field import Coord, Const, Point, cos, parse_field, sin
from contact_kmv.tensor_calc import (
    MetricField,
    OneForm,
    SingularMetricError,
    VectorField,
    apply_riemann,
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

FLAT = MetricField([[1, 0, 0], [0, 1, 0], [0, 0, 1]])
ORIGIN = Point(0.0, 0.0, 0.0)


def _points(n, seed=2, lo=-1.0, hi=1.0):
    rng = Lcg(seed)
    return [Point(rng.next_in(lo, hi), rng.next_in(lo, hi), rng.next_in(lo, hi)) for _ in range(n)]


def _random_spd_metric(seed):
    """I + A^T A with bounded random expression entries: positive definite
    everywhere by construction."""
    rng = Lcg(seed)
    x, y, z = Coord("x"), Coord("y"), Coord("z")

    def entry():
        c = rng.next_in(-0.4, 0.4)
        pick = rng.next_u64() % 3
        base = (x, y, z)[rng.next_u64() % 3]
        other = (x, y, z)[rng.next_u64() % 3]
        if pick == 0:
            return Const(c) * sin(base + other)
        if pick == 1:
            return Const(c) * cos(base * other)
        return Const(c) * base

    A = [[entry() for _ in range(3)] for _ in range(3)]
    rows = [[None] * 3 for _ in range(3)]
    for i in range(3):
        for j in range(i, 3):
            acc = Const(1.0) if i == j else Const(0.0)
            for k in range(3):
                acc = acc + A[k][i] * A[k][j]
            rows[i][j] = acc
            rows[j][i] = acc
    return MetricField(rows)


def _random_vector_field(seed):
    rng = Lcg(seed)
    x, y, z = Coord("x"), Coord("y"), Coord("z")

    def comp():
        base = (x, y, z)[rng.next_u64() % 3]
        return Const(rng.next_in(-1, 1)) + Const(rng.next_in(-1, 1)) * sin(base)

    return VectorField((comp(), comp(), comp()))


class TestMetricField:
    def test_symmetry_enforced(self):
        with pytest.raises(ValueError, match="symmetric"):
            MetricField([[1, parse_field("x"), 0], [parse_field("y"), 1, 0], [0, 0, 1]])

    def test_positive_definite_check(self):
        assert FLAT.is_positive_definite_at(ORIGIN)
        lorentz = MetricField([[-1, 0, 0], [0, 1, 0], [0, 0, 1]])
        assert not lorentz.is_positive_definite_at(ORIGIN)

    def test_singular_metric_raises(self):
        degenerate = MetricField([[parse_field("x"), 0, 0], [0, 1, 0], [0, 0, 1]])
        with pytest.raises(SingularMetricError):
            christoffel(degenerate, Point(-1.0, 0, 0))


class TestChristoffel:
    def test_flat_all_zero(self):
        for p in _points(5):
            assert np.all(christoffel(FLAT, p) == 0.0)

    def test_hand_koszul_exponential_metric(self):
        # g = diag(1, 1, e^{2x}): Gamma^z_xz = 1, Gamma^x_zz = -e^{2x}
        g = MetricField([[1, 0, 0], [0, 1, 0], [0, 0, parse_field("exp(2*x)")]])
        for p in _points(4, seed=5):
            G = christoffel(g, p)
            assert G[2, 0, 2] == pytest.approx(1.0, abs=1e-12)
            assert G[0, 2, 2] == pytest.approx(-math.exp(2 * p.x), rel=1e-12)

    def test_symmetric_in_lower_indices(self):
        g = _random_spd_metric(7)
        for p in _points(3, seed=8):
            G = christoffel(g, p)
            assert np.allclose(G, np.swapaxes(G, 1, 2), atol=1e-14)


class TestRiemann:
    def test_flat_zero(self):
        assert np.all(riemann(FLAT, ORIGIN) == 0.0)

    def test_hyperbolic_sectional_curvature(self):
        # diag(e^{2z}, e^{2z}, 1) has constant sectional curvature -1
        e2z = parse_field("exp(2*z)")
        g = MetricField([[e2z, 0, 0], [0, e2z, 0], [0, 0, 1]])
        basis = np.eye(3)
        for p in _points(3, seed=11):
            R = riemann(g, p)
            G = g.at(p)
            for i in range(3):
                for j in range(i + 1, 3):
                    u, v = basis[i], basis[j]
                    num = float(apply_riemann(R, u, v, v) @ G @ u)
                    den = G[i, i] * G[j, j] - G[i, j] ** 2
                    assert num / den == pytest.approx(-1.0, rel=1e-10)

    def test_antisymmetry_last_two_slots(self):
        g = _random_spd_metric(13)
        for p in _points(3, seed=14):
            R = riemann(g, p)
            assert np.allclose(R, -np.swapaxes(R, 2, 3), atol=1e-12)


class TestRicci:
    def test_flat(self):
        Q, tau = ricci_and_scalar(FLAT, ORIGIN)
        assert np.all(Q == 0.0) and tau == 0.0

    def test_hyperbolic_tau_minus_six(self):
        e2z = parse_field("exp(2*z)")
        g = MetricField([[e2z, 0, 0], [0, e2z, 0], [0, 0, 1]])
        for p in _points(4, seed=15):
            _, tau = ricci_and_scalar(g, p)
            assert tau == pytest.approx(-6.0, abs=1e-8)

    def test_einstein_proportionality_hyperbolic(self):
        # Ric = -2 g means Q = -2 I
        e2z = parse_field("exp(2*z)")
        g = MetricField([[e2z, 0, 0], [0, e2z, 0], [0, 0, 1]])
        Q, _ = ricci_and_scalar(g, Point(0.2, -0.4, 0.1))
        assert np.allclose(Q, -2.0 * np.eye(3), atol=1e-10)

    def test_q_self_adjoint(self):
        g = _random_spd_metric(19)
        for p in _points(3, seed=20):
            Q, _ = ricci_and_scalar(g, p)
            G = g.at(p)
            assert np.allclose(G @ Q, (G @ Q).T, atol=1e-9)


class TestLieBracket:
    def test_coordinate_fields_commute(self):
        dx = VectorField((1, 0, 0))
        dy = VectorField((0, 1, 0))
        br = lie_bracket(dx, dy)
        assert all(c.eval(ORIGIN) == 0.0 for c in br.components)

    def test_scaling_bracket(self):
        # [d_x, x d_y] = d_y
        v = VectorField((1, 0, 0))
        w = VectorField((0, Coord("x"), 0))
        br = lie_bracket(v, w)
        for p in _points(3, seed=21):
            assert np.allclose(br.at(p), [0.0, 1.0, 0.0])

    def test_antisymmetry(self):
        v = _random_vector_field(22)
        w = _random_vector_field(23)
        a = lie_bracket(v, w)
        b = lie_bracket(w, v)
        for p in _points(3, seed=24):
            assert np.allclose(a.at(p), -b.at(p), atol=1e-13)


class TestCovariantDerivative:
    def test_euclidean_constant_field(self):
        v = VectorField((1, 0, 0))
        w = VectorField((2, -3, 5))
        assert np.all(covariant_derivative(FLAT, v, w, ORIGIN) == 0.0)

    def test_euclidean_directional(self):
        # grad_{d_x} (x d_y) = d_y
        v = VectorField((1, 0, 0))
        w = VectorField((0, Coord("x"), 0))
        assert np.allclose(covariant_derivative(FLAT, v, w, Point(2, 1, 1)), [0, 1, 0])

    def test_metric_compatibility(self):
        """U g(V, W) = g(grad_U V, W) + g(V, grad_U W) on random data."""
        g = _random_spd_metric(29)
        u = _random_vector_field(30)
        v = _random_vector_field(31)
        w = _random_vector_field(32)
        gvw = None
        for i in range(3):
            for j in range(3):
                t = g.rows[i][j] * v.components[i] * w.components[j]
                gvw = t if gvw is None else gvw + t
        dg_along_u = u.apply_to(gvw)
        for p in _points(5, seed=33):
            G = g.at(p)
            lhs = dg_along_u.eval(p)
            rhs = float(covariant_derivative(g, u, v, p) @ G @ w.at(p)) + float(
                v.at(p) @ G @ covariant_derivative(g, u, w, p)
            )
            assert lhs == pytest.approx(rhs, abs=1e-8)

    def test_torsion_free(self):
        g = _random_spd_metric(34)
        v = _random_vector_field(35)
        w = _random_vector_field(36)
        br = lie_bracket(v, w)
        for p in _points(5, seed=37):
            delta = (
                covariant_derivative(g, v, w, p)
                - covariant_derivative(g, w, v, p)
                - br.at(p)
            )
            assert np.max(np.abs(delta)) < 1e-8


class TestBianchiAndSkew:
    def test_first_bianchi(self):
        g = _random_spd_metric(38)
        rng = Lcg(39)
        for p in _points(4, seed=40):
            R = riemann(g, p)
            u, v, w = (np.array([rng.next_in(-1, 1) for _ in range(3)]) for _ in range(3))
            total = (
                apply_riemann(R, u, v, w)
                + apply_riemann(R, v, w, u)
                + apply_riemann(R, w, u, v)
            )
            assert np.max(np.abs(total)) < 1e-8

    def test_curvature_skew(self):
        g = _random_spd_metric(41)
        rng = Lcg(42)
        for p in _points(4, seed=43):
            R = riemann(g, p)
            G = g.at(p)
            u, v, w, zz = (np.array([rng.next_in(-1, 1) for _ in range(3)]) for _ in range(4))
            a = float(apply_riemann(R, u, v, w) @ G @ zz)
            b = float(apply_riemann(R, v, u, w) @ G @ zz)
            assert a == pytest.approx(-b, abs=1e-9)


class TestGradientLaplacian:
    def test_euclidean_gradient(self):
        f = parse_field("x^2")
        assert np.allclose(gradient(FLAT, f, Point(1, 0, 0)), [2, 0, 0])

    def test_gradient_of_constant(self):
        g = _random_spd_metric(44)
        assert np.allclose(gradient(g, Const(4.2), Point(0.3, 0.1, -0.2)), 0.0)

    def test_euclidean_laplacian(self):
        f = parse_field("x^2 + y^2 + z^2")
        for p in _points(3, seed=45):
            assert laplacian(FLAT, f, p) == pytest.approx(6.0, rel=1e-13)

    def test_harmonic(self):
        f = parse_field("x*y")
        assert laplacian(FLAT, f, Point(0.5, -0.7, 0.3)) == pytest.approx(0.0, abs=1e-14)

    def test_laplacian_is_divergence_of_gradient(self):
        """Independent oracle: div(grad f) via the volume-weighted
        divergence (1/sqrt(det g)) d_i (sqrt(det g) (grad f)^i), all in
        closed form."""
        from contact_kmv.scalar_field import exp as exp_field, ln as ln_field

        g = _random_spd_metric(46)
        f = parse_field("sin(x) * z + y^2")
        det = g.det_field()
        sqrt_det = exp_field(Const(0.5) * ln_field(det))
        ginv = g.inverse_fields()
        dfs = [f.partial(axis) for axis in ("x", "y", "z")]
        grad_comps = [
            sum((ginv[i][j] * dfs[j] for j in range(1, 3)), ginv[i][0] * dfs[0])
            for i in range(3)
        ]
        div = None
        for i, axis in enumerate(("x", "y", "z")):
            term = (sqrt_det * grad_comps[i]).partial(axis)
            div = term if div is None else div + term
        for p in _points(5, seed=47):
            oracle = div.eval(p) / sqrt_det.eval(p)
            assert laplacian(g, f, p) == pytest.approx(oracle, abs=1e-8)


class TestExteriorDerivative:
    def test_d_squared_zero(self):
        f = parse_field("sin(x)*y + z^2")
        df = OneForm(tuple(f.partial(axis) for axis in ("x", "y", "z")))
        dd = exterior_derivative(df)
        for p in _points(3, seed=48):
            for i in range(3):
                for j in range(3):
                    assert dd[i][j].eval(p) == pytest.approx(0.0, abs=1e-13)

    def test_x_dy(self):
        omega = OneForm((0, Coord("x"), 0))
        d = exterior_derivative(omega)
        assert d[0][1].eval(ORIGIN) == 1.0
        assert d[1][0].eval(ORIGIN) == -1.0

    def test_contact_volume_of_x_dy(self):
        # eta = z dx + x dy: eta ^ d(eta) = x dz^dx^dy + z dx^(dx^dy) -> coefficient x... compute directly
        omega = OneForm((0, Coord("x"), 0))
        # omega ^ d(omega) = x dy ^ dx^dy = 0
        assert contact_volume(omega, Point(2, 3, 4)) == 0.0

    def test_contact_volume_family_shape(self):
        # eta = dx - (2y + f(z)) dz has eta ^ d(eta) = -2 dx^dy^dz
        a = parse_field("2*y + sin(z)")
        eta = OneForm((1, 0, -a))
        for p in _points(5, seed=49):
            assert contact_volume(eta, p) == pytest.approx(-2.0, rel=1e-14)

    def test_standard_contact_form(self):
        # eta = dz - y dx: d(eta) = dx^dy wedge sign check, volume = 1
        eta = OneForm((Const(0) - Coord("y"), 0, 1))
        assert contact_volume(eta, Point(1, 2, 3)) == pytest.approx(1.0)


class TestCurvatureBundle:
    def test_bundle_consistency(self):
        g = _random_spd_metric(50)
        p = Point(0.1, 0.2, -0.3)
        bundle = curvature_bundle(g, p)
        assert np.allclose(bundle.christoffel, christoffel(g, p))
        assert np.allclose(bundle.riemann, riemann(g, p))
        Q, tau = ricci_and_scalar(g, p)
        assert np.allclose(bundle.ricci_operator, Q)
        assert bundle.scalar == pytest.approx(tau)
