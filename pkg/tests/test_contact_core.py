import dataclasses
import math

import numpy as np
import pytest

from contact_kmv.contact import (
    ContactMetricStructure,
    DegenerateFrameError,
    DomainBox,
    axiom_residuals_at,
    compute_h,
    h_frame,
    validate,
)
from contact_kmv.lcg import Lcg
from contact_kmv.scalar_field import Const, Coord, Point, parse_field
from contact_kmv.tensor_calc import MetricField, OneForm, VectorField, covariant_derivative

from conftest import points_on

ORIGIN = Point(0.0, 0.0, 0.0)


def sasakian_structure():
    """The standard Sasakian structure on the chart:
    eta = (dz - y dx)/2, xi = 2 d_z, g = ((1+y^2)/4, 1/4, 1/4) pattern.
    xi is Killing here, so h = 0 everywhere."""
    y = Coord("y")
    q = Const(0.25)
    eta = OneForm((-0.5 * y, 0, 0.5))
    xi = VectorField((0, 0, 2))
    gxz = -0.25 * y
    g = MetricField([[q * (1 + y**2), 0, gxz], [0, q, 0], [gxz, 0, q]])
    phi = (
        (Const(0), Const(1), Const(0)),
        (Const(-1), Const(0), Const(0)),
        (Const(0), y, Const(0)),
    )
    return ContactMetricStructure(
        eta=eta, xi=xi, phi=phi, g=g, domain=DomainBox((-1, 1), (-1, 1), (-1, 1))
    )


class TestDomainBox:
    def test_contains(self):
        box = DomainBox((-1, 1), (0, 2), (-3, -1))
        assert box.contains(Point(0, 1, -2))
        assert not box.contains(Point(0, 3, -2))

    def test_empty_range_rejected(self):
        with pytest.raises(ValueError):
            DomainBox((1, -1), (0, 1), (0, 1))

    def test_admissibility_positivity(self):
        box = DomainBox((-1, 1), (-1, 1), (-1, 1), positivity=(parse_field("z"),))
        assert box.admissible(Point(0, 0, 0.5))
        assert not box.admissible(Point(0, 0, -0.5))


class TestValidate:
    def test_family_one_residuals_tiny(self, family_one_generic):
        pts = points_on(family_one_generic, 50)
        report = validate(family_one_generic, pts, tol=1e-9)
        assert report.passed, str(report)
        assert set(report.residuals) == {
            "eta_xi",
            "phi_xi",
            "phi_squared",
            "phi_metric_compat",
            "deta_pairing",
            "contact_volume",
        }

    def test_point_outside_domain_rejected(self, family_one_basic):
        with pytest.raises(ValueError, match="outside domain"):
            validate(family_one_basic, [Point(5, 0, 0)])

    def test_negated_phi_keeps_axioms_flips_pairing(self, family_two_basic):
        """phi -> -phi still satisfies the algebraic axioms; only the
        pairing with d(eta) detects the orientation flip, as its own
        report entry."""
        s = family_two_basic
        neg_phi = tuple(tuple(-entry for entry in row) for row in s.phi)
        flipped = dataclasses.replace(s, phi=neg_phi, h_field=None, frame_x=None, frame_phix=None)
        pts = points_on(s, 20)
        report = validate(flipped, pts, tol=1e-9)
        for name in ("eta_xi", "phi_xi", "phi_squared", "phi_metric_compat", "contact_volume"):
            assert report.residuals[name] < 1e-9, name
        assert report.residuals["deta_pairing"] > 1e-3

    def test_corrupted_b_in_metric_detected(self, family_one_basic):
        s = family_one_basic
        rows = [list(r) for r in s.g.rows]
        rows[1][2] = rows[1][2] - 0.1  # g_yz = -b, so this shifts b by +0.1 in g only
        rows[2][1] = rows[1][2]
        bad = dataclasses.replace(s, g=MetricField(rows))
        pts = points_on(s, 20)
        report = validate(bad, pts, tol=1e-9)
        assert report.residuals["phi_metric_compat"] > 1e-3

    def test_sasakian_structure_is_valid(self):
        s = sasakian_structure()
        rng = Lcg(3)
        pts = [
            Point(rng.next_in(-0.9, 0.9), rng.next_in(-0.9, 0.9), rng.next_in(-0.9, 0.9))
            for _ in range(20)
        ]
        report = validate(s, pts, tol=1e-9)
        assert report.passed, str(report)


class TestComputeH:
    def test_sasakian_h_vanishes(self):
        s = sasakian_structure()
        for p in (ORIGIN, Point(0.4, -0.7, 0.2)):
            assert np.max(np.abs(compute_h(s, p))) < 1e-14

    def test_family_one_closed_form_at_origin(self, family_one_basic):
        expected = np.array([[0, 0, 0], [0, 1, -4], [0, 0, -1.0]])
        assert np.allclose(compute_h(family_one_basic, ORIGIN), expected, atol=1e-13)
        assert np.allclose(family_one_basic.h_closed_at(ORIGIN), expected)

    def test_family_two_closed_form_at_origin(self, family_two_basic):
        expected = np.array([[0, 0, 0], [0, -1, 4], [0, 0, 1.0]])
        assert np.allclose(compute_h(family_two_basic, ORIGIN), expected, atol=1e-13)
        assert np.allclose(family_two_basic.h_closed_at(ORIGIN), expected)

    def test_h_matches_closed_form_everywhere(self, family_one_generic, family_two_generic):
        for s in (family_one_generic, family_two_generic):
            for p in points_on(s, 25):
                assert np.max(np.abs(compute_h(s, p) - s.h_closed_at(p))) < 1e-9

    def test_h_traceless_and_anticommutes_with_phi(self, family_one_generic):
        s = family_one_generic
        for p in points_on(s, 20):
            h = compute_h(s, p)
            phi = s.phi_at(p)
            e = s.eta.at(p)
            assert abs(np.trace(h)) < 1e-9
            assert abs(np.trace(phi @ h)) < 1e-9
            assert np.max(np.abs(phi @ h + h @ phi)) < 1e-9
            assert np.max(np.abs(e @ h)) < 1e-9  # eta o h = 0

    def test_reeb_derivative_rule(self, family_one_generic):
        """grad_V xi = -phi V - phi h V for random V at random points."""
        s = family_one_generic
        rng = Lcg(8)
        for p in points_on(s, 10):
            h = compute_h(s, p)
            phi = s.phi_at(p)
            v = np.array([rng.next_in(-1, 1) for _ in range(3)])
            vf = VectorField(tuple(Const(c) for c in v))
            lhs = covariant_derivative(s.g, vf, s.xi, p)
            rhs = -phi @ v - phi @ (h @ v)
            assert np.max(np.abs(lhs - rhs)) < 1e-8


class TestHFrame:
    def test_family_one_origin_frame(self, family_one_basic):
        fr = h_frame(family_one_basic, ORIGIN)
        assert fr.lam == pytest.approx(1.0, abs=1e-12)
        assert np.allclose(fr.x, [0, 1, 0], atol=1e-12)
        assert np.allclose(fr.phix, [0, 2, 1], atol=1e-12)
        assert fr.a == pytest.approx(0.0, abs=1e-12)
        assert fr.c == 0.0 and fr.d == 0.0

    def test_orthonormal_gram(self, family_one_generic, family_two_generic):
        for s in (family_one_generic, family_two_generic):
            for p in points_on(s, 20):
                fr = h_frame(s, p)
                G = s.g.at(p)
                V = np.column_stack([fr.xi, fr.x, fr.phix])
                assert np.max(np.abs(V.T @ G @ V - np.eye(3))) < 1e-10

    def test_eigen_relations(self, family_one_generic):
        s = family_one_generic
        for p in points_on(s, 20):
            fr = h_frame(s, p)
            h = compute_h(s, p)
            assert np.max(np.abs(h @ fr.x - fr.lam * fr.x)) < 1e-9
            assert np.max(np.abs(h @ fr.phix + fr.lam * fr.phix)) < 1e-9
            assert np.max(np.abs(h @ fr.xi)) < 1e-9

    def test_lambda_matches_closed_form(self, family_two_generic):
        s = family_two_generic
        for p in points_on(s, 20):
            fr = h_frame(s, p)
            assert fr.lam == pytest.approx(s.lam_field.eval(p), abs=1e-10)

    def test_family_one_a_vanishes_everywhere(self, family_one_generic):
        for p in points_on(family_one_generic, 30):
            assert abs(h_frame(family_one_generic, p).a) < 1e-10

    def test_family_two_b_vanishes_everywhere(self, family_two_generic):
        for p in points_on(family_two_generic, 30):
            assert abs(h_frame(family_two_generic, p).b) < 1e-10

    def test_deterministic_bitwise(self, family_one_generic):
        p = Point(0.37, -0.18, 0.52)
        a = h_frame(family_one_generic, p)
        b = h_frame(family_one_generic, p)
        assert a.x.tobytes() == b.x.tobytes()
        assert a.phix.tobytes() == b.phix.tobytes()
        assert (a.lam, a.a, a.b) == (b.lam, b.a, b.b)

    def test_sign_rule_first_big_component_positive(self, family_one_generic):
        for p in points_on(family_one_generic, 20):
            x = h_frame(family_one_generic, p).x
            first = next(c for c in x if abs(c) > 1e-12)
            assert first > 0

    def test_degenerate_on_sasakian(self):
        with pytest.raises(DegenerateFrameError):
            h_frame(sasakian_structure(), Point(0.1, 0.2, 0.3))

    def test_fd_fallback_matches_closed_forms(self, family_one_generic):
        """Foreign structures get A, B from finite differences of the
        pointwise eigenvalue; agreement at the FD tolerance."""
        s = family_one_generic
        foreign = dataclasses.replace(
            s,
            lam_field=None,
            kappa_field=None,
            mu_field=None,
            h_field=None,
            frame_x=None,
            frame_phix=None,
            upsilon=None,
            variant=None,
        )
        for p in points_on(s, 5):
            exact = h_frame(s, p)
            fd = h_frame(foreign, p)
            assert fd.lam == pytest.approx(exact.lam, abs=1e-10)
            assert fd.a == pytest.approx(exact.a, abs=1e-6)
            assert fd.b == pytest.approx(exact.b, abs=1e-6)
            assert math.isnan(fd.c) and math.isnan(fd.d)
