import pytest

from contact_kmv import FamilyParams, build_family, sample_points
from contact_kmv.scalar_field import parse_field


def make_family(variant="I", f="0", r="1", s="0", upsilon=1.0):
    return build_family(
        FamilyParams(
            variant=variant,
            f=parse_field(f),
            r=parse_field(r),
            s=parse_field(s),
            upsilon=upsilon,
        )
    )


@pytest.fixture(scope="session")
def family_one_basic():
    """Variant I with f = s = 0, r = 1, upsilon = 1: every closed form is
    explicit at the origin."""
    return make_family("I")


@pytest.fixture(scope="session")
def family_two_basic():
    return make_family("II")


@pytest.fixture(scope="session")
def family_one_generic():
    """Variant I with nontrivial chart functions."""
    return make_family("I", f="sin(z)", r="1 + z^2/4", s="z", upsilon=-0.5)


@pytest.fixture(scope="session")
def family_two_generic():
    return make_family("II", f="sin(z)", r="1 + z^2/4", s="z", upsilon=-0.5)


def points_on(structure, n, seed=13):
    return sample_points(structure.domain, n, seed)
