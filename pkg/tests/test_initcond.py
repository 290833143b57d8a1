import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mhslab.errors import InitSyntaxError, ResolutionError
from mhslab.initcond import InitExpr, parse_init, realize
from mhslab.spectral import SpectralField, sup_distance


def test_parse_examples():
    e = parse_init("0.1*sin(2*pi*x)")
    assert e.terms == (("sin", 0.1, 1),)
    e = parse_init("1 + cos(4*pi*x) - 0.5*sin(6*pi*x)")
    assert e.terms == (("const", 1.0, 0), ("cos", 1.0, 2), ("sin", -0.5, 3))
    assert parse_init("0").terms == ()
    assert parse_init("-sin(2*pi*x)").terms == (("sin", -1.0, 1),)


def test_whitespace_and_optional_stars():
    assert parse_init("  0.2 sin( 2 pi x )") == parse_init("0.2*sin(2*pi*x)")


def test_terms_merge():
    e = parse_init("sin(2*pi*x) + 0.5*sin(2*pi*x) - 1.5*sin(2*pi*x) + 2")
    assert e.terms == (("const", 2.0, 0),)


@pytest.mark.parametrize("text,offset", [
    ("0.1*tan(2*pi*x)", 4),
    ("sin(2*pi*x) +", 13),
    ("sin(2*pi*y)", 9),
    ("0.1 $ sin(2*pi*x)", 4),
    ("sin(2*pi*x))", 11),
])
def test_syntax_errors_carry_offset(text, offset):
    with pytest.raises(InitSyntaxError) as info:
        parse_init(text)
    assert info.value.offset == offset


def test_offset_counts_bytes():
    with pytest.raises(InitSyntaxError) as info:
        parse_init("0.1*sin(2*pi*x) + é")
    assert info.value.offset == len("0.1*sin(2*pi*x) + ".encode())


def test_odd_multiple_of_pi_is_rejected():
    with pytest.raises(InitSyntaxError, match="periodic") as info:
        parse_init("sin(3*pi*x)")
    assert info.value.offset == 4


def test_amplitude_limit():
    parse_init("1e6*sin(2*pi*x)")
    with pytest.raises(InitSyntaxError):
        parse_init("1e7*sin(2*pi*x)")


def test_harmonic_limit_with_grid():
    parse_init("sin(42*pi*x)", n_modes=64)
    with pytest.raises(InitSyntaxError):
        parse_init("sin(44*pi*x)", n_modes=64)
    with pytest.raises(ResolutionError):
        realize(parse_init("sin(44*pi*x)"), 64)


def test_realize_matches_grid_values():
    u = realize(parse_init("0.5 + 0.1*sin(2*pi*x) - 0.2*cos(8*pi*x)"), 64)
    x = np.arange(64) / 64
    assert np.max(np.abs(u.grid - (0.5 + 0.1 * np.sin(2 * np.pi * x) - 0.2 * np.cos(8 * np.pi * x)))) < 1e-15
    assert u.coeffs[1] == pytest.approx(-0.05j)
    assert u.coeffs[4] == pytest.approx(-0.1)


# merged amplitudes must stay within the parser limit
terms = st.lists(
    st.tuples(st.sampled_from(["const", "sin", "cos"]),
              st.floats(-1e5, 1e5, allow_nan=False).filter(lambda a: a != 0),
              st.integers(1, 20)),
    max_size=6,
).map(lambda ts: InitExpr.from_terms([(k, a, 0 if k == "const" else h) for k, a, h in ts]))


@given(terms)
def test_serialize_roundtrip(expr):
    text = expr.serialize()
    assert parse_init(text) == expr
    assert parse_init(text).serialize() == text


@given(terms, terms)
def test_realize_is_linear(a, b):
    lhs = realize(a + b, 64)
    rhs = realize(a, 64) + realize(b, 64)
    scale = max(1.0, lhs.sup_norm(), rhs.sup_norm())
    assert sup_distance(lhs, rhs) <= 1e-12 * scale


def test_realize_empty_is_zero():
    assert realize(InitExpr(), 32).sup_norm() == 0.0
    assert isinstance(realize(parse_init("3"), 32), SpectralField)
