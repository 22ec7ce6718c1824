from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qnls.nonlinearity import (
    ConfigError,
    DerivedNonlinearity,
    InteractionPoly,
    ParseError,
    SystemParams,
    build_fk,
    builtin,
    check_gauge,
    check_homogeneity,
    check_mass_resonance,
    check_structure,
    gauge_defects,
    parse_poly,
    sigma_residual,
    solve_sigma,
    system_from_dict,
    to_fraction,
)
from qnls.nonlinearity.polynomial import QQi


def randz(rng, l, m=50):
    return rng.standard_normal((l, m)) + 1j * rng.standard_normal((l, m))


# parsing

def test_parse_simple_monomial():
    F = parse_poly("conj(z1)^2*z2", 2)
    assert F.terms == {((0, 1), (2, 0)): QQi(Fraction(1))}


def test_parse_accepts_both_power_spellings_and_rationals():
    assert parse_poly("(1/2)*z1**2*conj(z2)", 2) == parse_poly("0.5*z1^2*conj(z2)", 2)


def test_parse_imaginary_unit_and_expansion():
    F = parse_poly("i*(z1 + conj(z1))*z1", 1)
    z = np.array([[0.3 + 0.7j]])
    assert np.allclose(F(z), 1j * (z + np.conj(z)) * z)


@pytest.mark.parametrize("text, where", [
    ("z1/z2", 2),
    ("z1^-1", 3),
    ("z3*z1", 0),
    ("z1 +* z2", 4),
    ("foo(z1)", 0),
])
def test_parse_errors_carry_position(text, where):
    with pytest.raises(ParseError) as ei:
        parse_poly(text, 2)
    assert ei.value.position == where
    assert "^" in ei.value.caret()


def test_division_by_variable_message():
    with pytest.raises(ParseError, match="non-polynomial construct"):
        parse_poly("z1/z2", 2)


def test_empty_expression_rejected():
    with pytest.raises(ParseError):
        parse_poly("   ", 1)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(-3, 3), st.integers(-3, 3), st.integers(0, 2), st.integers(0, 2),
                          st.integers(0, 2), st.integers(0, 2)), min_size=1, max_size=5))
def test_pretty_round_trips(raw):
    F = InteractionPoly(2, {((a1, a2), (b1, b2)): QQi(Fraction(re), Fraction(im))
                            for re, im, a1, a2, b1, b2 in raw})
    assert parse_poly(F.pretty(), 2) == F


# algebra

def test_conj_and_real_imag_parts(rng):
    F = parse_poly("(2 + i)*z1^2*conj(z2) - 3*z2*conj(z2)*z1", 2)
    z = randz(rng, 2)
    assert np.allclose(F.conj()(z), np.conj(F(z)))
    assert np.allclose(F.real_part()(z), F(z).real)
    assert np.allclose(F.imag_part()(z), F(z).imag)


def test_wirtinger_against_finite_differences(rng):
    F = parse_poly("z1^2*conj(z2) + (1/3)*conj(z1)*z2*z1", 2)
    z = randz(rng, 2, 5)
    h = 1e-6
    for j in range(2):
        e = np.zeros((2, 1)); e[j] = 1
        dx = (F(z + h * e) - F(z - h * e)) / (2 * h)
        dy = (F(z + 1j * h * e) - F(z - 1j * h * e)) / (2 * h)
        assert np.allclose(F.wirtinger(j)(z), 0.5 * (dx - 1j * dy), atol=1e-6)
        assert np.allclose(F.wirtinger(j, conjugate=True)(z), 0.5 * (dx + 1j * dy), atol=1e-6)


def test_to_fraction_reads_decimal_repr():
    assert to_fraction(0.1) == Fraction(1, 10)
    assert to_fraction("3/4") == Fraction(3, 4)


# derived nonlinearity

def test_build_fk_for_kappa_system():
    F = parse_poly("conj(z1)^2*z2", 2)
    f1, f2 = build_fk(F)
    assert f1 == parse_poly("2*conj(z1)*z2", 2)
    z = np.array([[0.4 - 0.2j], [1.1 + 0.5j]])
    assert np.allclose(f1(z), 2 * np.conj(z[0]) * z[1])
    assert np.allclose(f2(z), z[0] ** 2)


def test_fk_vanish_at_origin_and_are_quadratic(rng):
    nl, _ = builtin("thg")
    z = randz(rng, 3)
    assert np.allclose(nl.f(np.zeros((3, 4))), 0)
    assert np.allclose(nl.f(2.5 * z), 2.5 ** 2 * nl.f(z))


def test_compiled_evaluation_matches_polynomial(rng):
    for name in ("shg3", "thg", "kappa"):
        nl, _ = builtin(name)
        z = randz(rng, nl.l)
        assert np.allclose(nl.F(z), nl.poly(z))
        for k, fk in enumerate(nl.components):
            assert np.allclose(nl.f(z)[k], fk(z))
        y = np.abs(z)
        assert np.allclose(nl.F_real(y), nl.poly(y).real)
        assert np.allclose(nl.f_real(y), nl.f(y).real)


# sigma, resonance, gauge

def test_sigma_for_kappa_and_shg3():
    assert solve_sigma(build_fk(parse_poly("conj(z1)^2*z2", 2))).sigma == (1, 2)
    nl, _ = builtin("shg3")
    assert solve_sigma(nl.components).sigma == (2, 1, 1)
    assert sigma_residual(nl.components, (2, 1, 1)).is_zero()


def test_sigma_for_thg():
    nl, _ = builtin("thg")
    assert nl.sigma == (1, 2, 3)


def test_no_sigma_for_pure_power():
    sol = solve_sigma(build_fk(parse_poly("z1^3 + conj(z1)^3", 1)))
    assert not sol.exists


@pytest.mark.parametrize("kappa, holds", [(0.25, False), (0.5, True), (1.0, False), (2.0, False)])
def test_mass_resonance_only_at_half(kappa, holds):
    nl, p = builtin("kappa", kappa=kappa)
    rr = check_mass_resonance(nl.components, p.alpha, p.gamma)
    assert rr.holds is holds
    if not holds:
        # residual is (1 - 1/(2 kappa)) Im(conj(z1)^2 z2) up to the expected rescaling
        z = np.array([[0.3 + 0.8j], [-0.5 + 0.2j]])
        expected = (1 - 1 / (2 * kappa)) * (np.conj(z[0]) ** 2 * z[1]).imag
        ratio = rr.residual(z).real / expected
        assert np.allclose(ratio, ratio.flat[0]) and abs(ratio.flat[0]) > 0


def test_gauge_exact_and_sampled(rng):
    for name in ("shg3", "thg", "kappa"):
        nl, _ = builtin(name)
        assert gauge_defects(nl.poly, nl.components, nl.sigma) == []
        assert check_gauge(nl.poly, nl.components, nl.sigma, samples=500, rng=rng) <= 1e-12


def test_gauge_defect_detected():
    F = parse_poly("conj(z1)^2*z2", 2)
    assert gauge_defects(F, build_fk(F), (1, 1))


def test_homogeneity_flags_wrong_degree():
    assert check_homogeneity(parse_poly("conj(z1)^2*z2", 2)).degree3
    hom = check_homogeneity(parse_poly("z1^2 + z1^3", 1))
    assert not hom.degree3 and hom.degrees == (2, 3)


def test_structure_report_for_builtins():
    for name in ("shg3", "thg", "kappa"):
        nl, p = builtin(name)
        rep = check_structure(nl.poly, alpha=p.alpha, gamma=p.gamma)
        assert rep.ok, rep.to_dict()
        assert set(rep.entries) >= {f"H{k}" for k in range(1, 9)}


def test_structure_report_fails_on_bad_polynomial():
    rep = check_structure(parse_poly("z1^2", 1))
    assert not rep.ok
    assert rep.entries["H5"].status == "fail"


def test_structure_declared_decomposition():
    F = parse_poly("conj(z1)^2*z2 + z1^2*conj(z2)", 2)
    half = [parse_poly("conj(z1)^2*z2", 2), parse_poly("z1^2*conj(z2)", 2)]
    rep = check_structure(F, decomposition=half)
    assert rep.entries["H8"].status == "sampled-pass"
    rep = check_structure(F, decomposition=half[:1])
    assert rep.entries["H8"].status == "fail"


# params and configs

def test_system_params_validation():
    with pytest.raises(ConfigError, match="dimension out of supported range"):
        SystemParams(7, (1,), (1,), (0,))
    with pytest.raises(ConfigError):
        SystemParams(3, (1, 1), (1,), (0, 0))
    with pytest.raises(ConfigError):
        SystemParams(3, (1,), (-1,), (0,))


def test_masses_and_shift():
    _, p = builtin("kappa", kappa=0.25)
    assert np.allclose(p.masses, [0.5, 2.0])
    assert np.allclose(p.helmholtz_shift((1, 2)), [0.5, 1.0])


def test_system_from_dict_custom_and_builtin():
    nl, p = system_from_dict({"l": 2, "F": "conj(z1)^2*z2", "alpha": [1, 1], "gamma": [1, 2], "n": 4})
    assert p.n == 4 and nl.sigma == (1, 2)
    nl, p = system_from_dict({"builtin": "kappa", "kappa": 2.0}, n=5)
    assert p.gamma == (1.0, 2.0) and p.n == 5
    with pytest.raises(ConfigError, match="missing key"):
        system_from_dict({"l": 2, "F": "z1"})
    with pytest.raises(ConfigError):
        builtin("nope")


def test_scalar_cubic_builtin():
    nl, p = builtin("scalar-cubic", n=1)
    z = np.array([[-2.0 + 0j]])
    assert np.allclose(nl.F(z), 8)
    assert np.allclose(nl.f(z), -12)
    assert p.helmholtz_shift(nl.sigma)[0] == pytest.approx(1.0)


def test_derived_nonlinearity_declared_sigma():
    nl = DerivedNonlinearity(parse_poly("conj(z1)^2*z2", 2), sigma=[2, 4])
    assert nl.sigma == (2, 4)
