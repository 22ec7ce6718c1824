from fractions import Fraction

import numpy as np
import pytest
from scipy.integrate import simpson
from scipy.optimize import brentq

from qnls import functionals as fn
from qnls.evolution import EvolutionConfig, StrangStepper, evolve, gaussian_data
from qnls.nonlinearity import builtin
from qnls.radial import RadialField, RadialGrid, sphere_area
from qnls.virial import (
    Branch,
    CutoffChi,
    Thresholds,
    Verdict,
    bootstrap_gamma,
    bootstrap_n5,
    classify,
    monitor_T,
    morawetz_bound,
    morawetz_R,
    resonance_moment,
    rprime_radial,
    virial_check_run,
    virial_identity_check,
    virial_observers,
    virial_V,
)

from conftest import solve


# cutoff

def test_cutoff_admissible_on_fine_mesh():
    assert CutoffChi(1.0).admissibility_violation(points=100_000) <= 1e-10


def test_cutoff_is_C3_at_both_joins():
    for rho0 in (1.0, 3.0):
        for k in range(4):
            lo = CutoffChi._derivs(np.array([rho0 - 1e-9]), k)[0]
            hi = CutoffChi._derivs(np.array([rho0 + 1e-9]), k)[0]
            assert lo == pytest.approx(hi, abs=1e-6)


def test_cutoff_plateau_and_scaling():
    chi = CutoffChi(2.0)
    assert chi.value(1.5) == pytest.approx(2.25)
    assert chi.value(7.0) == pytest.approx(4 * 19 / 5)
    assert chi.d1(1.0) == pytest.approx(2.0) and chi.d1(7.0) == 0
    assert chi.d2(0.5) == 2


@pytest.mark.parametrize("n", range(1, 7))
def test_cutoff_laplacians(n):
    chi = CutoffChi(3.0)
    r = np.linspace(0.0, 3.0, 50)
    assert np.all(chi.laplacian(r, n) == 2 * n)
    assert np.all(chi.bilaplacian(r, n) == 0)
    # compare against finite differences of the analytic profile beyond R
    s = np.linspace(3.5, 8.5, 11)
    h = 1e-3
    lap = lambda x: chi.d2(x) + (n - 1) * chi.d1(x) / x
    fd = (lap(s + h) - 2 * lap(s) + lap(s - h)) / h ** 2 + (n - 1) * (lap(s + h) - lap(s - h)) / (2 * h * s)
    assert np.allclose(chi.bilaplacian(s, n), fd, atol=1e-4)


@pytest.mark.parametrize("n", range(1, 7))
def test_bilaplacian_bound_scales_like_R_minus_2(n):
    C = CutoffChi.bilaplacian_bound(n)
    for R in (0.5, 2.0, 10.0):
        r = np.linspace(0, 4 * R, 4001)
        assert np.max(np.abs(CutoffChi(R, verify=False).bilaplacian(r, n))) <= C / R ** 2 * (1 + 1e-9)


def test_cutoff_rejects_bad_radius():
    with pytest.raises(ValueError):
        CutoffChi(0.0)


# V, W, R

def test_virial_V_gaussian():
    nl, p = builtin("kappa", n=3, kappa=2.0)
    g = RadialGrid(3, 2048, 12.0)
    u = gaussian_data(g, [1.0, 1.0], 1.0)
    # int r^2 e^{-2r^2} over R^3 = (3/4) (pi/2)^{3/2}; weights alpha^2/gamma = 1 + 1/2
    assert virial_V(u, p) == pytest.approx(1.5 * 0.75 * (np.pi / 2) ** 1.5, rel=1e-10)


def test_resonance_moment_vanishes_under_resonance():
    g = RadialGrid(3, 256, 10.0)
    u = gaussian_data(g, [1.0, 0.7j], 1.0, chirp=0.4)
    nl, p = builtin("kappa", n=3, kappa=0.5)
    assert abs(resonance_moment(u, p, nl)) <= 1e-14
    nl, p = builtin("kappa", n=3, kappa=1.0)
    assert abs(resonance_moment(u, p, nl)) > 1e-3


def test_morawetz_real_field_zero():
    nl, p = builtin("kappa", n=3)
    g = RadialGrid(3, 256, 10.0)
    assert morawetz_R(gaussian_data(g, [1.0, -2.0], 1.0), p) == 0.0


@pytest.mark.parametrize("n", [1, 3])
def test_morawetz_against_simpson(n):
    nl, p = builtin("scalar-cubic", n=n)
    g = RadialGrid(n, 131072, 8.0)
    u = RadialField(g, np.exp(1j * g.r - g.r ** 2))
    # Im(d_r u conj(u)) = e^{-2r^2}; integrate 2 * 2r * that over R^n by dense Simpson
    x = np.linspace(0.0, 8.0, 200001)
    ref = 2 * sphere_area(n) * simpson(2 * x * np.exp(-2 * x ** 2) * x ** (n - 1), x=x)
    assert morawetz_R(u, p) == pytest.approx(ref, rel=1e-8)


def test_morawetz_weight_forms_agree_inside_cutoff():
    nl, p = builtin("kappa", n=3)
    g = RadialGrid(3, 1024, 20.0)
    u = gaussian_data(g, [1.0, 0.5], 1.0, chirp=0.7)
    chi = CutoffChi(10.0)
    a = morawetz_R(u, p)
    assert morawetz_R(u, p, weight=chi) == pytest.approx(a, rel=1e-12)
    assert morawetz_R(u, p, weight=lambda r: 2 * r) == pytest.approx(a, rel=1e-15)


def test_morawetz_bound_on_random_fields(rng):
    nl, p = builtin("kappa", n=4)
    g = RadialGrid(4, 1024, 20.0)
    for _ in range(50):
        amp = rng.normal(size=2) + 1j * rng.normal(size=2)
        u = gaussian_data(g, amp, rng.uniform(0.5, 3.0), chirp=rng.uniform(-2, 2))
        R = rng.uniform(0.3, 5.0)
        chi = CutoffChi(R, verify=False)
        assert abs(morawetz_R(u, p, weight=chi)) <= morawetz_bound(u, p, nl, chi)


# R'

def bump(g, a, amps):
    prof = np.where(g.r < a, (1 - (g.r / a) ** 2) ** 4, 0.0)
    return RadialField(g, np.asarray(amps, dtype=complex)[:, None] * prof[None, :])


@pytest.mark.parametrize("n", range(1, 7))
def test_rprime_equals_8T_for_compact_support(n):
    nl, p = builtin("kappa", n=n)
    g = RadialGrid(n, 1024, 10.0)
    u = bump(g, 2.5, [1.0, 0.6 - 0.3j])
    T = fn.pohozaev_T(u, p, nl)
    assert rprime_radial(u, p, nl, CutoffChi(3.0)) == pytest.approx(8 * T, rel=1e-10)


def test_rprime_zero_field():
    nl, p = builtin("kappa", n=4)
    g = RadialGrid(4, 128, 10.0)
    assert rprime_radial(RadialField(g, np.zeros((2, g.M))), p, nl, CutoffChi(1.0)) == 0.0


def test_rprime_large_radius_limit():
    nl, p = builtin("kappa", n=5)
    g = RadialGrid(5, 2048, 60.0)
    u = gaussian_data(g, [1.0, 0.8], 1.0)
    T = fn.pohozaev_T(u, p, nl)
    assert rprime_radial(u, p, nl, CutoffChi(20.0)) == pytest.approx(8 * T, rel=1e-6)
    # a small cutoff feels the field outside r <= R
    assert abs(rprime_radial(u, p, nl, CutoffChi(0.5)) - 8 * T) > 1e-3 * abs(T)


# virial identity

def test_virial_identity_resonant_n4():
    nl, p = builtin("kappa", n=4, kappa=0.5)
    g = RadialGrid(4, 2048, 30.0)
    u0 = gaussian_data(g, [1.0, 0.8], 1.0, chirp=0.1)
    res = evolve(u0, p, nl, EvolutionConfig(dt=1e-3, T=0.5, record_every=10), observers=virial_observers(p, nl))
    rep = virial_check_run(res, p)
    assert rep.resonant
    assert np.allclose(rep.rhs, 8 * res.records[0].E)
    assert rep.mismatch <= 1e-3


def test_virial_identity_needs_correction_at_kappa_1():
    nl, p = builtin("kappa", n=4, kappa=1.0)
    g = RadialGrid(4, 2048, 30.0)
    u0 = gaussian_data(g, [1.0, 0.8], 1.0, chirp=0.1)
    res = evolve(u0, p, nl, EvolutionConfig(dt=1e-3, T=0.5, record_every=10), observers=virial_observers(p, nl))
    rep = virial_check_run(res, p)
    assert not rep.resonant
    assert rep.mismatch > 1e-2
    assert rep.mismatch_corrected <= 1e-3


@pytest.mark.parametrize("n", [1, 3, 5])
def test_virial_linear_flow(n):
    # zero nonlinearity: V'' = 8K with K conserved, any n
    nl, p = builtin("scalar-cubic", n=n, omega=0.0)
    g = RadialGrid(n, 4096, 40.0)
    st = StrangStepper(g, p, nl)
    u = gaussian_data(g, [1.0], 1.0, chirp=0.3).data
    dt, times, V, K = 1e-3, [], [], []
    for i in range(301):
        if i % 10 == 0:
            f = RadialField(g, u)
            times.append(i * dt)
            V.append(virial_V(f, p))
            K.append(fn.kinetic(f, p))
        u = st.linear(u, dt)
    zeros = np.zeros(len(times))
    rep = virial_identity_check(times, V, zeros, K, zeros, K[0], n)
    assert np.allclose(rep.rhs, 8 * np.array(K[1:-1]), rtol=1e-12)
    assert rep.mismatch <= 1e-3


def test_virial_check_rejects_non_uniform_times():
    with pytest.raises(ValueError, match="non-uniform"):
        virial_identity_check([0, 1, 3], [0, 1, 2], [0] * 3, [1] * 3, [0] * 3, 1.0, 4)


def test_virial_check_run_needs_observers():
    nl, p = builtin("kappa", n=4)
    res = evolve(gaussian_data(RadialGrid(4, 64, 10.0), [1, 1]), p, nl, EvolutionConfig(dt=1e-2, T=0.05))
    with pytest.raises(ValueError):
        virial_check_run(res, p)


# bootstrap

def test_bootstrap_exact_example():
    bs = bootstrap_gamma(0, 2, Fraction(5, 4))
    assert bs.gamma == Fraction(16, 625)
    assert bs.bound == Fraction(16, 3125)
    assert bootstrap_gamma(0, 2, "5/4").gamma == Fraction(16, 625)


def test_bootstrap_float_path():
    bs = bootstrap_gamma(0.1, 0.7, 1.3)
    assert bs.gamma == pytest.approx((0.7 * 1.3) ** (-1 / 0.3))


def test_barrier_value_negative():
    for b, q in [(2, Fraction(5, 4)), (0.5, 1.5), (3.0, 2.0)]:
        bs = bootstrap_gamma(0, b, q)
        g = float(bs.gamma)
        assert bs.f(g) < 0
        assert bs.f(g) == pytest.approx(-(1 - 1 / float(q)) * g)


def test_bootstrap_branches():
    bs = bootstrap_gamma(Fraction(1, 1000), 2, Fraction(5, 4))
    assert bs.admissible
    assert bs.branch(0.01) is Branch.BELOW and bs.branch(0.1) is Branch.ABOVE
    with pytest.raises(ValueError):
        bs.branch(bs.gamma)
    assert not bootstrap_gamma(Fraction(1, 100), 2, Fraction(5, 4)).admissible


def test_bootstrap_invalid():
    with pytest.raises(ValueError):
        bootstrap_gamma(0, -1, 2)
    with pytest.raises(ValueError):
        bootstrap_gamma(0, 1, 1)


def synthetic_trajectories(bs, rng, count):
    """Continuous random paths sampled finely, kept only where f(G) >= 0 at every sample."""
    gam = float(bs.gamma)
    # f >= 0 on [0, x1] and [x2, inf), with x1 < gamma < x2
    x1 = brentq(bs.f, 0.0, gam)
    x2 = brentq(bs.f, gam, 1e6 * gam)
    kept, rejected = [], 0
    while len(kept) < count:
        if rng.random() < 0.5:
            G0, scale = rng.uniform(0.0, x1), 0.02 * x1
        else:
            G0, scale = rng.uniform(x2, 2 * x2), 0.02 * x2
        G = np.abs(G0 + np.cumsum(np.concatenate([[0.0], rng.normal(scale=scale, size=400)])))
        if np.all(bs.f(G) >= 0):
            kept.append(G)
        else:
            rejected += 1
    return kept, rejected


def test_branch_separation_on_synthetic_trajectories(rng):
    bs = bootstrap_gamma(Fraction(1, 1000), 2, Fraction(5, 4))
    kept, rejected = synthetic_trajectories(bs, rng, 1000)
    assert len(kept) == 1000 and rejected > 0
    assert all(bs.stays_on_branch(G) for G in kept)
    # without the hypothesis f(G) >= 0 the barrier can be crossed
    cross = np.linspace(0.5, 1.5, 50) * float(bs.gamma)
    assert not bs.stays_on_branch(cross)


def test_bootstrap_n5_barrier_from_ground_state():
    gs = solve("kappa", 5)
    d = gs.diagnostics()
    C5 = fn.sharp_constant(gs.profile, gs.params, gs.nl)
    Q0 = 0.3 * d.Q
    bs = bootstrap_n5(0.0, Q0, C5)
    assert bs.gamma == pytest.approx(5 * d.Qfunc ** 2 / Q0, rel=1e-12)


# classification

@pytest.fixture(scope="module")
def th5():
    gs = solve("kappa", 5)
    return gs, Thresholds.from_ground_state(gs.profile, gs.params, gs.nl)


@pytest.fixture(scope="module")
def th6():
    gs = solve("kappa", 6)
    return gs, Thresholds.from_ground_state(gs.profile, gs.params, gs.nl)


def test_classify_ground_state_is_boundary(th5):
    gs, th = th5
    assert classify(gs.profile, gs.params, gs.nl, th).verdict is Verdict.INDETERMINATE


def test_classify_half_ground_state_n5_global(th5):
    gs, th = th5
    cls = classify(gs.profile * 0.5, gs.params, gs.nl, th)
    assert cls.verdict is Verdict.GLOBAL
    assert cls.to_dict()["verdict"] == "GlobalCriteria"


def test_classify_n6_blowup(th6):
    gs, th = th6
    cls = classify(gs.profile * 1.1, gs.params, gs.nl, th)
    assert cls.verdict is Verdict.BLOWUP
    assert all(w.holds for w in cls.witnesses)
    d = fn.diagnostics(gs.profile, gs.params, gs.nl)
    # E(lam psi) = lam^2 K - 2 lam^3 P with K = 3P
    assert cls.details["u0"]["E"] == pytest.approx(1.21 * d.K - 2 * 1.331 * d.P, rel=1e-12)


def test_classify_n6_small_data_indeterminate(th6):
    gs, th = th6
    assert classify(gs.profile * 0.9, gs.params, gs.nl, th).verdict is Verdict.INDETERMINATE


@pytest.mark.parametrize("theta", [0.0, 1.0, np.pi])
@pytest.mark.parametrize("lam", [0.5, 1.0, 1.1])
def test_classify_gauge_invariant(th6, theta, lam):
    gs, th = th6
    u = gs.profile * lam
    phase = np.exp(0.5j * theta * np.array([float(s) for s in gs.nl.sigma]))[:, None]
    a = classify(u, gs.params, gs.nl, th).verdict
    b = classify(RadialField(u.grid, phase * u.data), gs.params, gs.nl, th).verdict
    assert a is b


def test_classify_n4():
    nl, p = builtin("kappa", n=4)
    g = RadialGrid(4, 256, 10.0)
    u = gaussian_data(g, [1.0, 1.0], 1.0)
    Q = fn.charge(u, p, nl)
    th = Thresholds(4, 2 * Q, 1.0, 1.0, 1.0, 1.0)
    assert classify(u, p, nl, th).verdict is Verdict.GLOBAL
    th = Thresholds(4, 0.5 * Q, 1.0, 1.0, 1.0, 1.0)
    assert classify(u, p, nl, th).verdict is Verdict.INDETERMINATE


def test_classify_dimension_errors(th5):
    nl, p = builtin("kappa", n=3)
    u = gaussian_data(RadialGrid(3, 64, 5.0), [1, 1])
    with pytest.raises(ValueError):
        classify(u, p, nl, th5[1])
    gs, th = th5
    nl6, p6 = builtin("kappa", n=6)
    with pytest.raises(ValueError):
        classify(gaussian_data(RadialGrid(6, 64, 5.0), [1, 1]), p6, nl6, th)


# T monitor

def test_monitor_T():
    from types import SimpleNamespace as NS
    mon = monitor_T([NS(T=-3.0), NS(T=-1.5), NS(T=-2.0)])
    assert mon.sign_definite and mon.delta0 == 1.5 and mon.min_T == -3.0
    mon = monitor_T([NS(T=-1.0), NS(T=0.2)])
    assert not mon.sign_definite and mon.delta0 is None
    assert mon.to_dict()["max_T"] == 0.2


def test_standing_wave_keeps_T_near_zero():
    gs = solve("scalar-cubic", 1, M=1024, r_max=30.0)
    res = evolve(gs.profile, gs.params, gs.nl, EvolutionConfig(dt=1e-3, T=0.3))
    mon = monitor_T(res.records)
    K = gs.diagnostics().K
    assert max(abs(mon.min_T), abs(mon.max_T)) <= 1e-4 * K
