"""Derived nonlinearities and the structural checks run on them."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .polynomial import InteractionPoly, QQi, to_fraction


def build_fk(F: InteractionPoly) -> tuple[InteractionPoly, ...]:
    """f_k = dF/dconj(z_k) + conj(dF/dz_k) for k = 1..l."""
    return tuple(F.wirtinger(k, conjugate=True) + F.wirtinger(k).conj() for k in range(F.l))


def _weighted_sum(fk: Sequence[InteractionPoly], weights) -> InteractionPoly:
    """sum_k w_k f_k conj(z_k)."""
    l = fk[0].l
    out = InteractionPoly(l)
    for k, (f, w) in enumerate(zip(fk, weights)):
        out = out + f * InteractionPoly.variable(l, k, conjugate=True) * QQi.of(w)
    return out


# exact linear algebra over the rationals

def _nullspace(rows: list[list[Fraction]], ncols: int) -> list[list[Fraction]]:
    """Basis of {x : A x = 0} by Gauss-Jordan elimination in exact arithmetic."""
    A = [list(r) for r in rows if any(r)]
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(A)) if A[i][c] != 0), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        p = A[r][c]
        A[r] = [x / p for x in A[r]]
        for i in range(len(A)):
            if i != r and A[i][c] != 0:
                f = A[i][c]
                A[i] = [x - f * y for x, y in zip(A[i], A[r])]
        pivots.append(c)
        r += 1
        if r == len(A):
            break
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        v = [Fraction(0)] * ncols
        v[fc] = Fraction(1)
        for i, pc in enumerate(pivots):
            v[pc] = -A[i][fc]
        basis.append(v)
    return basis


@dataclass(frozen=True)
class SigmaSolution:
    """Positive weights making Im sum sigma_k f_k conj(z_k) vanish identically."""

    sigma: tuple[Fraction, ...] | None
    dimension: int  # dimension of the full (sign-unconstrained) solution space
    basis: tuple[tuple[Fraction, ...], ...] = ()

    @property
    def exists(self) -> bool:
        return self.sigma is not None


def sigma_constraints(fk: Sequence[InteractionPoly]) -> list[list[Fraction]]:
    """Real linear constraints on sigma from Im sum_k sigma_k f_k conj(z_k) == 0."""
    l = len(fk)
    G = [f * InteractionPoly.variable(l, k, conjugate=True) for k, f in enumerate(fk)]
    # coefficientwise: c_k(a,b) - conj(c_k(b,a)) must cancel in the weighted sum
    D = [(g - g.conj()).terms for g in G]
    keys = sorted(set().union(*[d.keys() for d in D]))
    rows = []
    for key in keys:
        vals = [d.get(key, QQi(Fraction(0))) for d in D]
        rows.append([v.re for v in vals])
        rows.append([v.im for v in vals])
    return rows


def solve_sigma(fk: Sequence[InteractionPoly]) -> SigmaSolution:
    """Find sigma > 0 (normalised so min sigma = 1) with Im sum sigma_k f_k conj(z_k) == 0."""
    l = len(fk)
    basis = _nullspace(sigma_constraints(fk), l)
    dim = len(basis)
    btuple = tuple(tuple(v) for v in basis)
    if dim == 0:
        return SigmaSolution(None, 0, btuple)
    if dim == 1:
        v = basis[0]
        if all(x > 0 for x in v) or all(x < 0 for x in v):
            m = min(abs(x) for x in v)
            return SigmaSolution(tuple(abs(x) / m for x in v), 1, btuple)
        return SigmaSolution(None, 1, btuple)
    # several directions: look for a strictly positive combination by linear programming
    from scipy.optimize import linprog

    N = np.array([[float(x) for x in v] for v in basis]).T  # l x dim
    res = linprog(c=N.sum(axis=0), A_ub=-N, b_ub=-np.ones(l), bounds=[(None, None)] * dim,
                  method="highs")
    if res.status != 0:
        return SigmaSolution(None, dim, btuple)
    t = [Fraction(x).limit_denominator(10**6) for x in res.x]
    sig = [sum(ti * v[i] for ti, v in zip(t, basis)) for i in range(l)]
    if not all(s > 0 for s in sig):
        return SigmaSolution(None, dim, btuple)
    m = min(sig)
    return SigmaSolution(tuple(s / m for s in sig), dim, btuple)


def sigma_residual(fk: Sequence[InteractionPoly], sigma) -> InteractionPoly:
    """Im sum_k sigma_k f_k conj(z_k) as a polynomial."""
    return _weighted_sum(fk, [to_fraction(s) for s in sigma]).imag_part()


@dataclass(frozen=True)
class ResonanceResult:
    holds: bool
    residual: InteractionPoly
    masses: tuple[Fraction, ...]


def check_mass_resonance(fk: Sequence[InteractionPoly], alpha, gamma) -> ResonanceResult:
    """Exact test of Im sum_k m_k f_k conj(z_k) == 0 with m_k = alpha_k / (2 gamma_k)."""
    m = tuple(to_fraction(a) / (2 * to_fraction(g)) for a, g in zip(alpha, gamma))
    res = _weighted_sum(fk, m).imag_part()
    return ResonanceResult(res.is_zero(), res, m)


def _charge(a, b, sigma) -> Fraction:
    return sum((x - y) * s for x, y, s in zip(a, b, sigma))


def gauge_defects(F: InteractionPoly, fk: Sequence[InteractionPoly], sigma) -> list[str]:
    """Monomials breaking the rotation covariance z_j -> exp(i sigma_j theta/2) z_j.

    f_k must pick up exp(i sigma_k theta/2) and Re F must be invariant.
    Returns an empty list when the covariance holds exactly.
    """
    sigma = [to_fraction(s) for s in sigma]
    bad = []
    for k, f in enumerate(fk):
        for (a, b) in f.terms:
            if _charge(a, b, sigma) != sigma[k]:
                bad.append(f"f{k + 1}: {a}/{b}")
    for (a, b) in (F + F.conj()).terms:
        if _charge(a, b, sigma) != 0:
            bad.append(f"Re F: {a}/{b}")
    return bad


def check_gauge(F: InteractionPoly, fk: Sequence[InteractionPoly], sigma, samples: int = 1000,
                rng: np.random.Generator | None = None) -> float:
    """Largest sampled residual of the rotation covariance of f_k and of Re F."""
    rng = rng if rng is not None else np.random.default_rng(0)
    l = F.l
    sig = np.array([float(s) for s in sigma])
    z = rng.standard_normal((l, samples)) + 1j * rng.standard_normal((l, samples))
    theta = rng.uniform(-np.pi, np.pi, samples)
    rot = np.exp(0.5j * sig[:, None] * theta[None, :])
    zr = rot * z
    worst = 0.0
    for k, f in enumerate(fk):
        lhs = f(zr)
        rhs = rot[k] * f(z)
        scale = 1.0 + np.abs(rhs)
        worst = max(worst, float(np.max(np.abs(lhs - rhs) / scale)))
    reF = F(z).real
    worst = max(worst, float(np.max(np.abs(F(zr).real - reF) / (1.0 + np.abs(reF)))))
    return worst


@dataclass(frozen=True)
class HomogeneityResult:
    degree3: bool
    degrees: tuple[int, ...]
    sampled_residual: float


def check_homogeneity(F: InteractionPoly, samples: int = 200,
                      rng: np.random.Generator | None = None) -> HomogeneityResult:
    """Exact degree test, confirmed by F(t z) = t^3 F(z) on random samples."""
    rng = rng if rng is not None else np.random.default_rng(0)
    z = rng.standard_normal((F.l, samples)) + 1j * rng.standard_normal((F.l, samples))
    t = rng.uniform(0.1, 3.0, samples)
    lhs = F(t * z)
    rhs = t ** 3 * F(z)
    res = float(np.max(np.abs(lhs - rhs) / (1.0 + np.abs(rhs)))) if len(F) else 0.0
    degs = tuple(sorted(F.degrees()))
    return HomogeneityResult(F.is_homogeneous(3) and not F.is_zero(), degs, res)


# hypothesis report

EXACT_PASS = "exact-pass"
SAMPLED_PASS = "sampled-pass"
FAIL = "fail"
DECLARED = "declared"


@dataclass
class HypothesisEntry:
    status: str
    detail: str = ""

    def to_dict(self):
        return {"status": self.status, "detail": self.detail}


@dataclass
class HypothesisReport:
    entries: dict[str, HypothesisEntry] = field(default_factory=dict)
    sigma: tuple[Fraction, ...] | None = None
    sigma_dimension: int = 0
    mass_resonance: bool | None = None
    resonance_residual: str = ""
    gauge_residual: float | None = None

    @property
    def ok(self) -> bool:
        return all(e.status != FAIL for e in self.entries.values())

    def to_dict(self) -> dict:
        return {
            "hypotheses": {k: v.to_dict() for k, v in self.entries.items()},
            "sigma": None if self.sigma is None else [str(s) for s in self.sigma],
            "sigma_solution_dimension": self.sigma_dimension,
            "mass_resonance": self.mass_resonance,
            "mass_resonance_residual": self.resonance_residual,
            "gauge_residual": self.gauge_residual,
            "ok": self.ok,
        }


def _real_coeffs_nonneg(coeffs: dict) -> bool:
    return all(c.im == 0 and c.re >= 0 for c in coeffs.values())


def _supermodular_sampled(func, l: int, rng, samples: int) -> float:
    """Worst violation of F(y+h e_i+k e_j) + F(y) >= F(y+h e_i) + F(y+k e_j), i != j."""
    if l < 2:
        return 0.0
    worst = 0.0
    y = rng.uniform(0, 2, (l, samples))
    h = rng.uniform(0, 2, samples)
    kk = rng.uniform(0, 2, samples)
    for i in range(l):
        for j in range(l):
            if i == j:
                continue
            ei = np.zeros((l, 1)); ei[i] = 1
            ej = np.zeros((l, 1)); ej[j] = 1
            lhs = func(y + h * ei + kk * ej) + func(y)
            rhs = func(y + h * ei) + func(y + kk * ej)
            worst = max(worst, float(np.max(rhs - lhs)))
    return worst


def check_structure(F: InteractionPoly, sigma=None, decomposition: Sequence[InteractionPoly] | None = None,
                    alpha=None, gamma=None, samples: int = 1000, seed: int = 0) -> HypothesisReport:
    """Run the structural checks on a degree-3 interaction polynomial.

    ``decomposition`` optionally declares the super-modular split of F on the
    positive cone; without it each real monomial is taken as its own piece.
    """
    rng = np.random.default_rng(seed)
    rep = HypothesisReport()
    E = rep.entries
    l = F.l
    fk = build_fk(F)

    # H1: f_k(0) = 0
    const = [k + 1 for k, f in enumerate(fk) if any(sum(a) + sum(b) == 0 for a, b in f.terms)]
    E["H1"] = HypothesisEntry(FAIL if const else EXACT_PASS,
                              f"constant term in f{const}" if const else "f_k(0) = 0")
    hom = check_homogeneity(F, rng=rng)
    E["H2"] = HypothesisEntry(DECLARED, "quadratic f_k: local Lipschitz bound automatic")
    E["H3"] = HypothesisEntry(EXACT_PASS, "f_k built from Wirtinger derivatives of F")

    # H4: sigma
    if sigma is None:
        sol = solve_sigma(fk)
        rep.sigma, rep.sigma_dimension = sol.sigma, sol.dimension
        if sol.exists:
            E["H4"] = HypothesisEntry(EXACT_PASS, f"sigma = {[str(s) for s in sol.sigma]}, "
                                                   f"solution space dimension {sol.dimension}")
        else:
            E["H4"] = HypothesisEntry(FAIL, f"no positive sigma (solution space dimension {sol.dimension})")
    else:
        sig = tuple(to_fraction(s) for s in sigma)
        res = sigma_residual(fk, sig)
        rep.sigma = sig
        rep.sigma_dimension = len(_nullspace(sigma_constraints(fk), l))
        ok = res.is_zero() and all(s > 0 for s in sig)
        E["H4"] = HypothesisEntry(EXACT_PASS if ok else FAIL,
                                  "declared sigma verified" if ok else f"residual {res.pretty()}")

    E["H5"] = HypothesisEntry(EXACT_PASS if hom.degree3 else FAIL,
                              f"degrees {list(hom.degrees)}, sampled residual {hom.sampled_residual:.3g}")

    # H6: pointwise |Re F(z)| <= F(|z|)
    z = rng.standard_normal((l, samples)) + 1j * rng.standard_normal((l, samples))
    viol = float(np.max(np.abs(F(z).real) - F(np.abs(z)).real))
    scale = float(np.max(np.abs(F(np.abs(z))))) + 1e-300
    E["H6"] = HypothesisEntry(SAMPLED_PASS if viol <= 1e-12 * scale else FAIL,
                              f"max violation {viol:.3g} over {samples} samples")

    # H7: F real on R^l, f_k >= 0 on the positive cone
    real_coeffs = F.restrict_real()
    is_real = all(c.im == 0 for c in real_coeffs.values())
    y = np.abs(rng.standard_normal((l, samples)))
    fvals = np.array([f(y).real for f in fk])
    if not is_real:
        E["H7"] = HypothesisEntry(FAIL, "F takes non-real values on R^l")
    elif all(_real_coeffs_nonneg(f.restrict_real()) for f in fk):
        E["H7"] = HypothesisEntry(EXACT_PASS, "real on R^l; f_k have nonnegative coefficients on the cone")
    elif fvals.min() >= -1e-12 * (1 + np.abs(fvals).max()):
        E["H7"] = HypothesisEntry(SAMPLED_PASS, f"f_k >= 0 at {samples} cone samples")
    else:
        E["H7"] = HypothesisEntry(FAIL, f"min f_k on cone {fvals.min():.3g}")

    # H8: super-modular decomposition on the positive cone
    if decomposition is None:
        if _real_coeffs_nonneg(real_coeffs):
            E["H8"] = HypothesisEntry(EXACT_PASS, "monomial split with nonnegative coefficients")
        else:
            E["H8"] = HypothesisEntry(FAIL, "negative real coefficient; declare a decomposition")
    else:
        total = {}
        for Fs in decomposition:
            for e, c in Fs.restrict_real().items():
                total[e] = total.get(e, QQi(Fraction(0))) + c
        total = {e: c for e, c in total.items() if c}
        msgs = []
        if total != real_coeffs:
            msgs.append("pieces do not sum to F on R^l")
        worst = 0.0
        for s, Fs in enumerate(decomposition):
            rc = Fs.restrict_real()
            supports = {tuple(j for j, x in enumerate(e) if x) for e in rc}
            if len(supports) > 1:
                msgs.append(f"piece {s + 1} does not vanish on its coordinate hyperplanes")
            worst = max(worst, _supermodular_sampled(lambda yy, P=Fs: P(yy).real, l, rng, samples // 10 or 1))
        if worst > 1e-10:
            msgs.append(f"super-modularity violated by {worst:.3g}")
        E["H8"] = HypothesisEntry(FAIL if msgs else SAMPLED_PASS, "; ".join(msgs) or "declared split verified")

    if rep.sigma is not None:
        bad = gauge_defects(F, fk, rep.sigma)
        rep.gauge_residual = check_gauge(F, fk, rep.sigma, samples=samples, rng=rng)
        if bad:
            E["gauge"] = HypothesisEntry(FAIL, ", ".join(bad))
    if alpha is not None and gamma is not None:
        rr = check_mass_resonance(fk, alpha, gamma)
        rep.mass_resonance = rr.holds
        rep.resonance_residual = rr.residual.pretty()
    return rep
