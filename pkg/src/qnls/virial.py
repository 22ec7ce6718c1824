"""Virial and Morawetz quantities, the truncated weight chi_R, the bootstrap
lemma and the a priori blow-up / global-existence classification."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import functionals as fn
from .radial import RadialField

# chi(rho) = rho^2 on [0, 1], p(rho - 1) on [1, 3], c beyond.  p is the sextic
# matching value and three derivatives of rho^2 at rho = 1 and of a constant
# at rho = 3, so Lap^2 chi stays bounded across both joins.
_JOIN = np.polynomial.Polynomial([1.0, 2.0, 1.0, 0.0, -11 / 8, 31 / 40, -1 / 8])
_JOIN_D = [_JOIN.deriv(k) for k in range(5)]
CHI_PLATEAU = float(_JOIN(2.0))  # 19/5


class CutoffChi:
    """chi_R(r) = R^2 chi(r / R) with chi = r^2 near the origin and constant far out."""

    c = CHI_PLATEAU

    def __init__(self, R: float = 1.0, verify: bool = True):
        if R <= 0:
            raise ValueError("cutoff radius must be positive")
        self.R = float(R)
        if verify:
            bad = self.admissibility_violation()
            if bad > 1e-10:
                raise ValueError(f"cutoff violates chi'' <= 2 or 0 <= chi' <= 2r by {bad:.3g}")

    def __repr__(self):
        return f"CutoffChi(R={self.R})"

    @staticmethod
    def _derivs(rho, order: int) -> np.ndarray:
        """d^order chi / d rho^order of the unit cutoff."""
        rho = np.asarray(rho, dtype=float)
        inner = [rho ** 2, 2 * rho, np.full_like(rho, 2.0)] + [np.zeros_like(rho)] * 2
        mid = _JOIN_D[order](rho - 1.0)
        outer = np.full_like(rho, CHI_PLATEAU) if order == 0 else np.zeros_like(rho)
        return np.where(rho <= 1, inner[order], np.where(rho < 3, mid, outer))

    def value(self, r):
        return self.R ** 2 * self._derivs(np.asarray(r) / self.R, 0)

    def d1(self, r):
        return self.R * self._derivs(np.asarray(r) / self.R, 1)

    def d2(self, r):
        return self._derivs(np.asarray(r) / self.R, 2)

    @classmethod
    def _unit_laplacians(cls, rho, n: int):
        rho = np.asarray(rho, dtype=float)
        c1, c2, c3, c4 = (cls._derivs(rho, k) for k in range(1, 5))
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = np.where(rho > 0, 1.0 / np.where(rho > 0, rho, 1.0), 0.0)
        # g = Lap chi = chi'' + (n-1) chi'/rho, then Lap g
        g = c2 + (n - 1) * c1 * inv
        g1 = c3 + (n - 1) * (c2 * inv - c1 * inv ** 2)
        g2 = c4 + (n - 1) * (c3 * inv - 2 * c2 * inv ** 2 + 2 * c1 * inv ** 3)
        bilap = g2 + (n - 1) * g1 * inv
        # exact interior values (removes the 0/0 at the origin)
        g = np.where(rho <= 1, 2.0 * n, g)
        bilap = np.where(rho <= 1, 0.0, bilap)
        return g, bilap

    def laplacian(self, r, n: int):
        """Lap chi_R = (Lap chi)(r / R); exactly 2n for r <= R."""
        return self._unit_laplacians(np.asarray(r) / self.R, n)[0]

    def bilaplacian(self, r, n: int):
        """Lap^2 chi_R = R^{-2} (Lap^2 chi)(r / R); zero for r <= R."""
        return self._unit_laplacians(np.asarray(r) / self.R, n)[1] / self.R ** 2

    @classmethod
    def bilaplacian_bound(cls, n: int, points: int = 20001) -> float:
        """C with |Lap^2 chi_R| <= C / R^2 for every R."""
        rho = np.linspace(1.0, 3.0, points)
        return float(np.max(np.abs(cls._unit_laplacians(rho, n)[1])))

    @classmethod
    def slope_max(cls, points: int = 20001) -> float:
        """max chi' of the unit cutoff; chi_R' <= slope_max * R."""
        return float(np.max(cls._derivs(np.linspace(0.0, 3.0, points), 1)))

    def admissibility_violation(self, points: int = 100_000) -> float:
        """Largest violation of chi'' <= 2 and 0 <= chi' <= 2 rho on a fine mesh."""
        rho = np.linspace(0.0, 4.0, points)
        d1 = self._derivs(rho, 1)
        d2 = self._derivs(rho, 2)
        return float(max(np.max(d2 - 2), np.max(-d1), np.max(d1 - 2 * rho), 0.0))


def virial_V(field: RadialField, params) -> float:
    """V = sum_k (alpha_k^2 / gamma_k) integral |x|^2 |u_k|^2."""
    g = field.grid
    wts = np.array(params.alpha) ** 2 / np.array(params.gamma)
    return float(np.sum(wts * g.integrate(g.r ** 2 * np.abs(field.data) ** 2)))


def resonance_moment(field: RadialField, params, nl) -> float:
    """W = integral |x|^2 Im sum_k m_k f_k(u) conj(u_k); vanishes under mass resonance."""
    g = field.grid
    u = field.data
    dens = np.sum(params.masses[:, None] * (nl.f(u) * np.conj(u)).imag, axis=0)
    return float(g.integrate(g.r ** 2 * dens))


def _weight_slope(weight, r):
    if weight is None or (isinstance(weight, str) and weight == "r2"):
        return 2 * r
    if isinstance(weight, CutoffChi):
        return weight.d1(r)
    return np.asarray(weight(r))


def morawetz_R(field: RadialField, params, weight=None) -> float:
    """R = 2 sum_k alpha_k Im integral phi'(r) d_r u_k conj(u_k).

    ``weight`` is None (phi = r^2), a CutoffChi, or a callable giving phi'.
    Derivatives live on cell faces, where Im(d_r u conj(u)) reduces to
    Im(u_{i+1} conj(u_i)) / h; this is the form for which the discrete
    Laplacian satisfies V' = R - 4W exactly.
    """
    g = field.grid
    u = field.data
    nxt = np.zeros_like(u)
    nxt[:, :-1] = u[:, 1:]
    cross = (nxt * np.conj(u)).imag
    slope = _weight_slope(weight, g.r_face)
    per = g.s_n * np.sum(g.rho * slope * cross, axis=-1)
    return float(2 * np.sum(np.array(params.alpha) * per))


def morawetz_bound(field: RadialField, params, nl, chi: CutoffChi) -> float:
    """C R Q^{1/2} K^{1/2} bound for |R| under the weight chi_R.

    C = 2 max(chi') sqrt(max_k 2 alpha_k / (gamma_k sigma_k)) by Cauchy-Schwarz.
    """
    s = np.array([float(x) for x in nl.sigma])
    a, gm = np.array(params.alpha), np.array(params.gamma)
    C = 2 * CutoffChi.slope_max() * np.sqrt(np.max(2 * a / (gm * s)))
    Q = fn.charge(field, params, nl)
    K = fn.kinetic(field, params)
    return float(C * chi.R * np.sqrt(Q * K))


def rprime_radial(field: RadialField, params, nl, chi: CutoffChi) -> float:
    """R' = 4 int chi_R'' sum gamma |d_r u|^2 - int Lap^2 chi_R sum gamma |u|^2 - 2 Re int Lap chi_R F(u).

    For a field supported in r <= R this is exactly 8 (K - (n/2) P).
    """
    g = field.grid
    n = g.n
    u = field.data
    gam = np.array(params.gamma)
    d = g.face_diff(u)
    grad = g.s_n * np.sum(g.rho * chi.d2(g.r_face) * (gam[:, None] * np.abs(d) ** 2), axis=-1) / g.h
    bil = chi.bilaplacian(g.r, n)
    bound = CutoffChi.bilaplacian_bound(n) / chi.R ** 2
    if np.max(np.abs(bil)) > bound * (1 + 1e-9):
        raise AssertionError("Lap^2 chi_R exceeds its C / R^2 bound")
    mass = g.integrate(bil * np.sum(gam[:, None] * np.abs(u) ** 2, axis=0))
    pot = g.integrate(chi.laplacian(g.r, n) * nl.F(u).real)
    return float(4 * np.sum(grad) - mass - 2 * pot)


def virial_observers(params, nl) -> dict:
    """Observers for evolve(): V(t) and the non-resonant moment W(t)."""
    return {"V": lambda f, t: virial_V(f, params),
            "W": lambda f, t: resonance_moment(f, params, nl)}


@dataclass
class VirialReport:
    n: int
    times: np.ndarray
    V2: np.ndarray           # centred finite-difference V''
    rhs: np.ndarray          # 2nE0 - 2nL + 2(4-n)K
    correction: np.ndarray   # -4 dW/dt by centred differences
    mismatch: float          # uncorrected, relative to max |rhs|
    mismatch_corrected: float
    resonant: bool

    def to_dict(self) -> dict:
        return {"n": self.n, "samples": int(len(self.times)), "mismatch": self.mismatch,
                "mismatch_corrected": self.mismatch_corrected, "resonant": self.resonant,
                "max_correction": float(np.max(np.abs(self.correction))) if len(self.correction) else 0.0}


def virial_identity_check(times, V, W, K, L, E0: float, n: int, resonant: bool | None = None,
                          rtol: float = 1e-9) -> VirialReport:
    """Compare finite-difference V'' with 2nE0 - 2nL + 2(4-n)K (- 4 W').

    Samples must be uniform in time.
    """
    t = np.asarray(times, dtype=float)
    V, W, K, L = (np.asarray(x, dtype=float) for x in (V, W, K, L))
    if len(t) < 3:
        raise ValueError("need at least three samples")
    dt = np.diff(t)
    if np.max(np.abs(dt - dt[0])) > rtol * max(abs(dt[0]), 1.0):
        raise ValueError("non-uniform sampling: virial check needs equally spaced records")
    step = dt[0]
    V2 = (V[2:] - 2 * V[1:-1] + V[:-2]) / step ** 2
    Wp = (W[2:] - W[:-2]) / (2 * step)
    rhs = 2 * n * E0 - 2 * n * L[1:-1] + 2 * (4 - n) * K[1:-1]
    corr = -4 * Wp
    scale = np.max(np.abs(rhs))
    if resonant is None:
        resonant = bool(np.max(np.abs(W)) <= 1e-12 * max(np.max(np.abs(V)), 1.0))
    return VirialReport(n, t[1:-1], V2, rhs, corr,
                        float(np.max(np.abs(V2 - rhs)) / scale),
                        float(np.max(np.abs(V2 - rhs - corr)) / scale), resonant)


def virial_check_run(result, params) -> VirialReport:
    """Virial check from an evolve() result recorded with virial_observers()."""
    obs = result.observables
    if "V" not in obs or "W" not in obs:
        raise ValueError("run was not recorded with virial observers")
    return virial_identity_check(result.column("t"), obs["V"], obs["W"], result.column("K"),
                                 result.column("L"), result.records[0].E, params.n)


def virial_identity_from_fields(times: Sequence[float], fields: Sequence[RadialField], params, nl) -> VirialReport:
    V = [virial_V(f, params) for f in fields]
    W = [resonance_moment(f, params, nl) for f in fields]
    K = [fn.kinetic(f, params) for f in fields]
    L = [fn.mass_term(f, params) for f in fields]
    return virial_identity_check(times, V, W, K, L, fn.energy(fields[0], params, nl), params.n)


# bootstrap lemma

class Branch(str, enum.Enum):
    BELOW = "Below"
    ABOVE = "Above"


@dataclass(frozen=True)
class Bootstrap:
    """Barrier gamma = (b q)^{-1/(q-1)} for f(x) = a - x + b x^q."""

    a: float | Fraction
    b: float | Fraction
    q: float | Fraction
    gamma: float | Fraction

    @property
    def bound(self):
        """Admissibility requires a < (1 - 1/q) gamma."""
        return (1 - 1 / self.q) * self.gamma

    @property
    def admissible(self) -> bool:
        return self.a < self.bound

    def f(self, x):
        return self.a - x + self.b * np.asarray(x, dtype=float) ** float(self.q)

    def branch(self, G0) -> Branch:
        if G0 == self.gamma:
            raise ValueError("G(0) equals gamma: branch undecided")
        return Branch.BELOW if G0 < self.gamma else Branch.ABOVE

    def stays_on_branch(self, trajectory) -> bool:
        """True when no sample of a trajectory crosses gamma from its starting side."""
        G = np.asarray(trajectory, dtype=float)
        gam = float(self.gamma)
        if self.branch(G[0]) is Branch.BELOW:
            return bool(np.all(G < gam))
        return bool(np.all(G > gam))


def _exact(x):
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    return None


def bootstrap_gamma(a, b, q) -> Bootstrap:
    """gamma = (b q)^{-1/(q-1)}, exact when b, q are rational and 1/(q-1) is an integer."""
    fa, fb, fq = _exact(a), _exact(b), _exact(q)
    if (fb if fb is not None else float(b)) <= 0 or (fq if fq is not None else float(q)) <= 1:
        raise ValueError("need b > 0 and q > 1")
    if fb is not None and fq is not None:
        e = 1 / (fq - 1)
        if e.denominator == 1:
            gam = (fb * fq) ** -int(e)
            return Bootstrap(fa if fa is not None else a, fb, fq, gam)
    gam = (float(b) * float(q)) ** (-1.0 / (float(q) - 1.0))
    return Bootstrap(float(a), float(b), float(q), gam)


def bootstrap_n5(E0: float, Q0: float, C5: float) -> Bootstrap:
    """Instance K(t) <= E(u0) + 2 C5 Q(u0)^{1/4} K(t)^{5/4} (omega = 1, beta = 0)."""
    return bootstrap_gamma(E0, 2 * C5 * Q0 ** 0.25, 1.25)


# classification

class Verdict(str, enum.Enum):
    BLOWUP = "BlowupCriteria"
    GLOBAL = "GlobalCriteria"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class Thresholds:
    n: int
    Q_star: float
    K_star: float
    E_star: float
    QE_star: float
    QK_star: float

    @classmethod
    def from_ground_state(cls, profile: RadialField, params, nl) -> "Thresholds":
        d = fn.diagnostics(profile, params, nl)
        t = cls(profile.grid.n, d.Q, d.K, d.E, d.Q * d.E, d.Q * d.K)
        if min(t.Q_star, t.K_star, t.QK_star) <= 0 or (t.n >= 5 and t.E_star <= 0):
            raise ValueError("ground-state thresholds must be positive")
        return t

    def to_dict(self) -> dict:
        return {"n": self.n, "Q_star": self.Q_star, "K_star": self.K_star, "E_star": self.E_star,
                "QE_star": self.QE_star, "QK_star": self.QK_star}


@dataclass
class Witness:
    name: str
    lhs: float
    relation: str
    rhs: float
    holds: bool

    def to_dict(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "relation": self.relation, "rhs": self.rhs,
                "holds": self.holds}


def _less(name, lhs, rhs, rtol):
    return Witness(name, lhs, "<", rhs, bool(lhs < rhs - rtol * abs(rhs)))


def _greater(name, lhs, rhs, rtol):
    return Witness(name, lhs, ">", rhs, bool(lhs > rhs + rtol * abs(rhs)))


@dataclass
class Classification:
    verdict: Verdict
    thresholds: Thresholds
    witnesses: list[Witness]
    evolve_verdict: str | None = None
    agreement: bool | None = None
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {"n": self.thresholds.n, "verdict": self.verdict.value, "thresholds": self.thresholds.to_dict(),
             "witnesses": [w.to_dict() for w in self.witnesses]}
        if self.evolve_verdict is not None:
            d["evolve_verdict"] = self.evolve_verdict
            d["agreement"] = self.agreement
        d.update(self.details)
        return d


def classify(u0: RadialField, params, nl, thresholds: Thresholds, rtol: float = 1e-12) -> Classification:
    """A priori verdict from the ground-state thresholds.

    Inequalities are strict; values within ``rtol`` of a threshold count as
    the boundary and give Indeterminate.
    """
    n = u0.grid.n
    if n not in (4, 5, 6):
        raise ValueError(f"classification covers n in {{4, 5, 6}}, got n={n}")
    if thresholds.n != n:
        raise ValueError("thresholds were computed in a different dimension")
    d = fn.diagnostics(u0, params, nl)
    th = thresholds
    if n == 4:
        w = [_less("Q(u0) < Q(psi)", d.Q, th.Q_star, rtol)]
        verdict = Verdict.GLOBAL if w[0].holds else Verdict.INDETERMINATE
    elif n == 5:
        qe_lt = _less("Q(u0)E(u0) < Q(psi)E(psi)", d.Q * d.E, th.QE_star, rtol)
        qk_gt = _greater("Q(u0)K(u0) > Q(psi)K(psi)", d.Q * d.K, th.QK_star, rtol)
        qk_lt = _less("Q(u0)K(u0) < Q(psi)K(psi)", d.Q * d.K, th.QK_star, rtol)
        w = [qe_lt, qk_gt, qk_lt]
        if qe_lt.holds and qk_gt.holds:
            verdict = Verdict.BLOWUP
        elif qe_lt.holds and qk_lt.holds:
            verdict = Verdict.GLOBAL
        else:
            verdict = Verdict.INDETERMINATE
    else:
        e_lt = _less("E(u0) < E(psi)", d.E, th.E_star, rtol)
        k_gt = _greater("K(u0) > K(psi)", d.K, th.K_star, rtol)
        w = [e_lt, k_gt]
        verdict = Verdict.BLOWUP if e_lt.holds and k_gt.holds else Verdict.INDETERMINATE
    return Classification(verdict, th, w, details={"u0": {"Q": d.Q, "E": d.E, "K": d.K, "T": d.T}})


def confirm(cls: Classification, result) -> Classification:
    """Attach an evolve() outcome and whether it agrees with the a priori verdict."""
    ev = result.verdict.value
    cls.evolve_verdict = ev
    if cls.verdict is Verdict.BLOWUP:
        cls.agreement = ev == "BlowupDetected"
    elif cls.verdict is Verdict.GLOBAL:
        cls.agreement = ev == "Completed"
    else:
        cls.agreement = None
    cls.details["evolution"] = result.summary()
    return cls


@dataclass
class TMonitor:
    min_T: float
    max_T: float
    sign_definite: bool
    delta0: float | None

    def to_dict(self) -> dict:
        return {"min_T": self.min_T, "max_T": self.max_T, "sign_definite": self.sign_definite,
                "delta0": self.delta0}


def monitor_T(records) -> TMonitor:
    """Track the Pohozaev functional along a run; negative throughout means sign-definite."""
    T = np.array([r.T for r in records], dtype=float)
    mx = float(np.max(T))
    neg = mx < 0
    return TMonitor(float(np.min(T)), mx, bool(neg), abs(mx) if neg else None)
