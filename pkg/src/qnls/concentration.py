"""Concentration diagnostics for radial fields in the critical dimension.

Centres are fixed at the origin: for radial fields with radially
non-increasing F(|u|) the origin realises the supremum over centres, and
profiles for which that fails are flagged rather than searched.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import exp, log, pi, sqrt

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from . import functionals as fn
from .ground_state import ScalingError, scaling_transform
from .radial import RadialField, RadialGrid

OMEGA6 = pi ** 3  # area of the unit sphere in R^6


def _density(field: RadialField, nl) -> np.ndarray:
    return nl.F_real(np.abs(field.data))


class ConcentrationProfile:
    """Q(R) = integral over B(0, R) of F(|u|), monotone-interpolated between cell faces."""

    def __init__(self, field: RadialField, nl):
        g = field.grid
        self.grid = g
        dens = _density(field, nl)
        self.faces, cum = g.cumulative(dens)
        self.total = float(cum[-1])
        # midpoint sums are O(h^2) off at interior faces; the Euler-Maclaurin
        # end term (h^2/24) G' with G = F s_n r^{n-1} lifts them to O(h^4)
        G = np.concatenate([dens * g.w / g.h, [0.0]])
        corr = np.zeros_like(cum)
        corr[1:] = (g.h / 24) * (G[1:] - G[:-1])
        if g.n == 2:
            corr[1:] -= (g.h ** 2 / 24) * g.s_n * dens[0]  # G'(0) = 2 pi F(0)
        corr[-1] = 0.0
        self.cum = np.maximum.accumulate(np.maximum(cum + corr, 0.0))
        self.nonnegative = bool(np.all(dens >= 0))
        self.radially_monotone = bool(np.all(np.diff(dens) <= 1e-14 * max(np.max(np.abs(dens)), 1e-300)))
        self._interp = PchipInterpolator(self.faces, self.cum, extrapolate=False)

    def __call__(self, R):
        R = np.asarray(R, dtype=float)
        out = self._interp(np.clip(R, 0.0, self.grid.r_max))
        return np.where(R <= 0, 0.0, out) if out.ndim else (0.0 if R <= 0 else float(out))

    def radius_at(self, level: float) -> float:
        """Smallest R with Q(R) = level (0 < level < total)."""
        if not 0 < level < self.total:
            raise ValueError("level must lie strictly between 0 and the total")
        return float(brentq(lambda s: self(s) - level, 0.0, self.grid.r_max, xtol=1e-14, rtol=1e-15))

    def to_csv(self, path, radii=None) -> None:
        R = self.faces if radii is None else np.asarray(radii, dtype=float)
        np.savetxt(path, np.column_stack([R, self(R)]), delimiter=",", header="R,Q", comments="",
                   fmt="%.17g")


def concentration_Q(field: RadialField, nl, R):
    """Integral of F(|u|) over the ball B(0, R)."""
    return ConcentrationProfile(field, nl)(R)


@dataclass
class Rescaling:
    R_m: float
    amplitude: float
    rescaled: RadialField
    level: float
    radially_monotone: bool

    def to_dict(self) -> dict:
        return {"R_m": self.R_m, "amplitude": self.amplitude, "level": self.level,
                "radially_monotone": self.radially_monotone}


def half_concentration_rescale(field: RadialField, nl, normalize: bool = True, guard: float = 0.01) -> Rescaling:
    """Find R_m so that v = R_m^{-2} u(x / R_m) has half of its F-mass in the unit ball.

    With ``normalize`` the field is first multiplied by P(|u|)^{-1/3} so that
    P = 1; that amplitude factor is returned.  Since Q_v(1) = Q_u(1 / R_m)
    in R^6, R_m is the reciprocal of the half-level radius of u.
    """
    if field.grid.n != 6:
        raise ValueError("half-concentration rescaling is defined in dimension 6")
    prof = ConcentrationProfile(field, nl)
    if prof.total <= 0:
        raise ValueError("P(|u|) must be positive")
    amp = prof.total ** (-1 / 3) if normalize else 1.0
    u = field * amp if normalize else field
    prof = ConcentrationProfile(u, nl)
    rho = prof.radius_at(0.5 * prof.total)
    R_m = 1.0 / rho
    v = scaling_transform(u, R_m, nl, guard=guard)
    level = float(ConcentrationProfile(v, nl)(1.0))
    return Rescaling(R_m, amp, v, level, prof.radially_monotone)


class LogCutoff:
    """chi(y) = 1 on |y| <= r, log(|y|/R) / log(r/R) on r <= |y| <= R, 0 beyond."""

    def __init__(self, r: float, R: float):
        if not 0 < r < R:
            raise ValueError("need 0 < r < R")
        self.r, self.R = float(r), float(R)
        self.L = log(self.R / self.r)

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore"):
            mid = np.log(np.maximum(y, 1e-300) / self.R) / log(self.r / self.R)
        return np.where(y <= self.r, 1.0, np.where(y >= self.R, 0.0, mid))

    def grad(self, y):
        """|d chi / d|y||."""
        y = np.asarray(y, dtype=float)
        return np.where((y > self.r) & (y < self.R), 1.0 / (np.maximum(y, 1e-300) * self.L), 0.0)

    def grad6_exact(self) -> float:
        return OMEGA6 / self.L ** 5

    def grad6_quadrature(self, M: int = 32768) -> float:
        """Integral of |grad chi|^6 over R^6 from finite differences of the samples."""
        g = RadialGrid(6, M, 1.25 * self.R)
        d = g.face_diff(self(g.r)) / g.h
        return float(g.s_n * g.h * np.sum(g.rho * d ** 6))


def cutoff_Cdelta(delta: float, zeta: float) -> float:
    """C(delta) = exp(-(zeta / (sqrt(delta + 1) - 1))^{6/5})."""
    if delta <= 0 or zeta <= 0:
        raise ValueError("need delta > 0 and zeta > 0")
    return exp(-(zeta / (sqrt(delta + 1) - 1)) ** 1.2)


def bubble(r) -> np.ndarray:
    """24 / (1 + r^2)^2, the positive solution of -Lap W = W^2 in R^6."""
    return 24.0 / (1.0 + np.asarray(r) ** 2) ** 2


def scalar_sobolev_constant(grid: RadialGrid | None = None) -> float:
    """C in (int |u|^3)^{2/3} <= C int |grad u|^2, evaluated at the bubble on a grid."""
    g = grid or RadialGrid(6, 8192, 80.0)
    if g.n != 6:
        raise ValueError("the critical Sobolev constant is computed in dimension 6")
    # shift so the trial vanishes at the wall instead of jumping there
    W = np.maximum(bubble(g.r) - bubble(g.r_max), 0.0)
    return float(g.integrate(np.abs(W) ** 3) ** (2 / 3) / g.grad_sq(W))


def zeta_from_sobolev(C: float) -> float:
    """zeta = sqrt(C) omega_6^{1/6}."""
    return sqrt(C) * OMEGA6 ** (1 / 6)


def _partial_face_sum(g: RadialGrid, per_face: np.ndarray, a: float, b: float) -> float:
    """Sum of face contributions with a <= r_face <= b."""
    mask = (g.r_face >= a) & (g.r_face <= b)
    return float(np.sum(per_face[mask]))


@dataclass
class LocalSobolevReport:
    r: float
    R: float
    delta: float
    S: float
    zeta: float
    C_delta: float
    inner_lhs: float
    inner_rhs: float
    outer_lhs: float
    outer_rhs: float

    @property
    def inner_margin(self) -> float:
        return self.inner_rhs - self.inner_lhs

    @property
    def outer_margin(self) -> float:
        return self.outer_rhs - self.outer_lhs

    @property
    def passed(self) -> bool:
        return self.inner_margin >= 0 and self.outer_margin >= 0

    def to_dict(self) -> dict:
        return {"r": self.r, "R": self.R, "delta": self.delta, "S": self.S, "zeta": self.zeta,
                "C_delta": self.C_delta, "inner": {"lhs": self.inner_lhs, "rhs": self.inner_rhs,
                                                   "margin": self.inner_margin},
                "outer": {"lhs": self.outer_lhs, "rhs": self.outer_rhs, "margin": self.outer_margin},
                "passed": self.passed}


def localized_sobolev_check(field: RadialField, params, nl, r: float, R: float, delta: float,
                            S: float, zeta: float) -> LocalSobolevReport:
    """Check both localized Sobolev inequalities around the origin.

    inner: int_{B(0,r)} F <= S^{-3/2} [int_{B(0,R)} sum gamma |grad u|^2 + delta K]^{3/2}
    outer: int_{|x|>R} F <= S^{-3/2} [int_{|x|>r} sum gamma |grad u|^2 + (2 delta + delta^2) K]^{3/2}
    Requires r / R <= C(delta) for the given zeta.
    """
    Cd = cutoff_Cdelta(delta, zeta)
    if r / R > Cd:
        raise ValueError(f"r/R = {r / R:.6g} exceeds C(delta) = {Cd:.6g}")
    g = field.grid
    if g.n != 6:
        raise ValueError("localized Sobolev inequalities are stated in dimension 6")
    prof = ConcentrationProfile(field, nl)
    gam = np.array(params.gamma)
    d = g.face_diff(field.data)
    per_face = g.s_n * g.rho * np.sum(gam[:, None] * np.abs(d) ** 2, axis=0) / g.h
    K = float(np.sum(per_face))
    inner_grad = _partial_face_sum(g, per_face, 0.0, R)
    outer_grad = _partial_face_sum(g, per_face, r, np.inf)
    c = S ** -1.5
    return LocalSobolevReport(
        r, R, delta, S, zeta, Cd,
        inner_lhs=float(prof(r)), inner_rhs=c * (inner_grad + delta * K) ** 1.5,
        outer_lhs=prof.total - float(prof(R)), outer_rhs=c * (outer_grad + (2 * delta + delta ** 2) * K) ** 1.5)


@dataclass
class SEstimate:
    S: float
    method: str
    S_from_constant: float | None = None
    trial_min: float | None = None

    def to_dict(self) -> dict:
        return {"S": self.S, "method": self.method, "S_from_constant": self.S_from_constant,
                "trial_min": self.trial_min}


def sobolev_quotient(field: RadialField, params, nl) -> float:
    """K(v) for v = P(u)^{-1/3} u, i.e. K(u) P(u)^{-2/3}."""
    P = fn.potential(field, nl)
    if P <= 0:
        raise ValueError("quotient needs P > 0")
    lam = P ** (-1 / 3)
    return lam ** 2 * fn.kinetic(field, params)


def estimate_S(params, nl, ground_state: RadialField | None = None, trials=()) -> SEstimate:
    """Best constant S = inf {K(u) : P(u) = 1} in R^6.

    From a ground state both K(psi P^{-1/3}) and (C_6)^{-2/3} are reported.
    Trials alone give an upper bound flagged "trial-based".
    """
    qs = []
    for t in trials:
        if fn.potential(t, nl) > 0:
            qs.append(sobolev_quotient(t, params, nl))
    tmin = min(qs) if qs else None
    if ground_state is not None:
        if ground_state.grid.n != 6:
            raise ValueError("S is defined in dimension 6")
        S = sobolev_quotient(ground_state, params, nl)
        C6 = fn.sharp_constant(ground_state, params, nl)
        return SEstimate(S, "ground-state", C6 ** (-2 / 3), tmin)
    if tmin is None:
        raise ValueError("no trial field with P > 0")
    return SEstimate(tmin, "trial-based", None, tmin)
