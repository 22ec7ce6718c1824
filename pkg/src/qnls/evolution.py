"""Strang-split time stepping for i alpha_k u_t + gamma_k Lap u - beta_k u + f_k(u) = 0.

Each step is a linear half step (Crank-Nicolson, unitary for the grid's
weighted inner product), a nonlinear full step i alpha_k u' = -f_k(u) solved
pointwise by RK4, and a second linear half step.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.linalg import get_lapack_funcs

from . import functionals as fn
from .radial import RadialField, RadialGrid


class Verdict(str, enum.Enum):
    COMPLETED = "Completed"
    BLOWUP = "BlowupDetected"
    RESOLUTION_LOST = "ResolutionLost"


@dataclass
class EvolutionConfig:
    dt: float = 1e-3
    T: float = 1.0
    record_every: int = 10
    nonlinear_substeps: int = 4
    blowup_factor: float = 1e6      # K(t) > blowup_factor * K(0) flags blow-up
    energy_step_tol: float = 1e-8   # per-step energy change allowed before halving dt
    max_halvings: int = 5
    tail_tol: float = 1e-4
    adaptive: bool = True
    check_invariant: bool = False

    def __post_init__(self):
        if self.dt <= 0 or self.T < 0:
            raise ValueError("need dt > 0 and T >= 0")
        if self.record_every < 1 or self.nonlinear_substeps < 1:
            raise ValueError("record_every and nonlinear_substeps must be positive")


@dataclass
class EvolutionResult:
    verdict: Verdict
    t_final: float
    final: RadialField
    records: list[fn.DiagnosticsRecord]
    message: str = ""
    observables: dict[str, list[float]] = field(default_factory=dict)
    invariant_residual: float = 0.0
    halvings_used: int = 0

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    def drift(self, name: str) -> float:
        """max_t |X(t) - X(0)| / |X(0)| over the recorded times."""
        x = self.column(name)
        return float(np.max(np.abs(x - x[0])) / abs(x[0]))

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            fh.write(fn.DiagnosticsRecord.CSV_HEADER + "\n")
            for r in self.records:
                fh.write(r.csv_row() + "\n")

    def summary(self) -> dict:
        return {"verdict": self.verdict.value, "t_final": self.t_final, "message": self.message,
                "records": len(self.records), "invariant_residual": self.invariant_residual,
                "halvings_used": self.halvings_used}


class StrangStepper:
    """One Strang step of size dt on fields of shape (l, M)."""

    def __init__(self, grid: RadialGrid, params, nl, substeps: int = 4):
        self.grid = grid
        self.params = params
        self.nl = nl
        self.substeps = substeps
        self.alpha = np.array(params.alpha)
        self.gamma = np.array(params.gamma)
        self.beta = np.array(params.beta)
        self._lap = grid.laplacian_bands()
        self._cache: dict[float, list[tuple]] = {}
        self._gttrf, self._gttrs = get_lapack_funcs(("gttrf", "gttrs"), dtype=complex)

    def _cn_factors(self, tau: float) -> list[tuple]:
        # LU factors of (I - i tau/2 A_k) with A_k = (gamma_k Lap - beta_k) / alpha_k
        if tau not in self._cache:
            factors = []
            for a, g, b in zip(self.alpha, self.gamma, self.beta):
                A = g * self._lap.astype(complex)
                A[1] -= b
                A /= a
                ab = -0.5j * tau * A
                ab[1] += 1.0
                dl, d, du, du2, ipiv, info = self._gttrf(ab[2, :-1], ab[1], ab[0, 1:])
                if info != 0:
                    raise np.linalg.LinAlgError("singular Crank-Nicolson matrix")
                factors.append((dl, d, du, du2, ipiv))
            self._cache[tau] = factors
        return self._cache[tau]

    def linear(self, u: np.ndarray, tau: float) -> np.ndarray:
        """Crank-Nicolson step of exp(i tau (gamma Lap - beta) / alpha)."""
        factors = self._cn_factors(tau)
        out = np.empty_like(u)
        lap = self.grid.laplacian(u)
        for k in range(u.shape[0]):
            Au = (self.gamma[k] * lap[k] - self.beta[k] * u[k]) / self.alpha[k]
            out[k], info = self._gttrs(*factors[k], u[k] + 0.5j * tau * Au)
        return out

    def _rhs(self, u):
        return (1j / self.alpha)[:, None] * self.nl.f(u)

    def nonlinear(self, u: np.ndarray, tau: float) -> np.ndarray:
        """i alpha_k u' = -f_k(u) integrated pointwise by classical RK4."""
        h = tau / self.substeps
        for _ in range(self.substeps):
            k1 = self._rhs(u)
            k2 = self._rhs(u + 0.5 * h * k1)
            k3 = self._rhs(u + 0.5 * h * k2)
            k4 = self._rhs(u + h * k3)
            u = u + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        return u

    def step(self, u: np.ndarray, dt: float) -> np.ndarray:
        u = self.linear(u, 0.5 * dt)
        u = self.nonlinear(u, dt)
        return self.linear(u, 0.5 * dt)

    def energy(self, u: np.ndarray) -> tuple[float, float]:
        """Energy and a positive scale (K + |L| + 2|P|) for relative comparisons."""
        g = self.grid
        K = float(np.sum(self.gamma * g.grad_sq(u)))
        L = float(np.sum(self.beta * g.norm_sq(u).real))
        P = float(g.integrate(self.nl.F(u).real))
        return K + L - 2 * P, K + abs(L) + 2 * abs(P)


def charge_density(u: np.ndarray, params, sigma) -> np.ndarray:
    """Pointwise sum_k sigma_k alpha_k |u_k|^2, conserved by the nonlinear sub-flow."""
    s = np.array([float(x) for x in sigma])
    return np.sum((s * np.array(params.alpha))[:, None] * np.abs(u) ** 2, axis=0)


def evolve(u0: RadialField, params, nl, config: EvolutionConfig | None = None,
           observers: dict[str, Callable[[RadialField, float], float]] | None = None) -> EvolutionResult:
    """Integrate from u0 up to time T and classify how the run ended."""
    cfg = config or EvolutionConfig()
    grid = u0.grid
    if grid.n != params.n:
        raise ValueError("grid and system dimensions differ")
    stepper = StrangStepper(grid, params, nl, cfg.nonlinear_substeps)
    observers = observers or {}
    obs: dict[str, list[float]] = {name: [] for name in observers}

    u = u0.data.astype(complex).copy()
    records = []

    def record(t):
        f = RadialField(grid, u)
        records.append(fn.diagnostics(f, params, nl, t))
        for name, func in observers.items():
            obs[name].append(func(f, t))

    record(0.0)
    K0 = records[0].K
    E_prev, E_scale = stepper.energy(u)
    nsteps = int(round(cfg.T / cfg.dt))
    inv_res = 0.0
    max_halvings = 0
    verdict, msg = Verdict.COMPLETED, ""
    t = 0.0

    for step in range(1, nsteps + 1):
        accepted = None
        for j in range(cfg.max_halvings + 1 if cfg.adaptive else 1):
            sub = 2 ** j
            h = cfg.dt / sub
            v = u
            E_run = E_prev
            ok = True
            for _ in range(sub):
                if cfg.check_invariant:
                    w = stepper.linear(v, 0.5 * h)
                    q0 = charge_density(w, params, nl.sigma)
                    w = stepper.nonlinear(w, h)
                    q1 = charge_density(w, params, nl.sigma)
                    inv_res = max(inv_res, float(np.max(np.abs(q1 - q0)) / max(np.max(q0), 1e-300)))
                    v = stepper.linear(w, 0.5 * h)
                else:
                    v = stepper.step(v, h)
                if not np.all(np.isfinite(v)):
                    ok = False
                    break
                E_new, scale = stepper.energy(v)
                if cfg.adaptive and abs(E_new - E_run) > cfg.energy_step_tol * max(scale, E_scale):
                    ok = False
                    break
                E_run = E_new
            if ok:
                accepted = (v, E_run, j)
                break
            if not np.all(np.isfinite(v)):
                break
        t_try = step * cfg.dt
        if accepted is None:
            if not np.all(np.isfinite(v)):
                verdict, msg = Verdict.RESOLUTION_LOST, f"non-finite values near t = {t_try:.6g}"
            else:
                verdict = Verdict.BLOWUP
                msg = (f"energy change per step exceeds {cfg.energy_step_tol:g} after "
                       f"{cfg.max_halvings} halvings of dt near t = {t_try:.6g}")
            break
        u, E_prev, j = accepted
        max_halvings = max(max_halvings, j)
        t = t_try
        if step % cfg.record_every == 0 or step == nsteps:
            record(t)
            if records[-1].K > cfg.blowup_factor * K0:
                verdict, msg = Verdict.BLOWUP, f"K grew beyond {cfg.blowup_factor:g} K(0) at t = {t:.6g}"
                break
        if grid.tail_ratio(u) > cfg.tail_tol:
            if records[-1].t != t:
                record(t)
            verdict, msg = Verdict.RESOLUTION_LOST, f"field reached the outer boundary at t = {t:.6g}"
            break

    return EvolutionResult(verdict, t, RadialField(grid, u), records, msg, obs, inv_res, max_halvings)


def gaussian_data(grid: RadialGrid, amplitudes, width: float = 1.0, chirp: float = 0.0) -> RadialField:
    """u_k = a_k exp(-r^2 / width^2 + i chirp r^2)."""
    a = np.asarray(amplitudes, dtype=complex)[:, None]
    prof = np.exp(-(grid.r / width) ** 2 + 1j * chirp * grid.r ** 2)
    return RadialField(grid, a * prof[None, :])


def standing_wave_error(result: EvolutionResult, psi: RadialField) -> float:
    """|| |u(T)| - psi || / ||psi|| for a run started at a ground state psi."""
    g = psi.grid
    diff = np.abs(result.final.data) - np.abs(psi.data)
    return float(np.sqrt(np.sum(g.norm_sq(diff)) / np.sum(g.norm_sq(psi.data))))
