"""Conserved quantities, action and Pohozaev-type functionals on radial fields."""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from math import nan

import numpy as np

from .radial import RadialField


def _sigma(nl, sigma=None) -> np.ndarray:
    s = nl.sigma if sigma is None else sigma
    if s is None:
        raise ValueError("no charge weights sigma available for this nonlinearity")
    return np.array([float(x) for x in s])


def component_norms(field: RadialField) -> np.ndarray:
    return field.grid.norm_sq(field.data).real


def component_gradients(field: RadialField) -> np.ndarray:
    return field.grid.grad_sq(field.data).real


def charge(field: RadialField, params, nl, sigma=None) -> float:
    """Q = sum_k (alpha_k sigma_k / 2) ||u_k||^2."""
    s = _sigma(nl, sigma)
    return float(np.sum(np.array(params.alpha) * s / 2 * component_norms(field)))


def kinetic(field: RadialField, params) -> float:
    """K = sum_k gamma_k ||grad u_k||^2."""
    return float(np.sum(np.array(params.gamma) * component_gradients(field)))


def potential(field: RadialField, nl) -> float:
    """P = Re integral of F(u)."""
    return float(field.grid.integrate(nl.F(field.data).real))


def mass_term(field: RadialField, params) -> float:
    """L = sum_k beta_k ||u_k||^2."""
    return float(np.sum(np.array(params.beta) * component_norms(field)))


def energy(field: RadialField, params, nl) -> float:
    """E = K + L - 2P."""
    return kinetic(field, params) + mass_term(field, params) - 2 * potential(field, nl)


def helmholtz_quadratic(field: RadialField, params, nl, sigma=None) -> float:
    """sum_k (sigma_k alpha_k omega / 2 + beta_k) ||u_k||^2."""
    c = params.helmholtz_shift(_sigma(nl, sigma))
    return float(np.sum(c * component_norms(field)))


def action(field: RadialField, params, nl, sigma=None) -> float:
    """I = (K + Qfunc)/2 - P."""
    return 0.5 * (kinetic(field, params) + helmholtz_quadratic(field, params, nl, sigma)) - potential(field, nl)


def pohozaev_T(field: RadialField, params, nl, n: int | None = None) -> float:
    """T_n = K - (n/2) P."""
    n = field.grid.n if n is None else n
    return kinetic(field, params) - 0.5 * n * potential(field, nl)


def weinstein_J(field: RadialField, params, nl) -> float:
    """J = K^{3/2} / P, defined for P > 0."""
    P = potential(field, nl)
    if P <= 0:
        raise ValueError("J undefined: P(u) <= 0")
    return kinetic(field, params) ** 1.5 / P


def critical_energy(field: RadialField, params, nl) -> float:
    """K - 2P."""
    return kinetic(field, params) - 2 * potential(field, nl)


def gn_quotient(field: RadialField, params, nl, sigma=None) -> float:
    """P / (Qfunc^{(6-n)/4} K^{n/4})."""
    n = field.grid.n
    K = kinetic(field, params)
    Qf = helmholtz_quadratic(field, params, nl, sigma)
    P = potential(field, nl)
    if K <= 0 or (n < 6 and Qf <= 0):
        raise ValueError("quotient undefined for vanishing field")
    den = K ** (n / 4) * (Qf ** ((6 - n) / 4) if n < 6 else 1.0)
    return P / den


def sharp_constant(ground_state: RadialField, params, nl, sigma=None) -> float:
    """Optimal Gagliardo-Nirenberg constant computed from a ground state.

    C_n = 2 (6-n)^{(n-4)/4} n^{-n/4} Qfunc(psi)^{-1/2} for n <= 5, and
    C_6 = 3^{-3/2} (K - 2P)(psi)^{-1/2}.
    """
    n = ground_state.grid.n
    if n == 6:
        return 3 ** -1.5 * critical_energy(ground_state, params, nl) ** -0.5
    Qf = helmholtz_quadratic(ground_state, params, nl, sigma)
    return 2 * (6 - n) ** ((n - 4) / 4) * n ** (-n / 4) * Qf ** -0.5


@dataclass
class DiagnosticsRecord:
    t: float
    Q: float
    E: float
    K: float
    P: float
    L: float
    Qfunc: float
    I: float
    T: float
    J: float
    Ecrit: float

    CSV_HEADER = "t,Q,E,K,P,L,Qfunc,I,T,J,Ecrit"

    def csv_row(self) -> str:
        return ",".join("" if v != v else f"{v:.17g}" for v in asdict(self).values())

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


def diagnostics(field: RadialField, params, nl, t: float = 0.0, sigma=None) -> DiagnosticsRecord:
    """All functionals of ``field`` in one pass."""
    g = field.grid
    norms = component_norms(field)
    grads = component_gradients(field)
    s = _sigma(nl, sigma)
    K = float(np.sum(np.array(params.gamma) * grads))
    P = float(g.integrate(nl.F(field.data).real))
    L = float(np.sum(np.array(params.beta) * norms))
    Q = float(np.sum(np.array(params.alpha) * s / 2 * norms))
    Qf = float(np.sum(params.helmholtz_shift(s) * norms))
    J = K ** 1.5 / P if P > 0 else nan
    return DiagnosticsRecord(t=t, Q=Q, E=K + L - 2 * P, K=K, P=P, L=L, Qfunc=Qf,
                             I=0.5 * (K + Qf) - P, T=K - 0.5 * g.n * P, J=J, Ecrit=K - 2 * P)
