"""System parameters, evaluable nonlinearities and the built-in systems."""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path

import numpy as np

from .parser import parse_poly
from .polynomial import InteractionPoly, to_fraction
from .structure import build_fk, solve_sigma

MAX_DIMENSION = 6


class ConfigError(ValueError):
    """Invalid system or run configuration."""


@dataclass(frozen=True)
class SystemParams:
    """Coefficients of i alpha_k u_t + gamma_k Lap u - beta_k u + f_k(u) = 0 in R^n.

    ``omega`` is the standing-wave frequency used by ground-state solves.
    """

    n: int
    alpha: tuple[float, ...]
    gamma: tuple[float, ...]
    beta: tuple[float, ...]
    omega: float = 1.0

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or not 1 <= self.n <= MAX_DIMENSION:
            raise ConfigError(f"dimension out of supported range: n={self.n} (allowed 1..{MAX_DIMENSION})")
        a, g, b = (tuple(float(x) for x in v) for v in (self.alpha, self.gamma, self.beta))
        if not (len(a) == len(g) == len(b)) or not a:
            raise ConfigError("alpha, gamma and beta must have the same positive length")
        if min(a) <= 0 or min(g) <= 0:
            raise ConfigError("alpha and gamma must be positive")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "beta", b)
        object.__setattr__(self, "omega", float(self.omega))

    @property
    def l(self) -> int:
        return len(self.alpha)

    @property
    def masses(self) -> np.ndarray:
        """m_k = alpha_k / (2 gamma_k)."""
        return np.array(self.alpha) / (2 * np.array(self.gamma))

    def helmholtz_shift(self, sigma) -> np.ndarray:
        """c_k = sigma_k alpha_k omega / 2 + beta_k."""
        s = np.array([float(x) for x in sigma])
        return s * np.array(self.alpha) * self.omega / 2 + np.array(self.beta)

    def with_(self, **kw) -> "SystemParams":
        return replace(self, **kw)


class DerivedNonlinearity:
    """f_k obtained from a degree-3 interaction polynomial F."""

    def __init__(self, F: InteractionPoly, sigma=None, name: str = "custom"):
        self.poly = F
        self.l = F.l
        self.name = name
        self.components = build_fk(F)
        if sigma is None:
            sol = solve_sigma(self.components)
            sigma = sol.sigma
        self.sigma = None if sigma is None else tuple(to_fraction(s) for s in sigma)
        self._real = [self._compile_real(f) for f in self.components]
        self._real_F = self._compile_real(F)
        self._complex = [self._compile(f) for f in self.components]
        self._complex_F = self._compile(F)

    @staticmethod
    def _compile(P: InteractionPoly):
        terms = []
        for (a, b), c in P.terms.items():
            factors = tuple((j, p, False) for j, p in enumerate(a) if p)
            factors += tuple((j, p, True) for j, p in enumerate(b) if p)
            terms.append((complex(c), factors))
        return terms

    @staticmethod
    def _eval_compiled(terms, z, zc, cache):
        acc = None
        for c, factors in terms:
            t = None
            for key in factors:
                if key not in cache:
                    j, p, cj = key
                    base = zc[j] if cj else z[j]
                    cache[key] = base if p == 1 else base ** p
                t = cache[key] if t is None else t * cache[key]
            t = c * t if t is not None else np.full(z.shape[1:], c)
            acc = t if acc is None else acc + t
        return np.zeros(z.shape[1:], dtype=complex) if acc is None else acc

    @staticmethod
    def _compile_real(P: InteractionPoly):
        return [(float(c.re), e) for e, c in P.restrict_real().items()]

    @staticmethod
    def _eval_real(terms, y):
        out = np.zeros(y.shape[1:])
        for c, e in terms:
            t = c
            for j, p in enumerate(e):
                if p:
                    t = t * (y[j] if p == 1 else y[j] ** p)
            out = out + t
        return out

    def F(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return self._eval_compiled(self._complex_F, z, np.conj(z), {})

    def f(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        zc = np.conj(z)
        cache: dict = {}
        out = np.empty_like(z)
        for k, terms in enumerate(self._complex):
            out[k] = self._eval_compiled(terms, z, zc, cache)
        return out

    def F_real(self, y) -> np.ndarray:
        """Real part of F on real arguments (fast path)."""
        return self._eval_real(self._real_F, np.asarray(y, dtype=float))

    def f_real(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        return np.stack([self._eval_real(t, y) for t in self._real])

    def __repr__(self):
        return f"DerivedNonlinearity({self.name}: F = {self.poly.pretty()})"


class ScalarCubic:
    """Scalar F(z) = |z|^3 with f(z) = 3|z| z; reference case with closed-form ground state at n = 1."""

    l = 1
    name = "scalar-cubic"
    poly = None
    sigma = (Fraction(1),)

    def F(self, z):
        z = np.asarray(z, dtype=complex)
        return (np.abs(z[0]) ** 3).astype(complex)

    def f(self, z):
        z = np.asarray(z, dtype=complex)
        return (3 * np.abs(z[0]) * z[0])[None, :]

    def F_real(self, y):
        return np.abs(np.asarray(y, dtype=float)[0]) ** 3

    def f_real(self, y):
        y = np.asarray(y, dtype=float)[0]
        return (3 * np.abs(y) * y)[None, :]

    def __repr__(self):
        return "ScalarCubic()"


BUILTINS = ("shg3", "thg", "kappa", "scalar-cubic")


def builtin(name: str, kappa: float | None = None, n: int = 3, omega: float | None = None,
            beta=None):
    """Return ``(nonlinearity, params)`` for a named system."""
    if name == "shg3":
        F = parse_poly("(1/2)*conj(z1)*(z2^2 + z3^2)", 3)
        alpha, gamma = (2, 1, 1), (1, 1, 1)
    elif name == "thg":
        F = parse_poly("(1/2)*z1^2*conj(z2) + z1*z2*conj(z3)", 3)
        alpha, gamma = (1, 2, 3), (1, 1, 1)
    elif name == "kappa":
        kappa = 0.5 if kappa is None else float(kappa)
        if kappa <= 0:
            raise ConfigError("kappa must be positive")
        F = parse_poly("conj(z1)^2*z2", 2)
        alpha, gamma = (1, 1), (1, kappa)
    elif name == "scalar-cubic":
        nl = ScalarCubic()
        params = SystemParams(n, (1.0,), (1.0,), tuple(beta or (0.0,)), 2.0 if omega is None else omega)
        return nl, params
    else:
        raise ConfigError(f"unknown builtin {name!r}; choose one of {', '.join(BUILTINS)}")
    l = F.l
    beta = (0.0,) * l if beta is None else tuple(beta)
    if len(beta) != l:
        raise ConfigError(f"beta must have {l} entries")
    params = SystemParams(n, alpha, gamma, beta, 1.0 if omega is None else omega)
    return DerivedNonlinearity(F, name=name), params


def system_from_dict(d: dict, n: int | None = None):
    """Build ``(nonlinearity, params)`` from a JSON-style description.

    Either ``{"builtin": name, "kappa": ...}`` or
    ``{"l": 2, "F": "...", "alpha": [...], "gamma": [...], "beta": [...], "omega": 1, "sigma": [...]}``.
    """
    d = dict(d)
    n = int(d.get("n", 3) if n is None else n)
    if "builtin" in d:
        return builtin(d["builtin"], kappa=d.get("kappa"), n=n, omega=d.get("omega"), beta=d.get("beta"))
    try:
        l = int(d["l"])
        F = parse_poly(str(d["F"]), l)
        alpha = d["alpha"]
        gamma = d["gamma"]
    except KeyError as exc:
        raise ConfigError(f"missing key {exc.args[0]!r} in system description") from None
    beta = d.get("beta", [0.0] * l)
    for key, v in (("alpha", alpha), ("gamma", gamma), ("beta", beta)):
        if len(v) != l:
            raise ConfigError(f"{key} must have {l} entries")
    sigma = d.get("sigma")
    nl = DerivedNonlinearity(F, sigma=sigma, name=d.get("name", "custom"))
    return nl, SystemParams(n, alpha, gamma, beta, d.get("omega", 1.0))


def load_system(path: str | Path, n: int | None = None):
    with open(path) as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return system_from_dict(d, n=n)
