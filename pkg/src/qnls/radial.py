"""Cell-centred radial grid on [0, r_max] for radially symmetric fields in R^n.

Nodes sit at r_i = (i + 1/2) h.  The Laplacian is written in flux form,

    (Lap u)_i = [rho_{i+1/2}(u_{i+1} - u_i) - rho_{i-1/2}(u_i - u_{i-1})] / (r_i^{n-1} h^2),

with face coefficients rho chosen so the stencil is symmetric for the
quadrature weights w_i = s_n r_i^{n-1} h and reproduces Lap r^2 = 2n exactly.
At the first cell this coincides with the reflected stencil (ghost u_{-1} = u_0);
beyond r_max the field is zero.
"""
from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass
from math import gamma as _gamma, pi
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded

from .nonlinearity.systems import MAX_DIMENSION, ConfigError

DEFAULT_M = 4096
DEFAULT_RMAX = 40.0
DECAY_TOL = 1e-8


class DecayWarning(UserWarning):
    """Field has not decayed near the outer boundary."""


class SingularSystemError(RuntimeError):
    pass


def sphere_area(n: int) -> float:
    """Surface area of the unit sphere in R^n (2 for n = 1)."""
    return 2 * pi ** (n / 2) / _gamma(n / 2)


class RadialGrid:
    def __init__(self, n: int, M: int = DEFAULT_M, r_max: float = DEFAULT_RMAX):
        if not isinstance(n, (int, np.integer)) or not 1 <= n <= MAX_DIMENSION:
            raise ConfigError(f"dimension out of supported range: n={n} (allowed 1..{MAX_DIMENSION})")
        if M < 4 or r_max <= 0:
            raise ConfigError("grid needs M >= 4 and r_max > 0")
        self.n = int(n)
        self.M = int(M)
        self.r_max = float(r_max)
        self.h = self.r_max / self.M
        self.s_n = sphere_area(self.n)
        self.r = (np.arange(self.M) + 0.5) * self.h
        self.w = self.s_n * self.r ** (self.n - 1) * self.h
        # face i sits between node i and node i+1; the last face is r_max
        self.r_face = (np.arange(self.M) + 1.0) * self.h
        self.rho = self.n * np.cumsum(self.r ** (self.n - 1) * self.h) / self.r_face
        rn1 = self.r ** (self.n - 1)
        self._up = self.rho / (rn1 * self.h ** 2)
        self._lo = np.zeros(self.M)
        self._lo[1:] = self.rho[:-1] / (rn1[1:] * self.h ** 2)

    def __repr__(self):
        return f"RadialGrid(n={self.n}, M={self.M}, r_max={self.r_max})"

    def __eq__(self, other):
        return (isinstance(other, RadialGrid) and self.n == other.n and self.M == other.M
                and self.r_max == other.r_max)

    def __hash__(self):
        return hash((self.n, self.M, self.r_max))

    # quadrature
    def integrate(self, g) -> np.ndarray:
        """Integral over R^n of radial samples g (last axis)."""
        return np.sum(np.asarray(g) * self.w, axis=-1)

    def inner(self, u, v) -> np.ndarray:
        """<u, v> = integral of u conj(v)."""
        return self.integrate(np.asarray(u) * np.conj(v))

    def norm_sq(self, u) -> np.ndarray:
        return self.integrate(np.abs(u) ** 2)

    def face_diff(self, u) -> np.ndarray:
        """u_{i+1} - u_i across every face, with zero beyond r_max."""
        u = np.asarray(u)
        d = np.empty_like(u)
        d[..., :-1] = u[..., 1:] - u[..., :-1]
        d[..., -1] = -u[..., -1]
        return d

    def grad_sq(self, u) -> np.ndarray:
        """Integral of |du/dr|^2 over R^n; equals -<Lap u, u> exactly."""
        d = self.face_diff(u)
        return self.s_n * np.sum(self.rho * np.abs(d) ** 2, axis=-1) / self.h

    # operators
    def laplacian(self, u) -> np.ndarray:
        u = np.asarray(u)
        out = -(self._up + self._lo) * u
        out[..., :-1] += self._up[:-1] * u[..., 1:]
        out[..., 1:] += self._lo[1:] * u[..., :-1]
        return out

    def laplacian_bands(self) -> np.ndarray:
        """Laplacian in the (1, 1) banded layout used by scipy.linalg.solve_banded."""
        ab = np.zeros((3, self.M))
        ab[0, 1:] = self._up[:-1]
        ab[1] = -(self._up + self._lo)
        ab[2, :-1] = self._lo[1:]
        return ab

    def helmholtz_bands(self, gamma: float, c) -> np.ndarray:
        ab = -gamma * self.laplacian_bands()
        ab[1] += c
        return ab

    def helmholtz_solve(self, gamma: float, c: float, rhs) -> np.ndarray:
        """Solve (-gamma Lap + c) u = rhs along the last axis."""
        if gamma <= 0:
            raise ValueError("gamma must be positive")
        if c < 0:
            raise ValueError("negative shift c: operator may be singular")
        ab = self.helmholtz_bands(gamma, c)
        rhs = np.asarray(rhs)
        try:
            u = solve_banded((1, 1), ab, rhs.T, check_finite=True).T
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise SingularSystemError(f"Helmholtz solve failed: {exc}") from None
        if not np.all(np.isfinite(u)):
            raise SingularSystemError("Helmholtz solve produced non-finite values")
        return u

    def resample(self, u, s) -> np.ndarray:
        """Values of u at radii s by even cubic-spline interpolation; zero beyond r_max."""
        u = np.atleast_2d(np.asarray(u))
        x = np.concatenate([-self.r[::-1], self.r, [self.r_max + 0.5 * self.h]])
        s = np.asarray(s, dtype=float)
        inside = s <= self.r_max
        out = np.zeros(u.shape[:-1] + s.shape, dtype=u.dtype)
        for idx in np.ndindex(u.shape[:-1]):
            row = u[idx]
            cs = CubicSpline(x, np.concatenate([row[::-1], row, [0.0]]))
            out[idx] = np.where(inside, cs(np.where(inside, s, 0.0)), 0.0)
        return out

    def dilate(self, u, lam: float) -> np.ndarray:
        """lam^2 u(lam r), the scaling that leaves K and P unchanged in R^6."""
        return lam ** 2 * self.resample(u, lam * self.r)

    def cumulative(self, g) -> tuple[np.ndarray, np.ndarray]:
        """Face radii (starting at 0) and the running integral of g up to each face."""
        faces = np.concatenate([[0.0], self.r_face])
        return faces, np.concatenate([[0.0], np.cumsum(np.asarray(g) * self.w)])

    def tail_ratio(self, u) -> float:
        """max |u| over r >= 0.95 r_max relative to max |u|."""
        a = np.abs(np.asarray(u))
        peak = a.max()
        if peak == 0:
            return 0.0
        return float(a[..., self.r >= 0.95 * self.r_max].max() / peak)

    def check_decay(self, u, tol: float = DECAY_TOL) -> bool:
        ratio = self.tail_ratio(u)
        if ratio > tol:
            warnings.warn(f"field not decayed at 0.95 r_max: tail ratio {ratio:.3g} > {tol:g}",
                          DecayWarning, stacklevel=2)
            return False
        return True


_MAGIC = b"QNLSRAD1"


@dataclass
class RadialField:
    """l complex components sampled on a radial grid; ``data`` has shape (l, M)."""

    grid: RadialGrid
    data: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.data, dtype=complex)
        if d.ndim == 1:
            d = d[None, :]
        if d.shape[-1] != self.grid.M:
            raise ValueError(f"data has {d.shape[-1]} samples, grid has {self.grid.M}")
        self.data = d

    @property
    def l(self) -> int:
        return self.data.shape[0]

    def copy(self) -> "RadialField":
        return RadialField(self.grid, self.data.copy())

    def __mul__(self, s):
        return RadialField(self.grid, self.data * s)

    __rmul__ = __mul__

    def to_csv(self, path: str | Path) -> None:
        cols = [self.grid.r]
        header = ["r"]
        for k in range(self.l):
            cols += [self.data[k].real, self.data[k].imag]
            header += [f"re_{k + 1}", f"im_{k + 1}"]
        np.savetxt(path, np.column_stack(cols), delimiter=",", header=",".join(header),
                   comments="", fmt="%.17g")

    @classmethod
    def from_csv(cls, path: str | Path, n: int, r_max: float | None = None) -> "RadialField":
        arr = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        r = arr[:, 0]
        M = len(r)
        h = 2 * r[0]
        grid = RadialGrid(n, M, r_max if r_max is not None else M * h)
        data = arr[:, 1::2] + 1j * arr[:, 2::2]
        return cls(grid, data.T)

    def to_binary(self, path: str | Path) -> None:
        g = self.grid
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<iiid", g.n, self.l, g.M, g.r_max))
            fh.write(g.r.astype("<f8").tobytes())
            for k in range(self.l):
                fh.write(self.data[k].real.astype("<f8").tobytes())
                fh.write(self.data[k].imag.astype("<f8").tobytes())

    @classmethod
    def from_binary(cls, path: str | Path) -> "RadialField":
        raw = Path(path).read_bytes()
        if raw[:8] != _MAGIC:
            raise ValueError(f"{path}: not a radial field file")
        n, l, M, r_max = struct.unpack("<iiid", raw[8:28])
        arr = np.frombuffer(raw[28:], dtype="<f8")
        if arr.size != M * (1 + 2 * l):
            raise ValueError(f"{path}: truncated payload")
        arr = arr.reshape(1 + 2 * l, M)
        data = arr[1::2] + 1j * arr[2::2]
        return cls(RadialGrid(n, M, r_max), data)
