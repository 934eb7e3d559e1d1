"""The truncated (N+q) x (N+1) banded recurrence matrix and its shift basis.

Row n of the Taylor recurrence reads

    sum_k A_n^{(k)} h_{n-k} + B_n h_n + C_n h_{n+1} = 0,

with the plet g_0..g_{q-1} entering through one-diagonal 0/1 matrices
J_1..J_q: the full operator is H - sum_xi g_{xi-1} J_xi.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import QuasiExactModel


@dataclass(frozen=True)
class ShiftBasis:
    q: int
    N: int
    J: tuple[np.ndarray, ...]

    @classmethod
    def build(cls, q: int, N: int) -> "ShiftBasis":
        mats = []
        for xi in range(1, q + 1):
            J = np.zeros((N + q, N + 1))
            cols = np.arange(N + 1)
            J[cols + xi - 1, cols] = 1.0
            mats.append(J)
        return cls(q, N, tuple(mats))

    def combine(self, plet: Sequence[float]) -> np.ndarray:
        """S = sum_xi g_{xi-1} J_xi."""
        plet = np.asarray(plet, dtype=float)
        if plet.shape != (self.q,):
            raise ValueError(f"plet must have length {self.q}, got {plet.shape}")
        S = np.zeros((self.N + self.q, self.N + 1))
        for g, J in zip(plet, self.J):
            S += g * J
        return S

    def __iter__(self):
        return iter(self.J)

    def __len__(self):
        return len(self.J)


@dataclass(frozen=True)
class EigenPlet:
    """The generalized eigenvalue (g_0, ..., g_{q-1})."""

    g: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "g", tuple(float(v) for v in self.g))

    @property
    def energy(self) -> float:
        if not self.g:
            raise ValueError("an empty plet carries no energy")
        return -self.g[0]

    def __len__(self):
        return len(self.g)

    def __iter__(self):
        return iter(self.g)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.g, dtype=dtype)


@dataclass(frozen=True)
class WaveVector:
    """Taylor coefficients h_0..h_N normalized to h_N = 1."""

    h: tuple[float, ...]

    def __post_init__(self):
        h = tuple(float(v) for v in self.h)
        if not h:
            raise ValueError("empty wave vector")
        if h[-1] != 1.0:
            raise ValueError(f"wave vector must be normalized to h_N = 1, got {h[-1]}")
        object.__setattr__(self, "h", h)

    @classmethod
    def normalized(cls, h) -> "WaveVector":
        h = np.asarray(h, dtype=float)
        if h[-1] == 0:
            raise ValueError("cannot normalize a wave vector with h_N = 0")
        h = h / h[-1]
        h[-1] = 1.0
        return cls(tuple(h))

    def __len__(self):
        return len(self.h)

    def __iter__(self):
        return iter(self.h)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.h, dtype=dtype)


@dataclass(frozen=True)
class MagyariSystem:
    model: QuasiExactModel
    H: np.ndarray
    shifts: ShiftBasis

    @property
    def q(self) -> int:
        return self.model.q

    @property
    def N(self) -> int:
        return self.model.N

    @property
    def shape(self) -> tuple[int, int]:
        return self.H.shape


def element(model: QuasiExactModel, n: int, k: int) -> float:
    """g-free part of the coefficient of h_{n-k} in recurrence row n.

    k = -1 is C_n, k = 0 is the f-part of B_n, 1 <= k <= q the f-part of
    A_n^{(k)}. For k = q the truncation coupling is already subtracted.
    """
    f, p, q = model.f, model.p, model.q
    if k == -1:
        return (2 * n + 2) * (2 * n + 2 * p + 1)
    cross = sum(f[j] * f[k - 1 - j] for j in range(k))
    value = -f[k] * (4 * n + 2 * p + 1 - 2 * k) + cross
    if k == q:
        value -= model.g_q
    return value


def build_system(model: QuasiExactModel) -> MagyariSystem:
    q, N = model.q, model.N
    H = np.zeros((N + q, N + 1))
    for n in range(N + q):
        for k in range(-1, q + 1):
            m = n - k
            if 0 <= m <= N:
                H[n, m] = element(model, n, k)
    H.setflags(write=False)
    return MagyariSystem(model, H, ShiftBasis.build(q, N))


def apply(system: MagyariSystem, plet) -> np.ndarray:
    """H - S(plet)."""
    return system.H - system.shifts.combine(np.asarray(plet, dtype=float))


def residual(system: MagyariSystem, plet, wave) -> np.ndarray:
    """(H - S(plet)) h; vanishes for a quasi-exact solution."""
    return apply(system, plet) @ np.asarray(wave, dtype=float)


def scaled_residual_norm(A: np.ndarray, h: np.ndarray) -> np.ndarray:
    """max_i |(A h)_i| / max(1, max_i sum_j |A_ij h_j|).

    Equals the plain max-abs residual whenever the row terms are O(1), and
    stays meaningful when large p or large N push the terms far above 1.
    Broadcasts over leading batch axes.
    """
    r = np.einsum("...ij,...j->...i", A, h)
    terms = np.einsum("...ij,...j->...i", np.abs(A), np.abs(h))
    scale = np.maximum(1.0, np.max(terms, axis=-1, initial=0.0))
    return np.max(np.abs(r), axis=-1, initial=0.0) / scale
