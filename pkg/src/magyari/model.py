"""Polynomial oscillators with a quasi-exact Taylor ansatz.

The potential is

    V(x) = g_1 x^2 + g_2 x^4 + ... + g_{2q+1} x^{4q+2},   g_{2q+1} > 0

and bound states are sought in the form

    psi(x) = exp(-P(x)) * sum_n h_n x^{2n+p},
    P(x)   = sum_{k=0}^{q} f_k x^{2k+2} / (2k+2).

The exponent coefficients ``f_k`` follow from matching [P'(x)]^2 to the
q+1 dominant couplings g_{q+1}..g_{2q+1}.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class ParityChannel:
    """Parity (or angular) channel; ``p`` may be a large real for large-l work."""

    p: float
    large_ell: bool = False

    def __post_init__(self):
        if self.large_ell:
            if not self.p > 0:
                raise ValueError(f"large-l channel needs p > 0, got {self.p}")
        elif self.p not in (0, 1):
            raise ValueError(f"physical parity must be 0 or 1, got {self.p}")

    @property
    def ell(self) -> float:
        return self.p - 1


@dataclass(frozen=True)
class WkbTail:
    """Coefficients f_0..f_q of the exponent polynomial P(x)."""

    f: tuple[float, ...]

    def __post_init__(self):
        f = tuple(float(v) for v in self.f)
        object.__setattr__(self, "f", f)
        if len(f) == 0:
            raise ValueError("tail needs at least f_0")
        if not f[-1] > 0:
            raise ValueError(f"leading exponent coefficient must be positive, got {f[-1]}")

    @property
    def q(self) -> int:
        return len(self.f) - 1

    def exponent(self, x):
        """P(x)."""
        x = np.asarray(x, dtype=float)
        return sum(fk * x ** (2 * k + 2) / (2 * k + 2) for k, fk in enumerate(self.f))


@dataclass(frozen=True)
class PotentialSpec:
    """Couplings g_1..g_{2q+1} (``couplings[0]`` is g_1)."""

    couplings: tuple[float, ...]

    def __post_init__(self):
        g = tuple(float(v) for v in self.couplings)
        object.__setattr__(self, "couplings", g)
        if len(g) % 2 != 1:
            raise ValueError("need an odd number 2q+1 of couplings g_1..g_{2q+1}")
        if not g[-1] > 0:
            raise ValueError(f"leading coupling must be positive, got {g[-1]}")

    @property
    def q(self) -> int:
        return (len(self.couplings) - 1) // 2

    def coupling(self, k: int) -> float:
        return self.couplings[k - 1]

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return sum(g * x ** (2 * k) for k, g in enumerate(self.couplings, start=1))


def _cross(f: Sequence[float], s: int) -> float:
    """sum_{j+k=s} f_j f_k over the available coefficients."""
    q = len(f) - 1
    return float(sum(f[j] * f[s - j] for j in range(max(0, s - q), min(s, q) + 1)))


def solve_wkb_tail(spec: PotentialSpec) -> WkbTail:
    """Match [P'(x)]^2 to the dominant couplings, descending from g_{2q+1}.

    Only g_{q+1}..g_{2q+1} are consumed; the subdominant couplings are free
    (or fixed later by the quasi-exact conditions).
    """
    q = spec.q
    lead = spec.coupling(2 * q + 1)
    if lead <= 0:
        raise ValueError(f"leading coupling must be positive, got {lead}")
    f = [0.0] * (q + 1)
    f[q] = float(np.sqrt(lead))
    for m in range(1, q + 1):
        partial = sum(f[q - j] * f[q - m + j] for j in range(1, m))
        f[q - m] = (spec.coupling(2 * q + 1 - m) - partial) / (2.0 * f[q])
    return WkbTail(tuple(f))


def tail_to_dominant(tail: WkbTail) -> tuple[float, ...]:
    """Dominant couplings (g_{q+1}, ..., g_{2q+1}) generated by the tail."""
    q = tail.q
    return tuple(_cross(tail.f, s) for s in range(q, 2 * q + 1))


def truncation_coupling(tail: WkbTail, N: int, channel: ParityChannel) -> float:
    """The coupling g_q that lets the Taylor series stop at degree N."""
    if N < 0:
        raise ValueError(f"N must be non-negative, got {N}")
    q, f = tail.q, tail.f
    return -f[q] * (4 * N + 2 * q + 2 * channel.p + 1) + _cross(f, q - 1)


@dataclass(frozen=True)
class QuasiExactModel:
    tail: WkbTail
    N: int
    channel: ParityChannel
    g_q: float = field(init=False)

    def __post_init__(self):
        if self.N < 0:
            raise ValueError(f"N must be non-negative, got {self.N}")
        object.__setattr__(self, "g_q", truncation_coupling(self.tail, self.N, self.channel))

    @classmethod
    def from_tail(cls, f: Sequence[float], N: int, p: float = 0, large_ell: bool = False):
        return cls(WkbTail(tuple(f)), int(N), ParityChannel(p, large_ell))

    @classmethod
    def from_potential(cls, spec: PotentialSpec, N: int, p: float = 0, large_ell: bool = False):
        return cls(solve_wkb_tail(spec), int(N), ParityChannel(p, large_ell))

    @property
    def q(self) -> int:
        return self.tail.q

    @property
    def p(self) -> float:
        return self.channel.p

    @property
    def f(self) -> tuple[float, ...]:
        return self.tail.f

    def couplings(self, plet: Sequence[float]) -> np.ndarray:
        """Full coupling list g_0..g_{2q+1} for a given eigenplet.

        For q=0 the plet is empty and g_0 is the truncation coupling itself.
        """
        q = self.q
        plet = list(plet)
        if len(plet) != q:
            raise ValueError(f"plet must have length {q}, got {len(plet)}")
        return np.array(plet + [self.g_q] + list(tail_to_dominant(self.tail)), dtype=float)

    def potential(self, plet: Sequence[float]) -> PotentialSpec:
        return PotentialSpec(tuple(self.couplings(plet)[1:]))

    def energy(self, plet: Sequence[float]) -> float:
        return -float(self.couplings(plet)[0])


def evaluate_wavefunction(model: QuasiExactModel, h: Sequence[float], x):
    """exp(-P(x)) * sum_{n<=N} h_n x^{2n+p}."""
    h = np.asarray(h, dtype=float)
    if h.shape != (model.N + 1,):
        raise ValueError(f"expected {model.N + 1} Taylor coefficients, got {h.shape}")
    x = np.asarray(x, dtype=float)
    powers = 2 * np.arange(model.N + 1) + model.p
    poly = np.sum(h * np.power.outer(x, powers), axis=-1)
    return np.exp(-model.tail.exponent(x)) * poly
