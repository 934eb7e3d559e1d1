"""Perturbation stacks for large real p.

Two arrangements are provided:

* ``split_linear_p``: every element of H is affine in p, so
  H = (2p + c) [H^(0) + lam H^(1)] with lam = 1/(2p + c). The plet of the
  stack is the physical plet divided by 2p + c.
* ``rescale_decadic``: the q = N = 2 toy rescaled by row/column diagonal
  matrices, with small parameter sigma = p^(-1/3), scaled plet (s, t) and
  a stack H^(0..3) whose zero order is the fixed 4 x 3 matrix below.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import QuasiExactModel
from .perturbation import PerturbationProblem
from .system import EigenPlet, MagyariSystem, ShiftBasis, WaveVector, build_system

SIGMA_EXPONENT = -1.0 / 3.0

DECADIC_H0 = np.array([[0, 1, 0], [0, 0, 2], [2, 0, 0], [0, 1, 0]], dtype=float)


@dataclass(frozen=True)
class LargePExpansion:
    scheme: str
    p: float
    stack: PerturbationProblem
    lam: float
    shift_c: float = 0.0
    sigma: float | None = None
    params: dict = field(default_factory=dict)

    @property
    def plet_scale(self) -> float:
        """Physical plet = plet_scale * stack plet (linear split only)."""
        return 2 * self.p + self.shift_c


def split_linear_p(system: MagyariSystem, shift_c: float = 0.0) -> LargePExpansion:
    """Split H into the coefficient of 2p and the p-free remainder.

    H^(0) holds 2n+2 on the superdiagonal and -f_k on band k < q (the
    lowest band carries no p); the remainder is H at p = 0, less c H^(0)
    when lam = 1/(2p + c).
    """
    model = system.model
    q, N, f = model.q, model.N, model.f
    H0 = np.zeros(system.H.shape)
    for n in range(N + q):
        if n + 1 <= N:
            H0[n, n + 1] = 2 * n + 2
        for k in range(min(q - 1, n) + 1):
            if n - k <= N:
                H0[n, n - k] = -f[k]
    intercept = build_system(QuasiExactModel.from_tail(f, N, 0)).H
    H1 = intercept - shift_c * H0
    stack = PerturbationProblem((H0, H1), system.shifts)
    return LargePExpansion(
        "linear_split", model.p, stack, 1.0 / (2 * model.p + shift_c), shift_c,
        params={"f": list(f), "N": N, "q": q},
    )


def rescale_decadic(f0: float, f1: float, p: float) -> LargePExpansion:
    """q = N = 2 toy (f_2 = 1) in the scaled variables (s, t), lam = sigma."""
    if not p > 1:
        raise ValueError(f"rescaled decadic expansion needs p > 1, got {p}")
    sigma = p**SIGMA_EXPONENT
    H1 = np.zeros((4, 3))
    H1[1, 0], H1[2, 1], H1[3, 2] = 3, 7, 11
    H1 *= -f1 / 4
    H2 = np.zeros((4, 3))
    H2[0, 0], H2[1, 1], H2[2, 2] = 1, 5, 9
    H2 *= -f0 / 4
    H3 = np.zeros((4, 3))
    H3[0, 1], H3[1, 2] = 1, 6
    H3 *= 0.5
    stack = PerturbationProblem((DECADIC_H0, H1, H2, H3), ShiftBasis.build(2, 2))
    return LargePExpansion(
        "decadic_rescale", p, stack, sigma, sigma=sigma, params={"f0": f0, "f1": f1},
    )


def decadic_scalings(sigma: float, p: float) -> tuple[np.ndarray, np.ndarray]:
    """Row scaling T and column scaling S of the rescaled toy."""
    T = np.diag([sigma ** -(i + 1) / (4 * p) for i in range(4)])
    S = np.diag([1.0, sigma, sigma**2])
    return T, S


def decadic_model(f0: float, f1: float, p: float) -> QuasiExactModel:
    return QuasiExactModel.from_tail((f0, f1, 1.0), 2, p, large_ell=p not in (0, 1))


def recover_physical(expansion: LargePExpansion, plet_scaled, wave_scaled) -> tuple[EigenPlet, WaveVector]:
    """Map a stack solution back to the physical (g_0, ..., g_{q-1}) and h."""
    plet_scaled = np.asarray(plet_scaled, dtype=float)
    wave_scaled = np.asarray(wave_scaled, dtype=float)
    p = expansion.p
    if expansion.scheme == "linear_split":
        return EigenPlet(tuple(expansion.plet_scale * plet_scaled)), WaveVector.normalized(wave_scaled)
    if expansion.scheme != "decadic_rescale":
        raise ValueError(f"unknown scheme {expansion.scheme!r}")
    sigma = expansion.sigma
    f0, f1 = expansion.params["f0"], expansion.params["f1"]
    s, t = plet_scaled
    E_bar = -2 * sigma * s
    F_bar = -2 * sigma**2 * t
    g0 = -2 * p * (f0 + E_bar)
    g1 = f0**2 - 2 * p * f1 - 2 * p * F_bar
    h = wave_scaled * sigma ** np.arange(len(wave_scaled))
    return EigenPlet((g0, g1)), WaveVector.normalized(h)


def scale_physical(expansion: LargePExpansion, plet, wave) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of ``recover_physical``: physical solution to stack variables."""
    plet = np.asarray(plet, dtype=float)
    wave = np.asarray(wave, dtype=float)
    if expansion.scheme == "linear_split":
        return plet / expansion.plet_scale, wave
    sigma, p = expansion.sigma, expansion.p
    f0, f1 = expansion.params["f0"], expansion.params["f1"]
    g0, g1 = plet
    E_bar = -g0 / (2 * p) - f0
    F_bar = (f0**2 - g1 - 2 * p * f1) / (2 * p)
    s = -E_bar / (2 * sigma)
    t = -F_bar / (2 * sigma**2)
    scaled = wave / sigma ** np.arange(len(wave))
    return np.array([s, t]), scaled / scaled[-1]
