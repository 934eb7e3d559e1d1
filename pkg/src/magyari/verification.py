"""Independent checks of claimed quasi-exact solutions."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .direct import newton_roots
from .model import QuasiExactModel
from .perturbation import CorrectionSeries, PerturbationProblem, ZeroOrderSolution, evaluate_series
from .system import apply, build_system, element, scaled_residual_norm

log = logging.getLogger(__name__)


def recurrence_residual(model: QuasiExactModel, plet, wave) -> np.ndarray:
    """Rows 0..N+q of the untruncated recurrence acting on h.

    The last row is rebuilt from the element formulas; only its A^{(q)}
    entry falls inside columns 0..N, and that entry vanishes identically.
    """
    h = np.asarray(wave, dtype=float)
    system = build_system(model)
    rows = apply(system, plet) @ h
    N, q = model.N, model.q
    closing = element(model, N + q, q) * h[N]
    return np.append(rows, closing)


def recurrence_residual_norm(model: QuasiExactModel, plet, wave) -> float:
    """Scaled max-abs of ``recurrence_residual`` (row terms normalize it)."""
    h = np.asarray(wave, dtype=float)
    A = apply(build_system(model), plet)
    N, q = model.N, model.q
    closing = np.zeros((1, N + 1))
    closing[0, N] = element(model, N + q, q)
    return float(scaled_residual_norm(np.vstack([A, closing]), h))


def turning_point(model: QuasiExactModel, plet) -> float:
    """Outermost x > 0 with V(x) = E, or 1.0 if there is none."""
    g = model.couplings(plet)
    E = -g[0]
    coeffs = np.array(g, dtype=float)
    coeffs[0] = -E
    # V(x) - E as a polynomial in y = x^2
    roots = np.roots(coeffs[::-1])
    real = [r.real for r in roots if abs(r.imag) < 1e-9 * max(1.0, abs(r)) and r.real > 0]
    return float(np.sqrt(max(real))) if real else 1.0


def default_sample_points(model: QuasiExactModel, plet, count: int = 16) -> np.ndarray:
    a, b = 0.1, turning_point(model, plet) + 1.0
    k = np.arange(count)
    nodes = np.cos((2 * k + 1) * np.pi / (2 * count))
    return np.sort(0.5 * (a + b) + 0.5 * (b - a) * nodes)


def wavefunction_derivatives(model: QuasiExactModel, wave, x, magnitude: bool = False):
    """psi, psi', psi'' at x from the exp(-P) * polynomial form.

    With ``magnitude=True`` every sum is taken over absolute values, giving
    the size of the terms that cancel in psi''.
    """
    h = np.asarray(wave, dtype=float)
    x = np.asarray(x, dtype=float)[..., None]
    powers = 2 * np.arange(len(h)) + model.p
    k = np.arange(model.q + 1)
    f = np.asarray(model.f)
    fold = np.abs if magnitude else (lambda v: v)
    u = np.sum(fold(h * x**powers), axis=-1)
    du = np.sum(fold(h * powers * x ** (powers - 1)), axis=-1)
    d2u = np.sum(fold(h * powers * (powers - 1) * x ** (powers - 2)), axis=-1)
    dP = np.sum(fold(f * x ** (2 * k + 1)), axis=-1)
    d2P = np.sum(fold(f * (2 * k + 1) * x ** (2 * k)), axis=-1)
    x = x[..., 0]
    envelope = np.exp(-model.tail.exponent(x))
    psi = envelope * u
    if magnitude:
        dpsi = envelope * (du + dP * u)
        d2psi = envelope * (d2u + 2 * dP * du + d2P * u + dP**2 * u)
    else:
        dpsi = envelope * (du - dP * u)
        d2psi = envelope * (d2u - 2 * dP * du - d2P * u + dP**2 * u)
    return psi, dpsi, d2psi


def ode_residual(model: QuasiExactModel, plet, wave, sample_points=None) -> float:
    """Largest scaled residual of -psi'' + (V - E) psi over the sample points.

    Each point's residual is divided by 1 + |E psi| + (the absolute size of
    the terms in psi'' and V psi), so rounding in the large cancelling
    Taylor terms of high-N strings stays below the acceptance threshold.
    """
    if sample_points is None:
        sample_points = default_sample_points(model, plet)
    x = np.asarray(sample_points, dtype=float)
    g = model.couplings(plet)
    E = -g[0]
    V = sum(gk * x ** (2 * k) for k, gk in enumerate(g) if k >= 1)
    V_abs = sum(abs(gk) * x ** (2 * k) for k, gk in enumerate(g) if k >= 1)
    psi, _, d2psi = wavefunction_derivatives(model, wave, x)
    psi_abs, _, d2psi_abs = wavefunction_derivatives(model, wave, x, magnitude=True)
    scale = 1.0 + np.abs(E * psi) + d2psi_abs + (V_abs + abs(E)) * psi_abs
    return float(np.max(np.abs(-d2psi + (V - E) * psi) / scale))


@dataclass
class ConvergenceReport:
    sigmas: np.ndarray
    orders: list[int]
    errors: dict[int, np.ndarray]
    slopes: dict[int, float]
    reference: list[np.ndarray]

    def rows(self) -> list[dict]:
        return [
            {"K": K, "errors": list(self.errors[K]), "slope": self.slopes[K]} for K in self.orders
        ]


def convergence_report(
    problem: PerturbationProblem,
    z: ZeroOrderSolution,
    series: CorrectionSeries,
    K_max: int,
    sigmas,
    starts: int = 128,
    seed: int = 0,
) -> ConvergenceReport:
    """Series partial sums against Newton solutions of H(sigma), with log-log slopes."""
    kept, refs = [], []
    for sigma in sigmas:
        roots = newton_roots(problem.at(sigma), problem.shifts, starts, seed)
        if not roots:
            log.warning("no Newton root at sigma=%g; dropped", sigma)
            continue
        guess = np.asarray(evaluate_series(series, z, sigma, K_max)[0])
        best = min(roots, key=lambda item: np.linalg.norm(item[0] - guess))
        kept.append(sigma)
        refs.append(best[0])
    sig = np.array(kept, dtype=float)
    errors, slopes = {}, {}
    orders = list(range(K_max + 1))
    for K in orders:
        err = np.array(
            [np.max(np.abs(np.asarray(evaluate_series(series, z, s, K)[0]) - ref)) for s, ref in zip(sig, refs)]
        )
        errors[K] = err
        if len(sig) >= 2 and np.all(err > 0):
            slopes[K] = float(np.polyfit(np.log(sig), np.log(err), 1)[0])
        else:
            slopes[K] = float("nan")
    return ConvergenceReport(sig, orders, errors, slopes, refs)
