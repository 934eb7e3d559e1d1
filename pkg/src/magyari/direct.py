"""Non-perturbative solutions of the truncated recurrence.

Closed forms cover the harmonic oscillator (q=0), the sextic family (q=1)
and the single-term strings (N=0). Everything else goes through a
multistart Newton iteration on the bilinear system

    r(g, h) = (H - sum_xi g_{xi-1} J_xi) h = 0,   h_N = 1,

which has exactly N+q unknowns for N+q equations.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .model import ParityChannel, QuasiExactModel, WkbTail
from .system import EigenPlet, MagyariSystem, ShiftBasis, WaveVector, apply, build_system, scaled_residual_norm

log = logging.getLogger(__name__)

ACCEPT_TOL = 1e-9
DEDUP_TOL = 1e-8
MAX_ITER = 40
MAX_HALVINGS = 3
SINGULAR_COND = 1e12


@dataclass(frozen=True)
class QesSolution:
    plet: EigenPlet
    energy: float
    wave: WaveVector
    residual_norm: float
    classification: str
    flags: tuple[str, ...] = field(default=())

    def as_dict(self) -> dict:
        return {
            "plet": list(self.plet.g),
            "energy": self.energy,
            "wave": list(self.wave.h),
            "residual_norm": self.residual_norm,
            "classification": self.classification,
            "flags": list(self.flags),
        }


def _finish(system: MagyariSystem, plet, h, classification, flags=()) -> QesSolution:
    plet = EigenPlet(tuple(plet))
    wave = WaveVector.normalized(h)
    res = float(scaled_residual_norm(apply(system, plet), np.asarray(wave)))
    return QesSolution(plet, system.model.energy(plet.g), wave, res, classification, tuple(flags))


def solve_harmonic(f0: float, p: float, m: int) -> QesSolution:
    """The m-th state of V = f0^2 x^2 in parity channel p: E = f0 (4m + 2p + 1)."""
    if not f0 > 0:
        raise ValueError(f"f0 must be positive, got {f0}")
    if m < 0:
        raise ValueError(f"m must be non-negative, got {m}")
    model = QuasiExactModel(WkbTail((f0,)), m, ParityChannel(p))
    system = build_system(model)
    H = system.H
    h = np.zeros(m + 1)
    h[m] = 1.0
    # rows are B_n h_n + C_n h_{n+1} = 0 with B_n = 4 f0 (m - n) != 0 for n < m
    for n in range(m - 1, -1, -1):
        h[n] = -H[n, n + 1] * h[n + 1] / H[n, n]
    return _finish(system, (), h, "closed_form")


def solve_sextic(f0: float, N: int, p: float) -> list[QesSolution]:
    """All real eigenpairs of the square (N+1)x(N+1) sextic problem (f_1 = 1).

    At q = 1 the shift basis is the identity, so the plet is an ordinary
    eigenvalue of the tridiagonal H.
    """
    model = QuasiExactModel(WkbTail((f0, 1.0)), N, ParityChannel(p))
    system = build_system(model)
    vals, vecs = np.linalg.eig(system.H)
    out = []
    scale = max(1.0, float(np.max(np.abs(system.H))))
    for lam, v in zip(vals, vecs.T):
        if abs(lam.imag) > 1e-9 * scale:
            continue
        g0 = float(lam.real)
        v = v.real
        if abs(v[-1]) < 1e-14 * np.max(np.abs(v)):
            log.warning("sextic eigenvector at g0=%g has vanishing h_N; skipped", g0)
            continue
        h = _refine_eigvec(system.H, g0, v / v[-1])
        out.append(_finish(system, (g0,), h, "closed_form"))
    if len(out) < N + 1:
        log.warning("sextic N=%d: %d of %d eigenvalues are real", N, len(out), N + 1)
    out.sort(key=lambda s: s.plet.g)
    return out


def _refine_eigvec(H: np.ndarray, g0: float, h: np.ndarray) -> np.ndarray:
    # back-substitution through rows 0..N-1 with h_N = 1 fixed, eigenvalue held
    A = H - g0 * np.eye(H.shape[0])
    N = H.shape[0] - 1
    if N == 0:
        return np.ones(1)
    sol, *_ = np.linalg.lstsq(A[:, :N], -A[:, N], rcond=None)
    return np.append(sol, 1.0)


def solve_n0(tail: WkbTail, p: float) -> QesSolution:
    """Closed form at N = 0: row n of the q x 1 system fixes g_n directly.

    g_n = sum_{j<n} f_j f_{n-1-j} - f_n (2p + 2n + 1), n = 0..q-1.
    """
    f, q = tail.f, tail.q
    plet = []
    for n in range(q):
        cross = sum(f[j] * f[n - 1 - j] for j in range(n))
        plet.append(cross - f[n] * (2 * p + 2 * n + 1))
    large = p not in (0, 1)
    system = build_system(QuasiExactModel(tail, 0, ParityChannel(p, large_ell=large)))
    return _finish(system, plet, [1.0], "closed_form")


def default_radius(system: MagyariSystem) -> float:
    """Half-width of the box the plet starts are drawn from."""
    m = system.model
    bound = max(abs(v) for v in m.f) * (4 * m.N + 2 * m.q + 2 * m.p + 1)
    spectral = float(np.linalg.norm(system.H, 2)) if system.H.size else 0.0
    return 1.0 + max(bound, spectral)


def bilinear_residual(H: np.ndarray, shifts: ShiftBasis, z: np.ndarray) -> np.ndarray:
    """r(z) for z = (g_0..g_{q-1}, h_0..h_{N-1}); works on a leading batch axis."""
    g, h = _unpack(shifts, z)
    A = H - np.einsum("...x,xij->...ij", g, _stack(shifts, H))
    return np.einsum("...ij,...j->...i", A, h)


def bilinear_jacobian(H: np.ndarray, shifts: ShiftBasis, z: np.ndarray) -> np.ndarray:
    """Exact Jacobian: d r / d g_xi = -J_xi h, d r / d h_j = (H - S)[:, j]."""
    N = H.shape[1] - 1
    g, h = _unpack(shifts, z)
    Js = _stack(shifts, H)
    A = H - np.einsum("...x,xij->...ij", g, Js)
    dg = -np.einsum("xij,...j->...ix", Js, h)
    return np.concatenate([dg, A[..., :, :N]], axis=-1)


def _stack(shifts: ShiftBasis, H: np.ndarray) -> np.ndarray:
    if shifts.q == 0:
        return np.zeros((0,) + H.shape)
    return np.stack(shifts.J)


def _unpack(shifts: ShiftBasis, z: np.ndarray):
    z = np.asarray(z, dtype=float)
    q = shifts.q
    g = z[..., :q]
    h = np.concatenate([z[..., q:], np.ones(z.shape[:-1] + (1,))], axis=-1)
    return g, h


def _least_squares_waves(H, shifts, g):
    """h_0..h_{N-1} minimizing |(H - S(g)) h| at h_N = 1, for each row of g."""
    N = H.shape[1] - 1
    A = H - np.einsum("bx,xij->bij", g, _stack(shifts, H))
    out = np.empty((len(g), N))
    for i, Ai in enumerate(A):
        out[i] = np.linalg.lstsq(Ai[:, :N], -Ai[:, N], rcond=None)[0]
    return out


def _batched_solve(J: np.ndarray, r: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.solve(J, r[..., None])[..., 0]
    except np.linalg.LinAlgError:
        out = np.empty_like(r)
        for i in range(J.shape[0]):
            out[i] = np.linalg.lstsq(J[i], r[i], rcond=None)[0]
        return out


def newton_roots(
    H: np.ndarray,
    shifts: ShiftBasis,
    starts: int = 128,
    seed: int = 0,
    radius: float | None = None,
    tol: float = ACCEPT_TOL,
    initial: np.ndarray | None = None,
) -> list[tuple[np.ndarray, np.ndarray, float, tuple[str, ...]]]:
    """Multistart damped Newton on the bilinear system.

    Plet starts are uniform in [-radius, radius]^q; each start's wave is the
    least-squares h at that plet. Roots are accepted on the scaled residual
    (see ``system.scaled_residual_norm``) and returned as
    ``(plet, h, residual_norm, flags)`` tuples sorted by plet.
    """
    H = np.asarray(H, dtype=float)
    q, N = shifts.q, H.shape[1] - 1
    dim = q + N
    if starts < 1:
        raise ValueError("need at least one start")
    if radius is None:
        radius = 1.0 + float(np.linalg.norm(H, 2)) if H.size else 1.0
    rng = np.random.default_rng(seed)
    g0 = rng.uniform(-radius, radius, size=(starts, q))
    z = np.concatenate([g0, _least_squares_waves(H, shifts, g0)], axis=1)
    if initial is not None:
        z = np.vstack([np.atleast_2d(initial), z])

    r = bilinear_residual(H, shifts, z)
    rn = np.linalg.norm(r, axis=-1)
    for _ in range(MAX_ITER):
        step = _batched_solve(bilinear_jacobian(H, shifts, z), -r)
        t = np.ones(len(z))
        pending = np.ones(len(z), dtype=bool)
        for _ in range(MAX_HALVINGS):
            trial = np.linalg.norm(bilinear_residual(H, shifts, z + t[:, None] * step), axis=-1)
            pending &= ~(trial < rn)
            if not pending.any():
                break
            t[pending] *= 0.5
        # no decrease within the halving budget: take the full step anyway
        t[pending] = 1.0
        z = z + t[:, None] * step
        r = bilinear_residual(H, shifts, z)
        rn = np.linalg.norm(r, axis=-1)
    good = np.all(np.isfinite(z), axis=-1)
    z = z[good]
    g, h = _unpack(shifts, z)
    A = H - np.einsum("...x,xij->...ij", g, _stack(shifts, H))
    rn = scaled_residual_norm(A, h)
    keep = rn <= tol
    z, rn = z[keep], rn[keep]

    order = np.argsort(rn, kind="stable")
    found: list[tuple[np.ndarray, float]] = []
    for i in order:
        if all(np.linalg.norm(z[i] - w) > DEDUP_TOL * max(1.0, np.linalg.norm(w)) for w, _ in found):
            found.append((z[i], rn[i]))
    out = []
    for zi, ri in found:
        g, h = _unpack(shifts, zi)
        flags = ()
        if dim and np.linalg.cond(bilinear_jacobian(H, shifts, zi)) > SINGULAR_COND:
            flags = ("singular_jacobian",)
        out.append((g, h, float(ri), flags))
    out.sort(key=lambda item: tuple(item[0]) + tuple(item[1]))
    if not out:
        log.warning("Newton found no root from %d starts (seed %d)", starts, seed)
    return out


def solve_newton(system: MagyariSystem, starts: int = 128, seed: int = 0) -> list[QesSolution]:
    roots = newton_roots(system.H, system.shifts, starts, seed, radius=default_radius(system))
    return [_finish(system, g, h, "newton", flags) for g, h, _, flags in roots]
