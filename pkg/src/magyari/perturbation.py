"""Rayleigh-Schroedinger corrections for non-square generalized eigenproblems.

Given a stack H(lam) = H^(0) + lam H^(1) + lam^2 H^(2) + ... of
(N+q) x (N+1) matrices, expand the plet and the wave in lam:

    [H^(0) - S^(0)] |k> = |known^(k-1)> + S^(k) |0>,
    |known^(k-1)> = sum_{m=1}^{k-1} [S^(m) - H^(m)] |k-m> - H^(k) |0>.

Each order needs q scalar conditions for S^(k) and an N x N solve for |k>.
The scalar conditions come from q independent left null rows of
H^(0) - S^(0), each supported on N+1 positions (a "reduction" rho placed
through a row selector), which turns the plet update into a q x q linear
system. The wave update is a restricted inverse between the orthogonal
complement of |0> and the orthogonal complement of the reduction rows.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .direct import newton_roots
from .system import EigenPlet, ShiftBasis, WaveVector

log = logging.getLogger(__name__)

NULL_RTOL = 1e-10
INDEPENDENCE_RTOL = 1e-8
SINGULAR_COND = 1e12
MAX_SUBSETS = 20000


class DegenerateStateError(ValueError):
    """A zero-order state without the independent structure the method needs."""


@dataclass(frozen=True)
class PerturbationProblem:
    H_stack: tuple[np.ndarray, ...]
    shifts: ShiftBasis

    def __post_init__(self):
        stack = tuple(np.array(H, dtype=float) for H in self.H_stack)
        if not stack:
            raise ValueError("need at least H^(0)")
        shape = (self.shifts.N + self.shifts.q, self.shifts.N + 1)
        for k, H in enumerate(stack):
            if H.shape != shape:
                raise ValueError(f"H^({k}) has shape {H.shape}, expected {shape}")
            H.setflags(write=False)
        object.__setattr__(self, "H_stack", stack)

    @classmethod
    def from_matrices(cls, matrices: Sequence, q: int) -> "PerturbationProblem":
        H0 = np.asarray(matrices[0], dtype=float)
        N = H0.shape[1] - 1
        return cls(tuple(matrices), ShiftBasis.build(q, N))

    @property
    def q(self) -> int:
        return self.shifts.q

    @property
    def N(self) -> int:
        return self.shifts.N

    def order(self, k: int) -> np.ndarray:
        if k < len(self.H_stack):
            return self.H_stack[k]
        return np.zeros_like(self.H_stack[0])

    def at(self, lam: float) -> np.ndarray:
        """H(lam) summed over the stack."""
        return sum(lam**k * H for k, H in enumerate(self.H_stack))


@dataclass(frozen=True)
class ReductionPair:
    """A row selector (N+1 of the N+q row indices) and the reduced row rho."""

    indices: tuple[int, ...]
    rho: np.ndarray

    @property
    def offset(self) -> int | None:
        i = self.indices
        if list(i) == list(range(i[0], i[0] + len(i))):
            return i[0]
        return None

    def selector(self, rows: int) -> np.ndarray:
        """Pi: the (N+1) x rows 0/1 matrix picking ``indices``."""
        Pi = np.zeros((len(self.indices), rows))
        Pi[np.arange(len(self.indices)), list(self.indices)] = 1.0
        return Pi

    def expanded(self, rows: int) -> np.ndarray:
        w = np.zeros(rows)
        w[list(self.indices)] = self.rho
        return w


@dataclass(frozen=True)
class ZeroOrderSolution:
    plet0: EigenPlet
    wave0: WaveVector
    left_basis: np.ndarray
    reductions: tuple[ReductionPair, ...]
    A0: np.ndarray

    @property
    def label(self) -> str:
        return "(" + ", ".join(f"{g:.12g}" for g in self.plet0.g) + ")"

    def reduction_rows(self) -> np.ndarray:
        return np.array([r.expanded(self.A0.shape[0]) for r in self.reductions])


@dataclass(frozen=True)
class ProjectorPair:
    right_basis: np.ndarray
    left_basis_Q: np.ndarray
    restricted: np.ndarray
    condition: float
    _lu: tuple = field(repr=False)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Q_R [Q_L A0 Q_R]^{-1} Q_L rhs, as a vector of length N+1."""
        if self.right_basis.shape[0] == 0:
            return np.zeros(self.right_basis.shape[1])
        y = scipy.linalg.lu_solve(self._lu, self.left_basis_Q @ rhs)
        return self.right_basis.T @ y

    def solve_left(self, row: np.ndarray) -> np.ndarray:
        """row Q_R [Q_L A0 Q_R]^{-1} Q_L, as a row of length N+q."""
        if self.right_basis.shape[0] == 0:
            return np.zeros(self.left_basis_Q.shape[1])
        y = scipy.linalg.lu_solve(self._lu, self.right_basis @ row, trans=1)
        return y @ self.left_basis_Q


@dataclass
class CorrectionSeries:
    """Orders k = 1..K stored at index k-1."""

    F: np.ndarray
    plets: list[np.ndarray] = field(default_factory=list)
    waves: list[np.ndarray] = field(default_factory=list)
    left_rows0: np.ndarray | None = None
    left_orders: list[np.ndarray] | None = None

    @property
    def K(self) -> int:
        return len(self.plets)


def _complete_orthonormal(rows: np.ndarray, dim: int) -> np.ndarray:
    """Orthonormal basis of the complement of span(rows).

    Gram-Schmidt over coordinate seeds e_0, e_1, ... in index order, so the
    output is deterministic.
    """
    basis = []
    spanned = []
    for v in np.atleast_2d(rows):
        for _ in range(2):
            for b in spanned:
                v = v - (b @ v) * b
        n = np.linalg.norm(v)
        if n > 1e-12:
            spanned.append(v / n)
    target = dim - len(spanned)
    for i in range(dim):
        if len(basis) == target:
            break
        v = np.zeros(dim)
        v[i] = 1.0
        for _ in range(2):
            for b in spanned + basis:
                v = v - (b @ v) * b
        n = np.linalg.norm(v)
        if n > 1e-8:
            basis.append(v / n)
    return np.array(basis).reshape(len(basis), dim)


def left_null_basis(A0: np.ndarray, q: int | None = None) -> np.ndarray:
    """Orthonormal rows w with w A0 = 0, from the SVD of A0."""
    A0 = np.asarray(A0, dtype=float)
    U, s, _ = np.linalg.svd(A0, full_matrices=True)
    cutoff = NULL_RTOL * (s[0] if s.size and s[0] > 0 else 1.0)
    rank = int(np.sum(s > cutoff))
    basis = U[:, rank:].T
    if q is not None:
        if basis.shape[0] < q:
            raise DegenerateStateError(
                f"left null space has dimension {basis.shape[0]} < q = {q}"
            )
        if basis.shape[0] > q:
            log.warning("left null space dimension %d exceeds q = %d", basis.shape[0], q)
    return basis


def _smallest_sv_ratio(rows: list[np.ndarray]) -> float:
    M = np.array([r / np.linalg.norm(r) for r in rows])
    s = np.linalg.svd(M, compute_uv=False)
    return float(s[-1] / s[0])


def _rows_supported_on(basis: np.ndarray, indices: Sequence[int]) -> list[np.ndarray]:
    """Combinations of ``basis`` rows vanishing outside ``indices``."""
    dim = basis.shape[1]
    outside = [i for i in range(dim) if i not in set(indices)]
    if not outside:
        return list(basis)
    block = basis[:, outside]
    _, s, Vt = np.linalg.svd(block.T, full_matrices=True)
    scale = max(1.0, s[0] if s.size else 0.0)
    null = Vt[int(np.sum(s > 1e-10 * scale)):]
    out = []
    for c in null:
        w = c @ basis
        w[outside] = 0.0
        if np.linalg.norm(w) > 1e-10:
            out.append(_normalize_row(w))
    return out


def _normalize_row(w: np.ndarray) -> np.ndarray:
    """Scale so the smallest significant entry is +-1 and the first one positive.

    Any scaling cancels in the plet corrections; this one keeps rows with
    small integer ratios integral.
    """
    mag = np.abs(w)
    w = np.where(mag > 1e-12 * mag.max(), w, 0.0)
    nz = np.flatnonzero(w)
    w = w / np.min(np.abs(w[nz]))
    return w if w[nz[0]] > 0 else -w


def reduce_left_vectors(left_basis: np.ndarray, q: int, N: int) -> tuple[ReductionPair, ...]:
    """Pick q independent left null rows, each supported on N+1 positions.

    Row j prefers the window of rows j-1..j-1+N, then the other windows,
    then arbitrary (N+1)-subsets chosen to maximize the smallest singular
    value of the rows picked so far.
    """
    left_basis = np.atleast_2d(np.asarray(left_basis, dtype=float))
    dim = N + q
    if left_basis.shape[1] != dim:
        raise ValueError(f"left rows must have length {dim}")
    if np.linalg.matrix_rank(left_basis, tol=1e-10 * max(1.0, np.abs(left_basis).max())) < q:
        raise DegenerateStateError("left basis spans fewer than q directions")

    def window(offset):
        return tuple(range(offset, offset + N + 1))

    chosen: list[np.ndarray] = []
    pairs: list[ReductionPair] = []
    for j in range(q):
        pick = None
        for offset in [j] + [o for o in range(q) if o != j]:
            for w in _rows_supported_on(left_basis, window(offset)):
                if _smallest_sv_ratio(chosen + [w]) > INDEPENDENCE_RTOL:
                    pick = (window(offset), w)
                    break
            if pick:
                break
        if pick is None:
            best = -1.0
            subsets = itertools.islice(itertools.combinations(range(dim), N + 1), MAX_SUBSETS)
            for subset in subsets:
                for w in _rows_supported_on(left_basis, subset):
                    ratio = _smallest_sv_ratio(chosen + [w])
                    if ratio > best + 1e-12:
                        best, pick = ratio, (subset, w)
            if pick is None or best <= INDEPENDENCE_RTOL:
                raise DegenerateStateError(f"no independent reduced row for j = {j + 1}")
        indices, w = pick
        chosen.append(w)
        pairs.append(ReductionPair(tuple(indices), w[list(indices)].copy()))
    return tuple(pairs)


def zero_order_state(problem: PerturbationProblem, plet0, h0) -> ZeroOrderSolution:
    """Attach the left null structure to a known zero-order eigenpair."""
    plet0 = EigenPlet(tuple(plet0))
    wave0 = WaveVector.normalized(h0)
    A0 = problem.order(0) - problem.shifts.combine(plet0.g)
    A0.setflags(write=False)
    basis = left_null_basis(A0, problem.q)
    reductions = reduce_left_vectors(basis, problem.q, problem.N)
    return ZeroOrderSolution(plet0, wave0, basis, reductions, A0)


def solve_zero_order(problem: PerturbationProblem, starts: int = 128, seed: int = 0) -> list[ZeroOrderSolution]:
    """All real zero-order states that multistart Newton finds on H^(0)."""
    roots = newton_roots(problem.order(0), problem.shifts, starts, seed)
    states = []
    for g, h, _, flags in roots:
        if "singular_jacobian" in flags:
            label = "(" + ", ".join(f"{v:.12g}" for v in g) + ")"
            raise DegenerateStateError(f"zero-order state {label} is degenerate")
        states.append(zero_order_state(problem, g, h))
    return states


def build_projectors(z: ZeroOrderSolution) -> ProjectorPair:
    rows, cols = z.A0.shape
    w0 = np.asarray(z.wave0)
    right = _complete_orthonormal(w0[None, :], cols)
    left = _complete_orthonormal(z.reduction_rows(), rows)
    restricted = left @ z.A0 @ right.T
    if restricted.size:
        cond = float(np.linalg.cond(restricted))
        if not cond < SINGULAR_COND:
            raise DegenerateStateError(
                f"restricted operator of state {z.label} is singular (condition {cond:.3g})"
            )
        lu = scipy.linalg.lu_factor(restricted)
    else:
        cond, lu = 1.0, ()
    return ProjectorPair(right, left, restricted, cond, lu)


def coupling_matrix(z: ZeroOrderSolution, shifts: ShiftBasis) -> np.ndarray:
    """F[j, xi] = rho_j . Pi_j J_xi |0>."""
    rows = z.A0.shape[0]
    w0 = np.asarray(z.wave0)
    return np.array(
        [[r.rho @ (r.selector(rows) @ (J @ w0)) for J in shifts] for r in z.reductions]
    ).reshape(len(z.reductions), len(shifts))


def known_vector(problem: PerturbationProblem, series: CorrectionSeries, wave0, k: int) -> np.ndarray:
    w0 = np.asarray(wave0, dtype=float)
    known = -problem.order(k) @ w0
    for m in range(1, k):
        S_m = problem.shifts.combine(series.plets[m - 1])
        known += (S_m - problem.order(m)) @ series.waves[k - m - 1]
    return known


def coupling_corrections(
    z: ZeroOrderSolution, known: np.ndarray, shifts: ShiftBasis, F: np.ndarray | None = None
) -> EigenPlet:
    """Solve F g^(k) = c with c_j = -rho_j . Pi_j |known>."""
    if F is None:
        F = coupling_matrix(z, shifts)
    rows = z.A0.shape[0]
    c = np.array([-r.rho @ (r.selector(rows) @ known) for r in z.reductions])
    if F.size and not np.linalg.cond(F) < SINGULAR_COND:
        raise DegenerateStateError(f"coupling matrix of state {z.label} is singular")
    return EigenPlet(tuple(np.linalg.solve(F, c)) if F.size else ())


def wave_correction(pp: ProjectorPair, known, plet_k, wave0, shifts: ShiftBasis) -> np.ndarray:
    rhs = np.asarray(known, dtype=float) + shifts.combine(np.asarray(plet_k, dtype=float)) @ np.asarray(wave0)
    return pp.solve(rhs)


def left_corrections(
    problem: PerturbationProblem, z: ZeroOrderSolution, pp: ProjectorPair, series: CorrectionSeries, k: int
) -> np.ndarray:
    """k-th corrections of the zero-order left rows (one per row of ``series.left_rows0``).

    The plets S^(1..k) must already be in ``series``.
    """
    rows0 = series.left_rows0 if series.left_rows0 is not None else z.reduction_rows()
    previous = [rows0] + list(series.left_orders or [])[: k - 1]
    known = np.zeros((rows0.shape[0], z.A0.shape[1]))
    for n in range(k):
        m = k - n
        S_m = problem.shifts.combine(series.plets[m - 1])
        known += previous[n] @ (S_m - problem.order(m))
    return np.array([pp.solve_left(row) for row in known]).reshape(rows0.shape)


def run(
    problem: PerturbationProblem,
    z: ZeroOrderSolution,
    K: int,
    left: bool = False,
    left_rows0: np.ndarray | None = None,
    pp: ProjectorPair | None = None,
) -> CorrectionSeries:
    if K < 0:
        raise ValueError("K must be non-negative")
    pp = pp or build_projectors(z)
    F = coupling_matrix(z, problem.shifts)
    series = CorrectionSeries(F)
    if left:
        series.left_rows0 = z.reduction_rows() if left_rows0 is None else np.atleast_2d(left_rows0)
        series.left_orders = []
    for k in range(1, K + 1):
        known = known_vector(problem, series, z.wave0, k)
        plet_k = coupling_corrections(z, known, problem.shifts, F)
        series.plets.append(np.asarray(plet_k.g))
        series.waves.append(wave_correction(pp, known, plet_k.g, z.wave0, problem.shifts))
        if left:
            series.left_orders.append(left_corrections(problem, z, pp, series, k))
    return series


def evaluate_series(
    series: CorrectionSeries, z: ZeroOrderSolution, lam: float, K: int | None = None
) -> tuple[EigenPlet, WaveVector]:
    """Partial sums through order K (default: all computed orders)."""
    K = series.K if K is None else K
    plet = np.asarray(z.plet0, dtype=float).copy()
    wave = np.asarray(z.wave0, dtype=float).copy()
    for k in range(1, K + 1):
        plet += lam**k * series.plets[k - 1]
        wave += lam**k * series.waves[k - 1]
    return EigenPlet(tuple(plet)), WaveVector.normalized(wave)


def order_residual(problem: PerturbationProblem, z: ZeroOrderSolution, series: CorrectionSeries, k: int) -> np.ndarray:
    """[H^(0) - S^(0)] |k> - |known^(k-1)> - S^(k) |0>, unprojected."""
    known = known_vector(problem, series, z.wave0, k)
    S_k = problem.shifts.combine(series.plets[k - 1])
    return z.A0 @ series.waves[k - 1] - known - S_k @ np.asarray(z.wave0)
