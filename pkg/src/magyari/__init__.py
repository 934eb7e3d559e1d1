"""Quasi-exactly solvable polynomial oscillators via non-square banded recurrences."""
from .direct import QesSolution, solve_harmonic, solve_n0, solve_newton, solve_sextic
from .large_ell import LargePExpansion, recover_physical, rescale_decadic, split_linear_p
from .model import (
    ParityChannel,
    PotentialSpec,
    QuasiExactModel,
    WkbTail,
    evaluate_wavefunction,
    solve_wkb_tail,
    tail_to_dominant,
    truncation_coupling,
)
from .perturbation import (
    CorrectionSeries,
    DegenerateStateError,
    PerturbationProblem,
    ZeroOrderSolution,
    build_projectors,
    coupling_corrections,
    evaluate_series,
    left_null_basis,
    reduce_left_vectors,
    run,
    solve_zero_order,
)
from .system import EigenPlet, MagyariSystem, ShiftBasis, WaveVector, apply, build_system, residual
from .verification import convergence_report, ode_residual, recurrence_residual

__all__ = [
    "CorrectionSeries",
    "DegenerateStateError",
    "EigenPlet",
    "LargePExpansion",
    "MagyariSystem",
    "ParityChannel",
    "PerturbationProblem",
    "PotentialSpec",
    "QesSolution",
    "QuasiExactModel",
    "ShiftBasis",
    "WaveVector",
    "WkbTail",
    "ZeroOrderSolution",
    "apply",
    "build_projectors",
    "build_system",
    "convergence_report",
    "coupling_corrections",
    "evaluate_series",
    "evaluate_wavefunction",
    "left_null_basis",
    "ode_residual",
    "recover_physical",
    "recurrence_residual",
    "reduce_left_vectors",
    "rescale_decadic",
    "residual",
    "run",
    "solve_harmonic",
    "solve_n0",
    "solve_newton",
    "solve_sextic",
    "solve_wkb_tail",
    "solve_zero_order",
    "split_linear_p",
    "tail_to_dominant",
    "truncation_coupling",
]
