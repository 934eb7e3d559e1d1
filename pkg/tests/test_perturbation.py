import numpy as np
import pytest

from magyari.direct import newton_roots
from magyari.large_ell import DECADIC_H0, rescale_decadic, split_linear_p
from magyari.model import QuasiExactModel
from magyari.perturbation import (
    CorrectionSeries,
    DegenerateStateError,
    PerturbationProblem,
    ReductionPair,
    ZeroOrderSolution,
    build_projectors,
    coupling_corrections,
    coupling_matrix,
    evaluate_series,
    known_vector,
    left_corrections,
    left_null_basis,
    order_residual,
    reduce_left_vectors,
    run,
    solve_zero_order,
    wave_correction,
    zero_order_state,
)
from magyari.system import EigenPlet, ShiftBasis, WaveVector, build_system

TOY = ShiftBasis.build(2, 2)


def toy_state(plet, f0=0.0, f1=1.0, p=1e4):
    problem = rescale_decadic(f0, f1, p).stack
    states = solve_zero_order(problem)
    z = min(states, key=lambda s: np.linalg.norm(np.asarray(s.plet0) - plet))
    return problem, z


def test_problem_orders_beyond_stack_are_zero():
    problem = PerturbationProblem((DECADIC_H0,), TOY)
    assert problem.q == 2 and problem.N == 2
    assert not np.any(problem.order(5))
    assert np.array_equal(problem.at(0.3), DECADIC_H0)


def test_problem_rejects_mismatched_shapes():
    with pytest.raises(ValueError):
        PerturbationProblem((DECADIC_H0, np.zeros((3, 3))), TOY)


def random_square(rng, n):
    return np.diag(rng.uniform(-3, 3, n)) + np.diag(rng.uniform(0.5, 1.5, n - 1), 1) + np.diag(
        rng.uniform(0.5, 1.5, n - 1), -1
    )


def test_q1_zero_order_is_ordinary_eigenproblem():
    rng = np.random.default_rng(2)
    A = random_square(rng, 4)
    problem = PerturbationProblem((A,), ShiftBasis.build(1, 3))
    states = solve_zero_order(problem)
    assert sorted(float(s.plet0.g[0]) for s in states) == pytest.approx(np.sort(np.linalg.eigvals(A).real))
    for z in states:
        (left,) = left_null_basis(z.A0, 1)
        vals, vecs = np.linalg.eig(A.T)
        ref = vecs[:, np.argmin(np.abs(vals - z.plet0.g[0]))].real
        assert abs(abs(left @ ref) / np.linalg.norm(ref)) == pytest.approx(1.0, abs=1e-10)
        (pair,) = z.reductions
        assert pair.offset == 0 and len(pair.rho) == 4


def test_scaled_toy_zero_order():
    problem = PerturbationProblem((3 * DECADIC_H0,), TOY)
    got = {tuple(np.round(s.plet0.g, 10)): np.round(s.wave0.h, 10).tolist() for s in solve_zero_order(problem)}
    assert got == {(3.0, 3.0): [1.0, 1.0, 1.0], (-6.0, -6.0): [1.0, -2.0, 1.0]}


def test_zero_order_invariants():
    for plet in ((1, 1), (-2, -2)):
        _, z = toy_state(plet)
        assert np.max(np.abs(z.A0 @ np.asarray(z.wave0))) <= 1e-10
        assert np.max(np.abs(z.left_basis @ z.A0)) <= 1e-10
        rows = z.reduction_rows()
        assert np.max(np.abs(rows @ z.A0)) <= 1e-10
        s = np.linalg.svd(rows, compute_uv=False)
        assert s[-1] > 1e-8 * s[0]


def test_degenerate_zero_order_is_rejected():
    system = build_system(QuasiExactModel.from_tail((0.5, 2.0, 1.0), 2, 50, large_ell=True))
    with pytest.raises(DegenerateStateError):
        solve_zero_order(split_linear_p(system).stack)


def test_reduction_of_alternative_windows_at_degenerate_state():
    _, z = toy_state((-2, -2))
    # the antisymmetric row (0,1,-1,0) factors through both windows
    w = np.array([0.0, 1.0, -1.0, 0.0])
    for offset, rho in ((0, (0, 1, -1)), (1, (1, -1, 0))):
        pair = ReductionPair(tuple(range(offset, offset + 3)), np.array(rho, float))
        assert pair.offset == offset
        assert np.array_equal(pair.expanded(4), w)
        assert np.max(np.abs(pair.expanded(4) @ z.A0)) <= 1e-12


def test_reduce_rejects_short_basis():
    with pytest.raises(DegenerateStateError):
        reduce_left_vectors(np.array([[1.0, 1.0, 1.0, 1.0]]), 2, 2)


def test_projectors_at_toy_states():
    for plet in ((1, 1), (-2, -2)):
        _, z = toy_state(plet)
        pp = build_projectors(z)
        w0 = np.asarray(z.wave0)
        assert np.max(np.abs(pp.right_basis @ w0)) <= 1e-12
        assert np.max(np.abs(pp.left_basis_Q @ z.reduction_rows().T)) <= 1e-12
        assert np.allclose(pp.right_basis @ pp.right_basis.T, np.eye(2), atol=1e-12)
        assert np.allclose(pp.left_basis_Q @ pp.left_basis_Q.T, np.eye(2), atol=1e-12)
        assert abs(np.linalg.det(pp.restricted)) > 1e-6


def test_projectors_empty_for_q1_n0():
    problem = PerturbationProblem((np.array([[2.0]]), np.array([[0.5]])), ShiftBasis.build(1, 0))
    z = zero_order_state(problem, (2.0,), (1.0,))
    pp = build_projectors(z)
    assert pp.right_basis.shape == (0, 1) and pp.left_basis_Q.shape == (0, 1)
    series = run(problem, z, 3)
    assert all(not np.any(w) for w in series.waves)
    assert series.plets[0] == pytest.approx([0.5])


def test_known_vector_orders():
    problem, z = toy_state((1, 1), f1=1.0)
    series = CorrectionSeries(coupling_matrix(z, problem.shifts))
    w0 = np.asarray(z.wave0)
    k1 = known_vector(problem, series, w0, 1)
    assert np.allclose(k1, -problem.order(1) @ w0)
    assert np.allclose(k1, np.array([0, 3, 7, 11]) / 4)
    full = run(problem, z, 2)
    k2 = known_vector(problem, full, w0, 2)
    S1 = problem.shifts.combine(full.plets[0])
    assert np.allclose(k2, (S1 - problem.order(1)) @ full.waves[0] - problem.order(2) @ w0)


def test_coupling_matrix_and_first_order_plet():
    problem, z = toy_state((1, 1), f1=1.0)
    F = coupling_matrix(z, problem.shifts)
    assert np.allclose(F, [[6, 3], [3, 6]])
    known = known_vector(problem, CorrectionSeries(F), z.wave0, 1)
    assert np.asarray(coupling_corrections(z, known, problem.shifts)) == pytest.approx([1 / 3, -25 / 12])


def test_coupling_matrix_band_property_with_window_reductions():
    q, N = 4, 1
    shifts = ShiftBasis.build(q, N)
    rng = np.random.default_rng(4)
    pairs = tuple(ReductionPair((j, j + 1), rng.normal(size=2)) for j in range(q))
    z = ZeroOrderSolution(EigenPlet((0.0,) * q), WaveVector((0.7, 1.0)), np.zeros((q, N + q)), pairs,
                          np.zeros((N + q, N + 1)))
    F = coupling_matrix(z, shifts)
    j, xi = np.indices(F.shape)
    assert not np.any(F[np.abs(j - xi) >= N + 1])
    assert np.all(F[np.abs(j - xi) < N] != 0)


def test_first_order_plet_scales_with_f1():
    problem, z = toy_state((1, 1), f1=-0.6)
    series = run(problem, z, 1)
    assert series.plets[0] == pytest.approx([-0.6 / 3, 25 * 0.6 / 12])


def test_wave_correction_homogeneous_is_zero():
    problem, z = toy_state((1, 1))
    pp = build_projectors(z)
    w0 = np.asarray(z.wave0)
    plet = np.array([0.4, -0.2])
    known = -problem.shifts.combine(plet) @ w0
    assert np.max(np.abs(wave_correction(pp, known, plet, w0, problem.shifts))) <= 1e-14


@pytest.mark.parametrize("f0,f1", [(0.0, 1.0), (0.4, -0.9), (-0.7, 0.3)])
def test_wave_corrections_match_constrained_least_squares(f0, f1):
    problem, _ = toy_state((1, 1), f0, f1)
    for z in solve_zero_order(problem):
        series = run(problem, z, 4)
        w0 = np.asarray(z.wave0)
        for k in range(1, 5):
            known = known_vector(problem, series, w0, k)
            rhs = known + problem.shifts.combine(series.plets[k - 1]) @ w0
            # [A0; w0^T] x = [rhs; 0] is consistent once the plet is right
            M = np.vstack([z.A0, w0])
            x, *_ = np.linalg.lstsq(M, np.append(rhs, 0.0), rcond=None)
            assert np.max(np.abs(M @ x - np.append(rhs, 0.0))) <= 1e-9
            assert np.max(np.abs(x - series.waves[k - 1])) <= 1e-9


def test_order_residual_lies_in_reduction_span():
    problem, z = toy_state((-2, -2), 0.3, 0.8)
    pp = build_projectors(z)
    series = run(problem, z, 4, pp=pp)
    rows = z.reduction_rows()
    for k in range(1, 5):
        res = order_residual(problem, z, series, k)
        assert np.max(np.abs(pp.left_basis_Q @ res)) <= 1e-9
        coeffs, *_ = np.linalg.lstsq(rows.T, res, rcond=None)
        assert np.max(np.abs(rows.T @ coeffs - res)) <= 1e-9


def test_left_corrections_first_order():
    problem, z = toy_state((1, 1), 0.2, 1.0)
    pp = build_projectors(z)
    row0 = np.array([[1.0, 1.0, 1.0, 1.0]])
    series = run(problem, z, 2, left=True, left_rows0=row0, pp=pp)
    S1 = problem.shifts.combine(series.plets[0])
    expected = pp.solve_left((row0 @ (S1 - problem.order(1)))[0])
    assert np.allclose(series.left_orders[0][0], expected)
    for rows in series.left_orders:
        assert np.max(np.abs(rows @ z.reduction_rows().T)) <= 1e-10
        assert np.max(np.abs(rows - rows @ pp.left_basis_Q.T @ pp.left_basis_Q)) <= 1e-10


def test_left_corrections_vanish_without_perturbation():
    problem = PerturbationProblem((DECADIC_H0,), TOY)
    z = solve_zero_order(problem)[0]
    series = run(problem, z, 3, left=True)
    assert all(not np.any(rows) for rows in series.left_orders)


def test_left_rows_are_left_eigenrows_to_first_order():
    problem, z = toy_state((1, 1), 0.2, 1.0)
    series = run(problem, z, 1, left=True)
    lam = 1e-3
    rows = series.left_rows0 + lam * series.left_orders[0]
    plet = np.asarray(z.plet0) + lam * series.plets[0]
    A = problem.at(lam) - problem.shifts.combine(plet)
    assert np.max(np.abs(rows @ A)) <= 50 * lam**2
    # without the correction the residual is first order
    assert np.max(np.abs(series.left_rows0 @ A)) > 10 * lam**2


def test_left_corrections_need_plets_first():
    problem, z = toy_state((1, 1))
    series = CorrectionSeries(coupling_matrix(z, problem.shifts), left_rows0=z.reduction_rows(), left_orders=[])
    with pytest.raises(IndexError):
        left_corrections(problem, z, build_projectors(z), series, 1)


def test_series_at_zero_is_zero_order():
    problem, z = toy_state((1, 1))
    series = run(problem, z, 1)
    plet, wave = evaluate_series(series, z, 0.0)
    assert plet.g == z.plet0.g and wave.h == z.wave0.h


def test_series_against_newton_at_large_p():
    exp = rescale_decadic(0.0, 1.0, 1e4)
    problem, sigma = exp.stack, exp.sigma
    roots = newton_roots(problem.at(sigma), problem.shifts)
    for z in solve_zero_order(problem):
        series = run(problem, z, 3)
        guess = np.asarray(evaluate_series(series, z, sigma)[0])
        ref = min((g for g, *_ in roots), key=lambda g: np.linalg.norm(g - guess))
        assert np.max(np.abs(guess - ref)) <= 20 * sigma**4


def test_error_decreases_with_order():
    problem = rescale_decadic(0.5, -0.7, 1e3).stack
    roots = newton_roots(problem.at(0.1), problem.shifts)
    for z in solve_zero_order(problem):
        series = run(problem, z, 3)
        ref = min((g for g, *_ in roots), key=lambda g: np.linalg.norm(g - np.asarray(z.plet0)))
        errs = [np.max(np.abs(np.asarray(evaluate_series(series, z, 0.1, K)[0]) - ref)) for K in (1, 2, 3)]
        assert errs[0] > errs[1] > errs[2]


def test_first_order_plet_is_newton_derivative():
    problem = rescale_decadic(0.3, 0.6, 1e3).stack
    for z in solve_zero_order(problem):
        series = run(problem, z, 1)

        def plet_at(lam):
            roots = newton_roots(problem.at(lam), problem.shifts, 64)
            return min((g for g, *_ in roots), key=lambda g: np.linalg.norm(g - np.asarray(z.plet0)))

        def central(h):
            return (plet_at(h) - plet_at(-h)) / (2 * h)

        h = 1e-4
        deriv = (4 * central(h / 2) - central(h)) / 3
        assert np.max(np.abs(deriv - series.plets[0])) <= 1e-5 * np.max(np.abs(series.plets[0]))


def test_negative_order_rejected():
    problem, z = toy_state((1, 1))
    with pytest.raises(ValueError):
        run(problem, z, -1)
