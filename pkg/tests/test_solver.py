import numpy as np
import pytest

from src.config import SolverConfig
from src.diagnostics import gamma_tail_bounded, stationarity_check, steps_vanish, verify_trace
from src.errors import ContractViolation, InvariantViolation, SolverAbort
from src import solver as solver_module
from src.models import AverageMerit, CompositeProblem, RunStatus, SmoothObjective, StepInit, Variant
from src.problems import build_problem, make_box_rosenbrock
from src.prox import zero_regularizer
from src.reporting import trace_csv_text, trace_rows
from src.solver import (
    StepHistory,
    backtrack,
    initial_stepsize,
    npg_average,
    npg_max,
    residual,
    solve,
)
from tests.conftest import L0_SPEC, QUARTIC_SPEC, scalar_quadratic


def _history(s: float, y: float) -> StepHistory:
    return StepHistory(np.array([0.0]), np.array([s]), np.array([0.0]), np.array([y]))


def test_constant_rule_returns_gamma_min():
    assert initial_stepsize(None, SolverConfig(gamma_min=1.0)) == 1.0
    assert initial_stepsize(_history(1.0, 3.0), SolverConfig(gamma_min=1.0)) == 1.0


def test_constant_rule_uses_gamma0_when_set():
    assert initial_stepsize(None, SolverConfig(gamma_min=0.1, gamma0=2.0)) == 2.0


def test_spectral_rule_inside_bounds():
    config = SolverConfig(step_init=StepInit.BB, gamma_min=0.1, gamma_max=10.0)
    assert initial_stepsize(_history(1.0, 3.0), config) == 3.0


def test_spectral_rule_clamps():
    config = SolverConfig(step_init=StepInit.BB, gamma_min=0.1, gamma_max=10.0)
    assert initial_stepsize(_history(1.0, 100.0), config) == 10.0
    assert initial_stepsize(_history(1.0, 0.001), config) == 0.1


def test_spectral_rule_falls_back():
    config = SolverConfig(step_init=StepInit.BB, gamma_min=0.1, gamma_max=10.0)
    assert initial_stepsize(None, config) == 0.1
    assert initial_stepsize(_history(0.0, 1.0), config) == 0.1
    assert initial_stepsize(_history(1.0, -2.0), config) == 0.1


def test_residual():
    assert residual(4.0, 0.25) == 1.0
    assert residual(1e8, 0.0) == 0.0


def test_backtrack_accepts_first_trial():
    problem = scalar_quadratic()
    config = SolverConfig(tau=2.0, delta=0.5, gamma_min=1.0)
    outcome = backtrack(np.array([1.0]), 0.5, 1.0, problem, config)
    np.testing.assert_array_equal(outcome.x_next, [0.0])
    assert (outcome.gamma_accepted, outcome.backtracks, outcome.q_next) == (1.0, 0, 0.0)


def test_backtrack_amplifies_until_acceptance():
    problem = scalar_quadratic(curvature=4.0)
    config = SolverConfig(tau=2.0, delta=0.5, gamma_min=1.0)
    outcome = backtrack(np.array([1.0]), 2.0, 1.0, problem, config)
    np.testing.assert_array_equal(outcome.x_next, [0.0])
    assert outcome.gamma_accepted == 4.0
    assert outcome.backtracks == 2


def test_backtrack_accepts_zero_step_at_fixed_point():
    problem = scalar_quadratic(x0=0.0)
    outcome = backtrack(np.array([0.0]), 0.0, 1.0, problem, SolverConfig(gamma_min=1.0))
    assert outcome.step_norm == 0.0
    assert outcome.backtracks == 0


def test_backtrack_cap_aborts():
    # gradient with the wrong sign: every trial moves uphill
    uphill = CompositeProblem(
        smooth=SmoothObjective(
            value=lambda x: 0.5 * float(x @ x),
            gradient=lambda x: -np.asarray(x, dtype=float),
            dimension=1,
        ),
        reg=zero_regularizer(),
        x0=[1.0],
    )
    config = SolverConfig(gamma_min=1.0, max_backtracks=5)
    with pytest.raises(SolverAbort) as excinfo:
        backtrack(np.array([1.0]), 0.5, 1.0, uphill, config)
    assert "nonfinite curvature" in excinfo.value.diagnostic


def test_average_run_on_scalar_quadratic(quadratic_config):
    result = npg_average(scalar_quadratic(), quadratic_config)
    assert result.status == RunStatus.CONVERGED
    assert result.iterations == 2
    assert [r.q for r in result.trace] == [0.5, 0.0]
    np.testing.assert_array_equal(result.x_final, [0.0])
    assert result.final_residual <= quadratic_config.tol


def test_max_run_on_scalar_quadratic():
    config = SolverConfig(variant=Variant.MAX, m=5, gamma_min=1.0, delta=0.5, tol=1e-10)
    result = npg_max(scalar_quadratic(), config)
    assert result.status == RunStatus.CONVERGED
    assert [r.q for r in result.trace] == [0.5, 0.0]


def test_stationary_start_converges_with_zero_step():
    result = solve(scalar_quadratic(x0=0.0), SolverConfig(gamma_min=1.0))
    assert result.status == RunStatus.CONVERGED
    assert result.iterations == 1
    assert result.trace[0].step_norm == 0.0


def test_entry_points_check_the_variant():
    with pytest.raises(ContractViolation):
        npg_max(scalar_quadratic(), SolverConfig())
    with pytest.raises(ContractViolation):
        npg_average(scalar_quadratic(), SolverConfig(variant=Variant.MAX))


def test_max_iter_status():
    result = solve(scalar_quadratic(curvature=4.0), SolverConfig(gamma_min=1.0, max_iter=1, tol=1e-300))
    assert result.status == RunStatus.MAX_ITER
    assert result.iterations == 1


def test_record_iterates():
    config = SolverConfig(gamma_min=1.0, delta=0.5, p_min=1.0, tol=1e-10, record_iterates=True)
    result = solve(scalar_quadratic(), config)
    assert len(result.iterates) == result.iterations + 1
    np.testing.assert_array_equal(result.iterates[0], [1.0])


def test_lasso_reaches_tolerance(lasso_run, lasso_reference):
    assert lasso_run.status == RunStatus.CONVERGED
    assert lasso_run.final_residual <= 1e-8
    assert abs(lasso_run.final_q - lasso_reference.final_q) <= 1e-8


def test_lasso_steps_vanish_and_gamma_stays_bounded(lasso_run):
    assert steps_vanish(lasso_run, 1e-8, 1e-8)
    assert gamma_tail_bounded(lasso_run.trace)


def test_degenerate_variants_share_iterates(lasso_problem):
    configs = [
        SolverConfig(variant=Variant.MONOTONE, max_iter=300),
        SolverConfig(variant=Variant.AVERAGE, p_min=1.0, max_iter=300),
        SolverConfig(variant=Variant.MAX, m=0, max_iter=300),
    ]
    traces = [[row[:-1] for row in trace_rows(solve(lasso_problem, c).trace)] for c in configs]
    assert traces[0] == traces[1] == traces[2]


def test_monotone_q_never_increases(lasso_problem):
    result = solve(lasso_problem, SolverConfig(variant=Variant.MONOTONE, max_iter=300))
    q = result.q_history
    assert all(b <= a for a, b in zip(q, q[1:]))


@pytest.mark.parametrize("variant", [Variant.AVERAGE, Variant.MAX, Variant.MONOTONE])
@pytest.mark.parametrize("name", ["lasso", "quartic", "l0quad", "box_rosenbrock"])
def test_merit_invariants_across_suite(name, variant, lasso_problem, quartic_problem):
    problems = {
        "lasso": lambda: lasso_problem,
        "quartic": lambda: quartic_problem,
        "l0quad": lambda: build_problem(L0_SPEC),
        "box_rosenbrock": make_box_rosenbrock,
    }
    config = SolverConfig(variant=variant, step_init=StepInit.BB, max_iter=500)
    result = solve(problems[name](), config)
    assert result.violations == []
    assert verify_trace(result, config).ok
    if result.status == RunStatus.CONVERGED:
        assert steps_vanish(result, config.tol, config.gamma_min)
        assert gamma_tail_bounded(result.trace)
    merits = result.merit_history
    scale = max(1.0, abs(result.q_initial))
    assert all(b <= a + 1e-12 * scale for a, b in zip(merits, merits[1:]))


@pytest.mark.parametrize("variant", [Variant.AVERAGE, Variant.MAX])
def test_quartic_converges_without_global_lipschitz(quartic_problem, variant):
    config = SolverConfig(variant=variant, step_init=StepInit.BB, max_iter=20000, tol=1e-8)
    result = solve(quartic_problem, config)
    assert result.status == RunStatus.CONVERGED
    assert max(r.backtracks for r in result.trace) <= 60
    assert stationarity_check(quartic_problem, result.x_final) <= 1e-6
    assert steps_vanish(result, config.tol, config.gamma_min)
    assert gamma_tail_bounded(result.trace)


def _inflating_merit(state, q_next, p_k):
    return AverageMerit(phi=state.phi + 1.0)


def test_violations_are_collected(monkeypatch, quadratic_config):
    monkeypatch.setattr(solver_module, "merit_update", _inflating_merit)
    result = solve(scalar_quadratic(), quadratic_config)
    assert any("merit increased" in v for v in result.violations)


def test_strict_mode_raises_on_violation(monkeypatch, quadratic_config):
    monkeypatch.setattr(solver_module, "merit_update", _inflating_merit)
    strict = quadratic_config.model_copy(update={"strict_invariants": True})
    with pytest.raises(InvariantViolation):
        solve(scalar_quadratic(), strict)


def test_repeated_runs_are_bitwise_identical(quartic_problem):
    config = SolverConfig(variant=Variant.MAX, step_init=StepInit.BB, max_iter=300)
    first = trace_csv_text(solve(build_problem(QUARTIC_SPEC), config).trace)
    second = trace_csv_text(solve(quartic_problem, config).trace)
    assert first == second
