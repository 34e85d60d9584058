import json

import pytest
from pydantic import ValidationError

from src.config import RunConfigFile, SolverConfig
from src.errors import ContractViolation
from src.models import ProblemKind, PSchedule, StepInit, Variant


def test_defaults():
    config = SolverConfig()
    assert config.variant == Variant.AVERAGE
    assert (config.tau, config.gamma_min, config.gamma_max) == (2.0, 1e-8, 1e8)
    assert (config.delta, config.p_min, config.m) == (1e-4, 0.85, 5)
    assert config.step_init == StepInit.CONSTANT
    assert (config.tol, config.max_iter) == (1e-8, 10000)
    assert config.initial_gamma == 1e-8


@pytest.mark.parametrize("p_min", [0.8, 0.5, 1.01])
def test_p_min_must_exceed_four_fifths(p_min):
    with pytest.raises(ValidationError, match="4/5"):
        SolverConfig(p_min=p_min)


def test_p_min_just_above_floor_is_accepted():
    assert SolverConfig(p_min=0.81).p_min == 0.81


@pytest.mark.parametrize(
    "kwargs",
    [
        {"tau": 1.0},
        {"delta": 0.0},
        {"delta": 1.0},
        {"gamma_min": 0.0},
        {"gamma_min": 2.0, "gamma_max": 1.0},
        {"gamma0": 5.0, "gamma_min": 1.0, "gamma_max": 2.0},
        {"tol": 0.0},
        {"max_iter": 0},
        {"m": -1},
        {"unknown": 1},
    ],
)
def test_invalid_parameters_are_rejected(kwargs):
    with pytest.raises(ValidationError):
        SolverConfig(**kwargs)


def test_config_is_frozen():
    with pytest.raises(ValidationError):
        SolverConfig().tau = 3.0


def test_auto_mu_per_variant():
    average = SolverConfig(gamma_min=1.0, delta=0.5, p_min=1.0)
    assert average.mu == 0.25
    assert average.mu_range() == (0.0, 0.25, True)
    window = SolverConfig(variant=Variant.MAX, gamma_min=1.0, delta=0.5)
    assert window.mu == 0.25
    assert window.mu_range() == (0.0, 0.5, False)


def test_monotone_uses_unit_p_in_mu_range():
    config = SolverConfig(variant=Variant.MONOTONE, gamma_min=1.0, delta=0.5, p_min=0.85)
    assert config.effective_p_min == 1.0
    assert config.mu == 0.25


def test_explicit_mu_outside_range_is_rejected():
    with pytest.raises(ValidationError, match="mu_diag"):
        SolverConfig(gamma_min=1.0, delta=0.5, p_min=1.0, mu_diag=0.3)
    with pytest.raises(ValidationError, match="mu_diag"):
        SolverConfig(variant=Variant.MAX, gamma_min=1.0, delta=0.5, mu_diag=0.5)
    assert SolverConfig(gamma_min=1.0, delta=0.5, p_min=1.0, mu_diag=0.25).mu == 0.25


def test_constant_p_schedule():
    config = SolverConfig(p_min=0.9)
    assert [config.p_k(k) for k in range(3)] == [0.9, 0.9, 0.9]


def test_increasing_p_schedule_starts_at_p_min_and_tends_to_one():
    config = SolverConfig(p_min=0.9, p_schedule=PSchedule.INCREASING)
    weights = [config.p_k(k) for k in range(100)]
    assert weights[0] == pytest.approx(0.9)
    assert all(0.9 - 1e-15 <= p <= 1.0 for p in weights)
    assert all(b >= a for a, b in zip(weights, weights[1:]))
    assert weights[-1] > 0.998


def test_monotone_weight_is_one():
    config = SolverConfig(variant=Variant.MONOTONE, p_min=0.85)
    assert config.p_k(0) == config.p_k(7) == 1.0


def test_load_without_file_uses_defaults():
    config = RunConfigFile.load()
    assert config.problem.kind == ProblemKind.LASSO
    assert config.solver == SolverConfig()


def test_load_merges_file_and_overrides(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({
        "problem": {"kind": "quartic", "seed": 3},
        "solver": {"variant": "max", "m": 3, "tol": 1e-6},
    }))
    config = RunConfigFile.load(path, {"solver": {"m": 7}})
    assert config.problem.kind == ProblemKind.QUARTIC
    assert config.problem.seed == 3
    assert config.solver.variant == Variant.MAX
    assert config.solver.m == 7
    assert config.solver.tol == 1e-6


def test_load_rejects_unknown_keys(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"solver": {"step_size": 1.0}}))
    with pytest.raises(ValidationError):
        RunConfigFile.load(path)


def test_load_rejects_missing_file(tmp_path):
    with pytest.raises(ContractViolation, match="not found"):
        RunConfigFile.load(tmp_path / "absent.json")


def test_load_rejects_invalid_json(tmp_path):
    path = tmp_path / "run.json"
    path.write_text("{not json")
    with pytest.raises(ContractViolation):
        RunConfigFile.load(path)


def test_load_ignores_environment(monkeypatch):
    monkeypatch.setenv("solver", '{"variant": "max"}')
    assert RunConfigFile.load().solver.variant == Variant.AVERAGE


def test_resolved_echo_holds_every_default():
    echo = RunConfigFile.load(overrides={"solver": {"variant": "monotone"}}).resolved()
    assert echo["solver"]["variant"] == "monotone"
    assert echo["solver"]["p_min"] == 0.85
    assert echo["problem"]["kind"] == "lasso"
    assert echo["output"] == {"csv_path": None, "json_path": None}
    json.dumps(echo)
