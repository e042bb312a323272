import numpy as np
import pytest

from landscape_lab import TOL
from landscape_lab import classical as C
from landscape_lab.controls import FrozenControl, FunctionControl, KrausControl, StochasticControl
from landscape_lab.errors import NotCritical, NotLinearObjective, NotSameLevel
from landscape_lab.landscape import (
    AscentConfig,
    OptimizationRun,
    ascend,
    classify_critical_point,
    concavity_probe,
    level_set_path,
    multistart_ascent,
    oracle_optimum,
    same_level_pair,
    verify_trap_free,
)
from landscape_lab.objectives import ObjectiveSpec, value_array
from landscape_lab.quantum import (
    SIGMA_X,
    SIGMA_Z,
    DensityMatrix,
    maximally_mixed,
    random_density,
    random_hermitian,
)
from landscape_lab.rng import stream

KRAUS = AscentConfig(step_size=100.0)


def fake_run(value, converged=True, index=0):
    return OptimizationRun(index, 0, np.zeros(1), np.zeros(1), [value], value, 0.0, converged, "gradientTolerance")


# -- config ----------------------------------------------------------------------


def test_ascent_config_validation():
    with pytest.raises(ValueError):
        AscentConfig(step_size=0.0)
    with pytest.raises(ValueError):
        AscentConfig(gradient_tolerance=-1.0)
    with pytest.raises(ValueError):
        AscentConfig(max_iterations=-1)
    assert AscentConfig().to_json()["armijoBacktracking"] == "on"


# -- multistart ascent ---------------------------------------------------------


def test_type_one_qubit_reaches_top_eigenvalue():
    spec = ObjectiveSpec("quantum", "typeOne", SIGMA_Z)
    runs = multistart_ascent(spec, KrausControl(2, 4), 100, KRAUS)
    assert all(r.converged for r in runs)
    assert max(abs(r.final_objective - 1.0) for r in runs) <= 1e-6


def test_type_two_qubit_reaches_free_energy():
    spec = ObjectiveSpec("quantum", "typeTwo", SIGMA_Z, 1.0)
    runs = multistart_ascent(spec, KrausControl(2, 4), 100, KRAUS)
    target = np.log(np.e + np.exp(-1))
    assert max(abs(r.final_objective - target) for r in runs) <= 1e-6


def test_frozen_map_converges_immediately():
    rho = DensityMatrix(random_density(np.random.default_rng(0), 2))
    spec = ObjectiveSpec("quantum", "typeOne", SIGMA_Z)
    runs = multistart_ascent(spec, FrozenControl(rho, 3), 5, AscentConfig())
    for r in runs:
        assert r.converged and r.iterations == 0 and r.gradient_norm_at_end == 0.0
        assert r.final_objective == pytest.approx(np.real(np.trace(rho.entries @ SIGMA_Z)))


def test_trajectories_are_monotone():
    rng = np.random.default_rng(1)
    spec = ObjectiveSpec("quantum", "typeTwo", random_hermitian(rng, 3), 0.5)
    for r in multistart_ascent(spec, KrausControl(3, 9), 20, AscentConfig(step_size=100.0, max_iterations=300)):
        assert np.all(np.diff(r.trajectory) >= -1e-12)
    cspec = ObjectiveSpec("classical", "typeOne", rng.standard_normal(5))
    for r in multistart_ascent(cspec, StochasticControl(5), 20, AscentConfig(step_size=10.0)):
        assert np.all(np.diff(r.trajectory) >= -1e-12)


def test_runs_are_reproducible_and_independent_of_batching():
    spec = ObjectiveSpec("quantum", "typeOne", random_hermitian(np.random.default_rng(2), 3))
    cfg = AscentConfig(step_size=100.0, seed=42, max_iterations=50)
    a = multistart_ascent(spec, KrausControl(3, 9), 10, cfg)
    b = multistart_ascent(spec, KrausControl(3, 9), 10, cfg, workers=4)
    for ra, rb in zip(a, b):
        assert ra.trajectory == rb.trajectory
        np.testing.assert_array_equal(ra.final_params, rb.final_params)
    # run i depends only on (seed, i)
    single = ascend(spec, KrausControl(3, 9), KrausControl(3, 9).sample(stream(42, "init", 7)), cfg, index=7)
    assert single.trajectory == a[7].trajectory
    other = multistart_ascent(spec, KrausControl(3, 9), 10, AscentConfig(step_size=100.0, seed=43, max_iterations=50))
    assert other[0].trajectory != a[0].trajectory


def test_evaluation_failure_is_recorded_per_run():
    def fn(x):
        if x[0] > 0:
            raise_state = np.diag([1.5, -0.5])  # invalid state: this start fails
            return raise_state
        return np.diag([0.5, 0.5])

    cmap = FunctionControl(lambda x: DensityMatrix(fn(x)).entries, 1, sampler=lambda rng: rng.uniform(-1, 1, 1))
    spec = ObjectiveSpec("quantum", "typeOne", SIGMA_Z)
    runs = multistart_ascent(spec, cmap, 12, AscentConfig())
    failed = [r for r in runs if r.termination == "evaluationFailure"]
    assert failed and all(r.error for r in failed)
    assert any(r.converged for r in runs)


def test_iteration_budget_terminates():
    spec = ObjectiveSpec("quantum", "typeOne", SIGMA_Z)
    run = ascend(spec, KrausControl(2, 4), np.random.default_rng(3).standard_normal(32), AscentConfig(max_iterations=2))
    assert run.termination == "maxIterations" and run.iterations == 2 and not run.converged


# -- verdicts ---------------------------------------------------------------------


def test_verify_trap_free():
    v = verify_trap_free([fake_run(1.0), fake_run(1.0 - 1e-7)], 1.0)
    assert v.trap_free and v.n_reached_oracle == 2 and v.worst_gap == pytest.approx(1e-7)
    v = verify_trap_free([fake_run(1.0), fake_run(-0.2)], 1.0)
    assert not v.trap_free and v.worst_gap == pytest.approx(1.2)
    v = verify_trap_free([fake_run(0.0, converged=False)], 1.0)
    assert not v.trap_free and "noConvergedRuns" in v.flags
    # unconverged runs do not count against the verdict
    assert verify_trap_free([fake_run(1.0), fake_run(0.0, converged=False)], 1.0).trap_free
    with pytest.raises(ValueError):
        verify_trap_free([], 1.0)


# -- oracles ------------------------------------------------------------------------


def test_oracle_examples():
    opt = oracle_optimum(ObjectiveSpec("quantum", "typeOne", SIGMA_Z))
    assert opt.value == 1.0 and not opt.degenerate
    np.testing.assert_allclose(np.abs(opt.state.entries), np.diag([1.0, 0.0]), atol=1e-15)
    opt = oracle_optimum(ObjectiveSpec("quantum", "typeTwo", SIGMA_Z, 1.0))
    assert opt.value == pytest.approx(1.126928, abs=1e-6)
    np.testing.assert_allclose(np.diag(opt.state.entries).real, [0.119203, 0.880797], atol=1e-6)
    opt = oracle_optimum(ObjectiveSpec("classical", "typeOne", [1, 2, 3, 4]))
    assert opt.value == 4 and opt.state.weights[3] == 1.0
    opt = oracle_optimum(ObjectiveSpec("classical", "typeOne", [4, 1, 4]))
    assert opt.degenerate and opt.state.weights[0] == 1.0
    assert oracle_optimum(ObjectiveSpec("quantum", "typeOne", np.eye(3))).degenerate
    opt = oracle_optimum(ObjectiveSpec("classical", "typeTwo", [1.0, -1.0], 1.0))
    assert opt.value == pytest.approx(np.log(np.e + np.exp(-1)))


# -- classification ------------------------------------------------------------------


def test_projector_channel_is_global_max():
    o = random_hermitian(np.random.default_rng(4), 3)
    cmap = KrausControl(3, 9)
    params = cmap.projector_params(np.linalg.eigh(o)[1][:, -1])
    rep = classify_critical_point(ObjectiveSpec("quantum", "typeOne", o), cmap, params)
    assert rep.classification == "globalMax" and rep.oracle_gap <= 1e-8


def test_flat_landscape_is_global_max():
    rep = classify_critical_point(ObjectiveSpec("quantum", "typeOne", np.eye(2)), KrausControl(2, 4), np.arange(32.0))
    assert rep.classification == "globalMax"
    assert rep.objective_value == pytest.approx(1.0) and abs(rep.oracle_gap) <= 1e-12


def test_not_critical_carries_report():
    spec = ObjectiveSpec("quantum", "typeOne", SIGMA_Z)
    with pytest.raises(NotCritical) as err:
        classify_critical_point(spec, KrausControl(2, 4), np.random.default_rng(5).standard_normal(32))
    assert err.value.report.classification is None and err.value.report.gradient_norm > 1e-8


def test_saddle_and_minimum_detection():
    # J(x, y) = x^2 - y^2 through a two-parameter diagonal qubit family
    def saddle(p):
        z = 0.25 * np.tanh(p[0] ** 2 - p[1] ** 2)
        return 0.5 * (np.eye(2) + z * SIGMA_Z)

    spec = ObjectiveSpec("quantum", "typeOne", SIGMA_Z)
    fam = FunctionControl(saddle, 2)
    rep = classify_critical_point(spec, fam, np.zeros(2))
    assert rep.classification == "saddle"

    def bowl(p):
        z = 0.25 * np.tanh(p[0] ** 2 + p[1] ** 2)
        return 0.5 * (np.eye(2) + z * SIGMA_Z)

    assert classify_critical_point(spec, FunctionControl(bowl, 2), np.zeros(2)).classification == "minimumOrOther"


def test_no_trap_candidates_in_kinematic_runs():
    rng = np.random.default_rng(6)
    labels = []
    for n in (2, 3):
        spec = ObjectiveSpec("quantum", "typeOne", random_hermitian(rng, n))
        cmap = KrausControl(n, n * n)
        for r in multistart_ascent(spec, cmap, 30, KRAUS):
            if r.converged:
                labels.append(classify_critical_point(spec, cmap, r.final_params).classification)
    assert labels and "trapCandidate" not in labels


# -- level sets ------------------------------------------------------------------------


def test_level_set_diagonal_example():
    spec = ObjectiveSpec("quantum", "typeOne", SIGMA_X)
    path = level_set_path(spec, np.diag([1.0, 0.0]), np.diag([0.0, 1.0]), 11)
    assert len(path.states) == 11
    assert path.max_deviation <= 1e-12
    np.testing.assert_allclose(path.objective_values, 0.0, atol=1e-12)


def test_level_set_constant_path_and_errors():
    spec = ObjectiveSpec("quantum", "typeOne", SIGMA_Z)
    s = maximally_mixed(2)
    path = level_set_path(spec, s, s, 5)
    assert path.max_deviation == 0.0
    with pytest.raises(NotSameLevel):
        level_set_path(spec, np.diag([1.0, 0.0]), np.diag([0.0, 1.0]), 5)
    with pytest.raises(NotLinearObjective):
        level_set_path(ObjectiveSpec("quantum", "typeTwo", SIGMA_Z, 1.0), s, s, 5)


@pytest.mark.parametrize("regime", ["quantum", "classical"])
def test_random_same_level_pairs(regime):
    rng = np.random.default_rng(7)
    obs = random_hermitian(rng, 4) if regime == "quantum" else rng.standard_normal(4)
    spec = ObjectiveSpec(regime, "typeOne", obs)
    for _ in range(200):
        a, b = same_level_pair(spec, rng)
        assert abs(value_array(spec, a) - value_array(spec, b)) <= 1e-12
        path = level_set_path(spec, a, b, 11)
        assert path.max_deviation <= 1e-10


# -- concavity probe -------------------------------------------------------------------


def test_concavity_probe():
    o = random_hermitian(np.random.default_rng(8), 4)
    rep = concavity_probe(ObjectiveSpec("quantum", "typeOne", o), 10_000, seed=1)
    assert rep.passed and rep.statistic <= 1e-10
    rep = concavity_probe(ObjectiveSpec("quantum", "typeTwo", o, 1.0), 10_000, seed=1)
    assert rep.passed and rep.statistic >= -1e-9
    rep = concavity_probe(ObjectiveSpec("classical", "typeTwo", [1.0, 0.0, 2.0], 0.3, "tsallis:2"), 2000, seed=1)
    assert rep.passed


def test_concavity_probe_endpoints_are_exact():
    spec = ObjectiveSpec("quantum", "typeTwo", SIGMA_Z, 1.0)
    rep = concavity_probe(spec, 100, seed=2, lambdas=[0.0, 1.0])
    assert rep.statistic == 0.0
    with pytest.raises(ValueError):
        concavity_probe(spec, 0, seed=2)


def test_classical_trap_free():
    rng = np.random.default_rng(9)
    for kind, extra in (("typeOne", {}), ("typeTwo", {"temperature": 0.7})):
        spec = ObjectiveSpec("classical", kind, rng.standard_normal(4), **extra)
        runs = multistart_ascent(spec, StochasticControl(4), 30, AscentConfig(step_size=10.0))
        v = verify_trap_free(runs, oracle_optimum(spec).value)
        assert v.trap_free
