"""Built-in landscapes where the trap-free assumptions are deliberately broken.

``false_trap_demo``: controls constrained to a one-parameter family of
qubit states, so the map is not locally surjective and a suboptimal
maximum appears.  ``real_trap_demo``: a dephasing qubit whose field cannot
influence the measured coherence, so the reachable optimum sits far below
the state-space optimum.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .channels import LindbladModel, jacobian_rank
from .controls import FunctionControl, KrausControl, LindbladControl
from .landscape import (
    AscentConfig,
    ascend,
    classify_critical_point,
    multistart_ascent,
    oracle_optimum,
    verify_trap_free,
)
from .objectives import ObjectiveSpec
from .quantum import SIGMA_X, SIGMA_Z, DensityMatrix, Observable, pure_state
from .rng import stream

BLOCH_A = 0.6
BLOCH_B = 0.3


def bloch_z(theta):
    return BLOCH_A * np.cos(theta) + BLOCH_B * np.cos(2 * theta)


def bloch_z_prime(theta):
    return -BLOCH_A * np.sin(theta) - 2 * BLOCH_B * np.sin(2 * theta)


def bloch_family_state(theta):
    """(I + r_z(theta) sigma_z) / 2 as a raw matrix."""
    theta = float(np.asarray(theta).reshape(-1)[0])
    return 0.5 * (np.eye(2) + bloch_z(theta) * SIGMA_Z)


def bloch_family_control():
    return FunctionControl(
        bloch_family_state,
        1,
        sampler=lambda rng: rng.uniform(0.0, 2 * np.pi, 1),
        name="blochFamily",
    )


def scan_bloch_family(points=10_000):
    """Grid scan of r_z over [0, 2 pi) plus root refinement of r_z'.

    Returns the grid maximum, the largest |r_z| on the grid and the
    critical angles (reduced to [0, pi] by the reflection symmetry
    theta -> 2 pi - theta) with their values.
    """
    grid = 2 * np.pi * np.arange(points) / points
    values = bloch_z(grid)
    # derivative sampled at cell midpoints so that exact zeros fall strictly inside cells
    mids = 2 * np.pi * (np.arange(points) + 0.5) / points
    d = bloch_z_prime(mids)
    roots = []
    for k in range(points):
        a, b = mids[k], mids[(k + 1) % points] + (2 * np.pi if k == points - 1 else 0.0)
        if d[k] == 0.0:
            roots.append(a)
        elif d[k] * d[(k + 1) % points] < 0:
            roots.append(brentq(bloch_z_prime, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps))
    roots = np.mod(np.array(roots), 2 * np.pi)
    reduced = sorted({round(min(r, 2 * np.pi - r), 12) for r in roots})
    reduced = [0.0 if abs(r) < 1e-12 else r for r in reduced]
    return {
        "gridMax": float(np.max(values)),
        "gridArgmax": float(grid[int(np.argmax(values))]),
        "maxAbsRz": float(np.max(np.abs(values))),
        "criticalThetas": [float(r) for r in reduced],
        "criticalValues": [float(bloch_z(r)) for r in reduced],
        "allCriticalThetas": sorted(float(r) for r in roots),
    }


@dataclass
class FalseTrapReport:
    scan: dict
    trap_run: object
    trap_report: object
    jacobian_rank: int
    constrained_verdict: object
    constrained_runs: list
    kinematic_verdict: object
    kinematic_runs: list
    oracle_value: float
    kinematic_oracle: float
    extra: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "scan": self.scan,
            "trapRun": self.trap_run.summary() | {"finalTheta": float(self.trap_run.final_params[0])},
            "trapClassification": self.trap_report.to_json(),
            "jacobianRank": self.jacobian_rank,
            "constrainedVerdict": self.constrained_verdict.to_json(),
            "familyOracle": self.oracle_value,
            "kinematicVerdict": self.kinematic_verdict.to_json(),
            "kinematicOracle": self.kinematic_oracle,
        }


def false_trap_demo(theta0=3.0, n_starts=20, seed=0, kinematic_starts=20):
    spec = ObjectiveSpec("quantum", "typeOne", Observable(SIGMA_Z))
    scan = scan_bloch_family()
    family_oracle = scan["gridMax"]
    cmap = bloch_family_control()
    cfg = AscentConfig(max_iterations=2000, step_size=1.0, seed=seed)
    trap_run = ascend(spec, cmap, [theta0], cfg)
    trap_report = classify_critical_point(spec, cmap, trap_run.final_params, cfg, oracle_value=family_oracle)
    rank = jacobian_rank(cmap, np.array([theta0]))
    constrained_runs = multistart_ascent(spec, cmap, n_starts, cfg)
    constrained = verify_trap_free(constrained_runs, family_oracle)
    kmap = KrausControl(2, 4)
    kcfg = AscentConfig(max_iterations=2000, step_size=100.0, seed=seed)
    kruns = multistart_ascent(spec, kmap, kinematic_starts, kcfg)
    k_oracle = oracle_optimum(spec).value
    kverdict = verify_trap_free(kruns, k_oracle)
    return FalseTrapReport(
        scan, trap_run, trap_report, rank, constrained, constrained_runs, kverdict, kruns, family_oracle, k_oracle
    )


# --------------------------------------------------------------------------


def dephasing_model(phase_control=False, rate=1.0):
    """Two-level model with sigma_z dephasing.

    Default: no drift and a control coupled to the identity, so the field
    only adds a global phase and cannot act on the state.  With
    ``phase_control`` the drift and control are both sigma_z; the field then
    rotates the coherence phase but still cannot undo the dephasing.
    """
    if phase_control:
        return LindbladModel(Observable(SIGMA_Z), (Observable(SIGMA_Z),), ((SIGMA_Z, rate),))
    return LindbladModel(Observable(np.zeros((2, 2))), (Observable(np.eye(2)),), ((SIGMA_Z, rate),))


@dataclass
class RealTrapReport:
    closed_form: float
    dynamic_runs: list
    dynamic_verdict: object
    jacobian_ranks: list
    kinematic_runs: list
    kinematic_verdict: object
    phase_runs: list
    phase_verdict: object
    phase_ranks: list
    oracle_value: float

    def to_json(self):
        return {
            "closedForm": self.closed_form,
            "oracleValue": self.oracle_value,
            "dynamicFinalObjectives": [r.final_objective for r in self.dynamic_runs],
            "dynamicVerdict": self.dynamic_verdict.to_json(),
            "jacobianRanks": self.jacobian_ranks,
            "kinematicVerdict": self.kinematic_verdict.to_json(),
            "phaseControlled": {
                "finalObjectives": [r.final_objective for r in self.phase_runs],
                "verdict": self.phase_verdict.to_json(),
                "jacobianRanks": self.phase_ranks,
            },
        }


def real_trap_demo(rate=1.0, duration=1.0, steps=4, n_starts=10, seed=0, rank_points=10, kinematic_starts=20):
    spec = ObjectiveSpec("quantum", "typeOne", Observable(SIGMA_X))
    plus = pure_state([1.0, 1.0])
    oracle = oracle_optimum(spec).value
    closed = float(np.exp(-2.0 * rate * duration))
    cfg = AscentConfig(max_iterations=200, step_size=1.0, seed=seed)

    cmap = LindbladControl(dephasing_model(rate=rate), 0.0, duration, steps, plus)
    runs = multistart_ascent(spec, cmap, n_starts, cfg)
    verdict = verify_trap_free(runs, oracle)
    rng = stream(seed, "points")
    ranks = [jacobian_rank(cmap, cmap.sample(rng)) for _ in range(rank_points)]

    pmap = LindbladControl(dephasing_model(phase_control=True, rate=rate), 0.0, duration, steps, plus)
    # finite differences through the refined integrator bottom out near 1e-8
    pcfg = AscentConfig(max_iterations=200, step_size=1.0, gradient_tolerance=1e-6, seed=seed)
    pruns = multistart_ascent(spec, pmap, n_starts, pcfg)
    pverdict = verify_trap_free(pruns, oracle)
    pranks = [jacobian_rank(pmap, pmap.sample(rng)) for _ in range(min(rank_points, 3))]

    kmap = KrausControl(2, 4, DensityMatrix(plus.entries))
    kruns = multistart_ascent(spec, kmap, kinematic_starts, AscentConfig(step_size=100.0, seed=seed))
    kverdict = verify_trap_free(kruns, oracle)
    return RealTrapReport(closed, runs, verdict, ranks, kruns, kverdict, pruns, pverdict, pranks, oracle)
