"""Ascent engines and topology probes for control landscapes."""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import classical as C
from .config import TOL
from .controls import safe_states
from .errors import LandscapeError, NotCritical, NotLinearObjective, NotSameLevel
from .linalg import dag
from .objectives import (
    ObjectiveSpec,
    control_objective,
    gradient_controls,
    value_and_gradient,
    value_array,
)
from .quantum import DensityMatrix, gibbs_weights, random_density
from .rng import stream

ARMIJO_FACTOR = 0.5
ARMIJO_C = 1e-4
ARMIJO_MAX_HALVINGS = 40
BATCH_SIZE = 128


@dataclass(frozen=True)
class AscentConfig:
    max_iterations: int = 2000
    step_size: float = 1.0
    gradient_tolerance: float = TOL.gradient_tolerance
    armijo: bool = True
    seed: int = 0

    def __post_init__(self):
        if int(self.max_iterations) < 0:
            raise ValueError("max_iterations must be nonnegative")
        if not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if not self.gradient_tolerance > 0:
            raise ValueError("gradient_tolerance must be positive")

    def to_json(self):
        return {
            "maxIterations": int(self.max_iterations),
            "stepSize": float(self.step_size),
            "gradientTolerance": float(self.gradient_tolerance),
            "armijoBacktracking": "on" if self.armijo else "off",
            "seed": int(self.seed),
        }


@dataclass
class OptimizationRun:
    index: int
    seed: int
    initial_params: np.ndarray
    final_params: np.ndarray
    trajectory: list
    final_objective: float
    gradient_norm_at_end: float
    converged: bool
    termination: str
    error: str = None
    regularized_steps: int = 0

    @property
    def iterations(self):
        return len(self.trajectory) - 1

    def summary(self):
        return {
            "index": self.index,
            "seed": self.seed,
            "finalObjective": self.final_objective,
            "gradientNormAtEnd": self.gradient_norm_at_end,
            "converged": self.converged,
            "iterations": self.iterations,
            "termination": self.termination,
            "error": self.error,
            "regularizedSteps": self.regularized_steps,
        }


# --------------------------------------------------------------------------
# gradient ascent


def _line_search(spec, cmap, x, f, g, cfg):
    """Armijo backtracking for every row; returns (new_x, accepted mask)."""
    b = len(x)
    step = np.full(b, float(cfg.step_size))
    gg = np.sum(g * g, axis=1)
    new_x = x.copy()
    pending = np.ones(b, dtype=bool)
    tries = ARMIJO_MAX_HALVINGS + 1 if cfg.armijo else 1
    for _ in range(tries):
        idx = np.flatnonzero(pending)
        trial = x[idx] + step[idx, None] * g[idx]
        try:
            arr, errors = safe_states(cmap, trial)
            ft = np.full(len(idx), np.nan)
            ok = np.array([e is None for e in errors])
            if ok.any():
                ft[ok] = value_array(spec, arr[ok])
        except LandscapeError:
            ft = np.full(len(idx), np.nan)
        if cfg.armijo:
            # compare the gain itself: f + tiny rounds back to f and would accept a null step
            good = (ft - f[idx] >= ARMIJO_C * step[idx] * gg[idx]) & (ft > f[idx])
        else:
            good = np.isfinite(ft)
        new_x[idx[good]] = trial[good]
        pending[idx[good]] = False
        if not pending.any():
            break
        step[pending] *= ARMIJO_FACTOR
    return new_x, ~pending


def ascend_batch(spec, cmap, x0, cfg, indices=None, seeds=None):
    """Gradient ascent from each row of ``x0``, advanced in lock step.

    Each row is an independent run: it stops on its own gradient tolerance,
    iteration budget, line-search failure or evaluation failure.
    """
    x = np.array(np.atleast_2d(x0), dtype=float)
    b = len(x)
    indices = list(range(b)) if indices is None else list(indices)
    seeds = [cfg.seed] * b if seeds is None else list(seeds)
    f, g, reg, errors = value_and_gradient(spec, cmap, x)
    gnorm = np.linalg.norm(g, axis=1)
    traj = [[float(v)] for v in f]
    reg_count = reg.astype(int)
    status = [None] * b
    for i in range(b):
        if errors[i] is not None:
            status[i] = "evaluationFailure"
        elif gnorm[i] <= cfg.gradient_tolerance:
            status[i] = "gradientTolerance"
    for _ in range(int(cfg.max_iterations)):
        active = np.array([s is None for s in status])
        if not active.any():
            break
        idx = np.flatnonzero(active)
        new_x, accepted = _line_search(spec, cmap, x[idx], f[idx], g[idx], cfg)
        for j in idx[~accepted]:
            status[j] = "lineSearchFailed"
        moved = idx[accepted]
        if moved.size == 0:
            continue
        fx, gx, rx, ex = value_and_gradient(spec, cmap, new_x[accepted])
        x[moved] = new_x[accepted]
        f[moved] = fx
        g[moved] = gx
        gnorm[moved] = np.linalg.norm(gx, axis=1)
        reg_count[moved] += rx
        for k, j in enumerate(moved):
            traj[j].append(float(fx[k]))
            if ex[k] is not None:
                errors[j] = ex[k]
                status[j] = "evaluationFailure"
            elif gnorm[j] <= cfg.gradient_tolerance:
                status[j] = "gradientTolerance"
    runs = []
    for i in range(b):
        runs.append(
            OptimizationRun(
                index=indices[i],
                seed=seeds[i],
                initial_params=np.array(np.atleast_2d(x0)[i], dtype=float),
                final_params=x[i].copy(),
                trajectory=traj[i],
                final_objective=float(f[i]),
                gradient_norm_at_end=float(gnorm[i]),
                converged=status[i] == "gradientTolerance",
                termination=status[i] or "maxIterations",
                error=errors[i],
                regularized_steps=int(reg_count[i]),
            )
        )
    return runs


def ascend(spec, cmap, x0, cfg, index=0):
    """A single gradient ascent from ``x0``."""
    return ascend_batch(spec, cmap, np.asarray(x0, dtype=float)[None, :], cfg, [index], [cfg.seed])[0]


def worker_count():
    try:
        return max(1, int(os.environ.get("LANDSCAPE_LAB_THREADS", "1")))
    except ValueError:
        return 1


def multistart_ascent(spec, cmap, n_starts, cfg, workers=None):
    """``n_starts`` seeded ascents; run ``i`` starts from the stream ``(seed, "init", i)``.

    Runs are grouped into lock-step batches which may execute on a thread
    pool (size from ``LANDSCAPE_LAB_THREADS`` unless ``workers`` is given);
    the result list is always ordered by run index.
    """
    if n_starts < 1:
        raise ValueError("n_starts must be at least 1")
    x0 = np.array([cmap.sample(stream(cfg.seed, "init", i)) for i in range(n_starts)])
    size = BATCH_SIZE if cmap.batched else 16
    chunks = [range(s, min(s + size, n_starts)) for s in range(0, n_starts, size)]

    def job(chunk):
        return ascend_batch(spec, cmap, x0[list(chunk)], cfg, list(chunk), [cfg.seed] * len(chunk))

    workers = worker_count() if workers is None else max(1, int(workers))
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, chunks))
    else:
        parts = [job(c) for c in chunks]
    runs = [r for part in parts for r in part]
    runs.sort(key=lambda r: r.index)
    return runs


# --------------------------------------------------------------------------
# oracles and verdicts


@dataclass
class OracleOptimum:
    value: float
    state: object
    degenerate: bool = False


def oracle_optimum(spec):
    """Analytic global maximum of the objective over the whole state space."""
    obs = spec.obs_array
    if spec.regime == "quantum":
        w, v = np.linalg.eigh(obs)
        if spec.kind == "typeOne":
            top = np.flatnonzero(np.isclose(w, w[-1], rtol=0, atol=1e-12))
            vec = v[:, top[0]]
            return OracleOptimum(float(w[-1]), DensityMatrix(np.outer(vec, vec.conj())), len(top) > 1)
        p, value = gibbs_weights(w, spec.temperature)
        rho = (v * p) @ dag(v)
        return OracleOptimum(float(value), DensityMatrix(0.5 * (rho + dag(rho))))
    if spec.kind == "typeOne":
        best = int(np.argmax(obs))
        ties = int(np.sum(obs == obs[best]))
        return OracleOptimum(float(obs[best]), C.point_mass(len(obs), best), ties > 1)
    p, value = gibbs_weights(obs, spec.temperature)
    return OracleOptimum(float(value), C.Distribution(spec.observable.space, p))


@dataclass
class TrapFreeVerdict:
    n_runs: int
    n_converged: int
    n_reached_oracle: int
    worst_gap: float
    trap_free: bool
    oracle_value: float
    value_tol: float
    flags: list = field(default_factory=list)

    def to_json(self):
        return {
            "nRuns": self.n_runs,
            "nConverged": self.n_converged,
            "nReachedOracle": self.n_reached_oracle,
            "worstGap": self.worst_gap,
            "verdict": "trapFree" if self.trap_free else "notTrapFree",
            "oracleValue": self.oracle_value,
            "valueTol": self.value_tol,
            "flags": list(self.flags),
        }


def verify_trap_free(runs, oracle_value, value_tol=TOL.value_tolerance):
    """Trap-free iff every converged run ends within ``value_tol`` of the oracle."""
    if not runs:
        raise ValueError("verify_trap_free needs at least one run")
    conv = [r for r in runs if r.converged]
    gaps = [oracle_value - r.final_objective for r in conv]
    flags = []
    if not conv:
        flags.append("noConvergedRuns")
    reached = sum(1 for r in runs if np.isfinite(r.final_objective) and oracle_value - r.final_objective <= value_tol)
    worst = float(max(gaps)) if gaps else float("nan")
    return TrapFreeVerdict(
        n_runs=len(runs),
        n_converged=len(conv),
        n_reached_oracle=reached,
        worst_gap=worst,
        trap_free=bool(conv) and worst <= value_tol,
        oracle_value=float(oracle_value),
        value_tol=float(value_tol),
        flags=flags,
    )


# --------------------------------------------------------------------------
# critical-point classification


@dataclass
class CriticalPointReport:
    gradient_norm: float
    hessian_spectrum: np.ndarray
    classification: str
    objective_value: float
    oracle_gap: float
    oracle_value: float

    def to_json(self):
        return {
            "gradientNorm": self.gradient_norm,
            "hessianSpectrum": [float(x) for x in np.atleast_1d(self.hessian_spectrum)],
            "classification": self.classification,
            "objectiveValue": self.objective_value,
            "oracleGap": self.oracle_gap,
            "oracleValue": self.oracle_value,
        }


def _state_directions(cmap, x, h=TOL.fd_step):
    """Orthonormal parameter directions that move the state to first order."""
    from .channels import state_coordinates

    p = x.size
    eye = np.eye(p)
    pts = np.concatenate([x + h * eye, x - h * eye])
    arr, _ = safe_states(cmap, pts)
    coords = np.array([state_coordinates(a) for a in arr])
    jac = ((coords[:p] - coords[p:]) / (2 * h)).T
    _, s, vt = np.linalg.svd(jac, full_matrices=False)
    cutoff = max(TOL.rank_rel_cutoff * (s[0] if s.size else 0.0), TOL.rank_abs_floor)
    keep = s > cutoff
    return vt[keep].T


def projected_hessian(spec, cmap, params):
    """Hessian of J(xi(params)) restricted to directions that change the state.

    Gauge directions of the parameterisation (which leave the state fixed)
    are dropped.  If no direction moves the state to first order the full
    parameter Hessian is returned.
    """
    x = np.asarray(params, dtype=float)
    basis = _state_directions(cmap, x)
    if basis.shape[1] == 0:
        basis = np.eye(x.size)
    k = basis.shape[1]
    if cmap.has_pullback:
        h = TOL.fd_step
        pts = np.concatenate([x + h * basis.T, x - h * basis.T])
        _, grads, _, _ = value_and_gradient(spec, cmap, pts)
        hv = (grads[:k] - grads[k:]) / (2 * h)
        hess = hv @ basis
    else:
        fn = control_objective(spec, cmap)
        h = TOL.hessian_step
        f0 = fn(x)
        hess = np.empty((k, k))
        for i in range(k):
            ui = basis[:, i]
            hess[i, i] = (fn(x + 2 * h * ui) - 2 * f0 + fn(x - 2 * h * ui)) / (4 * h * h)
            for j in range(i + 1, k):
                uj = basis[:, j]
                hess[i, j] = hess[j, i] = (
                    fn(x + h * ui + h * uj)
                    - fn(x + h * ui - h * uj)
                    - fn(x - h * ui + h * uj)
                    + fn(x - h * ui - h * uj)
                ) / (4 * h * h)
    hess = 0.5 * (hess + hess.T)
    return np.linalg.eigvalsh(hess)


def classify_critical_point(spec, cmap, params, cfg=None, oracle_value=None, value_tol=TOL.value_tolerance):
    """Classify a critical point as globalMax, saddle, trapCandidate or minimumOrOther.

    ``oracle_value`` defaults to the analytic optimum over the full state
    space; constrained families pass their own reachable optimum.  Raises
    ``NotCritical`` (carrying a report with ``classification=None``) when
    the gradient norm exceeds the configured tolerance.
    """
    cfg = cfg or AscentConfig()
    x = np.asarray(params, dtype=float)
    value = control_objective(spec, cmap)(x)
    grad = gradient_controls(spec, cmap, x)
    gnorm = float(np.linalg.norm(grad))
    if oracle_value is None:
        oracle_value = oracle_optimum(spec).value
    gap = float(oracle_value - value)
    if gnorm > cfg.gradient_tolerance:
        report = CriticalPointReport(gnorm, np.zeros(0), None, value, gap, float(oracle_value))
        raise NotCritical(f"gradient norm {gnorm:.3e} exceeds {cfg.gradient_tolerance}", report)
    spectrum = projected_hessian(spec, cmap, x)
    # absolute floor keeps difference noise on a flat landscape from reading as curvature
    scale = float(np.max(np.abs(spectrum))) if spectrum.size else 0.0
    eps_h = max(TOL.hessian_rel_threshold * scale, TOL.hessian_abs_floor)
    pos = bool(np.any(spectrum > eps_h))
    neg = bool(np.any(spectrum < -eps_h))
    if pos and neg:
        label = "saddle"
    elif not pos:
        label = "globalMax" if gap <= value_tol else "trapCandidate"
    else:
        label = "minimumOrOther"
    return CriticalPointReport(gnorm, spectrum, label, value, gap, float(oracle_value))


# --------------------------------------------------------------------------
# level sets and concavity


@dataclass
class LevelSetPath:
    states: list
    objective_values: np.ndarray
    max_deviation: float


def _as_array(spec, state):
    if spec.regime == "quantum":
        return np.asarray(state.entries if isinstance(state, DensityMatrix) else state)
    return np.asarray(state.weights if isinstance(state, C.Distribution) else state, dtype=float)


def _wrap(spec, arr):
    if spec.regime == "quantum":
        return DensityMatrix(arr)
    return C.Distribution(spec.observable.space, arr)


def level_set_path(spec, s0, s1, steps):
    """Straight segment between two states on the same level of a type-one objective."""
    if spec.kind != "typeOne":
        raise NotLinearObjective("level-set segments are level-preserving only for type-one objectives")
    if steps < 2:
        raise ValueError("steps must be at least 2")
    a0, a1 = _as_array(spec, s0), _as_array(spec, s1)
    j0, j1 = float(value_array(spec, a0)), float(value_array(spec, a1))
    if abs(j0 - j1) > TOL.same_level:
        raise NotSameLevel(f"|J(s0) - J(s1)| = {abs(j0 - j1):.3e} exceeds {TOL.same_level}")
    lams = np.linspace(0.0, 1.0, int(steps))
    states = [_wrap(spec, (1.0 - l) * a0 + l * a1) for l in lams]
    vals = np.array([float(value_array(spec, _as_array(spec, s))) for s in states])
    return LevelSetPath(states, vals, float(np.max(np.abs(vals - vals[0]))))


def sample_states(spec, rng, size):
    if spec.regime == "quantum":
        return random_density(rng, spec.dim, size)
    return C.random_distribution(rng, spec.dim, size)


def same_level_pair(spec, rng, max_tries=1000):
    """Two random states with equal type-one value.

    One of two random states is mixed toward the maximally mixed state
    (uniform distribution) with the scalar weight that lands it on the
    other's level.
    """
    n = spec.dim
    centre = np.eye(n) / n if spec.regime == "quantum" else np.full(n, 1.0 / n)
    jc = float(value_array(spec, centre))
    for _ in range(max_tries):
        a, b = sample_states(spec, rng, 2)
        ja, jb = float(value_array(spec, a)), float(value_array(spec, b))
        if (ja - jc) * (jb - jc) <= 0:
            continue
        if abs(jb - jc) < abs(ja - jc):
            a, b, ja, jb = b, a, jb, ja
        w = (jb - ja) / (jb - jc)
        b = (1.0 - w) * b + w * centre
        if spec.regime == "quantum":
            b = 0.5 * (b + dag(b))
        return a, b
    raise RuntimeError("could not construct a same-level pair")


@dataclass
class ConcavityReport:
    kind: str
    n_samples: int
    statistic: float
    passed: bool

    def to_json(self):
        key = "maxAbsViolation" if self.kind == "typeOne" else "minMargin"
        return {"kind": self.kind, "nSamples": self.n_samples, key: self.statistic, "passed": self.passed}


def concavity_probe(spec, n_samples, seed, lambdas=None):
    """Mixing-identity (type one) or concavity-margin (type two) statistic.

    Type one reports max |(1-l)J(s0) + l J(s1) - J(s_l)|, which must be at
    most 1e-10; type two reports min [J(s_l) - (1-l)J(s0) - l J(s1)],
    which must be at least -1e-9.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    rng = stream(seed, "probe")
    s0 = sample_states(spec, rng, n_samples)
    s1 = sample_states(spec, rng, n_samples)
    if lambdas is None:
        lam = rng.uniform(0.0, 1.0, n_samples)
    else:
        lam = np.resize(np.asarray(lambdas, dtype=float), n_samples)
    shape = (-1, 1, 1) if spec.regime == "quantum" else (-1, 1)
    lb = lam.reshape(shape)
    mix = (1.0 - lb) * s0 + lb * s1
    j0, j1, jm = value_array(spec, s0), value_array(spec, s1), value_array(spec, mix)
    if spec.kind == "typeOne":
        stat = float(np.max(np.abs((1.0 - lam) * j0 + lam * j1 - jm)))
        return ConcavityReport("typeOne", n_samples, stat, stat <= TOL.validity)
    stat = float(np.min(jm - (1.0 - lam) * j0 - lam * j1))
    return ConcavityReport("typeTwo", n_samples, stat, stat >= -TOL.property_slack)
