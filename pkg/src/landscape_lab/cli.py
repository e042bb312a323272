"""Batch experiment runner.

    landscape-lab <command> --config <path> [--out <dir>] [--seed <u64>] [--quiet]

A config is a JSON object naming the command, a seed, and whatever the
command needs (objective spec, control map, run parameters).  ``validate``
materialises every default and reports all problems at once; ``run``
executes the command and returns the report.  Reports separate the
deterministic ``payload`` from a ``metadata`` block holding the timestamp and
wall-clock duration, so identical configs give identical payloads.
"""

import argparse
import csv
import json
import math
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import classical as C
from .channels import LindbladModel, jacobian_rank
from .controls import KrausControl, LindbladControl, StochasticControl
from .errors import ConfigInvalid, LandscapeError
from .fixtures import dephasing_model, false_trap_demo, real_trap_demo
from .landscape import (
    AscentConfig,
    concavity_probe,
    level_set_path,
    multistart_ascent,
    oracle_optimum,
    same_level_pair,
    verify_trap_free,
)
from .objectives import ObjectiveSpec
from .quantum import (
    SIGMA_MINUS,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    DensityMatrix,
    Observable,
    matrix_from_json,
    matrix_to_json,
    maximally_mixed,
    parse_entropy,
    pure_state,
    random_hermitian,
)
from .rng import stream

SCHEMA_VERSION = "1.0"
COMMANDS = ("optimize", "probe-concavity", "level-set", "rank-check", "false-trap", "real-trap", "oracle")
MAP_TYPES = ("kraus", "stochastic", "lindblad")
# Default ascent step per map type: kinematic raw coordinates are unnormalised
# (the gradient shrinks as the isometry grows), so they need a large step.
DEFAULT_STEP = {"kraus": 100.0, "stochastic": 10.0, "lindblad": 1.0}
NAMED_OBSERVABLES = {"sigma_x": SIGMA_X, "sigma_y": SIGMA_Y, "sigma_z": SIGMA_Z}
MODEL_PRESETS = ("dephasing", "dephasingPhase", "amplitudeDamping")
NAMED_STATES = ("maximallyMixed", "plus", "ground", "excited")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_FAILED = 3


# --------------------------------------------------------------------------
# validation


class _Checker:
    """Collects (path, message) pairs while reading a nested config."""

    def __init__(self):
        self.errors = []

    def fail(self, path, msg):
        self.errors.append((path, msg))

    def section(self, obj, key, path, required=False):
        full = f"{path}.{key}" if path else key
        if key not in obj:
            if required:
                self.fail(full, "is required")
            return None if required else {}
        val = obj[key]
        if not isinstance(val, dict):
            self.fail(full, "must be an object")
            return None
        return val

    def number(self, obj, key, path, default=None, required=False, integer=False, minimum=None, strict=False):
        full = f"{path}.{key}" if path else key
        if key not in obj or obj[key] is None:
            if required:
                self.fail(full, "is required")
            return default
        val = obj[key]
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            self.fail(full, f"must be a number, got {val!r}")
            return default
        if integer and (not float(val).is_integer()):
            self.fail(full, f"must be an integer, got {val!r}")
            return default
        if not math.isfinite(val):
            self.fail(full, "must be finite")
            return default
        if minimum is not None and (val <= minimum if strict else val < minimum):
            self.fail(full, f"must be {'>' if strict else '>='} {minimum}, got {val!r}")
            return default
        return int(val) if integer else float(val)

    def choice(self, obj, key, path, options, default=None, required=False):
        full = f"{path}.{key}" if path else key
        if key not in obj:
            if required:
                self.fail(full, "is required")
            return default
        val = obj[key]
        if val not in options:
            self.fail(full, f"must be one of {list(options)}, got {val!r}")
            return default
        return val


def _check_matrix(chk, raw, path, dim=None):
    """Matrix JSON ``{"dim", "re", "im"}`` -> complex array, or None on error."""
    try:
        m = matrix_from_json(raw)
    except (KeyError, TypeError, ValueError) as exc:
        chk.fail(path, f"invalid matrix: {exc}")
        return None
    if dim is not None and m.shape[0] != dim:
        chk.fail(path, f"matrix dim {m.shape[0]} does not match {dim}")
        return None
    return m


def _check_observable(chk, raw, path, regime, seed):
    """Returns ``(normalised_config_form, observable_array)``."""
    if raw is None:
        chk.fail(path, "is required")
        return None, None
    if regime == "quantum":
        if isinstance(raw, str):
            if raw not in NAMED_OBSERVABLES:
                chk.fail(path, f"unknown named observable {raw!r}; use one of {sorted(NAMED_OBSERVABLES)}")
                return None, None
            return raw, NAMED_OBSERVABLES[raw]
        if isinstance(raw, dict) and "randomHermitian" in raw:
            n = chk.number(raw, "randomHermitian", path, integer=True, minimum=1, required=True)
            if n is None:
                return None, None
            return {"randomHermitian": n}, random_hermitian(stream(seed, "observable"), n)
        if isinstance(raw, dict) and "diagonal" in raw:
            d = raw["diagonal"]
            if not isinstance(d, list) or not d or not all(_is_num(x) for x in d):
                chk.fail(f"{path}.diagonal", "must be a nonempty list of numbers")
                return None, None
            return {"diagonal": [float(x) for x in d]}, np.diag(np.array(d, dtype=float)).astype(complex)
        if isinstance(raw, dict):
            m = _check_matrix(chk, raw, path)
            if m is None:
                return None, None
            if np.max(np.abs(m - m.conj().T)) > 1e-10:
                chk.fail(path, "observable must be Hermitian")
                return None, None
            return matrix_to_json(m), m
        chk.fail(path, "must be a name, a matrix object, {randomHermitian: n} or {diagonal: [...]}")
        return None, None
    if isinstance(raw, list):
        raw = {"values": raw}
    if isinstance(raw, dict) and "random" in raw:
        m = chk.number(raw, "random", path, integer=True, minimum=1, required=True)
        if m is None:
            return None, None
        return {"random": m}, stream(seed, "observable").standard_normal(m)
    if isinstance(raw, dict) and "values" in raw:
        v = raw["values"]
        if not isinstance(v, list) or not v or not all(_is_num(x) for x in v):
            chk.fail(f"{path}.values", "must be a nonempty list of numbers")
            return None, None
        return {"values": [float(x) for x in v]}, np.array(v, dtype=float)
    chk.fail(path, "must be a list of values, {values: [...]} or {random: m}")
    return None, None


def _missing(*xs):
    return any(x is None for x in xs)


def _is_num(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _check_spec(chk, cfg, seed, required):
    raw = chk.section(cfg, "spec", "", required=required)
    if not raw:
        return None, None
    regime = chk.choice(raw, "regime", "spec", ("quantum", "classical"), required=True)
    kind = chk.choice(raw, "kind", "spec", ("typeOne", "typeTwo"), required=True)
    out = {"regime": regime, "kind": kind}
    obs_form, obs = (None, None)
    if regime is not None:
        obs_form, obs = _check_observable(chk, raw.get("observable"), "spec.observable", regime, seed)
    out["observable"] = obs_form
    if kind == "typeTwo":
        t = chk.number(raw, "temperature", "spec", required=True, minimum=0, strict=True)
        out["temperature"] = t
        default_ent = "vonNeumann" if regime == "quantum" else "shannon"
        ent = raw.get("entropy", default_ent)
        try:
            parse_entropy(ent)
        except (ValueError, TypeError) as exc:
            chk.fail("spec.entropy", str(exc))
            ent = None
        out["entropy"] = ent
    else:
        for key in ("temperature", "entropy"):
            if key in raw:
                chk.fail(f"spec.{key}", "applies to typeTwo objectives only")
    if _missing(regime, kind, obs) or (kind == "typeTwo" and _missing(out["temperature"], out["entropy"])):
        return out, None
    return out, ObjectiveSpec(regime, kind, obs, out.get("temperature"), out.get("entropy"))


def _check_state(chk, raw, path, regime, dim):
    """Initial state config -> (normalised form, DensityMatrix | Distribution)."""
    if regime == "quantum":
        if raw is None:
            raw = "maximallyMixed"
        if isinstance(raw, str):
            if raw not in NAMED_STATES:
                chk.fail(path, f"unknown named state {raw!r}; use one of {list(NAMED_STATES)}")
                return None, None
            if raw == "maximallyMixed":
                return raw, maximally_mixed(dim)
            if dim != 2:
                chk.fail(path, f"named state {raw!r} needs dim 2")
                return None, None
            vec = {"plus": [1.0, 1.0], "ground": [1.0, 0.0], "excited": [0.0, 1.0]}[raw]
            return raw, pure_state(vec)
        m = _check_matrix(chk, raw, path, dim)
        if m is None:
            return None, None
        try:
            return matrix_to_json(m), DensityMatrix(m)
        except LandscapeError as exc:
            chk.fail(path, str(exc))
            return None, None
    if raw is None:
        raw = "uniform"
    if raw == "uniform":
        return raw, C.uniform(dim)
    if not isinstance(raw, list) or len(raw) != dim or not all(_is_num(x) for x in raw):
        chk.fail(path, f"must be 'uniform' or a list of {dim} weights")
        return None, None
    try:
        return [float(x) for x in raw], C.distribution(raw)
    except LandscapeError as exc:
        chk.fail(path, str(exc))
        return None, None


def _check_model(chk, raw, path):
    if raw is None:
        raw = "dephasing"
    if isinstance(raw, str):
        if raw not in MODEL_PRESETS:
            chk.fail(path, f"unknown model preset {raw!r}; use one of {list(MODEL_PRESETS)}")
            return None, None
        return raw, _preset_model(raw)
    if not isinstance(raw, dict):
        chk.fail(path, "must be a preset name or an object with drift, controls and dissipators")
        return None, None
    drift = _check_matrix(chk, raw.get("drift"), f"{path}.drift") if "drift" in raw else None
    if drift is None:
        if "drift" not in raw:
            chk.fail(f"{path}.drift", "is required")
        return None, None
    n = drift.shape[0]
    controls = []
    for i, c in enumerate(raw.get("controls", [])):
        m = _check_matrix(chk, c, f"{path}.controls[{i}]", n)
        if m is not None:
            controls.append(m)
    diss = []
    for i, d in enumerate(raw.get("dissipators", [])):
        p = f"{path}.dissipators[{i}]"
        if not isinstance(d, dict):
            chk.fail(p, "must be an object with operator and rate")
            continue
        op = _check_matrix(chk, d.get("operator"), f"{p}.operator", n)
        rate = chk.number(d, "rate", p, required=True, minimum=0)
        if op is not None and rate is not None:
            diss.append((op, rate))
    n_errors = len(chk.errors)
    try:
        model = LindbladModel(Observable(drift), tuple(Observable(c) for c in controls), tuple(diss))
    except (LandscapeError, ValueError) as exc:
        chk.fail(path, str(exc))
        return None, None
    if len(chk.errors) > n_errors:
        return None, None
    form = {
        "drift": matrix_to_json(drift),
        "controls": [matrix_to_json(c) for c in controls],
        "dissipators": [{"operator": matrix_to_json(op), "rate": r} for op, r in diss],
    }
    return form, model


def _preset_model(name):
    if name == "dephasing":
        return dephasing_model()
    if name == "dephasingPhase":
        return dephasing_model(phase_control=True)
    return LindbladModel(Observable(np.zeros((2, 2))), (Observable(SIGMA_X),), ((SIGMA_MINUS, 1.0),))


def _check_map(chk, cfg, spec_form, required):
    """Control-map config -> (normalised form, ControlMap)."""
    raw = cfg.get("map")
    if raw is None:
        if spec_form is None or spec_form.get("regime") is None:
            if required:
                chk.fail("map", "is required when no spec is given")
            return None, None
        raw = {"type": "kraus" if spec_form["regime"] == "quantum" else "stochastic"}
    if not isinstance(raw, dict):
        chk.fail("map", "must be an object")
        return None, None
    kind = chk.choice(raw, "type", "map", MAP_TYPES, required=True)
    spec_dim = _spec_dim(spec_form)
    if kind == "kraus":
        n = chk.number(raw, "dim", "map", default=spec_dim, integer=True, minimum=1, required=spec_form is None)
        if n is None:
            return None, None
        r = chk.number(raw, "rank", "map", default=n * n, integer=True, minimum=1)
        init_form, init = _check_state(chk, raw.get("initial"), "map.initial", "quantum", n)
        form = {"type": kind, "dim": n, "rank": r, "initial": init_form}
        if _missing(r, init):
            return form, None
        return form, KrausControl(n, r, init)
    if kind == "stochastic":
        m = chk.number(raw, "cells", "map", default=spec_dim, integer=True, minimum=1, required=spec_form is None)
        if m is None:
            return None, None
        par = chk.choice(raw, "parameterization", "map", ("amplitude", "softmax"), default="amplitude")
        init_form, init = _check_state(chk, raw.get("initial"), "map.initial", "classical", m)
        form = {"type": kind, "cells": m, "parameterization": par, "initial": init_form}
        if init is None:
            return form, None
        return form, StochasticControl(m, init, par)
    if kind == "lindblad":
        model_form, model = _check_model(chk, raw.get("model"), "map.model")
        t0 = chk.number(raw, "tStart", "map", default=0.0)
        t1 = chk.number(raw, "tEnd", "map", default=1.0)
        steps = chk.number(raw, "steps", "map", default=4, integer=True, minimum=1)
        if t0 is not None and t1 is not None and not t1 > t0:
            chk.fail("map.tEnd", f"must exceed tStart ({t0}), got {t1}")
            t1 = None
        init_raw = raw.get("initial", "plus" if model is not None and model.dim == 2 else None)
        init_form, init = (None, None)
        if model is not None:
            init_form, init = _check_state(chk, init_raw, "map.initial", "quantum", model.dim)
        form = {"type": kind, "model": model_form, "tStart": t0, "tEnd": t1, "steps": steps, "initial": init_form}
        if _missing(model, t0, t1, steps, init):
            return form, None
        return form, LindbladControl(model, t0, t1, steps, init)
    return None, None


def _spec_dim(spec_form):
    if not spec_form:
        return None
    obs = spec_form.get("observable")
    if obs is None:
        return None
    if isinstance(obs, str):
        return 2
    for key in ("randomHermitian", "random"):
        if key in obs:
            return obs[key]
    if "diagonal" in obs:
        return len(obs["diagonal"])
    if "values" in obs:
        return len(obs["values"])
    return obs.get("dim")


def _check_ascent(chk, raw, map_type):
    raw = raw if isinstance(raw, dict) else {}
    armijo = raw.get("armijoBacktracking", "on")
    if armijo not in ("on", "off"):
        chk.fail("run.ascent.armijoBacktracking", f"must be 'on' or 'off', got {armijo!r}")
        armijo = "on"
    return {
        "maxIterations": chk.number(raw, "maxIterations", "run.ascent", default=2000, integer=True, minimum=0),
        "stepSize": chk.number(
            raw, "stepSize", "run.ascent", default=DEFAULT_STEP.get(map_type, 1.0), minimum=0, strict=True
        ),
        "gradientTolerance": chk.number(
            raw, "gradientTolerance", "run.ascent", default=1e-8, minimum=0, strict=True
        ),
        "armijoBacktracking": armijo,
    }


def _ascent_config(form, seed):
    return AscentConfig(
        max_iterations=form["maxIterations"],
        step_size=form["stepSize"],
        gradient_tolerance=form["gradientTolerance"],
        armijo=form["armijoBacktracking"] == "on",
        seed=seed,
    )


def _check_output(chk, cfg):
    raw = chk.section(cfg, "output", "") or {}
    traj = raw.get("trajectories", False)
    if not isinstance(traj, bool):
        chk.fail("output.trajectories", "must be true or false")
        traj = False
    out_dir = raw.get("dir", ".")
    if not isinstance(out_dir, str):
        chk.fail("output.dir", "must be a string")
        out_dir = "."
    stride = chk.number(raw, "trajectoryStride", "output", default=1, integer=True, minimum=1)
    return {"dir": out_dir, "trajectories": traj, "trajectoryStride": stride}


class ExperimentConfig:
    """A validated config: ``resolved`` is the JSON form with defaults filled,
    the other attributes are the live objects built from it."""

    def __init__(self, resolved, spec=None, cmap=None, ascent=None):
        self.resolved = resolved
        self.spec = spec
        self.cmap = cmap
        self.ascent = ascent

    @property
    def command(self):
        return self.resolved["command"]

    @property
    def seed(self):
        return self.resolved["seed"]


def validate(config_text, seed_override=None):
    """Parse and validate a JSON config (bytes or str).

    Returns an ``ExperimentConfig``; raises ``ConfigInvalid`` listing every
    problem found, each tagged with its field path.
    """
    if isinstance(config_text, bytes):
        try:
            config_text = config_text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ConfigInvalid([("", f"config is not UTF-8: {exc}")]) from None
    try:
        cfg = json.loads(config_text)
    except json.JSONDecodeError as exc:
        raise ConfigInvalid([("", f"config is not valid JSON: {exc}")]) from None
    if not isinstance(cfg, dict):
        raise ConfigInvalid([("", "config must be a JSON object")])
    if seed_override is not None:
        cfg["seed"] = seed_override
    chk = _Checker()
    command = chk.choice(cfg, "command", "", COMMANDS, required=True)
    seed = chk.number(cfg, "seed", "", required=True, integer=True, minimum=0)
    if seed is not None and seed >= 2**64:
        chk.fail("seed", "must fit in an unsigned 64-bit integer")
        seed = None
    out = {"command": command, "seed": seed}
    obs_seed = seed if seed is not None else 0

    needs_spec = command in ("optimize", "probe-concavity", "level-set", "oracle")
    spec_form, spec = _check_spec(chk, cfg, obs_seed, required=needs_spec) if needs_spec or "spec" in cfg else (None, None)
    if spec_form is not None:
        out["spec"] = spec_form
    cmap, ascent = None, None

    if command in ("optimize", "rank-check"):
        map_form, cmap = _check_map(chk, cfg, spec_form, required=True)
        out["map"] = map_form
        if cmap is not None and spec is not None:
            if cmap.regime != spec.regime:
                chk.fail("map.type", f"{map_form['type']} map is {cmap.regime}, spec regime is {spec.regime}")
                cmap = None
            elif _map_dim(cmap) != spec.dim:
                chk.fail("map", f"map dimension {_map_dim(cmap)} does not match observable dimension {spec.dim}")
                cmap = None
    if command == "optimize":
        run = chk.section(cfg, "run", "") or {}
        n_starts = chk.number(run, "nStarts", "run", default=100, integer=True, minimum=1)
        ascent_form = _check_ascent(chk, run.get("ascent"), (out.get("map") or {}).get("type"))
        out["run"] = {"nStarts": n_starts, "ascent": ascent_form}
    elif command == "probe-concavity":
        probe = chk.section(cfg, "probe", "") or {}
        out["probe"] = {"nSamples": chk.number(probe, "nSamples", "probe", default=10_000, integer=True, minimum=1)}
    elif command == "level-set":
        ls = chk.section(cfg, "levelSet", "") or {}
        out["levelSet"] = {
            "nPairs": chk.number(ls, "nPairs", "levelSet", default=1000, integer=True, minimum=1),
            "steps": chk.number(ls, "steps", "levelSet", default=11, integer=True, minimum=2),
        }
        if spec is not None and spec.kind != "typeOne":
            chk.fail("spec.kind", "level-set needs a typeOne objective")
    elif command == "rank-check":
        rc = chk.section(cfg, "rankCheck", "") or {}
        out["rankCheck"] = {"nPoints": chk.number(rc, "nPoints", "rankCheck", default=20, integer=True, minimum=1)}
    elif command == "false-trap":
        fx = chk.section(cfg, "fixture", "") or {}
        out["fixture"] = {
            "theta0": chk.number(fx, "theta0", "fixture", default=3.0),
            "nStarts": chk.number(fx, "nStarts", "fixture", default=20, integer=True, minimum=1),
            "kinematicStarts": chk.number(fx, "kinematicStarts", "fixture", default=20, integer=True, minimum=1),
        }
    elif command == "real-trap":
        fx = chk.section(cfg, "fixture", "") or {}
        out["fixture"] = {
            "rate": chk.number(fx, "rate", "fixture", default=1.0, minimum=0),
            "duration": chk.number(fx, "duration", "fixture", default=1.0, minimum=0, strict=True),
            "steps": chk.number(fx, "steps", "fixture", default=4, integer=True, minimum=1),
            "nStarts": chk.number(fx, "nStarts", "fixture", default=10, integer=True, minimum=1),
            "rankPoints": chk.number(fx, "rankPoints", "fixture", default=10, integer=True, minimum=1),
            "kinematicStarts": chk.number(fx, "kinematicStarts", "fixture", default=20, integer=True, minimum=1),
        }
    out["output"] = _check_output(chk, cfg)

    known = {"command", "seed", "spec", "map", "run", "probe", "levelSet", "rankCheck", "fixture", "output"}
    for key in sorted(set(cfg) - known):
        chk.fail(key, "unknown field")
    if chk.errors:
        raise ConfigInvalid(chk.errors)
    if command == "optimize":
        ascent = _ascent_config(out["run"]["ascent"], seed)
    return ExperimentConfig(out, spec, cmap, ascent)


def _map_dim(cmap):
    if isinstance(cmap, StochasticControl):
        return cmap.cells
    if isinstance(cmap, LindbladControl):
        return cmap.model.dim
    return cmap.dim


# --------------------------------------------------------------------------
# commands


def _state_json(state):
    if isinstance(state, DensityMatrix):
        return matrix_to_json(state.entries)
    return C.distribution_to_json(state)


def _observable_json(spec):
    if spec.regime == "quantum":
        return matrix_to_json(spec.observable.entries)
    return C.random_function_to_json(spec.observable)


def _oracle_json(spec):
    opt = oracle_optimum(spec)
    return {"value": opt.value, "degenerate": opt.degenerate, "state": _state_json(opt.state)}


def _cmd_optimize(cfg):
    spec = cfg.spec
    n_starts = cfg.resolved["run"]["nStarts"]
    runs = multistart_ascent(spec, cfg.cmap, n_starts, cfg.ascent)
    oracle = _oracle_json(spec)
    verdict = verify_trap_free(runs, oracle["value"])
    payload = {
        "observable": _observable_json(spec),
        "oracle": oracle,
        "verdict": verdict.to_json(),
        "convergedFraction": verdict.n_converged / verdict.n_runs,
        "runs": [r.summary() for r in runs],
    }
    return payload, runs


def _cmd_probe(cfg):
    rep = concavity_probe(cfg.spec, cfg.resolved["probe"]["nSamples"], cfg.seed)
    return {"observable": _observable_json(cfg.spec), "concavity": rep.to_json()}, None


def _cmd_level_set(cfg):
    spec = cfg.spec
    opts = cfg.resolved["levelSet"]
    rng = stream(cfg.seed, "sample")
    worst, all_valid = 0.0, True
    for _ in range(opts["nPairs"]):
        s0, s1 = same_level_pair(spec, rng)
        try:
            path = level_set_path(spec, s0, s1, opts["steps"])
        except LandscapeError:
            all_valid = False
            continue
        worst = max(worst, path.max_deviation)
    return {
        "observable": _observable_json(spec),
        "nPairs": opts["nPairs"],
        "steps": opts["steps"],
        "maxDeviation": worst,
        "allValid": all_valid,
    }, None


def _cmd_rank_check(cfg):
    cmap = cfg.cmap
    n = _map_dim(cmap)
    expected = n * n - 1 if cmap.regime == "quantum" else n - 1
    rng = stream(cfg.seed, "points")
    ranks = [int(jacobian_rank(cmap, cmap.sample(rng))) for _ in range(cfg.resolved["rankCheck"]["nPoints"])]
    return {
        "stateDimension": expected,
        "ranks": ranks,
        "minRank": min(ranks),
        "locallySurjective": all(r == expected for r in ranks),
    }, None


def _cmd_false_trap(cfg):
    fx = cfg.resolved["fixture"]
    rep = false_trap_demo(
        theta0=fx["theta0"], n_starts=fx["nStarts"], seed=cfg.seed, kinematic_starts=fx["kinematicStarts"]
    )
    return rep.to_json(), rep.constrained_runs


def _cmd_real_trap(cfg):
    fx = cfg.resolved["fixture"]
    rep = real_trap_demo(
        rate=fx["rate"],
        duration=fx["duration"],
        steps=fx["steps"],
        n_starts=fx["nStarts"],
        seed=cfg.seed,
        rank_points=fx["rankPoints"],
        kinematic_starts=fx["kinematicStarts"],
    )
    return rep.to_json(), rep.dynamic_runs


def _cmd_oracle(cfg):
    return {"observable": _observable_json(cfg.spec), "oracle": _oracle_json(cfg.spec)}, None


COMMAND_TABLE = {
    "optimize": _cmd_optimize,
    "probe-concavity": _cmd_probe,
    "level-set": _cmd_level_set,
    "rank-check": _cmd_rank_check,
    "false-trap": _cmd_false_trap,
    "real-trap": _cmd_real_trap,
    "oracle": _cmd_oracle,
}


# --------------------------------------------------------------------------
# reports


def _clean(x):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def run(cfg):
    """Execute a validated config.

    Returns ``(status, report, runs)``; ``runs`` holds the optimisation runs
    whose trajectories can be exported, or None.
    """
    started = time.perf_counter()
    stamp = datetime.now(timezone.utc).isoformat()
    runs = None
    try:
        payload, runs = COMMAND_TABLE[cfg.command](cfg)
        status, outcome = EXIT_OK, "ok"
    except (LandscapeError, ValueError, RuntimeError, ArithmeticError, np.linalg.LinAlgError) as exc:
        payload = {"error": f"{type(exc).__name__}: {exc}"}
        status, outcome = EXIT_FAILED, "failed"
    report = {
        "schemaVersion": SCHEMA_VERSION,
        "command": cfg.command,
        "seed": cfg.seed,
        "libraryVersion": __version__,
        "status": outcome,
        "config": cfg.resolved,
        "payload": payload,
        "metadata": {
            "timestamp": stamp,
            "durationSeconds": time.perf_counter() - started,
            "libraryVersion": __version__,
        },
    }
    return status, _clean(report), runs


def report_paths(command, seed, out_dir):
    base = Path(out_dir) / f"{command}-{seed}"
    return base.with_name(base.name + ".report.json"), base.with_name(base.name + ".trajectories.csv")


def write_trajectories(path, runs, stride=1):
    """CSV with one row per recorded iterate: runIndex, iteration, objective.

    Every ``stride``-th iterate is kept, plus the last one of each run.
    """
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["runIndex", "iteration", "objective"])
        for r in runs:
            last = len(r.trajectory) - 1
            for k, v in enumerate(r.trajectory):
                if k % stride == 0 or k == last:
                    w.writerow([r.index, k, repr(float(v))])


def dump_report(report):
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def main(argv=None):
    parser = argparse.ArgumentParser(prog="landscape-lab", description="Control-landscape experiment runner.")
    parser.add_argument("command", help=f"one of: {', '.join(COMMANDS)}")
    parser.add_argument("--config", required=True, help="path to the JSON experiment config")
    parser.add_argument("--out", help="output directory (overrides output.dir)")
    parser.add_argument("--seed", type=int, help="seed override (unsigned 64-bit)")
    parser.add_argument("--quiet", action="store_true", help="suppress the summary on stdout")
    args = parser.parse_args(argv)

    try:
        text = Path(args.config).read_bytes()
    except OSError as exc:
        print(f"config: cannot read {args.config}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        obj = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        print(f"config: not valid JSON: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if isinstance(obj, dict):
        if obj.get("command", args.command) != args.command:
            print(f"command: config says {obj['command']!r}, command line says {args.command!r}", file=sys.stderr)
            return EXIT_INVALID
        obj["command"] = args.command
    try:
        cfg = validate(json.dumps(obj), seed_override=args.seed)
    except ConfigInvalid as exc:
        for path, msg in exc.errors:
            print(f"{path or '<config>'}: {msg}", file=sys.stderr)
        return EXIT_INVALID

    out_dir = Path(args.out or cfg.resolved["output"]["dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    status, report, runs = run(cfg)
    report_path, traj_path = report_paths(cfg.command, cfg.seed, out_dir)
    report_path.write_text(dump_report(report))
    if runs is not None and cfg.resolved["output"]["trajectories"]:
        write_trajectories(traj_path, runs, cfg.resolved["output"]["trajectoryStride"])
    if status != EXIT_OK:
        print(report["payload"]["error"], file=sys.stderr)
    elif not args.quiet:
        print(f"{cfg.command}: wrote {report_path} ({report['metadata']['durationSeconds']:.2f} s)")
    return status


if __name__ == "__main__":
    sys.exit(main())
