"""Type-one (linear) and type-two (free-energy) objectives and their gradients.

Type one:  J = <state, O>
Type two:  J = -<state, O> + T S(state)

Everything is maximised; a minimisation problem is handled by negating
the observable.
"""

from dataclasses import dataclass

import numpy as np

from . import classical as C
from .config import TOL
from .errors import (
    EvaluationFailure,
    InvalidState,
    LandscapeError,
    RegimeMismatch,
    SingularState,
)
from .linalg import dag, hermitian_part
from .quantum import (
    DensityMatrix,
    Observable,
    _clamped_spectrum,
    entropy_from_probabilities,
    matrix_from_json,
    matrix_to_json,
    parse_entropy,
)

REGIMES = ("quantum", "classical")
KINDS = ("typeOne", "typeTwo")


@dataclass(frozen=True, eq=False)
class ObjectiveSpec:
    regime: str
    kind: str
    observable: object
    temperature: float = None
    entropy: str = None

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ValueError(f"regime must be one of {REGIMES}, got {self.regime!r}")
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        obs = self.observable
        if self.regime == "quantum":
            if not isinstance(obs, Observable):
                obs = Observable(obs)
        elif not isinstance(obs, C.RandomFunction):
            obs = C.random_function(obs)
        object.__setattr__(self, "observable", obs)
        if self.kind == "typeTwo":
            if self.temperature is None or not self.temperature > 0:
                raise ValueError(f"typeTwo objective needs a positive temperature, got {self.temperature}")
            entropy = self.entropy or ("vonNeumann" if self.regime == "quantum" else "shannon")
            parse_entropy(entropy)
            object.__setattr__(self, "entropy", entropy)
            object.__setattr__(self, "temperature", float(self.temperature))
        elif self.temperature is not None or self.entropy is not None:
            raise ValueError("temperature and entropy apply to typeTwo objectives only")

    @property
    def dim(self):
        return self.observable.dim if self.regime == "quantum" else self.observable.cells

    @property
    def obs_array(self):
        if self.regime == "quantum":
            return self.observable.entries
        return self.observable.values

    def to_json(self):
        out = {"regime": self.regime, "kind": self.kind}
        if self.regime == "quantum":
            out["observable"] = matrix_to_json(self.observable)
        else:
            out["observable"] = C.random_function_to_json(self.observable)
        if self.kind == "typeTwo":
            out["temperature"] = self.temperature
            out["entropy"] = self.entropy
        return out

    @classmethod
    def from_json(cls, obj):
        regime = obj["regime"]
        raw = obj["observable"]
        if regime == "quantum":
            observable = Observable(matrix_from_json(raw))
        else:
            observable = C.random_function_from_json(raw)
        return cls(regime, obj["kind"], observable, obj.get("temperature"), obj.get("entropy"))


# --------------------------------------------------------------------------
# array kernels (batched over leading axes)


def _linear_part(spec, arr):
    if spec.regime == "quantum":
        return np.einsum("...ij,ji->...", arr, spec.obs_array).real
    return arr @ spec.obs_array


def _probabilities(spec, arr):
    if spec.regime == "quantum":
        return _clamped_spectrum(np.linalg.eigvalsh(hermitian_part(arr)))
    low = np.min(arr, axis=-1)
    if np.any(low < -TOL.distribution_clamp):
        raise InvalidState(f"weight {np.min(low):.3e} violates nonnegativity", float(-np.min(low)))
    return np.clip(arr, 0.0, None)


def value_array(spec, arr):
    lin = _linear_part(spec, arr)
    if spec.kind == "typeOne":
        return lin
    s = entropy_from_probabilities(_probabilities(spec, arr), spec.entropy)
    return -lin + spec.temperature * s


def _needs_floor(spec):
    name, q = parse_entropy(spec.entropy)
    return name == "log" or q < 1.0


def _entropy_derivative(spec, p):
    """Scalar derivative dS/dp applied to the spectrum (or weights)."""
    name, q = parse_entropy(spec.entropy)
    if name == "log":
        return -(np.log(p) + 1.0)
    return -q * p ** (q - 1.0) / (q - 1.0)


def state_gradient_array(spec, arr, regularize=True):
    """Euclidean gradient of the objective with respect to the state.

    Returns ``(grad, regularized)`` where ``regularized`` flags batch entries
    that were mixed with the maximally mixed state to lift eigenvalues
    above ``eps_floor`` before taking a logarithm.
    """
    obs = spec.obs_array
    batch = np.shape(arr)[:-2] if spec.regime == "quantum" else np.shape(arr)[:-1]
    if spec.kind == "typeOne":
        return np.broadcast_to(obs, batch + obs.shape).copy(), np.zeros(batch, dtype=bool)
    floor = TOL.eps_floor
    if spec.regime == "quantum":
        n = obs.shape[0]
        w, v = np.linalg.eigh(hermitian_part(arr))
        w = _clamped_spectrum(w)
        low = np.min(w, axis=-1)
        reg = (low < floor) & _needs_floor(spec)
        if np.any(reg) and not regularize:
            raise SingularState(f"eigenvalue {np.min(low):.3e} below the floor {floor}")
        eps = n * floor
        w = np.where(reg[..., None], (1.0 - eps) * w + eps / n, w)
        ds = _entropy_derivative(spec, w)
        ent = (v * ds[..., None, :]) @ dag(v)
        return hermitian_part(-obs + spec.temperature * ent), reg
    m = obs.shape[0]
    p = np.clip(arr, 0.0, None)
    low = np.min(p, axis=-1)
    reg = (low < floor) & _needs_floor(spec)
    if np.any(reg) and not regularize:
        raise SingularState(f"weight {np.min(low):.3e} below the floor {floor}")
    eps = m * floor
    p = np.where(reg[..., None], (1.0 - eps) * p + eps / m, p)
    return -obs + spec.temperature * _entropy_derivative(spec, p), reg


# --------------------------------------------------------------------------
# public operations


def _state_array(spec, state):
    if spec.regime == "quantum":
        if not isinstance(state, DensityMatrix):
            if isinstance(state, C.Distribution):
                raise RegimeMismatch("quantum objective evaluated on a classical distribution")
            state = DensityMatrix(state)
        if state.dim != spec.dim:
            raise RegimeMismatch(f"state dim {state.dim} vs observable dim {spec.dim}")
        return state.entries
    if not isinstance(state, C.Distribution):
        if isinstance(state, DensityMatrix):
            raise RegimeMismatch("classical objective evaluated on a density matrix")
        state = C.distribution(state)
    if state.cells != spec.dim:
        raise RegimeMismatch(f"distribution has {state.cells} cells, observable has {spec.dim}")
    return state.weights


def evaluate(spec, state):
    """Objective value at a validated state."""
    return float(value_array(spec, _state_array(spec, state)))


def gradient_state(spec, state, regularize=False):
    """Gradient of the objective in state coordinates (same shape as the state).

    Type-two gradients need the state's smallest eigenvalue (or weight) to be
    at least ``eps_floor``; otherwise ``SingularState`` is raised unless
    ``regularize`` is set.
    """
    grad, _ = state_gradient_array(spec, _state_array(spec, state), regularize=regularize)
    return grad


def tangent_projection(spec, grad):
    """Remove the component along the identity (trace / total-mass direction)."""
    if spec.regime == "quantum":
        n = grad.shape[-1]
        tr = np.trace(grad, axis1=-2, axis2=-1)
        return grad - tr[..., None, None] * np.eye(n) / n
    return grad - np.mean(grad, axis=-1, keepdims=True)


def finite_difference_gradient(fn, params, h=TOL.fd_step):
    """Central differences of a scalar function of a real vector."""
    x = np.asarray(params, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (fn(x + e) - fn(x - e)) / (2 * h)
    return g


def control_objective(spec, cmap):
    """``params -> J(xi(params))`` on raw arrays."""

    def fn(params):
        try:
            return float(value_array(spec, cmap.states(params)))
        except LandscapeError as exc:
            raise EvaluationFailure(f"objective evaluation failed: {exc}") from exc

    return fn


def gradient_controls(spec, cmap, params, method="auto", h=TOL.fd_step):
    """Gradient of ``J(xi(params))`` with respect to the controls.

    ``method="auto"`` uses the map's analytic chain rule when it has one and
    central finite differences otherwise.
    """
    params = np.asarray(params, dtype=float)
    if method == "fd" or (method == "auto" and not cmap.has_pullback):
        return finite_difference_gradient(control_objective(spec, cmap), params, h)
    if not cmap.has_pullback:
        raise ValueError(f"{type(cmap).__name__} has no analytic gradient")
    try:
        arr = cmap.states(params)
        g_state, _ = state_gradient_array(spec, arr)
        return cmap.pullback(params, g_state)
    except LandscapeError as exc:
        raise EvaluationFailure(f"gradient evaluation failed: {exc}") from exc


def value_and_gradient(spec, cmap, params, h=TOL.fd_step):
    """Batched values, parameter gradients and regularisation flags for ``(B, P)`` params.

    Rows whose map evaluation fails get NaN value and gradient and an
    error string in the returned list.
    """
    from .controls import safe_states

    params = np.atleast_2d(np.asarray(params, dtype=float))
    arr, errors = safe_states(cmap, params)
    ok = np.array([e is None for e in errors])
    vals = np.full(len(params), np.nan)
    grads = np.full(params.shape, np.nan)
    reg = np.zeros(len(params), dtype=bool)
    if not ok.any():
        return vals, grads, reg, errors
    vals[ok] = value_array(spec, arr[ok])
    if cmap.has_pullback:
        g_state, reg_ok = state_gradient_array(spec, arr[ok])
        grads[ok] = cmap.pullback(params[ok], g_state)
        reg[ok] = reg_ok
        return vals, grads, reg, errors
    fn = control_objective(spec, cmap)
    for i in np.flatnonzero(ok):
        try:
            grads[i] = finite_difference_gradient(fn, params[i], h)
        except EvaluationFailure as exc:
            errors[i] = f"EvaluationFailure: {exc}"
            vals[i] = np.nan
    return vals, grads, reg, errors
