"""Parameterised control-to-state maps xi: params -> final state.

Every map works on raw arrays with an optional leading batch axis:
``states(params)`` takes ``(P,)`` or ``(B, P)`` and returns matrices
``(..., n, n)`` (quantum) or weight vectors ``(..., m)`` (classical).
Maps with an analytic chain rule implement ``pullback``, which turns the
Euclidean gradient of an objective with respect to the state into the
gradient with respect to the parameters.
"""

import numpy as np

from . import classical as C
from .channels import (
    ControlField,
    KinematicParams,
    kraus_from_params,
    kraus_output,
    amplitude_columns,
    propagate_lindblad,
    raw_to_matrix,
    softmax_columns,
    stochastic_from_amplitudes,
    stochastic_from_params,
)
from .errors import LandscapeError
from .linalg import gram_schmidt, gram_schmidt_pullback, hermitian_part
from .quantum import DensityMatrix, maximally_mixed


class ControlMap:
    regime = "quantum"
    n_params = 0
    batched = False

    def states(self, params):
        raise NotImplementedError

    def pullback(self, params, state_grad):
        return None

    @property
    def has_pullback(self):
        return type(self).pullback is not ControlMap.pullback

    def state(self, params):
        """The validated final state for a single parameter vector."""
        arr = self.states(np.asarray(params, dtype=float))
        if self.regime == "quantum":
            return DensityMatrix(hermitian_part(arr))
        return C.Distribution(C.PhaseSpace(arr.shape[-1]), arr)

    def __call__(self, params):
        return self.state(params)

    def sample(self, rng):
        return rng.standard_normal(self.n_params)

    def describe(self):
        return {"type": type(self).__name__}


class KrausControl(ControlMap):
    """Kinematic quantum control: raw coordinates -> isometry -> Kraus map -> rho_f."""

    batched = True

    def __init__(self, dim, rank, initial=None):
        self.dim = int(dim)
        self.rank = int(rank)
        self.initial = maximally_mixed(self.dim) if initial is None else initial
        if self.initial.dim != self.dim:
            raise ValueError(f"initial state dim {self.initial.dim} does not match {self.dim}")
        self.n_params = 2 * self.dim * self.dim * self.rank
        self._rho = np.array(self.initial.entries)

    def kraus_map(self, params):
        return kraus_from_params(KinematicParams(self.dim, self.rank, params))

    def _blocks(self, q):
        return q.reshape(*q.shape[:-2], self.rank, self.dim, self.dim)

    def states(self, params):
        q, _ = gram_schmidt(raw_to_matrix(params, self.dim, self.rank))
        return hermitian_part(kraus_output(self._blocks(q), self._rho))

    def pullback(self, params, state_grad):
        a = raw_to_matrix(params, self.dim, self.rank)
        q, r = gram_schmidt(a)
        blocks = self._blocks(q)
        # d/dK_i of Re Tr[G sum K rho K^dagger] = 2 G K_i rho
        g_blocks = 2.0 * (state_grad[..., None, :, :] @ blocks @ self._rho)
        g_q = g_blocks.reshape(q.shape)
        g_a = gram_schmidt_pullback(q, r, g_q)
        return np.concatenate(
            [g_a.real.reshape(*g_a.shape[:-2], -1), g_a.imag.reshape(*g_a.shape[:-2], -1)], axis=-1
        )

    def params_for_isometry(self, v):
        """Raw coordinates whose orthonormalisation reproduces the isometry ``v``."""
        v = np.asarray(v, dtype=complex).reshape(self.dim * self.rank, self.dim)
        return np.concatenate([v.real.ravel(), v.imag.ravel()])

    def projector_params(self, vec):
        """Raw coordinates of the channel K_i = |vec><i| (i < n), mapping every state to |vec><vec|."""
        vec = np.asarray(vec, dtype=complex)
        vec = vec / np.linalg.norm(vec)
        blocks = np.zeros((self.rank, self.dim, self.dim), dtype=complex)
        for i in range(min(self.dim, self.rank)):
            blocks[i, :, i] = vec
        if self.rank < self.dim:
            raise ValueError("projector channel needs rank >= dim")
        return self.params_for_isometry(blocks)

    def describe(self):
        return {"type": "kraus", "dim": self.dim, "rank": self.rank}


class StochasticControl(ControlMap):
    """Kinematic classical control: a parameterised stochastic matrix acting on d_i.

    ``parameterization`` is ``"amplitude"`` (squared, column-normalised
    amplitudes; the default) or ``"softmax"`` (column softmax of logits).
    """

    regime = "classical"
    batched = True

    def __init__(self, cells, initial=None, parameterization="amplitude"):
        if parameterization not in ("amplitude", "softmax"):
            raise ValueError(f"unknown parameterization {parameterization!r}")
        self.cells = int(cells)
        self.parameterization = parameterization
        self.initial = C.uniform(self.cells) if initial is None else initial
        if self.initial.cells != self.cells:
            raise ValueError(f"initial distribution has {self.initial.cells} cells, expected {self.cells}")
        self.n_params = self.cells * self.cells
        self._d = np.array(self.initial.weights)

    def matrix(self, params):
        if self.parameterization == "softmax":
            return softmax_columns(params, self.cells)
        return amplitude_columns(params, self.cells)

    def stochastic_map(self, params):
        if self.parameterization == "softmax":
            return stochastic_from_params(params, self.cells)
        return stochastic_from_amplitudes(params, self.cells)

    def states(self, params):
        return self.matrix(params) @ self._d

    def pullback(self, params, state_grad):
        p = self.matrix(params)
        g = np.asarray(state_grad)[..., :, None]
        centred = g - np.sum(p * g, axis=-2, keepdims=True)
        if self.parameterization == "softmax":
            grad = p * centred * self._d
        else:
            a = np.asarray(params, dtype=float).reshape(p.shape)
            grad = 2.0 * a * centred * self._d / np.sum(a * a, axis=-2, keepdims=True)
        return grad.reshape(*grad.shape[:-2], -1)

    def describe(self):
        return {"type": "stochastic", "cells": self.cells, "parameterization": self.parameterization}


class LindbladControl(ControlMap):
    """Dynamic quantum control: params are the piecewise-constant field values."""

    def __init__(self, model, t_start, t_end, steps, initial):
        self.model = model
        self.t_start = float(t_start)
        self.t_end = float(t_end)
        self.steps = int(steps)
        self.initial = initial
        self.channels = len(model.controls)
        self.n_params = self.steps * self.channels

    def field(self, params):
        return ControlField(self.t_start, self.t_end, np.asarray(params, dtype=float).reshape(self.steps, self.channels))

    def states(self, params):
        params = np.asarray(params, dtype=float)
        if params.ndim == 1:
            return np.array(propagate_lindblad(self.model, self.field(params), self.initial).entries)
        return np.array([self.states(p) for p in params])

    def describe(self):
        return {
            "type": "lindblad",
            "dim": self.model.dim,
            "steps": self.steps,
            "channels": self.channels,
            "tStart": self.t_start,
            "tEnd": self.t_end,
        }


class FunctionControl(ControlMap):
    """Wraps a plain function of a parameter vector returning a state array.

    ``grad_fn``, when given, returns the Jacobian-transpose action like
    ``pullback``.
    """

    def __init__(self, fn, n_params, regime="quantum", sampler=None, name="function"):
        self.fn = fn
        self.n_params = int(n_params)
        self.regime = regime
        self._sampler = sampler
        self.name = name

    def states(self, params):
        params = np.asarray(params, dtype=float)
        if params.ndim == 1:
            return np.asarray(self.fn(params))
        return np.array([np.asarray(self.fn(p)) for p in params])

    def sample(self, rng):
        return self._sampler(rng) if self._sampler else super().sample(rng)

    def describe(self):
        return {"type": self.name, "nParams": self.n_params}


class FrozenControl(ControlMap):
    """Ignores its controls and always returns the same state."""

    batched = True

    def __init__(self, state, n_params=1):
        self.regime = "quantum" if isinstance(state, DensityMatrix) else "classical"
        self._arr = np.array(state.entries if isinstance(state, DensityMatrix) else state.weights)
        self.n_params = int(n_params)

    def states(self, params):
        params = np.asarray(params, dtype=float)
        return np.broadcast_to(self._arr, params.shape[:-1] + self._arr.shape).copy()

    def pullback(self, params, state_grad):
        return np.zeros(np.shape(params))

    def describe(self):
        return {"type": "frozen", "nParams": self.n_params}


def safe_states(cmap, params):
    """Evaluate a batch; rows whose evaluation fails come back as NaN with the error."""
    params = np.asarray(params, dtype=float)
    try:
        return cmap.states(params), [None] * len(params)
    except LandscapeError:
        if len(params) == 1:
            raise
    out, errors = [], []
    for p in params:
        try:
            out.append(cmap.states(p))
            errors.append(None)
        except LandscapeError as exc:
            out.append(None)
            errors.append(f"{type(exc).__name__}: {exc}")
    shape = next((o.shape for o in out if o is not None), None)
    if shape is None:
        raise LandscapeError("; ".join(e for e in errors if e))
    dtype = complex if cmap.regime == "quantum" else float
    filled = [o if o is not None else np.full(shape, np.nan, dtype=dtype) for o in out]
    return np.array(filled), errors
