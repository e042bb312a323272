"""Control-to-state maps: Kraus maps, stochastic matrices and Lindblad propagation."""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import classical as C
from .config import TOL
from .errors import (
    DimensionMismatch,
    EvaluationFailure,
    IntegrationFailure,
    LandscapeError,
    RankDeficientInput,
    SpaceMismatch,
)
from .linalg import bloch_coordinates, dag, gram_schmidt, hermitian_part
from .quantum import DensityMatrix, Observable


# --------------------------------------------------------------------------
# Kraus maps (quantum kinematic picture)


@dataclass(frozen=True, eq=False)
class KrausMap:
    operators: np.ndarray  # shape (r, n, n)

    def __post_init__(self):
        ops = np.array(self.operators, dtype=complex)
        if ops.ndim != 3 or ops.shape[1] != ops.shape[2]:
            raise DimensionMismatch(f"Kraus operators must have shape (r, n, n), got {ops.shape}")
        err = float(np.max(np.abs(np.einsum("kji,kjl->il", ops.conj(), ops) - np.eye(ops.shape[1]))))
        if err > TOL.kraus_tp:
            raise ValueError(f"sum K^dagger K deviates from identity by {err:.3e}")
        ops.setflags(write=False)
        object.__setattr__(self, "operators", ops)

    @property
    def dim(self):
        return self.operators.shape[1]

    @property
    def rank(self):
        return self.operators.shape[0]

    def compose(self, first):
        """The map ``self after first``: operators ``A_i B_j``."""
        if first.dim != self.dim:
            raise DimensionMismatch(f"dims {first.dim} and {self.dim} differ")
        ops = np.einsum("iab,jbc->ijac", self.operators, first.operators)
        return KrausMap(ops.reshape(-1, self.dim, self.dim))

    def to_json(self):
        from .quantum import matrix_to_json

        return [matrix_to_json(k) for k in self.operators]

    @classmethod
    def from_json(cls, obj):
        from .quantum import matrix_from_json

        return cls(np.array([matrix_from_json(k) for k in obj]))


@dataclass(frozen=True, eq=False)
class KinematicParams:
    """Unconstrained real coordinates of an (n r) x n complex matrix.

    ``raw[:n*n*r]`` holds the real parts and ``raw[n*n*r:]`` the imaginary
    parts, both row-major.
    """

    dim: int
    rank: int
    raw: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.raw, dtype=float)
        expected = 2 * self.dim * self.dim * self.rank
        if raw.shape != (expected,):
            raise DimensionMismatch(f"expected {expected} raw coordinates, got shape {raw.shape}")
        if not np.all(np.isfinite(raw)):
            raise ValueError("kinematic parameters must be finite")
        object.__setattr__(self, "raw", raw)

    @classmethod
    def from_matrix(cls, a, rank):
        a = np.asarray(a, dtype=complex)
        n = a.shape[1]
        return cls(n, rank, np.concatenate([a.real.ravel(), a.imag.ravel()]))


def raw_to_matrix(raw, n, r):
    raw = np.asarray(raw, dtype=float)
    half = n * n * r
    re = raw[..., :half].reshape(*raw.shape[:-1], n * r, n)
    im = raw[..., half:].reshape(*raw.shape[:-1], n * r, n)
    return re + 1j * im


def matrix_to_raw(a):
    return np.concatenate([a.real.reshape(*a.shape[:-2], -1), a.imag.reshape(*a.shape[:-2], -1)], axis=-1)


def kraus_from_params(p):
    """Orthonormalise the raw matrix into an isometry and slice it into Kraus operators."""
    a = raw_to_matrix(p.raw, p.dim, p.rank)
    q, _ = gram_schmidt(a)
    return KrausMap(q.reshape(p.rank, p.dim, p.dim))


def kraus_output(ops, rho):
    """``sum_i K_i rho K_i^dagger`` for operator stacks of shape ``(..., r, n, n)``."""
    x = ops @ rho[..., None, :, :] if np.ndim(rho) > 2 else ops @ rho
    return np.einsum("...kab,...kcb->...ac", x, ops.conj())


def apply_kraus(kmap, rho):
    if kmap.dim != rho.dim:
        raise DimensionMismatch(f"map dim {kmap.dim} vs state dim {rho.dim}")
    return DensityMatrix(hermitian_part(kraus_output(kmap.operators, rho.entries)))


# --------------------------------------------------------------------------
# Stochastic maps (classical kinematic picture)


@dataclass(frozen=True, eq=False)
class StochasticMap:
    """Column-stochastic m x m matrix acting on weight vectors."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatch(f"stochastic matrix must be square, got {m.shape}")
        if np.min(m) < -TOL.distribution_clamp:
            raise ValueError(f"negative entry {np.min(m):.3e}")
        m = np.clip(m, 0.0, None)
        err = float(np.max(np.abs(m.sum(axis=0) - 1.0)))
        if err > TOL.validity:
            raise ValueError(f"column sums deviate from 1 by {err:.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def cells(self):
        return self.matrix.shape[0]


def softmax_columns(raw, m):
    z = np.asarray(raw, dtype=float).reshape(*np.shape(raw)[:-1], m, m)
    z = z - np.max(z, axis=-2, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=-2, keepdims=True)


def stochastic_from_params(raw, cells):
    """Column ``j`` is the softmax of ``raw.reshape(m, m)[:, j]``."""
    raw = np.asarray(raw, dtype=float)
    if raw.shape != (cells * cells,):
        raise DimensionMismatch(f"expected {cells * cells} raw coordinates, got shape {raw.shape}")
    return StochasticMap(softmax_columns(raw, cells))


def amplitude_columns(raw, m):
    a = np.asarray(raw, dtype=float).reshape(*np.shape(raw)[:-1], m, m)
    sq = a * a
    norm = np.sum(sq, axis=-2, keepdims=True)
    if np.any(norm == 0):
        raise RankDeficientInput("a column of the amplitude matrix is identically zero")
    return sq / norm


def stochastic_from_amplitudes(raw, cells):
    """Column ``j`` is ``a[:, j]**2 / |a[:, j]|**2`` for ``a = raw.reshape(m, m)``.

    This is the diagonal (classical) restriction of the isometry
    construction used for Kraus maps.  Point masses are reached at finite
    coordinates, which keeps gradient ascent away from the saturation
    plateaus of the softmax form.
    """
    raw = np.asarray(raw, dtype=float)
    if raw.shape != (cells * cells,):
        raise DimensionMismatch(f"expected {cells * cells} raw coordinates, got shape {raw.shape}")
    return StochasticMap(amplitude_columns(raw, cells))


def apply_stochastic(smap, d):
    if smap.cells != d.cells:
        raise SpaceMismatch(f"map has {smap.cells} cells, distribution has {d.cells}")
    return C.Distribution(d.space, smap.matrix @ d.weights)


# --------------------------------------------------------------------------
# Lindblad dynamics (quantum dynamic picture)


@dataclass(frozen=True, eq=False)
class LindbladModel:
    """``drift`` H0, control Hamiltonians H_k and dissipators ``(L_j, gamma_j)``."""

    drift: Observable
    controls: tuple = ()
    dissipators: tuple = ()

    def __post_init__(self):
        n = self.drift.dim
        controls = tuple(h if isinstance(h, Observable) else Observable(h) for h in self.controls)
        diss = []
        for op, rate in self.dissipators:
            op = np.array(op, dtype=complex)
            if op.shape != (n, n):
                raise DimensionMismatch(f"dissipator shape {op.shape} does not match dim {n}")
            if not rate >= 0:
                raise ValueError(f"dissipation rate must be nonnegative, got {rate}")
            diss.append((op, float(rate)))
        for h in controls:
            if h.dim != n:
                raise DimensionMismatch(f"control Hamiltonian dim {h.dim} does not match {n}")
        object.__setattr__(self, "controls", controls)
        object.__setattr__(self, "dissipators", tuple(diss))

    @property
    def dim(self):
        return self.drift.dim

    @cached_property
    def _superoperators(self):
        n = self.dim
        eye = np.eye(n)

        def commutator(h):
            return -1j * (np.kron(h, eye) - np.kron(eye, h.T))

        static = commutator(np.array(self.drift.entries))
        for op, rate in self.dissipators:
            if rate == 0:
                continue
            ldl = dag(op) @ op
            static = static + rate * (np.kron(op, op.conj()) - 0.5 * np.kron(ldl, eye) - 0.5 * np.kron(eye, ldl.T))
        return static, [commutator(np.array(hk.entries)) for hk in self.controls]

    def liouvillian(self, amplitudes):
        """Superoperator acting on row-major ``vec(rho)``."""
        static, parts = self._superoperators
        sup = static.copy()
        for u, part in zip(amplitudes, parts):
            sup += u * part
        return sup


@dataclass(frozen=True, eq=False)
class ControlField:
    """Piecewise-constant amplitudes, ``values[step, channel]``."""

    t_start: float
    t_end: float
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] < 1:
            raise ValueError(f"field values must be an N x K array with N >= 1, got {v.shape}")
        if not self.t_end > self.t_start:
            raise ValueError(f"t_end {self.t_end} must exceed t_start {self.t_start}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def steps(self):
        return self.values.shape[0]

    def to_json(self):
        return {"t0": self.t_start, "t1": self.t_end, "values": self.values.tolist()}

    @classmethod
    def from_json(cls, obj):
        return cls(float(obj["t0"]), float(obj["t1"]), obj["values"])


def _rk4_step_matrix(sup, h):
    x = h * sup
    out = np.eye(sup.shape[0], dtype=complex)
    term = np.eye(sup.shape[0], dtype=complex)
    for k in range(1, 5):
        term = term @ x / k
        out = out + term
    return out


def _integrate_interval(sup, vec, duration, n, steps0=4):
    """RK4 across one constant-generator interval, doubling the step count
    until halving the step moves the result by at most ``lindblad_refine``.

    Returns ``(vec, drift)`` where ``drift`` is the largest trace error seen
    at any step of the accepted pass.
    """
    steps = steps0
    prev = None
    for _ in range(TOL.lindblad_max_doublings):
        stepper = _rk4_step_matrix(sup, duration / steps)
        # constant generator: m fixed steps are the m-th power of one step;
        # an unstable step count overflows and simply fails to settle
        with np.errstate(over="ignore", invalid="ignore"):
            cur = np.linalg.matrix_power(stepper, steps) @ vec
        if prev is not None and np.max(np.abs(cur - prev)) <= TOL.lindblad_refine:
            return cur, _max_trace_drift(stepper, vec, steps, n)
        prev = cur
        steps *= 2
    raise IntegrationFailure(
        f"step refinement did not settle after {TOL.lindblad_max_doublings} halvings "
        f"(step {duration / steps:.3e})"
    )


def _max_trace_drift(stepper, vec, steps, n):
    # rows[k-1] = Tr-functional pulled back through k steps; built by doubling
    # (steps is always a power of two)
    trace_row = np.zeros(n * n, dtype=complex)
    trace_row[:: n + 1] = 1.0
    rows, power = (trace_row @ stepper)[None, :], stepper
    while len(rows) < steps:
        rows = np.vstack([rows, rows @ power])
        power = power @ power
    worst = float(np.max(np.abs(rows @ vec - trace_row @ vec)))
    if worst > TOL.lindblad_drift:
        raise IntegrationFailure(f"trace drifted by {worst:.3e} within an interval")
    return worst


def integrate_lindblad(model, field, rho_i, return_drift=False):
    """The propagated matrix before re-projection.

    With ``return_drift`` also returns the largest per-step trace drift,
    accumulated across intervals.
    """
    n = model.dim
    if rho_i.dim != n:
        raise DimensionMismatch(f"state dim {rho_i.dim} vs model dim {n}")
    if field.values.shape[1] != len(model.controls):
        raise DimensionMismatch(
            f"field has {field.values.shape[1]} channels, model has {len(model.controls)} controls"
        )
    vec = np.array(rho_i.entries, dtype=complex).reshape(-1)
    dt = (field.t_end - field.t_start) / field.steps
    worst = 0.0
    for amps in field.values:
        start = abs(np.trace(vec.reshape(n, n)) - 1.0)
        vec, drift = _integrate_interval(model.liouvillian(amps), vec, dt, n)
        worst = max(worst, start + drift)
    rho = vec.reshape(n, n)
    return (rho, worst) if return_drift else rho


def propagate_lindblad(model, field, rho_i):
    """Integrate the Lindblad equation under a piecewise-constant field.

    The result is re-projected onto the state space (eigenvalues clamped at
    zero, trace renormalised) provided the drift is at most 1e-8.
    """
    return _reproject(integrate_lindblad(model, field, rho_i))


def _reproject(rho):
    rho = hermitian_part(rho)
    drift = abs(np.trace(rho).real - 1.0)
    w, v = np.linalg.eigh(rho)
    if drift > TOL.lindblad_drift or w[0] < -TOL.lindblad_drift:
        raise IntegrationFailure(f"final state drifted (trace error {drift:.3e}, min eigenvalue {w[0]:.3e})")
    w = np.clip(w, 0.0, None)
    w = w / w.sum()
    return DensityMatrix(hermitian_part((v * w) @ dag(v)))


# --------------------------------------------------------------------------
# Local surjectivity


def state_coordinates(state):
    """Independent real coordinates of a state: n^2 - 1 for quantum, m - 1 for classical."""
    if isinstance(state, DensityMatrix):
        return bloch_coordinates(state.entries)
    if isinstance(state, C.Distribution):
        return np.array(state.weights[:-1])
    a = np.asarray(state)
    if a.ndim == 2:
        return bloch_coordinates(a)
    return np.array(a[:-1], dtype=float)


def jacobian_rank(fn, point, h=TOL.fd_step, return_singular_values=False):
    """Numerical rank of d(state coordinates)/d(controls) by central differences.

    Singular values below ``max(rank_rel_cutoff * s_max, rank_abs_floor)`` are
    treated as zero.
    """
    if not h > 0:
        raise ValueError(f"finite-difference step must be positive, got {h}")
    x = np.asarray(point, dtype=float)

    def coords(p):
        try:
            return state_coordinates(fn(p))
        except LandscapeError as exc:
            raise EvaluationFailure(f"map evaluation failed near the point: {exc}") from exc

    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        cols.append((coords(x + e) - coords(x - e)) / (2 * h))
    jac = np.array(cols).T if cols else np.zeros((coords(x).size, 0))
    s = np.linalg.svd(jac, compute_uv=False) if jac.size else np.zeros(0)
    cutoff = max(TOL.rank_rel_cutoff * (s[0] if s.size else 0.0), TOL.rank_abs_floor)
    rank = int(np.sum(s > cutoff))
    return (rank, s) if return_singular_values else rank
