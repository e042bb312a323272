"""Density matrices, observables and quantum entropies on n-level systems."""

from dataclasses import dataclass

import numpy as np

from .config import TOL
from .errors import (
    DimensionMismatch,
    InvalidState,
    LambdaOutOfRange,
    NonHermitianObservable,
    NonRealResult,
    NotHermitian,
    NotPositive,
    TraceNotOne,
)
from .linalg import SpectralDecomposition, dag, hermiticity_error, spectral

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)


def _frozen(a):
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def _square(entries):
    a = np.asarray(entries, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise DimensionMismatch(f"expected a non-empty square matrix, got shape {a.shape}")
    return a


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A validated element of the set of n x n density matrices."""

    entries: np.ndarray

    def __post_init__(self):
        a = _square(self.entries)
        herm = hermiticity_error(a)
        if herm > TOL.validity:
            raise NotHermitian(f"max |rho - rho^dagger| = {herm:.3e} exceeds {TOL.validity}", herm)
        tr = abs(np.trace(a) - 1.0)
        if tr > TOL.validity:
            raise TraceNotOne(f"|Tr rho - 1| = {tr:.3e} exceeds {TOL.validity}", tr)
        min_eig = float(np.linalg.eigvalsh(0.5 * (a + dag(a)))[0])
        if min_eig < -TOL.validity:
            raise NotPositive(f"minimum eigenvalue {min_eig:.3e} below -{TOL.validity}", -min_eig)
        object.__setattr__(self, "entries", _frozen(a))

    @property
    def dim(self):
        return self.entries.shape[0]

    def eigenvalues(self):
        return np.linalg.eigvalsh(0.5 * (self.entries + dag(self.entries)))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def __repr__(self):
        return f"DensityMatrix(dim={self.dim})"


@dataclass(frozen=True, eq=False)
class Observable:
    """A Hermitian operator; also used for Hamiltonians."""

    entries: np.ndarray

    def __post_init__(self):
        a = _square(self.entries)
        herm = hermiticity_error(a)
        if herm > TOL.validity:
            raise NonHermitianObservable(
                f"max |O - O^dagger| = {herm:.3e} exceeds {TOL.validity}"
            )
        object.__setattr__(self, "entries", _frozen(a))

    @property
    def dim(self):
        return self.entries.shape[0]

    def spectrum(self) -> SpectralDecomposition:
        return spectral(self.entries)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def __repr__(self):
        return f"Observable(dim={self.dim})"


def make_density(entries):
    """Validate ``entries`` as a density matrix (Hermitian, PSD, unit trace)."""
    return DensityMatrix(entries)


def pure_state(vec):
    v = np.asarray(vec, dtype=complex)
    v = v / np.linalg.norm(v)
    return DensityMatrix(np.outer(v, v.conj()))


def maximally_mixed(n):
    return DensityMatrix(np.eye(n, dtype=complex) / n)


def _entries(x):
    return x.entries if isinstance(x, (DensityMatrix, Observable)) else np.asarray(x)


def convex_combine_q(rho0, rho1, lam):
    """Return ``(1 - lam) rho0 + lam rho1``, itself validated as a state."""
    if not 0.0 <= lam <= 1.0:
        raise LambdaOutOfRange(f"lambda = {lam} outside [0, 1]")
    if rho0.dim != rho1.dim:
        raise DimensionMismatch(f"dims {rho0.dim} and {rho1.dim} differ")
    return DensityMatrix((1.0 - lam) * rho0.entries + lam * rho1.entries)


def inner_product(x, y):
    """Hilbert-Schmidt inner product ``Tr[X^dagger Y]`` for Hermitian arguments."""
    a, b = _entries(x), _entries(y)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes {a.shape} and {b.shape} differ")
    val = np.sum(np.conj(a) * b)
    if abs(val.imag) > TOL.nonreal_imag:
        raise NonRealResult(f"imaginary part {val.imag:.3e} of inner product exceeds {TOL.nonreal_imag}")
    return float(val.real)


def _clamped_spectrum(w):
    """Clamp tiny negative eigenvalues to zero; reject real negativity."""
    w = np.asarray(w, dtype=float)
    low = np.min(w, axis=-1)
    if np.any(low < -TOL.validity):
        raise InvalidState(f"eigenvalue {np.min(low):.3e} below -{TOL.validity}", float(-np.min(low)))
    return np.clip(w, 0.0, None)


def entropy_from_probabilities(p, family="vonNeumann"):
    """Entropy of a probability vector (or stack); shared with the classical regime.

    ``family`` is ``"vonNeumann"``/``"shannon"`` (natural log, 0 ln 0 = 0) or
    ``("tsallis", q)`` with ``q > 0, q != 1``.
    """
    p = np.asarray(p, dtype=float)
    name, q = parse_entropy(family)
    if name == "tsallis":
        return (1.0 - np.sum(p**q, axis=-1)) / (q - 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)
    return -np.sum(terms, axis=-1)


def parse_entropy(family):
    """Normalise an entropy tag to ``(name, q)``.

    Accepted tags: ``"vonNeumann"``, ``"shannon"``, ``"tsallis:<q>"`` (bare
    ``"tsallis"`` means q = 2) or a tuple ``("tsallis", q)``.
    """
    if isinstance(family, str):
        name, _, q = family.partition(":")
        key = name.strip().lower()
        if key in ("vonneumann", "shannon"):
            return "log", None
        if key == "tsallis":
            return parse_entropy(("tsallis", q or 2.0))
        raise ValueError(f"unknown entropy family {family!r}")
    name, q = family
    if str(name).lower() != "tsallis":
        raise ValueError(f"unknown entropy family {family!r}")
    q = float(q)
    if not q > 0 or q == 1.0:
        raise ValueError(f"Tsallis index must satisfy q > 0, q != 1; got {q}")
    return "tsallis", q


def entropy_q(rho, family="vonNeumann"):
    """Von Neumann (nats) or Tsallis entropy of a density matrix."""
    a = _entries(rho)
    w = _clamped_spectrum(np.linalg.eigvalsh(0.5 * (a + dag(a))))
    return float(entropy_from_probabilities(w, family))


def gibbs_weights(energies, temperature):
    """Boltzmann weights and free-energy value ``T ln sum exp(-E/T)``."""
    e = np.asarray(energies, dtype=float)
    shift = np.min(e, axis=-1, keepdims=True)
    z = np.exp(-(e - shift) / temperature)
    total = np.sum(z, axis=-1, keepdims=True)
    value = -shift[..., 0] + temperature * np.log(total[..., 0])
    return z / total, value


def gibbs_state(observable, temperature):
    """``exp(-O/T) / Tr exp(-O/T)`` built from the spectrum of ``O``."""
    if not temperature > 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    if not isinstance(observable, Observable):
        observable = Observable(observable)
    dec = observable.spectrum()
    w, _ = gibbs_weights(dec.eigenvalues, temperature)
    v = dec.eigenvectors
    rho = (v * w) @ dag(v)
    return DensityMatrix(0.5 * (rho + dag(rho)))


def free_energy_optimum(observable, temperature):
    """Maximum of ``-Tr[rho O] + T S_vN(rho)``, equal to ``T ln Tr exp(-O/T)``."""
    e = np.linalg.eigvalsh(_entries(observable))
    return float(gibbs_weights(e, temperature)[1])


def random_density(rng, n, size=None):
    """Hilbert-Schmidt random state(s): ``G G^dagger / Tr`` with complex normal ``G``."""
    shape = (n, n) if size is None else (size, n, n)
    g = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    rho = g @ dag(g)
    tr = np.trace(rho, axis1=-2, axis2=-1).real
    rho = rho / tr[..., None, None]
    return 0.5 * (rho + dag(rho))


def random_hermitian(rng, n):
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (g + dag(g))


def trace_distance(a, b):
    d = _entries(a) - _entries(b)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (d + dag(d))))))


def matrix_to_json(a):
    a = np.asarray(_entries(a), dtype=complex)
    return {"dim": int(a.shape[0]), "re": a.real.tolist(), "im": a.imag.tolist()}


def matrix_from_json(obj):
    re = np.asarray(obj["re"], dtype=float)
    im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
    a = re + 1j * im
    if a.ndim != 2 or a.shape != (obj["dim"], obj["dim"]):
        raise DimensionMismatch(f"matrix payload does not match dim {obj.get('dim')}")
    return a
