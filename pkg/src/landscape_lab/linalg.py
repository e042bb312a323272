"""Small dense linear-algebra kernels.

All functions accept stacks of matrices (leading batch axes) so the
optimisers can advance many runs in lock step.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import RankDeficientInput


def dag(a):
    return np.conj(np.swapaxes(a, -1, -2))


def hermitian_part(a):
    return 0.5 * (a + dag(a))


def hermiticity_error(a):
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a - dag(a))))


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigen-decomposition ``A = V diag(eigenvalues) V^dagger``, eigenvalues ascending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self):
        v = self.eigenvectors
        return (v * self.eigenvalues[..., None, :]) @ dag(v)


def spectral(a):
    """Decompose a Hermitian matrix (or stack) with LAPACK ``heevd``."""
    w, v = np.linalg.eigh(hermitian_part(np.asarray(a, dtype=complex)))
    return SpectralDecomposition(w, v)


def hermitian_function(a, fn):
    """Apply a scalar function to a Hermitian matrix through its spectrum."""
    dec = spectral(a)
    v = dec.eigenvectors
    return (v * fn(dec.eigenvalues)[..., None, :]) @ dag(v)


@lru_cache(maxsize=None)
def _gell_mann(n):
    mats = []
    for j in range(n):
        for k in range(j + 1, n):
            s = np.zeros((n, n), dtype=complex)
            s[j, k] = s[k, j] = 1.0
            mats.append(s / np.sqrt(2.0))
            a = np.zeros((n, n), dtype=complex)
            a[j, k] = -1j
            a[k, j] = 1j
            mats.append(a / np.sqrt(2.0))
    for l in range(1, n):
        d = np.zeros((n, n), dtype=complex)
        d[:l, :l] = np.eye(l)
        d[l, l] = -l
        mats.append(d / np.sqrt(l * (l + 1)))
    out = np.array(mats).reshape(n * n - 1, n, n)
    out.setflags(write=False)
    return out


def traceless_basis(n):
    """Orthonormal basis of traceless Hermitian n x n matrices (Tr B_j B_k = delta_jk)."""
    return _gell_mann(int(n))


def bloch_coordinates(rho):
    """Real coordinates Tr[rho B_k] of a state in the traceless Hermitian basis."""
    rho = np.asarray(rho)
    basis = traceless_basis(rho.shape[-1])
    return np.einsum("kij,...ji->...k", basis, rho).real


def gram_schmidt(a, rtol=1e-12):
    """Orthonormalise the columns of ``a`` (shape ``(..., m, n)``, m >= n).

    Classical Gram-Schmidt with one re-orthogonalisation pass.  Returns
    ``(q, r)`` with ``a = q @ r``, ``q`` having orthonormal columns and
    ``r`` upper triangular with a real positive diagonal.  Raises
    ``RankDeficientInput`` when a column is (numerically) in the span of
    the previous ones.
    """
    a = np.asarray(a, dtype=complex)
    *batch, m, n = a.shape
    if m < n:
        raise RankDeficientInput(f"need at least as many rows as columns, got {m}x{n}")
    q = np.zeros_like(a)
    r = np.zeros((*batch, n, n), dtype=complex)
    for j in range(n):
        v = a[..., :, j].copy()
        ref = np.linalg.norm(v, axis=-1)
        for _ in range(2):
            if j:
                c = np.einsum("...mi,...m->...i", q[..., :, :j].conj(), v)
                v = v - np.einsum("...mi,...i->...m", q[..., :, :j], c)
                r[..., :j, j] += c
        nv = np.linalg.norm(v, axis=-1)
        if np.any(~(nv > rtol * np.maximum(ref, np.finfo(float).tiny))):
            raise RankDeficientInput(
                f"column {j} is linearly dependent on the previous columns "
                f"(residual norm {np.min(nv):.3e})"
            )
        r[..., j, j] = nv
        q[..., :, j] = v / nv[..., None]
    return q, r


def gram_schmidt_pullback(q, r, grad_q):
    """Map a gradient with respect to ``q`` back to the input matrix ``a``.

    Gradients use the real pairing ``<X, Y> = Re Tr[X^dagger Y]``: if
    ``dL = Re Tr[grad_q^dagger dq]`` then the returned ``grad_a`` satisfies
    ``dL = Re Tr[grad_a^dagger da]``.
    """
    m = dag(q) @ grad_q
    low = np.tril(m, -1)
    low_h = np.tril(dag(m), -1)
    diag = 1j * np.imag(np.diagonal(m, axis1=-2, axis2=-1))
    phi = low - low_h + np.einsum("...i,ij->...ij", diag, np.eye(m.shape[-1]))
    inner = q @ phi + grad_q - q @ (dag(q) @ grad_q)
    # inner @ r^{-dagger}, solved rather than inverted
    return dag(np.linalg.solve(r, dag(inner)))
