"""Dense complex matrix helpers: Hermitian eigensolver, norms, Haar unitaries.

Matrices are plain ``numpy`` complex arrays. Nothing here mutates its inputs.
Index arguments exposed by the rest of the package are 1-based (``|f_1>`` is
the first basis vector); the helpers in this module never take indices.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidStateError, NonHermitianError

DEFAULT_TOL = 1e-9


def as_matrix(m) -> np.ndarray:
    """Return ``m`` as a square complex128 array (copying only if needed)."""
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {a.shape}")
    return a


def hermitian_deviation(m) -> tuple[float, tuple[int, int]]:
    """Largest ``|M_ij - conj(M_ji)|`` and its 1-based location."""
    a = as_matrix(m)
    diff = np.abs(a - a.conj().T)
    flat = int(np.argmax(diff))
    i, j = divmod(flat, a.shape[0])
    return float(diff[i, j]), (i + 1, j + 1)


def check_hermitian(m, tol: float = DEFAULT_TOL) -> np.ndarray:
    a = as_matrix(m)
    dev, pair = hermitian_deviation(a)
    if dev > tol:
        raise NonHermitianError(pair, dev)
    return a


def hermitian_eigen(m, tol: float = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix.

    Returns ascending real eigenvalues and a unitary matrix whose columns are
    the matching eigenvectors. Within a degenerate eigenspace the vectors are
    an arbitrary orthonormal basis.
    """
    a = check_hermitian(m, tol)
    # LAPACK reads only one triangle; symmetrize so both contribute equally.
    a = 0.5 * (a + a.conj().T)
    w, v = np.linalg.eigh(a)
    return w, v


def eigvalsh(m) -> np.ndarray:
    a = as_matrix(m)
    return np.linalg.eigvalsh(0.5 * (a + a.conj().T))


def frobenius_norm(m) -> float:
    a = np.asarray(m)
    return float(np.sqrt(np.sum(np.abs(a) ** 2)))


def haar_random_unitary(dim: int, seed: int) -> np.ndarray:
    """Haar-distributed unitary of size ``dim`` drawn deterministically from ``seed``.

    QR of a standard complex Gaussian matrix, with the phases of R's diagonal
    folded back into Q so the result is Haar rather than QR-biased.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    phases = d / np.abs(d)
    return q * phases[np.newaxis, :]


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return 0.5 * (z + z.conj().T)


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random full-rank (or given-rank) density matrix, ``G G^dag / Tr``."""
    k = dim if rank is None else rank
    g = rng.standard_normal((dim, k)) + 1j * rng.standard_normal((dim, k))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def check_density_matrix(rho, tol: float = DEFAULT_TOL, check_positive: bool = True) -> np.ndarray:
    """Validate Hermiticity, unit trace and (optionally) positivity.

    Raises :class:`InvalidStateError` (or :class:`NonHermitianError`).
    """
    a = check_hermitian(rho, tol)
    tr = np.trace(a)
    if abs(tr - 1.0) > tol:
        raise InvalidStateError(f"trace is {tr.real:.12g}, expected 1")
    if check_positive:
        lo = float(eigvalsh(a)[0])
        if lo < -tol:
            raise InvalidStateError(f"minimum eigenvalue {lo:.3e} is below -{tol:g}")
    return a
