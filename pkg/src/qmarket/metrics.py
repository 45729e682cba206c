"""Scalar and structural diagnostics of market states.

Entropies are in nats. Index arguments (diagonal offsets) follow the
``rho_{i(i+j)}`` convention: ``j = 0`` is the main diagonal, ``j > 0`` the
j-th superdiagonal.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, fields

import numpy as np

from .errors import InvalidStateError, PositivityWarning, UndefinedMetricError
from .market_model import HARD_WALL, PERIODIC, PriceObservable
from .matrix_core import as_matrix, check_density_matrix, eigvalsh, frobenius_norm, hermitian_eigen

POSITIVITY_ALARM = 1e-6


def _is_diagonal(r: np.ndarray) -> bool:
    return not np.any(r[~np.eye(r.shape[0], dtype=bool)])


def _spectrum(r: np.ndarray) -> np.ndarray:
    # diagonal input keeps its storage order so the entropy sum matches the
    # Shannon sum bit for bit
    if _is_diagonal(r):
        return np.real(np.diagonal(r)).copy()
    return eigvalsh(r)


def _entropy_of(p: np.ndarray) -> float:
    p = np.clip(p, 0.0, 1.0)
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def von_neumann_entropy(rho) -> float:
    """``-sum l log l`` over the eigenvalues clamped to [0, 1].

    Emits :class:`PositivityWarning` if an eigenvalue is below -1e-6; the
    value is still returned.
    """
    w = _spectrum(as_matrix(rho))
    if w.min() < -POSITIVITY_ALARM:
        warnings.warn(f"state has eigenvalue {w.min():.3e} < -{POSITIVITY_ALARM:g}", PositivityWarning,
                      stacklevel=2)
    return _entropy_of(w)


def shannon_entropy_prices(rho) -> float:
    """Shannon entropy of the price-basis probabilities ``p_i = rho_ii``."""
    return _entropy_of(np.real(np.diagonal(as_matrix(rho))))


def precision_entropy_metric(rho) -> float:
    """``1 - S_vn / S_shannon`` clamped to [0, 1]; 0 when the price is certain."""
    r = as_matrix(rho)
    s_sh = shannon_entropy_prices(r)
    if s_sh < 1e-12:
        return 0.0
    return _p_ent(von_neumann_entropy(r), s_sh)


def _p_ent(s_vn: float, s_sh: float) -> float:
    if s_sh < 1e-12:
        return 0.0
    return float(min(1.0, max(0.0, 1.0 - s_vn / s_sh)))


def _price_operator(x, n: int) -> PriceObservable:
    if isinstance(x, PriceObservable):
        return x
    values = np.asarray(x, dtype=float)
    if values.shape != (n,):
        raise ValueError(f"expected {n} price values, got shape {values.shape}")
    return PriceObservable(n, values, np.diag(values).astype(np.complex128), "standard", 0.0,
                           np.diag(values**2).astype(np.complex128))


def _resolved_eigenbasis(r: np.ndarray, x: PriceObservable, cutoff: float, cluster_tol: float = 1e-9):
    """Eigenpairs of ``r`` with weight above ``cutoff``.

    Inside a degenerate eigenspace the basis is rotated to diagonalize the
    price operator, so classical states always resolve to basis vectors.
    """
    n = r.shape[0]
    if _is_diagonal(r):
        w = np.real(np.diagonal(r))
        v = np.eye(n, dtype=np.complex128)
        order = np.argsort(w, kind="stable")
        w, v = w[order], v[:, order]
    else:
        w, v = hermitian_eigen(r)
    keep = w > cutoff
    w, v = w[keep], v[:, keep]
    if w.size == 0:
        return w, v
    start = 0
    for stop in range(1, w.size + 1):
        if stop == w.size or w[stop] - w[stop - 1] > cluster_tol:
            if stop - start > 1:
                block = v[:, start:stop]
                _, rot = np.linalg.eigh(block.conj().T @ x.matrix @ block)
                v[:, start:stop] = block @ rot
            start = stop
    return w, v


def _vector_variance(v: np.ndarray, x: PriceObservable) -> float:
    m1 = np.real(np.vdot(v, x.matrix @ v))
    m2 = np.real(np.vdot(v, x.second_moment @ v))
    return float(m2 - m1 * m1)


def precision_variance_metric(rho, x, cutoff: float = 1e-10, floor: float = 1e-14) -> float:
    """Largest price variance over the eigenvectors of ``rho``, relative to the variance in ``rho``.

    Zero for classical (price-diagonal) states, one for pure states with any
    price spread. ``x`` is a :class:`PriceObservable` or an array of prices.
    """
    r = as_matrix(rho)
    xo = _price_operator(x, r.shape[0])
    total = xo.variance(r)
    _, vecs = _resolved_eigenbasis(r, xo, cutoff)
    best = max((_vector_variance(vecs[:, i], xo) for i in range(vecs.shape[1])), default=0.0)
    if total < floor:
        if best < floor:
            return 0.0
        raise UndefinedMetricError(f"state variance {total:.3e} vanishes but an eigenvector has {best:.3e}")
    return float(max(best, 0.0) / total)


def second_moment_share(rho, x, cutoff: float = 1e-10) -> float:
    """``max_i Tr[X^2 rho_i] / Tr[X^2 rho]`` with ``rho_i = l_i |v_i><v_i|``.

    Kept for comparison; unlike :func:`precision_variance_metric` it is not
    zero on classical mixed states.
    """
    r = as_matrix(rho)
    xo = _price_operator(x, r.shape[0])
    w, vecs = _resolved_eigenbasis(r, xo, cutoff)
    denom = float(np.real(np.trace(xo.second_moment @ r)))
    if abs(denom) < 1e-300:
        raise UndefinedMetricError("Tr[X^2 rho] is zero")
    parts = [w[i] * np.real(np.vdot(vecs[:, i], xo.second_moment @ vecs[:, i])) for i in range(w.size)]
    return float(max(parts) / denom)


@dataclass(frozen=True, eq=False)
class OrbitSignature:
    """Diagonal sums ``eps_j = sum_i rho_{i(i+j)}``, ``j = 0..N-1``."""

    dim: int
    sums: np.ndarray
    boundary_mode: str = HARD_WALL

    def __getitem__(self, j):
        return self.sums[j]


def orbit_signature(rho, boundary_mode: str = HARD_WALL) -> OrbitSignature:
    """Superdiagonal sums; periodic mode wraps column indices mod N."""
    r = as_matrix(rho)
    n = r.shape[0]
    if boundary_mode == PERIODIC:
        i = np.arange(n)
        sums = np.array([r[i, (i + j) % n].sum() for j in range(n)])
    else:
        sums = np.array([np.diagonal(r, j).sum() for j in range(n)])
    return OrbitSignature(n, sums.astype(np.complex128), boundary_mode)


@dataclass(frozen=True, eq=False)
class ToeplitzStationary:
    matrix: np.ndarray
    min_eigenvalue: float


def toeplitz_stationary(signature: OrbitSignature, atol: float = 1e-12) -> ToeplitzStationary:
    """Hermitian Toeplitz state with ``eps_j / (N - j)`` on the j-th superdiagonal.

    Not every signature is physical; check ``min_eigenvalue``.
    """
    n = signature.dim
    eps = np.asarray(signature.sums, dtype=np.complex128)
    if abs(eps[0] - 1.0) > atol:
        raise ValueError(f"eps_0 must be 1 (unit trace), got {eps[0]}")
    t = np.eye(n, dtype=np.complex128) / n
    for j in range(1, n):
        val = eps[j] / (n - j)
        idx = np.arange(n - j)
        t[idx, idx + j] = val
        t[idx + j, idx] = np.conj(val)
    return ToeplitzStationary(t, float(eigvalsh(t)[0]))


def circulant_stationary(signature: OrbitSignature, atol: float = 1e-12) -> ToeplitzStationary:
    """Circulant state ``C_{i,(i+j) mod N} = eps_j / N`` for a periodic signature.

    Hermiticity needs ``eps_{N-j} = conj(eps_j)``.
    """
    n = signature.dim
    eps = np.asarray(signature.sums, dtype=np.complex128)
    if abs(eps[0] - 1.0) > atol:
        raise ValueError(f"eps_0 must be 1 (unit trace), got {eps[0]}")
    mirror = np.conj(eps[(-np.arange(n)) % n])
    if np.max(np.abs(eps - mirror)) > atol:
        raise ValueError("periodic signature must satisfy eps_(N-j) = conj(eps_j)")
    i = np.arange(n)
    c = np.empty((n, n), dtype=np.complex128)
    for j in range(n):
        c[i, (i + j) % n] = eps[j] / n
    return ToeplitzStationary(c, float(eigvalsh(c)[0]))


def offdiagonal_power(rho, j: int) -> float:
    """``sum_i |rho_{i(i+j)}|^2``."""
    r = as_matrix(rho)
    if not 0 <= j < r.shape[0]:
        raise IndexError(f"offset {j} outside 0..{r.shape[0] - 1}")
    return float(np.sum(np.abs(np.diagonal(r, j)) ** 2))


def excess_kurtosis(rho, x) -> float:
    """``mu_4 / mu_2^2 - 3`` of the diagonal price distribution."""
    r = as_matrix(rho)
    values = x.values if isinstance(x, PriceObservable) else np.asarray(x, dtype=float)
    p = np.real(np.diagonal(r))
    p = p / p.sum()
    mean = np.dot(p, values)
    d = values - mean
    mu2 = np.dot(p, d**2)
    if mu2 < 1e-14:
        raise UndefinedMetricError(f"price distribution is degenerate (variance {mu2:.3e})")
    mu4 = np.dot(p, d**4)
    return float(mu4 / mu2**2 - 3.0)


def frobenius_distance_to_max_entropy(rho) -> float:
    r = as_matrix(rho)
    return frobenius_norm(r - np.eye(r.shape[0]) / r.shape[0])


def min_eigenvalue(rho) -> float:
    return float(_spectrum(as_matrix(rho)).min())


@dataclass(frozen=True)
class ContractionResult:
    before: float
    after: float
    contracted: bool


def contraction_check(t, perturbation, coeffs, ops, dt: float, tol: float = 1e-9) -> ContractionResult:
    """Compare ``||M||`` with ``||step(T + M) - T||`` for one Euler step."""
    from .dynamics import euler_step

    t = as_matrix(t)
    m = as_matrix(perturbation)
    try:
        check_density_matrix(t + m, tol)
    except ValueError as exc:
        raise InvalidStateError(f"perturbed state is not a density matrix: {exc}") from exc
    before = frobenius_norm(m)
    after = frobenius_norm(euler_step(t + m, coeffs, ops, dt) - t)
    return ContractionResult(before, after, after < before)


@dataclass(frozen=True)
class MetricsRecord:
    step: int
    time: float
    s_vn: float
    s_shannon: float
    p_ent: float
    excess_kurtosis: float
    d2_power: float
    frob_to_maxent: float
    trace_error: float
    min_eigenvalue: float | None = None

    @classmethod
    def header(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def as_row(self) -> list[str]:
        out = []
        for name in self.header():
            v = getattr(self, name)
            if v is None:
                out.append("")
            elif isinstance(v, int):
                out.append(str(v))
            else:
                out.append(format(v, ".17g"))
        return out


def compute_metrics(rho, values, step: int = 0, time: float = 0.0,
                    with_min_eigenvalue: bool = True) -> MetricsRecord:
    r = as_matrix(rho)
    w = _spectrum(r)
    s_vn = _entropy_of(w)
    s_sh = shannon_entropy_prices(r)
    try:
        kurt = excess_kurtosis(r, values)
    except UndefinedMetricError:
        kurt = float("nan")
    return MetricsRecord(
        step=int(step),
        time=float(time),
        s_vn=s_vn,
        s_shannon=s_sh,
        p_ent=_p_ent(s_vn, s_sh),
        excess_kurtosis=kurt,
        d2_power=offdiagonal_power(r, 2) if r.shape[0] > 2 else 0.0,
        frob_to_maxent=frobenius_distance_to_max_entropy(r),
        trace_error=float(abs(np.trace(r) - 1.0)),
        min_eigenvalue=float(w.min()) if with_min_eigenvalue else None,
    )
