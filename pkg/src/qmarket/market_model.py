"""Market objects: shift operators, price observables, initial states and
the dissipator coefficients implied by an environment state."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConsistencyError, DimensionError, InvalidStateError
from .matrix_core import as_matrix, check_density_matrix

HARD_WALL = "hard-wall"
PERIODIC = "periodic"
BOUNDARY_MODES = (HARD_WALL, PERIODIC)


@dataclass(frozen=True, eq=False)
class OperatorSet:
    """Up/down price-jump operators ``A_u``, ``A_d`` on ``C^N``.

    ``structured`` is true while the pair is the exact nearest-neighbour
    shift built by :func:`make_shift_operators`; the dynamics module then
    uses the O(N^2) stencil kernels instead of dense products.
    """

    dim: int
    a_up: np.ndarray
    a_down: np.ndarray
    boundary_mode: str = HARD_WALL
    structured: bool = False

    @property
    def periodic(self) -> bool:
        return self.boundary_mode == PERIODIC

    def conjugated(self, u) -> "OperatorSet":
        """Return ``U^dag A U`` for both operators (loses the stencil structure)."""
        u = as_matrix(u)
        if u.shape[0] != self.dim:
            raise DimensionError(f"unitary has dim {u.shape[0]}, operators have {self.dim}")
        ud = u.conj().T
        return OperatorSet(self.dim, ud @ self.a_up @ u, ud @ self.a_down @ u,
                           self.boundary_mode, structured=False)


def make_shift_operators(n: int, boundary_mode: str = HARD_WALL) -> OperatorSet:
    """``A_u = sum_i |f_{i+1}><f_i|`` and ``A_d = A_u^T``.

    In periodic mode the wrap-around term ``|f_1><f_N|`` is added, making
    ``A_u`` the cyclic shift.
    """
    if n < 2:
        raise DimensionError("need N >= 2 for shift operators")
    if boundary_mode not in BOUNDARY_MODES:
        raise ValueError(f"unknown boundary mode {boundary_mode!r}")
    a_up = np.zeros((n, n), dtype=np.complex128)
    idx = np.arange(n - 1)
    a_up[idx + 1, idx] = 1.0
    if boundary_mode == PERIODIC:
        a_up[0, n - 1] = 1.0
    return OperatorSet(n, a_up, a_up.T.copy(), boundary_mode, structured=True)


@dataclass(frozen=True, eq=False)
class PriceObservable:
    """A Hermitian price operator ``X = sum_i x_i |v_i><v_i|``.

    For the standard observable ``|v_i> = |f_i>``. For the misaligned one the
    ``|v_i>`` overlap, so ``X^2`` differs from ``sum_i x_i^2 |v_i><v_i|``;
    the latter is kept as ``second_moment`` and is what :meth:`variance`
    uses (outcome ``x_i`` weighted by ``|<v_i|psi>|^2``).
    """

    dim: int
    values: np.ndarray
    matrix: np.ndarray
    kind: str = "standard"
    epsilon: float = 0.0
    second_moment: np.ndarray = field(default=None)

    def mean(self, rho) -> float:
        return float(np.real(np.trace(as_matrix(rho) @ self.matrix)))

    def variance(self, rho) -> float:
        rho = as_matrix(rho)
        m1 = np.real(np.trace(rho @ self.matrix))
        m2 = np.real(np.trace(rho @ self.second_moment))
        return float(m2 - m1 * m1)

    def operator_variance(self, rho) -> float:
        """``Tr[rho X^2] - Tr[rho X]^2`` using the operator square."""
        rho = as_matrix(rho)
        m1 = np.real(np.trace(rho @ self.matrix))
        m2 = np.real(np.trace(rho @ self.matrix @ self.matrix))
        return float(m2 - m1 * m1)


def price_grid(n: int, x_min: float, x_max: float) -> np.ndarray:
    """Evenly spaced prices with exact endpoints.

    Built as ``mid + half * t`` with ``t`` exactly antisymmetric, so a grid
    symmetric about zero is symmetric to the last bit.
    """
    t = (2.0 * np.arange(n) - (n - 1)) / (n - 1)
    values = 0.5 * (x_min + x_max) + 0.5 * (x_max - x_min) * t
    values[0], values[-1] = x_min, x_max
    return values


def make_price_observable(n: int, x_min: float, x_max: float) -> PriceObservable:
    if not x_min < x_max:
        raise ValueError("x_min must be below x_max")
    if n < 2:
        raise DimensionError("need N >= 2")
    values = price_grid(n, x_min, x_max)
    matrix = np.diag(values).astype(np.complex128)
    return PriceObservable(n, values, matrix, "standard", 0.0, np.diag(values**2).astype(np.complex128))


def misaligned_vectors(n: int, epsilon: float) -> np.ndarray:
    """Columns are ``|v_i> = eps|f_{i-1}> + sqrt(1-2eps^2)|f_i> + eps|f_{i+1}>``.

    The end vectors lose their out-of-range neighbour and are renormalized.
    """
    if n < 3:
        raise DimensionError("need N >= 3 for the misaligned observable")
    if not 0.0 <= epsilon <= 1.0 / np.sqrt(2.0):
        raise ValueError(f"epsilon must lie in [0, 1/sqrt(2)], got {epsilon}")
    v = np.zeros((n, n))
    centre = np.sqrt(1.0 - 2.0 * epsilon**2)
    for i in range(n):
        v[i, i] = centre
        if i > 0:
            v[i - 1, i] = epsilon
        if i < n - 1:
            v[i + 1, i] = epsilon
    for i in (0, n - 1):
        v[:, i] /= np.linalg.norm(v[:, i])
    return v


def make_misaligned_observable(n: int, values, epsilon: float) -> PriceObservable:
    values = np.asarray(values, dtype=float)
    if values.shape != (n,):
        raise DimensionError(f"expected {n} price values, got shape {values.shape}")
    v = misaligned_vectors(n, epsilon)
    if epsilon == 0.0:
        matrix = np.diag(values).astype(np.complex128)
        second = np.diag(values**2).astype(np.complex128)
    else:
        matrix = (v * values) @ v.T
        second = (v * values**2) @ v.T
        # BLAS does not return an exactly symmetric product
        matrix = (0.5 * (matrix + matrix.T)).astype(np.complex128)
        second = (0.5 * (second + second.T)).astype(np.complex128)
    return PriceObservable(n, values, matrix, "misaligned", float(epsilon), second)


def dirac_state(n: int, k: int) -> np.ndarray:
    """``|f_k><f_k|`` with 1-based ``k``."""
    if not 1 <= k <= n:
        raise IndexError(f"index {k} outside 1..{n}")
    rho = np.zeros((n, n), dtype=np.complex128)
    rho[k - 1, k - 1] = 1.0
    return rho


def gaussian_state(n: int, values, sigma0: float) -> np.ndarray:
    """Diagonal state with weights ``exp(-x_i^2 / 2 sigma0^2)``, normalized to trace 1."""
    if sigma0 <= 0:
        raise ValueError("sigma0 must be positive")
    values = np.asarray(values, dtype=float)
    if values.shape != (n,):
        raise DimensionError(f"expected {n} price values, got shape {values.shape}")
    q2 = np.exp(-values**2 / (2.0 * sigma0**2)) / np.sqrt(2.0 * np.pi * sigma0**2)
    return np.diag(q2 / q2.sum()).astype(np.complex128)


@dataclass(frozen=True)
class LindbladCoefficients:
    """Dissipator weights: ``sigma2`` on the A_u/A_d cross terms, ``nu_u2``
    on A_u..A_u and ``nu_d2`` on A_d..A_d. The nu's may be complex when they
    come from an environment state with complex coherences."""

    sigma2: float
    nu_u2: complex = 0.0
    nu_d2: complex = 0.0

    def __post_init__(self):
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be non-negative")

    @classmethod
    def from_rates(cls, sigma: float, nu_u: float = 0.0, nu_d: float = 0.0) -> "LindbladCoefficients":
        return cls(float(sigma) ** 2, float(nu_u) ** 2, float(nu_d) ** 2)

    @property
    def is_classical(self) -> bool:
        return self.nu_u2 == 0 and self.nu_d2 == 0

    def classical(self) -> "LindbladCoefficients":
        return LindbladCoefficients(self.sigma2, 0.0, 0.0)

    def c_matrix(self) -> np.ndarray:
        """``[[s2, -nu_u2], [-nu_d2, s2]]`` over ``(A_u, A_d)``.

        The off-diagonal sign does not affect the eigenvalues ``s2 +- sqrt(nu_u2 nu_d2)``.
        """
        return np.array([[self.sigma2, -self.nu_u2], [-self.nu_d2, self.sigma2]], dtype=np.complex128)


@dataclass(frozen=True, eq=False)
class EnvironmentState:
    """Static reduced state ``r`` over ``K`` risk-appetite levels, plus coupling ``kappa``."""

    levels: int
    r: np.ndarray
    kappa: float = 1.0

    def __post_init__(self):
        r = np.asarray(self.r, dtype=np.complex128)
        if r.shape != (self.levels, self.levels):
            raise DimensionError(f"r must be {self.levels}x{self.levels}")
        if self.kappa < 0:
            raise ValueError("kappa must be non-negative")
        try:
            check_density_matrix(r)
        except ValueError as exc:
            raise InvalidStateError(f"environment state: {exc}") from exc
        object.__setattr__(self, "r", r)

    @classmethod
    def maximum_entropy(cls, levels: int, kappa: float = 1.0) -> "EnvironmentState":
        return cls(levels, np.eye(levels) / levels, kappa)

    def jump_operators(self) -> tuple[np.ndarray, np.ndarray]:
        """``B_u = sum_i |e_{i+1}><e_i|`` and ``B_d = B_u^T`` on the level space."""
        k = self.levels
        b_up = np.zeros((k, k))
        idx = np.arange(k - 1)
        b_up[idx + 1, idx] = 1.0
        return b_up, b_up.T.copy()


def environment_coefficients(env: EnvironmentState, atol: float = 1e-12) -> LindbladCoefficients:
    """Dissipator coefficients from the environment state.

    Computed twice: from the index sums over ``r`` and from traces of
    ``B`` products against ``r``. A mismatch means one construction is broken
    and raises :class:`ConsistencyError`.
    """
    r, kappa, k = env.r, env.kappa, env.levels
    idx = np.arange(max(k - 2, 0))
    sums = (
        kappa * np.sum(np.diagonal(r)[: k - 1]),
        2.0 * kappa * np.sum(r[idx, idx + 2]),
        2.0 * kappa * np.sum(r[idx + 2, idx]),
    )

    b_up, b_down = env.jump_operators()
    traces = (
        kappa * np.trace(b_down @ b_up @ r),
        2.0 * kappa * np.trace(b_up @ b_up @ r),
        2.0 * kappa * np.trace(b_down @ b_down @ r),
    )

    for name, a, b in zip(("sigma2", "nu_u2", "nu_d2"), sums, traces):
        if abs(a - b) > atol:
            raise ConsistencyError(f"{name}: index sum {a} != trace form {b}")

    def _scalar(z):
        z = complex(z)
        return z.real if z.imag == 0 else z

    return LindbladCoefficients(float(sums[0].real), _scalar(sums[1]), _scalar(sums[2]))
