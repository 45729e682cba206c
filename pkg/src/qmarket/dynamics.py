"""Master-equation dynamics for the market density matrix.

The generator is

    sigma2 (A_u r A_d + A_d r A_u - 1/2 {A_u A_d + A_d A_u, r})
  + nu_u2  (A_u r A_u - 1/2 {A_u A_u, r})
  + nu_d2  (A_d r A_d - 1/2 {A_d A_d, r})

with no Hamiltonian (drift) part. For the exact shift operators it is
evaluated by an O(N^2) stencil (:mod:`qmarket.kernels`); for conjugated or
otherwise dense operators by matrix products.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import (
    CompletePositivityWarning,
    DimensionError,
    HealthCheckError,
    UnsupportedCaseError,
)
from .market_model import LindbladCoefficients, OperatorSet, price_grid
from .matrix_core import as_matrix, hermitian_deviation

TRACE_ABORT = 1e-6
HERMITICITY_ABORT = 1e-6


def _check_dims(m: np.ndarray, ops: OperatorSet):
    if m.shape[0] != ops.dim:
        raise DimensionError(f"matrix has dim {m.shape[0]}, operators have dim {ops.dim}")


def _dense_dissipator(r, coeffs: LindbladCoefficients, ops: OperatorSet):
    au, ad = ops.a_up, ops.a_down
    s2, nu, nd = coeffs.sigma2, coeffs.nu_u2, coeffs.nu_d2
    k = au @ ad + ad @ au
    out = s2 * (au @ r @ ad + ad @ r @ au - 0.5 * (k @ r + r @ k))
    if nu != 0:
        uu = au @ au
        out = out + nu * (au @ r @ au - 0.5 * (uu @ r + r @ uu))
    if nd != 0:
        dd = ad @ ad
        out = out + nd * (ad @ r @ ad - 0.5 * (dd @ r + r @ dd))
    return out


def apply_generator(rho, coeffs: LindbladCoefficients, ops: OperatorSet) -> np.ndarray:
    """Time derivative of ``rho`` under the master equation."""
    r = as_matrix(rho)
    _check_dims(r, ops)
    if ops.structured:
        return kernels.shift_generator(r, coeffs.sigma2, coeffs.nu_u2, coeffs.nu_d2, ops.periodic)
    return _dense_dissipator(r, coeffs, ops)


def apply_generator_dense(rho, coeffs: LindbladCoefficients, ops: OperatorSet) -> np.ndarray:
    """Same as :func:`apply_generator` but always through matrix products."""
    r = as_matrix(rho)
    _check_dims(r, ops)
    return _dense_dissipator(r, coeffs, ops)


def apply_shift_L(m) -> np.ndarray:
    """``L(M)_ij = M_(i-1)(j-1) + M_(i+1)(j+1) - 2 M_ij``, out-of-range entries read as 0."""
    m = as_matrix(m)
    out = -2.0 * m
    out[1:, 1:] += m[:-1, :-1]
    out[:-1, :-1] += m[1:, 1:]
    return out


def euler_step(rho, coeffs: LindbladCoefficients, ops: OperatorSet, dt: float) -> np.ndarray:
    """One explicit Euler step, re-symmetrized to stay exactly Hermitian.

    Positivity is not enforced; see :func:`qmarket.metrics.min_eigenvalue`.
    Symmetrizing is a no-op when ``nu_d2 == conj(nu_u2)``; otherwise the
    generator is not Hermiticity-preserving and the step keeps only its
    Hermitian part.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    return euler_steps(rho, coeffs, ops, dt, 1)


def euler_steps(rho, coeffs: LindbladCoefficients, ops: OperatorSet, dt: float, n_steps: int) -> np.ndarray:
    r = as_matrix(rho)
    _check_dims(r, ops)
    if ops.structured:
        return kernels.euler_steps(r, n_steps, dt, coeffs.sigma2, coeffs.nu_u2, coeffs.nu_d2, ops.periodic)
    r = r.copy()
    for _ in range(n_steps):
        r = r + dt * _dense_dissipator(r, coeffs, ops)
        r = 0.5 * (r + r.conj().T)
    return r


def apply_classical_generator(p, sigma2: float, boundary_mode: str = "hard-wall") -> np.ndarray:
    """Rates ``dp_i/dt`` for a diagonal state under ``nu = 0``.

    ``sigma2 (p_{i+1} + p_{i-1} - 2 p_i)``, with the hard-wall ends losing
    the missing neighbour and half the loss term (reflecting boundary).
    """
    p = np.asarray(p, dtype=float)
    if boundary_mode == "periodic":
        return sigma2 * (np.roll(p, 1) + np.roll(p, -1) - 2.0 * p)
    rates = -2.0 * p
    rates[1:] += p[:-1]
    rates[:-1] += p[1:]
    rates[0] += p[0]
    rates[-1] += p[-1]
    return sigma2 * rates


@dataclass(frozen=True)
class StepSchedule:
    """Ordered ``(step_count, coefficients)`` segments sharing one ``dt``."""

    segments: tuple
    dt: float

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        segs = tuple((int(n), c) for n, c in self.segments)
        if any(n <= 0 for n, _ in segs):
            raise ValueError("segment step counts must be positive")
        object.__setattr__(self, "segments", segs)

    @property
    def total_steps(self) -> int:
        return sum(n for n, _ in self.segments)


@dataclass
class SimulationResult:
    final: np.ndarray
    records: list
    segment_wall_times: list = field(default_factory=list)
    max_trace_error: float = 0.0
    min_eigenvalue: float | None = None


def simulate(rho0, schedule: StepSchedule, ops: OperatorSet, record_stride: int = 100,
             values=None, min_eig_every: int = 10) -> SimulationResult:
    """Run a schedule and record metrics every ``record_stride`` steps.

    Records are also taken at step 0 and at every segment boundary. The
    minimum eigenvalue is computed on every ``min_eig_every``-th record.
    ``values`` are the price grid for the kurtosis column (defaults to an
    evenly spaced grid; kurtosis is invariant under affine rescaling).

    Raises :class:`HealthCheckError` when the trace or Hermiticity drifts by
    more than 1e-6.
    """
    from .metrics import compute_metrics

    if record_stride < 1:
        raise ValueError("record_stride must be >= 1")
    rho = as_matrix(rho0).copy()
    _check_dims(rho, ops)
    if values is None:
        values = price_grid(ops.dim, -1.0, 1.0)
    dt = schedule.dt

    records = []
    walls = []
    state = {"max_trace": 0.0, "min_eig": None}

    def record(step, r):
        tr_err = abs(np.trace(r) - 1.0)
        herm, _ = hermitian_deviation(r)
        if tr_err > TRACE_ABORT:
            raise HealthCheckError(f"trace drift {tr_err:.3e} exceeds {TRACE_ABORT:g}", step)
        if herm > HERMITICITY_ABORT:
            raise HealthCheckError(f"Hermiticity drift {herm:.3e} exceeds {HERMITICITY_ABORT:g}", step)
        with_eig = len(records) % min_eig_every == 0
        rec = compute_metrics(r, values, step=step, time=step * dt, with_min_eigenvalue=with_eig)
        records.append(rec)
        state["max_trace"] = max(state["max_trace"], rec.trace_error)
        if rec.min_eigenvalue is not None:
            lo = state["min_eig"]
            state["min_eig"] = rec.min_eigenvalue if lo is None else min(lo, rec.min_eigenvalue)

    step = 0
    record(0, rho)
    for n_seg, coeffs in schedule.segments:
        t0 = time.perf_counter()
        end = step + n_seg
        while step < end:
            nxt = min(end, (step // record_stride + 1) * record_stride)
            rho = euler_steps(rho, coeffs, ops, dt, nxt - step)
            step = nxt
            record(step, rho)
        walls.append(time.perf_counter() - t0)
    return SimulationResult(rho, records, walls, state["max_trace"], state["min_eig"])


@dataclass(frozen=True, eq=False)
class GKSLForm:
    """Diagonal (Lindblad) form ``sum_i rate_i (L_i r L_i^dag - 1/2 {L_i^dag L_i, r})``."""

    theta: float
    lindblad_ops: tuple
    rates: tuple
    source: LindbladCoefficients | None = None

    def dissipator(self, rho) -> np.ndarray:
        r = as_matrix(rho)
        out = np.zeros_like(r)
        for g, op in zip(self.rates, self.lindblad_ops):
            od = op.conj().T
            ld = od @ op
            out += g * (op @ r @ od - 0.5 * (ld @ r + r @ ld))
        return out


def gksl_standard_form(coeffs: LindbladCoefficients, ops: OperatorSet) -> GKSLForm:
    """Rotate ``(A_u, A_d)`` into ``L_1 = cos t A_u - sin t A_d``, ``L_2 = sin t A_u + cos t A_d``.

    Only the symmetric case ``nu_u2 == nu_d2`` (real) is handled: there the
    angle is pi/4 and the rates are ``sigma2 - nu2`` and ``sigma2 + nu2``.
    """
    nu, nd = complex(coeffs.nu_u2), complex(coeffs.nu_d2)
    if nu != nd or nu.imag != 0:
        raise UnsupportedCaseError(
            f"standard form needs nu_u2 == nu_d2 (real); got {coeffs.nu_u2!r}, {coeffs.nu_d2!r}"
        )
    nu2 = nu.real
    theta = 0.0 if nu2 == 0 else np.pi / 4
    c, s = np.cos(theta), np.sin(theta)
    l1 = c * ops.a_up - s * ops.a_down
    l2 = s * ops.a_up + c * ops.a_down
    # Expanding the rotated pair back onto A_u, A_d fixes these weights.
    cross = 2.0 * c * s * nu2
    rates = (coeffs.sigma2 - cross, coeffs.sigma2 + cross)
    return GKSLForm(theta, (l1, l2), rates, coeffs)


@dataclass(frozen=True)
class CPDiagnostics:
    lhs: float
    rhs: float
    c_eigenvalues: tuple


def is_completely_positive(coeffs: LindbladCoefficients) -> tuple[bool, CPDiagnostics]:
    """Flag ``|nu_u2| + |nu_d2| <= sigma2`` and report the Kossakowski eigenvalues.

    The eigenvalues of ``[[s2, -nu_u2], [-nu_d2, s2]]`` are
    ``s2 +- sqrt(nu_u2 nu_d2)``, which is a weaker condition than the
    inequality; both are exposed and the flag follows the inequality.
    """
    lhs = abs(coeffs.nu_u2) + abs(coeffs.nu_d2)
    eig = np.linalg.eigvals(coeffs.c_matrix())
    if np.all(np.abs(eig.imag) <= 1e-15):
        eig = tuple(sorted(float(e) for e in eig.real))
    else:
        eig = tuple(complex(e) for e in eig)
    return lhs <= coeffs.sigma2, CPDiagnostics(float(lhs), float(coeffs.sigma2), eig)


def warn_if_not_cp(coeffs: LindbladCoefficients, label: str = "") -> bool:
    ok, diag = is_completely_positive(coeffs)
    if not ok:
        where = f" ({label})" if label else ""
        warnings.warn(
            f"coefficients{where} fail |nu_u2|+|nu_d2| <= sigma2: {diag.lhs:.6g} > {diag.rhs:.6g}; "
            f"Kossakowski eigenvalues {diag.c_eigenvalues}",
            CompletePositivityWarning,
            stacklevel=2,
        )
    return ok


def is_classical_evolution(form: GKSLForm, atol: float = 1e-12) -> bool:
    """True iff every column of every Lindblad operator has at most one nonzero entry."""
    for op in form.lindblad_ops:
        nonzero = np.abs(np.asarray(op)) > atol
        if np.any(nonzero.sum(axis=0) > 1):
            return False
    return True


def heisenberg_step(f, coeffs: LindbladCoefficients, ops: OperatorSet, dt: float) -> np.ndarray:
    """One Euler step of an observable under the adjoint generator.

    ``F + dt sum_{k,l} c_kl (A_k F A_l - 1/2 {A_k A_l, F})`` with
    ``c_ud = c_du = sigma2``, ``c_uu = nu_u2``, ``c_dd = nu_d2``. For these
    operators this has the same algebraic form as the state generator.
    """
    f = as_matrix(f)
    _check_dims(f, ops)
    if ops.structured:
        g = kernels.shift_generator(f, coeffs.sigma2, coeffs.nu_u2, coeffs.nu_d2, ops.periodic)
    else:
        g = _dense_dissipator(f, coeffs, ops)
    return f + dt * g


def superoperator(coeffs: LindbladCoefficients, ops: OperatorSet) -> np.ndarray:
    """Dense ``N^2 x N^2`` generator acting on row-major ``vec(rho)``."""
    n = ops.dim
    au, ad = ops.a_up, ops.a_down
    eye = np.eye(n)

    def sandwich(a, b):  # vec(a r b)
        return np.kron(a, b.T)

    def anti(m):  # vec({m, r})
        return np.kron(m, eye) + np.kron(eye, m.T)

    s = coeffs.sigma2 * (sandwich(au, ad) + sandwich(ad, au) - 0.5 * anti(au @ ad + ad @ au))
    s = s + coeffs.nu_u2 * (sandwich(au, au) - 0.5 * anti(au @ au))
    s = s + coeffs.nu_d2 * (sandwich(ad, ad) - 0.5 * anti(ad @ ad))
    return s.astype(np.complex128)


def expm_taylor(m, tol: float = 1e-17) -> np.ndarray:
    """Matrix exponential by scaling and squaring a truncated Taylor series."""
    m = np.asarray(m, dtype=np.complex128)
    norm = np.linalg.norm(m, 1)
    squarings = max(0, int(np.ceil(np.log2(norm / 0.25)))) if norm > 0.25 else 0
    a = m / (2.0**squarings)
    result = np.eye(m.shape[0], dtype=np.complex128)
    term = result.copy()
    for k in range(1, 60):
        term = term @ a / k
        result = result + term
        if np.linalg.norm(term, 1) <= tol * np.linalg.norm(result, 1):
            break
    for _ in range(squarings):
        result = result @ result
    return result


MAX_EXACT_DIM = 12


def exact_propagate_small(rho0, coeffs: LindbladCoefficients, ops: OperatorSet, t: float) -> np.ndarray:
    """``exp(t L) rho0`` via the dense superoperator; reference for the Euler stepper."""
    r = as_matrix(rho0)
    _check_dims(r, ops)
    n = ops.dim
    if n > MAX_EXACT_DIM:
        raise DimensionError(f"exact propagation limited to N <= {MAX_EXACT_DIM}, got {n}")
    if t == 0:
        return r.copy()
    prop = expm_taylor(t * superoperator(coeffs, ops))
    return (prop @ r.reshape(-1)).reshape(n, n)
