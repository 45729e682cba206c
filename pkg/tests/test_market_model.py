import numpy as np
import pytest

from qmarket.errors import DimensionError
from qmarket.market_model import (
    EnvironmentState,
    LindbladCoefficients,
    dirac_state,
    environment_coefficients,
    gaussian_state,
    make_misaligned_observable,
    make_price_observable,
    make_shift_operators,
    misaligned_vectors,
)
from qmarket.matrix_core import random_density_matrix
from qmarket.metrics import von_neumann_entropy


def test_shift_n2_single_entry():
    ops = make_shift_operators(2)
    expected = np.zeros((2, 2))
    expected[1, 0] = 1.0  # (2,1) in 1-based indexing
    np.testing.assert_array_equal(ops.a_up, expected)


def test_hard_wall_products():
    # Multiplying the explicit matrices: A_u A_d kills |f_1>, A_d A_u kills |f_N>.
    ops = make_shift_operators(4)
    np.testing.assert_array_equal(ops.a_up @ ops.a_down, np.diag([0.0, 1, 1, 1]))
    np.testing.assert_array_equal(ops.a_down @ ops.a_up, np.diag([1.0, 1, 1, 0]))


def test_periodic_products():
    ops = make_shift_operators(4, "periodic")
    np.testing.assert_array_equal(ops.a_up @ ops.a_down, np.eye(4))
    np.testing.assert_array_equal(ops.a_down @ ops.a_up, np.eye(4))


@pytest.mark.parametrize("mode", ["hard-wall", "periodic"])
def test_a_down_is_adjoint(mode):
    ops = make_shift_operators(7, mode)
    np.testing.assert_array_equal(ops.a_down, ops.a_up.conj().T)


def test_shift_rejects_small_n():
    with pytest.raises(DimensionError):
        make_shift_operators(1)


def test_price_grid():
    x = make_price_observable(21, -1.0, 1.0)
    np.testing.assert_allclose(np.diff(x.values), 0.1, atol=1e-15)
    assert x.values[0] == -1.0 and x.values[-1] == 1.0
    x101 = make_price_observable(101, -1.0, 1.0)
    assert x101.values[50] == 0.0
    np.testing.assert_array_equal(make_price_observable(2, 0.0, 1.0).values, [0.0, 1.0])


def test_misaligned_eps0_is_standard():
    std = make_price_observable(21, -1.0, 1.0)
    mis = make_misaligned_observable(21, std.values, 0.0)
    np.testing.assert_array_equal(mis.matrix, std.matrix)
    np.testing.assert_array_equal(mis.values, std.values)


@pytest.mark.parametrize("eps", [0.05, 0.1, 0.2, 0.3])
def test_misaligned_vectors_unit_and_hermitian(eps):
    v = misaligned_vectors(11, eps)
    np.testing.assert_allclose(np.linalg.norm(v, axis=0), 1.0, atol=1e-15)
    x = make_misaligned_observable(11, np.linspace(-1, 1, 11), eps)
    np.testing.assert_array_equal(x.matrix, x.matrix.conj().T)


def test_misaligned_variance_of_dirac():
    std = make_price_observable(21, -1.0, 1.0)
    x = make_misaligned_observable(21, std.values, 0.1)
    rho = dirac_state(21, 11)
    assert x.variance(rho) == pytest.approx(2e-4, abs=1e-14)


def test_misaligned_operator_variance():
    # X|f_k> = eps*dx*(|v_{k+1}> - |v_{k-1}>) at x_k = 0, and that vector has squared
    # norm 2 - 2 eps^2, so the operator variance is 2 eps^2 dx^2 (1 - eps^2).
    std = make_price_observable(21, -1.0, 1.0)
    for eps in (0.05, 0.1, 0.2):
        x = make_misaligned_observable(21, std.values, eps)
        v = misaligned_vectors(21, eps)
        xf = x.matrix[:, 10]
        brute = np.vdot(xf, xf).real - x.matrix[10, 10].real ** 2
        assert x.operator_variance(dirac_state(21, 11)) == pytest.approx(brute, abs=1e-15)
        assert brute == pytest.approx(2 * eps**2 * 0.01 * (1 - eps**2), abs=1e-14)
        assert np.linalg.norm(v[:, 11] - v[:, 9]) ** 2 == pytest.approx(2 - 2 * eps**2)


def test_misaligned_rejects_bad_eps():
    with pytest.raises(ValueError):
        make_misaligned_observable(5, np.arange(5.0), 0.8)
    with pytest.raises(ValueError):
        make_misaligned_observable(5, np.arange(5.0), -0.1)


def test_dirac_state():
    rho = dirac_state(3, 2)
    expected = np.zeros((3, 3))
    expected[1, 1] = 1.0
    np.testing.assert_array_equal(rho, expected)
    np.testing.assert_array_equal(rho @ rho, rho)
    assert von_neumann_entropy(dirac_state(21, 11)) == 0.0
    assert dirac_state(21, 11)[10, 10] == 1.0
    with pytest.raises(IndexError):
        dirac_state(3, 4)
    with pytest.raises(IndexError):
        dirac_state(3, 0)


def test_gaussian_state():
    x = make_price_observable(101, -1.0, 1.0).values
    rho = gaussian_state(101, x, 0.05)
    p = np.real(np.diagonal(rho))
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-15)
    np.testing.assert_array_equal(p, p[::-1])
    assert int(np.argmax(p)) == 50
    assert not np.any(rho - np.diag(np.diagonal(rho)))
    assert abs(np.dot(p, x)) < 1e-12


def test_coefficients_max_entropy_env():
    c = environment_coefficients(EnvironmentState.maximum_entropy(4, kappa=1.0))
    assert c.nu_u2 == 0 and c.nu_d2 == 0
    assert c.sigma2 == pytest.approx(0.75, abs=1e-15)


def test_coefficients_two_levels_have_no_nu(rng):
    env = EnvironmentState(2, random_density_matrix(2, rng), kappa=0.7)
    c = environment_coefficients(env)
    assert c.nu_u2 == 0 and c.nu_d2 == 0


@pytest.mark.parametrize("seed", range(5))
def test_coefficients_trace_and_sum_forms_agree(seed):
    rng = np.random.default_rng(seed)
    r = random_density_matrix(6, rng)
    env = EnvironmentState(6, r, kappa=1.3)
    c = environment_coefficients(env)  # raises ConsistencyError on mismatch
    # brute force, level by level
    s2 = 1.3 * sum(r[l, l] for l in range(5))
    nu = 2 * 1.3 * sum(r[l, l + 2] for l in range(4))
    nd = 2 * 1.3 * sum(r[l + 2, l] for l in range(4))
    assert c.sigma2 == pytest.approx(s2.real, abs=1e-12)
    assert complex(c.nu_u2) == pytest.approx(nu, abs=1e-12)
    assert complex(c.nu_d2) == pytest.approx(nd, abs=1e-12)
    assert complex(c.nu_u2) == pytest.approx(np.conj(complex(c.nu_d2)), abs=1e-14)


def test_coefficients_from_rates():
    c = LindbladCoefficients.from_rates(0.4, 0.36, 0.36)
    assert c.sigma2 == pytest.approx(0.16)
    assert c.nu_u2 == pytest.approx(0.1296)
    assert c.classical().nu_u2 == 0
    with pytest.raises(ValueError):
        LindbladCoefficients(-1.0)
