import subprocess
import sys
import textwrap

import numpy as np
import pytest

from qmarket import kernels


def test_fallback_selected_when_extension_missing():
    code = textwrap.dedent(
        """
        import sys
        sys.modules["qmarket._ckernels"] = None  # makes the import fail
        import numpy as np
        from qmarket import kernels
        assert kernels.backend_name() == "python", kernels.backend_name()
        assert kernels.available_backends() == ["python"]
        rho = np.diag([0.0, 1.0, 0.0]).astype(complex)
        out = kernels.euler_steps(rho, 1, 0.01, 0.16, 0.0, 0.0, False)
        assert abs(out[1, 1] - 0.9968) < 1e-15
        print("ok")
        """
    )
    res = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert res.stdout.strip() == "ok"


def test_compiled_backend_preferred():
    if "cython" not in kernels.available_backends():
        pytest.skip("extension not built")
    assert kernels.get_backend("cython") is not kernels.get_backend("python")


def test_set_backend_rejects_unknown():
    with pytest.raises(ValueError, match="not available"):
        kernels.set_backend("fortran")


@pytest.mark.parametrize("periodic", [False, True])
def test_backends_agree_on_random_input(periodic, rng):
    if len(kernels.available_backends()) < 2:
        pytest.skip("only one backend")
    n = 17
    rho = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    rho = rho + rho.conj().T
    outs = [kernels.get_backend(b).shift_generator(rho, 0.16, 0.05, 0.09, periodic) for b in ("cython", "python")]
    np.testing.assert_allclose(outs[0], outs[1], rtol=0, atol=1e-15)
    steps = [kernels.get_backend(b).euler_steps(rho, 20, 0.01, 0.16, 0.05, 0.09, periodic) for b in ("cython", "python")]
    np.testing.assert_allclose(steps[0], steps[1], rtol=0, atol=1e-14)


def test_compiled_step_does_not_mutate_input(rng):
    for b in kernels.available_backends():
        rho = np.eye(5, dtype=complex) / 5
        before = rho.copy()
        kernels.get_backend(b).euler_steps(rho, 3, 0.01, 0.16, 0.1, 0.1, False)
        assert np.array_equal(rho, before)
