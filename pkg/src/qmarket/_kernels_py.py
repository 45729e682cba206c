"""Pure numpy implementation of the shift-stencil kernels.

Fallback for :mod:`qmarket._ckernels`; both expose the same two functions.
Entries outside ``1..N`` read as zero (hard wall) or wrap (periodic).
"""

import numpy as np


def _hard_wall(r, s2, nu_u2, nu_d2):
    n = r.shape[0]
    k = np.full(n, 2.0)
    k[0] = k[-1] = 1.0
    out = -s2 * 0.5 * (k[:, None] + k[None, :]) * r
    out[1:, 1:] += s2 * r[:-1, :-1]
    out[:-1, :-1] += s2 * r[1:, 1:]
    if nu_u2 != 0:
        t = np.zeros_like(r)
        t[1:, :-1] += r[:-1, 1:]
        t[2:, :] -= 0.5 * r[:-2, :]
        t[:, :-2] -= 0.5 * r[:, 2:]
        out += nu_u2 * t
    if nu_d2 != 0:
        t = np.zeros_like(r)
        t[:-1, 1:] += r[1:, :-1]
        t[:-2, :] -= 0.5 * r[2:, :]
        t[:, 2:] -= 0.5 * r[:, :-2]
        out += nu_d2 * t
    return out


def _periodic(r, s2, nu_u2, nu_d2):
    roll = np.roll
    out = s2 * (roll(r, (1, 1), (0, 1)) + roll(r, (-1, -1), (0, 1)) - 2.0 * r)
    if nu_u2 != 0:
        out += nu_u2 * (roll(r, (1, -1), (0, 1)) - 0.5 * roll(r, 2, 0) - 0.5 * roll(r, -2, 1))
    if nu_d2 != 0:
        out += nu_d2 * (roll(r, (-1, 1), (0, 1)) - 0.5 * roll(r, -2, 0) - 0.5 * roll(r, 2, 1))
    return out


def shift_generator(rho, sigma2, nu_u2, nu_d2, periodic):
    r = np.ascontiguousarray(rho, dtype=np.complex128)
    if periodic:
        return _periodic(r, sigma2, nu_u2, nu_d2)
    return _hard_wall(r, sigma2, nu_u2, nu_d2)


def euler_steps(rho, n_steps, dt, sigma2, nu_u2, nu_d2, periodic):
    """``n_steps`` explicit Euler steps, re-symmetrizing after each one."""
    r = np.array(rho, dtype=np.complex128, order="C")
    gen = _periodic if periodic else _hard_wall
    for _ in range(int(n_steps)):
        r = r + dt * gen(r, sigma2, nu_u2, nu_d2)
        r = 0.5 * (r + r.conj().T)
    return r
