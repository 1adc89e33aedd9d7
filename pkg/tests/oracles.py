"""Dense Hamiltonians built from Kronecker products, independent of the move tables.

Basis index equals the model code: bit ``a`` of a spin word is site ``a``;
a Hubbard code is ``up | down << n`` with Jordan-Wigner modes ordered by bit.
"""
from functools import reduce

import numpy as np

I2 = np.eye(2)
# single-site basis (|0>, |1>); for spins |1> is up
Z_SPIN = np.diag([-1.0, 1.0])
RAISE = np.array([[0.0, 0.0], [1.0, 0.0]])  # |1><0|
LOWER = RAISE.T
Z_PARITY = np.diag([1.0, -1.0])


def _site_op(op, site, n):
    # kron ordering puts site 0 in the least significant position
    ops = [op if k == site else I2 for k in range(n)]
    return reduce(np.kron, reversed(ops))


def heisenberg_dense(edges, n, J):
    H = np.zeros((2**n, 2**n))
    for a, b in edges:
        H += 0.5 * J * (
            _site_op(RAISE, a, n) @ _site_op(LOWER, b, n)
            + _site_op(LOWER, a, n) @ _site_op(RAISE, b, n)
            + _site_op(Z_SPIN, a, n) @ _site_op(Z_SPIN, b, n)
        )
    return H


def annihilator(mode, n_modes):
    ops = [Z_PARITY] * mode + [RAISE.T] + [I2] * (n_modes - mode - 1)
    return reduce(np.kron, reversed(ops))


def hubbard_dense(edges, n, t, U):
    modes = 2 * n
    c = [annihilator(m, modes) for m in range(modes)]
    num = [cm.T @ cm for cm in c]
    H = np.zeros((2**modes, 2**modes))
    for off in (0, n):
        for a, b in edges:
            H += -t * (c[a + off].T @ c[b + off] + c[b + off].T @ c[a + off])
    for a in range(n):
        H += U * num[a] @ num[a + n]
    return H


def restrict(H, codes):
    idx = np.asarray(codes, dtype=np.int64)
    return H[np.ix_(idx, idx)]
