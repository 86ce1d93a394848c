"""Shared helpers for the test suite: random objects and independent oracles."""

import numpy as np

from jetmod.jets import JetSeries
from jetmod.kernels import BinOp, Num, Var, builtin_bergman, matrix_combination


def rand_series(rng, ctx, scale=1.0):
    c = scale * (rng.random(ctx.size) - 0.5 + 1j * (rng.random(ctx.size) - 0.5))
    return JetSeries(ctx, c)


def rand_poly_ast(rng, m, max_degree=3, terms=5, const_floor=0.0):
    """Random polynomial expression in z1..zm with complex coefficients."""
    node = Num(complex(const_floor + rng.random()))
    for _ in range(terms):
        term = Num(complex(rng.random() - 0.5 + 1j * (rng.random() - 0.5)))
        for _ in range(int(rng.integers(1, max_degree + 1))):
            term = BinOp("*", term, Var("z", int(rng.integers(1, m + 1))))
        node = BinOp("+", node, term)
    return node


def rand_nonvanishing_poly(rng, m, max_degree=2, terms=3):
    """Polynomial with a large constant term and small higher coefficients.

    Non-vanishing on the closed polydisc of radius ~0.7, so it is a safe
    gauge factor at the points the tests evaluate.
    """
    node = Num(complex(1.5 + rng.random()))
    for _ in range(terms):
        c = 0.1 * (rng.random() - 0.5 + 1j * (rng.random() - 0.5))
        term = Num(complex(c))
        for _ in range(int(rng.integers(1, max_degree + 1))):
            term = BinOp("*", term, Var("z", int(rng.integers(1, m + 1))))
        node = BinOp("+", node, term)
    return node


def rand_pd_matrix(rng, r):
    x = rng.random((r, r)) + 1j * rng.random((r, r))
    return x @ x.conj().T + 0.5 * np.eye(r)


def rand_unitary(rng, r):
    q, _ = np.linalg.qr(rng.random((r, r)) + 1j * rng.random((r, r)))
    return q


def coupled_rank2_kernel(rng, m=2, label="coupled"):
    """A rank-2 kernel whose normalized invariants form an irreducible family.

    Three positive-definite matrix weights on three product kernels; two
    summands would become a commuting family after normalization.
    """
    scalars = [builtin_bergman(0.5 + 3.0 * rng.random(m)) for _ in range(3)]
    mats = [rand_pd_matrix(rng, 2) for _ in range(3)]
    return matrix_combination(scalars, mats, label=label)


def phase_align(d, target):
    """Multiply d by the unimodular scalar minimizing ||d - target||_F."""
    w = np.vdot(target, d)
    if abs(w) == 0:
        return d
    return d * (abs(w) / w)


def wirtinger_fd(f, z, i, h=1e-4):
    """(d_i f, dbar_i f) at z by central differences in two real directions."""
    z = np.asarray(z, dtype=complex)
    e = np.zeros_like(z)
    e[i] = 1.0
    d_re = (f(z + h * e) - f(z - h * e)) / (2 * h)
    d_im = (f(z + 1j * h * e) - f(z - 1j * h * e)) / (2j * h)
    return (d_re + d_im) / 2.0, (d_re - d_im) / 2.0


def rand_point(rng, m, radius=0.4):
    rad = radius * np.sqrt(rng.random(m))
    ang = 2 * np.pi * rng.random(m)
    return rad * np.exp(1j * ang)
