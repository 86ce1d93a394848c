"""Hermitian bundle geometry read off a reproducing kernel.

The Gram matrix of the canonical frame of the bundle attached to a kernel
is ``H(z) = K(z, z)``, holomorphic in ``z`` and anti-holomorphic in
``conj(z)``.  All quantities here are coefficient extractions from jets of
``H``:

* Chern curvature              K_{i jbar} = dbar_j( d_i H . H^{-1} )
* covariant derivatives        z-direction adds a commutator with
                               ``d_i H . H^{-1}``; the conj-direction is a
                               plain partial
* transport maps               T[l, i] = dbar_i( H^{-1} d^l H ) for theta-
                               indexed transverse orders l and tangential
                               directions i
* normalization at a point p   frame change making K(., p) the identity,
                               which freezes the gauge freedom so that
                               derivative arrays become honest invariants.

Functions accept any object with ``m``, ``r`` and ``eval_jet(z0, w0,
trunc, vary_z=..., vary_w=...)`` — a ``KernelSpec`` or the evaluator
returned by ``normalize_at``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .jets import JetMatrix
from .multiindex import JetIndexTable

PD_FLOOR = 1e-12


def hermitian_sqrt(a: np.ndarray, floor: float = PD_FLOOR) -> np.ndarray:
    """Hermitian square root of a Hermitian positive-definite matrix."""
    a = np.asarray(a, dtype=complex)
    herm_dev = float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0
    scale = max(1.0, float(np.max(np.abs(a))))
    if herm_dev > 1e-8 * scale:
        raise ValueError(f"matrix is not Hermitian (deviation {herm_dev:.3e})")
    vals, vecs = np.linalg.eigh((a + a.conj().T) / 2.0)
    if np.min(vals) < floor * scale:
        raise ValueError(
            f"matrix is not positive definite (min eigenvalue {np.min(vals):.3e})"
        )
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def _check_pd(h0: np.ndarray, what: str):
    scale = max(1.0, float(np.max(np.abs(h0))))
    dev = float(np.max(np.abs(h0 - h0.conj().T)))
    if dev > 1e-8 * scale:
        raise ValueError(f"{what}: constant term not Hermitian (dev {dev:.3e})")
    vals = np.linalg.eigvalsh((h0 + h0.conj().T) / 2.0)
    if np.min(vals) < PD_FLOOR * scale:
        raise ValueError(
            f"{what}: constant term not positive definite "
            f"(min eigenvalue {np.min(vals):.3e})"
        )


def pad_pair(m: int, alpha=(), beta=()):
    """Concatenated 2m-variable index for d^alpha in z and d^beta in conj."""
    alpha = tuple(alpha)
    beta = tuple(beta)
    return alpha + (0,) * (m - len(alpha)) + beta + (0,) * (m - len(beta))


def unit(m: int, i: int):
    return tuple(1 if j == i else 0 for j in range(m))


@dataclass
class GramJet:
    """Jet of H = K(z, z) around a base point."""

    point: np.ndarray
    jet: JetMatrix
    r: int
    trunc: int

    def extract(self, alpha=(), beta=()) -> np.ndarray:
        """The derivative d^alpha dbar^beta H at the base point."""
        m = len(self.point)
        return self.jet.extract(pad_pair(m, alpha, beta))


def gram_jet(kernel, z0, trunc: int = 2) -> GramJet:
    z0 = np.asarray(z0, dtype=complex)
    jm = kernel.eval_jet(z0, z0, trunc)
    _check_pd(jm.constant_term(), "Gram matrix")
    return GramJet(point=z0, jet=jm, r=kernel.r, trunc=trunc)


@dataclass
class CurvatureTensor:
    """All m x m curvature blocks at one point; entries[i, j] is K_{i jbar}."""

    point: np.ndarray
    entries: np.ndarray  # (m, m, r, r)

    def block(self, i: int, j: int) -> np.ndarray:
        return self.entries[i, j]

    def selfadjoint_defect(self) -> float:
        swapped = np.conj(np.swapaxes(self.entries, 2, 3))  # blockwise adjoint
        return float(np.max(np.abs(self.entries - swapped.transpose(1, 0, 2, 3))))


def curvature(kernel, z0, trunc: int = 2) -> CurvatureTensor:
    """Chern curvature blocks dbar_j(d_i H . H^{-1}) at z0."""
    if trunc < 2:
        raise ValueError("curvature needs truncation >= 2")
    m, r = kernel.m, kernel.r
    z0 = np.asarray(z0, dtype=complex)
    h = kernel.eval_jet(z0, z0, trunc)
    _check_pd(h.constant_term(), "curvature")
    hinv = h.inverse().truncate(trunc - 1)
    out = np.empty((m, m, r, r), dtype=complex)
    for i in range(m):
        theta_i = h.derivative(i) @ hinv  # d_i H . H^{-1}, trunc-1
        for j in range(m):
            out[i, j] = theta_i.extract(pad_pair(m, beta=unit(m, j)))
    return CurvatureTensor(point=z0, entries=out)


@dataclass
class CovariantDerivArray:
    """Covariant derivatives of curvature blocks along the first d directions.

    ``get(i, j, alpha, beta)`` is K_{i jbar} differentiated covariantly
    ``alpha`` times in z (ascending coordinate order, innermost first) and
    ``beta`` times plainly in conj(z); ``alpha`` and ``beta`` are
    d-variable multi-indices.
    """

    point: np.ndarray
    d: int
    max_order: int
    table: dict

    def get(self, i: int, j: int, alpha, beta) -> np.ndarray:
        return self.table[(i, j, tuple(alpha), tuple(beta))]


def curvature_covariant_derivs(
    kernel, z0, d: int, max_order: int
) -> CovariantDerivArray:
    """Covariant derivatives of the transverse curvature up to a total order.

    Needs jets to order ``max_order + 2``; the commutator correction for
    each z-derivative uses ``d_i H . H^{-1}`` at the same point.
    """
    m, r = kernel.m, kernel.r
    if not 1 <= d <= m:
        raise ValueError(f"d={d} out of range for m={m}")
    z0 = np.asarray(z0, dtype=complex)
    trunc = max_order + 2
    h = kernel.eval_jet(z0, z0, trunc)
    _check_pd(h.constant_term(), "covariant derivatives")
    hinv = h.inverse()

    # connection coefficients d_i H . H^{-1} for the z-direction corrections
    conn = [
        h.derivative(i) @ hinv.truncate(trunc - 1) for i in range(d)
    ]

    def z_cov(phi: JetMatrix, i: int) -> JetMatrix:
        t = phi.ctx.trunc
        a = conn[i].truncate(t - 1)
        p = phi.truncate(t - 1)
        return phi.derivative(i) - (a @ p - p @ a)

    table = {}
    idx = JetIndexTable(d, max_order + 1)
    for i in range(d):
        for j in range(d):
            base = h.derivative(i) @ hinv.truncate(trunc - 1)
            kij = base.derivative(m + j)  # dbar_j, trunc-2 = max_order
            for alpha in idx.indices:
                for beta in idx.indices:
                    if sum(alpha) + sum(beta) > max_order:
                        continue
                    phi = kij
                    for v in range(d):  # z-covariant, ascending, innermost first
                        for _ in range(alpha[v]):
                            phi = z_cov(phi, v)
                    for v in range(d):  # plain conj-derivatives
                        for _ in range(beta[v]):
                            phi = phi.derivative(m + v)
                    table[(i, j, alpha, beta)] = phi.constant_term()
    return CovariantDerivArray(point=z0, d=d, max_order=max_order, table=table)


@dataclass
class TransportMaps:
    """The maps dbar_i(H^{-1} d^l H) on the flattened submanifold.

    ``get(l, i)`` uses the theta rank l of the transverse derivative order
    and an ambient tangential direction index i in d..m-1 (0-based).
    """

    point: np.ndarray
    d: int
    k: int
    table: dict

    def get(self, l: int, i: int) -> np.ndarray:
        return self.table[(l, i)]


def transport_maps(kernel, z0, d: int, k: int, on_z_tol: float = 1e-10) -> TransportMaps:
    m, r = kernel.m, kernel.r
    if not 1 <= d <= m:
        raise ValueError(f"d={d} out of range for m={m}")
    z0 = np.asarray(z0, dtype=complex)
    if np.max(np.abs(z0[:d])) > on_z_tol:
        raise ValueError(
            "base point is not on the flattened submanifold "
            f"(|first {d} coords| up to {np.max(np.abs(z0[:d])):.2e})"
        )
    trunc = k  # transverse order k-1 plus one tangential conj-derivative
    h = kernel.eval_jet(z0, z0, max(trunc, 2))
    _check_pd(h.constant_term(), "transport maps")
    hinv = h.inverse()
    idx = JetIndexTable(d, k)
    table = {}
    for l, alpha in enumerate(idx.indices):
        dl_h = h
        for v in range(d):
            for _ in range(alpha[v]):
                dl_h = dl_h.derivative(v)
        t = dl_h.ctx.trunc
        g = hinv.truncate(t) @ dl_h  # H^{-1} d^l H
        for i in range(d, m):
            table[(l, i)] = g.extract(pad_pair(m, beta=unit(m, i)))
    return TransportMaps(point=z0, d=d, k=k, table=table)


class NormalizedKernel:
    """Evaluator for the kernel normalized at a point p.

    Implements ``C . K(z,p)^{-1} . K(z,w) . K(p,w)^{-1} . C`` with
    ``C = K(p,p)^{1/2}`` (Hermitian square root), so that the kernel
    against the base point is the identity matrix to every computed
    order.  Shares the evaluation interface of ``KernelSpec``.
    """

    def __init__(self, base, p):
        self.base = base
        self.p = np.asarray(p, dtype=complex)
        self.m = base.m
        self.r = base.r
        kpp = base.eval_point(self.p, self.p) if hasattr(base, "eval_point") else (
            base.eval_jet(self.p, self.p, 0).constant_term()
        )
        self.c = hermitian_sqrt(kpp)
        self.label = getattr(base, "label", "")
        if self.label:
            self.label += "|normalized"

    def eval_jet(self, z0, w0, trunc: int, vary_z: bool = True, vary_w: bool = True):
        left = self.base.eval_jet(z0, self.p, trunc, vary_z=vary_z, vary_w=False)
        _check_pd_invertible(left.constant_term(), "normalization: K(z, p)")
        mid = self.base.eval_jet(z0, w0, trunc, vary_z=vary_z, vary_w=vary_w)
        right = self.base.eval_jet(self.p, w0, trunc, vary_z=False, vary_w=vary_w)
        _check_pd_invertible(right.constant_term(), "normalization: K(p, w)")
        out = left.inverse() @ mid @ right.inverse()
        return out.left_const(self.c).right_const(self.c)

    def eval_point(self, z, w) -> np.ndarray:
        left = self.base.eval_point(z, self.p)
        mid = self.base.eval_point(z, w)
        right = self.base.eval_point(self.p, w)
        return self.c @ np.linalg.inv(left) @ mid @ np.linalg.inv(right) @ self.c

    def __repr__(self):
        return f"NormalizedKernel(m={self.m}, r={self.r}, p={self.p})"


def _check_pd_invertible(a: np.ndarray, what: str, cond_limit: float = 1e12):
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > cond_limit:
        raise ValueError(f"{what} is numerically singular (cond ~ {cond:.3e})")


def normalize_at(kernel, p) -> NormalizedKernel:
    """Normalized-kernel evaluator with base point p; K_norm(., p) == I."""
    return NormalizedKernel(kernel, p)
