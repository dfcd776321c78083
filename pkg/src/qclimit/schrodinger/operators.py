"""Finite-difference magnetic Schroedinger operators on Dirichlet boxes.

Minimal coupling is discretized in expanded form,

    (-i grad - A)^2 = -Lap + i (A . grad + grad . A) + |A|^2 ,

with the cross term on grid links::

    (T psi)_p = (i / h) (A_{p+e/2} psi_{p+e} - A_{p-e/2} psi_{p-e}),   A_{p+e/2} = (A_p + A_{p+e}) / 2

which is hermitian for real ``A`` and second-order accurate.  The same link
matrix is reused with complex and Fock-operator-valued coefficients by the
full coupled operator.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..fock import FockSpace
from ..measures import EffectiveFields, effective_fields_eps, photon_energy
from .grid import ParticleGrid

__all__ = [
    "MSOOperator",
    "second_difference",
    "link_matrix",
    "dirichlet_laplacian",
    "one_particle_operator",
    "assemble_effective",
    "assemble_Heps",
    "evaluate_potential",
]


@dataclass(eq=False)
class MSOOperator:
    """Sparse hermitian operator on the particle grid (with spin)."""

    grid: ParticleGrid
    matrix: sp.csr_matrix
    meta: dict = field(default_factory=dict)

    @property
    def dim(self):
        return self.matrix.shape[0]

    @property
    def nnz(self):
        return self.matrix.nnz

    @property
    def shape(self):
        return self.matrix.shape

    def matvec(self, v):
        return self.matrix @ v

    def to_sparse(self):
        return self.matrix

    def hermiticity_error(self, seed=0) -> float:
        """Relative ``|<u, H v> - <H u, v>|`` for random vectors."""
        rng = np.random.default_rng(seed)
        u, v = (rng.standard_normal((2, self.dim)) + 1j * rng.standard_normal((2, self.dim)))
        a = np.vdot(u, self.matrix @ v)
        b = np.vdot(self.matrix @ u, v)
        return float(abs(a - b) / max(abs(a), abs(b), 1e-300))

    def stats(self):
        return {"dim": self.dim, "nnz": self.nnz, **{k: v for k, v in self.meta.items()
                                                      if isinstance(v, (int, float, str))}}


def second_difference(n_side, h):
    """1D Dirichlet ``-d^2/dx^2`` on ``n_side`` interior nodes."""
    return sp.diags([-np.ones(n_side - 1), 2 * np.ones(n_side), -np.ones(n_side - 1)],
                    [-1, 0, 1], format="csr") / h**2


def _axis_embed(op1d, axis, d, n_side):
    eye = sp.identity(n_side, format="csr")
    mats = [eye] * d
    mats[axis] = op1d
    out = mats[0]
    for m in mats[1:]:
        out = sp.kron(out, m, format="csr")
    return out


def _one_particle_laplacian(grid):
    D = second_difference(grid.n_side, grid.h)
    return sum(_axis_embed(D, a, grid.d, grid.n_side) for a in range(grid.d))


def link_matrix(grid: ParticleGrid, f, axis: int):
    """``(i/h)(P_f - P_f^T)`` with ``P_f[p, p+e] = (f_p + f_{p+e}) / 2``.

    ``f`` is sampled on the one-particle nodes and may be complex; the result
    is hermitian when ``f`` is real.
    """
    f = np.asarray(f)
    n = grid.n_side
    stride = n ** (grid.d - 1 - axis)
    idx = np.arange(grid.n_points)
    coord = (idx // stride) % n
    src = idx[coord < n - 1]
    dst = src + stride
    vals = 0.5 * (f[src] + f[dst])
    P = sp.csr_matrix((vals.astype(complex), (src, dst)), shape=(grid.n_points,) * 2)
    return (1j / grid.h) * (P - P.T)


def one_particle_operator(grid, A=None, diag=None, B=None):
    """``-Lap + i(A.grad + grad.A) + diag - sigma.B`` on one particle (with spin).

    ``A`` and ``B`` are ``(P, d)``, ``diag`` is ``(P,)``.
    """
    H = _one_particle_laplacian(grid).astype(complex)
    if A is not None:
        for a in range(grid.d):
            if np.any(A[:, a] != 0):
                H = H + link_matrix(grid, A[:, a], a)
    if diag is not None:
        H = H + sp.diags(np.asarray(diag, dtype=float))
    spin_eye = sp.identity(grid.s, format="csr")
    H = sp.kron(H, spin_eye, format="csr")
    if B is not None and grid.s > 1:
        for a in range(grid.d):
            if np.any(B[:, a] != 0):
                H = H - sp.kron(sp.diags(B[:, a]), sp.csr_matrix(grid.sigma[a]), format="csr")
    return H.tocsr()


def _embed_particle(grid, H1, j):
    block = grid.n_points * grid.s
    left = sp.identity(block ** j, format="csr")
    right = sp.identity(block ** (grid.N - 1 - j), format="csr")
    return sp.kron(sp.kron(left, H1), right, format="csr")


def evaluate_potential(V, grid):
    """Diagonal of ``V`` in the operator ordering (particle-major, spin fastest)."""
    if V is None:
        return None
    vals = np.asarray(V(grid.config_points) if callable(V) else V, dtype=float)
    vals = np.broadcast_to(vals, (grid.n_config,))
    if not np.all(np.isfinite(vals)):
        raise ValueError("potential is not finite on the grid")
    shape = []
    for _ in range(grid.N):
        shape += [grid.n_points, 1]
    full = vals.reshape([grid.n_points] * grid.N).reshape(shape)
    target = []
    for _ in range(grid.N):
        target += [grid.n_points, grid.s]
    return np.broadcast_to(full, target).ravel()


def _assemble(grid, fields, V, diag_of, scheme):
    if fields is not None and fields.points.shape[0] != grid.n_points:
        raise ValueError("fields are not sampled on this grid")
    H = sp.csr_matrix((grid.dim, grid.dim), dtype=complex)
    for j in range(grid.N):
        if fields is None:
            H1 = one_particle_operator(grid)
        else:
            H1 = one_particle_operator(grid, fields.A[j], diag_of(fields, j), fields.B[j])
        H = H + _embed_particle(grid, H1, j)
    vdiag = evaluate_potential(V, grid)
    if vdiag is not None:
        H = H + sp.diags(vdiag)
    H = H.tocsr()
    H.sum_duplicates()
    diff = H - H.getH()
    if diff.nnz and abs(diff).max() > 1e-12 * max(1.0, abs(H).max()):
        raise RuntimeError("assembled operator is not hermitian")
    return MSOOperator(grid, H, {"scheme": scheme})


def dirichlet_laplacian(grid: ParticleGrid) -> MSOOperator:
    """``-Lap_D`` on the configuration grid (times the spin identity)."""
    op = _assemble(grid, None, None, None, "laplacian")
    op.meta["fields"] = "none"
    return op


def assemble_effective(fields: EffectiveFields, V, grid: ParticleGrid) -> MSOOperator:
    """``sum_j (-i grad_j - A_j)^2 - sigma.B_j + W_j`` plus ``V``.

    The identity-multiplying field term is ``|A_j|^2 + W_j``.
    """
    op = _assemble(grid, fields, V,
                   lambda f, j: (f.A[j] ** 2).sum(axis=1) + f.W[j], "link-midpoint")
    op.meta["fields"] = fields.provenance.get("source", "?")
    return op


def assemble_Heps(state, fs, ff, ms, V, grid: ParticleGrid) -> MSOOperator:
    """Partial trace of the coupled operator over a field state.

    ``-Lap + <phi^2>_eps + i(A_eps.grad + grad.A_eps) - sigma.B_eps + V``,
    assembled with the scheme of :func:`assemble_effective` (``<phi^2>_eps``
    replaces ``|A|^2 + W``).  The photon energy ``c_eps`` is a scalar shift
    and is reported in ``meta`` rather than added.
    """
    fields = effective_fields_eps(state, fs, ff, ms, grid)
    op = _assemble(grid, fields, V, lambda f, j: f.phi2[j], "link-midpoint")
    eps = fs.eps if isinstance(fs, FockSpace) else float(fs)
    op.meta.update({"fields": "state", "eps": eps,
                    "c_eps": photon_energy(state, fs, ms)})
    op.meta["effective_fields"] = fields
    return op
