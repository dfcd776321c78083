"""The coupled particle-field operator on grid (x) spin (x) Fock space.

Single particle only.  With ``Phi_i(x) = a*(F_i(x)) + a(F_i(x))``::

    H = -Lap + V + dGamma(omega) + sum_i Phi_i^2 + i (Phi . grad + grad . Phi) - sigma . Phi(b)

The cross term uses the link matrix of :mod:`.operators` with Fock-operator
coefficients, ``sum_m K(F_m) (x) a*_m + K(conj F_m) (x) a_m``, which is
hermitian because ``K(f)^H = K(conj f)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..field_model import coupling_components
from ..fock import FockSpace, coherent_overlap, dgamma_diagonal
from .grid import ParticleGrid
from .operators import _one_particle_laplacian, evaluate_potential, link_matrix

__all__ = [
    "PFOperator",
    "BudgetError",
    "assemble_full_PF",
    "coherent_superposition_expectation",
    "branch_matrix_element",
]

MAX_DIM = 2_000_000
MAX_BYTES = 2.0e9


class BudgetError(MemoryError):
    def __init__(self, msg, required_bytes):
        super().__init__(msg)
        self.required_bytes = required_bytes


@dataclass(eq=False)
class PFOperator:
    """Sum of Kronecker-structured sparse terms acting on grid (x) spin (x) Fock."""

    grid: ParticleGrid
    space: FockSpace
    terms: dict
    meta: dict = field(default_factory=dict)

    @property
    def dim(self):
        return self.grid.n_points * self.grid.s * self.space.dim

    @property
    def shape(self):
        return (self.dim, self.dim)

    def matvec(self, v):
        v = np.asarray(v, dtype=complex)
        out = np.zeros_like(v)
        for t in self.terms.values():
            out += t @ v
        return out

    __matmul__ = matvec

    def quadratic_form(self, v) -> complex:
        v = np.asarray(v, dtype=complex)
        return complex(np.vdot(v, self.matvec(v)))

    def to_sparse(self):
        mat = None
        for t in self.terms.values():
            mat = t if mat is None else mat + t
        return mat.tocsr()

    def term_hermiticity(self) -> dict:
        out = {}
        for k, t in self.terms.items():
            diff = t - t.getH()
            out[k] = float(abs(diff).max()) if diff.nnz else 0.0
        return out

    def stats(self):
        return {"dim": self.dim, "nnz": {k: int(t.nnz) for k, t in self.terms.items()},
                "fock_dim": self.space.dim}


def _estimate_bytes(grid, fs, n_fock_modes, spin_coupled):
    rows = grid.n_points * grid.s * fs.dim
    per_row = (2 * grid.d + 1) + 2 * grid.d * 2 * n_fock_modes + (2 * n_fock_modes + 1) ** 2
    if spin_coupled:
        per_row += 2 * n_fock_modes * grid.s
    return rows * per_row * 28.0  # complex value + index + assembly temporaries


def _fock_field(grid, fs, F):
    """``sum_m diag(F_m) (x) I_s (x) a*_m + diag(conj F_m) (x) I_s (x) a_m`` for one component."""
    Is = sp.identity(grid.s, format="csr")
    out = None
    for m in range(fs.n_modes):
        if not np.any(F[:, m]):
            continue
        low = fs.lowering(m)
        t = (sp.kron(sp.kron(sp.diags(F[:, m]), Is), low.getH())
             + sp.kron(sp.kron(sp.diags(np.conj(F[:, m])), Is), low))
        out = t if out is None else out + t
    return out


def assemble_full_PF(fs: FockSpace, ff, ms, V, grid: ParticleGrid, b: bool = True,
                     max_dim: int = MAX_DIM, max_bytes: float = MAX_BYTES) -> PFOperator:
    """Assemble the coupled operator for one particle.

    Parameters
    ----------
    b : bool
        Include the Zeeman coupling ``-sigma . Phi(b)`` when the form factor
        carries spin couplings and ``grid.s > 1``.

    Raises
    ------
    BudgetError
        if the tensor dimension or the estimated memory exceeds the budget.
    """
    if grid.N != 1:
        raise ValueError("the full coupled operator is implemented for one particle")
    if fs.n_modes != ms.n_fock:
        raise ValueError("Fock space and mode set have different mode counts")
    spin_coupled = bool(b) and ff.has_spin_coupling and grid.s > 1
    if grid.s == 1 and ff.has_spin_coupling:
        raise ValueError("spinless grid (s = 1) requires a form factor without b couplings")
    dim = grid.n_points * grid.s * fs.dim
    need = _estimate_bytes(grid, fs, fs.n_modes, spin_coupled)
    if dim > max_dim or need > max_bytes:
        raise BudgetError(f"coupled operator of dimension {dim} needs about {need / 1e9:.2f} GB "
                          f"(budget: dim <= {max_dim}, {max_bytes / 1e9:.2f} GB)", need)

    Ip = sp.identity(grid.n_points, format="csr")
    Is = sp.identity(grid.s, format="csr")
    If = sp.identity(fs.dim, format="csr")
    terms = {}
    H1 = _one_particle_laplacian(grid).astype(complex)
    vdiag = evaluate_potential(V, grid)
    kin = sp.kron(H1, Is, format="csr")
    if vdiag is not None:
        kin = kin + sp.diags(vdiag)
    terms["particle"] = sp.kron(kin, If, format="csr")
    terms["field"] = sp.kron(sp.kron(Ip, Is), sp.diags(dgamma_diagonal(fs, ms.fock_omega).astype(complex)),
                             format="csr")

    F = coupling_components(ms, ff, 0, grid.points, "lam")  # (P, d, M')
    phi2 = None
    cross = None
    for i in range(grid.d):
        Phi = _fock_field(grid, fs, F[:, i, :])
        if Phi is None:
            continue
        sq = (Phi @ Phi).tocsr()
        phi2 = sq if phi2 is None else phi2 + sq
        for m in range(fs.n_modes):
            if not np.any(F[:, i, m]):
                continue
            low = fs.lowering(m)
            t = (sp.kron(sp.kron(link_matrix(grid, F[:, i, m], i), Is), low.getH())
                 + sp.kron(sp.kron(link_matrix(grid, np.conj(F[:, i, m]), i), Is), low))
            cross = t if cross is None else cross + t
    if phi2 is not None:
        terms["phi2"] = phi2
    if cross is not None:
        terms["cross"] = cross.tocsr()
    if spin_coupled:
        Fb = coupling_components(ms, ff, 0, grid.points, "b")
        zee = None
        for i in range(grid.d):
            for m in range(fs.n_modes):
                if not np.any(Fb[:, i, m]):
                    continue
                low = fs.lowering(m)
                sig = sp.csr_matrix(grid.sigma[i])
                t = (sp.kron(sp.kron(sp.diags(Fb[:, i, m]), sig), low.getH())
                     + sp.kron(sp.kron(sp.diags(np.conj(Fb[:, i, m])), sig), low))
                zee = -t if zee is None else zee - t
        if zee is not None:
            terms["zeeman"] = zee.tocsr()
    return PFOperator(grid, fs, terms, {"eps": fs.eps, "n_max": fs.n_max})


def branch_matrix_element(psi_j, z_j, psi_k, z_k, eps, ff, ms, V, grid, b=True) -> complex:
    """``<psi_j (x) Xi(z_j), H psi_k (x) Xi(z_k)>`` in closed form.

    With ``u_i = <z_j, F_i>`` and ``v_i = <F_i, z_k>`` the field operators
    act between the two coherent branches as the complex potential
    ``C_i = u_i + v_i``; normal ordering adds ``eps |F_i|^2`` to
    ``Phi_i^2``.  The result is the overlap ``<Xi(z_j), Xi(z_k)>`` times the
    particle matrix element of

        -Lap + V + sum_i K_i(C_i) + sum_i (C_i^2 + eps |F_i|^2) - sigma . C(b) + <z_j, omega z_k>.
    """
    z_j = np.asarray(z_j, dtype=complex)
    z_k = np.asarray(z_k, dtype=complex)
    F = coupling_components(ms, ff, 0, grid.points, "lam")  # (P, d, M')
    u = F @ np.conj(z_j)
    v = np.conj(F) @ z_k
    C = u + v  # (P, d)
    diag = (C ** 2).sum(axis=1) + eps * (np.abs(F) ** 2).sum(axis=(1, 2))
    H = _one_particle_laplacian(grid).astype(complex)
    for i in range(grid.d):
        H = H + link_matrix(grid, C[:, i], i)
    H = H + sp.diags(diag)
    Is = sp.identity(grid.s, format="csr")
    H = sp.kron(H, Is, format="csr")
    if b and ff.has_spin_coupling and grid.s > 1:
        Fb = coupling_components(ms, ff, 0, grid.points, "b")
        Cb = Fb @ np.conj(z_j) + np.conj(Fb) @ z_k
        for i in range(grid.d):
            H = H - sp.kron(sp.diags(Cb[:, i]), sp.csr_matrix(grid.sigma[i]), format="csr")
    vdiag = evaluate_potential(V, grid)
    if vdiag is not None:
        H = H + sp.diags(vdiag)
    energy = np.vdot(z_j, ms.fock_omega * z_k)
    ov = coherent_overlap(z_j, z_k, eps)
    return complex(ov * (np.vdot(psi_j, H @ psi_k) + energy * np.vdot(psi_j, psi_k)))


def coherent_superposition_expectation(branches, fs, ff, ms, V, grid, b=True) -> float:
    """Energy of ``sum_j zeta_j psi_j (x) Xi_eps(z_j)`` after normalization.

    ``branches`` is a list of ``(zeta, z, psi)``.  The ``zeta`` are rescaled
    so that ``sum conj(zeta_j) zeta_k <psi_j, psi_k> <Xi_j, Xi_k> = 1``.
    """
    eps = fs.eps if isinstance(fs, FockSpace) else float(fs)
    if grid.N != 1:
        raise ValueError("closed form implemented for one particle")
    zs = [np.asarray(z, dtype=complex) for _, z, _ in branches]
    for a in range(len(zs)):
        for c in range(a + 1, len(zs)):
            if np.array_equal(zs[a], zs[c]):
                raise ValueError(f"branches {a} and {c} share the same coherent point")
    psis = []
    for _, _, psi in branches:
        psi = np.asarray(psi, dtype=complex)
        if abs(np.linalg.norm(psi) - 1) > 1e-10:
            raise ValueError("branch particle states must be normalized")
        psis.append(psi)
    zeta = np.array([complex(zt) for zt, _, _ in branches])
    n = len(branches)
    num = 0.0 + 0.0j
    norm = 0.0 + 0.0j
    for j in range(n):
        for k in range(n):
            w = np.conj(zeta[j]) * zeta[k]
            if w == 0:
                continue
            norm += w * np.vdot(psis[j], psis[k]) * coherent_overlap(zs[j], zs[k], eps)
            num += w * branch_matrix_element(psis[j], zs[j], psis[k], zs[k], eps, ff, ms, V, grid, b)
    if norm.real <= 0:
        raise ValueError("superposition has zero norm")
    return float((num / norm).real)
