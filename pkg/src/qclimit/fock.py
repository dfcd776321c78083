"""Truncated bosonic Fock space with epsilon-scaled canonical commutation relations.

The basis is the set of occupation vectors ``n`` over ``M'`` Fock coordinates
with total occupation ``|n| <= N_max``, in graded lexicographic order (total
occupation first, then lexicographic with the first coordinate most
significant, largest first).  With ``[a(f), a^*(g)] = eps <f, g>`` the ladder
operators act as

    a_m |n>  = sqrt(eps n_m)       |n - e_m>
    a*_m |n> = sqrt(eps (n_m + 1)) |n + e_m>     (zero if |n| = N_max)

and ``a(f) = sum_m conj(f_m) a_m`` is antilinear in ``f``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from math import comb
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy import stats

__all__ = [
    "FockSpace",
    "FockOperator",
    "CoherentSpec",
    "TruncationError",
    "annihilation",
    "creation",
    "field_operator",
    "dgamma",
    "coherent_state",
    "coherent_overlap",
    "required_nmax",
    "number_state",
    "state_moments",
    "save_state",
    "load_state",
]

TAIL_TOL = 1e-10


class TruncationError(ValueError):
    """Raised when a state does not fit below the occupation cutoff."""

    def __init__(self, msg, required_nmax=None):
        super().__init__(msg)
        self.required_nmax = required_nmax


def _compositions(total, parts):
    """Occupation vectors with the given total, first coordinate largest first."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


class FockSpace:
    """Occupation-number basis truncated at total occupation ``n_max``.

    Parameters
    ----------
    n_modes : int
        Number of Fock coordinates ``M'``.
    n_max : int
        Maximum total occupation.
    eps : float
        Semiclassical parameter, ``0 < eps``.
    """

    def __init__(self, n_modes: int, n_max: int, eps: float, mode_hash: str = ""):
        if n_modes < 1 or n_max < 0:
            raise ValueError("need n_modes >= 1 and n_max >= 0")
        if not eps > 0:
            raise ValueError("eps must be positive")
        self.n_modes = int(n_modes)
        self.n_max = int(n_max)
        self.eps = float(eps)
        self.mode_hash = mode_hash
        self._lower = {}

    @property
    def dim(self) -> int:
        return comb(self.n_modes + self.n_max, self.n_max)

    def __repr__(self):
        return f"FockSpace(M'={self.n_modes}, N_max={self.n_max}, eps={self.eps:g}, dim={self.dim})"

    def same_as(self, other) -> bool:
        return (self.n_modes, self.n_max, self.eps) == (other.n_modes, other.n_max, other.eps)

    @cached_property
    def basis(self) -> np.ndarray:
        """``(dim, M')`` integer array of occupation vectors."""
        out = np.empty((self.dim, self.n_modes), dtype=np.int64)
        i = 0
        for tot in range(self.n_max + 1):
            for c in _compositions(tot, self.n_modes):
                out[i] = c
                i += 1
        out.setflags(write=False)
        return out

    @cached_property
    def totals(self) -> np.ndarray:
        return self.basis.sum(axis=1)

    @cached_property
    def _index(self) -> dict:
        b = self.basis.astype(np.int16)
        return {row.tobytes(): i for i, row in enumerate(b)}

    def index(self, n) -> int:
        n = np.asarray(n, dtype=np.int16)
        if n.shape != (self.n_modes,) or n.min() < 0:
            raise ValueError("occupation vector has wrong shape or negative entries")
        if n.sum() > self.n_max:
            raise TruncationError(f"occupation {n.sum()} exceeds N_max={self.n_max}",
                                  required_nmax=int(n.sum()))
        return self._index[n.tobytes()]

    def lowering(self, m: int) -> sp.csr_matrix:
        """Matrix of ``a_m`` (the unit-vector annihilator of coordinate ``m``)."""
        hit = self._lower.get(m)
        if hit is not None:
            return hit
        b = self.basis
        src = np.nonzero(b[:, m] > 0)[0]
        tgt_rows = b[src].astype(np.int16)
        tgt_rows[:, m] -= 1
        idx = self._index
        tgt = np.fromiter((idx[r.tobytes()] for r in tgt_rows), dtype=np.int64, count=len(src))
        vals = np.sqrt(self.eps * b[src, m])
        mat = sp.csr_matrix((vals.astype(complex), (tgt, src)), shape=(self.dim, self.dim))
        self._lower[m] = mat
        return mat

    def top_sector_mass(self, state) -> float:
        """Norm squared carried by the highest occupation sector."""
        state = np.asarray(state)
        return float(np.sum(np.abs(state[self.totals == self.n_max]) ** 2))


class FockOperator:
    """Sparse operator on a :class:`FockSpace`.

    ``tail`` records whether contributions leaving the truncated space were
    dropped during construction.
    """

    __array_priority__ = 20

    def __init__(self, space: FockSpace, matrix, hermitian: bool = False,
                 tail: bool = False, label: str = ""):
        matrix = sp.csr_matrix(matrix, dtype=complex)
        if matrix.shape != (space.dim, space.dim):
            raise ValueError("matrix shape does not match the Fock space")
        self.space = space
        self.matrix = matrix
        self.hermitian = bool(hermitian)
        self.tail = bool(tail)
        self.label = label
        if self.hermitian and not self.is_hermitian():
            raise ValueError("operator flagged hermitian is not")

    def is_hermitian(self, rtol=1e-13) -> bool:
        diff = self.matrix - self.matrix.getH()
        scale = max(abs(self.matrix).max() if self.matrix.nnz else 0.0, 1.0)
        return (abs(diff).max() if diff.nnz else 0.0) <= rtol * scale

    def _check(self, other):
        if not self.space.same_as(other.space):
            raise ValueError("operators live on Fock spaces with different (M', N_max, eps)")

    def toarray(self):
        return self.matrix.toarray()

    @property
    def H(self):
        return FockOperator(self.space, self.matrix.getH(), self.hermitian, self.tail, self.label + "^H")

    def __matmul__(self, other):
        if isinstance(other, FockOperator):
            self._check(other)
            return FockOperator(self.space, self.matrix @ other.matrix, tail=self.tail or other.tail)
        return self.matrix @ np.asarray(other)

    def __add__(self, other):
        self._check(other)
        return FockOperator(self.space, self.matrix + other.matrix,
                            self.hermitian and other.hermitian, self.tail or other.tail)

    def __sub__(self, other):
        self._check(other)
        return FockOperator(self.space, self.matrix - other.matrix,
                            self.hermitian and other.hermitian, self.tail or other.tail)

    def __mul__(self, c):
        c = complex(c)
        return FockOperator(self.space, self.matrix * c, self.hermitian and c.imag == 0, self.tail)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1

    def expectation(self, state) -> complex:
        state = np.asarray(state)
        return complex(np.vdot(state, self.matrix @ state))

    def commutator(self, other):
        return self @ other - other @ self

    def __repr__(self):
        return f"FockOperator({self.label or 'op'}, dim={self.space.dim}, nnz={self.matrix.nnz})"


@dataclass(frozen=True)
class CoherentSpec:
    """Classical point ``z`` defining the displaced vacuum ``Xi_eps(z)``."""

    z: np.ndarray

    def __post_init__(self):
        z = np.atleast_1d(np.asarray(self.z, dtype=complex)).copy()
        if not np.all(np.isfinite(z)):
            raise ValueError("coherent amplitude must be finite")
        z.setflags(write=False)
        object.__setattr__(self, "z", z)

    @property
    def norm2(self) -> float:
        return float(np.vdot(self.z, self.z).real)


def _vec(fs, f, what="vector"):
    f = np.atleast_1d(np.asarray(f, dtype=complex))
    if f.shape != (fs.n_modes,):
        raise ValueError(f"{what} has {f.shape} entries, Fock space has M'={fs.n_modes}")
    if not np.all(np.isfinite(f)):
        raise ValueError(f"{what} must be finite")
    return f


def _lowering_combo(fs, coeffs):
    mat = sp.csr_matrix((fs.dim, fs.dim), dtype=complex)
    for m, c in enumerate(coeffs):
        if c != 0:
            mat = mat + c * fs.lowering(m)
    return mat


def annihilation(fs: FockSpace, f) -> FockOperator:
    """``a(f) = sum_m conj(f_m) a_m`` (antilinear in ``f``)."""
    f = _vec(fs, f)
    return FockOperator(fs, _lowering_combo(fs, np.conj(f)), label="a")


def creation(fs: FockSpace, f) -> FockOperator:
    """``a^*(f) = a(f)^H`` (linear in ``f``); kills the top sector."""
    f = _vec(fs, f)
    return FockOperator(fs, _lowering_combo(fs, np.conj(f)).getH().tocsr(), label="a*")


def field_operator(fs: FockSpace, amps, directions):
    """Components ``phi_i = a^*(F_i) + a(F_i)`` with ``F_i = amps * directions[:, i]``.

    Parameters
    ----------
    amps : (M',) complex
        One-photon amplitudes (from :func:`qclimit.field_model.coupling_vector`).
    directions : (M', d) real
        Polarization vector of each coordinate.
    """
    amps = _vec(fs, amps, "coupling")
    directions = np.asarray(directions, dtype=float)
    if directions.ndim != 2 or directions.shape[0] != fs.n_modes:
        raise ValueError("directions must be an (M', d) array")
    out = []
    for i in range(directions.shape[1]):
        low = _lowering_combo(fs, np.conj(amps * directions[:, i]))
        out.append(FockOperator(fs, low + low.getH(), hermitian=True, label=f"phi_{i}"))
    return out


def dgamma(fs: FockSpace, t) -> FockOperator:
    """Second quantization of a diagonal one-photon operator: ``eps sum t_m n_m``."""
    t = np.broadcast_to(np.asarray(t, dtype=float), (fs.n_modes,))
    if np.any(t < 0):
        raise ValueError("dGamma needs a non-negative symbol")
    diag = fs.eps * (fs.basis @ t)
    return FockOperator(fs, sp.diags(diag.astype(complex), format="csr"), hermitian=True, label="dGamma")


def dgamma_diagonal(fs: FockSpace, t) -> np.ndarray:
    """Matrix-free form of :func:`dgamma`: the real diagonal."""
    t = np.broadcast_to(np.asarray(t, dtype=float), (fs.n_modes,))
    return fs.eps * (fs.basis @ t)


def required_nmax(norm2: float, eps: float, tail_tol: float = TAIL_TOL) -> int:
    """Smallest cutoff whose Poisson tail is below ``tail_tol``."""
    nu = norm2 / eps
    if nu == 0:
        return 0
    n = int(stats.poisson.isf(tail_tol, nu))
    while stats.poisson.sf(n, nu) > tail_tol:
        n += 1
    while n > 0 and stats.poisson.sf(n - 1, nu) <= tail_tol:
        n -= 1
    return n


def coherent_state(fs: FockSpace, cs, tail_tol: float = TAIL_TOL) -> np.ndarray:
    """Truncated displaced vacuum ``exp((a^*(z) - a(z))/eps) Omega``.

    Built from the normal-ordered series ``exp(-|z|^2/2eps) sum_n
    (a^*(z)/eps)^n / n! Omega``.  Each term lives in a single occupation
    sector, so all retained coefficients are exact; the discarded mass is the
    Poisson tail with mean ``|z|^2/eps``.  The result is renormalized.

    Raises
    ------
    TruncationError
        if the tail mass exceeds ``tail_tol``; ``required_nmax`` is attached.
    """
    if not isinstance(cs, CoherentSpec):
        cs = CoherentSpec(cs)
    z = _vec(fs, cs.z, "coherent amplitude")
    nu = cs.norm2 / fs.eps
    tail = float(stats.poisson.sf(fs.n_max, nu))
    if tail > tail_tol:
        need = required_nmax(cs.norm2, fs.eps, tail_tol)
        raise TruncationError(
            f"coherent state with mean occupation {nu:.4g} loses {tail:.3e} of its norm "
            f"above N_max={fs.n_max}; need N_max >= {need}", required_nmax=need)
    adag = creation(fs, z).matrix
    term = np.zeros(fs.dim, dtype=complex)
    term[0] = 1.0
    psi = term.copy()
    for n in range(1, fs.n_max + 1):
        term = adag @ term / (fs.eps * n)
        psi += term
    psi *= np.exp(-0.5 * nu)
    return psi / np.linalg.norm(psi)


def coherent_overlap(z1, z2, eps: float) -> complex:
    """Exact ``<Xi_eps(z1), Xi_eps(z2)>`` (inner product antilinear in its first slot)."""
    z1 = np.asarray(z1, dtype=complex)
    z2 = np.asarray(z2, dtype=complex)
    ip = np.vdot(z1, z2)
    return complex(np.exp(1j * ip.imag / eps - np.vdot(z1 - z2, z1 - z2).real / (2 * eps)))


def number_state(fs: FockSpace, n) -> np.ndarray:
    """Basis vector ``|n>``."""
    v = np.zeros(fs.dim, dtype=complex)
    v[fs.index(np.atleast_1d(n))] = 1.0
    return v


def check_normalized(state, tol=1e-10):
    nrm = np.linalg.norm(state)
    if abs(nrm - 1) > tol:
        raise ValueError(f"state is not normalized (norm {nrm:.12g})")


def state_moments(fs: FockSpace, state):
    """First and second ladder moments of a Fock vector.

    Returns
    -------
    alpha : (M',)   ``<a_m>``
    G : (M', M')    ``<a*_m a_n>``
    L : (M', M')    ``<a_m a*_n>``  (truncated operators, so exact on the space)
    K : (M', M')    ``<a_m a_n>``
    """
    state = np.asarray(state, dtype=complex)
    low = np.stack([fs.lowering(m) @ state for m in range(fs.n_modes)])
    up = np.stack([fs.lowering(m).getH() @ state for m in range(fs.n_modes)])
    alpha = low @ np.conj(state)  # <psi, a_m psi>
    G = np.conj(low) @ low.T
    L = np.conj(up) @ up.T
    K = np.conj(up) @ low.T
    return alpha, G, L, K


def save_state(path, state, fs: FockSpace, extra=None):
    """Write ``state`` to ``path`` (.npy) with a JSON sidecar ``path.json``."""
    path = Path(path)
    np.save(path, np.asarray(state, dtype=complex), allow_pickle=False)
    npy = path if path.suffix == ".npy" else path.with_name(path.name + ".npy")
    meta = {"eps": fs.eps, "n_max": fs.n_max, "n_modes": fs.n_modes, "mode_hash": fs.mode_hash}
    meta.update(extra or {})
    npy.with_suffix(".json").write_text(json.dumps(meta, indent=2, sort_keys=True))
    return npy


def load_state(path):
    """Inverse of :func:`save_state`; returns ``(state, FockSpace)``."""
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text())
    state = np.load(path, allow_pickle=False)
    fs = FockSpace(meta["n_modes"], meta["n_max"], meta["eps"], meta.get("mode_hash", ""))
    if state.shape != (fs.dim,):
        raise ValueError("stored state does not match its sidecar")
    return state, fs
