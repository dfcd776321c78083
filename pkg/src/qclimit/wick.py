"""Polynomial symbols on classical field space and their Wick quantization.

A ``(p, q)`` symbol is ``s(z) = <z^{(x)q}, s~ z^{(x)p}>``: the kernel ``s~`` is
stored as a dense array with ``q`` output axes followed by ``p`` input axes, so

    s(z) = sum_{J, I} conj(z_J) s~[J; I] z_I .

Its Wick quantization is the normal-ordered operator
``sum s~[J; I] a*_{J_1} ... a*_{J_q} a_{I_1} ... a_{I_p}`` built with the
epsilon-scaled ladder operators.  :func:`quantize` evaluates it through the
occupation-sector formula (falling factorials times ``eps^((p+q)/2)``), which
does not use the matrices of :mod:`qclimit.fock`; the two constructions are
compared in the test-suite.
"""
from __future__ import annotations

import itertools
import json
import warnings
from dataclasses import dataclass
from math import factorial
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.special import gammaln

from .fock import FockOperator, FockSpace, check_normalized

__all__ = [
    "PolySymbol",
    "WignerMeasure",
    "evaluate",
    "quantize",
    "classical_expectation",
    "semiclassical_gap",
]

MAX_DEGREE = 2


def _symmetrize(k, p, q):
    """Average over permutations of the output axes and of the input axes."""
    if q > 1:
        k = sum(np.transpose(k, list(perm) + list(range(q, q + p)))
                for perm in itertools.permutations(range(q))) / factorial(q)
    if p > 1:
        k = sum(np.transpose(k, list(range(q)) + [q + i for i in perm])
                for perm in itertools.permutations(range(p))) / factorial(p)
    return k


@dataclass(frozen=True, eq=False)
class PolySymbol:
    """Homogeneous ``(p, q)`` polynomial symbol with a dense kernel.

    Parameters
    ----------
    p, q : int
        Number of ``z`` and ``conj(z)`` factors.
    kernel : ndarray
        Shape ``(M',) * (q + p)``, outputs first.  Must be symmetric in the
        input slots and in the output slots.
    """

    p: int
    q: int
    kernel: np.ndarray
    label: str = ""

    def __post_init__(self):
        k = np.asarray(self.kernel, dtype=complex)
        if self.p < 0 or self.q < 0:
            raise ValueError("degrees must be non-negative")
        if k.ndim != self.p + self.q:
            raise ValueError(f"kernel needs {self.p + self.q} axes, got {k.ndim}")
        if k.ndim and len(set(k.shape)) != 1:
            raise ValueError("all kernel axes must have length M'")
        if not np.all(np.isfinite(k)):
            raise ValueError("kernel must be finite")
        k = k.copy()
        k.setflags(write=False)
        object.__setattr__(self, "kernel", k)
        if self.symmetry_error() > 1e-12 * max(1.0, np.abs(k).max(initial=0.0)):
            raise ValueError("kernel is not symmetric in its input/output slots")

    @property
    def n_modes(self):
        return self.kernel.shape[0] if self.kernel.ndim else 0

    @property
    def degree(self):
        return self.p + self.q

    def symmetry_error(self):
        k = self.kernel
        return float(np.abs(_symmetrize(k, self.p, self.q) - k).max(initial=0.0))

    @classmethod
    def from_product(cls, etas=(), xis=(), coeff=1.0, label=""):
        """Symbol ``coeff * prod_i <z, eta_i> * prod_k <xi_k, z>``.

        Its quantization is ``coeff * a*(eta_1)...a*(eta_q) a(xi_1)...a(xi_p)``.
        """
        vecs = [np.asarray(e, dtype=complex) for e in etas] + [np.conj(np.asarray(x, dtype=complex)) for x in xis]
        if not vecs:
            raise ValueError("use PolySymbol(0, 0, c) for constants")
        k = np.asarray(coeff, dtype=complex)
        for v in vecs:
            k = np.multiply.outer(k, v)
        return cls(len(xis), len(etas), _symmetrize(k, len(xis), len(etas)), label)

    @classmethod
    def quadratic_form(cls, t, label=""):
        """``<z, T z>`` for a matrix ``T`` (or a diagonal given as a vector)."""
        t = np.asarray(t, dtype=complex)
        return cls(1, 1, np.diag(t) if t.ndim == 1 else t, label or "<z,Tz>")

    def adjoint(self):
        """Symbol of ``conj(s)``: kernel transposed/conjugated, degrees swapped."""
        axes = list(range(self.q, self.q + self.p)) + list(range(self.q))
        return PolySymbol(self.q, self.p, np.conj(np.transpose(self.kernel, axes)), self.label + "*")

    def __add__(self, other):
        if (self.p, self.q) != (other.p, other.q):
            raise ValueError("can only add symbols of equal degree")
        return PolySymbol(self.p, self.q, self.kernel + other.kernel)

    def __mul__(self, c):
        return PolySymbol(self.p, self.q, self.kernel * complex(c), self.label)

    __rmul__ = __mul__


def evaluate(sym: PolySymbol, z) -> complex:
    """``s(z) = sum conj(z_J) s~[J; I] z_I``."""
    z = np.asarray(z, dtype=complex)
    k = sym.kernel
    for _ in range(sym.p):  # contract trailing input axes
        k = k @ z
    zc = np.conj(z)
    for _ in range(sym.q):
        k = zc @ k if k.ndim > 1 else np.dot(zc, k)
    return complex(k)


def quantize(fs: FockSpace, sym: PolySymbol, max_degree: int = MAX_DEGREE) -> FockOperator:
    """Wick quantization through the occupation-sector formula.

    For every ordered input tuple ``I`` and output tuple ``J`` the matrix
    element ``<n'| a*_J a_I |n>`` equals
    ``eps^((p+q)/2) sqrt(prod n! prod n'!) / prod (n - c_I)!`` with
    ``n' = n - c_I + c_J`` (``c`` the multiplicity count).  Targets above
    ``N_max`` are dropped and reported through ``FockOperator.tail``.
    """
    if sym.degree > max_degree:
        raise ValueError(f"symbol degree {sym.degree} exceeds max_degree={max_degree}")
    if sym.degree > MAX_DEGREE:
        warnings.warn(f"dense kernel of degree {sym.degree} costs M'^{sym.degree} entries", stacklevel=2)
    Mp = fs.n_modes
    if sym.degree and sym.n_modes != Mp:
        raise ValueError("symbol and Fock space have different mode counts")
    if sym.degree == 0:
        c = complex(sym.kernel)
        return FockOperator(fs, sp.identity(fs.dim, dtype=complex, format="csr") * c,
                            hermitian=c.imag == 0)

    basis = fs.basis
    lgf = gammaln(basis + 1.0).sum(axis=1)  # log prod n!
    index = fs._index
    rows, cols, vals = [], [], []
    dropped = False
    scale = fs.eps ** (0.5 * sym.degree)
    for idx in zip(*np.nonzero(sym.kernel)):
        J, I = idx[:sym.q], idx[sym.q:]
        cI = np.bincount(np.asarray(I, dtype=int), minlength=Mp)
        cJ = np.bincount(np.asarray(J, dtype=int), minlength=Mp)
        ok = np.all(basis >= cI, axis=1)
        src = np.nonzero(ok)[0]
        mid = basis[src] - cI
        tgt_occ = mid + cJ
        fits = tgt_occ.sum(axis=1) <= fs.n_max
        if not np.all(fits):
            dropped = True
        src, mid, tgt_occ = src[fits], mid[fits], tgt_occ[fits]
        if len(src) == 0:
            continue
        logc = 0.5 * (lgf[src] + gammaln(tgt_occ + 1.0).sum(axis=1)) - gammaln(mid + 1.0).sum(axis=1)
        t16 = tgt_occ.astype(np.int16)
        tgt = np.fromiter((index[r.tobytes()] for r in t16), dtype=np.int64, count=len(src))
        rows.append(tgt)
        cols.append(src)
        vals.append(scale * sym.kernel[idx] * np.exp(logc))
    if rows:
        mat = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                            shape=(fs.dim, fs.dim))
    else:
        mat = sp.csr_matrix((fs.dim, fs.dim), dtype=complex)
    return FockOperator(fs, mat, tail=dropped, label=sym.label or f"wick({sym.p},{sym.q})")


@dataclass(frozen=True, eq=False)
class WignerMeasure:
    """Finite-support probability measure ``sum_j alpha_j delta(z - z_j)``."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=complex)).copy()
        w = np.atleast_1d(np.asarray(self.weights, dtype=float)).copy()
        if pts.shape[0] != w.shape[0]:
            raise ValueError("one weight per support point")
        if np.any(w < 0):
            raise ValueError("weights must be non-negative")
        if abs(w.sum() - 1) > 1e-12:
            raise ValueError(f"weights sum to {w.sum():.15g}, not 1")
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def n_modes(self):
        return self.points.shape[1]

    def __len__(self):
        return len(self.weights)

    @classmethod
    def point_mass(cls, z):
        return cls(np.atleast_1d(np.asarray(z, dtype=complex))[None, :], [1.0])

    @classmethod
    def circle(cls, z0, n_points=8):
        """Uniform measure on ``e^{i theta} z0`` at ``n_points`` equi-spaced phases."""
        z0 = np.atleast_1d(np.asarray(z0, dtype=complex))
        ph = np.exp(2j * np.pi * np.arange(n_points) / n_points)
        return cls(ph[:, None] * z0[None, :], np.full(n_points, 1.0 / n_points))

    def to_dict(self):
        return {"points": [{"weight": float(w), "re": z.real.tolist(), "im": z.imag.tolist()}
                           for w, z in zip(self.weights, self.points)]}

    @classmethod
    def from_dict(cls, data):
        pts = data["points"]
        if not pts:
            raise ValueError("a measure needs at least one support point")
        z = np.array([np.asarray(p["re"], float) + 1j * np.asarray(p["im"], float) for p in pts])
        return cls(z, [p["weight"] for p in pts])

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


def classical_expectation(mu: WignerMeasure, sym: PolySymbol) -> complex:
    """``int s dmu = sum_j alpha_j s(z_j)``."""
    return complex(sum(a * evaluate(sym, z) for a, z in zip(mu.weights, mu.points)))


def semiclassical_gap(fs_family, states, mu: WignerMeasure, sym: PolySymbol):
    """Table of ``(eps, |<Psi_eps, s^Wick Psi_eps> - mu(s)|)``, decreasing in eps."""
    fs_family = list(fs_family)
    states = list(states)
    if len(fs_family) != len(states):
        raise ValueError("one state per Fock space")
    target = classical_expectation(mu, sym)
    rows = []
    for fs, psi in zip(fs_family, states):
        check_normalized(psi)
        val = quantize(fs, sym).expectation(psi)
        rows.append((fs.eps, abs(val - target)))
    rows.sort(key=lambda r: -r[0])
    return rows
