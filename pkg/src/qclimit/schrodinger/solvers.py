"""Lowest eigenpairs, shifted solves and resolvent-difference norms."""
from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

__all__ = [
    "SpectralReport",
    "ConvergenceError",
    "lowest_eigs",
    "apply_resolvent",
    "resolvent_gap",
    "default_shift",
    "as_sparse",
]

DENSE_LIMIT = 400


class ConvergenceError(RuntimeError):
    """Eigen- or linear solver missed its tolerance."""

    def __init__(self, msg, residuals=None):
        super().__init__(msg)
        self.residuals = residuals


@dataclass
class SpectralReport:
    eigenvalues: list
    residuals: list
    iterations: int
    wall_time: float
    method: str = ""
    tol: float = 0.0
    eigenvectors: Optional[np.ndarray] = field(default=None, repr=False)

    def to_dict(self):
        d = asdict(self)
        d.pop("eigenvectors")
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text):
        return cls(**json.loads(text))

    @property
    def lowest(self):
        return self.eigenvalues[0]


def as_sparse(op):
    """CSR matrix of an operator object, sparse matrix or dense array."""
    if hasattr(op, "to_sparse"):
        op = op.to_sparse()
    elif not sp.issparse(op):
        op = np.asarray(op)
    return sp.csr_matrix(op, dtype=complex)


def _cache(op):
    d = getattr(op, "__dict__", None)
    if d is None or sp.issparse(op) or isinstance(op, np.ndarray):
        return {}
    return d.setdefault("_solver_cache", {})


def _gershgorin_lower(A):
    diag = A.diagonal().real
    absrow = np.asarray(abs(A).sum(axis=1)).ravel() - np.abs(A.diagonal())
    return float(np.min(diag - absrow))


class _CountingInverse(spla.LinearOperator):
    def __init__(self, A, sigma):
        n = A.shape[0]
        super().__init__(dtype=complex, shape=(n, n))
        self.lu = spla.splu((A - sigma * sp.identity(n, format="csc")).tocsc())
        self.calls = 0

    def _matvec(self, x):
        self.calls += 1
        return self.lu.solve(np.asarray(x, dtype=complex).ravel())


def _residuals(A, vals, vecs):
    R = A @ vecs - vecs * vals[None, :]
    return np.linalg.norm(R, axis=0)


def _shift_invert(A, count, tol, maxiter):
    n = A.shape[0]
    lb = _gershgorin_lower(A)
    scale = max(1.0, abs(lb))
    sigma = lb - 1e-3 * scale
    k = min(count + 1, n - 2)
    inv = _CountingInverse(A, sigma)
    # ARPACK's default random start vector depends on hidden global state, so fix it
    v0 = np.ones(n, dtype=complex) / np.sqrt(n)
    vals, vecs = spla.eigsh(A, k=k, sigma=sigma, which="LM", OPinv=inv,
                            tol=max(tol * 1e-2, 1e-6), maxiter=maxiter, v0=v0)
    iters = inv.calls
    order = np.argsort(vals)
    vals = vals[order]
    gap = vals[-1] - vals[0] if k > 1 else max(abs(vals[0]), 1.0) * 1e-2
    sigma2 = vals[0] - max(0.1 * gap, 1e-6 * max(1.0, abs(vals[0])))
    inv = _CountingInverse(A, sigma2)
    vals, vecs = spla.eigsh(A, k=count, sigma=sigma2, which="LM", OPinv=inv,
                            tol=tol * 1e-2, maxiter=maxiter, v0=vecs[:, 0])
    return vals, vecs, iters + inv.calls


def _plain_lanczos(A, count, tol, maxiter):
    n = A.shape[0]
    ncv = min(n - 1, max(2 * count + 1, 40))
    counter = {"calls": 0}

    def mv(x):
        counter["calls"] += 1
        return A @ x

    lin = spla.LinearOperator(A.shape, matvec=mv, dtype=complex)
    v0 = np.ones(n, dtype=complex) / np.sqrt(n)
    vals, vecs = spla.eigsh(lin, k=count, which="SA", tol=tol * 1e-2, ncv=ncv,
                            maxiter=maxiter or 50 * n, v0=v0)
    return vals, vecs, counter["calls"]


def lowest_eigs(op, count: int = 1, tol: float = 1e-8, return_vectors: bool = False,
                maxiter: Optional[int] = None, method: str = "auto") -> SpectralReport:
    """Lowest ``count`` eigenvalues with residual certificates.

    Small problems use dense ``eigh``.  Larger ones use ARPACK Lanczos
    through :func:`scipy.sparse.linalg.eigsh`, in one of two modes:

    ``"shift-invert"``
        sparse LU of ``A - sigma``; a first pass with ``sigma`` at the
        Gershgorin lower bound locates the bottom of the spectrum, a second
        pass re-centres ``sigma`` just below it.  Robust for clustered
        spectra on particle grids.
    ``"lanczos"``
        plain smallest-algebraic Lanczos.  Used for the coupled
        grid (x) Fock operators, whose LU factors fill in badly.

    ``"auto"`` picks ``"lanczos"`` for operators carrying a Fock space and
    ``"shift-invert"`` otherwise; a non-converged plain run falls back to
    shift-invert.  Every returned pair satisfies
    ``|A v - theta v| <= tol |theta| + tol``, otherwise
    :class:`ConvergenceError` is raised.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    t0 = time.perf_counter()
    A = as_sparse(op)
    n = A.shape[0]
    if count > n:
        raise ValueError(f"asked for {count} eigenvalues of a {n}-dimensional operator")
    iters = 0
    if n <= DENSE_LIMIT or count >= n - 1:
        vals, vecs = np.linalg.eigh(A.toarray())
        vals, vecs = vals[:count], vecs[:, :count]
        method = "dense-eigh"
    else:
        if method == "auto":
            method = "lanczos" if hasattr(op, "space") else "shift-invert"
        if method not in ("lanczos", "shift-invert"):
            raise ValueError(f"unknown eigensolver method {method!r}")
        vals = None
        if method == "lanczos":
            try:
                vals, vecs, iters = _plain_lanczos(A, count, tol, maxiter)
                if np.any(_residuals(A, vals, vecs) > tol * np.abs(vals) + tol):
                    vals = None
            except spla.ArpackNoConvergence:
                vals = None
            if vals is None:
                method = "shift-invert"
        if vals is None:
            vals, vecs, iters = _shift_invert(A, count, tol, maxiter)
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
        method += "-lanczos" if method == "shift-invert" else ""
    res = _residuals(A, vals, vecs)
    bound = tol * np.abs(vals) + tol
    if np.any(res > bound):
        raise ConvergenceError(f"eigenpairs missed tolerance {tol:g}: residuals {res.tolist()}",
                               residuals=res.tolist())
    _cache(op)["lambda0"] = float(vals[0])
    return SpectralReport([float(v) for v in vals], [float(r) for r in res], int(iters),
                          time.perf_counter() - t0, method, tol,
                          vecs if return_vectors else None)


def default_shift(lambda0: float) -> float:
    """``1 + max(0, -lambda0) + 1``."""
    return 1.0 + max(0.0, -lambda0) + 1.0


def _lambda0(op, A):
    c = _cache(op)
    if "lambda0" not in c:
        lam = lowest_eigs(A, 1, tol=1e-8).eigenvalues[0]
        c["lambda0"] = lam
        return lam
    return c["lambda0"]


def _factor(op, A, xi):
    c = _cache(op)
    key = ("lu", float(xi))
    lu = c.get(key)
    if lu is None:
        lu = spla.splu((A + xi * sp.identity(A.shape[0], format="csc")).tocsc())
        c[key] = lu
    return lu


def apply_resolvent(op, xi: float, v, tol: float = 1e-10, lambda0: Optional[float] = None):
    """Solve ``(op + xi) u = v`` to relative residual ``tol``.

    The shift must put ``-xi`` strictly below the spectrum (checked against
    the cached or computed lowest eigenvalue).  The solve is a sparse LU,
    cached per ``(op, xi)``, followed by iterative refinement.
    """
    A = as_sparse(op)
    lam0 = _lambda0(op, A) if lambda0 is None else lambda0
    if lam0 + xi <= 0:
        raise ValueError(f"indefinite shift: -xi = {-xi:g} is not below lambda0 = {lam0:g}")
    lu = _factor(op, A, xi)
    v = np.asarray(v, dtype=complex)
    u = lu.solve(v)
    nv = max(np.linalg.norm(v), 1e-300)
    for _ in range(5):
        r = v - (A @ u + xi * u)
        if np.linalg.norm(r) <= tol * nv:
            return u
        u = u + lu.solve(r)
    r = v - (A @ u + xi * u)
    if np.linalg.norm(r) > tol * nv:
        raise ConvergenceError(f"resolvent solve residual {np.linalg.norm(r) / nv:.3e} > {tol:g}")
    return u


def resolvent_gap(opA, opB, xi: float, probes: int = 3, tol: float = 1e-10,
                  max_iter: int = 300, seed: int = 0) -> float:
    """Estimate ``|R_A(xi) - R_B(xi)|`` by power iteration on the difference.

    ``R = (op + xi)^{-1}``.  Each probe starts from a seeded random vector;
    the largest converged ``|<v, D v>|`` is returned.
    """
    A, B = as_sparse(opA), as_sparse(opB)
    if A.shape != B.shape:
        raise ValueError("operators act on different spaces")
    for op, M in ((opA, A), (opB, B)):
        lam0 = _lambda0(op, M)
        if lam0 + xi <= 0:
            raise ValueError(f"indefinite shift: -xi = {-xi:g} is not below lambda0 = {lam0:g}")
    rng = np.random.default_rng(seed)
    n = A.shape[0]
    solve_tol = max(tol * 1e-2, 1e-13)

    def D(x):
        return (apply_resolvent(opA, xi, x, solve_tol, _lambda0(opA, A))
                - apply_resolvent(opB, xi, x, solve_tol, _lambda0(opB, B)))

    best = 0.0
    for _ in range(probes):
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        v /= np.linalg.norm(v)
        ray = 0.0
        for _ in range(max_iter):
            w = D(v)
            new = abs(np.vdot(v, w))
            nw = np.linalg.norm(w)
            if nw == 0:
                new = 0.0
                break
            v = w / nw
            if abs(new - ray) <= tol * max(new, 1e-300):
                ray = new
                break
            ray = new
        best = max(best, ray)
    return float(best)
