"""Classical effective fields induced by Wigner measures and by Fock states.

For a field configuration ``z`` the bare vector potential of particle ``j`` is

    a_j(x; z) = 2 Re sum_{m,gamma} conj(z_{m gamma}) sqrt(w_m) lambda_j(x; k_m) e_gamma(k_m),

and a finite measure ``mu = sum alpha_l delta_{z_l}`` produces the mean
``A_j = E_mu[a_j]``, the variance ``W_j = E_mu|a_j - A_j|^2`` and the second
moment ``phi2_j = E_mu|a_j|^2``.  The quantum counterparts for a Fock state
replace the measure average by the state expectation of ``phi(lambda_j(x))``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .field_model import FormFactor, ModeSet, coupling_components
from .fock import CoherentSpec, FockSpace, check_normalized, state_moments
from .wick import WignerMeasure

__all__ = [
    "WignerMeasure",
    "EffectiveFields",
    "PointCloud",
    "bare_potential",
    "effective_fields_mu",
    "effective_fields_eps",
    "field_energy",
    "photon_energy",
]

_CHUNK = 1_500_000  # complex entries per coupling block


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Arbitrary evaluation points, usable wherever a grid supplies ``points``."""

    points: np.ndarray
    s: int = 1

    def __post_init__(self):
        object.__setattr__(self, "points", np.atleast_2d(np.asarray(self.points, dtype=float)))


@dataclass(frozen=True, eq=False)
class EffectiveFields:
    """Fields sampled on the one-particle nodes of a grid.

    Attributes
    ----------
    points : (P, d)
    A, B : (N, P, d) real
    W, phi2 : (N, P) real
    provenance : dict
        ``{"source": "measure"}`` or ``{"source": "state", "eps": ...}``.
    """

    points: np.ndarray
    A: np.ndarray
    B: np.ndarray
    W: np.ndarray
    phi2: np.ndarray
    provenance: dict = field(default_factory=dict)

    @property
    def n_particles(self):
        return self.A.shape[0]

    @property
    def d(self):
        return self.points.shape[1]

    def diagonal_term(self, j):
        """Scalar field multiplying the identity in the kinetic expansion.

        For measures this is ``|A|^2 + W``, for states ``<phi^2>``; both
        equal ``phi2`` by construction.
        """
        return self.phi2[j]

    def columns(self):
        cols = [f"x{i}" for i in range(self.d)]
        for j in range(self.n_particles):
            cols += [f"A{j}_{i}" for i in range(self.d)]
            cols += [f"B{j}_{i}" for i in range(self.d)]
            cols += [f"W{j}", f"phi2_{j}"]
        return cols

    def table(self):
        parts = [self.points]
        for j in range(self.n_particles):
            parts += [self.A[j], self.B[j], self.W[j][:, None], self.phi2[j][:, None]]
        return np.concatenate(parts, axis=1)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.columns())
            for row in self.table():
                w.writerow([f"{v:.17g}" for v in row])


def _components(ms, ff, j, x, which):
    return coupling_components(ms, ff, j, x, which)


def _chunks(n_points, n_fock, d):
    step = max(1, _CHUNK // max(1, n_fock * d))
    for start in range(0, n_points, step):
        yield slice(start, min(n_points, start + step))


def bare_potential(z, ff: FormFactor, ms: ModeSet, X, which="lam"):
    """``a_z(x_1, ..., x_N)`` as a real ``(N d,)`` vector (or ``(P, N d)`` for many configurations)."""
    z = np.asarray(z, dtype=complex)
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    d = ms.d
    if X.shape[1] != d * ff.n_particles:
        raise ValueError("configuration must have N*d coordinates")
    blocks = []
    for j in range(ff.n_particles):
        F = _components(ms, ff, j, X[:, j * d:(j + 1) * d], which)
        blocks.append(2 * (F @ np.conj(z)).real)
    out = np.concatenate(blocks, axis=1)
    return out[0] if single else out


def _check_spin(ff, grid):
    if grid.s == 1 and ff.has_spin_coupling:
        raise ValueError("spinless grid (s = 1) requires a form factor without b couplings")


def effective_fields_mu(mu: WignerMeasure, ff: FormFactor, ms: ModeSet, grid) -> EffectiveFields:
    """``A_mu``, ``B_mu``, ``W_mu`` and ``E_mu|a|^2`` on the grid nodes."""
    _check_spin(ff, grid)
    if mu.n_modes != ms.n_fock:
        raise ValueError("measure and mode set have different Fock dimensions")
    X = grid.points
    P, d, N = len(X), ms.d, ff.n_particles
    A = np.zeros((N, P, d))
    B = np.zeros((N, P, d))
    W = np.zeros((N, P))
    phi2 = np.zeros((N, P))
    zc = np.conj(mu.points)  # (K, M')
    alpha = mu.weights
    for j in range(N):
        for sl in _chunks(P, ms.n_fock, d):
            F = _components(ms, ff, j, X[sl], "lam")
            bare = 2 * np.einsum("pim,km->kpi", F, zc).real
            mean = np.einsum("k,kpi->pi", alpha, bare)
            A[j, sl] = mean
            W[j, sl] = np.einsum("k,kpi->p", alpha, (bare - mean) ** 2)
            phi2[j, sl] = np.einsum("k,kpi->p", alpha, bare ** 2)
            if ff.has_spin_coupling:
                Fb = _components(ms, ff, j, X[sl], "b")
                B[j, sl] = np.einsum("k,kpi->pi", alpha, 2 * np.einsum("pim,km->kpi", Fb, zc).real)
    return EffectiveFields(X, A, B, W, phi2, {"source": "measure", "support": len(mu)})


def field_energy(mu: WignerMeasure, ms: ModeSet) -> float:
    """``c(mu) = sum_l alpha_l sum_{m,gamma} omega_m |z_{l,m gamma}|^2``."""
    if mu.n_modes != ms.n_fock:
        raise ValueError("measure and mode set have different Fock dimensions")
    return float(np.sum(mu.weights * (np.abs(mu.points) ** 2 @ ms.fock_omega)))


def effective_fields_eps(state, fs, ff: FormFactor, ms: ModeSet, grid) -> EffectiveFields:
    """Field expectations of a Fock state on the grid nodes.

    Parameters
    ----------
    state : ndarray or CoherentSpec
        A normalized Fock vector on ``fs``, or a coherent point.  For a
        coherent point the exact displaced-vacuum moments are used
        (``<a> = z``, ``<phi_i^2> = <phi_i>^2 + eps |F_i|^2``) so that large
        mode sets never build a Fock basis.
    fs : FockSpace or float
        The space (or just ``eps`` for a coherent point).
    """
    _check_spin(ff, grid)
    eps = fs.eps if isinstance(fs, FockSpace) else float(fs)
    X = grid.points
    P, d, N = len(X), ms.d, ff.n_particles
    A = np.zeros((N, P, d))
    B = np.zeros((N, P, d))
    phi2 = np.zeros((N, P))

    if isinstance(state, CoherentSpec):
        if state.z.shape != (ms.n_fock,):
            raise ValueError("coherent point and mode set have different Fock dimensions")
        alpha = state.z
        moments = None
        kind = "coherent"
    else:
        if not isinstance(fs, FockSpace):
            raise TypeError("a Fock vector needs its FockSpace")
        if fs.n_modes != ms.n_fock:
            raise ValueError("Fock space and mode set have different mode counts")
        state = np.asarray(state, dtype=complex)
        check_normalized(state)
        alpha, G, L, K = state_moments(fs, state)
        moments = (G, L, K)
        kind = "fock-vector"

    for j in range(N):
        for sl in _chunks(P, ms.n_fock, d):
            F = _components(ms, ff, j, X[sl], "lam")  # (p, d, M')
            mean = 2 * (F @ np.conj(alpha)).real
            A[j, sl] = mean
            if moments is None:
                phi2[j, sl] = (mean ** 2).sum(axis=1) + eps * (np.abs(F) ** 2).sum(axis=(1, 2))
            else:
                G, L, K = moments
                Fc = np.conj(F)
                val = (np.einsum("pim,mn,pin->p", F, G, Fc)
                       + np.einsum("pim,mn,pin->p", Fc, L, F)
                       + 2 * np.einsum("pim,mn,pin->p", Fc, K, Fc).real)
                phi2[j, sl] = val.real
            if ff.has_spin_coupling:
                Fb = _components(ms, ff, j, X[sl], "b")
                B[j, sl] = 2 * (Fb @ np.conj(alpha)).real
    W = phi2 - (A ** 2).sum(axis=2)
    return EffectiveFields(X, A, B, W, phi2, {"source": "state", "eps": eps, "kind": kind})


def photon_energy(state, fs, ms: ModeSet) -> float:
    """``c_eps = <state, dGamma(omega) state>``; ``sum omega |z|^2`` for a coherent point."""
    if isinstance(state, CoherentSpec):
        return float(np.abs(state.z) ** 2 @ ms.fock_omega)
    state = np.asarray(state, dtype=complex)
    check_normalized(state)
    occ = np.abs(state) ** 2 @ fs.basis
    return float(fs.eps * occ @ ms.fock_omega)
