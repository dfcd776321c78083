"""Discrete photon momentum space, polarization frames and particle form factors.

A :class:`ModeSet` is a finite quadrature of momentum space: nodes ``k_m``,
weights ``w_m`` (momentum-space volume), dispersion ``omega_m`` and the
transverse polarization frame ``e_gamma(k_m)``.  Field amplitudes live in
"Fock coordinates", one complex number per (mode, polarization) pair, flattened
as ``m * (d - 1) + gamma``.

A :class:`FormFactor` evaluates the particle couplings ``lambda_j(x; k)`` (and
optionally the spin couplings ``b_j(x; k)``) on the nodes of a mode set.
"""
from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "ModeSet",
    "FormFactor",
    "build_mode_set",
    "mode_set_from_nodes",
    "gauss_radial",
    "gaussian_lambda",
    "polarization_frame",
    "load_dispersion_table",
    "gauge_residual",
    "coupling_vector",
    "coupling_components",
]

_FRAME_TOL = 1e-12


def _readonly(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def polarization_frame(k):
    """Orthonormal transverse frame for each row of ``k``.

    Returns an array of shape ``(M, d - 1, d)``.  In two dimensions the single
    polarization is ``k_perp / |k|`` with ``k_perp = (-k_y, k_x)``.  In three
    dimensions ``e_1 = k_hat x z_hat / |k_hat x z_hat|`` (``x_hat`` on the
    pole) and ``e_2 = k_hat x e_1``.
    """
    k = np.atleast_2d(np.asarray(k, dtype=float))
    M, d = k.shape
    r = np.linalg.norm(k, axis=1)
    if np.any(r <= 0):
        raise ValueError("polarization frame undefined at k = 0")
    khat = k / r[:, None]
    if d == 2:
        e1 = np.stack([-khat[:, 1], khat[:, 0]], axis=1)
        return e1[:, None, :]
    if d == 3:
        zhat = np.array([0.0, 0.0, 1.0])
        c = np.cross(khat, zhat)
        cn = np.linalg.norm(c, axis=1)
        e1 = np.empty_like(khat)
        ok = cn > 1e-12
        e1[ok] = c[ok] / cn[ok, None]
        e1[~ok] = np.array([1.0, 0.0, 0.0])
        e2 = np.cross(khat, e1)
        return np.stack([e1, e2], axis=1)
    raise ValueError(f"dimension must be 2 or 3, got {d}")


@dataclass(frozen=True)
class ModeSet:
    """Discretized one-photon momentum space.

    Attributes
    ----------
    d : int
        Spatial dimension (2 or 3).
    nodes : (M, d) array
        Momentum nodes ``k_m``.
    weights : (M,) array
        Positive quadrature weights.
    omega : (M,) array
        Dispersion values, strictly positive.
    pol : (M, d - 1, d) array
        Polarization vectors ``e_gamma(k_m)``.
    """

    d: int
    nodes: np.ndarray
    weights: np.ndarray
    omega: np.ndarray
    pol: np.ndarray
    label: str = ""

    def __post_init__(self):
        for name in ("nodes", "weights", "omega", "pol"):
            object.__setattr__(self, name, _readonly(np.asarray(getattr(self, name), dtype=float)))
        M = len(self.weights)
        if self.d not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {self.d}")
        if self.nodes.shape != (M, self.d) or self.omega.shape != (M,):
            raise ValueError("inconsistent mode-set array shapes")
        if self.pol.shape != (M, self.d - 1, self.d):
            raise ValueError("polarization array has wrong shape")
        if np.any(self.weights <= 0):
            raise ValueError("quadrature weights must be positive")
        if np.any(~np.isfinite(self.omega)) or np.any(self.omega <= 0):
            raise ValueError("dispersion must be strictly positive")

    @property
    def n_modes(self) -> int:
        return len(self.weights)

    @property
    def n_fock(self) -> int:
        """Number of Fock coordinates ``M' = M (d - 1)``."""
        return self.n_modes * (self.d - 1)

    @property
    def fock_omega(self) -> np.ndarray:
        """Dispersion repeated over polarizations, one entry per Fock coordinate."""
        return np.repeat(self.omega, self.d - 1)

    @property
    def fock_weights(self) -> np.ndarray:
        return np.repeat(self.weights, self.d - 1)

    @property
    def fock_directions(self) -> np.ndarray:
        """``(M', d)`` direction vector of every Fock coordinate."""
        return self.pol.reshape(self.n_fock, self.d)

    @property
    def digest(self) -> str:
        h = hashlib.sha256()
        for a in (self.nodes, self.weights, self.omega, self.pol):
            h.update(np.ascontiguousarray(a).tobytes())
        return h.hexdigest()[:16]

    def frame_error(self) -> float:
        """Largest violation of orthonormality, transversality and completeness."""
        khat = self.nodes / np.linalg.norm(self.nodes, axis=1)[:, None]
        gram = np.einsum("mai,mbi->mab", self.pol, self.pol)
        err = np.abs(gram - np.eye(self.d - 1)).max()
        err = max(err, np.abs(np.einsum("mai,mi->ma", self.pol, self.nodes)).max())
        proj = np.einsum("mai,maj->mij", self.pol, self.pol) + khat[:, :, None] * khat[:, None, :]
        return float(max(err, np.abs(proj - np.eye(self.d)).max()))


def load_dispersion_table(path):
    """Read a two-column CSV of ``|k|, omega`` pairs, sorted by ``|k|``."""
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except ValueError:
                continue  # header line
    if len(rows) < 2:
        raise ValueError(f"dispersion table {path} needs at least two rows")
    tab = np.array(sorted(rows))
    return tab[:, 0], tab[:, 1]


def _dispersion(r, rule, mass=0.0, table=None):
    if rule == "massless":
        return r.copy()
    if rule == "massive":
        if mass < 0:
            raise ValueError("massive dispersion needs a non-negative mass")
        return np.sqrt(r**2 + mass**2)
    if rule == "table":
        if table is None:
            raise ValueError("table dispersion needs a (|k|, omega) table")
        kt, wt = (np.asarray(t, dtype=float) for t in table)
        if r.min() < kt.min() - 1e-12 or r.max() > kt.max() + 1e-12:
            raise ValueError("mode radii fall outside the dispersion table range")
        return np.interp(r, kt, wt)
    raise ValueError(f"unknown dispersion rule {rule!r}")


def gauss_radial(n, r_max, r_min=0.0, d=2):
    """Gauss-Legendre radial nodes on ``(r_min, r_max)`` and measure weights.

    The returned weights include the ``r^(d-1)`` Jacobian, so they can be
    passed directly as ``radial_weights`` to :func:`build_mode_set`.
    """
    x, w = np.polynomial.legendre.leggauss(n)
    r = 0.5 * (r_max - r_min) * (x + 1) + r_min
    return r, 0.5 * (r_max - r_min) * w * r ** (d - 1)


def _cell_radial_weights(r, d):
    r = np.asarray(r, dtype=float)
    if len(r) == 1:
        edges = np.array([0.5 * r[0], 1.5 * r[0]])
    else:
        mid = 0.5 * (r[1:] + r[:-1])
        lo = max(r[0] - (mid[0] - r[0]), 0.0)
        hi = r[-1] + (r[-1] - mid[-1])
        edges = np.concatenate([[lo], mid, [hi]])
    return (edges[1:] ** d - edges[:-1] ** d) / d


def build_mode_set(d, radial_nodes, angular_resolution, dispersion="massless",
                   mass=0.0, table=None, radial_weights=None, label=""):
    """Product quadrature of momentum space.

    Parameters
    ----------
    d : int
        2 or 3.
    radial_nodes : sequence of float
        Strictly positive, strictly increasing radii.
    angular_resolution : int
        ``n`` uniform angles on the circle (d = 2); for d = 3, ``n``
        Gauss-Legendre polar nodes times ``2n`` uniform azimuths.
    dispersion : {"massless", "massive", "table"}
        ``|k|``, ``sqrt(|k|^2 + mass^2)`` or linear interpolation of ``table``
        (a ``(k, omega)`` pair or a CSV path).
    radial_weights : sequence of float, optional
        Radial measure weights including the ``r^(d-1)`` Jacobian.  Defaults
        to the cells delimited by midpoints between consecutive radii, so that
        the weights add up to the volume of the covered shell.

    Nodes are ordered lexicographically in (radius, angle).
    """
    if d not in (2, 3):
        raise ValueError(f"dimension must be 2 or 3, got {d}")
    r = np.asarray(radial_nodes, dtype=float)
    if r.ndim != 1 or len(r) == 0:
        raise ValueError("need at least one radial node")
    if np.any(r <= 0):
        raise ValueError("radial nodes must be > 0 (omega^(-1/2) is singular at k = 0)")
    if np.any(np.diff(r) <= 0):
        raise ValueError("radial nodes must be strictly increasing")
    n = int(angular_resolution)
    if n < 1:
        raise ValueError("angular_resolution must be >= 1")
    if isinstance(table, (str, bytes)) or hasattr(table, "__fspath__"):
        table = load_dispersion_table(table)

    wr = _cell_radial_weights(r, d) if radial_weights is None else np.asarray(radial_weights, float)
    if wr.shape != r.shape:
        raise ValueError("radial_weights must match radial_nodes")

    if d == 2:
        theta = 2 * np.pi * np.arange(n) / n
        dirs = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        wang = np.full(n, 2 * np.pi / n)
    else:
        ct, wct = np.polynomial.legendre.leggauss(n)
        phi = 2 * np.pi * np.arange(2 * n) / (2 * n)
        st = np.sqrt(1 - ct**2)
        dirs = np.stack([
            np.outer(st, np.cos(phi)).ravel(),
            np.outer(st, np.sin(phi)).ravel(),
            np.repeat(ct, 2 * n),
        ], axis=1)
        wang = np.repeat(wct, 2 * n) * (np.pi / n)

    nodes = (r[:, None, None] * dirs[None, :, :]).reshape(-1, d)
    weights = (wr[:, None] * wang[None, :]).ravel()
    radii = np.repeat(r, len(wang))
    omega = _dispersion(radii, dispersion, mass, table)
    return ModeSet(d, nodes, weights, omega, polarization_frame(nodes), label=label)


def mode_set_from_nodes(nodes, weights, dispersion="massless", mass=0.0, table=None,
                        omega=None, label=""):
    """Mode set from explicit nodes and weights (e.g. a single mode)."""
    nodes = np.atleast_2d(np.asarray(nodes, dtype=float))
    r = np.linalg.norm(nodes, axis=1)
    if np.any(r <= 0):
        raise ValueError("nodes must exclude k = 0")
    if omega is None:
        if isinstance(table, (str, bytes)) or hasattr(table, "__fspath__"):
            table = load_dispersion_table(table)
        omega = _dispersion(r, dispersion, mass, table)
    return ModeSet(nodes.shape[1], nodes, np.atleast_1d(weights), np.atleast_1d(omega),
                   polarization_frame(nodes), label=label)


# --------------------------------------------------------------------------- #
#                               form factors                                   #
# --------------------------------------------------------------------------- #

def gaussian_lambda(r):
    """``|k|^(-1/2) exp(-|k|^2 / 2)``."""
    r = np.asarray(r, dtype=float)
    return np.exp(-0.5 * r**2) / np.sqrt(r)


# evaluator(x, ms) -> complex (P, M) array, x of shape (P, d)
Evaluator = Callable[[np.ndarray, ModeSet], np.ndarray]


@dataclass(frozen=True, eq=False)
class FormFactor:
    """Per-particle couplings ``lambda_j(x; k)`` and optional spin couplings.

    ``lam[j](x, ms)`` must return the complex ``(P, M)`` array of
    ``lambda_j(x_p; k_m)`` for points ``x`` of shape ``(P, d)``.  ``b`` is
    either ``None`` (spinless, the Zeeman term is dropped) or a list of
    evaluators with the same signature.
    """

    lam: Sequence[Evaluator]
    b: Optional[Sequence[Evaluator]] = None
    plane_wave: bool = False
    domain: Optional[tuple] = None
    label: str = ""
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_particles(self) -> int:
        return len(self.lam)

    @property
    def has_spin_coupling(self) -> bool:
        return self.b is not None

    def contains(self, x) -> bool:
        if self.domain is None:
            return True
        lo, hi = (np.asarray(v, dtype=float) for v in self.domain)
        x = np.atleast_2d(x)
        return bool(np.all((x >= lo - 1e-12) & (x <= hi + 1e-12)))

    def _evaluate(self, which, j, x, ms):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != ms.d:
            raise ValueError("point dimension does not match the mode set")
        key = (which, j, ms.digest, x.shape, x.tobytes())
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        fns = self.lam if which == "lam" else self.b
        val = np.asarray(fns[j](x, ms), dtype=complex)
        val = np.broadcast_to(val, (x.shape[0], ms.n_modes))
        if len(self._cache) > 64:
            self._cache.clear()
        self._cache[key] = val
        return val

    def lam_at(self, j, x, ms):
        """``lambda_j(x_p; k_m)`` as a ``(P, M)`` array."""
        return self._evaluate("lam", j, x, ms)

    def b_at(self, j, x, ms):
        if self.b is None:
            return np.zeros((np.atleast_2d(x).shape[0], ms.n_modes), dtype=complex)
        return self._evaluate("b", j, x, ms)

    # -- presets ------------------------------------------------------------ #

    @classmethod
    def from_profile(cls, profile, n_particles=1, b_profile=None, domain=None, origin=None,
                     label=""):
        """Plane-wave couplings ``rho_j(|k|) omega(k)^(-1/2) exp(-i k.(x - origin))``.

        ``profile`` is a callable of ``|k|`` or a list of them (one per
        particle).  ``b_profile`` works the same way for the spin coupling.
        """
        profiles = list(profile) if isinstance(profile, (list, tuple)) else [profile] * n_particles
        x0 = None if origin is None else np.asarray(origin, dtype=float)

        def make(rho):
            def ev(x, ms):
                amp = rho(np.linalg.norm(ms.nodes, axis=1)) / np.sqrt(ms.omega)
                xs = x if x0 is None else x - x0
                return amp[None, :] * np.exp(-1j * xs @ ms.nodes.T)
            return ev

        b = None
        if b_profile is not None:
            bprofiles = (list(b_profile) if isinstance(b_profile, (list, tuple))
                         else [b_profile] * len(profiles))
            b = [make(rho) for rho in bprofiles]
        return cls([make(rho) for rho in profiles], b=b, plane_wave=True,
                   domain=domain, label=label or "plane-wave")

    @classmethod
    def gaussian_charge(cls, n_particles=1, domain=None, origin=None):
        """``|k|^(-1/2) exp(-|k|^2 / 2) exp(-i k.(x - origin))``, a Gaussian charge cloud.

        The amplitude is ``lambda_A(k)`` irrespective of the dispersion.
        """
        x0 = None if origin is None else np.asarray(origin, dtype=float)

        def ev(x, ms):
            r = np.linalg.norm(ms.nodes, axis=1)
            amp = gaussian_lambda(r)
            xs = x if x0 is None else x - x0
            return amp[None, :] * np.exp(-1j * xs @ ms.nodes.T)
        return cls([ev] * n_particles, plane_wave=True, domain=domain, label="gaussian-charge")

    @classmethod
    def constant(cls, values, n_particles=1, b_values=None, domain=None):
        """x-independent couplings, ``lambda_j(x; k_m) = values[m]``."""
        vals = np.atleast_1d(np.asarray(values, dtype=complex))

        def const(v):
            return lambda x, ms: np.broadcast_to(v, (x.shape[0], ms.n_modes))

        b = None if b_values is None else [const(np.atleast_1d(np.asarray(b_values, complex)))] * n_particles
        return cls([const(vals)] * n_particles, b=b, domain=domain, label="constant")


def coupling_vector(ms, ff, j, x):
    """Discrete one-photon coupling vector of particle ``j`` at ``x``.

    Returns ``(amps, directions)``: ``amps`` has one entry
    ``sqrt(w_m) lambda_j(x; k_m)`` per Fock coordinate ``(m, gamma)``
    (shape ``(M',)`` for a single point, ``(P, M')`` for many) and
    ``directions`` is the ``(M', d)`` array of ``e_gamma(k_m)``.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if not ff.contains(x):
        raise ValueError("point outside the particle domain")
    lam = ff.lam_at(j, np.atleast_2d(x), ms)
    amps = np.repeat(lam * np.sqrt(ms.weights)[None, :], ms.d - 1, axis=1)
    return (amps[0] if single else amps), ms.fock_directions


def coupling_components(ms, ff, j, x, which="lam"):
    """Per-component coupling vectors ``F[p, i, m'] = amps[p, m'] e_i(m')``.

    ``which="b"`` uses the spin couplings instead.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    vals = ff.lam_at(j, x, ms) if which == "lam" else ff.b_at(j, x, ms)
    amps = np.repeat(vals * np.sqrt(ms.weights)[None, :], ms.d - 1, axis=1)
    return amps[:, None, :] * ms.fock_directions.T[None, :, :]


def gauge_residual(ms, ff, x_samples, h=1e-5):
    """Largest ``|grad_x lambda_j(x; k_m) . e_gamma(k_m)|`` over samples.

    The gradient is taken by central differences with step ``h``.
    """
    X = np.atleast_2d(np.asarray(x_samples, dtype=float))
    worst = 0.0
    for j in range(ff.n_particles):
        grad = np.empty((X.shape[0], ms.n_modes, ms.d), dtype=complex)
        for i in range(ms.d):
            step = np.zeros(ms.d)
            step[i] = h
            grad[:, :, i] = (ff.lam_at(j, X + step, ms) - ff.lam_at(j, X - step, ms)) / (2 * h)
        proj = np.einsum("pmi,mgi->pmg", grad, ms.pol)
        worst = max(worst, float(np.abs(proj).max(initial=0.0)))
    return worst
