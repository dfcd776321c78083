"""Synthesis of a uniform magnetic field from coherent photon states (planar case).

The target potential is ``A(x) = 1/2 (x - x0)^perp`` (unit field along the
normal of the plane).  Mollifying its Fourier transform with a Gaussian of
width ``kappa`` multiplies ``A`` by ``g(x) = exp(-kappa^2 |x - x0|^2 / 2)``;
the transverse transform of ``A g`` is

    A^_1(k) = -i |k| / (2 kappa^2) * (2 pi / kappa^2) exp(-|k|^2 / (2 kappa^2))

along ``e_1(k) = k^perp / |k|``, and the coherent amplitude reproducing it
through the Gaussian coupling ``lambda_A`` is
``z(k) = (2 pi)^(-2) A^_1(k) / (2 lambda_A(k))``.
"""
from __future__ import annotations

import numpy as np

from ..field_model import FormFactor, build_mode_set, gauss_radial, gaussian_lambda
from ..fock import CoherentSpec
from ..measures import EffectiveFields, PointCloud, effective_fields_eps
from ..schrodinger.operators import assemble_effective, assemble_Heps
from ..schrodinger.solvers import lowest_eigs
from .common import NumericalError, ordered_map
from .config import ConfigError, ExperimentConfig
from .report import Report, fit_rate

__all__ = ["synthesis_amplitudes", "uniform_target", "landau_levels", "run_uniform_field",
           "synthesis_mode_set"]


def synthesis_mode_set(kappa, n_radial=16, n_angles=32, kmax_factor=8.0):
    """Gauss-Legendre radial nodes on ``(0, kmax_factor kappa]`` times uniform angles."""
    r, w = gauss_radial(n_radial, kmax_factor * kappa, 0.0, 2)
    return build_mode_set(2, r, n_angles, "massless", radial_weights=w, label=f"kappa={kappa:g}")


def synthesis_amplitudes(ms, kappa):
    """Fock-coordinate amplitudes ``sqrt(w_m) z(k_m)`` of the mollified uniform field."""
    if ms.d != 2:
        raise ValueError("uniform-field synthesis is implemented in the plane (d = 2)")
    r = np.linalg.norm(ms.nodes, axis=1)
    lam = gaussian_lambda(r)
    if np.any(lam == 0) or not np.all(np.isfinite(lam)):
        raise ValueError("lambda_A vanishes at a node; cannot divide by it")
    ghat = (2 * np.pi / kappa**2) * np.exp(-r**2 / (2 * kappa**2))
    Ahat = -1j * r / (2 * kappa**2) * ghat
    z = Ahat / (2 * lam) / (2 * np.pi) ** 2
    return np.sqrt(ms.weights) * z


def uniform_target(points, center, kappa=None):
    """``1/2 (x - x0)^perp``, times ``g`` when ``kappa`` is given."""
    X = np.atleast_2d(points) - center
    A = 0.5 * np.stack([-X[:, 1], X[:, 0]], axis=1)
    if kappa is not None:
        A = A * np.exp(-0.5 * kappa**2 * (X**2).sum(axis=1))[:, None]
    return A


def _exact_operator(grid):
    A = uniform_target(grid.points, grid.center)
    P = len(A)
    f = EffectiveFields(grid.points, A[None], np.zeros((1, P, 2)), np.zeros((1, P)),
                        (A**2).sum(axis=1)[None], {"source": "exact"})
    return assemble_effective(f, None, grid)


def landau_levels(op, grid, count=60, disk_radius=None, bulk_weight=0.99, tol=1e-8):
    """Distinct bulk Landau levels of ``op``.

    Eigenvectors are kept when at least ``bulk_weight`` of their norm lies in
    a central disk (edge states are discarded); the surviving eigenvalues
    are clustered with a relative threshold and the cluster minima returned.
    """
    rep = lowest_eigs(op, count, tol, return_vectors=True)
    radius = disk_radius if disk_radius is not None else 0.375 * grid.L
    X = grid.points - grid.center
    inside = np.repeat(np.linalg.norm(X, axis=1) <= radius, grid.s)
    weights = (np.abs(rep.eigenvectors[inside]) ** 2).sum(axis=0)
    bulk = sorted(v for v, w in zip(rep.eigenvalues, weights) if w >= bulk_weight)
    levels = []
    for v in bulk:
        if not levels or v - levels[-1][-1] > 0.25:
            levels.append([v])
        else:
            levels[-1].append(v)
    return [lv[0] for lv in levels], rep


def run_uniform_field(cfg: ExperimentConfig) -> Report:
    grid = cfg.build_grid()
    if grid.d != 2:
        raise ConfigError("uniform-field synthesis supports d = 2 only")
    if grid.s != 1 or grid.N != 1:
        raise ConfigError("uniform-field synthesis uses one spinless particle")
    uf = cfg.section("uniform_field")
    kappas = [float(k) for k in uf["kappa"]]
    eps_list = cfg.eps_schedule
    count = int(cfg.solver("count", 3))
    tol = float(cfg.solver("tol", 1e-9))
    n_r = int(uf.get("radial_nodes", 16))
    n_a = int(uf.get("angles", 32))
    kfac = float(uf.get("kmax_factor", 8.0))
    center = grid.center
    probe = np.asarray(uf.get("probe", (center + 0.25 * grid.L * np.array([1.0, 1.0])).tolist()))
    disk = float(uf.get("disk_radius", 0.375 * grid.L))
    ff = FormFactor.gaussian_charge(1, origin=center)
    cloud = PointCloud(probe[None, :])

    exact = _exact_operator(grid)
    spec_exact = lowest_eigs(exact, count, tol)
    levels, _ = landau_levels(exact, grid, int(uf.get("landau_count", 60)), disk,
                              float(uf.get("bulk_weight", 0.99)), tol)
    if len(levels) < 2:
        raise NumericalError("fewer than two bulk Landau levels resolved; enlarge landau_count")

    in_disk = np.linalg.norm(grid.points - center, axis=1) <= disk

    def row_for(pair):
        eps, kappa = pair
        ms = synthesis_mode_set(kappa, n_r, n_a, kfac)
        z = synthesis_amplitudes(ms, kappa)
        cs = CoherentSpec(z)
        H = assemble_Heps(cs, eps, ff, ms, None, grid)
        spec = lowest_eigs(H, count, tol)
        fields = H.meta["effective_fields"]
        pA = effective_fields_eps(cs, eps, ff, ms, cloud).A[0, 0]
        tgt = uniform_target(probe, center)[0]
        tgt_moll = uniform_target(probe, center, kappa)[0]
        full = uniform_target(grid.points, center, kappa)
        return {
            "eps": eps, "kappa": kappa, "n_modes": ms.n_modes, "c_eps": H.meta["c_eps"],
            "probe_err": float(np.linalg.norm(pA - tgt)),
            "probe_err_mollified": float(np.linalg.norm(pA - tgt_moll)),
            "disk_err_mollified": float(np.abs(fields.A[0][in_disk] - full[in_disk]).max()),
            "spec": spec.eigenvalues,
        }

    parts = ordered_map(row_for, list(zip(eps_list, kappas)), cfg.workers)
    lam_cols = [f"lambda_{i}" for i in range(count)]
    ex_cols = [f"exact_{i}" for i in range(count)]
    cols = ["eps", "kappa", "n_modes", "c_eps", "probe_err", "probe_err_mollified",
            "disk_err_mollified"] + lam_cols + ex_cols + ["max_rel_gap"]
    rep = Report("uniform-field", cols)
    for p in parts:
        rel = max(abs(a - b) / abs(b) for a, b in zip(p["spec"], spec_exact.eigenvalues))
        rep.add(**{k: p[k] for k in cols[:7]}, **dict(zip(lam_cols, p["spec"])),
                **dict(zip(ex_cols, spec_exact.eigenvalues)), max_rel_gap=rel)
    errs = [r["probe_err"] for r in rep.rows]
    slope, r2 = fit_rate(kappas, errs) if all(e > 0 for e in errs) else (float("nan"), float("nan"))
    c_col = [r["c_eps"] for r in rep.rows]
    rep.summary = {
        "landau_levels": levels, "landau_gap": levels[1] - levels[0],
        "exact_eigenvalues": spec_exact.eigenvalues,
        "probe": probe.tolist(), "probe_err_rate": slope, "probe_err_rate_r2": r2,
        "finest_max_rel_gap": rep.rows[-1]["max_rel_gap"],
        "c_eps_growing": bool(all(b > a for a, b in zip(c_col, c_col[1:]))),
    }
    return rep
