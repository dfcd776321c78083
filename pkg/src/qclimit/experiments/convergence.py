"""Convergence of the partial-trace operator ``H_eps`` to ``H_eff(mu)`` along a state family."""
from __future__ import annotations

import numpy as np

from ..fock import (FockSpace, TruncationError, coherent_state, number_state, required_nmax)
from ..measures import (PointCloud, WignerMeasure, effective_fields_eps, effective_fields_mu,
                        field_energy)
from ..schrodinger.operators import assemble_effective, assemble_Heps
from ..schrodinger.solvers import default_shift, lowest_eigs, resolvent_gap
from .common import NumericalError, lower_bound_constant, ordered_map, probe_points
from .config import ConfigError, ExperimentConfig
from .report import Report, fit_rate

__all__ = ["StateFamily", "build_family", "run_convergence"]


class StateFamily:
    """A declared family ``eps -> Psi_eps`` with its limit measure."""

    def __init__(self, kind, limit: WignerMeasure, n_modes, tail_tol=1e-10, **params):
        self.kind = kind
        self.limit = limit
        self.n_modes = n_modes
        self.tail_tol = tail_tol
        self.params = params

    def n_max(self, eps):
        if self.kind == "coherent":
            return max(1, required_nmax(np.vdot(self.params["z"], self.params["z"]).real, eps, self.tail_tol))
        if self.kind == "number":
            return self.occupation(eps) + 2
        return max(1, max(required_nmax(np.vdot(z, z).real, eps, self.tail_tol)
                          for _, z in self.params["branches"]))

    def occupation(self, eps):
        return int(round(self.params["occupation"] / eps))

    def fock_space(self, eps, n_max=None):
        return FockSpace(self.n_modes, n_max or self.n_max(eps), eps)

    def state(self, fs):
        if self.kind == "coherent":
            return coherent_state(fs, self.params["z"], self.tail_tol)
        if self.kind == "number":
            n = np.zeros(self.n_modes, dtype=int)
            n[self.params["mode"]] = self.occupation(fs.eps)
            return number_state(fs, n)
        psi = sum(zeta * coherent_state(fs, z, self.tail_tol) for zeta, z in self.params["branches"])
        return psi / np.linalg.norm(psi)


def build_family(cfg: ExperimentConfig, ms) -> StateFamily:
    st = cfg.section("state")
    fam = st.get("family", "coherent")
    Mp = ms.n_fock
    tail = float(cfg.solver("tail_tol", 1e-10))

    def zvec(re, im):
        z = np.asarray(re, float) + 1j * np.asarray(im, float)
        z = np.broadcast_to(z, (Mp,)).copy() if z.ndim == 0 else z
        if z.shape != (Mp,):
            raise ConfigError(f"coherent point needs {Mp} entries, got {z.shape}")
        return z

    if fam == "coherent":
        z = zvec(st.get("z_re", 0.0), st.get("z_im", 0.0))
        return StateFamily("coherent", WignerMeasure.point_mass(z), Mp, tail, z=z)
    if fam == "number":
        mode = int(st.get("mode", 0))
        occ = float(st.get("occupation", 1.0))
        if not 0 <= mode < Mp:
            raise ConfigError("number-state mode index out of range")
        z0 = np.zeros(Mp, dtype=complex)
        z0[mode] = np.sqrt(occ)
        limit = WignerMeasure.circle(z0, int(st.get("circle_points", 16)))
        return StateFamily("number", limit, Mp, tail, mode=mode, occupation=occ)
    branches = []
    for b in st["branches"]:
        zeta = complex(b.get("zeta_re", 1.0), b.get("zeta_im", 0.0))
        branches.append((zeta, zvec(b.get("z_re", 0.0), b.get("z_im", 0.0))))
    w = np.array([abs(zt) ** 2 for zt, _ in branches])
    limit = WignerMeasure(np.array([z for _, z in branches]), w / w.sum())
    return StateFamily("superposition", limit, Mp, tail, branches=branches)


def run_convergence(cfg: ExperimentConfig) -> Report:
    """Rows per eps: photon energy, low spectrum of ``H_eps``, resolvent gap and field errors."""
    ms = cfg.build_mode_set()
    grid = cfg.build_grid()
    ff = cfg.build_form_factor(grid)
    V = cfg.build_potential(grid)
    fam = build_family(cfg, ms)
    eps_list = cfg.eps_schedule
    count = int(cfg.solver("count", 3))
    tol = float(cfg.solver("tol", 1e-9))
    probes = PointCloud(probe_points(grid), grid.s)
    max_dim = int(cfg.solver("max_fock_dim", 50_000))

    feasible = [e for e in eps_list if comb_dim(fam.n_modes, fam.n_max(e)) <= max_dim]
    if len(feasible) < len(eps_list):
        smallest = min(feasible) if feasible else None
        raise NumericalError(
            f"Fock truncation for eps={min(eps_list):g} exceeds {max_dim} basis states; "
            f"smallest feasible eps in the schedule: {smallest}")

    mu = fam.limit
    fields_mu = effective_fields_mu(mu, ff, ms, grid)
    H_eff = assemble_effective(fields_mu, V, grid)
    spec_eff = lowest_eigs(H_eff, count, tol)
    probe_mu = effective_fields_mu(mu, ff, ms, probes)
    c_mu = field_energy(mu, ms)

    def row_for(eps):
        fs = fam.fock_space(eps)
        try:
            psi = fam.state(fs)
        except TruncationError as exc:  # pragma: no cover - guarded by n_max()
            raise NumericalError(str(exc)) from exc
        H = assemble_Heps(psi, fs, ff, ms, V, grid)
        spec = lowest_eigs(H, count, tol)
        pe = effective_fields_eps(psi, fs, ff, ms, probes)
        return {"eps": eps, "fs": fs, "H": H, "spec": spec, "probe": pe}

    parts = ordered_map(row_for, eps_list, cfg.workers)
    lam_min = min([spec_eff.eigenvalues[0]] + [p["spec"].eigenvalues[0] for p in parts])
    xi_cfg = cfg.solver("xi", "auto")
    xi = default_shift(lam_min) if xi_cfg == "auto" else float(xi_cfg)
    n_probe = int(cfg.solver("probes", 3))
    gaps = ordered_map(lambda p: resolvent_gap(p["H"], H_eff, xi, n_probe, tol=1e-10, seed=cfg.seed),
                       parts, cfg.workers)

    lam_cols = [f"lambda_{i}" for i in range(count)]
    cols = ["eps", "n_max", "fock_dim", "c_eps"] + lam_cols + [
        "resolvent_gap", "dA", "dB", "dphi2", "dW", "W_probe", "phi2_probe"]
    rep = Report("convergence", cols)
    for p, gap in zip(parts, gaps):
        pe = p["probe"]
        rep.add(eps=p["eps"], n_max=p["fs"].n_max, fock_dim=p["fs"].dim, c_eps=p["H"].meta["c_eps"],
                **dict(zip(lam_cols, p["spec"].eigenvalues)), resolvent_gap=gap,
                dA=float(np.abs(pe.A - probe_mu.A).max()),
                dB=float(np.abs(pe.B - probe_mu.B).max()),
                dphi2=float(np.abs(pe.phi2 - probe_mu.phi2).max()),
                dW=float(np.abs(pe.W - probe_mu.W).max()),
                W_probe=float(pe.W[0, 0]), phi2_probe=float(pe.phi2[0, 0]))
    rep.add(eps=0.0, c_eps=c_mu, **dict(zip(lam_cols, spec_eff.eigenvalues)), resolvent_gap=0.0,
            dA=0.0, dB=0.0, dphi2=0.0, dW=0.0, W_probe=float(probe_mu.W[0, 0]),
            phi2_probe=float(probe_mu.phi2[0, 0]))

    finite = rep.rows[:-1]
    eps_arr = np.array([r["eps"] for r in finite])
    gap_arr = np.array([r["resolvent_gap"] for r in finite])
    slope, r2 = fit_rate(eps_arr, gap_arr) if np.all(gap_arr > 0) else (float("nan"), float("nan"))
    w_arr = np.array([r["W_probe"] for r in finite])
    wslope, wint = np.polyfit(eps_arr, w_arr, 1) if len(finite) > 1 else (float("nan"), float("nan"))
    c_sup = max(r["c_eps"] for r in finite)
    C = lower_bound_constant(grid, ff, ms, cfg.potential_min(grid), c_sup)
    lam0 = [r["lambda_0"] for r in finite]
    rep.summary = {
        "family": fam.kind, "xi": xi, "gap_rate": slope, "gap_rate_r2": r2,
        "gap_ratios": [b / a for a, b in zip(gap_arr, gap_arr[1:])] if np.all(gap_arr > 0) else [],
        "W_probe_slope": float(wslope), "W_probe_intercept": float(wint),
        "lower_bound_C": C, "lambda0_min": min(lam0), "lower_bound_holds": min(lam0) >= -C,
        "c_eps_sup": c_sup, "c_mu": c_mu, "limit_eigenvalues": spec_eff.eigenvalues,
    }
    return rep


def comb_dim(n_modes, n_max):
    from math import comb
    return comb(n_modes + n_max, n_max)
