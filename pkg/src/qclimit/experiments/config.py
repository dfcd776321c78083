"""Experiment configuration: TOML or JSON files mapped onto library objects.

Schema (all sections are tables; unknown keys are rejected)::

    [experiment]   kind = "convergence" | "uniform-field" | "ground-state"
                   seed = 0, output_dir = "out", workers = 1, label
    [modes]        d, radial_nodes | radial = {rule = "gauss", n, r_max, r_min},
                   angular_resolution, dispersion = "massless" | "massive" | "table",
                   mass, table (CSV path), nodes + weights (explicit set instead)
    [form_factor]  preset = "gaussian-charge" | "constant" | "uniform-field-synthesis" | "table"
                   origin = "center" | [x, ...], values, b_values, table, spin_table
    [state]        family = "coherent" | "number" | "superposition"
                   z_re, z_im | mode, occupation | branches = [{zeta_re, zeta_im, z_re, z_im}],
                   circle_points
    [schedule]     eps = [...]  (strictly decreasing, inside (0, 1))
    [grid]         L, n, s = 1, N = 1
    [potential]    kind = "none" | "harmonic" | "constant", strength, offset, center
    [solver]       tol, count, xi, probes, tail_tol, max_fock_dim, n_max
    [uniform_field] kappa = [...], radial_nodes, angles, kmax_factor, probe, disk_radius,
                   landau_count, bulk_weight
    [ground_state] scan_points, nmax_start, nmax_step, nmax_limit, nmax_tol, mixture_points
"""
from __future__ import annotations

import copy
import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

from ..field_model import (FormFactor, build_mode_set, gauss_radial, load_dispersion_table,
                           mode_set_from_nodes)

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "DEFAULT_EPS"]

DEFAULT_EPS = [1 / 4, 1 / 8, 1 / 16, 1 / 32, 1 / 64]

_SECTIONS = {
    "experiment": {"kind", "seed", "output_dir", "workers", "label"},
    "modes": {"d", "radial_nodes", "radial", "angular_resolution", "dispersion", "mass",
              "table", "nodes", "weights"},
    "form_factor": {"preset", "origin", "values", "b_values", "table", "spin_table"},
    "state": {"family", "z_re", "z_im", "mode", "occupation", "branches", "circle_points"},
    "schedule": {"eps"},
    "grid": {"L", "n", "s", "N"},
    "potential": {"kind", "strength", "offset", "center"},
    "solver": {"tol", "count", "xi", "probes", "tail_tol", "max_fock_dim", "n_max"},
    "uniform_field": {"kappa", "radial_nodes", "angles", "kmax_factor", "probe",
                      "disk_radius", "landau_count", "bulk_weight"},
    "ground_state": {"scan_points", "nmax_start", "nmax_step", "nmax_limit", "nmax_tol",
                     "mixture_points"},
}

_KINDS = {"convergence", "uniform-field", "ground-state"}
_PRESETS = {"gaussian-charge", "constant", "uniform-field-synthesis", "table"}


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


@dataclass
class ExperimentConfig:
    """Validated configuration; sections are kept as plain dictionaries."""

    data: dict
    source: str = ""
    base_dir: Path = field(default_factory=Path.cwd)

    def __post_init__(self):
        self.data = copy.deepcopy(self.data)
        self.validate()

    # -- accessors ----------------------------------------------------------- #

    def section(self, name) -> dict:
        return self.data.get(name, {})

    @property
    def kind(self) -> str:
        return self.section("experiment")["kind"]

    @property
    def seed(self) -> int:
        return int(self.section("experiment").get("seed", 0))

    @property
    def workers(self) -> int:
        return int(self.section("experiment").get("workers", 1))

    @property
    def output_dir(self) -> Path:
        out = Path(self.section("experiment").get("output_dir", "qclimit-out"))
        return out if out.is_absolute() else self.base_dir / out

    @property
    def eps_schedule(self) -> list:
        return [float(e) for e in self.section("schedule").get("eps", DEFAULT_EPS)]

    def solver(self, key, default):
        return self.section("solver").get(key, default)

    def digest(self) -> str:
        blob = json.dumps(self.data, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()

    def to_dict(self):
        return copy.deepcopy(self.data)

    # -- validation ------------------------------------------------------------ #

    def validate(self):
        d = self.data
        if not isinstance(d, dict):
            raise ConfigError("config root must be a table")
        for name, sec in d.items():
            if name not in _SECTIONS:
                raise ConfigError(f"unknown section [{name}]")
            if not isinstance(sec, dict):
                raise ConfigError(f"section [{name}] must be a table")
            extra = set(sec) - _SECTIONS[name]
            if extra:
                raise ConfigError(f"unknown keys in [{name}]: {sorted(extra)}")
        exp = d.get("experiment", {})
        if exp.get("kind") not in _KINDS:
            raise ConfigError(f"[experiment] kind must be one of {sorted(_KINDS)}")
        eps = self.eps_schedule
        if not eps:
            raise ConfigError("empty eps schedule")
        if any(not (0 < e < 1) for e in eps):
            raise ConfigError("eps values must lie in (0, 1)")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ConfigError("eps schedule must be strictly decreasing")
        ff = d.get("form_factor", {})
        if ff.get("preset", "gaussian-charge") not in _PRESETS:
            raise ConfigError(f"unknown form-factor preset {ff.get('preset')!r}")
        g = d.get("grid", {})
        if "L" in g and not float(g["L"]) > 0:
            raise ConfigError("grid L must be positive")
        if "n" in g and (int(g["n"]) != g["n"] or int(g["n"]) < 2):
            raise ConfigError("grid n must be an integer >= 2")
        st = d.get("state", {})
        fam = st.get("family", "coherent")
        if fam not in {"coherent", "number", "superposition"}:
            raise ConfigError(f"unknown state family {fam!r}")
        if fam == "superposition" and not st.get("branches"):
            raise ConfigError("superposition family needs branches")
        if self.kind == "uniform-field":
            kap = self.section("uniform_field").get("kappa")
            if not kap:
                raise ConfigError("[uniform_field] kappa list required")
            if len(kap) != len(eps):
                raise ConfigError("[uniform_field] kappa needs one width per eps")
            if any(b >= a for a, b in zip(kap, kap[1:])):
                raise ConfigError("mollifier widths must be strictly decreasing")

    # -- builders -------------------------------------------------------------- #

    def _path(self, p):
        p = Path(p)
        return p if p.is_absolute() else self.base_dir / p

    def build_grid(self):
        from ..schrodinger.grid import ParticleGrid
        g = self.section("grid")
        try:
            return ParticleGrid(int(self.section("modes").get("d", 2)), float(g.get("L", 1.0)),
                                int(g.get("n", 33)), int(g.get("N", 1)), int(g.get("s", 1)))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def build_mode_set(self):
        m = self.section("modes")
        d = int(m.get("d", 2))
        disp = m.get("dispersion", "massless")
        table = self._path(m["table"]) if "table" in m else None
        try:
            if "nodes" in m:
                return mode_set_from_nodes(m["nodes"], m["weights"], disp,
                                           float(m.get("mass", 0.0)), table)
            rw = None
            if "radial" in m:
                r = m["radial"]
                if r.get("rule", "gauss") != "gauss":
                    raise ConfigError("radial rule must be 'gauss'")
                nodes, rw = gauss_radial(int(r["n"]), float(r["r_max"]), float(r.get("r_min", 0.0)), d)
            else:
                nodes = m.get("radial_nodes", [1.0])
            return build_mode_set(d, nodes, int(m.get("angular_resolution", 4)), disp,
                                  float(m.get("mass", 0.0)), table, radial_weights=rw)
        except (KeyError, ValueError, OSError) as exc:
            raise ConfigError(f"[modes]: {exc}") from exc

    def origin(self, grid):
        o = self.section("form_factor").get("origin", "center")
        if isinstance(o, str):
            if o != "center":
                raise ConfigError("origin must be 'center' or a coordinate list")
            return grid.center
        return np.asarray(o, dtype=float)

    def build_form_factor(self, grid):
        f = self.section("form_factor")
        preset = f.get("preset", "gaussian-charge")
        N = grid.N
        domain = (np.zeros(grid.d), np.full(grid.d, grid.L))
        b_vals = f.get("b_values")
        if preset in ("gaussian-charge", "uniform-field-synthesis"):
            ff = FormFactor.gaussian_charge(N, domain=domain, origin=self.origin(grid))
            if b_vals is not None:
                raise ConfigError("b_values only combine with the constant preset")
            return ff
        if preset == "constant":
            if "values" not in f:
                raise ConfigError("constant preset needs values")
            return FormFactor.constant(_complex_list(f["values"]), N,
                                       None if b_vals is None else _complex_list(b_vals), domain)
        # table: rho(|k|) read from a two-column CSV
        try:
            kt, rt = load_dispersion_table(self._path(f["table"]))
        except (KeyError, OSError, ValueError) as exc:
            raise ConfigError(f"[form_factor] table: {exc}") from exc
        rho = lambda r: np.interp(r, kt, rt)  # noqa: E731
        brho = None
        if "spin_table" in f:
            kb, rb = load_dispersion_table(self._path(f["spin_table"]))
            brho = lambda r: np.interp(r, kb, rb)  # noqa: E731
        return FormFactor.from_profile(rho, N, brho, domain, self.origin(grid), label="table")

    def build_potential(self, grid):
        p = self.section("potential")
        kind = p.get("kind", "none")
        if kind == "none":
            return None
        c = np.asarray(p.get("center", grid.center.tolist() * grid.N), dtype=float)
        strength = float(p.get("strength", 0.0))
        offset = float(p.get("offset", 0.0))
        if kind == "harmonic":
            return lambda X: strength * ((X - c) ** 2).sum(axis=1) + offset
        if kind == "constant":
            return lambda X: np.full(len(X), offset)
        raise ConfigError(f"unknown potential kind {kind!r}")

    def potential_min(self, grid):
        V = self.build_potential(grid)
        return 0.0 if V is None else float(np.min(V(grid.config_points)))


def _complex_list(v):
    if isinstance(v, dict):
        return np.asarray(v.get("re", 0.0), float) + 1j * np.asarray(v.get("im", 0.0), float)
    return np.asarray(v, dtype=complex)


def load_config(path) -> ExperimentConfig:
    """Parse a ``.toml`` or ``.json`` file.

    Raises
    ------
    ConfigError
        for syntax errors and schema violations.
    OSError
        if the file cannot be read.
    """
    path = Path(path)
    text = path.read_text()
    try:
        if path.suffix.lower() == ".json":
            data = json.loads(text)
        else:
            data = tomllib.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return ExperimentConfig(data, str(path), path.parent.resolve())
