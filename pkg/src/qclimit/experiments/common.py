"""Helpers shared by the experiment drivers."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..field_model import coupling_components

__all__ = ["NumericalError", "ordered_map", "probe_points", "lower_bound_constant"]


class NumericalError(RuntimeError):
    """A computation could not meet its numerical contract (exit code 1)."""


def ordered_map(fn, items, workers=1):
    """``map`` over ``items``; results keep input order for any worker count."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def probe_points(grid, per_axis=5):
    """``per_axis^d`` points at fractions ``(i + 1) / (per_axis + 1)`` of the box."""
    t = grid.L * (np.arange(1, per_axis + 1) / (per_axis + 1))
    mesh = np.meshgrid(*([t] * grid.d), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def lower_bound_constant(grid, ff, ms, v_min, c_sup):
    """Constant ``C`` with ``lambda_0(H_eps) >= -C`` along a family.

    The kinetic part plus the field variance is non-negative, the potential
    is at least ``v_min`` and, by Cauchy-Schwarz,
    ``|B_eps,i(x)| <= 2 |F_b,i(x) / sqrt(omega)| sqrt(c_eps)``, so

        C = max(0, -v_min) + sup_x sum_i |sigma_i| 2 |F_b,i(x)/sqrt(omega)| sqrt(sup c_eps).
    """
    C = max(0.0, -float(v_min))
    if ff.has_spin_coupling and grid.s > 1:
        Fb = coupling_components(ms, ff, 0, grid.points, "b")  # (P, d, M')
        norms = np.sqrt((np.abs(Fb) ** 2 / ms.fock_omega).sum(axis=2))  # (P, d)
        sig = np.array([np.linalg.norm(s, 2) for s in grid.sigma])
        C += float((norms @ sig).max()) * 2.0 * np.sqrt(max(c_sup, 0.0)) * ff.n_particles
    return C
