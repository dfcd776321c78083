"""Effective fields of coherent and number states.

A coherent state has the same mean vector potential as the classical field
it is built from, at every eps.  Its variance term shrinks linearly in eps.
A number state has zero mean field, but its second moment stays near 2, so
the variance carries all of the energy.

    python demos/effective_fields.py
"""
import numpy as np

from qclimit.field_model import FormFactor, build_mode_set, mode_set_from_nodes
from qclimit.fock import FockSpace, coherent_state, number_state, required_nmax
from qclimit.measures import PointCloud, effective_fields_eps, effective_fields_mu
from qclimit.wick import WignerMeasure

ms = build_mode_set(2, [1.0], 2)
ff = FormFactor.gaussian_charge()
z = np.array([0.30 + 0.10j, -0.20 + 0.25j])
x = PointCloud([[0.1, -0.2], [0.0, 0.3]])
limit = effective_fields_mu(WignerMeasure.point_mass(z), ff, ms, x)

print("coherent family")
print(f"{'eps':>8} {'N_max':>6} {'max|A - A_mu|':>14} {'W at x0':>12}")
for eps in (1 / 4, 1 / 8, 1 / 16, 1 / 32):
    fs = FockSpace(2, required_nmax(np.vdot(z, z).real, eps, 1e-12), eps)
    f = effective_fields_eps(coherent_state(fs, z, 1e-12), fs, ff, ms, x)
    print(f"{eps:8.5f} {fs.n_max:6d} {np.abs(f.A - limit.A).max():14.2e} {f.W[0, 0]:12.6f}")

print("\nnumber family |1/eps> in one mode with constant coupling")
ms1 = mode_set_from_nodes([[1.0, 0.0]], [1.0])
for eps in (1 / 4, 1 / 8, 1 / 16):
    n = round(1 / eps)
    fs = FockSpace(1, n + 2, eps)
    f = effective_fields_eps(number_state(fs, [n]), fs, FormFactor.constant([1.0]), ms1, x)
    print(f"eps = {eps:.4f}: |A| = {np.abs(f.A).max():.1e}, phi2 = {f.phi2[0, 0]:.6f} (2 + eps)")
