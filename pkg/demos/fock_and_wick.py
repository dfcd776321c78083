"""Truncated Fock space, ladder operators and Wick quantization.

Builds a small two-mode space, checks the scaled commutation relation away
from the truncation edge, and shows that quantizing the symbol |z_0|^2 gives
the scaled number operator of mode 0.

    python demos/fock_and_wick.py
"""
import numpy as np

from qclimit.fock import FockSpace, annihilation, creation, dgamma, number_state
from qclimit.wick import PolySymbol, quantize

eps = 0.25
fs = FockSpace(2, 6, eps)
print(f"two modes, N_max = 6, eps = {eps}: dimension {fs.dim}")

f = np.array([1.0, 0.5j])
g = np.array([0.3, -1.0])
comm = annihilation(fs, f).commutator(creation(fs, g)).matrix.toarray()
low = fs.totals <= fs.n_max - 1
err = np.abs(comm[np.ix_(low, low)] - eps * np.vdot(f, g) * np.eye(low.sum())).max()
print(f"[a(f), a*(g)] - eps<f,g> below the top sector: {err:.1e}")

N0 = quantize(fs, PolySymbol.quadratic_form(np.diag([1.0, 0.0])))
psi = number_state(fs, [3, 1])
print(f"<|z_0|^2>_Wick in |3,1>: {N0.expectation(psi).real:.4f}  (eps * 3 = {3 * eps})")
same = np.abs(N0.toarray() - dgamma(fs, [1.0, 0.0]).toarray()).max()
print(f"Wick(|z_0|^2) vs dGamma(diag(1, 0)): max difference {same:.1e}")
