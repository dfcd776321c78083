"""A uniform magnetic field synthesized from many photon modes.

Point masses on a shrinking family of modes reproduce a constant field B = 1
inside a disk.  The low spectrum of the resulting Schroedinger operator
approaches the Landau levels 1, 3, 5.

    python demos/uniform_field.py      # about 10 s
"""
from pathlib import Path

from qclimit.experiments import load_config, run_uniform_field

rep = run_uniform_field(load_config(Path(__file__).parent / "configs" / "uniform_field.toml"))
for row in rep.rows:
    print(f"eps = {row['eps']:.4g}  modes = {row['n_modes']:4d}  "
          f"probe error = {row['probe_err']:.3e}  max rel. gap = {row['max_rel_gap']:.2e}")
s = rep.summary
print("reference levels:", ", ".join(f"{v:.4f}" for v in s["landau_levels"][:3]))
print(f"Landau gap {s['landau_gap']:.4f}")
