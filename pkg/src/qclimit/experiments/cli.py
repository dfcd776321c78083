"""Command-line entry point ``qclimit``.

Exit codes: 0 success, 1 numerical failure, 2 I/O error, 3 configuration error.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time

import numpy as np

from .common import NumericalError
from .config import ConfigError, load_config
from .convergence import run_convergence
from .ground_state import run_ground_state
from .report import emit_report, write_meta
from .uniform_field import run_uniform_field

__all__ = ["main", "selftest"]

log = logging.getLogger("qclimit")

RUNNERS = {
    "convergence": run_convergence,
    "uniform-field": run_uniform_field,
    "ground-state": run_ground_state,
}


def selftest() -> list:
    """Quick internal consistency checks; returns ``(name, ok, detail)`` tuples."""
    from ..fock import FockSpace, annihilation, coherent_state, creation
    from ..schrodinger import ParticleGrid, dirichlet_laplacian, lowest_eigs
    from ..wick import PolySymbol, quantize

    out = []
    rng = np.random.default_rng(0)
    fs = FockSpace(3, 6, 0.25)
    f = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    g = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    comm = annihilation(fs, f).commutator(creation(fs, g)).toarray()
    low = fs.totals <= fs.n_max - 1
    err = np.abs(comm[np.ix_(low, low)] - fs.eps * np.vdot(f, g) * np.eye(low.sum())).max()
    out.append(("ccr", err < 1e-12, f"{err:.2e}"))
    w = quantize(fs, PolySymbol.from_product(xis=[f])).matrix - annihilation(fs, f).matrix
    werr = abs(w).max() if w.nnz else 0.0
    out.append(("wick a(f)", werr < 1e-12, f"{werr:.2e}"))
    fs1 = FockSpace(1, 40, 0.16)
    mean = annihilation(fs1, [1.0]).expectation(coherent_state(fs1, [0.8]))
    out.append(("coherent <a>", abs(mean - 0.8) < 1e-9, f"{mean.real:.12f}"))
    lam = lowest_eigs(dirichlet_laplacian(ParticleGrid(2, 1.0, 32)), 1).eigenvalues[0]
    out.append(("laplacian", abs(lam / (2 * np.pi**2) - 1) < 5e-3, f"{lam:.6f}"))
    return out


def _build_parser():
    p = argparse.ArgumentParser(prog="qclimit", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in RUNNERS:
        sp = sub.add_parser(name, help=f"run the {name} experiment")
        sp.add_argument("--config", required=True, help="TOML or JSON experiment file")
        sp.add_argument("--output", help="override [experiment] output_dir")
        sp.add_argument("--workers", type=int, help="override [experiment] workers")
    sub.add_parser("selftest", help="run internal consistency checks")
    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "selftest":
        results = selftest()
        for name, ok, detail in results:
            print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        return 0 if all(ok for _, ok, _ in results) else 1

    try:
        cfg = load_config(args.config)
        if cfg.kind != args.command:
            raise ConfigError(f"config declares kind={cfg.kind!r}, command is {args.command!r}")
        if args.workers is not None:
            cfg.data.setdefault("experiment", {})["workers"] = args.workers
        out_dir = cfg.output_dir if args.output is None else args.output
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2

    t0 = time.perf_counter()
    try:
        report = RUNNERS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3
    except (NumericalError, ArithmeticError, MemoryError, RuntimeError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    elapsed = time.perf_counter() - t0
    try:
        emit_report(report, out_dir)
        write_meta(out_dir, cfg.digest(), {"run": elapsed},
                   {"command": args.command, "config": cfg.source, "seed": cfg.seed})
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2
    log.info("wrote %s", out_dir)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
