"""Run every model config in configs/ and tabulate how well each invariant holds.

    python scripts/run_conservation.py [--outdir results/] [--steps N]

Writes one conservation CSV per config (same columns as ``mimetic-fd run``)
and prints the relative drift of E_total, mass and momentum.
"""

import argparse
from pathlib import Path

import numpy as np

from mimetic_fd.audit import conservation_run
from mimetic_fd.cli import rows_to_csv
from mimetic_fd.config import initial_state, load_config

ROOT = Path(__file__).resolve().parents[1]


def drift(values):
    values = np.asarray(values)
    ref = abs(values[0])
    dev = np.max(np.abs(values - values[0]))
    return dev / ref if ref > 0 else dev


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--configs", type=Path, default=ROOT / "configs")
    ap.add_argument("--outdir", type=Path, default=ROOT / "results")
    ap.add_argument("--steps", type=int, help="override the configured step count")
    args = ap.parse_args()
    args.outdir.mkdir(parents=True, exist_ok=True)

    print(f"{'config':<28}{'scheme':<20}{'steps':>7}{'E_total':>12}{'mass':>12}{'momentum':>12}")
    for path in sorted(args.configs.glob("*.toml")):
        if "convergence" in path.stem:
            continue
        cfg = load_config(path)
        steps = args.steps if args.steps is not None else cfg.steps
        rows = conservation_run(initial_state(cfg), cfg.integrator, steps, max(1, steps // 200))
        (args.outdir / f"{path.stem}.csv").write_text(rows_to_csv(rows))
        d = [drift([getattr(r, k) for r in rows]) for k in ("E_total", "mass", "momentum")]
        print(f"{path.stem:<28}{cfg.integrator.scheme:<20}{steps:>7}" + "".join(f"{x:>12.2e}" for x in d))


if __name__ == "__main__":
    main()
