"""Run every epsilon sweep with its default settings and write one CSV per sweep.

    python3 scripts/run_sweeps.py --out results/ --a -0.5
"""
import argparse
import time
from pathlib import Path

from fracphase.experiments import EXPERIMENTS, ExperimentConfig, emit, run


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="results", help="output directory")
    parser.add_argument("--a", type=float, default=-0.5)
    parser.add_argument("--grid", type=int, default=16)
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for tag in EXPERIMENTS:
        start = time.perf_counter()
        report = run(ExperimentConfig(tag, a=args.a, grid=args.grid))
        emit(report, out / f"{tag}.csv", "csv")
        last = report.records[-1]
        print(f"{tag:16s} eps={last.eps:.4g} energy={last.energy_total:.6f} "
              f"limit={last.predicted_limit:.6f} gap={last.relative_gap:+.3%} ({time.perf_counter() - start:.1f}s)")


if __name__ == "__main__":
    main()
