#!/usr/bin/env python3
"""Run the pulse-translation estimation experiment and emit its artifacts.

Equivalent to `nonlocalopt pulse`, kept as a plain script for interactive
tinkering with the knobs below.
"""

import argparse
from pathlib import Path

import numpy as np

from nonlocalopt import emit_csv, emit_plot_svg
from nonlocalopt.pulse import run_pulse_suite


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out/pulse-script", type=Path)
    parser.add_argument("--alpha", default=0.1, type=float)
    parser.add_argument("--max-iters", default=200, type=int)
    parser.add_argument("--theta0", default=0.1, type=float)
    args = parser.parse_args()

    results = run_pulse_suite(
        alpha=args.alpha, max_iters=args.max_iters, theta0=args.theta0
    )
    curves, labels = [], []
    print(f"{'run':<14} {'theta_hat':>9} {'|err|':>8} {'to_tol':>6} {'monotone':>8}")
    for cfg, trace, summary in results:
        label = f"{cfg.family}-n{cfg.n}"
        emit_csv(trace, args.out / f"pulse_{cfg.family}_n{cfg.n}.csv")
        curves.append(np.abs(trace.iterates[:, 0] - cfg.theta_star))
        labels.append(label)
        print(
            f"{label:<14} {summary.theta_hat:>9.4f} {summary.abs_error:>8.4f} "
            f"{str(summary.iterations_to_tolerance):>6} {str(summary.objective_monotone):>8}"
        )
    svg = emit_plot_svg(
        curves, labels, args.out / "pulse_convergence.svg",
        title="pulse shift recovery", ylabel="|theta - theta*|",
    )
    print(f"wrote {svg}")


if __name__ == "__main__":
    main()
