#!/usr/bin/env python3
"""
Reproduce both steady-state phase diagrams (T = 0 and T = 0.05 ω0) in one go.
"""
import os
import sys

from rabihubbard.cli import EXIT_OK, main

FIGURES = [
    ("T = 0", "configs/fig1.toml", "results/fig1.csv", "results/fig1.svg"),
    ("T = 0.05 ω0", "configs/fig2.toml", "results/fig2.csv", "results/fig2.svg"),
]


def run_figures(extra_args=()):
    """Run the sweep for each figure config; stop at the first failure."""
    for label, config, out, heatmap in FIGURES:
        print(f"🚀 Sweeping phase diagram at {label} ({config})")
        code = main(["sweep", "--config", config, "--out", out, "--heatmap", heatmap, *extra_args])
        if code != EXIT_OK:
            print(f"🚨 Sweep for {label} exited with code {code}")
            return code
        print(f"✅ {label}: grid in {out}, heatmap in {heatmap}")
    print("\n📊 Both phase diagrams written to results/")
    return EXIT_OK


if __name__ == "__main__":
    # Change to script directory
    os.chdir(os.path.dirname(os.path.abspath(__file__)))
    sys.exit(run_figures(sys.argv[1:]))
