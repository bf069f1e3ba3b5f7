"""Median total bits and Jain index as alpha grows, over 20 random layouts.

Run with ``python3 demos/fairness_tradeoff.py``; the CLI equivalent is
``cermec sweep demos/alpha_sweep.txt``.
"""

from cermec.experiments import SweepSpec, medians, run_sweep


def main():
    spec = SweepSpec("alpha", (0.0, 0.5, 1.0, 2.0, 5.0, 10.0, float("inf")), tuple(range(20)))
    med = medians(run_sweep(spec, workers=2))
    print(f"{'alpha':>6s} {'bits':>9s} {'JFI':>6s} {'gap/mean':>9s}")
    for v in spec.values:
        m = med[(v, "fair")]
        print(f"{v:6g} {m['total_bits']:9.1f} {m['jfi']:6.3f} {m['gap_ratio']:9.2e}")


if __name__ == "__main__":
    main()
