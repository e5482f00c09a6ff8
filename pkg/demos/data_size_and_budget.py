"""Distinct CPDAGs and CI-test budget as the sample size changes.

Compares the tree against classic bootstrap over RAI at a matched budget.
Run: python demos/data_size_and_budget.py [network] [seeds]
"""

import sys

from brai import builtin_network
from brai.experiments import bench_grid, summarize


def main(name="asia", seeds=5):
    net = builtin_network(name)
    sizes = [50, 100, 500, 2000]
    tree = bench_grid(net, sizes, range(seeds), arm="brai", holdout=2000)
    classic = bench_grid(net, sizes, range(seeds), arm="classic", holdout=2000)
    print(f"{name}: means over {seeds} seeds")
    print(f"{'rows':>6} {'unique':>7} {'tests':>7} {'classic l':>9} {'tree ll':>10} {'classic ll':>11}")
    keys = ("unique_cpdags", "ci_tests", "heldout_loglik", "l")
    for a, b in zip(summarize(tree, keys), summarize(classic, keys)):
        print(f"{a['n_rows']:>6} {a['unique_cpdags_mean']:>7.1f} {a['ci_tests_mean']:>7.0f} "
              f"{b['l_mean']:>9.1f} {a['heldout_loglik_mean']:>10.1f} {b['heldout_loglik_mean']:>11.1f}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "asia",
         int(sys.argv[2]) if len(sys.argv) > 2 else 5)
