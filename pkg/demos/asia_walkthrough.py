"""Learn a graph generative tree from Asia data and query it.

Run: python demos/asia_walkthrough.py [n_rows] [seed]
"""

import sys

import numpy as np

from brai import (
    BraiConfig,
    BuildContext,
    all_feature_posteriors,
    auc,
    build_tree,
    builtin_network,
    count_unique_cpdags,
    derive_rng,
    forward_sample,
    map_cpdag,
    sample_cpdag,
    top_k_paths,
)
from brai.experiments import single_rai, skeleton_f1


def main(n_rows=2000, seed=0):
    net = builtin_network("asia")
    names = net.variable_names
    data = forward_sample(net, n_rows, derive_rng(seed))
    print(f"{n_rows} rows over {', '.join(names)}")

    cfg = BraiConfig(s=3, seed=seed)
    ctx = BuildContext(cfg)
    root = build_tree(data, cfg, ctx)
    print(f"tree: {count_unique_cpdags(root)} distinct CPDAGs, {ctx.budget.count} CI tests")

    best = map_cpdag(root)
    rai, budget = single_rai(data)
    print(f"\nMAP score {best.score:.2f}, skeleton F1 {skeleton_f1(best.cpdag, net.graph):.3f}")
    print(best.cpdag.to_text(names), end="")
    print(f"single RAI score {rai.score:.2f} with {budget.count} CI tests")

    rng = np.random.default_rng(seed)
    draws = [sample_cpdag(root, rng=rng).score for _ in range(200)]
    print(f"\n200 samples: scores {min(draws):.1f} to {max(draws):.1f}")

    top = top_k_paths(root, 10)
    post = all_feature_posteriors(list(top))
    for kind in ("edge", "markov_blanket", "path"):
        print(f"AUC {kind:15s} {auc(post, net, kind):.3f}")
    strongest = sorted((p for p in post if p.feature.kind == "edge"),
                       key=lambda p: -p.probability)[:5]
    print("\nmost probable edges:")
    for p in strongest:
        f = p.feature
        print(f"  {names[f.x]} -> {names[f.y]}  {p.probability:.3f}")


if __name__ == "__main__":
    args = [int(a) for a in sys.argv[1:]]
    main(*args)
