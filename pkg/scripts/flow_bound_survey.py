"""How often does ||B^T L^+ w||_2 <= ||B^T w||_2 / lambda_2 fail on weighted graphs?

The bound holds on unweighted graphs (B^T L^+ B is then an orthogonal
projection).  With weights it can fail; this counts violations and prints
the worst instance found.
"""

import argparse

import numpy as np

from cutsync.graph import random_connected_graph
from cutsync.sync_tests import OscillatorSystem, edge_flow


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=5000)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--max-n", type=int, default=10)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    for weighted in (False, True):
        bad, worst = 0, (np.inf, None)
        for _ in range(args.trials):
            g = random_connected_graph(int(rng.integers(2, args.max_n + 1)), rng,
                                       p_extra=rng.uniform(0, 0.8), weighted=weighted)
            w = rng.normal(size=g.n)
            w -= w.mean()
            slack = (np.linalg.norm(g.B.T @ w) / g.laplacian.lambda2
                     - np.linalg.norm(edge_flow(OscillatorSystem(g, w))))
            bad += slack < -1e-9
            if slack < worst[0]:
                worst = (slack, g)
        print(f"weighted={weighted}: {bad}/{args.trials} violations, min slack {worst[0]:.3e}")
        if bad:
            print("  worst graph:", worst[1].to_dict())


if __name__ == "__main__":
    main()
