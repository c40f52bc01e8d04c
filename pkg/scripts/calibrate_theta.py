"""Sweep the GP kernel theta for the two-cluster simulation.

For each theta prints the largest cross-cluster kernel entry at p_inter = 0,
the median within-cluster entry, and the seed-averaged MSE ratio at
p_inter = 0 and 0.8. The default in simbench was read off this table.

    python3 scripts/calibrate_theta.py --seeds 20
"""

import argparse

import numpy as np

from scattersample.gp import GpHyper, kernel_matrix
from scattersample.simbench import SimConfig, generate_sim_graph, run_simulation


def kernel_stats(theta, seed):
    sim = generate_sim_graph(SimConfig(p_inter=0.0, seed=seed))
    k = kernel_matrix(sim.propagated, sim.propagated, GpHyper(np.array([theta])))
    same = sim.cluster_of[:, None] == sim.cluster_of[None, :]
    return k[~same].max(), np.median(k[same])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--thetas", default="0.5,1,2,4,8,16,32")
    args = ap.parse_args()
    print("theta,max_cross_kernel,median_within_kernel,ratio_p0,ratio_p0.8")
    for theta in (float(t) for t in args.thetas.split(",")):
        cross, within = kernel_stats(theta, 0)
        ratios = []
        for p in (0.0, 0.8):
            rs = [run_simulation(SimConfig(p_inter=p, seed=s, gp_theta=theta)).ratio
                  for s in range(args.seeds)]
            ratios.append(np.mean(rs))
        print(f"{theta:g},{cross:.3e},{within:.3f},{ratios[0]:.3f},{ratios[1]:.3f}")


if __name__ == "__main__":
    main()
