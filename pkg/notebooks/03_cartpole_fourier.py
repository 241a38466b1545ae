"""
CartPole with Fourier features
==============================

A short version of the desk-scale comparison: DQN-lite, S51-lite with the
Cramér loss taken on the CDF outputs, and the same with the loss taken on the
PMF outputs. The full runs live in ``configs/``; this script trims them to a
single seed and 150 episodes so it finishes in under a minute.

Run with ``python notebooks/03_cartpole_fourier.py [out.svg]``.
"""

# %%
# Configs
# -------
import sys
from pathlib import Path

import numpy as np

from coupledrl.config import ExperimentConfig
from coupledrl.experiments import run_algorithm

configs = Path(__file__).resolve().parent.parent / "configs"
runs = {
    "dqn-lite": ExperimentConfig.load(configs / "cartpole_dqn.txt"),
    "s51-lite-cdf": ExperimentConfig.load(configs / "cartpole_s51_cdf.txt"),
    "s51-lite-pmf": ExperimentConfig.load(configs / "cartpole_s51_pmf.txt"),
}
EPISODES = 150

# %%
# Learning curves
# ---------------
curves = {}
for algo, cfg in runs.items():
    cfg = cfg.replace(seeds=(0,), episodes=EPISODES, early_stop="off")
    curves[algo] = np.array([r.ret for r in run_algorithm(cfg, algo)])
    print(f"{algo:13s} mean return over the last 20 episodes: {curves[algo][-20:].mean():6.1f}")

# %%
# Plot
# ----
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

fig, ax = plt.subplots(figsize=(6, 3.5))
for algo, ret in curves.items():
    smooth = np.convolve(ret, np.ones(10) / 10, mode="valid")
    ax.plot(np.arange(len(smooth)) + 9, smooth, label=algo)
ax.set_xlabel("episode")
ax.set_ylabel("return (10-episode mean)")
ax.legend()
fig.tight_layout()
out = sys.argv[1] if len(sys.argv) > 1 else "cartpole_fourier.svg"
fig.savefig(out)
print("wrote", out)
