"""
Expectation equivalence in the tabular setting
==============================================

Distributional and expected learners are driven by the same sample stream,
and we track how far apart their mean predictions drift.

Run with ``python notebooks/01_expectation_equivalence.py``.
"""

# %%
# Projection keeps the mean
# -------------------------
# A three-atom mixture projected onto the integer grid 0..4 keeps its mean.
import numpy as np

from coupledrl import GeneralDiscrete, Support, cramer_project, expectation

grid = Support.integer(0, 4)
mix = GeneralDiscrete(np.array([0.3, 1.7, 3.25]), np.array([0.2, 0.5, 0.3]))
proj = cramer_project(mix, grid)
print("masses on 0..4:", np.round(proj.mass, 4))
print(f"mean before {expectation(mix):.6f}, after {expectation(proj):.6f}")

# %%
# Operators on a random MDP
# -------------------------
# Iterating the projected distributional operator alongside the expected one
# keeps the two means within float rounding. The unprojected operator does too,
# but its atom count grows geometrically, so only a few iterations fit.
from coupledrl.envs import random_finite, random_policy
from coupledrl.harness import operator_gaps
from coupledrl.tabular import SupportOverflowError

mdp = random_finite(5, 2, 3, seed=0)
pi = random_policy(mdp, 0)
support = Support.uniform(-10, 10, 51)
q0 = np.zeros((mdp.n_states, mdp.n_actions))
gaps = operator_gaps(mdp, pi, "evaluation", 200, support, q0)
print(f"projected operator, 200 iterations: max gap {gaps.max():.2e}")
for it in range(1, 30):
    try:
        operator_gaps(mdp, pi, "evaluation", it, None, q0)
    except SupportOverflowError as exc:
        print(f"unprojected operator stops at iteration {it}: {exc}")
        break

# %%
# Sample-based updates on one stream
# ----------------------------------
# SARSA against the CDF-gradient rule (step alpha / 2c) and against the
# PMF-gradient rule. Only the first stays coupled.
from coupledrl import verify_proposition

for pid in ("P6", "P7"):
    rep = verify_proposition(pid, seeds=[0], config={"steps": 2000} if pid == "P6" else None)
    run = rep.runs[0]
    print(f"{pid}: {rep.description}; verdict {run.verdict}, max gap {run.max_gap:.2e}")

# %%
# The PMF example by hand
# -----------------------
# Prediction (1/3, 1/3, 1/3) on atoms 0, 1, 2 and target (1/2, 0, 1/2). The
# PMF-gradient direction moves mass off the middle atom only, so the mean
# drops from 1 to 1 - alpha/3 although the target mean is also 1.
from coupledrl.harness import pmf_golden

for alpha in (0.1, 0.5, 1.0):
    g = pmf_golden(alpha)
    print(f"alpha={alpha}: direction {np.round(g['gradient'], 4)}, mean {g['E_before']:.4f} -> {g['E_after']:.4f}")
