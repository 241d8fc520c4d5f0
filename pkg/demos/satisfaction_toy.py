"""Satisfaction learning on a two-player, four-level power game.

Player i gets p_i / (0.25 p_j + 1) and is satisfied at 1.6.  The only
profiles satisfying both are equal power at one of the two top levels.
Each run starts from uniform distributions and stops when the equilibrium
detector has seen 500 frozen, fully satisfied iterations.

    python demos/satisfaction_toy.py [runs]
"""

import sys
from collections import Counter

import numpy as np

from hetnet_icic.learn_sat import EquilibriumDetector, SatLearnerState, sat_select_action

LEVELS = np.array([1.0, 2.0, 3.0, 4.0])
TARGET, U_MAX = 1.6, 4.0


def utilities(a0, a1):
    p0, p1 = LEVELS[a0], LEVELS[a1]
    return p0 / (0.25 * p1 + 1), p1 / (0.25 * p0 + 1)


runs = int(sys.argv[1]) if len(sys.argv) > 1 else 20
ends, times = Counter(), []
for seed in range(runs):
    rng = np.random.default_rng(seed)
    players = [SatLearnerState(np.full(4, 0.25)) for _ in range(2)]
    det = EquilibriumDetector(500)
    u = (0.0, 0.0)
    for t in range(100_000):
        acts = [int(sat_select_action(p, ui, U_MAX, TARGET, rng)) for p, ui in zip(players, u)]
        u = utilities(*acts)
        if det.update(t, acts, [x >= TARGET for x in u]):
            break
    ends[tuple(float(x) for x in LEVELS[acts])] += 1
    times.append(det.fired_at - 499)

print("equilibrium reached (power levels):", dict(ends))
print(f"iterations until the profile froze: median {np.median(times):.0f}, max {max(times)}")
