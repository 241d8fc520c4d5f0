"""Watch one dynamic Q-learning drop evolve.

Prints the network sum rate in 500-TTI windows, how often the greedy
policies still change, the bias each picocell settled on and the memory and
instruction budget of the learners.

    python demos/learning_dynamics.py [ttis] [seed]
"""

import sys

import numpy as np

from hetnet_icic.engine import SimConfig, run_drop
from hetnet_icic.learn_q import DynamicQL
from hetnet_icic.topology import ScenarioConfig, generate_layout

ttis = int(sys.argv[1]) if len(sys.argv) > 1 else 3000
seed = int(sys.argv[2]) if len(sys.argv) > 2 else 0

layout = generate_layout(ScenarioConfig(seed=seed))
scheme = DynamicQL()
res = run_drop(layout, scheme, SimConfig(num_ttis=ttis, warmup=min(500, ttis // 3)), seed)

win = 500
print(f"{'TTIs':>11s} {'sum rate Mbit/s':>16s} {'policy changes':>15s}")
for t0 in range(0, ttis, win):
    sl = slice(t0, t0 + win)
    print(f"{t0:5d}-{min(t0 + win, ttis) - 1:<5d} {res.sum_rate[sl].mean() / 1e6:16.2f} "
          f"{int(res.policy_changed[sl].sum()):15d}")
print("convergence TTI:", res.convergence_tti)

print("\npico bias (dB):", scheme.bias.value)
nm = layout.n_macro
share = np.mean(res.ue_serving[:, 0] >= nm)
print(f"UEs served by picocells: {100 * share:.0f}%")
print()
print(res.complexity.as_text(), end="")
