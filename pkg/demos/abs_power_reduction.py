"""Macro power reduction in ABS subframes instead of full blanking.

For a fixed ABS ratio and CRE bias, sweep the reduction from 0 dB (no ABS at
all) through 24 dB and full muting, and show how cell-edge and mean UE
throughput trade off.

    python demos/abs_power_reduction.py [ttis] [drops]
"""

import sys

from hetnet_icic.icic_static import ABS_REDUCTIONS_DB
from hetnet_icic.runner import ExperimentConfig, run_config

ttis = int(sys.argv[1]) if len(sys.argv) > 1 else 1000
drops = int(sys.argv[2]) if len(sys.argv) > 2 else 2

print(f"{'reduction':>10s} {'mean':>8s} {'p50':>8s} {'p5':>8s}   Mbit/s, ABS ratio 0.3, bias 12 dB")
for red in list(ABS_REDUCTIONS_DB) + [None]:
    cfg = ExperimentConfig(mode="FixedAbsCre", abs_ratio=0.3, abs_reduction_db=red, bias_db=12.0,
                           ttis=ttis, warmup=min(200, ttis // 3), drops=drops)
    h = run_config(cfg).summary["ue_throughput_bps"]
    label = "mute" if red is None else f"{red:g} dB"
    print(f"{label:>10s} {h['mean'] / 1e6:8.3f} {h['p50'] / 1e6:8.3f} {h['p5'] / 1e6:8.3f}", flush=True)
