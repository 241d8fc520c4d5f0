"""Compare the time-domain ICIC schemes on a few short drops.

Runs every scheme on the same layouts and seeds and prints mean, median and
5th-percentile UE throughput relative to resource partitioning.

    python demos/compare_schemes.py [ttis] [drops]
"""

import sys

from hetnet_icic.runner import ExperimentConfig, compare_report, format_report, run_config

ttis = int(sys.argv[1]) if len(sys.argv) > 1 else 1500
drops = int(sys.argv[2]) if len(sys.argv) > 2 else 2

modes = ["RP", "NoIcicCre", "FixedAbsCre", "FixedCreAdaptiveAbs", "StaticQL", "DynamicQL",
         "Satisfaction"]
sets = []
for mode in modes:
    cfg = ExperimentConfig(mode=mode, ttis=ttis, warmup=min(500, ttis // 3), drops=drops)
    rs = run_config(cfg)
    print(f"{rs.name:28s} done", flush=True)
    sets.append(rs)

print()
print(format_report(compare_report(sets, baseline=sets[0].name)))
