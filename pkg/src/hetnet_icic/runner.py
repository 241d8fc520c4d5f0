"""Experiment orchestration and command-line interface.

A run is described by a flat ``key = value`` file (``#`` starts a comment)
whose entries can be overridden by command-line flags.  ``sweep.<key> =
v1, v2`` lines (or ``--sweep key=v1,v2``) expand into a Cartesian product
of runs, each written to its own sub-directory.
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import metrics
from .engine import InvariantViolation, SimConfig, run_drop
from .icic_static import (ABS_RATIOS, ABS_REDUCTIONS_DB, FixedAbsCre, FixedCreAdaptiveAbs,
                          NoIcicCre, ResourcePartitioning)
from .association import BIAS_SET_DB
from .radio import RadioConfig
from .topology import InfeasibleLayoutError, LayoutError, ScenarioConfig, generate_layout

log = logging.getLogger(__name__)

MODES = ("RP", "NoIcicCre", "FixedAbsCre", "FixedCreAdaptiveAbs", "StaticQL", "DynamicQL",
         "Satisfaction", "SF_QL", "MF_StaticQL", "MF_DynamicQL")
DEFAULT_BIAS = {"NoIcicCre": 0.0, "FixedAbsCre": 12.0, "FixedCreAdaptiveAbs": 12.0}

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_INVARIANT = 0, 1, 2, 3


class ConfigError(ValueError):
    def __init__(self, message, key=None, line=None):
        where = "".join([f"line {line}: " if line else "", f"{key}: " if key else ""])
        super().__init__(where + message)
        self.key = key
        self.line = line


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str = "DynamicQL"
    pbs: int = 2
    ues: int = 30
    ttis: int = 5000
    warmup: int = 500
    drops: int = 10
    seed: int = 0
    seeds: tuple | None = None
    abs_ratio: float = 0.3
    abs_reduction_db: float | None = None     # None = full muting in ABS
    abs_placement: str = "prefix"
    bias_db: float | None = None              # None = mode default
    isd: float = 500.0
    fading: bool = True
    out: str = "results"
    trace: bool = False
    log_interval: int = 1
    snapshot_interval: int = 1000

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; choose from {', '.join(MODES)}", "mode")
        if self.pbs < 0:
            raise ConfigError("must be >= 0", "pbs")
        if self.ues < 1:
            raise ConfigError("must be >= 1", "ues")
        if self.ttis < 1 or not 0 <= self.warmup < self.ttis:
            raise ConfigError("need 0 <= warmup < ttis", "ttis")
        if self.drops < 1:
            raise ConfigError("must be >= 1", "drops")
        if self.seeds is not None and len(self.seeds) != self.drops:
            raise ConfigError("need one seed per drop", "seeds")
        if not any(np.isclose(self.abs_ratio, r) for r in ABS_RATIOS):
            raise ConfigError(f"must be one of {ABS_RATIOS}", "abs_ratio")
        if self.abs_reduction_db is not None and self.abs_reduction_db not in ABS_REDUCTIONS_DB:
            raise ConfigError(f"must be 'mute' or one of {ABS_REDUCTIONS_DB}", "abs_reduction_db")
        if self.bias_db is not None and self.bias_db not in BIAS_SET_DB:
            raise ConfigError(f"must be one of {BIAS_SET_DB}", "bias_db")
        if self.abs_placement not in ("prefix", "alternate"):
            raise ConfigError("must be 'prefix' or 'alternate'", "abs_placement")

    @property
    def seed_list(self) -> list[int]:
        return list(self.seeds) if self.seeds is not None else [self.seed + d for d in range(self.drops)]

    def scenario(self, seed: int) -> ScenarioConfig:
        return ScenarioConfig(num_pbs_per_sector=self.pbs, num_ues_per_sector=self.ues,
                              inter_site_distance=self.isd, seed=seed)

    def sim(self) -> SimConfig:
        return SimConfig(num_ttis=self.ttis, warmup=self.warmup, radio=RadioConfig(fading=self.fading))

    @property
    def tag(self) -> str:
        parts = [self.mode, f"P{self.pbs}"]
        if self.mode in DEFAULT_BIAS:
            parts.append(f"bias{self.effective_bias:g}")
        if self.mode == "FixedAbsCre":
            red = "mute" if self.abs_reduction_db is None else f"{self.abs_reduction_db:g}dB"
            parts += [f"abs{self.abs_ratio:g}", red]
        return "_".join(parts)

    @property
    def effective_bias(self) -> float:
        return DEFAULT_BIAS.get(self.mode, 0.0) if self.bias_db is None else self.bias_db

    def scenario_key(self) -> tuple:
        return (self.pbs, self.ues, self.ttis, self.warmup, tuple(self.seed_list), self.isd, self.fading)


def make_scheme(cfg: ExperimentConfig):
    from .ca_freq import MultiFlowDynamicQL, MultiFlowStaticQL, SingleFlowQL
    from .learn_q import DynamicQL, StaticQL
    from .learn_sat import SatisfactionScheme

    m = cfg.mode
    if m == "RP":
        return ResourcePartitioning()
    if m == "NoIcicCre":
        return NoIcicCre(cfg.effective_bias)
    if m == "FixedAbsCre":
        return FixedAbsCre(cfg.abs_ratio, cfg.effective_bias, cfg.abs_reduction_db, cfg.abs_placement)
    if m == "FixedCreAdaptiveAbs":
        return FixedCreAdaptiveAbs(cfg.effective_bias)
    return {"StaticQL": StaticQL, "DynamicQL": DynamicQL, "Satisfaction": SatisfactionScheme,
            "SF_QL": SingleFlowQL, "MF_StaticQL": MultiFlowStaticQL,
            "MF_DynamicQL": MultiFlowDynamicQL}[m]()


# --- parsing -------------------------------------------------------------------------

def _bool(v: str) -> bool:
    s = v.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _reduction(v: str):
    s = v.strip().lower()
    return None if s in ("mute", "none", "inf") else float(s)


def _bias(v: str):
    s = v.strip().lower()
    return None if s in ("default", "none") else float(s)


def _seeds(v: str):
    return tuple(int(x) for x in v.replace(",", " ").split())


PARSERS = {
    "mode": str.strip, "pbs": int, "ues": int, "ttis": int, "warmup": int, "drops": int,
    "seed": int, "seeds": _seeds, "abs_ratio": float, "abs_reduction_db": _reduction,
    "abs_placement": str.strip, "bias_db": _bias, "isd": float, "fading": _bool,
    "out": str.strip, "trace": _bool, "log_interval": int, "snapshot_interval": int,
}


def parse_value(key: str, raw: str, line=None):
    key = key.strip().replace("-", "_")
    if key not in PARSERS:
        raise ConfigError("unknown key", key, line)
    try:
        return key, PARSERS[key](raw)
    except ValueError as e:
        raise ConfigError(f"bad value {raw.strip()!r} ({e})", key, line) from None


def parse_config_text(text: str) -> tuple[dict, dict]:
    """Return (settings, sweeps) from flat ``key = value`` text."""
    settings, sweeps = {}, {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=n)
        k, v = (s.strip() for s in line.split("=", 1))
        if k.startswith("sweep."):
            key = k[len("sweep."):]
            vals = [parse_value(key, x, n)[1] for x in v.split(",") if x.strip()]
            if not vals:
                raise ConfigError("empty sweep", key, n)
            sweeps[parse_value(key, v.split(",")[0], n)[0]] = vals
        else:
            key, val = parse_value(k, v, n)
            settings[key] = val
    return settings, sweeps


def expand_sweeps(base: ExperimentConfig, sweeps: dict) -> list[ExperimentConfig]:
    if not sweeps:
        return [base]
    keys = list(sweeps)
    out = []
    for combo in itertools.product(*(sweeps[k] for k in keys)):
        out.append(replace(base, **dict(zip(keys, combo))))
    return out


def build_configs(argv=None) -> list[ExperimentConfig]:
    args = _parser().parse_args(argv)
    return configs_from_args(args)


def configs_from_args(args) -> list[ExperimentConfig]:
    settings, sweeps = {}, {}
    if getattr(args, "config", None):
        try:
            text = Path(args.config).read_text()
        except OSError as e:
            raise ConfigError(f"cannot read config file ({e})") from None
        settings, sweeps = parse_config_text(text)
    flags = {"mode": args.mode, "pbs": args.pbs, "ttis": args.ttis, "drops": args.drops,
             "seed": args.seed, "abs_ratio": args.abs_ratio,
             "abs_reduction_db": args.abs_reduction_db, "bias_db": args.bias_db,
             "out": args.out, "warmup": args.warmup}
    for k, v in flags.items():
        if v is not None:
            settings[k] = parse_value(k, str(v))[1]
    if args.trace:
        settings["trace"] = True
    for spec in args.sweep or []:
        if "=" not in spec:
            raise ConfigError(f"sweep must look like key=v1,v2 (got {spec!r})")
        k, v = spec.split("=", 1)
        vals = [parse_value(k, x)[1] for x in v.split(",") if x.strip()]
        sweeps[parse_value(k, v.split(",")[0])[0]] = vals
    try:
        base = ExperimentConfig(**settings)
    except TypeError as e:
        raise ConfigError(str(e)) from None
    cfgs = expand_sweeps(base, sweeps)
    for c in cfgs:
        c.validate()
    return cfgs


# --- running ---------------------------------------------------------------------------

@dataclass
class RunSet:
    """Results of one configuration across its drops."""

    config: ExperimentConfig
    results: list
    summary: dict
    directory: Path | None = None
    files: list = field(default_factory=list)

    @property
    def name(self) -> str:
        return self.config.tag

    @property
    def ue_throughput(self) -> np.ndarray:
        return np.concatenate([r.ue_throughput for r in self.results])


def run_config(cfg: ExperimentConfig, out_dir=None) -> RunSet:
    cfg.validate()
    sim = cfg.sim()
    results = []
    trace = None
    if cfg.trace and out_dir is not None:
        trace = metrics.TraceWriter(Path(out_dir) / "traces", cfg.log_interval,
                                    cfg.snapshot_interval)
    for d, seed in enumerate(cfg.seed_list):
        layout = generate_layout(cfg.scenario(seed))
        r = run_drop(layout, make_scheme(cfg), sim, seed, trace=trace)
        log.info("%s drop %d seed %d: mean %.3f Mbit/s", cfg.tag, d, seed,
                 r.ue_throughput.mean() / 1e6)
        results.append(r)
    summary = metrics.summarize(results)
    summary["config"] = {k: (list(v) if isinstance(v, tuple) else v)
                         for k, v in cfg.__dict__.items() if k != "out"}
    rs = RunSet(cfg, results, summary)
    if out_dir is not None:
        rs.directory = Path(out_dir)
        rs.files = write_outputs(rs, rs.directory)
    return rs


def write_outputs(rs: RunSet, d: Path) -> list[Path]:
    d.mkdir(parents=True, exist_ok=True)
    files = []
    for i, r in enumerate(rs.results):
        p = d / f"drop_{i}_ue_throughput.csv"
        metrics.write_ue_throughput_csv(p, [r])
        files.append(p)
    p = d / "ue_throughput.csv"
    metrics.write_ue_throughput_csv(p, rs.results)
    files.append(p)
    p = d / "cdf.csv"
    metrics.write_cdf_csv(p, rs.ue_throughput)
    files.append(p)
    p = d / "convergence.csv"
    metrics.write_convergence_csv(p, rs.results)
    files.append(p)
    p = d / "complexity.txt"
    metrics.write_complexity_txt(p, rs.results[0].complexity)
    files.append(p)
    p = d / "summary.json"
    metrics.write_summary_json(p, rs.summary)
    files.append(p)
    return files


def run_experiment(configs, out=None) -> list[RunSet]:
    """Run every configuration; a sweep writes one sub-directory per configuration."""
    configs = [configs] if isinstance(configs, ExperimentConfig) else list(configs)
    sets = []
    for cfg in configs:
        root = Path(out if out is not None else cfg.out)
        d = root / cfg.tag if len(configs) > 1 else root
        sets.append(run_config(cfg, d))
    return sets


def compare_report(sets, baseline: str | None = None) -> list[dict]:
    """Relative gain (%) of each set over ``baseline`` in mean, median and 5th percentile.

    ``sets`` holds RunSet objects or summary dicts; all must share one scenario.
    """
    items = []
    for s in sets:
        if isinstance(s, RunSet):
            items.append((s.name, s.summary))
        else:
            items.append((s.get("name") or s["config"]["mode"], s))
    if len(items) < 2:
        raise ValueError("need at least two result sets")
    keys = {_scenario_of(sm) for _, sm in items}
    if len(keys) != 1:
        raise ValueError("result sets come from different scenarios")
    names = [n for n, _ in items]
    base_name = baseline if baseline is not None else names[0]
    if base_name not in names:
        raise ValueError(f"unknown baseline {base_name!r}")
    base = dict(items)[base_name]["ue_throughput_bps"]
    rows = []
    for n, sm in items:
        h = sm["ue_throughput_bps"]
        row = {"scheme": n, "baseline": base_name}
        for k in ("mean", "p50", "p5"):
            row[k] = h[k]
            row[f"gain_{k}_pct"] = 100.0 * (h[k] / base[k] - 1.0) if base[k] > 0 else float("inf")
        rows.append(row)
    return rows


def _scenario_of(summary: dict) -> tuple:
    c = summary["config"]
    return (c["pbs"], c["ues"], c["ttis"], c["warmup"], tuple(summary["seeds"]), c["isd"],
            c["fading"])


def format_report(rows) -> str:
    head = f"{'scheme':32s} {'mean Mb/s':>10s} {'gain':>8s} {'p50':>8s} {'gain':>8s} {'p5':>8s} {'gain':>8s}"
    lines = [head]
    for r in rows:
        lines.append(f"{r['scheme']:32s} {r['mean'] / 1e6:10.3f} {r['gain_mean_pct']:7.1f}% "
                     f"{r['p50'] / 1e6:8.3f} {r['gain_p50_pct']:7.1f}% "
                     f"{r['p5'] / 1e6:8.3f} {r['gain_p5_pct']:7.1f}%")
    return "\n".join(lines)


# --- CLI ---------------------------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hetnet-icic",
                                description="Two-tier HetNet downlink ICIC simulator.")
    p.add_argument("--config", help="flat key = value configuration file")
    p.add_argument("--mode", help=f"ICIC scheme: {', '.join(MODES)}")
    p.add_argument("--pbs", help="picocells per macro sector")
    p.add_argument("--ttis", help="TTIs per drop")
    p.add_argument("--warmup", help="TTIs excluded from throughput statistics")
    p.add_argument("--drops", help="number of drops")
    p.add_argument("--seed", help="seed of the first drop (drop d uses seed+d)")
    p.add_argument("--abs-ratio", dest="abs_ratio", help="ABS ratio (0.1, 0.3 or 0.7)")
    p.add_argument("--abs-reduction-db", dest="abs_reduction_db",
                   help="macro power reduction in ABS (dB) or 'mute'")
    p.add_argument("--bias-db", dest="bias_db", help="picocell CRE bias (0, 6 or 12 dB)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--sweep", action="append", help="key=v1,v2 (repeatable)")
    p.add_argument("--trace", action="store_true", help="write per-TTI traces")
    p.add_argument("--compare", nargs="+", metavar="DIR",
                   help="compare existing result directories instead of running")
    p.add_argument("--baseline", help="baseline scheme tag for --compare")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.compare:
            sums = []
            for d in args.compare:
                sm = json.loads((Path(d) / "summary.json").read_text())
                sm["name"] = Path(d).name
                sums.append(sm)
            print(format_report(compare_report(sums, args.baseline)))
            return EXIT_OK
        cfgs = configs_from_args(args)
        sets = run_experiment(cfgs)
        for s in sets:
            h = s.summary["ue_throughput_bps"]
            print(f"{s.name}: mean {h['mean'] / 1e6:.3f} p50 {h['p50'] / 1e6:.3f} "
                  f"p5 {h['p5'] / 1e6:.3f} Mbit/s -> {s.directory}")
        if len(sets) > 1:
            print(format_report(compare_report(sets)))
    except (ConfigError, LayoutError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleLayoutError as e:
        print(f"infeasible scenario: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except InvariantViolation as e:
        print(f"invariant violation: {e}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK
