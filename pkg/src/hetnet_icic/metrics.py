"""Throughput statistics, convergence traces, complexity accounting and output files."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np


def throughput_percentile(values, q: float) -> float:
    """q-th percentile of per-UE mean throughput, linear interpolation (type 7)."""
    v = np.asarray(values, float).ravel()
    if v.size == 0:
        raise ValueError("no throughput samples")
    return float(np.percentile(v, q, method="linear"))


def empirical_cdf(values) -> tuple[np.ndarray, np.ndarray]:
    v = np.sort(np.asarray(values, float).ravel())
    if v.size == 0:
        raise ValueError("no throughput samples")
    return v, np.arange(1, v.size + 1) / v.size


def headline(values) -> dict:
    v = np.asarray(values, float)
    return {
        "mean": float(v.mean()),
        "p50": throughput_percentile(v, 50),
        "p5": throughput_percentile(v, 5),
        "num_ues": int(v.size),
    }


# --- complexity -----------------------------------------------------------

def ops_q(n_actions: int) -> int:
    """Instructions of one Q-learning iteration on an |A|-action row."""
    return 4 * n_actions + 6


def ops_sat(n_actions: int) -> int:
    """Instructions of one satisfaction-learning probability update."""
    return 2 * n_actions + 7


@dataclass(frozen=True)
class ComplexityReport:
    n_states_macro: int
    n_actions_macro: int
    n_states_pico: int
    n_actions_pico: int
    num_rbs: int
    memory_units_q: int
    memory_units_sat: int
    ops_q_macro: int
    ops_q_pico: int
    ops_sat_pico: int

    def as_text(self) -> str:
        return "\n".join(f"{k} = {v}" for k, v in asdict(self).items()) + "\n"


def complexity_report(n_states_macro: int, n_actions_macro: int, n_states_pico: int,
                      n_actions_pico: int, num_rbs: int) -> ComplexityReport:
    """Memory (table entries) and per-iteration instruction counts.

    A passive macro (no learning) is described with zero actions and
    contributes nothing to the Q-learning memory.
    """
    for n in (n_states_pico, n_actions_pico, num_rbs):
        if n <= 0:
            raise ValueError("sizes must be positive")
    if n_states_macro < 0 or n_actions_macro < 0:
        raise ValueError("sizes must be nonnegative")
    mem_q = (n_states_macro * n_actions_macro + n_states_pico * n_actions_pico) * num_rbs
    return ComplexityReport(
        n_states_macro, n_actions_macro, n_states_pico, n_actions_pico, num_rbs,
        memory_units_q=mem_q,
        memory_units_sat=n_actions_pico * num_rbs,
        ops_q_macro=ops_q(n_actions_macro) if n_actions_macro else 0,
        ops_q_pico=ops_q(n_actions_pico),
        ops_sat_pico=ops_sat(n_actions_pico),
    )


# --- convergence ------------------------------------------------------------

def convergence_trace(result) -> tuple[np.ndarray, int]:
    """Per-TTI network sum rate and the convergence iteration of a drop."""
    return np.asarray(result.sum_rate), int(result.convergence_tti)


def tier_cell_throughput(result) -> dict:
    """Tier sum throughput divided by the number of cells of that tier."""
    lay = result.layout
    bs = np.asarray(result.bs_throughput)
    out = {"macro": float(bs[:lay.n_macro].sum() / lay.n_macro)}
    out["pico"] = float(bs[lay.n_macro:].sum() / lay.n_pico) if lay.n_pico else 0.0
    return out


# --- output files -----------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def write_ue_throughput_csv(path, results) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["drop", "seed", "ue", "tier", "serving", "throughput_bps"])
        for d, r in enumerate(results):
            n_macro = r.layout.n_macro
            for u, tp in enumerate(r.ue_throughput):
                srv = [int(s) for s in r.ue_serving[u]]
                tier = "macro" if all(0 <= s < n_macro for s in srv) else (
                    "pico" if all(s >= n_macro for s in srv) else "dual")
                w.writerow([d, r.seed, u, tier, "/".join(map(str, srv)), _fmt(tp)])


def write_cdf_csv(path, values) -> None:
    x, F = empirical_cdf(values)
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["value", "cumulative_probability"])
        for a, b in zip(x, F):
            w.writerow([_fmt(a), _fmt(b)])


def write_convergence_csv(path, results) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["drop", "seed", "tti", "sum_rate_bps", "policy_changed"])
        for d, r in enumerate(results):
            ch = r.policy_changed
            for k, s in enumerate(r.sum_rate):
                w.writerow([d, r.seed, k, _fmt(s), "" if ch is None else int(ch[k])])


def write_complexity_txt(path, report: ComplexityReport | None) -> None:
    Path(path).write_text("not a learning scheme\n" if report is None else report.as_text())


def summarize(results) -> dict:
    tp = np.concatenate([r.ue_throughput for r in results])
    conv = [int(r.convergence_tti) for r in results]
    tiers = [tier_cell_throughput(r) for r in results]
    return {
        "scheme": results[0].scheme,
        "num_drops": len(results),
        "seeds": [int(r.seed) for r in results],
        "ue_throughput_bps": headline(tp),
        "network_throughput_bps": float(np.mean([r.ue_throughput.sum() for r in results])),
        "cell_throughput_bps": {
            k: float(np.mean([t[k] for t in tiers])) for k in ("macro", "pico")},
        "convergence_tti": conv,
    }


def write_summary_json(path, summary: dict) -> None:
    Path(path).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")


# --- per-TTI traces -----------------------------------------------------------

@dataclass
class TtiRecord:
    tti: int
    ue_bits: np.ndarray   # (n_ue,)
    bs_bits: np.ndarray   # (n_bs,)
    agents: dict          # scheme-specific per-agent fields

    def check(self) -> None:
        if np.any(self.ue_bits < 0) or not np.isclose(self.ue_bits.sum(), self.bs_bits.sum()):
            raise AssertionError(f"TTI {self.tti}: bit conservation broken")


class TraceWriter:
    """Optional per-drop logs: SINR samples, X2 reports, learner snapshots.

    ``interval`` thins the per-TTI logs; table snapshots are taken every
    ``snapshot_interval`` TTIs.  Files go to ``directory/drop_<d>/``.
    """

    def __init__(self, directory, interval: int = 1, snapshot_interval: int = 1000,
                 sinr: bool = True):
        self.root = Path(directory)
        self.interval = max(1, int(interval))
        self.snapshot_interval = max(1, int(snapshot_interval))
        self.sinr = sinr
        self.drop = -1
        self._files = {}

    def _open(self, name, header):
        f = open(self.dir / name, "w", newline="")
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        self._files[name] = (f, w)
        return w

    def _w(self, name):
        return self._files[name][1]

    def start_drop(self, net, scheme) -> None:
        self.drop += 1
        self.dir = self.root / f"drop_{self.drop}"
        self.dir.mkdir(parents=True, exist_ok=True)
        net.layout.to_csv(self.dir / "layout.csv")
        self._open("x2_log.csv", ["tti", "macro", "protected_rbs"])
        if self.sinr:
            self._open("sinr.csv", ["tti", "ue", "rb", "cc", "bs", "sinr_db"])
        self._open("association.csv", ["event", "ue", "cc", "serving", "expanded"])
        self._assoc_version = -1
        if hasattr(scheme, "q_tables"):
            self._open("q_tables.csv", ["tti", "agent", "s", "a", "q"])
        if hasattr(scheme, "sat_log"):
            self._open("satisfaction.csv", ["tti", "pico", "u", "satisfied", "action"])
        if hasattr(scheme, "carrier_plan"):
            self._open("carrier_plan.csv", ["tti", "bs", "primary_cc", "bias_cc0", "bias_cc1"])

    def record(self, net, scheme, out) -> None:
        k = out.tti
        if net.assoc_version != self._assoc_version:
            self._assoc_version = net.assoc_version
            w = self._w("association.csv")
            a = net.assoc
            for u in range(a.serving.shape[0]):
                for cc in range(a.n_ccs):
                    w.writerow([k, u, cc, int(a.serving[u, cc]), int(a.expanded[u, cc])])
            if "carrier_plan.csv" in self._files:
                w = self._w("carrier_plan.csv")
                for row in scheme.carrier_plan():
                    w.writerow([k, *row])
        if k % self.interval == 0:
            w = self._w("x2_log.csv")
            for m in range(out.protected.shape[0]):
                w.writerow([k, m, " ".join(map(str, np.flatnonzero(out.protected[m])))])
            if self.sinr:
                w = self._w("sinr.csv")
                bs, rb = np.nonzero(out.assignment >= 0)
                for b, r in zip(bs, rb):
                    w.writerow([k, out.assignment[b, r], r, net.cc_of_rb[r], b,
                                _fmt(out.sinr_db[b, r])])
            if "satisfaction.csv" in self._files:
                w = self._w("satisfaction.csv")
                for row in scheme.sat_log():
                    w.writerow([k, *row])
        if "q_tables.csv" in self._files and (k + 1) % self.snapshot_interval == 0:
            w = self._w("q_tables.csv")
            for name, q in scheme.q_tables():
                for s in range(q.shape[0]):
                    for a in range(q.shape[1]):
                        w.writerow([k, name, s, a, _fmt(q[s, a])])

    def end_drop(self, net, scheme, result) -> None:
        for f, _ in self._files.values():
            f.close()
        self._files = {}
