"""Per-drop TTI loop shared by every ICIC scheme.

Within a TTI the order is fixed: scheme epoch decisions, picocell power,
picocell PF scheduling against the macro power announced for the TTI,
X2 reports of ER-PUE RBs, macro power, macro scheduling, transmission,
learner feedback, fading step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .association import AssociationMap, BiasConfig, associate_all, rsrp_dbm
from .radio import LinkGainMap, RadioConfig, RbGrid, dbm2w, lin2db, rate, sinr_matrix
from .scheduling import PfState, er_rb_mask, pf_schedule_all
from .topology import NetworkLayout


class InvariantViolation(RuntimeError):
    pass


@dataclass(frozen=True)
class SimConfig:
    num_ttis: int = 5000
    warmup: int = 500
    grid: RbGrid = field(default_factory=RbGrid)
    radio: RadioConfig = field(default_factory=RadioConfig)
    pf_window: float = 100.0
    pf_floor: float = 1.0
    convergence_window: int = 200

    def __post_init__(self):
        if self.num_ttis < 1 or not 0 <= self.warmup < self.num_ttis:
            raise ValueError("need 0 <= warmup < num_ttis")


class Network:
    """Mutable state of one drop: channel, association and PF averages."""

    def __init__(self, layout: NetworkLayout, grid: RbGrid, radio: RadioConfig,
                 rng: np.random.Generator, pf_window: float = 100.0, pf_floor: float = 1.0):
        self.layout = layout
        self.grid = grid
        self.radio = radio
        self.gains = LinkGainMap(layout, grid, radio, rng)
        self.n_macro = layout.n_macro
        self.n_pico = layout.n_pico
        self.n_bs = layout.n_bs
        self.n_ue = layout.n_ue
        self.R = grid.num_rbs
        self.n_ccs = grid.num_ccs
        self.cc_of_rb = grid.cc_of_rb
        self.is_macro = layout.is_macro
        self.parent = layout.parent_macro
        self.pico_ids = np.arange(self.n_macro, self.n_bs)
        pmax_dbm = np.where(self.is_macro, radio.macro_pmax_dbm, radio.pico_pmax_dbm)
        self.pmax_w = dbm2w(pmax_dbm)
        # reference-signal power per carrier: budget split evenly over carriers
        self.tx_dbm = np.repeat((pmax_dbm - 10 * np.log10(self.n_ccs))[:, None], self.n_ccs, 1)
        self.rsrp = rsrp_dbm(self.tx_dbm, self.gains.mean_gain_db)
        self.noise = radio.noise_power_w(grid)
        self.pf = PfState(self.n_ue, self.n_ccs, window=pf_window, floor=pf_floor)
        self.assoc: AssociationMap | None = None
        self.assoc_version = 0
        self.last_power = None
        self.last_macro_power = None

    def associate(self, bias: BiasConfig) -> AssociationMap:
        self.set_association(associate_all(self.rsrp, bias))
        return self.assoc

    def set_association(self, assoc: AssociationMap) -> None:
        self.assoc = assoc
        self.serving_rb = assoc.serving[:, self.cc_of_rb]
        self.expanded_rb = assoc.expanded[:, self.cc_of_rb]
        has = np.zeros((self.n_bs, self.n_ccs), bool)
        for cc in range(self.n_ccs):
            s = assoc.serving[:, cc]
            has[s[s >= 0], cc] = True
        self.has_ues_cc = has
        self.has_ues = has[:, self.cc_of_rb]
        self.assoc_version += 1

    def uniform_power(self, mask: np.ndarray, bs=None) -> np.ndarray:
        """Budget of each BS split equally over its permitted RBs, per carrier."""
        bs = np.arange(self.n_bs) if bs is None else np.asarray(bs)
        mask = np.asarray(mask, bool)
        out = np.zeros(mask.shape)
        budget = self.pmax_w[bs] / self.n_ccs
        for cc in range(self.n_ccs):
            sl = self.grid.cc_rbs(cc)
            m = mask[:, sl]
            n = m.sum(axis=1)
            per = np.divide(budget, n, out=np.zeros_like(budget), where=n > 0)
            out[:, sl] = m * per[:, None]
        return out

    def cc_power_totals(self, power: np.ndarray) -> np.ndarray:
        return power.reshape(power.shape[0], self.n_ccs, -1).sum(axis=2)


@dataclass
class TtiOutcome:
    tti: int
    power: np.ndarray        # (n_bs, R) radiated W
    assignment: np.ndarray   # (n_bs, R) UE id or -1
    sinr_db: np.ndarray      # (n_bs, R) SINR of the assigned UE, -inf if none
    bits: np.ndarray         # (n_bs, R)
    ue_bits: np.ndarray      # (n_ue, n_ccs)
    protected: np.ndarray    # (n_macro, R) RBs reported for protection


class Scheme:
    """Hooks called by :func:`run_drop`; the default is reuse-1 uniform power."""

    name = "base"
    num_ccs = 1

    def setup(self, net: Network, rng: np.random.Generator) -> None:
        self.rng = rng
        net.associate(BiasConfig.zeros(net.n_bs, net.n_ccs))

    def begin_tti(self, net: Network, k: int) -> None:
        pass

    def pico_power(self, net: Network, k: int) -> np.ndarray:
        return net.uniform_power(np.ones((net.n_pico, net.R)), net.pico_ids)

    def macro_hint(self, net: Network, k: int) -> np.ndarray:
        """Macro power the picocells assume while scheduling this TTI.

        Defaults to what the macro radiated last TTI (full uniform at start).
        """
        if net.last_macro_power is not None:
            return net.last_macro_power
        return net.uniform_power(np.ones((net.n_macro, net.R)), np.arange(net.n_macro))

    def macro_power(self, net: Network, k: int, protected: np.ndarray) -> np.ndarray:
        return net.uniform_power(np.ones((net.n_macro, net.R)), np.arange(net.n_macro))

    def observe(self, net: Network, k: int, out: TtiOutcome) -> None:
        pass

    def greedy_policy(self):
        """Flat int array of all greedy choices, or None for non-learning schemes."""
        return None

    def complexity(self, net: Network):
        return None


@dataclass
class DropResult:
    scheme: str
    seed: int
    layout: NetworkLayout
    ue_throughput: np.ndarray     # (n_ue,) bits/s after warm-up
    ue_serving: np.ndarray        # (n_ue, n_ccs) at the end of the drop
    bs_throughput: np.ndarray     # (n_bs,) bits/s after warm-up
    sum_rate: np.ndarray          # (K,) network bits/s per TTI
    policy_changed: np.ndarray | None
    convergence_tti: int
    complexity: object = None
    extras: dict = field(default_factory=dict)


def convergence_iteration(policy_changed, window: int = 200) -> int:
    """First TTI after which no agent's greedy policy changes for ``window`` TTIs; -1 if none."""
    if policy_changed is None:
        return 0
    c = np.asarray(policy_changed, bool)
    K = len(c)
    if K <= window:
        return -1
    # changes at t+1..t+window must all be False
    csum = np.concatenate([[0], np.cumsum(c)])
    t = np.arange(0, K - window)
    n_changes = csum[t + window + 1] - csum[t + 1]
    hits = np.flatnonzero(n_changes == 0)
    return int(hits[0]) if hits.size else -1


def _scatter_ue_bits(assign, bits, n_ue, cc_of_rb, n_ccs):
    ok = assign >= 0
    ue = assign[ok]
    cc = np.broadcast_to(cc_of_rb, assign.shape)[ok]
    out = np.bincount(ue * n_ccs + cc, weights=bits[ok], minlength=n_ue * n_ccs)
    return out.reshape(n_ue, n_ccs)


def run_drop(layout: NetworkLayout, scheme: Scheme, sim: SimConfig, seed: int,
             trace=None) -> DropResult:
    """Simulate one drop; ``seed`` drives the channel and (separately) the learners."""
    ss = np.random.SeedSequence(seed)
    channel_ss, learner_ss = ss.spawn(2)
    grid = sim.grid
    if grid.num_ccs != scheme.num_ccs:
        grid = RbGrid(grid.num_rbs, grid.rb_bandwidth, scheme.num_ccs, grid.subframe_duration)
    net = Network(layout, grid, sim.radio, np.random.default_rng(channel_ss),
                  sim.pf_window, sim.pf_floor)
    scheme.setup(net, np.random.default_rng(learner_ss))
    if trace is not None:
        trace.start_drop(net, scheme)

    K, R = sim.num_ttis, net.R
    Ts = grid.subframe_duration
    nm = net.n_macro
    macros = np.arange(nm)
    picos = net.pico_ids
    rb_idx = np.arange(R)[None, :]
    cc_totals_cap = net.pmax_w / net.n_ccs * (1 + 1e-9)

    sum_rate = np.zeros(K)
    ue_acc = np.zeros((net.n_ue, net.n_ccs))
    bs_acc = np.zeros(net.n_bs)
    track = scheme.greedy_policy() is not None
    changed = np.zeros(K, bool) if track else None
    prev_policy = scheme.greedy_policy()

    for k in range(K):
        scheme.begin_tti(net, k)
        power = np.zeros((net.n_bs, R))
        power[picos] = scheme.pico_power(net, k)
        power[:nm] = scheme.macro_hint(net, k)
        gain = net.gains.gain
        avg_rb = net.pf.avg_rate[:, net.cc_of_rb]

        active = (power > 0) & net.has_ues
        est = sinr_matrix(power * active, gain, net.serving_rb, net.noise)
        assign = pf_schedule_all(rate(est, grid), net.serving_rb, avg_rb, active,
                                 net.n_bs, picos)

        er = er_rb_mask(assign, net.expanded_rb)[picos]
        protected = np.zeros((nm, R), bool)
        if len(picos):
            np.logical_or.at(protected, net.parent[picos], er)

        power[:nm] = scheme.macro_power(net, k, protected)
        active[:nm] = (power[:nm] > 0) & net.has_ues[:nm]
        active[picos] = assign[picos] >= 0
        p_eff = power * active
        gamma = sinr_matrix(p_eff, gain, net.serving_rb, net.noise)
        inst = rate(gamma, grid)
        assign_m = pf_schedule_all(inst, net.serving_rb, avg_rb, active, net.n_bs, macros)
        assign[:nm] = assign_m[:nm]

        if np.any(net.cc_power_totals(power) > cc_totals_cap[:, None]):
            raise InvariantViolation(f"TTI {k}: transmit power above the BS budget")

        ok = assign >= 0
        ue_i = np.maximum(assign, 0)
        g_bs = np.where(ok, gamma[ue_i, rb_idx], 0.0)
        bits = np.where(ok, rate(g_bs, grid) * Ts, 0.0)
        ue_bits = _scatter_ue_bits(assign, bits, net.n_ue, net.cc_of_rb, net.n_ccs)
        net.pf.update(ue_bits / Ts)
        net.last_power = p_eff
        net.last_macro_power = power[:nm].copy()

        with np.errstate(divide="ignore"):
            sinr_db = np.where(ok, lin2db(g_bs), -np.inf)
        out = TtiOutcome(k, p_eff, assign, sinr_db, bits, ue_bits, protected)
        scheme.observe(net, k, out)
        if trace is not None:
            trace.record(net, scheme, out)

        total = bits.sum()
        sum_rate[k] = total / Ts
        if k >= sim.warmup:
            ue_acc += ue_bits
            bs_acc += bits.sum(axis=1)
        if track:
            pol = scheme.greedy_policy()
            changed[k] = k > 0 and not np.array_equal(pol, prev_policy)
            prev_policy = pol
        net.gains.advance()

    span = (K - sim.warmup) * Ts
    ue_tp = ue_acc.sum(axis=1) / span
    if not np.isclose(ue_acc.sum(), bs_acc.sum(), rtol=1e-9, atol=1e-6):
        raise InvariantViolation("UE and BS bit totals disagree")
    result = DropResult(
        scheme=scheme.name, seed=seed, layout=layout,
        ue_throughput=ue_tp, ue_serving=net.assoc.serving.copy(),
        bs_throughput=bs_acc / span, sum_rate=sum_rate,
        policy_changed=changed,
        convergence_tti=convergence_iteration(changed, sim.convergence_window),
        complexity=scheme.complexity(net),
    )
    result.extras["ue_cc_throughput"] = ue_acc / span
    if trace is not None:
        trace.end_drop(net, scheme, result)
    return result
