"""Two-carrier frequency-domain ICIC: single-flow and multi-flow CA with Q-learning.

Each picocell learns, per epoch, its primary carrier and its CRE bias (applied
on the primary only) and, per RB, its power level.  Each macro sector takes
as primary the carrier fewer of its picocells chose, transmits high power
there and low power on its secondary.  Carrier indices are 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .association import AssociationMap, BiasConfig, associate_all
from .engine import Scheme
from .learn_q import (BIAS_EPOCH, MACRO_HIGH_DBM, MACRO_LOW_DBM, NUM_STATES, PICO_LEVELS_DBM,
                      EpochLearner, QBank, cost_vector, epsilon, level_watts, min_finite,
                      project_to_budget, state_index)

NUM_CCS = 2
FLOW_MODES = ("single", "multi")


@dataclass
class CarrierPlan:
    primary: np.ndarray     # (n_bs,) primary carrier per BS
    bias_db: np.ndarray     # (n_bs, 2)
    flow: str = "single"

    def __post_init__(self):
        self.primary = np.asarray(self.primary, int)
        self.bias_db = np.asarray(self.bias_db, float)
        if self.flow not in FLOW_MODES:
            raise ValueError(f"flow must be one of {FLOW_MODES}")
        if not np.all(np.isin(self.primary, (0, 1))):
            raise ValueError("primary carrier must be 0 or 1")

    @property
    def secondary(self) -> np.ndarray:
        return 1 - self.primary

    def rows(self):
        for b in range(len(self.primary)):
            yield [b, int(self.primary[b]), repr(float(self.bias_db[b, 0])),
                   repr(float(self.bias_db[b, 1]))]


def pbs_select_primary_cc(bank: QBank, state: np.ndarray, eps: float,
                          rng: np.random.Generator) -> np.ndarray:
    """Epsilon-greedy primary carrier of every picocell from its 2-action table."""
    if bank.n_actions != NUM_CCS:
        raise ValueError("carrier table needs exactly 2 actions")
    return bank.select(np.asarray(state)[:, None], eps, rng)[:, 0]


def mbs_select_primary_cc(choices, er_counts=None) -> int:
    """Carrier chosen by fewer picocells; on equality avoid the one with more ER PUEs.

    ``er_counts[c]`` is the ER-PUE count summed over the picocells choosing
    carrier c.  Remaining ties and empty reports give carrier 0.
    """
    choices = np.asarray(choices, int)
    if choices.size == 0:
        return 0
    n = np.bincount(choices, minlength=NUM_CCS)
    if n[0] != n[1]:
        return int(np.argmin(n))
    if er_counts is not None and er_counts[0] != er_counts[1]:
        return int(np.argmin(er_counts))
    return 0


def single_flow_association(rsrp: np.ndarray, bias_db: np.ndarray,
                            data_cc: np.ndarray) -> AssociationMap:
    """One (cell, carrier) per UE.

    The cell is the argmax of biased RSRP over all (cell, carrier) pairs.  A
    cell that wins the UE on both carriers serves it on its ``data_cc``;
    otherwise on the carrier where it wins.  The ER flag compares with the
    unbiased choice on the serving carrier.
    """
    n_cells, n_ue, n_cc = rsrp.shape
    biased = rsrp + bias_db[:, None, :]
    flat = biased.transpose(1, 0, 2).reshape(n_ue, -1)
    cell = np.argmax(flat, axis=1) // n_cc
    per_cc = np.argmax(biased, axis=0)                 # (n_ue, n_cc)
    wins = per_cc == cell[:, None]
    both = wins.all(axis=1)
    cc = np.where(both, data_cc[cell], np.argmax(wins, axis=1))
    serving = np.full((n_ue, n_cc), -1)
    serving[np.arange(n_ue), cc] = cell
    plain = np.argmax(rsrp, axis=0)[np.arange(n_ue), cc]
    expanded = np.zeros((n_ue, n_cc), bool)
    expanded[np.arange(n_ue), cc] = plain != cell
    return AssociationMap(serving, expanded)


class _CaQL(Scheme):
    num_ccs = NUM_CCS
    flow = "single"
    macro_learns = True
    macro_bias_learns = False

    def __init__(self, pico_levels_dbm=PICO_LEVELS_DBM, macro_high_dbm=MACRO_HIGH_DBM,
                 macro_low_dbm=MACRO_LOW_DBM, epoch: int = BIAS_EPOCH,
                 eps_start: float = 0.5, eps_decay: float = 0.999, eps_floor: float = 0.05):
        self.pico_levels_dbm = tuple(pico_levels_dbm)
        self.macro_high_dbm = tuple(macro_high_dbm)
        self.macro_low_dbm = tuple(macro_low_dbm)
        self.epoch = int(epoch)
        self.eps = (eps_start, eps_decay, eps_floor)

    def epsilon(self, k):
        return epsilon(k, *self.eps)

    def setup(self, net, rng):
        if net.n_ccs != NUM_CCS:
            raise ValueError("carrier-aggregation schemes need a 2-carrier grid")
        self.rng = rng
        R, npico, nm = net.R, net.n_pico, net.n_macro
        self.pico_w = level_watts(self.pico_levels_dbm, R)
        self.high_w = level_watts(self.macro_high_dbm, R)
        self.low_w = level_watts(self.macro_low_dbm, R)
        self.budget = net.pmax_w / NUM_CCS
        self.pico_q = QBank(npico, len(self.pico_w))
        self.pico_s = np.zeros((npico, R), np.int64)
        self.pico_a = np.zeros((npico, R), np.int64)
        self.pico_over = np.zeros(npico, bool)
        self.cc_learner = EpochLearner(npico, values=(0, 1))
        self.bias_learner = EpochLearner(npico)
        self.macro_q = QBank(nm, len(self.high_w))
        self.macro_s = np.zeros((nm, R), np.int64)
        self.macro_a = np.zeros((nm, R), np.int64)
        self.macro_over = np.zeros(nm, bool)
        self.macro_bias = EpochLearner(nm) if self.macro_bias_learns else None
        self.plan = CarrierPlan(np.zeros(net.n_bs, int), np.zeros((net.n_bs, NUM_CCS)), self.flow)
        self._plan_key = None
        self._associate(net)

    # -- carrier plan -------------------------------------------------------------

    def _associate(self, net):
        key = (self.plan.primary.tobytes(), self.plan.bias_db.tobytes())
        if key == self._plan_key:
            return
        self._plan_key = key
        if self.flow == "single":
            # picocells put non-ER traffic on their secondary, macros on their primary
            data_cc = np.where(net.is_macro, self.plan.primary, self.plan.secondary)
            net.set_association(single_flow_association(net.rsrp, self.plan.bias_db, data_cc))
        else:
            net.associate(BiasConfig(self.plan.bias_db))

    def _er_counts(self, net, sector, pico_cc):
        """ER PUEs (current association) of the sector's picocells, per chosen carrier."""
        counts = np.zeros(NUM_CCS)
        if net.assoc is None:
            return counts
        for p in np.flatnonzero(net.parent[net.pico_ids] == sector):
            bs = net.pico_ids[p]
            n = int(np.sum((net.assoc.serving == bs) & net.assoc.expanded))
            counts[pico_cc[p]] += n
        return counts

    def begin_tti(self, net, k):
        if k % self.epoch:
            return
        eps = self.epsilon(k)
        nm = net.n_macro
        primary = self.plan.primary.copy()
        bias = np.zeros((net.n_bs, NUM_CCS))
        if net.n_pico:
            self.cc_learner.step(eps, self.rng)
            self.bias_learner.step(eps, self.rng)
            pico_cc = self.cc_learner.value.astype(int)
            primary[nm:] = pico_cc
            bias[net.pico_ids, pico_cc] = self.bias_learner.value
        else:
            pico_cc = np.zeros(0, int)
        for m in range(nm):
            mine = pico_cc[net.parent[net.pico_ids] == m]
            primary[m] = mbs_select_primary_cc(mine, self._er_counts(net, m, pico_cc))
        if self.macro_bias is not None:
            self.macro_bias.step(eps, self.rng)
            bias[np.arange(nm), primary[:nm]] = self.macro_bias.value
        self.plan = CarrierPlan(primary, bias, self.flow)
        self._associate(net)

    def carrier_plan(self):
        return self.plan.rows()

    # -- power ----------------------------------------------------------------------

    def pico_power(self, net, k):
        self.pico_a = self.pico_q.select(self.pico_s, self.epsilon(k), self.rng)
        p, self.pico_over = project_to_budget(self.pico_w[self.pico_a],
                                              self.budget[net.pico_ids], NUM_CCS)
        return p

    def _macro_on_primary(self, net):
        return net.cc_of_rb[None, :] == self.plan.primary[:net.n_macro, None]

    def macro_hint(self, net, k):
        return Scheme.macro_hint(self, net, k)

    def macro_power(self, net, k, protected):
        on_primary = self._macro_on_primary(net)
        if self.macro_learns:
            self.macro_a = self.macro_q.select(self.macro_s, self.epsilon(k), self.rng)
            raw = np.where(on_primary, self.high_w[self.macro_a], self.low_w[self.macro_a])
        else:
            raw = np.where(on_primary, self.high_w[-1], self.low_w[-1])
        p, self.macro_over = project_to_budget(raw, self.budget[:net.n_macro], NUM_CCS)
        return p

    # -- learning -----------------------------------------------------------------

    def observe(self, net, k, out):
        nm = net.n_macro
        picos = net.pico_ids
        g = out.sinr_db
        g_m = g[:nm]
        if len(picos):
            g_p = g[picos]
            g_pm = g_m[net.parent[picos]]
            mask = net.has_ues[picos]
            c = np.vstack([cost_vector(g_p[i], self.pico_over[i]) for i in range(len(picos))])
            s_next = state_index(g_p, g_pm)
            self.pico_q.update(self.pico_s, self.pico_a, c, s_next, mask)
            self.pico_s = s_next
            self.cc_learner.accumulate(g_p, g_pm, c, mask)
            self.bias_learner.accumulate(g_p, g_pm, c, mask)
            g_min = min_finite(g_p, net.parent[picos], nm)
        else:
            g_min = np.full_like(g_m, -np.inf)
        if self.macro_learns:
            c = np.vstack([cost_vector(g_m[m], self.macro_over[m]) for m in range(nm)])
            s_next = state_index(g_min, g_m)
            mask = net.has_ues[:nm]
            self.macro_q.update(self.macro_s, self.macro_a, c, s_next, mask)
            self.macro_s = s_next
            if self.macro_bias is not None:
                self.macro_bias.accumulate(g_min, g_m, c, mask)

    def greedy_policy(self):
        parts = [self.pico_q.greedy().ravel(), self.cc_learner.bank.greedy().ravel(),
                 self.bias_learner.bank.greedy().ravel()]
        if self.macro_learns:
            parts.append(self.macro_q.greedy().ravel())
        if self.macro_bias is not None:
            parts.append(self.macro_bias.bank.greedy().ravel())
        return np.concatenate(parts)

    def q_tables(self):
        for i in range(self.pico_q.q.shape[0]):
            yield f"pico{i}_power", self.pico_q.q[i]
            yield f"pico{i}_cc", self.cc_learner.bank.q[i]
            yield f"pico{i}_bias", self.bias_learner.bank.q[i]
        if self.macro_learns:
            for m in range(self.macro_q.q.shape[0]):
                yield f"macro{m}_power", self.macro_q.q[m]
        if self.macro_bias is not None:
            for m in range(self.macro_bias.bank.q.shape[0]):
                yield f"macro{m}_bias", self.macro_bias.bank.q[m]

    def complexity(self, net):
        from .metrics import complexity_report
        a_p = NUM_CCS * len(self.bias_learner.values) * len(self.pico_w)
        a_m = 0
        if self.macro_learns:
            a_m = len(self.high_w) * (len(self.macro_bias.values) if self.macro_bias else 1)
        return complexity_report(NUM_STATES if a_m else 0, a_m, NUM_STATES, a_p, net.R)


class SingleFlowQL(_CaQL):
    """Single-flow CA: one serving (cell, carrier) per UE; macro learns per-carrier power."""

    name = "SF_QL"


class MultiFlowStaticQL(_CaQL):
    """Multi-flow CA, only picocells learn; the macro uses no CRE and fixed per-carrier power."""

    name = "MF_StaticQL"
    flow = "multi"
    macro_learns = False


class MultiFlowDynamicQL(_CaQL):
    """Multi-flow CA with macro power and macro CRE bias learning."""

    name = "MF_DynamicQL"
    flow = "multi"
    macro_bias_learns = True
