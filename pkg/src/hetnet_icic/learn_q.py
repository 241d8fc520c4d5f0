"""Tabular Q-learning for per-RB power control and CRE bias selection.

States quantize a (PUE SINR, MUE SINR) pair into three bands around the
target; costs are the squared SINR distance to target, or a flat penalty
when the BS exceeds its power budget.  Agents minimize cost.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .association import BiasConfig
from .engine import Scheme

GAMMA_TARGET_DB = 20.0
BAND_DB = 2.0
OVERLOAD_COST = 500.0
ALPHA = 0.5
DISCOUNT = 0.9
NUM_STATES = 9


def quantize_level(gamma_db):
    """0 below target-2 dB, 1 inside the closed band, 2 above; -inf/NaN -> 0."""
    g = np.asarray(gamma_db, float)
    lo, hi = GAMMA_TARGET_DB - BAND_DB, GAMMA_TARGET_DB + BAND_DB
    level = np.where(g < lo, 0, np.where(g <= hi, 1, 2))
    level = np.where(np.isfinite(g), level, 0)
    return int(level) if level.ndim == 0 else level.astype(np.int64)


def quantize_state(gamma_pue_db, gamma_mue_db):
    """(I_pue, I_mue) for scalars; flat index ``3*I_pue + I_mue`` via :func:`state_index`."""
    return quantize_level(gamma_pue_db), quantize_level(gamma_mue_db)


def state_index(gamma_pue_db, gamma_mue_db):
    ip, im = quantize_state(gamma_pue_db, gamma_mue_db)
    return 3 * np.asarray(ip) + np.asarray(im)


@dataclass(frozen=True)
class CostSample:
    cost: float
    overload: bool


def cost(gamma_db: float, total_power: float, p_max: float) -> CostSample:
    if total_power > p_max:
        return CostSample(OVERLOAD_COST, True)
    return CostSample(float((gamma_db - GAMMA_TARGET_DB) ** 2), False)


def cost_vector(gamma_db, overload: bool, floor_db: float = -10.0) -> np.ndarray:
    """Per-RB costs; an RB the agent left idle is priced at ``floor_db``."""
    g = np.asarray(gamma_db, float)
    if overload:
        return np.full(g.shape, OVERLOAD_COST)
    g = np.where(np.isfinite(g), np.maximum(g, floor_db), floor_db)
    return (g - GAMMA_TARGET_DB) ** 2


def epsilon(k: int, start: float = 0.5, decay: float = 0.999, floor: float = 0.05) -> float:
    return max(floor, start * decay ** k)


def q_update(Q: np.ndarray, s: int, a: int, c: float, s_next: int,
             alpha: float = ALPHA, discount: float = DISCOUNT) -> float:
    """In-place update of the single entry Q[s, a]; returns its new value."""
    Q[s, a] = (1.0 - alpha) * Q[s, a] + alpha * (c + discount * Q[s_next].min())
    return float(Q[s, a])


@njit(cache=True)
def _q_update_seq(Q, s, a, c, s_next, alpha, discount):
    n_a = Q.shape[1]
    for i in range(s.shape[0]):
        row = s_next[i]
        m = Q[row, 0]
        for j in range(1, n_a):
            if Q[row, j] < m:
                m = Q[row, j]
        Q[s[i], a[i]] = (1.0 - alpha) * Q[s[i], a[i]] + alpha * (c[i] + discount * m)


def q_update_many(Q, s, a, c, s_next, alpha=ALPHA, discount=DISCOUNT) -> None:
    """Sequential Eq.-style updates in the order given (shared table)."""
    _q_update_seq(Q, np.asarray(s, np.int64), np.asarray(a, np.int64),
                  np.asarray(c, np.float64), np.asarray(s_next, np.int64),
                  float(alpha), float(discount))


def select_action(Q: np.ndarray, s, eps: float, rng: np.random.Generator):
    """epsilon-greedy on minimum cost, ties to the lowest action index.

    ``s`` may be a scalar state or an array of states (one draw each).
    """
    if np.ndim(s) == 0:
        if rng.random() < eps:
            return int(rng.integers(0, Q.shape[1]))
        return int(np.argmin(Q[s]))
    s = np.asarray(s)
    greedy = np.argmin(Q[s], axis=-1)
    n_a = Q.shape[1]
    explore = rng.random(s.shape) < eps
    rand = rng.integers(0, n_a, size=s.shape)
    a = np.where(explore, rand, greedy)
    return int(a) if a.ndim == 0 else a


class QTable:
    def __init__(self, n_actions: int, n_states: int = NUM_STATES,
                 alpha: float = ALPHA, discount: float = DISCOUNT):
        self.q = np.zeros((n_states, n_actions))
        self.alpha = alpha
        self.discount = discount

    @property
    def shape(self):
        return self.q.shape

    def greedy_policy(self) -> np.ndarray:
        return np.argmin(self.q, axis=1)

    def select(self, s, eps, rng):
        return select_action(self.q, s, eps, rng)

    def update(self, s, a, c, s_next):
        if np.ndim(s) == 0:
            q_update(self.q, int(s), int(a), float(c), int(s_next), self.alpha, self.discount)
            return
        s = np.atleast_1d(s)
        if s.size == 0:
            return
        q_update_many(self.q, s, np.atleast_1d(a), np.atleast_1d(c),
                      np.atleast_1d(s_next), self.alpha, self.discount)


class OpCounter:
    """Tally of DSP-style instructions, one unit per basic operation."""

    CATEGORIES = ("state_id", "memory", "comparison", "sum", "multiplication", "storage")

    def __init__(self):
        self.counts = dict.fromkeys(self.CATEGORIES, 0)

    def __getitem__(self, k):
        return self.counts[k]

    def add(self, k, n=1):
        self.counts[k] += n

    @property
    def total(self) -> int:
        return sum(self.counts.values())


def q_iteration_counted(Q: np.ndarray, s: int, c: float, s_next: int,
                        alpha: float = ALPHA, discount: float = DISCOUNT,
                        ops: OpCounter | None = None):
    """One learning iteration on a row-major Q-table with instruction counting.

    Greedy selection on row ``s``, min over row ``s_next`` and the update of
    the chosen entry, written as ``Q + alpha*(c + discount*min - Q)``.
    Returns (action, new value, counter).
    """
    ops = OpCounter() if ops is None else ops
    n_a = Q.shape[1]
    row = Q[s]
    ops.add("state_id")
    nxt = Q[s_next]
    ops.add("state_id")

    best_a, best = 0, row[0]
    ops.add("memory")
    for j in range(1, n_a):
        v = row[j]
        ops.add("memory")
        ops.add("comparison")
        if v < best:
            best_a, best = j, v

    m = nxt[0]
    ops.add("memory")
    for j in range(1, n_a):
        v = nxt[j]
        ops.add("memory")
        ops.add("comparison")
        if v < m:
            m = v

    target = c + discount * m
    ops.add("multiplication")
    ops.add("sum")
    delta = target - best
    ops.add("sum")
    new = best + alpha * delta
    ops.add("multiplication")
    ops.add("sum")
    Q[s, best_a] = new
    ops.add("storage")
    return best_a, float(new), ops


def value_iteration(costs: np.ndarray, transitions: np.ndarray, discount: float = DISCOUNT,
                    tol: float = 1e-12, max_iter: int = 100_000) -> np.ndarray:
    """Fixed point of Q(s,a) = c(s,a) + discount * min_a' Q(s', a') for a deterministic MDP."""
    Q = np.zeros_like(costs, dtype=float)
    for _ in range(max_iter):
        new = costs + discount * Q.min(axis=1)[transitions]
        if np.max(np.abs(new - Q)) < tol:
            return new
        Q = new
    return Q


# --- network orchestration ---------------------------------------------------

PICO_LEVELS_DBM = (10.0, 16.0, 22.0, 30.0)
MACRO_HIGH_DBM = (30.0, 38.0, 46.0)
MACRO_LOW_DBM = (None, 10.0, 16.0)      # None = mute
BIAS_EPOCH = 20


def level_watts(levels_dbm, num_rbs: int) -> np.ndarray:
    """Per-RB watts of "dBm-equivalent" levels: the level spread over all RBs."""
    return np.array([0.0 if l is None else 10 ** ((l - 30) / 10) / num_rbs for l in levels_dbm])


@njit(cache=True)
def _q_update_bank(Q, agent, s, a, c, s_next, alpha, discount):
    n_a = Q.shape[2]
    for i in range(s.shape[0]):
        g = agent[i]
        row = s_next[i]
        m = Q[g, row, 0]
        for j in range(1, n_a):
            if Q[g, row, j] < m:
                m = Q[g, row, j]
        Q[g, s[i], a[i]] = (1.0 - alpha) * Q[g, s[i], a[i]] + alpha * (c[i] + discount * m)


class QBank:
    """One table per agent (BS); a BS's per-RB learners share its table.

    Updates for a TTI are applied agent by agent in RB order.
    """

    def __init__(self, n_agents: int, n_actions: int, n_states: int = NUM_STATES,
                 alpha: float = ALPHA, discount: float = DISCOUNT):
        self.q = np.zeros((n_agents, n_states, n_actions))
        self.alpha = alpha
        self.discount = discount

    @property
    def n_actions(self) -> int:
        return self.q.shape[2]

    def greedy(self) -> np.ndarray:
        return np.argmin(self.q, axis=2)

    def select(self, s: np.ndarray, eps: float, rng: np.random.Generator) -> np.ndarray:
        """``s`` is (n_agents, n) states; one epsilon-greedy draw per entry."""
        s = np.asarray(s, np.int64)
        rows = self.q[np.arange(self.q.shape[0])[:, None], s]
        greedy = np.argmin(rows, axis=-1)
        explore = rng.random(s.shape) < eps
        rand = rng.integers(0, self.n_actions, size=s.shape)
        return np.where(explore, rand, greedy)

    def update(self, s, a, c, s_next, mask=None) -> None:
        """All arrays (n_agents, n); entries where ``mask`` is False are skipped."""
        s = np.asarray(s, np.int64)
        agent = np.broadcast_to(np.arange(s.shape[0])[:, None], s.shape)
        sel = np.ones(s.shape, bool) if mask is None else np.asarray(mask, bool)
        if not sel.any():
            return
        _q_update_bank(self.q, agent[sel].astype(np.int64), s[sel], np.asarray(a, np.int64)[sel],
                       np.asarray(c, float)[sel], np.asarray(s_next, np.int64)[sel],
                       self.alpha, self.discount)


def project_to_budget(power: np.ndarray, budget: np.ndarray, n_ccs: int = 1):
    """Uniformly scale each BS's per-carrier power down to its budget.

    Returns (projected power, overload flag per BS).
    """
    p = power.reshape(power.shape[0], n_ccs, power.shape[1] // n_ccs)
    tot = p.sum(axis=2)
    over = tot > budget[:, None] * (1 + 1e-12)
    scale = np.where(over, budget[:, None] / np.where(tot > 0, tot, 1.0), 1.0)
    return (p * scale[:, :, None]).reshape(power.shape), over.any(axis=1)


def min_finite(x: np.ndarray, groups: np.ndarray, n_groups: int) -> np.ndarray:
    """Row-wise minimum of finite entries of ``x`` per group; -inf if none."""
    out = np.full((n_groups,) + x.shape[1:], np.inf)
    np.minimum.at(out, groups, np.where(np.isfinite(x), x, np.inf))
    return np.where(np.isfinite(out), out, -np.inf)


def mean_finite(x: np.ndarray, axis=None):
    f = np.isfinite(x)
    n = f.sum(axis=axis)
    s = np.where(f, x, 0.0).sum(axis=axis)
    return np.where(n > 0, s / np.maximum(n, 1), -np.inf)


class EpochLearner:
    """Epoch-level choice (e.g. CRE bias or primary carrier), one table per agent.

    The state is the quantized epoch-average (PUE SINR, MUE SINR) seen by
    the agent and the cost its epoch-average per-RB cost.
    """

    def __init__(self, n_agents: int, values=(0.0, 6.0, 12.0), n_states: int = NUM_STATES):
        self.values = np.asarray(values)
        self.bank = QBank(n_agents, len(values), n_states)
        self.n = n_agents
        self.state = np.zeros(n_agents, np.int64)
        self.action = None
        self._reset()

    def _reset(self):
        self.sums = np.zeros((4, self.n))   # pue dB sum, pue count, mue dB sum, mue count
        self.c_sum = np.zeros(self.n)
        self.c_n = np.zeros(self.n)

    def accumulate(self, pue_db, mue_db, costs, mask) -> None:
        """(n_agents, R) samples of one TTI; costs count where ``mask``."""
        for i, g in ((0, pue_db), (2, mue_db)):
            f = np.isfinite(g)
            self.sums[i] += np.where(f, g, 0.0).sum(axis=1)
            self.sums[i + 1] += f.sum(axis=1)
        self.c_sum += np.where(mask, costs, 0.0).sum(axis=1)
        self.c_n += mask.sum(axis=1)

    def epoch_state(self) -> np.ndarray:
        tot = self.sums
        pue = np.where(tot[1] > 0, tot[0] / np.maximum(tot[1], 1), -np.inf)
        mue = np.where(tot[3] > 0, tot[2] / np.maximum(tot[3], 1), -np.inf)
        return state_index(pue, mue)

    def step(self, eps: float, rng: np.random.Generator) -> np.ndarray:
        """Close the running epoch (learn) and pick the next action indices."""
        if self.action is not None:
            s_next = self.epoch_state()
            seen = self.c_n > 0
            c = np.where(seen, self.c_sum / np.maximum(self.c_n, 1), 0.0)
            self.bank.update(self.state[:, None], self.action[:, None], c[:, None],
                             s_next[:, None], seen[:, None])
            self.state = s_next
        self.action = self.bank.select(self.state[:, None], eps, rng)[:, 0]
        self._reset()
        return self.action

    @property
    def value(self) -> np.ndarray:
        return self.values[self.action]


class _QLBase(Scheme):
    """Picocells learn CRE bias per epoch and per-RB power levels every TTI."""

    macro_learns = False

    def __init__(self, pico_levels_dbm=PICO_LEVELS_DBM, macro_high_dbm=MACRO_HIGH_DBM,
                 macro_low_dbm=MACRO_LOW_DBM, epoch: int = BIAS_EPOCH,
                 eps_start: float = 0.5, eps_decay: float = 0.999, eps_floor: float = 0.05):
        self.pico_levels_dbm = tuple(pico_levels_dbm)
        self.macro_high_dbm = tuple(macro_high_dbm)
        self.macro_low_dbm = tuple(macro_low_dbm)
        if len(self.macro_high_dbm) != len(self.macro_low_dbm):
            raise ValueError("macro high and low level sets must have equal size")
        self.epoch = int(epoch)
        self.eps = (eps_start, eps_decay, eps_floor)

    def epsilon(self, k):
        return epsilon(k, *self.eps)

    def setup(self, net, rng):
        self.rng = rng
        R, npico, nm = net.R, net.n_pico, net.n_macro
        self.pico_w = level_watts(self.pico_levels_dbm, R)
        self.high_w = level_watts(self.macro_high_dbm, R)
        self.low_w = level_watts(self.macro_low_dbm, R)
        self.budget = net.pmax_w / net.n_ccs
        self.pico_q = QBank(npico, len(self.pico_w))
        self.pico_s = np.zeros((npico, R), np.int64)
        self.pico_a = np.zeros((npico, R), np.int64)
        self.pico_over = np.zeros(npico, bool)
        self.bias = EpochLearner(npico)
        if self.macro_learns:
            self.macro_q = QBank(nm, len(self.high_w))
            self.macro_s = np.zeros((nm, R), np.int64)
            self.macro_a = np.zeros((nm, R), np.int64)
            self.macro_over = np.zeros(nm, bool)
        self._bias_db = None
        self.x2_reports = []
        self._apply_bias(net, np.zeros(npico))

    def _apply_bias(self, net, pico_bias_db):
        pico_bias_db = np.asarray(pico_bias_db, float)
        if self._bias_db is not None and np.array_equal(pico_bias_db, self._bias_db):
            return
        self._bias_db = pico_bias_db.copy()
        b = np.zeros((net.n_bs, net.n_ccs))
        b[net.n_macro:] = pico_bias_db[:, None]
        net.associate(BiasConfig(b))

    def begin_tti(self, net, k):
        if k % self.epoch == 0 and net.n_pico:
            self.bias.step(self.epsilon(k), self.rng)
            self._apply_bias(net, self.bias.value)

    def pico_power(self, net, k):
        self.pico_a = self.pico_q.select(self.pico_s, self.epsilon(k), self.rng)
        raw = self.pico_w[self.pico_a]
        p, self.pico_over = project_to_budget(raw, self.budget[net.pico_ids], net.n_ccs)
        return p

    def _pico_feedback(self, net, out):
        picos = net.pico_ids
        g_p = out.sinr_db[picos]
        g_m = out.sinr_db[net.parent[picos]]
        mask = net.has_ues[picos]
        c = np.vstack([cost_vector(g_p[i], self.pico_over[i]) for i in range(len(picos))]) \
            if len(picos) else np.zeros_like(g_p)
        s_next = state_index(g_p, g_m)
        self.pico_q.update(self.pico_s, self.pico_a, c, s_next, mask)
        self.pico_s = s_next
        self.bias.accumulate(g_p, g_m, c, mask)

    def observe(self, net, k, out):
        self.x2_reports = [np.flatnonzero(row) for row in out.protected]
        if net.n_pico:
            self._pico_feedback(net, out)

    def greedy_policy(self):
        parts = [self.pico_q.greedy().ravel(), self.bias.bank.greedy().ravel()]
        if self.macro_learns:
            parts.append(self.macro_q.greedy().ravel())
        return np.concatenate(parts)

    def q_tables(self):
        for i in range(self.pico_q.q.shape[0]):
            yield f"pico{i}_power", self.pico_q.q[i]
            yield f"pico{i}_bias", self.bias.bank.q[i]
        if self.macro_learns:
            for m in range(self.macro_q.q.shape[0]):
                yield f"macro{m}_power", self.macro_q.q[m]

    def complexity(self, net):
        from .metrics import complexity_report
        a_m = len(self.high_w) if self.macro_learns else 0
        s_m = NUM_STATES if self.macro_learns else 0
        return complexity_report(s_m, a_m, NUM_STATES,
                                 len(self.bias.values) * len(self.pico_w), net.R)


class StaticQL(_QLBase):
    """Only picocells learn; the macro blanks the RBs they report for ER PUEs."""

    name = "StaticQL"

    def macro_hint(self, net, k):
        return Scheme.macro_hint(self, net, k)

    def macro_power(self, net, k, protected):
        return net.uniform_power(~protected, np.arange(net.n_macro))


class DynamicQL(_QLBase):
    """Picocells and macro learn; the macro uses a reduced level set on protected RBs."""

    name = "DynamicQL"
    macro_learns = True

    def macro_levels(self, net, protected):
        return np.where(protected, self.low_w[self.macro_a], self.high_w[self.macro_a])

    def macro_power(self, net, k, protected):
        self.macro_a = self.macro_q.select(self.macro_s, self.epsilon(k), self.rng)
        raw = self.macro_levels(net, protected)
        p, self.macro_over = project_to_budget(raw, self.budget[:net.n_macro], net.n_ccs)
        return p

    def _macro_feedback(self, net, out):
        nm = net.n_macro
        g_m = out.sinr_db[:nm]
        picos = net.pico_ids
        g_p = min_finite(out.sinr_db[picos], net.parent[picos], nm) if len(picos) \
            else np.full_like(g_m, -np.inf)
        c = np.vstack([cost_vector(g_m[m], self.macro_over[m]) for m in range(nm)])
        s_next = state_index(g_p, g_m)
        self.macro_q.update(self.macro_s, self.macro_a, c, s_next, net.has_ues[:nm])
        self.macro_s = s_next

    def observe(self, net, k, out):
        super().observe(net, k, out)
        self._macro_feedback(net, out)
