"""Satisfaction-equilibrium learning for picocell per-RB power.

Each picocell keeps, per RB, a probability distribution over its power
levels.  A satisfied picocell (utility at or above target) repeats its last
action and freezes its distributions; an unsatisfied one reinforces the
last action with a utility-dependent step and samples a new one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .engine import Scheme
from .learn_q import OpCounter, PICO_LEVELS_DBM, level_watts
from .radio import ETA_MAX

GAMMA_TARGET_DB = 20.0
PROB_FLOOR = 1e-3
EQUILIBRIUM_WINDOW = 500


def utility(gamma) -> float:
    """Sum of log2(1 + SINR) over the scheduled RBs; NaN/absent entries count 0."""
    g = np.asarray(gamma, float)
    g = np.where(np.isfinite(g), g, 0.0)
    return float(np.log2(1.0 + g).sum())


def target_utility(num_rbs: int, gamma_target_db: float = GAMMA_TARGET_DB) -> float:
    return num_rbs * float(np.log2(1.0 + 10 ** (gamma_target_db / 10)))


def step_size(u, u_max, u_target):
    """(u_max + u - u_target) / (2 u_max), clamped to [0, 1]."""
    if np.any(np.asarray(u_max) <= 0):
        raise ValueError("u_max must be positive")
    b = (u_max + np.asarray(u, float) - u_target) / (2.0 * np.asarray(u_max, float))
    b = np.clip(b, 0.0, 1.0)
    return float(b) if b.ndim == 0 else b


def learning_rate(k: int) -> float:
    """Decreasing rate 1/(k+1) on the subframe index."""
    return 1.0 / (k + 1.0)


def apply_floor(pi: np.ndarray, floor: float = PROB_FLOOR) -> np.ndarray:
    """Raise entries to ``floor`` and take the deficit from the mass above it.

    The excess over the floor is scaled down proportionally, so the result
    sums to one and never drops below ``floor`` (requires |A|*floor <= 1).
    """
    pi = np.asarray(pi, float)
    n = pi.shape[-1]
    if n * floor > 1.0:
        raise ValueError("floor too large for the action count")
    if np.all(pi >= floor):
        return pi
    excess = np.maximum(pi - floor, 0.0)
    free = 1.0 - n * floor
    tot = excess.sum(axis=-1, keepdims=True)
    scale = np.divide(free, tot, out=np.zeros_like(tot), where=tot > 0)
    out = floor + excess * scale
    return out


def prob_update(pi, a, b, tau, floor: float | None = PROB_FLOOR) -> np.ndarray:
    """pi + tau*b*(e_a - pi) along the last axis, then floored.

    ``a``, ``b`` and ``tau`` broadcast against the leading axes of ``pi``.
    ``floor=None`` returns the raw update.
    """
    pi = np.asarray(pi, float)
    step = (np.asarray(tau, float) * np.asarray(b, float))[..., None]
    onehot = np.arange(pi.shape[-1]) == np.asarray(a)[..., None]
    out = pi + step * (onehot - pi)
    return out if floor is None else apply_floor(out, floor)


def sample_actions(pi: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One draw per leading index by inverse CDF."""
    cdf = np.cumsum(pi, axis=-1)
    u = rng.random(pi.shape[:-1])[..., None] * cdf[..., -1:]
    return np.minimum((u >= cdf).sum(axis=-1), pi.shape[-1] - 1)


@dataclass
class SatLearnerState:
    pi: np.ndarray                  # (..., n_actions)
    action: np.ndarray | None = None
    satisfied: bool = False
    k: int = 0


def sat_select_action(state: SatLearnerState, u_prev, u_max, u_target,
                      rng: np.random.Generator, floor: float = PROB_FLOOR) -> np.ndarray:
    """Repeat-if-satisfied, otherwise reinforce the last action and resample.

    Mutates ``state`` (distribution, action, satisfied flag, counter).
    """
    if state.action is None:
        state.action = sample_actions(state.pi, rng)
    elif u_prev >= u_target:
        state.satisfied = True
    else:
        state.satisfied = False
        b = step_size(u_prev, u_max, u_target)
        state.pi = prob_update(state.pi, state.action, b, learning_rate(state.k), floor)
        state.action = sample_actions(state.pi, rng)
    state.k += 1
    return state.action


def prob_update_counted(pi: np.ndarray, a: int, u: float, u_max: float, u_target: float,
                        tau: float, ops: OpCounter | None = None):
    """One instrumented probability-update iteration on a single RB.

    ``u_max - u_target`` and ``1/(2 u_max)`` are per-drop constants.  Each
    probability entry is rescaled by a fused multiply-subtract between its
    load and its store, so it is billed as two memory accesses.  Returns
    (new distribution or None when satisfied, counter).
    """
    ops = OpCounter() if ops is None else ops
    offset = u_max - u_target
    inv = 1.0 / (2.0 * u_max)
    ops.add("comparison")
    if u >= u_target:
        return None, ops
    num = u + offset
    ops.add("sum")
    b = num * inv
    ops.add("multiplication")
    ops.add("comparison")
    if b < 0.0:
        b = 0.0
    step = tau * b
    ops.add("multiplication")
    out = np.empty_like(pi, dtype=float)
    for n in range(len(pi)):
        v = pi[n]
        ops.add("memory")
        out[n] = v - step * v
        ops.add("memory")
    out[a] = out[a] + step
    ops.add("sum")
    ops.add("storage")  # selected action retained for the next iteration
    return out, ops


def detect_equilibrium(actions, satisfied, window: int = EQUILIBRIUM_WINDOW) -> bool:
    """True iff the last ``window`` entries show frozen actions and all players satisfied.

    ``actions`` is (T, ...) per-TTI action profiles, ``satisfied`` (T, n_players).
    """
    actions = np.asarray(actions)
    satisfied = np.asarray(satisfied, bool)
    if len(actions) < window or window < 1:
        return False
    tail = actions[-window:]
    return bool(np.all(satisfied[-window:]) and np.all(tail == tail[0]))


@dataclass
class EquilibriumDetector:
    """Online version of :func:`detect_equilibrium`."""

    window: int = EQUILIBRIUM_WINDOW
    run: int = 0
    fired_at: int = -1
    _last: np.ndarray | None = field(default=None, repr=False)

    def update(self, t: int, actions, satisfied) -> bool:
        actions = np.asarray(actions)
        ok = bool(np.all(satisfied))
        same = self._last is not None and np.array_equal(actions, self._last)
        if not ok:
            self.run = 0
        elif same:
            self.run += 1
        else:
            self.run = 1
        self._last = actions.copy()
        if self.run >= self.window and self.fired_at < 0:
            self.fired_at = t
        return self.run >= self.window


class SatisfactionScheme(Scheme):
    """Picocells learn per-RB power by satisfaction; the macro blanks reported ER-PUE RBs."""

    name = "Satisfaction"

    def __init__(self, levels_dbm=PICO_LEVELS_DBM, floor: float = PROB_FLOOR,
                 epoch: int = 20, biases=(0.0, 6.0, 12.0),
                 gamma_target_db: float = GAMMA_TARGET_DB, window: int = EQUILIBRIUM_WINDOW):
        self.levels_dbm = tuple(levels_dbm)
        self.floor = floor
        self.epoch = int(epoch)
        self.biases = np.asarray(biases, float)
        self.gamma_target_db = gamma_target_db
        self.window = window

    def setup(self, net, rng):
        self.rng = rng
        n, R = net.n_pico, net.R
        self.levels_w = level_watts(self.levels_dbm, R)
        A = len(self.levels_w)
        self.state = SatLearnerState(np.full((n, R, A), 1.0 / A))
        self.u_target = target_utility(R, self.gamma_target_db)
        self.u = np.zeros(n)
        self.satisfied = np.zeros(n, bool)
        self.unsat_run = np.zeros(n, int)
        self.detector = EquilibriumDetector(self.window)
        # single-player ceiling: best-placed UE, full per-RB power, no interference
        pico_gain = net.gains.mean_gain[net.pico_ids]
        best = pico_gain.max(axis=1) if n else np.zeros(0)
        snr = (net.pmax_w[net.pico_ids] / R) * best / net.noise
        self.u_max = R * np.minimum(np.log2(1.0 + snr), ETA_MAX)
        self.bias_idx = rng.integers(0, len(self.biases), size=n)
        self._apply_bias(net)

    def _apply_bias(self, net):
        from .association import BiasConfig
        b = np.zeros((net.n_bs, net.n_ccs))
        b[net.n_macro:] = self.biases[self.bias_idx][:, None]
        net.associate(BiasConfig(b))

    def begin_tti(self, net, k):
        if k > 0 and k % self.epoch == 0 and net.n_pico:
            redraw = self.unsat_run >= self.epoch
            if redraw.any():
                new = self.rng.integers(0, len(self.biases), size=net.n_pico)
                self.bias_idx = np.where(redraw, new, self.bias_idx)
                self._apply_bias(net)
            self.unsat_run[:] = np.where(redraw, 0, self.unsat_run)

    def pico_power(self, net, k):
        st = self.state
        if st.action is None:
            st.action = sample_actions(st.pi, self.rng)
        else:
            unsat = self.u < self.u_target
            if unsat.any():
                b = step_size(self.u[unsat], self.u_max[unsat], self.u_target)
                st.pi[unsat] = prob_update(st.pi[unsat], st.action[unsat], b[:, None],
                                           learning_rate(k), self.floor)
                draws = sample_actions(st.pi, self.rng)
                st.action = np.where(unsat[:, None], draws, st.action)
        st.k = k + 1
        return self.levels_w[st.action]

    def macro_hint(self, net, k):
        return Scheme.macro_hint(self, net, k)

    def macro_power(self, net, k, protected):
        return net.uniform_power(~protected, np.arange(net.n_macro))

    def observe(self, net, k, out):
        if not net.n_pico:
            return
        g = out.sinr_db[net.pico_ids]
        lin = np.where(np.isfinite(g), 10 ** (g / 10), 0.0)
        self.u = np.log2(1.0 + lin).sum(axis=1)
        self.satisfied = self.u >= self.u_target
        self.state.satisfied = bool(self.satisfied.all())
        self.unsat_run = np.where(self.satisfied, 0, self.unsat_run + 1)
        self.detector.update(k, self.greedy_policy(), self.satisfied)

    def greedy_policy(self):
        if self.state.action is None:
            return np.zeros(0, int)
        return np.concatenate([self.state.action.ravel(), self.bias_idx])

    def sat_log(self):
        for p in range(len(self.u)):
            acts = "".join(map(str, self.state.action[p]))
            yield [p, repr(float(self.u[p])), int(self.satisfied[p]), f"{self.bias_idx[p]}:{acts}"]

    def complexity(self, net):
        from .metrics import complexity_report
        return complexity_report(0, 0, 1, len(self.biases) * len(self.levels_w), net.R)
