"""Per-RB proportional-fair scheduling under full-buffer traffic."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

UNASSIGNED = -1


@dataclass
class PfState:
    """Exponentially smoothed served rate per (UE, carrier), bits/s."""

    n_ue: int
    n_ccs: int = 1
    window: float = 100.0
    floor: float = 1.0
    avg_rate: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.avg_rate is None:
            self.avg_rate = np.full((self.n_ue, self.n_ccs), self.floor)

    def update(self, served_rate: np.ndarray) -> None:
        """``served_rate`` is (n_ue, n_ccs) bits/s delivered in the last TTI."""
        b = 1.0 / self.window
        self.avg_rate = np.maximum((1.0 - b) * self.avg_rate + b * served_rate, self.floor)


def pf_schedule(candidates, inst_rate, mask, avg_rate) -> np.ndarray:
    """Single-BS PF assignment.

    ``candidates`` are UE ids, ``inst_rate`` is (len(candidates), R) bits/s,
    ``mask`` the (R,) permitted RBs, ``avg_rate`` the candidates' smoothed
    rates.  Returns (R,) UE id per RB or ``UNASSIGNED``; equal metrics go to
    the lowest UE id.
    """
    candidates = np.asarray(candidates, int)
    mask = np.asarray(mask, bool)
    out = np.full(mask.shape, UNASSIGNED, int)
    if candidates.size == 0:
        return out
    order = np.argsort(candidates, kind="stable")
    cand = candidates[order]
    metric = np.asarray(inst_rate, float)[order] / np.asarray(avg_rate, float)[order, None]
    best = np.argmax(metric, axis=0)
    out[mask] = cand[best[mask]]
    return out


def pf_schedule_all(inst_rate: np.ndarray, serving_rb: np.ndarray, avg_rate_rb: np.ndarray,
                    mask: np.ndarray, n_bs: int, bs_subset=None) -> np.ndarray:
    """Vectorized PF over many BSs.

    ``inst_rate``, ``serving_rb`` and ``avg_rate_rb`` are (n_ue, R); ``mask``
    is (n_bs, R).  Returns the (n_bs, R) assignment; rows outside
    ``bs_subset`` stay unassigned.
    """
    n_ue, R = serving_rb.shape
    bss = np.arange(n_bs) if bs_subset is None else np.asarray(bs_subset, int)
    metric = inst_rate / avg_rate_rb
    own = serving_rb[None, :, :] == bss[:, None, None]
    m = np.where(own, metric[None, :, :], -1.0)
    best = np.argmax(m, axis=1)
    has = np.take_along_axis(m, best[:, None, :], axis=1)[:, 0, :] >= 0.0
    out = np.full((n_bs, R), UNASSIGNED, int)
    sub = np.where(has & mask[bss], best, UNASSIGNED)
    out[bss] = sub
    return out


def er_rb_report(assignment_row: np.ndarray, expanded_rb: np.ndarray) -> set[int]:
    """RBs on which a picocell scheduled an expanded-region UE.

    ``expanded_rb`` is the (n_ue, R) ER flag of each UE on each RB's carrier.
    """
    a = np.asarray(assignment_row, int)
    rbs = np.flatnonzero(a >= 0)
    return {int(r) for r in rbs if expanded_rb[a[r], r]}


def er_rb_mask(assignment: np.ndarray, expanded_rb: np.ndarray) -> np.ndarray:
    """(n_bs, R) boolean form of :func:`er_rb_report` for every BS."""
    a = np.maximum(assignment, 0)
    R = assignment.shape[1]
    flag = expanded_rb[a, np.arange(R)[None, :]]
    return (assignment >= 0) & flag
