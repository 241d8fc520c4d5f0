"""Non-learning ICIC baselines: resource partitioning, plain CRE, fixed and adaptive ABS."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .association import BIAS_SET_DB, BiasConfig
from .engine import Network, Scheme

ABS_RATIOS = (0.1, 0.3, 0.7)
ABS_REDUCTIONS_DB = (0.0, 6.0, 9.0, 12.0, 18.0, 24.0)


@dataclass(frozen=True)
class AbsPattern:
    """Macro ABS pattern over a 10-subframe frame.

    ``reduction_db=None`` blanks data completely in ABS subframes; a number
    scales the macro PSD by that many dB instead.  ABS occupy the first
    ``ratio * period`` subframes unless ``placement='alternate'``.
    """

    ratio: float = 0.3
    reduction_db: float | None = None
    period: int = 10
    placement: str = "prefix"

    def __post_init__(self):
        k = self.ratio * self.period
        if not (0 <= self.ratio <= 1) or abs(k - round(k)) > 1e-9:
            raise ValueError(f"ABS ratio {self.ratio} does not fit a {self.period}-subframe frame")
        if self.reduction_db is not None and self.reduction_db < 0:
            raise ValueError("ABS power reduction must be >= 0 dB")
        if self.placement not in ("prefix", "alternate"):
            raise ValueError("placement must be 'prefix' or 'alternate'")

    @property
    def muted(self) -> np.ndarray:
        n = int(round(self.ratio * self.period))
        m = np.zeros(self.period, bool)
        if self.placement == "prefix":
            m[:n] = True
        else:
            # spread n ABS as evenly as possible, odd subframes first
            order = np.concatenate([np.arange(1, self.period, 2), np.arange(0, self.period, 2)])
            m[order[:n]] = True
        return m

    def is_abs(self, subframe: int) -> bool:
        return bool(self.muted[subframe % self.period])


def abs_power_scale(pattern: AbsPattern, subframe: int) -> float:
    """Linear factor on macro PSD in ``subframe``."""
    if not pattern.is_abs(subframe):
        return 1.0
    if pattern.reduction_db is None:
        return 0.0
    return 10.0 ** (-pattern.reduction_db / 10.0)


def rp_masks(R: int) -> tuple[np.ndarray, np.ndarray]:
    """Macro gets the lower half of the RBs (rounded down), picocells the rest."""
    macro = np.arange(R) < R // 2
    return macro, ~macro


def adaptive_abs_masks(er_reports, R: int) -> np.ndarray:
    """Permitted macro RBs: everything outside the union of reported ER-PUE RB sets."""
    muted = set()
    for rep in er_reports:
        muted |= set(int(r) for r in rep)
    allowed = np.ones(R, bool)
    if muted:
        allowed[sorted(muted)] = False
    return allowed


def _check_bias(bias_db):
    if bias_db not in BIAS_SET_DB:
        raise ValueError(f"bias must be one of {BIAS_SET_DB} dB")
    return float(bias_db)


def pico_bias(net: Network, bias_db: float) -> BiasConfig:
    b = np.zeros((net.n_bs, net.n_ccs))
    b[net.n_macro:] = bias_db
    return BiasConfig(b)


class ResourcePartitioning(Scheme):
    name = "RP"

    def setup(self, net, rng):
        super().setup(net, rng)
        m, p = rp_masks(net.R)
        self._macro = net.uniform_power(np.tile(m, (net.n_macro, 1)), np.arange(net.n_macro))
        self._pico = net.uniform_power(np.tile(p, (net.n_pico, 1)), net.pico_ids)

    def pico_power(self, net, k):
        return self._pico

    def macro_hint(self, net, k):
        return self._macro

    def macro_power(self, net, k, protected):
        return self._macro


class NoIcicCre(Scheme):
    """Reuse-1 with a common picocell bias and no coordination."""

    def __init__(self, bias_db: float = 0.0):
        self.bias_db = _check_bias(bias_db)
        self.name = f"NoIcicCre({self.bias_db:g})"

    def setup(self, net, rng):
        self.rng = rng
        net.associate(pico_bias(net, self.bias_db))
        self._macro = net.uniform_power(np.ones((net.n_macro, net.R)), np.arange(net.n_macro))

    def macro_hint(self, net, k):
        return self._macro

    def macro_power(self, net, k, protected):
        return self._macro


class FixedAbsCre(NoIcicCre):
    """Fixed macro ABS pattern (blanked or power-reduced) with a common picocell bias."""

    def __init__(self, ratio: float = 0.3, bias_db: float = 0.0,
                 reduction_db: float | None = None, placement: str = "prefix"):
        super().__init__(bias_db)
        self.pattern = AbsPattern(ratio, reduction_db, placement=placement)
        red = "mute" if reduction_db is None else f"{reduction_db:g}dB"
        self.name = f"FixedAbsCre({ratio:g},{self.bias_db:g},{red})"

    def macro_hint(self, net, k):
        return self._macro * abs_power_scale(self.pattern, k)

    def macro_power(self, net, k, protected):
        return self.macro_hint(net, k)


class FixedCreAdaptiveAbs(NoIcicCre):
    """Fixed picocell bias; each macro sector blanks the RBs its picocells report for ER PUEs."""

    def __init__(self, bias_db: float = 12.0):
        super().__init__(bias_db)
        self.name = f"FixedCreAdaptiveAbs({self.bias_db:g})"

    def macro_hint(self, net, k):
        return Scheme.macro_hint(self, net, k)

    def macro_power(self, net, k, protected):
        return net.uniform_power(~protected, np.arange(net.n_macro))
