"""Link budget, fast fading, per-RB SINR and the SINR-to-rate mapping."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .topology import NetworkLayout

MACRO = "macro"
PICO = "pico"

# dB -> spectral efficiency ceiling at the 20 dB target SINR
ETA_MAX = math.log2(1.0 + 10.0 ** 2)


def db2lin(x):
    return 10.0 ** (np.asarray(x, float) / 10.0)


def lin2db(x):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(np.asarray(x, float))


def dbm2w(x):
    return 10.0 ** ((np.asarray(x, float) - 30.0) / 10.0)


def w2dbm(x):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(np.asarray(x, float)) + 30.0


@dataclass(frozen=True)
class RbGrid:
    num_rbs: int = 50
    rb_bandwidth: float = 180e3
    num_ccs: int = 1
    subframe_duration: float = 1e-3

    def __post_init__(self):
        if self.num_rbs < 1 or self.rb_bandwidth <= 0 or self.subframe_duration <= 0:
            raise ValueError("invalid RB grid")
        if self.num_ccs < 1 or self.num_rbs % self.num_ccs:
            raise ValueError("RBs must split evenly across component carriers")

    @property
    def rbs_per_cc(self) -> int:
        return self.num_rbs // self.num_ccs

    @property
    def cc_of_rb(self) -> np.ndarray:
        return np.arange(self.num_rbs) // self.rbs_per_cc

    def cc_rbs(self, cc: int) -> slice:
        n = self.rbs_per_cc
        return slice(cc * n, (cc + 1) * n)


@dataclass(frozen=True)
class RadioConfig:
    macro_pmax_dbm: float = 46.0
    pico_pmax_dbm: float = 30.0
    macro_gain_dbi: float = 14.0
    pico_gain_dbi: float = 5.0
    macro_beamwidth_deg: float = 70.0
    macro_front_back_db: float = 25.0
    shadow_std_db: float = 8.0
    shadow_corr: float = 0.5
    fading: bool = True
    fading_rho: float = 0.99
    noise_density_dbm_hz: float = -174.0
    noise_figure_db: float = 9.0
    shadowing: bool = True

    def noise_power_w(self, grid: RbGrid) -> float:
        dbm = self.noise_density_dbm_hz + 10.0 * math.log10(grid.rb_bandwidth) + self.noise_figure_db
        return float(dbm2w(dbm))


def path_loss_db(tier: str, distance_km):
    """Table I distance-dependent path loss, distance in km."""
    d = np.asarray(distance_km, float)
    if np.any(d <= 0) or not np.all(np.isfinite(d)):
        raise ValueError("path loss needs a positive finite distance")
    if tier == MACRO:
        pl = 128.1 + 37.6 * np.log10(d)
    elif tier == PICO:
        pl = 140.7 + 36.7 * np.log10(d)
    else:
        raise ValueError(f"unknown tier {tier!r}")
    return float(pl) if pl.ndim == 0 else pl


def macro_antenna_gain_db(offset_deg, cfg: RadioConfig = RadioConfig()):
    """3-sector parabolic horizontal pattern plus boresight gain."""
    theta = (np.asarray(offset_deg, float) + 180.0) % 360.0 - 180.0
    att = np.minimum(12.0 * (theta / cfg.macro_beamwidth_deg) ** 2, cfg.macro_front_back_db)
    return cfg.macro_gain_dbi - att


def antenna_gain_db(layout: NetworkLayout, cfg: RadioConfig) -> np.ndarray:
    """(n_bs, n_ue) antenna gain; picocells are omnidirectional."""
    g = np.full((layout.n_bs, layout.n_ue), cfg.pico_gain_dbi)
    d = layout.ue_xy - layout.site_xy
    az = np.degrees(np.arctan2(d[:, 1], d[:, 0]))
    for m, bore in enumerate(layout.boresight_deg):
        g[m] = macro_antenna_gain_db(az - bore, cfg)
    return g


def shadowing_db(rng: np.random.Generator, n_sites: int, n_ue: int, cfg: RadioConfig) -> np.ndarray:
    """(n_sites, n_ue) log-normal shadowing with inter-site correlation ``shadow_corr``.

    A per-UE component common to all sites and an independent per-link
    component are mixed so that two sites seen by the same UE correlate
    with coefficient ``shadow_corr``.
    """
    common = rng.standard_normal(n_ue)
    own = rng.standard_normal((n_sites, n_ue))
    c = cfg.shadow_corr
    return cfg.shadow_std_db * (math.sqrt(c) * common[None, :] + math.sqrt(1.0 - c) * own)


@njit(cache=True)
def _ar1_step(re, im, fading, mean_gain, gain, rho, s, rng):
    n_bs, n_ue, R = re.shape
    for b in range(n_bs):
        for u in range(n_ue):
            m = mean_gain[b, u]
            for r in range(R):
                x = rho * re[b, u, r] + s * rng.standard_normal()
                y = rho * im[b, u, r] + s * rng.standard_normal()
                re[b, u, r] = x
                im[b, u, r] = y
                f = x * x + y * y
                fading[b, u, r] = f
                gain[b, u, r] = m * f


class LinkGainMap:
    """Per (BS, UE, RB) linear gains for the current TTI of one drop.

    The large-scale part (path loss, antenna, shadowing) is fixed per drop;
    fast fading is a unit-mean exponential power per (link, RB) obtained from
    a complex Gaussian AR(1) process advanced once per TTI.
    """

    def __init__(self, layout: NetworkLayout, grid: RbGrid, cfg: RadioConfig,
                 rng: np.random.Generator):
        self.layout = layout
        self.grid = grid
        self.cfg = cfg
        self.rng = rng
        self.tti = 0
        dist_km = np.maximum(layout.distances(), 1.0) / 1000.0
        is_macro = layout.is_macro
        pl = np.empty_like(dist_km)
        pl[is_macro] = path_loss_db(MACRO, dist_km[is_macro])
        pl[~is_macro] = path_loss_db(PICO, dist_km[~is_macro])
        self.path_loss_db = pl
        self.antenna_db = antenna_gain_db(layout, cfg)
        if cfg.shadowing:
            site_shadow = shadowing_db(rng, layout.n_pico + 1, layout.n_ue, cfg)
            self.shadow_db = site_shadow[layout.bs_site]
        else:
            self.shadow_db = np.zeros_like(pl)
        self.mean_gain_db = -pl + self.antenna_db - self.shadow_db
        self.mean_gain = db2lin(self.mean_gain_db)
        shape = (layout.n_bs, layout.n_ue, grid.num_rbs)
        if cfg.fading:
            self._re = rng.standard_normal(shape) / math.sqrt(2.0)
            self._im = rng.standard_normal(shape) / math.sqrt(2.0)
            self.fading = self._re ** 2 + self._im ** 2
        else:
            self._re = self._im = None
            self.fading = np.ones(shape)
        self.gain = self.mean_gain[:, :, None] * self.fading

    def advance(self):
        """Step the fading process to the next TTI."""
        self.tti += 1
        if self._re is None:
            return
        rho = self.cfg.fading_rho
        s = math.sqrt((1.0 - rho * rho) / 2.0)
        _ar1_step(self._re, self._im, self.fading, self.mean_gain, self.gain, rho, s, self.rng)

    def link_gain(self, bs: int, ue: int, rb: int) -> float:
        return float(self.gain[bs, ue, rb])

    def link_gain_db(self, bs: int, ue: int, rb: int) -> float:
        return float(lin2db(self.gain[bs, ue, rb]))


def link_gain_db(path_loss: float, antenna_gain: float, shadowing: float = 0.0,
                 fading: float = 1.0) -> float:
    """Compose one link gain in dB from its parts."""
    return -path_loss + antenna_gain - shadowing + 10.0 * math.log10(fading)


@dataclass(frozen=True)
class SinrSample:
    gamma: float
    ue: int
    rb: int
    cc: int
    tti: int

    @property
    def gamma_db(self) -> float:
        return float(lin2db(self.gamma))


class NotScheduledError(RuntimeError):
    pass


def sinr_matrix(power: np.ndarray, gain: np.ndarray, serving_rb: np.ndarray,
                noise: float) -> np.ndarray:
    """Linear SINR of every UE on every RB towards its serving BS.

    ``power`` is the (n_bs, R) radiated power (zero where a BS is silent),
    ``gain`` the (n_bs, n_ue, R) link gains, ``serving_rb`` the (n_ue, R)
    serving BS id (-1 where the UE has no server on that RB's carrier).
    """
    n_ue, R = serving_rb.shape
    rx = power[:, None, :] * gain
    total = rx.sum(axis=0)
    idx = np.maximum(serving_rb, 0)
    sig = np.take_along_axis(rx, idx[None, :, :], axis=0)[0]
    sig = np.where(serving_rb >= 0, sig, 0.0)
    interf = np.maximum(total - sig, 0.0)
    return sig / (interf + noise)


def sinr(ue: int, rb: int, power: np.ndarray, gain: np.ndarray, serving: int,
         assignment: np.ndarray, noise: float, cc: int = 0, tti: int = 0) -> SinrSample:
    """SINR of ``ue`` on ``rb`` given the (n_bs, R) power and assignment maps.

    Interferers are the other BSs holding an assigned UE on the RB.
    """
    if assignment[serving, rb] != ue:
        raise NotScheduledError(f"UE {ue} is not scheduled on RB {rb} by BS {serving}")
    active = assignment[:, rb] >= 0
    p = np.where(active, power[:, rb], 0.0)
    num = p[serving] * gain[serving, ue, rb]
    den = float(np.dot(np.delete(p, serving), np.delete(gain[:, ue, rb], serving))) + noise
    return SinrSample(float(num / den), ue, rb, cc, tti)


def spectral_efficiency(gamma):
    return np.minimum(np.log2(1.0 + np.asarray(gamma, float)), ETA_MAX)


def rate(gamma, grid: RbGrid = RbGrid()):
    """bits/s carried by one RB at linear SINR ``gamma``."""
    g = np.asarray(gamma, float)
    if np.any(g < 0):
        raise ValueError("SINR must be non-negative")
    r = grid.rb_bandwidth * spectral_efficiency(g)
    return float(r) if r.ndim == 0 else r
