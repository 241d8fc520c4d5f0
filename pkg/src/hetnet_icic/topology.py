"""Single-site, three-sector macro layout with picocell and UE drops.

The macro site sits at the origin.  Its hexagonal cell (circumradius
``ISD / sqrt(3)``, vertices at 0, 60, ..., 300 degrees) is split into
sectors by the boresight azimuths; picocells and UEs are dropped by
rejection sampling inside a sector under the minimum-distance rules.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class LayoutError(ValueError):
    """Invalid scenario configuration."""


class InfeasibleLayoutError(RuntimeError):
    """Rejection sampling could not satisfy a minimum-distance constraint."""

    def __init__(self, constraint: str, attempts: int):
        self.constraint = constraint
        self.attempts = attempts
        super().__init__(
            f"layout infeasible: constraint '{constraint}' still violated "
            f"after {attempts} rejection attempts")


@dataclass(frozen=True)
class ScenarioConfig:
    num_macro_sectors: int = 3
    num_pbs_per_sector: int = 2
    num_ues_per_sector: int = 30
    hotspot_radius: float = 40.0
    min_dist_mbs_pbs: float = 75.0
    min_dist_pbs_pbs: float = 40.0
    min_dist_mbs_mue: float = 35.0
    min_dist_pbs_pue: float = 10.0
    inter_site_distance: float = 500.0
    seed: int = 0
    max_attempts: int = 100_000

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.num_macro_sectors < 1:
            raise LayoutError("num_macro_sectors must be >= 1")
        # P = 0 is the macro-only reference deployment
        if self.num_pbs_per_sector < 0:
            raise LayoutError("num_pbs_per_sector must be >= 0")
        if self.num_ues_per_sector < max(self.num_pbs_per_sector, 1):
            raise LayoutError("num_ues_per_sector must be >= num_pbs_per_sector and >= 1")
        for name in ("hotspot_radius", "min_dist_mbs_pbs", "min_dist_pbs_pbs",
                     "min_dist_mbs_mue", "min_dist_pbs_pue", "inter_site_distance"):
            if not getattr(self, name) > 0:
                raise LayoutError(f"{name} must be > 0")
        if self.min_dist_pbs_pue >= self.hotspot_radius:
            raise LayoutError("min_dist_pbs_pue must be below hotspot_radius")
        if self.num_pbs_per_sector * self.num_hotspot_ues > self.num_ues_per_sector:
            raise LayoutError(
                f"{self.num_pbs_per_sector} picocells x {self.num_hotspot_ues} hotspot UEs "
                f"exceed {self.num_ues_per_sector} UEs per sector")
        if self.max_attempts < 1:
            raise LayoutError("max_attempts must be >= 1")

    @property
    def num_hotspot_ues(self) -> int:
        """Hotspot UEs per picocell, ceil(2/3 * N_UE / P)."""
        if self.num_pbs_per_sector == 0:
            return 0
        # exact integer ceil of 2*N / (3*P)
        return -(-2 * self.num_ues_per_sector // (3 * self.num_pbs_per_sector))

    @property
    def num_uniform_ues(self) -> int:
        return self.num_ues_per_sector - self.num_pbs_per_sector * self.num_hotspot_ues

    @property
    def cell_radius(self) -> float:
        return self.inter_site_distance / math.sqrt(3.0)


@dataclass(frozen=True, eq=False)
class NetworkLayout:
    """Geometry of one drop.

    Base-station ids: macro sectors ``0 .. M-1`` then picocells
    ``M .. M+P_total-1``.  UE ids are ``0 .. U-1``.  ``ue_hotspot`` holds the
    picocell index (not BS id) of a hotspot UE, or -1 for a uniform drop.
    """

    boresight_deg: np.ndarray
    pico_xy: np.ndarray
    pico_sector: np.ndarray
    ue_xy: np.ndarray
    ue_sector: np.ndarray
    ue_hotspot: np.ndarray
    cell_radius: float = 500.0 / math.sqrt(3.0)
    site_xy: np.ndarray = field(default_factory=lambda: np.zeros(2))

    @property
    def n_macro(self) -> int:
        return len(self.boresight_deg)

    @property
    def n_pico(self) -> int:
        return len(self.pico_xy)

    @property
    def n_bs(self) -> int:
        return self.n_macro + self.n_pico

    @property
    def n_ue(self) -> int:
        return len(self.ue_xy)

    @property
    def bs_xy(self) -> np.ndarray:
        macro = np.repeat(self.site_xy[None, :], self.n_macro, axis=0)
        return np.vstack([macro, self.pico_xy.reshape(-1, 2)])

    @property
    def is_macro(self) -> np.ndarray:
        return np.arange(self.n_bs) < self.n_macro

    @property
    def bs_site(self) -> np.ndarray:
        """Site index per BS: all macro sectors share site 0."""
        return np.concatenate([np.zeros(self.n_macro, int), 1 + np.arange(self.n_pico)])

    @property
    def parent_macro(self) -> np.ndarray:
        """Macro sector id owning each BS (a macro owns itself)."""
        return np.concatenate([np.arange(self.n_macro), self.pico_sector]).astype(int)

    def distances(self) -> np.ndarray:
        """(n_bs, n_ue) BS-UE distances in meters."""
        d = self.bs_xy[:, None, :] - self.ue_xy[None, :, :]
        return np.hypot(d[..., 0], d[..., 1])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["id", "type", "x", "y", "tag"])
            for m, az in enumerate(self.boresight_deg):
                w.writerow([m, "macro", repr(float(self.site_xy[0])),
                            repr(float(self.site_xy[1])), f"azimuth({float(az)!r})"])
            for p, (x, y) in enumerate(self.pico_xy):
                w.writerow([self.n_macro + p, "pico", repr(float(x)), repr(float(y)),
                            f"sector({int(self.pico_sector[p])})"])
            for u, (x, y) in enumerate(self.ue_xy):
                h = int(self.ue_hotspot[u])
                tag = f"hotspot({h})" if h >= 0 else "uniform"
                w.writerow([u, "ue", repr(float(x)), repr(float(y)),
                            f"{tag};sector({int(self.ue_sector[u])})"])

    @classmethod
    def from_csv(cls, path, inter_site_distance: float = 500.0) -> "NetworkLayout":
        macros, picos, ues = [], [], []
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                kind = row["type"]
                x, y = float(row["x"]), float(row["y"])
                tags = dict(_parse_tag(t) for t in row["tag"].split(";"))
                if kind == "macro":
                    macros.append((x, y, tags["azimuth"]))
                elif kind == "pico":
                    picos.append((x, y, int(tags["sector"])))
                elif kind == "ue":
                    ues.append((x, y, int(tags.get("sector", -1)), int(tags.get("hotspot", -1))))
                else:
                    raise LayoutError(f"unknown node type {kind!r}")
        if not macros:
            raise LayoutError("layout CSV has no macro rows")
        return cls(
            boresight_deg=np.array([m[2] for m in macros], float),
            pico_xy=np.array([p[:2] for p in picos], float).reshape(-1, 2),
            pico_sector=np.array([p[2] for p in picos], int),
            ue_xy=np.array([u[:2] for u in ues], float).reshape(-1, 2),
            ue_sector=np.array([u[2] for u in ues], int),
            ue_hotspot=np.array([u[3] for u in ues], int),
            cell_radius=inter_site_distance / math.sqrt(3.0),
            site_xy=np.array(macros[0][:2], float),
        )


def _parse_tag(tag: str):
    name, _, rest = tag.partition("(")
    value = rest.rstrip(")")
    if name == "uniform":
        return "hotspot", "-1"
    if name == "azimuth":
        return name, float(value)
    return name, value


def boresights(num_sectors: int) -> np.ndarray:
    return np.arange(num_sectors) * 360.0 / num_sectors


def in_hexagon(xy: np.ndarray, radius: float) -> np.ndarray:
    """Points inside the hexagon with vertices at 0, 60, ..., 300 degrees."""
    x = np.abs(xy[..., 0])
    y = np.abs(xy[..., 1])
    h = radius * math.sqrt(3.0) / 2.0
    return (y <= h) & (math.sqrt(3.0) * x + y <= math.sqrt(3.0) * radius)


def sector_of(xy: np.ndarray, num_sectors: int) -> np.ndarray:
    """Sector whose boresight is angularly closest to each point."""
    az = np.degrees(np.arctan2(xy[..., 1], xy[..., 0]))
    width = 360.0 / num_sectors
    return np.floor(np.mod(az + width / 2.0, 360.0) / width).astype(int)


def sample_in_sector(rng: np.random.Generator, n: int, sector: int, num_sectors: int,
                     radius: float, batch: int = 256) -> np.ndarray:
    """``n`` points uniform over the sector area (hexagon cut by azimuth)."""
    out = np.empty((0, 2))
    while len(out) < n:
        cand = rng.uniform(-radius, radius, size=(batch, 2))
        ok = in_hexagon(cand, radius) & (sector_of(cand, num_sectors) == sector)
        out = np.vstack([out, cand[ok]])
    return out[:n]


def sample_in_disc(rng: np.random.Generator, n: int, center: np.ndarray, radius: float) -> np.ndarray:
    r = radius * np.sqrt(rng.random(n))
    t = rng.uniform(0.0, 2.0 * math.pi, n)
    return center + np.column_stack([r * np.cos(t), r * np.sin(t)])


def _draw(rng, proposal, checks, n, max_attempts):
    """Draw ``n`` points from ``proposal`` passing every (name, check) pair.

    Candidates are screened in blocks; more than ``max_attempts`` consecutive
    rejections raise :class:`InfeasibleLayoutError` naming the most often
    violated constraint.
    """
    fails = {name: 0 for name, _ in checks}
    out = []
    got = 0
    since = 0
    while got < n:
        need = n - got
        block = int(min(max(64, 8 * need), max_attempts))
        cand = proposal(block)
        ok = np.ones(block, bool)
        for name, check in checks:
            bad = ~check(cand)
            fails[name] += int(np.count_nonzero(bad & ok))
            ok &= ~bad
        hit = np.flatnonzero(ok)[:need]
        gaps = np.diff(np.concatenate([[-1 - since], hit])) - 1
        if hit.size == 0 or np.any(gaps >= max_attempts):
            if hit.size == 0 and since + block < max_attempts:
                since += block
                continue
            worst = max(fails, key=fails.get)
            raise InfeasibleLayoutError(worst, max_attempts)
        out.append(cand[hit])
        got += hit.size
        since = block - 1 - hit[-1]
    return np.concatenate(out)[:n]


def _min_dist_check(points: np.ndarray, dmin: float):
    points = np.asarray(points).reshape(-1, 2)
    if points.size == 0:
        return lambda c: np.ones(len(c), bool)

    def check(c):
        d = np.hypot(c[:, None, 0] - points[None, :, 0], c[:, None, 1] - points[None, :, 1])
        return np.all(d >= dmin, axis=1)
    return check


def generate_layout(config: ScenarioConfig) -> NetworkLayout:
    """Drop picocells and UEs for one realization; a pure function of ``config``."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    M = config.num_macro_sectors
    R = config.cell_radius
    site = np.zeros(2)
    site_pts = site[None, :]

    pico_xy, pico_sector = [], []
    for s in range(M):
        for _ in range(config.num_pbs_per_sector):
            checks = [
                ("min_dist_mbs_pbs", _min_dist_check(site_pts, config.min_dist_mbs_pbs)),
                ("min_dist_pbs_pbs", _min_dist_check(np.array(pico_xy), config.min_dist_pbs_pbs)),
            ]
            pt = _draw(rng, lambda b, s=s: sample_in_sector(rng, b, s, M, R),
                       checks, 1, config.max_attempts)
            pico_xy.append(pt[0])
            pico_sector.append(s)
    pico_xy = np.array(pico_xy, float).reshape(-1, 2)

    ue_checks = [
        ("min_dist_mbs_mue", _min_dist_check(site_pts, config.min_dist_mbs_mue)),
        ("min_dist_pbs_pue", _min_dist_check(pico_xy, config.min_dist_pbs_pue)),
    ]
    ue_xy, ue_sector, ue_hotspot = [], [], []
    n_hot, n_uni = config.num_hotspot_ues, config.num_uniform_ues
    for s in range(M):
        for p in np.flatnonzero(np.array(pico_sector, int) == s):
            pts = _draw(rng, lambda b, p=p: sample_in_disc(rng, b, pico_xy[p], config.hotspot_radius),
                        ue_checks, n_hot, config.max_attempts)
            ue_xy.append(pts)
            ue_sector += [s] * n_hot
            ue_hotspot += [int(p)] * n_hot
        if n_uni:
            pts = _draw(rng, lambda b, s=s: sample_in_sector(rng, b, s, M, R),
                        ue_checks, n_uni, config.max_attempts)
            ue_xy.append(pts)
            ue_sector += [s] * n_uni
            ue_hotspot += [-1] * n_uni
    ue_xy = np.concatenate(ue_xy) if ue_xy else np.zeros((0, 2))

    return NetworkLayout(
        boresight_deg=boresights(M),
        pico_xy=pico_xy,
        pico_sector=np.array(pico_sector, int),
        ue_xy=np.asarray(ue_xy, float).reshape(-1, 2),
        ue_sector=np.array(ue_sector, int),
        ue_hotspot=np.array(ue_hotspot, int),
        cell_radius=R,
        site_xy=site,
    )


def check_layout(layout: NetworkLayout, config: ScenarioConfig) -> list[str]:
    """Names of violated layout invariants (empty when the layout is valid)."""
    bad = []
    site = layout.site_xy
    d_mp = np.hypot(*(layout.pico_xy - site).T) if layout.n_pico else np.array([])
    if np.any(d_mp < config.min_dist_mbs_pbs):
        bad.append("min_dist_mbs_pbs")
    if layout.n_pico > 1:
        d = np.hypot(*(layout.pico_xy[:, None] - layout.pico_xy[None]).transpose(2, 0, 1))
        iu = np.triu_indices(layout.n_pico, 1)
        if np.any(d[iu] < config.min_dist_pbs_pbs):
            bad.append("min_dist_pbs_pbs")
    if np.any(np.hypot(*(layout.ue_xy - site).T) < config.min_dist_mbs_mue):
        bad.append("min_dist_mbs_mue")
    if layout.n_pico:
        d = np.hypot(*(layout.ue_xy[:, None] - layout.pico_xy[None]).transpose(2, 0, 1))
        if np.any(d < config.min_dist_pbs_pue):
            bad.append("min_dist_pbs_pue")
        for p in range(layout.n_pico):
            mine = layout.ue_hotspot == p
            if np.count_nonzero(mine) != config.num_hotspot_ues:
                bad.append("hotspot_count")
                break
            if np.any(d[mine, p] > config.hotspot_radius):
                bad.append("hotspot_radius")
                break
    return bad
