"""Biased-RSRP cell selection with per-cell, per-carrier range-expansion bias."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BIAS_SET_DB = (0.0, 6.0, 12.0)


class AssociationError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class BiasConfig:
    """CRE bias in dB per (cell, cc), restricted to ``BIAS_SET_DB``."""

    bias_db: np.ndarray

    def __post_init__(self):
        b = np.atleast_2d(np.asarray(self.bias_db, float))
        if b.ndim != 2:
            raise AssociationError("bias must be (n_cells, n_ccs)")
        if not np.all(np.isin(b, BIAS_SET_DB)):
            raise AssociationError(f"bias values must be in {BIAS_SET_DB} dB")
        object.__setattr__(self, "bias_db", b)

    @classmethod
    def zeros(cls, n_cells: int, n_ccs: int = 1) -> "BiasConfig":
        return cls(np.zeros((n_cells, n_ccs)))

    @property
    def lin(self) -> np.ndarray:
        return 10.0 ** (self.bias_db / 10.0)


@dataclass(frozen=True, eq=False)
class AssociationMap:
    """``serving[ue, cc]`` cell id (-1 if unserved) and the expanded-region flag."""

    serving: np.ndarray
    expanded: np.ndarray

    @property
    def n_ccs(self) -> int:
        return self.serving.shape[1]

    def members(self, cell: int, cc: int = 0) -> np.ndarray:
        return np.flatnonzero(self.serving[:, cc] == cell)


def rsrp_dbm(tx_power_dbm, mean_gain_db, transmits=None) -> np.ndarray:
    """(n_cells, n_ue, n_ccs) RSRP: transmit power per cc plus fading-free gain.

    Cells flagged silent in ``transmits`` (n_cells, n_ccs) get -inf, which
    removes them from candidacy.
    """
    p = np.asarray(tx_power_dbm, float)
    if p.ndim == 1:
        p = p[:, None]
    r = p[:, None, :] + np.asarray(mean_gain_db, float)[:, :, None]
    if transmits is not None:
        r = np.where(np.asarray(transmits, bool)[:, None, :], r, -np.inf)
    return r


def associate(rsrp, bias_db) -> tuple[int, bool]:
    """Serving cell of one UE on one carrier and whether it sits in an expanded region.

    argmax of RSRP + bias with ties to the lowest cell id; silent cells carry
    -inf RSRP and never win.  The ER flag marks a choice that differs from
    the zero-bias choice.
    """
    r = np.asarray(rsrp, float)
    if r.size == 0 or not np.any(np.isfinite(r)):
        raise AssociationError("no candidate cell")
    biased = r + np.asarray(bias_db, float)
    cell = int(np.argmax(biased))
    plain = int(np.argmax(r))
    return cell, cell != plain


def associate_all(rsrp: np.ndarray, bias: BiasConfig) -> AssociationMap:
    """Per-carrier association of every UE (used directly for multi-flow)."""
    rsrp = np.asarray(rsrp, float)
    n_cells, n_ue, n_cc = rsrp.shape
    b = bias.bias_db
    if b.shape != (n_cells, n_cc):
        raise AssociationError(f"bias shape {b.shape} != {(n_cells, n_cc)}")
    alive = np.isfinite(rsrp).any(axis=0)
    biased = rsrp + b[:, None, :]
    serving = np.argmax(biased, axis=0)
    plain = np.argmax(rsrp, axis=0)
    serving = np.where(alive, serving, -1)
    expanded = alive & (serving != plain)
    return AssociationMap(serving.astype(int), expanded)
