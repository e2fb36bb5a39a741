"""Online primary channel selection: FP, DR, DF and DyWi (DW)."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Real
from typing import Mapping, Optional, Sequence

import numpy as np

from .channelization import WIDTHS, Allocation
from .occupancy import OccupancyStats


class Scheme(str, enum.Enum):
    FP = "FP"
    DR = "DR"
    DF = "DF"
    DW = "DW"


@dataclass(frozen=True)
class SelectionConfig:
    scheme: Scheme = Scheme.FP
    eta: float = 0.9
    iteration_s: float = 1.0
    delta_s: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if not 0 < self.eta <= 1:
            raise ValueError("eta must be in (0, 1]")
        if not self.iteration_s > 0:
            raise ValueError("iteration duration must be positive")
        if self.delta_s < 0:
            raise ValueError("switching delay must be non-negative")


@dataclass(frozen=True)
class IterationRecord:
    index: int
    s_bps: float
    ell_bps: float
    satisfied: bool
    primary: int


@dataclass
class Decision:
    satisfied: bool
    old_primary: int
    new_primary: int
    fallback: bool = False
    rhat: dict[int, float] = field(default_factory=dict)

    @property
    def switched(self) -> bool:
        return self.new_primary != self.old_primary


def satisfied(s: float, ell: float, eta: float = 0.9) -> bool:
    return s >= eta * ell


def exclusive_bond_probs(rho: Mapping[int, Real], widths: Sequence[int] = WIDTHS) -> dict[int, Real]:
    """Probability of transmitting on exactly each width, widest first.

    P(n_max) = rho(n_max); P(n) = rho(n) - sum of P over wider widths,
    clamped at 0. Works on floats or Fractions alike.
    """
    ws = sorted(n for n in widths if n in rho)
    for n in ws:
        if not 0 <= rho[n] <= 1:
            raise ValueError(f"rho({n}) = {rho[n]} outside [0, 1]")
    monotone = all(rho[a] >= rho[b] for a, b in zip(ws, ws[1:]))
    out: dict[int, Real] = {}
    wider = 0
    for n in reversed(ws):
        v = rho[n] - wider
        if v < 0:
            # float residue only; a real negative means rho was not nested
            assert not monotone or v > -1e-12, "negative exclusive probability from nested rho"
            v = v * 0
        out[n] = v
        wider = wider + v
    return {n: out[n] for n in ws}


def expected_rate(P: Mapping[int, Real], rates: Mapping[int, Real]) -> Real:
    return sum(P[n] * rates[n] for n in P)


def _rho_exact(stats: OccupancyStats, p: int, widths: Sequence[int]) -> dict[int, Fraction]:
    return {n: Fraction(stats.rho_counts[(p, n)], stats.count) for n in widths if (p, n) in stats.rho_counts}


def dywi_scores(stats: OccupancyStats, candidates: Sequence[int], rates: Mapping[int, float],
                widths: Sequence[int] = WIDTHS) -> dict[int, Fraction]:
    """Expected data rate of each candidate primary, in exact arithmetic."""
    exact_rates = {n: Fraction(r) for n, r in rates.items()}
    scores = {}
    for p in candidates:
        P = exclusive_bond_probs(_rho_exact(stats, p, widths), widths)
        scores[p] = expected_rate(P, exact_rates)
    return scores


def _argmax_lowest(values: Mapping[int, Real]) -> int:
    best = None
    for p in sorted(values):
        if best is None or values[p] > values[best]:
            best = p
    return best


def select_primary(scheme: Scheme | str, current_p: int, stats: Optional[OccupancyStats],
                   rates: Mapping[int, float], rng: np.random.Generator, alloc: Allocation,
                   widths: Sequence[int] = WIDTHS) -> Decision:
    """Pick a new primary different from ``current_p`` after an unsatisfied iteration."""
    scheme = Scheme(scheme)
    candidates = sorted(alloc.channels - {current_p})
    if not candidates:
        raise ValueError("single-channel allocation cannot switch primary")
    if current_p not in alloc.channels:
        raise ValueError(f"current primary {current_p} outside allocation")
    if scheme is Scheme.FP:
        return Decision(False, current_p, current_p)

    fallback = False
    if scheme in (Scheme.DF, Scheme.DW) and (stats is None or stats.no_data):
        scheme, fallback = Scheme.DR, True

    if scheme is Scheme.DR:
        new_p = candidates[int(rng.integers(len(candidates)))]
        return Decision(False, current_p, new_p, fallback=fallback)
    if scheme is Scheme.DF:
        new_p = _argmax_lowest({p: stats.pi_counts[p - 1] for p in candidates})
        return Decision(False, current_p, new_p)

    usable = {n: rates[n] for n in widths if n in rates}
    scores = dywi_scores(stats, candidates, usable, [n for n in widths if n in usable])
    new_p = _argmax_lowest(scores)
    return Decision(False, current_p, new_p, rhat={p: float(v) for p, v in scores.items()})


def decide(config: SelectionConfig, record_s: float, record_ell: float, current_p: int,
           stats: Optional[OccupancyStats], rates: Mapping[int, float], rng: np.random.Generator,
           alloc: Allocation, widths: Sequence[int] = WIDTHS) -> Decision:
    """Satisfaction test followed, when unsatisfied, by the configured scheme."""
    ok = satisfied(record_s, record_ell, config.eta)
    if ok or config.scheme is Scheme.FP or alloc.size < 2:
        return Decision(ok, current_p, current_p)
    d = select_primary(config.scheme, current_p, stats, rates, rng, alloc, widths)
    d.satisfied = False
    return d

