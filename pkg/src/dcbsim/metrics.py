"""Evaluation metrics of a WLAN across runs: throughput, delay, P_A, CDF(k)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .engine import SimulationResult, WlanResult

QUANTILES = (5, 25, 50, 75, 95)


@dataclass(frozen=True)
class RunMetrics:
    s_mean: float
    d_mean: float  # nan when nothing was delivered
    satisfied: tuple[bool, ...] = ()
    k_first: Optional[int] = None
    load_bps: float = 0.0


@dataclass(frozen=True)
class DelayStats:
    n: int
    mean: float
    quantiles: dict[int, float] = field(default_factory=dict)

    @property
    def defined(self) -> bool:
        return self.n > 0


def _wlan(result: SimulationResult, wlan: int) -> WlanResult:
    for w in result.wlans:
        if w.id == wlan:
            return w
    raise KeyError(f"no wlan {wlan} in result")


def throughput(result: SimulationResult, wlan: int = 0) -> float:
    """Acknowledged bits over the observation time (bits/s)."""
    if not result.t_obs_s > 0:
        raise ValueError("observation time must be positive")
    return _wlan(result, wlan).delivered_bits / result.t_obs_s


def delay_stats(result: SimulationResult, wlan: int = 0) -> DelayStats:
    d = _wlan(result, wlan).delays_s
    if len(d) == 0:
        return DelayStats(0, math.nan, {q: math.nan for q in QUANTILES})
    qs = np.percentile(d, QUANTILES)
    return DelayStats(len(d), float(np.mean(d)), {q: float(v) for q, v in zip(QUANTILES, qs)})


def first_satisfied(flags: Sequence[bool]) -> Optional[int]:
    for k, ok in enumerate(flags, start=1):
        if ok:
            return k
    return None


def run_metrics(result: SimulationResult, wlan: int = 0, load_bps: float = 0.0) -> RunMetrics:
    w = _wlan(result, wlan)
    flags = tuple(r.satisfied for r in w.iterations)
    return RunMetrics(throughput(result, wlan), delay_stats(result, wlan).mean, flags,
                      first_satisfied(flags), load_bps)


def satisfaction_probability(runs: Iterable, load_bps: Optional[float] = None, eps_s: float = 0.05) -> float:
    """Fraction of runs with s_mean >= (1 - eps_s) * load.

    ``runs`` holds RunMetrics (their own load is used unless ``load_bps`` is
    given) or bare throughputs together with ``load_bps``.
    """
    if not 0 <= eps_s < 1:
        raise ValueError("eps_s must be in [0, 1)")
    runs = list(runs)
    if not runs:
        raise ValueError("no runs")
    hits = 0
    for r in runs:
        s = r.s_mean if isinstance(r, RunMetrics) else float(r)
        load = load_bps if load_bps is not None else r.load_bps
        hits += s >= (1 - eps_s) * load
    return hits / len(runs)


def iterations_to_satisfaction_cdf(runs: Iterable, k_max: int) -> list[float]:
    """CDF(k), k = 1..k_max, of the first satisfied iteration; never-satisfied runs never count.

    ``runs`` holds RunMetrics or raw ``k_first`` values (None = never).
    """
    ks = [r.k_first if isinstance(r, RunMetrics) else r for r in runs]
    if not ks:
        return [0.0] * k_max
    return [sum(1 for k in ks if k is not None and k <= kk) / len(ks) for kk in range(1, k_max + 1)]
