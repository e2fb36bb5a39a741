"""Per-iteration spectrum occupancy samples and the free-probability estimates.

``pi[c]`` is the fraction of samples in which basic channel ``c`` was idle;
``rho[(p, n_c)]`` is the fraction in which the whole bond of width ``n_c``
around ``p`` was idle.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .channelization import NUM_CHANNELS, WIDTHS, Allocation, allowed_widths, tx_mask


class OccupancySamples:
    """Free-channel bitmask samples collected during one iteration.

    Samples are kept as a mask histogram; raw ``(time, mask)`` pairs are also
    kept when ``keep_raw`` is set (tests, debugging dumps).
    """

    def __init__(self, keep_raw: bool = False):
        self.keep_raw = keep_raw
        self.hist: Counter[int] = Counter()
        self.count = 0
        self.raw: list[tuple[float, int]] = []

    def record_sample(self, free_mask: int, time: float) -> None:
        self.hist[free_mask] += 1
        self.count += 1
        if self.keep_raw:
            self.raw.append((time, free_mask))

    def record_repeated(self, free_mask: int, n: int) -> None:
        """``n`` identical samples (a periodic sampler over a constant-state interval)."""
        if n <= 0:
            return
        self.hist[free_mask] += n
        self.count += n

    def clear(self) -> None:
        self.hist.clear()
        self.count = 0
        self.raw.clear()


def record_sample(samples: OccupancySamples, free_mask: int, time: float) -> None:
    samples.record_sample(free_mask, time)


@dataclass
class OccupancyStats:
    pi: list[float] = field(default_factory=lambda: [0.0] * NUM_CHANNELS)
    rho: dict[tuple[int, int], float] = field(default_factory=dict)
    count: int = 0
    # integer numerators behind the ratios, for exact comparisons
    pi_counts: list[int] = field(default_factory=lambda: [0] * NUM_CHANNELS)
    rho_counts: dict[tuple[int, int], int] = field(default_factory=dict)

    @property
    def no_data(self) -> bool:
        return self.count == 0

    def rho_vector(self, p: int, widths=WIDTHS) -> dict[int, float]:
        return {n: self.rho[(p, n)] for n in widths if (p, n) in self.rho}


def compute_stats(samples: OccupancySamples, alloc: Allocation, widths=WIDTHS) -> OccupancyStats:
    stats = OccupancyStats(count=samples.count)
    if samples.count == 0:
        return stats
    for mask, k in samples.hist.items():
        for c in range(NUM_CHANNELS):
            if mask >> c & 1:
                stats.pi_counts[c] += k
    for p in sorted(alloc.channels):
        for n in allowed_widths(p, alloc, widths):
            m = tx_mask(p, n, tuple(widths))
            stats.rho_counts[(p, n)] = sum(k for mask, k in samples.hist.items() if mask & m == m)
    stats.pi = [x / samples.count for x in stats.pi_counts]
    stats.rho = {key: v / samples.count for key, v in stats.rho_counts.items()}
    for p in alloc.channels:
        ws = [n for n in widths if (p, n) in stats.rho_counts]
        for a, b in zip(ws, ws[1:]):
            assert stats.rho_counts[(p, a)] >= stats.rho_counts[(p, b)], "rho not nesting-monotone"
    return stats


def stats_rows(stats: OccupancyStats, wlan: int, iteration: int) -> list[tuple]:
    """Rows ``(wlan, iteration, key, probability)`` for the debugging dump."""
    rows = [(wlan, iteration, f"pi:{c + 1}", stats.pi[c]) for c in range(NUM_CHANNELS)]
    rows += [(wlan, iteration, f"rho:{p}:{n}", v) for (p, n), v in sorted(stats.rho.items())]
    return rows


def empty_stats() -> OccupancyStats:
    return OccupancyStats()

