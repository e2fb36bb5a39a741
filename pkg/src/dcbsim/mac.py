"""CSMA/CA with dynamic channel bonding: backoff, PIFS assessment, framing.

Times are integer nanoseconds unless a name says otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .channelization import Allocation, ChannelizationError, mask_of, tx_mask, widest_available_mask
from .phy import MCSTable, PhyParams, default_mcs_table, link_snr
from .traffic import Buffer, TrafficParams

US = 1000


@dataclass(frozen=True)
class MacParams:
    cw_min: int = 16
    stages: int = 5
    slot_ns: int = 9 * US
    sifs_ns: int = 16 * US
    difs_ns: int = 34 * US
    pifs_ns: int = 25 * US
    # simplified HE framing overheads
    phy_header_ns: int = 40 * US
    ack_ns: int = 32 * US
    symbol_ns: int = 13_600
    mpdu_header_bits: int = 320

    def __post_init__(self):
        if self.pifs_ns != self.sifs_ns + self.slot_ns:
            raise ValueError("PIFS must equal SIFS + slot")
        if self.difs_ns != self.sifs_ns + 2 * self.slot_ns:
            raise ValueError("DIFS must equal SIFS + 2 slots")
        if self.cw_min < 1 or self.stages < 0:
            raise ValueError("bad contention window parameters")


@dataclass(frozen=True)
class Frame:
    channels: int  # bitmask
    n_c: int
    n_agg: int
    mcs: int
    rate_bps: float
    duration_ns: int
    src: int
    dst: int


def contention_window(stage: int, params: MacParams) -> int:
    return params.cw_min * 2 ** min(stage, params.stages)


def draw_backoff(stage: int, rng: np.random.Generator, params: MacParams = MacParams()) -> int:
    """Uniform backoff in [0, CW - 1], CW = CW_min * 2**stage."""
    if not 0 <= stage <= params.stages:
        raise ValueError(f"backoff stage {stage} outside [0, {params.stages}]")
    return int(rng.integers(0, contention_window(stage, params)))


def next_stage(stage: int, params: MacParams) -> int:
    """Retry stage after a failed attempt; saturates at the last stage."""
    return min(stage + 1, params.stages)


def pifs_assessment(busy_intervals: Mapping[int, Sequence[tuple[float, float]]], now: float,
                    p: int, alloc: Allocation, pifs: float = 25e-6) -> frozenset[int]:
    """Allocated channels that stayed idle over the whole PIFS window before ``now``.

    ``busy_intervals`` maps a channel to its ``(start, end)`` busy periods
    (``end`` may be ``math.inf`` for ongoing activity). A period that starts
    exactly at ``now`` has not been sensed yet.
    """
    lo = now - pifs
    free = set()
    for c in alloc.channels:
        if not any(s < now and e > lo for s, e in busy_intervals.get(c, ())):
            free.add(c)
    if p not in free:
        raise ValueError("primary busy during PIFS")
    return frozenset(free)


def pifs_free_mask(busy: Sequence[bool], idle_since: Sequence[int], busy_since: Sequence[int],
                   now: int, pifs_ns: int, alloc_mask: int) -> int:
    """Engine fast path of :func:`pifs_assessment` over per-channel sensing state."""
    lo = now - pifs_ns
    m = 0
    for i in range(len(busy)):
        bit = 1 << i
        if not alloc_mask & bit:
            continue
        if (not busy[i] or busy_since[i] == now) and idle_since[i] <= lo:
            m |= bit
    return m


def airtime_ns(n_agg: int, rate_bps: float, params: MacParams = MacParams(),
               packet_bits: int = 12000) -> int:
    """Preamble + symbol-rounded A-MPDU payload + SIFS + ACK."""
    bits_per_symbol = int(math.floor(rate_bps * params.symbol_ns * 1e-9 + 0.5))
    payload = n_agg * (packet_bits + params.mpdu_header_bits)
    n_sym = -(-payload // bits_per_symbol)
    return params.phy_header_ns + n_sym * params.symbol_ns + params.sifs_ns + params.ack_ns


class LinkCannotSustainMCS(RuntimeError):
    pass


def build_frame(buffer: Buffer, p: int, free, alloc: Allocation, d_ap_sta: float,
                phy: PhyParams = PhyParams(), table: Optional[MCSTable] = None,
                mac: MacParams = MacParams(), traffic: TrafficParams = TrafficParams(),
                dcb: bool = True, src: int = 0, dst: int = 0) -> tuple[Frame, np.ndarray]:
    """Pick the widest free bond, the MCS the link sustains on it, and aggregate.

    Returns the frame and the dequeued arrival times (ns).
    """
    table = table or default_mcs_table()
    if buffer.occupancy == 0:
        raise IndexError("nothing to send")
    free_mask = mask_of(free)
    if not free_mask >> (p - 1) & 1:
        raise ChannelizationError("primary busy")
    n_c = widest_available_mask(p, free_mask, alloc.mask) if dcb else 1
    mcs = table.select_mcs(link_snr(n_c, d_ap_sta, phy), n_c)
    if mcs is None:
        raise LinkCannotSustainMCS("link cannot sustain mcs 0")
    rate = table.data_rate(mcs, n_c)
    packets = buffer.dequeue_frame_ns(traffic.max_aggregation)
    frame = Frame(tx_mask(p, n_c), n_c, len(packets), mcs, rate,
                  airtime_ns(len(packets), rate, mac, traffic.packet_bits), src, dst)
    return frame, packets


def reception_sinr(signal_mw: float, interference_mw: float, noise_mw: float) -> float:
    return 10.0 * math.log10(signal_mw / (interference_mw + noise_mw))
