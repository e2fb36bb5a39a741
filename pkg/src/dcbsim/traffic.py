"""Poisson downlink traffic and the AP's finite FIFO buffer."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NS = 1_000_000_000


@dataclass(frozen=True)
class TrafficParams:
    packet_bits: int = 12000
    load_bps: float = 50e6
    buffer_packets: int = 150
    max_aggregation: int = 64

    def __post_init__(self):
        if self.packet_bits <= 0 or self.buffer_packets <= 0 or self.max_aggregation <= 0:
            raise ValueError("traffic parameters must be positive")
        if self.max_aggregation > self.buffer_packets:
            raise ValueError("max aggregation cannot exceed buffer capacity")

    @property
    def mean_interarrival(self) -> float:
        if not self.load_bps > 0:
            raise ValueError(f"load must be positive, got {self.load_bps}")
        return self.packet_bits / self.load_bps


@dataclass(frozen=True)
class Packet:
    arrival_time: float
    size: int = 12000


def next_interarrival(rng: np.random.Generator, params: TrafficParams) -> float:
    return float(rng.exponential(params.mean_interarrival))


def arrival_times_ns(rng: np.random.Generator, params: TrafficParams, horizon_ns: int) -> np.ndarray:
    """All arrival instants in [0, horizon) as integer nanoseconds, ascending."""
    mean = params.mean_interarrival
    expected = horizon_ns / NS / mean
    chunks = []
    t0 = 0.0
    while True:
        n = int(expected * 1.1 + 64)
        gaps = rng.exponential(mean, n)
        t = t0 + np.cumsum(gaps)
        chunks.append(t)
        t0 = t[-1]
        if t0 * NS >= horizon_ns:
            break
    t = np.concatenate(chunks)
    ns = np.ceil(t * NS).astype(np.int64)
    return ns[ns < horizon_ns]


class Buffer:
    """FIFO of packet arrival times (ns) with tail-drop at capacity."""

    def __init__(self, capacity: int = 150, max_aggregation: int = 64, reserve: int = 1024):
        self.capacity = capacity
        self.max_aggregation = max_aggregation
        self._times = np.empty(max(reserve, capacity), dtype=np.int64)
        self._head = 0
        self._tail = 0
        self.dropped = 0
        self.accepted = 0

    def __len__(self) -> int:
        return self._tail - self._head

    @property
    def occupancy(self) -> int:
        return self._tail - self._head

    def _make_room(self, n: int):
        if self._tail + n <= len(self._times):
            return
        live = self._times[self._head:self._tail].copy()
        size = max(len(self._times), 2 * (len(live) + n))
        self._times = np.empty(size, dtype=np.int64)
        self._times[:len(live)] = live
        self._head, self._tail = 0, len(live)

    def enqueue(self, packet: Packet) -> bool:
        """True if accepted; a full buffer drops the packet and counts it."""
        return self.enqueue_ns(int(round(packet.arrival_time * NS)))

    def enqueue_ns(self, t_ns: int) -> bool:
        if self.occupancy >= self.capacity:
            self.dropped += 1
            return False
        self._make_room(1)
        self._times[self._tail] = t_ns
        self._tail += 1
        self.accepted += 1
        return True

    def enqueue_batch_ns(self, times: np.ndarray) -> int:
        """Enqueue ascending arrivals that all happen before the next dequeue.

        Occupancy can only grow in between, so the first ``space`` packets
        are accepted and the rest are tail-dropped. Returns accepted count.
        """
        space = self.capacity - self.occupancy
        k = min(space, len(times))
        if k > 0:
            self._make_room(k)
            self._times[self._tail:self._tail + k] = times[:k]
            self._tail += k
        self.accepted += k
        self.dropped += len(times) - k
        return k

    def dequeue_frame_ns(self, max_packets: int | None = None) -> np.ndarray:
        n = min(self.occupancy, max_packets or self.max_aggregation)
        if n == 0:
            raise IndexError("nothing to send")
        out = self._times[self._head:self._head + n].copy()
        self._head += n
        return out

    def dequeue_frame(self, max_packets: int | None = None) -> list[Packet]:
        return [Packet(t / NS) for t in self.dequeue_frame_ns(max_packets).tolist()]


def enqueue(buffer: Buffer, packet: Packet) -> bool:
    return buffer.enqueue(packet)


def dequeue_frame(buffer: Buffer, max_packets: int | None = None) -> list[Packet]:
    return buffer.dequeue_frame(max_packets)
