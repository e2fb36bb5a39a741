"""Discrete-event CSMA/CA + DCB simulator.

One run is single-threaded and deterministic given ``(scenario, config, seed)``.
Simulated time is integer nanoseconds. Packet arrivals are pre-drawn per AP
and pulled into the buffer lazily at dequeue instants, which is exact because
occupancy only grows between two dequeues. Periodic occupancy sampling is
integrated the same way: the sensed mask is piecewise constant between
channel-state changes, so the grid instants in each piece are counted at once.
"""

from __future__ import annotations

import bisect
import enum
import hashlib
import heapq
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import phy as _phy
from .channelization import NUM_CHANNELS, WIDTHS, allowed_widths, channels_of, widest_available_mask
from .mac import MacParams, airtime_ns, contention_window, next_stage, pifs_free_mask, reception_sinr
from .occupancy import OccupancySamples, compute_stats, stats_rows
from .phy import MCSTable, PhyParams, default_mcs_table
from .scenario import Scenario, ScenarioError
from .selection import IterationRecord, Scheme, SelectionConfig, decide, satisfied
from .traffic import NS, Buffer, TrafficParams, arrival_times_ns


class EventKind(enum.IntEnum):
    ARRIVAL = 0
    BACKOFF_EXPIRY = 1
    TX_END = 2
    ITERATION_BOUNDARY = 3
    SWITCH_COMPLETE = 4


# RNG purposes, one substream per node each
_TRAFFIC, _BACKOFF, _SELECTION = 0, 1, 2

_MASK_CHANNELS = [tuple(c - 1 for c in channels_of(m)) for m in range(1 << NUM_CHANNELS)]


@dataclass(frozen=True)
class SimConfig:
    phy: PhyParams = field(default_factory=PhyParams)
    mac: MacParams = field(default_factory=MacParams)
    packet_bits: int = 12000
    buffer_packets: int = 150
    max_aggregation: int = 64
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    t_obs_s: float = 25.0
    sample_period_s: float = 1e-3
    # WLAN ids running the online scheme; the others keep a fixed primary
    ops_wlans: tuple[int, ...] = (0,)
    mcs_table: Optional[str] = None
    trace: bool = False

    def traffic(self, load_bps: float) -> TrafficParams:
        return TrafficParams(self.packet_bits, load_bps, self.buffer_packets, self.max_aggregation)

    def table(self) -> MCSTable:
        return MCSTable.from_csv(self.mcs_table) if self.mcs_table else default_mcs_table()


@dataclass
class WlanResult:
    id: int
    generated: int = 0
    delivered: int = 0
    dropped: int = 0
    in_buffer: int = 0
    in_flight: int = 0
    delivered_bits: int = 0
    frames_ok: int = 0
    frames_lost: int = 0
    delays_s: np.ndarray = field(default_factory=lambda: np.empty(0))
    iterations: list[IterationRecord] = field(default_factory=list)
    switches: list[tuple[float, int, int]] = field(default_factory=list)
    final_primary: int = 0

    @property
    def residual(self) -> int:
        return self.in_buffer + self.in_flight


@dataclass
class SimulationResult:
    t_obs_s: float
    wlans: list[WlanResult]
    decision_log: list[tuple] = field(default_factory=list)
    occupancy_log: list[tuple] = field(default_factory=list)

    def digest(self) -> str:
        h = hashlib.sha256()
        for w in self.wlans:
            head = [w.id, w.generated, w.delivered, w.dropped, w.in_buffer, w.in_flight,
                    w.delivered_bits, w.frames_ok, w.frames_lost, w.final_primary,
                    [(r.index, r.s_bps, r.ell_bps, r.satisfied, r.primary) for r in w.iterations],
                    w.switches]
            h.update(json.dumps(head).encode())
            h.update(np.ascontiguousarray(w.delays_s, dtype=np.float64).tobytes())
        return h.hexdigest()


class _Tx:
    __slots__ = ("src", "mask", "chans", "n_c", "start", "end", "lost", "packets", "sig_mw",
                 "mw_ap", "mw_sta")

    def __init__(self, src, mask, n_c, start, end, packets, sig_mw, mw_ap, mw_sta):
        self.src = src
        self.mask = mask
        self.chans = _MASK_CHANNELS[mask]
        self.n_c = n_c
        self.start = start
        self.end = end
        self.lost = False
        self.packets = packets
        self.sig_mw = sig_mw
        self.mw_ap = mw_ap
        self.mw_sta = mw_sta


class _Node:
    __slots__ = (
        "i", "wlan", "alloc", "alloc_mask", "primary", "dcb", "sense_mask", "rates", "frame_n_c",
        "arrivals", "arr_ptr", "buffer", "pending", "stage", "counter", "contending", "resume",
        "expiry", "version", "tx", "last_own_end", "switching", "busy", "idle_since", "busy_since",
        "power", "ops", "sampling", "samples", "mask_now", "mask_since", "it_bits", "it_start_arr",
        "delivered", "delivered_bits", "delays", "frames_ok", "frames_lost", "records", "switches",
        "rng_bo", "rng_sel", "arr_list", "bo_u", "bo_ptr",
    )

_BO_BATCH = 4096
_ARRIVAL, _BACKOFF_EXPIRY, _TX_END, _ITERATION_BOUNDARY, _SWITCH_COMPLETE = (int(k) for k in EventKind)


class Simulator:
    def __init__(self, scenario: Scenario, config: SimConfig = SimConfig(), seed: int = 0):
        if not scenario.wlans:
            raise ScenarioError("scenario has no WLANs")
        self.sc = scenario
        self.cfg = config
        self.seed = seed
        self.table = config.table()
        self.phy = config.phy
        self.mac = config.mac
        self.t_end = int(round(config.t_obs_s * NS))
        self.T = int(round(config.selection.iteration_s * NS))
        self.delta = int(round(config.selection.delta_s * NS))
        self.ts = int(round(config.sample_period_s * NS))
        if self.t_end <= 0 or self.T <= 0 or self.ts <= 0:
            raise ValueError("durations must be positive")
        self.cca_mw = _phy.dbm_to_mw(self.phy.cca_dbm)
        self.noise_mw = _phy.dbm_to_mw(self.phy.noise_dbm)
        self.heap: list = []
        self.seq = 0
        self.now = 0
        self.active: list[_Tx] = []
        self.on_channel: list[list[_Tx]] = [[] for _ in range(NUM_CHANNELS)]
        self.decision_log: list[tuple] = []
        self.occupancy_log: list[tuple] = []
        self._build()

    # setup ------------------------------------------------------------------

    def _build(self):
        cfg, phy = self.cfg, self.phy
        wl = self.sc.wlans
        n = len(wl)
        ops = set(cfg.ops_wlans)
        scheme = cfg.selection.scheme
        # per-channel received power (mW) from AP i at AP j / at STA j, per width
        self.mw_ap = [[{} for _ in range(n)] for _ in range(n)]
        self.mw_sta = [[{} for _ in range(n)] for _ in range(n)]
        for i in range(n):
            for j in range(n):
                d_ap = math.dist(wl[i].ap, wl[j].ap)
                d_sta = math.dist(wl[i].ap, wl[j].sta)
                for w in WIDTHS:
                    if i != j:
                        self.mw_ap[i][j][w] = _phy.dbm_to_mw(
                            _phy.rx_power_per_channel(phy.tx_power_dbm, w, d_ap, phy))
                    self.mw_sta[i][j][w] = _phy.dbm_to_mw(
                        _phy.rx_power_per_channel(phy.tx_power_dbm, w, d_sta, phy))
        self.mw_ap_row = [{w: [self.mw_ap[i][j].get(w, 0.0) for j in range(n)] for w in WIDTHS} for i in range(n)]
        self.mw_sta_row = [{w: [self.mw_sta[i][j][w] for j in range(n)] for w in WIDTHS} for i in range(n)]
        self.nodes: list[_Node] = []
        for i, w in enumerate(wl):
            nd = _Node()
            nd.i = i
            nd.wlan = w
            nd.alloc = w.alloc
            nd.alloc_mask = w.alloc.mask
            nd.primary = w.alloc.primary
            nd.dcb = w.dcb
            nd.ops = i in ops and scheme is not Scheme.FP and w.alloc.size > 1
            nd.sampling = nd.ops and scheme in (Scheme.DF, Scheme.DW)
            nd.sense_mask = nd.alloc_mask if (nd.dcb or nd.ops) else 1 << (nd.primary - 1)
            d = w.ap_sta_distance
            nd.rates = {}
            for width, (mcs, rate) in _phy.link_rates(d, phy, self.table).items():
                if mcs is not None:
                    nd.rates[width] = rate
            if 1 not in nd.rates:
                raise ScenarioError(f"wlan {w.id}: link cannot sustain mcs 0 at {d:.2f} m")
            nd.frame_n_c = {}
            ss = np.random.SeedSequence(self.seed, spawn_key=(i,))
            s_tr, s_bo, s_sel = ss.spawn(3)
            nd.arrivals = arrival_times_ns(np.random.default_rng(s_tr), cfg.traffic(w.load_bps), self.t_end)
            nd.arr_list = nd.arrivals.tolist()
            nd.rng_bo = np.random.default_rng(s_bo)
            nd.bo_u = []
            nd.bo_ptr = 0
            nd.rng_sel = np.random.default_rng(s_sel)
            nd.arr_ptr = 0
            nd.buffer = Buffer(cfg.buffer_packets, cfg.max_aggregation)
            nd.pending = None
            nd.stage = 0
            nd.counter = 0
            nd.contending = False
            nd.resume = 0
            nd.expiry = -1
            nd.version = 0
            nd.tx = None
            nd.last_own_end = 0
            nd.switching = False
            nd.busy = [False] * NUM_CHANNELS
            nd.idle_since = [0] * NUM_CHANNELS
            nd.busy_since = [-1] * NUM_CHANNELS
            nd.power = [0.0] * NUM_CHANNELS
            nd.samples = OccupancySamples()
            nd.mask_now = nd.alloc_mask
            nd.mask_since = 0
            nd.it_bits = 0
            nd.it_start_arr = 0
            nd.delivered = 0
            nd.delivered_bits = 0
            nd.delays = []
            nd.frames_ok = 0
            nd.frames_lost = 0
            nd.records = []
            nd.switches = []
            self.nodes.append(nd)

    # event queue ------------------------------------------------------------

    def _push(self, t: int, kind: int, node: int, arg=None):
        if t < self.now:
            raise RuntimeError("event scheduled in the past")
        heapq.heappush(self.heap, (t, self.seq, kind, node, arg))
        self.seq += 1

    # traffic ----------------------------------------------------------------

    def _sync(self, nd: _Node, t: int):
        """Move arrivals with time <= t into the buffer."""
        k = bisect.bisect_right(nd.arr_list, t, nd.arr_ptr)
        if k > nd.arr_ptr:
            nd.buffer.enqueue_batch_ns(nd.arrivals[nd.arr_ptr:k])
            nd.arr_ptr = k

    def _has_work(self, nd: _Node) -> bool:
        return nd.pending is not None or nd.buffer.occupancy > 0

    # occupancy sampling -----------------------------------------------------

    def _flush(self, nd: _Node, t: int):
        if nd.sampling:
            if nd.tx is None and not nd.switching:
                ts = self.ts
                k = -(-t // ts) - -(-nd.mask_since // ts)
                if k > 0:
                    nd.samples.record_repeated(nd.mask_now, k)
            nd.mask_since = t

    # contention -------------------------------------------------------------

    def _start_contention(self, nd: _Node, t: int):
        self._sync(nd, t)
        if not self._has_work(nd):
            if nd.arr_ptr < len(nd.arrivals):
                self._push(nd.arr_list[nd.arr_ptr], _ARRIVAL, nd.i)
            return
        nd.contending = True
        nd.counter = self._draw_backoff(nd)
        self._resume(nd, t)

    def _draw_backoff(self, nd: _Node) -> int:
        # uniform in [0, CW - 1] from a batch of pre-drawn unit uniforms
        if nd.bo_ptr == len(nd.bo_u):
            nd.bo_u = nd.rng_bo.random(_BO_BATCH).tolist()
            nd.bo_ptr = 0
        u = nd.bo_u[nd.bo_ptr]
        nd.bo_ptr += 1
        return int(u * contention_window(nd.stage, self.mac))

    def _resume(self, nd: _Node, t: int):
        p = nd.primary - 1
        if not nd.contending or nd.tx is not None or nd.switching or nd.busy[p] or nd.expiry >= 0:
            return
        difs = self.mac.difs_ns
        nd.resume = max(t, nd.idle_since[p] + difs, nd.last_own_end + difs)
        nd.expiry = nd.resume + nd.counter * self.mac.slot_ns
        nd.version += 1
        self._push(nd.expiry, _BACKOFF_EXPIRY, nd.i, nd.version)

    def _freeze(self, nd: _Node, t: int):
        if nd.expiry < 0 or t >= nd.expiry:
            # expiring right now: the busy edge is not sensed in time
            return
        if t > nd.resume:
            nd.counter -= (t - nd.resume) // self.mac.slot_ns
        nd.expiry = -1
        nd.version += 1

    # spectrum ---------------------------------------------------------------

    def _update_sensing(self, tx: _Tx, t: int):
        cca = self.cca_mw
        on = self.on_channel
        for nd in self.nodes:
            j = nd.i
            if j == tx.src:
                continue
            inter = nd.sense_mask & tx.mask
            if not inter:
                continue
            for c in _MASK_CHANNELS[inter]:
                pw = 0.0
                for a in on[c]:
                    if a.src != j:
                        pw += a.mw_ap[j]
                nd.power[c] = pw
                b = pw >= cca
                if b != nd.busy[c]:
                    if nd.sampling:
                        self._flush(nd, t)
                    nd.busy[c] = b
                    bit = 1 << c
                    if b:
                        nd.busy_since[c] = t
                        nd.mask_now &= ~bit
                    else:
                        nd.idle_since[c] = t
                        if nd.alloc_mask & bit:
                            nd.mask_now |= bit
                    if c == nd.primary - 1:
                        if b:
                            self._freeze(nd, t)
                        else:
                            self._resume(nd, t)

    def _check_reception(self, rx: _Tx) -> None:
        if rx.lost:
            return
        j = rx.src
        for c in rx.chans:
            interf = 0.0
            for a in self.on_channel[c]:
                if a is not rx:
                    interf += a.mw_sta[j]
            if interf > 0.0 and not _phy.capture_ok(reception_sinr(rx.sig_mw, interf, self.noise_mw), self.phy):
                rx.lost = True
                return
        if not _phy.capture_ok(reception_sinr(rx.sig_mw, 0.0, self.noise_mw), self.phy):
            rx.lost = True

    # handlers ---------------------------------------------------------------

    def _on_backoff(self, nd: _Node, t: int, version: int):
        if version != nd.version or nd.expiry != t:
            return
        nd.expiry = -1
        nd.contending = False
        mac = self.mac
        free = pifs_free_mask(nd.busy, nd.idle_since, nd.busy_since, t, mac.pifs_ns, nd.alloc_mask)
        if nd.sampling:
            self._flush(nd, t)
            nd.samples.record_sample(free, t / NS)
        p = nd.primary
        if not free >> (p - 1) & 1:
            raise RuntimeError(f"wlan {nd.wlan.id}: backoff expired on a busy primary")
        if nd.pending is None:
            self._sync(nd, t)
            nd.pending = nd.buffer.dequeue_frame_ns(self.cfg.max_aggregation)
        n_c = widest_available_mask(p, free, nd.alloc_mask) if nd.dcb else 1
        while n_c not in nd.rates:
            n_c //= 2
        rate = nd.rates[n_c]
        key = (n_c, len(nd.pending))
        dur = nd.frame_n_c.get(key)
        if dur is None:
            dur = airtime_ns(len(nd.pending), rate, mac, self.cfg.packet_bits)
            nd.frame_n_c[key] = dur
        i = nd.i
        mask = ((1 << n_c) - 1) << (((p - 1) // n_c) * n_c)
        tx = _Tx(i, mask, n_c, t, t + dur, nd.pending, self.mw_sta[i][i][n_c],
                 self.mw_ap_row[i][n_c], self.mw_sta_row[i][n_c])
        nd.tx = tx
        self.active.append(tx)
        for c in tx.chans:
            self.on_channel[c].append(tx)
        self._check_reception(tx)
        for other in self.active:
            if other is not tx and other.mask & mask:
                self._check_reception(other)
        self._update_sensing(tx, t)
        self._push(tx.end, _TX_END, i, tx)

    def _on_tx_end(self, nd: _Node, t: int, tx: _Tx):
        self.active.remove(tx)
        for c in tx.chans:
            self.on_channel[c].remove(tx)
        self._update_sensing(tx, t)
        self._flush(nd, t)
        nd.tx = None
        nd.last_own_end = t
        if tx.lost:
            nd.frames_lost += 1
            nd.stage = next_stage(nd.stage, self.mac)
        else:
            nd.frames_ok += 1
            k = len(tx.packets)
            nd.delivered += k
            bits = k * self.cfg.packet_bits
            nd.delivered_bits += bits
            nd.it_bits += bits
            nd.delays.append((t - tx.packets) / NS)
            nd.pending = None
            nd.stage = 0
        if not nd.switching:
            self._start_contention(nd, t)

    def _on_arrival(self, nd: _Node, t: int):
        if nd.tx is None and not nd.contending and not nd.switching:
            self._start_contention(nd, t)

    def _iteration(self, t: int, final: bool = False):
        idx = (t - 1) // self.T + 1 if not final else len(self.nodes[0].records) + 1
        for nd in self.nodes:
            start = t - self.T if not final else (idx - 1) * self.T
            dur = (t - start) / NS
            k = int(np.searchsorted(nd.arrivals, t, side="left"))
            gen = k - nd.it_start_arr
            nd.it_start_arr = k
            s = nd.it_bits / dur
            ell = gen * self.cfg.packet_bits / dur
            nd.it_bits = 0
            ok = satisfied(s, ell, self.cfg.selection.eta)
            nd.records.append(IterationRecord(idx, s, ell, ok, nd.primary))
            if not nd.ops or final:
                continue
            self._flush(nd, t)
            stats = compute_stats(nd.samples, nd.alloc) if nd.sampling else None
            rates = {w: nd.rates[w] for w in allowed_widths(nd.primary, nd.alloc) if w in nd.rates}
            decision = decide(self.cfg.selection, s, ell, nd.primary, stats, rates, nd.rng_sel, nd.alloc)
            if self.cfg.trace:
                self.decision_log.append((nd.wlan.id, t / NS, self.cfg.selection.scheme.value, decision.satisfied,
                                          decision.old_primary, decision.new_primary,
                                          json.dumps({str(p): v for p, v in decision.rhat.items()})))
                if stats is not None:
                    self.occupancy_log.extend(stats_rows(stats, nd.wlan.id, idx))
            nd.samples.clear()
            if decision.switched:
                self._switch(nd, t, decision.new_primary)

    def _switch(self, nd: _Node, t: int, new_p: int):
        self._freeze(nd, t)
        nd.switches.append((t / NS, nd.primary, new_p))
        nd.primary = new_p
        if self.delta > 0:
            self._flush(nd, t)
            nd.switching = True
            self._push(t + self.delta, _SWITCH_COMPLETE, nd.i)
        else:
            self._resume(nd, t)

    def _on_switch_complete(self, nd: _Node, t: int):
        self._flush(nd, t)
        nd.switching = False
        if nd.tx is not None:
            return
        if nd.contending:
            self._resume(nd, t)
        else:
            self._start_contention(nd, t)

    # main loop --------------------------------------------------------------

    def run(self) -> SimulationResult:
        for nd in self.nodes:
            if len(nd.arrivals):
                self._push(nd.arr_list[0], _ARRIVAL, nd.i)
        if self.T < self.t_end:
            self._push(self.T, _ITERATION_BOUNDARY, -1)
        heap = self.heap
        nodes = self.nodes
        t_end = self.t_end
        while heap and heap[0][0] < t_end:
            t, _, kind, i, arg = heapq.heappop(heap)
            self.now = t
            if kind == _BACKOFF_EXPIRY:
                self._on_backoff(nodes[i], t, arg)
            elif kind == _TX_END:
                self._on_tx_end(nodes[i], t, arg)
            elif kind == _ARRIVAL:
                self._on_arrival(nodes[i], t)
            elif kind == _ITERATION_BOUNDARY:
                self._iteration(t)
                if t + self.T < t_end:
                    self._push(t + self.T, _ITERATION_BOUNDARY, -1)
            elif kind == _SWITCH_COMPLETE:
                self._on_switch_complete(nodes[i], t)
        self.now = t_end
        self._iteration(t_end, final=True)
        return self._result()

    def _result(self) -> SimulationResult:
        out = []
        for nd in self.nodes:
            self._sync(nd, self.t_end - 1)
            in_flight = len(nd.pending) if nd.pending is not None else 0
            out.append(WlanResult(
                id=nd.wlan.id,
                generated=len(nd.arrivals),
                delivered=nd.delivered,
                dropped=nd.buffer.dropped,
                in_buffer=nd.buffer.occupancy + (len(nd.arrivals) - nd.arr_ptr),
                in_flight=in_flight,
                delivered_bits=nd.delivered_bits,
                frames_ok=nd.frames_ok,
                frames_lost=nd.frames_lost,
                delays_s=np.concatenate(nd.delays) if nd.delays else np.empty(0),
                iterations=list(nd.records),
                switches=list(nd.switches),
                final_primary=nd.primary,
            ))
        return SimulationResult(self.cfg.t_obs_s, out, self.decision_log, self.occupancy_log)


def run(scenario: Scenario, config: SimConfig = SimConfig(), seed: int = 0) -> SimulationResult:
    return Simulator(scenario, config, seed).run()


@dataclass(frozen=True)
class ActiveTransmission:
    position: tuple[float, float]
    channels: frozenset[int]
    tx_power_dbm: float = 15.0

    @property
    def n_c(self) -> int:
        return len(self.channels)


def power_at(position: Sequence[float], channel: int, active: Sequence[ActiveTransmission],
             params: PhyParams = PhyParams()) -> float:
    """Total power (dBm) sensed on one basic channel; -inf with nothing on air."""
    mw = 0.0
    for a in active:
        if channel in a.channels:
            d = math.dist(position, a.position)
            mw += _phy.dbm_to_mw(_phy.rx_power_per_channel(a.tx_power_dbm, a.n_c, d, params))
    return _phy.mw_to_dbm(mw)


def carrier_sense(power_dbm: float, params: PhyParams = PhyParams()) -> bool:
    """True (busy) iff the sensed power reaches the CCA threshold."""
    return power_dbm >= params.cca_dbm
