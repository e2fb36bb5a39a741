"""Link budget, SINR, capture effect and 802.11ax MCS/rate lookup."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional

from .channelization import WIDTHS

NEG_INF_DBM = -math.inf


@dataclass(frozen=True)
class LogDistancePathLoss:
    """PL(d) = intercept_db + 10 * exponent * log10(d), d in meters."""

    intercept_db: float = 54.12
    exponent: float = 2.06

    def __call__(self, d: float) -> float:
        if not d > 0:
            raise ValueError(f"distance must be positive, got {d}")
        return self.intercept_db + 10.0 * self.exponent * math.log10(d)


@dataclass(frozen=True)
class PhyParams:
    fc_hz: float = 5.25e9
    tx_power_dbm: float = 15.0
    tx_gain_db: float = 0.0
    rx_gain_db: float = 0.0
    cca_dbm: float = -82.0
    capture_db: float = 20.0
    noise_dbm: float = -95.0
    basic_bw_hz: float = 20e6
    path_loss: LogDistancePathLoss = field(default_factory=LogDistancePathLoss)

    def __post_init__(self):
        vals = (self.fc_hz, self.tx_power_dbm, self.tx_gain_db, self.rx_gain_db,
                self.cca_dbm, self.capture_db, self.noise_dbm, self.basic_bw_hz)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("phy parameters must be finite")
        if not self.cca_dbm < 0:
            raise ValueError("CCA threshold must be below 0 dBm")
        if not self.capture_db > 0:
            raise ValueError("capture threshold must be positive")


def dbm_to_mw(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


def mw_to_dbm(mw: float) -> float:
    if mw <= 0.0:
        return NEG_INF_DBM
    return 10.0 * math.log10(mw)


def path_loss(d: float, params: PhyParams | None = None) -> float:
    params = params or PhyParams()
    return params.path_loss(d)


def rx_power_per_channel(tx_power_dbm: float, n_c: int, d: float, params: PhyParams | None = None) -> float:
    """Received power on each basic channel when the transmit power is split over ``n_c`` channels."""
    params = params or PhyParams()
    if n_c not in WIDTHS:
        raise ValueError(f"invalid bond width {n_c}")
    return (tx_power_dbm + params.tx_gain_db + params.rx_gain_db
            - params.path_loss(d) - 10.0 * math.log10(n_c))


def sinr(signal_dbm: float, interference_dbm: Iterable[float], noise_dbm: float) -> float:
    total = dbm_to_mw(noise_dbm) + sum(dbm_to_mw(i) for i in interference_dbm)
    return signal_dbm - 10.0 * math.log10(total)


def capture_ok(sinr_db: float, params: PhyParams | None = None) -> bool:
    params = params or PhyParams()
    return sinr_db >= params.capture_db


class MCSTable:
    """Minimum SNR and data rate per (bond width, MCS index).

    Loaded from CSV with columns ``n_c, mcs, min_snr_db, rate_bps``.
    """

    def __init__(self, rows: Iterable[tuple[int, int, float, float]]):
        self.min_snr: dict[tuple[int, int], float] = {}
        self.rate: dict[tuple[int, int], float] = {}
        for n_c, mcs, thr, r in rows:
            self.min_snr[(n_c, mcs)] = float(thr)
            self.rate[(n_c, mcs)] = float(r)
        self.widths = sorted({k[0] for k in self.rate})
        self.mcs_indices = sorted({k[1] for k in self.rate})
        self._validate()

    def _validate(self):
        for n in self.widths:
            for m in self.mcs_indices:
                if (n, m) not in self.rate:
                    raise ValueError(f"MCS table missing entry n_c={n}, mcs={m}")
                if self.rate[(n, m)] <= 0:
                    raise ValueError("rates must be positive")
        for n in self.widths:
            rates = [self.rate[(n, m)] for m in self.mcs_indices]
            thr = [self.min_snr[(n, m)] for m in self.mcs_indices]
            if any(b <= a for a, b in zip(rates, rates[1:])):
                raise ValueError(f"rates not increasing with mcs at n_c={n}")
            if any(b < a for a, b in zip(thr, thr[1:])):
                raise ValueError(f"thresholds decreasing with mcs at n_c={n}")
        for m in self.mcs_indices:
            rates = [self.rate[(n, m)] for n in self.widths]
            if any(b <= a for a, b in zip(rates, rates[1:])):
                raise ValueError(f"rates not increasing with n_c at mcs={m}")

    @classmethod
    def from_csv(cls, path: str | Path) -> "MCSTable":
        with open(path, newline="") as f:
            return cls._from_reader(csv.DictReader(f), str(path))

    @classmethod
    def default(cls) -> "MCSTable":
        src = resources.files("dcbsim") / "data" / "mcs_11ax.csv"
        with src.open(newline="") as f:
            return cls._from_reader(csv.DictReader(f), "mcs_11ax.csv")

    @classmethod
    def _from_reader(cls, reader: csv.DictReader, name: str) -> "MCSTable":
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            try:
                rows.append((int(rec["n_c"]), int(rec["mcs"]), float(rec["min_snr_db"]), float(rec["rate_bps"])))
            except (KeyError, TypeError, ValueError) as e:
                raise ValueError(f"{name}:{lineno}: bad MCS row {rec!r}: {e}") from None
        return cls(rows)

    def select_mcs(self, snr_db: float, n_c: int) -> Optional[int]:
        best = None
        for m in self.mcs_indices:
            if self.min_snr[(n_c, m)] <= snr_db:
                best = m
            else:
                break
        return best

    def data_rate(self, mcs: int, n_c: int) -> float:
        try:
            return self.rate[(n_c, mcs)]
        except KeyError:
            raise ValueError(f"no rate for mcs={mcs}, n_c={n_c}") from None


_DEFAULT_TABLE: Optional[MCSTable] = None


def default_mcs_table() -> MCSTable:
    global _DEFAULT_TABLE
    if _DEFAULT_TABLE is None:
        _DEFAULT_TABLE = MCSTable.default()
    return _DEFAULT_TABLE


def select_mcs(snr_db: float, n_c: int, table: MCSTable | None = None) -> Optional[int]:
    """Highest MCS whose SNR threshold is met, or None below MCS 0."""
    return (table or default_mcs_table()).select_mcs(snr_db, n_c)


def data_rate(mcs: int, n_c: int, table: MCSTable | None = None) -> float:
    return (table or default_mcs_table()).data_rate(mcs, n_c)


def link_snr(n_c: int, d: float, params: PhyParams | None = None) -> float:
    """Noise-only SNR per basic channel of an AP-STA link at width ``n_c``."""
    params = params or PhyParams()
    return rx_power_per_channel(params.tx_power_dbm, n_c, d, params) - params.noise_dbm


def link_rates(d: float, params: PhyParams | None = None, table: MCSTable | None = None,
               widths: Iterable[int] = WIDTHS) -> dict[int, tuple[Optional[int], float]]:
    """(mcs, rate) sustained by a link at each width; rate 0 when even MCS 0 fails."""
    table = table or default_mcs_table()
    out = {}
    for n in widths:
        m = table.select_mcs(link_snr(n, d, params), n)
        out[n] = (m, table.data_rate(m, n) if m is not None else 0.0)
    return out
