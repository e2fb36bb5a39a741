"""Random high-density deployments and the JSON scenario file format."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

import numpy as np

from .channelization import NUM_CHANNELS, WIDTHS, Allocation, ChannelizationError, valid_blocks, channels_of

CAPABILITIES = ("SC", "DCB")


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class DeploymentParams:
    area_m: tuple[float, float] = (40.0, 40.0)
    n_wlans: int = 10
    min_ap_distance_m: float = 10.0
    sta_distance_m: tuple[float, float] = (1.0, 5.0)
    load_range_bps: tuple[float, float] = (1e6, 400e6)
    central_load_bps: float = 100e6
    max_attempts: int = 1_000_000

    def __post_init__(self):
        if min(self.area_m) <= 0 or self.min_ap_distance_m < 0:
            raise ScenarioError("area and distances must be positive")
        lo, hi = self.sta_distance_m
        if not 1.0 <= lo <= hi:
            raise ScenarioError("AP-STA distance range must satisfy 1 <= min <= max")
        if self.n_wlans < 1:
            raise ScenarioError("need at least one WLAN")


@dataclass(frozen=True)
class WlanConfig:
    id: int
    ap: tuple[float, float]
    sta: tuple[float, float]
    alloc: Allocation
    capability: str = "DCB"
    load_bps: float = 50e6

    @property
    def primary(self) -> int:
        return self.alloc.primary

    @property
    def dcb(self) -> bool:
        return self.capability == "DCB"

    @property
    def ap_sta_distance(self) -> float:
        return math.dist(self.ap, self.sta)


@dataclass(frozen=True)
class Scenario:
    wlans: tuple[WlanConfig, ...]
    seed: int = 0

    def with_central_load(self, load_bps: float) -> "Scenario":
        first = replace(self.wlans[0], load_bps=load_bps)
        return replace(self, wlans=(first,) + tuple(self.wlans[1:]))


def generate(params: DeploymentParams = DeploymentParams(), seed: int = 0) -> Scenario:
    """WLAN 0 (A) at the area center with the full band and DCB; the rest at random."""
    rng = np.random.default_rng(seed)
    w, h = params.area_m
    aps = [(w / 2, h / 2)]
    attempts = 0
    while len(aps) < params.n_wlans:
        attempts += 1
        if attempts > params.max_attempts:
            raise ScenarioError("infeasible parameters")
        cand = (float(rng.uniform(0, w)), float(rng.uniform(0, h)))
        if all(math.dist(cand, a) >= params.min_ap_distance_m for a in aps):
            aps.append(cand)

    lo, hi = params.sta_distance_m
    full = frozenset(range(1, NUM_CHANNELS + 1))
    wlans = []
    for i, ap in enumerate(aps):
        angle = float(rng.uniform(0, 2 * math.pi))
        r = float(rng.uniform(lo, hi))
        sta = (ap[0] + r * math.cos(angle), ap[1] + r * math.sin(angle))
        if i == 0:
            alloc = Allocation(full, int(rng.integers(1, NUM_CHANNELS + 1)))
            wlans.append(WlanConfig(0, ap, sta, alloc, "DCB", params.central_load_bps))
            continue
        size = int(rng.choice(WIDTHS))
        blocks = valid_blocks(size)
        block = channels_of(blocks[int(rng.integers(len(blocks)))])
        primary = int(block[int(rng.integers(len(block)))])
        cap = CAPABILITIES[int(rng.integers(2))]
        load = float(rng.uniform(*params.load_range_bps))
        wlans.append(WlanConfig(i, ap, sta, Allocation(frozenset(block), primary), cap, load))
    return Scenario(tuple(wlans), seed)


def validate(scenario: Scenario, params: DeploymentParams = DeploymentParams()) -> None:
    """Raise ScenarioError on separation, AP-STA distance or capability violations."""
    if not scenario.wlans:
        raise ScenarioError("scenario has no WLANs")
    ids = [wl.id for wl in scenario.wlans]
    if len(set(ids)) != len(ids):
        raise ScenarioError("duplicate WLAN ids")
    lo, hi = params.sta_distance_m
    eps = 1e-9
    for wl in scenario.wlans:
        if wl.capability not in CAPABILITIES:
            raise ScenarioError(f"wlan {wl.id}: capability must be SC or DCB")
        if not wl.load_bps > 0:
            raise ScenarioError(f"wlan {wl.id}: load_bps must be positive")
        d = wl.ap_sta_distance
        if not lo - eps <= d <= hi + eps:
            raise ScenarioError(f"wlan {wl.id}: STA at {d:.3f} m from AP, outside [{lo}, {hi}] m")
    for i, a in enumerate(scenario.wlans):
        for b in scenario.wlans[i + 1:]:
            if math.dist(a.ap, b.ap) < params.min_ap_distance_m - eps:
                raise ScenarioError(f"APs {a.id} and {b.id} closer than {params.min_ap_distance_m} m")


def to_dict(scenario: Scenario) -> dict[str, Any]:
    return {
        "seed": scenario.seed,
        "wlans": [
            {
                "id": wl.id,
                "ap": list(wl.ap),
                "sta": list(wl.sta),
                "alloc_channels": sorted(wl.alloc.channels),
                "primary": wl.alloc.primary,
                "capability": wl.capability,
                "load_bps": wl.load_bps,
            }
            for wl in scenario.wlans
        ],
    }


_REQUIRED = ("id", "ap", "sta", "alloc_channels", "primary", "capability", "load_bps")


def from_dict(data: dict[str, Any]) -> Scenario:
    if not isinstance(data, dict) or "wlans" not in data:
        raise ScenarioError("scenario: missing field 'wlans'")
    wlans = []
    for k, rec in enumerate(data["wlans"]):
        where = f"wlans[{k}]"
        for name in _REQUIRED:
            if name not in rec:
                raise ScenarioError(f"{where}: missing field '{name}'")
        try:
            ap = (float(rec["ap"][0]), float(rec["ap"][1]))
            sta = (float(rec["sta"][0]), float(rec["sta"][1]))
            alloc = Allocation(frozenset(int(c) for c in rec["alloc_channels"]), int(rec["primary"]))
            wlans.append(WlanConfig(int(rec["id"]), ap, sta, alloc, str(rec["capability"]),
                                    float(rec["load_bps"])))
        except ChannelizationError as e:
            raise ScenarioError(f"{where}.alloc_channels/primary: {e}") from None
        except (TypeError, ValueError, IndexError) as e:
            raise ScenarioError(f"{where}: {e}") from None
    return Scenario(tuple(wlans), int(data.get("seed", 0)))


def save(scenario: Scenario, path: str | Path) -> None:
    Path(path).write_text(json.dumps(to_dict(scenario), indent=2) + "\n")


def load(path: str | Path, params: DeploymentParams = DeploymentParams()) -> Scenario:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from None
    scenario = from_dict(data)
    validate(scenario, params)
    return scenario


def isolated(load_bps: float = 50e6, primary: int = 1, d_ap_sta: float = 3.0) -> Scenario:
    """A lone full-band DCB WLAN, handy for sanity runs."""
    alloc = Allocation(frozenset(range(1, NUM_CHANNELS + 1)), primary)
    return Scenario((WlanConfig(0, (20.0, 20.0), (20.0 + d_ap_sta, 20.0), alloc, "DCB", load_bps),))

