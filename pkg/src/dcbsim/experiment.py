"""Batch experiments: deployments x loads x (scheme, delta) cells, CSV outputs."""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import __version__
from .engine import SimConfig, run
from .mac import MacParams
from .metrics import QUANTILES, iterations_to_satisfaction_cdf, run_metrics, satisfaction_probability, delay_stats
from .phy import LogDistancePathLoss, PhyParams
from .scenario import DeploymentParams, generate
from .selection import Scheme, SelectionConfig

log = logging.getLogger(__name__)

RUN_COLUMNS = ["scenario_id", "scheme", "delta", "load", "s_mean", "d_mean", "k_first",
               "generated", "delivered", "dropped", "residual", "switches", "frames_lost", "status"]
AGG_COLUMNS = ["scheme", "delta", "load", "n_runs", "s_mean", "p_satisfied", "d_mean"] + \
    [f"d_p{q}" for q in QUANTILES]
CDF_COLUMNS = ["scheme", "delta", "load", "k", "cdf"]
SCHEME_ORDER = {s.value: i for i, s in enumerate(Scheme)}

DEFAULT_LOADS_BPS = [1e6] + [25e6 * k for k in range(1, 17)]


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    n_deployments: int = 200
    loads_bps: list[float] = field(default_factory=lambda: list(DEFAULT_LOADS_BPS))
    schemes: list[str] = field(default_factory=lambda: ["FP", "DR", "DF", "DW"])
    deltas_s: list[float] = field(default_factory=lambda: [0.0, 0.1])
    t_obs_s: float = 25.0
    iteration_s: float = 1.0
    eta: float = 0.9
    seed: int = 0
    workers: int = 1
    out_dir: str = "results"
    sample_period_s: float = 1e-3
    ops_wlans: list[int] = field(default_factory=lambda: [0])
    eps_s: float = 0.05
    phy: dict[str, Any] = field(default_factory=dict)
    mac: dict[str, Any] = field(default_factory=dict)
    traffic: dict[str, Any] = field(default_factory=dict)
    deployment: dict[str, Any] = field(default_factory=dict)
    mcs_table: Optional[str] = None
    decision_log: bool = False
    occupancy_log: bool = False

    def validate(self) -> None:
        if self.n_deployments < 1:
            raise ConfigError("n_deployments must be >= 1")
        if not self.loads_bps or any(not x > 0 for x in self.loads_bps):
            raise ConfigError("loads must be positive")
        for s in self.schemes:
            if s not in SCHEME_ORDER:
                raise ConfigError(f"unknown scheme {s!r}")
        if any(d < 0 for d in self.deltas_s) or not self.deltas_s:
            raise ConfigError("deltas must be non-negative")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        try:
            self.sim_config(Scheme.FP, 0.0)
            self.deployment_params()
        except (TypeError, ValueError) as e:
            raise ConfigError(str(e)) from None

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"{path}: {e}") from None
        return cls.from_dict(data)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def deployment_params(self) -> DeploymentParams:
        d = dict(self.deployment)
        for k in ("area_m", "sta_distance_m", "load_range_bps"):
            if k in d:
                d[k] = tuple(d[k])
        return DeploymentParams(**d)

    def sim_config(self, scheme: Scheme | str, delta_s: float) -> SimConfig:
        phy = dict(self.phy)
        if "path_loss" in phy:
            phy["path_loss"] = LogDistancePathLoss(**phy["path_loss"])
        tr = dict(self.traffic)
        traffic_kw = {k: tr.pop(k) for k in ("packet_bits", "buffer_packets", "max_aggregation") if k in tr}
        if tr:
            raise ConfigError(f"unknown traffic keys: {sorted(tr)}")
        return SimConfig(
            phy=PhyParams(**phy),
            mac=MacParams(**self.mac),
            selection=SelectionConfig(Scheme(scheme), self.eta, self.iteration_s, delta_s),
            t_obs_s=self.t_obs_s,
            sample_period_s=self.sample_period_s,
            ops_wlans=tuple(self.ops_wlans),
            mcs_table=self.mcs_table,
            trace=self.decision_log or self.occupancy_log,
            **traffic_kw,
        )


@dataclass(frozen=True, order=True)
class Cell:
    deployment: int
    load_idx: int
    scheme_idx: int
    delta_s: float


def cells(cfg: ExperimentConfig) -> list[Cell]:
    """FP runs once per (deployment, load); online schemes once per delta."""
    out = []
    schemes = sorted(set(cfg.schemes), key=SCHEME_ORDER.get)
    fp_delta = 0.0 if 0.0 in cfg.deltas_s else min(cfg.deltas_s)
    for d in range(cfg.n_deployments):
        for li in range(len(cfg.loads_bps)):
            for s in schemes:
                deltas = [fp_delta] if s == "FP" else sorted(set(cfg.deltas_s))
                for delta in deltas:
                    out.append(Cell(d, li, SCHEME_ORDER[s], float(delta)))
    return sorted(out)


def deployment_seed(seed: int, deployment: int) -> int:
    return int(np.random.SeedSequence([seed, deployment]).generate_state(1)[0])


def run_seed(seed: int, deployment: int, load_idx: int) -> int:
    # shared by every (scheme, delta) of a cell group: paired comparisons
    return int(np.random.SeedSequence([seed, deployment, load_idx, 1]).generate_state(1)[0])


def run_cell(cfg: ExperimentConfig, cell: Cell) -> dict[str, Any]:
    scheme = list(Scheme)[cell.scheme_idx]
    load = cfg.loads_bps[cell.load_idx]
    row: dict[str, Any] = {"scenario_id": cell.deployment, "scheme": scheme.value, "delta": cell.delta_s,
                           "load": load}
    try:
        sc = generate(cfg.deployment_params(), deployment_seed(cfg.seed, cell.deployment))
        sc = sc.with_central_load(load)
        res = run(sc, cfg.sim_config(scheme, cell.delta_s), run_seed(cfg.seed, cell.deployment, cell.load_idx))
        m = run_metrics(res, 0, load)
        a = res.wlans[0]
        row.update(s_mean=m.s_mean, d_mean=m.d_mean, k_first=m.k_first if m.k_first is not None else "",
                   generated=a.generated, delivered=a.delivered, dropped=a.dropped, residual=a.residual,
                   switches=len(a.switches), frames_lost=a.frames_lost, status="ok")
        row["_delays"] = delay_stats(res, 0)
        row["_decisions"] = [(cell.deployment, scheme.value, cell.delta_s, load) + r for r in res.decision_log]
        row["_occupancy"] = [(cell.deployment, scheme.value, cell.delta_s, load) + r for r in res.occupancy_log]
    except Exception as e:  # recorded per cell, reported through the exit status
        log.exception("cell %s failed", cell)
        row.update({k: "" for k in RUN_COLUMNS if k not in row})
        row["status"] = f"error: {type(e).__name__}: {e}"
    return row


def _run_cell_args(args):
    return run_cell(*args)


def execute(cfg: ExperimentConfig, progress: bool = False) -> list[dict[str, Any]]:
    todo = cells(cfg)
    if cfg.workers == 1:
        rows = []
        for i, c in enumerate(todo):
            rows.append(run_cell(cfg, c))
            if progress and (i + 1) % 50 == 0:
                log.info("%d/%d cells", i + 1, len(todo))
    else:
        with ProcessPoolExecutor(cfg.workers) as ex:
            rows = list(ex.map(_run_cell_args, [(cfg, c) for c in todo], chunksize=4))
    return rows


def _fmt(v):
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return v


def aggregate(cfg: ExperimentConfig, rows: list[dict[str, Any]]) -> tuple[list[list], list[list]]:
    groups: dict[tuple, list[dict]] = {}
    for r in rows:
        if r["status"] != "ok":
            continue
        groups.setdefault((SCHEME_ORDER[r["scheme"]], r["delta"], r["load"]), []).append(r)
    k_max = int(round(cfg.t_obs_s / cfg.iteration_s))
    agg, cdf = [], []
    for (si, delta, load), rs in sorted(groups.items()):
        scheme = list(Scheme)[si].value
        s = [r["s_mean"] for r in rs]
        d = np.array([r["d_mean"] for r in rs], dtype=float)
        d = d[~np.isnan(d)]
        qs = np.percentile(d, QUANTILES).tolist() if len(d) else [math.nan] * len(QUANTILES)
        agg.append([scheme, delta, load, len(rs), float(np.mean(s)), satisfaction_probability(s, load, cfg.eps_s),
                    float(np.mean(d)) if len(d) else math.nan] + qs)
        ks = [r["k_first"] if r["k_first"] != "" else None for r in rs]
        for k, v in enumerate(iterations_to_satisfaction_cdf(ks, k_max), start=1):
            cdf.append([scheme, delta, load, k, v])
    return agg, cdf


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def write_outputs(cfg: ExperimentConfig, rows: list[dict[str, Any]], out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "runs.csv", RUN_COLUMNS, [[r[c] for c in RUN_COLUMNS] for r in rows])
    agg, cdf = aggregate(cfg, rows)
    _write_csv(out / "aggregates.csv", AGG_COLUMNS, agg)
    _write_csv(out / "cdf.csv", CDF_COLUMNS, cdf)
    if cfg.decision_log:
        _write_csv(out / "decisions.csv",
                   ["scenario_id", "scheme", "delta", "load", "wlan", "t", "ops", "satisfied", "old_p", "new_p",
                    "rhat"],
                   [d for r in rows for d in r.get("_decisions", [])])
    if cfg.occupancy_log:
        _write_csv(out / "occupancy.csv",
                   ["scenario_id", "scheme", "delta", "load", "wlan", "iteration", "channel_or_bond", "probability"],
                   [d for r in rows for d in r.get("_occupancy", [])])
    failed = [r for r in rows if r["status"] != "ok"]
    manifest = {"version": __version__, "config": cfg.to_dict(), "cells": len(rows), "failed": len(failed)}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def run_experiment(cfg: ExperimentConfig, out: str | Path | None = None, progress: bool = False) -> int:
    """Run every cell and write outputs; returns 0 if all cells succeeded, else 1."""
    cfg.validate()
    rows = execute(cfg, progress)
    write_outputs(cfg, rows, Path(out or cfg.out_dir))
    return 1 if any(r["status"] != "ok" for r in rows) else 0
