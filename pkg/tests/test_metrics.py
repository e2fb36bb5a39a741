import math

import numpy as np
import pytest

from dcbsim.engine import SimulationResult, WlanResult
from dcbsim.metrics import (
    RunMetrics, delay_stats, first_satisfied, iterations_to_satisfaction_cdf, run_metrics, satisfaction_probability,
    throughput,
)
from dcbsim.selection import IterationRecord


def _result(delays, bits=1_200_000, flags=(False, True, True)):
    recs = [IterationRecord(k + 1, 0.0, 0.0, f, 1) for k, f in enumerate(flags)]
    w = WlanResult(0, delivered_bits=bits, delays_s=np.asarray(delays, dtype=float), iterations=recs)
    return SimulationResult(2.0, [w])


def test_throughput_and_delay():
    r = _result([0.001, 0.002, 0.003, 0.004])
    assert throughput(r) == 600_000
    d = delay_stats(r)
    assert d.n == 4 and d.mean == pytest.approx(0.0025)
    assert d.quantiles[50] == pytest.approx(0.0025)


def test_delay_undefined_without_deliveries():
    d = delay_stats(_result([], bits=0))
    assert not d.defined and math.isnan(d.mean)


def test_first_satisfied_and_run_metrics():
    assert first_satisfied([False, False, True]) == 3
    assert first_satisfied([False]) is None
    m = run_metrics(_result([0.01]), 0, 1e6)
    assert m.k_first == 2 and m.s_mean == 600_000


def test_satisfaction_probability_inclusive():
    load = 100.0
    assert satisfaction_probability([95.0, 94.9, 100.0, 10.0], load) == 0.5
    runs = [RunMetrics(95.0, 0.0, load_bps=100.0), RunMetrics(50.0, 0.0, load_bps=100.0)]
    assert satisfaction_probability(runs) == 0.5
    with pytest.raises(ValueError, match="no runs"):
        satisfaction_probability([], 1.0)


def test_cdf_counts_never_satisfied_runs_in_denominator():
    cdf = iterations_to_satisfaction_cdf([1, 1, 3, None], 4)
    assert cdf == [0.5, 0.5, 0.75, 0.75]
    assert iterations_to_satisfaction_cdf([], 2) == [0.0, 0.0]
