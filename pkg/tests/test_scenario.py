import json
import math
from collections import Counter

import pytest

from dcbsim.scenario import DeploymentParams, ScenarioError, from_dict, generate, load, save, to_dict, validate


def test_central_wlan_layout():
    sc = generate(DeploymentParams(), seed=0)
    a = sc.wlans[0]
    assert a.ap == (20.0, 20.0)
    assert a.alloc.size == 8 and a.dcb and a.load_bps == 100e6
    assert len(sc.wlans) == 10


def test_many_deployments_respect_constraints():
    p = DeploymentParams()
    for seed in range(10_000):
        sc = generate(p, seed)
        aps = [w.ap for w in sc.wlans]
        dmin = min(math.dist(x, y) for i, x in enumerate(aps) for y in aps[i + 1:])
        assert dmin >= 10.0
        for w in sc.wlans:
            assert 1.0 <= w.ap_sta_distance <= 5.0 + 1e-9
            assert 0 <= w.ap[0] <= 40 and 0 <= w.ap[1] <= 40


def test_random_attributes_are_uniform():
    sizes, caps, prim_off = Counter(), Counter(), Counter()
    loads = []
    for seed in range(2000):
        for w in generate(DeploymentParams(), seed).wlans[1:]:
            sizes[w.alloc.size] += 1
            caps[w.capability] += 1
            loads.append(w.load_bps)
            if w.alloc.size == 8:
                prim_off[w.primary] += 1
    n = sum(sizes.values())
    chi2 = sum((sizes[k] - n / 4) ** 2 / (n / 4) for k in (1, 2, 4, 8))
    assert chi2 < 16.27  # 3 dof, 0.1%
    assert abs(caps["SC"] - n / 2) < 4 * math.sqrt(n / 4)
    assert min(loads) >= 1e6 and max(loads) <= 400e6
    assert sum(loads) / n == pytest.approx(200.5e6, rel=0.02)
    m = sum(prim_off.values())
    chi2 = sum((prim_off[c] - m / 8) ** 2 / (m / 8) for c in range(1, 9))
    assert chi2 < 24.32  # 7 dof, 0.1%


def test_generation_is_seeded():
    assert generate(seed=3) == generate(seed=3)
    assert generate(seed=3) != generate(seed=4)


def test_infeasible_density_raises():
    with pytest.raises(ScenarioError, match="infeasible parameters"):
        generate(DeploymentParams(area_m=(10.0, 10.0), n_wlans=20, max_attempts=10_000))


def test_file_roundtrip(tmp_path):
    sc = generate(seed=9).with_central_load(25e6)
    path = tmp_path / "s.json"
    save(sc, path)
    assert load(path) == sc


def test_file_errors(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"wlans": [\n  {"id": 0,}\n]}')
    with pytest.raises(ScenarioError, match=r"bad.json:2:\d+"):
        load(path)
    d = to_dict(generate(seed=1))
    del d["wlans"][2]["primary"]
    path.write_text(json.dumps(d))
    with pytest.raises(ScenarioError, match=r"wlans\[2\]: missing field 'primary'"):
        load(path)
    d = to_dict(generate(seed=1))
    d["wlans"][1]["alloc_channels"] = [2, 3]
    d["wlans"][1]["primary"] = 2
    path.write_text(json.dumps(d))
    with pytest.raises(ScenarioError, match="alloc_channels"):
        load(path)


def test_validate_rejects_close_aps_and_far_stas():
    d = to_dict(generate(seed=1))
    w = d["wlans"][1]
    dx, dy = w["sta"][0] - w["ap"][0], w["sta"][1] - w["ap"][1]
    w["ap"] = [25.0, 20.0]
    w["sta"] = [25.0 + dx, 20.0 + dy]
    with pytest.raises(ScenarioError, match="closer than"):
        validate(from_dict(d))
    d = to_dict(generate(seed=1))
    d["wlans"][3]["sta"] = [d["wlans"][3]["ap"][0] + 9.0, d["wlans"][3]["ap"][1]]
    with pytest.raises(ScenarioError, match="outside"):
        validate(from_dict(d))
