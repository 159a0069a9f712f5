import json
import math

import pytest

import alohanet


def pair_scenario(dc=None):
    sc = {
        "nodes": [{"id": 0, "energy": 1.0}, {"id": 1, "energy": 1.0}],
        "links": [{"tx": 0, "rx": 1}, {"tx": 1, "rx": 0}],
        "sessions": [],
        "lambda1": 1.0,
        "lambda2": 1.0,
    }
    if dc is not None:
        sc["Dc"] = dc
    return json.dumps(sc)


def test_link_delay():
    assert alohanet.link_delay(0.5, 0.25) == pytest.approx(3.5)
    assert alohanet.link_delay(0.5, 0.5) is None


def test_mindc_pair():
    out = json.loads(alohanet.mindc(pair_scenario()))
    assert out["min_dc"] == pytest.approx(4.0, rel=1e-3)


def test_mac_centralized_pair():
    out = json.loads(alohanet.mac_opt(pair_scenario(dc=20.0)))
    assert out["feasible"]
    assert len(out["probs"]) == 2
    for p, r in zip(out["probs"], out["rates"]):
        assert 0.0 < p < 1.0
        assert 0.0 < r < 1.0
    assert out["objective"] == pytest.approx(
        out["energy"] - sum(math.log(r) for r in out["rates"]), rel=1e-6
    )


def test_gen_star():
    sc = json.loads(alohanet.gen("star", 4))
    assert len(sc["links"]) == 6


def test_xlayer_linear():
    sc = json.loads(alohanet.gen("linear", 3))
    sc["sessions"] = [
        {
            "id": 0,
            "route": [[0, 1], [1, 2]],
            "delay_limit": 60.0,
        }
    ]
    out = json.loads(alohanet.xlayer_opt(json.dumps(sc)))
    assert out["feasible"]
    assert len(out["sessions"]) == 1
    assert out["sessions"][0]["rate"] > 0.0
