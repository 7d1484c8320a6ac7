import json

import pytest

from cmsflow import scenarios as S

FAST = [n for n in S.names() if not n.startswith("mp_alpha")]
ALL_PAIRS = {(b, f) for b in ("PositiveRecurrent", "NullRecurrent", "Transient")
             for f in ("PositiveRecurrent", "NullRecurrent", "Transient")}


@pytest.mark.parametrize("name", FAST)
def test_scenario_green(name):
    res = S.run(S.build(name))
    failed = [e for e in res["expectations"] if not e["pass"]]
    assert res["pass"], failed
    assert all(e["provenance"] in ("stated", "derived", "chosen") for e in res["expectations"])


def test_search_constants():
    assert S.hofbauer_k() == 4
    assert S.two_phase_K() == 8104


def test_every_class_pair_realized():
    pairs = S.recurrence_pairs()
    assert set(pairs) == ALL_PAIRS
    assert pairs[("NullRecurrent", "Transient")].startswith("trans_null")


@pytest.mark.parametrize("text,alpha", [("mp_alpha(2)", 2.0), ("mp_alpha:0.5", 0.5)])
def test_mp_name_parsing(text, alpha):
    sc = S.build(text)
    assert sc.spec is None
    assert sc.params["alpha"] == alpha


@pytest.mark.parametrize("name", ["nope", "mp_alpha"])
def test_unknown_scenario(name):
    with pytest.raises(S.UnknownScenario):
        S.build(name)


def test_run_is_deterministic():
    a = json.dumps(S.run(S.build("trans_null")), sort_keys=True)
    b = json.dumps(S.run(S.build("trans_null")), sort_keys=True)
    assert a == b
