import json

import pytest

from frontseal.errors import DomainError
from frontseal.scenario import ScenarioConfig, run_scenario

YAML = """\
n: 5
protocol: tdh2
m: 3
L_b: 1000
txs: 6
seed: 7
keygen: dealer
faults: {2: crash, 4: leak_early}
reshare_at_blocks: [2]
"""


def test_yaml_load_and_aliases(tmp_path):
    path = tmp_path / "s.yaml"
    path.write_text(YAML)
    cfg = ScenarioConfig.load(path)
    assert cfg.block_time_ms == 1000 and cfg.t == 3
    assert cfg.faults == {2: "crash", 4: "leak_early"}


@pytest.mark.parametrize(
    "bad",
    [{"colour": 1}, {"n": 3, "t": 4}, {"faults": {9: "crash"}}, {"faults": {1: "explode"}}, {"protocol": "rsa"}],
)
def test_bad_configs(bad):
    with pytest.raises(DomainError):
        ScenarioConfig.from_mapping(bad)


def test_run_with_faults_and_reshare(tmp_path):
    path = tmp_path / "s.yaml"
    path.write_text(YAML)
    res = run_scenario(path)
    s = res.summary()
    assert s["executed"] == 6 and s["failed"] == 0 and s["rejected"] == 0
    assert s["conservation"] and s["plaintext_after_finality"]
    assert s["confidentiality_violations"] == 0
    assert res.committee.reshares[0].completed_ms is not None


@pytest.mark.parametrize("protocol", ["tdh2", "pvss"])
def test_same_seed_same_trace(protocol):
    cfg = {"n": 4, "protocol": protocol, "m": 2, "L_b": 1000, "txs": 4, "seed": 3, "rotate_at_blocks": [2]}
    a = run_scenario(dict(cfg)).trace
    b = run_scenario(dict(cfg)).trace
    assert a.deterministic_view() == b.deterministic_view()
    assert a.to_ndjson(include_wallclock=False) == b.to_ndjson(include_wallclock=False)
    c = run_scenario(dict(cfg, seed=4)).trace
    assert c.deterministic_view() != a.deterministic_view()


def test_ndjson_lines_parse():
    res = run_scenario({"n": 3, "m": 1, "L_b": 1000, "txs": 2})
    lines = res.trace.to_ndjson().splitlines()
    assert lines and all(isinstance(json.loads(line), dict) for line in lines)
    events = {json.loads(line)["event"] for line in lines}
    assert {"submitted", "included", "finalized", "revealed", "executed"} <= events
