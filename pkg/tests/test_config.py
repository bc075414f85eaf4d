import json
from pathlib import Path

import pytest

from concavity_lab.config import (ResolutionConfig, RunConfig, default_log_level,
                                  default_tolerance, expectation, load_config,
                                  parse_resolution_override, read_raw)
from concavity_lab.errors import ConfigError, ResolutionError

BASE = {"measure": {"kind": "gaussian", "params": {"sigma": 1.0}}, "body": {"kind": "disk", "R": 1.0}}


def test_env_helpers(monkeypatch: pytest.MonkeyPatch):
    monkeypatch.delenv("CONCAVITY_LAB_TOLERANCE", raising=False)
    assert default_tolerance() == 1e-7
    monkeypatch.setenv("CONCAVITY_LAB_TOLERANCE", "1e-5")
    assert default_tolerance() == 1e-5
    monkeypatch.setenv("CONCAVITY_LAB_TOLERANCE", "-1")
    assert default_tolerance() == 1e-7
    monkeypatch.setenv("CONCAVITY_LAB_LOG_LEVEL", "debug")
    assert default_log_level() == "DEBUG"


def test_defaults_from_minimal_mapping(monkeypatch: pytest.MonkeyPatch):
    monkeypatch.delenv("CONCAVITY_LAB_TOLERANCE", raising=False)
    config = RunConfig.from_mapping(BASE)
    assert config.command == "power"
    assert config.resolution == ResolutionConfig()
    assert config.tolerance == 1e-7
    assert config.expect is None


def test_tolerance_env_applies_when_config_is_silent(monkeypatch: pytest.MonkeyPatch):
    monkeypatch.setenv("CONCAVITY_LAB_TOLERANCE", "1e-4")
    assert RunConfig.from_mapping(BASE).tolerance == 1e-4
    assert RunConfig.from_mapping({**BASE, "tolerance": 1e-9}).tolerance == 1e-9


@pytest.mark.parametrize(
    "patch, field",
    [
        ({"measure": None}, "measure"),
        ({"body": {"R": 1.0}}, "body"),
        ({"command": "plot"}, "command"),
        ({"resolution": {"N": 9999}}, "resolution"),
        ({"resolution": {"M": 257}}, "resolution"),
        ({"resolution": {"N": 2.5}}, "resolution.N"),
        ({"resolution": {"Q": 1}}, "resolution"),
        ({"scan": {"mode": "sideways"}}, "scan.mode"),
        ({"tolerance": "tight"}, "tolerance"),
        ({"tolerance": -1.0}, "tolerance"),
    ],
)
def test_invalid_fields_are_named(patch, field):
    with pytest.raises(ConfigError) as info:
        RunConfig.from_mapping({**BASE, **patch})
    assert info.value.field == field
    assert str(info.value).startswith(f"{field}:")


def test_config_hash_ignores_outputs_and_name():
    first = RunConfig.from_mapping({**BASE, "outputs": {"report": "a.json"}}, name="a")
    second = RunConfig.from_mapping({**BASE, "outputs": {"report": "b.json"}}, name="b")
    assert first.config_hash() == second.config_hash()
    assert first.config_hash().startswith("cfg-") and len(first.config_hash()) == 4 + 16
    assert RunConfig.from_mapping({**BASE, "seed": 3}).config_hash() != first.config_hash()


def test_overrides():
    config = RunConfig.from_mapping(BASE).with_overrides(seed=9, resolution="N=8, M=128", mode="logc", out="r.json")
    assert config.seed == 9
    assert (config.resolution.N, config.resolution.M, config.resolution.S) == (8, 128, 128)
    assert config.scan.mode == "logc"
    assert config.outputs.report == "r.json"
    with pytest.raises(ConfigError):
        RunConfig.from_mapping(BASE).with_overrides(mode="sideways")


def test_resolution_override_errors():
    with pytest.raises(ConfigError, match="KEY=VALUE"):
        parse_resolution_override("N8", ResolutionConfig())
    with pytest.raises(ConfigError, match="unknown key"):
        parse_resolution_override("K=8", ResolutionConfig())
    with pytest.raises(ResolutionError, match="out of bounds"):
        parse_resolution_override("N=9999", ResolutionConfig())


def test_read_raw_names_position(tmp_path: Path):
    path = tmp_path / "broken.json"
    path.write_text('{"measure": {\n  "kind": }\n}', encoding="utf-8")
    with pytest.raises(ConfigError, match="line 2 column"):
        read_raw(path)
    with pytest.raises(ConfigError, match="cannot read"):
        read_raw(tmp_path / "absent.json")


def test_expectation_survives_invalid_config():
    raw = {"body": {"kind": "disk", "R": 1.0}, "expect": {"exit_code": 1}}
    assert expectation(raw).exit_code == 1
    assert expectation([1, 2]).exit_code == 0


def test_shipped_corpus_parses():
    corpus = Path(__file__).parent.parent / "config" / "corpus"
    for path in sorted(corpus.glob("*.json")):
        raw = json.loads(path.read_text())
        if expectation(raw).exit_code == 1:
            continue
        config = load_config(path)
        assert config.name == raw.get("name", path.stem)
