import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coupledrl.config import ConfigError, ExperimentConfig, canonical_text, config_hash, parse_flat


def test_round_trip_and_hash_stability():
    cfg = ExperimentConfig(name="t", algorithms=("dqn-lite", "s51-lite-cdf"), lr=3e-4, seeds=(0, 1, 2))
    again = ExperimentConfig.loads(cfg.dumps())
    assert again == cfg
    assert again.hash == cfg.hash and len(cfg.hash) == 16


def test_layout_and_comments_do_not_change_hash():
    a = ExperimentConfig.loads("name = x\nlr = 0.001\nseeds = 0, 1\n")
    b = ExperimentConfig.loads("# comment\n  seeds=0,1   # trailing\n\nlr = 1e-3\nname = x\n")
    assert a.hash == b.hash


def test_any_field_change_changes_hash():
    base = ExperimentConfig()
    assert base.replace(lr=2e-3).hash != base.hash
    assert base.replace(seeds=(1,)).hash != base.hash


@settings(max_examples=40, deadline=None)
@given(st.floats(1e-6, 1.0), st.integers(1, 1000), st.lists(st.integers(0, 99), min_size=1, max_size=5))
def test_round_trip_property(lr, episodes, seeds):
    cfg = ExperimentConfig(lr=lr, episodes=episodes, seeds=tuple(seeds))
    assert ExperimentConfig.loads(cfg.dumps()) == cfg


def test_canonical_text_sorted():
    assert canonical_text({"b": 1, "a": (1.5, 2.0)}) == "a = 1.5, 2.0\nb = 1\n"
    assert config_hash({"b": 1, "a": 2}) == config_hash({"a": 2, "b": 1})


@pytest.mark.parametrize("text", [
    "bogus = 1",
    "lr = fast",
    "algorithms = dqn",
    "features = rbf",
    "gamma = 1.0",
    "lr = 1\nlr = 2",
    "no equals sign",
    "episodes = 2.5",
])
def test_bad_configs_rejected(text):
    with pytest.raises(ConfigError):
        ExperimentConfig.loads(text)


def test_parse_flat_keeps_raw_strings():
    assert parse_flat("a = 1, 2  # c\nb=x") == {"a": "1, 2", "b": "x"}
