import json

import pytest
from hypothesis import given, strategies as st

from rcising.config import COMMANDS, ConfigError, RunConfig

_word = st.text("abcdefghijklmnopqrstuvwxyz0123456789-_:./", min_size=1, max_size=12)
_float = st.floats(allow_nan=False, allow_infinity=False)
_point = st.lists(st.integers(-50, 50), min_size=1, max_size=4).map(tuple)

_KIND = {
    "int": st.integers(-10**6, 10**6),
    "float": _float,
    "str": _word,
    "floats": st.lists(_float, max_size=5).map(tuple),
    "ints": st.lists(st.integers(-100, 100), max_size=5).map(tuple),
    "points": st.lists(_point, max_size=4).map(tuple),
    "bool": st.booleans(),
}


@st.composite
def configs(draw):
    cfg = RunConfig()
    for key in RunConfig.keys():
        if draw(st.booleans()):
            setattr(cfg, key, draw(_KIND[RunConfig.kind(key)]))
    return cfg


@given(configs())
def test_text_round_trip(cfg):
    assert RunConfig.from_text(cfg.to_text()) == cfg


@given(configs())
def test_dict_round_trip_through_json(cfg):
    assert RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg


def test_load_text_and_manifest(tmp_path):
    cfg = RunConfig(command="bubbles", table="power:3", radius=4, d=2, sources=((1, 0), (0, 2)))
    p = tmp_path / "run.cfg"
    p.write_text("# comment\n" + cfg.to_text())
    assert RunConfig.load(str(p)) == cfg
    m = tmp_path / "manifest.json"
    m.write_text(json.dumps({"config": cfg.to_dict(), "seed": 0}))
    assert RunConfig.load(str(m)) == cfg


def test_result_fields_drop_threads():
    a, b = RunConfig(command="bubbles", threads=1), RunConfig(command="bubbles", threads=8)
    assert a.result_fields() == b.result_fields()
    assert "threads" not in a.result_fields()


@pytest.mark.parametrize("text", ["nokey = 1", "d = two", "betas = 0.1, x", "sources = 1,a", "[run\nd=1"])
def test_bad_text_raises(text):
    with pytest.raises(ConfigError):
        RunConfig.from_text(text)


def _valid(**kw):
    base = dict(command="sample-current", beta=0.3)
    base.update(kw)
    return RunConfig(**base)


@pytest.mark.parametrize("kw, key", [
    (dict(command="nope"), "command"),
    (dict(seed=-1), "seed"),
    (dict(seed=2**64), "seed"),
    (dict(threads=-1), "threads"),
    (dict(graph="hex"), "graph"),
    (dict(graph="corpus"), "label"),
    (dict(beta=None), "beta"),
    (dict(command="chi-scan", betas=(0.1,)), "beta_c"),
    (dict(command="chi-scan", beta_c=0.2), "betas"),
    (dict(command="report-constant"), "beta_c"),
    (dict(command="mixing-probe", n=2), "N"),
    (dict(command="bubbles", beta=None), "beta"),
    (dict(mode="both"), "mode"),
    (dict(chi_source="magic"), "chi_source"),
    (dict(sweeps=0), "sweeps"),
    (dict(burn_in=10, sweeps=10), "burn_in"),
])
def test_validation_names_the_key(kw, key):
    with pytest.raises(ConfigError, match=key):
        _valid(**kw).validate()


def test_every_command_validates_with_its_requirements():
    extra = {"chi-scan": dict(beta_c=0.2, betas=(0.1,)), "report-constant": dict(beta_c=0.2),
             "mixing-probe": dict(n=1, N=3)}
    for cmd in COMMANDS:
        _valid(command=cmd, **extra.get(cmd, {})).validate()
    _valid(command="bubbles", beta=None, table="power:3", radius=4).validate()
