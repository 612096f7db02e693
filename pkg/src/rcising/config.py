"""Run configuration: plain ``key = value`` text, lossless round trip, JSON manifests.

Units are part of the key names (``sweeps`` count sweeps of ``|V|`` moves,
``burn_in`` is in sweeps). Coordinates are comma-separated, lists of points
are separated by semicolons.
"""
from __future__ import annotations

import configparser
import json
from dataclasses import dataclass, field, fields
from typing import Any

COMMANDS = (
    "verify-switching", "verify-coupling", "verify-backbone", "verify-derivative", "sample-current", "sample-fk",
    "iic-scan", "chi-scan", "avoidance", "bubbles", "mixing-probe", "regular-scales", "report-constant",
)

_SECTION = "run"


class ConfigError(ValueError):
    """Invalid or incomplete configuration."""


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.replace(";", ",").split(",") if t.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.replace(";", ",").split(",") if t.strip())


def _points(text: str) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple(int(c) for c in p.split(",")) for p in text.split(";") if p.strip())


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _render(kind: str, value) -> str:
    if kind == "float":
        return repr(float(value))
    if kind == "floats":
        return ", ".join(repr(float(v)) for v in value)
    if kind == "ints":
        return ", ".join(str(int(v)) for v in value)
    if kind == "points":
        return "; ".join(",".join(str(c) for c in p) for p in value)
    if kind == "bool":
        return "true" if value else "false"
    return str(value)


_PARSE = {"int": int, "float": float, "str": str, "floats": _floats, "ints": _ints, "points": _points,
          "bool": _bool}


def _f(kind: str, default=None, help: str = ""):
    return field(default=default, metadata={"kind": kind, "help": help})


@dataclass
class RunConfig:
    """Everything that affects a run's results."""

    command: str = _f("str", None, "subcommand name")
    graph: str = _f("str", "box", "box | torus | path | cycle | corpus (explicit graphs use vertex indices)")
    d: int = _f("int", 1, "lattice dimension")
    size: int = _f("int", 1, "box radius n, torus side L, or number of vertices for path/cycle")
    corpus: str = _f("str", "small", "fixture corpus name")
    label: str = _f("str", None, "corpus graph label (graph = corpus)")
    beta: float = _f("float", None, "inverse temperature")
    betas: tuple = _f("floats", (), "inverse-temperature grid")
    beta_ratios: tuple = _f("floats", (), "grid as fractions of beta_c")
    beta_c: float = _f("float", None, "critical point (external input)")
    h: float = _f("float", 1e-4, "finite-difference step in beta")
    max_edges: int = _f("int", None, "largest corpus graph to include")
    sources: tuple = _f("points", (), "source points")
    x: tuple = _f("ints", None, "far source of the origin current")
    y: tuple = _f("ints", None, "far source of the e1 current")
    event: str = _f("str", "origin-edge", "named event, see --help of the command")
    far_event: str = _f("str", None, "event outside Lambda_N (mixing-probe)")
    ks: tuple = _f("ints", (), "radii k of the local events")
    n: int = _f("int", None, "inner radius")
    N: int = _f("int", None, "outer radius")
    xs: tuple = _f("points", (), "near sources")
    ys: tuple = _f("points", (), "far sources")
    ys_alt: tuple = _f("points", (), "alternative far sources")
    xs_alt: tuple = _f("points", (), "alternative near sources")
    currents: int = _f("int", None, "number of currents (mixing-probe)")
    mode: str = _f("str", "current", "current | fk")
    chi_source: str = _f("str", "worm", "worm | sw | exact")
    table: str = _f("str", "worm", "two-point source: worm | exact | power:<p> | const:<g> | path to CSV")
    radius: int = _f("int", None, "radius of a synthetic two-point table")
    c: float = _f("float", 0.5, "growth constant of (P3)")
    C: float = _f("float", 4.0, "comparison constant of (P1), (P2), (P4)")
    A: float = _f("float", None, "susceptibility amplitude")
    A_se: float = _f("float", 0.0, "its standard error")
    P: float = _f("float", None, "avoidance probability")
    P_se: float = _f("float", 0.0, "its standard error")
    B_open: float = _f("float", None, "open bubble")
    B_open_se: float = _f("float", 0.0, "its standard error")
    sweeps: int = _f("int", 10_000, "sweeps of |V| moves")
    burn_in: int = _f("int", None, "discarded sweeps (default 10 x diameter)")
    thinning: int = _f("int", 1, "keep every k-th sample")
    seed: int = _f("int", 0, "unsigned 64-bit seed")
    threads: int = _f("int", 1, "worker processes (0 = all cores)")

    # fields that only steer execution and never change results
    EXECUTION_ONLY = ("threads",)

    @classmethod
    def keys(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    @classmethod
    def kind(cls, key: str) -> str:
        for f in fields(cls):
            if f.name == key:
                return f.metadata["kind"]
        raise ConfigError(f"unknown config key {key!r}")

    def set(self, key: str, text: str) -> None:
        kind = self.kind(key)
        try:
            setattr(self, key, _PARSE[kind](text))
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from None

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            lines.append(f"{f.name} = {_render(f.metadata['kind'], v)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
        cp.optionxform = str
        try:
            cp.read_string(f"[{_SECTION}]\n" + text)
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from None
        cfg = cls()
        for key, value in cp.items(_SECTION):
            cfg.set(key, value)
        return cfg

    @classmethod
    def load(cls, path: str) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
        if path.endswith(".json"):
            data = json.loads(text)
            return cls.from_dict(data.get("config", data))
        return cls.from_text(text)

    def to_dict(self) -> dict[str, Any]:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = [list(p) for p in v] if f.metadata["kind"] == "points" else (list(v) if isinstance(v, tuple) else v)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        cfg = cls()
        for key, v in data.items():
            kind = cls.kind(key)
            if v is None:
                setattr(cfg, key, None)
            elif kind == "points":
                setattr(cfg, key, tuple(tuple(int(c) for c in p) for p in v))
            elif kind in ("floats", "ints"):
                conv = float if kind == "floats" else int
                setattr(cfg, key, tuple(conv(t) for t in v))
            else:
                setattr(cfg, key, _PARSE[kind](str(v)) if kind != "str" else v)
        return cfg

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"command: expected one of {', '.join(COMMANDS)}, got {self.command!r}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed: must be an unsigned 64-bit integer")
        if self.threads < 0:
            raise ConfigError("threads: must be >= 0")
        if self.graph not in ("box", "torus", "path", "cycle", "corpus"):
            raise ConfigError(f"graph: unknown kind {self.graph!r}")
        if self.graph == "corpus" and self.label is None and self.command.startswith("sample"):
            raise ConfigError("label: required for a single corpus graph")
        need = {
            "chi-scan": ("beta_c",),
            "report-constant": ("beta_c",),
            "verify-derivative": ("beta",),
            "sample-current": ("beta",),
            "sample-fk": ("beta",),
            "iic-scan": ("beta",),
            "avoidance": ("beta",),
            "mixing-probe": ("beta", "n", "N"),
        }
        for key in need.get(self.command, ()):
            if getattr(self, key) is None:
                raise ConfigError(f"{key}: required by {self.command}")
        if self.command == "chi-scan" and not (self.betas or self.beta_ratios):
            raise ConfigError("betas: chi-scan needs betas or beta_ratios")
        if self.command in ("bubbles", "regular-scales") and self.table in ("worm", "exact") and self.beta is None:
            raise ConfigError(f"beta: required by {self.command} with table = {self.table}")
        if self.mode not in ("current", "fk"):
            raise ConfigError(f"mode: expected current or fk, got {self.mode!r}")
        if self.chi_source not in ("worm", "sw", "exact"):
            raise ConfigError(f"chi_source: expected worm, sw or exact, got {self.chi_source!r}")
        if self.sweeps < 1 or self.thinning < 1:
            raise ConfigError("sweeps and thinning must be positive")
        if self.burn_in is not None and not 0 <= self.burn_in < self.sweeps:
            raise ConfigError("burn_in: need 0 <= burn_in < sweeps")

    def result_fields(self) -> dict[str, Any]:
        d = self.to_dict()
        for k in self.EXECUTION_ONLY:
            d.pop(k)
        return d
