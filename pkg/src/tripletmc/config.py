"""Run configuration files.

A configuration has three sections::

    model:
      kind: heisenberg          # or hubbard
      lattice: {geometry: square, lx: 4, ly: 4, periodic: true}
      J: 1.0                    # hubbard: t, U, n_up, n_down
    engine:
      r: 30
      initial_shift: -16.5
      bias: {kappa: 0.5}
      ...                       # any EngineConfig field
    output:
      directory: out
      series: series.csv
      summary: summary.json

plus an optional ``sweep`` section read by ``sweep-r``. YAML and JSON are both
accepted; a summary file written by ``run`` is accepted too (its ``config``
entry is used). Every key is checked before anything is allocated, and errors
carry the line and column of the offending node.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .engine import EngineConfig
from .hamiltonians import HeisenbergParams, HubbardParams
from .importance import BiasParams
from .lattice import GEOMETRIES, FermionConfig, LatticeSpec


class ConfigError(ValueError):
    pass


@dataclass
class OutputSpec:
    directory: str = "."
    series: str = "series.csv"
    summary: str = "summary.json"


@dataclass
class SweepSpec:
    r_list: list = field(default_factory=list)
    replicas: int = 10
    fit_window: tuple = (0.0, math.inf)
    estimator: str = "projected"


@dataclass
class RunConfig:
    model: object
    engine: EngineConfig
    output: OutputSpec
    sweep: SweepSpec
    raw: dict


def _where(node) -> str:
    m = node.start_mark
    return f"{m.name}:{m.line + 1}:{m.column + 1}"


def _fail(node, msg):
    raise ConfigError(f"{_where(node)}: {msg}")


def _scalar(node):
    if not isinstance(node, yaml.ScalarNode):
        _fail(node, "expected a scalar value")
    return yaml.safe_load(yaml.serialize(node))


def _number(node, *, integer=False, positive=False, allow_null=False):
    value = _scalar(node)
    if value is None and allow_null:
        return None
    if isinstance(value, str) and node.style is None:
        # YAML 1.1 reads exponents without a sign (3.5e5) as strings
        try:
            value = float(value)
        except ValueError:
            pass
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(node, f"expected a number, got {value!r}")
    if integer and not (isinstance(value, int) or float(value).is_integer()):
        _fail(node, f"expected an integer, got {value!r}")
    if positive and not value > 0:
        _fail(node, f"expected a positive value, got {value!r}")
    return int(value) if integer else float(value)


def _bool(node):
    value = _scalar(node)
    if not isinstance(value, bool):
        _fail(node, f"expected true or false, got {value!r}")
    return value


def _mapping(node, allowed, required=()):
    if not isinstance(node, yaml.MappingNode):
        _fail(node, "expected a mapping")
    out = {}
    for key_node, value_node in node.value:
        key = _scalar(key_node)
        if key not in allowed:
            _fail(key_node, f"unknown key {key!r} (allowed: {', '.join(sorted(allowed))})")
        if key in out:
            _fail(key_node, f"duplicate key {key!r}")
        out[key] = value_node
    for key in required:
        if key not in out:
            _fail(node, f"missing required key {key!r}")
    return out


def _sequence(node):
    if not isinstance(node, yaml.SequenceNode):
        _fail(node, "expected a list")
    return node.value


def _lattice(node) -> LatticeSpec:
    m = _mapping(node, {"geometry", "lx", "ly", "periodic"}, ("geometry", "lx"))
    geometry = _scalar(m["geometry"])
    if geometry not in GEOMETRIES:
        _fail(m["geometry"], f"geometry must be one of {', '.join(GEOMETRIES)}")
    lx = _number(m["lx"], integer=True, positive=True)
    ly = _number(m["ly"], integer=True, positive=True) if "ly" in m else 1
    periodic = (False, False)
    if "periodic" in m:
        p = m["periodic"]
        if isinstance(p, yaml.SequenceNode):
            items = _sequence(p)
            if len(items) != 2:
                _fail(p, "periodic takes one flag or two")
            periodic = tuple(_bool(x) for x in items)
        else:
            periodic = (_bool(p),) * 2
    try:
        return LatticeSpec(geometry, lx, ly, periodic)
    except ValueError as exc:
        _fail(node, str(exc))


def _model(node):
    m = _mapping(node, {"kind", "lattice", "J", "n_up", "t", "U", "n_down"}, ("kind", "lattice"))
    kind = _scalar(m["kind"])
    lattice = _lattice(m["lattice"])
    try:
        if kind == "heisenberg":
            for bad in ("t", "U", "n_down"):
                if bad in m:
                    _fail(m[bad], f"{bad!r} does not apply to a heisenberg model")
            n_up = _number(m["n_up"], integer=True) if "n_up" in m else None
            return HeisenbergParams(_number(m["J"]) if "J" in m else 1.0, lattice, n_up)
        if kind == "hubbard":
            if "J" in m:
                _fail(m["J"], "'J' does not apply to a hubbard model")
            for key in ("n_up", "n_down"):
                if key not in m:
                    _fail(node, f"hubbard model needs {key!r}")
            return HubbardParams(
                _number(m["t"]) if "t" in m else 1.0,
                _number(m["U"]) if "U" in m else 4.0,
                lattice,
                _number(m["n_up"], integer=True),
                _number(m["n_down"], integer=True),
            )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        _fail(node, str(exc))
    _fail(m["kind"], f"kind must be heisenberg or hubbard, got {kind!r}")


_ENGINE_FLOATS = {"r", "initial_shift", "xi", "c_init_threshold", "initial_weight"}
_ENGINE_INTS = {"shift_update_period", "n_init_threshold", "initial_triplet_count",
                "n_thermalization", "n_sampling", "rng_seed"}
_ENGINE_BOOLS = {"use_initiators", "stochastic_survivors"}
_ENGINE_KEYS = _ENGINE_FLOATS | _ENGINE_INTS | _ENGINE_BOOLS | {"target_population", "bias", "initial_states"}


def _initial_states(node, model):
    states = []
    for item in _sequence(node):
        if isinstance(model, HubbardParams):
            pair = _sequence(item)
            if len(pair) != 2:
                _fail(item, "a hubbard state is [up_bits, down_bits]")
            states.append(FermionConfig(*(_number(x, integer=True) for x in pair)))
        else:
            states.append(_number(item, integer=True))
    return tuple(states)


def _engine(node, model) -> EngineConfig:
    m = _mapping(node, _ENGINE_KEYS, ("r",))
    kw = {}
    for key, value in m.items():
        if key in _ENGINE_FLOATS:
            kw[key] = _number(value)
        elif key in _ENGINE_INTS:
            kw[key] = _number(value, integer=True)
        elif key in _ENGINE_BOOLS:
            kw[key] = _bool(value)
        elif key == "target_population":
            target = _number(value, positive=True, allow_null=True)
            kw[key] = math.inf if target is None else target
        elif key == "bias":
            b = _mapping(value, {"kappa", "enabled"})
            try:
                kw[key] = BiasParams(_number(b["kappa"]) if "kappa" in b else 0.0,
                                     _bool(b["enabled"]) if "enabled" in b else True)
            except ValueError as exc:
                _fail(value, str(exc))
        elif key == "initial_states":
            kw[key] = _initial_states(value, model)
    try:
        return EngineConfig(**kw)
    except ValueError as exc:
        _fail(node, str(exc))


def _output(node) -> OutputSpec:
    m = _mapping(node, {"directory", "series", "summary"})
    out = OutputSpec()
    for key, value in m.items():
        text = _scalar(value)
        if not isinstance(text, str) or not text:
            _fail(value, f"{key} must be a nonempty string")
        setattr(out, key, text)
    return out


def _sweep(node) -> SweepSpec:
    m = _mapping(node, {"r_list", "replicas", "fit_window", "estimator"})
    out = SweepSpec()
    if "r_list" in m:
        out.r_list = [_number(x, positive=True) for x in _sequence(m["r_list"])]
    if "replicas" in m:
        out.replicas = _number(m["replicas"], integer=True)
    if "fit_window" in m:
        w = _sequence(m["fit_window"])
        if len(w) != 2:
            _fail(m["fit_window"], "fit_window is [r_min, r_max]")
        lo, hi = (_number(x, positive=True, allow_null=True) for x in w)
        out.fit_window = (0.0 if lo is None else lo, math.inf if hi is None else hi)
    if "estimator" in m:
        out.estimator = _scalar(m["estimator"])
        if out.estimator not in ("projected", "shift"):
            _fail(m["estimator"], "estimator must be projected or shift")
    return out


def parse_config(text: str, name: str = "<config>") -> RunConfig:
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{name}: not valid YAML/JSON: {exc}") from None
    if root is None:
        raise ConfigError(f"{name}: empty configuration")
    _set_name(root, name)
    top = root
    if isinstance(root, yaml.MappingNode) and any(_scalar(k) == "config" for k, _ in root.value):
        # a summary document: use its echoed configuration
        top = next(v for k, v in root.value if _scalar(k) == "config")
    m = _mapping(top, {"model", "engine", "output", "sweep"}, ("model", "engine"))
    model = _model(m["model"])
    engine = _engine(m["engine"], model)
    output = _output(m["output"]) if "output" in m else OutputSpec()
    sweep = _sweep(m["sweep"]) if "sweep" in m else SweepSpec()
    return RunConfig(model, engine, output, sweep, yaml.safe_load(yaml.serialize(top)))


def _set_name(node, name):
    stack = [node]
    while stack:
        n = stack.pop()
        n.start_mark.name = name
        if isinstance(n, yaml.MappingNode):
            for k, v in n.value:
                k.start_mark.name = name
                stack.append(v)
        elif isinstance(n, yaml.SequenceNode):
            stack.extend(n.value)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, str(path))


def config_echo(cfg: RunConfig) -> dict:
    """Plain-data form of ``cfg`` that :func:`parse_config` reads back to the same run."""
    p = cfg.model
    lattice = {"geometry": p.lattice.geometry, "lx": p.lattice.lx, "ly": p.lattice.ly,
               "periodic": list(p.lattice.periodic)}
    if isinstance(p, HeisenbergParams):
        model = {"kind": "heisenberg", "lattice": lattice, "J": p.J}
        if p.n_up is not None:
            model["n_up"] = p.n_up
    else:
        model = {"kind": "hubbard", "lattice": lattice, "t": p.t, "U": p.U, "n_up": p.n_up, "n_down": p.n_down}
    e = cfg.engine
    engine = {key: getattr(e, key) for key in sorted(_ENGINE_FLOATS | _ENGINE_INTS | _ENGINE_BOOLS)}
    engine["target_population"] = None if math.isinf(e.target_population) else e.target_population
    engine["bias"] = {"kappa": e.bias.kappa, "enabled": e.bias.enabled}
    if e.initial_states is not None:
        engine["initial_states"] = [list(s) if isinstance(s, tuple) else s for s in e.initial_states]
    out = {"model": model, "engine": engine, "output": vars(cfg.output).copy()}
    s = cfg.sweep
    if s.r_list:
        out["sweep"] = {"r_list": list(s.r_list), "replicas": s.replicas, "estimator": s.estimator,
                        "fit_window": [w if 0 < w < math.inf else None for w in s.fit_window]}
    return out
