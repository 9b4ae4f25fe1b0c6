"""Scenario configuration: YAML parsing with strict schemas.

Unknown keys are rejected, with line numbers, because a silently
ignored typo in an exponent would invalidate every verdict built on
the run.  parse -> serialize -> parse is lossless.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional

import yaml


class ConfigError(Exception):
    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


SCENARIO_TYPES = ("elliptic", "parabolic", "ks", "semigroup", "exponents")

# field kinds: int, float, num_inf (float, inf allowed), str, bool,
# list_float, list_int, list_maps, pair_float
_F = dict


def _common_sections() -> dict:
    return {
        "scenario": {
            "required": True,
            "fields": {
                "name": _F(kind="str", required=True),
                "type": _F(kind="str", required=True,
                           choices=SCENARIO_TYPES),
            },
        },
        "grid": {
            "required": True,
            "fields": {
                "n": _F(kind="int", required=True, min=1),
                "R": _F(kind="float", required=True, min_excl=0.0),
                "N": _F(kind="int", required=True, min=16),
                "clustering": _F(kind="float", default=1.0, min=1.0),
            },
        },
    }


_MODEL_FIELDS = {
    "m": _F(kind="float", default=1.0),
    "q": _F(kind="float", default=1.0),
    "s": _F(kind="float", default=1.0, min_excl=0.0),
    "tau": _F(kind="float", default=0.0, min=0.0),
    "M": _F(kind="float", default=1.0, min_excl=0.0),
    "K_D1": _F(kind="float", required=False, min_excl=0.0),
    "K_D2": _F(kind="float", required=False, min_excl=0.0),
    "K_S": _F(kind="float", required=False, min_excl=0.0),
    "K_f": _F(kind="float", required=False, min_excl=0.0),
}

_SOURCE_FIELDS = {
    "family": _F(kind="str", required=True,
                 choices=("power", "gaussian", "random_cosine")),
    "amplitude": _F(kind="float", default=1.0),
    "exponent": _F(kind="float", required=False),
    "width": _F(kind="float", required=False, min_excl=0.0),
    "modes": _F(kind="int", required=False, min=1),
    "seed": _F(kind="int", required=False),
}

_INITIAL_FIELDS = {
    "family": _F(kind="str", required=True,
                 choices=("constant", "gaussian", "power_cap")),
    "value": _F(kind="float", required=False),
    "mass": _F(kind="float", required=False, min_excl=0.0),
    "width": _F(kind="float", required=False, min_excl=0.0),
    "amplitude": _F(kind="float", required=False),
    "exponent": _F(kind="float", required=False),
    "cap": _F(kind="float", required=False),
    "v0_mode": _F(kind="str", default="equilibrium",
                  choices=("equilibrium", "zero")),
}

_TIME_FIELDS = {
    "t_end": _F(kind="float", required=True, min_excl=0.0),
    "dt0": _F(kind="float", default=1e-6, min_excl=0.0),
    "dt_max": _F(kind="float", default=1e-2, min_excl=0.0),
    "dt_floor": _F(kind="float", default=1e-14, min_excl=0.0),
    "snapshot_interval": _F(kind="float", required=False, min_excl=0.0),
    "snapshot_times": _F(kind="list_float", required=False),
    "scheme": _F(kind="str", default="cn", choices=("cn", "ie")),
    "sup_threshold": _F(kind="float", default=1e6, min_excl=0.0),
}

_VERIFY_FIELDS = {
    "elliptic": {
        "cases": _F(kind="int", default=0, min=0),
        "delta_v_q": _F(kind="list_float", required=False, each_min=1.0,
                        msg="p must be >= 1"),
        "delta_v_tol": _F(kind="float", default=0.05, min=0.0),
        "gradient_q": _F(kind="list_float", required=False, each_min=1.0,
                         msg="p must be >= 1"),
        "gradient_tol": _F(kind="float", default=0.10, min=0.0),
        "declared_M": _F(kind="float", required=False, min_excl=0.0),
        "refine": _F(kind="int", default=0, min=0),
    },
    "parabolic": {
        "q_exponent": _F(kind="float", required=False, min=1.0,
                         msg="p must be >= 1"),
        "w1p_p": _F(kind="num_inf", required=False, min_excl=1.0,
                    msg="p must exceed 1"),
        "beta": _F(kind="float", required=False, min_excl=0.0),
        "beta_control": _F(kind="float", required=False, min_excl=0.0),
        "control_exponent": _F(kind="float", required=False),
        "q_aux": _F(kind="float", required=False, min_excl=0.0),
        "window": _F(kind="pair_float", required=False),
        "refine": _F(kind="int", default=0, min=0),
        "refine_mode": _F(kind="str", default="deep",
                          choices=("uniform", "deep")),
        "z_beta": _F(kind="float", required=False, min_excl=0.0),
        "z_regime": _F(kind="str", required=False,
                       choices=("q_le_n_half", "q_gt_n_half")),
        "z_t_star": _F(kind="float", default=0.25, min_excl=0.0),
        "holder_kappa": _F(kind="float", required=False, min_excl=0.0),
        "holder_theta": _F(kind="float", required=False, min_excl=0.0),
        "r_min": _F(kind="float", default=0.0, min=0.0),
    },
    "ks": {
        "alpha_probes": _F(kind="list_maps", required=False,
                           map_fields={
                               "alpha": _F(kind="float", required=True,
                                           min_excl=0.0),
                               "expect": _F(kind="str", default="stable",
                                            choices=("stable", "growth")),
                           }),
        "M": _F(kind="float", required=False, min_excl=0.0),
        "p_hyp": _F(kind="float", required=False, min=1.0,
                    msg="p must be >= 1"),
        "p_track": _F(kind="list_float", required=False, each_min=1.0,
                      msg="p must be >= 1"),
        "fit_window": _F(kind="pair_float", required=False),
        "refine": _F(kind="int", default=0, min=0),
        "refined_sup_threshold": _F(kind="float", required=False,
                                    min_excl=0.0),
        "expect_termination": _F(
            kind="str", required=False,
            choices=("reached_t_end", "blowup_detected", "dt_underflow")),
        "sup_growth_p": _F(kind="float", required=False, min=1.0,
                           msg="p must be >= 1"),
        "sup_growth_factor": _F(kind="float", default=10.0, min_excl=1.0),
        "mass_tol": _F(kind="float", default=1e-8, min_excl=0.0),
        "stability_tol": _F(kind="float", default=0.5, min_excl=0.0),
        "growth_factor": _F(kind="float", default=2.0, min_excl=1.0),
    },
    "semigroup": {
        "K": _F(kind="int", required=True, min=1),
        "count": _F(kind="int", default=20, min=1),
        "sigma": _F(kind="int", default=1, min=0, max=1),
        "mu": _F(kind="float", default=0.0, min=0.0),
        "p": _F(kind="num_inf", default=math.inf, min=1.0,
                msg="p must be >= 1"),
        "s_exp": _F(kind="float", default=0.0, min=0.0),
        "lam_reg": _F(kind="float", default=0.0),
        "t_min": _F(kind="float", default=1e-3, min_excl=0.0),
        "t_max": _F(kind="float", default=0.1, min_excl=0.0),
        "t_count": _F(kind="int", default=16, min=5),
        "slope_rel_tol": _F(kind="float", default=0.15, min_excl=0.0),
        "family_decay": _F(kind="float", default=0.0, min=0.0),
        "grad_const": _F(kind="float", required=False, min_excl=0.0),
        "grad_times": _F(kind="list_float", required=False, each_min=0.0),
        "grad_decay": _F(kind="float", default=1.0, min=0.0),
    },
    "exponents": {},
}

_EXPONENT_ROW_FIELDS = {
    "n": _F(kind="int", required=True, min=2),
    "m": _F(kind="float", required=True),
    "q": _F(kind="float", required=True),
    "s": _F(kind="float", required=True, min_excl=0.0),
    "p_bound": _F(kind="float", required=True, min_excl=0.0),
    "expect_p0": _F(kind="float", required=False),
    "expect_alpha": _F(kind="num_inf", required=False),
    "expect_admissible": _F(kind="bool", required=False),
}

_PRODUCTION_ROW_FIELDS = {
    "n": _F(kind="int", required=True, min=2),
    "s": _F(kind="float", required=True, min_excl=0.0),
    "eps": _F(kind="float", default=0.0, min=0.0),
    "expect": _F(kind="float", required=False),
}

_SWEEP_FIELDS = {
    "m": _F(kind="list_float", required=True),
    "q": _F(kind="list_float", required=True),
    "mass_multiplier": _F(kind="list_float", required=True,
                          each_min_excl=0.0),
}

# which sections each scenario type accepts / requires
_SECTIONS_BY_TYPE = {
    "elliptic": {"required": ("source", "verify"), "optional": ("model",)},
    "parabolic": {"required": ("source", "time", "verify"),
                  "optional": ("model",)},
    "ks": {"required": ("model", "initial", "time"),
           "optional": ("verify", "sweep")},
    "semigroup": {"required": ("verify",), "optional": ()},
    "exponents": {"required": ("exponents",), "optional": ()},
}


@dataclass
class ScenarioConfig:
    name: str
    type: str
    seed: int
    data: dict = field(default_factory=dict)

    def section(self, key: str) -> dict:
        return self.data.get(key, {})


def _line_map(text: str) -> dict[tuple, int]:
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError:
        return {}
    lines: dict[tuple, int] = {}

    def walk(nd, path):
        if isinstance(nd, yaml.MappingNode):
            for k, v in nd.value:
                p = path + (str(k.value),)
                lines[p] = k.start_mark.line + 1
                walk(v, p)
        elif isinstance(nd, yaml.SequenceNode):
            for i, v in enumerate(nd.value):
                walk(v, path + (i,))

    if node is not None:
        walk(node, ())
    return lines


class _Ctx:
    def __init__(self, lines: dict[tuple, int]):
        self.lines = lines
        self.errors: list[str] = []

    def err(self, path: tuple, msg: str) -> None:
        line = self.lines.get(path)
        where = f"line {line}: " if line else ""
        self.errors.append(f"{where}{msg}")


def _coerce(value: Any, spec: dict, path: tuple, ctx: _Ctx):
    kind = spec["kind"]
    name = path[-1] if path else "?"

    def bad(msg):
        ctx.err(path, spec.get("msg", msg))
        return None

    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            return bad(f"{name} must be an integer, got {value!r}")
        out = int(value)
    elif kind in ("float", "num_inf"):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            return bad(f"{name} must be a number, got {value!r}")
        out = float(value)
        if kind == "float" and not math.isfinite(out):
            return bad(f"{name} must be finite, got {value!r}")
    elif kind == "str":
        if not isinstance(value, str):
            return bad(f"{name} must be a string, got {value!r}")
        out = value
    elif kind == "bool":
        if not isinstance(value, bool):
            return bad(f"{name} must be a boolean, got {value!r}")
        out = value
    elif kind == "list_float":
        if not isinstance(value, list) or not value:
            return bad(f"{name} must be a nonempty list of numbers")
        out = []
        for i, v in enumerate(value):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                return bad(f"{name}[{i}] must be a number, got {v!r}")
            v = float(v)
            if "each_min" in spec and v < spec["each_min"]:
                return bad(f"{name}[{i}] = {v} below minimum "
                           f"{spec['each_min']}")
            if "each_min_excl" in spec and v <= spec["each_min_excl"]:
                return bad(f"{name}[{i}] = {v} must exceed "
                           f"{spec['each_min_excl']}")
            out.append(v)
        return out
    elif kind == "pair_float":
        if (not isinstance(value, list) or len(value) != 2
                or any(isinstance(v, bool) or not isinstance(v, (int, float))
                       for v in value)):
            return bad(f"{name} must be a pair [lo, hi]")
        out = [float(value[0]), float(value[1])]
        if out[0] >= out[1]:
            return bad(f"{name} pair must be increasing, got {out}")
        return out
    elif kind == "list_maps":
        if not isinstance(value, list) or not value:
            return bad(f"{name} must be a nonempty list of mappings")
        out = []
        for i, item in enumerate(value):
            if not isinstance(item, dict):
                ctx.err(path + (i,), f"{name}[{i}] must be a mapping")
                continue
            out.append(_coerce_map(item, spec["map_fields"], path + (i,),
                                   ctx))
        return out
    else:  # pragma: no cover
        raise AssertionError(f"unhandled kind {kind}")

    if "choices" in spec and out not in spec["choices"]:
        return bad(f"{name} must be one of {list(spec['choices'])}, "
                   f"got {out!r}")
    if "min" in spec and out < spec["min"]:
        return bad(f"{name} = {out} below minimum {spec['min']}")
    if "max" in spec and out > spec["max"]:
        return bad(f"{name} = {out} above maximum {spec['max']}")
    if "min_excl" in spec and out <= spec["min_excl"]:
        return bad(f"{name} = {out} must exceed {spec['min_excl']}")
    return out


def _coerce_map(raw: dict, fields: dict, path: tuple, ctx: _Ctx) -> dict:
    out = {}
    for key, value in raw.items():
        if key not in fields:
            ctx.err(path + (key,), f"unknown key {key!r} in "
                    f"{'.'.join(str(p) for p in path) or 'top level'}")
            continue
        got = _coerce(value, fields[key], path + (key,), ctx)
        if got is not None:
            out[key] = got
    for key, spec in fields.items():
        if key in out:
            continue
        if spec.get("required"):
            ctx.err(path, f"missing required key {key!r} in "
                    f"{'.'.join(str(p) for p in path) or 'top level'}")
        elif "default" in spec:
            out[key] = spec["default"]
    return out


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate scenario text; raises ConfigError carrying
    the full list of problems, each with a line reference."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError([f"unparseable config: {exc}"]) from exc
    if not isinstance(raw, dict):
        raise ConfigError(["config must be a mapping of sections"])
    ctx = _Ctx(_line_map(text))

    common = _common_sections()
    data: dict[str, Any] = {}

    # scenario section first; everything else depends on its type
    if "scenario" not in raw:
        raise ConfigError(["missing required section 'scenario'"])
    scen = raw["scenario"]
    if not isinstance(scen, dict):
        raise ConfigError(["section 'scenario' must be a mapping"])
    data["scenario"] = _coerce_map(scen, common["scenario"]["fields"],
                                   ("scenario",), ctx)
    if ctx.errors:
        raise ConfigError(ctx.errors)
    stype = data["scenario"]["type"]

    spec_sections = _SECTIONS_BY_TYPE[stype]
    needs_grid = stype != "exponents"
    allowed = {"scenario", "seed"}
    if needs_grid:
        allowed.add("grid")
    allowed |= set(spec_sections["required"]) | set(spec_sections["optional"])

    for key in raw:
        if key not in allowed:
            ctx.err((key,), f"unknown section {key!r} for scenario type "
                    f"{stype!r}")

    seed = raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        ctx.err(("seed",), f"seed must be a nonnegative integer, "
                f"got {seed!r}")
        seed = 0
    data["seed"] = seed

    def do_section(key: str, fields: dict, required: bool):
        if key not in raw:
            if required:
                ctx.err((), f"missing required section {key!r}")
            elif fields:
                data[key] = _coerce_map({}, fields, (key,), ctx)
            return
        sec = raw[key]
        if not isinstance(sec, dict):
            ctx.err((key,), f"section {key!r} must be a mapping")
            return
        data[key] = _coerce_map(sec, fields, (key,), ctx)

    if needs_grid:
        do_section("grid", common["grid"]["fields"], required=True)
    if "model" in allowed:
        do_section("model", _MODEL_FIELDS, required="model" in
                   spec_sections["required"])
    if "source" in allowed:
        do_section("source", _SOURCE_FIELDS, required=True)
    if "initial" in allowed:
        do_section("initial", _INITIAL_FIELDS, required=True)
    if "time" in allowed:
        do_section("time", _TIME_FIELDS, required="time" in
                   spec_sections["required"])
    if "verify" in allowed:
        do_section("verify", _VERIFY_FIELDS[stype],
                   required="verify" in spec_sections["required"])
    if "sweep" in allowed and "sweep" in raw:
        do_section("sweep", _SWEEP_FIELDS, required=False)

    if stype == "exponents":
        sec = raw.get("exponents")
        if sec is None:
            ctx.err((), "missing required section 'exponents'")
        elif not isinstance(sec, dict):
            ctx.err(("exponents",), "section 'exponents' must be a mapping")
        else:
            out: dict[str, Any] = {}
            for key, value in sec.items():
                if key == "rows":
                    out["rows"] = _coerce(
                        value, _F(kind="list_maps",
                                  map_fields=_EXPONENT_ROW_FIELDS),
                        ("exponents", "rows"), ctx) or []
                elif key == "production":
                    out["production"] = _coerce(
                        value, _F(kind="list_maps",
                                  map_fields=_PRODUCTION_ROW_FIELDS),
                        ("exponents", "production"), ctx) or []
                else:
                    ctx.err(("exponents", key),
                            f"unknown key {key!r} in exponents")
            if not out.get("rows") and not out.get("production"):
                ctx.err(("exponents",),
                        "exponents needs at least one of rows/production")
            data["exponents"] = out

    if ctx.errors:
        raise ConfigError(ctx.errors)
    return ScenarioConfig(name=data["scenario"]["name"], type=stype,
                          seed=data["seed"], data=data)


def serialize(cfg: ScenarioConfig) -> str:
    """Canonical YAML text; parse(serialize(parse(x))) == parse(x)."""
    return yaml.safe_dump(cfg.data, sort_keys=True,
                          default_flow_style=False)


def config_payload(cfg: ScenarioConfig) -> dict:
    """Deep-copied plain-dict echo for embedding in run records."""
    return yaml.safe_load(serialize(cfg))
