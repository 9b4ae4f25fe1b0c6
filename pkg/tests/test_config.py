"""Parsing, validation, and round-trip behavior of scenario configs."""
import math

import pytest

from ksblow.config import ConfigError, config_payload, parse_config, serialize

MINI_ELLIPTIC = """
scenario:
  name: mini
  type: elliptic
seed: 4
grid: {n: 2, R: 1.0, N: 64, clustering: 1.0}
source: {family: random_cosine, amplitude: 1.0, modes: 6}
verify:
  cases: 3
  delta_v_q: [1.0, 2.0]
"""

MINI_KS = """
scenario:
  name: mini-ks
  type: ks
grid: {n: 2, R: 1.0, N: 64, clustering: 10.0}
model: {m: 1.0, q: 1.0, s: 1.0, tau: 0.0}
initial: {family: gaussian, mass: 12.566, width: 0.1}
time: {t_end: 0.5}
"""

MINI_SEMIGROUP = """
scenario:
  name: mini-sg
  type: semigroup
grid: {n: 1, R: 3.141592653589793, N: 128, clustering: 1.0}
verify:
  K: 16
  p: .inf
"""

MINI_EXPONENTS = """
scenario:
  name: mini-exp
  type: exponents
exponents:
  rows:
    - {n: 2, m: 1.0, q: 1.0, s: 1.0, p_bound: 1.0, expect_p0: 1.0}
"""

MINI_PARABOLIC = """
scenario:
  name: mini-par
  type: parabolic
grid: {n: 2, R: 1.0, N: 64, clustering: 1.0}
source: {family: gaussian, width: 0.3}
time: {t_end: 0.5}
verify: {beta: 1.2}
"""


def test_minimal_configs_parse_with_defaults():
    cfg = parse_config(MINI_ELLIPTIC)
    assert cfg.name == "mini" and cfg.type == "elliptic" and cfg.seed == 4
    assert cfg.section("verify")["delta_v_tol"] == 0.05
    assert cfg.section("grid")["clustering"] == 1.0

    ks = parse_config(MINI_KS)
    assert ks.seed == 0
    assert ks.section("time")["dt0"] == 1e-6
    assert ks.section("time")["sup_threshold"] == 1e6
    assert ks.section("initial")["v0_mode"] == "equilibrium"
    assert ks.section("model")["tau"] == 0.0

    sg = parse_config(MINI_SEMIGROUP)
    assert sg.section("verify")["count"] == 20
    assert sg.section("verify")["p"] == math.inf
    assert sg.section("verify")["t_count"] == 16

    ex = parse_config(MINI_EXPONENTS)
    assert ex.section("exponents")["rows"][0]["expect_p0"] == 1.0

    par = parse_config(MINI_PARABOLIC)
    assert par.section("time")["scheme"] == "cn"
    assert par.section("verify")["refine_mode"] == "deep"


def test_bad_exponent_reports_line_number():
    text = MINI_ELLIPTIC.replace("[1.0, 2.0]", "[1.0, 0.5]")
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    msgs = exc.value.errors
    assert any("p must be >= 1" in m for m in msgs)
    assert any(m.startswith("line ") for m in msgs)


def test_unknown_key_and_section_report_position():
    with pytest.raises(ConfigError) as exc:
        parse_config(MINI_ELLIPTIC + "\n  bogus_key: 3\n")
    assert any("bogus_key" in m and "line" in m for m in exc.value.errors)

    with pytest.raises(ConfigError) as exc:
        parse_config(MINI_ELLIPTIC + "\ninitial: {family: constant}\n")
    assert any("unknown section 'initial' for scenario type 'elliptic'" in m
               for m in exc.value.errors)


def test_missing_required_section():
    text = MINI_KS.replace("time: {t_end: 0.5}\n", "")
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert any("missing required section 'time'" in m
               for m in exc.value.errors)


def test_missing_scenario_is_fatal():
    with pytest.raises(ConfigError):
        parse_config("grid: {n: 2, R: 1.0, N: 64}\n")


def test_bad_seed_rejected():
    with pytest.raises(ConfigError) as exc:
        parse_config(MINI_ELLIPTIC.replace("seed: 4", "seed: -1"))
    assert any("seed" in m for m in exc.value.errors)


def test_bad_choice_rejected():
    text = MINI_PARABOLIC.replace("time: {t_end: 0.5}",
                                  "time: {t_end: 0.5, scheme: rk9}")
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert any("scheme" in m for m in exc.value.errors)


@pytest.mark.parametrize("text", [MINI_ELLIPTIC, MINI_KS, MINI_SEMIGROUP,
                                  MINI_EXPONENTS, MINI_PARABOLIC])
def test_serialize_round_trip(text):
    cfg = parse_config(text)
    text2 = serialize(cfg)
    cfg2 = parse_config(text2)
    assert config_payload(cfg) == config_payload(cfg2)
    assert serialize(cfg2) == text2


def test_round_trip_survives_generated_variants():
    # perturb numeric fields one at a time and confirm the round trip
    # keeps the perturbed value
    base = parse_config(MINI_KS)
    for key, val in (("t_end", 0.75), ("dt0", 2e-7), ("dt_max", 5e-3),
                     ("sup_threshold", 12345.0)):
        base.data["time"][key] = val
        text = serialize(base)
        again = parse_config(text)
        assert again.section("time")[key] == val
