"""Built-in scenario configurations for the verify subcommand.

Each preset is a list of YAML documents run in order; a preset passes
when every document's record passes.  Durations target a laptop: the
slowest (ks2d-supercritical with its deep refined twin) stays inside a
ten-minute budget, everything else finishes in well under a minute.
"""
from __future__ import annotations

from .config import ScenarioConfig, parse_config

_PRESETS: dict[str, list[str]] = {}


def preset_names() -> list[str]:
    return sorted(_PRESETS)


def load_preset(name: str) -> list[ScenarioConfig]:
    if name not in _PRESETS:
        known = ", ".join(preset_names())
        raise KeyError(f"unknown preset {name!r}; available: {known}")
    return [parse_config(text) for text in _PRESETS[name]]


def preset_text(name: str) -> str:
    if name not in _PRESETS:
        known = ", ".join(preset_names())
        raise KeyError(f"unknown preset {name!r}; available: {known}")
    return "\n---\n".join(_PRESETS[name])


_PRESETS["elliptic-bound-suite"] = ["""
scenario:
  name: elliptic-bound-suite-2d
  type: elliptic
seed: 11
grid: {n: 2, R: 1.0, N: 400, clustering: 1.5}
source:
  family: random_cosine
  amplitude: 1.0
  modes: 12
verify:
  cases: 25
  delta_v_q: [1.0, 2.0]
  delta_v_tol: 0.05
  refine: 1
""", """
scenario:
  name: elliptic-bound-suite-3d
  type: elliptic
seed: 11
grid: {n: 3, R: 1.0, N: 400, clustering: 1.5}
source:
  family: random_cosine
  amplitude: 1.0
  modes: 12
verify:
  cases: 25
  delta_v_q: [1.0, 2.0, 3.0]
  delta_v_tol: 0.05
  refine: 1
"""]

_PRESETS["elliptic-gradient-envelope"] = ["""
scenario:
  name: elliptic-gradient-2d
  type: elliptic
seed: 3
grid: {n: 2, R: 1.0, N: 400, clustering: 10.0}
source:
  family: power
  amplitude: 1.0
  exponent: 1.9
verify:
  gradient_q: [1.0]
  gradient_tol: 0.10
  refine: 0
""", """
scenario:
  name: elliptic-gradient-3d
  type: elliptic
seed: 3
grid: {n: 3, R: 1.0, N: 400, clustering: 10.0}
source:
  family: power
  amplitude: 1.0
  exponent: 1.4
verify:
  gradient_q: [2.0]
  gradient_tol: 0.10
  refine: 0
"""]

_PRESETS["parabolic-gradient-envelope"] = ["""
scenario:
  name: parabolic-gradient-envelope
  type: parabolic
seed: 7
grid: {n: 2, R: 1.0, N: 256, clustering: 50.0}
model: {tau: 1.0}
source:
  family: power
  amplitude: 1.0
  exponent: 1.5
time:
  t_end: 6.0
  dt0: 2.0e-3
  scheme: cn
  snapshot_interval: 0.5
verify:
  q_exponent: 1.0
  beta: 1.2
  q_aux: 1.0
  beta_control: 0.7
  control_exponent: 1.98
  w1p_p: 1.8
  refine: 1
  refine_mode: deep
  holder_kappa: 0.5
  holder_theta: 0.3
"""]

_PRESETS["z-consistency"] = ["""
scenario:
  name: z-consistency-low
  type: parabolic
seed: 5
grid: {n: 3, R: 1.0, N: 128, clustering: 1.0}
model: {tau: 1.0}
source:
  family: gaussian
  amplitude: 1.0
  width: 0.25
time:
  t_end: 0.6
  dt0: 2.0e-3
  scheme: cn
  snapshot_interval: 0.25
verify:
  z_beta: 3.0
  z_regime: q_le_n_half
  z_t_star: 0.25
""", """
scenario:
  name: z-consistency-high
  type: parabolic
seed: 5
grid: {n: 2, R: 1.0, N: 128, clustering: 1.0}
model: {tau: 1.0}
source:
  family: gaussian
  amplitude: 1.0
  width: 0.25
time:
  t_end: 0.6
  dt0: 2.0e-3
  scheme: cn
  snapshot_interval: 0.25
verify:
  z_beta: 1.5
  z_regime: q_gt_n_half
  z_t_star: 0.25
"""]

_PRESETS["semigroup-decay"] = ["""
scenario:
  name: semigroup-decay
  type: semigroup
seed: 2
grid: {n: 1, R: 3.141592653589793, N: 512, clustering: 1.0}
verify:
  K: 96
  count: 20
  sigma: 1
  mu: 0.0
  p: .inf
  s_exp: 0.51
  lam_reg: 0.0
  t_min: 1.0e-3
  t_max: 0.1
  t_count: 16
  slope_rel_tol: 0.15
  family_decay: 0.0
  grad_const: 2.5
  grad_times: [0.0, 0.05, 0.2, 1.0, 3.0, 5.0]
  grad_decay: 3.0
"""]

_PRESETS["ks2d-subcritical"] = ["""
scenario:
  name: ks2d-subcritical
  type: ks
seed: 1
grid: {n: 2, R: 1.0, N: 256, clustering: 50.0}
model: {m: 1.0, q: 1.0, s: 1.0, tau: 0.0, M: 40.0}
initial:
  family: gaussian
  mass: 12.566370614359172
  width: 0.1
  v0_mode: equilibrium
time:
  t_end: 10.0
  dt0: 1.0e-6
  dt_max: 1.0e-2
  sup_threshold: 1.0e+6
  snapshot_interval: 1.0
verify:
  expect_termination: reached_t_end
  p_track: [1.0]
  mass_tol: 1.0e-8
"""]

_PRESETS["ks2d-supercritical"] = ["""
scenario:
  name: ks2d-supercritical
  type: ks
seed: 1
grid: {n: 2, R: 1.0, N: 256, clustering: 50.0}
model: {m: 1.0, q: 1.0, s: 1.0, tau: 0.0, M: 40.0}
initial:
  family: gaussian
  mass: 37.699111843077517
  width: 0.1
  v0_mode: equilibrium
time:
  t_end: 2.0
  dt0: 1.0e-6
  dt_max: 1.0e-2
  sup_threshold: 1.0e+6
  snapshot_interval: 0.05
verify:
  expect_termination: blowup_detected
  M: 40.0
  p_hyp: 1.0
  p_track: [1.0, 3.0]
  sup_growth_p: 3.0
  sup_growth_factor: 10.0
  mass_tol: 1.0e-8
  alpha_probes:
    - {alpha: 2.3, expect: stable}
    - {alpha: 1.5, expect: growth}
  fit_window: [1.0e-3, 1.0e-1]
  stability_tol: 0.5
  growth_factor: 2.0
  refine: 1
  refined_sup_threshold: 1.0e+8
"""]

_PRESETS["exponent-calculus"] = ["""
scenario:
  name: exponent-calculus
  type: exponents
seed: 0
exponents:
  rows:
    - {n: 2, m: 1.0, q: 1.0, s: 1.0, p_bound: 1.0,
       expect_p0: 1.0, expect_alpha: 2.0, expect_admissible: true}
    - {n: 3, m: 1.2, q: 1.2, s: 1.0, p_bound: 1.5,
       expect_p0: 1.5, expect_alpha: 2.0, expect_admissible: true}
    - {n: 2, m: 0.6, q: 1.0, s: 1.0, p_bound: 1.4,
       expect_alpha: 1.4285714285714286, expect_admissible: true}
    - {n: 2, m: 1.5, q: 0.5, s: 1.0, p_bound: 1.0,
       expect_alpha: 0.6666666666666666, expect_admissible: false}
    - {n: 2, m: 0.2, q: 1.0, s: 1.0, p_bound: 1.0,
       expect_alpha: .inf, expect_admissible: false}
  production:
    - {n: 2, s: 1.0, eps: 0.1, expect: 2.1}
    - {n: 3, s: 0.9, eps: 0.0, expect: 5.1}
    - {n: 2, s: 0.9, eps: 0.0, expect: 1.6}
"""]
