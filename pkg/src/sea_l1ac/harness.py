"""Scenario definition, deterministic closed-loop runs, and metrics.

A scenario is a step command on the link position under one of the three
controller kinds (baseline, adaptive, adaptive without gravity feedforward)
with a configurable load mass, optional contact wall, torque limit, and
integrator sub-stepping. Runs are bit-reproducible: same configuration,
same trace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .analysis import analytic_nominal_response
from .controllers import (
    DisturbanceObserver,
    DobConfig,
    L1Config,
    L1Controller,
    ReferenceSystem,
    RrcController,
    ideal_motor_side_compensation,
)
from .nominal import build_nominal_model, build_rrc_gains
from .params import EnvironmentModel, PlantParams, benchmark_params
from .plant import _rk4_tuple, contact_torque, gravity_torque


class ConfigError(ValueError):
    """A scenario or suite configuration is not usable."""


class SimulationDivergence(RuntimeError):
    """Numeric blow-up mid-run; carries the rows recorded so far."""

    def __init__(self, message: str, partial_trace: "RunTrace | None" = None):
        super().__init__(message)
        self.partial_trace = partial_trace


CONTROLLER_KINDS = ("rrc", "l1ac", "l1ac-nogc")
_KIND_ALIASES = {"l1ac-no-gravity-comp": "l1ac-nogc"}


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to reproduce one closed-loop experiment."""

    name: str = "scenario"
    controller: str = "l1ac"
    q_d_amplitude: float = math.pi / 2
    q_d_start: float = 0.0
    mass: float = 1.5
    duration: float = 3.0
    contact_stiffness: float = 0.0
    contact_position: float = 0.0
    bilateral_contact: bool = False
    gravity_on: bool = True
    T_s: float = 1e-3
    T: float = 0.01
    K_a: float = 10.0
    g_ob: float = 500.0
    substeps: int = 1
    torque_limit: float | None = None
    ideal_dob: bool = False
    decimate: int = 1
    track_reference: bool = False
    params: PlantParams | None = None

    def __post_init__(self):
        kind = _KIND_ALIASES.get(self.controller.lower(), self.controller.lower())
        object.__setattr__(self, "controller", kind)
        if kind not in CONTROLLER_KINDS:
            raise ConfigError(f"unknown controller kind {self.controller!r}")
        if self.duration <= 0.0:
            raise ConfigError("duration must be positive")
        if self.T_s <= 0.0:
            raise ConfigError("T_s must be positive")
        if self.substeps < 1 or self.decimate < 1:
            raise ConfigError("substeps and decimate must be >= 1")
        if self.mass < 0.0:
            raise ConfigError("mass must be nonnegative")
        if self.torque_limit is not None and self.torque_limit <= 0.0:
            raise ConfigError("torque limit must be positive when set")

    def make_params(self) -> PlantParams:
        base = self.params if self.params is not None else benchmark_params()
        return base.with_mass(self.mass)

    def make_environment(self) -> EnvironmentModel:
        return EnvironmentModel(
            K_e=self.contact_stiffness,
            q_0=self.contact_position,
            bilateral=self.bilateral_contact,
        )

    def with_overrides(self, **kwargs) -> "ScenarioConfig":
        return replace(self, **kwargs)


TRACE_COLUMNS = (
    "t_s",
    "q_rad",
    "dq_rad_per_s",
    "theta_rad",
    "dtheta_rad_per_s",
    "tau_m_Nm",
    "current_permil",
    "sigma22_hat",
    "xtilde_inf",
    "u1",
    "u2",
)


@dataclass
class RunTrace:
    """Uniform-grid time series of one run plus export metadata.

    ``columns`` maps each name in TRACE_COLUMNS to a float array of equal
    length; ``meta`` holds the scalars needed to interpret the trace
    (target, contact geometry, torque constant); ``aux`` carries run
    diagnostics that are not part of the export format.
    """

    columns: dict
    meta: dict
    aux: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.columns["t_s"])

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]


@dataclass(frozen=True)
class MetricsReport:
    """Quantified step-response quality of one trace."""

    static_error_rad: float
    overshoot_pct: float
    settling_time_s: float | None
    peak_current_permil: float
    rise_delay_s: float
    peak_speed_after_contact: float | None


def _target(cfg_t: float, amplitude: float, start: float) -> float:
    return amplitude if cfg_t >= start - 1e-12 else 0.0


def run_scenario(cfg: ScenarioConfig) -> RunTrace:
    """Execute one scenario and return its trace.

    The controller runs once per T_s; the plant (and the disturbance
    observer, which needs the fastest rate available) advance ``substeps``
    times per controller step. Raises SimulationDivergence with the partial
    trace attached if the state stops being finite.
    """
    params = cfg.make_params()
    env = cfg.make_environment()
    gains = build_rrc_gains(params)
    model = build_nominal_model(params, gains)
    h = cfg.T_s / cfg.substeps

    dob = None
    if not cfg.ideal_dob:
        dob = DisturbanceObserver(DobConfig(g_ob=cfg.g_ob), params, h)

    if cfg.controller == "rrc":
        controller = RrcController(
            params, gains, gravity_comp=cfg.gravity_on, torque_limit=cfg.torque_limit
        )
    else:
        l1cfg = L1Config(T_s=cfg.T_s, T=cfg.T, K_a=cfg.K_a)
        controller = L1Controller(
            params,
            gains,
            model,
            l1cfg,
            gravity_comp=cfg.gravity_on and cfg.controller == "l1ac",
            torque_limit=cfg.torque_limit,
        )
        controller.reset(np.zeros(4))

    reference = None
    if cfg.track_reference:
        if cfg.controller == "rrc":
            raise ConfigError("reference tracking needs the adaptive controller")
        reference = ReferenceSystem(model, L1Config(T_s=cfg.T_s, T=cfg.T, K_a=cfg.K_a))

    n_steps = int(round(cfg.duration / cfg.T_s))
    n_rows = (n_steps + cfg.decimate - 1) // cfg.decimate
    cols = {name: np.zeros(n_rows) for name in TRACE_COLUMNS}

    meta = {
        "name": cfg.name,
        "controller": cfg.controller,
        "q_d_amplitude": cfg.q_d_amplitude,
        "q_d_start": cfg.q_d_start,
        "mass": cfg.mass,
        "contact_stiffness": cfg.contact_stiffness,
        "contact_position": cfg.contact_position,
        "K_t": params.K_t,
        "omega": params.omega,
    }
    aux: dict = {"xtilde_max": 0.0}
    if reference is not None:
        aux["ref_err_max"] = 0.0

    x = (0.0, 0.0, 0.0, 0.0)
    row = 0
    for i in range(n_steps):
        t = i * cfg.T_s
        q_d = _target(t, cfg.q_d_amplitude, cfg.q_d_start)
        if cfg.ideal_dob:
            tau_dob = ideal_motor_side_compensation(x, params)
        else:
            tau_dob = dob.estimate(x[3])
        x_arr = np.array(x)
        tau_m = controller.step(x_arr, q_d, tau_dob)

        if reference is not None:
            tau_spring = params.K_f * (x[2] - x[0])
            sigma1_true = (tau_dob - params.f_m * x[3] - tau_spring) / params.J_m
            link_torque = contact_torque(env, x[0])
            if cfg.gravity_on:
                link_torque += gravity_torque(params, x[0], params.m)
            g_ff1 = controller.g_ff_last[1] if hasattr(controller, "g_ff_last") else 0.0
            sigma2_true = np.array([0.0, -link_torque / params.J_a - g_ff1, 0.0])
            x_r = reference.step(
                sigma1_true,
                sigma2_true,
                q_d,
                matched_known=getattr(controller, "u_gc_last", 0.0),
                unmatched_known=getattr(controller, "g_ff_last", None),
            )
            aux["ref_err_max"] = max(aux["ref_err_max"], float(np.max(np.abs(x_r - x_arr))))

        aux["xtilde_max"] = max(aux["xtilde_max"], controller.xtilde_inf_last)

        if i % cfg.decimate == 0:
            cols["t_s"][row] = t
            cols["q_rad"][row] = x[0]
            cols["dq_rad_per_s"][row] = x[1]
            cols["theta_rad"][row] = x[2]
            cols["dtheta_rad_per_s"][row] = x[3]
            cols["tau_m_Nm"][row] = tau_m
            cols["current_permil"][row] = tau_m / params.K_t
            cols["sigma22_hat"][row] = float(controller.sigma2_hat[1])
            cols["xtilde_inf"][row] = controller.xtilde_inf_last
            cols["u1"][row] = controller.u1_last
            cols["u2"][row] = controller.u2_last
            row += 1

        for _ in range(cfg.substeps):
            if dob is not None:
                dob.advance(tau_m, x[3])
            x = _rk4_tuple(x, tau_m, h, params, env, cfg.gravity_on)
            if not all(map(math.isfinite, x)):
                partial = RunTrace(
                    columns={k: v[:row].copy() for k, v in cols.items()},
                    meta=meta,
                    aux=aux,
                )
                raise SimulationDivergence(
                    f"state diverged at t={t:.4f} s in scenario {cfg.name!r}", partial
                )

    return RunTrace(columns=cols, meta=meta, aux=aux)


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

def compute_metrics(trace: RunTrace, cfg: ScenarioConfig | None = None) -> MetricsReport:
    """Step-response metrics; unsettled traces get settling_time None."""
    if len(trace) == 0:
        raise ValueError("trace is empty")
    meta = trace.meta
    amplitude = cfg.q_d_amplitude if cfg is not None else meta["q_d_amplitude"]
    start = cfg.q_d_start if cfg is not None else meta["q_d_start"]
    omega = meta.get("omega", benchmark_params().omega)
    k_e = cfg.contact_stiffness if cfg is not None else meta.get("contact_stiffness", 0.0)
    q_0 = cfg.contact_position if cfg is not None else meta.get("contact_position", 0.0)

    t = trace["t_s"]
    q = trace["q_rad"]
    tail = max(1, int(round(0.1 * len(q))))
    static_error = float(np.mean(q[-tail:]) - amplitude)

    if amplitude > 0.0:
        over = float(np.max(q) - amplitude)
    elif amplitude < 0.0:
        over = float(amplitude - np.min(q))
    else:
        over = 0.0
    overshoot_pct = max(0.0, over / abs(amplitude) * 100.0) if amplitude != 0.0 else 0.0

    settling = _settling_time(t, q, amplitude, start)
    peak_current = float(np.max(np.abs(trace["current_permil"])))
    rise_delay = _rise_delay(t, q, amplitude, start, omega)

    peak_speed = None
    if k_e > 0.0:
        hit = np.nonzero(q > q_0)[0]
        if hit.size:
            peak_speed = float(np.max(np.abs(trace["dq_rad_per_s"][hit[0]:])))

    return MetricsReport(
        static_error_rad=static_error,
        overshoot_pct=overshoot_pct,
        settling_time_s=settling,
        peak_current_permil=peak_current,
        rise_delay_s=rise_delay,
        peak_speed_after_contact=peak_speed,
    )


def _settling_time(t, q, amplitude, start) -> float | None:
    if amplitude == 0.0:
        return 0.0
    band = 0.02 * abs(amplitude)
    active = t >= start
    dev = np.abs(q - amplitude)
    violations = np.nonzero(active & (dev > band))[0]
    if violations.size == 0:
        return 0.0
    last = violations[-1]
    if last + 1 >= len(t):
        return None
    return float(t[last + 1] - start)


def _rise_delay(t, q, amplitude, start, omega, max_shift=0.5, step=1e-3) -> float:
    """Time shift of the trace that best matches the analytic nominal response
    (least squares over the whole trace)."""
    shifts = np.arange(0.0, max_shift + step / 2, step)
    best_shift, best_cost = 0.0, math.inf
    for shift in shifts:
        ref = analytic_nominal_response(amplitude, omega, t - start - shift)
        cost = float(np.sum((q - ref) ** 2))
        if cost < best_cost:
            best_cost, best_shift = cost, float(shift)
    return best_shift


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SuiteConfig:
    name: str
    scenarios: tuple[ScenarioConfig, ...]

    def __post_init__(self):
        names = [s.name for s in self.scenarios]
        if len(set(names)) != len(names):
            raise ConfigError("scenario names within a suite must be unique")


@dataclass
class SuiteResult:
    """Per-scenario traces and metrics; failures are isolated per scenario."""

    name: str
    traces: dict
    metrics: dict
    errors: dict

    @property
    def ok(self) -> bool:
        return not self.errors

    def rows(self, suite: SuiteConfig):
        for scen in suite.scenarios:
            if scen.name in self.errors:
                yield scen, None, str(self.errors[scen.name])
            else:
                yield scen, self.metrics[scen.name], "ok"


def run_suite(suite: SuiteConfig) -> SuiteResult:
    """Run every scenario, isolating per-scenario failures."""
    traces, metrics, errors = {}, {}, {}
    for scen in suite.scenarios:
        try:
            trace = run_scenario(scen)
            traces[scen.name] = trace
            metrics[scen.name] = compute_metrics(trace, scen)
        except Exception as exc:  # noqa: BLE001 - isolation is the contract
            errors[scen.name] = exc
    return SuiteResult(name=suite.name, traces=traces, metrics=metrics, errors=errors)


def summary_table(suite: SuiteConfig, result: SuiteResult) -> list[list]:
    """Comparison table rows (header first) for the suite outcome."""
    rows = [[
        "scenario", "controller", "mass_kg", "contact_stiffness",
        "static_error_rad", "overshoot_pct", "settling_time_s",
        "peak_current_permil", "rise_delay_s", "peak_speed_after_contact",
        "status",
    ]]
    for scen, report, status in result.rows(suite):
        if report is None:
            rows.append([scen.name, scen.controller, scen.mass,
                         scen.contact_stiffness, "", "", "", "", "", "", status])
        else:
            rows.append([
                scen.name, scen.controller, scen.mass, scen.contact_stiffness,
                report.static_error_rad, report.overshoot_pct,
                "" if report.settling_time_s is None else report.settling_time_s,
                report.peak_current_permil, report.rise_delay_s,
                "" if report.peak_speed_after_contact is None
                else report.peak_speed_after_contact,
                status,
            ])
    return rows
