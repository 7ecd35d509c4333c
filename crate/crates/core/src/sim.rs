//! Time-domain simulation of the single-phase rectifier bus.
//!
//! Two plant models share the sampled voltage controller:
//!
//! - [`simulate`]: the averaged nonlinear model, where the bus capacitor
//!   receives the grid power minus the reactor's stored-energy change and
//!   resistive loss, divided by `v_o`.
//! - [`simulate_linear`]: the small-signal model, an integrator
//!   `1 / (V_o,ref C_o s)` driven by `(V1/2) i_p - P_o` plus the
//!   double-line-frequency power ripple.
//!
//! Both integrate with fixed-step RK4 at `sim_dt` and tick the controller
//! every `1 / voltage_loop_rate` seconds on the sampled bus voltage.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::design::{ControllerGains, VscParams};
use crate::error::{invalid, Error, Result};
use crate::format::sig;
use crate::performance::settling_time;

/// Relative slack when checking that one period is an integer multiple of another.
const GRID_TOLERANCE: f64 = 1e-9;

/// Inner current-loop model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurrentLoop {
    /// Line current equals its command.
    Ideal,
    /// First-order lag on each current component, bandwidth in rad/s.
    FirstOrder { bandwidth: f64 },
}

impl CurrentLoop {
    pub fn first_order_default() -> Self {
        CurrentLoop::FirstOrder {
            bandwidth: 2.0 * std::f64::consts::PI * 1000.0,
        }
    }
}

/// Load drawn from the bus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Load {
    None,
    Resistor { ohms: f64 },
    ConstantPower { watts: f64 },
}

impl Load {
    /// Load current at bus voltage `v`.
    pub fn current(&self, v: f64) -> f64 {
        match *self {
            Load::None => 0.0,
            Load::Resistor { ohms } => v / ohms,
            Load::ConstantPower { watts } => watts / v,
        }
    }

    /// Load power at bus voltage `v`.
    pub fn power(&self, v: f64) -> f64 {
        match *self {
            Load::None => 0.0,
            Load::Resistor { ohms } => v * v / ohms,
            Load::ConstantPower { watts } => watts,
        }
    }
}

/// Load switched in at `time`; it stays until the next event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadEvent {
    pub time: f64,
    pub load: Load,
}

/// Everything a simulation run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub plant: VscParams,
    pub gains: ControllerGains,
    /// Controller sampling rate, Hz.
    pub voltage_loop_rate: f64,
    /// Integration step, s.
    pub sim_dt: f64,
    /// Initial bus voltage, V.
    pub v_o_init: f64,
    /// Reactive current command, A.
    pub i_q_ref: f64,
    pub events: Vec<LoadEvent>,
    pub t_end: f64,
    pub current_loop: CurrentLoop,
    /// Trace sample spacing, s.
    pub dt_out: f64,
    /// Controller output limit, A.
    pub i_p_max: f64,
    /// Include the double-line-frequency power ripple in the linear model.
    pub linear_ripple: bool,
}

impl SimConfig {
    /// Defaults: 4 kHz controller, 5 us step, start at the line peak, no load.
    pub fn new(plant: VscParams, gains: ControllerGains) -> Self {
        Self {
            v_o_init: plant.v1_peak(),
            plant,
            gains,
            voltage_loop_rate: 4000.0,
            sim_dt: 5e-6,
            i_q_ref: 0.0,
            events: Vec::new(),
            t_end: 0.0,
            current_loop: CurrentLoop::Ideal,
            dt_out: 1e-4,
            i_p_max: 15.0,
            linear_ripple: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.plant.validate()?;
        self.gains.validate()?;
        for (name, v) in [
            ("voltage_loop_rate", self.voltage_loop_rate),
            ("sim_dt", self.sim_dt),
            ("v_o_init", self.v_o_init),
            ("dt_out", self.dt_out),
            ("i_p_max", self.i_p_max),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(invalid(format!("t_end must be non-negative, got {}", self.t_end)));
        }
        if !self.i_q_ref.is_finite() {
            return Err(invalid("i_q_ref must be finite"));
        }
        if let CurrentLoop::FirstOrder { bandwidth } = self.current_loop {
            if !(bandwidth > 0.0) {
                return Err(invalid(format!(
                    "current-loop bandwidth must be positive, got {bandwidth}"
                )));
            }
        }
        self.steps_per_tick()?;
        self.steps_per_sample()?;
        let mut prev = 0.0;
        for e in &self.events {
            if !(e.time >= prev) {
                return Err(invalid(format!(
                    "load events must have non-negative, non-decreasing times (got {} after {prev})",
                    e.time
                )));
            }
            prev = e.time;
            match e.load {
                Load::Resistor { ohms } if !(ohms > 0.0) => {
                    return Err(invalid(format!("load resistance must be positive, got {ohms}")))
                }
                Load::ConstantPower { watts } if !watts.is_finite() => {
                    return Err(invalid("constant-power load must be finite"))
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn steps_per_tick(&self) -> Result<usize> {
        integer_ratio(1.0 / self.voltage_loop_rate, self.sim_dt)
            .ok_or_else(|| invalid("the controller period must be an integer number of sim_dt steps"))
    }

    fn steps_per_sample(&self) -> Result<usize> {
        integer_ratio(self.dt_out, self.sim_dt)
            .ok_or_else(|| invalid("dt_out must be an integer number of sim_dt steps"))
    }

    /// Load active during the integration step starting at step `k`.
    fn load_at_step(&self, k: usize) -> Load {
        let mut load = Load::None;
        for e in &self.events {
            if (e.time / self.sim_dt).round() as usize <= k {
                load = e.load;
            } else {
                break;
            }
        }
        load
    }
}

fn integer_ratio(a: f64, b: f64) -> Option<usize> {
    let r = a / b;
    let n = r.round();
    (n >= 1.0 && (r - n).abs() <= GRID_TOLERANCE * n).then_some(n as usize)
}

/// Sampled PI regulator with an optional low-pass stage.
///
/// Backward-Euler discretization. The output is clamped to `+-i_max`, and
/// the integrator is frozen while a clamped output would be driven further
/// into the limit.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteController {
    pub k_p: f64,
    pub t_i: f64,
    pub t_f: Option<f64>,
    /// Sampling period, s.
    pub ts: f64,
    pub i_max: f64,
    integ: f64,
    filt: f64,
}

impl DiscreteController {
    pub fn new(gains: &ControllerGains, rate: f64, i_max: f64) -> Self {
        Self {
            k_p: gains.k_p,
            t_i: gains.t_i,
            t_f: gains.t_f,
            ts: 1.0 / rate,
            i_max,
            integ: 0.0,
            filt: 0.0,
        }
    }

    pub fn integrator(&self) -> f64 {
        self.integ
    }

    pub fn output(&self) -> f64 {
        self.filt
    }

    fn filtered(&self, u: f64) -> f64 {
        match self.t_f {
            Some(t_f) => self.filt + self.ts / (t_f + self.ts) * (u - self.filt),
            None => u,
        }
    }

    /// Advances one sample with bus-voltage error `error` and returns the current command.
    pub fn step(&mut self, error: f64) -> f64 {
        let d_integ = self.k_p / self.t_i * error * self.ts;
        let trial = self.filtered(self.k_p * error + self.integ + d_integ);
        if trial.abs() < self.i_max || trial.signum() != error.signum() {
            self.integ += d_integ;
        }
        let u = self.k_p * error + self.integ;
        self.filt = self.filtered(u).clamp(-self.i_max, self.i_max);
        self.filt
    }

    /// Frequency response `y/e` of the unclamped discrete controller at `omega` rad/s.
    pub fn freq_response(&self, omega: f64) -> num_complex::Complex64 {
        use num_complex::Complex64;
        let z_inv = Complex64::from_polar(1.0, -omega * self.ts);
        let one = Complex64::new(1.0, 0.0);
        // backward-Euler integrator: Ts / (1 - z^-1)
        let pi = self.k_p * (one + self.ts / self.t_i / (one - z_inv));
        match self.t_f {
            Some(t_f) => {
                let a = self.ts / (t_f + self.ts);
                pi * a / (one - (1.0 - a) * z_inv)
            }
            None => pi,
        }
    }
}

/// Trace column selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Column {
    T,
    VO,
    IpRef,
    Vs,
    Is,
    Io,
    Po,
}

impl std::str::FromStr for Column {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "t" => Column::T,
            "v_o" => Column::VO,
            "i_p_ref" => Column::IpRef,
            "v_s" => Column::Vs,
            "i_s" => Column::Is,
            "i_o" => Column::Io,
            "p_o" => Column::Po,
            other => return Err(invalid(format!("unknown trace column '{other}'"))),
        })
    }
}

/// Uniformly sampled simulation output over `[0, t_end)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimTrace {
    pub dt_out: f64,
    pub t: Vec<f64>,
    pub v_o: Vec<f64>,
    pub i_p_ref: Vec<f64>,
    pub v_s: Vec<f64>,
    pub i_s: Vec<f64>,
    pub i_o: Vec<f64>,
    pub p_o: Vec<f64>,
}

pub const TRACE_HEADER: &str = "t,v_o,i_p_ref,v_s,i_s,i_o,p_o";

impl SimTrace {
    fn with_capacity(dt_out: f64, n: usize) -> Self {
        let v = || Vec::with_capacity(n);
        Self {
            dt_out,
            t: v(),
            v_o: v(),
            i_p_ref: v(),
            v_s: v(),
            i_s: v(),
            i_o: v(),
            p_o: v(),
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn column(&self, c: Column) -> &[f64] {
        match c {
            Column::T => &self.t,
            Column::VO => &self.v_o,
            Column::IpRef => &self.i_p_ref,
            Column::Vs => &self.v_s,
            Column::Is => &self.i_s,
            Column::Io => &self.i_o,
            Column::Po => &self.p_o,
        }
    }

    /// Sample index range covering `[start, end)`.
    pub fn window(&self, start: f64, end: f64) -> Result<std::ops::Range<usize>> {
        let a = (start / self.dt_out).round();
        let b = (end / self.dt_out).round();
        if !(a >= 0.0 && b > a && b as usize <= self.len()) {
            return Err(invalid(format!(
                "window [{start}, {end}) s lies outside the trace [0, {}) s",
                self.len() as f64 * self.dt_out
            )));
        }
        Ok(a as usize..b as usize)
    }

    pub fn write_csv<W: Write>(&self, mut w: W, digits: usize) -> std::io::Result<()> {
        writeln!(w, "{TRACE_HEADER}")?;
        for k in 0..self.len() {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                sig(self.t[k], digits),
                sig(self.v_o[k], digits),
                sig(self.i_p_ref[k], digits),
                sig(self.v_s[k], digits),
                sig(self.i_s[k], digits),
                sig(self.i_o[k], digits),
                sig(self.p_o[k], digits)
            )?;
        }
        Ok(())
    }
}

/// Mean of `i_p_ref` over `[start, end)`.
pub fn average_ip_ref(trace: &SimTrace, start: f64, end: f64) -> Result<f64> {
    let r = trace.window(start, end)?;
    let n = r.len() as f64;
    Ok(trace.i_p_ref[r].iter().sum::<f64>() / n)
}

/// Bus-voltage excursion after a load event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventTransient {
    /// Peak `|v_o - V_o,ref|` in the window, V.
    pub peak_deviation: f64,
    /// Time after the event until the deviation stays within 2% of its peak, s.
    pub settling_time: f64,
}

/// Measures the deviation from `v_ref` over `[t_event, t_stop)`.
pub fn event_transient(trace: &SimTrace, v_ref: f64, t_event: f64, t_stop: f64) -> Result<EventTransient> {
    let r = trace.window(t_event, t_stop)?;
    let dev: Vec<f64> = trace.v_o[r].iter().map(|v| v - v_ref).collect();
    Ok(EventTransient {
        peak_deviation: dev.iter().fold(0.0, |m, d| m.max(d.abs())),
        settling_time: settling_time(&dev, trace.dt_out, crate::performance::SETTLING_BAND),
    })
}

/// Line current components as driven by the current loop.
#[derive(Debug, Clone, Copy)]
struct Currents {
    ip: f64,
    iq: f64,
}

struct Ctx<'a> {
    cfg: &'a SimConfig,
    v1: f64,
    w: f64,
}

impl Ctx<'_> {
    /// `(i_s, di_s/dt)` at time `t` for current components `c` with rates `dc`.
    fn line_current(&self, t: f64, c: Currents, dc: Currents) -> (f64, f64) {
        let (s, co) = (self.w * t).sin_cos();
        let i = c.ip * co - c.iq * s;
        let di = dc.ip * co - dc.iq * s - self.w * (c.ip * s + c.iq * co);
        (i, di)
    }

    fn current_rates(&self, c: Currents, ip_ref: f64) -> Currents {
        match self.cfg.current_loop {
            CurrentLoop::Ideal => Currents { ip: 0.0, iq: 0.0 },
            CurrentLoop::FirstOrder { bandwidth } => Currents {
                ip: bandwidth * (ip_ref - c.ip),
                iq: bandwidth * (self.cfg.i_q_ref - c.iq),
            },
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Model {
    Nonlinear,
    Linear,
}

/// Integrates the averaged nonlinear converter model.
pub fn simulate(cfg: &SimConfig) -> Result<SimTrace> {
    run(cfg, Model::Nonlinear)
}

/// Integrates the linearized bus model under the same controller.
pub fn simulate_linear(cfg: &SimConfig) -> Result<SimTrace> {
    run(cfg, Model::Linear)
}

/// State vector: `[v_o, i_p, i_q]`; the current entries only move with a
/// first-order current loop.
fn derivative(ctx: &Ctx, model: Model, t: f64, x: [f64; 3], ip_ref: f64, load: Load) -> [f64; 3] {
    let p = &ctx.cfg.plant;
    let c = Currents { ip: x[1], iq: x[2] };
    let dc = ctx.current_rates(c, ip_ref);
    let v = x[0];
    let dv = match model {
        Model::Nonlinear => {
            let (i, di) = ctx.line_current(t, c, dc);
            let vs = ctx.v1 * (ctx.w * t).cos();
            let p_in = vs * i - p.l_s * i * di - p.r_s * i * i;
            (p_in / v - load.current(v)) / p.c_o
        }
        Model::Linear => {
            let mut p_in = 0.5 * ctx.v1 * c.ip;
            if ctx.cfg.linear_ripple {
                let (s2, c2) = (2.0 * ctx.w * t).sin_cos();
                p_in += 0.5 * ctx.v1 * (c.ip * c2 - c.iq * s2);
            }
            (p_in - load.power(v)) / (p.v_o_ref * p.c_o)
        }
    };
    [dv, dc.ip, dc.iq]
}

fn run(cfg: &SimConfig, model: Model) -> Result<SimTrace> {
    cfg.validate()?;
    let per_tick = cfg.steps_per_tick()?;
    let per_sample = cfg.steps_per_sample()?;
    let dt = cfg.sim_dt;
    let samples = (cfg.t_end / cfg.dt_out - 1e-9).ceil().max(0.0) as usize;
    let steps = samples.saturating_sub(1) * per_sample;
    let ctx = Ctx {
        cfg,
        v1: cfg.plant.v1_peak(),
        w: cfg.plant.omega_s,
    };
    let ideal = matches!(cfg.current_loop, CurrentLoop::Ideal);
    let mut ctrl = DiscreteController::new(&cfg.gains, cfg.voltage_loop_rate, cfg.i_p_max);
    let mut trace = SimTrace::with_capacity(cfg.dt_out, samples);
    let mut x = [cfg.v_o_init, 0.0, if ideal { cfg.i_q_ref } else { 0.0 }];
    let mut ip_ref = 0.0;

    let diverged = |t: f64, reason: String| Error::Divergence { t, reason };

    for k in 0..=steps {
        if samples == 0 {
            break;
        }
        let t = k as f64 * dt;
        if k % per_tick == 0 {
            let new_ref = ctrl.step(cfg.plant.v_o_ref - x[0]);
            if ideal {
                if model == Model::Nonlinear {
                    // the held command steps the line current; move the
                    // reactor energy change out of the capacitor
                    let c = Currents { ip: 0.0, iq: 0.0 };
                    let (before, _) = ctx.line_current(t, Currents { ip: x[1], iq: x[2] }, c);
                    let (after, _) = ctx.line_current(t, Currents { ip: new_ref, iq: x[2] }, c);
                    let de = 0.5 * cfg.plant.l_s * (after * after - before * before);
                    let v2 = x[0] * x[0] - 2.0 * de / cfg.plant.c_o;
                    if !(v2 > 0.0) {
                        return Err(diverged(t, "bus voltage collapsed at a current step".into()));
                    }
                    x[0] = v2.sqrt();
                }
                x[1] = new_ref;
            }
            ip_ref = new_ref;
        }
        let load = cfg.load_at_step(k);
        if k % per_sample == 0 {
            let c = Currents { ip: x[1], iq: x[2] };
            let (i_s, _) = ctx.line_current(t, c, Currents { ip: 0.0, iq: 0.0 });
            let i_o = load.current(x[0]);
            trace.t.push(t);
            trace.v_o.push(x[0]);
            trace.i_p_ref.push(ip_ref);
            trace.v_s.push(ctx.v1 * (ctx.w * t).cos());
            trace.i_s.push(i_s);
            trace.i_o.push(i_o);
            trace.p_o.push(x[0] * i_o);
        }
        if k == steps {
            break;
        }
        let f = |tt: f64, xx: [f64; 3]| derivative(&ctx, model, tt, xx, ip_ref, load);
        let add = |a: [f64; 3], b: [f64; 3], h: f64| [a[0] + h * b[0], a[1] + h * b[1], a[2] + h * b[2]];
        let k1 = f(t, x);
        let k2 = f(t + 0.5 * dt, add(x, k1, 0.5 * dt));
        let k3 = f(t + 0.5 * dt, add(x, k2, 0.5 * dt));
        let k4 = f(t + dt, add(x, k3, dt));
        for i in 0..3 {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(diverged(t, "non-finite state".into()));
        }
        if !(x[0] > 0.0) {
            return Err(diverged(t, format!("bus voltage fell to {} V", x[0])));
        }
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{design_improved, VscParams};
    use std::f64::consts::PI;

    fn gains() -> ControllerGains {
        design_improved(&VscParams::reference(), 2.0 * PI * 12.93, (1.0 + 2f64.sqrt()).powi(2))
            .unwrap()
            .gains
    }

    #[test]
    fn zero_error_keeps_zero_output() {
        let mut c = DiscreteController::new(&gains(), 4000.0, 15.0);
        for _ in 0..100 {
            assert_eq!(c.step(0.0), 0.0);
        }
    }

    #[test]
    fn filter_time_constant() {
        // with no integral action the output is a first-order lag of k_p * e
        let g = ControllerGains {
            k_p: 1.0,
            t_i: 1e12,
            t_f: Some(0.01),
        };
        let mut c = DiscreteController::new(&g, 4000.0, 15.0);
        let mut y = 0.0;
        for _ in 0..40 {
            y = c.step(1.0);
        }
        // 40 samples = one time constant
        assert!((y - (1.0 - (-1.0f64).exp())).abs() < 0.01, "{y}");
    }

    #[test]
    fn pi_output_without_filter() {
        let g = ControllerGains {
            k_p: 2.0,
            t_i: 0.5,
            t_f: None,
        };
        let mut c = DiscreteController::new(&g, 10.0, 100.0);
        // integ = 2/0.5 * 1 * 0.1 = 0.4 per step
        assert!((c.step(1.0) - 2.4).abs() < 1e-12);
        assert!((c.step(1.0) - 2.8).abs() < 1e-12);
    }

    #[test]
    fn clamp_freezes_integrator() {
        let g = ControllerGains {
            k_p: 1.0,
            t_i: 0.1,
            t_f: None,
        };
        let mut c = DiscreteController::new(&g, 1000.0, 15.0);
        for _ in 0..1000 {
            assert!(c.step(20.0) <= 15.0);
        }
        assert_eq!(c.integrator(), 0.0);
        // reversing the error lowers the output immediately
        assert!(c.step(-1.0) < 0.0);
    }

    #[test]
    fn discrete_response_matches_continuous_at_double_line_frequency() {
        let g = gains();
        let c = DiscreteController::new(&g, 4000.0, 15.0);
        let w = 200.0 * PI;
        let cont = g.controller_tf().eval_jw(w).unwrap().norm();
        let disc = c.freq_response(w).norm();
        assert!((disc / cont - 1.0).abs() < 0.02, "{disc} vs {cont}");
    }

    #[test]
    fn bus_at_reference_without_load_stays_put() {
        let mut cfg = SimConfig::new(VscParams::reference(), gains());
        cfg.v_o_init = 400.0;
        cfg.t_end = 0.2;
        for tr in [simulate(&cfg).unwrap(), simulate_linear(&cfg).unwrap()] {
            assert!(tr.v_o.iter().all(|v| *v == 400.0));
        }
    }

    #[test]
    fn empty_run() {
        let mut cfg = SimConfig::new(VscParams::reference(), gains());
        cfg.t_end = 0.0;
        assert!(simulate(&cfg).unwrap().is_empty());
    }

    #[test]
    fn trace_is_half_open() {
        let mut cfg = SimConfig::new(VscParams::reference(), gains());
        cfg.t_end = 0.01;
        let tr = simulate(&cfg).unwrap();
        assert_eq!(tr.len(), 100);
        assert!((tr.t[99] - 0.0099).abs() < 1e-12);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let base = SimConfig::new(VscParams::reference(), gains());
        let mut c = base.clone();
        c.sim_dt = 3e-5;
        assert!(simulate(&c).is_err());
        let mut c = base.clone();
        c.dt_out = 1.2e-5;
        assert!(simulate(&c).is_err());
        let mut c = base.clone();
        c.events = vec![
            LoadEvent {
                time: 1.0,
                load: Load::None,
            },
            LoadEvent {
                time: 0.5,
                load: Load::None,
            },
        ];
        assert!(simulate(&c).is_err());
        let mut c = base.clone();
        c.events = vec![LoadEvent {
            time: 0.0,
            load: Load::Resistor { ohms: 0.0 },
        }];
        assert!(simulate(&c).is_err());
    }

    #[test]
    fn collapse_is_reported_as_divergence() {
        let mut cfg = SimConfig::new(VscParams::reference(), gains());
        cfg.t_end = 0.5;
        cfg.events = vec![LoadEvent {
            time: 0.0,
            load: Load::ConstantPower { watts: 50e3 },
        }];
        assert!(matches!(simulate(&cfg), Err(Error::Divergence { .. })));
    }

    #[test]
    fn window_and_average() {
        let tr = SimTrace {
            dt_out: 0.5,
            t: vec![0.0, 0.5, 1.0, 1.5],
            i_p_ref: vec![1.0, 2.0, 3.0, 4.0],
            ..SimTrace::default()
        };
        assert_eq!(average_ip_ref(&tr, 0.5, 2.0).unwrap(), 3.0);
        assert!(average_ip_ref(&tr, 1.0, 3.0).is_err());
        assert!(average_ip_ref(&tr, 1.0, 1.0).is_err());
    }

    #[test]
    fn csv_header_and_rows() {
        let mut cfg = SimConfig::new(VscParams::reference(), gains());
        cfg.t_end = 3e-4;
        let tr = simulate(&cfg).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf, 9).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], TRACE_HEADER);
        assert_eq!(lines.len(), 4);
        let first: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(first[0], "0");
        assert_eq!(first[3], "325.269119");
        // the first current step moves reactor energy out of the bus
        assert!(first[1].parse::<f64>().unwrap() < 325.269119);
    }
}
