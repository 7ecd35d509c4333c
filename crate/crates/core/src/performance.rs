//! Analytic performance of a designed DC-bus loop.
//!
//! Line-current distortion follows from `|G_vl(j 2 omega_s)|`: the
//! double-line-frequency ripple in the current reference becomes a third
//! harmonic of `50 |G_vl(j 2 omega_s)|` percent. Transient quality follows
//! from the step response of `G_dp` to a bus power step.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::design::{build_gdp, build_gvl, build_open_loop, open_loop, DesignPoint, VscParams};
use crate::error::{invalid, Result};
use crate::format::sig;
use crate::lti::{gain_crossover, phase_margin, StateSpace, StepResponse, TransferFunction};

/// Horizon of the transient metrics, s.
pub const TRANSIENT_HORIZON: f64 = 5.0;
/// Output spacing of the analytic step response, s.
pub const TRANSIENT_DT: f64 = 1e-4;
/// Settling band as a fraction of the peak excursion.
pub const SETTLING_BAND: f64 = 0.02;

/// Predicted third harmonic of the line current, percent of fundamental.
pub fn third_harmonic_percent(gvl: &TransferFunction, omega_s: f64) -> Result<f64> {
    Ok(50.0 * gvl.eval_jw(2.0 * omega_s)?.norm())
}

/// Predicted current THD; the third harmonic dominates, so this equals
/// [`third_harmonic_percent`].
pub fn thd_percent(gvl: &TransferFunction, omega_s: f64) -> Result<f64> {
    third_harmonic_percent(gvl, omega_s)
}

/// Bus-voltage error after a power step.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerStepResponse {
    /// `e_v(t)` in V, sampled every `dt`.
    pub error: StepResponse,
}

impl PowerStepResponse {
    pub fn simulate(gdp: &TransferFunction, p_step: f64, horizon: f64) -> Result<Self> {
        let ss = StateSpace::from_tf(gdp)?;
        Ok(Self {
            error: ss.step_response(p_step, TRANSIENT_DT, horizon)?,
        })
    }

    pub fn peak(&self) -> f64 {
        self.error.peak_abs()
    }

    /// Time after which `|e_v|` stays inside the settling band.
    pub fn settling_time(&self) -> f64 {
        settling_time(&self.error.values, self.error.dt, SETTLING_BAND)
    }

    /// `integral of t |e_v(t)| dt` by the trapezoid rule.
    pub fn itae(&self) -> f64 {
        let dt = self.error.dt;
        let f: Vec<f64> = self
            .error
            .values
            .iter()
            .enumerate()
            .map(|(k, e)| k as f64 * dt * e.abs())
            .collect();
        trapezoid(&f, dt)
    }
}

pub(crate) fn trapezoid(f: &[f64], dt: f64) -> f64 {
    match f {
        [] | [_] => 0.0,
        [first, .., last] => dt * (f.iter().sum::<f64>() - 0.5 * (first + last)),
    }
}

/// First time after the last sample whose magnitude exceeds `band * peak`.
pub fn settling_time(values: &[f64], dt: f64, band: f64) -> f64 {
    let peak = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return 0.0;
    }
    let limit = band * peak;
    match values.iter().rposition(|v| v.abs() > limit) {
        Some(k) => ((k + 1).min(values.len() - 1)) as f64 * dt,
        None => 0.0,
    }
}

/// Peak bus-voltage excursion and its settling time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fluctuation {
    pub delta_v_max: f64,
    pub settling_time: f64,
}

/// Peak `|e_v(t)|` after a `p_step` watt step, with the 2% settling time.
pub fn max_voltage_fluctuation(gdp: &TransferFunction, p_step: f64) -> Result<Fluctuation> {
    let r = PowerStepResponse::simulate(gdp, p_step, TRANSIENT_HORIZON)?;
    Ok(Fluctuation {
        delta_v_max: r.peak(),
        settling_time: r.settling_time(),
    })
}

/// ITAE of the bus-voltage error after a `p_step` watt step, over `horizon` seconds.
pub fn itae(gdp: &TransferFunction, p_step: f64, horizon: f64) -> Result<f64> {
    if !(horizon > 0.0) {
        return Err(invalid(format!("ITAE horizon must be positive, got {horizon}")));
    }
    Ok(PowerStepResponse::simulate(gdp, p_step, horizon)?.itae())
}

/// Fundamental line-current operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    /// Average bus power, W.
    pub p_o: f64,
    /// Peak fundamental current, A.
    pub i1_peak: f64,
    /// Current phase relative to the line voltage, rad.
    pub phi: f64,
    /// Active current component, A.
    pub i_p: f64,
    /// Reactive current component, A.
    pub i_q: f64,
}

impl OperatingPoint {
    pub fn from_current(plant: &VscParams, i1_peak: f64, phi: f64) -> Self {
        let i_p = i1_peak * phi.cos();
        Self {
            p_o: 0.5 * plant.v1_peak() * i_p,
            i1_peak,
            phi,
            i_p,
            i_q: i1_peak * phi.sin(),
        }
    }

    /// Lossless operating point delivering `p_o` watts at current phase `phi`.
    pub fn from_power(plant: &VscParams, p_o: f64, phi: f64) -> Result<Self> {
        let c = phi.cos();
        if c.abs() < 1e-12 {
            return Err(invalid("a purely reactive current cannot deliver active power"));
        }
        let i_p = 2.0 * p_o / plant.v1_peak();
        Ok(Self::from_current(plant, i_p / c, phi))
    }
}

/// Steady-state amplitude of the double-line-frequency bus ripple, V.
pub fn steady_ripple_amplitude(plant: &VscParams, op: &OperatingPoint) -> f64 {
    plant.v1_peak() * op.i1_peak / (4.0 * plant.omega_s * plant.c_o * plant.v_o_ref)
}

/// Reactive power added by the ripple in the current reference, var.
///
/// Evaluates `|G_vl(j 2 omega_s)| * v1 * i1 * sin(phase)` with the caller's
/// `v1` and `i1` taken as given; passing peak values yields twice the
/// product of RMS values. The sign follows the phase of `G_vl`, which lies
/// between 0 and -180 deg for both schemes.
pub fn reactive_injection(gvl: &TransferFunction, omega_s: f64, v1: f64, i1: f64) -> Result<f64> {
    let w2 = 2.0 * omega_s;
    let mag = gvl.eval_jw(w2)?.norm();
    if mag == 0.0 {
        return Ok(0.0);
    }
    let phase = gvl.continuous_phase(w2)?.to_radians();
    Ok(mag * v1 * i1 * phase.sin())
}

/// One point of a line-voltage robustness sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustnessPoint {
    pub v_scale: f64,
    /// `None` when the open loop has no crossover in the scan range.
    pub phase_margin_deg: Option<f64>,
    pub crossover_rad_s: Option<f64>,
}

/// Open-loop margins with the line voltage scaled and the nominal gains kept.
pub fn robustness_at(dp: &DesignPoint, plant: &VscParams, v_scale: f64) -> Result<RobustnessPoint> {
    if !(v_scale > 0.0) {
        return Err(invalid(format!("voltage scale must be positive, got {v_scale}")));
    }
    let open = open_loop(&dp.gains, plant.plant_gain() * v_scale);
    let (pm, wc) = match gain_crossover(&open) {
        Ok(wc) => (Some(phase_margin(&open)?), Some(wc)),
        Err(crate::Error::NoCrossover { .. }) => (None, None),
        Err(e) => return Err(e),
    };
    Ok(RobustnessPoint {
        v_scale,
        phase_margin_deg: pm,
        crossover_rad_s: wc,
    })
}

/// Sweeps the line-voltage scale over `range` in `points` equal steps.
pub fn robustness_sweep(
    dp: &DesignPoint,
    plant: &VscParams,
    range: (f64, f64),
    points: usize,
) -> Result<Vec<RobustnessPoint>> {
    let (lo, hi) = range;
    if !(lo > 0.0 && hi >= lo) || points == 0 {
        return Err(invalid(format!(
            "robustness sweep needs 0 < lo <= hi and points >= 1 (got {lo}..{hi}, {points})"
        )));
    }
    (0..points)
        .map(|k| {
            let s = if points == 1 {
                lo
            } else {
                lo + (hi - lo) * k as f64 / (points - 1) as f64
            };
            robustness_at(dp, plant, s)
        })
        .collect()
}

pub fn write_robustness_csv<W: Write>(mut w: W, sweep: &[RobustnessPoint], digits: usize) -> std::io::Result<()> {
    writeln!(w, "v_scale,pm_deg,wc_rad_s")?;
    for p in sweep {
        let opt = |v: Option<f64>| v.map_or_else(|| "nan".to_string(), |v| sig(v, digits));
        writeln!(
            w,
            "{},{},{}",
            sig(p.v_scale, digits),
            opt(p.phase_margin_deg),
            opt(p.crossover_rad_s)
        )?;
    }
    Ok(())
}

/// All analytic metrics of one design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerformanceReport {
    pub i3_percent: f64,
    pub thd_percent: f64,
    pub delta_v_max: f64,
    pub itae: f64,
    pub ripple_amp: f64,
    pub q_injected: f64,
    pub settling_time: f64,
}

impl PerformanceReport {
    /// Metrics for a `p_step` watt transient and steady operation at `op`.
    ///
    /// The reactive injection uses RMS line voltage and RMS fundamental current.
    pub fn evaluate(dp: &DesignPoint, plant: &VscParams, p_step: f64, op: &OperatingPoint) -> Result<Self> {
        let gvl = build_gvl(dp);
        let gdp = build_gdp(dp, plant);
        let i3 = third_harmonic_percent(&gvl, plant.omega_s)?;
        let step = PowerStepResponse::simulate(&gdp, p_step, TRANSIENT_HORIZON)?;
        let q = reactive_injection(
            &gvl,
            plant.omega_s,
            plant.v_s_rms,
            op.i1_peak / std::f64::consts::SQRT_2,
        )?;
        Ok(Self {
            i3_percent: i3,
            thd_percent: i3,
            delta_v_max: step.peak(),
            itae: step.itae(),
            ripple_amp: steady_ripple_amplitude(plant, op),
            q_injected: q.abs(),
            settling_time: step.settling_time(),
        })
    }
}

pub const METRICS_HEADER: &str = "design_id,i3_pct,thd_pct,dvmax_v,itae_vs2,settle_s,q_var";

pub fn write_metrics_csv<W: Write>(
    mut w: W,
    rows: &[(String, PerformanceReport)],
    digits: usize,
) -> std::io::Result<()> {
    writeln!(w, "{METRICS_HEADER}")?;
    for (id, r) in rows {
        writeln!(
            w,
            "{id},{},{},{},{},{},{}",
            sig(r.i3_percent, digits),
            sig(r.thd_percent, digits),
            sig(r.delta_v_max, digits),
            sig(r.itae, digits),
            sig(r.settling_time, digits),
            sig(r.q_injected, digits)
        )?;
    }
    Ok(())
}

/// Human-readable design summary with predicted metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignReport {
    pub design: DesignPoint,
    pub gvl_mag_2ws: f64,
    pub gvl_phase_2ws_deg: f64,
    pub nominal_phase_margin: f64,
    pub p_step: f64,
    pub performance: PerformanceReport,
}

impl DesignReport {
    /// Evaluates `dp` on `plant` for a `p_step` watt transient; the steady
    /// point is the lossless one at `p_step` and unity power factor.
    pub fn new(dp: &DesignPoint, plant: &VscParams, p_step: f64) -> Result<Self> {
        let gvl = build_gvl(dp);
        let w2 = 2.0 * plant.omega_s;
        let op = OperatingPoint::from_power(plant, p_step, 0.0)?;
        Ok(Self {
            design: *dp,
            gvl_mag_2ws: gvl.eval_jw(w2)?.norm(),
            gvl_phase_2ws_deg: gvl.continuous_phase(w2)?,
            nominal_phase_margin: phase_margin(&build_open_loop(dp, plant))?,
            p_step,
            performance: PerformanceReport::evaluate(dp, plant, p_step, &op)?,
        })
    }
}

impl fmt::Display for DesignReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = &self.design;
        let p = &self.performance;
        let g = |v: f64| sig(v, crate::format::DEFAULT_DIGITS);
        writeln!(f, "scheme = {}", d.scheme.name())?;
        match d.scheme {
            crate::design::Scheme::Conventional { xi } => writeln!(f, "xi = {}", g(xi))?,
            crate::design::Scheme::Improved { beta } => writeln!(f, "beta = {}", g(beta))?,
        }
        writeln!(f, "theta_max_deg = {}", g(d.theta_max))?;
        writeln!(f, "phase_margin_numeric_deg = {}", g(self.nominal_phase_margin))?;
        writeln!(f, "omega_n_rad_s = {}", g(d.omega_n))?;
        writeln!(f, "f_n_hz = {}", g(d.bandwidth_hz()))?;
        writeln!(f, "k_p_a_per_v = {}", g(d.gains.k_p))?;
        writeln!(f, "t_i_s = {}", g(d.gains.t_i))?;
        match d.gains.t_f {
            Some(t_f) => writeln!(f, "t_f_s = {}", g(t_f))?,
            None => writeln!(f, "t_f_s = none")?,
        }
        writeln!(f, "gvl_mag_2ws = {}", g(self.gvl_mag_2ws))?;
        writeln!(f, "gvl_phase_2ws_deg = {}", g(self.gvl_phase_2ws_deg))?;
        writeln!(f, "i3_pct = {}", g(p.i3_percent))?;
        writeln!(f, "thd_pct = {}", g(p.thd_percent))?;
        writeln!(f, "p_step_w = {}", g(self.p_step))?;
        writeln!(f, "delta_v_max_v = {}", g(p.delta_v_max))?;
        writeln!(f, "settling_time_s = {}", g(p.settling_time))?;
        writeln!(f, "itae_v_s2 = {}", g(p.itae))?;
        writeln!(f, "ripple_amp_v = {}", g(p.ripple_amp))?;
        writeln!(f, "q_injected_var = {}", g(p.q_injected))
    }
}
