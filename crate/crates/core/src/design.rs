//! Plant parameters and DC-bus voltage controller design.
//!
//! Two schemes are supported:
//!
//! - **Conventional**: a PI regulator, closed loop matched to a standard
//!   second-order system with natural frequency `omega_n` and damping `xi`.
//! - **Improved**: a PI regulator in series with a first-order low-pass
//!   filter, tuned by the extended symmetrical optimum. The ratio
//!   `beta = T_i / T_f` sets the phase margin, which peaks at the
//!   crossover `omega_n = 1 / (sqrt(beta) * T_f)`.
//!
//! In both cases the plant seen by the voltage loop is the integrator
//! `V1 / (2 * V_o,ref * C_o * s)` with the current loop taken as unity gain.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lti::{Polynomial, TransferFunction};

/// Converter constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VscParams {
    /// Nominal RMS line voltage, V.
    pub v_s_rms: f64,
    /// Grid angular frequency, rad/s.
    pub omega_s: f64,
    /// DC-bus reference voltage, V.
    pub v_o_ref: f64,
    /// Bus capacitance, F.
    pub c_o: f64,
    /// Line reactor, H.
    pub l_s: f64,
    /// Reactor winding resistance, ohm.
    pub r_s: f64,
    /// Rated active power, W.
    pub p_o_max: f64,
    /// Rated reactive power, var.
    pub q_max: f64,
    /// Switching frequency, Hz.
    pub f_sw: f64,
}

impl VscParams {
    /// The 1.5 kVA, 230 V / 50 Hz rectifier with a 400 V, 1.1 mF bus.
    pub fn reference() -> Self {
        Self {
            v_s_rms: 230.0,
            omega_s: 100.0 * PI,
            v_o_ref: 400.0,
            c_o: 1.1e-3,
            l_s: 8.2e-3,
            r_s: 0.68,
            p_o_max: 1000.0,
            q_max: 1000.0,
            f_sw: 10e3,
        }
    }

    pub fn with_capacitance(mut self, c_o: f64) -> Self {
        self.c_o = c_o;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("v_s_rms", self.v_s_rms),
            ("omega_s", self.omega_s),
            ("c_o", self.c_o),
            ("l_s", self.l_s),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.r_s >= 0.0) {
            return Err(invalid(format!("r_s must be non-negative, got {}", self.r_s)));
        }
        if !(self.v_o_ref > self.v1_peak()) {
            return Err(invalid(format!(
                "v_o_ref = {} V must exceed the line peak {:.2} V",
                self.v_o_ref,
                self.v1_peak()
            )));
        }
        Ok(())
    }

    /// Peak fundamental line voltage.
    pub fn v1_peak(&self) -> f64 {
        SQRT_2 * self.v_s_rms
    }

    /// Gain of the averaged bus plant, `V1 / (2 V_o,ref C_o)`, in V/(A s).
    pub fn plant_gain(&self) -> f64 {
        self.v1_peak() / (2.0 * self.v_o_ref * self.c_o)
    }

    /// `1 / plant_gain`; converts a loop crossover into a proportional gain.
    pub fn gain_scale(&self) -> f64 {
        1.0 / self.plant_gain()
    }

    pub fn grid_freq_hz(&self) -> f64 {
        self.omega_s / (2.0 * PI)
    }
}

impl Default for VscParams {
    fn default() -> Self {
        Self::reference()
    }
}

/// PI (plus optional low-pass) regulator parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerGains {
    /// Proportional gain, A/V.
    pub k_p: f64,
    /// Integral time, s.
    pub t_i: f64,
    /// Low-pass time constant, s; `None` for the plain PI.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_f: Option<f64>,
}

impl ControllerGains {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_p > 0.0) || !(self.t_i > 0.0) {
            return Err(invalid(format!(
                "k_p and t_i must be positive (k_p = {}, t_i = {})",
                self.k_p, self.t_i
            )));
        }
        if let Some(t_f) = self.t_f {
            if !(t_f > 0.0) {
                return Err(invalid(format!("t_f must be positive, got {t_f}")));
            }
        }
        Ok(())
    }

    /// `K_p (T_i s + 1) / (T_i s)` times `1 / (T_f s + 1)` when present.
    pub fn controller_tf(&self) -> TransferFunction {
        let pi = TransferFunction::new(vec![self.k_p, self.k_p * self.t_i], vec![0.0, self.t_i]).expect("t_i > 0");
        match self.t_f {
            Some(t_f) => pi.series(&TransferFunction::new(vec![1.0], vec![1.0, t_f]).expect("t_f > 0")),
            None => pi,
        }
    }
}

/// Tuning family with its shape parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum Scheme {
    Conventional { xi: f64 },
    Improved { beta: f64 },
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Conventional { .. } => "conventional",
            Scheme::Improved { .. } => "improved",
        }
    }

    /// Nominal phase margin of the family, degrees.
    pub fn phase_margin(&self) -> Result<f64> {
        match *self {
            Scheme::Conventional { xi } => phase_margin_from_xi(xi),
            Scheme::Improved { beta } => phase_margin_from_beta(beta),
        }
    }

    /// Closed-loop denominator, ascending powers, unit constant term.
    fn closed_loop_den(&self, omega_n: f64) -> Polynomial {
        let w = omega_n;
        match *self {
            Scheme::Conventional { xi } => Polynomial::new(vec![1.0, 2.0 * xi / w, 1.0 / (w * w)]),
            Scheme::Improved { beta } => {
                let r = beta.sqrt();
                Polynomial::new(vec![1.0, r / w, r / (w * w), 1.0 / (w * w * w)])
            }
        }
    }

    /// Closed-loop reference tracking transfer function at `omega_n`.
    pub fn gvl(&self, omega_n: f64) -> TransferFunction {
        let w = omega_n;
        let num = match *self {
            Scheme::Conventional { xi } => vec![1.0, 2.0 * xi / w],
            Scheme::Improved { beta } => vec![1.0, beta.sqrt() / w],
        };
        TransferFunction::new(num, self.closed_loop_den(omega_n)).expect("omega_n > 0")
    }

    /// Closed-loop bus power to bus voltage transfer function.
    pub fn gdp(&self, omega_n: f64, plant: &VscParams) -> TransferFunction {
        let w = omega_n;
        let k = -1.0 / (plant.v_o_ref * plant.c_o);
        let num = match *self {
            // s / wn^2
            Scheme::Conventional { .. } => vec![0.0, k / (w * w)],
            // sqrt(beta) s / wn^2 * (s / (sqrt(beta) wn) + 1)
            Scheme::Improved { beta } => vec![0.0, k * beta.sqrt() / (w * w), k / (w * w * w)],
        };
        TransferFunction::new(num, self.closed_loop_den(omega_n)).expect("omega_n > 0")
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Conventional { xi } => write!(f, "conventional (xi = {xi:.4})"),
            Scheme::Improved { beta } => write!(f, "improved (beta = {beta:.4})"),
        }
    }
}

/// A designed loop: tuning family, bandwidth and resulting gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignPoint {
    pub scheme: Scheme,
    /// Natural (conventional) or crossover (improved) frequency, rad/s.
    pub omega_n: f64,
    /// Nominal phase margin, degrees.
    pub theta_max: f64,
    pub gains: ControllerGains,
}

impl DesignPoint {
    pub fn beta(&self) -> Option<f64> {
        match self.scheme {
            Scheme::Improved { beta } => Some(beta),
            Scheme::Conventional { .. } => None,
        }
    }

    pub fn xi(&self) -> Option<f64> {
        match self.scheme {
            Scheme::Conventional { xi } => Some(xi),
            Scheme::Improved { .. } => None,
        }
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.omega_n / (2.0 * PI)
    }
}

fn check_angle(theta_deg: f64) -> Result<()> {
    if theta_deg > 0.0 && theta_deg < 90.0 {
        Ok(())
    } else {
        Err(invalid(format!(
            "phase margin must lie in (0, 90) degrees, got {theta_deg}"
        )))
    }
}

/// `beta` giving a maximum phase margin of `theta_max` degrees.
///
/// Inverts `tan(theta) = (beta - 1) / (2 sqrt(beta))`: with `r = sqrt(beta)`,
/// `r^2 - 2 tan(theta) r - 1 = 0`, so `r = tan + sec`.
pub fn beta_from_phase_margin(theta_max: f64) -> Result<f64> {
    check_angle(theta_max)?;
    let th = theta_max.to_radians();
    let r = th.tan() + 1.0 / th.cos();
    Ok(r * r)
}

/// Maximum phase margin (degrees) of the low-pass scheme for a given `beta`.
pub fn phase_margin_from_beta(beta: f64) -> Result<f64> {
    if !(beta > 1.0) {
        return Err(invalid(format!("beta must exceed 1, got {beta}")));
    }
    Ok(((beta - 1.0) / (2.0 * beta.sqrt())).atan().to_degrees())
}

/// Phase margin (degrees) of the conventional loop `wn^2 (1 + 2 xi s / wn) / s^2`.
///
/// The crossover `u = omega_c / wn` solves `u^4 = 1 + 4 xi^2 u^2`, and the
/// phase there is `-180 + atan(2 xi u)`.
pub fn phase_margin_from_xi(xi: f64) -> Result<f64> {
    if !(xi > 0.0) {
        return Err(invalid(format!("xi must be positive, got {xi}")));
    }
    let u = conventional_crossover_ratio(xi);
    Ok((2.0 * xi * u).atan().to_degrees())
}

/// `omega_c / omega_n` of the conventional open loop.
pub fn conventional_crossover_ratio(xi: f64) -> f64 {
    let xi2 = xi * xi;
    (2.0 * xi2 + (4.0 * xi2 * xi2 + 1.0).sqrt()).sqrt()
}

const XI_MAX: f64 = 5.0;

/// Damping ratio whose conventional loop has the requested phase margin.
pub fn xi_from_phase_margin(theta_max: f64) -> Result<f64> {
    check_angle(theta_max)?;
    let upper = phase_margin_from_xi(XI_MAX)?;
    if theta_max >= upper {
        return Err(invalid(format!(
            "phase margin {theta_max} deg needs xi > {XI_MAX} (limit {upper:.3} deg)"
        )));
    }
    // phase margin rises monotonically with xi
    let (mut lo, mut hi) = (0.0_f64, XI_MAX);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phase_margin_from_xi(mid)? < theta_max {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn check_bandwidth(omega_n: f64) -> Result<()> {
    if omega_n > 0.0 && omega_n.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("omega_n must be positive, got {omega_n}")))
    }
}

/// PI gains matching the standard second-order closed loop.
pub fn design_conventional(plant: &VscParams, omega_n: f64, xi: f64) -> Result<DesignPoint> {
    check_bandwidth(omega_n)?;
    let theta_max = phase_margin_from_xi(xi)?;
    let gains = ControllerGains {
        k_p: 2.0 * xi * omega_n * plant.gain_scale(),
        t_i: 2.0 * xi / omega_n,
        t_f: None,
    };
    Ok(DesignPoint {
        scheme: Scheme::Conventional { xi },
        omega_n,
        theta_max,
        gains,
    })
}

/// PI plus low-pass gains by the extended symmetrical optimum.
pub fn design_improved(plant: &VscParams, omega_n: f64, beta: f64) -> Result<DesignPoint> {
    check_bandwidth(omega_n)?;
    let theta_max = phase_margin_from_beta(beta)?;
    let t_f = 1.0 / (beta.sqrt() * omega_n);
    let gains = ControllerGains {
        k_p: omega_n * plant.gain_scale(),
        t_i: beta * t_f,
        t_f: Some(t_f),
    };
    Ok(DesignPoint {
        scheme: Scheme::Improved { beta },
        omega_n,
        theta_max,
        gains,
    })
}

/// Designs either scheme at `omega_n`.
pub fn design(plant: &VscParams, scheme: Scheme, omega_n: f64) -> Result<DesignPoint> {
    match scheme {
        Scheme::Conventional { xi } => design_conventional(plant, omega_n, xi),
        Scheme::Improved { beta } => design_improved(plant, omega_n, beta),
    }
}

/// `omega_n` at which `|G_vl(j 2 omega_s)|` equals `target_mag`.
///
/// Bisects over `[2 omega_s / 1000, 2 omega_s]`; the magnitude is expected
/// to grow with `omega_n` there, and the bracket ends are checked.
pub fn bandwidth_for_attenuation(scheme: Scheme, omega_s: f64, target_mag: f64) -> Result<f64> {
    if !(target_mag > 0.0 && target_mag.is_finite()) {
        return Err(invalid(format!("target magnitude must be positive, got {target_mag}")));
    }
    if !(omega_s > 0.0) {
        return Err(invalid(format!("omega_s must be positive, got {omega_s}")));
    }
    scheme.phase_margin()?;
    let w2 = 2.0 * omega_s;
    let mag = |wn: f64| -> Result<f64> { Ok(scheme.gvl(wn).eval_jw(w2)?.norm()) };
    let (mut lo, mut hi) = (w2 / 1000.0, w2);
    let (m_lo, m_hi) = (mag(lo)?, mag(hi)?);
    if !(m_lo < target_mag && target_mag < m_hi) {
        return Err(Error::NotBracketed {
            target: target_mag,
            lo: m_lo,
            hi: m_hi,
        });
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if mag(mid)? < target_mag {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-12 {
            break;
        }
    }
    Ok((lo * hi).sqrt())
}

/// Closed-loop `V_o / V_o,ref` of a design.
pub fn build_gvl(dp: &DesignPoint) -> TransferFunction {
    dp.scheme.gvl(dp.omega_n)
}

/// Closed-loop `V_o / P_o` of a design on `plant`.
pub fn build_gdp(dp: &DesignPoint, plant: &VscParams) -> TransferFunction {
    dp.scheme.gdp(dp.omega_n, plant)
}

/// Open loop `C(s) * plant_gain / s` built from the actual gains.
pub fn open_loop(gains: &ControllerGains, plant_gain: f64) -> TransferFunction {
    gains.controller_tf().series(&TransferFunction::integrator(plant_gain))
}

/// Open loop of a design evaluated on `plant`.
pub fn build_open_loop(dp: &DesignPoint, plant: &VscParams) -> TransferFunction {
    open_loop(&dp.gains, plant.plant_gain())
}

/// Procedure: phase margin, then bandwidth from the harmonic target, then gains.
pub fn design_for_target(
    plant: &VscParams,
    scheme_kind: SchemeKind,
    theta_max: f64,
    target_mag: f64,
) -> Result<DesignPoint> {
    let scheme = scheme_kind.at_phase_margin(theta_max)?;
    let omega_n = bandwidth_for_attenuation(scheme, plant.omega_s, target_mag)?;
    design(plant, scheme, omega_n)
}

/// Tuning family without its shape parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    Conventional,
    Improved,
}

impl SchemeKind {
    pub fn at_phase_margin(self, theta_max: f64) -> Result<Scheme> {
        Ok(match self {
            SchemeKind::Conventional => Scheme::Conventional {
                xi: xi_from_phase_margin(theta_max)?,
            },
            SchemeKind::Improved => Scheme::Improved {
                beta: beta_from_phase_margin(theta_max)?,
            },
        })
    }
}

impl std::str::FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "conventional" => Ok(SchemeKind::Conventional),
            "improved" => Ok(SchemeKind::Improved),
            other => Err(invalid(format!("unknown scheme '{other}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::{close_unity_feedback, freq_response, gain_crossover, phase_margin};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn beta_for_standard_margins() {
        assert!((beta_from_phase_margin(45.0).unwrap() - 5.828).abs() < 0.005);
        assert!((beta_from_phase_margin(60.0).unwrap() - 13.93).abs() < 0.05);
        // theta -> 0 gives beta -> 1
        assert!((beta_from_phase_margin(1e-6).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn angle_range_is_checked() {
        for bad in [0.0, 90.0, -5.0, 120.0] {
            assert!(beta_from_phase_margin(bad).is_err());
            assert!(xi_from_phase_margin(bad).is_err());
        }
        assert!(phase_margin_from_beta(1.0).is_err());
        assert!(phase_margin_from_beta(0.5).is_err());
    }

    #[test]
    fn margin_from_beta_values() {
        assert!((phase_margin_from_beta(5.828).unwrap() - 45.0).abs() < 0.01);
        // atan(15/8) and atan(3/4)
        assert!((phase_margin_from_beta(16.0).unwrap() - 61.9275).abs() < 1e-4);
        assert!((phase_margin_from_beta(4.0).unwrap() - 36.8699).abs() < 1e-4);
    }

    #[test]
    fn xi_for_standard_margins() {
        assert!((xi_from_phase_margin(45.0).unwrap() - 0.4202).abs() < 0.001);
        assert!((xi_from_phase_margin(60.0).unwrap() - 0.612).abs() < 0.001);
        assert!((xi_from_phase_margin(65.53).unwrap() - FRAC_1_SQRT_2).abs() < 1e-3);
    }

    #[test]
    fn conventional_gains_for_reference_plant() {
        let plant = VscParams::reference();
        let dp = design_conventional(&plant, 20.0 * PI, FRAC_1_SQRT_2).unwrap();
        assert!(rel(dp.gains.k_p, 0.2404) < 5e-4, "{}", dp.gains.k_p);
        assert!(rel(dp.gains.t_i, 0.02251) < 5e-4, "{}", dp.gains.t_i);
        assert_eq!(dp.gains.t_f, None);
        assert!(rel(dp.gains.t_i, 2.0 * FRAC_1_SQRT_2 / (20.0 * PI)) < 1e-12);

        let doubled = design_conventional(&plant, 20.0 * PI, 2.0 * FRAC_1_SQRT_2).unwrap();
        assert!(rel(doubled.gains.k_p, 2.0 * dp.gains.k_p) < 1e-12);
        assert!(rel(doubled.gains.t_i, 2.0 * dp.gains.t_i) < 1e-12);

        let g = build_gvl(&dp);
        let m = freq_response(&g, 2.0 * plant.omega_s).unwrap().magnitude;
        assert!((m - 0.141).abs() < 1e-3);
    }

    #[test]
    fn improved_gains_for_reference_plant() {
        let plant = VscParams::reference();
        let dp = design_improved(&plant, 2.0 * PI * 12.93, 5.828).unwrap();
        let t_f = dp.gains.t_f.unwrap();
        assert!(rel(t_f, 5.098e-3) < 5e-4, "{t_f}");
        assert!(rel(dp.gains.t_i, 29.71e-3) < 5e-4, "{}", dp.gains.t_i);
        assert!(rel(dp.gains.k_p, 0.2198) < 5e-4, "{}", dp.gains.k_p);
        assert!(rel(dp.gains.t_i / t_f, 5.828) < 1e-12);
        assert!(rel(dp.omega_n, 1.0 / (5.828f64.sqrt() * t_f)) < 1e-12);

        let open = build_open_loop(&dp, &plant);
        assert!(rel(gain_crossover(&open).unwrap(), dp.omega_n) < 1e-9);
        let pm = phase_margin(&open).unwrap();
        assert!((pm - phase_margin_from_beta(5.828).unwrap()).abs() < 1e-6);

        let m = freq_response(&build_gvl(&dp), 200.0 * PI).unwrap().magnitude;
        assert!((m - 0.040).abs() < 0.001, "{m}");
    }

    #[test]
    fn closing_the_improved_loop_gives_third_order_form() {
        let plant = VscParams::reference();
        let beta: f64 = 5.828;
        let t_f = 5.098e-3;
        let wn = 1.0 / (beta.sqrt() * t_f);
        let dp = design_improved(&plant, wn, beta).unwrap();
        let cl = close_unity_feedback(&build_open_loop(&dp, &plant));

        // hand expansion of (beta Tf s + 1) / (beta^1.5 Tf^3 s^3 + beta^1.5 Tf^2 s^2 + beta Tf s + 1)
        let b15 = beta * beta.sqrt();
        let lead = b15 * t_f.powi(3);
        let num = [1.0 / lead, beta * t_f / lead];
        let den = [1.0 / lead, beta * t_f / lead, b15 * t_f * t_f / lead, 1.0];
        for (got, want) in cl.num().coeffs().iter().zip(num) {
            assert!(rel(*got, want) < 1e-9);
        }
        for (got, want) in cl.den().coeffs().iter().zip(den) {
            assert!(rel(*got, want) < 1e-9);
        }
        // and the natural-frequency form at 12.93 Hz
        assert!(rel(wn, 2.0 * PI * 12.93) < 2e-3);
        let gvl = build_gvl(&dp);
        for (a, b) in gvl.den().coeffs().iter().zip(cl.den().coeffs()) {
            assert!(rel(*a, *b) < 1e-9);
        }
    }

    #[test]
    fn closing_the_conventional_loop_gives_second_order_form() {
        let plant = VscParams::reference();
        let dp = design_conventional(&plant, 2.0 * PI * 4.75, 0.42).unwrap();
        let cl = close_unity_feedback(&build_open_loop(&dp, &plant));
        let gvl = build_gvl(&dp);
        assert_eq!(cl.den().coeffs().len(), gvl.den().coeffs().len());
        for (a, b) in cl
            .den()
            .coeffs()
            .iter()
            .chain(cl.num().coeffs())
            .zip(gvl.den().coeffs().iter().chain(gvl.num().coeffs()))
        {
            assert!(rel(*a, *b) < 1e-9);
        }
    }

    #[test]
    fn conventional_crossover_ratio_matches_scan() {
        let xi = 0.42;
        let wn = 10.0;
        let open = TransferFunction::new(vec![wn * wn, 2.0 * xi * wn], vec![0.0, 0.0, 1.0]).unwrap();
        let wc = gain_crossover(&open).unwrap();
        let u = conventional_crossover_ratio(xi);
        assert!((u - 1.188785).abs() < 1e-5, "{u}");
        assert!(rel(wc / wn, u) < 1e-9);
        let pm = phase_margin(&open).unwrap();
        assert!((pm - 44.96).abs() < 0.01, "{pm}");
        assert!((pm - phase_margin_from_xi(xi).unwrap()).abs() < 1e-7);
    }

    #[test]
    fn bandwidth_targets() {
        let ws = 100.0 * PI;
        let hz = |s: Scheme| bandwidth_for_attenuation(s, ws, 0.04).unwrap() / (2.0 * PI);
        assert!(rel(hz(Scheme::Improved { beta: 5.828 }), 12.93) < 5e-3);
        assert!(rel(hz(Scheme::Conventional { xi: 0.42 }), 4.75) < 5e-3);
        assert!(rel(hz(Scheme::Improved { beta: 13.93 }), 10.54) < 5e-3);
        assert!(
            rel(
                hz(Scheme::Conventional {
                    xi: xi_from_phase_margin(60.0).unwrap()
                }),
                3.26
            ) < 5e-3
        );
    }

    #[test]
    fn unreachable_target_is_reported() {
        let err = bandwidth_for_attenuation(Scheme::Improved { beta: 5.828 }, 100.0 * PI, 1e-7).unwrap_err();
        assert!(matches!(err, Error::NotBracketed { .. }));
        assert!(bandwidth_for_attenuation(Scheme::Improved { beta: 5.828 }, 100.0 * PI, 1.5).is_err());
    }

    #[test]
    fn gdp_has_zero_dc_gain_and_scales_with_capacitance() {
        let plant = VscParams::reference();
        let half = plant.with_capacitance(plant.c_o / 2.0);
        for scheme in [Scheme::Conventional { xi: 0.42 }, Scheme::Improved { beta: 5.828 }] {
            let g = scheme.gdp(50.0, &plant);
            assert_eq!(g.dc_gain(), 0.0);
            let g2 = scheme.gdp(50.0, &half);
            for w in [1.0, 30.0, 300.0] {
                let a = g.eval_jw(w).unwrap().norm();
                let b = g2.eval_jw(w).unwrap().norm();
                assert!(rel(b, 2.0 * a) < 1e-12);
            }
        }
    }

    #[test]
    fn plant_validation() {
        assert!(VscParams::reference().validate().is_ok());
        let mut p = VscParams::reference();
        p.v_o_ref = 300.0;
        assert!(p.validate().is_err());
        let mut p = VscParams::reference();
        p.c_o = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn scheme_kind_parses() {
        assert_eq!("improved".parse::<SchemeKind>().unwrap(), SchemeKind::Improved);
        assert!("pid".parse::<SchemeKind>().is_err());
    }
}
