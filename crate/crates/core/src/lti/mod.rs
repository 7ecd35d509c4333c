//! Continuous-time SISO transfer functions.
//!
//! Rational functions of `s` with real coefficients, their frequency
//! response, loop margins and a state-space realization used for step
//! responses.

mod polynomial;
mod state_space;

use std::fmt;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use polynomial::Polynomial;
pub use state_space::{StateSpace, StepResponse};

/// Frequency range scanned when bracketing a gain crossover, in rad/s.
pub const CROSSOVER_SCAN: (f64, f64) = (1e-3, 1e6);
const CROSSOVER_SCAN_PER_DECADE: usize = 10;
const PHASE_TRACK_PER_DECADE: f64 = 50.0;

/// `num(s) / den(s)`, stored with a monic denominator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferFunction {
    num: Polynomial,
    den: Polynomial,
}

impl TransferFunction {
    /// Builds `num/den` and divides both by the leading denominator coefficient.
    pub fn new(num: impl Into<Polynomial>, den: impl Into<Polynomial>) -> Result<Self> {
        let num = num.into();
        let den = den.into();
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        let lead = den.leading();
        Ok(Self {
            num: num.scale(1.0 / lead),
            den: den.scale(1.0 / lead),
        })
    }

    pub fn constant(k: f64) -> Self {
        Self {
            num: Polynomial::constant(k),
            den: Polynomial::constant(1.0),
        }
    }

    /// `k / s`
    pub fn integrator(k: f64) -> Self {
        Self {
            num: Polynomial::constant(k),
            den: Polynomial::monomial(1.0, 1),
        }
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    /// Number of poles (denominator degree).
    pub fn order(&self) -> usize {
        self.den.degree().unwrap_or(0)
    }

    pub fn is_proper(&self) -> bool {
        self.num.degree().unwrap_or(0) <= self.order()
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.num.is_zero() || self.num.degree().unwrap_or(0) < self.order()
    }

    /// Value at `s = 0`; infinite when the denominator vanishes there.
    pub fn dc_gain(&self) -> f64 {
        self.num.coeff(0) / self.den.coeff(0)
    }

    /// Series connection `self * other`.
    pub fn series(&self, other: &TransferFunction) -> TransferFunction {
        // both denominators monic, so the product is too
        TransferFunction {
            num: &self.num * &other.num,
            den: &self.den * &other.den,
        }
    }

    pub fn scaled(&self, k: f64) -> TransferFunction {
        TransferFunction {
            num: self.num.scale(k),
            den: self.den.clone(),
        }
    }

    /// Complex value at `s`.
    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.num.eval_complex(s) / self.den.eval_complex(s)
    }

    /// Complex value at `s = j*omega`, rejecting points on an imaginary-axis pole.
    pub fn eval_jw(&self, omega: f64) -> Result<Complex64> {
        let s = Complex64::new(0.0, omega);
        let d = self.den.eval_complex(s);
        let scale: f64 = self
            .den
            .coeffs()
            .iter()
            .enumerate()
            .map(|(i, c)| c.abs() * omega.abs().powi(i as i32))
            .sum();
        if d.norm() <= 1e-12 * scale {
            return Err(Error::PoleOnAxis { omega });
        }
        Ok(self.num.eval_complex(s) / d)
    }

    /// Phase at low frequency implied by the lowest-order terms, in degrees.
    fn low_frequency_phase(&self) -> f64 {
        let a = self.num.origin_multiplicity();
        let b = self.den.origin_multiplicity();
        let ratio = self.num.coeff(a) / self.den.coeff(b);
        let sign = if ratio < 0.0 { -180.0 } else { 0.0 };
        sign + 90.0 * (a as f64 - b as f64)
    }

    /// Phase at `omega` in degrees, continuous in frequency.
    ///
    /// The phase is tracked along a log sweep from well below every corner
    /// and anchored to the low-frequency asymptote, so a double integrator
    /// starts at -180 deg rather than +180 deg.
    pub fn continuous_phase(&self, omega: f64) -> Result<f64> {
        if self.num.is_zero() {
            return Ok(0.0);
        }
        let start = omega.min(1e-6);
        let mut phase = nearest_branch(principal_phase(self.eval_jw(start)?), self.low_frequency_phase());
        if omega <= start {
            return Ok(phase);
        }
        let decades = (omega / start).log10();
        let steps = (decades * PHASE_TRACK_PER_DECADE).ceil().max(1.0) as usize;
        for k in 1..=steps {
            let w = start * 10f64.powf(decades * k as f64 / steps as f64);
            let w = if k == steps { omega } else { w };
            phase = nearest_branch(principal_phase(self.eval_jw(w)?), phase);
        }
        Ok(phase)
    }
}

impl fmt::Display for TransferFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) / ({})", self.num, self.den)
    }
}

fn principal_phase(z: Complex64) -> f64 {
    z.arg().to_degrees()
}

/// Shifts `phase` by a multiple of 360 deg to land nearest `reference`.
fn nearest_branch(phase: f64, reference: f64) -> f64 {
    phase + 360.0 * ((reference - phase) / 360.0).round()
}

/// One frequency-response sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreqPoint {
    pub omega: f64,
    pub magnitude: f64,
    pub magnitude_db: f64,
    pub phase_deg: f64,
}

impl FreqPoint {
    fn from_complex(omega: f64, z: Complex64, phase_deg: f64) -> Self {
        let magnitude = z.norm();
        Self {
            omega,
            magnitude,
            magnitude_db: 20.0 * magnitude.log10(),
            phase_deg,
        }
    }

    pub fn freq_hz(&self) -> f64 {
        self.omega / std::f64::consts::TAU
    }
}

/// Frequency response at a single `omega >= 0`; phase is the principal value.
pub fn freq_response(tf: &TransferFunction, omega: f64) -> Result<FreqPoint> {
    if !(omega >= 0.0) {
        return Err(crate::error::invalid(format!("omega must be >= 0, got {omega}")));
    }
    let z = tf.eval_jw(omega)?;
    Ok(FreqPoint::from_complex(omega, z, principal_phase(z)))
}

/// A sweep sample; `None` marks a frequency sitting on an imaginary-axis pole.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodeSample {
    pub omega: f64,
    pub point: Option<FreqPoint>,
}

/// Log-spaced sweep over `[omega_min, omega_max]` with unwrapped phase.
pub fn bode_sweep(
    tf: &TransferFunction,
    omega_min: f64,
    omega_max: f64,
    points_per_decade: usize,
) -> Result<Vec<BodeSample>> {
    if !(omega_min > 0.0 && omega_min < omega_max) {
        return Err(crate::error::invalid(format!(
            "sweep needs 0 < omega_min < omega_max, got [{omega_min}, {omega_max}]"
        )));
    }
    if points_per_decade == 0 {
        return Err(crate::error::invalid("points_per_decade must be >= 1"));
    }
    let decades = (omega_max / omega_min).log10();
    let n = (decades * points_per_decade as f64).ceil() as usize + 1;
    let mut out = Vec::with_capacity(n);
    let mut last_phase: Option<f64> = None;
    for k in 0..n {
        let omega = if k + 1 == n {
            omega_max
        } else {
            omega_min * 10f64.powf(k as f64 / points_per_decade as f64)
        };
        let point = match tf.eval_jw(omega) {
            Ok(z) => {
                let phase = match last_phase {
                    Some(prev) => nearest_branch(principal_phase(z), prev),
                    None => tf.continuous_phase(omega).unwrap_or(principal_phase(z)),
                };
                last_phase = Some(phase);
                Some(FreqPoint::from_complex(omega, z, phase))
            }
            Err(Error::PoleOnAxis { .. }) => None,
            Err(e) => return Err(e),
        };
        out.push(BodeSample { omega, point });
    }
    Ok(out)
}

/// Writes a sweep as `freq_hz,mag_db,phase_deg` CSV. Flagged points are written as `nan`.
pub fn write_bode_csv<W: Write>(mut w: W, sweep: &[BodeSample], digits: usize) -> std::io::Result<()> {
    writeln!(w, "freq_hz,mag_db,phase_deg")?;
    for s in sweep {
        let hz = crate::format::sig(s.omega / std::f64::consts::TAU, digits);
        match s.point {
            Some(p) => writeln!(
                w,
                "{hz},{},{}",
                crate::format::sig(p.magnitude_db, digits),
                crate::format::sig(p.phase_deg, digits)
            )?,
            None => writeln!(w, "{hz},nan,nan")?,
        }
    }
    Ok(())
}

/// Gain crossover frequency of an open loop, in rad/s.
///
/// Brackets the first magnitude crossing of 1 on a log scan of
/// [`CROSSOVER_SCAN`], then bisects in log-frequency.
pub fn gain_crossover(open: &TransferFunction) -> Result<f64> {
    let (lo, hi) = CROSSOVER_SCAN;
    let log_mag = |w: f64| open.eval_jw(w).map(|z| z.norm().ln());
    let n = ((hi / lo).log10() as usize) * CROSSOVER_SCAN_PER_DECADE;
    let grid: Vec<f64> = (0..=n)
        .map(|k| lo * 10f64.powf(k as f64 / CROSSOVER_SCAN_PER_DECADE as f64))
        .collect();

    let mut prev: Option<(f64, f64)> = None;
    for &w in &grid {
        let Ok(m) = log_mag(w) else {
            prev = None;
            continue;
        };
        if m == 0.0 {
            return Ok(w);
        }
        if let Some((w0, m0)) = prev {
            if m0.signum() != m.signum() {
                return bisect_log(w0, w, m0, log_mag);
            }
        }
        prev = Some((w, m));
    }
    Err(Error::NoCrossover { lo, hi })
}

fn bisect_log<F>(mut a: f64, mut b: f64, fa: f64, f: F) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let sa = fa.signum();
    for _ in 0..200 {
        let mid = (a * b).sqrt();
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == sa {
            a = mid;
        } else {
            b = mid;
        }
        if b / a - 1.0 < 1e-13 {
            break;
        }
    }
    Ok((a * b).sqrt())
}

/// Phase margin `180 + arg G(j*omega_c)` in degrees.
pub fn phase_margin(open: &TransferFunction) -> Result<f64> {
    let wc = gain_crossover(open)?;
    Ok(180.0 + open.continuous_phase(wc)?)
}

/// Controllable canonical realization; see [`StateSpace::from_tf`].
pub fn to_state_space(tf: &TransferFunction) -> Result<StateSpace> {
    StateSpace::from_tf(tf)
}

/// Step response of a realization; see [`StateSpace::step_response`].
pub fn step_response(ss: &StateSpace, amplitude: f64, dt: f64, t_end: f64) -> Result<StepResponse> {
    ss.step_response(amplitude, dt, t_end)
}

/// `open / (1 + open)`, with a monic denominator.
pub fn close_unity_feedback(open: &TransferFunction) -> TransferFunction {
    TransferFunction::new(open.num.clone(), &open.den + &open.num).expect("den + num of a proper open loop is non-zero")
}
