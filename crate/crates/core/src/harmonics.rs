//! Harmonic content of steady-state waveforms.
//!
//! A rectangular window spanning an exact integer number of fundamental
//! cycles puts every harmonic on a DFT bin, so no taper is needed.

use std::collections::BTreeMap;
use std::io::Write;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::format::sig;
use crate::sim::{Column, SimTrace};

/// Highest order included in THD.
pub const THD_MAX_ORDER: usize = 40;
/// Shortest accepted analysis window, in fundamental cycles.
pub const MIN_WINDOW_CYCLES: usize = 10;
/// Allowed mismatch between the window length and a whole number of samples.
const FRAMING_TOLERANCE: f64 = 1e-6;

/// Harmonic magnitudes relative to the fundamental.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicReport {
    /// Peak amplitude of the fundamental.
    pub fundamental_peak: f64,
    /// Odd orders from 3 up, percent of fundamental.
    pub harmonics: BTreeMap<usize, f64>,
    /// Even orders from 2 up, percent of fundamental.
    pub even_harmonics: BTreeMap<usize, f64>,
    /// RMS of orders 2..=max over the fundamental, percent.
    pub thd_percent: f64,
}

impl HarmonicReport {
    /// Percent of fundamental at `order`, odd or even; `None` past the analysed range.
    pub fn percent(&self, order: usize) -> Option<f64> {
        if order == 1 {
            return Some(100.0);
        }
        self.harmonics
            .get(&order)
            .or_else(|| self.even_harmonics.get(&order))
            .copied()
    }

    pub fn i3(&self) -> f64 {
        self.percent(3).unwrap_or(0.0)
    }
}

/// DFT `X_k / N` of `x`; the squared magnitudes sum to the mean square of `x`.
pub fn spectrum(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mut buf: Vec<Complex64> = x.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|c| *c *= scale);
    buf
}

/// Analyses `samples`, spaced `dt` apart, as exactly `window_cycles` periods of `f0`.
pub fn analyze_samples(samples: &[f64], dt: f64, window_cycles: usize, f0: f64) -> Result<HarmonicReport> {
    let n = window_samples(dt, window_cycles, f0)?;
    if samples.len() != n {
        return Err(Error::Window(format!(
            "{window_cycles} cycles at {f0} Hz need {n} samples, got {}",
            samples.len()
        )));
    }
    let x = spectrum(samples);
    // one-sided peak amplitude of bin k
    let amp = |k: usize| 2.0 * x[k].norm();
    let a1 = amp(window_cycles);
    if !(a1 > 0.0) {
        return Err(Error::Window("the fundamental is zero".into()));
    }
    let max_order = THD_MAX_ORDER.min((n - 1) / 2 / window_cycles);
    let mut harmonics = BTreeMap::new();
    let mut even_harmonics = BTreeMap::new();
    let mut sum_sq = 0.0;
    for order in 2..=max_order {
        let a = amp(order * window_cycles);
        sum_sq += a * a;
        let pct = 100.0 * a / a1;
        if order % 2 == 1 {
            harmonics.insert(order, pct);
        } else {
            even_harmonics.insert(order, pct);
        }
    }
    Ok(HarmonicReport {
        fundamental_peak: a1,
        harmonics,
        even_harmonics,
        thd_percent: 100.0 * sum_sq.sqrt() / a1,
    })
}

fn window_samples(dt: f64, window_cycles: usize, f0: f64) -> Result<usize> {
    if !(dt > 0.0 && f0 > 0.0) {
        return Err(invalid(format!("dt and f0 must be positive (dt = {dt}, f0 = {f0})")));
    }
    if window_cycles < MIN_WINDOW_CYCLES {
        return Err(Error::Window(format!(
            "window must span at least {MIN_WINDOW_CYCLES} cycles, got {window_cycles}"
        )));
    }
    let exact = window_cycles as f64 / f0 / dt;
    let n = exact.round();
    if (exact - n).abs() > FRAMING_TOLERANCE {
        return Err(Error::Window(format!(
            "{window_cycles} cycles at {f0} Hz is {exact} samples, not a whole number"
        )));
    }
    Ok(n as usize)
}

/// Analyses `column` of `trace` over `window_cycles` periods of `f0` from `start`.
pub fn analyze_harmonics(
    trace: &SimTrace,
    column: Column,
    start: f64,
    window_cycles: usize,
    f0: f64,
) -> Result<HarmonicReport> {
    let n = window_samples(trace.dt_out, window_cycles, f0)?;
    let first = (start / trace.dt_out).round();
    if !(first >= 0.0) || first as usize + n > trace.len() {
        return Err(Error::Window(format!(
            "window of {n} samples from t = {start} s runs past the trace ({} samples)",
            trace.len()
        )));
    }
    let first = first as usize;
    analyze_samples(&trace.column(column)[first..first + n], trace.dt_out, window_cycles, f0)
}

/// Measured third harmonic minus the predicted one, percentage points.
pub fn compare_prediction(report: &HarmonicReport, predicted_i3: f64) -> f64 {
    report.i3() - predicted_i3
}

pub const REPORT_HEADER: &str = "design_id,i1_peak_a,i3_pct,i5_pct,i7_pct,i9_pct,thd_pct";

pub fn write_report_csv<W: Write>(mut w: W, rows: &[(String, HarmonicReport)], digits: usize) -> std::io::Result<()> {
    writeln!(w, "{REPORT_HEADER}")?;
    for (id, r) in rows {
        let h = |n| r.percent(n).map_or_else(|| "nan".to_string(), |v| sig(v, digits));
        writeln!(
            w,
            "{id},{},{},{},{},{},{}",
            sig(r.fundamental_peak, digits),
            h(3),
            h(5),
            h(7),
            h(9),
            sig(r.thd_percent, digits)
        )?;
    }
    Ok(())
}
