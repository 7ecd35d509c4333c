use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::TransferFunction;
use crate::error::{Error, Result};

const DIVERGENCE_LIMIT: f64 = 1e12;
const PEAK_TOLERANCE: f64 = 1e-3;
const MAX_REFINEMENTS: u32 = 12;

/// Single-input single-output realization `x' = Ax + Bu`, `y = Cx + Du`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    pub d: f64,
}

impl StateSpace {
    /// Controllable canonical form of a proper transfer function.
    pub fn from_tf(tf: &TransferFunction) -> Result<Self> {
        if !tf.is_proper() {
            return Err(Error::Improper {
                num: tf.num().degree().unwrap_or(0),
                den: tf.order(),
            });
        }
        let n = tf.order();
        // den is monic: s^n + a[n-1] s^(n-1) + ... + a[0]
        let den = tf.den();
        let num = tf.num();
        let d = num.coeff(n);

        let mut a = DMatrix::zeros(n, n);
        for i in 0..n.saturating_sub(1) {
            a[(i, i + 1)] = 1.0;
        }
        for j in 0..n {
            a[(n - 1, j)] = -den.coeff(j);
        }
        let mut b = DVector::zeros(n);
        if n > 0 {
            b[n - 1] = 1.0;
        }
        let c = DVector::from_iterator(n, (0..n).map(|j| num.coeff(j) - d * den.coeff(j)));
        Ok(Self { a, b, c, d })
    }

    pub fn order(&self) -> usize {
        self.b.len()
    }

    /// `C (sI - A)^-1 B + D`, solved by LU rather than from the companion structure.
    pub fn eval(&self, s: Complex64) -> Option<Complex64> {
        let n = self.order();
        if n == 0 {
            return Some(Complex64::new(self.d, 0.0));
        }
        let m = DMatrix::from_fn(n, n, |i, j| {
            let diag = if i == j { s } else { Complex64::new(0.0, 0.0) };
            diag - self.a[(i, j)]
        });
        let rhs = self.b.map(|v| Complex64::new(v, 0.0));
        let x = m.lu().solve(&rhs)?;
        let y: Complex64 = self.c.iter().zip(x.iter()).map(|(c, x)| x * c).sum();
        Some(y + self.d)
    }

    /// Step response of amplitude `amplitude`, sampled every `dt` up to `t_end`.
    ///
    /// Integrates with fixed-step RK4. The internal step is halved until
    /// halving it again moves the peak |y| by less than 0.1%; output samples
    /// stay on the requested `dt` grid.
    pub fn step_response(&self, amplitude: f64, dt: f64, t_end: f64) -> Result<StepResponse> {
        if !(dt > 0.0) || !(t_end >= 0.0) {
            return Err(crate::error::invalid(format!(
                "step response needs dt > 0 and t_end >= 0 (dt = {dt}, t_end = {t_end})"
            )));
        }
        let samples = (t_end / dt).round() as usize;
        let mut substeps = 1u32;
        let mut current = self.integrate(amplitude, dt, samples, substeps)?;
        let mut last_change = f64::INFINITY;
        for _ in 0..MAX_REFINEMENTS {
            let finer = self.integrate(amplitude, dt, samples, substeps * 2)?;
            let p0 = peak_abs(&current);
            let p1 = peak_abs(&finer);
            last_change = if p1 == 0.0 { 0.0 } else { (p0 - p1).abs() / p1 };
            substeps *= 2;
            current = finer;
            if last_change < PEAK_TOLERANCE {
                return Ok(StepResponse {
                    dt,
                    values: current,
                    substeps,
                });
            }
        }
        Err(Error::NoConvergence { change: last_change })
    }

    fn integrate(&self, u: f64, dt: f64, samples: usize, substeps: u32) -> Result<Vec<f64>> {
        let n = self.order();
        let h = dt / substeps as f64;
        // row-major copy avoids per-step allocation
        let a: Vec<f64> = (0..n * n).map(|k| self.a[(k / n, k % n)]).collect();
        let bu: Vec<f64> = self.b.iter().map(|b| b * u).collect();
        let c: Vec<f64> = self.c.iter().copied().collect();
        let deriv = |x: &[f64], out: &mut [f64]| {
            for i in 0..n {
                let row = &a[i * n..(i + 1) * n];
                out[i] = row.iter().zip(x).map(|(a, x)| a * x).sum::<f64>() + bu[i];
            }
        };
        let output = |x: &[f64]| c.iter().zip(x).map(|(c, x)| c * x).sum::<f64>() + self.d * u;

        let mut x = vec![0.0; n];
        let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
            (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        let mut out = Vec::with_capacity(samples + 1);
        out.push(output(&x));
        for k in 1..=samples {
            for _ in 0..substeps {
                deriv(&x, &mut k1);
                for i in 0..n {
                    tmp[i] = x[i] + 0.5 * h * k1[i];
                }
                deriv(&tmp, &mut k2);
                for i in 0..n {
                    tmp[i] = x[i] + 0.5 * h * k2[i];
                }
                deriv(&tmp, &mut k3);
                for i in 0..n {
                    tmp[i] = x[i] + h * k3[i];
                }
                deriv(&tmp, &mut k4);
                for i in 0..n {
                    x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
            let y = output(&x);
            if !(y.abs() <= DIVERGENCE_LIMIT) {
                return Err(Error::Unstable {
                    t: k as f64 * dt,
                    magnitude: y.abs(),
                });
            }
            out.push(y);
        }
        Ok(out)
    }
}

fn peak_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, y| m.max(y.abs()))
}

/// Uniformly sampled step response starting at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResponse {
    pub dt: f64,
    pub values: Vec<f64>,
    /// RK4 steps per output sample after refinement.
    pub substeps: u32,
}

impl StepResponse {
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn peak_abs(&self) -> f64 {
        peak_abs(&self.values)
    }

    pub fn last(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}
