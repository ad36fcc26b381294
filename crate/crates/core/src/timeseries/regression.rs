//! Least squares and Prais-Winsten regression with AR(1) errors.
//!
//! Prais-Winsten is feasible GLS for `y_t = a + b x_t + u_t` with
//! `u_t = ρ u_{t-1} + e_t`. Given an estimate of ρ, every row is
//! quasi-differenced (`z_t - ρ z_{t-1}`) and the first row, which has no
//! predecessor, is scaled by `sqrt(1 - ρ²)` instead of being dropped. The
//! intercept column is transformed the same way, so the transformed model
//! has two regressors and no constant. ρ is re-estimated from the residuals
//! of each fit until it settles.

use std::fmt;

use serde::{Serialize, Serializer};

use super::{student_t_two_sided_p, Aligned, StatsError, MIN_POINTS};

/// ρ is kept inside this bound so the transform stays real and finite.
const RHO_BOUND: f64 = 0.999;

/// Relative size below which a regressor counts as collinear with the
/// intercept column.
const COLLINEAR_TOLERANCE: f64 = 1e-12;
const PERFECT_FIT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub intercept: f64,
    pub slope: f64,
    pub residuals: Vec<f64>,
    pub slope_se: f64,
}

/// Simple linear regression of `y` on `x` with an intercept.
///
/// `slope_se = sqrt(SSR / (n - 2) / Σ(x - x̄)²)`.
pub fn ols(x: &[f64], y: &[f64]) -> Result<OlsFit, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 3 {
        return Err(StatsError::TooFewPoints { found: n, required: 3 });
    }
    if x.iter().all(|&v| v == x[0]) {
        return Err(StatsError::ConstantRegressor);
    }
    let nf = n as f64;
    let x_mean = x.iter().sum::<f64>() / nf;
    let y_mean = y.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - x_mean;
        sxx += dx * dx;
        sxy += dx * (yi - y_mean);
    }
    if sxx.is_nan() || sxx <= 0.0 {
        return Err(StatsError::ConstantRegressor);
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let residuals: Vec<f64> = x.iter().zip(y).map(|(&xi, &yi)| yi - intercept - slope * xi).collect();
    let ssr: f64 = residuals.iter().map(|e| e * e).sum();
    let slope_se = (ssr / (nf - 2.0) / sxx).sqrt();
    Ok(OlsFit { intercept, slope, residuals, slope_se })
}

/// Fit of the quasi-differenced model for one fixed ρ.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedFit {
    pub rho: f64,
    pub intercept: f64,
    pub slope: f64,
    pub slope_se: f64,
    /// Residuals of the transformed regression.
    pub transformed_residuals: Vec<f64>,
    /// `y - intercept - slope * x` on the original scale.
    pub residuals: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

fn quasi_difference(z: &[f64], rho: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(z.len());
    out.push((1.0 - rho * rho).sqrt() * z[0]);
    out.extend(z.windows(2).map(|w| w[1] - rho * w[0]));
    out
}

/// Prais-Winsten transform at a fixed ρ followed by least squares on the
/// two transformed regressors (solved by Gram-Schmidt QR).
pub fn prais_winsten_fixed_rho(x: &[f64], y: &[f64], rho: f64) -> Result<TransformedFit, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 3 {
        return Err(StatsError::TooFewPoints { found: n, required: 3 });
    }
    let rho = rho.clamp(-RHO_BOUND, RHO_BOUND);
    let c = quasi_difference(&vec![1.0; n], rho);
    let xs = quasi_difference(x, rho);
    let ys = quasi_difference(y, rho);

    let r11 = dot(&c, &c).sqrt();
    let q1: Vec<f64> = c.iter().map(|v| v / r11).collect();
    let r12 = dot(&q1, &xs);
    let x_perp: Vec<f64> = xs.iter().zip(&q1).map(|(v, q)| v - r12 * q).collect();
    let r22 = dot(&x_perp, &x_perp).sqrt();
    let scale = COLLINEAR_TOLERANCE * dot(&xs, &xs).sqrt();
    if r22.is_nan() || r22 <= scale {
        return Err(StatsError::ConstantRegressor);
    }
    let q2: Vec<f64> = x_perp.iter().map(|v| v / r22).collect();
    let slope = dot(&q2, &ys) / r22;
    let intercept = (dot(&q1, &ys) - r12 * slope) / r11;

    let mut transformed_residuals: Vec<f64> =
        ys.iter().zip(c.iter().zip(&xs)).map(|(yv, (cv, xv))| yv - intercept * cv - slope * xv).collect();
    let mut ssr = dot(&transformed_residuals, &transformed_residuals);
    // Round-off residue of an exact linear relation.
    if ssr.sqrt() <= PERFECT_FIT_TOLERANCE * dot(&ys, &ys).sqrt() {
        transformed_residuals.iter_mut().for_each(|e| *e = 0.0);
        ssr = 0.0;
    }
    let slope_se = (ssr / (n as f64 - 2.0)).sqrt() / r22;
    let residuals = x.iter().zip(y).map(|(&xi, &yi)| yi - intercept - slope * xi).collect();
    Ok(TransformedFit { rho, intercept, slope, slope_se, transformed_residuals, residuals })
}

/// `Σ_{t≥2} e_t e_{t-1} / Σ_{t≥2} e_{t-1}²`, clamped to ±0.999; zero when
/// the residuals vanish.
pub(crate) fn lag_one_rho(residuals: &[f64]) -> f64 {
    let (num, den) = residuals.windows(2).fold((0.0, 0.0), |(num, den), w| (num + w[1] * w[0], den + w[0] * w[0]));
    if den > 0.0 {
        (num / den).clamp(-RHO_BOUND, RHO_BOUND)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PraisWinstenOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PraisWinstenOptions {
    fn default() -> Self {
        Self { tol: 1e-6, max_iter: 100 }
    }
}

fn serialize_t<S: Serializer>(t: &f64, s: S) -> Result<S::Ok, S::Error> {
    if t.is_finite() {
        s.serialize_f64(*t)
    } else if t.is_nan() {
        s.serialize_str("nan")
    } else if *t > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PraisWinstenFit {
    pub rho: f64,
    pub intercept: f64,
    pub slope: f64,
    pub slope_se: f64,
    /// `slope / slope_se`; `+inf` for a perfect fit.
    #[serde(serialize_with = "serialize_t")]
    pub t_stat: f64,
    /// Two-sided, Student t with `n - 2` degrees of freedom.
    pub p_value: f64,
    pub n: usize,
    pub iterations: usize,
    pub converged: bool,
}

impl PraisWinstenFit {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("fit serializes")
    }
}

impl fmt::Display for PraisWinstenFit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Prais-Winsten AR(1) regression")?;
        writeln!(f, "  observations   {}", self.n)?;
        writeln!(f, "  rho            {:.6}", self.rho)?;
        writeln!(f, "  intercept      {:.6}", self.intercept)?;
        writeln!(f, "  slope          {:.6}", self.slope)?;
        writeln!(f, "  std. error     {:.6}", self.slope_se)?;
        writeln!(f, "  t              {:.4}", self.t_stat)?;
        writeln!(f, "  p (two-sided)  {:.6}", self.p_value)?;
        write!(
            f,
            "  iterations     {} ({})",
            self.iterations,
            if self.converged { "converged" } else { "not converged" }
        )
    }
}

/// Iterated Prais-Winsten regression of `y` on `x`.
///
/// Starts from OLS residuals, then alternates between estimating ρ from the
/// lag-one autocorrelation of the original-scale residuals and refitting the
/// transformed model, until successive ρ estimates differ by less than
/// `opts.tol`. Running out of iterations is not an error; the last fit is
/// returned with `converged = false`.
pub fn prais_winsten(x: &[f64], y: &[f64], opts: PraisWinstenOptions) -> Result<PraisWinstenFit, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < MIN_POINTS {
        return Err(StatsError::TooFewPoints { found: x.len(), required: MIN_POINTS });
    }
    let base = ols(x, y)?;
    let mut residuals = base.residuals;
    let mut rho_prev = 0.0;
    let mut converged = false;
    let mut iterations = 0;
    let mut fit = None;
    for k in 1..=opts.max_iter.max(1) {
        let rho = lag_one_rho(&residuals);
        let current = prais_winsten_fixed_rho(x, y, rho)?;
        residuals = current.residuals.clone();
        fit = Some(current);
        iterations = k;
        if (rho - rho_prev).abs() < opts.tol {
            converged = true;
            break;
        }
        rho_prev = rho;
    }
    let fit = fit.expect("at least one iteration runs");
    Ok(finish(fit, x.len(), iterations, converged))
}

/// Fit the `y` series of `aligned` on its `x` series.
pub fn prais_winsten_aligned(aligned: &Aligned, opts: PraisWinstenOptions) -> Result<PraisWinstenFit, StatsError> {
    prais_winsten(&aligned.xs(), &aligned.ys(), opts)
}

fn finish(fit: TransformedFit, n: usize, iterations: usize, converged: bool) -> PraisWinstenFit {
    let perfect = fit.transformed_residuals.iter().all(|&e| e == 0.0);
    let (slope_se, t_stat, p_value) = if perfect {
        (0.0, f64::INFINITY, 0.0)
    } else {
        let t = fit.slope / fit.slope_se;
        (fit.slope_se, t, student_t_two_sided_p(t, (n - 2) as u64))
    };
    PraisWinstenFit {
        rho: fit.rho,
        intercept: fit.intercept,
        slope: fit.slope,
        slope_se,
        t_stat,
        p_value,
        n,
        iterations,
        converged,
    }
}
