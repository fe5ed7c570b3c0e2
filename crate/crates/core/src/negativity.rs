//! Partial-transpose spectrum, the negativity-like quantity N, the
//! separability boundary and the critical temperature.
//!
//! The partial transpose σ_T has a geometric spectrum (1−ζ₁)(1−ζ₂)ζ₁ᵐζ₂ⁿ
//! whose ratios may be negative; N = Σ|Λ| − 1 vanishes iff both are ≥ 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{thermal_rho_coupled, Alphas, QuadraticKernel};
use crate::quench::{mode_thermo, QuenchSpec};

/// Largest negative discriminant u² − 4v that is still treated as zero.
pub const DISCRIMINANT_CLAMP: f64 = 1e-12;

/// Constant-frequency partial-transpose parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstFreqPT {
    pub mu_plus: f64,
    pub mu_minus: f64,
    pub nu_plus: f64,
    pub nu_minus: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub zeta1: f64,
    pub zeta2: f64,
}

impl ConstFreqPT {
    pub fn eigenvalue(&self, m: u32, n: u32) -> f64 {
        (1.0 - self.zeta1) * (1.0 - self.zeta2) * self.zeta1.powi(m as i32) * self.zeta2.powi(n as i32)
    }

    /// tr σ² and tr σ³ from the μ, ν combinations.
    pub fn trace_moments(&self) -> (f64, f64) {
        let b1 = self.eps1 * self.eps2
            / (4.0 * (self.mu_plus + self.nu_plus) * (self.mu_minus + self.nu_minus));
        let b2 = 4.0 * (self.mu_plus - self.nu_plus) * (self.mu_minus - self.nu_minus)
            / ((2.0 * self.mu_plus + self.nu_plus) * (2.0 * self.mu_minus + self.nu_minus));
        (b1, b2)
    }
}

pub fn pt_spectrum_const(omega1: f64, omega2: f64, beta: f64) -> Result<ConstFreqPT> {
    if !(omega1 > 0.0 && omega2 > 0.0 && beta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "frequencies and beta must be positive (omega1 = {omega1}, omega2 = {omega2}, beta = {beta})"
        )));
    }
    let (t1, t2) = ((0.5 * omega1 * beta).tanh(), (0.5 * omega2 * beta).tanh());
    let (w1t, w1c) = (omega1 * t1, omega1 / t1);
    let (w2t, w2c) = (omega2 * t2, omega2 / t2);
    let mu_plus = 0.25 * (w1c + w2t);
    let mu_minus = 0.25 * (w1t + w2c);
    let nu_plus = 0.25 * (w1c - w2t);
    let nu_minus = -0.25 * (w1t - w2c);
    let ratio = |p: f64, q: f64| (p.sqrt() - q.sqrt()) / (p.sqrt() + q.sqrt());
    Ok(ConstFreqPT {
        mu_plus,
        mu_minus,
        nu_plus,
        nu_minus,
        eps1: (w1t * w2c).sqrt(),
        eps2: (w1c * w2t).sqrt(),
        zeta1: -ratio(w1t, w2c),
        zeta2: ratio(w1c, w2t),
    })
}

/// N = (1−ζ₁)(1−ζ₂)/((1−|ζ₁|)(1−|ζ₂|)) − 1. Infinite when a negative
/// ratio reaches −1.
pub fn negativity(zeta1: f64, zeta2: f64) -> Result<f64> {
    for z in [zeta1, zeta2] {
        if !(z.abs() <= 1.0) {
            return Err(Error::InvalidParameter(format!("spectral ratio {z} outside [-1, 1]")));
        }
    }
    if zeta1 >= 0.0 && zeta2 >= 0.0 {
        return Ok(0.0);
    }
    let den = (1.0 - zeta1.abs()) * (1.0 - zeta2.abs());
    if den == 0.0 {
        log::warn!("negativity diverges: zeta = ({zeta1}, {zeta2})");
        return Ok(f64::INFINITY);
    }
    Ok((1.0 - zeta1) * (1.0 - zeta2) / den - 1.0)
}

/// Moments of σ_T and the ratios recovered from them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PTMoments {
    /// tr σ².
    pub beta1: f64,
    /// tr σ³.
    pub beta2: f64,
    pub x1: f64,
    pub x2: f64,
    /// ζ₁ + ζ₂.
    pub u: f64,
    /// ζ₁ζ₂.
    pub v: f64,
    pub zeta1: f64,
    pub zeta2: f64,
    /// A slightly negative discriminant was rounded to zero.
    pub clamped: bool,
}

impl PTMoments {
    pub fn negativity(&self) -> Result<f64> {
        negativity(self.zeta1, self.zeta2)
    }
}

/// Recovers ζ₁, ζ₂ from tr σ² and tr σ³ of a partially transposed state.
pub fn pt_moments(sigma: &QuadraticKernel) -> Result<PTMoments> {
    let al = sigma.partial_transpose()?.alphas()?;
    moments_from_alphas(&al)
}

pub fn moments_from_alphas(al: &Alphas) -> Result<PTMoments> {
    let Alphas { a1, a2, a3, a4, a5, a6 } = *al;
    let x1 = (a1 + a2 - 2.0 * a5).powi(2) - (a3 + a4 + 2.0 * a6).powi(2);
    let x2 = (a1 + a2 + 2.0 * a5).powi(2) - (a3 + a4 - 2.0 * a6).powi(2);
    if !(x1 > 0.0 && x2 > 0.0) {
        return Err(Error::Numerical(format!("moment invariants not positive (X1 = {x1}, X2 = {x2})")));
    }
    let beta1 = (x1 / x2).sqrt();
    let beta2 = 4.0 * x1 / (x1 + 3.0 * x2 - 12.0 * (a5 * a5 - a3 * a4));
    let (u, v, zeta1, zeta2, clamped) = ratios_from_moments(beta1, beta2)?;
    Ok(PTMoments { beta1, beta2, x1, x2, u, v, zeta1, zeta2, clamped })
}

/// Solves (1−ζ₁)(1−ζ₂)/((1+ζ₁)(1+ζ₂)) = β₁ and
/// (1−ζ₁)²(1−ζ₂)²/((1+ζ₁+ζ₁²)(1+ζ₂+ζ₂²)) = β₂ on the + branch.
pub fn ratios_from_moments(beta1: f64, beta2: f64) -> Result<(f64, f64, f64, f64, bool)> {
    let den = 2.0 * (4.0 * beta1 * beta1 - beta1 * beta1 * beta2 - 3.0 * beta2);
    let inner = 3.0 * beta2 * (16.0 * beta1 * beta1 - beta2 * (3.0 - beta1).powi(2));
    if inner < 0.0 {
        return Err(Error::Numerical(format!("moment equations have no real solution (beta1 = {beta1}, beta2 = {beta2})")));
    }
    let core = -3.0 * beta2 * (1.0 + beta1) + inner.sqrt();
    let u = (1.0 - beta1) / den * core;
    let v = -1.0 + (1.0 + beta1) / den * core;
    let mut disc = u * u - 4.0 * v;
    let mut clamped = false;
    if disc < 0.0 {
        if disc < -DISCRIMINANT_CLAMP {
            return Err(Error::Numerical(format!("negative discriminant u^2 - 4v = {disc}")));
        }
        log::debug!("clamping discriminant {disc} to zero");
        disc = 0.0;
        clamped = true;
    }
    let root = disc.sqrt();
    Ok((u, v, 0.5 * (u + root), 0.5 * (u - root), clamped))
}

/// The two separability inequalities at x = ω₁β/2, y = ω₂β/2:
/// x tanh x ≤ y coth y and x coth x ≥ y tanh y.
pub fn separable_xy(x: f64, y: f64) -> bool {
    let coth = |z: f64| 1.0 / z.tanh();
    x * x.tanh() <= y * coth(y) && x * coth(x) >= y * y.tanh()
}

pub fn check_separable(omega1: f64, omega2: f64, beta: f64) -> bool {
    separable_xy(0.5 * omega1 * beta, 0.5 * omega2 * beta)
}

/// Solves y tanh y = c (c > 0) for y > 0.
fn solve_y_tanh_y(c: f64, tol: f64) -> Result<f64> {
    let (mut lo, mut hi) = (0.0, c + 1.0);
    let f = |y: f64| y * y.tanh() - c;
    if !(f(hi) > 0.0) {
        return Err(Error::Bracket { lo, hi });
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= tol * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// g(x) with y = x·g(x) on the upper separability boundary
/// y tanh y = x coth x.
pub fn boundary_g(x: f64, tol: f64) -> Result<f64> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::InvalidParameter(format!("boundary abscissa must be positive, got {x}")));
    }
    let tol = tol.max(1e-16);
    let c = x / x.tanh();
    Ok(solve_y_tanh_y(c, tol)? / x)
}

/// Solves g(x) = z for z > 1 (g decreases from ∞ to 1).
pub fn boundary_g_inverse(z: f64, tol: f64) -> Result<f64> {
    if !(z > 1.0 && z.is_finite()) {
        return Err(Error::InvalidParameter(format!("frequency ratio must exceed 1, got {z}")));
    }
    let inner_tol = (tol * 1e-3).max(1e-16);
    let f = |x: f64| boundary_g(x, inner_tol).map(|g| g - z);
    // g(x) ≈ 1.2/x for small x and 1 + 4e^{−2x} for large x
    let mut lo = (0.5 / z).min(1e-3);
    let mut hi = (0.5 * (4.0 / (z - 1.0)).ln()).max(1.0) + 1.0;
    let mut grow = 0;
    while f(lo)? <= 0.0 || f(hi)? >= 0.0 {
        lo *= 0.5;
        hi *= 2.0;
        grow += 1;
        if grow > 60 {
            return Err(Error::Bracket { lo, hi });
        }
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= tol * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Nodes for interpolating g.
pub const TABLE_NODES: usize = 64;
/// Below this tolerance the table is bypassed.
pub const TABLE_DIRECT_TOL: f64 = 1e-8;

/// g tabulated on log-spaced nodes with monotone cubic interpolation in
/// (ln x, ln g).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTable {
    ln_x: Vec<f64>,
    ln_g: Vec<f64>,
    slopes: Vec<f64>,
    /// Largest deviation from a direct solve observed at the interval midpoints.
    pub max_error: f64,
}

impl BoundaryTable {
    pub fn new(x_min: f64, x_max: f64) -> Result<Self> {
        if !(x_min > 0.0 && x_max > x_min) {
            return Err(Error::InvalidParameter(format!("invalid table range [{x_min}, {x_max}]")));
        }
        let n = TABLE_NODES;
        let (a, b) = (x_min.ln(), x_max.ln());
        let ln_x: Vec<f64> = (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect();
        let ln_g = ln_x
            .iter()
            .map(|&l| boundary_g(l.exp(), 1e-15).map(f64::ln))
            .collect::<Result<Vec<_>>>()?;
        let slopes = monotone_slopes(&ln_x, &ln_g);
        let mut table = BoundaryTable { ln_x, ln_g, slopes, max_error: 0.0 };
        let mut worst = 0.0f64;
        for i in 0..n - 1 {
            let x = (0.5 * (table.ln_x[i] + table.ln_x[i + 1])).exp();
            let exact = boundary_g(x, 1e-15)?;
            worst = worst.max((table.interpolate(x) - exact).abs() / exact);
        }
        table.max_error = worst;
        Ok(table)
    }

    pub fn range(&self) -> (f64, f64) {
        (self.ln_x[0].exp(), self.ln_x[self.ln_x.len() - 1].exp())
    }

    fn interpolate(&self, x: f64) -> f64 {
        let l = x.ln();
        let n = self.ln_x.len();
        let i = self.ln_x.partition_point(|&s| s <= l).clamp(1, n - 1) - 1;
        let h = self.ln_x[i + 1] - self.ln_x[i];
        let s = (l - self.ln_x[i]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let y = (2.0 * s3 - 3.0 * s2 + 1.0) * self.ln_g[i]
            + (s3 - 2.0 * s2 + s) * h * self.slopes[i]
            + (-2.0 * s3 + 3.0 * s2) * self.ln_g[i + 1]
            + (s3 - s2) * h * self.slopes[i + 1];
        y.exp()
    }

    /// g(x), interpolated when the table is accurate enough for `tol` and
    /// solved directly otherwise.
    pub fn eval(&self, x: f64, tol: f64) -> Result<f64> {
        let (lo, hi) = self.range();
        if tol < TABLE_DIRECT_TOL || tol < self.max_error || x < lo || x > hi {
            return boundary_g(x, tol);
        }
        Ok(self.interpolate(x))
    }
}

/// Fritsch–Carlson slopes.
fn monotone_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
    let mut m = vec![0.0; n];
    m[0] = delta[0];
    m[n - 1] = delta[n - 2];
    for i in 1..n - 1 {
        m[i] = if delta[i - 1] * delta[i] <= 0.0 { 0.0 } else { 0.5 * (delta[i - 1] + delta[i]) };
    }
    for i in 0..n - 1 {
        if delta[i] == 0.0 {
            m[i] = 0.0;
            m[i + 1] = 0.0;
            continue;
        }
        let a = m[i] / delta[i];
        let b = m[i + 1] / delta[i];
        let r = a * a + b * b;
        if r > 9.0 {
            let t = 3.0 / r.sqrt();
            m[i] = t * a * delta[i];
            m[i + 1] = t * b * delta[i];
        }
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TcMethod {
    Exact,
    Approx,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalTemp {
    pub tc_exact: f64,
    pub tc_approx: f64,
    /// Boundary point (ω_min β_c/2, ω_max β_c/2).
    pub x_c: f64,
    pub y_c: f64,
}

/// T_c of two constant-frequency normal modes; 0 when ω₁ = ω₂.
pub fn critical_temperature(omega1: f64, omega2: f64, method: TcMethod, tol: f64) -> Result<f64> {
    if !(omega1 > 0.0 && omega2 > 0.0) {
        return Err(Error::InvalidParameter("frequencies must be positive".into()));
    }
    if omega1 == omega2 {
        return Ok(0.0);
    }
    let (wmin, wmax) = (omega1.min(omega2), omega1.max(omega2));
    match method {
        TcMethod::Approx => Ok(wmin / ((wmax + wmin) / (wmax - wmin)).ln()),
        TcMethod::Exact => Ok(wmin / (2.0 * boundary_g_inverse(wmax / wmin, tol)?)),
    }
}

pub fn critical_temperatures(omega1: f64, omega2: f64, tol: f64) -> Result<CriticalTemp> {
    let tc_exact = critical_temperature(omega1, omega2, TcMethod::Exact, tol)?;
    let tc_approx = critical_temperature(omega1, omega2, TcMethod::Approx, tol)?;
    let (wmin, wmax) = (omega1.min(omega2), omega1.max(omega2));
    let (x_c, y_c) = if tc_exact > 0.0 {
        (wmin / (2.0 * tc_exact), wmax / (2.0 * tc_exact))
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    Ok(CriticalTemp { tc_exact, tc_approx, x_c, y_c })
}

/// σ_T moments of a (possibly quenched) coupled state at β.
pub fn state_moments(spec: &QuenchSpec, beta: f64) -> Result<PTMoments> {
    let (m1, m2) = spec.normal_modes()?;
    let rho = thermal_rho_coupled(&mode_thermo(&m1, beta)?, &mode_thermo(&m2, beta)?)?;
    pt_moments(&rho.partial_transpose()?)
}

pub fn negativity_at(spec: &QuenchSpec, beta: f64) -> Result<f64> {
    state_moments(spec, beta)?.negativity()
}

/// Temperature above which N vanishes, from the sign change of
/// min(ζ₁, ζ₂) along β. Returns 0 if the state is separable at every
/// scanned temperature.
pub fn sqm_critical_temperature(spec: &QuenchSpec, tol: f64) -> Result<f64> {
    let (m1, m2) = spec.normal_modes()?;
    let min_zeta = |beta: f64| state_moments(spec, beta).map(|m| m.zeta1.min(m.zeta2));
    let w_hi = m1.omega_f.max(m2.omega_f).max(m1.omega_i).max(m2.omega_i);
    let beta_cap = [m1.beta_star(), m2.beta_star()]
        .into_iter()
        .flatten()
        .fold(300.0 / w_hi, |c, b| c.min(0.99 * b));
    let mut beta_prev = 1e-2 / w_hi;
    if min_zeta(beta_prev)? < 0.0 {
        return Err(Error::Bracket { lo: beta_prev, hi: beta_prev });
    }
    let steps = 240;
    let ratio = (beta_cap / beta_prev).powf(1.0 / steps as f64);
    let mut bracket = None;
    for _ in 0..steps {
        let beta = beta_prev * ratio;
        if min_zeta(beta)? < 0.0 {
            bracket = Some((beta_prev, beta));
            break;
        }
        beta_prev = beta;
    }
    let Some((mut b_sep, mut b_ent)) = bracket else {
        return Ok(0.0);
    };
    while 1.0 / b_sep - 1.0 / b_ent > tol {
        let mid = 2.0 / (1.0 / b_sep + 1.0 / b_ent);
        if min_zeta(mid)? < 0.0 {
            b_ent = mid;
        } else {
            b_sep = mid;
        }
    }
    Ok(1.0 / b_sep)
}

/// Zero-temperature limit of N, by doubling β until the relative change
/// drops below 1e-4.
pub fn negativity_ground(spec: &QuenchSpec, beta_start: f64) -> Result<f64> {
    let (m1, m2) = spec.normal_modes()?;
    let w_hi = m1.omega_f.max(m2.omega_f);
    let beta_max = crate::quench::OVERFLOW_LIMIT / w_hi;
    let mut beta = beta_start;
    let mut prev = negativity_at(spec, beta)?;
    while 2.0 * beta <= beta_max {
        beta *= 2.0;
        let next = negativity_at(spec, beta)?;
        if next == 0.0 && prev == 0.0 {
            return Ok(0.0);
        }
        if ((next - prev) / next).abs() < 1e-4 {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Numerical(format!("N(beta) did not settle up to beta = {beta}")))
}
