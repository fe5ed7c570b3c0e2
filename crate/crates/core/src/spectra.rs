//! Closed-form spectra of Gaussian kernels and the entropies built on them.
//!
//! A one-particle kernel norm·exp(−a₁x² − a₂x'² + 2b xx') with a₁ + a₂ > 2|b|
//! has eigenvalues λ_n = lead·ξⁿ and Hermite-Gaussian eigenfunctions. A
//! two-particle kernel that is symmetric under particle exchange separates in
//! the coordinates y₁ = (x₁+x₂)/√2, y₂ = (x₁−x₂)/√2 into two such problems.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::QuadraticKernel;
use crate::quench::ModeThermo;

/// Largest eigenfunction index supported by the normalization sum.
pub const MAX_INDEX: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralData1D {
    /// Coefficient of x² (incoming coordinate).
    pub a1: f64,
    /// Coefficient of x'² (outgoing coordinate).
    pub a2: f64,
    pub b: f64,
    pub eps0: f64,
    /// The eigenfunctions decay as exp(−α₀x²/2).
    pub alpha0: f64,
    pub xi: f64,
    /// λ₀; λ_n = lead·ξⁿ.
    pub lead: f64,
}

impl SpectralData1D {
    pub fn eigenvalue(&self, n: u32) -> f64 {
        self.lead * self.xi.powi(n as i32)
    }

    /// Σλ_n = lead/(1 − ξ).
    pub fn trace(&self) -> f64 {
        self.lead / (1.0 - self.xi)
    }

    /// ln C_n² of the eigenfunction C_n⁻¹ H_n(√ε₀ x) e^{−α₀x²/2}.
    pub fn ln_norm_sq(&self, n: usize) -> Result<f64> {
        if n > MAX_INDEX {
            return Err(Error::IndexBound {
                index: n,
                max: MAX_INDEX,
            });
        }
        normalization_ln(n, self.eps0, self.alpha0)
    }

    pub fn eigenfunction(&self, n: usize, x: f64) -> Result<f64> {
        let ln_c2 = self.ln_norm_sq(n)?;
        let z = self.eps0.sqrt() * x;
        let psi = hermite_functions(n, z)[n];
        // H_n(z) e^{−α₀x²/2} = ψ_n(z) √(2ⁿ n! √π) e^{(ε₀ − α₀)x²/2}
        let ln_scale = 0.5
            * (n as f64 * std::f64::consts::LN_2
                + ln_factorial(n)
                + 0.5 * std::f64::consts::PI.ln());
        Ok(psi * (ln_scale - 0.5 * ln_c2 + 0.5 * (self.eps0 - self.alpha0) * x * x).exp())
    }
}

/// Spectral parameters of ∫ norm·e^{−a₁x² − a₂x'² + 2bxx'} f(x) dx = λ f(x').
pub fn eigendecompose_1d(k: &QuadraticKernel) -> Result<SpectralData1D> {
    if k.dim() != 1 {
        return Err(Error::InvalidParameter(
            "expected a one-particle kernel".into(),
        ));
    }
    from_coefficients(k.at(1, 1), k.at(0, 0), -k.at(0, 1), k.norm())
}

fn from_coefficients(a1: f64, a2: f64, b: f64, norm: f64) -> Result<SpectralData1D> {
    let s = a1 + a2;
    if !(s > 2.0 * b.abs()) {
        return Err(Error::ContinuousSpectrum);
    }
    let eps0 = ((s - 2.0 * b) * (s + 2.0 * b)).sqrt();
    let xi = 2.0 * b / (s + eps0);
    let lead = norm * (2.0 * std::f64::consts::PI / (s + eps0)).sqrt();
    let alpha0 = eps0 - (a1 - a2);
    if !(alpha0 > 0.0) {
        return Err(Error::Numerical(format!(
            "non-normalizable eigenfunctions (alpha0 = {alpha0})"
        )));
    }
    Ok(SpectralData1D {
        a1,
        a2,
        b,
        eps0,
        alpha0,
        xi,
        lead,
    })
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// ln Γ(m + ½) = ln((2m)! √π / (4^m m!)).
fn ln_gamma_half(m: usize) -> f64 {
    ln_factorial(2 * m) + 0.5 * std::f64::consts::PI.ln() - m as f64 * 4f64.ln() - ln_factorial(m)
}

/// ln C_n² with
/// C_n² = α₀^{−1/2} Σ_k 2^{2n−k} (ε₀/α₀ − 1)^{n−k} Γ(n+1)² Γ(n−k+½) / (Γ(k+1) Γ(n−k+1)²),
/// summed with signs tracked separately because the ratio term may be negative.
fn normalization_ln(n: usize, eps0: f64, alpha0: f64) -> Result<f64> {
    let r = eps0 / alpha0 - 1.0;
    let ln_r = r.abs().ln();
    let ln_fn = ln_factorial(n);
    let mut terms: Vec<(f64, f64)> = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let p = n - k;
        if p > 0 && r == 0.0 {
            continue;
        }
        let sign = if r < 0.0 && p % 2 == 1 { -1.0 } else { 1.0 };
        let ln_t = (2 * n - k) as f64 * std::f64::consts::LN_2
            + if p > 0 { p as f64 * ln_r } else { 0.0 }
            + 2.0 * ln_fn
            + ln_gamma_half(p)
            - ln_factorial(k)
            - 2.0 * ln_factorial(p);
        terms.push((sign, ln_t));
    }
    let peak = terms.iter().fold(f64::NEG_INFINITY, |m, t| m.max(t.1));
    let sum: f64 = terms.iter().map(|(s, l)| s * (l - peak).exp()).sum();
    if !(sum > 0.0) {
        return Err(Error::Numerical(format!(
            "normalization sum lost positivity at n = {n}"
        )));
    }
    Ok(peak + sum.ln() - 0.5 * alpha0.ln())
}

/// Normalized Hermite functions ψ_0..ψ_n at z, ψ_k = H_k(z) e^{−z²/2} / √(2^k k! √π).
pub fn hermite_functions(n: usize, z: f64) -> Vec<f64> {
    let mut psi = Vec::with_capacity(n + 1);
    psi.push(std::f64::consts::PI.powf(-0.25) * (-0.5 * z * z).exp());
    if n >= 1 {
        psi.push(std::f64::consts::SQRT_2 * z * psi[0]);
    }
    for k in 1..n {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * z * psi[k] - (kf / (kf + 1.0)).sqrt() * psi[k - 1];
        psi.push(next);
    }
    psi
}

/// Spectrum of a two-particle kernel that separates in y₁ = (x₁+x₂)/√2 and
/// y₂ = (x₁−x₂)/√2. Eigenvalues are Λ_mn = lead·ξ₁ᵐξ₂ⁿ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BipartiteSpectralData {
    pub xi1: f64,
    pub xi2: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub lead: f64,
    pub mode1: SpectralData1D,
    pub mode2: SpectralData1D,
}

impl BipartiteSpectralData {
    pub fn eigenvalue(&self, m: u32, n: u32) -> f64 {
        self.lead * self.xi1.powi(m as i32) * self.xi2.powi(n as i32)
    }

    /// u_mn(x₁, x₂).
    pub fn eigenfunction(&self, m: usize, n: usize, x1: f64, x2: f64) -> Result<f64> {
        let y1 = (x1 + x2) * std::f64::consts::FRAC_1_SQRT_2;
        let y2 = (x1 - x2) * std::f64::consts::FRAC_1_SQRT_2;
        Ok(self.mode1.eigenfunction(m, y1)? * self.mode2.eigenfunction(n, y2)?)
    }

    /// The `count` eigenvalues of largest modulus, in descending modulus.
    pub fn leading_eigenvalues(&self, count: usize) -> Vec<f64> {
        let reach = |xi: f64| -> u32 {
            if xi == 0.0 {
                1
            } else {
                (count as u32 + 1).min(((1e-300f64).ln() / xi.abs().ln()).ceil().max(1.0) as u32)
            }
        };
        let mut all = Vec::new();
        for m in 0..reach(self.xi1) {
            for n in 0..reach(self.xi2) {
                all.push(self.eigenvalue(m, n));
            }
        }
        all.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
        all.truncate(count);
        all
    }

    /// tr K² from the spectrum.
    pub fn purity(&self) -> f64 {
        self.lead * self.lead / ((1.0 - self.xi1 * self.xi1) * (1.0 - self.xi2 * self.xi2))
    }
}

pub fn eigendecompose_bipartite(k: &QuadraticKernel) -> Result<BipartiteSpectralData> {
    if k.dim() != 2 {
        return Err(Error::InvalidParameter(
            "expected a two-particle kernel".into(),
        ));
    }
    let swapped = k.swap_particles()?;
    let scale = k.q().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if k.q()
        .iter()
        .zip(swapped.q())
        .any(|(a, b)| (a - b).abs() > 1e-12 * scale)
    {
        return Err(Error::NonFactorizable);
    }
    let q = |i, j| k.at(i, j);
    let mode1 = from_coefficients(
        q(2, 2) + q(2, 3),
        q(0, 0) + q(0, 1),
        -(q(0, 2) + q(0, 3)),
        1.0,
    )?;
    let mode2 = from_coefficients(
        q(2, 2) - q(2, 3),
        q(0, 0) - q(0, 1),
        -(q(0, 2) - q(0, 3)),
        1.0,
    )?;
    Ok(BipartiteSpectralData {
        xi1: mode1.xi,
        xi2: mode2.xi,
        eps1: mode1.eps0,
        eps2: mode2.eps0,
        mu1: 0.5 * mode1.alpha0,
        mu2: 0.5 * mode2.alpha0,
        lead: k.norm() * mode1.lead * mode2.lead,
        mode1,
        mode2,
    })
}

/// Rényi entropy of one geometric ladder (1 − ξ)ξⁿ; α = 1 gives von Neumann.
pub fn renyi_mode(xi: f64, alpha: f64) -> Result<f64> {
    check_ratio(xi)?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "Renyi order must be positive, got {alpha}"
        )));
    }
    if alpha == 1.0 {
        return von_neumann_mode(xi);
    }
    if xi == 0.0 {
        return Ok(0.0);
    }
    // ln[(1 − ξ)^α / (1 − ξ^α)]
    let num = alpha * (-xi).ln_1p();
    let den = (-(alpha * xi.ln()).exp_m1()).ln();
    Ok((num - den) / (1.0 - alpha))
}

/// −ln(1 − ξ) − ξ ln ξ / (1 − ξ).
pub fn von_neumann_mode(xi: f64) -> Result<f64> {
    check_ratio(xi)?;
    if xi == 0.0 {
        return Ok(0.0);
    }
    Ok(-(-xi).ln_1p() - xi * xi.ln() / (1.0 - xi))
}

fn check_ratio(xi: f64) -> Result<()> {
    if !(0.0..1.0).contains(&xi) {
        return Err(Error::InvalidParameter(format!(
            "spectral ratio must lie in [0, 1), got {xi}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenyiPair {
    pub mode1: f64,
    pub mode2: f64,
    pub total: f64,
}

pub fn entropies(xi1: f64, xi2: f64, alpha: f64) -> Result<RenyiPair> {
    let mode1 = renyi_mode(xi1, alpha)?;
    let mode2 = renyi_mode(xi2, alpha)?;
    Ok(RenyiPair {
        mode1,
        mode2,
        total: mode1 + mode2,
    })
}

/// Purity of the coupled state, √(a₁₋a₂₋ / (a₁₊a₂₊)).
pub fn purity_coupled(mt1: &ModeThermo, mt2: &ModeThermo) -> f64 {
    mt1.purity() * mt2.purity()
}

/// Spectral ratio ζ of the one-particle substate. A negative ratio (B₃ < 0)
/// is folded to |ζ| with a warning.
pub fn substate_ratio(rho: &QuadraticKernel) -> Result<f64> {
    let sub = eigendecompose_1d(&rho.reduce_substate()?)?;
    if sub.xi < 0.0 {
        log::warn!("substate coupling B3 = {} is negative; using |B3|", sub.b);
    }
    Ok(sub.xi.abs())
}

/// I = 2 S(ρ_A) − S(ρ).
pub fn mutual_information(rho: &QuadraticKernel) -> Result<f64> {
    let spec = eigendecompose_bipartite(rho)?;
    let zeta = substate_ratio(rho)?;
    Ok(2.0 * von_neumann_mode(zeta)? - von_neumann_mode(spec.xi1)? - von_neumann_mode(spec.xi2)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub xi1: f64,
    pub xi2: f64,
    #[serde(rename = "S_von")]
    pub s_von: f64,
    /// Keyed by the order as written, e.g. "2" or "0.5".
    #[serde(rename = "S_renyi")]
    pub s_renyi: BTreeMap<String, f64>,
    pub zeta: f64,
    #[serde(rename = "S_sub")]
    pub s_sub: f64,
    #[serde(rename = "I")]
    pub mutual: f64,
}

pub fn entropy_report(rho: &QuadraticKernel, renyi_orders: &[f64]) -> Result<EntropyReport> {
    let spec = eigendecompose_bipartite(rho)?;
    let zeta = substate_ratio(rho)?;
    let s_von = von_neumann_mode(spec.xi1)? + von_neumann_mode(spec.xi2)?;
    let s_sub = von_neumann_mode(zeta)?;
    let mut s_renyi = BTreeMap::new();
    for &alpha in renyi_orders {
        s_renyi.insert(
            format!("{alpha}"),
            entropies(spec.xi1, spec.xi2, alpha)?.total,
        );
    }
    Ok(EntropyReport {
        xi1: spec.xi1,
        xi2: spec.xi2,
        s_von,
        s_renyi,
        zeta,
        s_sub,
        mutual: 2.0 * s_sub - s_von,
    })
}
