//! Gaussian kernels K(v) = norm · exp(−vᵀ Q v) over v = (out..., in...).
//!
//! For one particle v = (x', x); for two particles v = (x₁', x₂', x₁, x₂).
//! Partial transposition and marginalization act on `Q` as a permutation and
//! a rank-one Schur complement respectively.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quench::ModeThermo;

/// Symmetric relative tolerance accepted when constructing a kernel.
const SYMMETRY_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticKernel {
    dim: usize,
    norm: f64,
    #[serde(rename = "Q")]
    q: Vec<f64>,
}

/// The six exponent coefficients of a two-particle thermal kernel,
///
///   −α₁(x₁'² + x₂'²) − α₂(x₁² + x₂²) + 2α₃x₁'x₂' + 2α₄x₁x₂
///   + 2α₅(x₁'x₁ + x₂'x₂) + 2α₆(x₁'x₂ + x₂'x₁).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alphas {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub a5: f64,
    pub a6: f64,
}

impl QuadraticKernel {
    pub fn new(dim: usize, norm: f64, q: Vec<f64>) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidParameter(format!(
                "kernel dimension must be 1 or 2, got {dim}"
            )));
        }
        let n = 2 * dim;
        if q.len() != n * n {
            return Err(Error::InvalidParameter(format!(
                "coefficient matrix must have {} entries, got {}",
                n * n,
                q.len()
            )));
        }
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "kernel norm must be positive, got {norm}"
            )));
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "non-finite kernel coefficient".into(),
            ));
        }
        let scale = q.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            for j in 0..i {
                if (q[i * n + j] - q[j * n + i]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::InvalidParameter(format!(
                        "coefficient matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(QuadraticKernel { dim, norm, q })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Row-major coefficient matrix.
    pub fn q(&self) -> &[f64] {
        &self.q
    }

    /// Side length of `Q`.
    pub fn size(&self) -> usize {
        2 * self.dim
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.size() + j]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("kernel serialization is infallible")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            dim: usize,
            norm: f64,
            #[serde(rename = "Q")]
            q: Vec<f64>,
        }
        let raw: Raw = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        Self::new(raw.dim, raw.norm, raw.q)
    }

    pub fn eval(&self, coords: &[f64]) -> Result<f64> {
        let n = self.size();
        if coords.len() != n {
            return Err(Error::InvalidParameter(format!(
                "expected {n} coordinates, got {}",
                coords.len()
            )));
        }
        Ok(self.norm * (-self.quadratic_form(coords)).exp())
    }

    fn quadratic_form(&self, v: &[f64]) -> f64 {
        let n = self.size();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += v[i] * self.q[i * n + j] * v[j];
            }
        }
        s
    }

    /// Exponent matrix of the diagonal K(x, x): M = Q_oo + Q_oi + Q_io + Q_ii.
    pub fn diagonal_form(&self) -> Vec<f64> {
        let d = self.dim;
        let n = self.size();
        let mut m = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                m[i * d + j] = self.q[i * n + j]
                    + self.q[i * n + j + d]
                    + self.q[(i + d) * n + j]
                    + self.q[(i + d) * n + j + d];
            }
        }
        m
    }

    /// ∫ K(x, x) dx.
    pub fn trace(&self) -> Result<f64> {
        let m = self.diagonal_form();
        let pi = std::f64::consts::PI;
        if self.dim == 1 {
            if !(m[0] > 0.0) {
                return Err(Error::DivergentMarginal(m[0]));
            }
            Ok(self.norm * (pi / m[0]).sqrt())
        } else {
            let det = m[0] * m[3] - m[1] * m[2];
            if !(m[0] > 0.0 && det > 0.0) {
                return Err(Error::DivergentMarginal(det));
            }
            Ok(self.norm * pi / det.sqrt())
        }
    }

    /// Applies the coordinate permutation `perm` (new index i takes old
    /// index perm[i]).
    fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.size();
        let mut q = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                q[i * n + j] = self.q[perm[i] * n + perm[j]];
            }
        }
        QuadraticKernel {
            dim: self.dim,
            norm: self.norm,
            q,
        }
    }

    /// Transpose on party A: x₁' ↔ x₁.
    pub fn partial_transpose(&self) -> Result<Self> {
        if self.dim != 2 {
            return Err(Error::InvalidParameter(
                "partial transpose needs a two-particle kernel".into(),
            ));
        }
        Ok(self.permuted(&[2, 1, 0, 3]))
    }

    /// K(x', x) ↦ K(x, x').
    pub fn swap_in_out(&self) -> Self {
        if self.dim == 1 {
            self.permuted(&[1, 0])
        } else {
            self.permuted(&[2, 3, 0, 1])
        }
    }

    /// Exchange of the two particles.
    pub fn swap_particles(&self) -> Result<Self> {
        if self.dim != 2 {
            return Err(Error::InvalidParameter(
                "particle exchange needs a two-particle kernel".into(),
            ));
        }
        Ok(self.permuted(&[1, 0, 3, 2]))
    }

    /// Whether K(x', x) = K(x, x') up to `tol` relative.
    pub fn is_symmetric_operator(&self, tol: f64) -> bool {
        let s = self.swap_in_out();
        let scale = self.q.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        self.q
            .iter()
            .zip(&s.q)
            .all(|(a, b)| (a - b).abs() <= tol * scale)
    }

    /// ρ_A = tr_B ρ via a Schur complement on the traced coordinate pair.
    pub fn reduce_substate(&self) -> Result<Self> {
        if self.dim != 2 {
            return Err(Error::InvalidParameter(
                "partial trace needs a two-particle kernel".into(),
            ));
        }
        let q = |i: usize, j: usize| self.at(i, j);
        // x₂' = x₂ = s: direction e = e₁ + e₃.
        let d = q(1, 1) + 2.0 * q(1, 3) + q(3, 3);
        if !(d > 0.0) {
            return Err(Error::DivergentMarginal(d));
        }
        let keep = [0usize, 2];
        let g: Vec<f64> = keep.iter().map(|&k| q(k, 1) + q(k, 3)).collect();
        let mut red = vec![0.0; 4];
        for (a, &ka) in keep.iter().enumerate() {
            for (b, &kb) in keep.iter().enumerate() {
                red[a * 2 + b] = q(ka, kb) - g[a] * g[b] / d;
            }
        }
        let norm = self.norm * (std::f64::consts::PI / d).sqrt();
        QuadraticKernel::new(1, norm, red)
    }

    /// α₁…α₆ read off a kernel with the thermal two-particle structure.
    pub fn alphas(&self) -> Result<Alphas> {
        if self.dim != 2 {
            return Err(Error::InvalidParameter(
                "alphas need a two-particle kernel".into(),
            ));
        }
        let q = |i: usize, j: usize| self.at(i, j);
        let scale = self.q.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let same = |a: f64, b: f64| (a - b).abs() <= 1e-12 * scale;
        if !(same(q(0, 0), q(1, 1))
            && same(q(2, 2), q(3, 3))
            && same(q(0, 2), q(1, 3))
            && same(q(1, 2), q(0, 3)))
        {
            return Err(Error::NonFactorizable);
        }
        Ok(Alphas {
            a1: q(0, 0),
            a2: q(2, 2),
            a3: -q(0, 1),
            a4: -q(2, 3),
            a5: -q(0, 2),
            a6: -q(0, 3),
        })
    }

    pub fn from_alphas(al: &Alphas, norm: f64) -> Result<Self> {
        let Alphas {
            a1,
            a2,
            a3,
            a4,
            a5,
            a6,
        } = *al;
        #[rustfmt::skip]
        let q = vec![
            a1,  -a3, -a5, -a6,
            -a3,  a1, -a6, -a5,
            -a5, -a6,  a2, -a4,
            -a6, -a5, -a4,  a2,
        ];
        Self::new(2, norm, q)
    }
}

/// B₁ (x²), B₂ (x'²) and B₃ (xx') of the one-particle substate, from the
/// two-particle coefficients directly.
pub fn substate_coefficients(al: &Alphas) -> Result<(f64, f64, f64)> {
    let Alphas {
        a1,
        a2,
        a3,
        a4,
        a5,
        a6,
    } = *al;
    let d = a1 + a2 - 2.0 * a5;
    if !(d > 0.0) {
        return Err(Error::DivergentMarginal(d));
    }
    let b1 = (a2 * d - (a4 + a6).powi(2)) / d;
    let b2 = (a1 * d - (a3 + a6).powi(2)) / d;
    let b3 = (a5 * d + (a3 + a6) * (a4 + a6)) / d;
    Ok((b1, b2, b3))
}

/// Thermal density of one mode,
/// ρ(x', x) = √(a₋/π) exp(−A x'² − (ω_i/2 sinh Γ)[(x² + x'²/b²) cosh Γ − 2xx'/b]).
pub fn thermal_rho_single(mt: &ModeThermo) -> QuadraticKernel {
    let (q00, q11, q01) = mode_coefficients(mt);
    QuadraticKernel {
        dim: 1,
        norm: (mt.a_minus / std::f64::consts::PI).sqrt(),
        q: vec![q00, q01, q01, q11],
    }
}

fn mode_coefficients(mt: &ModeThermo) -> (f64, f64, f64) {
    let half_coth = 0.5 * mt.omega_i * mt.coth_gamma;
    (
        mt.a_cap + half_coth * mt.inv_b * mt.inv_b,
        half_coth,
        -0.5 * mt.omega_i * mt.csch_gamma * mt.inv_b,
    )
}

/// Coefficients of the coupled thermal state assembled from its normal modes
/// y₁ = (x₁+x₂)/√2 (mode 1) and y₂ = (x₁−x₂)/√2 (mode 2).
pub fn coupled_alphas(mt1: &ModeThermo, mt2: &ModeThermo) -> Result<Alphas> {
    if (mt1.beta - mt2.beta).abs() > 1e-15 * mt1.beta.max(mt2.beta) {
        return Err(Error::InvalidParameter(format!(
            "modes evaluated at different beta ({} vs {})",
            mt1.beta, mt2.beta
        )));
    }
    let (o1, i1, x1) = mode_coefficients(mt1);
    let (o2, i2, x2) = mode_coefficients(mt2);
    Ok(Alphas {
        a1: 0.5 * (o1 + o2),
        a2: 0.5 * (i1 + i2),
        a3: 0.5 * (o2 - o1),
        a4: 0.5 * (i2 - i1),
        a5: -0.5 * (x1 + x2),
        a6: -0.5 * (x1 - x2),
    })
}

pub fn thermal_rho_coupled(mt1: &ModeThermo, mt2: &ModeThermo) -> Result<QuadraticKernel> {
    let al = coupled_alphas(mt1, mt2)?;
    QuadraticKernel::from_alphas(
        &al,
        (mt1.a_minus * mt2.a_minus).sqrt() / std::f64::consts::PI,
    )
}

/// Sudden-quench propagator of one oscillator at (possibly complex) time t.
///
/// At t = −iβ it equals Z(β)·ρ(x', x; β).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealTimeKernelParams {
    pub omega_i: f64,
    pub omega_f: f64,
    pub t: Complex64,
    pub b: Complex64,
    /// ḃ/b, the coefficient of the (i/2)x'² phase.
    pub bdot_over_b: Complex64,
    pub gamma: Complex64,
}

impl RealTimeKernelParams {
    pub fn new(omega_i: f64, omega_f: f64, t: f64) -> Result<Self> {
        let p = Self::at_complex_time(omega_i, omega_f, Complex64::new(t, 0.0))?;
        if p.gamma.re.sin().abs() < 1e-12 {
            let period = std::f64::consts::PI / omega_f;
            return Err(Error::Caustic {
                t,
                nearest: (t / period).round() * period,
            });
        }
        Ok(p)
    }

    pub fn euclidean(omega_i: f64, omega_f: f64, beta: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "beta must be positive, got {beta}"
            )));
        }
        Self::at_complex_time(omega_i, omega_f, Complex64::new(0.0, -beta))
    }

    pub fn at_complex_time(omega_i: f64, omega_f: f64, t: Complex64) -> Result<Self> {
        if !(omega_i > 0.0 && omega_f > 0.0) {
            return Err(Error::Domain("frequencies must be positive".into()));
        }
        let wf2 = omega_f * omega_f;
        let k = (wf2 - omega_i * omega_i) / (2.0 * wf2);
        let m = (wf2 + omega_i * omega_i) / (2.0 * wf2);
        let two_wt = 2.0 * omega_f * t;
        let b2 = k * two_wt.cos() + m;
        let b = b2.sqrt();
        let bdot_over_b = -omega_f * k * two_wt.sin() / b2;
        let theta = omega_f * t;
        let gamma = if t.im == 0.0 {
            Complex64::new(
                crate::ermakov::sudden_gamma_real(omega_i, omega_f, t.re),
                0.0,
            )
        } else {
            let lift = (theta.re / std::f64::consts::PI + 0.5).floor() * std::f64::consts::PI;
            (omega_i / omega_f * theta.tan()).atan() + lift
        };
        Ok(RealTimeKernelParams {
            omega_i,
            omega_f,
            t,
            b,
            bdot_over_b,
            gamma,
        })
    }
}

pub fn realtime_kernel_single(p: &RealTimeKernelParams, x: f64, xp: f64) -> Result<Complex64> {
    let sin_g = p.gamma.sin();
    if sin_g.norm() < 1e-12 {
        let period = std::f64::consts::PI / p.omega_f;
        return Err(Error::Caustic {
            t: p.t.re,
            nearest: (p.t.re / period).round() * period,
        });
    }
    let i = Complex64::i();
    let w0 = p.omega_i;
    let wp = w0 / (p.b * p.b);
    let pref = (w0 / (2.0 * std::f64::consts::PI * i * p.b * sin_g)).sqrt();
    let phase = 0.5 * i * p.bdot_over_b * xp * xp;
    let body = i / (2.0 * sin_g)
        * ((w0 * x * x + wp * xp * xp) * p.gamma.cos() - 2.0 * (w0 * wp).sqrt() * x * xp);
    Ok(pref * (phase + body).exp())
}
