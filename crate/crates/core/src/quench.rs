//! Sudden-quench parameters and the closed-form Euclidean quantities of a
//! single normal mode.
//!
//! Units are ħ = k_B = m = 1. A mode is described by its frequency at t = 0
//! (`omega_i`) and for t > 0 (`omega_f`). All thermal quantities are evaluated
//! at inverse temperature β through the Euclidean continuation t → -iβ of the
//! Ermakov scale factor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible inverse temperature.
pub const BETA_FLOOR: f64 = 1e-8;

/// Above this value of ω_f·β the scale factor is evaluated in log form.
pub const ASYMPTOTIC_THRESHOLD: f64 = 300.0;

/// Above this value of ω_f·β the scale factor itself overflows an f64.
pub const OVERFLOW_LIMIT: f64 = 700.0;

/// Relative margin kept below the b² = 0 crossing of a downward quench.
pub const CROSSING_MARGIN: f64 = 1e-6;

/// Spring and coupling constants before (t = 0) and after (t > 0) the quench.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuenchSpec {
    pub k0_i: f64,
    pub k0_f: f64,
    pub j_i: f64,
    pub j_f: f64,
}

impl QuenchSpec {
    pub fn new(k0_i: f64, k0_f: f64, j_i: f64, j_f: f64) -> Result<Self> {
        let spec = QuenchSpec {
            k0_i,
            k0_f,
            j_i,
            j_f,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Unquenched oscillators: the same constants before and after t = 0.
    pub fn constant(k0: f64, j: f64) -> Result<Self> {
        Self::new(k0, k0, j, j)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("k0_i", self.k0_i),
            ("k0_f", self.k0_f),
            ("j_i", self.j_i),
            ("j_f", self.j_f),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite, got {v}"
                )));
            }
        }
        if self.k0_i <= 0.0 || self.k0_f <= 0.0 {
            return Err(Error::Domain(format!(
                "spring constants must be positive (k0_i = {}, k0_f = {})",
                self.k0_i, self.k0_f
            )));
        }
        let r_i = self.k0_i + 2.0 * self.j_i;
        let r_f = self.k0_f + 2.0 * self.j_f;
        if r_i <= 0.0 || r_f <= 0.0 {
            return Err(Error::Domain(format!(
                "second normal mode is not oscillatory: omega_2^2 = ({r_i}, {r_f})"
            )));
        }
        Ok(())
    }

    pub fn is_constant(&self) -> bool {
        self.k0_i == self.k0_f && self.j_i == self.j_f
    }

    /// Normal-mode frequency pairs for y₁ = (x₁+x₂)/√2 and y₂ = (x₁−x₂)/√2.
    pub fn normal_modes(&self) -> Result<(ModeQuench, ModeQuench)> {
        self.validate()?;
        let m1 = ModeQuench::new(self.k0_i.sqrt(), self.k0_f.sqrt())?;
        let m2 = ModeQuench::new(
            (self.k0_i + 2.0 * self.j_i).sqrt(),
            (self.k0_f + 2.0 * self.j_f).sqrt(),
        )?;
        Ok((m1, m2))
    }
}

pub fn normal_modes(spec: &QuenchSpec) -> Result<(ModeQuench, ModeQuench)> {
    spec.normal_modes()
}

/// Frequencies of one normal mode before and after the quench.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeQuench {
    pub omega_i: f64,
    pub omega_f: f64,
}

impl ModeQuench {
    pub fn new(omega_i: f64, omega_f: f64) -> Result<Self> {
        if !(omega_i > 0.0 && omega_i.is_finite() && omega_f > 0.0 && omega_f.is_finite()) {
            return Err(Error::Domain(format!(
                "mode frequencies must be positive and finite (omega_i = {omega_i}, omega_f = {omega_f})"
            )));
        }
        Ok(ModeQuench { omega_i, omega_f })
    }

    pub fn constant(omega: f64) -> Result<Self> {
        Self::new(omega, omega)
    }

    pub fn is_constant(&self) -> bool {
        self.omega_i == self.omega_f
    }

    /// Inverse temperature at which b(β)² reaches zero. Only downward quenches
    /// (ω_f < ω_i) have one: cosh(2ω_f β*) = (ω_i² + ω_f²)/(ω_i² − ω_f²).
    pub fn beta_star(&self) -> Option<f64> {
        if self.omega_f >= self.omega_i {
            return None;
        }
        let (wi2, wf2) = (self.omega_i * self.omega_i, self.omega_f * self.omega_f);
        Some(((wi2 + wf2) / (wi2 - wf2)).acosh() / (2.0 * self.omega_f))
    }

    pub fn thermo(&self, beta: f64) -> Result<ModeThermo> {
        mode_thermo(self, beta)
    }
}

/// Temperature in energy units (k_B = 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Temperature(f64);

impl Temperature {
    pub fn new(t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "temperature must be positive, got {t}"
            )));
        }
        Ok(Temperature(t))
    }

    pub fn from_beta(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "beta must be positive, got {beta}"
            )));
        }
        Ok(Temperature(1.0 / beta))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn beta(self) -> f64 {
        1.0 / self.0
    }
}

/// Per-mode Euclidean quantities at a fixed β.
///
/// `a_plus` and `a_minus` are the Gaussian widths of the thermal kernel along
/// the anti-diagonal and diagonal directions; `xi` is the geometric ratio of
/// its eigenvalue ladder (1 − ξ)ξⁿ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeThermo {
    pub omega_i: f64,
    pub omega_f: f64,
    pub beta: f64,
    /// Euclidean Ermakov scale factor b(β).
    pub b: f64,
    /// ln b(β), finite even where `b` itself is huge.
    pub ln_b: f64,
    /// 1/b(β).
    pub inv_b: f64,
    /// Euclidean phase Γ_E(β) = ω_i ∫₀^β dβ'/b².
    pub gamma_e: f64,
    pub coth_gamma: f64,
    pub csch_gamma: f64,
    /// Coefficient A = ½ (db/dβ)/b of the x'² prefactor.
    pub a_cap: f64,
    pub a_plus: f64,
    pub a_minus: f64,
    pub xi: f64,
    /// ε = √(a₊ a₋).
    pub eps: f64,
}

/// Closed-form Euclidean quantities of one mode.
///
/// The scale factor is written as b² = 1 + 2k sinh²(ω_f β) with
/// k = (ω_f² − ω_i²)/(2ω_f²), which is the cosh form rearranged so that the
/// small-β and constant-frequency limits do not cancel.
pub fn mode_thermo(mode: &ModeQuench, beta: f64) -> Result<ModeThermo> {
    if !beta.is_finite() || beta <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "beta must be positive, got {beta}"
        )));
    }
    if beta < BETA_FLOOR {
        return Err(Error::BetaFloor {
            beta,
            floor: BETA_FLOOR,
        });
    }
    let ModeQuench {
        omega_i: wi,
        omega_f: wf,
    } = *mode;
    if let Some(beta_star) = mode.beta_star() {
        if beta >= beta_star * (1.0 - CROSSING_MARGIN) {
            return Err(Error::BeyondCrossing { beta, beta_star });
        }
    }

    let x = wf * beta;
    let k = (wf * wf - wi * wi) / (2.0 * wf * wf);
    let lead = (wf * wf - wi * wi) / (4.0 * wf);

    let (ln_b, a_cap) = if k == 0.0 {
        (0.0, 0.0)
    } else if x <= ASYMPTOTIC_THRESHOLD {
        let s = x.sinh();
        let b2 = 1.0 + 2.0 * k * s * s;
        if b2 <= 0.0 {
            return Err(Error::Domain(format!("b^2 = {b2} <= 0 at beta = {beta}")));
        }
        (0.5 * b2.ln(), lead * 2.0 * s * x.cosh() / b2)
    } else {
        if x > OVERFLOW_LIMIT {
            return Err(Error::Overflow(format!(
                "omega_f * beta = {x} exceeds {OVERFLOW_LIMIT}; b(beta) is not representable"
            )));
        }
        // k > 0 here: downward quenches cross b² = 0 long before this branch.
        let tail = (1.0 - k) * (-2.0 * x).exp();
        (x + 0.5 * (0.5 * k + tail).ln(), lead / (k + 2.0 * tail))
    };
    let b = ln_b.exp();
    let inv_b = (-ln_b).exp();

    let gamma_e = euclidean_phase(wi, wf, beta)?;
    let coth_gamma = 1.0 / gamma_e.tanh();
    let csch_gamma = 1.0 / gamma_e.sinh();
    let half_tanh = (0.5 * gamma_e).tanh();

    // a± = A + (ω_i / 2 sinh Γ)[(1 + 1/b²) cosh Γ ± 2/b], regrouped around
    // cosh Γ − 1 = sinh Γ · tanh(Γ/2).
    let common = a_cap + 0.5 * wi * (1.0 + inv_b * inv_b) * half_tanh;
    let a_plus = common + 0.5 * wi * csch_gamma * (1.0 + inv_b).powi(2);
    let a_minus = common + 0.5 * wi * csch_gamma * (1.0 - inv_b).powi(2);
    if !(a_minus > 0.0 && a_plus >= a_minus) {
        return Err(Error::Numerical(format!(
            "width ordering violated: a_plus = {a_plus}, a_minus = {a_minus}"
        )));
    }
    // a₊ − a₋ = 2ω_i / (b sinh Γ) exactly.
    let diff = 2.0 * wi * csch_gamma * inv_b;
    let root_sum = a_plus.sqrt() + a_minus.sqrt();
    let xi = diff / (root_sum * root_sum);
    let eps = (a_plus * a_minus).sqrt();

    Ok(ModeThermo {
        omega_i: wi,
        omega_f: wf,
        beta,
        b,
        ln_b,
        inv_b,
        gamma_e,
        coth_gamma,
        csch_gamma,
        a_cap,
        a_plus,
        a_minus,
        xi,
        eps,
    })
}

/// Γ_E(β) = artanh((ω_i/ω_f) tanh(ω_f β)), evaluated without cancellation
/// when the argument approaches one.
fn euclidean_phase(wi: f64, wf: f64, beta: f64) -> Result<f64> {
    let x = wf * beta;
    if wi == wf {
        return Ok(x);
    }
    let r = wi / wf;
    let z = r * x.tanh();
    if z < 0.5 {
        return Ok(z.atanh());
    }
    // 1 − r·tanh x = (1 − r) + r(1 − tanh x), 1 − tanh x = 2/(e^{2x} + 1).
    let one_minus_t = 2.0 / ((2.0 * x).exp() + 1.0);
    let denom = (1.0 - r) + r * one_minus_t;
    if denom <= 0.0 {
        return Err(Error::Domain(format!(
            "|(omega_i/omega_f) tanh(omega_f beta)| >= 1 at beta = {beta}"
        )));
    }
    Ok(0.5 * (z.ln_1p() - denom.ln()))
}

impl ModeThermo {
    /// tr ρ₀² = √(a₋/a₊).
    pub fn purity(&self) -> f64 {
        (self.a_minus / self.a_plus).sqrt()
    }

    pub fn ln_partition(&self) -> f64 {
        let ln_sinh = if self.gamma_e > 20.0 {
            self.gamma_e - std::f64::consts::LN_2 + (-(-2.0 * self.gamma_e).exp()).ln_1p()
        } else {
            self.gamma_e.sinh().ln()
        };
        let tau = 2.0 * std::f64::consts::PI;
        0.5 * (self.omega_i.ln() - tau.ln() - self.ln_b - ln_sinh)
            + 0.5 * (std::f64::consts::PI.ln() - self.a_minus.ln())
    }

    /// Z = √(ω_i / (2π b sinh Γ_E)) · √(π / a₋).
    pub fn partition(&self) -> f64 {
        self.ln_partition().exp()
    }

    /// Eigenvalue λ_n = (1 − ξ)ξⁿ of the single-mode thermal state.
    pub fn eigenvalue(&self, n: u32) -> f64 {
        (1.0 - self.xi) * self.xi.powi(n as i32)
    }
}

pub fn purity_single(mt: &ModeThermo) -> f64 {
    mt.purity()
}

pub fn partition_single(mt: &ModeThermo) -> f64 {
    mt.partition()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn normal_mode_frequencies() {
        let (m1, m2) = QuenchSpec::new(1.0, 1.0, 1.0, 1.0)
            .unwrap()
            .normal_modes()
            .unwrap();
        assert_eq!((m1.omega_i, m1.omega_f), (1.0, 1.0));
        assert_relative_eq!(m2.omega_i, 3f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(m2.omega_f, 3f64.sqrt(), epsilon = 1e-15);

        let (m1, m2) = QuenchSpec::new(3.0, 6.0, 3.0, 6.0)
            .unwrap()
            .normal_modes()
            .unwrap();
        assert_relative_eq!(m1.omega_i, 3f64.sqrt());
        assert_relative_eq!(m1.omega_f, 6f64.sqrt());
        assert_relative_eq!(m2.omega_i, 3.0);
        assert_relative_eq!(m2.omega_f, 18f64.sqrt());

        let (_, m2) = QuenchSpec::new(1.0, 1.0, -0.45, -0.45)
            .unwrap()
            .normal_modes()
            .unwrap();
        assert_relative_eq!(m2.omega_i, 0.1f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn rejects_non_oscillatory_modes() {
        assert!(matches!(
            QuenchSpec::new(1.0, 1.0, -0.6, 0.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            QuenchSpec::new(1.0, 1.0, 0.0, -0.5),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            QuenchSpec::new(0.0, 1.0, 0.0, 0.0),
            Err(Error::Domain(_))
        ));
        assert!(QuenchSpec::new(f64::NAN, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn quench_3_to_5_at_half() {
        // 40-digit evaluation of the closed forms.
        let mt = mode_thermo(&ModeQuench::new(3.0, 5.0).unwrap(), 0.5).unwrap();
        assert_relative_eq!(mt.b, 4.942386420337053, max_relative = 1e-14);
        assert_relative_eq!(mt.gamma_e, 0.6806912226853479, max_relative = 1e-14);
        assert_relative_eq!(mt.a_cap, 2.430184732282001, max_relative = 1e-14);
    }

    #[test]
    fn constant_frequency_closed_forms() {
        let mt = mode_thermo(&ModeQuench::constant(2.0).unwrap(), 1.0).unwrap();
        assert_eq!(mt.b, 1.0);
        assert_eq!(mt.gamma_e, 2.0);
        assert_eq!(mt.a_cap, 0.0);
        assert_relative_eq!(mt.a_plus, 2.0 / 1f64.tanh(), max_relative = 1e-14);
        assert_relative_eq!(mt.a_minus, 2.0 * 1f64.tanh(), max_relative = 1e-14);
        assert_relative_eq!(mt.xi, (-2f64).exp(), max_relative = 1e-14);

        let mt = mode_thermo(&ModeQuench::constant(1.0).unwrap(), 1.0).unwrap();
        assert_relative_eq!(mt.purity(), 0.5f64.tanh(), max_relative = 1e-14);
    }

    #[test]
    fn small_beta_limit() {
        let mt = mode_thermo(&ModeQuench::new(3.0, 5.0).unwrap(), 1e-8).unwrap();
        assert!((mt.b - 1.0).abs() < 1e-14);
        assert!(mt.gamma_e < 3.1e-8);
        assert!(mt.a_cap.abs() < 1e-6);
        assert!(mt.purity() < 1e-7);
        assert!(matches!(
            mode_thermo(&ModeQuench::new(3.0, 5.0).unwrap(), 1e-9),
            Err(Error::BetaFloor { .. })
        ));
    }

    #[test]
    fn partition_function_constant_frequency() {
        for &(w, beta) in &[(1.0, 1.0), (2.5, 0.3), (0.7, 4.0)] {
            let mt = mode_thermo(&ModeQuench::constant(w).unwrap(), beta).unwrap();
            let oracle = 1.0 / (2.0 * (0.5 * w * beta).sinh());
            assert_relative_eq!(mt.partition(), oracle, max_relative = 1e-13);
        }
        let mt = mode_thermo(&ModeQuench::constant(1.0).unwrap(), 1.0).unwrap();
        assert_relative_eq!(mt.partition(), 0.9595173756674719, max_relative = 1e-13);
        // ground-state dominance
        let mt = mode_thermo(&ModeQuench::constant(1.0).unwrap(), 60.0).unwrap();
        assert_relative_eq!(mt.partition(), (-30f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn downward_quench_domain() {
        let mode = ModeQuench::new(5.0, 3.0).unwrap();
        let beta_star = mode.beta_star().unwrap();
        assert_relative_eq!(
            (2.0 * 3.0 * beta_star).cosh(),
            34.0 / 16.0,
            max_relative = 1e-14
        );
        assert!(mode_thermo(&mode, 0.5 * beta_star).is_ok());
        match mode_thermo(&mode, 1.01 * beta_star) {
            Err(Error::BeyondCrossing { beta_star: bs, .. }) => assert_eq!(bs, beta_star),
            other => panic!("expected crossing error, got {other:?}"),
        }
        assert!(ModeQuench::new(3.0, 5.0).unwrap().beta_star().is_none());
    }

    #[test]
    fn asymptotic_branch_is_continuous() {
        let mode = ModeQuench::new(3.0, 5.0).unwrap();
        let below = mode_thermo(&mode, (ASYMPTOTIC_THRESHOLD - 1e-9) / 5.0).unwrap();
        let above = mode_thermo(&mode, (ASYMPTOTIC_THRESHOLD + 1e-9) / 5.0).unwrap();
        assert_relative_eq!(below.ln_b, above.ln_b, max_relative = 1e-11);
        assert_relative_eq!(below.a_cap, above.a_cap, max_relative = 1e-11);
        assert_relative_eq!(below.a_plus, above.a_plus, max_relative = 1e-11);
        assert!(matches!(mode_thermo(&mode, 150.0), Err(Error::Overflow(_))));
        // no overflow guard without a quench
        assert!(mode_thermo(&ModeQuench::constant(5.0).unwrap(), 150.0).is_ok());
    }

    #[test]
    fn identical_inputs_identical_outputs() {
        let mode = ModeQuench::new(1.3, 4.1).unwrap();
        let a = mode_thermo(&mode, 0.77).unwrap();
        let b = mode_thermo(&mode, 0.77).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }

    #[test]
    fn purity_monotone_in_quench_and_temperature() {
        let temps: Vec<f64> = (0..100)
            .map(|i| 0.05 * (400f64).powf(i as f64 / 99.0))
            .collect();
        let mut previous_column: Option<Vec<f64>> = None;
        for wf in [3.0, 5.0, 7.0] {
            let mode = ModeQuench::new(3.0, wf).unwrap();
            let column: Vec<f64> = temps
                .iter()
                .map(|t| mode_thermo(&mode, 1.0 / t).unwrap().purity())
                .collect();
            for w in column.windows(2) {
                assert!(w[1] <= w[0], "purity increased with temperature");
            }
            if let Some(prev) = &previous_column {
                for (p, q) in prev.iter().zip(&column) {
                    assert!(q >= p, "purity decreased with quench size");
                }
            }
            previous_column = Some(column);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn width_and_ratio_invariants(wi in 0.1f64..10.0, ratio in 1.0f64..4.0, beta in 1e-3f64..20.0) {
                let mode = ModeQuench::new(wi, wi * ratio).unwrap();
                let mt = mode_thermo(&mode, beta).unwrap();
                prop_assert!(mt.a_plus >= mt.a_minus && mt.a_minus > 0.0);
                if mt.xi > 1e-15 { prop_assert!(mt.a_plus > mt.a_minus); }
                prop_assert!(mt.xi >= 0.0 && mt.xi < 1.0);
                let p = mt.purity();
                prop_assert!((mt.xi - (1.0 - p) / (1.0 + p)).abs() < 1e-12);
                let rp = mt.a_plus.sqrt();
                let rm = mt.a_minus.sqrt();
                prop_assert!((mt.xi - (rp - rm) / (rp + rm)).abs() < 1e-12);
                prop_assert!((mt.eps * mt.eps / (mt.a_plus * mt.a_minus) - 1.0).abs() < 1e-12);
                prop_assert!(mt.b >= 1.0);
            }

            #[test]
            fn constant_frequency_reduction(w in 0.05f64..10.0, beta in 1e-3f64..30.0) {
                prop_assume!(w * beta <= 300.0);
                let mt = mode_thermo(&ModeQuench::constant(w).unwrap(), beta).unwrap();
                prop_assert_eq!(mt.b, 1.0);
                prop_assert_eq!(mt.a_cap, 0.0);
                prop_assert!((mt.gamma_e - w * beta).abs() <= 1e-15 * w * beta);
            }
        }
    }
}
