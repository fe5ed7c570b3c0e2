//! Adaptive integration of the Ermakov equation
//!
//!   b̈ + ω²(t) b = ω²(0) / b³,   b(0) = 1, ḃ(0) = 0
//!
//! in real time, and of its Euclidean counterpart b'' − ω² b = −ω₀²/b³.
//! The phase Γ = ω(0) ∫ ds / b² is carried as a third state component so that
//! it inherits the step control of the scale factor and never needs branch
//! handling.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quench::ModeQuench;

/// Frequency protocol ω(t).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FrequencySchedule {
    Constant {
        omega: f64,
    },
    /// ω_i at t ≤ 0 and ω_f afterwards.
    Sudden {
        omega_i: f64,
        omega_f: f64,
    },
    /// ω(t) = ω_i + (ω_f − ω_i) sin(Ω t).
    Sinusoidal {
        omega_i: f64,
        omega_f: f64,
        big_omega: f64,
    },
    /// Piecewise-linear interpolation of strictly increasing samples.
    Tabulated {
        t: Vec<f64>,
        omega: Vec<f64>,
    },
}

impl FrequencySchedule {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )))
            }
        };
        match self {
            FrequencySchedule::Constant { omega } => positive("omega", *omega),
            FrequencySchedule::Sudden { omega_i, omega_f } => {
                positive("omega_i", *omega_i)?;
                positive("omega_f", *omega_f)
            }
            FrequencySchedule::Sinusoidal {
                omega_i,
                omega_f,
                big_omega,
            } => {
                positive("omega_i", *omega_i)?;
                if !omega_f.is_finite() || !big_omega.is_finite() {
                    return Err(Error::InvalidParameter(
                        "sinusoidal parameters must be finite".into(),
                    ));
                }
                Ok(())
            }
            FrequencySchedule::Tabulated { t, omega } => {
                if t.len() != omega.len() || t.len() < 2 {
                    return Err(Error::InvalidParameter(
                        "tabulated schedule needs at least two (t, omega) samples".into(),
                    ));
                }
                if t[0] > 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "tabulated schedule must cover t = 0 (first sample at {})",
                        t[0]
                    )));
                }
                for w in t.windows(2) {
                    if !(w[1] > w[0]) {
                        return Err(Error::InvalidParameter(format!(
                            "sample times must be strictly increasing ({} then {})",
                            w[0], w[1]
                        )));
                    }
                }
                for (ti, wi) in t.iter().zip(omega) {
                    if !(*wi > 0.0 && wi.is_finite()) {
                        return Err(Error::NonPositiveFrequency { t: *ti, omega: *wi });
                    }
                }
                Ok(())
            }
        }
    }

    /// ω(0), the frequency that fixes the Ermakov right-hand side.
    pub fn omega0(&self) -> f64 {
        self.omega_at(0.0)
    }

    pub fn omega_at(&self, t: f64) -> f64 {
        match self {
            FrequencySchedule::Constant { omega } => *omega,
            FrequencySchedule::Sudden { omega_i, omega_f } => {
                if t <= 0.0 {
                    *omega_i
                } else {
                    *omega_f
                }
            }
            FrequencySchedule::Sinusoidal {
                omega_i,
                omega_f,
                big_omega,
            } => omega_i + (omega_f - omega_i) * (big_omega * t).sin(),
            FrequencySchedule::Tabulated { t: ts, omega } => interpolate(ts, omega, t),
        }
    }

    /// Frequency used by the integrator: the right-sided limit, so a sudden
    /// quench acts with ω_f from t = 0⁺ on.
    fn omega_rhs(&self, t: f64) -> f64 {
        match self {
            FrequencySchedule::Sudden { omega_f, .. } => *omega_f,
            _ => self.omega_at(t),
        }
    }

    fn max_time(&self) -> f64 {
        match self {
            FrequencySchedule::Tabulated { t, .. } => *t.last().unwrap_or(&0.0),
            _ => f64::INFINITY,
        }
    }

    /// Reads a two-column `t,omega` table. A header line is accepted if its
    /// first field does not parse as a number.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let (mut t, mut omega) = (Vec::new(), Vec::new());
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Config(format!("schedule csv: {e}")))?;
            if rec.len() != 2 {
                return Err(Error::Config(format!(
                    "schedule csv line {}: expected 2 columns, found {}",
                    line + 1,
                    rec.len()
                )));
            }
            let parsed: std::result::Result<Vec<f64>, _> =
                rec.iter().map(str::parse::<f64>).collect();
            match parsed {
                Ok(v) => {
                    t.push(v[0]);
                    omega.push(v[1]);
                }
                Err(_) if line == 0 => continue,
                Err(e) => {
                    return Err(Error::Config(format!(
                        "schedule csv line {}: {e}",
                        line + 1
                    )));
                }
            }
        }
        let schedule = FrequencySchedule::Tabulated { t, omega };
        schedule.validate()?;
        Ok(schedule)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }
}

fn interpolate(ts: &[f64], ys: &[f64], t: f64) -> f64 {
    let n = ts.len();
    if t <= ts[0] {
        return ys[0];
    }
    if t >= ts[n - 1] {
        return ys[n - 1];
    }
    let i = ts.partition_point(|&s| s <= t) - 1;
    let w = (t - ts[i]) / (ts[i + 1] - ts[i]);
    ys[i] + w * (ys[i + 1] - ys[i])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeDomain {
    Real,
    Euclidean,
}

/// Accepted steps of an Ermakov integration with cubic Hermite dense output.
///
/// `tau` is ∫₀ᵗ ds / b², so the phase is Γ = `omega0`·τ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErmakovSolution {
    pub domain: TimeDomain,
    pub omega0: f64,
    pub tol: f64,
    pub max_step: f64,
    pub t: Vec<f64>,
    pub b: Vec<f64>,
    pub db: Vec<f64>,
    pub ddb: Vec<f64>,
    pub tau: Vec<f64>,
}

impl ErmakovSolution {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn t_end(&self) -> f64 {
        *self.t.last().unwrap_or(&0.0)
    }

    fn locate(&self, t: f64) -> Result<(usize, f64, f64)> {
        if !(t >= 0.0 && t <= self.t_end()) {
            return Err(Error::InvalidParameter(format!(
                "t = {t} outside the integrated range [0, {}]",
                self.t_end()
            )));
        }
        let i = self
            .t
            .partition_point(|&s| s <= t)
            .clamp(1, self.t.len() - 1)
            - 1;
        let h = self.t[i + 1] - self.t[i];
        Ok((i, h, (t - self.t[i]) / h))
    }

    /// Interpolated (b, ḃ) at arbitrary t in the integrated range.
    pub fn sample(&self, t: f64) -> Result<(f64, f64)> {
        let (i, h, s) = self.locate(t)?;
        let b = hermite(self.b[i], self.b[i + 1], self.db[i], self.db[i + 1], h, s);
        let db = hermite(
            self.db[i],
            self.db[i + 1],
            self.ddb[i],
            self.ddb[i + 1],
            h,
            s,
        );
        Ok((b, db))
    }

    /// Γ(t) = ω(0) τ(t), interpolated.
    pub fn gamma_at(&self, t: f64) -> Result<f64> {
        let (i, h, s) = self.locate(t)?;
        let d0 = 1.0 / (self.b[i] * self.b[i]);
        let d1 = 1.0 / (self.b[i + 1] * self.b[i + 1]);
        Ok(self.omega0 * hermite(self.tau[i], self.tau[i + 1], d0, d1, h, s))
    }
}

fn hermite(y0: f64, y1: f64, d0: f64, d1: f64, h: f64, s: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0
        + (s3 - 2.0 * s2 + s) * h * d0
        + (-2.0 * s3 + 3.0 * s2) * y1
        + (s3 - s2) * h * d1
}

/// Cumulative phase Γ at every accepted step.
pub fn gamma_phase(sol: &ErmakovSolution, omega_i: f64) -> Vec<(f64, f64)> {
    sol.t
        .iter()
        .zip(&sol.tau)
        .map(|(&t, &tau)| (t, omega_i * tau))
        .collect()
}

pub const TOL_RANGE: (f64, f64) = (1e-13, 1e-6);

/// Options for the Dormand–Prince integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    /// Largest accepted step; `None` means t_max / 16.
    pub max_step: Option<f64>,
    pub max_steps: usize,
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        SolverOptions {
            tol,
            max_step: None,
            max_steps: 2_000_000,
        }
    }
}

pub fn solve_real(schedule: &FrequencySchedule, t_max: f64, tol: f64) -> Result<ErmakovSolution> {
    solve_real_with(schedule, t_max, SolverOptions::with_tol(tol))
}

pub fn solve_real_with(
    schedule: &FrequencySchedule,
    t_max: f64,
    opts: SolverOptions,
) -> Result<ErmakovSolution> {
    schedule.validate()?;
    if t_max > schedule.max_time() {
        return Err(Error::InvalidParameter(format!(
            "t_max = {t_max} exceeds the last tabulated time {}",
            schedule.max_time()
        )));
    }
    let w0 = schedule.omega0();
    let w0sq = w0 * w0;
    let rhs = |t: f64, y: &[f64; 3]| -> Result<[f64; 3]> {
        let w = schedule.omega_rhs(t);
        if w < 0.0 {
            return Err(Error::NonPositiveFrequency { t, omega: w });
        }
        let b = y[0];
        Ok([y[1], -w * w * b + w0sq / (b * b * b), 1.0 / (b * b)])
    };
    integrate(rhs, t_max, opts, TimeDomain::Real, w0)
}

/// Euclidean Ermakov equation of a sudden mode, β ∈ [0, beta_max].
pub fn solve_euclidean(mode: &ModeQuench, beta_max: f64, tol: f64) -> Result<ErmakovSolution> {
    solve_euclidean_with(mode, beta_max, SolverOptions::with_tol(tol))
}

pub fn solve_euclidean_with(
    mode: &ModeQuench,
    beta_max: f64,
    opts: SolverOptions,
) -> Result<ErmakovSolution> {
    if let Some(beta_star) = mode.beta_star() {
        if beta_max >= beta_star * (1.0 - crate::quench::CROSSING_MARGIN) {
            return Err(Error::BeyondCrossing {
                beta: beta_max,
                beta_star,
            });
        }
    }
    let (wi, wf) = (mode.omega_i, mode.omega_f);
    let rhs = |beta: f64, y: &[f64; 3]| -> Result<[f64; 3]> {
        let b = y[0];
        if !(b > 0.0) {
            return Err(Error::Domain(format!(
                "scale factor reached zero at beta = {beta}"
            )));
        }
        Ok([y[1], wf * wf * b - wi * wi / (b * b * b), 1.0 / (b * b)])
    };
    integrate(rhs, beta_max, opts, TimeDomain::Euclidean, wi)
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn integrate<F>(
    rhs: F,
    t_max: f64,
    opts: SolverOptions,
    domain: TimeDomain,
    omega0: f64,
) -> Result<ErmakovSolution>
where
    F: Fn(f64, &[f64; 3]) -> Result<[f64; 3]>,
{
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "integration range must be positive, got {t_max}"
        )));
    }
    let tol = opts.tol;
    if !(tol >= TOL_RANGE.0 && tol <= TOL_RANGE.1) {
        return Err(Error::InvalidParameter(format!(
            "tolerance {tol} outside [{}, {}]",
            TOL_RANGE.0, TOL_RANGE.1
        )));
    }
    let max_step = opts.max_step.unwrap_or(t_max / 16.0);

    let mut t = 0.0;
    let mut y = [1.0, 0.0, 0.0];
    let mut k1 = rhs(t, &y)?;
    let mut sol = ErmakovSolution {
        domain,
        omega0,
        tol,
        max_step,
        t: vec![t],
        b: vec![y[0]],
        db: vec![y[1]],
        ddb: vec![k1[1]],
        tau: vec![y[2]],
    };

    let scale = k1[1].abs().max(omega0 * omega0).max(1.0);
    let mut h = (0.1 * tol.powf(0.2) / scale.sqrt()).min(max_step);
    let mut steps = 0usize;
    while t < t_max {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::Numerical(format!(
                "step budget exhausted at t = {t}"
            )));
        }
        let last = t + h >= t_max;
        if last {
            h = t_max - t;
        }
        if h <= 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { t });
        }

        let mut k = [[0.0; 3]; 7];
        k[0] = k1;
        for s in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    for c in 0..3 {
                        ys[c] += h * a * kj[c];
                    }
                }
            }
            k[s] = rhs(t + C[s] * h, &ys)?;
        }
        let mut y5 = y;
        let mut err = 0.0;
        for c in 0..3 {
            let mut d5 = 0.0;
            let mut d4 = 0.0;
            for s in 0..7 {
                d5 += B5[s] * k[s][c];
                d4 += B4[s] * k[s][c];
            }
            y5[c] += h * d5;
            let sc = tol * (1.0 + y[c].abs().max(y5[c].abs()));
            let e = h * (d5 - d4) / sc;
            err += e * e;
        }
        let err = (err / 3.0).sqrt();
        if !err.is_finite() {
            h *= 0.2;
            continue;
        }
        if err <= 1.0 {
            t = if last { t_max } else { t + h };
            y = y5;
            k1 = k[6];
            sol.t.push(t);
            sol.b.push(y[0]);
            sol.db.push(y[1]);
            sol.ddb.push(k1[1]);
            sol.tau.push(y[2]);
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h = (h * factor).min(max_step);
    }
    Ok(sol)
}

/// Real-time scale factor of a sudden quench:
/// b² = ((ω_f² − ω_i²) cos 2ω_f t + ω_f² + ω_i²) / 2ω_f².
pub fn sudden_b_real(omega_i: f64, omega_f: f64, t: f64) -> f64 {
    let wf2 = omega_f * omega_f;
    let wi2 = omega_i * omega_i;
    (((wf2 - wi2) * (2.0 * omega_f * t).cos() + wf2 + wi2) / (2.0 * wf2)).sqrt()
}

/// Real-time phase of a sudden quench, arctan(r tan ω_f t) lifted to the
/// continuous branch that follows ω_f t.
pub fn sudden_gamma_real(omega_i: f64, omega_f: f64, t: f64) -> f64 {
    let theta = omega_f * t;
    let principal = (omega_i / omega_f * theta.sin()).atan2(theta.cos());
    let tau = 2.0 * std::f64::consts::PI;
    principal + tau * ((theta - principal) / tau).round()
}
