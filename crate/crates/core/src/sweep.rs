//! Temperature sweeps, figure presets and CSV output.

use std::fmt;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::thermal_rho_coupled;
use crate::negativity::{
    boundary_g, critical_temperature, negativity_ground, pt_moments, separable_xy,
    sqm_critical_temperature, TcMethod,
};
use crate::quench::{mode_thermo, ModeQuench, QuenchSpec};
use crate::spectra::{entropies, mutual_information, purity_coupled, von_neumann_mode};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const A_CONVENTION: &str =
    "A = (omega_f^2 - omega_i^2) sinh(2 omega_f beta) / (4 omega_f b^2)";
/// Absolute T tolerance for the per-config critical temperature.
pub const TC_TOL: f64 = 1e-6;

pub const PRESET_T_MIN: f64 = 0.05;
pub const PRESET_T_MAX: f64 = 20.0;
pub const PRESET_T_POINTS: usize = 400;

pub const FIGURES: [&str; 11] = [
    "fig1a", "fig1b", "fig2a", "fig2b", "fig2c", "fig3a", "fig3b", "fig4a", "fig4b", "fig5a", "fig5b",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Linear,
    #[default]
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Observable {
    Purity,
    Renyi(f64),
    VonNeumann,
    MutualInfo,
    Negativity,
    Tc,
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observable::Purity => f.write_str("purity"),
            Observable::Renyi(a) => write!(f, "renyi:{a}"),
            Observable::VonNeumann => f.write_str("von_neumann"),
            Observable::MutualInfo => f.write_str("mutual_info"),
            Observable::Negativity => f.write_str("negativity"),
            Observable::Tc => f.write_str("tc"),
        }
    }
}

impl std::str::FromStr for Observable {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "purity" => Observable::Purity,
            "von_neumann" => Observable::VonNeumann,
            "mutual_info" => Observable::MutualInfo,
            "negativity" => Observable::Negativity,
            "tc" => Observable::Tc,
            _ => {
                let alpha = s
                    .strip_prefix("renyi:")
                    .and_then(|a| a.parse::<f64>().ok())
                    .ok_or_else(|| Error::Config(format!("unknown observable '{s}'")))?;
                if !(alpha > 0.0 && alpha.is_finite()) {
                    return Err(Error::Config(format!("Renyi order must be positive in '{s}'")));
                }
                Observable::Renyi(alpha)
            }
        })
    }
}

impl TryFrom<String> for Observable {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Observable> for String {
    fn from(o: Observable) -> String {
        o.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub quench: QuenchSpec,
    pub t_min: f64,
    pub t_max: f64,
    pub t_points: usize,
    #[serde(default)]
    pub scale: Scale,
    pub observables: Vec<Observable>,
    /// Worker count; 0 picks the rayon default. Not echoed into output,
    /// which must not depend on it.
    #[serde(default, skip_serializing)]
    pub threads: usize,
}

impl SweepConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: SweepConfig = serde_json::from_str(s).map_err(|e| {
            Error::Config(format!("{e} (line {}, column {})", e.line(), e.column()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_min > 0.0 && self.t_min < self.t_max && self.t_max.is_finite()) {
            return Err(Error::Config(format!(
                "need 0 < t_min < t_max (got {} and {})",
                self.t_min, self.t_max
            )));
        }
        if self.t_points < 2 {
            return Err(Error::Config(format!("t_points must be at least 2, got {}", self.t_points)));
        }
        if self.observables.is_empty() {
            return Err(Error::Config("observables must not be empty".into()));
        }
        self.quench.validate().map_err(|e| Error::Config(format!("quench: {e}")))
    }

    /// Temperatures with both endpoints included.
    pub fn temperatures(&self) -> Vec<f64> {
        grid(self.t_min, self.t_max, self.t_points, self.scale)
    }
}

pub fn grid(lo: f64, hi: f64, n: usize, scale: Scale) -> Vec<f64> {
    let last = (n - 1) as f64;
    (0..n)
        .map(|i| {
            if i == 0 {
                return lo;
            }
            if i + 1 == n {
                return hi;
            }
            let s = i as f64 / last;
            match scale {
                Scale::Linear => lo + (hi - lo) * s,
                Scale::Log => (lo.ln() + (hi.ln() - lo.ln()) * s).exp(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub t: f64,
    pub beta: f64,
    /// One entry per observable; `None` when the point failed.
    pub values: Vec<Option<f64>>,
    /// `observable:code` for each failure.
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// True when no row produced a single value.
    pub fn all_failed(&self) -> bool {
        self.rows.iter().all(|r| {
            r.values
                .iter()
                .zip(&self.config.observables)
                .all(|(v, o)| v.is_none() || *o == Observable::Tc)
        })
    }

    pub fn column(&self, obs: Observable) -> Option<Vec<Option<f64>>> {
        let idx = self.config.observables.iter().position(|o| *o == obs)?;
        Some(self.rows.iter().map(|r| r.values[idx]).collect())
    }

    pub fn to_table(&self, name: &str) -> Table {
        let mut columns = vec!["T".to_string(), "beta".to_string()];
        columns.extend(self.config.observables.iter().map(|o| o.to_string()));
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut v = vec![Some(r.t), Some(r.beta)];
                v.extend(r.values.iter().copied());
                v
            })
            .collect();
        let config = serde_json::to_string(&self.config).expect("config serializes");
        Table {
            name: name.to_string(),
            notes: vec![format!("config: {config}")],
            columns,
            rows,
            flags: Some(self.rows.iter().map(|r| r.flags.join(";")).collect()),
        }
    }
}

/// Critical temperature of a configuration: closed form for constant
/// frequencies, sign change of the moment ratios otherwise.
pub fn config_tc(spec: &QuenchSpec) -> Result<f64> {
    if spec.is_constant() {
        let (m1, m2) = spec.normal_modes()?;
        critical_temperature(m1.omega_i, m2.omega_i, TcMethod::Exact, 1e-12)
    } else {
        sqm_critical_temperature(spec, TC_TOL)
    }
}

fn eval_point(
    modes: &(ModeQuench, ModeQuench),
    t: f64,
    observables: &[Observable],
    tc: &Option<Result<f64>>,
) -> SweepRow {
    let beta = 1.0 / t;
    let mut values = vec![None; observables.len()];
    let mut flags = Vec::new();
    let thermo = mode_thermo(&modes.0, beta).and_then(|a| Ok((a, mode_thermo(&modes.1, beta)?)));
    for (slot, obs) in values.iter_mut().zip(observables) {
        let value = match (obs, &thermo) {
            (Observable::Tc, _) => match tc {
                Some(Ok(v)) => Ok(*v),
                Some(Err(e)) => Err(e.clone()),
                None => unreachable!("tc computed whenever requested"),
            },
            (_, Err(e)) => Err(e.clone()),
            (Observable::Purity, Ok((a, b))) => Ok(purity_coupled(a, b)),
            (Observable::Renyi(alpha), Ok((a, b))) => entropies(a.xi, b.xi, *alpha).map(|p| p.total),
            (Observable::VonNeumann, Ok((a, b))) => entropies(a.xi, b.xi, 1.0).map(|p| p.total),
            (Observable::MutualInfo, Ok((a, b))) => thermal_rho_coupled(a, b).and_then(|r| mutual_information(&r)),
            (Observable::Negativity, Ok((a, b))) => thermal_rho_coupled(a, b)
                .and_then(|r| r.partial_transpose())
                .and_then(|s| pt_moments(&s))
                .and_then(|m| m.negativity()),
        };
        match value {
            Ok(v) => *slot = Some(v),
            Err(e) => flags.push(format!("{obs}:{}", e.code())),
        }
    }
    SweepRow { t, beta, values, flags }
}

/// Evaluates every grid point independently. Row order and values do not
/// depend on the worker count.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let modes = cfg.quench.normal_modes()?;
    let tc = cfg.observables.contains(&Observable::Tc).then(|| config_tc(&cfg.quench));
    let temps = cfg.temperatures();
    let work = || -> Vec<SweepRow> {
        temps.par_iter().map(|&t| eval_point(&modes, t, &cfg.observables, &tc)).collect()
    };
    let rows = if cfg.threads == 0 {
        work()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(work)
    };
    let failed = rows.iter().filter(|r| !r.flags.is_empty()).count();
    if failed > 0 {
        log::warn!("{failed} of {} sweep points carry failure flags", rows.len());
    }
    Ok(SweepResult { config: cfg.clone(), rows })
}

/// A named block of numbers destined for one CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub notes: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
    pub flags: Option<Vec<String>>,
}

/// Formats with 12 significant digits, dropping trailing zeros.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.11e}");
    let (mant, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let s = format!("{:.*}", (11 - exp) as usize, x);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let m = if mant.contains('.') { mant.trim_end_matches('0').trim_end_matches('.') } else { mant };
        format!("{m}e{exp}")
    }
}

impl Table {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# quench-thermo {VERSION}")?;
        writeln!(out, "# {A_CONVENTION}")?;
        for n in &self.notes {
            writeln!(out, "# {n}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        let mut header = self.columns.clone();
        if self.flags.is_some() {
            header.push("flags".into());
        }
        w.write_record(&header).map_err(|e| Error::Io(e.to_string()))?;
        for (i, row) in self.rows.iter().enumerate() {
            let mut rec: Vec<String> = row.iter().map(|v| v.map(format_sig).unwrap_or_default()).collect();
            if let Some(f) = &self.flags {
                rec.push(f[i].clone());
            }
            w.write_record(&rec).map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("CSV output is UTF-8")
    }

    pub fn write_file(&self, dir: &Path) -> Result<std::path::PathBuf> {
        let path = dir.join(format!("{}.csv", self.name));
        let file = std::fs::File::create(&path)?;
        self.write_csv(std::io::BufWriter::new(file))?;
        Ok(path)
    }
}

/// Columns (J, tc_exact, tc_approx) at constant frequency.
pub fn tc_table(k0: f64, j_min: f64, j_max: f64, points: usize) -> Result<Table> {
    if points < 2 || !(j_min < j_max) {
        return Err(Error::Config(format!("need j_min < j_max and points >= 2 (got {j_min}, {j_max}, {points})")));
    }
    let rows = grid(j_min, j_max, points, Scale::Linear)
        .into_par_iter()
        .map(|j| {
            let spec = QuenchSpec::constant(k0, j)?;
            let (m1, m2) = spec.normal_modes()?;
            let exact = critical_temperature(m1.omega_i, m2.omega_i, TcMethod::Exact, 1e-12)?;
            let approx = critical_temperature(m1.omega_i, m2.omega_i, TcMethod::Approx, 1e-12)?;
            Ok(vec![Some(j), Some(exact), Some(approx)])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Table {
        name: "tc".into(),
        notes: vec![format!("k0 = {k0}, J in [{j_min}, {j_max}], {points} points")],
        columns: vec!["J".into(), "tc_exact".into(), "tc_approx".into()],
        rows,
        flags: None,
    })
}

fn preset_config(quench: QuenchSpec, obs: Observable, threads: usize) -> SweepConfig {
    SweepConfig {
        quench,
        t_min: PRESET_T_MIN,
        t_max: PRESET_T_MAX,
        t_points: PRESET_T_POINTS,
        scale: Scale::Log,
        observables: vec![obs],
        threads,
    }
}

fn label(x: f64) -> String {
    let s = format_sig(x);
    match s.strip_prefix('-') {
        Some(rest) => format!("m{rest}"),
        None => s,
    }
}

const T_RANGE_NOTE: &str = "T range: log-spaced [0.05, 20], 400 points (preset default)";

fn single_oscillator(name: &str, vn: bool) -> Result<Vec<Table>> {
    let omega0 = 3.0;
    let temps = grid(PRESET_T_MIN, PRESET_T_MAX, PRESET_T_POINTS, Scale::Log);
    [3.0, 5.0, 7.0]
        .iter()
        .map(|&w| {
            let mode = ModeQuench::new(omega0, w)?;
            let rows = temps
                .iter()
                .map(|&t| {
                    let mt = mode_thermo(&mode, 1.0 / t)?;
                    let v = if vn { von_neumann_mode(mt.xi)? } else { mt.purity() };
                    Ok(vec![Some(t), Some(1.0 / t), Some(v)])
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Table {
                name: format!("{name}_omega{}", label(w)),
                notes: vec![format!("single oscillator, omega_i = {omega0}, omega_f = {w}"), T_RANGE_NOTE.into()],
                columns: vec!["T".into(), "beta".into(), if vn { "S_von" } else { "P0" }.into()],
                rows,
                flags: None,
            })
        })
        .collect()
}

fn sweep_curves(name: &str, curves: &[(String, QuenchSpec)], obs: Observable, threads: usize) -> Result<Vec<Table>> {
    curves
        .iter()
        .map(|(tag, q)| {
            let mut t = run_sweep(&preset_config(*q, obs, threads))?.to_table(&format!("{name}_{tag}"));
            t.notes.push(T_RANGE_NOTE.into());
            Ok(t)
        })
        .collect()
}

fn fig2_curves() -> Result<Vec<(String, QuenchSpec)>> {
    Ok(vec![
        ("kf6".into(), QuenchSpec::new(3.0, 6.0, 3.0, 6.0)?),
        ("kf9".into(), QuenchSpec::new(3.0, 9.0, 3.0, 9.0)?),
        ("const3".into(), QuenchSpec::constant(3.0, 3.0)?),
    ])
}

fn fig3_curves(js: [f64; 3]) -> Result<Vec<(String, QuenchSpec)>> {
    js.iter().map(|&j| Ok((format!("J{}", label(j)), QuenchSpec::constant(1.0, j)?))).collect()
}

fn fig4a() -> Result<Vec<Table>> {
    let xs = grid(0.05, 5.0, 200, Scale::Log);
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for &x in &xs {
        let y = x * boundary_g(x, 1e-13)?;
        upper.push(vec![Some(x), Some(y), Some(x / x.tanh())]);
        lower.push(vec![Some(y), Some(x)]);
    }
    lower.reverse();
    let cells = 100;
    let step = 4.0 / cells as f64;
    let mut mask = Vec::with_capacity(cells * cells);
    for i in 0..cells {
        for j in 0..cells {
            let (x, y) = ((i as f64 + 0.5) * step, (j as f64 + 0.5) * step);
            mask.push(vec![Some(x), Some(y), Some(if separable_xy(x, y) { 1.0 } else { 0.0 })]);
        }
    }
    Ok(vec![
        Table {
            name: "fig4a_upper".into(),
            notes: vec!["upper separability boundary y_c = x_c g(x_c) and the curve y = x coth x".into()],
            columns: vec!["x_c".into(), "y_c".into(), "y_dashed".into()],
            rows: upper,
            flags: None,
        },
        Table {
            name: "fig4a_lower".into(),
            notes: vec!["lower boundary, the mirror image x_c = y_c g(y_c)".into()],
            columns: vec!["x_c".into(), "y_c".into()],
            rows: lower,
            flags: None,
        },
        Table {
            name: "fig4a_mask".into(),
            notes: vec![format!("separable = 1 on a {cells} x {cells} grid of cell centres in [0, 4]^2")],
            columns: vec!["x".into(), "y".into(), "separable".into()],
            rows: mask,
            flags: None,
        },
    ])
}

fn fig5(name: &str, curves: Vec<(String, QuenchSpec)>, threads: usize) -> Result<Vec<Table>> {
    curves
        .into_iter()
        .map(|(tag, q)| {
            let res = run_sweep(&preset_config(q, Observable::Negativity, threads))?;
            let n_inf = negativity_ground(&q, 1.0 / PRESET_T_MIN)?;
            let mut t = res.to_table(&format!("{name}_{tag}"));
            t.columns.push("N_ratio".into());
            for row in &mut t.rows {
                let ratio = row[2].map(|n| n / n_inf);
                row.push(ratio);
            }
            t.notes.push(format!("N(inf) = {} (beta -> infinity limit)", format_sig(n_inf)));
            t.notes.push(T_RANGE_NOTE.into());
            Ok(t)
        })
        .collect()
}

/// The curves of one figure, with the parameter sets of its caption.
pub fn figure_preset(name: &str, threads: usize) -> Result<Vec<Table>> {
    match name {
        "fig1a" => single_oscillator(name, false),
        "fig1b" => single_oscillator(name, true),
        "fig2a" => sweep_curves(name, &fig2_curves()?, Observable::Purity, threads),
        "fig2b" => sweep_curves(name, &fig2_curves()?, Observable::VonNeumann, threads),
        "fig2c" => sweep_curves(name, &fig2_curves()?, Observable::MutualInfo, threads),
        "fig3a" => sweep_curves(name, &fig3_curves([1.0, 5.0, 10.0])?, Observable::Negativity, threads),
        "fig3b" => sweep_curves(name, &fig3_curves([-0.45, -0.35, -0.2])?, Observable::Negativity, threads),
        "fig4a" => fig4a(),
        "fig4b" => {
            let mut t = tc_table(1.0, -0.45, 10.0, 400)?;
            t.name = "fig4b".into();
            Ok(vec![t])
        }
        "fig5a" => fig5(
            name,
            [1.0, 20.0, 40.0]
                .iter()
                .map(|&k| Ok((format!("kf{}", label(k)), QuenchSpec::new(1.0, k, 5.0, 5.0)?)))
                .collect::<Result<_>>()?,
            threads,
        ),
        "fig5b" => fig5(
            name,
            [5.0, 25.0, 45.0]
                .iter()
                .map(|&j| Ok((format!("Jf{}", label(j)), QuenchSpec::new(1.0, 1.0, 5.0, j)?)))
                .collect::<Result<_>>()?,
            threads,
        ),
        _ => Err(Error::Config(format!("unknown figure '{name}'; expected one of {}", FIGURES.join(", ")))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
    /// (omega_i, omega_f) per normal mode when the quench is valid.
    pub modes: Option<[(f64, f64); 2]>,
}

/// Structural and physical checks of a config file, without running it.
pub fn validate_config(path: &Path) -> ValidationReport {
    let mut report = ValidationReport { valid: false, errors: Vec::new(), warnings: Vec::new(), modes: None };
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            report.errors.push(format!("cannot read {}: {e}", path.display()));
            return report;
        }
    };
    let cfg: SweepConfig = match serde_json::from_str(&text) {
        Ok(c) => c,
        Err(e) => {
            report.errors.push(format!("{e} (line {}, column {})", e.line(), e.column()));
            return report;
        }
    };
    if let Err(e) = cfg.validate() {
        report.errors.push(e.to_string());
    }
    if let Ok((m1, m2)) = cfg.quench.normal_modes() {
        report.modes = Some([(m1.omega_i, m1.omega_f), (m2.omega_i, m2.omega_f)]);
        for (i, m) in [m1, m2].iter().enumerate() {
            if let Some(bs) = m.beta_star() {
                let note = if 1.0 / cfg.t_min >= bs {
                    format!("; temperatures below T* = {} will be flagged", format_sig(1.0 / bs))
                } else {
                    String::new()
                };
                report.warnings.push(format!(
                    "mode {} is a downward quench with beta* = {}{note}",
                    i + 1,
                    format_sig(bs)
                ));
            }
        }
    }
    report.valid = report.errors.is_empty();
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(q: QuenchSpec, obs: &[&str], lo: f64, hi: f64, n: usize) -> SweepConfig {
        SweepConfig {
            quench: q,
            t_min: lo,
            t_max: hi,
            t_points: n,
            scale: Scale::Linear,
            observables: obs.iter().map(|o| o.parse().unwrap()).collect(),
            threads: 0,
        }
    }

    #[test]
    fn observable_names_round_trip() {
        for s in ["purity", "renyi:2", "renyi:0.5", "von_neumann", "mutual_info", "negativity", "tc"] {
            let o: Observable = s.parse().unwrap();
            assert_eq!(o.to_string(), s);
        }
        assert!("renyi:-1".parse::<Observable>().is_err());
        assert!("entropy".parse::<Observable>().is_err());
    }

    #[test]
    fn config_parsing() {
        let json = r#"{"quench": {"k0_i": 3, "k0_f": 6, "j_i": 3, "j_f": 6},
            "t_min": 0.1, "t_max": 10, "t_points": 5, "scale": "log",
            "observables": ["purity", "renyi:2"], "threads": 2}"#;
        let c = SweepConfig::from_json(json).unwrap();
        assert_eq!(c.t_points, 5);
        let t = c.temperatures();
        assert_eq!((t[0], t[4]), (0.1, 10.0));
        assert!((t[2] - 1.0).abs() < 1e-14);
        let bad = json.replace("\"threads\": 2", "\"threads\": 2, \"extra\": 1");
        assert!(matches!(SweepConfig::from_json(&bad), Err(Error::Config(_))));
        let bad = json.replace("\"t_min\": 0.1", "\"t_min\": 20");
        assert!(SweepConfig::from_json(&bad).is_err());
        let bad = json.replace("[\"purity\", \"renyi:2\"]", "[]");
        assert!(SweepConfig::from_json(&bad).is_err());
    }

    #[test]
    fn significant_digits() {
        assert_eq!(format_sig(0.5), "0.5");
        assert_eq!(format_sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_sig(123456.789), "123456.789");
        assert_eq!(format_sig(2.0f64.sqrt() * 1e-9), "1.41421356237e-9");
        assert_eq!(format_sig(9.9999999999996), "10");
        assert_eq!(format_sig(-0.25), "-0.25");
    }

    #[test]
    fn negativity_vanishes_above_tc() {
        let r = run_sweep(&cfg(QuenchSpec::constant(1.0, 1.0).unwrap(), &["negativity", "tc"], 0.5, 1.0, 51)).unwrap();
        let tc = r.rows[0].values[1].unwrap();
        assert!((tc - 0.6339013112389609).abs() < 1e-9);
        for row in &r.rows {
            let n = row.values[0].unwrap();
            if row.t >= tc {
                assert_eq!(n, 0.0);
            } else {
                assert!(n > 0.0);
            }
        }
    }

    #[test]
    fn purity_decreases_with_temperature() {
        let r = run_sweep(&cfg(QuenchSpec::new(3.0, 6.0, 3.0, 6.0).unwrap(), &["purity"], 0.05, 20.0, 200)).unwrap();
        let p: Vec<f64> = r.column(Observable::Purity).unwrap().into_iter().map(Option::unwrap).collect();
        assert!(p.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn thread_count_does_not_change_output() {
        let mut c = cfg(QuenchSpec::new(1.0, 20.0, 5.0, 5.0).unwrap(), &["purity", "renyi:2", "von_neumann", "mutual_info", "negativity", "tc"], 0.05, 20.0, 97);
        c.scale = Scale::Log;
        c.threads = 1;
        let a = run_sweep(&c).unwrap().to_table("x").to_csv_string();
        c.threads = 4;
        let b = run_sweep(&c).unwrap().to_table("x").to_csv_string();
        assert_eq!(a, b);
    }

    #[test]
    fn downward_quench_rows_are_flagged() {
        let q = QuenchSpec::new(4.0, 1.0, 0.0, 0.0).unwrap();
        let r = run_sweep(&cfg(q, &["purity", "tc"], 0.01, 2.0, 40)).unwrap();
        let (m1, _) = q.normal_modes().unwrap();
        let bs = m1.beta_star().unwrap();
        for row in &r.rows {
            if row.beta >= bs {
                assert!(row.values[0].is_none());
                assert!(row.flags.iter().any(|f| f == "purity:beyond_crossing"), "{:?}", row.flags);
            } else {
                assert!(row.values[0].is_some());
            }
        }
        assert!(!r.all_failed());
    }

    #[test]
    fn csv_layout() {
        let r = run_sweep(&cfg(QuenchSpec::constant(1.0, 1.0).unwrap(), &["purity", "renyi:2"], 1.0, 2.0, 3)).unwrap();
        let s = r.to_table("x").to_csv_string();
        let lines: Vec<&str> = s.lines().collect();
        assert!(lines[0].starts_with("# quench-thermo "));
        assert!(lines[1].contains("4 omega_f b^2"));
        assert!(lines[2].starts_with("# config: {"));
        assert_eq!(lines[3], "T,beta,purity,renyi:2,flags");
        assert_eq!(lines.len(), 7);
        let p = (0.5f64).tanh() * (0.5 * 3f64.sqrt()).tanh();
        assert_eq!(lines[4], format!("1,1,{},{},", format_sig(p), lines[4].split(',').nth(3).unwrap()));
    }

    #[test]
    fn figure_presets_use_caption_parameters() {
        let f = figure_preset("fig1a", 0).unwrap();
        assert_eq!(f.iter().map(|t| t.name.as_str()).collect::<Vec<_>>(), ["fig1a_omega3", "fig1a_omega5", "fig1a_omega7"]);
        assert_eq!(f[0].rows.len(), PRESET_T_POINTS);
        let f = figure_preset("fig4b", 0).unwrap();
        assert_eq!(f[0].columns, ["J", "tc_exact", "tc_approx"]);
        let f = figure_preset("fig3b", 0).unwrap();
        assert_eq!(f.iter().map(|t| t.name.as_str()).collect::<Vec<_>>(), ["fig3b_Jm0.45", "fig3b_Jm0.35", "fig3b_Jm0.2"]);
        assert!(f[0].notes.iter().any(|n| n.contains("\"j_i\":-0.45")));
        assert!(figure_preset("fig9", 0).is_err());
    }

    #[test]
    fn fig5_ratio_tends_to_one_at_low_temperature() {
        for t in figure_preset("fig5a", 0).unwrap() {
            let last = t.rows.first().unwrap();
            assert!((last[3].unwrap() - 1.0).abs() < 1e-3, "{}: {:?}", t.name, last);
            assert!(t.rows.last().unwrap()[3] == Some(0.0));
        }
    }

    #[test]
    fn validation_report() {
        let dir = tempfile::tempdir().unwrap();
        let write = |name: &str, body: &str| {
            let p = dir.path().join(name);
            std::fs::write(&p, body).unwrap();
            p
        };
        let good = write("good.json", r#"{"quench": {"k0_i": 3, "k0_f": 6, "j_i": 3, "j_f": 6}, "t_min": 0.1, "t_max": 10, "t_points": 50, "observables": ["purity"]}"#);
        let r = validate_config(&good);
        assert!(r.valid && r.warnings.is_empty());
        let m = r.modes.unwrap();
        assert!((m[1].1 - 18f64.sqrt()).abs() < 1e-14);
        let bad = write("bad.json", r#"{"quench": {"k0_i": 1, "k0_f": 1, "j_i": -0.6, "j_f": 0}, "t_min": 0.1, "t_max": 10, "t_points": 50, "observables": ["purity"]}"#);
        let r = validate_config(&bad);
        assert!(!r.valid && r.errors[0].contains("omega_2^2"));
        let down = write("down.json", r#"{"quench": {"k0_i": 4, "k0_f": 1, "j_i": 0, "j_f": 0}, "t_min": 0.1, "t_max": 10, "t_points": 50, "observables": ["purity"]}"#);
        let r = validate_config(&down);
        assert!(r.valid && r.warnings.iter().any(|w| w.contains("beta*")));
        let broken = write("broken.json", "{\n  \"quench\": 3,\n}");
        let r = validate_config(&broken);
        assert!(!r.valid && r.errors[0].contains("line 2"));
    }
}
