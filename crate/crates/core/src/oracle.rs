//! Brute-force quadrature checks for Gaussian kernels.
//!
//! Everything here works from the raw coefficient matrix of a
//! [`QuadraticKernel`]: the kernel is sampled on a tensor grid and the
//! resulting matrix is diagonalized or contracted numerically. Nothing in
//! this module knows about thermal states, so its output can be compared
//! against the closed forms elsewhere in the crate.

use nalgebra::{DMatrix, Schur, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::QuadraticKernel;

/// Smallest grid accepted per axis.
pub const MIN_POINTS: usize = 32;
/// ln of the envelope ratio at the grid edge (e^−45 ≈ 3e−20).
const EDGE_DECAY: f64 = 45.0;
/// Above this matrix side the top of the spectrum is found iteratively.
pub const DENSE_LIMIT: usize = 600;
/// Mehler partial sums stop here.
pub const MAX_MEHLER_TERMS: usize = 120;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// Equal weights; spectrally accurate for rapidly decaying integrands.
    Trapezoid,
    GaussLegendre,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    pub rule: Rule,
    pub n_points: usize,
    pub half_width: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureGrid {
    pub fn new(rule: Rule, n_points: usize, half_width: f64) -> Result<Self> {
        if n_points < MIN_POINTS {
            return Err(Error::InvalidParameter(format!(
                "quadrature needs at least {MIN_POINTS} points, got {n_points}"
            )));
        }
        Self::build(rule, n_points, half_width)
    }

    fn build(rule: Rule, n_points: usize, half_width: f64) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidParameter(format!("invalid half-width {half_width}")));
        }
        let (nodes, weights) = match rule {
            Rule::Trapezoid => {
                let h = 2.0 * half_width / (n_points - 1) as f64;
                let nodes = (0..n_points).map(|i| -half_width + h * i as f64).collect();
                let mut w = vec![h; n_points];
                w[0] = 0.5 * h;
                w[n_points - 1] = 0.5 * h;
                (nodes, w)
            }
            Rule::GaussLegendre => {
                let (x, w) = gauss_legendre(n_points)?;
                (
                    x.iter().map(|t| t * half_width).collect(),
                    w.iter().map(|t| t * half_width).collect(),
                )
            }
        };
        Ok(QuadratureGrid { rule, n_points, half_width, nodes, weights })
    }

    /// Grid sized from the exponent matrix: the envelope falls below e^−45
    /// at the edge, and the node spacing resolves the narrowest direction
    /// well enough for `tol`.
    pub fn for_kernel(k: &QuadraticKernel, tol: f64) -> Result<Self> {
        let (lmin, lmax) = exponent_range(k)?;
        let half_width = (EDGE_DECAY / lmin).sqrt();
        // trapezoid error ~ e^{−π²/(λh²)}; the 16/9 lets the 3n/4 grid used
        // for the error estimate reach tol as well
        let c = 16.0 / 9.0 * (tol.max(1e-15).recip().ln() + 1.0);
        let h = std::f64::consts::PI / (lmax * c).sqrt();
        let n = ((2.0 * half_width / h).ceil() as usize + 1).max(MIN_POINTS);
        Self::new(Rule::Trapezoid, n, half_width)
    }

    pub fn with_points(&self, n_points: usize) -> Result<Self> {
        Self::new(self.rule, n_points, self.half_width)
    }

    /// Grid used for the discretization-error estimate; always strictly
    /// coarser, even below the minimum size.
    pub fn coarse(&self) -> Result<Self> {
        Self::build(self.rule, (3 * self.n_points / 4).max(2), self.half_width)
    }
}

/// Extreme eigenvalues of the exponent matrix; errors if it is not positive definite.
fn exponent_range(k: &QuadraticKernel) -> Result<(f64, f64)> {
    let n = k.size();
    let m = DMatrix::from_row_slice(n, n, k.q());
    let ev = m.symmetric_eigenvalues();
    let lmin = ev.min();
    let lmax = ev.max();
    if !(lmin > 0.0) {
        return Err(Error::DivergentMarginal(lmin));
    }
    Ok((lmin, lmax))
}

/// Gauss–Legendre nodes and weights on [−1, 1] by Newton iteration.
pub fn gauss_legendre(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let pi = std::f64::consts::PI;
    for i in 0..(n + 1) / 2 {
        let mut z = (pi * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        let mut converged = false;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pn1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Numerical(format!("Legendre root {i} of {n} did not converge")));
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    Ok((x, w))
}

/// Coordinates and √weight of flat grid index `idx`.
fn grid_point(grid: &QuadratureGrid, d: usize, idx: usize, out: &mut [f64; 2]) -> f64 {
    let n = grid.n_points;
    if d == 1 {
        out[0] = grid.nodes[idx];
        grid.weights[idx].sqrt()
    } else {
        let (i1, i2) = (idx / n, idx % n);
        out[0] = grid.nodes[i1];
        out[1] = grid.nodes[i2];
        (grid.weights[i1] * grid.weights[i2]).sqrt()
    }
}

fn weighted_entry(k: &QuadraticKernel, grid: &QuadratureGrid, row: usize, col: usize) -> f64 {
    let d = k.dim();
    let sz = k.size();
    let q = k.q();
    let (mut xout, mut xin) = ([0.0; 2], [0.0; 2]);
    let wo = grid_point(grid, d, row, &mut xout);
    let wi = grid_point(grid, d, col, &mut xin);
    let mut v = [0.0; 4];
    v[..d].copy_from_slice(&xout[..d]);
    v[d..2 * d].copy_from_slice(&xin[..d]);
    let mut s = 0.0;
    for a in 0..sz {
        let mut r = 0.0;
        for b in 0..sz {
            r += q[a * sz + b] * v[b];
        }
        s += v[a] * r;
    }
    wo * wi * k.norm() * (-s).exp()
}

/// Weighted kernel matrix W^½ K W^½ on the tensor grid. Rows index the
/// output coordinates.
pub fn kernel_matrix(k: &QuadraticKernel, grid: &QuadratureGrid) -> DMatrix<f64> {
    let side = grid.n_points.pow(k.dim() as u32);
    let mut m = DMatrix::<f64>::zeros(side, side);
    // column-major: each chunk is one input point
    m.as_mut_slice().par_chunks_mut(side).enumerate().for_each(|(col, chunk)| {
        for (row, slot) in chunk.iter_mut().enumerate() {
            *slot = weighted_entry(k, grid, row, col);
        }
    });
    m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericSpectrum {
    /// Sorted by |λ| descending. Shorter than requested when the Krylov
    /// space closes first; the missing values are below roundoff.
    pub eigenvalues: Vec<f64>,
    /// max |λᵢ(n) − λᵢ(coarse)| over the returned eigenvalues.
    pub error_estimate: f64,
    /// Largest imaginary part discarded from a non-symmetric solve.
    pub max_imag: f64,
    pub n_points: usize,
    pub symmetric: bool,
}

impl NumericSpectrum {
    /// Fails unless the discretization error is within 10× `tol`.
    pub fn check(&self, tol: f64) -> Result<()> {
        if !(self.error_estimate < 10.0 * tol) {
            return Err(Error::Numerical(format!(
                "oracle not converged: error estimate {:.3e} at n = {} exceeds 10 x {tol:.1e}",
                self.error_estimate, self.n_points
            )));
        }
        Ok(())
    }
}

fn is_symmetric(m: &DMatrix<f64>) -> bool {
    let scale = m.amax();
    let n = m.nrows();
    for j in 0..n {
        for i in 0..j {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-13 * scale {
                return false;
            }
        }
    }
    true
}

/// Top-`count` eigenvalues of the matrix (by modulus) and the largest
/// imaginary residue encountered.
fn top_eigenvalues(m: DMatrix<f64>, count: usize) -> Result<(Vec<f64>, f64, bool)> {
    let symmetric = is_symmetric(&m);
    let (vals, imag) = if m.nrows() <= DENSE_LIMIT {
        dense_eigenvalues(m, symmetric)?
    } else {
        krylov_eigenvalues(&m, count, symmetric)?
    };
    let mut vals: Vec<f64> = vals;
    vals.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
    vals.truncate(count);
    Ok((vals, imag, symmetric))
}

fn dense_eigenvalues(m: DMatrix<f64>, symmetric: bool) -> Result<(Vec<f64>, f64)> {
    if symmetric {
        let se = SymmetricEigen::try_new(m, 1e-15, 10_000)
            .ok_or_else(|| Error::Numerical("symmetric eigensolver did not converge".into()))?;
        return Ok((se.eigenvalues.iter().copied().collect(), 0.0));
    }
    let scale = m.amax();
    let schur = Schur::try_new(m, 1e-15, 10_000)
        .ok_or_else(|| Error::Numerical("Schur decomposition did not converge".into()))?;
    let ev = schur.complex_eigenvalues();
    let imag = ev.iter().fold(0.0f64, |a, z| a.max(z.im.abs())) / scale.max(f64::MIN_POSITIVE);
    Ok((ev.iter().map(|z| z.re).collect(), imag))
}

/// Columns per Krylov block; repeated eigenvalues up to this multiplicity
/// are resolved.
const KRYLOV_BLOCK: usize = 4;
const KRYLOV_MAX_DIM: usize = 480;

/// Block Arnoldi with full reorthogonalization and Rayleigh–Ritz on the
/// accumulated basis.
fn krylov_eigenvalues(m: &DMatrix<f64>, count: usize, symmetric: bool) -> Result<(Vec<f64>, f64)> {
    let n = m.nrows();
    let bs = KRYLOV_BLOCK.min(n);
    let max_dim = KRYLOV_MAX_DIM.min(n) / bs * bs;
    let mut basis = DMatrix::<f64>::zeros(n, max_dim);
    let mut image = DMatrix::<f64>::zeros(n, max_dim);
    // Weyl sequence start: no parity or exchange symmetry to hide behind
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let start = DMatrix::<f64>::from_fn(n, bs, |i, j| ((i * bs + j + 1) as f64 * phi).fract() - 0.5);
    basis.columns_mut(0, bs).copy_from(&start.qr().q());
    image.columns_mut(0, bs).copy_from(&(m * basis.columns(0, bs)));
    let mut dim = bs;
    let mut prev: Vec<f64> = vec![f64::INFINITY; count];
    let mut stable = 0;
    let breakdown = 1e-13 * m.amax();
    loop {
        let v = basis.columns(0, dim);
        let h = v.transpose() * image.columns(0, dim);
        let (mut ritz, imag) = if symmetric {
            let hs = (&h + h.transpose()) * 0.5;
            (hs.symmetric_eigenvalues().iter().copied().collect::<Vec<_>>(), 0.0)
        } else {
            dense_eigenvalues(h, false)?
        };
        ritz.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
        ritz.truncate(count);
        let scale = ritz[0].abs();
        let delta = ritz.iter().zip(&prev).map(|(r, q)| (r - q).abs()).fold(0.0f64, f64::max);
        stable = if ritz.len() == count && delta <= 1e-13 * scale { stable + 1 } else { 0 };
        if stable >= 2 || dim == n {
            return Ok((ritz, imag));
        }
        if dim + bs > max_dim {
            return Err(Error::Numerical(format!(
                "Krylov iteration did not converge within dimension {dim} (last change {delta:e})"
            )));
        }
        prev = ritz;
        // next block: the newest images, orthogonalized twice
        let mut w = image.columns(dim - bs, bs).into_owned();
        for _ in 0..2 {
            let c = basis.columns(0, dim).transpose() * &w;
            w -= basis.columns(0, dim) * c;
        }
        let qr = w.qr();
        if qr.r().diagonal().abs().min() <= breakdown {
            // invariant subspace reached; the current Ritz values are final
            let h = basis.columns(0, dim).transpose() * image.columns(0, dim);
            let (mut vals, imag) = if symmetric {
                let hs = (&h + h.transpose()) * 0.5;
                (hs.symmetric_eigenvalues().iter().copied().collect::<Vec<_>>(), 0.0)
            } else {
                dense_eigenvalues(h, false)?
            };
            vals.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
            vals.truncate(count);
            return Ok((vals, imag));
        }
        let next = qr.q();
        basis.columns_mut(dim, bs).copy_from(&next);
        image.columns_mut(dim, bs).copy_from(&(m * &next));
        dim += bs;
    }
}

/// Leading `count` eigenvalues of the integral operator, with an error
/// estimate from a second solve on the coarse grid.
pub fn nystrom_spectrum(k: &QuadraticKernel, grid: &QuadratureGrid, count: usize) -> Result<NumericSpectrum> {
    let count = count.max(1);
    let (fine, max_imag, symmetric) = top_eigenvalues(kernel_matrix(k, grid), count)?;
    let (coarse, _, _) = top_eigenvalues(kernel_matrix(k, &grid.coarse()?), count)?;
    let error_estimate = fine
        .iter()
        .zip(coarse.iter().chain(std::iter::repeat(&0.0)))
        .fold(0.0f64, |a, (f, c)| a.max((f - c).abs()));
    Ok(NumericSpectrum { eigenvalues: fine, error_estimate, max_imag, n_points: grid.n_points, symmetric })
}

/// Largest grid per axis the adaptive drivers will try.
pub fn max_points(dim: usize) -> usize {
    if dim == 1 {
        4000
    } else {
        128
    }
}

/// Refines a grid by 1.2× until `estimate` of the result drops below `tol`.
/// Fails only if the cap is reached with the estimate still above 10 × tol.
fn refine<T>(k: &QuadraticKernel, tol: f64, mut eval: impl FnMut(&QuadratureGrid) -> Result<(T, f64)>) -> Result<(T, f64, usize)> {
    let cap = max_points(k.dim());
    let mut grid = QuadratureGrid::for_kernel(k, tol)?;
    if grid.n_points > cap {
        grid = grid.with_points(cap)?;
    }
    loop {
        let (value, est) = eval(&grid)?;
        let n = grid.n_points;
        if est < tol || n >= cap {
            if !(est < 10.0 * tol) {
                return Err(Error::Numerical(format!(
                    "oracle not converged: error estimate {est:.3e} at n = {n} exceeds 10 x {tol:.1e}"
                )));
            }
            return Ok((value, est, n));
        }
        log::debug!("refining oracle grid from {n} points (estimate {est:.2e})");
        grid = grid.with_points((n * 6 / 5 + 1).min(cap))?;
    }
}

/// Grid chosen automatically for `tol` and refined until the error
/// estimate meets it.
pub fn nystrom_spectrum_auto(k: &QuadraticKernel, count: usize, tol: f64) -> Result<NumericSpectrum> {
    let (spec, _, _) = refine(k, tol, |g| {
        let s = nystrom_spectrum(k, g, count)?;
        let e = s.error_estimate;
        Ok((s, e))
    })?;
    Ok(spec)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEstimate {
    pub value: f64,
    pub error_estimate: f64,
}

// p is 2 or 3.
fn trace_on(m: &DMatrix<f64>, p: u32) -> f64 {
    let n = m.nrows();
    match p {
        2 => {
            let mut s = 0.0;
            for j in 0..n {
                for i in 0..n {
                    s += m[(i, j)] * m[(j, i)];
                }
            }
            s
        }
        _ => {
            let m2 = m * m;
            let mut s = 0.0;
            for j in 0..n {
                for i in 0..n {
                    s += m2[(i, j)] * m[(j, i)];
                }
            }
            s
        }
    }
}

/// tr Kᵖ by quadrature, p ∈ {1, 2, 3}.
pub fn trace_power(k: &QuadraticKernel, p: u32, grid: &QuadratureGrid) -> Result<TraceEstimate> {
    if !(1..=3).contains(&p) {
        return Err(Error::InvalidParameter(format!("trace power must be 1, 2 or 3, got {p}")));
    }
    let on = |g: &QuadratureGrid| {
        if p == 1 {
            // only the diagonal is needed
            (0..g.n_points.pow(k.dim() as u32)).map(|i| weighted_entry(k, g, i, i)).sum()
        } else {
            trace_on(&kernel_matrix(k, g), p)
        }
    };
    let value = on(grid);
    let coarse = on(&grid.coarse()?);
    Ok(TraceEstimate { value, error_estimate: (value - coarse).abs() })
}

pub fn trace_power_auto(k: &QuadraticKernel, p: u32, tol: f64) -> Result<TraceEstimate> {
    let (t, _, _) = refine(k, tol, |g| {
        let t = trace_power(k, p, g)?;
        Ok((t, t.error_estimate))
    })?;
    Ok(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MehlerCheck {
    /// Σₙ tⁿ/n! Hₙ(x)Hₙ(y) truncated.
    pub lhs: f64,
    /// (1−4t²)^−½ exp[(4txy − 4t²(x²+y²))/(1−4t²)].
    pub rhs: f64,
    /// Geometric bound on the neglected terms.
    pub tail_estimate: f64,
    /// |t| ≥ ½, where the series no longer converges.
    pub divergent: bool,
}

impl MehlerCheck {
    pub fn discrepancy(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

/// Self-test of the Hermite generating function used to assemble kernels.
pub fn mehler_check(t: f64, x: f64, y: f64, terms: usize) -> Result<MehlerCheck> {
    if terms == 0 || terms > MAX_MEHLER_TERMS {
        return Err(Error::InvalidParameter(format!(
            "term count must lie in 1..={MAX_MEHLER_TERMS}, got {terms}"
        )));
    }
    // Hₙ/√(2ⁿn!) keeps the recurrence in range
    let (mut hx0, mut hx1) = (1.0f64, std::f64::consts::SQRT_2 * x);
    let (mut hy0, mut hy1) = (1.0f64, std::f64::consts::SQRT_2 * y);
    let r = 2.0 * t;
    let mut lhs = 0.0;
    let mut pow = 1.0;
    let mut last = [0.0f64; 2];
    for n in 0..terms {
        let term: f64 = pow * hx0 * hy0;
        lhs += term;
        last = [last[1], term.abs()];
        pow *= r;
        let c1n = (2.0 / (n + 2) as f64).sqrt();
        let c0n = ((n + 1) as f64 / (n + 2) as f64).sqrt();
        let (hx2, hy2) = (c1n * x * hx1 - c0n * hx0, c1n * y * hy1 - c0n * hy0);
        hx0 = hx1;
        hx1 = hx2;
        hy0 = hy1;
        hy1 = hy2;
    }
    let q = r.abs();
    let divergent = q >= 1.0;
    let tail_estimate = if divergent {
        f64::INFINITY
    } else {
        last[0].max(last[1]) * q / (1.0 - q)
    };
    let den = 1.0 - 4.0 * t * t;
    let rhs = if den > 0.0 {
        den.powf(-0.5) * ((4.0 * t * x * y - 4.0 * t * t * (x * x + y * y)) / den).exp()
    } else if den == 0.0 {
        f64::INFINITY
    } else {
        f64::NAN
    };
    Ok(MehlerCheck { lhs, rhs, tail_estimate, divergent })
}
