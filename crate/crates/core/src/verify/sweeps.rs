//! Empirical-constant sweeps and exploratory growth sweeps.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::checks::thread_pool;
use super::family::{band_bump, random_trig_poly, sawtooth_circle, sawtooth_line};
use super::instances::{
    gen_pair_sa, gen_pair_unitary, hermitian_with_s2, hermitized_gaussian, InstanceKind,
    InstanceSpec,
};
use super::rng::Gaussian;
use crate::besov::{besov_seminorm, make_window};
use crate::doi::{koplienko_residual_sa, neidhardt_residual_unitary};
use crate::error::{Error, Result};
use crate::factorize::{circle_factorize, line_factorize};
use crate::funcmodel::{CircleFunction, DerivativeConvention, LineFunction, TestFunction};
use crate::matrix::ComplexMatrix;
use crate::spectral::{eig_hermitian, exp_i, s2_norm, singular_values};

/// Which bound a constant sweep probes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    /// Circle certificate over the `B^2_{inf,1}` seminorm; parameter is the degree.
    CircleCertificate,
    /// Line certificate over the seminorm; parameter is the band `M`.
    LineCertificate,
    /// `||R||_{S1} / (M^2 ||K||_{S2}^2 ||f||_inf)`; parameter is the band `M`.
    SaBand,
    /// `||R||_{S1} / (seminorm * ||V - U||_{S2}^2)` for `z^d`; parameter is `d`.
    UnitaryS2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub kind: SweepKind,
    pub dims: Vec<usize>,
    pub params: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Perturbation scale of the operator sweeps.
    pub eps: f64,
    /// Spectral radius of `A` (band sweeps) or largest eigenvalue argument of
    /// `U` (unitary sweeps). `None` keeps the unscaled Gaussian `A` and a
    /// Haar-distributed `U`, where eigenvalue gaps exceed the oscillation scale
    /// and the ratios decay with the parameter.
    #[serde(default)]
    pub spectral_radius: Option<f64>,
    /// Quadrature nodes of the line factorization.
    #[serde(default = "default_nodes")]
    pub nodes: usize,
}

fn default_nodes() -> usize {
    256
}

impl SweepGrid {
    /// The grid used by the acceptance checks.
    pub fn documented(kind: SweepKind) -> Self {
        let (dims, params, seeds, eps) = match kind {
            SweepKind::CircleCertificate => (
                vec![1],
                vec![2.0, 4.0, 8.0, 16.0, 32.0, 64.0],
                vec![0, 1, 2],
                0.0,
            ),
            SweepKind::LineCertificate => (vec![1], vec![1.0, 2.0, 4.0, 8.0], vec![0, 1, 2], 0.0),
            SweepKind::SaBand => (
                vec![1, 2, 4, 8, 12],
                vec![1.0, 2.0, 4.0, 8.0],
                vec![0, 1, 2],
                0.01,
            ),
            SweepKind::UnitaryS2 => (
                vec![2, 4, 8, 16],
                vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0],
                vec![0, 1, 2],
                1e-3,
            ),
        };
        // Spectra clustered below the oscillation scale 1/max(params), where
        // the bounds are attained.
        let spectral_radius = match kind {
            SweepKind::SaBand | SweepKind::UnitaryS2 => {
                Some(1.0 / params.iter().copied().fold(0.0, f64::max))
            }
            _ => None,
        };
        Self {
            kind,
            dims,
            params,
            seeds,
            eps,
            spectral_radius,
            nodes: default_nodes(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.dims.is_empty() || self.params.is_empty() || self.seeds.is_empty() {
            return Err(Error::InvalidInput("sweep grids must be nonempty".into()));
        }
        if self.dims.contains(&0) {
            return Err(Error::InvalidInput(
                "sweep dimensions must be positive".into(),
            ));
        }
        if self.params.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::InvalidInput(
                "sweep parameters must be positive".into(),
            ));
        }
        if matches!(
            self.kind,
            SweepKind::CircleCertificate | SweepKind::UnitaryS2
        ) && self.params.iter().any(|p| p.fract() != 0.0)
        {
            return Err(Error::InvalidInput("degrees must be integers".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub dim: usize,
    pub param: f64,
    pub seed: u64,
    pub numerator: f64,
    pub denominator: f64,
    /// Absent when the denominator vanishes.
    pub ratio: Option<f64>,
}

/// Largest accepted `max / median` and consecutive-parameter factor.
pub const STABILITY_LIMIT: f64 = 4.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub max: Option<f64>,
    pub median: Option<f64>,
    /// `max / median`.
    pub stability: Option<f64>,
    /// Median ratio per parameter value, in grid order.
    pub param_medians: Vec<(f64, Option<f64>)>,
    /// Largest factor between medians of consecutive parameter values.
    pub adjacent_factor: Option<f64>,
    pub all_finite: bool,
    /// Every ratio finite and both factors within [`STABILITY_LIMIT`].
    pub stable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub grid: SweepGrid,
    pub rows: Vec<SweepRow>,
    pub summary: SweepSummary,
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

fn summarize(grid: &SweepGrid, rows: &[SweepRow]) -> SweepSummary {
    let mut ratios: Vec<f64> = rows.iter().filter_map(|r| r.ratio).collect();
    let all_finite = ratios.iter().all(|r| r.is_finite());
    let max = ratios.iter().copied().reduce(f64::max);
    let med = median(&mut ratios);
    let param_medians: Vec<(f64, Option<f64>)> = grid
        .params
        .iter()
        .map(|&p| {
            let mut v: Vec<f64> = rows
                .iter()
                .filter(|r| r.param == p)
                .filter_map(|r| r.ratio)
                .collect();
            (p, median(&mut v))
        })
        .collect();
    let adjacent_factor = param_medians
        .windows(2)
        .filter_map(|w| match (w[0].1, w[1].1) {
            (Some(a), Some(b)) if a > 0.0 && b > 0.0 => Some(a.max(b) / a.min(b)),
            _ => None,
        })
        .reduce(f64::max);
    let stability = match (max, med) {
        (Some(m), Some(d)) if d > 0.0 => Some(m / d),
        _ => None,
    };
    let within = |f: Option<f64>| f.is_none_or(|f| f <= STABILITY_LIMIT);
    SweepSummary {
        max,
        median: med,
        stability,
        param_medians,
        adjacent_factor,
        all_finite,
        stable: all_finite && within(stability) && within(adjacent_factor),
    }
}

/// Eight modes at the [`band_bump`] frequencies with seeded complex Gaussian
/// amplitudes under the same bump profile; `f_M(x) = f_1(M x)`.
pub fn band_random(band: f64, seed: u64) -> LineFunction {
    let bump = band_bump(band);
    let mut g = Gaussian::new(seed);
    LineFunction::from_modes(bump.modes().iter().map(|m| {
        let re = g.sample();
        let im = g.sample();
        (m.omega, m.amp * Complex64::new(re, im))
    }))
    .expect("frequencies of a band bump")
}

/// `(U, V)` with `V = exp(iA) U`, `||A||_{S2} = eps`; `U = exp(iH)` with
/// `||H|| = radius` when a radius is given, Haar otherwise.
fn sweep_pair_unitary(
    dim: usize,
    seed: u64,
    eps: f64,
    radius: Option<f64>,
) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let Some(radius) = radius else {
        return gen_pair_unitary(&InstanceSpec::unitary(dim, seed, eps));
    };
    let mut g = Gaussian::new(seed);
    let h = hermitized_gaussian(&mut g, dim);
    let u = exp_i(&eig_hermitian(&scaled_to_radius(h, radius))?);
    let a = hermitian_with_s2(&mut g, dim, eps);
    let v = &exp_i(&eig_hermitian(&a)?) * &u;
    Ok((u, v))
}

fn scaled_to_radius(m: ComplexMatrix, radius: f64) -> ComplexMatrix {
    let norm = singular_values(&m).first().copied().unwrap_or(0.0);
    if norm > 0.0 {
        m.scale_real(radius / norm)
    } else {
        m
    }
}

fn sweep_cell(grid: &SweepGrid, dim: usize, param: f64, seed: u64) -> Result<(f64, f64)> {
    let window = make_window();
    match grid.kind {
        SweepKind::CircleCertificate => {
            let f = random_trig_poly(seed, param as i64);
            let cert = circle_factorize(&f).certificate;
            Ok((cert, besov_seminorm(&TestFunction::Circle(f), 2, &window)))
        }
        SweepKind::LineCertificate => {
            let f = band_random(param, seed);
            let cert = line_factorize(&f, param, grid.nodes)?.certificate;
            Ok((cert, besov_seminorm(&TestFunction::Line(f), 2, &window)))
        }
        SweepKind::SaBand => {
            let f = band_bump(param);
            let (a, k) = gen_pair_sa(&InstanceSpec::sa(dim, seed, grid.eps))?;
            let a = match grid.spectral_radius {
                Some(r) => scaled_to_radius(a, r),
                None => a,
            };
            let r = koplienko_residual_sa(&a, &k, &f)?;
            let ks = s2_norm(&k);
            Ok((r.s1, param * param * ks * ks * f.sup_norm()))
        }
        SweepKind::UnitaryS2 => {
            let f = CircleFunction::monomial(param as i64, Complex64::new(1.0, 0.0));
            let (u, v) = sweep_pair_unitary(dim, seed, grid.eps, grid.spectral_radius)?;
            let r = neidhardt_residual_unitary(&u, &v, &f)?;
            let d = s2_norm(&(&v - &u));
            Ok((
                r.s1,
                besov_seminorm(&TestFunction::Circle(f), 2, &window) * d * d,
            ))
        }
    }
}

/// Empirical ratio per grid cell, rows ordered dims-major, then parameters,
/// then seeds.
pub fn constant_sweep(grid: &SweepGrid) -> Result<SweepTable> {
    grid.validate()?;
    let cells: Vec<(usize, f64, u64)> = grid
        .dims
        .iter()
        .flat_map(|&d| {
            grid.params
                .iter()
                .flat_map(move |&p| grid.seeds.iter().map(move |&s| (d, p, s)))
        })
        .collect();
    let rows: Result<Vec<SweepRow>> = thread_pool()?.install(|| {
        cells
            .par_iter()
            .map(|&(dim, param, seed)| {
                let (numerator, denominator) = sweep_cell(grid, dim, param, seed)?;
                Ok(SweepRow {
                    dim,
                    param,
                    seed,
                    numerator,
                    denominator,
                    ratio: (denominator > 0.0).then(|| numerator / denominator),
                })
            })
            .collect()
    });
    let rows = rows?;
    let summary = summarize(grid, &rows);
    Ok(SweepTable {
        grid: grid.clone(),
        rows,
        summary,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpenSweepGrid {
    pub problems: Vec<InstanceKind>,
    pub dims: Vec<usize>,
    /// Number of sawtooth terms per function.
    pub terms: Vec<i64>,
    pub seeds: Vec<u64>,
    pub eps: f64,
}

impl Default for OpenSweepGrid {
    fn default() -> Self {
        Self {
            problems: vec![InstanceKind::Unitary, InstanceKind::Sa],
            dims: vec![1, 2, 4, 8, 16, 32, 64],
            terms: vec![4, 16, 64],
            seeds: vec![0, 1, 2],
            eps: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpenSweepRow {
    pub problem: InstanceKind,
    pub function: String,
    pub terms: i64,
    pub dim: usize,
    /// `||R||_{S1}` per seed, in grid order.
    pub s1: Vec<f64>,
    pub mean_s1: f64,
    /// Trace of the residual per seed.
    pub trace: Vec<Complex64>,
    pub sup_second: f64,
    pub besov2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthExponent {
    pub problem: InstanceKind,
    pub terms: i64,
    /// Least-squares slope of `log mean_s1` against `log dim`.
    pub exponent: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpenSweepTable {
    pub grid: OpenSweepGrid,
    pub rows: Vec<OpenSweepRow>,
    pub growth: Vec<GrowthExponent>,
}

fn log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Residual trace norms of truncated sawtooth functions (bounded second
/// derivative, seminorm growing with the truncation) against dimension.
/// Nothing is asserted.
pub fn open_problem_sweep(grid: &OpenSweepGrid) -> Result<OpenSweepTable> {
    if grid.problems.is_empty()
        || grid.dims.is_empty()
        || grid.terms.is_empty()
        || grid.seeds.is_empty()
    {
        return Err(Error::InvalidInput("sweep grids must be nonempty".into()));
    }
    if grid.dims.contains(&0) || grid.terms.iter().any(|&t| t < 1) {
        return Err(Error::InvalidInput(
            "dimensions and term counts must be positive".into(),
        ));
    }
    let cells: Vec<(InstanceKind, i64, usize)> = grid
        .problems
        .iter()
        .flat_map(|&p| {
            grid.terms
                .iter()
                .flat_map(move |&t| grid.dims.iter().map(move |&d| (p, t, d)))
        })
        .collect();
    let window = make_window();
    let rows: Result<Vec<OpenSweepRow>> = thread_pool()?.install(|| {
        cells
            .par_iter()
            .map(|&(problem, terms, dim)| {
                let (function, sup_second, besov2) = match problem {
                    InstanceKind::Unitary => {
                        let f = sawtooth_circle(terms);
                        let sup = f.derivative(2, DerivativeConvention::Tangential).sup_norm();
                        (
                            TestFunction::Circle(f.clone()),
                            sup,
                            besov_seminorm(&TestFunction::Circle(f), 2, &window),
                        )
                    }
                    InstanceKind::Sa => {
                        let f = sawtooth_line(terms);
                        let sup = f.derivative(2).sup_norm();
                        (
                            TestFunction::Line(f.clone()),
                            sup,
                            besov_seminorm(&TestFunction::Line(f), 2, &window),
                        )
                    }
                };
                let mut s1 = Vec::with_capacity(grid.seeds.len());
                let mut trace = Vec::with_capacity(grid.seeds.len());
                for &seed in &grid.seeds {
                    let r = match (&function, problem) {
                        (TestFunction::Circle(f), InstanceKind::Unitary) => {
                            let (u, v) =
                                gen_pair_unitary(&InstanceSpec::unitary(dim, seed, grid.eps))?;
                            neidhardt_residual_unitary(&u, &v, f)?
                        }
                        (TestFunction::Line(f), InstanceKind::Sa) => {
                            let (a, k) = gen_pair_sa(&InstanceSpec::sa(dim, seed, grid.eps))?;
                            koplienko_residual_sa(&a, &k, f)?
                        }
                        _ => unreachable!("function domain follows the problem"),
                    };
                    s1.push(r.s1);
                    trace.push(r.trace());
                }
                let mean_s1 = s1.iter().sum::<f64>() / s1.len() as f64;
                let prefix = match problem {
                    InstanceKind::Unitary => "sawtooth-circle",
                    InstanceKind::Sa => "sawtooth-line",
                };
                Ok(OpenSweepRow {
                    problem,
                    function: format!("{prefix}-{terms}"),
                    terms,
                    dim,
                    s1,
                    mean_s1,
                    trace,
                    sup_second,
                    besov2,
                })
            })
            .collect()
    });
    let rows = rows?;
    let growth = grid
        .problems
        .iter()
        .flat_map(|&p| grid.terms.iter().map(move |&t| (p, t)))
        .map(|(problem, terms)| {
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.problem == problem && r.terms == terms)
                .map(|r| (r.dim as f64, r.mean_s1))
                .collect();
            GrowthExponent {
                problem,
                terms,
                exponent: log_slope(&pts),
            }
        })
        .collect();
    Ok(OpenSweepTable {
        grid: grid.clone(),
        rows,
        growth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_count_matches_grid() {
        let mut grid = SweepGrid::documented(SweepKind::UnitaryS2);
        grid.dims = vec![2, 3];
        grid.params = vec![1.0, 4.0];
        grid.seeds = vec![0, 1, 2];
        let t = constant_sweep(&grid).unwrap();
        assert_eq!(t.rows.len(), 12);
        assert!(t.summary.all_finite);
    }

    #[test]
    fn zero_perturbation_has_no_ratio() {
        let mut grid = SweepGrid::documented(SweepKind::SaBand);
        grid.dims = vec![3];
        grid.params = vec![1.0];
        grid.seeds = vec![5];
        grid.eps = 0.0;
        let t = constant_sweep(&grid).unwrap();
        assert_eq!(t.rows[0].ratio, None);
        assert_eq!(t.summary.max, None);
    }

    #[test]
    fn band_random_is_a_dilation() {
        let f1 = band_random(1.0, 9);
        let f4 = band_random(4.0, 9);
        for x in [-0.7, 0.1, 2.3] {
            assert!((f4.eval(x) - f1.eval(4.0 * x)).norm() <= 1e-13);
        }
    }

    #[test]
    fn open_sweep_dim_one_is_scalar() {
        let grid = OpenSweepGrid {
            dims: vec![1, 2],
            terms: vec![4],
            seeds: vec![3],
            ..OpenSweepGrid::default()
        };
        let t = open_problem_sweep(&grid).unwrap();
        assert_eq!(t.rows.len(), 4);
        for r in t.rows.iter().filter(|r| r.dim == 1) {
            assert!((r.s1[0] - r.trace[0].norm()).abs() <= 1e-15 * (1.0 + r.s1[0]));
        }
        assert_eq!(t.growth.len(), 2);
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 8.0]
            .iter()
            .map(|&x: &f64| (x, 3.0 * x.powf(1.5)))
            .collect();
        assert!((log_slope(&pts).unwrap() - 1.5).abs() < 1e-12);
    }
}
