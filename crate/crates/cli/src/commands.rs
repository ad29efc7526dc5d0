//! Subcommand implementations.

use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use shiftlab_core::besov::{besov_seminorm, lp_blocks, make_window, LpBlocks};
use shiftlab_core::factorize::{
    circle_factorize, divided_difference_coeffs, line_factorize, Domain, FactorizationFile,
};
use shiftlab_core::funcmodel::{CircleFunction, FunctionFile, LineFunction, TestFunction};
use shiftlab_core::matrix::{ComplexMatrix, MatrixFile};
use shiftlab_core::shift::{koplienko_eta, krein_xi, neidhardt_eta, ShiftFunction};
use shiftlab_core::verify::checks::{
    check_koplienko, check_neidhardt, run_sa_batch, run_unitary_batch, BatchReport,
};
use shiftlab_core::verify::family::{circle_family, line_family, FamilySelection};
use shiftlab_core::verify::instances::{
    batch, gen_pair_sa, gen_pair_unitary, InstanceKind, InstanceSpec,
};
use shiftlab_core::verify::sweeps::{
    constant_sweep, open_problem_sweep, OpenSweepGrid, SweepGrid, SweepKind,
};

use crate::config::RunConfig;
use crate::plotdata::{emit_plotdata, num, Report};
use crate::CliError;

pub const DEFAULT_DIM: usize = 8;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_EPS: f64 = 0.1;
pub const DEFAULT_MAX_DIM: usize = 12;

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

pub fn read_matrix(path: &Path) -> Result<ComplexMatrix, CliError> {
    let file: MatrixFile = serde_json::from_str(&read_text(path)?)
        .map_err(|e| CliError::Usage(format!("invalid matrix file {}: {e}", path.display())))?;
    Ok(ComplexMatrix::try_from(file)?)
}

pub fn read_function(path: &Path) -> Result<TestFunction, CliError> {
    let file: FunctionFile = serde_json::from_str(&read_text(path)?)
        .map_err(|e| CliError::Usage(format!("invalid function file {}: {e}", path.display())))?;
    Ok(TestFunction::try_from(file)?)
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("reports are serializable");
    std::fs::write(path, text + "\n")
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

fn emit(cfg: &RunConfig, json: &impl Serialize, csv: Report) -> Result<(), CliError> {
    if let Some(path) = &cfg.output.out {
        write_json(json, path)?;
    }
    if let Some(path) = &cfg.output.csv {
        emit_plotdata(&csv, path)?;
    }
    Ok(())
}

/// Built-in family member by name.
pub fn family_member(name: &str) -> Result<TestFunction, CliError> {
    if let Some(f) = line_family().into_iter().find(|f| f.name == name) {
        return Ok(TestFunction::Line(f.f));
    }
    if let Some(f) = circle_family().into_iter().find(|f| f.name == name) {
        return Ok(TestFunction::Circle(f.f));
    }
    let names: Vec<String> = line_family()
        .into_iter()
        .map(|f| f.name)
        .chain(circle_family().into_iter().map(|f| f.name))
        .collect();
    Err(CliError::Usage(format!(
        "unknown family member {name:?}; known: {}",
        names.join(", ")
    )))
}

fn input_function(cfg: &RunConfig) -> Result<TestFunction, CliError> {
    match (&cfg.inputs.function, &cfg.inputs.member) {
        (Some(path), None) => read_function(path),
        (None, Some(name)) => family_member(name),
        (Some(_), Some(_)) => Err(CliError::Usage(
            "give either --function or --member, not both".into(),
        )),
        (None, None) => Err(CliError::Usage(
            "a function is required: --function FILE or --member NAME".into(),
        )),
    }
}

fn instance_specs(cfg: &RunConfig, kind: InstanceKind) -> Vec<InstanceSpec> {
    let seed = cfg.seed.unwrap_or(DEFAULT_SEED);
    let eps = cfg.grid.eps.unwrap_or(DEFAULT_EPS);
    match cfg.grid.count {
        Some(count) => batch(
            kind,
            count,
            cfg.grid.max_dim.unwrap_or(DEFAULT_MAX_DIM),
            seed,
            eps,
        ),
        None => vec![InstanceSpec {
            kind,
            dim: cfg.grid.dim.unwrap_or(DEFAULT_DIM),
            seed,
            eps,
        }],
    }
}

fn print_batch(b: &BatchReport) {
    for r in &b.reports {
        let worst = r
            .functions
            .iter()
            .map(|f| f.residual / f.tolerance)
            .fold(0.0, f64::max);
        let max_ratio = r.functions.iter().filter_map(|f| f.ratio).reduce(f64::max);
        let spec = match &r.instance {
            Some(s) => format!("dim={} seed={} eps={}", s.dim, s.seed, num(s.eps)),
            None => "input matrices".to_string(),
        };
        println!(
            "instance {} {spec} functions={} pass={} worst_residual_over_tolerance={} max_ratio={} perturbation_s2={}{}",
            r.index,
            r.functions.len(),
            r.pass,
            num(worst),
            max_ratio.map(num).unwrap_or_else(|| "none".into()),
            num(r.summary.perturbation_s2),
            if r.summary.branch_ambiguous { " branch_ambiguous" } else { "" },
        );
    }
    println!(
        "{} instances pass={} worst_residual_over_tolerance={}",
        b.reports.len(),
        b.pass,
        num(b.worst_relative_residual)
    );
}

fn family_selection(cfg: &RunConfig) -> FamilySelection {
    cfg.family.unwrap_or(FamilySelection::Full)
}

pub fn verify(cfg: &RunConfig, kind: InstanceKind) -> Result<bool, CliError> {
    let tol = cfg.tolerances();
    let start = Instant::now();
    let report = match (&cfg.inputs.first, &cfg.inputs.second) {
        (Some(p1), Some(p2)) => {
            let (m1, m2) = (read_matrix(p1)?, read_matrix(p2)?);
            let mut r = match kind {
                InstanceKind::Sa => check_koplienko(&m1, &m2, &family_selection(cfg).line(), &tol)?,
                InstanceKind::Unitary => {
                    check_neidhardt(&m1, &m2, &family_selection(cfg).circle(), &tol)?
                }
            };
            r.wall_time = start.elapsed().as_secs_f64();
            BatchReport::from_reports(kind, vec![r], start.elapsed().as_secs_f64())
        }
        (None, None) => {
            let specs = instance_specs(cfg, kind);
            match kind {
                InstanceKind::Sa => run_sa_batch(&specs, &family_selection(cfg).line(), &tol)?,
                InstanceKind::Unitary => {
                    run_unitary_batch(&specs, &family_selection(cfg).circle(), &tol)?
                }
            }
        }
        _ => return Err(CliError::Usage("matrix inputs come in pairs".into())),
    };
    print_batch(&report);
    emit(cfg, &report, Report::Batch(&report))?;
    Ok(report.pass)
}

fn sample_range(shift: &ShiftFunction) -> (f64, f64) {
    let bps = match shift {
        ShiftFunction::Krein(xi) => &xi.breakpoints,
        ShiftFunction::Koplienko(eta) => &eta.breakpoints,
        ShiftFunction::Neidhardt(_) => return (-std::f64::consts::PI, std::f64::consts::PI),
    };
    match (bps.first(), bps.last()) {
        (Some(&lo), Some(&hi)) => {
            let pad = if hi > lo { 0.1 * (hi - lo) } else { 0.5 };
            (lo - pad, hi + pad)
        }
        _ => (-1.0, 1.0),
    }
}

pub fn shift_fn(cfg: &RunConfig) -> Result<bool, CliError> {
    let kind = cfg.shift_kind.as_deref().unwrap_or("koplienko");
    let pair = |k: InstanceKind| -> Result<(ComplexMatrix, ComplexMatrix), CliError> {
        match (&cfg.inputs.first, &cfg.inputs.second) {
            (Some(p1), Some(p2)) => Ok((read_matrix(p1)?, read_matrix(p2)?)),
            (None, None) => {
                let spec = InstanceSpec {
                    kind: k,
                    dim: cfg.grid.dim.unwrap_or(DEFAULT_DIM),
                    seed: cfg.seed.unwrap_or(DEFAULT_SEED),
                    eps: cfg.grid.eps.unwrap_or(DEFAULT_EPS),
                };
                Ok(match k {
                    InstanceKind::Sa => gen_pair_sa(&spec)?,
                    InstanceKind::Unitary => gen_pair_unitary(&spec)?,
                })
            }
            _ => Err(CliError::Usage("matrix inputs come in pairs".into())),
        }
    };
    let shift = match kind {
        "krein" => {
            let (a, k) = pair(InstanceKind::Sa)?;
            let xi = krein_xi(&a, &(&a + &k))?;
            println!(
                "krein breakpoints={} integral={} trace_k={}",
                xi.breakpoints.len(),
                num(xi.integral()),
                num(k.trace().re)
            );
            ShiftFunction::Krein(xi)
        }
        "koplienko" => {
            let (a, k) = pair(InstanceKind::Sa)?;
            let eta = koplienko_eta(&a, &k)?;
            println!(
                "koplienko breakpoints={} integral={} half_trace_k2={} min={}",
                eta.breakpoints.len(),
                num(eta.integral()),
                num(0.5 * (&k * &k).trace().re),
                num(eta.min_value())
            );
            ShiftFunction::Koplienko(eta)
        }
        "neidhardt" => {
            let (u, v) = pair(InstanceKind::Unitary)?;
            let m = neidhardt_eta(&u, &v, cfg.grid.degree.unwrap_or(8))?;
            println!(
                "neidhardt degree={} max_abs={} reality_defect={}{}",
                m.degree,
                num(m.max_abs()),
                num(m.reality_defect()),
                if m.branch_ambiguous {
                    " branch_ambiguous"
                } else {
                    ""
                }
            );
            ShiftFunction::Neidhardt(m)
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown shift function kind {other:?}; expected krein, koplienko or neidhardt"
            )))
        }
    };
    let range = cfg.output.range.unwrap_or_else(|| sample_range(&shift));
    let samples = cfg.output.samples.unwrap_or(101);
    emit(
        cfg,
        &shift,
        Report::Shift {
            shift: &shift,
            samples,
            range,
        },
    )?;
    Ok(true)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockSummary {
    pub side: String,
    pub level: i32,
    pub weight: f64,
    pub sup_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesovReport {
    pub smoothness: u32,
    pub seminorm: f64,
    pub blocks: Vec<BlockSummary>,
}

pub fn besov_report(f: &TestFunction, s: u32) -> BesovReport {
    let window = make_window();
    let weight = |n: i32| 2f64.powi(n * s as i32);
    let mut blocks = Vec::new();
    match lp_blocks(f, &window) {
        LpBlocks::Circle(b) => {
            for (side, map) in [("analytic", &b.analytic), ("conjugate", &b.conjugate)] {
                for (&n, blk) in map {
                    blocks.push(BlockSummary {
                        side: side.into(),
                        level: n as i32,
                        weight: weight(n as i32),
                        sup_norm: blk.sup_norm(),
                    });
                }
            }
        }
        LpBlocks::Line(b) => {
            for (side, map) in [("analytic", &b.analytic), ("conjugate", &b.conjugate)] {
                for (&n, blk) in map {
                    blocks.push(BlockSummary {
                        side: side.into(),
                        level: n,
                        weight: weight(n),
                        sup_norm: blk.sup_norm(),
                    });
                }
            }
        }
    }
    BesovReport {
        smoothness: s,
        seminorm: besov_seminorm(f, s, &window),
        blocks,
    }
}

pub fn besov(cfg: &RunConfig) -> Result<bool, CliError> {
    let f = input_function(cfg)?;
    let report = besov_report(&f, cfg.grid.smoothness.unwrap_or(2));
    println!(
        "besov s={} seminorm={} blocks={}",
        report.smoothness,
        num(report.seminorm),
        report.blocks.len()
    );
    emit(cfg, &report, Report::Besov(&report))?;
    Ok(true)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FactorizationReport {
    pub domain: Domain,
    pub certificate: f64,
    pub seminorm: f64,
    /// Coefficientwise error on the circle; grid error on the line.
    pub reconstruction_error: f64,
    #[serde(skip)]
    pub terms: Vec<TermSummary>,
    pub factorization: FactorizationFile,
}

#[derive(Clone, Debug)]
pub struct TermSummary {
    pub weight: f64,
    pub f_lip: f64,
    pub g_sup: f64,
}

/// Largest coefficientwise gap between a circle factorization and the divided
/// difference it represents.
pub fn circle_reconstruction_error(f: &CircleFunction) -> f64 {
    let fact = circle_factorize(f);
    let got = fact.double_coeffs();
    let want = divided_difference_coeffs(f);
    got.keys()
        .chain(want.keys())
        .map(|key| {
            let a = got.get(key).copied().unwrap_or_default();
            let b = want.get(key).copied().unwrap_or_default();
            (a - b).norm()
        })
        .fold(0.0, f64::max)
}

/// Band `M` with `[min, max]` inside `[M/2, 2M]`, when one exists.
pub fn infer_band(f: &LineFunction) -> Option<f64> {
    let (lo, hi) = (f.min_frequency(), f.max_frequency());
    (lo > 0.0 && hi <= 4.0 * lo).then(|| (hi * lo).sqrt())
}

/// Largest gap on a `32 x 32` grid over `[-4, 4]^2`.
pub fn line_reconstruction_error(
    f: &LineFunction,
    band: f64,
    nodes: usize,
) -> Result<f64, CliError> {
    let fact = line_factorize(f, band, nodes)?;
    let tf = TestFunction::Line(f.clone());
    let pts: Vec<f64> = (0..32).map(|i| -4.0 + 8.0 * i as f64 / 31.0).collect();
    let mut err: f64 = 0.0;
    for &x in &pts {
        for &y in &pts {
            let (u, v) = (Complex64::new(x, 0.0), Complex64::new(y, 0.0));
            err = err.max((fact.eval(u, v) - tf.breve_eval(u, v, None)).norm());
        }
    }
    Ok(err)
}

pub fn factorize(cfg: &RunConfig) -> Result<bool, CliError> {
    let f = input_function(cfg)?;
    let (fact, error) = match &f {
        TestFunction::Circle(c) => (circle_factorize(c), circle_reconstruction_error(c)),
        TestFunction::Line(l) => {
            let band = match cfg.grid.band {
                Some(b) => b,
                None => infer_band(l).ok_or_else(|| {
                    CliError::Usage(
                        "the line spectrum does not fit one band [M/2, 2M]; pass --band".into(),
                    )
                })?,
            };
            let nodes = cfg.grid.nodes.unwrap_or(4096);
            (
                line_factorize(l, band, nodes)?,
                line_reconstruction_error(l, band, nodes)?,
            )
        }
    };
    let report = FactorizationReport {
        domain: fact.domain,
        certificate: fact.certificate,
        seminorm: besov_seminorm(&f, 2, &make_window()),
        reconstruction_error: error,
        terms: fact
            .terms
            .iter()
            .map(|t| TermSummary {
                weight: t.weight,
                f_lip: t.f_lip,
                g_sup: t.g_sup,
            })
            .collect(),
        factorization: fact.to_file(),
    };
    println!(
        "factorization terms={} certificate={} seminorm={} reconstruction_error={}",
        report.terms.len(),
        num(report.certificate),
        num(report.seminorm),
        num(report.reconstruction_error)
    );
    emit(cfg, &report, Report::Factorization(&report))?;
    Ok(true)
}

pub fn sweep_grid(cfg: &RunConfig) -> SweepGrid {
    let g = &cfg.grid;
    let mut grid = SweepGrid::documented(g.sweep_kind.unwrap_or(SweepKind::SaBand));
    if let Some(d) = &g.dims {
        grid.dims = d.clone();
    }
    if let Some(p) = &g.params {
        grid.params = p.clone();
        if grid.spectral_radius.is_some() {
            grid.spectral_radius = Some(1.0 / p.iter().copied().fold(0.0, f64::max));
        }
    }
    if let Some(s) = &g.seeds {
        grid.seeds = s.clone();
    }
    if let Some(e) = g.eps {
        grid.eps = e;
    }
    if let Some(r) = g.spectral_radius {
        grid.spectral_radius = (r > 0.0).then_some(r);
    }
    if let Some(n) = g.nodes {
        grid.nodes = n;
    }
    grid
}

pub fn sweep_constants(cfg: &RunConfig) -> Result<bool, CliError> {
    let grid = sweep_grid(cfg);
    let table = constant_sweep(&grid)?;
    for r in &table.rows {
        println!(
            "cell dim={} param={} seed={} ratio={}",
            r.dim,
            num(r.param),
            r.seed,
            r.ratio.map(num).unwrap_or_else(|| "none".into())
        );
    }
    let s = &table.summary;
    let show = |x: Option<f64>| x.map(num).unwrap_or_else(|| "none".into());
    println!(
        "{} cells max={} median={} max_over_median={} adjacent_factor={} stable={}",
        table.rows.len(),
        show(s.max),
        show(s.median),
        show(s.stability),
        show(s.adjacent_factor),
        s.stable
    );
    emit(cfg, &table, Report::Sweep(&table))?;
    Ok(s.stable)
}

pub fn sweep_open(cfg: &RunConfig) -> Result<bool, CliError> {
    let g = &cfg.grid;
    let mut grid = OpenSweepGrid::default();
    if let Some(p) = &g.problems {
        grid.problems = p.clone();
    }
    if let Some(d) = &g.dims {
        grid.dims = d.clone();
    }
    if let Some(t) = &g.terms {
        grid.terms = t.clone();
    }
    if let Some(s) = &g.seeds {
        grid.seeds = s.clone();
    }
    if let Some(e) = g.eps {
        grid.eps = e;
    }
    let table = open_problem_sweep(&grid)?;
    for r in &table.rows {
        println!(
            "row {} dim={} mean_s1={} sup_second={} besov2={}",
            r.function,
            r.dim,
            num(r.mean_s1),
            num(r.sup_second),
            num(r.besov2)
        );
    }
    for e in &table.growth {
        println!(
            "growth {:?} terms={} exponent={}",
            e.problem,
            e.terms,
            e.exponent.map(num).unwrap_or_else(|| "none".into())
        );
    }
    emit(cfg, &table, Report::Open(&table))?;
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn members_resolve() {
        assert!(matches!(
            family_member("exp(2ix)"),
            Ok(TestFunction::Line(_))
        ));
        assert!(matches!(family_member("z^3"), Ok(TestFunction::Circle(_))));
        assert!(family_member("nope").is_err());
    }

    #[test]
    fn band_inference() {
        let f = LineFunction::from_modes([
            (1.0, Complex64::new(1.0, 0.0)),
            (3.0, Complex64::new(1.0, 0.0)),
        ])
        .unwrap();
        let m = infer_band(&f).unwrap();
        assert!(m / 2.0 <= 1.0 && 3.0 <= 2.0 * m);
        let wide = LineFunction::from_modes([
            (1.0, Complex64::new(1.0, 0.0)),
            (5.0, Complex64::new(1.0, 0.0)),
        ])
        .unwrap();
        assert_eq!(infer_band(&wide), None);
    }

    #[test]
    fn circle_reconstruction_is_exact() {
        let f = shiftlab_core::verify::family::random_trig_poly(3, 12);
        assert!(circle_reconstruction_error(&f) <= 1e-12);
    }
}
