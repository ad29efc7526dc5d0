//! Flat CSV emission for external plotting.

use std::io::Write;
use std::path::Path;

use shiftlab_core::shift::ShiftFunction;
use shiftlab_core::verify::checks::BatchReport;
use shiftlab_core::verify::sweeps::{OpenSweepTable, SweepTable};

use crate::commands::{BesovReport, FactorizationReport};
use crate::CliError;

/// Anything a subcommand can emit as CSV.
pub enum Report<'a> {
    Batch(&'a BatchReport),
    Shift {
        shift: &'a ShiftFunction,
        samples: usize,
        range: (f64, f64),
    },
    Besov(&'a BesovReport),
    Factorization(&'a FactorizationReport),
    Sweep(&'a SweepTable),
    Open(&'a OpenSweepTable),
}

/// Shortest round-trip decimal; exponent form outside `[1e-5, 1e16)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Evenly spaced points including both ends.
pub fn sample_points(samples: usize, (lo, hi): (f64, f64)) -> Vec<f64> {
    match samples {
        0 => Vec::new(),
        1 => vec![lo],
        n => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

pub fn write_csv<W: Write>(report: &Report, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    match report {
        Report::Batch(b) => {
            w.write_record([
                "index",
                "kind",
                "dim",
                "seed",
                "eps",
                "function",
                "trace_re",
                "trace_im",
                "pairing_re",
                "pairing_im",
                "residual",
                "tolerance",
                "s1",
                "s2",
                "ratio",
                "first_order_residual",
                "perturbation_residual",
                "decomposition_residual",
                "pass",
            ])?;
            let kind = match b.kind {
                shiftlab_core::verify::instances::InstanceKind::Sa => "sa",
                shiftlab_core::verify::instances::InstanceKind::Unitary => "unitary",
            };
            for r in &b.reports {
                let (dim, seed, eps) = match &r.instance {
                    Some(s) => (s.dim.to_string(), s.seed.to_string(), num(s.eps)),
                    None => (String::new(), String::new(), String::new()),
                };
                for f in &r.functions {
                    w.write_record([
                        r.index.to_string(),
                        kind.to_string(),
                        dim.clone(),
                        seed.clone(),
                        eps.clone(),
                        f.function.clone(),
                        num(f.trace.re),
                        num(f.trace.im),
                        num(f.pairing.re),
                        num(f.pairing.im),
                        num(f.residual),
                        num(f.tolerance),
                        num(f.s1),
                        num(f.s2),
                        opt(f.ratio),
                        opt(f.first_order_residual),
                        opt(f.perturbation_residual),
                        opt(f.decomposition_residual),
                        f.pass.to_string(),
                    ])?;
                }
            }
        }
        Report::Shift {
            shift,
            samples,
            range,
        } => match shift {
            ShiftFunction::Krein(xi) => {
                w.write_record(["x", "xi"])?;
                for x in sample_points(*samples, *range) {
                    w.write_record([num(x), num(xi.eval(x))])?;
                }
            }
            ShiftFunction::Koplienko(eta) => {
                w.write_record(["x", "eta"])?;
                for x in sample_points(*samples, *range) {
                    w.write_record([num(x), num(eta.eval(x))])?;
                }
            }
            ShiftFunction::Neidhardt(m) => {
                w.write_record(["m", "re", "im"])?;
                let d = m.degree as i64;
                for k in -d..=d {
                    let c = m.moment(k).unwrap_or_default();
                    w.write_record([k.to_string(), num(c.re), num(c.im)])?;
                }
            }
        },
        Report::Besov(b) => {
            w.write_record(["side", "level", "weight", "sup_norm"])?;
            for blk in &b.blocks {
                w.write_record([
                    blk.side.clone(),
                    blk.level.to_string(),
                    num(blk.weight),
                    num(blk.sup_norm),
                ])?;
            }
        }
        Report::Factorization(f) => {
            w.write_record(["term", "weight", "f_lip", "g_sup", "contribution"])?;
            for (i, t) in f.terms.iter().enumerate() {
                w.write_record([
                    i.to_string(),
                    num(t.weight),
                    num(t.f_lip),
                    num(t.g_sup),
                    num(t.weight * t.f_lip * t.g_sup),
                ])?;
            }
        }
        Report::Sweep(t) => {
            w.write_record(["dim", "param", "seed", "numerator", "denominator", "ratio"])?;
            for r in &t.rows {
                w.write_record([
                    r.dim.to_string(),
                    num(r.param),
                    r.seed.to_string(),
                    num(r.numerator),
                    num(r.denominator),
                    opt(r.ratio),
                ])?;
            }
        }
        Report::Open(t) => {
            w.write_record([
                "problem",
                "function",
                "terms",
                "dim",
                "mean_s1",
                "sup_second",
                "besov2",
            ])?;
            for r in &t.rows {
                let problem = match r.problem {
                    shiftlab_core::verify::instances::InstanceKind::Sa => "sa",
                    shiftlab_core::verify::instances::InstanceKind::Unitary => "unitary",
                };
                w.write_record([
                    problem.to_string(),
                    r.function.clone(),
                    r.terms.to_string(),
                    r.dim.to_string(),
                    num(r.mean_s1),
                    num(r.sup_second),
                    num(r.besov2),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn emit_plotdata(report: &Report, path: &Path) -> Result<(), CliError> {
    let file = std::fs::File::create(path)
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
    write_csv(report, file)
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}
