//! Spectral shift functions of finite pairs and their exact pairings.
//!
//! * Krein: `xi(x) = #{eig A <= x} - #{eig B <= x}`, so that
//!   `trace(f(B) - f(A)) = int f' xi`.
//! * Koplienko: `eta(x) = sum_{lambda_c <= x} kappa_c - int_{-inf}^x xi`, with
//!   `kappa_c = trace(P_c K P_c)` for the eigenvalue clusters of `A`. Integrating
//!   by parts, `int f'' eta = trace(f(A + K) - f(A)) - sum_c f'(lambda_c) kappa_c`,
//!   which is the trace of the second-order residual.
//! * Neidhardt (circle): Fourier moments `c_{-n} = -T_n / n^2`, `c_0 = 0`, where
//!   `T_n` is the trace of the residual for `z^n`; then `int f'' eta` is
//!   `sum_n f^(n) (-n^2) c_{-n}` with the tangential second derivative.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::doi::{circle_function_of, derivative_term_unitary_with, UnitaryPair};
use crate::error::{Error, Result};
use crate::funcmodel::{CircleFunction, LineFunction, TestFunction};
use crate::matrix::ComplexMatrix;
use crate::spectral::{eig_hermitian, SpectralDecomposition};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Piecewise-constant Krein function: `values[i]` holds on
/// `[breakpoints[i], breakpoints[i + 1])`; zero outside.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KreinXi {
    pub breakpoints: Vec<f64>,
    pub values: Vec<i64>,
}

impl KreinXi {
    pub fn eval(&self, x: f64) -> f64 {
        match self.interval(x) {
            Some(i) => self.values[i] as f64,
            None => 0.0,
        }
    }

    fn interval(&self, x: f64) -> Option<usize> {
        if self.breakpoints.len() < 2
            || x < self.breakpoints[0]
            || x >= *self.breakpoints.last().unwrap()
        {
            return None;
        }
        Some(self.breakpoints.partition_point(|&p| p <= x) - 1)
    }

    pub fn integral(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &v)| v as f64 * (self.breakpoints[i + 1] - self.breakpoints[i]))
            .sum()
    }

    /// `int f' xi`, exact.
    pub fn pair(&self, f: &LineFunction) -> Complex64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .map(|(i, &v)| {
                (f.eval(self.breakpoints[i + 1]) - f.eval(self.breakpoints[i])) * v as f64
            })
            .sum()
    }
}

fn sorted_union(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut pts: Vec<f64> = a.iter().chain(b).copied().collect();
    pts.sort_by(|x, y| x.total_cmp(y));
    pts.dedup();
    pts
}

fn count_le(sorted: &[f64], x: f64) -> i64 {
    sorted.partition_point(|&v| v <= x) as i64
}

fn xi_from_spectra(ea: &[f64], eb: &[f64]) -> KreinXi {
    let breakpoints = sorted_union(ea, eb);
    let values = breakpoints
        .windows(2)
        .map(|w| count_le(ea, w[0]) - count_le(eb, w[0]))
        .collect();
    KreinXi {
        breakpoints,
        values,
    }
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|x, y| x.total_cmp(y));
    v
}

pub fn krein_xi(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<KreinXi> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let ea = eig_hermitian(a)?.real_eigenvalues();
    let eb = eig_hermitian(b)?.real_eigenvalues();
    Ok(xi_from_spectra(&sorted(ea), &sorted(eb)))
}

/// Piecewise-linear Koplienko function with jumps.
///
/// On `[breakpoints[i], breakpoints[i + 1])` the function is
/// `values[i] + slopes[i] * (x - breakpoints[i])`; `values[i]` already includes
/// `jumps[i]`, so the function is right-continuous. It vanishes before the
/// first breakpoint and (up to rounding) after the last.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KoplienkoEta {
    pub breakpoints: Vec<f64>,
    pub jumps: Vec<f64>,
    pub values: Vec<f64>,
    pub slopes: Vec<f64>,
}

impl KoplienkoEta {
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.breakpoints.len();
        if n == 0 || x < self.breakpoints[0] {
            return 0.0;
        }
        let i = self.breakpoints.partition_point(|&p| p <= x) - 1;
        if i + 1 == n {
            return self.values[i];
        }
        self.values[i] + self.slopes[i] * (x - self.breakpoints[i])
    }

    /// `int eta`, exact for the piecewise-linear representation.
    pub fn integral(&self) -> f64 {
        (0..self.breakpoints.len().saturating_sub(1))
            .map(|i| {
                let d = self.breakpoints[i + 1] - self.breakpoints[i];
                (self.values[i] + 0.5 * self.slopes[i] * d) * d
            })
            .sum()
    }

    /// Smallest value, including left limits at the jumps.
    pub fn min_value(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.breakpoints.len() {
            m = m.min(self.values[i]).min(self.values[i] - self.jumps[i]);
        }
        m
    }

    /// Value after the last breakpoint; zero up to rounding.
    pub fn terminal_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// `int f'' eta` by exact antiderivatives on every linear piece:
    /// `int_a^b f''(e + s(x - a)) dx = f'(b)(e + s(b - a)) - f'(a) e - s(f(b) - f(a))`.
    pub fn pair(&self, f: &LineFunction) -> Complex64 {
        let df = f.derivative(1);
        let mut acc = ZERO;
        for i in 0..self.breakpoints.len().saturating_sub(1) {
            let (a, b) = (self.breakpoints[i], self.breakpoints[i + 1]);
            let (e, s) = (self.values[i], self.slopes[i]);
            acc += df.eval(b) * (e + s * (b - a)) - df.eval(a) * e - (f.eval(b) - f.eval(a)) * s;
        }
        acc
    }
}

/// Eigenvalue clusters of a sorted Hermitian spectrum: `(mean, indices)`.
fn clusters(d: &SpectralDecomposition, tol: f64) -> Vec<(f64, Vec<usize>)> {
    let ev = d.real_eigenvalues();
    let mut out: Vec<(f64, Vec<usize>)> = Vec::new();
    for (i, &x) in ev.iter().enumerate() {
        match out.last_mut() {
            Some((_, idx)) if x - ev[*idx.last().unwrap()] <= tol => idx.push(i),
            _ => out.push((x, vec![i])),
        }
    }
    for (mean, idx) in out.iter_mut() {
        *mean = idx.iter().map(|&i| ev[i]).sum::<f64>() / idx.len() as f64;
    }
    out
}

/// Koplienko function from decompositions of `A` and `B = A + K`.
pub fn koplienko_eta_with(
    ea: &SpectralDecomposition,
    eb: &SpectralDecomposition,
    k: &ComplexMatrix,
) -> KoplienkoEta {
    let spec_a = ea.real_eigenvalues();
    let spec_b = eb.real_eigenvalues();
    let norm_a = spec_a.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let kt = ea.to_eigenbasis(k, ea);
    let cl = clusters(ea, 1e-9 * (1.0 + norm_a));
    let kappas: Vec<(f64, f64)> = cl
        .iter()
        .map(|(mean, idx)| (*mean, idx.iter().map(|&i| kt[(i, i)].re).sum()))
        .collect();
    let xi = xi_from_spectra(&sorted(spec_a.clone()), &sorted(spec_b.clone()));

    let means: Vec<f64> = kappas.iter().map(|c| c.0).collect();
    let breakpoints = sorted_union(&sorted_union(&spec_a, &spec_b), &means);
    let n = breakpoints.len();
    let mut jumps = vec![0.0; n];
    for (mean, kappa) in &kappas {
        let i = breakpoints.partition_point(|&p| p < *mean);
        jumps[i] += kappa;
    }
    let mut values = vec![0.0; n];
    let mut slopes = vec![0.0; n];
    let mut current = 0.0;
    for i in 0..n {
        if i > 0 {
            current += slopes[i - 1] * (breakpoints[i] - breakpoints[i - 1]);
        }
        current += jumps[i];
        values[i] = current;
        slopes[i] = if i + 1 < n {
            -xi.eval(breakpoints[i])
        } else {
            0.0
        };
    }
    KoplienkoEta {
        breakpoints,
        jumps,
        values,
        slopes,
    }
}

pub fn koplienko_eta(a: &ComplexMatrix, k: &ComplexMatrix) -> Result<KoplienkoEta> {
    if a.dim() != k.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: k.dim(),
        });
    }
    let ea = eig_hermitian(a)?;
    let eb = eig_hermitian(&(a + k))?;
    Ok(koplienko_eta_with(&ea, &eb, k))
}

/// Fourier moments of the unitary shift function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitaryEtaMoments {
    pub degree: u32,
    /// `moments[m + degree]` is `c_m`, `-degree <= m <= degree`.
    pub moments: Vec<Complex64>,
    pub branch_ambiguous: bool,
}

impl UnitaryEtaMoments {
    pub fn moment(&self, m: i64) -> Option<Complex64> {
        let idx = m + self.degree as i64;
        (idx >= 0 && (idx as usize) < self.moments.len()).then(|| self.moments[idx as usize])
    }

    /// `max_m |c_{-m} - conj(c_m)|`.
    pub fn reality_defect(&self) -> f64 {
        let d = self.degree as i64;
        (1..=d)
            .map(|m| (self.moment(-m).unwrap() - self.moment(m).unwrap().conj()).norm())
            .fold(0.0, f64::max)
    }

    /// `max |c_m|`.
    pub fn max_abs(&self) -> f64 {
        self.moments.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `sum_n f^(n) (-n^2) c_{-n}`: pairing with the tangential `f''`.
    pub fn pair(&self, f: &CircleFunction) -> Result<Complex64> {
        self.check_degree(f)?;
        Ok(f.coeffs()
            .map(|(n, c)| c * (-(n * n) as f64) * self.moment(-n).unwrap())
            .sum())
    }

    /// Pairing under the complex-derivative reading
    /// `f''(z) = sum n(n-1) f^(n) z^(n-2)`, i.e. `sum_n n(n-1) f^(n) c_{2-n}`.
    /// Kept to document that this reading breaks the trace formula.
    pub fn pair_complex_convention(&self, f: &CircleFunction) -> Result<Complex64> {
        let mut acc = ZERO;
        for (n, c) in f.coeffs() {
            let w = (n * (n - 1)) as f64;
            if w == 0.0 {
                continue;
            }
            let m = self.moment(2 - n).ok_or_else(|| {
                Error::Incompatible(format!("moment {} beyond degree {}", 2 - n, self.degree))
            })?;
            acc += c * w * m;
        }
        Ok(acc)
    }

    fn check_degree(&self, f: &CircleFunction) -> Result<()> {
        if f.degree() > self.degree as u64 {
            return Err(Error::Incompatible(format!(
                "function degree {} exceeds moment degree {}",
                f.degree(),
                self.degree
            )));
        }
        Ok(())
    }
}

/// Trace of `f(V) - f(U) - d/ds f(U_s)|_0` without assembling the splitting.
pub fn residual_trace(pair: &UnitaryPair, f: &CircleFunction) -> Result<Complex64> {
    let diff = circle_function_of(&pair.ev, f) - &circle_function_of(&pair.eu, f);
    let deriv = derivative_term_unitary_with(&pair.eu, &pair.a, f)?;
    Ok((diff - &deriv).trace())
}

pub fn neidhardt_eta_with(pair: &UnitaryPair, degree: u32) -> Result<UnitaryEtaMoments> {
    if degree == 0 {
        return Err(Error::InvalidInput(
            "moment degree must be at least 1".into(),
        ));
    }
    let d = degree as i64;
    let mut moments = vec![ZERO; 2 * degree as usize + 1];
    for n in (-d..=d).filter(|&n| n != 0) {
        let t = residual_trace(pair, &CircleFunction::monomial(n, Complex64::new(1.0, 0.0)))?;
        // c_{-n} = -T_n / n^2
        moments[(d - n) as usize] = -t / (n * n) as f64;
    }
    Ok(UnitaryEtaMoments {
        degree,
        moments,
        branch_ambiguous: pair.branch_ambiguous,
    })
}

pub fn neidhardt_eta(
    u: &ComplexMatrix,
    v: &ComplexMatrix,
    degree: u32,
) -> Result<UnitaryEtaMoments> {
    neidhardt_eta_with(&UnitaryPair::new(u, v)?, degree)
}

/// Any of the three shift-function representations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ShiftFunction {
    Krein(KreinXi),
    Koplienko(KoplienkoEta),
    Neidhardt(UnitaryEtaMoments),
}

/// `int f^(order) s`: order 1 pairs with the Krein function, order 2 with either
/// second-order function.
pub fn pair_shift(f: &TestFunction, shift: &ShiftFunction, order: u32) -> Result<Complex64> {
    match (f, shift, order) {
        (TestFunction::Line(l), ShiftFunction::Krein(xi), 1) => Ok(xi.pair(l)),
        (TestFunction::Line(l), ShiftFunction::Koplienko(eta), 2) => Ok(eta.pair(l)),
        (TestFunction::Circle(c), ShiftFunction::Neidhardt(m), 2) => m.pair(c),
        _ => Err(Error::Incompatible(format!(
            "cannot pair a {} function with a {} shift function at order {order}",
            match f {
                TestFunction::Line(_) => "line",
                TestFunction::Circle(_) => "circle",
            },
            match shift {
                ShiftFunction::Krein(_) => "Krein",
                ShiftFunction::Koplienko(_) => "Koplienko",
                ShiftFunction::Neidhardt(_) => "Neidhardt",
            }
        ))),
    }
}
