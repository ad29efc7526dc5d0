//! Explicit tensor factorizations `f_breve(x, y) = sum w f(x) g(y)` of divided
//! differences, with `Lip (x) L^inf` nuclear certificates.
//!
//! Circle. Off the constant term the divided difference expands as
//!
//! ```text
//! f_breve(z, t) =  sum_{j,k >= 0} psi(j + k) z^j t^k
//!               -  conj(z) conj(t) sum_{j,k >= 0} chi(j + k) conj(z)^j conj(t)^k
//! ```
//!
//! with `psi(m) = f^(m + 1)` and `chi(m) = f^(-(m + 1))`. Each double series is
//! split by `beta_jk = q(k/j)` and `alpha_jk = 1 - beta_jk = q(j/k)`, so both
//! halves are sums over `n` of `z^n g_n(t)` and `g_n(z) t^n`, where
//! `g_n(t) = sum_k Q_n(k) psi(n + k) t^k`, `Q_n(k) = q(k/n)` and
//! `Q_0 = 1/2 + t + t^2 + ...`.
//!
//! Line. For `f` with spectrum in `[M/2, 2M]`,
//!
//! ```text
//! f_breve(x, y) = i int_0^{4M/3} [ F_t(x) e^{ity} + e^{itx} F_t(y) ] dt,
//! F_t(x) = sum_k a_k q((w_k - t)/t) e^{i(w_k - t)x},
//! ```
//!
//! discretized by the composite midpoint rule.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcmodel::{CircleFunction, FunctionFile, LineFunction, Mode, TestFunction};
use crate::matrix::ComplexMatrix;
use crate::spectral::SpectralDecomposition;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// The cutoff functions `q` and `r = q(. - 1)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct CutoffPair;

impl CutoffPair {
    /// `0` on `(-inf, 1/2]`, `(2x - 1)/(x + 1)` on `[1/2, 2]`, `1` on `[2, inf)`.
    pub fn q(&self, x: f64) -> f64 {
        if x <= 0.5 {
            0.0
        } else if x >= 2.0 {
            1.0
        } else {
            (2.0 * x - 1.0) / (x + 1.0)
        }
    }

    /// `0` on `(-inf, 3/2]`, `(2x - 3)/x` on `[3/2, 3]`, `1` on `[3, inf)`.
    pub fn r(&self, x: f64) -> f64 {
        if x <= 1.5 {
            0.0
        } else if x >= 3.0 {
            1.0
        } else {
            (2.0 * x - 3.0) / x
        }
    }
}

fn q(x: f64) -> f64 {
    CutoffPair.q(x)
}

/// Coefficient `k` of `Q_n`.
fn q_coeff(n: u64, k: u64) -> f64 {
    if n == 0 {
        if k == 0 {
            0.5
        } else {
            1.0
        }
    } else {
        q(k as f64 / n as f64)
    }
}

/// Share of the pair `(j, k)` given to the `g_n(z) t^n` side.
pub fn alpha_coeff(j: u64, k: u64) -> f64 {
    1.0 - beta_coeff(j, k)
}

/// Share of the pair `(j, k)` given to the `z^n g_n(t)` side.
pub fn beta_coeff(j: u64, k: u64) -> f64 {
    q_coeff(j, k)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Circle,
    Line,
}

/// One summand `weight * f(x) g(y)`.
#[derive(Clone, Debug)]
pub struct TensorTerm {
    pub f: TestFunction,
    pub g: TestFunction,
    pub weight: f64,
    pub f_lip: f64,
    pub g_sup: f64,
}

#[derive(Clone, Debug)]
pub struct TensorFactorization {
    pub domain: Domain,
    pub terms: Vec<TensorTerm>,
    pub certificate: f64,
}

impl TensorFactorization {
    fn new(domain: Domain, terms: Vec<TensorTerm>) -> Self {
        let mut out = Self {
            domain,
            terms,
            certificate: 0.0,
        };
        out.certificate = certificate_norm(&out);
        out
    }

    /// `sum w f(u) g(v)`; on the line only real parts are used.
    pub fn eval(&self, u: Complex64, v: Complex64) -> Complex64 {
        self.terms
            .iter()
            .map(|t| t.weight * eval_factor(&t.f, u) * eval_factor(&t.g, v))
            .sum()
    }

    /// Double Laurent coefficients of a circle factorization.
    pub fn double_coeffs(&self) -> BTreeMap<(i64, i64), Complex64> {
        let mut out: BTreeMap<(i64, i64), Complex64> = BTreeMap::new();
        for t in &self.terms {
            let (TestFunction::Circle(f), TestFunction::Circle(g)) = (&t.f, &t.g) else {
                continue;
            };
            for (j, a) in f.coeffs() {
                for (k, b) in g.coeffs() {
                    *out.entry((j, k)).or_insert(ZERO) += a * b * t.weight;
                }
            }
        }
        out
    }

    /// `sum w f(B) K g(A)`, accumulated in the eigenbases of `B` and `A`.
    pub fn assemble(
        &self,
        left: &SpectralDecomposition,
        right: &SpectralDecomposition,
        k: &ComplexMatrix,
    ) -> ComplexMatrix {
        let n = k.dim();
        let mut table = ComplexMatrix::zeros(n);
        for t in &self.terms {
            let fl: Vec<Complex64> = left
                .eigenvalues
                .iter()
                .map(|&x| eval_factor(&t.f, x))
                .collect();
            let gr: Vec<Complex64> = right
                .eigenvalues
                .iter()
                .map(|&y| eval_factor(&t.g, y))
                .collect();
            for i in 0..n {
                for j in 0..n {
                    table[(i, j)] += fl[i] * gr[j] * t.weight;
                }
            }
        }
        let inner = left.to_eigenbasis(k, right).hadamard(&table);
        left.from_eigenbasis(&inner, right)
    }

    pub fn to_file(&self) -> FactorizationFile {
        FactorizationFile {
            domain: self.domain,
            certificate: self.certificate,
            terms: self
                .terms
                .iter()
                .map(|t| TermFile {
                    f: FunctionFile::from(&t.f),
                    g: FunctionFile::from(&t.g),
                    weight: t.weight,
                    f_lip: t.f_lip,
                    g_sup: t.g_sup,
                })
                .collect(),
        }
    }
}

fn eval_factor(f: &TestFunction, x: Complex64) -> Complex64 {
    match f {
        TestFunction::Circle(c) => c.eval(x),
        TestFunction::Line(l) => l.eval(x.re),
    }
}

/// `sum weight * f_lip * g_sup`.
pub fn certificate_norm(fact: &TensorFactorization) -> f64 {
    fact.terms
        .iter()
        .map(|t| t.weight * t.f_lip * t.g_sup)
        .sum()
}

/// JSON export of a factorization.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FactorizationFile {
    pub domain: Domain,
    pub certificate: f64,
    pub terms: Vec<TermFile>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TermFile {
    pub f: FunctionFile,
    pub g: FunctionFile,
    pub weight: f64,
    pub f_lip: f64,
    pub g_sup: f64,
}

/// Double Laurent coefficients of the divided difference of a trigonometric
/// polynomial: `f^(j + k + 1)` for `j, k >= 0`, `-f^(j + k + 1)` for
/// `j, k <= -1`, zero elsewhere.
pub fn divided_difference_coeffs(f: &CircleFunction) -> BTreeMap<(i64, i64), Complex64> {
    let mut out = BTreeMap::new();
    for (m, c) in f.coeffs() {
        if m >= 1 {
            for j in 0..m {
                out.insert((j, m - 1 - j), c);
            }
        } else if m <= -1 {
            // z^{-p}: pairs (-a, -b) with a, b >= 1 and a + b = p + 1.
            let p = -m;
            for a in 1..=p {
                out.insert((-a, a - p - 1), -c);
            }
        }
    }
    out
}

/// `g_n(t) = sum_k Q_n(k) s(n + k) t^k` for the coefficient sequence `s`.
fn split_series(s: &BTreeMap<u64, Complex64>, n: u64) -> Vec<(i64, Complex64)> {
    s.range(n..)
        .map(|(&m, &c)| {
            let k = m - n;
            (k as i64, c * q_coeff(n, k))
        })
        .filter(|&(_, c)| c != ZERO)
        .collect()
}

/// Circle factor with its sup norm and tangential Lipschitz seminorm.
fn circle_term(f: CircleFunction, g: CircleFunction, f_lip: Option<f64>) -> Option<TensorTerm> {
    if f.is_zero() || g.is_zero() {
        return None;
    }
    let f_lip = f_lip.unwrap_or_else(|| f.lipschitz());
    let g_sup = g.sup_norm();
    Some(TensorTerm {
        f: TestFunction::Circle(f),
        g: TestFunction::Circle(g),
        weight: 1.0,
        f_lip,
        g_sup,
    })
}

pub fn circle_factorize(f: &CircleFunction) -> TensorFactorization {
    let one = Complex64::new(1.0, 0.0);
    let psi: BTreeMap<u64, Complex64> = f
        .coeffs()
        .filter(|&(m, _)| m >= 1)
        .map(|(m, c)| ((m - 1) as u64, c))
        .collect();
    let chi: BTreeMap<u64, Complex64> = f
        .coeffs()
        .filter(|&(m, _)| m <= -1)
        .map(|(m, c)| ((-m - 1) as u64, c))
        .collect();

    let mut terms = Vec::new();
    if let Some(&top) = psi.keys().next_back() {
        for n in 0..=top {
            let gn = split_series(&psi, n);
            if gn.is_empty() {
                continue;
            }
            let g = CircleFunction::new(gn);
            let zn = CircleFunction::monomial(n as i64, one);
            // z^n (x) g_n(t): the Lipschitz seminorm of z^n is n.
            terms.extend(circle_term(zn.clone(), g.clone(), Some(n as f64)));
            // g_n(z) (x) t^n.
            terms.extend(circle_term(g, zn, None));
        }
    }
    if let Some(&top) = chi.keys().next_back() {
        for n in 0..=top {
            let hn = split_series(&chi, n);
            if hn.is_empty() {
                continue;
            }
            // conj(t) h_n(conj t) and -conj(z) h_n(conj z).
            let shifted = CircleFunction::new(hn.iter().map(|&(k, c)| (-(k + 1), c)));
            let zbar = CircleFunction::monomial(-(n as i64) - 1, -one);
            let tbar = CircleFunction::monomial(-(n as i64) - 1, one);
            terms.extend(circle_term(zbar, shifted.clone(), Some((n + 1) as f64)));
            terms.extend(circle_term(shifted.scale(-one), tbar, None));
        }
    }
    TensorFactorization::new(Domain::Circle, terms)
}

/// Midpoint-rule discretization of the continuous line factorization for a
/// function with spectrum in `[M/2, 2M]` and no polynomial part.
pub fn line_factorize(f: &LineFunction, band: f64, nodes: usize) -> Result<TensorFactorization> {
    if !(band > 0.0 && band.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "band parameter must be positive, got {band}"
        )));
    }
    if nodes == 0 {
        return Err(Error::InvalidInput(
            "quadrature needs at least one node".into(),
        ));
    }
    if f.poly().iter().any(|&c| c != ZERO) {
        return Err(Error::Domain(
            "line factorization requires a zero polynomial part".into(),
        ));
    }
    for m in f.modes() {
        if m.omega < band / 2.0 || m.omega > 2.0 * band {
            return Err(Error::Domain(format!(
                "frequency {} outside the band [{}, {}]",
                m.omega,
                band / 2.0,
                2.0 * band
            )));
        }
    }
    let i = Complex64::new(0.0, 1.0);
    let t_max = 4.0 * band / 3.0;
    let h = t_max / nodes as f64;
    let mut terms = Vec::new();
    for m in 0..nodes {
        let t = (m as f64 + 0.5) * h;
        let modes: Vec<Mode> = f
            .modes()
            .iter()
            .filter_map(|md| {
                let w = q((md.omega - t) / t);
                (w > 0.0).then(|| Mode {
                    omega: md.omega - t,
                    amp: md.amp * w * i,
                })
            })
            .collect();
        if modes.is_empty() {
            continue;
        }
        let piece = LineFunction::new([ZERO; 3], modes)?;
        let wave = LineFunction::mode(t, Complex64::new(1.0, 0.0))?;
        let piece_lip = piece.lipschitz();
        let piece_sup = piece.sup_norm();
        terms.push(TensorTerm {
            f: TestFunction::Line(piece.clone()),
            g: TestFunction::Line(wave.clone()),
            weight: h,
            f_lip: piece_lip,
            g_sup: 1.0,
        });
        terms.push(TensorTerm {
            f: TestFunction::Line(wave),
            g: TestFunction::Line(piece),
            weight: h,
            f_lip: t,
            g_sup: piece_sup,
        });
    }
    Ok(TensorFactorization::new(Domain::Line, terms))
}

/// `||R_n^flat||_{L^1}` for `R_n^flat(z) = sum_j (1 - r(|j|/n)) z^j`, with the
/// normalized measure on the circle, by `2^16`-point quadrature.
pub fn rflat_l1(n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be positive".into()));
    }
    let size = 1usize << 16;
    let mut buf = vec![ZERO; size];
    for (j, c) in rflat_coeffs(n) {
        buf[j.rem_euclid(size as i64) as usize] += c;
    }
    FftPlanner::<f64>::new()
        .plan_fft_inverse(size)
        .process(&mut buf);
    Ok(buf.iter().map(|z| z.norm()).sum::<f64>() / size as f64)
}

/// Coefficients of `R_n^flat`, supported in `|j| < 3n`.
pub fn rflat_coeffs(n: u64) -> Vec<(i64, Complex64)> {
    let n_f = n as f64;
    let reach = 3 * n as i64;
    (-reach..=reach)
        .map(|j| {
            (
                j,
                Complex64::new(1.0 - CutoffPair.r(j.unsigned_abs() as f64 / n_f), 0.0),
            )
        })
        .filter(|&(_, c)| c != ZERO)
        .collect()
}
