//! Exact symbolic test functions.
//!
//! * [`CircleFunction`]: trigonometric (Laurent) polynomials `sum c_n z^n` on the unit circle.
//! * [`LineFunction`]: `c0 + c1 x + c2 x^2 + sum a_k exp(i w_k x)` on the real line.
//!
//! Both carry their Fourier support exactly, so block decompositions,
//! divided differences and matrix functions never alias.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Which derivative a call site means on the circle: `d/dz` or `d/dtheta` of `f(e^{i theta})`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DerivativeConvention {
    Complex,
    Tangential,
}

/// Default diagonal tolerance of divided differences.
pub fn default_delta(u: Complex64, v: Complex64) -> f64 {
    1e-8 * (1.0 + u.norm() + v.norm())
}

// ---------------------------------------------------------------------------
// Circle
// ---------------------------------------------------------------------------

/// Trigonometric polynomial; zero coefficients are never stored.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CircleFunction {
    coeffs: BTreeMap<i64, Complex64>,
}

impl CircleFunction {
    pub fn new(coeffs: impl IntoIterator<Item = (i64, Complex64)>) -> Self {
        let mut out = Self::default();
        for (n, c) in coeffs {
            out.add_coeff(n, c);
        }
        out
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn monomial(n: i64, c: Complex64) -> Self {
        Self::new([(n, c)])
    }

    fn add_coeff(&mut self, n: i64, c: Complex64) {
        let e = self.coeffs.entry(n).or_insert(ZERO);
        *e += c;
        if *e == ZERO {
            self.coeffs.remove(&n);
        }
    }

    pub fn coefficient(&self, n: i64) -> Complex64 {
        self.coeffs.get(&n).copied().unwrap_or(ZERO)
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.coeffs.iter().map(|(&n, &c)| (n, c))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `max |n|` over nonzero coefficients.
    pub fn degree(&self) -> u64 {
        self.coeffs
            .keys()
            .map(|n| n.unsigned_abs())
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .map(|(&n, &c)| c * z.powi(n as i32))
            .sum()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (n, c) in other.coeffs() {
            out.add_coeff(n, c);
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(self.coeffs().map(|(n, c)| (n, c * s)))
    }

    pub fn derivative(&self, order: u32, convention: DerivativeConvention) -> Self {
        match convention {
            DerivativeConvention::Complex => {
                let mut out = self.clone();
                for _ in 0..order {
                    out = Self::new(out.coeffs().map(|(n, c)| (n - 1, c * n as f64)));
                }
                out
            }
            DerivativeConvention::Tangential => {
                let i = Complex64::new(0.0, 1.0);
                Self::new(
                    self.coeffs()
                        .map(|(n, c)| (n, c * (i * n as f64).powu(order))),
                )
            }
        }
    }

    /// Coefficients of `P_+ (conj(z) f)`: `n -> f^(n+1)` for `n >= 0`.
    pub fn analytic_shift(&self) -> Self {
        Self::new(
            self.coeffs()
                .filter(|&(n, _)| n >= 1)
                .map(|(n, c)| (n - 1, c)),
        )
    }

    /// `f(conj z)`: coefficient `n` moves to `-n`.
    pub fn reflect(&self) -> Self {
        Self::new(self.coeffs().map(|(n, c)| (-n, c)))
    }

    /// Values at `exp(2 pi i m / count)`, `m = 0..count`.
    pub fn samples(&self, count: usize) -> Vec<Complex64> {
        let mut buf = vec![ZERO; count];
        for (n, c) in self.coeffs() {
            let idx = n.rem_euclid(count as i64) as usize;
            buf[idx] += c;
        }
        let mut planner = FftPlanner::<f64>::new();
        planner.plan_fft_inverse(count).process(&mut buf);
        buf
    }

    fn sample_count(&self) -> usize {
        (16 * (self.degree() as usize + 1))
            .max(1024)
            .next_power_of_two()
    }

    /// `sup |f|` on the circle; exact for a single monomial, otherwise the
    /// maximum over an FFT grid of at least 16 points per unit of degree.
    pub fn sup_norm(&self) -> f64 {
        match self.coeffs.len() {
            0 => 0.0,
            1 => self.coeffs.values().next().unwrap().norm(),
            _ => self
                .samples(self.sample_count())
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max),
        }
    }

    /// Lipschitz seminorm for the chordal metric, `sup |d/dtheta f|`.
    pub fn lipschitz(&self) -> f64 {
        self.derivative(1, DerivativeConvention::Tangential)
            .sup_norm()
    }

    /// `(f(z) - f(w))/(z - w)`, or the complex derivative at the normalized
    /// midpoint when `|z - w| <= delta`.
    ///
    /// Off the diagonal each monomial is expanded as the finite geometric sum
    /// `(z^n - w^n)/(z - w) = sum_k z^k w^(n-1-k)`, which avoids cancellation
    /// and is exactly symmetric in `(z, w)`.
    pub fn breve(&self, z: Complex64, w: Complex64, delta: f64) -> Complex64 {
        if (z - w).norm() > delta {
            let deg = self.degree() as usize;
            let pz = powers(z, deg);
            let pw = powers(w, deg);
            let inv = Complex64::new(1.0, 0.0) / (z * w);
            self.coeffs
                .iter()
                .map(|(&n, &c)| match n {
                    0 => ZERO,
                    n if n > 0 => c * symmetric_geometric(&pz, &pw, n as usize),
                    n => {
                        let m = n.unsigned_abs() as usize;
                        -c * inv.powi(m as i32) * symmetric_geometric(&pz, &pw, m)
                    }
                })
                .sum()
        } else {
            let m = z + w;
            let mid = if m.norm() > 0.0 { m / m.norm() } else { z };
            self.derivative(1, DerivativeConvention::Complex).eval(mid)
        }
    }
}

/// `[1, z, z^2, ..., z^deg]` by repeated multiplication.
fn powers(z: Complex64, deg: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(deg + 1);
    let mut p = Complex64::new(1.0, 0.0);
    for _ in 0..=deg {
        out.push(p);
        p *= z;
    }
    out
}

/// `sum_{k < m} z^k w^(m-1-k)`, summed in mirrored pairs so that swapping the
/// power tables gives a bitwise identical result.
fn symmetric_geometric(pz: &[Complex64], pw: &[Complex64], m: usize) -> Complex64 {
    let last = m - 1;
    let mut acc = ZERO;
    for k in 0..m / 2 {
        acc += pz[k] * pw[last - k] + pz[last - k] * pw[k];
    }
    if m % 2 == 1 {
        acc += pz[last / 2] * pw[last / 2];
    }
    acc
}

// ---------------------------------------------------------------------------
// Line
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub omega: f64,
    pub amp: Complex64,
}

/// `c0 + c1 x + c2 x^2 + sum a_k exp(i w_k x)` with distinct nonzero `w_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct LineFunction {
    poly: [Complex64; 3],
    modes: Vec<Mode>,
}

impl LineFunction {
    /// Validates frequencies (finite, nonzero, distinct) and drops zero amplitudes.
    pub fn new(poly: [Complex64; 3], modes: Vec<Mode>) -> Result<Self> {
        let mut kept: Vec<Mode> = Vec::with_capacity(modes.len());
        for m in modes {
            if !m.omega.is_finite() || m.omega == 0.0 {
                return Err(Error::Domain(format!(
                    "mode frequency must be finite and nonzero, got {}",
                    m.omega
                )));
            }
            if kept.iter().any(|k| k.omega == m.omega) {
                return Err(Error::Domain(format!(
                    "duplicate mode frequency {}",
                    m.omega
                )));
            }
            if m.amp != ZERO {
                kept.push(m);
            }
        }
        Ok(Self { poly, modes: kept })
    }

    pub fn zero() -> Self {
        Self {
            poly: [ZERO; 3],
            modes: Vec::new(),
        }
    }

    pub fn polynomial(c0: Complex64, c1: Complex64, c2: Complex64) -> Self {
        Self {
            poly: [c0, c1, c2],
            modes: Vec::new(),
        }
    }

    /// `amp * exp(i omega x)`.
    pub fn mode(omega: f64, amp: Complex64) -> Result<Self> {
        Self::new([ZERO; 3], vec![Mode { omega, amp }])
    }

    pub fn from_modes(modes: impl IntoIterator<Item = (f64, Complex64)>) -> Result<Self> {
        Self::new(
            [ZERO; 3],
            modes
                .into_iter()
                .map(|(omega, amp)| Mode { omega, amp })
                .collect(),
        )
    }

    pub fn poly(&self) -> [Complex64; 3] {
        self.poly
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn is_zero(&self) -> bool {
        self.modes.is_empty() && self.poly.iter().all(|&c| c == ZERO)
    }

    /// The exponential-sum part alone.
    pub fn mode_part(&self) -> Self {
        Self {
            poly: [ZERO; 3],
            modes: self.modes.clone(),
        }
    }

    pub fn with_poly(&self, poly: [Complex64; 3]) -> Self {
        Self {
            poly,
            modes: self.modes.clone(),
        }
    }

    pub fn max_frequency(&self) -> f64 {
        self.modes.iter().map(|m| m.omega.abs()).fold(0.0, f64::max)
    }

    pub fn min_frequency(&self) -> f64 {
        self.modes
            .iter()
            .map(|m| m.omega.abs())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        let [c0, c1, c2] = self.poly;
        let p = c0 + c1 * x + c2 * x * x;
        p + self
            .modes
            .iter()
            .map(|m| m.amp * Complex64::new(0.0, m.omega * x).exp())
            .sum::<Complex64>()
    }

    pub fn derivative(&self, order: u32) -> Self {
        let [c0, c1, c2] = self.poly;
        let poly = match order {
            0 => [c0, c1, c2],
            1 => [c1, c2 * 2.0, ZERO],
            2 => [c2 * 2.0, ZERO, ZERO],
            _ => [ZERO; 3],
        };
        let modes = self
            .modes
            .iter()
            .map(|m| Mode {
                omega: m.omega,
                amp: m.amp * Complex64::new(0.0, m.omega).powu(order),
            })
            .collect();
        Self { poly, modes }
    }

    /// `x -> f(lambda x)`.
    pub fn dilate(&self, lambda: f64) -> Self {
        let [c0, c1, c2] = self.poly;
        Self {
            poly: [c0, c1 * lambda, c2 * lambda * lambda],
            modes: self
                .modes
                .iter()
                .map(|m| Mode {
                    omega: m.omega * lambda,
                    amp: m.amp,
                })
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let mut modes = self.modes.clone();
        for m in &other.modes {
            match modes.iter_mut().find(|k| k.omega == m.omega) {
                Some(k) => k.amp += m.amp,
                None => modes.push(*m),
            }
        }
        let poly = [
            self.poly[0] + other.poly[0],
            self.poly[1] + other.poly[1],
            self.poly[2] + other.poly[2],
        ];
        Self::new(poly, modes)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            poly: self.poly.map(|c| c * s),
            modes: self
                .modes
                .iter()
                .filter(|_| s != ZERO)
                .map(|m| Mode {
                    omega: m.omega,
                    amp: m.amp * s,
                })
                .collect(),
        }
    }

    /// `sup_x |f(x)|`: infinite when the linear or quadratic part is present,
    /// exact for a constant plus at most one mode, otherwise a grid estimate
    /// (a lower bound within the grid resolution).
    pub fn sup_norm(&self) -> f64 {
        if self.poly[1] != ZERO || self.poly[2] != ZERO {
            return f64::INFINITY;
        }
        let pairs: Vec<(f64, Complex64)> = self.modes.iter().map(|m| (m.omega, m.amp)).collect();
        sup_almost_periodic(self.poly[0], &pairs)
    }

    /// `sup |f'|`, the Lipschitz seminorm.
    pub fn lipschitz(&self) -> f64 {
        self.derivative(1).sup_norm()
    }

    /// `(f(x) - f(y))/(x - y)`, or `f'((x+y)/2)` when `|x - y| <= delta`.
    ///
    /// Off the diagonal the quotient is evaluated in closed form,
    /// `c1 + c2 (x + y) + sum a e^{iw(x+y)/2} 2i sin(w(x-y)/2)/(x-y)`, which
    /// avoids cancellation and is exactly symmetric in `(x, y)`.
    pub fn breve(&self, x: f64, y: f64, delta: f64) -> Complex64 {
        let h = x - y;
        if h.abs() > delta {
            let [_, c1, c2] = self.poly;
            let mid = 0.5 * (x + y);
            let modes: Complex64 = self
                .modes
                .iter()
                .map(|m| {
                    let s = 2.0 * (0.5 * m.omega * h).sin() / h;
                    m.amp * Complex64::new(0.0, m.omega * mid).exp() * Complex64::new(0.0, s)
                })
                .sum();
            c1 + c2 * (x + y) + modes
        } else {
            self.derivative(1).eval(0.5 * (x + y))
        }
    }
}

/// Common period of frequencies that are all integer multiples of some
/// dyadic `2^-k`, if one exists at a usable scale.
fn common_period(freqs: &[f64]) -> Option<f64> {
    fn gcd(a: u64, b: u64) -> u64 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    for k in 0..=20 {
        let scale = (1u64 << k) as f64;
        let ints: Option<Vec<u64>> = freqs
            .iter()
            .map(|w| {
                let v = w.abs() * scale;
                (v.fract() == 0.0 && v < 1e12).then_some(v as u64)
            })
            .collect();
        if let Some(ints) = ints {
            let g = ints.iter().copied().fold(0, gcd);
            if g > 0 {
                return Some(2.0 * PI * scale / g as f64);
            }
        }
    }
    None
}

/// Sup over `x` of `|c + sum a_k exp(i w_k x)|`.
pub fn sup_almost_periodic(constant: Complex64, modes: &[(f64, Complex64)]) -> f64 {
    let modes: Vec<(f64, Complex64)> = modes.iter().copied().filter(|m| m.1 != ZERO).collect();
    let upper = constant.norm() + modes.iter().map(|m| m.1.norm()).sum::<f64>();
    match modes.len() {
        0 => return constant.norm(),
        1 => return upper,
        _ => {}
    }
    if constant == ZERO && modes.len() == 1 {
        return upper;
    }
    let freqs: Vec<f64> = modes.iter().map(|m| m.0).collect();
    let w_min = freqs.iter().map(|w| w.abs()).fold(f64::INFINITY, f64::min);
    let w_max = freqs.iter().map(|w| w.abs()).fold(0.0, f64::max);
    let slow = 2.0 * PI / w_min;
    let span = match common_period(&freqs) {
        Some(p) if p <= 16.0 * slow => p,
        _ => 16.0 * slow,
    };
    let points = ((64.0 * span * w_max / (2.0 * PI)).ceil() as usize).clamp(4096, 1 << 20);
    let dx = span / points as f64;
    let eval = |x: f64| -> f64 {
        (constant
            + modes
                .iter()
                .map(|&(w, a)| a * Complex64::new(0.0, w * x).exp())
                .sum::<Complex64>())
        .norm()
    };
    let mut best = (0.0, 0.0);
    for m in 0..points {
        let x = m as f64 * dx;
        let v = eval(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    // Local refinement around the best grid point.
    let mut lo = best.0 - dx;
    let mut hi = best.0 + dx;
    for _ in 0..6 {
        let step = (hi - lo) / 32.0;
        let mut local = best;
        for k in 0..=32 {
            let x = lo + k as f64 * step;
            let v = eval(x);
            if v > local.1 {
                local = (x, v);
            }
        }
        best = local;
        lo = best.0 - step;
        hi = best.0 + step;
    }
    best.1.min(upper)
}

// ---------------------------------------------------------------------------
// Either domain
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub enum TestFunction {
    Circle(CircleFunction),
    Line(LineFunction),
}

impl TestFunction {
    pub fn derivative(&self, order: u32, convention: DerivativeConvention) -> Result<Self> {
        if order > 2 {
            return Err(Error::InvalidInput(format!("derivative order {order} > 2")));
        }
        match self {
            TestFunction::Circle(f) => Ok(TestFunction::Circle(f.derivative(order, convention))),
            TestFunction::Line(f) => {
                if convention == DerivativeConvention::Tangential {
                    return Err(Error::InvalidInput(
                        "tangential derivative is only defined on the circle".into(),
                    ));
                }
                Ok(TestFunction::Line(f.derivative(order)))
            }
        }
    }

    /// Divided difference; on the line only the real parts of `u`, `v` are used.
    pub fn breve_eval(&self, u: Complex64, v: Complex64, delta: Option<f64>) -> Complex64 {
        let delta = delta.unwrap_or_else(|| default_delta(u, v));
        match self {
            TestFunction::Circle(f) => f.breve(u, v, delta),
            TestFunction::Line(f) => f.breve(u.re, v.re, delta),
        }
    }
}

/// Divided difference with the default diagonal tolerance.
pub fn breve_eval(f: &TestFunction, u: Complex64, v: Complex64) -> Complex64 {
    f.breve_eval(u, v, None)
}

// ---------------------------------------------------------------------------
// File format
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FunctionFile {
    Circle {
        coeffs: Vec<(i64, f64, f64)>,
    },
    Line {
        poly: [(f64, f64); 3],
        modes: Vec<(f64, f64, f64)>,
    },
}

impl From<&TestFunction> for FunctionFile {
    fn from(f: &TestFunction) -> Self {
        match f {
            TestFunction::Circle(c) => FunctionFile::Circle {
                coeffs: c.coeffs().map(|(n, z)| (n, z.re, z.im)).collect(),
            },
            TestFunction::Line(l) => FunctionFile::Line {
                poly: l.poly.map(|z| (z.re, z.im)),
                modes: l
                    .modes
                    .iter()
                    .map(|m| (m.omega, m.amp.re, m.amp.im))
                    .collect(),
            },
        }
    }
}

impl TryFrom<FunctionFile> for TestFunction {
    type Error = Error;

    fn try_from(f: FunctionFile) -> Result<Self> {
        Ok(match f {
            FunctionFile::Circle { coeffs } => TestFunction::Circle(CircleFunction::new(
                coeffs
                    .into_iter()
                    .map(|(n, re, im)| (n, Complex64::new(re, im))),
            )),
            FunctionFile::Line { poly, modes } => TestFunction::Line(LineFunction::new(
                poly.map(|(re, im)| Complex64::new(re, im)),
                modes
                    .into_iter()
                    .map(|(omega, re, im)| Mode {
                        omega,
                        amp: Complex64::new(re, im),
                    })
                    .collect(),
            )?),
        })
    }
}

impl TestFunction {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&FunctionFile::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: FunctionFile = serde_json::from_str(s)?;
        Self::try_from(f)
    }
}

// ---------------------------------------------------------------------------
// Difference-operator integral
// ---------------------------------------------------------------------------

/// Quadrature layout for `int |Delta_t^k f|_inf / |t|^k dt`.
///
/// With `W` the largest and `w` the smallest mode frequency, the half-line
/// `t > 0` is covered by
/// * `log_nodes` Simpson nodes in `ln t` on `[2^-20 / W, 1 / W]`,
/// * uniform Simpson nodes with `samples_per_period` points per period
///   `2 pi / W` on `[1 / W, tail_periods * 2 pi / w]`,
/// * a tail `mean(h) * T^(1-k) / (k-1)`, the mean taken over the last
///   `16` periods `2 pi / w` of the uniform region,
///
/// and the integrand is even in `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DifferenceGrid {
    pub log_nodes: usize,
    pub samples_per_period: usize,
    pub tail_periods: usize,
}

impl Default for DifferenceGrid {
    fn default() -> Self {
        Self {
            log_nodes: 2048,
            samples_per_period: 64,
            tail_periods: 64,
        }
    }
}

impl DifferenceGrid {
    /// Same layout with `factor` times as many nodes in both resolved regions.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            log_nodes: self.log_nodes * factor,
            samples_per_period: self.samples_per_period * factor,
            tail_periods: self.tail_periods,
        }
    }
}

/// Composite Simpson on `n` (forced even) intervals.
fn simpson(a: f64, b: f64, n: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let n = if n % 2 == 1 { n + 1 } else { n.max(2) };
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// `t -> sup_x |Delta_t^k f|` for the mode part of a line function.
struct DifferenceSup {
    modes: Vec<(f64, Complex64)>,
    table: Vec<Vec<Complex64>>,
    order: u32,
}

impl DifferenceSup {
    fn new(f: &LineFunction, order: u32) -> Self {
        let modes: Vec<(f64, Complex64)> = f.modes.iter().map(|m| (m.omega, m.amp)).collect();
        let mut table = Vec::new();
        if modes.len() > 1 {
            let freqs: Vec<f64> = modes.iter().map(|m| m.0).collect();
            let w_min = f.min_frequency();
            let w_max = f.max_frequency();
            let slow = 2.0 * PI / w_min;
            let span = match common_period(&freqs) {
                Some(p) if p <= 4.0 * slow => p,
                _ => slow,
            };
            let points = ((64.0 * span * w_max / (2.0 * PI)).ceil() as usize).clamp(4096, 1 << 18);
            let dx = span / points as f64;
            table = modes
                .iter()
                .map(|&(w, _)| {
                    (0..points)
                        .map(|m| Complex64::new(0.0, w * m as f64 * dx).exp())
                        .collect()
                })
                .collect();
        }
        Self {
            modes,
            table,
            order,
        }
    }

    fn eval(&self, t: f64) -> f64 {
        let coeffs: Vec<Complex64> = self
            .modes
            .iter()
            .map(|&(w, a)| a * (Complex64::new(0.0, w * t).exp() - 1.0).powu(self.order))
            .collect();
        match self.modes.len() {
            0 => 0.0,
            1 => coeffs[0].norm(),
            _ => {
                let points = self.table[0].len();
                let mut best: f64 = 0.0;
                for m in 0..points {
                    let mut s = ZERO;
                    for (j, c) in coeffs.iter().enumerate() {
                        s += c * self.table[j][m];
                    }
                    best = best.max(s.norm_sqr());
                }
                best.sqrt().min(coeffs.iter().map(|c| c.norm()).sum())
            }
        }
    }
}

/// `int_R |Delta_t^order f|_inf / |t|^order dt` for `order` 2 or 3.
///
/// `Delta_t^3` annihilates the quadratic part; for `order == 2` the quadratic
/// coefficient must vanish.
pub fn difference_integral(f: &LineFunction, order: u32, grid: &DifferenceGrid) -> Result<f64> {
    if !(order == 2 || order == 3) {
        return Err(Error::InvalidInput(format!(
            "difference order must be 2 or 3, got {order}"
        )));
    }
    if order == 2 && f.poly[2] != ZERO {
        return Err(Error::Domain(
            "second differences of x^2 are constant; the integral diverges".into(),
        ));
    }
    if f.modes.is_empty() {
        return Ok(0.0);
    }
    let k = order as i32;
    let h = DifferenceSup::new(f, order);
    let w_max = f.max_frequency();
    let w_min = f.min_frequency();

    let t_lo = 2f64.powi(-20) / w_max;
    let t_1 = 1.0 / w_max;
    // Below t_lo the integrand is ~ sup|f^(k)| * t^0.
    let near_zero = h.eval(t_lo) / t_lo.powi(k) * t_lo;
    let log_part = simpson(t_lo.ln(), t_1.ln(), grid.log_nodes, |s| {
        let t = s.exp();
        h.eval(t) / t.powi(k) * t
    });

    let slow = 2.0 * PI / w_min;
    let t_end = t_1 + grid.tail_periods as f64 * slow;
    let step = 2.0 * PI / w_max / grid.samples_per_period as f64;
    let intervals = ((t_end - t_1) / step).ceil() as usize;
    let uniform = simpson(t_1, t_end, intervals, |t| h.eval(t) / t.powi(k));

    let window = 16.0 * slow;
    let mean = simpson(
        t_end - window,
        t_end,
        (window / step).ceil() as usize,
        |t| h.eval(t),
    ) / window;
    let tail = mean * t_end.powi(1 - k) / (k - 1) as f64;

    Ok(2.0 * (near_zero + log_part + uniform + tail))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn circle_derivatives() {
        let f = CircleFunction::monomial(3, c(1.0, 0.0));
        let d = f.derivative(1, DerivativeConvention::Complex);
        assert_eq!(d, CircleFunction::monomial(2, c(3.0, 0.0)));
        for n in [-4i64, 1, 5] {
            let g = CircleFunction::monomial(n, c(1.0, 0.0))
                .derivative(2, DerivativeConvention::Tangential);
            assert_eq!(g.coefficient(n), c(-(n * n) as f64, 0.0));
        }
    }

    #[test]
    fn line_second_derivative() {
        let f = LineFunction::new(
            [c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
            vec![Mode {
                omega: 1.0,
                amp: c(1.0, 0.0),
            }],
        )
        .unwrap();
        let d = f.derivative(2);
        for x in [-1.3, 0.0, 2.7] {
            let expected = c(2.0, 0.0) - Complex64::new(0.0, x).exp();
            assert!((d.eval(x) - expected).norm() < 1e-15);
        }
    }

    #[test]
    fn breve_examples() {
        let f = TestFunction::Circle(CircleFunction::monomial(2, c(1.0, 0.0)));
        let v = breve_eval(&f, c(1.0, 0.0), c(0.0, 1.0));
        assert!((v - c(1.0, 1.0)).norm() < 1e-15);

        let z = Complex64::from_polar(1.0, 0.4);
        let on_diag = breve_eval(&f, z, z);
        assert!((on_diag - z * 2.0).norm() < 1e-15);

        let lin = TestFunction::Line(LineFunction::polynomial(
            c(3.0, 0.0),
            c(-2.5, 0.5),
            c(0.0, 0.0),
        ));
        for (x, y) in [(0.0, 1.0), (-3.0, 7.5), (2.0, 2.0)] {
            let v = breve_eval(&lin, c(x, 0.0), c(y, 0.0));
            assert!((v - c(-2.5, 0.5)).norm() < 1e-14);
        }
    }

    #[test]
    fn breve_continuity_across_delta() {
        let f = LineFunction::from_modes([(1.0, c(1.0, 0.0)), (-2.5, c(0.3, 0.2))]).unwrap();
        let x = 0.37;
        let delta = default_delta(c(x, 0.0), c(x, 0.0));
        let above = f.breve(x + delta * (1.0 + 1e-3), x, delta);
        let below = f.breve(x + delta * (1.0 - 1e-3), x, delta);
        let f2 = f
            .derivative(2)
            .modes()
            .iter()
            .map(|m| m.amp.norm())
            .sum::<f64>();
        assert!((above - below).norm() <= 1e-6 * (1.0 + f2));
    }

    #[test]
    fn analytic_shift_coefficients() {
        let f = CircleFunction::new([
            (-2, c(1.0, 0.0)),
            (0, c(2.0, 0.0)),
            (1, c(3.0, 0.0)),
            (4, c(0.0, 1.0)),
        ]);
        let psi = f.analytic_shift();
        assert_eq!(psi.coefficient(0), c(3.0, 0.0));
        assert_eq!(psi.coefficient(3), c(0.0, 1.0));
        assert_eq!(psi.coeffs().count(), 2);
    }

    #[test]
    fn fft_samples_match_direct_evaluation() {
        let f = CircleFunction::new([(-3, c(0.5, 0.1)), (0, c(1.0, 0.0)), (7, c(-0.2, 0.9))]);
        let s = f.samples(64);
        for (m, v) in s.iter().enumerate() {
            let z = Complex64::from_polar(1.0, 2.0 * PI * m as f64 / 64.0);
            assert!((v - f.eval(z)).norm() < 1e-13);
        }
    }

    #[test]
    fn sup_norms() {
        assert_eq!(CircleFunction::monomial(9, c(0.0, -2.0)).sup_norm(), 2.0);
        let f = CircleFunction::new([(1, c(1.0, 0.0)), (2, c(1.0, 0.0))]);
        assert!((f.sup_norm() - 2.0).abs() < 1e-12);
        let g = LineFunction::from_modes([(1.0, c(1.0, 0.0)), (0.5, c(0.5, 0.0))]).unwrap();
        assert!((g.sup_norm() - 1.5).abs() < 1e-9);
        let q = LineFunction::polynomial(c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0));
        assert!(q.sup_norm().is_infinite());
    }

    #[test]
    fn difference_integral_trivial_cases() {
        let g = DifferenceGrid::default();
        let quad = LineFunction::polynomial(c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0));
        assert_eq!(difference_integral(&quad, 3, &g).unwrap(), 0.0);
        assert_eq!(
            difference_integral(&LineFunction::zero(), 3, &g).unwrap(),
            0.0
        );
        assert!(matches!(
            difference_integral(&quad, 2, &g),
            Err(Error::Domain(_))
        ));
    }

    /// Independent oracle: adaptive-free brute-force integration of the
    /// closed-form single-mode integrand on a very fine uniform grid.
    fn single_mode_reference(order: i32) -> f64 {
        // int_R |e^{it}-1|^k/|t|^k dt = 2 int_0^inf (2|sin(t/2)|)^k / t^k dt
        let h = 1e-3;
        let t_max = 4000.0;
        let n = (t_max / h) as usize;
        let f = |t: f64| -> f64 {
            if t == 0.0 {
                1.0
            } else {
                (2.0 * (t / 2.0).sin().abs() / t).powi(order)
            }
        };
        let body = simpson(0.0, t_max, n, f);
        // mean of (2|sin|)^3 is 32/(3 pi)
        let tail = 32.0 / (3.0 * PI) / (2.0 * t_max * t_max);
        2.0 * (body + tail)
    }

    #[test]
    fn single_mode_grid_refinement() {
        let f = LineFunction::mode(1.0, c(1.0, 0.0)).unwrap();
        let g = DifferenceGrid::default();
        let coarse = difference_integral(&f, 3, &g).unwrap();
        let fine = difference_integral(&f, 3, &g.refined(10)).unwrap();
        assert!((coarse - fine).abs() <= 1e-6, "{coarse} vs {fine}");
        let reference = single_mode_reference(3);
        assert!(
            (coarse - reference).abs() <= 1e-6,
            "{coarse} vs {reference}"
        );
    }

    proptest! {
        #[test]
        fn breve_is_symmetric(a in -5.0f64..5.0, b in -5.0f64..5.0, t1 in -3.0f64..3.0, t2 in -3.0f64..3.0) {
            let line = LineFunction::new(
                [c(0.1, 0.0), c(0.2, -0.3), c(0.5, 0.0)],
                vec![Mode { omega: 1.5, amp: c(0.7, 0.1) }, Mode { omega: -0.5, amp: c(0.0, 1.0) }],
            ).unwrap();
            prop_assert_eq!(line.breve(a, b, 1e-8), line.breve(b, a, 1e-8));
            let circ = CircleFunction::new([(-2, c(1.0, 0.5)), (3, c(0.2, 0.0)), (1, c(0.0, -1.0))]);
            let z = Complex64::from_polar(1.0, t1);
            let w = Complex64::from_polar(1.0, t2);
            prop_assert_eq!(circ.breve(z, w, 1e-8), circ.breve(w, z, 1e-8));
        }

        #[test]
        fn differences_are_linear(a1 in -2.0f64..2.0, a2 in -2.0f64..2.0, w1 in 0.2f64..3.0, w2 in -3.0f64..-0.2, t in 0.01f64..10.0, x in -5.0f64..5.0) {
            // Delta_t^3 applied pointwise to f + g equals the sum.
            let f = LineFunction::mode(w1, c(a1, 0.3)).unwrap();
            let g = LineFunction::mode(w2, c(0.1, a2)).unwrap();
            let sum = f.add(&g).unwrap();
            let delta3 = |h: &LineFunction| h.eval(x + 3.0 * t) - h.eval(x + 2.0 * t) * 3.0 + h.eval(x + t) * 3.0 - h.eval(x);
            let lhs = delta3(&sum);
            let rhs = delta3(&f) + delta3(&g);
            prop_assert!((lhs - rhs).norm() < 1e-12);
        }
    }
}
