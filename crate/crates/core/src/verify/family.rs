//! Fixed test-function families.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::rng::Gaussian;
use crate::funcmodel::{CircleFunction, LineFunction};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Named<F> {
    pub name: String,
    pub f: F,
}

fn named<F>(name: &str, f: F) -> Named<F> {
    Named {
        name: name.to_string(),
        f,
    }
}

/// Eight modes spread evenly over `[M/2, 2M]` with a smooth bump profile
/// peaking at `M`, amplitudes summing to one.
pub fn band_bump(band: f64) -> LineFunction {
    let count = 8;
    let freqs: Vec<f64> = (0..count)
        .map(|k| band * (0.5 + 1.5 * k as f64 / (count - 1) as f64))
        .collect();
    let weights: Vec<f64> = freqs
        .iter()
        .map(|w| {
            let u = (w / band - 1.0) / 0.75;
            (-u * u).exp()
        })
        .collect();
    let total: f64 = weights.iter().sum();
    LineFunction::from_modes(
        freqs
            .into_iter()
            .zip(weights)
            .map(|(w, a)| (w, c(a / total, 0.0))),
    )
    .expect("distinct positive frequencies")
}

/// The twelve line functions used by the self-adjoint checks.
pub fn line_family() -> Vec<Named<LineFunction>> {
    let one = c(1.0, 0.0);
    let mode = |w: f64| LineFunction::mode(w, one).expect("nonzero frequency");
    vec![
        named("x", LineFunction::polynomial(ZERO, one, ZERO)),
        named("x^2", LineFunction::polynomial(ZERO, ZERO, one)),
        named("exp(0.5ix)", mode(0.5)),
        named("exp(ix)", mode(1.0)),
        named("exp(2ix)", mode(2.0)),
        named("exp(4ix)", mode(4.0)),
        named(
            "mix3a",
            LineFunction::from_modes([
                (0.5, c(0.5, 0.0)),
                (-1.5, c(0.0, -0.3)),
                (3.0, c(0.2, 0.0)),
            ])
            .unwrap(),
        ),
        named(
            "mix3b",
            LineFunction::from_modes([
                (-1.0, c(0.4, 0.0)),
                (2.5, c(0.0, 0.6)),
                (-3.5, c(-0.25, 0.0)),
            ])
            .unwrap(),
        ),
        named("band1", band_bump(1.0)),
        named("band4", band_bump(4.0)),
        named(
            "cos(2x)",
            LineFunction::from_modes([(2.0, c(0.5, 0.0)), (-2.0, c(0.5, 0.0))]).unwrap(),
        ),
        named(
            "x^2+0.5exp(-ix)",
            LineFunction::new(
                [ZERO, ZERO, one],
                vec![crate::funcmodel::Mode {
                    omega: -1.0,
                    amp: c(0.5, 0.0),
                }],
            )
            .unwrap(),
        ),
    ]
}

/// Trigonometric polynomial of degree `degree` with coefficients
/// `(x + iy)/(1 + |n|)^2`, `x`, `y` standard normal, `n = -degree..=degree`.
pub fn random_trig_poly(seed: u64, degree: i64) -> CircleFunction {
    let mut g = Gaussian::new(seed);
    CircleFunction::new((-degree..=degree).map(|n| {
        let s = 1.0 / ((1 + n.abs()) as f64).powi(2);
        let re = g.sample();
        let im = g.sample();
        (n, c(re * s, im * s))
    }))
}

/// `cos(3 theta) + sin(5 theta)` on the circle.
pub fn cos3_sin5() -> CircleFunction {
    CircleFunction::new([
        (3, c(0.5, 0.0)),
        (-3, c(0.5, 0.0)),
        (5, c(0.0, -0.5)),
        (-5, c(0.0, 0.5)),
    ])
}

/// Monomials `z^1..z^8`, two random degree-32 polynomials and
/// `cos(3 theta) + sin(5 theta)`.
pub fn circle_family() -> Vec<Named<CircleFunction>> {
    let mut out: Vec<Named<CircleFunction>> = (1..=8)
        .map(|n| named(&format!("z^{n}"), CircleFunction::monomial(n, c(1.0, 0.0))))
        .collect();
    out.push(named("random32a", random_trig_poly(0x5eed_0001, 32)));
    out.push(named("random32b", random_trig_poly(0x5eed_0002, 32)));
    out.push(named("cos3t+sin5t", cos3_sin5()));
    out
}

/// Largest `|n|` over a family.
pub fn circle_family_degree(family: &[Named<CircleFunction>]) -> u32 {
    family
        .iter()
        .map(|f| f.f.degree() as u32)
        .max()
        .unwrap_or(1)
        .max(1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilySelection {
    Full,
    Polynomial,
    Modes,
}

impl FamilySelection {
    pub fn line(&self) -> Vec<Named<LineFunction>> {
        let all = line_family();
        match self {
            FamilySelection::Full => all,
            FamilySelection::Polynomial => {
                all.into_iter().filter(|f| f.f.modes().is_empty()).collect()
            }
            FamilySelection::Modes => all
                .into_iter()
                .filter(|f| !f.f.modes().is_empty())
                .collect(),
        }
    }

    pub fn circle(&self) -> Vec<Named<CircleFunction>> {
        let all = circle_family();
        match self {
            FamilySelection::Full => all,
            FamilySelection::Polynomial => all
                .into_iter()
                .filter(|f| f.f.coeffs().count() == 1)
                .collect(),
            FamilySelection::Modes => all
                .into_iter()
                .filter(|f| f.f.coeffs().count() > 1)
                .collect(),
        }
    }
}

/// `-(1/2) sum_{n=1}^{N} sin(n theta) / n^3`: a `C^2` function whose tangential
/// second derivative `(1/2) sum sin(n theta)/n` stays below one in modulus
/// while its `B^2_{inf,1}` seminorm grows like `log N`.
pub fn sawtooth_circle(terms: i64) -> CircleFunction {
    // sin(n t) = (z^n - z^-n) / (2i)
    CircleFunction::new((1..=terms).flat_map(|n| {
        let a = -0.5 / (n as f64).powi(3);
        [(n, c(0.0, -a / 2.0)), (-n, c(0.0, a / 2.0))]
    }))
}

/// Line analogue of [`sawtooth_circle`].
pub fn sawtooth_line(terms: i64) -> LineFunction {
    LineFunction::from_modes((1..=terms).flat_map(|n| {
        let a = -0.5 / (n as f64).powi(3);
        [(n as f64, c(0.0, -a / 2.0)), (-(n as f64), c(0.0, a / 2.0))]
    }))
    .expect("distinct integer frequencies")
}
