//! Dyadic Littlewood-Paley windows, block decompositions and the Besov
//! seminorms `B^1_{inf,1}`, `B^2_{inf,1}` on the circle and the line.
//!
//! The window is `w(x) = h(log2(2x))` on `[1/2, 1]` and `1 - h(log2 x)` on
//! `[1, 2]`, `h(t) = 3t^2 - 2t^3`. Because `h(t) + h(1 - t) = 1`, the dilates
//! `w(2^n x)` sum to one on `(0, inf)`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::funcmodel::{sup_almost_periodic, CircleFunction, LineFunction, Mode, TestFunction};

/// The C^1 dyadic window described in the module docs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DyadicWindow;

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

impl DyadicWindow {
    pub fn eval(&self, x: f64) -> f64 {
        if !(x > 0.5 && x < 2.0) {
            return 0.0;
        }
        if x <= 1.0 {
            smoothstep((2.0 * x).log2())
        } else {
            1.0 - smoothstep(x.log2())
        }
    }

    /// `sum_n w(2^n x)`; only the two dyadic neighbours of `x` contribute.
    pub fn partition_sum(&self, x: f64) -> f64 {
        let n0 = -(x.log2().floor() as i32);
        (n0 - 2..=n0 + 2).map(|n| self.eval(2f64.powi(n) * x)).sum()
    }
}

pub fn make_window() -> DyadicWindow {
    DyadicWindow
}

/// Littlewood-Paley pieces of a trigonometric polynomial.
///
/// `analytic[0]` is the `conj(z) + 1 + z` block; `analytic[n]`, `n >= 1`, holds
/// the coefficients `f^(k) w(k / 2^n)`, `k >= 2`, and `conjugate[n]` the mirror
/// image for `k <= -2`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CircleBlocks {
    pub analytic: BTreeMap<u32, CircleFunction>,
    pub conjugate: BTreeMap<u32, CircleFunction>,
}

/// Littlewood-Paley pieces of a line function, indexed by `n` in `Z`
/// (block `n` collects frequencies in `(2^(n-1), 2^(n+1))`). The polynomial
/// part is carried separately.
#[derive(Clone, Debug, PartialEq)]
pub struct LineBlocks {
    pub analytic: BTreeMap<i32, LineFunction>,
    pub conjugate: BTreeMap<i32, LineFunction>,
    pub poly: [Complex64; 3],
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpBlocks {
    Circle(CircleBlocks),
    Line(LineBlocks),
}

impl LpBlocks {
    /// Sum of all blocks (plus the polynomial part on the line).
    pub fn reconstruct(&self) -> TestFunction {
        match self {
            LpBlocks::Circle(b) => {
                let mut acc = CircleFunction::zero();
                for f in b.analytic.values().chain(b.conjugate.values()) {
                    acc = acc.add(f);
                }
                TestFunction::Circle(acc)
            }
            LpBlocks::Line(b) => {
                let mut acc = LineFunction::polynomial(b.poly[0], b.poly[1], b.poly[2]);
                for f in b.analytic.values().chain(b.conjugate.values()) {
                    acc = acc.add(f).expect("block frequencies are valid");
                }
                TestFunction::Line(acc)
            }
        }
    }

    /// Number of nonzero blocks.
    pub fn len(&self) -> usize {
        match self {
            LpBlocks::Circle(b) => b.analytic.len() + b.conjugate.len(),
            LpBlocks::Line(b) => b.analytic.len() + b.conjugate.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Dyadic levels `n` with `w(x / 2^n) > 0`.
fn levels(x: f64, window: &DyadicWindow) -> impl Iterator<Item = (i32, f64)> + '_ {
    let n0 = x.log2().floor() as i32;
    (n0 - 1..=n0 + 2).filter_map(move |n| {
        let w = window.eval(x / 2f64.powi(n));
        (w > 0.0).then_some((n, w))
    })
}

fn circle_blocks(f: &CircleFunction, window: &DyadicWindow) -> CircleBlocks {
    let mut analytic: BTreeMap<u32, Vec<(i64, Complex64)>> = BTreeMap::new();
    let mut conjugate: BTreeMap<u32, Vec<(i64, Complex64)>> = BTreeMap::new();
    for (k, c) in f.coeffs() {
        if k.abs() <= 1 {
            analytic.entry(0).or_default().push((k, c));
            continue;
        }
        let target = if k > 0 { &mut analytic } else { &mut conjugate };
        for (n, w) in levels(k.unsigned_abs() as f64, window) {
            // k >= 2 only reaches n >= 1.
            target.entry(n as u32).or_default().push((k, c * w));
        }
    }
    let build = |m: BTreeMap<u32, Vec<(i64, Complex64)>>| -> BTreeMap<u32, CircleFunction> {
        m.into_iter()
            .map(|(n, cs)| (n, CircleFunction::new(cs)))
            .filter(|(_, f)| !f.is_zero())
            .collect()
    };
    CircleBlocks {
        analytic: build(analytic),
        conjugate: build(conjugate),
    }
}

fn line_blocks(f: &LineFunction, window: &DyadicWindow) -> LineBlocks {
    let mut analytic: BTreeMap<i32, Vec<Mode>> = BTreeMap::new();
    let mut conjugate: BTreeMap<i32, Vec<Mode>> = BTreeMap::new();
    for m in f.modes() {
        let target = if m.omega > 0.0 {
            &mut analytic
        } else {
            &mut conjugate
        };
        for (n, w) in levels(m.omega.abs(), window) {
            target.entry(n).or_default().push(Mode {
                omega: m.omega,
                amp: m.amp * w,
            });
        }
    }
    let zero = [Complex64::new(0.0, 0.0); 3];
    let build = |m: BTreeMap<i32, Vec<Mode>>| -> BTreeMap<i32, LineFunction> {
        m.into_iter()
            .map(|(n, modes)| {
                (
                    n,
                    LineFunction::new(zero, modes).expect("frequencies come from a valid function"),
                )
            })
            .filter(|(_, f)| !f.is_zero())
            .collect()
    };
    LineBlocks {
        analytic: build(analytic),
        conjugate: build(conjugate),
        poly: f.poly(),
    }
}

pub fn lp_blocks(f: &TestFunction, window: &DyadicWindow) -> LpBlocks {
    match f {
        TestFunction::Circle(c) => LpBlocks::Circle(circle_blocks(c, window)),
        TestFunction::Line(l) => LpBlocks::Line(line_blocks(l, window)),
    }
}

/// `sup |f^(s)|` on the line; infinite when the polynomial part has degree > s.
fn line_derivative_sup(f: &LineFunction, s: u32) -> f64 {
    let d = f.derivative(s);
    let [c0, c1, c2] = d.poly();
    if c1 != Complex64::new(0.0, 0.0) || c2 != Complex64::new(0.0, 0.0) {
        return f64::INFINITY;
    }
    let modes: Vec<(f64, Complex64)> = d.modes().iter().map(|m| (m.omega, m.amp)).collect();
    sup_almost_periodic(c0, &modes)
}

/// Besov seminorm of smoothness `s` (1 or 2).
///
/// Line: `sup |f^(s)| + sum_n 2^(ns) (||f * W_n||_inf + ||f * W_n^#||_inf)`.
/// Circle: `sum_{n >= 0} 2^(ns) (||f * W_n||_inf + ||f * W_n^#||_inf)`.
pub fn besov_seminorm(f: &TestFunction, s: u32, window: &DyadicWindow) -> f64 {
    let weight = |n: i32| 2f64.powi(n * s as i32);
    match lp_blocks(f, window) {
        LpBlocks::Circle(b) => b
            .analytic
            .iter()
            .chain(b.conjugate.iter())
            .map(|(&n, blk)| weight(n as i32) * blk.sup_norm())
            .sum(),
        LpBlocks::Line(b) => {
            let TestFunction::Line(l) = f else {
                unreachable!()
            };
            let blocks: f64 = b
                .analytic
                .iter()
                .chain(b.conjugate.iter())
                .map(|(&n, blk)| weight(n) * blk.sup_norm())
                .sum();
            line_derivative_sup(l, s) + blocks
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcmodel::{difference_integral, DifferenceGrid};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn window_values() {
        let w = make_window();
        assert_eq!(w.eval(0.5), 0.0);
        assert_eq!(w.eval(2.0), 0.0);
        assert_eq!(w.eval(1.0), 1.0);
        // Oracle: at 0.7 only n = 0 and n = 1 overlap.
        let direct = w.eval(0.7) + w.eval(1.4);
        assert!((direct - 1.0).abs() < 1e-12);
        assert!((w.partition_sum(0.7) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partition_of_unity_on_log_grid() {
        let w = make_window();
        let count = 100_000;
        let mut worst: f64 = 0.0;
        for i in 0..count {
            let x = 2f64.powf(-30.0 + 60.0 * i as f64 / (count - 1) as f64);
            worst = worst.max((w.partition_sum(x) - 1.0).abs());
        }
        assert!(worst <= 1e-12, "{worst}");
    }

    #[test]
    fn dyadic_monomial_has_one_block() {
        let w = make_window();
        for j in 1..8u32 {
            let f = TestFunction::Circle(CircleFunction::monomial(1 << j, c(1.0, 0.0)));
            let LpBlocks::Circle(b) = lp_blocks(&f, &w) else {
                unreachable!()
            };
            assert_eq!(b.analytic.len(), 1);
            assert!(b.conjugate.is_empty());
            assert_eq!(
                b.analytic[&j],
                CircleFunction::monomial(1 << j, c(1.0, 0.0))
            );
        }
        let z = TestFunction::Circle(CircleFunction::monomial(1, c(1.0, 0.0)));
        let LpBlocks::Circle(b) = lp_blocks(&z, &w) else {
            unreachable!()
        };
        assert_eq!(b.analytic.keys().copied().collect::<Vec<_>>(), vec![0]);
        assert!(lp_blocks(&TestFunction::Circle(CircleFunction::zero()), &w).is_empty());
    }

    #[test]
    fn seminorm_closed_forms() {
        let w = make_window();
        let quad = TestFunction::Line(LineFunction::polynomial(
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(1.0, 0.0),
        ));
        assert_eq!(besov_seminorm(&quad, 2, &w), 2.0);
        for m in -3..6 {
            let f = TestFunction::Line(LineFunction::mode(2f64.powi(m), c(1.0, 0.0)).unwrap());
            let expected = 2.0 * 4f64.powi(m);
            assert!((besov_seminorm(&f, 2, &w) - expected).abs() <= 1e-12 * expected);
        }
        assert_eq!(
            besov_seminorm(&TestFunction::Line(LineFunction::zero()), 2, &w),
            0.0
        );
    }

    #[test]
    fn lp_and_difference_characterizations_agree_up_to_constant() {
        let w = make_window();
        let grid = DifferenceGrid::default();
        for m in -4..=4 {
            let f = LineFunction::mode(2f64.powi(m), c(1.0, 0.0)).unwrap();
            let lp = besov_seminorm(&TestFunction::Line(f.clone()), 2, &w);
            let diff = f.derivative(2).sup_norm() + difference_integral(&f, 3, &grid).unwrap();
            let ratio = lp / diff;
            assert!((1.0 / 32.0..=32.0).contains(&ratio), "m={m} ratio={ratio}");
        }
    }

    proptest! {
        #[test]
        fn blocks_reconstruct_circle(coeffs in proptest::collection::vec((-40i64..=40, -1.0f64..1.0, -1.0f64..1.0), 0..12)) {
            let f = CircleFunction::new(coeffs.into_iter().map(|(n, re, im)| (n, c(re, im))));
            let tf = TestFunction::Circle(f.clone());
            let TestFunction::Circle(back) = lp_blocks(&tf, &make_window()).reconstruct() else { unreachable!() };
            for n in -40..=40 {
                prop_assert!((back.coefficient(n) - f.coefficient(n)).norm() <= 1e-14);
            }
        }

        #[test]
        fn blocks_reconstruct_line(freqs in proptest::collection::btree_set(1u32..4000, 1..6), signs in proptest::collection::vec(any::<bool>(), 6)) {
            let modes: Vec<(f64, Complex64)> = freqs
                .iter()
                .zip(&signs)
                .map(|(&q, &neg)| {
                    let w = q as f64 / 64.0;
                    (if neg { -w } else { w }, c(0.5, -0.25))
                })
                .collect();
            let mut seen = std::collections::BTreeSet::new();
            let modes: Vec<_> = modes.into_iter().filter(|m| seen.insert(m.0.to_bits())).collect();
            let f = LineFunction::from_modes(modes).unwrap();
            let TestFunction::Line(back) = lp_blocks(&TestFunction::Line(f.clone()), &make_window()).reconstruct() else { unreachable!() };
            for m in f.modes() {
                let b = back.modes().iter().find(|k| k.omega == m.omega).unwrap();
                prop_assert!((b.amp - m.amp).norm() <= 1e-14);
            }
            prop_assert_eq!(back.modes().len(), f.modes().len());
        }

        #[test]
        fn dyadic_dilation_scales_seminorm(omega in 0.1f64..10.0, m in -3i32..4) {
            let w = make_window();
            let f = LineFunction::mode(omega, c(1.0, 0.5)).unwrap();
            let base = besov_seminorm(&TestFunction::Line(f.clone()), 2, &w);
            let scaled = besov_seminorm(&TestFunction::Line(f.dilate(2f64.powi(m))), 2, &w);
            let expected = 4f64.powi(m) * base;
            prop_assert!((scaled - expected).abs() <= 1e-12 * expected);
        }
    }
}
