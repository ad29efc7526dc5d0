//! Finite-dimensional double operator integrals
//! `sum_{i,j} psi(lambda_i, mu_j) P_i T Q_j`, the perturbation and derivative
//! formulas built from them, and the second-order residual operators.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::funcmodel::{default_delta, CircleFunction, LineFunction, TestFunction};
use crate::matrix::ComplexMatrix;
use crate::spectral::{
    eig_hermitian, eig_unitary, exp_i, s1_norm, s2_norm, unitary_log, SpectralDecomposition,
};

/// A kernel `psi(x, y)` evaluated on pairs of eigenvalues.
pub struct DoiKernel<'a> {
    eval: Box<dyn Fn(Complex64, Complex64) -> Complex64 + Sync + 'a>,
}

impl<'a> DoiKernel<'a> {
    pub fn new(f: impl Fn(Complex64, Complex64) -> Complex64 + Sync + 'a) -> Self {
        Self { eval: Box::new(f) }
    }

    pub fn eval(&self, x: Complex64, y: Complex64) -> Complex64 {
        (self.eval)(x, y)
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(move |_, _| c)
    }

    /// `f(x) g(y)`.
    pub fn separable(
        f: impl Fn(Complex64) -> Complex64 + Sync + 'a,
        g: impl Fn(Complex64) -> Complex64 + Sync + 'a,
    ) -> Self {
        Self::new(move |x, y| f(x) * g(y))
    }

    /// The divided difference of `f` with the default diagonal tolerance.
    pub fn divided_difference(f: &'a TestFunction) -> Self {
        Self::new(move |x, y| f.breve_eval(x, y, None))
    }

    /// `tau * f_breve(zeta, tau)` on the circle.
    pub fn tau_divided_difference(f: &'a CircleFunction) -> Self {
        Self::new(move |z, t| t * f.breve(z, t, default_delta(z, t)))
    }
}

/// `Q_L (psi(lambda_i, mu_j) o (Q_L* T Q_R)) Q_R*`.
pub fn doi_apply(
    left: &SpectralDecomposition,
    right: &SpectralDecomposition,
    kernel: &DoiKernel,
    t: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    let n = t.dim();
    for d in [left.dim(), right.dim()] {
        if d != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: d,
            });
        }
    }
    let table = ComplexMatrix::from_fn(n, |i, j| {
        kernel.eval(left.eigenvalues[i], right.eigenvalues[j])
    });
    let inner = left.to_eigenbasis(t, right).hadamard(&table);
    Ok(left.from_eigenbasis(&inner, right))
}

fn check_same_dim(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

/// `f(M)` for a Hermitian decomposition and a line function.
pub fn line_function_of(d: &SpectralDecomposition, f: &LineFunction) -> ComplexMatrix {
    d.apply(|z| f.eval(z.re))
}

/// `f(U)` for a unitary decomposition and a circle function.
pub fn circle_function_of(d: &SpectralDecomposition, f: &CircleFunction) -> ComplexMatrix {
    d.apply(|z| f.eval(z))
}

/// `f(B) - f(A)` as the double operator integral of the divided difference
/// against `B - A`.
pub fn perturbation_diff_sa(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    f: &LineFunction,
) -> Result<ComplexMatrix> {
    check_same_dim(a, b)?;
    let ea = eig_hermitian(a)?;
    let eb = eig_hermitian(b)?;
    let tf = TestFunction::Line(f.clone());
    let kernel = DoiKernel::divided_difference(&tf);
    doi_apply(&eb, &ea, &kernel, &(b - a))
}

/// `d/ds f(A + sK)` at `s = 0` from a precomputed decomposition of `A`.
pub fn derivative_term_sa_with(
    ea: &SpectralDecomposition,
    k: &ComplexMatrix,
    f: &LineFunction,
) -> Result<ComplexMatrix> {
    let tf = TestFunction::Line(f.clone());
    let kernel = DoiKernel::divided_difference(&tf);
    doi_apply(ea, ea, &kernel, k)
}

/// `d/ds f(A + sK)` at `s = 0`.
pub fn derivative_term_sa(
    a: &ComplexMatrix,
    k: &ComplexMatrix,
    f: &LineFunction,
) -> Result<ComplexMatrix> {
    check_same_dim(a, k)?;
    derivative_term_sa_with(&eig_hermitian(a)?, k, f)
}

/// `d/ds f(exp(isA) U)` at `s = 0` from a precomputed decomposition of `U`.
pub fn derivative_term_unitary_with(
    eu: &SpectralDecomposition,
    a: &ComplexMatrix,
    f: &CircleFunction,
) -> Result<ComplexMatrix> {
    let d = doi_apply(eu, eu, &DoiKernel::tau_divided_difference(f), a)?;
    Ok(d.scale(Complex64::new(0.0, 1.0)))
}

/// `d/ds f(exp(isA) U)` at `s = 0`, i.e. `i * DOI(E_U, E_U, tau f_breve, A)`.
pub fn derivative_term_unitary(
    u: &ComplexMatrix,
    a: &ComplexMatrix,
    f: &CircleFunction,
) -> Result<ComplexMatrix> {
    check_same_dim(u, a)?;
    derivative_term_unitary_with(&eig_unitary(u)?, a, f)
}

/// Central difference `(f(A + hK) - f(A - hK)) / 2h`.
pub fn central_difference_sa(
    a: &ComplexMatrix,
    k: &ComplexMatrix,
    f: &LineFunction,
    h: f64,
) -> Result<ComplexMatrix> {
    let plus = line_function_of(&eig_hermitian(&(a + &k.scale_real(h)))?, f);
    let minus = line_function_of(&eig_hermitian(&(a - &k.scale_real(h)))?, f);
    Ok((plus - &minus).scale_real(0.5 / h))
}

/// Central difference of `s -> f(exp(isA) U)` at `s = 0`.
pub fn central_difference_unitary(
    u: &ComplexMatrix,
    a: &ComplexMatrix,
    f: &CircleFunction,
    h: f64,
) -> Result<ComplexMatrix> {
    let at = |s: f64| -> Result<ComplexMatrix> {
        let e = exp_i(&eig_hermitian(&a.scale_real(s))?);
        Ok(circle_function_of(&eig_unitary(&(&e * u))?, f))
    };
    Ok((at(h)? - &at(-h)?).scale_real(0.5 / h))
}

/// Second-order remainder together with its norms.
#[derive(Clone, Debug)]
pub struct ResidualOperator {
    pub value: ComplexMatrix,
    /// `[T1, T2, T3]` of the unitary three-term splitting.
    pub decomposition: Option<[ComplexMatrix; 3]>,
    pub s1: f64,
    pub s2: f64,
    pub branch_ambiguous: bool,
}

impl ResidualOperator {
    fn new(
        value: ComplexMatrix,
        decomposition: Option<[ComplexMatrix; 3]>,
        branch_ambiguous: bool,
    ) -> Self {
        Self {
            s1: s1_norm(&value),
            s2: s2_norm(&value),
            value,
            decomposition,
            branch_ambiguous,
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.value.trace()
    }

    /// `||T1 + T2 + T3 - value||_F`, when the splitting is present.
    pub fn decomposition_error(&self) -> Option<f64> {
        self.decomposition.as_ref().map(|[t1, t2, t3]| {
            let sum = &(t1 + t2) + t3;
            (sum - &self.value).frobenius_norm()
        })
    }
}

/// `f(A + K) - f(A) - d/ds f(A + sK)|_0` from a precomputed decomposition of `A`.
///
/// The quadratic part contributes `c2 K^2`, the affine part nothing, and the
/// mode part is assembled from direct matrix functions minus the DOI
/// derivative term.
pub fn koplienko_residual_sa_with(
    ea: &SpectralDecomposition,
    eb: &SpectralDecomposition,
    k: &ComplexMatrix,
    f: &LineFunction,
) -> Result<ResidualOperator> {
    let c2 = f.poly()[2];
    let mut value = (k * k).scale(c2);
    let modes = f.mode_part();
    if !modes.is_zero() {
        let diff = line_function_of(eb, &modes) - &line_function_of(ea, &modes);
        let deriv = derivative_term_sa_with(ea, k, &modes)?;
        value = value + &(diff - &deriv);
    }
    Ok(ResidualOperator::new(value, None, false))
}

pub fn koplienko_residual_sa(
    a: &ComplexMatrix,
    k: &ComplexMatrix,
    f: &LineFunction,
) -> Result<ResidualOperator> {
    check_same_dim(a, k)?;
    let ea = eig_hermitian(a)?;
    let eb = eig_hermitian(&(a + k))?;
    koplienko_residual_sa_with(&ea, &eb, k, f)
}

/// Decompositions shared by every unitary residual of one pair `(U, V)`.
#[derive(Clone, Debug)]
pub struct UnitaryPair {
    pub eu: SpectralDecomposition,
    pub ev: SpectralDecomposition,
    /// `A` with `V = exp(iA) U`.
    pub a: ComplexMatrix,
    /// `I - exp(iA)`.
    pub chord: ComplexMatrix,
    /// `exp(iA) - I - iA`.
    pub second_order: ComplexMatrix,
    pub branch_ambiguous: bool,
}

impl UnitaryPair {
    pub fn new(u: &ComplexMatrix, v: &ComplexMatrix) -> Result<Self> {
        let log = unitary_log(u, v)?;
        let n = u.dim();
        let id = ComplexMatrix::identity(n);
        let e = exp_i(&log.decomposition);
        let chord = &id - &e;
        let second_order = (&e - &id) - &log.a.scale(Complex64::new(0.0, 1.0));
        Ok(Self {
            eu: eig_unitary(u)?,
            ev: eig_unitary(v)?,
            a: log.a,
            chord,
            second_order,
            branch_ambiguous: log.branch_ambiguous,
        })
    }

    /// `f(V) - f(U) - d/ds f(U_s)|_0` with `U_s = exp(isA) U`, plus the splitting
    /// `T1 = -DOI(E_V, E_U, tau f_breve, I - e^{iA})`,
    /// `T2 = DOI(E_U, E_U, tau f_breve, I - e^{iA})`,
    /// `T3 = DOI(E_U, E_U, tau f_breve, e^{iA} - I - iA)`.
    pub fn residual(&self, f: &CircleFunction) -> Result<ResidualOperator> {
        let kernel = DoiKernel::tau_divided_difference(f);
        let diff = circle_function_of(&self.ev, f) - &circle_function_of(&self.eu, f);
        let deriv = derivative_term_unitary_with(&self.eu, &self.a, f)?;
        let value = diff - &deriv;
        let t1 = -&doi_apply(&self.ev, &self.eu, &kernel, &self.chord)?;
        let t2 = doi_apply(&self.eu, &self.eu, &kernel, &self.chord)?;
        let t3 = doi_apply(&self.eu, &self.eu, &kernel, &self.second_order)?;
        Ok(ResidualOperator::new(
            value,
            Some([t1, t2, t3]),
            self.branch_ambiguous,
        ))
    }
}

pub fn neidhardt_residual_unitary(
    u: &ComplexMatrix,
    v: &ComplexMatrix,
    f: &CircleFunction,
) -> Result<ResidualOperator> {
    UnitaryPair::new(u, v)?.residual(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::matrix_function;
    use crate::verify::rng::Gaussian;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_hermitian(g: &mut Gaussian, n: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(n, |_, _| c(g.sample(), g.sample())).hermitian_part()
    }

    #[test]
    fn constant_kernel_is_identity_map() {
        let mut g = Gaussian::new(1);
        let a = random_hermitian(&mut g, 5);
        let b = random_hermitian(&mut g, 5);
        let t = ComplexMatrix::from_fn(5, |_, _| c(g.sample(), g.sample()));
        let (ea, eb) = (eig_hermitian(&a).unwrap(), eig_hermitian(&b).unwrap());
        let out = doi_apply(&ea, &eb, &DoiKernel::constant(c(1.0, 0.0)), &t).unwrap();
        assert!((out - &t).frobenius_norm() < 1e-13);
    }

    #[test]
    fn separable_kernel_matches_products() {
        let mut g = Gaussian::new(2);
        let a = random_hermitian(&mut g, 6);
        let b = random_hermitian(&mut g, 6);
        let t = ComplexMatrix::from_fn(6, |_, _| c(g.sample(), g.sample()));
        let (ea, eb) = (eig_hermitian(&a).unwrap(), eig_hermitian(&b).unwrap());
        let f = |z: Complex64| (z * 0.7).exp();
        let h = |z: Complex64| z * z - 1.0;
        let out = doi_apply(&ea, &eb, &DoiKernel::separable(f, h), &t).unwrap();
        let expected = &(&matrix_function(&ea, f) * &t) * &matrix_function(&eb, h);
        assert!((out - &expected).frobenius_norm() < 1e-11 * (1.0 + expected.frobenius_norm()));
    }

    #[test]
    fn s2_contraction() {
        let mut g = Gaussian::new(3);
        let a = random_hermitian(&mut g, 6);
        let b = random_hermitian(&mut g, 6);
        let t = ComplexMatrix::from_fn(6, |_, _| c(g.sample(), g.sample()));
        let (ea, eb) = (eig_hermitian(&a).unwrap(), eig_hermitian(&b).unwrap());
        let out = doi_apply(&ea, &eb, &DoiKernel::new(|x, y| (x * y).sin()), &t).unwrap();
        let sup = ea
            .eigenvalues
            .iter()
            .flat_map(|&x| eb.eigenvalues.iter().map(move |&y| (x * y).sin().norm()))
            .fold(0.0, f64::max);
        assert!(s2_norm(&out) <= sup * s2_norm(&t) * (1.0 + 1e-12));
    }

    #[test]
    fn perturbation_formula_small_cases() {
        let a = ComplexMatrix::from_real_diag(&[0.0, 1.0]);
        let k = ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let b = &a + &k;
        let sq = LineFunction::polynomial(c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0));
        let out = perturbation_diff_sa(&a, &b, &sq).unwrap();
        let expected = &(&b * &b) - &(&a * &a);
        assert!((out - &expected).frobenius_norm() < 1e-13);

        let lin = LineFunction::polynomial(c(0.0, 0.0), c(2.5, -1.0), c(0.0, 0.0));
        let out = perturbation_diff_sa(&a, &b, &lin).unwrap();
        assert!((out - &k.scale(c(2.5, -1.0))).frobenius_norm() < 1e-13);
        assert!(perturbation_diff_sa(&a, &a, &sq).unwrap().frobenius_norm() < 1e-15);
    }

    #[test]
    fn derivative_sa_closed_forms() {
        let mut g = Gaussian::new(4);
        let a = random_hermitian(&mut g, 5);
        let k = random_hermitian(&mut g, 5);
        let sq = LineFunction::polynomial(c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0));
        let d = derivative_term_sa(&a, &k, &sq).unwrap();
        let expected = &(&a * &k) + &(&k * &a);
        assert!((d - &expected).frobenius_norm() < 1e-12 * (1.0 + expected.frobenius_norm()));

        // Commuting perturbation: K = p(A) is diagonal in A's eigenbasis.
        let ea = eig_hermitian(&a).unwrap();
        let kc = matrix_function(&ea, |z| z * 0.3 + 1.0);
        let f = LineFunction::mode(1.3, c(1.0, 0.0)).unwrap();
        let d = derivative_term_sa(&a, &kc, &f).unwrap();
        let expected = &line_function_of(&ea, &f.derivative(1)) * &kc;
        assert!((d - &expected).frobenius_norm() < 1e-12);
    }

    #[test]
    fn derivative_unitary_closed_forms() {
        let mut g = Gaussian::new(5);
        let h = random_hermitian(&mut g, 4);
        let u = exp_i(&eig_hermitian(&h).unwrap());
        let a = random_hermitian(&mut g, 4);
        let z = CircleFunction::monomial(1, c(1.0, 0.0));
        let d = derivative_term_unitary(&u, &a, &z).unwrap();
        let expected = (&a * &u).scale(c(0.0, 1.0));
        assert!((d - &expected).frobenius_norm() < 1e-12);
        let z2 = CircleFunction::monomial(2, c(1.0, 0.0));
        let d = derivative_term_unitary(&u, &a, &z2).unwrap();
        let expected = (&(&(&a * &u) * &u) + &(&(&u * &a) * &u)).scale(c(0.0, 1.0));
        assert!((d - &expected).frobenius_norm() < 1e-12);
        let one = CircleFunction::monomial(0, c(3.0, 0.0));
        assert!(
            derivative_term_unitary(&u, &a, &one)
                .unwrap()
                .frobenius_norm()
                == 0.0
        );

        let u1 = ComplexMatrix::identity(1);
        let a1 = ComplexMatrix::from_real_diag(&[0.37]);
        let d = derivative_term_unitary(&u1, &a1, &z2).unwrap();
        assert!((d[(0, 0)] - c(0.0, 0.74)).norm() < 1e-15);
    }

    #[test]
    fn scalar_residuals() {
        let k = 0.3;
        let a = ComplexMatrix::from_real_diag(&[0.0]);
        let kk = ComplexMatrix::from_real_diag(&[k]);
        let f = LineFunction::mode(1.0, c(1.0, 0.0)).unwrap();
        let r = koplienko_residual_sa(&a, &kk, &f).unwrap();
        let expected = Complex64::new(0.0, k).exp() - 1.0 - c(0.0, k);
        assert!((r.value[(0, 0)] - expected).norm() < 1e-15);
        let sq = LineFunction::polynomial(c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0));
        assert!(
            (koplienko_residual_sa(&a, &kk, &sq).unwrap().value[(0, 0)] - c(k * k, 0.0)).norm()
                < 1e-15
        );

        let u = ComplexMatrix::identity(1);
        for (n, alpha) in [(1i64, 0.4), (2, 0.4), (3, -1.1)] {
            let v = ComplexMatrix::from_diag(&[Complex64::new(0.0, alpha).exp()]);
            let f = CircleFunction::monomial(n, c(1.0, 0.0));
            let r = neidhardt_residual_unitary(&u, &v, &f).unwrap();
            let na = n as f64 * alpha;
            let expected = Complex64::new(0.0, na).exp() - 1.0 - c(0.0, na);
            assert!((r.value[(0, 0)] - expected).norm() < 1e-14, "n={n}");
            assert!(r.decomposition_error().unwrap() < 1e-14);
        }
    }

    #[test]
    fn finite_difference_order_sa() {
        let mut g = Gaussian::new(6);
        let a = random_hermitian(&mut g, 6);
        let k = random_hermitian(&mut g, 6);
        let f = LineFunction::from_modes([(1.0, c(1.0, 0.0)), (-2.0, c(0.3, 0.4))]).unwrap();
        let d = derivative_term_sa(&a, &k, &f).unwrap();
        let e1 = (central_difference_sa(&a, &k, &f, 1e-3).unwrap() - &d).frobenius_norm();
        let e2 = (central_difference_sa(&a, &k, &f, 5e-4).unwrap() - &d).frobenius_norm();
        assert!((e1 / e2).log2() >= 1.9, "{e1} {e2}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn doi_is_linear(seed in any::<u64>(), s in -2.0f64..2.0) {
            let mut g = Gaussian::new(seed);
            let a = random_hermitian(&mut g, 4);
            let ea = eig_hermitian(&a).unwrap();
            let t1 = ComplexMatrix::from_fn(4, |_, _| c(g.sample(), g.sample()));
            let t2 = ComplexMatrix::from_fn(4, |_, _| c(g.sample(), g.sample()));
            let k1 = DoiKernel::new(|x, y| (x - y).cos());
            let k2 = DoiKernel::new(|x, y| x * y);
            let ksum = DoiKernel::new(|x, y| (x - y).cos() + x * y * s);
            let lhs = doi_apply(&ea, &ea, &ksum, &(&t1 + &t2.scale_real(s))).unwrap();
            let rhs = &(&doi_apply(&ea, &ea, &k1, &t1).unwrap() + &doi_apply(&ea, &ea, &k1, &t2).unwrap().scale_real(s))
                + &(&doi_apply(&ea, &ea, &k2, &t1).unwrap() + &doi_apply(&ea, &ea, &k2, &t2).unwrap().scale_real(s)).scale_real(s);
            prop_assert!((lhs - &rhs).frobenius_norm() <= 1e-11 * (1.0 + rhs.frobenius_norm()));
        }
    }
}
