//! Spectral substrate: Hermitian and unitary eigendecompositions, functional
//! calculus, Schatten norms and the logarithm `A` with `V = exp(iA) U`.
//!
//! The Hermitian solver is a cyclic complex Jacobi iteration. Unitary matrices
//! are reduced to it through their commuting Hermitian parts
//! `H = (U + U*)/2` and `S = (U - U*)/(2i)`: `H` is diagonalized first, then
//! every cluster of nearly equal `H`-eigenvalues is split by `S`, and every
//! remaining cluster of `S` is split again by `H`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;

const MAX_SWEEPS: usize = 100;
/// Width of the eigenvalue clusters that are re-split by the partner matrix.
const UNITARY_CLUSTER_TOL: f64 = 1e-4;
/// Distance from -1 below which the logarithm branch is ambiguous.
pub const BRANCH_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumKind {
    Hermitian,
    Unitary,
}

/// Eigenvalues together with an orthonormal system of eigenvectors (the
/// columns of `eigenvectors`). Hermitian spectra are sorted ascending,
/// unitary spectra by principal argument in `(-pi, pi]`.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub kind: SpectrumKind,
    pub eigenvalues: Vec<Complex64>,
    pub eigenvectors: ComplexMatrix,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Real parts of the eigenvalues (exact for a Hermitian source).
    pub fn real_eigenvalues(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|z| z.re).collect()
    }

    /// `Q diag(lambda) Q*`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        self.apply(|z| z)
    }

    /// `Q diag(f(lambda_i)) Q*`.
    pub fn apply(&self, f: impl Fn(Complex64) -> Complex64) -> ComplexMatrix {
        let q = &self.eigenvectors;
        let n = self.dim();
        let vals: Vec<Complex64> = self.eigenvalues.iter().map(|&z| f(z)).collect();
        ComplexMatrix::from_fn(n, |i, j| {
            (0..n).map(|k| q[(i, k)] * vals[k] * q[(j, k)].conj()).sum()
        })
    }

    /// `Q* T Q'`, i.e. `T` written in the pair of eigenbases (`self` on the left).
    pub fn to_eigenbasis(&self, t: &ComplexMatrix, right: &SpectralDecomposition) -> ComplexMatrix {
        &(&self.eigenvectors.adjoint() * t) * &right.eigenvectors
    }

    /// Inverse of [`Self::to_eigenbasis`].
    pub fn from_eigenbasis(
        &self,
        t: &ComplexMatrix,
        right: &SpectralDecomposition,
    ) -> ComplexMatrix {
        &(&self.eigenvectors * t) * &right.eigenvectors.adjoint()
    }

    /// `||M Q - Q Lambda||_F` for the source matrix `m`.
    pub fn residual(&self, m: &ComplexMatrix) -> f64 {
        let lam = ComplexMatrix::from_diag(&self.eigenvalues);
        (&(m * &self.eigenvectors) - &(&self.eigenvectors * &lam)).frobenius_norm()
    }

    /// `||Q*Q - I||_F`.
    pub fn orthonormality_residual(&self) -> f64 {
        self.eigenvectors.unitarity_residual()
    }
}

/// Principal argument in `(-pi, pi]`.
pub fn principal_arg(z: Complex64) -> f64 {
    let a = z.im.atan2(z.re);
    if a <= -PI {
        a + 2.0 * PI
    } else {
        a
    }
}

/// Cyclic Jacobi on a Hermitian matrix. Returns unsorted eigenvalues and the
/// accumulated unitary.
fn jacobi_hermitian(h: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let n = h.dim();
    let mut a = h.hermitian_part();
    let mut q = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm();
    if n <= 1 || scale == 0.0 {
        return Ok((a.diagonal().iter().map(|z| z.re).collect(), q));
    }
    let skip = f64::EPSILON * 1e-3 * scale;

    let off_norm = |a: &ComplexMatrix| -> f64 {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    acc += a[(i, j)].norm_sqr();
                }
            }
        }
        acc.sqrt()
    };

    for _sweep in 0..MAX_SWEEPS {
        if off_norm(&a) <= 1e-15 * scale {
            return Ok((a.diagonal().iter().map(|z| z.re).collect(), q));
        }
        let mut rotated = false;
        for p in 0..n {
            for r in (p + 1)..n {
                let apq = a[(p, r)];
                let mag = apq.norm();
                if mag <= skip {
                    continue;
                }
                rotated = true;
                let phase = apq / mag;
                let app = a[(p, p)].re;
                let aqq = a[(r, r)].re;
                let tau = (aqq - app) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // G = diag(1, conj(phase)) * [[c, s], [-s, c]] in the (p, r) plane.
                let g_pp = Complex64::new(c, 0.0);
                let g_pr = Complex64::new(s, 0.0);
                let g_rp = -phase.conj() * s;
                let g_rr = phase.conj() * c;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akr = a[(k, r)];
                    a[(k, p)] = akp * g_pp + akr * g_rp;
                    a[(k, r)] = akp * g_pr + akr * g_rr;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let ark = a[(r, k)];
                    a[(p, k)] = g_pp.conj() * apk + g_rp.conj() * ark;
                    a[(r, k)] = g_pr.conj() * apk + g_rr.conj() * ark;
                }
                a[(p, r)] = Complex64::new(0.0, 0.0);
                a[(r, p)] = Complex64::new(0.0, 0.0);
                a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
                a[(r, r)] = Complex64::new(a[(r, r)].re, 0.0);

                for k in 0..n {
                    let qkp = q[(k, p)];
                    let qkr = q[(k, r)];
                    q[(k, p)] = qkp * g_pp + qkr * g_rp;
                    q[(k, r)] = qkp * g_pr + qkr * g_rr;
                }
            }
        }
        if !rotated {
            return Ok((a.diagonal().iter().map(|z| z.re).collect(), q));
        }
    }
    let off = off_norm(&a);
    if off <= 1e-13 * scale {
        return Ok((a.diagonal().iter().map(|z| z.re).collect(), q));
    }
    Err(Error::NoConvergence {
        sweeps: MAX_SWEEPS,
        off_norm: off,
    })
}

fn permute_columns(q: &ComplexMatrix, order: &[usize]) -> ComplexMatrix {
    ComplexMatrix::from_fn(q.dim(), |i, j| q[(i, order[j])])
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub fn eig_hermitian(h: &ComplexMatrix) -> Result<SpectralDecomposition> {
    let norm = h.frobenius_norm();
    let residual = h.hermitian_residual();
    let bound = 1e-12 * (1.0 + norm);
    if residual > bound || !h.is_finite() {
        return Err(Error::NotHermitian { residual, bound });
    }
    let (vals, q) = jacobi_hermitian(h)?;
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
    Ok(SpectralDecomposition {
        kind: SpectrumKind::Hermitian,
        eigenvalues: order
            .iter()
            .map(|&i| Complex64::new(vals[i], 0.0))
            .collect(),
        eigenvectors: permute_columns(&q, &order),
    })
}

type Columns = Vec<Vec<Complex64>>;

fn quadratic_form(m: &ComplexMatrix, x: &[Complex64], y: &[Complex64]) -> Complex64 {
    let n = m.dim();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let mut row = Complex64::new(0.0, 0.0);
        for j in 0..n {
            row += m[(i, j)] * y[j];
        }
        acc += x[i].conj() * row;
    }
    acc
}

/// Diagonalizes `m` compressed to the span of `basis`; returns the rotated
/// basis and the compressed eigenvalues.
fn diagonalize_on(m: &ComplexMatrix, basis: &Columns) -> Result<(Columns, Vec<f64>)> {
    let k = basis.len();
    let compressed = ComplexMatrix::from_fn(k, |a, b| quadratic_form(m, &basis[a], &basis[b]));
    let (vals, w) = jacobi_hermitian(&compressed.hermitian_part())?;
    let n = basis[0].len();
    let rotated = (0..k)
        .map(|b| {
            (0..n)
                .map(|i| (0..k).map(|a| basis[a][i] * w[(a, b)]).sum())
                .collect()
        })
        .collect();
    Ok((rotated, vals))
}

/// Groups indices whose values lie within `tol` of their sorted neighbour.
fn clusters(vals: &[f64], tol: f64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
    let mut out: Vec<Vec<usize>> = Vec::new();
    for idx in order {
        match out.last_mut() {
            Some(last) if (vals[idx] - vals[*last.last().unwrap()]).abs() <= tol => last.push(idx),
            _ => out.push(vec![idx]),
        }
    }
    out
}

/// Splits `basis` into joint eigenvectors of the commuting pair `(first, second)`.
fn split_commuting(
    first: &ComplexMatrix,
    second: &ComplexMatrix,
    basis: Columns,
    depth: usize,
) -> Result<Columns> {
    if basis.len() <= 1 {
        return Ok(basis);
    }
    let (rotated, vals) = diagonalize_on(first, &basis)?;
    let mut out = Vec::with_capacity(rotated.len());
    for group in clusters(&vals, UNITARY_CLUSTER_TOL) {
        let sub: Columns = group.iter().map(|&i| rotated[i].clone()).collect();
        if sub.len() > 1 && depth > 0 {
            out.extend(split_commuting(second, first, sub, depth - 1)?);
        } else {
            out.extend(sub);
        }
    }
    Ok(out)
}

/// Eigendecomposition of a unitary matrix, eigenvalues sorted by principal
/// argument in `(-pi, pi]`.
pub fn eig_unitary(u: &ComplexMatrix) -> Result<SpectralDecomposition> {
    let n = u.dim();
    let residual = u.unitarity_residual();
    let bound = 1e-10 * n as f64;
    if residual > bound || !u.is_finite() {
        return Err(Error::NotUnitary { residual, bound });
    }
    let h = u.hermitian_part();
    let s = u.skew_hermitian_part();
    let identity: Columns = (0..n)
        .map(|j| {
            (0..n)
                .map(|i| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0))
                .collect()
        })
        .collect();
    let cols = split_commuting(&h, &s, identity, 2)?;

    let mut pairs: Vec<(f64, Complex64, Vec<Complex64>)> = cols
        .into_iter()
        .map(|v| {
            let lam = quadratic_form(u, &v, &v);
            let lam = lam / lam.norm();
            (principal_arg(lam), lam, v)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let eigenvectors = ComplexMatrix::from_fn(n, |i, j| pairs[j].2[i]);
    Ok(SpectralDecomposition {
        kind: SpectrumKind::Unitary,
        eigenvalues: pairs.iter().map(|p| p.1).collect(),
        eigenvectors,
    })
}

/// `f(M)` through the spectral calculus of `decomp`.
pub fn matrix_function(
    decomp: &SpectralDecomposition,
    f: impl Fn(Complex64) -> Complex64,
) -> ComplexMatrix {
    decomp.apply(f)
}

/// One-sided (Hestenes) Jacobi singular values, sorted descending.
pub fn singular_values(t: &ComplexMatrix) -> Vec<f64> {
    let n = t.dim();
    let mut cols: Columns = (0..n).map(|j| t.column(j)).collect();
    let dot = |x: &[Complex64], y: &[Complex64]| -> Complex64 {
        x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
    };
    let norm_sq = |x: &[Complex64]| -> f64 { x.iter().map(|z| z.norm_sqr()).sum() };
    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let alpha = norm_sq(&cols[i]);
                let beta = norm_sq(&cols[j]);
                let gamma = dot(&cols[i], &cols[j]);
                let mag = gamma.norm();
                if mag == 0.0 || mag <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / mag;
                let zeta = (beta - alpha) / (2.0 * mag);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                } else {
                    -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let g_ji = -phase.conj() * s;
                let g_jj = phase.conj() * c;
                let (left, right) = cols.split_at_mut(j);
                for (xi, xj) in left[i].iter_mut().zip(right[0].iter_mut()) {
                    let (a, b) = (*xi, *xj);
                    *xi = a * c + b * g_ji;
                    *xj = a * s + b * g_jj;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = cols.iter().map(|c| norm_sq(c).sqrt()).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SchattenP {
    One,
    Two,
    Inf,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchattenNorm {
    pub p: SchattenP,
    pub value: f64,
}

pub fn schatten_norm(t: &ComplexMatrix, p: SchattenP) -> SchattenNorm {
    let value = match p {
        SchattenP::Two => t.frobenius_norm(),
        SchattenP::One => singular_values(t).iter().sum(),
        SchattenP::Inf => singular_values(t).first().copied().unwrap_or(0.0),
    };
    SchattenNorm { p, value }
}

/// Trace norm shortcut.
pub fn s1_norm(t: &ComplexMatrix) -> f64 {
    schatten_norm(t, SchattenP::One).value
}

/// Hilbert-Schmidt norm shortcut.
pub fn s2_norm(t: &ComplexMatrix) -> f64 {
    t.frobenius_norm()
}

/// Hermitian `A` with spectrum in `[-pi, pi]` and `exp(iA) U = V`.
#[derive(Clone, Debug)]
pub struct UnitaryLog {
    pub a: ComplexMatrix,
    /// Decomposition of `A`; its eigenvectors are those of `V U*`.
    pub decomposition: SpectralDecomposition,
    /// Set when some eigenvalue of `V U*` lies within [`BRANCH_TOL`] of -1
    /// (mapped to `+pi`).
    pub branch_ambiguous: bool,
}

pub fn unitary_log(u: &ComplexMatrix, v: &ComplexMatrix) -> Result<UnitaryLog> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            found: v.dim(),
        });
    }
    for m in [u, v] {
        let residual = m.unitarity_residual();
        let bound = 1e-10 * m.dim() as f64;
        if residual > bound {
            return Err(Error::NotUnitary { residual, bound });
        }
    }
    let w = v * &u.adjoint();
    let dw = eig_unitary(&w)?;
    let mut branch_ambiguous = false;
    let phases: Vec<f64> = dw
        .eigenvalues
        .iter()
        .map(|&z| {
            if (z + 1.0).norm() <= BRANCH_TOL {
                branch_ambiguous = true;
                PI
            } else {
                principal_arg(z)
            }
        })
        .collect();
    // Sorting by principal argument already orders the phases ascending,
    // except for branch-snapped values.
    let mut order: Vec<usize> = (0..phases.len()).collect();
    order.sort_by(|&i, &j| phases[i].total_cmp(&phases[j]));
    let decomposition = SpectralDecomposition {
        kind: SpectrumKind::Hermitian,
        eigenvalues: order
            .iter()
            .map(|&i| Complex64::new(phases[i], 0.0))
            .collect(),
        eigenvectors: permute_columns(&dw.eigenvectors, &order),
    };
    let a = decomposition.reconstruct().hermitian_part();
    Ok(UnitaryLog {
        a,
        decomposition,
        branch_ambiguous,
    })
}

/// `exp(i M)` for a Hermitian decomposition.
pub fn exp_i(decomp: &SpectralDecomposition) -> ComplexMatrix {
    decomp.apply(|z| Complex64::new(0.0, z.re).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::rng::Gaussian;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_hermitian(n: usize, seed: u64) -> ComplexMatrix {
        let mut g = Gaussian::new(seed);
        let m = ComplexMatrix::from_fn(n, |_, _| c(g.sample(), g.sample()));
        m.hermitian_part()
    }

    fn power_series_exp_i(a: &ComplexMatrix, terms: usize) -> ComplexMatrix {
        let n = a.dim();
        let ia = a.scale(c(0.0, 1.0));
        let mut term = ComplexMatrix::identity(n);
        let mut sum = ComplexMatrix::identity(n);
        for k in 1..terms {
            term = (&term * &ia).scale_real(1.0 / k as f64);
            sum = sum + &term;
        }
        sum
    }

    #[test]
    fn diagonal_input_is_sorted_with_permutation_vectors() {
        let h = ComplexMatrix::from_real_diag(&[3.0, 1.0, 2.0]);
        let d = eig_hermitian(&h).unwrap();
        assert_eq!(d.real_eigenvalues(), vec![1.0, 2.0, 3.0]);
        for (col, row) in [(0, 1), (1, 2), (2, 0)] {
            assert_eq!(d.eigenvectors[(row, col)].norm(), 1.0);
        }
    }

    #[test]
    fn pauli_x_eigenvalues() {
        let h = ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let d = eig_hermitian(&h).unwrap();
        let ev = d.real_eigenvalues();
        assert!((ev[0] + 1.0).abs() < 1e-15 && (ev[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_hermitian_reconstruction() {
        for seed in 0..20 {
            let h = random_hermitian(8, seed);
            let d = eig_hermitian(&h).unwrap();
            let tol = 1e-12 * (1.0 + h.frobenius_norm());
            assert!(d.residual(&h) <= tol, "seed {seed}: {}", d.residual(&h));
            assert!(d.orthonormality_residual() <= 1e-12 * 8.0);
            let ev = d.real_eigenvalues();
            assert!(ev.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(eig_hermitian(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn unitary_identity_and_rotation() {
        let d = eig_unitary(&ComplexMatrix::identity(4)).unwrap();
        assert!(d.eigenvalues.iter().all(|z| (z - 1.0).norm() < 1e-15));

        let th = PI / 3.0;
        let r =
            ComplexMatrix::from_real_rows(&[vec![th.cos(), -th.sin()], vec![th.sin(), th.cos()]])
                .unwrap();
        let d = eig_unitary(&r).unwrap();
        assert!((d.eigenvalues[0] - Complex64::from_polar(1.0, -th)).norm() < 1e-14);
        assert!((d.eigenvalues[1] - Complex64::from_polar(1.0, th)).norm() < 1e-14);
        assert!(d.residual(&r) < 1e-13);
    }

    #[test]
    fn unitary_diagonal_phases() {
        let u = ComplexMatrix::from_diag(&[
            Complex64::from_polar(1.0, 0.1),
            Complex64::from_polar(1.0, 2.0),
        ]);
        let d = eig_unitary(&u).unwrap();
        assert!((principal_arg(d.eigenvalues[0]) - 0.1).abs() < 1e-15);
        assert!((principal_arg(d.eigenvalues[1]) - 2.0).abs() < 1e-15);
        assert!((d.eigenvectors[(0, 0)].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unitary_conjugate_pair_is_split() {
        // exp(+-i t) share the Hermitian part; only S separates them.
        let t: f64 = 0.7;
        let r = ComplexMatrix::from_real_rows(&[vec![t.cos(), -t.sin()], vec![t.sin(), t.cos()]])
            .unwrap();
        let big = ComplexMatrix::from_fn(4, |i, j| {
            if i < 2 && j < 2 {
                r[(i, j)]
            } else if i == j {
                Complex64::from_polar(1.0, if i == 2 { t } else { -t })
            } else {
                c(0.0, 0.0)
            }
        });
        let d = eig_unitary(&big).unwrap();
        assert!(d.residual(&big) < 1e-13, "{}", d.residual(&big));
    }

    #[test]
    fn rejects_non_unitary() {
        let m = ComplexMatrix::from_real_diag(&[1.0, 2.0]);
        assert!(matches!(eig_unitary(&m), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn matrix_function_examples() {
        let h = random_hermitian(5, 3);
        let d = eig_hermitian(&h).unwrap();
        assert!((d.reconstruct() - &h).frobenius_norm() < 1e-12);

        let d2 = eig_hermitian(&ComplexMatrix::from_real_diag(&[1.0, 2.0])).unwrap();
        let sq = matrix_function(&d2, |z| z * z);
        assert!((sq - &ComplexMatrix::from_real_diag(&[1.0, 4.0])).frobenius_norm() < 1e-15);
    }

    #[test]
    fn exp_i_matches_power_series() {
        let h = random_hermitian(6, 11).scale_real(0.3);
        let d = eig_hermitian(&h).unwrap();
        let e = exp_i(&d);
        let series = power_series_exp_i(&h, 40);
        assert!((e - &series).frobenius_norm() < 1e-10);
    }

    #[test]
    fn schatten_examples() {
        let z = ComplexMatrix::zeros(3);
        for p in [SchattenP::One, SchattenP::Two, SchattenP::Inf] {
            assert_eq!(schatten_norm(&z, p).value, 0.0);
        }
        let i4 = ComplexMatrix::identity(4);
        assert!((schatten_norm(&i4, SchattenP::Two).value - 2.0).abs() < 1e-15);

        let u = [c(1.0, 2.0), c(-0.5, 0.0), c(0.0, 1.5)];
        let v = [c(0.3, -1.0), c(2.0, 0.5), c(1.0, 1.0)];
        let r1 = ComplexMatrix::from_fn(3, |i, j| u[i] * v[j].conj());
        let nu: f64 = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let nv: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!((s1_norm(&r1) - nu * nv).abs() < 1e-13);
    }

    #[test]
    fn s2_matches_singular_values() {
        let t = ComplexMatrix::from_fn(7, |i, j| {
            c((i as f64 * 1.3 - j as f64).sin(), (i * j) as f64 * 0.1)
        });
        let sv = singular_values(&t);
        let from_sv = sv.iter().map(|s| s * s).sum::<f64>().sqrt();
        assert!((from_sv - s2_norm(&t)).abs() < 1e-12 * s2_norm(&t));
        let tr = (&t.adjoint() * &t).trace().re;
        assert!((s2_norm(&t).powi(2) - tr).abs() <= 1e-12 * tr);
    }

    #[test]
    fn unitary_log_examples() {
        let u = ComplexMatrix::identity(1);
        let v = ComplexMatrix::from_diag(&[c(0.0, 1.0)]);
        let l = unitary_log(&u, &v).unwrap();
        assert!((l.a[(0, 0)].re - PI / 2.0).abs() < 1e-15);
        assert!(!l.branch_ambiguous);

        let l = unitary_log(&u, &ComplexMatrix::from_diag(&[c(-1.0, 0.0)])).unwrap();
        assert!((l.a[(0, 0)].re - PI).abs() < 1e-15);
        assert!(l.branch_ambiguous);

        let l = unitary_log(&v, &v).unwrap();
        assert!(l.a.frobenius_norm() < 1e-15);
    }
}
