//! Seeded test instances.
//!
//! Every complex Gaussian entry is `(x + iy)/sqrt(2)` with `x`, `y` drawn in
//! order from [`Gaussian`], row-major.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::rng::Gaussian;
use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;
use crate::spectral::{eig_hermitian, exp_i, SpectralDecomposition, SpectrumKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceKind {
    Sa,
    Unitary,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub kind: InstanceKind,
    pub dim: usize,
    pub seed: u64,
    pub eps: f64,
}

impl InstanceSpec {
    pub fn sa(dim: usize, seed: u64, eps: f64) -> Self {
        Self {
            kind: InstanceKind::Sa,
            dim,
            seed,
            eps,
        }
    }

    pub fn unitary(dim: usize, seed: u64, eps: f64) -> Self {
        Self {
            kind: InstanceKind::Unitary,
            dim,
            seed,
            eps,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidInput(
                "instance dimension must be positive".into(),
            ));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "perturbation scale must be finite and nonnegative, got {}",
                self.eps
            )));
        }
        Ok(())
    }
}

/// The standard batch: instance `i` has dimension `1 + i mod max_dim` and seed
/// `base_seed + i`.
pub fn batch(
    kind: InstanceKind,
    count: usize,
    max_dim: usize,
    base_seed: u64,
    eps: f64,
) -> Vec<InstanceSpec> {
    (0..count)
        .map(|i| InstanceSpec {
            kind,
            dim: 1 + i % max_dim.max(1),
            seed: base_seed.wrapping_add(i as u64),
            eps,
        })
        .collect()
}

pub fn gaussian_matrix(g: &mut Gaussian, n: usize) -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_fn(n, |_, _| {
        let re = g.sample();
        let im = g.sample();
        Complex64::new(re * s, im * s)
    })
}

/// `(G + G*)/2` for a complex Gaussian `G`.
pub fn hermitized_gaussian(g: &mut Gaussian, n: usize) -> ComplexMatrix {
    gaussian_matrix(g, n).hermitian_part()
}

/// Hermitized Gaussian rescaled to `||M||_{S2} = eps` (zero when `eps = 0`).
pub fn hermitian_with_s2(g: &mut Gaussian, n: usize, eps: f64) -> ComplexMatrix {
    let h = hermitized_gaussian(g, n);
    let norm = h.frobenius_norm();
    if norm == 0.0 || eps == 0.0 {
        return ComplexMatrix::zeros(n);
    }
    h.scale_real(eps / norm)
}

/// Unitary factor of the QR decomposition of a complex Gaussian matrix, by
/// modified Gram-Schmidt on the columns; `R` has a positive diagonal.
pub fn random_unitary(g: &mut Gaussian, n: usize) -> ComplexMatrix {
    let m = gaussian_matrix(g, n);
    let mut cols: Vec<Vec<Complex64>> = (0..n).map(|j| m.column(j)).collect();
    for j in 0..n {
        for _pass in 0..2 {
            for i in 0..j {
                let (done, rest) = cols.split_at_mut(j);
                let qi = &done[i];
                let proj: Complex64 = qi
                    .iter()
                    .zip(rest[0].iter())
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                for (x, q) in rest[0].iter_mut().zip(qi) {
                    *x -= proj * q;
                }
            }
        }
        let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for x in cols[j].iter_mut() {
            *x /= norm;
        }
    }
    ComplexMatrix::from_fn(n, |i, j| cols[j][i])
}

/// `(A, K)` with `A` a Hermitized Gaussian and `||K||_{S2} = eps`.
pub fn gen_pair_sa(spec: &InstanceSpec) -> Result<(ComplexMatrix, ComplexMatrix)> {
    spec.validate()?;
    let mut g = Gaussian::new(spec.seed);
    let a = hermitized_gaussian(&mut g, spec.dim);
    let k = hermitian_with_s2(&mut g, spec.dim, spec.eps);
    Ok((a, k))
}

/// `(U, V)` with `U` random unitary and `V = exp(iA) U`, where `A` is Hermitian
/// with `||A||_{S2} = eps` and spectrum clipped to `[-pi, pi]`.
pub fn gen_pair_unitary(spec: &InstanceSpec) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let (u, _, v) = gen_unitary_triple(spec)?;
    Ok((u, v))
}

/// `(U, A, V)` as in [`gen_pair_unitary`].
pub fn gen_unitary_triple(
    spec: &InstanceSpec,
) -> Result<(ComplexMatrix, ComplexMatrix, ComplexMatrix)> {
    spec.validate()?;
    let mut g = Gaussian::new(spec.seed);
    let u = random_unitary(&mut g, spec.dim);
    let a = hermitian_with_s2(&mut g, spec.dim, spec.eps);
    let d = eig_hermitian(&a)?;
    let pi = std::f64::consts::PI;
    let clipped = SpectralDecomposition {
        kind: SpectrumKind::Hermitian,
        eigenvalues: d
            .eigenvalues
            .iter()
            .map(|z| Complex64::new(z.re.clamp(-pi, pi), 0.0))
            .collect(),
        eigenvectors: d.eigenvectors.clone(),
    };
    let a = if d.eigenvalues.iter().any(|z| z.re.abs() > pi) {
        clipped.reconstruct().hermitian_part()
    } else {
        a
    };
    let v = &exp_i(&clipped) * &u;
    Ok((u, a, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::s2_norm;

    #[test]
    fn sa_pairs_are_deterministic_and_normalized() {
        let spec = InstanceSpec::sa(7, 42, 0.1);
        let (a1, k1) = gen_pair_sa(&spec).unwrap();
        let (a2, k2) = gen_pair_sa(&spec).unwrap();
        assert_eq!(a1, a2);
        assert_eq!(k1, k2);
        assert!(a1.hermitian_residual() <= 1e-15);
        assert!(k1.hermitian_residual() <= 1e-15);
        assert!((s2_norm(&k1) - 0.1).abs() <= 1e-12);
    }

    #[test]
    fn unitary_pairs() {
        for dim in [1usize, 2, 5, 12] {
            let spec = InstanceSpec::unitary(dim, 7 + dim as u64, 0.1);
            let (u, v) = gen_pair_unitary(&spec).unwrap();
            assert!(u.unitarity_residual() <= 1e-12);
            assert!(v.unitarity_residual() <= 1e-12);
            assert!(s2_norm(&(&v - &u)) <= 0.1 + 1e-12);
            let (u2, v2) = gen_pair_unitary(&spec).unwrap();
            assert_eq!(u, u2);
            assert_eq!(v, v2);
        }
    }

    #[test]
    fn batch_layout() {
        let b = batch(InstanceKind::Sa, 25, 12, 100, 0.1);
        assert_eq!(b.len(), 25);
        assert_eq!(b[0].dim, 1);
        assert_eq!(b[11].dim, 12);
        assert_eq!(b[12].dim, 1);
        assert_eq!(b[24].seed, 124);
    }

    #[test]
    fn rejects_zero_dimension() {
        assert!(gen_pair_sa(&InstanceSpec::sa(0, 1, 0.1)).is_err());
    }
}
