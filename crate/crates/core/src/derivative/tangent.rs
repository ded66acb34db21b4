use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Fixed orthonormal basis of probe directions, shared read-only by every
/// approximation instance that differentiates along the same input space.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentMatrix {
    columns: DMatrix<f64>,
    seed: u64,
}

impl TangentMatrix {
    /// The standard basis. Probing along it reproduces plain finite differencing.
    pub fn identity(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(
                "tangent dimension must be >= 1".into(),
            ));
        }
        Ok(Self {
            columns: DMatrix::identity(dim, dim),
            seed: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.columns.ncols()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.columns
    }

    pub fn column(&self, i: usize) -> DVector<f64> {
        self.columns.column(i).into_owned()
    }

    /// Largest absolute entry of `QᵀQ − I`.
    pub fn orthonormality_error(&self) -> f64 {
        let n = self.dim();
        (self.columns.transpose() * &self.columns - DMatrix::<f64>::identity(n, n)).amax()
    }
}

/// Orthonormalizes a seeded Gaussian matrix with Householder QR. The signs of
/// the Q columns are fixed so that R has a positive diagonal, which makes the
/// output a deterministic function of `(dim, seed)`.
pub fn make_orthonormal_tangents(dim: usize, seed: u64) -> Result<TangentMatrix> {
    if dim == 0 {
        return Err(Error::InvalidDimension(
            "tangent dimension must be >= 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gauss = DMatrix::<f64>::from_fn(dim, dim, |_, _| StandardNormal.sample(&mut rng));
    let qr = gauss.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Ok(TangentMatrix { columns: q, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_dimensional_is_unit() {
        for seed in [0, 1, 99] {
            let t = make_orthonormal_tangents(1, seed).unwrap();
            assert!((t.matrix()[(0, 0)].abs() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_dim_rejected() {
        assert!(matches!(
            make_orthonormal_tangents(0, 3),
            Err(Error::InvalidDimension(_))
        ));
        assert!(TangentMatrix::identity(0).is_err());
    }

    #[test]
    fn three_dim_orthonormal() {
        let t = make_orthonormal_tangents(3, 7).unwrap();
        assert!(t.orthonormality_error() < 1e-12);
    }

    #[test]
    fn deterministic() {
        let a = make_orthonormal_tangents(4, 7).unwrap();
        let b = make_orthonormal_tangents(4, 7).unwrap();
        assert_eq!(a, b);
        let c = make_orthonormal_tangents(4, 8).unwrap();
        assert_ne!(a, c);
    }

    proptest! {
        #[test]
        fn always_orthonormal(dim in 1usize..24, seed in any::<u64>()) {
            let t = make_orthonormal_tangents(dim, seed).unwrap();
            prop_assert!(t.orthonormality_error() < 1e-12);
        }
    }
}
