use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Family {
    Normal,
    /// Componentwise exponential of a normal draw.
    Lognormal,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Normal => "normal",
            Family::Lognormal => "lognormal",
        }
    }
}

/// `Cov[a, b] = ρ·√(v_a v_b)` off the diagonal, `v_a` on it.
pub fn compound_symmetry(rho: f64, variances: &[f64]) -> DMatrix<f64> {
    let n = variances.len();
    DMatrix::from_fn(n, n, |a, b| {
        if a == b {
            variances[a]
        } else {
            rho * libm::sqrt(variances[a] * variances[b])
        }
    })
}

/// Multivariate normal (or lognormal) sampler using a Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct MvnSampler {
    mean: DVector<f64>,
    factor: DMatrix<f64>,
    family: Family,
}

impl MvnSampler {
    pub fn new(mean: &[f64], cov: DMatrix<f64>, family: Family) -> Result<Self> {
        if cov.nrows() != mean.len() || !cov.is_square() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                found: cov.nrows(),
            });
        }
        let chol = cov.cholesky().ok_or(Error::NotPositiveDefinite)?;
        Ok(MvnSampler {
            mean: DVector::from_column_slice(mean),
            factor: chol.l(),
            family,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let n = self.dim();
        let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        (0..n)
            .map(|i| {
                let mut v = self.mean[i];
                for (j, zj) in z.iter().enumerate().take(i + 1) {
                    v += self.factor[(i, j)] * zj;
                }
                match self.family {
                    Family::Normal => v,
                    Family::Lognormal => libm::exp(v),
                }
            })
            .collect()
    }
}

/// One normal draw from `N(mu, cov)`.
pub fn sample_mvn<R: Rng + ?Sized>(
    mu: &[f64],
    cov: &DMatrix<f64>,
    rng: &mut R,
) -> Result<Vec<f64>> {
    Ok(MvnSampler::new(mu, cov.clone(), Family::Normal)?.sample(rng))
}
