//! Planted hierarchical similarity model.
//!
//! `2^L` ground clusters of `n0` objects sit at the leaves of a complete
//! binary tree of height `L`. The mean similarity of two objects is `mu`
//! inside a ground cluster and drops by `separation` for every level their
//! clusters' common ancestor sits above the bottom; each entry adds
//! independent Gaussian noise of scale `sigma`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::dendrogram::Dendrogram;
use crate::error::{Error, Result};
use crate::similarity::SimilarityMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantedParams {
    pub cluster_size: usize,
    pub levels: u32,
    pub mu: f64,
    pub sigma: f64,
    pub separation: f64,
}

impl PlantedParams {
    pub fn new(cluster_size: usize, levels: u32, mu: f64, sigma: f64, separation: f64) -> Result<Self> {
        let p = PlantedParams {
            cluster_size,
            levels,
            mu,
            sigma,
            separation,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cluster_size == 0 {
            return Err(Error::InvalidParameter("cluster size must be at least 1".into()));
        }
        if self.levels >= usize::BITS - 1
            || (1usize << self.levels).checked_mul(self.cluster_size).is_none()
        {
            return Err(Error::InvalidParameter(format!("height {} is too large", self.levels)));
        }
        if !self.mu.is_finite() {
            return Err(Error::InvalidParameter("mu must be finite".into()));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma = {} must be >= 0", self.sigma)));
        }
        if !(self.separation > 0.0 && self.separation.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "separation = {} must be > 0",
                self.separation
            )));
        }
        Ok(())
    }

    /// The setting used for the reference benchmark: 8 clusters of 30,
    /// `mu = 0.8`, `sigma = 0.1`.
    pub fn standard(separation: f64) -> Self {
        PlantedParams {
            cluster_size: 30,
            levels: 3,
            mu: 0.8,
            sigma: 0.1,
            separation,
        }
    }

    pub fn n(&self) -> usize {
        self.cluster_size << self.levels
    }

    /// Expected similarity between objects `i` and `j`.
    pub fn mean(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (i / self.cluster_size, j / self.cluster_size);
        // number of levels between the bottom and the clusters' common ancestor
        let gap = usize::BITS - (a ^ b).leading_zeros();
        self.mu - gap as f64 * self.separation
    }
}

/// Draws a planted similarity matrix and returns it with the ground-truth
/// tree. Pairs `i < j` are drawn once each in row-major order.
pub fn planted_similarity<R: Rng + ?Sized>(
    params: &PlantedParams,
    rng: &mut R,
) -> Result<(SimilarityMatrix<f64>, Dendrogram)> {
    params.validate()?;
    let truth = Dendrogram::complete_planted(params.cluster_size, params.levels)?;
    let s = SimilarityMatrix::from_fn(params.n(), |i, j| {
        let z: f64 = rng.sample(StandardNormal);
        params.mean(i, j) + params.sigma * z
    });
    Ok((s, truth))
}
