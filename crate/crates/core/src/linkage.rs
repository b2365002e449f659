//! Average linkage on similarities.
//!
//! Clusters are kept in the slot of their smallest leaf label. At every step
//! the pair with the largest average similarity is merged; among equal
//! averages the pair with the smallest `(min leaf, other min leaf)` wins, so
//! an all-equal input produces the caterpillar `(0,1), (n,2), (n+1,3), ...`.
//! Integer inputs compare averages exactly.

use std::cmp::Ordering;

use crate::comparisons::{Quadruplet, Triplet};
use crate::dendrogram::Dendrogram;
use crate::error::{Error, Result};
use crate::similarity::{adds3, adds4, Scalar, SimilarityMatrix};

struct State<T> {
    n: usize,
    /// Sum of pairwise similarities between the clusters in two slots.
    weight: Vec<T>,
    size: Vec<u64>,
    active: Vec<bool>,
    /// Best partner among active slots with a larger index.
    best: Vec<Option<usize>>,
}

impl<T: Scalar> State<T> {
    #[inline]
    fn cmp_pairs(&self, a: usize, b: usize, c: usize, d: usize) -> Ordering {
        let n = self.n;
        T::cmp_means(
            self.weight[a * n + b],
            self.size[a] * self.size[b],
            self.weight[c * n + d],
            self.size[c] * self.size[d],
        )
    }

    fn recompute(&mut self, a: usize) {
        let mut best: Option<usize> = None;
        for b in a + 1..self.n {
            if !self.active[b] {
                continue;
            }
            best = match best {
                Some(cur) if self.cmp_pairs(a, b, a, cur) != Ordering::Greater => Some(cur),
                _ => Some(b),
            };
        }
        self.best[a] = best;
    }
}

/// Agglomerates by maximal average inter-cluster similarity.
///
/// The merged cluster's similarity to any `C` is the size-weighted mean
/// `(|A| s(A,C) + |B| s(B,C)) / (|A| + |B|)`. Negative similarities are used
/// as given.
pub fn average_linkage<T: Scalar>(s: &SimilarityMatrix<T>) -> Result<Dendrogram> {
    let n = s.n();
    if n == 0 {
        return Err(Error::InvalidParameter("cannot cluster zero objects".into()));
    }
    let mut weight = Vec::with_capacity(n * n);
    for i in 0..n {
        weight.extend_from_slice(s.row(i));
    }
    let mut st = State {
        n,
        weight,
        size: vec![1; n],
        active: vec![true; n],
        best: vec![None; n],
    };
    for a in 0..n {
        st.recompute(a);
    }
    let mut ids: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n - 1);

    for t in 0..n - 1 {
        let mut chosen: Option<(usize, usize)> = None;
        for a in 0..n {
            if !st.active[a] {
                continue;
            }
            if let Some(b) = st.best[a] {
                chosen = match chosen {
                    Some((ca, cb)) if st.cmp_pairs(a, b, ca, cb) != Ordering::Greater => Some((ca, cb)),
                    _ => Some((a, b)),
                };
            }
        }
        let (a, b) = chosen.expect("at least two active clusters remain");
        merges.push((ids[a], ids[b]));
        ids[a] = n + t;
        st.active[b] = false;
        st.size[a] += st.size[b];
        for x in 0..n {
            if st.active[x] && x != a {
                let merged = st.weight[a * n + x] + st.weight[b * n + x];
                st.weight[a * n + x] = merged;
                st.weight[x * n + a] = merged;
            }
        }
        st.best[b] = None;
        st.recompute(a);
        for x in 0..n {
            if !st.active[x] || x == a {
                continue;
            }
            match st.best[x] {
                Some(p) if p == a || p == b => st.recompute(x),
                Some(p) if x < a => {
                    let ord = st.cmp_pairs(x, a, x, p);
                    if ord == Ordering::Greater || (ord == Ordering::Equal && a < p) {
                        st.best[x] = Some(a);
                    }
                }
                None if x < a => st.best[x] = Some(a),
                _ => {}
            }
        }
    }
    Dendrogram::new(n, merges)
}

/// AddS3 followed by average linkage.
pub fn adds3_average_linkage<'a, I>(triplets: I, n: usize) -> Result<Dendrogram>
where
    I: IntoIterator<Item = &'a Triplet>,
{
    average_linkage(&adds3(triplets, n)?)
}

/// AddS4 followed by average linkage.
pub fn adds4_average_linkage<'a, I>(quadruplets: I, n: usize) -> Result<Dendrogram>
where
    I: IntoIterator<Item = &'a Quadruplet>,
{
    average_linkage(&adds4(quadruplets, n)?)
}
