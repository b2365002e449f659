//! Scores of a dendrogram: comparison revenues, Dasgupta cost and revenue,
//! and triplet consistency.
//!
//! Revenues are exact `i64`. Each observed comparison is counted every time
//! it occurs, so passing a multiset (e.g. a `Vec` with repeats) scores each
//! repetition.

use crate::comparisons::{Quadruplet, Triplet};
use crate::dendrogram::{Dendrogram, LcaSizeMatrix};
use crate::error::{Error, Result};
use crate::similarity::{Scalar, SimilarityMatrix};

fn check_triplet(t: &Triplet, n: usize) -> Result<()> {
    let max = t.i.max(t.j).max(t.k) as usize;
    if max >= n {
        return Err(Error::IndexOutOfRange { index: max, n });
    }
    Ok(())
}

fn check_quadruplet(q: &Quadruplet, n: usize) -> Result<()> {
    let max = q.j.max(q.l) as usize;
    if max >= n {
        return Err(Error::IndexOutOfRange { index: max, n });
    }
    Ok(())
}

fn guard_magnitude(count: usize, n: usize) {
    assert!(
        (count as u128) * (n as u128) < (1u128 << 63),
        "revenue of {count} comparisons over {n} objects may overflow i64"
    );
}

/// Triplet revenue `sum (|H(i v k)| - |H(i v j)|)` against precomputed LCA
/// sizes.
pub fn trev_with<'a, I>(lca: &LcaSizeMatrix, triplets: I) -> Result<i64>
where
    I: IntoIterator<Item = &'a Triplet>,
{
    let n = lca.n();
    let mut total = 0i64;
    let mut count = 0usize;
    for t in triplets {
        check_triplet(t, n)?;
        let (i, j, k) = (t.i as usize, t.j as usize, t.k as usize);
        total += lca.get(i, k) as i64 - lca.get(i, j) as i64;
        count += 1;
    }
    guard_magnitude(count, n);
    Ok(total)
}

/// Triplet comparison revenue of `tree`.
pub fn trev<'a, I>(tree: &Dendrogram, triplets: I) -> Result<i64>
where
    I: IntoIterator<Item = &'a Triplet>,
{
    trev_with(&tree.lca_sizes(), triplets)
}

/// Quadruplet revenue `sum (|H(k v l)| - |H(i v j)|)` against precomputed
/// LCA sizes.
pub fn qrev_with<'a, I>(lca: &LcaSizeMatrix, quadruplets: I) -> Result<i64>
where
    I: IntoIterator<Item = &'a Quadruplet>,
{
    let n = lca.n();
    let mut total = 0i64;
    let mut count = 0usize;
    for q in quadruplets {
        check_quadruplet(q, n)?;
        total += lca.get(q.k as usize, q.l as usize) as i64 - lca.get(q.i as usize, q.j as usize) as i64;
        count += 1;
    }
    guard_magnitude(count, n);
    Ok(total)
}

/// Quadruplet comparison revenue of `tree`.
pub fn qrev<'a, I>(tree: &Dendrogram, quadruplets: I) -> Result<i64>
where
    I: IntoIterator<Item = &'a Quadruplet>,
{
    qrev_with(&tree.lca_sizes(), quadruplets)
}

fn check_sizes(tree: &Dendrogram, n: usize) -> Result<()> {
    if tree.n() != n {
        return Err(Error::SizeMismatch(tree.n(), n));
    }
    Ok(())
}

/// Dasgupta cost `sum_{i<j} s_ij |H(i v j)|`.
pub fn dcost<T: Scalar>(tree: &Dendrogram, s: &SimilarityMatrix<T>) -> Result<T> {
    check_sizes(tree, s.n())?;
    let lca = tree.lca_sizes();
    let mut total = T::default();
    for i in 0..s.n() {
        let row = s.row(i);
        let sizes = lca.row(i);
        for j in i + 1..s.n() {
            total += row[j] * T::from_count(sizes[j] as usize);
        }
    }
    Ok(total)
}

/// Dasgupta revenue `n sum_{i<j} s_ij - Dcost`.
pub fn drev<T: Scalar>(tree: &Dendrogram, s: &SimilarityMatrix<T>) -> Result<T> {
    let cost = dcost(tree, s)?;
    Ok(T::from_count(s.n()) * s.upper_sum() - cost)
}

/// Number of triplets the tree satisfies, i.e. with `|H(i v k)| > |H(i v j)|`.
pub fn consistency_count<'a, I>(tree: &Dendrogram, triplets: I) -> Result<usize>
where
    I: IntoIterator<Item = &'a Triplet>,
{
    consistency_count_with(&tree.lca_sizes(), triplets)
}

pub fn consistency_count_with<'a, I>(lca: &LcaSizeMatrix, triplets: I) -> Result<usize>
where
    I: IntoIterator<Item = &'a Triplet>,
{
    let mut count = 0;
    for t in triplets {
        check_triplet(t, lca.n())?;
        let (i, j, k) = (t.i as usize, t.j as usize, t.k as usize);
        if lca.get(i, k) > lca.get(i, j) {
            count += 1;
        }
    }
    Ok(count)
}

/// Revenue of a tree against its own complete triplet set, from internal
/// node sizes: `sum_N |N1| |N2| |N| (3|N| - 2n - 2)`.
pub fn latent_trev_closed_form(tree: &Dendrogram) -> i64 {
    let n = tree.n() as i64;
    tree.internal_nodes()
        .iter()
        .map(|node| {
            let (size, l, r) = (node.size as i64, node.left as i64, node.right as i64);
            l * r * size * (3 * size - 2 * n - 2)
        })
        .sum()
}

/// Whether `value >= n^4/12 - (2/3)(n^3 - n^2 - n)`, compared exactly.
/// Every tree on `n >= 2` leaves meets this with its own complete triplet
/// set; a single leaf does not (the bound is 3/4 there).
pub fn meets_latent_lower_bound(value: i64, n: usize) -> bool {
    let n = n as i128;
    12 * value as i128 >= n.pow(4) - 8 * (n.pow(3) - n.pow(2) - n)
}
