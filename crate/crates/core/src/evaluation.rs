//! Flat cuts of dendrograms, Adjusted Rand Index, and its average over the
//! top levels of a hierarchy.

use std::collections::HashMap;

use crate::dendrogram::Dendrogram;
use crate::error::{Error, Result};

/// Flat clustering as one label per object. Labels are normalised to
/// `0..k` in order of first appearance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    labels: Vec<usize>,
    clusters: usize,
}

impl Partition {
    pub fn from_labels<L: Eq + std::hash::Hash + Copy>(labels: &[L]) -> Self {
        let mut ids = HashMap::new();
        let labels: Vec<usize> = labels
            .iter()
            .map(|l| {
                let next = ids.len();
                *ids.entry(*l).or_insert(next)
            })
            .collect();
        Partition {
            labels,
            clusters: ids.len(),
        }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_clusters(&self) -> usize {
        self.clusters
    }

    /// Every cluster of `self` lies inside a cluster of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        let mut image = vec![usize::MAX; self.clusters];
        self.labels.iter().zip(&coarser.labels).all(|(&a, &b)| {
            if image[a] == usize::MAX {
                image[a] = b;
            }
            image[a] == b
        })
    }

    /// One label per line.
    pub fn to_text(&self) -> String {
        self.labels.iter().map(|l| format!("{l}\n")).collect()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let labels = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
            .map(|(i, l)| {
                l.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::parse(i + 1, format!("bad label {l:?}")))
            })
            .collect::<Result<Vec<usize>>>()?;
        Ok(Partition::from_labels(&labels))
    }
}

/// The `k`-cluster partition obtained by undoing the last `k - 1` merges.
pub fn cut_top(tree: &Dendrogram, k: usize) -> Result<Partition> {
    let n = tree.n();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "cannot cut {n} objects into {k} clusters"
        )));
    }
    // label each cluster id by the representative leaf of its top-level ancestor
    let keep = n - k;
    let mut rep: Vec<usize> = (0..n).collect();
    for &(a, b) in &tree.merges()[..keep] {
        rep.push(rep[a].min(rep[b]));
    }
    // propagate: leaves map to the representative of their highest kept ancestor
    let mut owner: Vec<usize> = (0..2 * n - 1).collect();
    for (t, &(a, b)) in tree.merges()[..keep].iter().enumerate() {
        owner[a] = n + t;
        owner[b] = n + t;
    }
    let top = |mut id: usize| {
        while owner[id] != id {
            id = owner[id];
        }
        id
    };
    let labels: Vec<usize> = (0..n).map(|leaf| rep[top(leaf)]).collect();
    Ok(Partition::from_labels(&labels))
}

fn choose2(x: u64) -> f64 {
    (x * x.saturating_sub(1) / 2) as f64
}

/// Hubert-Arabie Adjusted Rand Index. Returns 1 when the index is
/// undefined (expected index equals its maximum, e.g. two trivial
/// partitions).
pub fn ari(a: &Partition, b: &Partition) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::SizeMismatch(a.len(), b.len()));
    }
    let n = a.len() as u64;
    let mut table: HashMap<(usize, usize), u64> = HashMap::new();
    let mut rows = vec![0u64; a.num_clusters()];
    let mut cols = vec![0u64; b.num_clusters()];
    for (&x, &y) in a.labels.iter().zip(&b.labels) {
        *table.entry((x, y)).or_insert(0) += 1;
        rows[x] += 1;
        cols[y] += 1;
    }
    let index: f64 = table.values().map(|&c| choose2(c)).sum();
    let sum_rows: f64 = rows.iter().map(|&c| choose2(c)).sum();
    let sum_cols: f64 = cols.iter().map(|&c| choose2(c)).sum();
    let pairs = choose2(n);
    if pairs == 0.0 {
        return Ok(1.0);
    }
    let expected = sum_rows * sum_cols / pairs;
    let max = (sum_rows + sum_cols) / 2.0;
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

/// Mean ARI between the `2^l`-cluster cuts of both trees, `l = 1..=levels`.
pub fn aari(tree: &Dendrogram, truth: &Dendrogram, levels: u32) -> Result<f64> {
    if tree.n() != truth.n() {
        return Err(Error::SizeMismatch(tree.n(), truth.n()));
    }
    if levels == 0 {
        return Err(Error::InvalidParameter("at least one level is needed".into()));
    }
    let widest = 1usize
        .checked_shl(levels)
        .filter(|&k| k <= tree.n())
        .ok_or_else(|| {
            Error::InvalidParameter(format!("2^{levels} clusters exceed {} objects", tree.n()))
        })?;
    let mut total = 0.0;
    let mut k = 2;
    while k <= widest {
        total += ari(&cut_top(tree, k)?, &cut_top(truth, k)?)?;
        k *= 2;
    }
    Ok(total / levels as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cut_examples() {
        let cat = Dendrogram::caterpillar(4).unwrap();
        assert_eq!(cut_top(&cat, 1).unwrap().labels(), &[0, 0, 0, 0]);
        assert_eq!(cut_top(&cat, 4).unwrap().labels(), &[0, 1, 2, 3]);
        assert_eq!(cut_top(&cat, 2).unwrap().labels(), &[0, 0, 0, 1]);
        assert!(cut_top(&cat, 0).is_err());
        assert!(cut_top(&cat, 5).is_err());
    }

    #[test]
    fn cuts_form_a_refinement_chain() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = Dendrogram::random(30, &mut rng).unwrap();
        for k in 1..30 {
            let coarse = cut_top(&h, k).unwrap();
            let fine = cut_top(&h, k + 1).unwrap();
            assert_eq!(coarse.num_clusters(), k);
            assert!(fine.refines(&coarse));
        }
    }

    #[test]
    fn ari_examples() {
        let p = Partition::from_labels(&[0, 0, 1, 1]);
        assert_eq!(ari(&p, &p).unwrap(), 1.0);
        let singletons = Partition::from_labels(&[0, 1, 2, 3]);
        assert_eq!(ari(&p, &singletons).unwrap(), 0.0);
        assert_eq!(ari(&singletons, &singletons).unwrap(), 1.0);
        let relabelled = Partition::from_labels(&[7, 7, 3, 3]);
        assert_eq!(ari(&p, &relabelled).unwrap(), 1.0);
        assert!(ari(&p, &Partition::from_labels(&[0, 1])).is_err());
    }

    #[test]
    fn ari_matches_known_value() {
        // a = {0,0,0,1,1,1}, b = {0,0,1,1,2,2}: index 2, rows 6, cols 3, pairs 15
        // expected 6*3/15 = 1.2, max 4.5 -> (2 - 1.2) / (4.5 - 1.2)
        let a = Partition::from_labels(&[0, 0, 0, 1, 1, 1]);
        let b = Partition::from_labels(&[0, 0, 1, 1, 2, 2]);
        let v = ari(&a, &b).unwrap();
        assert!((v - 0.8 / 3.3).abs() < 1e-12);
        assert_eq!(v, ari(&b, &a).unwrap());
    }

    #[test]
    fn ari_is_chance_corrected() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut total = 0.0;
        for _ in 0..100 {
            let a: Vec<u8> = (0..200).map(|_| rng.random_range(0..2)).collect();
            let b: Vec<u8> = (0..200).map(|_| rng.random_range(0..2)).collect();
            total += ari(&Partition::from_labels(&a), &Partition::from_labels(&b)).unwrap();
        }
        assert!((total / 100.0).abs() < 0.05);
    }

    #[test]
    fn aari_examples() {
        let truth = Dendrogram::complete_planted(2, 2).unwrap();
        assert_eq!(aari(&truth, &truth, 2).unwrap(), 1.0);
        // swap the two leaves of ground cluster 0
        let swapped = truth.relabel(&[1, 0, 2, 3, 4, 5, 6, 7]).unwrap();
        assert_eq!(aari(&swapped, &truth, 2).unwrap(), 1.0);
        assert!(aari(&truth, &truth, 4).is_err());
        assert!(aari(&truth, &truth, 0).is_err());
    }

    #[test]
    fn partition_text_round_trip() {
        let p = Partition::from_labels(&[2, 2, 0, 1]);
        assert_eq!(Partition::parse(&p.to_text()).unwrap(), p);
        assert!(Partition::parse("0\nx\n").is_err());
    }
}
