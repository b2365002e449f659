//! Exhaustive search over tree topologies for small `n`.
//!
//! Trees are enumerated by leaf insertion: leaf `m` is attached above any of
//! the `2m - 1` nodes of the tree on leaves `0..m`, which produces every
//! topology on `n` leaves exactly once, `(2n - 3)!!` in total.

use crate::comparisons::Triplet;
use crate::dendrogram::Dendrogram;
use crate::error::{Error, Result};
use crate::objective::{consistency_count_with, trev_with};

/// Default largest leaf count accepted by the enumerator (2027025 trees).
pub const DEFAULT_CAP: usize = 9;

/// `(2n - 3)!!` for `n >= 2`, one otherwise.
pub fn count_trees(n: usize) -> u128 {
    (2..n).map(|m| (2 * m - 1) as u128).product()
}

/// Iterator over all topologies on `n` leaves.
#[derive(Debug, Clone)]
pub struct TreeEnumerator {
    n: usize,
    /// choice[m - 2] in 0..2m-1 is the attachment point of leaf m
    choice: Vec<usize>,
    done: bool,
}

impl TreeEnumerator {
    fn build(&self) -> Dendrogram {
        let n = self.n;
        if n == 1 {
            return Dendrogram::singleton();
        }
        // nodes 0..n are leaves, n.. are internal in creation order
        let total = 2 * n - 1;
        let mut children = vec![(usize::MAX, usize::MAX); total];
        let mut parent = vec![usize::MAX; total];
        let mut root = n;
        children[n] = (0, 1);
        parent[0] = n;
        parent[1] = n;
        for m in 2..n {
            // existing nodes: leaves 0..m and internal n..n+m-1
            let pick = self.choice[m - 2];
            let target = if pick < m { pick } else { n + (pick - m) };
            let fresh = n + m - 1;
            let above = parent[target];
            children[fresh] = (target, m);
            parent[target] = fresh;
            parent[m] = fresh;
            parent[fresh] = above;
            if above == usize::MAX {
                root = fresh;
            } else if children[above].0 == target {
                children[above].0 = fresh;
            } else {
                children[above].1 = fresh;
            }
        }
        // post-order to merge list
        let mut id_of = vec![usize::MAX; total];
        for (leaf, id) in id_of.iter_mut().enumerate().take(n) {
            *id = leaf;
        }
        let mut merges = Vec::with_capacity(n - 1);
        let mut stack = vec![(root, false)];
        while let Some((node, expanded)) = stack.pop() {
            if node < n {
                continue;
            }
            let (l, r) = children[node];
            if expanded {
                merges.push((id_of[l], id_of[r]));
                id_of[node] = n + merges.len() - 1;
            } else {
                stack.push((node, true));
                stack.push((r, false));
                stack.push((l, false));
            }
        }
        Dendrogram::new(n, merges).expect("enumerated merges are valid")
    }

    fn advance(&mut self) {
        for m in (2..self.n).rev() {
            let slot = &mut self.choice[m - 2];
            *slot += 1;
            if *slot < 2 * m - 1 {
                return;
            }
            *slot = 0;
        }
        self.done = true;
    }
}

impl Iterator for TreeEnumerator {
    type Item = Dendrogram;

    fn next(&mut self) -> Option<Dendrogram> {
        if self.done {
            return None;
        }
        let tree = self.build();
        self.advance();
        Some(tree)
    }
}

/// Every topology on `n` leaves; refuses `n > cap`.
pub fn enumerate_trees_capped(n: usize, cap: usize) -> Result<TreeEnumerator> {
    if n == 0 {
        return Err(Error::InvalidParameter("a tree needs at least one leaf".into()));
    }
    if n > cap {
        return Err(Error::EnumerationCap { n, cap });
    }
    Ok(TreeEnumerator {
        n,
        choice: vec![0; n.saturating_sub(2)],
        done: false,
    })
}

/// Every topology on `n <= DEFAULT_CAP` leaves.
pub fn enumerate_trees(n: usize) -> Result<TreeEnumerator> {
    enumerate_trees_capped(n, DEFAULT_CAP)
}

/// Exhaustive maximiser of a tree score.
#[derive(Debug, Clone, PartialEq)]
pub struct Maximum<V> {
    pub tree: Dendrogram,
    pub value: V,
    /// False when two or more topologies attain the maximum.
    pub unique: bool,
}

fn maximise<V: Ord + Copy>(
    n: usize,
    cap: usize,
    mut score: impl FnMut(&Dendrogram) -> Result<V>,
) -> Result<Maximum<V>> {
    let mut best: Option<(V, String, Dendrogram)> = None;
    let mut ties = 0usize;
    for tree in enumerate_trees_capped(n, cap)? {
        let value = score(&tree)?;
        match &best {
            Some((v, _, _)) if value < *v => {}
            Some((v, form, _)) if value == *v => {
                ties += 1;
                let candidate = tree.canonical_form();
                if candidate < *form {
                    best = Some((value, candidate, tree));
                }
            }
            _ => {
                ties = 1;
                best = Some((value, tree.canonical_form(), tree));
            }
        }
    }
    let (value, _, tree) = best.expect("at least one tree exists");
    Ok(Maximum {
        tree,
        value,
        unique: ties == 1,
    })
}

/// Tree with the largest triplet revenue. Among ties the smallest canonical
/// form is returned.
pub fn brute_force_max_trev<'a, I>(triplets: I, n: usize) -> Result<Maximum<i64>>
where
    I: IntoIterator<Item = &'a Triplet> + Copy,
{
    brute_force_max_trev_capped(triplets, n, DEFAULT_CAP)
}

pub fn brute_force_max_trev_capped<'a, I>(triplets: I, n: usize, cap: usize) -> Result<Maximum<i64>>
where
    I: IntoIterator<Item = &'a Triplet> + Copy,
{
    maximise(n, cap, |tree| trev_with(&tree.lca_sizes(), triplets))
}

/// Tree satisfying the most triplets.
pub fn brute_force_max_consistency<'a, I>(triplets: I, n: usize) -> Result<Maximum<usize>>
where
    I: IntoIterator<Item = &'a Triplet> + Copy,
{
    maximise(n, DEFAULT_CAP, |tree| consistency_count_with(&tree.lca_sizes(), triplets))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn counts() {
        assert_eq!(count_trees(1), 1);
        assert_eq!(count_trees(2), 1);
        assert_eq!(count_trees(3), 3);
        assert_eq!(count_trees(4), 15);
        assert_eq!(count_trees(5), 105);
        assert_eq!(count_trees(9), 2_027_025);
    }

    #[test]
    fn enumeration_matches_counts() {
        for n in 1..=8 {
            let forms: HashSet<String> = enumerate_trees(n).unwrap().map(|t| t.canonical_form()).collect();
            let listed = enumerate_trees(n).unwrap().count();
            assert_eq!(listed as u128, count_trees(n), "n = {n}");
            assert_eq!(forms.len(), listed, "duplicate topology at n = {n}");
        }
    }

    #[test]
    fn enumeration_small_cases() {
        let three: Vec<_> = enumerate_trees(3).unwrap().collect();
        assert_eq!(three.len(), 3);
        for a in 0..3 {
            for b in a + 1..3 {
                assert!(!three[a].is_isomorphic(&three[b]).unwrap());
            }
        }
        assert_eq!(enumerate_trees(2).unwrap().count(), 1);
        assert!(matches!(enumerate_trees(10), Err(Error::EnumerationCap { n: 10, cap: 9 })));
    }

    #[test]
    fn empty_comparisons_tie_everywhere() {
        let m = brute_force_max_trev(&[] as &[Triplet], 3).unwrap();
        assert_eq!(m.value, 0);
        assert!(!m.unique);
        let c = brute_force_max_consistency(&[] as &[Triplet], 3).unwrap();
        assert_eq!(c.value, 0);
        assert!(!c.unique);
    }

    #[test]
    fn single_triplet_consistency() {
        let t = Triplet::new(0, 1, 2).unwrap();
        let best = brute_force_max_consistency(&[t], 3).unwrap();
        assert_eq!(best.value, 1);
        assert!(best.unique);
        let expected = Dendrogram::new(3, vec![(0, 1), (3, 2)]).unwrap();
        assert!(best.tree.is_isomorphic(&expected).unwrap());
    }
}
