//! Rooted binary hierarchies stored as merge sequences.
//!
//! Leaves are labelled `0..n`. The `t`-th merge (counting from zero) creates
//! the cluster with id `n + t`, so the root of a tree on `n >= 2` leaves has
//! id `2n - 2`. This is the same convention used by the merge-list text
//! format:
//!
//! ```text
//! n 3
//! 0 1
//! 3 2
//! ```

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};

/// A rooted binary tree on `n` labelled leaves.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Dendrogram {
    n: usize,
    merges: Vec<(usize, usize)>,
    sizes: Vec<usize>,
}

/// One internal node as `(size, left_size, right_size)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InternalNode {
    pub size: usize,
    pub left: usize,
    pub right: usize,
}

impl Dendrogram {
    /// Validates a merge sequence and builds the tree.
    pub fn new(n: usize, merges: Vec<(usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidTree("a tree needs at least one leaf".into()));
        }
        if merges.len() != n - 1 {
            return Err(Error::InvalidTree(format!(
                "{} leaves need {} merges, got {}",
                n,
                n - 1,
                merges.len()
            )));
        }
        let total = 2 * n - 1;
        let mut sizes = vec![0usize; total];
        sizes[..n].fill(1);
        let mut used = vec![false; total];
        for (t, &(a, b)) in merges.iter().enumerate() {
            let created = n + t;
            for id in [a, b] {
                if id >= created {
                    return Err(Error::InvalidTree(format!(
                        "merge {} references id {} which does not exist yet",
                        t + 1,
                        id
                    )));
                }
                if used[id] {
                    return Err(Error::InvalidTree(format!("id {id} is merged twice")));
                }
                used[id] = true;
            }
            if a == b {
                return Err(Error::InvalidTree(format!("id {a} is merged with itself")));
            }
            sizes[created] = sizes[a] + sizes[b];
        }
        Ok(Dendrogram { n, merges, sizes })
    }

    /// The one-leaf tree.
    pub fn singleton() -> Self {
        Dendrogram {
            n: 1,
            merges: Vec::new(),
            sizes: vec![1],
        }
    }

    /// Caterpillar `(((0,1),2),3)...`.
    pub fn caterpillar(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidTree("a tree needs at least one leaf".into()));
        }
        let mut merges = Vec::with_capacity(n - 1);
        let mut last = 0;
        for leaf in 1..n {
            merges.push((last, leaf));
            last = n + leaf - 1;
        }
        Dendrogram::new(n, merges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn merges(&self) -> &[(usize, usize)] {
        &self.merges
    }

    /// Number of leaves below `id`.
    pub fn size(&self, id: usize) -> usize {
        self.sizes[id]
    }

    pub fn root(&self) -> usize {
        2 * self.n - 2
    }

    /// Children of an internal node, `None` for leaves.
    pub fn children(&self, id: usize) -> Option<(usize, usize)> {
        if id < self.n {
            None
        } else {
            Some(self.merges[id - self.n])
        }
    }

    /// Leaf labels below each cluster id, built bottom-up.
    pub fn leaf_sets(&self) -> Vec<Vec<usize>> {
        let mut sets: Vec<Vec<usize>> = (0..self.n).map(|i| vec![i]).collect();
        for &(a, b) in &self.merges {
            let mut merged = sets[a].clone();
            merged.extend_from_slice(&sets[b]);
            merged.sort_unstable();
            sets.push(merged);
        }
        sets
    }

    /// `|H(i v j)|` for every pair, in O(n^2).
    pub fn lca_sizes(&self) -> LcaSizeMatrix {
        let n = self.n;
        let mut data = vec![0u32; n * n];
        for i in 0..n {
            data[i * n + i] = 1;
        }
        let mut members: Vec<Vec<u32>> = Vec::with_capacity(2 * n - 1);
        members.extend((0..n as u32).map(|i| vec![i]));
        for (t, &(a, b)) in self.merges.iter().enumerate() {
            let size = self.sizes[n + t] as u32;
            let left = std::mem::take(&mut members[a]);
            let right = std::mem::take(&mut members[b]);
            for &x in &left {
                for &y in &right {
                    data[x as usize * n + y as usize] = size;
                    data[y as usize * n + x as usize] = size;
                }
            }
            let (mut big, small) = if left.len() >= right.len() {
                (left, right)
            } else {
                (right, left)
            };
            big.extend_from_slice(&small);
            members.push(big);
        }
        LcaSizeMatrix { n, data }
    }

    /// Internal nodes in merge order.
    pub fn internal_nodes(&self) -> Vec<InternalNode> {
        self.merges
            .iter()
            .enumerate()
            .map(|(t, &(a, b))| InternalNode {
                size: self.sizes[self.n + t],
                left: self.sizes[a],
                right: self.sizes[b],
            })
            .collect()
    }

    /// Child-order independent string form: each internal node lists the
    /// child holding the smaller leaf label first.
    pub fn canonical_form(&self) -> String {
        let n = self.n;
        let mut forms: Vec<String> = (0..n).map(|i| i.to_string()).collect();
        let mut min_leaf: Vec<usize> = (0..n).collect();
        for &(a, b) in &self.merges {
            let (first, second) = if min_leaf[a] <= min_leaf[b] { (a, b) } else { (b, a) };
            let fa = std::mem::take(&mut forms[first]);
            let fb = std::mem::take(&mut forms[second]);
            let mut s = String::with_capacity(fa.len() + fb.len() + 3);
            s.push('(');
            s.push_str(&fa);
            s.push(',');
            s.push_str(&fb);
            s.push(')');
            forms.push(s);
            min_leaf.push(min_leaf[first]);
        }
        forms.swap_remove(self.root())
    }

    /// True when both trees induce the same clusters, ignoring child order.
    pub fn is_isomorphic(&self, other: &Dendrogram) -> Result<bool> {
        if self.n != other.n {
            return Err(Error::SizeMismatch(self.n, other.n));
        }
        Ok(self.canonical_form() == other.canonical_form())
    }

    /// Repeatedly merges a uniformly random pair of current clusters.
    ///
    /// This is not uniform over topologies once `n >= 4`.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidTree("a tree needs at least one leaf".into()));
        }
        let mut active: Vec<usize> = (0..n).collect();
        let mut merges = Vec::with_capacity(n - 1);
        for t in 0..n.saturating_sub(1) {
            let x = rng.random_range(0..active.len());
            let a = active.swap_remove(x);
            let y = rng.random_range(0..active.len());
            let b = active.swap_remove(y);
            merges.push((a, b));
            active.push(n + t);
        }
        Dendrogram::new(n, merges)
    }

    /// Complete binary tree of height `levels` over `2^levels` ground
    /// clusters of `cluster_size` leaves each. Ground cluster `c` holds leaves
    /// `c*cluster_size .. (c+1)*cluster_size` arranged as a caterpillar.
    pub fn complete_planted(cluster_size: usize, levels: u32) -> Result<Self> {
        if cluster_size == 0 {
            return Err(Error::InvalidParameter("cluster size must be at least 1".into()));
        }
        let clusters = 1usize
            .checked_shl(levels)
            .filter(|c| c.checked_mul(cluster_size).is_some())
            .ok_or_else(|| Error::InvalidParameter(format!("height {levels} is too large")))?;
        let n = clusters * cluster_size;
        let mut merges = Vec::with_capacity(n - 1);
        let mut next_id = n;
        let mut tops = Vec::with_capacity(clusters);
        for c in 0..clusters {
            let mut top = c * cluster_size;
            for leaf in c * cluster_size + 1..(c + 1) * cluster_size {
                merges.push((top, leaf));
                top = next_id;
                next_id += 1;
            }
            tops.push(top);
        }
        while tops.len() > 1 {
            tops = tops
                .chunks(2)
                .map(|pair| {
                    merges.push((pair[0], pair[1]));
                    next_id += 1;
                    next_id - 1
                })
                .collect();
        }
        Dendrogram::new(n, merges)
    }

    /// Restriction to the leaves in `subset`: clusters are intersected with
    /// the subset and nodes left with a single child are contracted.
    ///
    /// The surviving leaves are relabelled `0..k` in increasing order of their
    /// original labels; the returned map sends new labels to old ones.
    pub fn restrict(&self, subset: &[usize]) -> Result<(Dendrogram, Vec<usize>)> {
        let mut kept: Vec<usize> = subset.to_vec();
        kept.sort_unstable();
        kept.dedup();
        if kept.is_empty() {
            return Err(Error::InvalidParameter("cannot restrict to an empty leaf set".into()));
        }
        if let Some(&bad) = kept.iter().find(|&&x| x >= self.n) {
            return Err(Error::IndexOutOfRange { index: bad, n: self.n });
        }
        let k = kept.len();
        // image[id] = id of the cluster in the restricted tree, if non-empty
        let mut image: Vec<Option<usize>> = vec![None; 2 * self.n - 1];
        for (new, &old) in kept.iter().enumerate() {
            image[old] = Some(new);
        }
        let mut merges = Vec::with_capacity(k - 1);
        for (t, &(a, b)) in self.merges.iter().enumerate() {
            image[self.n + t] = match (image[a], image[b]) {
                (Some(x), Some(y)) => {
                    merges.push((x, y));
                    Some(k + merges.len() - 1)
                }
                (Some(x), None) | (None, Some(x)) => Some(x),
                (None, None) => None,
            };
        }
        Ok((Dendrogram::new(k, merges)?, kept))
    }

    /// Relabels leaf `i` as `perm[i]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Dendrogram> {
        if perm.len() != self.n {
            return Err(Error::SizeMismatch(perm.len(), self.n));
        }
        let mut seen = vec![false; self.n];
        for &p in perm {
            if p >= self.n || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidParameter("relabelling is not a permutation".into()));
            }
        }
        let map = |id: usize| if id < self.n { perm[id] } else { id };
        let merges = self.merges.iter().map(|&(a, b)| (map(a), map(b))).collect();
        Dendrogram::new(self.n, merges)
    }

    /// Merge-list text: `n <count>` then one `a b` line per merge.
    pub fn to_merge_list(&self) -> String {
        let mut out = format!("n {}\n", self.n);
        for &(a, b) in &self.merges {
            out.push_str(&format!("{a} {b}\n"));
        }
        out
    }

    /// Parses the merge-list text format. Lines starting with `#` and blank
    /// lines are skipped; the text must end with a newline.
    pub fn parse_merge_list(text: &str) -> Result<Self> {
        if !text.ends_with('\n') {
            return Err(Error::parse(text.lines().count(), "missing trailing newline"));
        }
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or_else(|| Error::parse(1, "empty input"))?;
        let n = match header.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["n", count] => count
                .parse::<usize>()
                .map_err(|_| Error::parse(hline, format!("bad leaf count {count:?}")))?,
            _ => return Err(Error::parse(hline, "expected header \"n <count>\"")),
        };
        let mut merges = Vec::new();
        for (line, content) in lines {
            let fields: Vec<&str> = content.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(Error::parse(line, "expected two ids"));
            }
            let id = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| Error::parse(line, format!("bad id {s:?}")))
            };
            merges.push((id(fields[0])?, id(fields[1])?));
        }
        if merges.len() + 1 != n.max(1) || n == 0 {
            return Err(Error::parse(
                hline,
                format!("header announces {n} leaves but {} merge lines follow", merges.len()),
            ));
        }
        Dendrogram::new(n, merges)
    }
}

impl fmt::Display for Dendrogram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_merge_list())
    }
}

impl FromStr for Dendrogram {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Dendrogram::parse_merge_list(s)
    }
}

/// Dense matrix of LCA cluster sizes. The diagonal holds 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LcaSizeMatrix {
    n: usize,
    data: Vec<u32>,
}

impl LcaSizeMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> usize {
        self.data[i * self.n + j] as usize
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}
