//! Triplet and quadruplet comparisons: sets, generation from trees and
//! similarities, sampling, noise, query-format conversion and file IO.
//!
//! A triplet `(i, j, k)` states `s_ij > s_ik`. A quadruplet `(i, j, k, l)`
//! with `i < j`, `k < l` states `s_ij > s_kl`.

use std::collections::HashSet;
use std::fmt::Debug;
use std::hash::Hash;

use indexmap::IndexSet;
use rand::seq::index;
use rand::Rng;

use crate::dendrogram::Dendrogram;
use crate::error::{Error, Result};
use crate::similarity::{Scalar, SimilarityMatrix};

/// Behaviour shared by triplets and quadruplets.
pub trait Comparison: Copy + Eq + Hash + Debug + Send + Sync {
    const ARITY: usize;

    /// Builds from decimal fields, validating the ordering constraints.
    fn from_fields(fields: &[usize]) -> Result<Self>;

    fn fields(&self) -> Vec<usize>;

    /// The comparison with the opposite outcome.
    fn flipped(self) -> Self;

    fn max_index(&self) -> usize {
        self.fields().into_iter().max().unwrap_or(0)
    }
}

/// `(i, j, k)`: object `i` is more similar to `j` than to `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triplet {
    pub i: u32,
    pub j: u32,
    pub k: u32,
}

impl Triplet {
    pub fn new(i: u32, j: u32, k: u32) -> Result<Self> {
        if i == j || i == k || j == k {
            return Err(Error::InvalidComparison(format!(
                "triplet ({i}, {j}, {k}) repeats an index"
            )));
        }
        Ok(Triplet { i, j, k })
    }

    /// `(j, i, k)`, the other orientation of the same closest pair.
    pub fn partner(self) -> Self {
        Triplet {
            i: self.j,
            j: self.i,
            k: self.k,
        }
    }
}

impl Comparison for Triplet {
    const ARITY: usize = 3;

    fn from_fields(fields: &[usize]) -> Result<Self> {
        match *fields {
            [i, j, k] => Triplet::new(to_u32(i)?, to_u32(j)?, to_u32(k)?),
            _ => Err(Error::InvalidComparison(format!(
                "a triplet needs 3 indices, got {}",
                fields.len()
            ))),
        }
    }

    fn fields(&self) -> Vec<usize> {
        vec![self.i as usize, self.j as usize, self.k as usize]
    }

    fn flipped(self) -> Self {
        Triplet {
            i: self.i,
            j: self.k,
            k: self.j,
        }
    }
}

/// `(i, j, k, l)`: pair `(i, j)` is more similar than pair `(k, l)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Quadruplet {
    pub i: u32,
    pub j: u32,
    pub k: u32,
    pub l: u32,
}

impl Quadruplet {
    pub fn new(i: u32, j: u32, k: u32, l: u32) -> Result<Self> {
        if i >= j || k >= l || (i, j) == (k, l) {
            return Err(Error::InvalidComparison(format!(
                "quadruplet ({i}, {j}, {k}, {l}) needs i < j, k < l and distinct pairs"
            )));
        }
        Ok(Quadruplet { i, j, k, l })
    }
}

impl Comparison for Quadruplet {
    const ARITY: usize = 4;

    fn from_fields(fields: &[usize]) -> Result<Self> {
        match *fields {
            [i, j, k, l] => Quadruplet::new(to_u32(i)?, to_u32(j)?, to_u32(k)?, to_u32(l)?),
            _ => Err(Error::InvalidComparison(format!(
                "a quadruplet needs 4 indices, got {}",
                fields.len()
            ))),
        }
    }

    fn fields(&self) -> Vec<usize> {
        vec![self.i as usize, self.j as usize, self.k as usize, self.l as usize]
    }

    fn flipped(self) -> Self {
        Quadruplet {
            i: self.k,
            j: self.l,
            k: self.i,
            l: self.j,
        }
    }
}

fn to_u32(x: usize) -> Result<u32> {
    u32::try_from(x).map_err(|_| Error::InvalidComparison(format!("index {x} is too large")))
}

/// De-duplicated comparisons over `n` objects, iterated in insertion order.
#[derive(Debug, Clone)]
pub struct ComparisonSet<C: Comparison> {
    n: usize,
    items: IndexSet<C>,
}

pub type TripletSet = ComparisonSet<Triplet>;
pub type QuadrupletSet = ComparisonSet<Quadruplet>;

impl<C: Comparison> ComparisonSet<C> {
    pub fn new(n: usize) -> Self {
        ComparisonSet {
            n,
            items: IndexSet::new(),
        }
    }

    pub fn with_capacity(n: usize, capacity: usize) -> Self {
        ComparisonSet {
            n,
            items: IndexSet::with_capacity(capacity),
        }
    }

    /// Builds a set, dropping duplicates.
    pub fn from_items(n: usize, items: impl IntoIterator<Item = C>) -> Result<Self> {
        let mut set = Self::new(n);
        for c in items {
            set.insert(c)?;
        }
        Ok(set)
    }

    /// Inserts `c`; returns `false` if it was already present.
    pub fn insert(&mut self, c: C) -> Result<bool> {
        let max = c.max_index();
        if max >= self.n {
            return Err(Error::IndexOutOfRange { index: max, n: self.n });
        }
        Ok(self.items.insert(c))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, c: &C) -> bool {
        self.items.contains(c)
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &C> + '_ {
        self.items.iter()
    }

    /// No comparison appears together with its flipped version.
    pub fn is_contradiction_free(&self) -> bool {
        self.items.iter().all(|c| !self.items.contains(&c.flipped()))
    }

    /// Order-independent equality of contents.
    pub fn same_elements(&self, other: &Self) -> bool {
        self.len() == other.len() && self.items.iter().all(|c| other.contains(c))
    }
}

impl<C: Comparison> PartialEq for ComparisonSet<C> {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.same_elements(other)
    }
}

impl<'a, C: Comparison> IntoIterator for &'a ComparisonSet<C> {
    type Item = &'a C;
    type IntoIter = indexmap::set::Iter<'a, C>;

    fn into_iter(self) -> Self::IntoIter {
        self.items.iter()
    }
}

/// Bernoulli sampling probability with the confidence and accuracy
/// constants used to size it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingParams {
    pub p: f64,
    pub alpha: f64,
    pub epsilon: f64,
}

impl SamplingParams {
    pub fn new(p: f64, alpha: f64, epsilon: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidParameter(format!("p = {p} must lie in (0, 1]")));
        }
        if alpha.is_nan() || alpha <= 0.0 {
            return Err(Error::InvalidParameter(format!("alpha = {alpha} must be positive")));
        }
        if !(epsilon > 0.0 && epsilon < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "epsilon = {epsilon} must lie in (0, 1/2)"
            )));
        }
        Ok(SamplingParams { p, alpha, epsilon })
    }

    /// High-probability bound `4 sqrt((alpha + 2) p n ln n)` on
    /// `max_{i<j} |s_ij - p s0_ij|` for AddS3 of a pair-sampled set.
    pub fn deviation_bound(&self, n: usize) -> f64 {
        let n = n as f64;
        4.0 * ((self.alpha + 2.0) * self.p * n * n.ln()).sqrt()
    }

    /// Sampling probability `2^12 (alpha + 2) ln n / (n epsilon^2)` above
    /// which a `(1 - epsilon)` revenue approximation is guaranteed; divide by
    /// `(1 - 2 flip)^2` under flip noise. Usually far above 1 at desk scale.
    pub fn sufficient_probability(alpha: f64, epsilon: f64, n: usize, flip: f64) -> f64 {
        let nf = n as f64;
        4096.0 * (alpha + 2.0) * nf.ln() / (nf * epsilon * epsilon * (1.0 - 2.0 * flip).powi(2))
    }
}

/// Independent per-comparison flip probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    pub flip_prob: f64,
}

impl NoiseParams {
    pub fn new(flip_prob: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&flip_prob) {
            return Err(Error::InvalidParameter(format!(
                "flip probability {flip_prob} must lie in [0, 1/2)"
            )));
        }
        Ok(NoiseParams { flip_prob })
    }
}

/// Every triplet implied by `tree`: for each triple, both orientations of
/// its strictly closest pair. Contains `n(n-1)(n-2)/3` triplets.
pub fn triplets_from_tree(tree: &Dendrogram) -> TripletSet {
    let n = tree.n();
    let lca = tree.lca_sizes();
    let expected = n * n.saturating_sub(1) * n.saturating_sub(2) / 3;
    let mut set = TripletSet::with_capacity(n, expected);
    for a in 0..n {
        let row_a = lca.row(a);
        for b in a + 1..n {
            let ab = row_a[b];
            let row_b = lca.row(b);
            for c in b + 1..n {
                let (ac, bc) = (row_a[c], row_b[c]);
                let (x, y, z) = if ab < ac {
                    (a, b, c)
                } else if ac < ab {
                    (a, c, b)
                } else {
                    debug_assert!(bc < ab);
                    (b, c, a)
                };
                let t = Triplet {
                    i: x as u32,
                    j: y as u32,
                    k: z as u32,
                };
                set.items.insert(t);
                set.items.insert(t.partner());
            }
        }
    }
    set
}

/// All strict triplets of `s`; ties yield nothing.
pub fn triplets_from_similarity<T: Scalar>(s: &SimilarityMatrix<T>) -> TripletSet {
    let n = s.n();
    let mut set = TripletSet::new(n);
    for i in 0..n {
        for j in 0..n {
            for k in j + 1..n {
                if j == i || k == i {
                    continue;
                }
                if let Some(t) = orient_triplet(s, i, j, k) {
                    set.items.insert(t);
                }
            }
        }
    }
    set
}

/// All strict quadruplets of `s`; ties yield nothing.
pub fn quadruplets_from_similarity<T: Scalar>(s: &SimilarityMatrix<T>) -> QuadrupletSet {
    let n = s.n();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let mut set = QuadrupletSet::new(n);
    for (x, &p) in pairs.iter().enumerate() {
        for &q in &pairs[x + 1..] {
            if let Some(c) = orient_quadruplet(s, p, q) {
                set.items.insert(c);
            }
        }
    }
    set
}

fn orient_triplet<T: Scalar>(s: &SimilarityMatrix<T>, i: usize, j: usize, k: usize) -> Option<Triplet> {
    let (sij, sik) = (s.get(i, j), s.get(i, k));
    let (i, j, k) = (i as u32, j as u32, k as u32);
    if sij > sik {
        Some(Triplet { i, j, k })
    } else if sik > sij {
        Some(Triplet { i, j: k, k: j })
    } else {
        None
    }
}

fn orient_quadruplet<T: Scalar>(
    s: &SimilarityMatrix<T>,
    p: (usize, usize),
    q: (usize, usize),
) -> Option<Quadruplet> {
    let (sp, sq) = (s.get(p.0, p.1), s.get(q.0, q.1));
    let (win, lose) = if sp > sq {
        (p, q)
    } else if sq > sp {
        (q, p)
    } else {
        return None;
    };
    Some(Quadruplet {
        i: win.0 as u32,
        j: win.1 as u32,
        k: lose.0 as u32,
        l: lose.1 as u32,
    })
}

/// Keeps each pair `{(i,j,k), (j,i,k)}` jointly with probability `p`.
pub fn sample_pairs_bernoulli<R: Rng + ?Sized>(
    full: &TripletSet,
    p: f64,
    rng: &mut R,
) -> Result<TripletSet> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("p = {p} must lie in [0, 1]")));
    }
    if let Some(t) = full.iter().find(|t| !full.contains(&t.partner())) {
        return Err(Error::NotPairClosed(t.i as usize, t.j as usize, t.k as usize));
    }
    let mut out = TripletSet::new(full.n());
    for &t in full.iter().filter(|t| t.i < t.j) {
        if rng.random_bool(p) {
            out.items.insert(t);
            out.items.insert(t.partner());
        }
    }
    Ok(out)
}

#[inline]
fn choose2(x: u64) -> u64 {
    x * x.saturating_sub(1) / 2
}

/// Inverse of the colex rank `a + C(b, 2)` over pairs `a < b`.
fn unrank_pair(rank: u64) -> (u64, u64) {
    let mut b = ((1.0 + (1.0 + 8.0 * rank as f64).sqrt()) / 2.0) as u64;
    while choose2(b) > rank {
        b -= 1;
    }
    while choose2(b + 1) <= rank {
        b += 1;
    }
    (rank - choose2(b), b)
}

/// Triplet slot `rank` of the space `anchor x {j < k}`: returns
/// `(anchor, j, k)` with `j < k`, both different from the anchor.
fn unrank_triplet_slot(n: u64, rank: u64) -> (usize, usize, usize) {
    let per_anchor = choose2(n - 1);
    let anchor = rank / per_anchor;
    let (a, b) = unrank_pair(rank % per_anchor);
    let lift = |x: u64| if x >= anchor { x + 1 } else { x };
    (anchor as usize, lift(a) as usize, lift(b) as usize)
}

/// Number of triplet slots `n * C(n-1, 2)`; each yields one triplet unless
/// tied.
pub fn triplet_space_size(n: usize) -> u64 {
    let n = n as u64;
    if n < 3 {
        0
    } else {
        n * choose2(n - 1)
    }
}

/// Number of quadruplet slots `C(C(n,2), 2)`.
pub fn quadruplet_space_size(n: usize) -> u64 {
    choose2(choose2(n as u64))
}

/// Draws `m` distinct non-tied slots uniformly without replacement.
///
/// Sparse requests use rejection on slot indices; once half of the space has
/// been touched the remaining candidates are enumerated instead.
fn sample_slots<C: Copy, R, F>(total: u64, m: usize, rng: &mut R, outcome: F) -> Result<Vec<C>>
where
    R: Rng + ?Sized,
    F: Fn(u64) -> Option<C>,
{
    let requested = m as u64;
    if requested > total {
        return Err(Error::InsufficientComparisons {
            requested,
            available: total,
        });
    }
    let mut out = Vec::with_capacity(m);
    if m == 0 {
        return Ok(out);
    }
    let mut seen: HashSet<u64> = HashSet::new();
    if requested.saturating_mul(2) <= total {
        while (seen.len() as u64).saturating_mul(2) <= total {
            let r = rng.random_range(0..total);
            if !seen.insert(r) {
                continue;
            }
            if let Some(c) = outcome(r) {
                out.push(c);
                if out.len() == m {
                    return Ok(out);
                }
            }
        }
    }
    let rest: Vec<C> = (0..total)
        .filter(|r| !seen.contains(r))
        .filter_map(&outcome)
        .collect();
    let need = m - out.len();
    if rest.len() < need {
        return Err(Error::InsufficientComparisons {
            requested,
            available: (out.len() + rest.len()) as u64,
        });
    }
    out.extend(index::sample(rng, rest.len(), need).into_iter().map(|x| rest[x]));
    Ok(out)
}

/// Samples `m` distinct triplets uniformly from the tie-free triplet space
/// of `s` without materialising it.
pub fn sample_triplets_uniform<T: Scalar, R: Rng + ?Sized>(
    s: &SimilarityMatrix<T>,
    m: usize,
    rng: &mut R,
) -> Result<TripletSet> {
    let n = s.n();
    let total = triplet_space_size(n);
    let items = sample_slots(total, m, rng, |r| {
        let (i, j, k) = unrank_triplet_slot(n as u64, r);
        orient_triplet(s, i, j, k)
    })?;
    let mut set = TripletSet::with_capacity(n, items.len());
    set.items.extend(items);
    Ok(set)
}

/// Samples `m` distinct quadruplets uniformly from the tie-free quadruplet
/// space of `s`.
pub fn sample_quadruplets_uniform<T: Scalar, R: Rng + ?Sized>(
    s: &SimilarityMatrix<T>,
    m: usize,
    rng: &mut R,
) -> Result<QuadrupletSet> {
    let n = s.n();
    let total = quadruplet_space_size(n);
    let items = sample_slots(total, m, rng, |r| {
        let (x, y) = unrank_pair(r);
        let (a, b) = unrank_pair(x);
        let (c, d) = unrank_pair(y);
        orient_quadruplet(s, (a as usize, b as usize), (c as usize, d as usize))
    })?;
    let mut set = QuadrupletSet::with_capacity(n, items.len());
    set.items.extend(items);
    Ok(set)
}

/// Flips each comparison independently with probability `flip_prob`.
pub fn flip_noise<C: Comparison, R: Rng + ?Sized>(
    set: &ComparisonSet<C>,
    flip_prob: f64,
    rng: &mut R,
) -> Result<ComparisonSet<C>> {
    if !(0.0..=1.0).contains(&flip_prob) {
        return Err(Error::InvalidParameter(format!(
            "flip probability {flip_prob} must lie in [0, 1]"
        )));
    }
    let mut out = ComparisonSet::with_capacity(set.n(), set.len());
    for &c in set.iter() {
        let c = if rng.random_bool(flip_prob) { c.flipped() } else { c };
        out.items.insert(c);
    }
    Ok(out)
}

/// Triplets whose three objects all lie in `subset`, relabelled `0..k` in
/// increasing order of the original labels.
pub fn restrict_triplets(set: &TripletSet, subset: &[usize]) -> Result<TripletSet> {
    let mut kept = subset.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if let Some(&bad) = kept.iter().find(|&&x| x >= set.n()) {
        return Err(Error::IndexOutOfRange { index: bad, n: set.n() });
    }
    let mut new_label = vec![u32::MAX; set.n()];
    for (new, &old) in kept.iter().enumerate() {
        new_label[old] = new as u32;
    }
    let mut out = TripletSet::new(kept.len());
    for t in set.iter() {
        let (i, j, k) = (
            new_label[t.i as usize],
            new_label[t.j as usize],
            new_label[t.k as usize],
        );
        if i != u32::MAX && j != u32::MAX && k != u32::MAX {
            out.items.insert(Triplet { i, j, k });
        }
    }
    Ok(out)
}

/// Answer to a three-object query (`central` or `oddout`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TripleAnswer {
    pub objects: [usize; 3],
    pub answer: usize,
}

/// Answer to a "rank the 2 of 7 candidates most similar to the reference"
/// query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankAnswer {
    pub reference: usize,
    pub candidates: [usize; 7],
    pub first: usize,
    pub second: usize,
}

fn split_answer(a: &TripleAnswer) -> Result<(u32, u32, u32)> {
    let [x, y, z] = a.objects;
    if x == y || x == z || y == z {
        return Err(Error::InvalidComparison(format!("query {:?} repeats an object", a.objects)));
    }
    let others: Vec<usize> = a.objects.iter().copied().filter(|&o| o != a.answer).collect();
    if others.len() != 2 {
        return Err(Error::InvalidComparison(format!(
            "answer {} is not one of {:?}",
            a.answer, a.objects
        )));
    }
    Ok((to_u32(a.answer)?, to_u32(others[0])?, to_u32(others[1])?))
}

fn answer_universe(max: Option<usize>) -> usize {
    max.map_or(0, |m| m + 1)
}

/// "Most central" answers: central `i` of `{i, j, k}` yields `(j,i,k)` and
/// `(k,i,j)`.
pub fn convert_central(answers: &[TripleAnswer]) -> Result<TripletSet> {
    let n = answer_universe(answers.iter().flat_map(|a| a.objects).max());
    let mut set = TripletSet::new(n);
    for a in answers {
        let (i, j, k) = split_answer(a)?;
        set.insert(Triplet::new(j, i, k)?)?;
        set.insert(Triplet::new(k, i, j)?)?;
    }
    Ok(set)
}

/// "Odd one out" answers: odd `i` of `{i, j, k}` yields `(j,k,i)` and
/// `(k,j,i)`.
pub fn convert_odd_out(answers: &[TripleAnswer]) -> Result<TripletSet> {
    let n = answer_universe(answers.iter().flat_map(|a| a.objects).max());
    let mut set = TripletSet::new(n);
    for a in answers {
        let (i, j, k) = split_answer(a)?;
        set.insert(Triplet::new(j, k, i)?)?;
        set.insert(Triplet::new(k, j, i)?)?;
    }
    Ok(set)
}

/// "Rank 2 from 8" answers: with reference `r`, ranked `a`, `b` and the
/// five remaining candidates `c`, yields `(r,a,b)`, `(r,a,c)` and `(r,b,c)`:
/// eleven triplets per answer.
pub fn convert_rank2of8(answers: &[RankAnswer]) -> Result<TripletSet> {
    let n = answer_universe(
        answers
            .iter()
            .flat_map(|a| a.candidates.into_iter().chain([a.reference]))
            .max(),
    );
    let mut set = TripletSet::new(n);
    for a in answers {
        let mut objects = a.candidates.to_vec();
        objects.push(a.reference);
        objects.sort_unstable();
        objects.dedup();
        if objects.len() != 8 {
            return Err(Error::InvalidComparison(format!(
                "rank query {:?} / {:?} repeats an object",
                a.reference, a.candidates
            )));
        }
        if a.first == a.second
            || !a.candidates.contains(&a.first)
            || !a.candidates.contains(&a.second)
        {
            return Err(Error::InvalidComparison(format!(
                "ranked answers ({}, {}) must be two distinct candidates",
                a.first, a.second
            )));
        }
        let r = to_u32(a.reference)?;
        let (first, second) = (to_u32(a.first)?, to_u32(a.second)?);
        set.insert(Triplet::new(r, first, second)?)?;
        for &c in a.candidates.iter().filter(|&&c| c != a.first && c != a.second) {
            let c = to_u32(c)?;
            set.insert(Triplet::new(r, first, c)?)?;
            set.insert(Triplet::new(r, second, c)?)?;
        }
    }
    Ok(set)
}

/// Parsed query-answer CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryAnswers {
    Central(Vec<TripleAnswer>),
    OddOut(Vec<TripleAnswer>),
    Rank2of8(Vec<RankAnswer>),
}

impl QueryAnswers {
    pub fn to_triplets(&self) -> Result<TripletSet> {
        match self {
            QueryAnswers::Central(a) => convert_central(a),
            QueryAnswers::OddOut(a) => convert_odd_out(a),
            QueryAnswers::Rank2of8(a) => convert_rank2of8(a),
        }
    }
}

/// Parses a query CSV. The first line names the query type (`central`,
/// `oddout` or `rank2of8`); each following row is `i,j,k,answer` for the
/// three-object queries and `reference,c1,...,c7,first,second` for
/// `rank2of8`.
pub fn parse_query_csv(text: &str) -> Result<QueryAnswers> {
    let mut rows = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hline, header) = rows.next().ok_or_else(|| Error::parse(1, "empty query file"))?;
    let kind = header.split(',').next().unwrap_or("").trim().to_ascii_lowercase();
    let width = match kind.as_str() {
        "central" | "oddout" => 4,
        "rank2of8" => 10,
        other => {
            return Err(Error::parse(
                hline,
                format!("unknown query type {other:?} (expected central, oddout or rank2of8)"),
            ))
        }
    };
    let mut parsed = Vec::new();
    for (line, content) in rows {
        let fields = content
            .split(',')
            .map(|f| {
                f.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::parse(line, format!("bad index {f:?}")))
            })
            .collect::<Result<Vec<usize>>>()?;
        if fields.len() != width {
            return Err(Error::parse(line, format!("expected {width} columns, got {}", fields.len())));
        }
        parsed.push(fields);
    }
    let triple = |f: &Vec<usize>| TripleAnswer {
        objects: [f[0], f[1], f[2]],
        answer: f[3],
    };
    Ok(match kind.as_str() {
        "central" => QueryAnswers::Central(parsed.iter().map(triple).collect()),
        "oddout" => QueryAnswers::OddOut(parsed.iter().map(triple).collect()),
        _ => QueryAnswers::Rank2of8(
            parsed
                .iter()
                .map(|f| RankAnswer {
                    reference: f[0],
                    candidates: [f[1], f[2], f[3], f[4], f[5], f[6], f[7]],
                    first: f[8],
                    second: f[9],
                })
                .collect(),
        ),
    })
}

/// One comparison per line, space separated, after a `# n <count>` header.
pub fn write_comparisons<C: Comparison>(set: &ComparisonSet<C>) -> String {
    let mut out = String::with_capacity(16 + set.len() * 4 * C::ARITY);
    out.push_str(&format!("# n {}\n", set.n()));
    for c in set.iter() {
        let fields: Vec<String> = c.fields().iter().map(usize::to_string).collect();
        out.push_str(&fields.join(" "));
        out.push('\n');
    }
    out
}

/// Parses a comparison file. The object count is `n` if given, else the
/// `# n <count>` header, else one more than the largest index seen.
pub fn parse_comparisons<C: Comparison>(text: &str, n: Option<usize>) -> Result<ComparisonSet<C>> {
    let mut items = Vec::new();
    let mut header = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(comment) = line.strip_prefix('#') {
            if let ["n", count] = comment.split_whitespace().collect::<Vec<_>>().as_slice() {
                header = Some(
                    count
                        .parse::<usize>()
                        .map_err(|_| Error::parse(idx + 1, format!("bad object count {count:?}")))?,
                );
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let fields = line
            .split_whitespace()
            .map(|f| {
                f.parse::<usize>()
                    .map_err(|_| Error::parse(idx + 1, format!("bad index {f:?}")))
            })
            .collect::<Result<Vec<usize>>>()?;
        let c = C::from_fields(&fields).map_err(|e| Error::parse(idx + 1, e.to_string()))?;
        items.push(c);
    }
    let n = n.or(header).unwrap_or_else(|| items.iter().map(|c| c.max_index() + 1).max().unwrap_or(0));
    ComparisonSet::from_items(n, items)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn t(i: u32, j: u32, k: u32) -> Triplet {
        Triplet::new(i, j, k).unwrap()
    }

    fn set_of(n: usize, items: &[Triplet]) -> TripletSet {
        TripletSet::from_items(n, items.iter().copied()).unwrap()
    }

    fn example_similarity() -> SimilarityMatrix<i64> {
        SimilarityMatrix::from_fn(3, |i, j| if (i, j) == (0, 1) { 2 } else { -1 })
    }

    fn tie_free(n: usize, seed: u64) -> SimilarityMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SimilarityMatrix::from_fn(n, |_, _| rng.random::<f64>())
    }

    #[test]
    fn triplet_and_quadruplet_validation() {
        assert!(Triplet::new(0, 1, 1).is_err());
        assert!(Quadruplet::new(1, 0, 2, 3).is_err());
        assert!(Quadruplet::new(0, 1, 0, 1).is_err());
        assert!(Quadruplet::new(0, 1, 0, 2).is_ok());
        assert_eq!(t(0, 1, 2).flipped(), t(0, 2, 1));
        let q = Quadruplet::new(0, 1, 2, 3).unwrap();
        assert_eq!(q.flipped(), Quadruplet::new(2, 3, 0, 1).unwrap());
    }

    #[test]
    fn tree_triplet_examples() {
        let cat = Dendrogram::caterpillar(3).unwrap();
        assert_eq!(triplets_from_tree(&cat), set_of(3, &[t(0, 1, 2), t(1, 0, 2)]));
        let h = Dendrogram::random(5, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(triplets_from_tree(&h).len(), 20);
        let two = Dendrogram::new(2, vec![(0, 1)]).unwrap();
        assert!(triplets_from_tree(&two).is_empty());
    }

    #[test]
    fn tree_triplets_match_exhaustive_scan() {
        // independent route: test every ordered (i, j, k) against the LCA sizes
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in 3..12 {
            let h = Dendrogram::random(n, &mut rng).unwrap();
            let lca = h.lca_sizes();
            let mut brute = TripletSet::new(n);
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        if i != j && j != k && i != k {
                            let ij = lca.get(i, j);
                            if ij < lca.get(i, k) && ij < lca.get(j, k) {
                                brute.insert(t(i as u32, j as u32, k as u32)).unwrap();
                            }
                        }
                    }
                }
            }
            let fast = triplets_from_tree(&h);
            assert_eq!(fast, brute);
            assert_eq!(fast.len(), n * (n - 1) * (n - 2) / 3);
            assert!(fast.is_contradiction_free());
        }
    }

    #[test]
    fn similarity_triplet_examples() {
        let s = example_similarity();
        assert_eq!(triplets_from_similarity(&s), set_of(3, &[t(0, 1, 2), t(1, 0, 2)]));
        assert_eq!(triplets_from_similarity(&tie_free(4, 1)).len(), 12);
        let constant = SimilarityMatrix::from_fn(5, |_, _| 1.0);
        assert!(triplets_from_similarity(&constant).is_empty());
    }

    #[test]
    fn similarity_quadruplet_examples() {
        let q = quadruplets_from_similarity(&example_similarity());
        let expected = QuadrupletSet::from_items(
            3,
            [Quadruplet::new(0, 1, 0, 2).unwrap(), Quadruplet::new(0, 1, 1, 2).unwrap()],
        )
        .unwrap();
        assert_eq!(q, expected);
        assert_eq!(quadruplets_from_similarity(&tie_free(3, 2)).len(), 3);
        let constant = SimilarityMatrix::from_fn(4, |_, _| 0i64);
        assert!(quadruplets_from_similarity(&constant).is_empty());
    }

    #[test]
    fn bernoulli_pair_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = Dendrogram::random(10, &mut rng).unwrap();
        let full = triplets_from_tree(&h);
        assert_eq!(sample_pairs_bernoulli(&full, 1.0, &mut rng).unwrap(), full);
        assert!(sample_pairs_bernoulli(&full, 0.0, &mut rng).unwrap().is_empty());

        // |T| = 2 * Binomial(120, 0.5): mean 120, sd 2 * sqrt(30)
        let trials = 1000;
        let mut total = 0usize;
        for _ in 0..trials {
            let s = sample_pairs_bernoulli(&full, 0.5, &mut rng).unwrap();
            assert!(s.iter().all(|x| s.contains(&x.partner())));
            total += s.len();
        }
        let mean = total as f64 / trials as f64;
        let sd_mean = 2.0 * 30f64.sqrt() / (trials as f64).sqrt();
        assert!((mean - 120.0).abs() < 3.0 * sd_mean, "mean {mean}");

        let broken = set_of(3, &[t(0, 1, 2)]);
        assert!(matches!(
            sample_pairs_bernoulli(&broken, 0.5, &mut rng),
            Err(Error::NotPairClosed(0, 1, 2))
        ));
    }

    #[test]
    fn pair_unranking_is_a_bijection() {
        let mut expected = Vec::new();
        for b in 0..40u64 {
            for a in 0..b {
                expected.push((a, b));
            }
        }
        let got: Vec<_> = (0..expected.len() as u64).map(unrank_pair).collect();
        let mut sorted = expected.clone();
        sorted.sort_by_key(|&(a, b)| (b, a));
        assert_eq!(got, sorted);
    }

    #[test]
    fn triplet_slots_cover_the_space_once() {
        let n = 7u64;
        let mut seen = HashSet::new();
        for r in 0..triplet_space_size(7) {
            let (i, j, k) = unrank_triplet_slot(n, r);
            assert!(i != j && i != k && j < k && k < 7);
            assert!(seen.insert((i, j, k)));
        }
        assert_eq!(seen.len() as u64, 7 * 15);
    }

    #[test]
    fn uniform_sampling_examples() {
        let s = tie_free(8, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let all = triplets_from_similarity(&s);
        let full = sample_triplets_uniform(&s, all.len(), &mut rng).unwrap();
        assert_eq!(full, all);
        assert!(sample_triplets_uniform(&s, 0, &mut rng).unwrap().is_empty());
        assert!(matches!(
            sample_triplets_uniform(&s, all.len() + 1, &mut rng),
            Err(Error::InsufficientComparisons { .. })
        ));

        let some = sample_triplets_uniform(&s, 40, &mut rng).unwrap();
        assert_eq!(some.len(), 40);
        assert!(some.iter().all(|x| all.contains(x)));

        let q_all = quadruplets_from_similarity(&s);
        let q = sample_quadruplets_uniform(&s, 100, &mut rng).unwrap();
        assert_eq!(q.len(), 100);
        assert!(q.iter().all(|x| q_all.contains(x)));
        let q_full = sample_quadruplets_uniform(&s, q_all.len(), &mut rng).unwrap();
        assert_eq!(q_full, q_all);
    }

    #[test]
    fn uniform_sampling_skips_ties() {
        // anchor 2 is tied between 0 and 1: only two valid triplets exist
        let s = example_similarity();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let got = sample_triplets_uniform(&s, 2, &mut rng).unwrap();
        assert_eq!(got, set_of(3, &[t(0, 1, 2), t(1, 0, 2)]));
        assert!(matches!(
            sample_triplets_uniform(&s, 3, &mut rng),
            Err(Error::InsufficientComparisons { requested: 3, available: 2 })
        ));
    }

    #[test]
    fn uniform_sampling_is_uniform_over_slots() {
        let s = tie_free(5, 8);
        let all: Vec<Triplet> = triplets_from_similarity(&s).iter().copied().collect();
        let mut counts = std::collections::HashMap::new();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let trials = 6000;
        for _ in 0..trials {
            for x in sample_triplets_uniform(&s, 3, &mut rng).unwrap().iter() {
                *counts.entry(*x).or_insert(0usize) += 1;
            }
        }
        // each of the 30 triplets is included with probability 3/30
        let expected = trials as f64 * 3.0 / all.len() as f64;
        let sd = (trials as f64 * 0.1 * 0.9).sqrt();
        for x in &all {
            let c = counts.get(x).copied().unwrap_or(0) as f64;
            assert!((c - expected).abs() < 5.0 * sd, "{x:?}: {c} vs {expected}");
        }
    }

    #[test]
    fn flip_noise_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let h = Dendrogram::random(9, &mut rng).unwrap();
        let full = triplets_from_tree(&h);
        assert_eq!(flip_noise(&full, 0.0, &mut rng).unwrap(), full);
        let all_flipped = flip_noise(&full, 1.0, &mut rng).unwrap();
        assert!(full.iter().all(|x| all_flipped.contains(&x.flipped())));

        let big = sample_triplets_uniform(&tie_free(100, 11), 100_000, &mut rng).unwrap();
        let noisy = flip_noise(&big, 0.05, &mut rng).unwrap();
        let flipped = big.iter().filter(|x| !noisy.contains(x)).count() as f64 / 1e5;
        assert!((flipped - 0.05).abs() < 0.007, "{flipped}");

        let q = QuadrupletSet::from_items(4, [Quadruplet::new(0, 1, 2, 3).unwrap()]).unwrap();
        let qf = flip_noise(&q, 1.0, &mut rng).unwrap();
        assert!(qf.contains(&Quadruplet::new(2, 3, 0, 1).unwrap()));
    }

    #[test]
    fn converter_examples() {
        let central = [TripleAnswer { objects: [1, 2, 3], answer: 1 }];
        assert_eq!(convert_central(&central).unwrap(), set_of(4, &[t(2, 1, 3), t(3, 1, 2)]));
        let bad = [TripleAnswer { objects: [1, 2, 3], answer: 5 }];
        assert!(convert_central(&bad).is_err());
        assert!(convert_central(&[]).unwrap().is_empty());

        let odd = [TripleAnswer { objects: [1, 2, 3], answer: 1 }];
        assert_eq!(convert_odd_out(&odd).unwrap(), set_of(4, &[t(2, 3, 1), t(3, 2, 1)]));
        assert!(convert_odd_out(&bad).is_err());
        assert!(convert_odd_out(&[]).unwrap().is_empty());

        let rank = RankAnswer {
            reference: 0,
            candidates: [1, 2, 3, 4, 5, 6, 7],
            first: 3,
            second: 6,
        };
        let set = convert_rank2of8(&[rank]).unwrap();
        assert_eq!(set.len(), 11);
        assert!(set.contains(&t(0, 3, 6)));
        assert!(set.contains(&t(0, 6, 1)));
        assert!(!set.contains(&t(0, 6, 3)));
        let bad_rank = RankAnswer { first: 0, ..rank };
        assert!(convert_rank2of8(&[bad_rank]).is_err());
        assert!(convert_rank2of8(&[]).unwrap().is_empty());
    }

    #[test]
    fn query_csv_parsing() {
        let q = parse_query_csv("central\n1,2,3,1\n").unwrap();
        assert_eq!(q.to_triplets().unwrap().len(), 2);
        let q = parse_query_csv("oddout,i,j,k,answer\n# c\n1,2,3,2\n").unwrap();
        assert_eq!(q, QueryAnswers::OddOut(vec![TripleAnswer { objects: [1, 2, 3], answer: 2 }]));
        let q = parse_query_csv("rank2of8\n0,1,2,3,4,5,6,7,1,2\n").unwrap();
        assert_eq!(q.to_triplets().unwrap().len(), 11);
        assert!(parse_query_csv("pairs\n1,2\n").is_err());
        assert!(parse_query_csv("central\n1,2,3\n").is_err());
    }

    #[test]
    fn restriction_examples() {
        let h = Dendrogram::random(9, &mut ChaCha8Rng::seed_from_u64(12)).unwrap();
        let full = triplets_from_tree(&h);
        let all: Vec<usize> = (0..9).collect();
        assert_eq!(restrict_triplets(&full, &all).unwrap(), full);
        let cat = triplets_from_tree(&Dendrogram::caterpillar(3).unwrap());
        assert!(restrict_triplets(&cat, &[0, 2]).unwrap().is_empty());
    }

    #[test]
    fn restriction_commutes_with_tree_triplets() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..200 {
            let n = rng.random_range(1..=8);
            let h = Dendrogram::random(n, &mut rng).unwrap();
            let subset: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.6)).collect();
            if subset.is_empty() {
                continue;
            }
            let (sub_tree, _) = h.restrict(&subset).unwrap();
            let lhs = triplets_from_tree(&sub_tree);
            let rhs = restrict_triplets(&triplets_from_tree(&h), &subset).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn file_format() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let set = sample_triplets_uniform(&tie_free(30, 15), 1000, &mut rng).unwrap();
        let back: TripletSet = parse_comparisons(&write_comparisons(&set), Some(30)).unwrap();
        assert_eq!(back, set);
        assert!(parse_comparisons::<Triplet>("0 1 1\n", None).is_err());
        assert!(parse_comparisons::<Triplet>("0 1\n", None).is_err());
        let parsed: TripletSet = parse_comparisons("# header\n0 1 2\n\n2 1 0\n", None).unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed.n(), 3);
        assert!(parse_comparisons::<Triplet>("0 1 5\n", Some(4)).is_err());
        let q: QuadrupletSet = parse_comparisons("0 1 2 3\n", None).unwrap();
        assert_eq!(write_comparisons(&q), "# n 4\n0 1 2 3\n");
        // the header keeps objects that never appear
        let sparse = set_of(9, &[t(0, 1, 2)]);
        let back: TripletSet = parse_comparisons(&write_comparisons(&sparse), None).unwrap();
        assert_eq!(back.n(), 9);
        assert!(parse_comparisons::<Triplet>("# n x\n", None).is_err());
        assert!(parse_comparisons::<Quadruplet>("1 0 2 3\n", None).is_err());
    }
}
