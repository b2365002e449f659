//! Pairwise similarity matrices and the additive similarities built from
//! triplet and quadruplet comparisons.

use std::cmp::Ordering;
use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use crate::comparisons::{Quadruplet, Triplet};
use crate::dendrogram::Dendrogram;
use crate::error::{Error, Result};

/// Entry type of a [`SimilarityMatrix`]: exact `i64` for additive
/// similarities, `f64` for real-valued ones.
pub trait Scalar:
    Copy
    + PartialOrd
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + Sum
    + 'static
{
    fn from_count(count: usize) -> Self;

    fn to_f64(self) -> f64;

    /// Equality up to the tolerance used for symmetry checks.
    fn near(self, other: Self) -> bool;

    /// Compares `sum_a / count_a` with `sum_b / count_b`.
    fn cmp_means(sum_a: Self, count_a: u64, sum_b: Self, count_b: u64) -> Ordering;
}

impl Scalar for i64 {
    fn from_count(count: usize) -> Self {
        count as i64
    }

    fn to_f64(self) -> f64 {
        self as f64
    }

    fn near(self, other: Self) -> bool {
        self == other
    }

    fn cmp_means(sum_a: Self, count_a: u64, sum_b: Self, count_b: u64) -> Ordering {
        (sum_a as i128 * count_b as i128).cmp(&(sum_b as i128 * count_a as i128))
    }
}

impl Scalar for f64 {
    fn from_count(count: usize) -> Self {
        count as f64
    }

    fn to_f64(self) -> f64 {
        self
    }

    fn near(self, other: Self) -> bool {
        (self - other).abs() <= 1e-9
    }

    fn cmp_means(sum_a: Self, count_a: u64, sum_b: Self, count_b: u64) -> Ordering {
        (sum_a / count_a as f64).total_cmp(&(sum_b / count_b as f64))
    }
}

/// Dense symmetric `n x n` matrix with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix<T = f64> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> SimilarityMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        SimilarityMatrix {
            n,
            data: vec![T::default(); n * n],
        }
    }

    /// Fills every pair `i < j` with `f(i, j)`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut s = Self::zeros(n);
        for i in 0..n {
            for j in i + 1..n {
                s.set(i, j, f(i, j));
            }
        }
        s
    }

    /// Builds from full rows, checking squareness and symmetry. The diagonal
    /// is overwritten with zero.
    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::InvalidParameter(format!(
                "row {bad} has {} entries, expected {n}",
                rows[bad].len()
            )));
        }
        for i in 0..n {
            for j in i + 1..n {
                if !rows[i][j].near(rows[j][i]) {
                    return Err(Error::Asymmetric(i, j));
                }
            }
        }
        Ok(Self::from_fn(n, |i, j| rows[i][j]))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    /// Sets both `(i, j)` and `(j, i)`; ignored on the diagonal.
    pub fn set(&mut self, i: usize, j: usize, value: T) {
        if i != j {
            self.data[i * self.n + j] = value;
            self.data[j * self.n + i] = value;
        }
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, delta: T) {
        self.data[i * self.n + j] += delta;
        self.data[j * self.n + i] += delta;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Sum of the strict upper triangle.
    pub fn upper_sum(&self) -> T {
        (0..self.n)
            .flat_map(|i| (i + 1..self.n).map(move |j| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .sum()
    }

    /// Adds `c` to every off-diagonal entry.
    pub fn shifted(&self, c: T) -> Self {
        Self::from_fn(self.n, |i, j| self.get(i, j) + c)
    }

    /// Entry `(perm[i], perm[j])` of the result is entry `(i, j)` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut out = Self::zeros(self.n);
        for i in 0..self.n {
            for j in i + 1..self.n {
                out.set(perm[i], perm[j], self.get(i, j));
            }
        }
        out
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> SimilarityMatrix<U> {
        SimilarityMatrix {
            n: self.n,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn to_f64(&self) -> SimilarityMatrix<f64> {
        self.map(Scalar::to_f64)
    }

    /// `n` comma-separated rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n {
            let row: Vec<String> = self.row(i).iter().map(|x| x.to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// A similarity CSV as read from disk. Files whose entries are all integers
/// stay exact.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedSimilarity {
    Integer(SimilarityMatrix<i64>),
    Real(SimilarityMatrix<f64>),
}

impl LoadedSimilarity {
    pub fn n(&self) -> usize {
        match self {
            LoadedSimilarity::Integer(s) => s.n(),
            LoadedSimilarity::Real(s) => s.n(),
        }
    }

    pub fn to_f64(&self) -> SimilarityMatrix<f64> {
        match self {
            LoadedSimilarity::Integer(s) => s.to_f64(),
            LoadedSimilarity::Real(s) => s.clone(),
        }
    }
}

fn csv_rows(text: &str) -> Vec<(usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(i, l)| (i, l.split(',').map(str::trim).collect()))
        .collect()
}

/// Parses a square similarity CSV, symmetric within `1e-9`.
pub fn parse_similarity_csv(text: &str) -> Result<LoadedSimilarity> {
    let rows = csv_rows(text);
    let all_integer = rows
        .iter()
        .all(|(_, fields)| fields.iter().all(|f| f.parse::<i64>().is_ok()));
    if all_integer {
        let rows = rows
            .into_iter()
            .map(|(_, fields)| fields.iter().map(|f| f.parse::<i64>().unwrap()).collect())
            .collect();
        return Ok(LoadedSimilarity::Integer(SimilarityMatrix::from_rows(rows)?));
    }
    let mut parsed = Vec::with_capacity(rows.len());
    for (line, fields) in rows {
        let row = fields
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::parse(line, format!("bad number {f:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        parsed.push(row);
    }
    Ok(LoadedSimilarity::Real(SimilarityMatrix::from_rows(parsed)?))
}

/// Parses one embedding vector per row.
pub fn parse_embedding_csv(text: &str) -> Result<Vec<Vec<f64>>> {
    csv_rows(text)
        .into_iter()
        .map(|(line, fields)| {
            fields
                .iter()
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|_| Error::parse(line, format!("bad number {f:?}")))
                })
                .collect()
        })
        .collect()
}

fn check_index(index: u32, n: usize) -> Result<()> {
    if (index as usize) < n {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange {
            index: index as usize,
            n,
        })
    }
}

/// Additive similarity from triplets: every observed `(i, j, k)` adds one to
/// `s_ij` and removes one from `s_ik`. Repeated triplets count repeatedly.
pub fn adds3<'a, I>(triplets: I, n: usize) -> Result<SimilarityMatrix<i64>>
where
    I: IntoIterator<Item = &'a Triplet>,
{
    let mut s = SimilarityMatrix::zeros(n);
    for t in triplets {
        check_index(t.i, n)?;
        check_index(t.j, n)?;
        check_index(t.k, n)?;
        let (i, j, k) = (t.i as usize, t.j as usize, t.k as usize);
        s.add(i, j, 1);
        s.add(i, k, -1);
    }
    Ok(s)
}

/// Additive similarity from quadruplets: `(i, j, k, l)` adds one to `s_ij`
/// and removes one from `s_kl`.
pub fn adds4<'a, I>(quadruplets: I, n: usize) -> Result<SimilarityMatrix<i64>>
where
    I: IntoIterator<Item = &'a Quadruplet>,
{
    let mut s = SimilarityMatrix::zeros(n);
    for q in quadruplets {
        for x in [q.i, q.j, q.k, q.l] {
            check_index(x, n)?;
        }
        s.add(q.i as usize, q.j as usize, 1);
        s.add(q.k as usize, q.l as usize, -1);
    }
    Ok(s)
}

/// AddS3 of the complete triplet set of `tree`, in closed form:
/// `2n + 2 - 3|H(i v j)|`.
pub fn latent_adds3(tree: &Dendrogram) -> SimilarityMatrix<i64> {
    let n = tree.n();
    let lca = tree.lca_sizes();
    SimilarityMatrix::from_fn(n, |i, j| 2 * n as i64 + 2 - 3 * lca.get(i, j) as i64)
}

/// Cosine similarity between embedding rows; zero diagonal.
pub fn cosine(points: &[Vec<f64>]) -> Result<SimilarityMatrix<f64>> {
    let dim = points.first().map_or(0, Vec::len);
    if let Some(bad) = points.iter().position(|p| p.len() != dim) {
        return Err(Error::InvalidParameter(format!(
            "embedding row {bad} has dimension {}, expected {dim}",
            points[bad].len()
        )));
    }
    let norms: Vec<f64> = points
        .iter()
        .map(|p| p.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    if let Some(bad) = norms.iter().position(|&x| x == 0.0) {
        return Err(Error::ZeroNorm(bad));
    }
    Ok(SimilarityMatrix::from_fn(points.len(), |i, j| {
        let dot: f64 = points[i].iter().zip(&points[j]).map(|(a, b)| a * b).sum();
        dot / (norms[i] * norms[j])
    }))
}
