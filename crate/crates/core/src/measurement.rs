//! Paths and loops, length functionals, the canonical base/trilateration
//! matrices, trilaterating ensembles and the forward measurement process.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact;
use crate::geometry::{measure_all_lengths, Configuration, EdgeIndexing, LengthVector};

/// Whether measurements are open paths or closed loops.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Path,
    Loop,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Path => "path",
            Mode::Loop => "loop",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "path" => Ok(Mode::Path),
            "loop" => Ok(Mode::Loop),
            other => Err(Error::Malformed(format!("unknown mode {other:?}"))),
        }
    }
}

/// A vertex walk with no vertex immediately repeated.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "PathEntry", into = "PathEntry")]
pub struct Path(Vec<usize>);

#[derive(Serialize, Deserialize)]
struct PathEntry {
    path: Vec<usize>,
}

impl TryFrom<PathEntry> for Path {
    type Error = Error;

    fn try_from(e: PathEntry) -> Result<Self> {
        Path::new(e.path)
    }
}

impl From<Path> for PathEntry {
    fn from(p: Path) -> Self {
        PathEntry { path: p.0 }
    }
}

impl Path {
    pub fn new(vertices: Vec<usize>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidPath("a path needs at least two vertices".into()));
        }
        if let Some(w) = vertices.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidPath(format!("vertex {} immediately repeated", w[0])));
        }
        Ok(Self(vertices))
    }

    pub fn edge(i: usize, j: usize) -> Result<Self> {
        Self::new(vec![i, j])
    }

    pub fn ping(i: usize, j: usize) -> Result<Self> {
        Self::new(vec![i, j, i])
    }

    pub fn triangle(i: usize, j: usize, k: usize) -> Result<Self> {
        Self::new(vec![i, j, k, i])
    }

    pub fn vertices(&self) -> &[usize] {
        &self.0
    }

    pub fn is_loop(&self) -> bool {
        self.0.len() >= 3 && self.0.first() == self.0.last()
    }

    pub fn edge_count(&self) -> usize {
        self.0.len() - 1
    }

    /// The `s`-scaled walk: every edge traversed `s` times as often.
    ///
    /// Loops are repeated; open paths are walked forward and back.
    pub fn scaled(&self, s: usize) -> Self {
        assert!(s >= 1);
        let mut out = self.0.clone();
        for rep in 1..s {
            if self.is_loop() {
                out.extend_from_slice(&self.0[1..]);
            } else if rep % 2 == 1 {
                out.extend(self.0.iter().rev().skip(1));
            } else {
                out.extend_from_slice(&self.0[1..]);
            }
        }
        Self(out)
    }

    /// Vertex ids renamed through `map`.
    pub fn relabeled(&self, map: &[usize]) -> Self {
        Self(self.0.iter().map(|&v| map[v]).collect())
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (k, v) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "]")
    }
}

/// Nonnegative integer edge multiplicities over the edges of `K_n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LengthFunctional {
    n: usize,
    multiplicities: Vec<u32>,
}

impl LengthFunctional {
    pub fn new(n: usize, multiplicities: Vec<u32>) -> Result<Self> {
        let expected = EdgeIndexing::new(n).len();
        if multiplicities.len() != expected {
            return Err(Error::WrongLength {
                expected,
                found: multiplicities.len(),
            });
        }
        Ok(Self { n, multiplicities })
    }

    pub fn zero(n: usize) -> Self {
        Self {
            n,
            multiplicities: vec![0; EdgeIndexing::new(n).len()],
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn multiplicities(&self) -> &[u32] {
        &self.multiplicities
    }

    /// Largest multiplicity; the functional is `b`-bounded for any `b` at least this.
    pub fn bound(&self) -> u32 {
        self.multiplicities.iter().copied().max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.multiplicities.iter().all(|&m| m == 0)
    }

    pub fn scaled(&self, s: u32) -> Self {
        Self {
            n: self.n,
            multiplicities: self.multiplicities.iter().map(|m| m * s).collect(),
        }
    }

    /// `Σ f_ij · l_ij`.
    pub fn apply_lengths(&self, lengths: &LengthVector) -> Result<f64> {
        if lengths.vertex_count() != self.n {
            return Err(Error::WrongLength {
                expected: self.n,
                found: lengths.vertex_count(),
            });
        }
        Ok(self
            .multiplicities
            .iter()
            .zip(lengths.values())
            .map(|(&m, l)| m as f64 * l)
            .sum())
    }
}

pub fn functional_from_path(path: &Path, n: usize) -> Result<LengthFunctional> {
    let idx = EdgeIndexing::new(n);
    let mut f = LengthFunctional::zero(n);
    for w in path.vertices().windows(2) {
        f.multiplicities[idx.checked_index(w[0], w[1])?] += 1;
    }
    Ok(f)
}

pub fn apply_functional(f: &LengthFunctional, cfg: &Configuration) -> Result<f64> {
    f.apply_lengths(&measure_all_lengths(cfg))
}

/// Which canonical measurement pattern a matrix encodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKind {
    /// Pings and triangles of a `K_{d+2}` rooted at its first vertex.
    Base,
    /// Known edges of a `K_{d+1}`, then one ping and `d` triangles to the new vertex.
    Trilat,
    /// Plain edge lengths.
    Identity,
}

/// A `D×D` integer matrix mapping the edge lengths of a `K_{d+2}` to the
/// measurement values of one canonical pattern, with its exact inverse.
#[derive(Clone, Debug, PartialEq)]
pub struct CanonicalMatrix {
    kind: MatrixKind,
    dim: usize,
    rows: Vec<Vec<i64>>,
    row_paths: Vec<Option<Path>>,
    inverse: Vec<Vec<f64>>,
}

impl CanonicalMatrix {
    fn from_rows(kind: MatrixKind, dim: usize, row_paths: Vec<Option<Path>>) -> Result<Self> {
        let n = dim + 2;
        let rows: Vec<Vec<i64>> = row_paths
            .iter()
            .enumerate()
            .map(|(r, p)| match p {
                Some(p) => Ok(functional_from_path(p, n)?
                    .multiplicities
                    .iter()
                    .map(|&m| m as i64)
                    .collect()),
                None => {
                    let mut row = vec![0; row_paths.len()];
                    row[r] = 1;
                    Ok(row)
                }
            })
            .collect::<Result<_>>()?;
        let inverse = exact::inverse(&rows)
            .expect("canonical matrices are invertible")
            .iter()
            .map(|r| r.iter().map(exact::to_f64).collect())
            .collect();
        Ok(Self {
            kind,
            dim,
            rows,
            row_paths,
            inverse,
        })
    }

    pub fn identity(dim: usize) -> Self {
        if dim == 0 {
            panic!("dimension must be positive");
        }
        let n = dim + 2;
        let paths = EdgeIndexing::new(n)
            .pairs()
            .map(|(i, j)| Some(Path(vec![i, j])))
            .collect();
        Self::from_rows(MatrixKind::Identity, dim, paths).expect("identity rows are valid")
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `D = C(d+2, 2)`.
    pub fn size(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<i64>] {
        &self.rows
    }

    /// The walk generating each row on vertices `0..d+2`. Trilateration rows on
    /// the known `K_{d+1}` are plain edges.
    pub fn row_path(&self, r: usize) -> Path {
        match &self.row_paths[r] {
            Some(p) => p.clone(),
            None => {
                let (i, j) = EdgeIndexing::new(self.dim + 2).pair(r);
                Path(vec![i, j])
            }
        }
    }

    /// Exact integer determinant.
    pub fn determinant(&self) -> i128 {
        exact::determinant(&self.rows)
    }

    pub fn inverse(&self) -> &[Vec<f64>] {
        &self.inverse
    }

    /// `N^{-1} w`.
    pub fn solve(&self, w: &[f64]) -> Result<Vec<f64>> {
        if w.len() != self.size() {
            return Err(Error::WrongLength {
                expected: self.size(),
                found: w.len(),
            });
        }
        Ok(self
            .inverse
            .iter()
            .map(|row| row.iter().zip(w).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// `N l`.
    pub fn apply(&self, lengths: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().zip(lengths).map(|(&a, b)| a as f64 * b).sum())
            .collect()
    }
}

/// Build the tetrahedral (`Base`) or trilateration (`Trilat`) matrix, or the
/// identity, for dimension `d`.
pub fn canonical_matrix(kind: MatrixKind, d: usize) -> Result<CanonicalMatrix> {
    match kind {
        MatrixKind::Identity => {
            if d == 0 {
                return Err(Error::UnsupportedDimension(d));
            }
            Ok(CanonicalMatrix::identity(d))
        }
        MatrixKind::Base => {
            if d < 2 {
                return Err(Error::UnsupportedDimension(d));
            }
            let mut paths = Vec::new();
            for m in 1..=d + 1 {
                paths.push(Some(Path::ping(0, m)?));
                for j in 1..m {
                    paths.push(Some(Path::triangle(0, j, m)?));
                }
            }
            CanonicalMatrix::from_rows(kind, d, paths)
        }
        MatrixKind::Trilat => {
            if d < 2 {
                return Err(Error::UnsupportedDimension(d));
            }
            let c = (d + 1) * d / 2;
            let mut paths: Vec<Option<Path>> = vec![None; c];
            paths.push(Some(Path::ping(0, d + 1)?));
            for j in 1..=d {
                paths.push(Some(Path::triangle(0, j, d + 1)?));
            }
            CanonicalMatrix::from_rows(kind, d, paths)
        }
    }
}

/// An ordered list of functionals together with the walks that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementEnsemble {
    mode: Mode,
    n: usize,
    functionals: Vec<LengthFunctional>,
    provenance: Option<Vec<Path>>,
}

impl MeasurementEnsemble {
    pub fn from_paths(mode: Mode, n: usize, paths: Vec<Path>) -> Result<Self> {
        if mode == Mode::Loop {
            if let Some(p) = paths.iter().find(|p| !p.is_loop()) {
                return Err(Error::InvalidPath(format!("{p} is not a loop")));
            }
        }
        let functionals = paths
            .iter()
            .map(|p| functional_from_path(p, n))
            .collect::<Result<_>>()?;
        Ok(Self {
            mode,
            n,
            functionals,
            provenance: Some(paths),
        })
    }

    pub fn from_functionals(mode: Mode, n: usize, functionals: Vec<LengthFunctional>) -> Result<Self> {
        if let Some(f) = functionals.iter().find(|f| f.vertex_count() != n) {
            return Err(Error::WrongLength {
                expected: n,
                found: f.vertex_count(),
            });
        }
        Ok(Self {
            mode,
            n,
            functionals,
            provenance: None,
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.functionals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functionals.is_empty()
    }

    pub fn functionals(&self) -> &[LengthFunctional] {
        &self.functionals
    }

    pub fn provenance(&self) -> Option<&[Path]> {
        self.provenance.as_deref()
    }

    /// Realized maximum multiplicity over all functionals.
    pub fn bound(&self) -> u32 {
        self.functionals.iter().map(|f| f.bound()).max().unwrap_or(0)
    }

    /// The uniformly `s`-scaled ensemble.
    pub fn scaled(&self, s: u32) -> Self {
        Self {
            mode: self.mode,
            n: self.n,
            functionals: self.functionals.iter().map(|f| f.scaled(s)).collect(),
            provenance: self
                .provenance
                .as_ref()
                .map(|ps| ps.iter().map(|p| p.scaled(s as usize)).collect()),
        }
    }

    /// Concatenation of two ensembles over the same vertex set.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.mode != other.mode || self.n != other.n {
            return Err(Error::InvalidSize("ensembles differ in mode or vertex count".into()));
        }
        let mut functionals = self.functionals.clone();
        functionals.extend(other.functionals.iter().cloned());
        let provenance = match (&self.provenance, &other.provenance) {
            (Some(a), Some(b)) => Some(a.iter().chain(b).cloned().collect()),
            _ => None,
        };
        Ok(Self {
            mode: self.mode,
            n: self.n,
            functionals,
            provenance,
        })
    }
}

/// Unlabeled measurement values with their metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDataSet")]
pub struct DataSet {
    pub dim: usize,
    pub bound: u32,
    pub mode: Mode,
    pub values: Vec<f64>,
}

#[derive(Deserialize)]
struct RawDataSet {
    dim: usize,
    bound: u32,
    mode: Mode,
    values: Vec<f64>,
}

impl TryFrom<RawDataSet> for DataSet {
    type Error = Error;

    fn try_from(r: RawDataSet) -> Result<Self> {
        DataSet::new(r.dim, r.bound, r.mode, r.values)
    }
}

impl DataSet {
    pub fn new(dim: usize, bound: u32, mode: Mode, values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::Malformed(format!("data value {v} is not a positive real")));
        }
        if dim == 0 {
            return Err(Error::Malformed("dimension must be positive".into()));
        }
        Ok(Self {
            dim,
            bound,
            mode,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Hidden side channel of [`measure`]: which functional produced each value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundTruth {
    /// `labels[k]` is the ensemble index that produced `values[k]`.
    pub labels: Vec<usize>,
}

/// Uniform random configuration in `[0,1]^d`.
pub fn random_configuration(n: usize, d: usize, seed: u64) -> Result<Configuration> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Configuration::new(
        d,
        (0..n)
            .map(|_| (0..d).map(|_| rng.gen::<f64>()).collect())
            .collect(),
    )
}

/// Largest multiplicity allowed on any edge of a distractor walk.
pub const DISTRACTOR_MAX_MULTIPLICITY: u32 = 2;

/// An ensemble that allows for trilateration: a base `K_{d+2}` on vertices
/// `0..d+2`, one trilateration sequence for every later vertex, and `extra`
/// random distractor walks, in shuffled order.
pub fn build_trilateration_ensemble(
    n: usize,
    d: usize,
    mode: Mode,
    extra: usize,
    max_hops: usize,
    seed: u64,
) -> Result<MeasurementEnsemble> {
    if d < 2 {
        return Err(Error::UnsupportedDimension(d));
    }
    if n < d + 2 {
        return Err(Error::InvalidSize(format!("need n >= d+2 = {}, got {n}", d + 2)));
    }
    let min_hops = if mode == Mode::Loop { 2 } else { 1 };
    if extra > 0 && max_hops < min_hops {
        return Err(Error::InvalidSize(format!(
            "max_hops must be at least {min_hops} in {mode} mode"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut paths = Vec::new();

    match mode {
        Mode::Path => {
            for (i, j) in EdgeIndexing::new(d + 2).pairs() {
                paths.push(Path::edge(i, j)?);
            }
        }
        Mode::Loop => {
            let base = canonical_matrix(MatrixKind::Base, d)?;
            paths.extend((0..base.size()).map(|r| base.row_path(r)));
        }
    }
    for j in d + 2..n {
        match mode {
            Mode::Path => {
                let anchors: Vec<usize> = rand::seq::index::sample(&mut rng, j, d + 1).into_vec();
                for i in anchors {
                    paths.push(Path::edge(i, j)?);
                }
            }
            Mode::Loop => {
                let others: Vec<usize> = rand::seq::index::sample(&mut rng, j - 1, d)
                    .into_iter()
                    .map(|k| k + 1)
                    .collect();
                paths.push(Path::ping(0, j)?);
                for i in others {
                    paths.push(Path::triangle(0, i, j)?);
                }
            }
        }
    }

    let mut seen: std::collections::HashSet<LengthFunctional> = paths
        .iter()
        .map(|p| functional_from_path(p, n))
        .collect::<Result<_>>()?;
    let mut added = 0;
    let mut attempts = 0usize;
    while added < extra {
        attempts += 1;
        if attempts > 10_000 + 1000 * extra {
            return Err(Error::InvalidSize(
                "could not generate enough distinct distractor walks".into(),
            ));
        }
        let hops = rng.gen_range(min_hops..=max_hops);
        let walk = random_walk(&mut rng, n, hops, mode);
        let f = functional_from_path(&walk, n)?;
        if f.bound() > DISTRACTOR_MAX_MULTIPLICITY || !seen.insert(f) {
            continue;
        }
        paths.push(walk);
        added += 1;
    }
    paths.shuffle(&mut rng);
    MeasurementEnsemble::from_paths(mode, n, paths)
}

fn random_walk(rng: &mut ChaCha8Rng, n: usize, hops: usize, mode: Mode) -> Path {
    let step = |rng: &mut ChaCha8Rng, from: usize, avoid: Option<usize>| loop {
        let v = rng.gen_range(0..n);
        if v != from && Some(v) != avoid {
            return v;
        }
    };
    let mut walk = Vec::with_capacity(hops + 1);
    match mode {
        Mode::Path => {
            walk.push(rng.gen_range(0..n));
            for _ in 0..hops {
                let v = step(rng, *walk.last().unwrap(), None);
                walk.push(v);
            }
        }
        Mode::Loop => {
            walk.push(0);
            for h in 1..hops {
                let avoid = (h == hops - 1).then_some(0);
                let v = step(rng, *walk.last().unwrap(), avoid);
                walk.push(v);
            }
            walk.push(0);
        }
    }
    Path(walk)
}

/// Measure every functional of `ensemble` on `cfg` and shuffle the values.
pub fn measure(
    ensemble: &MeasurementEnsemble,
    cfg: &Configuration,
    shuffle_seed: u64,
) -> Result<(DataSet, GroundTruth)> {
    if cfg.len() != ensemble.vertex_count() {
        return Err(Error::WrongLength {
            expected: ensemble.vertex_count(),
            found: cfg.len(),
        });
    }
    let lengths = measure_all_lengths(cfg);
    let idx = EdgeIndexing::new(cfg.len());
    if let Some(k) = lengths.values().iter().position(|&l| l == 0.0) {
        let (i, j) = idx.pair(k);
        return Err(Error::CoincidentPoints(i, j));
    }
    let mut labels: Vec<usize> = (0..ensemble.len()).collect();
    labels.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle_seed));
    let values = labels
        .iter()
        .map(|&k| ensemble.functionals[k].apply_lengths(&lengths))
        .collect::<Result<Vec<_>>>()?;
    let data = DataSet::new(cfg.dim(), ensemble.bound(), ensemble.mode, values)?;
    Ok((data, GroundTruth { labels }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn f(path: &[usize], n: usize) -> Vec<u32> {
        functional_from_path(&Path::new(path.to_vec()).unwrap(), n)
            .unwrap()
            .multiplicities
    }

    #[test]
    fn functional_examples() {
        assert_eq!(f(&[0, 1, 0], 4), vec![2, 0, 0, 0, 0, 0]);
        assert_eq!(f(&[0, 1, 2, 0], 4), vec![1, 1, 1, 0, 0, 0]);
        assert_eq!(f(&[0, 1], 4), vec![1, 0, 0, 0, 0, 0]);
        assert!(Path::new(vec![0, 0, 1]).is_err());
        assert!(Path::new(vec![3]).is_err());
        assert!(functional_from_path(&Path::edge(0, 4).unwrap(), 4).is_err());
    }

    #[test]
    fn apply_functional_examples() {
        let two = Configuration::new(2, vec![vec![0.0, 0.0], vec![3.0, 4.0]]).unwrap();
        let ping = functional_from_path(&Path::ping(0, 1).unwrap(), 2).unwrap();
        assert_eq!(apply_functional(&ping, &two).unwrap(), 10.0);
        let tri = Configuration::new(2, vec![vec![0.0, 0.0], vec![3.0, 0.0], vec![0.0, 4.0]]).unwrap();
        let t = functional_from_path(&Path::triangle(0, 1, 2).unwrap(), 3).unwrap();
        assert_eq!(apply_functional(&t, &tri).unwrap(), 12.0);
        assert_eq!(apply_functional(&LengthFunctional::zero(3), &tri).unwrap(), 0.0);
        assert!(apply_functional(&ping, &tri).is_err());
    }

    #[test]
    fn canonical_matrices_match_displayed_forms() {
        let n1 = canonical_matrix(MatrixKind::Base, 2).unwrap();
        assert_eq!(
            n1.rows(),
            &[
                vec![2, 0, 0, 0, 0, 0],
                vec![0, 2, 0, 0, 0, 0],
                vec![1, 1, 1, 0, 0, 0],
                vec![0, 0, 0, 2, 0, 0],
                vec![1, 0, 0, 1, 1, 0],
                vec![0, 1, 0, 1, 0, 1],
            ]
        );
        let n2 = canonical_matrix(MatrixKind::Trilat, 2).unwrap();
        assert_eq!(
            n2.rows(),
            &[
                vec![1, 0, 0, 0, 0, 0],
                vec![0, 1, 0, 0, 0, 0],
                vec![0, 0, 1, 0, 0, 0],
                vec![0, 0, 0, 2, 0, 0],
                vec![1, 0, 0, 1, 1, 0],
                vec![0, 1, 0, 1, 0, 1],
            ]
        );
        assert!(canonical_matrix(MatrixKind::Base, 1).is_err());
        assert!(canonical_matrix(MatrixKind::Trilat, 1).is_err());
    }

    #[test]
    fn canonical_matrix_structure() {
        for d in 2..=4 {
            for kind in [MatrixKind::Base, MatrixKind::Trilat] {
                let m = canonical_matrix(kind, d).unwrap();
                let dd = (d + 2) * (d + 1) / 2;
                let c = (d + 1) * d / 2;
                assert_eq!(m.size(), dd);
                assert_ne!(m.determinant(), 0, "{kind:?} d={d}");
                for (r, row) in m.rows().iter().enumerate() {
                    let sum: i64 = row.iter().sum();
                    assert!([1, 2, 3].contains(&sum));
                    if r < c {
                        assert!(row[c..].iter().all(|&x| x == 0));
                    }
                    // lower triangular with positive diagonal
                    assert!(row[r + 1..].iter().all(|&x| x == 0));
                    assert!(row[r] > 0);
                }
            }
        }
        let n31 = canonical_matrix(MatrixKind::Base, 3).unwrap();
        assert!(n31.rows().iter().all(|r| [2, 3].contains(&r.iter().sum::<i64>())));
    }

    #[test]
    fn ensemble_counts() {
        let e = build_trilateration_ensemble(4, 2, Mode::Loop, 0, 4, 1).unwrap();
        assert_eq!(e.len(), 6);
        let n1 = canonical_matrix(MatrixKind::Base, 2).unwrap();
        let mut got: Vec<Vec<u32>> = e.functionals().iter().map(|f| f.multiplicities.clone()).collect();
        let mut want: Vec<Vec<u32>> = n1
            .rows()
            .iter()
            .map(|r| r.iter().map(|&x| x as u32).collect())
            .collect();
        got.sort();
        want.sort();
        assert_eq!(got, want);

        let e = build_trilateration_ensemble(5, 2, Mode::Path, 0, 4, 2).unwrap();
        assert_eq!(e.len(), 6 + 3);
        assert_eq!(e.bound(), 1);

        let e = build_trilateration_ensemble(6, 3, Mode::Loop, 4, 5, 3).unwrap();
        assert_eq!(e.len(), 10 + 4 + 4);
        assert!(e.bound() <= 2);
        assert!(e.provenance().unwrap().iter().all(|p| p.is_loop() && p.vertices()[0] == 0));

        assert!(build_trilateration_ensemble(3, 2, Mode::Path, 0, 4, 0).is_err());
        assert!(build_trilateration_ensemble(5, 1, Mode::Path, 0, 4, 0).is_err());
    }

    #[test]
    fn measure_examples() {
        let cfg = Configuration::new(2, vec![vec![0.0, 0.0], vec![3.0, 4.0]]).unwrap();
        let e = MeasurementEnsemble::from_paths(Mode::Path, 2, vec![Path::edge(0, 1).unwrap()]).unwrap();
        let (data, truth) = measure(&e, &cfg, 0).unwrap();
        assert_eq!(data.values, vec![5.0]);
        assert_eq!(truth.labels, vec![0]);

        // unit-length K_4 measured by the base loops
        let n1 = canonical_matrix(MatrixKind::Base, 2).unwrap();
        let unit = n1.apply(&[1.0; 6]);
        let mut v = unit.clone();
        v.sort_by(f64::total_cmp);
        assert_eq!(v, vec![2.0, 2.0, 2.0, 3.0, 3.0, 3.0]);

        let e = build_trilateration_ensemble(6, 2, Mode::Loop, 3, 4, 9).unwrap();
        let p = random_configuration(6, 2, 4).unwrap();
        let (a, ta) = measure(&e, &p, 1).unwrap();
        let (b, _) = measure(&e, &p, 2).unwrap();
        let mut x = a.values.clone();
        let mut y = b.values.clone();
        x.sort_by(f64::total_cmp);
        y.sort_by(f64::total_cmp);
        assert_eq!(x, y);
        for (k, &lab) in ta.labels.iter().enumerate() {
            assert_eq!(a.values[k], apply_functional(&e.functionals()[lab], &p).unwrap());
        }

        let coincident = Configuration::new(2, vec![vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(measure(&e.clone(), &coincident, 0).unwrap_err(), Error::WrongLength { expected: 6, found: 2 });
        let e2 = MeasurementEnsemble::from_paths(Mode::Path, 2, vec![Path::edge(0, 1).unwrap()]).unwrap();
        assert_eq!(measure(&e2, &coincident, 0).unwrap_err(), Error::CoincidentPoints(0, 1));
    }

    #[test]
    fn scaled_paths_scale_functionals() {
        let p = Path::new(vec![0, 2, 1, 3]).unwrap();
        let l = Path::triangle(0, 1, 3).unwrap();
        for s in 1..5u32 {
            for path in [&p, &l] {
                let scaled = path.scaled(s as usize);
                if path.is_loop() {
                    assert!(scaled.is_loop());
                }
                assert_eq!(
                    functional_from_path(&scaled, 4).unwrap(),
                    functional_from_path(path, 4).unwrap().scaled(s)
                );
            }
        }
    }

    #[test]
    fn functionals_separate_values_on_generic_configurations() {
        for seed in 0..100 {
            let e = build_trilateration_ensemble(7, 2, Mode::Loop, 10, 5, seed).unwrap();
            let p = random_configuration(7, 2, 1000 + seed).unwrap();
            let (data, _) = measure(&e, &p, seed).unwrap();
            let mut v = data.values.clone();
            v.sort_by(f64::total_cmp);
            for w in v.windows(2) {
                assert!(w[1] - w[0] > 1e-9 * w[1], "seed {seed}: {} ~ {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn dataset_json_shape() {
        let d = DataSet::new(2, 2, Mode::Loop, vec![1.5, 2.25]).unwrap();
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(s, r#"{"dim":2,"bound":2,"mode":"loop","values":[1.5,2.25]}"#);
        assert!(serde_json::from_str::<DataSet>(r#"{"dim":2,"bound":2,"mode":"loop","values":[-1.0]}"#).is_err());
        let p: Vec<Path> = serde_json::from_str(r#"[{"path":[0,1,0]},{"path":[0,2]}]"#).unwrap();
        assert_eq!(p[0], Path::ping(0, 1).unwrap());
        assert!(serde_json::from_str::<Vec<Path>>(r#"[{"path":[0,0]}]"#).is_err());
    }

    proptest! {
        #[test]
        fn apply_functional_is_homogeneous(seed in 0u64..1000, s in 0.01f64..100.0) {
            let p = random_configuration(5, 2, seed).unwrap();
            let e = build_trilateration_ensemble(5, 2, Mode::Loop, 3, 5, seed).unwrap();
            for f in e.functionals() {
                let a = apply_functional(f, &p.scaled(s)).unwrap();
                let b = s * apply_functional(f, &p).unwrap();
                prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
        }

        #[test]
        fn path_functional_is_edge_traversal_count(walk in proptest::collection::vec(0usize..5, 2..12)) {
            prop_assume!(walk.windows(2).all(|w| w[0] != w[1]));
            let p = Path::new(walk.clone()).unwrap();
            let f = functional_from_path(&p, 5).unwrap();
            prop_assert_eq!(f.multiplicities().iter().sum::<u32>() as usize, walk.len() - 1);
        }
    }
}
