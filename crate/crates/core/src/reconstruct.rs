//! Unlabeled reconstruction: exhaustive base discovery, greedy trilateration
//! growth, smallest-scale selection, and verification against ground truth.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{align_onto, embed_simplex, Configuration, EdgeIndexing, DEFAULT_TOL};
use crate::measurement::{canonical_matrix, CanonicalMatrix, DataSet, MatrixKind, Mode, Path};
use crate::relation::{
    precision_coefficient_cap, rational_rank_with_bound, relation_bound, RankStrategy, DEFAULT_RELATION_TOL,
};
use crate::variety::{cm_backward_error, is_singular_l24, membership_l, MembershipVerdict};

/// Knobs shared by every stage of the engine.
#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructionOptions {
    /// Geometric tolerance (determinant tests, coincidence, alignment).
    pub tol: f64,
    /// Relative residual tolerance for integer-relation tests.
    pub relation_tol: f64,
    pub strategy: RankStrategy,
    /// Caller asserts the data comes from pings and triangles through one
    /// root only; required by [`RankStrategy::DistinctValues`].
    pub assume_restricted: bool,
    /// Overrides the data set's declared bound.
    pub bound: Option<u32>,
}

impl Default for ReconstructionOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            relation_tol: DEFAULT_RELATION_TOL,
            strategy: RankStrategy::Brute,
            assume_restricted: false,
            bound: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateBase {
    /// Data indices matched to the rows of the base matrix, in row order.
    pub value_indices: Vec<usize>,
    pub embedded: Configuration,
    pub matrix: MatrixKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrilaterationStep {
    pub anchors: Vec<usize>,
    pub point: usize,
    pub value_indices: Vec<usize>,
}

/// Why a data value was consumed: the walk over recovered point indices
/// whose length it is.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Explanation {
    pub value_index: usize,
    #[serde(flatten)]
    pub path: Path,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartialReconstruction {
    pub points: Vec<Vec<f64>>,
    pub dim: usize,
    /// Multiplicity with which each data value has been consumed (0 or 1).
    pub consumed: Vec<u32>,
    pub history: Vec<TrilaterationStep>,
    pub explanations: Vec<Explanation>,
}

impl PartialReconstruction {
    pub fn from_base(base: &CandidateBase, data_len: usize) -> Result<Self> {
        let d = base.embedded.dim();
        let matrix = canonical_matrix(base.matrix, d)?;
        let mut consumed = vec![0; data_len];
        let mut explanations = Vec::with_capacity(base.value_indices.len());
        for (r, &k) in base.value_indices.iter().enumerate() {
            consumed[k] += 1;
            explanations.push(Explanation {
                value_index: k,
                path: matrix.row_path(r),
            });
        }
        Ok(Self {
            points: base.embedded.points().to_vec(),
            dim: d,
            consumed,
            history: Vec::new(),
            explanations,
        })
    }

    pub fn explained_count(&self) -> usize {
        self.consumed.iter().map(|&c| c as usize).sum()
    }

    pub fn configuration(&self) -> Result<Configuration> {
        Configuration::new(self.dim, self.points.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionResult {
    pub configuration: Configuration,
    pub explained_count: usize,
    /// Sum of all pairwise lengths; smaller means smaller scale.
    pub relative_scale_rank: f64,
    pub labeling: Vec<Explanation>,
    pub history: Vec<TrilaterationStep>,
    /// Position of the originating base in the enumeration order.
    pub base_index: usize,
}

impl ReconstructionResult {
    /// Largest relative discrepancy between a consumed value and the length of
    /// its explaining walk on the recovered configuration.
    pub fn certificate_residual(&self, data: &DataSet) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for e in &self.labeling {
            let v = *data.values.get(e.value_index).ok_or(Error::IndexOutOfRange {
                index: e.value_index,
                n: data.values.len(),
            })?;
            let len = walk_length(&self.configuration, &e.path)?;
            worst = worst.max((len - v).abs() / v);
        }
        Ok(worst)
    }
}

fn walk_length(cfg: &Configuration, path: &Path) -> Result<f64> {
    let vs = path.vertices();
    let mut total = 0.0;
    for pair in vs.windows(2) {
        total += crate::geometry::squared_distance(cfg, pair[0], pair[1])?.sqrt();
    }
    Ok(total)
}

fn edge_length_sum(points: &[Vec<f64>]) -> f64 {
    let mut s = 0.0;
    for i in 0..points.len() {
        for j in 0..i {
            s += dist(&points[i], &points[j]);
        }
    }
    s
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn diameter(points: &[Vec<f64>]) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..points.len() {
        for j in 0..i {
            m = m.max(dist(&points[i], &points[j]));
        }
    }
    m
}

/// Largest Gram order handled on the stack (`d + 1` for `d <= 5`).
const MAX_K: usize = 6;

/// A row-major `k x k` matrix in a fixed `MAX_K x MAX_K` buffer.
type SmallMat = [f64; MAX_K * MAX_K];

#[cfg(test)]
fn small_mat(entries: &[f64], k: usize) -> SmallMat {
    let mut a = [0.0; MAX_K * MAX_K];
    for i in 0..k {
        a[i * MAX_K..i * MAX_K + k].copy_from_slice(&entries[i * k..(i + 1) * k]);
    }
    a
}

/// Determinant of a small dense matrix by partial-pivot elimination.
fn small_det(mut a: SmallMat, n: usize) -> f64 {
    let mut det = 1.0;
    for c in 0..n {
        let mut p = c;
        for r in c + 1..n {
            if a[r * MAX_K + c].abs() > a[p * MAX_K + c].abs() {
                p = r;
            }
        }
        if a[p * MAX_K + c] == 0.0 {
            return 0.0;
        }
        if p != c {
            for k in 0..n {
                a.swap(p * MAX_K + k, c * MAX_K + k);
            }
            det = -det;
        }
        let piv = a[c * MAX_K + c];
        det *= piv;
        for r in c + 1..n {
            let f = a[r * MAX_K + c] / piv;
            for k in c..n {
                a[r * MAX_K + k] -= f * a[c * MAX_K + k];
            }
        }
    }
    det
}

/// Gram matrix (relative to the first vertex) of a vertex subset, read from
/// squared lengths of the edges among `0..d+2`.
fn subset_gram(sq: &[f64], idx: &EdgeIndexing, verts: &[usize]) -> (SmallMat, usize) {
    let m = |i: usize, j: usize| if i == j { 0.0 } else { sq[idx.index(i, j)] };
    let root = verts[0];
    let rest = &verts[1..];
    let k = rest.len();
    assert!(k <= MAX_K, "Gram order {k} exceeds {MAX_K}");
    let mut g = [0.0; MAX_K * MAX_K];
    for (a, &va) in rest.iter().enumerate() {
        for (b, &vb) in rest.iter().enumerate().skip(a) {
            let x = 0.5 * (m(root, va) + m(root, vb) - m(va, vb));
            g[a * MAX_K + b] = x;
            g[b * MAX_K + a] = x;
        }
    }
    (g, k)
}

/// Positive semidefiniteness up to `tol` (relative to the mean diagonal) via
/// a symmetric-pivoted factorization.
fn is_psd(mut g: SmallMat, k: usize, tol: f64) -> bool {
    let scale = (0..k).map(|i| g[i * MAX_K + i].abs()).sum::<f64>() / k.max(1) as f64;
    if scale == 0.0 {
        return true;
    }
    let eps = tol * scale;
    let mut remaining = [0usize; MAX_K];
    for (i, r) in remaining.iter_mut().enumerate().take(k) {
        *r = i;
    }
    let mut len = k;
    while len > 0 {
        // symmetric pivoting on the largest remaining diagonal
        let mut pos = 0;
        for q in 1..len {
            if g[remaining[q] * (MAX_K + 1)] > g[remaining[pos] * (MAX_K + 1)] {
                pos = q;
            }
        }
        let p = remaining[pos];
        let piv = g[p * (MAX_K + 1)];
        if piv < -eps {
            return false;
        }
        remaining[pos] = remaining[len - 1];
        len -= 1;
        let rest = &remaining[..len];
        if piv <= eps {
            // remaining block must vanish within tolerance
            let off = eps.sqrt() * scale.sqrt();
            return rest.iter().all(|&i| g[i * (MAX_K + 1)] >= -eps)
                && rest.iter().all(|&i| rest.iter().all(|&j| g[i * MAX_K + j].abs() <= off));
        }
        for &i in rest {
            let f = g[i * MAX_K + p] / piv;
            for &j in rest {
                g[i * MAX_K + j] -= f * g[p * MAX_K + j];
            }
        }
    }
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Symmetry {
    None,
    /// Ping values ascend with the vertex they reach.
    LoopBase,
    /// Edge `01` has the smallest index, `0m` ascend, and vertex 0 reaches
    /// its nearest-indexed neighbour before vertex 1 does.
    PathBase,
}

/// Depth-first search for D-tuples of unused data values passing membership
/// under a lower-triangular canonical matrix, with the first `known` lengths
/// fixed.
struct TupleSearch<'a> {
    matrix: &'a CanonicalMatrix,
    d: usize,
    idx: EdgeIndexing,
    values: &'a [f64],
    sorted: Vec<(f64, usize)>,
    available: Vec<bool>,
    symmetry: Symmetry,
    tol: f64,
    value_scale: f64,
}

type Visit<'v> = dyn FnMut(&[usize], &[f64], &MembershipVerdict) -> Result<bool> + 'v;

impl<'a> TupleSearch<'a> {
    fn new(matrix: &'a CanonicalMatrix, values: &'a [f64], available: Vec<bool>, symmetry: Symmetry, tol: f64) -> Self {
        let mut sorted: Vec<(f64, usize)> = values
            .iter()
            .enumerate()
            .filter(|(k, _)| available[*k])
            .map(|(k, &v)| (v, k))
            .collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let value_scale = values.iter().fold(0.0, |m: f64, &v| m.max(v.abs()));
        Self {
            matrix,
            d: matrix.dim(),
            idx: EdgeIndexing::new(matrix.dim() + 2),
            values,
            sorted,
            available,
            symmetry,
            tol,
            value_scale,
        }
    }

    fn slot_of(&self, i: usize, j: usize) -> usize {
        self.idx.index(i, j)
    }

    /// Exclusive lower bound on the data index that may fill `slot`.
    fn lower_bound(&self, slot: usize, chosen: &[usize]) -> Option<usize> {
        let (i, m) = self.idx.pair(slot);
        match self.symmetry {
            Symmetry::None => None,
            Symmetry::LoopBase => (i == 0 && m >= 2).then(|| chosen[self.slot_of(0, m - 1)]),
            Symmetry::PathBase => {
                if slot == 0 {
                    return None;
                }
                let mut lb = chosen[0];
                if i == 0 && m >= 3 {
                    lb = lb.max(chosen[self.slot_of(0, m - 1)]);
                }
                if i == 1 && m >= 2 {
                    lb = lb.max(chosen[self.slot_of(0, 2)]);
                }
                Some(lb)
            }
        }
    }

    fn allowed(&self, slot: usize, k: usize, chosen: &[usize]) -> bool {
        self.available[k] && self.lower_bound(slot, chosen).is_none_or(|lb| k > lb)
    }

    /// `u_slot` from `w_slot` by forward substitution.
    fn solve_slot(&self, slot: usize, w: f64, u: &[f64]) -> f64 {
        let row = &self.matrix.rows()[slot];
        let partial: f64 = (0..slot).map(|e| row[e] as f64 * u[e]).sum();
        (w - partial) / row[slot] as f64
    }

    /// PSD check on the clique completed by the edge at `slot`, if any.
    fn clique_ok(&self, slot: usize, sq: &[f64]) -> bool {
        let (j, m) = self.idx.pair(slot);
        if j == 0 {
            return true;
        }
        if j + 2 > self.d + 1 {
            return true;
        }
        let mut verts = [0usize; MAX_K + 1];
        for (v, slot) in verts.iter_mut().enumerate().take(j + 1) {
            *slot = v;
        }
        verts[j + 1] = m;
        let (g, k) = subset_gram(sq, &self.idx, &verts[..j + 2]);
        is_psd(g, k, self.tol)
    }

    /// Data indices, ascending, whose value puts `u_slot` inside the range
    /// allowed by the triangle inequalities through earlier vertices.
    fn candidates(&self, slot: usize, u: &[f64], floor: f64) -> Vec<usize> {
        let (j, m) = self.idx.pair(slot);
        let (mut lo, mut hi) = (floor, f64::INFINITY);
        for i in 0..j {
            let (a, b) = (u[self.slot_of(i, j)], u[self.slot_of(i, m)]);
            lo = lo.max((a - b).abs());
            hi = hi.min(a + b);
        }
        let slack = 10.0 * self.tol * self.value_scale;
        let row = &self.matrix.rows()[slot];
        let partial: f64 = (0..slot).map(|e| row[e] as f64 * u[e]).sum();
        let diag = row[slot] as f64;
        let (w_lo, w_hi) = (partial + diag * lo - slack, partial + diag * hi + slack);
        let start = self.sorted.partition_point(|&(v, _)| v < w_lo);
        let mut out: Vec<usize> = self.sorted[start..]
            .iter()
            .take_while(|&&(v, _)| v <= w_hi)
            .map(|&(_, k)| k)
            .collect();
        out.sort_unstable();
        out
    }

    /// Run the search, starting with the first `known` slots of `u` filled.
    fn run(&mut self, known: &[f64], visit: &mut Visit<'_>) -> Result<bool> {
        let dd = self.matrix.size();
        let mut u = vec![0.0; dd];
        let mut w = vec![0.0; dd];
        let mut chosen = vec![usize::MAX; dd];
        for (s, &l) in known.iter().enumerate() {
            u[s] = l;
            w[s] = self.matrix.rows()[s][..=s].iter().zip(&u).map(|(&a, b)| a as f64 * b).sum();
        }
        let mut sq: Vec<f64> = u.iter().map(|x| x * x).collect();
        self.dfs(known.len(), &mut u, &mut w, &mut sq, &mut chosen, visit)
    }

    fn dfs(
        &mut self,
        slot: usize,
        u: &mut Vec<f64>,
        w: &mut Vec<f64>,
        sq: &mut Vec<f64>,
        chosen: &mut Vec<usize>,
        visit: &mut Visit<'_>,
    ) -> Result<bool> {
        let last = self.matrix.size() - 1;
        if slot == last {
            return self.finish(u, w, sq, chosen, visit);
        }
        let floor = self.tol * self.value_scale;
        for k in self.candidates(slot, u, floor) {
            if !self.allowed(slot, k, chosen) {
                continue;
            }
            let ul = self.solve_slot(slot, self.values[k], u);
            if ul <= floor {
                continue;
            }
            u[slot] = ul;
            sq[slot] = ul * ul;
            if !self.clique_ok(slot, sq) {
                continue;
            }
            w[slot] = self.values[k];
            chosen[slot] = k;
            self.available[k] = false;
            let stop = self.dfs(slot + 1, u, w, sq, chosen, visit)?;
            self.available[k] = true;
            chosen[slot] = usize::MAX;
            if stop {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// The last length is a root of the Cayley–Menger quadratic; look up the
    /// value it predicts.
    fn finish(
        &mut self,
        u: &mut [f64],
        w: &mut [f64],
        sq: &mut [f64],
        chosen: &mut [usize],
        visit: &mut Visit<'_>,
    ) -> Result<bool> {
        let last = self.matrix.size() - 1;
        let scale = sq[..last].iter().sum::<f64>() / last as f64;
        // the last edge joins vertices d and d+1, Gram positions d-1 and d
        sq[last] = 0.0;
        let verts: Vec<usize> = (0..self.d + 2).collect();
        let (mut g, k) = subset_gram(sq, &self.idx, &verts);
        let (a, b) = (self.d - 1, self.d);
        let base = 0.5 * (sq[self.slot_of(0, self.d)] + sq[self.slot_of(0, self.d + 1)]);
        let mut f = |t: f64| {
            g[a * MAX_K + b] = base - 0.5 * t;
            g[b * MAX_K + a] = base - 0.5 * t;
            small_det(g, k)
        };
        let (f0, fp, fm) = (f(0.0), f(scale), f(-scale));
        let a = (fp + fm - 2.0 * f0) / (2.0 * scale * scale);
        let b = (fp - fm) / (2.0 * scale);
        let c = f0;
        let mut roots = Vec::with_capacity(2);
        if a.abs() <= 1e-12 * (b.abs() / scale + c.abs() / (scale * scale)) {
            if b != 0.0 {
                roots.push(-c / b);
            }
        } else {
            let disc = b * b - 4.0 * a * c;
            let slack = 1e-12 * b * b;
            if disc >= -slack {
                let r = disc.max(0.0).sqrt();
                roots.push((-b - r) / (2.0 * a));
                roots.push((-b + r) / (2.0 * a));
            }
        }
        let row = &self.matrix.rows()[last];
        let partial: f64 = (0..last).map(|e| row[e] as f64 * u[e]).sum();
        let window = (self.tol * 1e3).max(1e-7);
        let mut hits: Vec<usize> = Vec::new();
        for t in roots {
            if !(t > 0.0) {
                continue;
            }
            let predicted = partial + row[last] as f64 * t.sqrt();
            let lo = predicted - window * predicted;
            let hi = predicted + window * predicted;
            let start = self.sorted.partition_point(|&(v, _)| v < lo);
            for &(v, k) in &self.sorted[start..] {
                if v > hi {
                    break;
                }
                if self.allowed(last, k, chosen) && !hits.contains(&k) {
                    hits.push(k);
                }
            }
        }
        hits.sort_unstable();
        for k in hits {
            w[last] = self.values[k];
            chosen[last] = k;
            let verdict = membership_l(w, self.matrix, self.tol)?;
            if verdict.member && cm_backward_error(w, self.matrix)? <= self.tol {
                let stop = visit(chosen, w, &verdict)?;
                if stop {
                    chosen[last] = usize::MAX;
                    return Ok(true);
                }
            }
        }
        chosen[last] = usize::MAX;
        Ok(false)
    }
}

/// Rational-rank certificate for a member tuple.
fn certify_rank(w: &[f64], matrix: &CanonicalMatrix, b: u32, opts: &ReconstructionOptions) -> Result<bool> {
    let d = matrix.dim();
    let k = w.len();
    // unit bounds cannot separate small integer gluings like 3-4-5
    let b = b.max(2);
    if opts.strategy == RankStrategy::DistinctValues {
        return Ok(rational_rank_with_bound(w, k, 1, opts.strategy, opts.tol, opts.assume_restricted)?.at_least);
    }
    let (values, target): (&[f64], usize) = if d == 2 {
        let l = matrix.solve(w)?;
        if is_singular_l24(&l, opts.tol)?.singular {
            return Ok(false);
        }
        (&w[..3], 3)
    } else {
        (w, k)
    };
    let cap = precision_coefficient_cap(target, opts.relation_tol);
    let bound = relation_bound(b, target).min(cap);
    let bound = match opts.strategy {
        RankStrategy::Reduced => {
            // keep the reported norm 2^(k/2)·bound inside the precision cap
            let shrink = 2f64.powf(target as f64 / 2.0);
            (bound as f64).min(cap as f64 / shrink).max(1.0 / shrink)
        }
        _ => bound as f64,
    };
    let verdict = match opts.strategy {
        RankStrategy::Reduced => {
            let mut ok = false;
            for subset in subsets(values.len(), target) {
                let sub: Vec<f64> = subset.iter().map(|&i| values[i]).collect();
                if !crate::relation::find_integer_relation_reduced(&sub, bound, opts.relation_tol)?.is_relation() {
                    ok = true;
                    break;
                }
            }
            ok
        }
        _ => rational_rank_with_bound(values, target, bound as u64, RankStrategy::Brute, opts.relation_tol, false)?.at_least,
    };
    Ok(verdict)
}

fn subsets(k: usize, r: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, k: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..k {
            cur.push(i);
            rec(i + 1, k, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, k, r, &mut Vec::new(), &mut out);
    out
}

fn min_separation_ok(points: &[Vec<f64>], candidate: &[f64], tol: f64) -> bool {
    let mut all = points.to_vec();
    all.push(candidate.to_vec());
    let diam = diameter(&all);
    points.iter().all(|p| dist(p, candidate) > tol * diam)
}

fn check_dim(data: &DataSet) -> Result<usize> {
    if data.dim < 2 {
        return Err(Error::UnsupportedDimension(data.dim));
    }
    Ok(data.dim)
}

fn base_matrix(mode: Mode, d: usize) -> Result<CanonicalMatrix> {
    match mode {
        Mode::Path => canonical_matrix(MatrixKind::Identity, d),
        Mode::Loop => canonical_matrix(MatrixKind::Base, d),
    }
}

fn effective_bound(data: &DataSet, opts: &ReconstructionOptions) -> u32 {
    opts.bound.unwrap_or(data.bound)
}

/// Every ordered D-tuple of data values (up to the base's vertex-relabeling
/// symmetry) that is a certified, embeddable base.
pub fn find_candidate_bases(data: &DataSet, opts: &ReconstructionOptions) -> Result<Vec<CandidateBase>> {
    let d = check_dim(data)?;
    let matrix = base_matrix(data.mode, d)?;
    if data.values.len() < matrix.size() {
        return Ok(Vec::new());
    }
    let symmetry = match data.mode {
        Mode::Path => Symmetry::PathBase,
        Mode::Loop => Symmetry::LoopBase,
    };
    let b = effective_bound(data, opts);
    let mut search = TupleSearch::new(&matrix, &data.values, vec![true; data.values.len()], symmetry, opts.tol);
    let mut bases = Vec::new();
    search.run(&[], &mut |chosen, w, verdict| {
        if !certify_rank(w, &matrix, b, opts)? {
            return Ok(false);
        }
        let lengths = verdict.recovered_lengths.as_ref().expect("member has lengths");
        let sq: Vec<f64> = lengths.iter().map(|l| l * l).collect();
        let embedded = match embed_simplex(&sq, d, opts.tol) {
            Ok(c) => c,
            Err(Error::Degenerate { .. }) | Err(Error::NotRealizable) => return Ok(false),
            Err(e) => return Err(e),
        };
        let pts = embedded.points();
        let diam = diameter(pts);
        for i in 0..pts.len() {
            for j in 0..i {
                if dist(&pts[i], &pts[j]) <= opts.tol * diam {
                    return Ok(false);
                }
            }
        }
        bases.push(CandidateBase {
            value_indices: chosen.to_vec(),
            embedded,
            matrix: matrix.kind(),
        });
        Ok(false)
    })?;
    Ok(bases)
}

/// One trilateration step: the first anchor set and value tuple (in search
/// order) that locates a point not already present.
pub fn trilaterate_step(
    partial: &PartialReconstruction,
    data: &DataSet,
    opts: &ReconstructionOptions,
) -> Result<Option<PartialReconstruction>> {
    let d = check_dim(data)?;
    if partial.points.len() < d + 1 || partial.dim != d {
        return Err(Error::InvalidSize(format!("need at least {} located points", d + 1)));
    }
    let b = effective_bound(data, opts);
    let matrix = match data.mode {
        Mode::Path => canonical_matrix(MatrixKind::Identity, d)?,
        Mode::Loop => canonical_matrix(MatrixKind::Trilat, d)?,
    };
    let available: Vec<bool> = partial.consumed.iter().map(|&c| c == 0).collect();
    if available.iter().filter(|&&a| a).count() < d + 1 {
        return Ok(None);
    }
    let located = partial.points.len();
    let anchor_sets: Vec<Vec<usize>> = match data.mode {
        Mode::Path => subsets(located, d + 1),
        Mode::Loop => subsets(located - 1, d)
            .into_iter()
            .map(|s| std::iter::once(0).chain(s.into_iter().map(|v| v + 1)).collect())
            .collect(),
    };
    let c = d * (d + 1) / 2;
    let local_idx = EdgeIndexing::new(d + 2);
    let mut search = TupleSearch::new(&matrix, &data.values, available, Symmetry::None, opts.tol);
    for anchors in anchor_sets {
        let known: Vec<f64> = (0..c)
            .map(|e| {
                let (i, j) = local_idx.pair(e);
                dist(&partial.points[anchors[i]], &partial.points[anchors[j]])
            })
            .collect();
        let mut found: Option<(Vec<usize>, Vec<f64>)> = None;
        search.run(&known, &mut |chosen, w, verdict| {
            if !certify_rank(w, &matrix, b, opts)? {
                return Ok(false);
            }
            let lengths = verdict.recovered_lengths.as_ref().expect("member has lengths");
            let sq: Vec<f64> = lengths.iter().map(|l| l * l).collect();
            let local = match embed_simplex(&sq, d, opts.tol) {
                Ok(cfg) => cfg,
                Err(Error::Degenerate { .. }) | Err(Error::NotRealizable) => return Ok(false),
                Err(e) => return Err(e),
            };
            let src = &local.points()[..=d];
            let dst: Vec<Vec<f64>> = anchors.iter().map(|&a| partial.points[a].clone()).collect();
            let point = match align_onto(src, &dst, local.point(d + 1), opts.tol) {
                Ok(p) => p,
                Err(Error::AnchorsDegenerate { .. }) | Err(Error::AnchorsNotCongruent) => return Ok(false),
                Err(e) => return Err(e),
            };
            if !min_separation_ok(&partial.points, &point, opts.tol) {
                // an already located point, found again
                return Ok(false);
            }
            found = Some((chosen[c..].to_vec(), point));
            Ok(true)
        })?;
        if let Some((value_indices, point)) = found {
            let mut next = partial.clone();
            let new_index = next.points.len();
            next.points.push(point);
            let mut map: Vec<usize> = anchors.clone();
            map.push(new_index);
            for (r, &k) in (c..matrix.size()).zip(&value_indices) {
                next.consumed[k] += 1;
                next.explanations.push(Explanation {
                    value_index: k,
                    path: matrix.row_path(r).relabeled(&map),
                });
            }
            next.history.push(TrilaterationStep {
                anchors,
                point: new_index,
                value_indices,
            });
            return Ok(Some(next));
        }
    }
    Ok(None)
}

/// Trilaterate from `base` until no step succeeds.
pub fn grow(base: &CandidateBase, data: &DataSet, opts: &ReconstructionOptions) -> Result<ReconstructionResult> {
    let mut partial = PartialReconstruction::from_base(base, data.values.len())?;
    while let Some(next) = trilaterate_step(&partial, data, opts)? {
        partial = next;
    }
    Ok(ReconstructionResult {
        relative_scale_rank: edge_length_sum(&partial.points),
        explained_count: partial.explained_count(),
        configuration: partial.configuration()?,
        labeling: partial.explanations,
        history: partial.history,
        base_index: 0,
    })
}

/// Relative tolerance for deciding that two candidate reconstructions are the
/// same shape at different integer scales.
const SIMILARITY_TOL: f64 = 1e-6;

/// Grow every candidate base and keep the reconstruction with the most points
/// and then the most explained values. Among equally large ones the smallest
/// integer scale wins; unrelated shapes (possible only through floating-point
/// coincidences) are ranked by certificate residual, then by base order.
pub fn reconstruct(data: &DataSet, opts: &ReconstructionOptions) -> Result<ReconstructionResult> {
    check_dim(data)?;
    let bases = find_candidate_bases(data, opts)?;
    let max_scale = effective_bound(data, opts).max(1);
    let mut best: Option<(ReconstructionResult, f64)> = None;
    for (i, base) in bases.iter().enumerate() {
        let mut result = grow(base, data, opts)?;
        result.base_index = i;
        let residual = result.certificate_residual(data)?;
        let better = match &best {
            None => true,
            Some((cur, cur_residual)) => {
                let size = |r: &ReconstructionResult| (r.configuration.len(), r.explained_count);
                match size(&result).cmp(&size(cur)) {
                    std::cmp::Ordering::Greater => true,
                    std::cmp::Ordering::Less => false,
                    std::cmp::Ordering::Equal => {
                        let smaller = result.relative_scale_rank < cur.relative_scale_rank * (1.0 - 1e-9);
                        let (lo, hi) = if smaller { (&result, cur) } else { (cur, &result) };
                        if verify(&lo.configuration, &hi.configuration, SIMILARITY_TOL, max_scale)?.matched {
                            smaller
                        } else {
                            residual < *cur_residual
                        }
                    }
                }
            }
        };
        if better {
            best = Some((result, residual));
        }
    }
    best.map(|(r, _)| r).ok_or(Error::NoBaseFound)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub matched: bool,
    /// `relabeling[i]` is the truth index matched to recovered point `i`.
    pub relabeling: Vec<usize>,
    pub scale: u32,
    /// Largest relative length discrepancy `|l_rec - s·l_true| / (s·l_true)`.
    pub max_residual: f64,
}

/// Find an injective relabeling and an integer scale `s <= max_scale` with
/// `recovered ≅ s·truth` restricted to the matched points.
pub fn verify(truth: &Configuration, recovered: &Configuration, tol: f64, max_scale: u32) -> Result<VerifyReport> {
    if truth.dim() != recovered.dim() {
        return Err(Error::DimensionMismatch {
            expected: truth.dim(),
            found: recovered.dim(),
        });
    }
    let unmatched = VerifyReport {
        matched: false,
        relabeling: Vec::new(),
        scale: 0,
        max_residual: f64::INFINITY,
    };
    if recovered.len() > truth.len() || recovered.is_empty() {
        return Ok(unmatched);
    }
    let n = recovered.len();
    let rd = |i: usize, j: usize| dist(recovered.point(i), recovered.point(j));
    let td = |a: usize, b: usize| dist(truth.point(a), truth.point(b));

    fn extend(
        i: usize,
        n: usize,
        s: f64,
        tol: f64,
        map: &mut Vec<usize>,
        taken: &mut [bool],
        rd: &dyn Fn(usize, usize) -> f64,
        td: &dyn Fn(usize, usize) -> f64,
    ) -> bool {
        if i == n {
            return true;
        }
        for a in 0..taken.len() {
            if taken[a] {
                continue;
            }
            let ok = (0..i).all(|j| {
                let t = s * td(a, map[j]);
                (rd(i, j) - t).abs() <= tol * t
            });
            if !ok {
                continue;
            }
            taken[a] = true;
            map.push(a);
            if extend(i + 1, n, s, tol, map, taken, rd, td) {
                return true;
            }
            map.pop();
            taken[a] = false;
        }
        false
    }

    for s in 1..=max_scale.max(1) {
        let mut map = Vec::with_capacity(n);
        let mut taken = vec![false; truth.len()];
        if extend(0, n, s as f64, tol, &mut map, &mut taken, &rd, &td) {
            let mut worst: f64 = 0.0;
            for i in 0..n {
                for j in 0..i {
                    let t = s as f64 * td(map[i], map[j]);
                    worst = worst.max((rd(i, j) - t).abs() / t);
                }
            }
            return Ok(VerifyReport {
                matched: true,
                relabeling: map,
                scale: s,
                max_residual: worst,
            });
        }
    }
    Ok(unmatched)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::measure_all_lengths;
    use crate::measurement::{build_trilateration_ensemble, measure, random_configuration, MeasurementEnsemble};

    fn round_trip(n: usize, d: usize, mode: Mode, extra: usize, seed: u64) -> (Configuration, DataSet, ReconstructionResult) {
        let p = random_configuration(n, d, seed).unwrap();
        let e = build_trilateration_ensemble(n, d, mode, extra, 4, seed + 1000).unwrap();
        let (data, _) = measure(&e, &p, seed + 2000).unwrap();
        let r = reconstruct(&data, &ReconstructionOptions::default()).unwrap();
        (p, data, r)
    }

    #[test]
    fn small_det_matches_known_values() {
        assert_eq!(small_det(small_mat(&[2.0, 1.0, 1.0, 2.0], 2), 2), 3.0);
        assert!((small_det(small_mat(&[0.0, 1.0, 1.0, 0.0], 2), 2) + 1.0).abs() < 1e-15);
        let m = small_mat(&[2.0, 0.0, 1.0, 1.0, 3.0, 0.0, 0.0, 1.0, 4.0], 3);
        assert!((small_det(m, 3) - 25.0).abs() < 1e-12);
    }

    #[test]
    fn psd_check() {
        assert!(is_psd(small_mat(&[1.0, 0.5, 0.5, 1.0], 2), 2, 1e-9));
        assert!(!is_psd(small_mat(&[1.0, 2.0, 2.0, 1.0], 2), 2, 1e-9));
        assert!(is_psd(small_mat(&[1.0, 1.0, 1.0, 1.0], 2), 2, 1e-9));
    }

    #[test]
    fn base_found_for_minimal_loop_data() {
        for seed in 0..10 {
            let p = random_configuration(4, 2, seed).unwrap();
            let e = build_trilateration_ensemble(4, 2, Mode::Loop, 0, 4, seed).unwrap();
            let (data, _) = measure(&e, &p, seed).unwrap();
            let bases = find_candidate_bases(&data, &ReconstructionOptions::default()).unwrap();
            assert_eq!(bases.len(), 1, "seed {seed}");
            assert!(verify(&p, &bases[0].embedded, 1e-9, 1).unwrap().matched);
        }
    }

    #[test]
    fn base_found_for_minimal_path_data() {
        for seed in 0..10 {
            let p = random_configuration(4, 2, seed).unwrap();
            let e = build_trilateration_ensemble(4, 2, Mode::Path, 0, 4, seed).unwrap();
            let (data, _) = measure(&e, &p, seed).unwrap();
            let bases = find_candidate_bases(&data, &ReconstructionOptions::default()).unwrap();
            assert_eq!(bases.len(), 1, "seed {seed}");
        }
    }

    #[test]
    fn unrelated_values_give_no_base() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        for _ in 0..50 {
            let values: Vec<f64> = (0..6).map(|_| rng.gen_range(0.5..3.0)).collect();
            for mode in [Mode::Path, Mode::Loop] {
                let data = DataSet::new(2, 2, mode, values.clone()).unwrap();
                assert!(find_candidate_bases(&data, &ReconstructionOptions::default()).unwrap().is_empty());
                assert_eq!(reconstruct(&data, &ReconstructionOptions::default()).unwrap_err(), Error::NoBaseFound);
            }
        }
    }

    #[test]
    fn empty_data_has_no_base() {
        let data = DataSet {
            dim: 2,
            bound: 1,
            mode: Mode::Loop,
            values: Vec::new(),
        };
        assert_eq!(reconstruct(&data, &ReconstructionOptions::default()).unwrap_err(), Error::NoBaseFound);
    }

    #[test]
    fn rejects_dimension_one() {
        let data = DataSet::new(1, 1, Mode::Path, vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(
            reconstruct(&data, &ReconstructionOptions::default()).unwrap_err(),
            Error::UnsupportedDimension(1)
        );
    }

    #[test]
    fn round_trips_recover_the_configuration() {
        for (n, d, mode, extra) in [
            (4, 2, Mode::Loop, 0),
            (7, 2, Mode::Loop, 0),
            (7, 2, Mode::Path, 0),
            (6, 2, Mode::Loop, 5),
            (6, 2, Mode::Path, 5),
            (5, 3, Mode::Loop, 0),
        ] {
            for seed in 0..3 {
                let (p, data, r) = round_trip(n, d, mode, extra, seed);
                assert_eq!(r.configuration.len(), n, "{n} {d} {mode} {extra} {seed}");
                let v = verify(&p, &r.configuration, 1e-7, 3).unwrap();
                assert!(v.matched && v.scale == 1, "{v:?}");
                assert!(r.certificate_residual(&data).unwrap() < 1e-9);
                assert_eq!(r.explained_count, r.labeling.len());
            }
        }
    }

    #[test]
    fn fourth_square_point_by_trilateration() {
        // a slightly irregular square, so that its lengths are generic
        let square = Configuration::new(
            2,
            vec![vec![0.0, 0.0], vec![1.0, 0.013], vec![-0.021, 0.994], vec![1.009, 1.017]],
        )
        .unwrap();
        let paths = vec![
            Path::ping(0, 3).unwrap(),
            Path::triangle(0, 1, 3).unwrap(),
            Path::triangle(0, 2, 3).unwrap(),
        ];
        let e = MeasurementEnsemble::from_paths(Mode::Loop, 4, paths).unwrap();
        let (data, _) = measure(&e, &square, 3).unwrap();
        let partial = PartialReconstruction {
            points: square.points()[..3].to_vec(),
            dim: 2,
            consumed: vec![0; 3],
            history: Vec::new(),
            explanations: Vec::new(),
        };
        let opts = ReconstructionOptions::default();
        let next = trilaterate_step(&partial, &data, &opts).unwrap().unwrap();
        assert!(dist(&next.points[3], square.point(3)) < 1e-8);
        assert_eq!(next.explained_count(), 3);
        assert_eq!(next.history[0].anchors, vec![0, 1, 2]);
        // everything consumed: no further step
        assert!(trilaterate_step(&next, &data, &opts).unwrap().is_none());

        // the same values cannot re-locate a point that is already present
        let full = PartialReconstruction {
            points: square.points().to_vec(),
            ..partial
        };
        assert!(trilaterate_step(&full, &data, &opts).unwrap().is_none());
    }

    #[test]
    fn partial_ensembles_locate_only_covered_vertices() {
        let p = random_configuration(7, 2, 21).unwrap();
        let e = build_trilateration_ensemble(5, 2, Mode::Loop, 0, 4, 5).unwrap();
        // same ensemble on 7 vertices: vertices 5 and 6 are never measured
        let paths: Vec<Path> = e.provenance().unwrap().to_vec();
        let e7 = MeasurementEnsemble::from_paths(Mode::Loop, 7, paths).unwrap();
        let (data, _) = measure(&e7, &p, 1).unwrap();
        let r = reconstruct(&data, &ReconstructionOptions::default()).unwrap();
        assert_eq!(r.configuration.len(), 5);
        let v = verify(&p, &r.configuration, 1e-7, 1).unwrap();
        assert!(v.matched);

        let base = build_trilateration_ensemble(4, 2, Mode::Path, 0, 4, 5).unwrap();
        let (data, _) = measure(&base, &random_configuration(4, 2, 8).unwrap(), 0).unwrap();
        assert_eq!(reconstruct(&data, &ReconstructionOptions::default()).unwrap().configuration.len(), 4);
    }

    #[test]
    fn scaled_ensembles() {
        let p = random_configuration(6, 2, 31).unwrap();
        let e = build_trilateration_ensemble(6, 2, Mode::Loop, 0, 4, 31).unwrap();
        let (data, _) = measure(&e.scaled(3), &p, 0).unwrap();
        let r = reconstruct(&data, &ReconstructionOptions::default()).unwrap();
        let v = verify(&p, &r.configuration, 1e-7, 6).unwrap();
        assert!(v.matched);
        assert_eq!(v.scale, 3);

        let both = e.concat(&e.scaled(2)).unwrap();
        let (data, _) = measure(&both, &p, 0).unwrap();
        let bases = find_candidate_bases(&data, &ReconstructionOptions::default()).unwrap();
        assert!(bases.len() >= 2);
        let r = reconstruct(&data, &ReconstructionOptions::default()).unwrap();
        let v = verify(&p, &r.configuration, 1e-7, 6).unwrap();
        assert!(v.matched);
        assert_eq!(v.scale, 1);
    }

    #[test]
    fn verify_examples() {
        let p = random_configuration(6, 2, 3).unwrap();
        let q = random_configuration(6, 2, 4).unwrap();
        assert!(!verify(&p, &q, 1e-7, 3).unwrap().matched);
        let v = verify(&p, &p.scaled(2.0), 1e-9, 3).unwrap();
        assert_eq!((v.matched, v.scale), (true, 2));
        let sub = p.subconfiguration(&[4, 1, 2]).unwrap();
        let v = verify(&p, &sub, 1e-9, 1).unwrap();
        assert_eq!(v.relabeling, vec![4, 1, 2]);
        let reflected = Configuration::new(2, p.points().iter().map(|x| vec![-x[0] + 3.0, x[1]]).collect()).unwrap();
        assert!(verify(&p, &reflected, 1e-9, 1).unwrap().matched);
        let _ = measure_all_lengths(&p);
    }
}
