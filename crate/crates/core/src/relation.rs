//! Integer relation search and rational-rank certification of measurement tuples.
//!
//! A relation on `w = (w_1..w_k)` is a nonzero integer vector `c` with
//! `Σ c_i w_i = 0`. Floating-point data only supports `ε`-tests, so a relation
//! is accepted when the residual is below a tolerance that grows with the
//! coefficient size.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative residual tolerance for relation tests on noiseless `f64` data.
pub const DEFAULT_RELATION_TOL: f64 = 1e-14;

/// Largest half-table the brute-force search will build.
pub const BRUTE_TABLE_BUDGET: u128 = 1 << 22;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelationKind {
    Independent,
    Relation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationCertificate {
    pub kind: RelationKind,
    pub coefficients: Option<Vec<i64>>,
    pub bound_used: u64,
}

impl RelationCertificate {
    fn independent(bound_used: u64) -> Self {
        Self {
            kind: RelationKind::Independent,
            coefficients: None,
            bound_used,
        }
    }

    fn relation(coefficients: Vec<i64>, bound_used: u64) -> Self {
        Self {
            kind: RelationKind::Relation,
            coefficients: Some(coefficients),
            bound_used,
        }
    }

    pub fn is_relation(&self) -> bool {
        self.kind == RelationKind::Relation
    }

    /// `|Σ c_i w_i|`, or `None` for an independence certificate.
    pub fn residual(&self, w: &[f64]) -> Option<f64> {
        self.coefficients
            .as_ref()
            .map(|c| c.iter().zip(w).map(|(&a, b)| a as f64 * b).sum::<f64>().abs())
    }
}

fn max_abs(w: &[f64]) -> f64 {
    w.iter().fold(0.0, |m: f64, x| m.max(x.abs()))
}

fn check_input(w: &[f64]) -> Result<()> {
    if w.len() < 2 {
        return Err(Error::InvalidSize("relation search needs at least two values".into()));
    }
    if w.iter().any(|x| !x.is_finite()) {
        return Err(Error::Malformed("non-finite value in relation search".into()));
    }
    Ok(())
}

fn unit_relation(k: usize, at: usize) -> Vec<i64> {
    let mut c = vec![0; k];
    c[at] = 1;
    c
}

/// Flip so the first nonzero entry is positive.
fn canonical_sign(mut c: Vec<i64>) -> Vec<i64> {
    if c.iter().find(|&&x| x != 0).is_some_and(|&x| x < 0) {
        c.iter_mut().for_each(|x| *x = -*x);
    }
    c
}

/// Every vector of `[-bound, bound]^h`, with its value and max-abs shell.
struct HalfTable {
    h: usize,
    radix: i64,
    bound: i64,
    values: Vec<f64>,
    shells: Vec<Vec<u32>>,
}

impl HalfTable {
    fn new(w: &[f64], bound: i64) -> Self {
        let h = w.len();
        let radix = 2 * bound + 1;
        let size = (radix as usize).pow(h as u32);
        let mut values = Vec::with_capacity(size);
        let mut shells = vec![Vec::new(); bound as usize + 1];
        let mut digits = vec![-bound; h];
        for code in 0..size {
            if code > 0 {
                for d in digits.iter_mut() {
                    *d += 1;
                    if *d > bound {
                        *d = -bound;
                    } else {
                        break;
                    }
                }
            }
            let v: f64 = digits.iter().zip(w).map(|(&c, x)| c as f64 * x).sum();
            let shell = digits.iter().map(|d| d.unsigned_abs()).max().unwrap_or(0);
            values.push(v);
            shells[shell as usize].push(code as u32);
        }
        Self {
            h,
            radix,
            bound,
            values,
            shells,
        }
    }

    fn decode(&self, code: u32, out: &mut Vec<i64>) {
        let mut c = code as i64;
        for _ in 0..self.h {
            out.push(c % self.radix - self.bound);
            c /= self.radix;
        }
    }
}

fn merge_sorted(a: &[(f64, u32)], b: &[(f64, u32)]) -> Vec<(f64, u32)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i].0 <= b[j].0 {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Exhaustive search for an integer relation with `max|c_i| <= coeff_bound`.
///
/// Candidates are visited in order of `(max|c|, entries)` lexicographically,
/// normalized so the first nonzero entry is positive; the first vector with
/// `|Σ c_i w_i| < tol·coeff_bound·max|w|` is returned. Internally a
/// meet-in-the-middle split keeps the work near `(2B+1)^(k/2)` per shell.
pub fn find_integer_relation_brute(w: &[f64], coeff_bound: u64, tol: f64) -> Result<RelationCertificate> {
    check_input(w)?;
    if coeff_bound == 0 {
        return Err(Error::InvalidSize("coefficient bound must be positive".into()));
    }
    let k = w.len();
    let hl = k / 2;
    let hr = k - hl;
    let needed = (2 * coeff_bound as u128 + 1).checked_pow(hr as u32).unwrap_or(u128::MAX);
    if needed > BRUTE_TABLE_BUDGET {
        return Err(Error::SearchBudgetExceeded {
            needed,
            budget: BRUTE_TABLE_BUDGET,
        });
    }
    let scale = max_abs(w);
    if scale == 0.0 {
        return Ok(RelationCertificate::relation(unit_relation(k, 0), coeff_bound));
    }
    let thr = tol * coeff_bound as f64 * scale;
    let bound = coeff_bound as i64;
    let left = HalfTable::new(&w[..hl], bound);
    let right = HalfTable::new(&w[hl..], bound);

    let mut right_le: Vec<(f64, u32)> = right.shells[0].iter().map(|&c| (right.values[c as usize], c)).collect();
    let mut left_lt: Vec<u32> = left.shells[0].clone();
    let mut scratch = Vec::with_capacity(k);

    let mut query = |lcode: u32, table: &[(f64, u32)], best: &mut Option<Vec<i64>>| {
        let target = -left.values[lcode as usize];
        let start = table.partition_point(|&(v, _)| v < target - thr);
        for &(v, rcode) in &table[start..] {
            if v > target + thr {
                break;
            }
            scratch.clear();
            left.decode(lcode, &mut scratch);
            right.decode(rcode, &mut scratch);
            let first = scratch.iter().find(|&&x| x != 0).copied();
            if first.is_none_or(|x| x < 0) {
                continue;
            }
            if best.as_ref().is_none_or(|b| scratch.as_slice() < b.as_slice()) {
                *best = Some(scratch.clone());
            }
        }
    };

    for m in 1..=bound as usize {
        let mut best: Option<Vec<i64>> = None;
        let mut shell_r: Vec<(f64, u32)> = right.shells[m].iter().map(|&c| (right.values[c as usize], c)).collect();
        shell_r.sort_by(|a, b| a.0.total_cmp(&b.0));
        for &lc in &left_lt {
            query(lc, &shell_r, &mut best);
        }
        right_le = merge_sorted(&right_le, &shell_r);
        for &lc in &left.shells[m] {
            query(lc, &right_le, &mut best);
        }
        if let Some(c) = best {
            return Ok(RelationCertificate::relation(c, coeff_bound));
        }
        left_lt.extend_from_slice(&left.shells[m]);
    }
    Ok(RelationCertificate::independent(coeff_bound))
}

/// Lattice-reduction search for a relation of Euclidean norm at most `norm_bound`.
///
/// Reduces the lattice spanned by the rows `(e_i, K·w_i/max|w|)` with
/// `K = 1/tol` and inspects every reduced basis vector. A vector `c` is
/// reported when `|Σ c_i w_i| < tol·‖c‖·max|w|` and `‖c‖ <= 2^(k/2)·norm_bound`.
pub fn find_integer_relation_reduced(w: &[f64], norm_bound: f64, tol: f64) -> Result<RelationCertificate> {
    check_input(w)?;
    let k = w.len();
    let bound_used = norm_bound.ceil().max(1.0) as u64;
    let scale = max_abs(w);
    if scale == 0.0 {
        return Ok(RelationCertificate::relation(unit_relation(k, 0), bound_used));
    }
    let x: Vec<f64> = w.iter().map(|v| v / scale).collect();
    let weight = 1.0 / tol;
    let basis = lll_reduce(&x, weight)?;
    let accept_norm = 2f64.powf(k as f64 / 2.0) * norm_bound;
    let mut best: Option<(f64, Vec<i64>)> = None;
    for c in basis {
        let norm = c.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt();
        if norm == 0.0 || norm > accept_norm {
            continue;
        }
        let residual = c.iter().zip(w).map(|(&a, b)| a as f64 * b).sum::<f64>().abs();
        if residual < tol * norm * scale && best.as_ref().is_none_or(|(n, _)| norm < *n) {
            best = Some((norm, c));
        }
    }
    Ok(match best {
        Some((_, c)) => RelationCertificate::relation(canonical_sign(c), bound_used),
        None => RelationCertificate::independent(bound_used),
    })
}

/// Integral LLL (δ = 3/4) on the rows `(e_i, round(K·x_i))`; returns the
/// coefficient parts of the reduced basis. All Gram-Schmidt data is kept as
/// exact integers (`d_i` and `λ_ij = d_{j+1}·μ_ij`).
fn lll_reduce(x: &[f64], weight: f64) -> Result<Vec<Vec<i64>>> {
    let n = x.len();
    let mut b: Vec<Vec<BigInt>> = (0..n)
        .map(|i| {
            let mut row: Vec<BigInt> = (0..n).map(|j| BigInt::from((i == j) as i64)).collect();
            row.push(BigInt::from((weight * x[i]).round() as i128));
            row
        })
        .collect();
    let dot = |p: &[BigInt], q: &[BigInt]| -> BigInt { p.iter().zip(q).map(|(a, c)| a * c).sum() };
    let mut d: Vec<BigInt> = vec![BigInt::one(); n + 1];
    let mut lam: Vec<Vec<BigInt>> = vec![vec![BigInt::zero(); n]; n];
    d[1] = dot(&b[0], &b[0]);

    fn reduce(k: usize, l: usize, b: &mut [Vec<BigInt>], lam: &mut [Vec<BigInt>], d: &[BigInt]) {
        let two = BigInt::from(2);
        if (&lam[k][l] * &two).abs() > d[l + 1] {
            let q = (&two * &lam[k][l] + &d[l + 1]).div_floor(&(&two * &d[l + 1]));
            let bl = b[l].clone();
            for (a, c) in b[k].iter_mut().zip(&bl) {
                *a -= &q * c;
            }
            lam[k][l] -= &q * &d[l + 1];
            for i in 0..l {
                let v = &q * &lam[l][i];
                lam[k][i] -= v;
            }
        }
    }

    let mut k = 1;
    let mut kmax = 0;
    let mut iterations = 0usize;
    while k < n {
        iterations += 1;
        if iterations > 100_000 {
            return Err(Error::ReductionFailed("iteration limit reached".into()));
        }
        if k > kmax {
            kmax = k;
            for j in 0..=k {
                let mut u = dot(&b[k], &b[j]);
                for i in 0..j {
                    u = (&d[i + 1] * &u - &lam[k][i] * &lam[j][i]) / &d[i];
                }
                if j < k {
                    lam[k][j] = u;
                } else {
                    if u.is_zero() {
                        return Err(Error::ReductionFailed("dependent lattice basis".into()));
                    }
                    d[k + 1] = u;
                }
            }
        }
        reduce(k, k - 1, &mut b, &mut lam, &d);
        let lhs = BigInt::from(4) * &d[k + 1] * &d[k - 1];
        let rhs = BigInt::from(3) * &d[k] * &d[k] - BigInt::from(4) * &lam[k][k - 1] * &lam[k][k - 1];
        if lhs < rhs {
            b.swap(k, k - 1);
            for j in 0..k - 1 {
                let (lo, hi) = lam.split_at_mut(k);
                std::mem::swap(&mut lo[k - 1][j], &mut hi[0][j]);
            }
            let l = lam[k][k - 1].clone();
            let big = (&d[k - 1] * &d[k + 1] + &l * &l) / &d[k];
            for i in k + 1..=kmax {
                let t = lam[i][k].clone();
                lam[i][k] = (&d[k + 1] * &lam[i][k - 1] - &l * &t) / &d[k];
                lam[i][k - 1] = (&big * &t + &l * &lam[i][k]) / &d[k + 1];
            }
            d[k] = big;
            k = (k - 1).max(1);
        } else {
            for l in (0..k - 1).rev() {
                reduce(k, l, &mut b, &mut lam, &d);
            }
            k += 1;
        }
    }
    b.into_iter()
        .map(|row| {
            row[..n]
                .iter()
                .map(|v| v.to_i64().ok_or_else(|| Error::ReductionFailed("coefficient overflow".into())))
                .collect()
        })
        .collect()
}

/// How rational rank is certified.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankStrategy {
    /// Exhaustive bounded integer-relation search.
    Brute,
    /// Lattice-reduction relation search.
    Reduced,
    /// Pairwise-distinct values; sound only for ensembles of pings and
    /// triangles through one common vertex.
    #[serde(rename = "distinct")]
    DistinctValues,
}

impl std::str::FromStr for RankStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "brute" => Ok(Self::Brute),
            "reduced" => Ok(Self::Reduced),
            "distinct" | "distinct-values" => Ok(Self::DistinctValues),
            other => Err(Error::Malformed(format!("unknown rank strategy {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankVerdict {
    pub at_least: bool,
    /// A relation witnessing failure on the first subset tried, when `at_least` is false.
    pub certificate: Option<RelationCertificate>,
}

/// `b^(r-1)`, saturating.
pub fn relation_bound(b: u32, r: usize) -> u64 {
    (b.max(1) as u64).saturating_pow(r.saturating_sub(1) as u32)
}

/// Largest coefficient bound a `k`-term brute-force search can certify at
/// relative tolerance `tol` before chance near-relations among the
/// `(2B+1)^k` candidates become likely (expected count below `1e-4`).
pub fn precision_coefficient_cap(k: usize, tol: f64) -> u64 {
    let side = (1e-4 / tol).powf(1.0 / k as f64);
    (((side - 1.0) / 2.0).floor() as u64).max(1)
}

/// Does `w` have rational rank at least `target`, testing relations bounded by
/// `b^(target-1)`?
pub fn rational_rank_at_least(
    w: &[f64],
    target: usize,
    b: u32,
    strategy: RankStrategy,
    tol: f64,
    assume_restricted: bool,
) -> Result<RankVerdict> {
    rational_rank_with_bound(w, target, relation_bound(b, target), strategy, tol, assume_restricted)
}

/// As [`rational_rank_at_least`] with an explicit coefficient (brute) or norm
/// (reduced) bound.
pub fn rational_rank_with_bound(
    w: &[f64],
    target: usize,
    bound: u64,
    strategy: RankStrategy,
    tol: f64,
    assume_restricted: bool,
) -> Result<RankVerdict> {
    let k = w.len();
    if target > k {
        return Err(Error::InvalidSize(format!("target rank {target} exceeds {k} values")));
    }
    if w.iter().any(|x| !x.is_finite()) {
        return Err(Error::Malformed("non-finite value in rank test".into()));
    }
    if target == 0 {
        return Ok(RankVerdict {
            at_least: true,
            certificate: None,
        });
    }
    let scale = max_abs(w);
    if strategy == RankStrategy::DistinctValues {
        if !assume_restricted {
            return Err(Error::AssumptionRequired);
        }
        for i in 0..k {
            for j in i + 1..k {
                if (w[i] - w[j]).abs() <= tol * scale {
                    let mut c = vec![0; k];
                    c[i] = 1;
                    c[j] = -1;
                    return Ok(RankVerdict {
                        at_least: false,
                        certificate: Some(RelationCertificate::relation(c, 1)),
                    });
                }
            }
        }
        return Ok(RankVerdict {
            at_least: true,
            certificate: None,
        });
    }
    if target == 1 {
        let at_least = w.iter().any(|x| x.abs() > tol * scale) || scale > 0.0;
        return Ok(RankVerdict {
            at_least,
            certificate: (!at_least).then(|| RelationCertificate::relation(unit_relation(k, 0), 1)),
        });
    }
    let mut first_failure = None;
    for subset in Combinations::new(k, target) {
        let sub: Vec<f64> = subset.iter().map(|&i| w[i]).collect();
        let cert = match strategy {
            RankStrategy::Brute => find_integer_relation_brute(&sub, bound, tol)?,
            RankStrategy::Reduced => find_integer_relation_reduced(&sub, bound as f64, tol)?,
            RankStrategy::DistinctValues => unreachable!(),
        };
        if !cert.is_relation() {
            return Ok(RankVerdict {
                at_least: true,
                certificate: None,
            });
        }
        if first_failure.is_none() {
            // lift the coefficients back to the full index set
            let mut full = vec![0; k];
            for (&i, &c) in subset.iter().zip(cert.coefficients.as_ref().unwrap()) {
                full[i] = c;
            }
            first_failure = Some(RelationCertificate::relation(full, cert.bound_used));
        }
    }
    Ok(RankVerdict {
        at_least: false,
        certificate: first_failure,
    })
}

/// Lexicographic `r`-subsets of `0..k`.
struct Combinations {
    k: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    fn new(k: usize, r: usize) -> Self {
        Self {
            k,
            current: (r <= k).then(|| (0..r).collect()),
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let r = out.len();
        let mut next = out.clone();
        let mut i = r;
        loop {
            if i == 0 {
                self.current = None;
                break;
            }
            i -= 1;
            if next[i] < self.k - r + i {
                next[i] += 1;
                for j in i + 1..r {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
                break;
            }
        }
        Some(out)
    }
}
