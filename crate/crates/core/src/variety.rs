//! Algebraic predicates on measurement tuples: membership in the transformed
//! length variety, the singular locus of planar four-point length space, and
//! the planar rank shortcut.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{cayley_menger_det, cayley_menger_normalized, realizability, EdgeIndexing, Realizability};
use crate::measurement::CanonicalMatrix;
use crate::relation::{rational_rank_with_bound, relation_bound, RankStrategy, DEFAULT_RELATION_TOL};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MembershipVerdict {
    pub member: bool,
    /// `N^{-1} w`, present whenever `member` holds.
    pub recovered_lengths: Option<Vec<f64>>,
    /// Normalized Cayley–Menger determinant of the squared recovered lengths.
    pub cm_residual: f64,
}

/// Is `w = N·l(p)` for some real `(d+2)`-point configuration `p` in `R^d`?
///
/// Solves `u = N^{-1} w`, then requires every `u_i > tol·max|u|`, a vanishing
/// normalized Cayley–Menger determinant of `u²`, and a positive semidefinite
/// Gram matrix.
pub fn membership_l(w: &[f64], matrix: &CanonicalMatrix, tol: f64) -> Result<MembershipVerdict> {
    if w.iter().any(|x| !x.is_finite()) {
        return Err(Error::Malformed("non-finite value in membership test".into()));
    }
    let d = matrix.dim();
    let u = matrix.solve(w)?;
    let sq: Vec<f64> = u.iter().map(|x| x * x).collect();
    let cm_residual = cayley_menger_normalized(&sq, d)?;
    let scale = u.iter().fold(0.0, |m: f64, x| m.max(x.abs()));
    let positive = scale > 0.0 && u.iter().all(|&x| x > tol * scale);
    let member = positive && realizability(&sq, d, tol)? != Realizability::NotRealizable;
    Ok(MembershipVerdict {
        member,
        recovered_lengths: member.then_some(u),
        cm_residual,
    })
}

/// First-order relative backward error of `w` against the Cayley–Menger
/// hypersurface: the smallest `δ` such that some perturbation with
/// `|Δw_i| <= δ·|w_i|` reaches `det = 0`. Unlike the normalized determinant it
/// does not inflate near degenerate shapes, where the determinant is flat.
pub fn cm_backward_error(w: &[f64], matrix: &CanonicalMatrix) -> Result<f64> {
    let d = matrix.dim();
    let u = matrix.solve(w)?;
    let mut sq: Vec<f64> = u.iter().map(|x| x * x).collect();
    let det = cayley_menger_det(&sq, d)?;
    if det == 0.0 {
        return Ok(0.0);
    }
    // the determinant is quadratic in each squared length, so a central
    // difference of any width is exact
    let h = sq.iter().sum::<f64>() / sq.len() as f64;
    let mut du = Vec::with_capacity(sq.len());
    for e in 0..sq.len() {
        let s0 = sq[e];
        sq[e] = s0 + h;
        let fp = cayley_menger_det(&sq, d)?;
        sq[e] = s0 - h;
        let fm = cayley_menger_det(&sq, d)?;
        sq[e] = s0;
        du.push((fp - fm) / (2.0 * h) * 2.0 * u[e]);
    }
    let inv = matrix.inverse();
    let sensitivity: f64 = (0..w.len())
        .map(|i| (0..du.len()).map(|e| inv[e][i] * du[e]).sum::<f64>().abs() * w[i].abs())
        .sum();
    Ok(if sensitivity > 0.0 { det.abs() / sensitivity } else { f64::INFINITY })
}

/// A linear stratum of the singular locus of planar four-point length space.
///
/// Vertices are `0..4`; signs are `±1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stratum {
    /// Collinear type, with signs `[s02, s12, s03, s13, s23]` (`s01 = +1`):
    /// `l01 - s02 l02 + s12 l12`, `l01 - s03 l03 + s13 l13` and
    /// `s02 l02 - s03 l03 + s23 l23` vanish.
    TypeI { signs: [i8; 5] },
    /// Vertices `i` and `j` collapse: `l_ij`, `l_ik - s_jk l_jk` and
    /// `l_il - s_jl l_jl` vanish, where `k < l` are the other two vertices and
    /// `signs = [s_jk, s_jl]`.
    TypeII { edge: (usize, usize), signs: [i8; 2] },
    /// All three edges of a triangle vanish.
    TypeIII { triangle: [usize; 3] },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SingularityVerdict {
    pub singular: bool,
    pub stratum: Option<Stratum>,
}

const SIGNS: [i8; 2] = [-1, 1];

/// Every stratum, in the fixed test order: type I, II, III, each lexicographic.
pub fn singular_strata() -> Vec<Stratum> {
    let mut out = Vec::with_capacity(60);
    for code in 0..32usize {
        let mut signs = [0i8; 5];
        for (t, s) in signs.iter_mut().enumerate() {
            *s = SIGNS[(code >> (4 - t)) & 1];
        }
        out.push(Stratum::TypeI { signs });
    }
    for (i, j) in EdgeIndexing::new(4).pairs() {
        for a in SIGNS {
            for b in SIGNS {
                out.push(Stratum::TypeII {
                    edge: (i, j),
                    signs: [a, b],
                });
            }
        }
    }
    for triangle in [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]] {
        out.push(Stratum::TypeIII { triangle });
    }
    out
}

impl Stratum {
    /// Values of the stratum's defining linear forms at `l` (edge order
    /// `01, 02, 12, 03, 13, 23`).
    pub fn equations(&self, l: &[f64]) -> Vec<f64> {
        let idx = EdgeIndexing::new(4);
        let e = |i: usize, j: usize| l[idx.index(i, j)];
        match *self {
            Stratum::TypeI { signs } => {
                let [s02, s12, s03, s13, s23] = signs.map(f64::from);
                vec![
                    e(0, 1) - s02 * e(0, 2) + s12 * e(1, 2),
                    e(0, 1) - s03 * e(0, 3) + s13 * e(1, 3),
                    s02 * e(0, 2) - s03 * e(0, 3) + s23 * e(2, 3),
                ]
            }
            Stratum::TypeII { edge: (i, j), signs } => {
                let mut rest = (0..4).filter(|&v| v != i && v != j);
                let (k, m) = (rest.next().unwrap(), rest.next().unwrap());
                vec![
                    e(i, j),
                    e(i, k) - f64::from(signs[0]) * e(j, k),
                    e(i, m) - f64::from(signs[1]) * e(j, m),
                ]
            }
            Stratum::TypeIII { triangle: [a, b, c] } => vec![e(a, b), e(a, c), e(b, c)],
        }
    }

    /// A generic-looking point of this stratum built from random reals.
    pub fn witness(&self, rng: &mut impl rand::Rng) -> Vec<f64> {
        let idx = EdgeIndexing::new(4);
        let mut l = vec![0.0; 6];
        match *self {
            Stratum::TypeI { signs } => {
                let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let [s02, s12, s03, s13, s23] = signs.map(f64::from);
                let pairs = [(0, 1, 1.0), (0, 2, s02), (1, 2, s12), (0, 3, s03), (1, 3, s13), (2, 3, s23)];
                for (i, j, s) in pairs {
                    l[idx.index(i, j)] = s * (x[j] - x[i]);
                }
            }
            Stratum::TypeII { edge: (i, j), signs } => {
                let mut rest = (0..4).filter(|&v| v != i && v != j);
                let (k, m) = (rest.next().unwrap(), rest.next().unwrap());
                let (a, b) = (rng.gen_range(0.1..1.0), rng.gen_range(0.1..1.0));
                l[idx.index(j, k)] = a;
                l[idx.index(i, k)] = f64::from(signs[0]) * a;
                l[idx.index(j, m)] = b;
                l[idx.index(i, m)] = f64::from(signs[1]) * b;
                l[idx.index(k, m)] = rng.gen_range(0.1..1.0);
            }
            Stratum::TypeIII { triangle: [a, b, c] } => {
                for v in &mut l {
                    *v = rng.gen_range(0.1..1.0);
                }
                for (i, j) in [(a, b), (a, c), (b, c)] {
                    l[idx.index(i, j)] = 0.0;
                }
            }
        }
        l
    }
}

/// Classify `l` against the 60 linear strata of the singular locus; an
/// equation vanishes when it is at most `tol·max|l|` in magnitude.
pub fn is_singular_l24(l: &[f64], tol: f64) -> Result<SingularityVerdict> {
    if l.len() != 6 {
        return Err(Error::WrongLength {
            expected: 6,
            found: l.len(),
        });
    }
    if l.iter().any(|x| !x.is_finite()) {
        return Err(Error::Malformed("non-finite length".into()));
    }
    let thr = tol * l.iter().fold(0.0, |m: f64, x| m.max(x.abs()));
    let stratum = singular_strata()
        .into_iter()
        .find(|s| s.equations(l).iter().all(|v| v.abs() <= thr));
    Ok(SingularityVerdict {
        singular: stratum.is_some(),
        stratum,
    })
}

/// Planar rational-rank-6 certificate for a member tuple: the recovered
/// lengths avoid the singular locus and the first three values have rational
/// rank 3 (relations bounded by `b²`).
pub fn rank6_shortcut(w: &[f64], matrix: &CanonicalMatrix, b: u32, tol: f64) -> Result<bool> {
    if matrix.dim() != 2 {
        return Err(Error::UnsupportedDimension(matrix.dim()));
    }
    let l = matrix.solve(w)?;
    if is_singular_l24(&l, tol)?.singular {
        return Ok(false);
    }
    let verdict = rational_rank_with_bound(
        &w[..3],
        3,
        relation_bound(b, 3),
        RankStrategy::Brute,
        DEFAULT_RELATION_TOL,
        false,
    )?;
    Ok(verdict.at_least)
}
