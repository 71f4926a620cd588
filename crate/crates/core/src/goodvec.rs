//! Good vectors and the transfer relation between ternary forms.
//!
//! For ternary `f`, `g` and a modulus `d`, a matrix `T` with
//! `T^t M_f T = d^2 M_g` sends every `w` with `g(w) = n` to `T w^t` with
//! `f(T w^t) = d^2 n`. When `T w^t ≡ 0 (mod d)` the quotient is an integral
//! representation of `n` by `f`. A residue vector `v mod d` is good when
//! some such `T` kills it; `g ≺_{d,a} f` when every `v` with
//! `g(v) ≡ a (mod d)` is good, which gives `S_{d,a} ∩ Q(g) ⊆ Q(f)`.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::forms::GramForm;
use crate::lattice::Ellipsoid;
use crate::sieve::{build_sieve, SieveError};

pub type Matrix3 = [[i64; 3]; 3];

/// Largest supported modulus.
pub const MAX_MODULUS: u64 = 64;

/// Default ceiling on `d^3 * |R(f,g,d) mod d|`.
pub const DEFAULT_WORK_BUDGET: u64 = 20_000_000_000;

#[derive(Debug, Error)]
pub enum GoodvecError {
    #[error("form {0} is not ternary")]
    NotTernary(String),
    #[error("modulus {0} is outside 1..={MAX_MODULUS}")]
    Modulus(u64),
    #[error("residue {a} is not below the modulus {d}")]
    Residue { a: u64, d: u64 },
    #[error("work estimate {estimate} exceeds the budget {budget}")]
    Budget { estimate: u64, budget: u64 },
    #[error(transparent)]
    Sieve(#[from] SieveError),
}

fn ternary(form: &GramForm) -> Result<(), GoodvecError> {
    if form.dim() == 3 {
        Ok(())
    } else {
        Err(GoodvecError::NotTernary(form.to_string()))
    }
}

fn check_modulus(d: u64) -> Result<(), GoodvecError> {
    if (1..=MAX_MODULUS).contains(&d) {
        Ok(())
    } else {
        Err(GoodvecError::Modulus(d))
    }
}

/// `R(g, d, a)`: residue vectors with `v M_g v^t ≡ a (mod d)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CosetSet {
    pub d: u64,
    pub a: u64,
    pub vectors: Vec<[u64; 3]>,
}

/// Value of `v M v^t` reduced mod `d`, for `v` in `[0, d)^3`.
fn value_mod(g: &GramForm, v: [u64; 3], d: u64) -> u64 {
    let mut s: i128 = 0;
    for i in 0..3 {
        for j in 0..3 {
            s += g.entry(i, j) as i128 * v[i] as i128 * v[j] as i128;
        }
    }
    s.rem_euclid(d as i128) as u64
}

fn all_vectors(d: u64) -> impl Iterator<Item = [u64; 3]> {
    (0..d).flat_map(move |x| (0..d).flat_map(move |y| (0..d).map(move |z| [x, y, z])))
}

pub fn compute_rgda(g: &GramForm, d: u64, a: u64) -> Result<CosetSet, GoodvecError> {
    ternary(g)?;
    check_modulus(d)?;
    if a >= d {
        return Err(GoodvecError::Residue { a, d });
    }
    let vectors = all_vectors(d).filter(|&v| value_mod(g, v, d) == a).collect();
    Ok(CosetSet { d, a, vectors })
}

/// `R(f, g, d)`: integer matrices with `T^t M_f T = d^2 M_g`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScaledIsometrySet {
    pub d: u64,
    /// Sorted; each matrix is stored row-major with the columns `c_j`
    /// satisfying `c_j M_f c_j^t = d^2 (M_g)_jj`.
    pub matrices: Vec<Matrix3>,
}

pub fn compute_rfgd(f: &GramForm, g: &GramForm, d: u64) -> Result<ScaledIsometrySet, GoodvecError> {
    ternary(f)?;
    ternary(g)?;
    check_modulus(d)?;
    let e = Ellipsoid::new(f);
    let d2 = (d * d) as i128;
    let columns: Vec<Vec<Vec<i64>>> = (0..3).map(|j| e.all_eq((d2 * g.entry(j, j) as i128) as u64)).collect();
    let fits = |x: &[i64], y: &[i64], i: usize, j: usize| f.bilinear(x, y) == d2 * g.entry(i, j) as i128;
    let mut matrices = Vec::new();
    for c0 in &columns[0] {
        let pairs: Vec<&Vec<i64>> = columns[1].iter().filter(|c1| fits(c0, c1, 0, 1)).collect();
        for c1 in pairs {
            for c2 in columns[2].iter().filter(|c2| fits(c0, c2, 0, 2) && fits(c1, c2, 1, 2)) {
                let mut t = [[0i64; 3]; 3];
                for r in 0..3 {
                    t[r] = [c0[r], c1[r], c2[r]];
                }
                matrices.push(t);
            }
        }
    }
    matrices.sort_unstable();
    Ok(ScaledIsometrySet { d, matrices })
}

/// Goodness of every residue vector for one `(f, g, d)`.
#[derive(Debug, Clone)]
pub struct TransferTable {
    f: GramForm,
    g: GramForm,
    d: u64,
    isometries: ScaledIsometrySet,
    // index into isometries.matrices of a witness, per vector index
    witness: Vec<Option<u32>>,
}

fn vector_index(v: [u64; 3], d: u64) -> usize {
    ((v[0] * d + v[1]) * d + v[2]) as usize
}

impl TransferTable {
    pub fn new(f: &GramForm, g: &GramForm, d: u64) -> Result<Self, GoodvecError> {
        Self::with_budget(f, g, d, DEFAULT_WORK_BUDGET)
    }

    pub fn with_budget(f: &GramForm, g: &GramForm, d: u64, budget: u64) -> Result<Self, GoodvecError> {
        let isometries = compute_rfgd(f, g, d)?;
        // distinct reductions mod d, each remembering its first matrix
        let di = d as i64;
        let mut reduced: Vec<(Matrix3, u32)> = isometries
            .matrices
            .iter()
            .enumerate()
            .map(|(k, t)| (t.map(|row| row.map(|x| x.rem_euclid(di))), k as u32))
            .collect();
        reduced.sort_unstable();
        reduced.dedup_by(|a, b| a.0 == b.0);
        let estimate = d.pow(3).saturating_mul(reduced.len() as u64);
        if estimate > budget {
            return Err(GoodvecError::Budget { estimate, budget });
        }
        let witness: Vec<Option<u32>> = all_vectors(d)
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|v| {
                reduced
                    .iter()
                    .find(|(t, _)| t.iter().all(|row| (0..3).map(|j| row[j] * v[j] as i64).sum::<i64>() % di == 0))
                    .map(|&(_, k)| k)
            })
            .collect();
        Ok(TransferTable { f: f.clone(), g: g.clone(), d, isometries, witness })
    }

    pub fn isometries(&self) -> &ScaledIsometrySet {
        &self.isometries
    }

    pub fn is_good(&self, v: [u64; 3]) -> bool {
        self.witness[vector_index(v, self.d)].is_some()
    }

    pub fn certificate(&self, a: u64) -> Result<TransferCertificate, GoodvecError> {
        let cosets = compute_rgda(&self.g, self.d, a)?;
        let mut witnesses = Vec::new();
        let mut bad = Vec::new();
        for &v in &cosets.vectors {
            match self.witness[vector_index(v, self.d)] {
                Some(k) => witnesses.push(GoodWitness { vector: v, matrix: self.isometries.matrices[k as usize] }),
                None => bad.push(v),
            }
        }
        Ok(TransferCertificate {
            f: self.f.to_string(),
            g: self.g.to_string(),
            d: self.d,
            a,
            good_count: witnesses.len() as u64,
            total_count: cosets.vectors.len() as u64,
            witnesses,
            bad,
        })
    }

    /// Residues `a mod d` with `g ≺_{d,a} f`.
    pub fn good_residues(&self) -> Vec<u64> {
        let mut all_good = vec![true; self.d as usize];
        for v in all_vectors(self.d) {
            if !self.is_good(v) {
                all_good[value_mod(&self.g, v, self.d) as usize] = false;
            }
        }
        (0..self.d).filter(|&a| all_good[a as usize]).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GoodWitness {
    pub vector: [u64; 3],
    /// Row-major `T` with `T v^t ≡ 0 (mod d)`.
    pub matrix: Matrix3,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransferCertificate {
    pub f: String,
    pub g: String,
    pub d: u64,
    pub a: u64,
    pub good_count: u64,
    pub total_count: u64,
    pub witnesses: Vec<GoodWitness>,
    /// Vectors of `R(g, d, a)` that no matrix kills.
    pub bad: Vec<[u64; 3]>,
}

impl TransferCertificate {
    pub fn holds(&self) -> bool {
        self.good_count == self.total_count
    }
}

pub fn good_vectors(f: &GramForm, g: &GramForm, d: u64, a: u64) -> Result<TransferCertificate, GoodvecError> {
    TransferTable::new(f, g, d)?.certificate(a)
}

/// Whether `g ≺_{d,a} f`.
pub fn precedes(f: &GramForm, g: &GramForm, d: u64, a: u64) -> Result<bool, GoodvecError> {
    Ok(good_vectors(f, g, d, a)?.holds())
}

/// Residues `a mod d` with `m ≺_{d,a} f` for every mate `m`.
pub fn good_residue_set(f: &GramForm, mates: &[GramForm], d: u64) -> Result<Vec<u64>, GoodvecError> {
    check_modulus(d)?;
    let mut keep: Vec<u64> = (0..d).collect();
    for m in mates {
        let table = TransferTable::new(f, m, d)?;
        let good = table.good_residues();
        keep.retain(|a| good.binary_search(a).is_ok());
    }
    Ok(keep)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransferReport {
    pub d: u64,
    pub a: u64,
    pub bound: u64,
    pub checked: u64,
    /// `n ≡ a (mod d)` represented by `g` but not by `f`.
    pub mismatches: Vec<u64>,
}

/// Checks `S_{d,a} ∩ Q(g) ∩ [0, bound] ⊆ Q(f)` with sieves.
pub fn verify_transfer(f: &GramForm, g: &GramForm, d: u64, a: u64, bound: u64) -> Result<TransferReport, GoodvecError> {
    let sf = build_sieve(f, bound)?;
    let sg = build_sieve(g, bound)?;
    let mut checked = 0;
    let mut mismatches = Vec::new();
    let mut n = a;
    while n <= bound {
        if sg.represents(n) {
            checked += 1;
            if !sf.represents(n) {
                mismatches.push(n);
            }
        }
        n += d;
    }
    Ok(TransferReport { d, a, bound, checked, mismatches })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(s: &str) -> GramForm {
        crate::forms::parse_form(s).unwrap().into_gram()
    }

    #[test]
    fn cosets() {
        let c = compute_rgda(&f("2,3,5"), 1, 0).unwrap();
        assert_eq!(c.vectors, vec![[0, 0, 0]]);
        let c = compute_rgda(&f("2,3,5"), 2, 0).unwrap();
        let expected: Vec<[u64; 3]> = all_vectors(2).filter(|v| v[1] == v[2]).collect();
        assert_eq!(c.vectors, expected);
        assert!(!compute_rgda(&f("1,1,30"), 7, 3).unwrap().vectors.is_empty());
        assert!(compute_rgda(&f("1,1,1,1"), 3, 0).is_err());
        assert!(compute_rgda(&f("1,1,1"), 65, 0).is_err());
    }

    #[test]
    fn partition_of_all_vectors() {
        for (g, d) in [("1,1,30", 7), ("[[1,0,0],[0,10,4],[0,4,10]]", 8), ("2,3,7", 6)] {
            let total: usize = (0..d).map(|a| compute_rgda(&f(g), d, a).unwrap().vectors.len()).sum();
            assert_eq!(total as u64, d * d * d);
        }
    }

    #[test]
    fn isometries() {
        for g in ["2,3,5", "[[2,1,1],[1,3,1],[1,1,9]]"] {
            let s = compute_rfgd(&f(g), &f(g), 1).unwrap();
            let id = [[1, 0, 0], [0, 1, 0], [0, 0, 1]];
            assert!(s.matrices.contains(&id));
            for t in &s.matrices {
                assert!(s.matrices.contains(&t.map(|r| r.map(|x| -x))));
            }
        }
        let s = compute_rfgd(&f("2,3,5"), &f("1,1,30"), 7).unwrap();
        assert!(!s.matrices.is_empty());
        for t in &s.matrices {
            // sign changes of coordinates are automorphisms of a diagonal f
            let flipped = [t[0].map(|x| -x), t[1], t[2]];
            assert!(s.matrices.contains(&flipped));
        }
    }

    #[test]
    fn relations() {
        assert!(precedes(&f("2,3,5"), &f("2,3,5"), 1, 0).unwrap());
        let c = good_vectors(&f("2,3,5"), &f("2,3,5"), 1, 0).unwrap();
        assert_eq!((c.good_count, c.total_count), (1, 1));
        for a in [0, 3, 5, 6] {
            assert!(precedes(&f("2,3,5"), &f("1,1,30"), 7, a).unwrap(), "a = {a}");
        }
        assert!(precedes(&f("2,3,14"), &f("[[1,0,0],[0,10,4],[0,4,10]]"), 8, 3).unwrap());
        assert_eq!(good_residue_set(&f("2,3,5"), &[], 5).unwrap(), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn transfer_checks() {
        let r = verify_transfer(&f("2,3,5"), &f("1,1,30"), 7, 0, 10_000).unwrap();
        assert!(r.mismatches.is_empty() && r.checked > 0);
        let r = verify_transfer(&f("1,2,3"), &f("1,2,3"), 1, 0, 100).unwrap();
        assert!(r.mismatches.is_empty());
    }
}
