//! Representation testing: single values by exact ellipsoid search, and
//! whole ranges `Q(f) ∩ [0, B]` as bit arrays.
//!
//! Diagonal coordinates are layered onto the marked set with word-level
//! shifted ORs (one shift per square `a x^2 <= B`). Coordinates coupled by
//! off-diagonal entries are enumerated point by point first.

use std::fmt;
use std::io::{self, Read, Write};
use std::ops::ControlFlow;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::forms::{FormValue, GramForm};
use crate::lattice::Ellipsoid;

/// Largest sieve bound accepted by [`build_sieve`] (4 GiB of bits / 8).
pub const MAX_SIEVE_BOUND: u64 = 1 << 35;

const MAGIC: &[u8; 8] = b"QPUSIEVE";

#[derive(Debug, Error)]
pub enum SieveError {
    #[error("sieve bound {requested} exceeds the capacity limit {limit}")]
    Capacity { requested: u64, limit: u64 },
    #[error("sieve bound must be at least 1")]
    EmptyBound,
    #[error("not a sieve file: {0}")]
    BadFile(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Fixed-size bit array over `0..=bound`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bits {
    bound: u64,
    words: Vec<u64>,
}

impl Bits {
    pub fn new(bound: u64) -> Self {
        Bits { bound, words: vec![0; (bound / 64 + 1) as usize] }
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }

    #[inline]
    pub fn get(&self, n: u64) -> bool {
        n <= self.bound && (self.words[(n / 64) as usize] >> (n % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, n: u64) {
        self.words[(n / 64) as usize] |= 1 << (n % 64);
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = u64> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let t = w.trailing_zeros() as u64;
                w &= w - 1;
                Some(i as u64 * 64 + t)
            })
        })
    }

    fn mask_tail(&mut self) {
        let used = self.bound % 64 + 1;
        if used < 64 {
            let last = self.words.len() - 1;
            self.words[last] &= (1u64 << used) - 1;
        }
    }

    /// `self |= src << shift`, truncated at the bound.
    fn or_shifted(&mut self, src: &Bits, shift: u64) {
        let ws = (shift / 64) as usize;
        let bs = (shift % 64) as u32;
        let n = self.words.len();
        if ws >= n {
            return;
        }
        if bs == 0 {
            for i in ws..n {
                self.words[i] |= src.words[i - ws];
            }
        } else {
            self.words[ws] |= src.words[0] << bs;
            for i in ws + 1..n {
                self.words[i] |= (src.words[i - ws] << bs) | (src.words[i - ws - 1] >> (64 - bs));
            }
        }
        self.mask_tail();
    }

    /// Replaces the marked set `S` by `S + {a x^2 : x >= 0}`.
    pub fn add_square_layer(&mut self, a: u64) {
        let base = self.clone();
        let mut x = 1u64;
        while a * x * x <= self.bound {
            self.or_shifted(&base, a * x * x);
            x += 1;
        }
    }
}

/// `Q(form) ∩ [0, bound]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepresentationSieve {
    form: GramForm,
    bits: Bits,
}

impl RepresentationSieve {
    pub fn form(&self) -> &GramForm {
        &self.form
    }

    pub fn bound(&self) -> u64 {
        self.bits.bound
    }

    /// Whether `n` is represented. Panics if `n` exceeds the bound.
    pub fn represents(&self, n: u64) -> bool {
        assert!(n <= self.bits.bound, "{n} is beyond the sieve bound {}", self.bits.bound);
        self.bits.get(n)
    }

    pub fn bits(&self) -> &Bits {
        &self.bits
    }

    /// The sieve of `form ⊥ <a>`.
    pub fn extended(&self, a: u64) -> RepresentationSieve {
        let mut bits = self.bits.clone();
        bits.add_square_layer(a);
        let n = self.form.dim();
        let mut rows = self.form.rows();
        rows.iter_mut().for_each(|r| r.push(0));
        let mut last = vec![0; n + 1];
        last[n] = a as i64;
        rows.push(last);
        RepresentationSieve { form: GramForm::new(rows).expect("orthogonal sum stays positive definite"), bits }
    }

    /// Values in `1..=bound` that are not represented.
    pub fn missing(&self) -> impl Iterator<Item = u64> + '_ {
        (1..=self.bits.bound).filter(|&n| !self.bits.get(n))
    }

    /// Raw file: 8-byte magic, bound as u64 little-endian, then the bit
    /// array as little-endian bytes (bit `n % 8` of byte `n / 8` is `n`).
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), SieveError> {
        w.write_all(MAGIC)?;
        w.write_all(&self.bits.bound.to_le_bytes())?;
        let nbytes = (self.bits.bound / 8 + 1) as usize;
        let mut bytes = Vec::with_capacity(self.bits.words.len() * 8);
        for word in &self.bits.words {
            bytes.extend_from_slice(&word.to_le_bytes());
        }
        w.write_all(&bytes[..nbytes])?;
        Ok(())
    }

    /// Reads a sieve file; the form is not stored in the file and must be
    /// supplied by the caller.
    pub fn read_from<R: Read>(form: GramForm, mut r: R) -> Result<Self, SieveError> {
        let mut header = [0u8; 16];
        r.read_exact(&mut header)?;
        if &header[..8] != MAGIC {
            return Err(SieveError::BadFile("bad magic".into()));
        }
        let bound = u64::from_le_bytes(header[8..].try_into().unwrap());
        if bound > MAX_SIEVE_BOUND {
            return Err(SieveError::Capacity { requested: bound, limit: MAX_SIEVE_BOUND });
        }
        let nbytes = (bound / 8 + 1) as usize;
        let mut bytes = vec![0u8; nbytes];
        r.read_exact(&mut bytes)?;
        let mut bits = Bits::new(bound);
        for (i, chunk) in bytes.chunks(8).enumerate() {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            bits.words[i] = u64::from_le_bytes(buf);
        }
        bits.mask_tail();
        Ok(RepresentationSieve { form, bits })
    }
}

/// A witness `x` with `x M x^t = n`, or `None` if `n` is not represented.
pub fn represents_direct(form: &GramForm, n: u64) -> Option<FormValue> {
    Ellipsoid::new(form).find_eq(n).map(|witness| FormValue { value: n, witness })
}

/// Builds `Q(form) ∩ [0, bound]`.
pub fn build_sieve(form: &GramForm, bound: u64) -> Result<RepresentationSieve, SieveError> {
    if bound == 0 {
        return Err(SieveError::EmptyBound);
    }
    if bound > MAX_SIEVE_BOUND {
        return Err(SieveError::Capacity { requested: bound, limit: MAX_SIEVE_BOUND });
    }
    let (diagonal, coupled) = form.split_diagonal_part();
    let mut bits = Bits::new(bound);
    match coupled {
        None => bits.set(0),
        Some(core) => {
            let _ = Ellipsoid::new(&core).for_each_le(bound, |_, v| {
                bits.set(v);
                ControlFlow::Continue(())
            });
        }
    }
    // larger coefficients first keeps the early layers sparse
    let mut diagonal = diagonal;
    diagonal.sort_unstable_by(|a, b| b.cmp(a));
    for a in diagonal {
        bits.add_square_layer(a);
    }
    Ok(RepresentationSieve { form: form.clone(), bits })
}

/// `{ c^s (m t + r) : s, t >= 0, r in residues }`, positive members only.
///
/// `base = 1` denotes the plain progression `m t + r` with no power factor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExcludedFamily {
    pub base: u64,
    pub modulus: u64,
    pub residues: Vec<u64>,
}

impl ExcludedFamily {
    pub fn new(base: u64, modulus: u64, residues: &[u64]) -> Self {
        let mut residues: Vec<u64> = residues.iter().map(|r| r % modulus).collect();
        residues.sort_unstable();
        residues.dedup();
        ExcludedFamily { base, modulus, residues }
    }

    /// True when `n = c^s u` with `u mod m` in the residue set, for some `s`.
    pub fn contains(&self, n: u64) -> bool {
        if n == 0 {
            return false;
        }
        let mut u = n;
        loop {
            if self.residues.binary_search(&(u % self.modulus)).is_ok() {
                return true;
            }
            if self.base < 2 || u % self.base != 0 {
                return false;
            }
            u /= self.base;
        }
    }
}

impl fmt::Display for ExcludedFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let res = if self.residues.len() == 1 {
            self.residues[0].to_string()
        } else {
            format!("{{{}}}", self.residues.iter().map(u64::to_string).collect::<Vec<_>>().join(","))
        };
        if self.base >= 2 {
            write!(f, "{}^s({}t+{})", self.base, self.modulus, res)
        } else {
            write!(f, "{}t+{}", self.modulus, res)
        }
    }
}

impl FromStr for ExcludedFamily {
    type Err = String;

    /// Accepts `4^s(16t+14)`, `8t+1`, `25^s(50t+{20,30})`.
    fn from_str(s: &str) -> Result<Self, String> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let (base, body) = match s.split_once("^s") {
            Some((b, rest)) => {
                let base: u64 = b.parse().map_err(|_| format!("bad base in {s}"))?;
                let body = rest
                    .strip_prefix('(')
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| format!("expected parentheses in {s}"))?;
                (base, body.to_string())
            }
            None => (1, s.clone()),
        };
        let (m, r) = body.split_once("t+").ok_or_else(|| format!("expected mt+r in {s}"))?;
        let modulus: u64 = m.parse().map_err(|_| format!("bad modulus in {s}"))?;
        let r = r.trim_start_matches('{').trim_end_matches('}');
        let residues = r
            .split(',')
            .map(|x| x.parse::<u64>().map_err(|_| format!("bad residue {x:?} in {s}")))
            .collect::<Result<Vec<_>, _>>()?;
        if modulus == 0 || (base != 1 && base < 2) {
            return Err(format!("degenerate family {s}"));
        }
        Ok(ExcludedFamily::new(base, modulus, &residues))
    }
}

/// Members of `fam` in `1..=bound`, ascending.
pub fn family_members(fam: &ExcludedFamily, bound: u64) -> Vec<u64> {
    (1..=bound).filter(|&n| fam.contains(n)).collect()
}

/// `n mod modulus` must lie in `residues`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResidueCondition {
    pub modulus: u64,
    pub residues: Vec<u64>,
}

impl ResidueCondition {
    pub fn new(modulus: u64, residues: &[u64]) -> Self {
        let mut residues: Vec<u64> = residues.iter().map(|r| r % modulus).collect();
        residues.sort_unstable();
        residues.dedup();
        ResidueCondition { modulus, residues }
    }

    pub fn even() -> Self {
        Self::new(2, &[0])
    }

    pub fn holds(&self, n: u64) -> bool {
        self.residues.contains(&(n % self.modulus))
    }
}

impl fmt::Display for ResidueCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r: Vec<String> = self.residues.iter().map(u64::to_string).collect();
        write!(f, "n = {} mod {}", r.join(","), self.modulus)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExclusionReport {
    pub form: String,
    pub bound: u64,
    pub tested: u64,
    /// Values where "satisfies the condition and avoids every family"
    /// disagrees with the sieve.
    pub mismatches: Vec<u64>,
}

impl ExclusionReport {
    pub fn verified(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Compares the sieve of `form` with the description "every `n` in the
/// slice except the family members", where the slice is the set of `n`
/// satisfying `constraint` (all `n` when `None`).
pub fn verify_excluded(
    form: &GramForm,
    families: &[ExcludedFamily],
    constraint: Option<&ResidueCondition>,
    bound: u64,
) -> Result<ExclusionReport, SieveError> {
    let sieve = build_sieve(form, bound)?;
    Ok(compare_with_families(&sieve, families, constraint))
}

pub fn compare_with_families(
    sieve: &RepresentationSieve,
    families: &[ExcludedFamily],
    constraint: Option<&ResidueCondition>,
) -> ExclusionReport {
    let mut mismatches = Vec::new();
    let mut tested = 0;
    for n in 0..=sieve.bound() {
        if constraint.is_some_and(|c| !c.holds(n)) {
            continue;
        }
        tested += 1;
        let predicted = !families.iter().any(|f| f.contains(n));
        if predicted != sieve.represents(n) {
            mismatches.push(n);
        }
    }
    ExclusionReport { form: sieve.form().to_string(), bound: sieve.bound(), tested, mismatches }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::DiagonalForm;

    fn diag(c: &[u64]) -> GramForm {
        DiagonalForm::new(c.to_vec()).unwrap().to_gram()
    }

    fn set(s: &RepresentationSieve) -> Vec<u64> {
        s.bits().iter_ones().collect()
    }

    /// Independent oracle: loop over |x_i| <= sqrt(n / a_i).
    fn brute_represents(coeffs: &[u64], n: u64) -> bool {
        fn go(coeffs: &[u64], n: u64) -> bool {
            match coeffs.split_first() {
                None => n == 0,
                Some((&a, rest)) => {
                    let mut x = 0u64;
                    while a * x * x <= n {
                        if go(rest, n - a * x * x) {
                            return true;
                        }
                        x += 1;
                    }
                    false
                }
            }
        }
        go(coeffs, n)
    }

    #[test]
    fn direct_examples() {
        assert!(represents_direct(&diag(&[2, 2, 2, 3]), 17).is_none());
        let w = represents_direct(&diag(&[1]), 9).unwrap();
        assert_eq!(w.witness[0].abs(), 3);
        for n in 0..=100 {
            let got = represents_direct(&diag(&[2, 3, 5]), n);
            assert_eq!(got.is_some(), brute_represents(&[2, 3, 5], n), "n = {n}");
            if let Some(v) = got {
                assert_eq!(diag(&[2, 3, 5]).evaluate(&v.witness).unwrap(), n);
            }
        }
    }

    #[test]
    fn sieve_examples() {
        let s = build_sieve(&diag(&[1]), 10).unwrap();
        assert_eq!(set(&s), vec![0, 1, 4, 9]);

        let s = build_sieve(&diag(&[2, 2, 2]), 100).unwrap();
        let evens_missing: Vec<u64> = (0..=100).filter(|n| n % 2 == 0 && !s.represents(*n)).collect();
        assert_eq!(evens_missing, vec![14, 30, 46, 56, 62, 78, 94]);
        assert!((0..=100).filter(|n| n % 2 == 1).all(|n| !s.represents(n)));
        assert!(matches!(build_sieve(&diag(&[1]), 0), Err(SieveError::EmptyBound)));
        assert!(matches!(build_sieve(&diag(&[1]), MAX_SIEVE_BOUND + 1), Err(SieveError::Capacity { .. })));
    }

    #[test]
    fn gram_sieve_matches_direct_search() {
        for text in ["[[1,0,0],[0,10,4],[0,4,10]]", "[[2,1,1],[1,3,1],[1,1,9]]", "[[5,0,0],[0,6,3],[0,3,12]]"] {
            let g: GramForm = text.parse().unwrap();
            let s = build_sieve(&g, 400).unwrap();
            for n in 0..=400 {
                assert_eq!(s.represents(n), represents_direct(&g, n).is_some(), "{text} at {n}");
            }
        }
    }

    #[test]
    fn family_examples() {
        let f: ExcludedFamily = "4^s(16t+14)".parse().unwrap();
        assert_eq!(family_members(&f, 100), vec![14, 30, 46, 56, 62, 78, 94]);
        let f: ExcludedFamily = "9^s(9t+6)".parse().unwrap();
        assert_eq!(family_members(&f, 60), vec![6, 15, 24, 33, 42, 51, 54, 60]);
        assert!(family_members(&f, 0).is_empty());
        let f: ExcludedFamily = "25^s(50t+{20,30})".parse().unwrap();
        assert_eq!(f.residues, vec![20, 30]);
        assert!(f.contains(25 * 70));
        assert_eq!(f.to_string(), "25^s(50t+{20,30})");
        let f: ExcludedFamily = "8t+1".parse().unwrap();
        assert_eq!(f.base, 1);
        assert!(f.contains(9) && !f.contains(72));
        assert!("4^s16t+14".parse::<ExcludedFamily>().is_err());
    }

    #[test]
    fn excluded_examples() {
        let fams = ["8t+1".parse().unwrap(), "9^s(9t+6)".parse().unwrap()];
        let r = verify_excluded(&diag(&[2, 2, 3]), &fams, None, 10_000).unwrap();
        assert!(r.verified(), "{:?}", &r.mismatches[..r.mismatches.len().min(10)]);
        let fams = ["9^s(3t+1)".parse().unwrap()];
        assert!(verify_excluded(&diag(&[2, 3, 3]), &fams, None, 10_000).unwrap().verified());
        let fams = ["4^s(16t+14)".parse().unwrap()];
        let r = verify_excluded(&diag(&[2, 2, 2]), &fams, Some(&ResidueCondition::even()), 10_000).unwrap();
        assert!(r.verified());
        assert_eq!(r.tested, 5001);
    }

    #[test]
    fn file_round_trip() {
        let g = diag(&[2, 3, 5]);
        let s = build_sieve(&g, 1000).unwrap();
        let mut buf = Vec::new();
        s.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..8], b"QPUSIEVE");
        assert_eq!(u64::from_le_bytes(buf[8..16].try_into().unwrap()), 1000);
        assert_eq!(buf.len(), 16 + 1000 / 8 + 1);
        // n = 2 is bit 2 of the first payload byte
        assert_eq!(buf[16] & 0b101, 0b101);
        let back = RepresentationSieve::read_from(g.clone(), &buf[..]).unwrap();
        assert_eq!(back, s);
        assert!(RepresentationSieve::read_from(g, &b"NOTSIEVE00000000"[..]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn scaling(coeffs in prop::collection::vec(1u64..12, 1..4), c in 2u64..5) {
                let f = DiagonalForm::new(coeffs).unwrap();
                let s = build_sieve(&f.to_gram(), 600).unwrap();
                let sc = build_sieve(&f.scaled(c).unwrap().to_gram(), 600 * c).unwrap();
                for n in 0..=600 {
                    prop_assert_eq!(s.represents(n), sc.represents(c * n));
                }
            }

            #[test]
            fn subform_monotone(coeffs in prop::collection::vec(1u64..15, 2..5)) {
                let f = DiagonalForm::new(coeffs).unwrap();
                let s = build_sieve(&f.to_gram(), 800).unwrap();
                for g in f.sub_multisets() {
                    let sg = build_sieve(&g.to_gram(), 800).unwrap();
                    for n in 0..=800 {
                        prop_assert!(!sg.represents(n) || s.represents(n));
                    }
                }
            }

            #[test]
            fn witnesses_are_valid(coeffs in prop::collection::vec(1u64..20, 1..5), n in 0u64..3000) {
                let g = DiagonalForm::new(coeffs).unwrap().to_gram();
                if let Some(v) = represents_direct(&g, n) {
                    prop_assert_eq!(g.evaluate(&v.witness).unwrap(), n);
                    prop_assert_eq!(v.value, n);
                }
            }
        }
    }
}
