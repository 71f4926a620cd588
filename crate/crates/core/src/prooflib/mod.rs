//! Machine checks for covering-congruence arguments of the shape
//! "for every large prime `p`, `p - Σ c_i k_i d_i^2` is represented by a
//! ternary `g`, where the `d_i` depend only on `p mod M`".
//!
//! A script is verified in three layers:
//! 1. coverage: every residue `r mod M` that a large prime can occupy has
//!    an assigned tuple `d`;
//! 2. class safety: for each such `r`, every positive integer in the class
//!    of `r - Σ c_i k_i d_i^2 mod M` satisfies the script's safe set;
//! 3. bounded audit: every prime in `[base, B]` maps to a represented value
//!    of `g`, and every prime below `base` is represented by the full form
//!    unless it is a listed exception.

mod parse;
mod safe;

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::forms::{DiagonalForm, GramForm};
use crate::primes::{gcd, primes_up_to};
use crate::sieve::{build_sieve, RepresentationSieve, ResidueCondition, SieveError};

pub use parse::{parse_scripts, parse_transfers};
pub use safe::{class_meets_family, SafeClause, SafeSet};

#[derive(Debug, Error)]
pub enum ProofError {
    #[error("script {script}: sieve bound {bound} is below the base {base}")]
    SieveTooSmall { script: String, bound: u64, base: u64 },
    #[error("script {script}: sieve is for {found}, expected {expected}")]
    WrongSieve { script: String, found: String, expected: String },
    #[error("{0}")]
    Parse(String),
    #[error(transparent)]
    Sieve(#[from] SieveError),
}

/// One subtracted term `coefficient * square * d^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Term {
    pub coefficient: u64,
    pub square: u64,
}

impl Term {
    pub fn weight(&self) -> u64 {
        self.coefficient * self.square
    }
}

/// `d` tuple assigned to `p mod modulus` in `residues` (all residues when
/// `residues` is `None`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rule {
    pub d: Vec<u64>,
    pub when: Option<ResidueCondition>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProofScript {
    pub name: String,
    /// The form whose primes are being covered.
    pub form: DiagonalForm,
    /// The ternary that must represent the remainders.
    pub target: GramForm,
    pub modulus: u64,
    pub terms: Vec<Term>,
    pub base: u64,
    /// Primes below `base` that `form` does not represent.
    pub exceptions: Vec<u64>,
    /// First matching rule wins.
    pub rules: Vec<Rule>,
    /// Inclusive per-term ranges for residues no rule covers; the smallest
    /// safe subtrahend is chosen, ties broken lexicographically.
    pub search: Option<Vec<(u64, u64)>>,
    pub safe: SafeSet,
    pub notes: Vec<String>,
}

impl ProofScript {
    pub fn subtrahend(&self, d: &[u64]) -> u64 {
        self.terms.iter().zip(d).map(|(t, &x)| t.weight() * x * x).sum()
    }

    /// Residues a prime `>= base` can occupy.
    pub fn reachable_residues(&self) -> Vec<u64> {
        (0..self.modulus).filter(|&r| gcd(r, self.modulus) == 1).collect()
    }

    fn class_of(&self, r: u64, d: &[u64]) -> u64 {
        let m = self.modulus;
        (r + m - self.subtrahend(d) % m) % m
    }

    fn class_is_safe(&self, r: u64, d: &[u64]) -> bool {
        self.subtrahend(d) < self.base && self.safe.violated_on_class(self.class_of(r, d), self.modulus).is_none()
    }

    fn rule_for(&self, r: u64) -> Option<Vec<u64>> {
        self.rules.iter().find(|rule| rule.when.as_ref().is_none_or(|c| c.holds(r))).map(|rule| rule.d.clone())
    }

    fn search_for(&self, r: u64) -> Option<Vec<u64>> {
        let ranges = self.search.as_ref()?;
        let mut candidates: Vec<Vec<u64>> = vec![vec![]];
        for &(lo, hi) in ranges {
            candidates = candidates.into_iter().flat_map(|c| (lo..=hi).map(move |x| [c.clone(), vec![x]].concat())).collect();
        }
        candidates.sort_by_key(|d| (self.subtrahend(d), d.clone()));
        candidates.into_iter().find(|d| self.class_is_safe(r, d))
    }

    /// The `d` tuple for each reachable residue, or `None` where nothing
    /// is assigned.
    pub fn table(&self) -> BTreeMap<u64, Option<Vec<u64>>> {
        self.reachable_residues().into_iter().map(|r| (r, self.rule_for(r).or_else(|| self.search_for(r)))).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UnsafeClass {
    pub residue: u64,
    pub d: Vec<u64>,
    /// Class of the remainder modulo the script modulus.
    pub remainder_class: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PrimeFailure {
    pub p: u64,
    pub d: Vec<u64>,
    /// Remainder, or `None` when the subtrahend exceeds `p`.
    pub n: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProofReport {
    pub script: String,
    pub bound: u64,
    pub table: Vec<(u64, Vec<u64>)>,
    pub coverage_gaps: Vec<u64>,
    pub unsafe_classes: Vec<UnsafeClass>,
    pub primes_checked: u64,
    pub prime_failures: Vec<PrimeFailure>,
    /// Primes below the base where representation by the form disagrees
    /// with the exception list.
    pub small_prime_mismatches: Vec<u64>,
}

impl ProofReport {
    pub fn verified(&self) -> bool {
        self.coverage_gaps.is_empty()
            && self.unsafe_classes.is_empty()
            && self.prime_failures.is_empty()
            && self.small_prime_mismatches.is_empty()
    }
}

impl fmt::Display for ProofReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} (gaps {}, unsafe classes {}, prime failures {} of {}, small-prime mismatches {})",
            self.script,
            if self.verified() { "verified" } else { "FAILED" },
            self.coverage_gaps.len(),
            self.unsafe_classes.len(),
            self.prime_failures.len(),
            self.primes_checked,
            self.small_prime_mismatches.len()
        )
    }
}

/// Checks coverage and class safety only.
pub fn check_classes(script: &ProofScript) -> (Vec<(u64, Vec<u64>)>, Vec<u64>, Vec<UnsafeClass>) {
    let mut table = Vec::new();
    let mut gaps = Vec::new();
    let mut unsafe_classes = Vec::new();
    for (r, d) in script.table() {
        let Some(d) = d else {
            gaps.push(r);
            continue;
        };
        let class = script.class_of(r, &d);
        let reason = if script.subtrahend(&d) >= script.base {
            Some(format!("subtrahend {} is not below the base", script.subtrahend(&d)))
        } else {
            script.safe.violated_on_class(class, script.modulus).map(|c| c.to_string())
        };
        if let Some(reason) = reason {
            unsafe_classes.push(UnsafeClass { residue: r, d: d.clone(), remainder_class: class, reason });
        }
        table.push((r, d));
    }
    (table, gaps, unsafe_classes)
}

/// Runs all three layers against a sieve of the target at bound `B`.
pub fn verify_proof_script(script: &ProofScript, target: &RepresentationSieve) -> Result<ProofReport, ProofError> {
    if target.form() != &script.target {
        return Err(ProofError::WrongSieve {
            script: script.name.clone(),
            found: target.form().to_string(),
            expected: script.target.to_string(),
        });
    }
    let bound = target.bound();
    if bound < script.base {
        return Err(ProofError::SieveTooSmall { script: script.name.clone(), bound, base: script.base });
    }
    let (table, coverage_gaps, unsafe_classes) = check_classes(script);
    let lookup: BTreeMap<u64, Vec<u64>> = table.iter().cloned().collect();

    let primes = primes_up_to(bound);
    let split = primes.partition_point(|&p| p < script.base);
    let (small, large) = primes.split_at(split);

    let mut prime_failures: Vec<PrimeFailure> = large
        .par_chunks(4096)
        .flat_map_iter(|chunk| {
            chunk.iter().filter_map(|&p| {
                let d = lookup.get(&(p % script.modulus))?;
                let sub = script.subtrahend(d);
                let n = p.checked_sub(sub);
                match n {
                    Some(n) if target.represents(n) => None,
                    _ => Some(PrimeFailure { p, d: d.clone(), n }),
                }
            })
        })
        .collect();
    prime_failures.sort_by_key(|f| f.p);
    // residues without a tuple are reported as coverage gaps instead
    let primes_checked = large.iter().filter(|&&p| lookup.contains_key(&(p % script.modulus))).count() as u64;

    let small_prime_mismatches = if small.is_empty() {
        Vec::new()
    } else {
        let own = build_sieve(&script.form.to_gram(), script.base)?;
        small.iter().copied().filter(|&p| own.represents(p) == script.exceptions.contains(&p)).collect()
    };

    Ok(ProofReport {
        script: script.name.clone(),
        bound,
        table,
        coverage_gaps,
        unsafe_classes,
        primes_checked,
        prime_failures,
        small_prime_mismatches,
    })
}

const BUNDLED: &[(&str, &str)] = &[
    ("target-2-2-2.qps", include_str!("../../data/scripts/target-2-2-2.qps")),
    ("target-2-2-3.qps", include_str!("../../data/scripts/target-2-2-3.qps")),
    ("target-2-3-3.qps", include_str!("../../data/scripts/target-2-3-3.qps")),
    ("target-2-3-4.qps", include_str!("../../data/scripts/target-2-3-4.qps")),
    ("target-2-3-5.qps", include_str!("../../data/scripts/target-2-3-5.qps")),
    ("target-2-3-6.qps", include_str!("../../data/scripts/target-2-3-6.qps")),
    ("target-2-3-7.qps", include_str!("../../data/scripts/target-2-3-7.qps")),
    ("target-2-3-14.qps", include_str!("../../data/scripts/target-2-3-14.qps")),
    ("target-2-4-x.qps", include_str!("../../data/scripts/target-2-4-x.qps")),
    ("target-3-5-x.qps", include_str!("../../data/scripts/target-3-5-x.qps")),
];

/// Every script shipped with the library, in file order.
pub fn bundled_scripts() -> Vec<ProofScript> {
    BUNDLED
        .iter()
        .flat_map(|(file, text)| parse_scripts(text).unwrap_or_else(|e| panic!("bundled script file {file}: {e}")))
        .collect()
}

pub fn bundled_script(name: &str) -> Option<ProofScript> {
    bundled_scripts().into_iter().find(|s| s.name == name)
}

/// Verifies many scripts, building each distinct target sieve once.
pub fn verify_all(scripts: &[ProofScript], bound: u64) -> Result<Vec<ProofReport>, ProofError> {
    let mut targets: Vec<GramForm> = scripts.iter().map(|s| s.target.clone()).collect();
    targets.sort_by_key(|t| t.to_string());
    targets.dedup();
    let sieves = targets.par_iter().map(|t| build_sieve(t, bound)).collect::<Result<Vec<_>, _>>()?;
    scripts
        .iter()
        .map(|s| {
            let sieve = sieves.iter().find(|x| x.form() == &s.target).expect("sieve built for every target");
            verify_proof_script(s, sieve)
        })
        .collect()
}

/// `Q(mate) ∩ {n : n mod modulus ∈ residues} ⊆ Q(target)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MateTransferClaim {
    pub target: GramForm,
    pub mate: GramForm,
    pub condition: ResidueCondition,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MateTransferReport {
    pub target: String,
    pub mate: String,
    pub bound: u64,
    pub checked: u64,
    pub counterexamples: Vec<u64>,
}

impl MateTransferReport {
    pub fn verified(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

pub fn verify_mate_transfer(claim: &MateTransferClaim, bound: u64) -> Result<MateTransferReport, ProofError> {
    let mate = build_sieve(&claim.mate, bound)?;
    let target = build_sieve(&claim.target, bound)?;
    let mut checked = 0;
    let mut counterexamples = Vec::new();
    for n in (0..=bound).filter(|&n| claim.condition.holds(n) && mate.represents(n)) {
        checked += 1;
        if !target.represents(n) {
            counterexamples.push(n);
        }
    }
    Ok(MateTransferReport {
        target: claim.target.to_string(),
        mate: claim.mate.to_string(),
        bound,
        checked,
        counterexamples,
    })
}

/// The shipped transfer claims.
pub fn bundled_transfers() -> Vec<MateTransferClaim> {
    parse_transfers(include_str!("../../data/transfers.txt")).expect("bundled transfer file is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn script(text: &str) -> ProofScript {
        parse_scripts(text).unwrap().remove(0)
    }

    #[test]
    fn empty_table_reports_a_gap() {
        let s = script("script empty\nform 1,1,1\ntarget 1,1,1\nmodulus 1\nbase 1\n");
        let sieve = build_sieve(&s.target, 100).unwrap();
        let r = verify_proof_script(&s, &sieve).unwrap();
        assert_eq!(r.coverage_gaps, vec![0]);
        assert!(!r.verified());
    }

    #[test]
    fn search_prefers_small_subtrahends() {
        let s = script(
            "script s\nform 2,2,3,17\ntarget 2,2,3\nmodulus 24\nsubtract 17 1\nbase 613\nexceptions 41\nsearch 0..6\n\
             safe exclude 8t+1\nsafe exclude 9^s(9t+6)\n",
        );
        let table = s.table();
        assert_eq!(table[&5], Some(vec![0]));
        // 1 - 17 d^2 must avoid 1 mod 8, so d is odd... or at least nonzero
        assert_ne!(table[&1], Some(vec![0]));
    }

    #[test]
    fn wrong_sieve_is_rejected() {
        let s = script("script s\nform 2,2,2,3\ntarget 2,2,2\nmodulus 2\nsubtract 3 1\nbase 10\nd 0 otherwise\n");
        let sieve = build_sieve(&s.form.to_gram(), 100).unwrap();
        assert!(matches!(verify_proof_script(&s, &sieve), Err(ProofError::WrongSieve { .. })));
        let sieve = build_sieve(&s.target, 5).unwrap();
        assert!(matches!(verify_proof_script(&s, &sieve), Err(ProofError::SieveTooSmall { .. })));
    }
}
