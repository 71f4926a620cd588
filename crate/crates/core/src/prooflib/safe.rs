//! Predicates on residue classes: "every positive `n ≡ s (mod M)` lies in
//! the set", decided exactly.

use std::collections::HashSet;
use std::fmt;

use serde::Serialize;

use crate::primes::gcd;
use crate::sieve::ExcludedFamily;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SafeClause {
    /// `n mod modulus` is one of `residues`.
    Require { modulus: u64, residues: Vec<u64> },
    /// `n mod modulus` is none of `residues`.
    Forbid { modulus: u64, residues: Vec<u64> },
    /// `gcd(n, m) = 1`.
    Coprime { m: u64 },
    /// `n` is not a member of the family.
    Exclude { family: ExcludedFamily },
}

impl SafeClause {
    /// Whether the clause holds for the single integer `n`.
    pub fn holds(&self, n: u64) -> bool {
        match self {
            SafeClause::Require { modulus, residues } => residues.contains(&(n % modulus)),
            SafeClause::Forbid { modulus, residues } => !residues.contains(&(n % modulus)),
            SafeClause::Coprime { m } => gcd(n, *m) == 1,
            SafeClause::Exclude { family } => !family.contains(n),
        }
    }

    /// Whether the clause holds for every positive `n ≡ s (mod modulus)`.
    /// `None` when the clause cannot be decided at this modulus.
    pub fn holds_on_class(&self, s: u64, modulus: u64) -> Option<bool> {
        match self {
            SafeClause::Require { modulus: m, .. } | SafeClause::Forbid { modulus: m, .. } => {
                (modulus % m == 0).then(|| self.holds(s))
            }
            SafeClause::Coprime { m } => {
                // every prime factor of m must divide the class modulus
                (modulus % radical(*m) == 0).then(|| gcd(s, *m) == 1)
            }
            SafeClause::Exclude { family } => Some(!class_meets_family(s, modulus, family)),
        }
    }
}

fn radical(mut m: u64) -> u64 {
    let mut r = 1;
    let mut p = 2;
    while p * p <= m {
        if m % p == 0 {
            r *= p;
            while m % p == 0 {
                m /= p;
            }
        }
        p += 1;
    }
    if m > 1 {
        r *= m;
    }
    r
}

/// Whether some positive `n ≡ s (mod modulus)` belongs to the family.
///
/// Branch `j` asks for `n = c^j u` with `u ≡ r (mod m)`, solvable iff
/// `c^j r ≡ s (mod gcd(c^j m, modulus))`. The pair
/// `(gcd(c^j m, modulus), c^j mod that gcd)` determines branch `j`, and it
/// is eventually periodic, so the scan stops at the first repeat.
pub fn class_meets_family(s: u64, modulus: u64, family: &ExcludedFamily) -> bool {
    let m = family.modulus as u128;
    let big = modulus as u128;
    let s = s as u128 % big;
    let mut power: u128 = 1; // c^j reduced mod modulus * m
    let mut seen = HashSet::new();
    loop {
        let g = gcd_u128(power * m, big);
        let key = (g, power % g);
        if !seen.insert(key) {
            return false;
        }
        if family.residues.iter().any(|&r| (power * r as u128) % g == s % g) {
            return true;
        }
        if family.base < 2 {
            return false;
        }
        power = power * family.base as u128 % (big * m);
    }
}

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl fmt::Display for SafeClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |r: &[u64]| r.iter().map(u64::to_string).collect::<Vec<_>>().join(",");
        match self {
            SafeClause::Require { modulus, residues } => write!(f, "require {} mod {modulus}", list(residues)),
            SafeClause::Forbid { modulus, residues } => write!(f, "forbid {} mod {modulus}", list(residues)),
            SafeClause::Coprime { m } => write!(f, "coprime {m}"),
            SafeClause::Exclude { family } => write!(f, "exclude {family}"),
        }
    }
}

/// Conjunction of clauses.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SafeSet {
    pub clauses: Vec<SafeClause>,
}

impl SafeSet {
    pub fn holds(&self, n: u64) -> bool {
        self.clauses.iter().all(|c| c.holds(n))
    }

    /// First clause that fails (or cannot be decided) on the class.
    pub fn violated_on_class(&self, s: u64, modulus: u64) -> Option<&SafeClause> {
        self.clauses.iter().find(|c| c.holds_on_class(s, modulus) != Some(true))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fam(s: &str) -> ExcludedFamily {
        s.parse().unwrap()
    }

    /// Brute force: scan class members up to a large bound.
    fn brute_meets(s: u64, modulus: u64, family: &ExcludedFamily) -> bool {
        let mut n = if s == 0 { modulus } else { s };
        while n < 4_000_000 {
            if family.contains(n) {
                return true;
            }
            n += modulus;
        }
        false
    }

    #[test]
    fn family_classes_match_brute_force() {
        for (f, modulus) in [
            ("4^s(16t+10)", 64),
            ("4^s(16t+14)", 32),
            ("4^s(32t+20)", 96),
            ("25^s(50t+{20,30})", 50),
            ("9^s(9t+6)", 96),
            ("9^s(3t+1)", 27),
            ("8t+1", 24),
            ("4^s(8t+7)", 24),
        ] {
            let family = fam(f);
            for s in 0..modulus {
                assert_eq!(class_meets_family(s, modulus, &family), brute_meets(s, modulus, &family), "{f} mod {modulus}, class {s}");
            }
        }
    }

    #[test]
    fn clause_decisions() {
        let c = SafeClause::Require { modulus: 8, residues: vec![3] };
        assert_eq!(c.holds_on_class(11, 32), Some(true));
        assert_eq!(c.holds_on_class(11, 12), None);
        let c = SafeClause::Coprime { m: 35 };
        assert_eq!(c.holds_on_class(5, 420), Some(false));
        assert_eq!(c.holds_on_class(1, 420), Some(true));
        assert_eq!(c.holds_on_class(1, 12), None);
        let c = SafeClause::Exclude { family: fam("4^s(16t+14)") };
        assert_eq!(c.holds_on_class(24, 32), Some(false));
        assert_eq!(c.holds_on_class(2, 32), Some(true));
    }
}
