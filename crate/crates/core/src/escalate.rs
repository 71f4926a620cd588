//! Prime truants, the ten-prime criterion, properness, and the escalation
//! tree that enumerates proper prime-universal diagonal forms by rank.

use std::collections::HashSet;
use std::fmt::{self, Write as _};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::forms::DiagonalForm;
use crate::primes::primes_up_to;
use crate::sieve::{build_sieve, Bits, RepresentationSieve};

/// A diagonal form is prime-universal iff it represents each of these.
pub const CRITERION_SET: [u64; 10] = [2, 3, 5, 7, 13, 17, 23, 41, 43, 67];

/// Largest rank accepted by [`escalate_tree`].
pub const MAX_RANK: usize = 8;

pub const DEFAULT_NODE_CAP: usize = 1_000_000;

/// Bound used for the per-node cross-check of the criterion.
pub const AUDIT_BOUND: u64 = 100_000;

const CRITERION_MAX: u64 = 67;

#[derive(Debug, Error)]
pub enum EscalateError {
    #[error("{0} is not prime-universal (misses {1:?} from the criterion set)")]
    NotPrimeUniversal(DiagonalForm, Vec<u64>),
    #[error("bound {0} is below 67")]
    BoundTooSmall(u64),
    #[error("max rank must be between 1 and {MAX_RANK}, got {0}")]
    Rank(usize),
    #[error("node cap {cap} reached while expanding rank {rank}")]
    NodeCap { cap: usize, rank: usize, partial: Box<EscalationTree> },
    #[error(transparent)]
    Sieve(#[from] crate::sieve::SieveError),
}

fn small_sieve(f: &DiagonalForm) -> RepresentationSieve {
    build_sieve(&f.to_gram(), CRITERION_MAX).expect("bound 67 is within capacity")
}

fn first_missing_prime(sieve: &RepresentationSieve, primes: &[u64]) -> Option<u64> {
    primes.iter().copied().find(|&p| !sieve.represents(p))
}

/// Smallest prime `<= prime_bound` not represented by `f`.
pub fn prime_truant(f: &DiagonalForm, prime_bound: u64) -> Result<Option<u64>, EscalateError> {
    if prime_bound < CRITERION_MAX {
        return Err(EscalateError::BoundTooSmall(prime_bound));
    }
    let sieve = build_sieve(&f.to_gram(), prime_bound)?;
    Ok(first_missing_prime(&sieve, &primes_up_to(prime_bound)))
}

/// Primes of the criterion set not represented by `f`; empty means
/// prime-universal.
pub fn criterion_check(f: &DiagonalForm) -> (bool, Vec<u64>) {
    let sieve = small_sieve(f);
    let missed: Vec<u64> = CRITERION_SET.iter().copied().filter(|&p| !sieve.represents(p)).collect();
    (missed.is_empty(), missed)
}

/// Criterion verdict together with a bounded audit of all primes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub prime_universal: bool,
    pub missed: Vec<u64>,
    pub audit_bound: u64,
    /// Smallest prime up to `audit_bound` that is not represented.
    pub audit_miss: Option<u64>,
    /// The criterion passed but the audit found a missed prime.
    pub contradiction: bool,
}

pub fn is_prime_universal(f: &DiagonalForm, audit_bound: u64) -> Result<Verdict, EscalateError> {
    let (prime_universal, missed) = criterion_check(f);
    let audit_miss = prime_truant(f, audit_bound)?;
    Ok(Verdict {
        prime_universal,
        missed,
        audit_bound,
        audit_miss,
        contradiction: prime_universal && audit_miss.is_some(),
    })
}

/// Whether no diagonal subform of smaller rank is prime-universal.
///
/// Prime-universality passes to larger forms, so only the subforms with one
/// coefficient removed need checking.
pub fn is_proper(f: &DiagonalForm) -> Result<bool, EscalateError> {
    let (ok, missed) = criterion_check(f);
    if !ok {
        return Err(EscalateError::NotPrimeUniversal(f.clone(), missed));
    }
    Ok(has_no_universal_deletion(f))
}

fn has_no_universal_deletion(f: &DiagonalForm) -> bool {
    if f.rank() == 1 {
        return true;
    }
    let c = f.coeffs();
    (0..c.len()).filter(|&i| i == 0 || c[i] != c[i - 1]).all(|i| {
        let mut rest = c.to_vec();
        rest.remove(i);
        !criterion_check(&DiagonalForm::new(rest).expect("nonempty")).0
    })
}

/// Outcome of repeatedly appending a coefficient that did not move the
/// truant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Repetition {
    /// `k` copies of the coefficient represent the prime.
    KFound(usize),
    /// No number of copies helps. `candidates` are the `b` with
    /// `a < b <= p` such that `<prefix, a, b>` represents `p`; `kept` drops
    /// those for which that form has a prime-universal subform of smaller
    /// rank.
    Resolved { candidates: Vec<u64>, kept: Vec<u64> },
}

fn layered(coeffs: &[u64], bound: u64) -> Bits {
    let mut bits = Bits::new(bound);
    bits.set(0);
    for &c in coeffs {
        bits.add_square_layer(c);
    }
    bits
}

/// Decides whether `<prefix, a, ..., a>` can represent `p`.
///
/// A copy used with a nonzero coordinate contributes at least `a`, so
/// `ceil(p / a)` copies are as good as any larger number.
///
/// Fails if `<prefix, a, b>` would exceed the supported rank.
pub fn resolve_repetition(prefix: &DiagonalForm, a: u64, p: u64) -> Result<Repetition, EscalateError> {
    if prefix.rank() + 2 > MAX_RANK {
        return Err(EscalateError::Rank(prefix.rank() + 2));
    }
    let base = layered(prefix.coeffs(), p);
    let mut bits = base.clone();
    for k in 1..=p.div_ceil(a) as usize {
        bits.add_square_layer(a);
        if bits.get(p) {
            return Ok(Repetition::KFound(k));
        }
    }
    let mut once = base;
    once.add_square_layer(a);
    let candidates: Vec<u64> = (a + 1..=p)
        .filter(|&b| {
            let mut bits = once.clone();
            bits.add_square_layer(b);
            bits.get(p)
        })
        .collect();
    let once = prefix.with(a).expect("rank checked above");
    let kept = candidates
        .iter()
        .copied()
        .filter(|&b| {
            let g = once.with(b).expect("rank checked above");
            !criterion_check(&g).0 || has_no_universal_deletion(&g)
        })
        .collect();
    Ok(Repetition::Resolved { candidates, kept })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Status {
    /// Prime-universal with no prime-universal subform of smaller rank.
    #[serde(rename = "I-1")]
    Proper,
    /// Prime-universal but contains a smaller prime-universal form.
    #[serde(rename = "I-2")]
    Improper,
    /// Not prime-universal; the truant moved past the parent's.
    #[serde(rename = "II-1")]
    Advanced,
    /// Not prime-universal; same truant as the parent.
    #[serde(rename = "II-2")]
    Stuck,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Proper => "I-1",
            Status::Improper => "I-2",
            Status::Advanced => "II-1",
            Status::Stuck => "II-2",
        }
    }

    pub fn is_prime_universal(self) -> bool {
        matches!(self, Status::Proper | Status::Improper)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EscalationNode {
    pub form: DiagonalForm,
    pub truant: Option<u64>,
    pub status: Status,
    /// Index of the parent in [`EscalationTree::nodes`]; `None` for rank 1.
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Set on stuck nodes below the maximum rank.
    pub repetition: Option<Repetition>,
}

/// Nodes are stored rank by rank, each rank sorted by coefficient tuple.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EscalationTree {
    pub max_rank: usize,
    pub nodes: Vec<EscalationNode>,
    /// Whether every node up to `max_rank` was expanded.
    pub complete: bool,
}

/// Truant of the empty form.
const EMPTY_TRUANT: u64 = 2;

fn classify(form: DiagonalForm, parent: Option<usize>, parent_truant: u64) -> EscalationNode {
    let sieve = small_sieve(&form);
    let universal = CRITERION_SET.iter().all(|&p| sieve.represents(p));
    // the smallest missed prime overall, which may lie outside the set
    let truant = if universal { None } else { first_missing_prime(&sieve, &primes_up_to(CRITERION_MAX)) };
    let status = match truant {
        None if has_no_universal_deletion(&form) => Status::Proper,
        None => Status::Improper,
        Some(t) if t > parent_truant => Status::Advanced,
        Some(_) => Status::Stuck,
    };
    EscalationNode { form, truant, status, parent, children: Vec::new(), repetition: None }
}

impl EscalationTree {
    pub fn rank_nodes(&self, rank: usize) -> impl Iterator<Item = &EscalationNode> {
        self.nodes.iter().filter(move |n| n.form.rank() == rank)
    }

    /// Proper prime-universal forms of the given rank, ascending.
    pub fn proper(&self, rank: usize) -> Vec<DiagonalForm> {
        self.rank_nodes(rank).filter(|n| n.status == Status::Proper).map(|n| n.form.clone()).collect()
    }

    /// Forms of the given rank that are not prime-universal, ascending.
    pub fn frontier(&self, rank: usize) -> Vec<DiagonalForm> {
        self.rank_nodes(rank).filter(|n| !n.status.is_prime_universal()).map(|n| n.form.clone()).collect()
    }

    /// Nested JSON: each node carries its children inline.
    pub fn to_json(&self) -> serde_json::Value {
        fn node(t: &EscalationTree, i: usize) -> serde_json::Value {
            let n = &t.nodes[i];
            serde_json::json!({
                "form": n.form.coeffs(),
                "truant": n.truant,
                "status": n.status.label(),
                "repetition": n.repetition,
                "children": n.children.iter().map(|&c| node(t, c)).collect::<Vec<_>>(),
            })
        }
        let roots: Vec<_> = (0..self.nodes.len()).filter(|&i| self.nodes[i].parent.is_none()).map(|i| node(self, i)).collect();
        serde_json::json!({ "max_rank": self.max_rank, "complete": self.complete, "roots": roots })
    }

    /// Graphviz description of the tree.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph escalation {\n  node [shape=box, fontname=monospace];\n");
        for (i, n) in self.nodes.iter().enumerate() {
            let truant = n.truant.map_or(String::new(), |t| format!(" [{t}]"));
            let style = match n.status {
                Status::Proper => ", style=filled, fillcolor=palegreen",
                Status::Improper => ", style=dashed",
                _ => "",
            };
            let _ = writeln!(s, "  n{i} [label=\"<{}>{truant} {}\"{style}];", n.form, n.status.label());
            if let Some(p) = n.parent {
                let _ = writeln!(s, "  n{p} -> n{i};");
            }
        }
        s.push_str("}\n");
        s
    }

    /// Cross-checks every node against a full prime audit up to `bound`.
    /// Sieves are built incrementally from the parent's.
    pub fn audit(&self, bound: u64) -> Result<AuditReport, EscalateError> {
        if bound < CRITERION_MAX {
            return Err(EscalateError::BoundTooSmall(bound));
        }
        let primes = primes_up_to(bound);
        let mut sieves: Vec<Option<RepresentationSieve>> = vec![None; self.nodes.len()];
        let mut failures = Vec::new();
        let max_rank = self.nodes.iter().map(|n| n.form.rank()).max().unwrap_or(0);
        for rank in 1..=max_rank {
            let ids: Vec<usize> = (0..self.nodes.len()).filter(|&i| self.nodes[i].form.rank() == rank).collect();
            let built: Vec<(usize, RepresentationSieve)> = ids
                .par_iter()
                .map(|&i| {
                    let n = &self.nodes[i];
                    let s = match n.parent.and_then(|p| sieves[p].as_ref()) {
                        Some(ps) => ps.extended(*n.form.coeffs().last().expect("nonempty")),
                        None => build_sieve(&n.form.to_gram(), bound)?,
                    };
                    Ok((i, s))
                })
                .collect::<Result<_, EscalateError>>()?;
            for (i, s) in built {
                let n = &self.nodes[i];
                let miss = first_missing_prime(&s, &primes);
                if miss != n.truant {
                    failures.push(AuditFailure { form: n.form.clone(), truant: n.truant, audit_miss: miss });
                }
                if !n.children.is_empty() {
                    sieves[i] = Some(s);
                }
            }
            // ranks below this one are no longer needed
            for s in sieves.iter_mut().zip(&self.nodes).filter(|(_, n)| n.form.rank() + 1 < rank) {
                *s.0 = None;
            }
        }
        Ok(AuditReport { bound, nodes: self.nodes.len(), failures })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuditFailure {
    pub form: DiagonalForm,
    pub truant: Option<u64>,
    pub audit_miss: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuditReport {
    pub bound: u64,
    pub nodes: usize,
    pub failures: Vec<AuditFailure>,
}

impl AuditReport {
    pub fn consistent(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Breadth-first escalation from the empty form up to `max_rank`.
///
/// Every node that is not prime-universal is expanded by each `a` with
/// `a_n <= a <= truant`. A proper form lists its coefficients ascending and
/// each prefix misses its truant, which some later coefficient must cover,
/// so every proper form of rank `<= max_rank` appears in the tree.
pub fn escalate_tree(max_rank: usize, node_cap: usize) -> Result<EscalationTree, EscalateError> {
    if !(1..=MAX_RANK).contains(&max_rank) {
        return Err(EscalateError::Rank(max_rank));
    }
    let mut tree = EscalationTree { max_rank, nodes: Vec::new(), complete: false };
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    // (parent index, parent form, parent truant) for the rank being built
    let mut open: Vec<(Option<usize>, Option<DiagonalForm>, u64)> = vec![(None, None, EMPTY_TRUANT)];
    for rank in 1..=max_rank {
        let mut layer: Vec<EscalationNode> = open
            .par_iter()
            .flat_map_iter(|(parent, form, truant)| {
                let lo = form.as_ref().map_or(1, DiagonalForm::max);
                (lo..=*truant).map(move |a| {
                    let child = match form {
                        Some(f) => f.with(a).expect("positive coefficient"),
                        None => DiagonalForm::new(vec![a]).expect("positive coefficient"),
                    };
                    let mut node = classify(child, *parent, *truant);
                    if let (Status::Stuck, Some(f), true) = (node.status, form, rank < max_rank) {
                        node.repetition = resolve_repetition(f, a, *truant).ok();
                    }
                    node
                })
            })
            .collect();
        layer.sort_by(|a, b| a.form.coeffs().cmp(b.form.coeffs()));
        layer.retain(|n| seen.insert(n.form.coeffs().to_vec()));
        if tree.nodes.len() + layer.len() > node_cap {
            return Err(EscalateError::NodeCap { cap: node_cap, rank, partial: Box::new(tree) });
        }
        open.clear();
        for node in layer {
            let id = tree.nodes.len();
            if let Some(p) = node.parent {
                tree.nodes[p].children.push(id);
            }
            if let (Some(t), true) = (node.truant, rank < max_rank) {
                open.push((Some(id), Some(node.form.clone()), t));
            }
            tree.nodes.push(node);
        }
    }
    tree.complete = true;
    Ok(tree)
}

impl fmt::Display for EscalationTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for rank in 1..=self.max_rank {
            let proper = self.proper(rank);
            let list: Vec<String> = proper.iter().map(|p| format!("<{p}>")).collect();
            writeln!(f, "rank {rank}: {} nodes, {} proper: {}", self.rank_nodes(rank).count(), proper.len(), list.join(" "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(c: &[u64]) -> DiagonalForm {
        DiagonalForm::new(c.to_vec()).unwrap()
    }

    #[test]
    fn truants() {
        assert_eq!(prime_truant(&d(&[2]), 100).unwrap(), Some(3));
        assert_eq!(prime_truant(&d(&[1, 1, 2]), 10_000).unwrap(), None);
        assert!(prime_truant(&d(&[1]), 10).is_err());
    }

    #[test]
    fn criterion_and_verdict() {
        assert_eq!(criterion_check(&d(&[1, 1, 1, 1])), (true, vec![]));
        let v = is_prime_universal(&d(&[1]), 100).unwrap();
        assert!(!v.prime_universal);
        assert_eq!(v.audit_miss, Some(2));
        assert!(!v.contradiction);
    }

    #[test]
    fn properness_requires_universality() {
        assert!(matches!(is_proper(&d(&[2, 3])), Err(EscalateError::NotPrimeUniversal(..))));
        assert!(!is_proper(&d(&[1, 1, 2, 5])).unwrap());
        assert!(is_proper(&d(&[1, 2, 5])).unwrap());
    }

    #[test]
    fn repetition_outcomes() {
        // 3 = 1 + 2, so one extra copy of 2 already helps <1>
        assert_eq!(resolve_repetition(&d(&[1]), 2, 3).unwrap(), Repetition::KFound(1));
        match resolve_repetition(&d(&[2, 2, 3]), 8, 17).unwrap() {
            Repetition::Resolved { kept, .. } => assert_eq!(kept, vec![17]),
            r => panic!("{r:?}"),
        }
    }

    #[test]
    fn small_tree() {
        let t = escalate_tree(3, DEFAULT_NODE_CAP).unwrap();
        assert!(t.proper(1).is_empty() && t.proper(2).is_empty());
        let three: Vec<Vec<u64>> = t.proper(3).iter().map(|f| f.coeffs().to_vec()).collect();
        assert_eq!(three, vec![vec![1, 1, 2], vec![1, 1, 3], vec![1, 2, 3], vec![1, 2, 4], vec![1, 2, 5]]);
        assert!(matches!(escalate_tree(3, 5), Err(EscalateError::NodeCap { .. })));
        assert!(t.to_dot().starts_with("digraph"));
    }
}
