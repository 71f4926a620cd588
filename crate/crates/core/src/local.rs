//! p-adic representability and genus-level representation.
//!
//! A primitive vector `x` with `Q(x) ≡ m (mod p^(2v+1))`, where
//! `v = min_i ord_p((2Mx)_i)`, lifts to a p-adic solution of `Q(x) = m`.
//! Conversely every primitive p-adic solution has `v <= ord_p(2 det M)`,
//! since `adj(M) M x = det(M) x`. Moreover `Q(x + p^(v+1) y) ≡ Q(x)
//! (mod p^(2v+1))`, so the test only needs `x mod p^(v+1)`. The search
//! therefore walks `x mod p^j` digit by digit and stops as soon as the
//! gradient order becomes visible.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use crate::forms::{parse_form, Form, GramForm};
use crate::sieve::represents_direct;

fn ord(p: u64, mut n: i128) -> u32 {
    if n == 0 {
        return u32::MAX;
    }
    let p = p as i128;
    let mut k = 0;
    while n % p == 0 {
        n /= p;
        k += 1;
    }
    k
}

/// Local representation oracle for one form at one prime. Primitive
/// answers depend only on `m mod p^(2δ+1)`, `δ = ord_p(2 det M)`, and
/// are cached.
#[derive(Debug)]
pub struct LocalOracle {
    form: GramForm,
    p: u64,
    modulus: u128,
    cache: Mutex<HashMap<u128, bool>>,
}

impl LocalOracle {
    pub fn new(form: &GramForm, p: u64) -> Self {
        assert!(crate::primes::is_prime(p), "{p} is not prime");
        let delta = ord(p, 2 * form.determinant());
        let modulus = (p as u128).pow(2 * delta + 1);
        LocalOracle { form: form.clone(), p, modulus, cache: Mutex::new(HashMap::new()) }
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    /// Whether `n` is represented over the p-adic integers.
    pub fn represents(&self, n: u64) -> bool {
        if n == 0 {
            return true;
        }
        let p2 = self.p * self.p;
        let mut m = n;
        loop {
            if self.primitive(m) {
                return true;
            }
            if m % p2 != 0 {
                return false;
            }
            m /= p2;
        }
    }

    fn primitive(&self, m: u64) -> bool {
        let key = m as u128 % self.modulus;
        if let Some(&hit) = self.cache.lock().unwrap().get(&key) {
            return hit;
        }
        let found = self.search(key);
        self.cache.lock().unwrap().insert(key, found);
        found
    }

    fn search(&self, m: u128) -> bool {
        let dim = self.form.dim();
        let p = self.p as i128;
        // level 1: every nonzero residue vector mod p
        let mut frontier: Vec<Vec<i128>> = Vec::new();
        let mut x = vec![0i128; dim];
        loop {
            let mut i = 0;
            while i < dim {
                x[i] += 1;
                if x[i] < p {
                    break;
                }
                x[i] = 0;
                i += 1;
            }
            if i == dim {
                break;
            }
            frontier.push(x.clone());
        }
        let mut pj = p; // current precision p^j
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for x in frontier {
                match self.classify(&x, m, pj) {
                    Step::Lifts => return true,
                    Step::Dead => {}
                    Step::Deeper => {
                        // all lifts x + pj * y, y mod p
                        let mut y = vec![0i128; dim];
                        loop {
                            next.push(x.iter().zip(&y).map(|(a, b)| a + pj * b).collect());
                            let mut i = 0;
                            while i < dim {
                                y[i] += 1;
                                if y[i] < p {
                                    break;
                                }
                                y[i] = 0;
                                i += 1;
                            }
                            if i == dim {
                                break;
                            }
                        }
                    }
                }
            }
            frontier = next;
            pj *= p;
        }
        false
    }

    fn classify(&self, x: &[i128], m: u128, pj: i128) -> Step {
        let dim = self.form.dim();
        let q = self.form.evaluate(&x.iter().map(|&v| v as i64).collect::<Vec<_>>()).unwrap() as i128;
        let m = m as i128;
        if (q - m).rem_euclid(pj) != 0 {
            return Step::Dead;
        }
        let mut v = u32::MAX;
        for i in 0..dim {
            let g: i128 = (0..dim).map(|k| 2 * self.form.entry(i, k) as i128 * x[k]).sum();
            if g.rem_euclid(pj) != 0 {
                v = v.min(ord(self.p, g));
            }
        }
        if v == u32::MAX {
            return Step::Deeper;
        }
        // v < j where pj = p^j; the value modulo p^(2v+1) is fixed by x mod p^(v+1)
        let target = (self.p as i128).pow(2 * v + 1);
        if (q - m).rem_euclid(target) == 0 {
            Step::Lifts
        } else {
            Step::Dead
        }
    }
}

enum Step {
    Lifts,
    Dead,
    Deeper,
}

/// Whether `n` is represented by `form` over the p-adic integers.
pub fn local_represents(form: &GramForm, n: u64, p: u64) -> bool {
    LocalOracle::new(form, p).represents(n)
}

/// Primes dividing `2 det M`: the only places where a positive ternary
/// can fail to represent a positive integer locally.
pub fn bad_primes(form: &GramForm) -> Vec<u64> {
    let d = (2 * form.determinant()) as u64;
    crate::primes::primes_up_to(d).into_iter().filter(|p| d % p == 0).collect()
}

/// Whether `n` is represented by `form` at every prime dividing `2 det`.
pub fn everywhere_locally(oracles: &[LocalOracle], n: u64) -> bool {
    oracles.iter().all(|o| o.represents(n))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenusData {
    pub representative: GramForm,
    pub mates: Vec<GramForm>,
    pub class_number: usize,
    pub note: Option<String>,
}

impl GenusData {
    pub fn members(&self) -> impl Iterator<Item = &GramForm> {
        std::iter::once(&self.representative).chain(self.mates.iter())
    }
}

/// Whether some class of the genus represents `n`.
pub fn genus_represents(g: &GenusData, n: u64) -> bool {
    n == 0 || g.members().any(|f| represents_direct(f, n).is_some())
}

const GENERA: &str = include_str!("../data/genera.txt");

fn gram(text: &str) -> Result<GramForm, String> {
    parse_form(text).map(Form::into_gram).map_err(|e| format!("{text}: {e}"))
}

/// Parses the genus table format shipped in `data/genera.txt`.
pub fn parse_genera(text: &str) -> Result<Vec<GenusData>, String> {
    let mut out: Vec<GenusData> = Vec::new();
    let mut declared: Vec<Option<usize>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
        let rest = rest.trim();
        let ctx = |e: String| format!("line {}: {e}", lineno + 1);
        if key == "genus" {
            out.push(GenusData { representative: gram(rest).map_err(ctx)?, mates: vec![], class_number: 1, note: None });
            declared.push(None);
            continue;
        }
        let cur = out.last_mut().ok_or_else(|| ctx(format!("{key} before any genus record")))?;
        match key {
            "mate" => cur.mates.push(gram(rest).map_err(ctx)?),
            "class-number" => *declared.last_mut().unwrap() = Some(rest.parse().map_err(|_| ctx(format!("bad class number {rest}")))?),
            "note" => cur.note = Some(rest.to_string()),
            _ => return Err(ctx(format!("unknown key {key}"))),
        }
    }
    for (g, h) in out.iter_mut().zip(declared) {
        let h = h.ok_or_else(|| format!("genus of {} has no class-number line", g.representative))?;
        if h != 1 + g.mates.len() {
            return Err(format!("genus of {}: class number {h} but {} mates", g.representative, g.mates.len()));
        }
        let det = g.representative.determinant();
        if let Some(m) = g.mates.iter().find(|m| m.determinant() != det) {
            return Err(format!("mate {m} of {} has a different determinant", g.representative));
        }
        g.class_number = h;
    }
    Ok(out)
}

/// The bundled genus table.
pub fn genera() -> &'static [GenusData] {
    static TABLE: OnceLock<Vec<GenusData>> = OnceLock::new();
    TABLE.get_or_init(|| parse_genera(GENERA).expect("bundled genus table is well formed"))
}

/// Genus record whose representative is `form`.
pub fn genus_of(form: &GramForm) -> Option<&'static GenusData> {
    genera().iter().find(|g| &g.representative == form)
}
