//! Keyed text format for proof scripts and transfer claims.
//!
//! ```text
//! script <name>
//! form 2,3,4,5
//! target 2,3,4
//! modulus 64
//! subtract 5 1              # coefficient, square factor; one line per term
//! base 127
//! exceptions 17             # optional
//! d 1 when 1,3 mod 8        # d tuple, comma separated per term
//! d 3 otherwise
//! search 0..7               # optional, one range per term
//! safe even
//! safe require 3,11 mod 32
//! safe forbid 0 mod 3
//! safe coprime 35
//! safe exclude 4^s(16t+10)
//! note <free text>
//! ```
//!
//! `#` starts a comment; a file may hold several scripts.

use crate::forms::{parse_form, DiagonalForm, Form, GramForm};
use crate::sieve::{ExcludedFamily, ResidueCondition};

use super::{MateTransferClaim, ProofScript, Rule, SafeClause, SafeSet, Term};

fn num(s: &str) -> Result<u64, String> {
    s.trim().parse().map_err(|_| format!("expected a nonnegative integer, got {s:?}"))
}

fn list(s: &str) -> Result<Vec<u64>, String> {
    s.split(',').map(num).collect()
}

fn gram(s: &str) -> Result<GramForm, String> {
    parse_form(s).map(Form::into_gram).map_err(|e| format!("{s}: {e}"))
}

/// `"1,3 mod 8"`.
fn residues_mod(s: &str) -> Result<(Vec<u64>, u64), String> {
    let (r, m) = s.split_once(" mod ").ok_or_else(|| format!("expected '<residues> mod <m>', got {s:?}"))?;
    let m = num(m)?;
    if m == 0 {
        return Err("modulus 0".into());
    }
    Ok((list(r)?, m))
}

#[derive(Default)]
struct Draft {
    name: String,
    form: Option<DiagonalForm>,
    target: Option<GramForm>,
    modulus: Option<u64>,
    terms: Vec<Term>,
    base: Option<u64>,
    exceptions: Vec<u64>,
    rules: Vec<Rule>,
    search: Option<Vec<(u64, u64)>>,
    safe: Vec<SafeClause>,
    notes: Vec<String>,
}

impl Draft {
    fn finish(self) -> Result<ProofScript, String> {
        let missing = |k: &str| format!("script {}: missing '{k}'", self.name);
        let script = ProofScript {
            form: self.form.clone().ok_or_else(|| missing("form"))?,
            target: self.target.clone().ok_or_else(|| missing("target"))?,
            modulus: self.modulus.ok_or_else(|| missing("modulus"))?,
            base: self.base.ok_or_else(|| missing("base"))?,
            name: self.name,
            terms: self.terms,
            exceptions: self.exceptions,
            rules: self.rules,
            search: self.search,
            safe: SafeSet { clauses: self.safe },
            notes: self.notes,
        };
        let k = script.terms.len();
        if script.rules.iter().any(|r| r.d.len() != k) || script.search.as_ref().is_some_and(|s| s.len() != k) {
            return Err(format!("script {}: every d tuple and search must have {k} entries", script.name));
        }
        if script.modulus == 0 {
            return Err(format!("script {}: modulus 0", script.name));
        }
        Ok(script)
    }
}

fn parse_rule(rest: &str) -> Result<Rule, String> {
    let (tuple, cond) = if let Some(t) = rest.strip_suffix(" otherwise") {
        (t, None)
    } else {
        let (t, c) = rest.split_once(" when ").ok_or_else(|| format!("rule needs 'when' or 'otherwise': {rest:?}"))?;
        let (r, m) = residues_mod(c)?;
        (t, Some(ResidueCondition::new(m, &r)))
    };
    Ok(Rule { d: list(tuple)?, when: cond })
}

fn parse_safe(rest: &str) -> Result<SafeClause, String> {
    let (kind, arg) = rest.split_once(' ').unwrap_or((rest, ""));
    Ok(match kind {
        "even" => SafeClause::Require { modulus: 2, residues: vec![0] },
        "require" | "forbid" => {
            let (r, m) = residues_mod(arg)?;
            let residues = ResidueCondition::new(m, &r).residues;
            if kind == "require" {
                SafeClause::Require { modulus: m, residues }
            } else {
                SafeClause::Forbid { modulus: m, residues }
            }
        }
        "coprime" => SafeClause::Coprime { m: num(arg)? },
        "exclude" => SafeClause::Exclude { family: arg.parse::<ExcludedFamily>()? },
        _ => return Err(format!("unknown safe clause {kind:?}")),
    })
}

fn parse_range(s: &str) -> Result<(u64, u64), String> {
    let (lo, hi) = s.split_once("..").ok_or_else(|| format!("expected lo..hi, got {s:?}"))?;
    let (lo, hi) = (num(lo)?, num(hi)?);
    if lo > hi {
        return Err(format!("empty range {s}"));
    }
    Ok((lo, hi))
}

fn strip_comment(line: &str) -> &str {
    line.split_once('#').map_or(line, |(a, _)| a).trim()
}

pub fn parse_scripts(text: &str) -> Result<Vec<ProofScript>, String> {
    let mut out = Vec::new();
    let mut cur: Option<Draft> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let ctx = |e: String| format!("line {}: {e}", i + 1);
        let (key, rest) = line.split_once(' ').map_or((line, ""), |(k, r)| (k, r.trim()));
        if key == "script" {
            if let Some(d) = cur.take() {
                out.push(d.finish()?);
            }
            if rest.is_empty() {
                return Err(ctx("script needs a name".into()));
            }
            cur = Some(Draft { name: rest.to_string(), ..Draft::default() });
            continue;
        }
        let d = cur.as_mut().ok_or_else(|| ctx(format!("'{key}' before any 'script' line")))?;
        match key {
            "form" => {
                let f = DiagonalForm::new(list(rest).map_err(ctx)?).map_err(|e| ctx(e.to_string()))?;
                d.form = Some(f);
            }
            "target" => d.target = Some(gram(rest).map_err(ctx)?),
            "modulus" => d.modulus = Some(num(rest).map_err(ctx)?),
            "subtract" => {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                let [c, k] = parts[..] else {
                    return Err(ctx(format!("subtract takes two numbers: {rest:?}")));
                };
                d.terms.push(Term { coefficient: num(c).map_err(ctx)?, square: num(k).map_err(ctx)? });
            }
            "base" => d.base = Some(num(rest).map_err(ctx)?),
            "exceptions" => d.exceptions = if rest.is_empty() { vec![] } else { list(rest).map_err(ctx)? },
            "d" => d.rules.push(parse_rule(rest).map_err(ctx)?),
            "search" => d.search = Some(rest.split_whitespace().map(parse_range).collect::<Result<_, _>>().map_err(ctx)?),
            "safe" => d.safe.push(parse_safe(rest).map_err(ctx)?),
            "note" => d.notes.push(rest.to_string()),
            _ => return Err(ctx(format!("unknown key {key:?}"))),
        }
    }
    if let Some(d) = cur {
        out.push(d.finish()?);
    }
    Ok(out)
}

/// Lines `transfer <target> from <mate> when <residues> mod <m>`.
pub fn parse_transfers(text: &str) -> Result<Vec<MateTransferClaim>, String> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let ctx = |e: String| format!("line {}: {e}", i + 1);
        let rest = line.strip_prefix("transfer ").ok_or_else(|| ctx(format!("expected 'transfer', got {line:?}")))?;
        let (target, rest) = rest.split_once(" from ").ok_or_else(|| ctx("missing 'from'".into()))?;
        let (mate, cond) = rest.split_once(" when ").ok_or_else(|| ctx("missing 'when'".into()))?;
        let (r, m) = residues_mod(cond).map_err(ctx)?;
        out.push(MateTransferClaim {
            target: gram(target.trim()).map_err(ctx)?,
            mate: gram(mate.trim()).map_err(ctx)?,
            condition: ResidueCondition::new(m, &r),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_record() {
        let text = "\
# comment
script demo
form 2,3,4,5
target 2,3,4
modulus 64
subtract 5 1
base 127
d 1 when 1,3 mod 8   # trailing comment
d 5 when 13,45 mod 64
d 3 otherwise
safe even
safe exclude 4^s(16t+10)
note hand table
";
        let s = parse_scripts(text).unwrap();
        assert_eq!(s.len(), 1);
        let s = &s[0];
        assert_eq!(s.name, "demo");
        assert_eq!(s.terms, vec![Term { coefficient: 5, square: 1 }]);
        assert_eq!(s.rules.len(), 3);
        assert_eq!(s.rules[2].when, None);
        assert_eq!(s.safe.clauses.len(), 2);
        assert!(s.exceptions.is_empty());
    }

    #[test]
    fn errors() {
        assert!(parse_scripts("form 1,1,1\n").is_err());
        assert!(parse_scripts("script a\nform 1,1,1\n").is_err());
        assert!(parse_scripts("script a\nform 1\ntarget 1\nmodulus 2\nbase 3\nd 1,1 otherwise\n").is_err());
        assert!(parse_scripts("script a\nform 1\ntarget 1\nmodulus 2\nbase 3\nsafe maybe\n").is_err());
        assert!(parse_scripts("script a\nform 1\ntarget 1\nmodulus 2\nbase 3\nsearch 4..1\n").is_err());
    }

    #[test]
    fn transfers() {
        let t = parse_transfers("transfer 3,5,21 from [[5,0,0],[0,6,3],[0,3,12]] when 1 mod 4\n").unwrap();
        assert_eq!(t[0].condition, ResidueCondition::new(4, &[1]));
        assert!(parse_transfers("transfer 3,5,21 when 1 mod 4\n").is_err());
    }
}
