use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qpu::escalate::{self, Repetition};
use qpu::goodvec::{self, TransferTable};
use qpu::local::genus_of;
use qpu::prooflib::{self, ProofScript};
use qpu::{audit, build_sieve, parse_form, represents_direct, DiagonalForm, Form, GramForm, RepresentationSieve};
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "qpu", version, about = "Representation of primes by diagonal quadratic forms")]
struct Cli {
    /// Write a JSON certificate to this path.
    #[arg(long, global = true, value_name = "PATH")]
    json: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, env = "QPU_THREADS", default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Serialize)]
#[serde(untagged)]
enum Command {
    /// Find a vector x with Q(x) = n.
    Represents(RepresentsArgs),
    /// Build, export or import a representation sieve.
    #[command(subcommand)]
    Sieve(SieveCommand),
    /// Smallest prime up to the bound that the form misses.
    Truant(TruantArgs),
    /// Check the finite prime criterion.
    Criterion(FormArgs),
    /// Prime-universal with no prime-universal proper subform.
    Proper(FormArgs),
    /// Build the escalation tree of prime-universal forms.
    Escalate(EscalateArgs),
    /// Decide g ≺_{d,a} f and list the killing matrices.
    Goodvec(GoodvecArgs),
    /// Residues a mod d for which every genus mate transfers to f.
    GoodResidues(GoodResiduesArgs),
    /// Verify bundled covering-congruence scripts.
    ProofScript(ProofScriptArgs),
    /// Check the bundled mate transfer claims up to a bound.
    MateTransfer(BoundArgs),
    /// Run the acceptance checks.
    VerifyPaper(VerifyArgs),
}

#[derive(Args, Serialize)]
struct RepresentsArgs {
    #[arg(long)]
    form: String,
    #[arg(long)]
    n: u64,
}

#[derive(Subcommand, Serialize)]
#[serde(untagged)]
enum SieveCommand {
    /// Build a sieve and print a summary.
    Build(SieveBuildArgs),
    /// Build a sieve and write it to a file.
    Export(SieveExportArgs),
    /// Load a sieve file and query it.
    Import(SieveImportArgs),
}

#[derive(Args, Serialize)]
struct SieveBuildArgs {
    #[arg(long)]
    form: String,
    #[arg(long)]
    bound: u64,
}

#[derive(Args, Serialize)]
struct SieveExportArgs {
    #[arg(long)]
    form: String,
    #[arg(long)]
    bound: u64,
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct SieveImportArgs {
    /// Form the file was built for; it is not stored in the file.
    #[arg(long)]
    form: String,
    #[arg(long, value_name = "PATH")]
    file: PathBuf,
    #[arg(long)]
    n: Option<u64>,
}

#[derive(Args, Serialize)]
struct TruantArgs {
    #[arg(long)]
    form: String,
    #[arg(long, default_value_t = escalate::AUDIT_BOUND)]
    bound: u64,
}

#[derive(Args, Serialize)]
struct FormArgs {
    #[arg(long)]
    form: String,
}

#[derive(Args, Serialize)]
struct EscalateArgs {
    #[arg(long, default_value_t = 6)]
    max_rank: usize,
    #[arg(long, default_value_t = escalate::DEFAULT_NODE_CAP)]
    node_cap: usize,
    /// Also audit every node against all primes up to this bound.
    #[arg(long)]
    bound: Option<u64>,
    /// Write the tree as nested JSON.
    #[arg(long, value_name = "PATH")]
    tree: Option<PathBuf>,
    /// Write the tree in Graphviz format.
    #[arg(long, value_name = "PATH")]
    dot: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct GoodvecArgs {
    #[arg(long)]
    f: String,
    #[arg(long)]
    g: String,
    #[arg(long)]
    d: u64,
    #[arg(long)]
    a: u64,
}

#[derive(Args, Serialize)]
struct GoodResiduesArgs {
    #[arg(long)]
    f: String,
    #[arg(long)]
    d: u64,
    /// Mates to use instead of the bundled genus table (repeatable).
    #[arg(long)]
    g: Vec<String>,
}

#[derive(Args, Serialize)]
struct ProofScriptArgs {
    /// Script names; all bundled scripts when empty.
    names: Vec<String>,
    #[arg(long, default_value_t = audit::SCRIPT_BOUND)]
    bound: u64,
    /// List the bundled scripts and exit.
    #[arg(long)]
    list: bool,
}

#[derive(Args, Serialize)]
struct BoundArgs {
    #[arg(long, default_value_t = audit::TRANSFER_BOUND)]
    bound: u64,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Table {
    #[value(name = "1")]
    Rank56,
    #[value(name = "2")]
    Exceptions,
    Candidates,
    Truants,
}

#[derive(Args, Serialize)]
struct VerifyArgs {
    /// Run every check.
    #[arg(long)]
    all: bool,
    /// Run one numbered check (repeatable).
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=11))]
    criterion: Vec<u8>,
    /// Run the checks behind one published table.
    #[arg(long)]
    table: Option<Table>,
}

#[derive(Serialize)]
struct Certificate {
    command: String,
    inputs: Value,
    result: Value,
    witnesses: Vec<Value>,
    tool_version: &'static str,
}

/// What a subcommand produced.
struct Report {
    ok: bool,
    lines: Vec<String>,
    result: Value,
    witnesses: Vec<Value>,
}

impl Report {
    fn new(ok: bool, result: Value) -> Self {
        Report { ok, lines: Vec::new(), result, witnesses: Vec::new() }
    }

    fn line(mut self, s: impl Into<String>) -> Self {
        self.lines.push(s.into());
        self
    }
}

type Outcome = Result<Report, String>;

fn gram(text: &str) -> Result<GramForm, String> {
    parse_form(text).map(Form::into_gram).map_err(|e| e.to_string())
}

fn diagonal(text: &str) -> Result<DiagonalForm, String> {
    match parse_form(text).map_err(|e| e.to_string())? {
        Form::Diagonal(f) => Ok(f),
        Form::Gram(g) => g.as_diagonal().ok_or_else(|| format!("{g} is not diagonal")),
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn write_file(path: &PathBuf, text: &str) -> Result<(), String> {
    std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn represents(a: &RepresentsArgs) -> Outcome {
    let form = gram(&a.form)?;
    Ok(match represents_direct(&form, a.n) {
        Some(v) => Report { witnesses: vec![json!(v.witness)], ..Report::new(true, json!({ "represented": true })) }
            .line(format!("{} = {form} at {:?}", a.n, v.witness)),
        None => Report::new(false, json!({ "represented": false })).line(format!("{form} does not represent {}", a.n)),
    })
}

fn sieve_summary(s: &RepresentationSieve) -> (Value, String) {
    let count = s.bits().count_ones();
    let missing: Vec<u64> = s.missing().take(20).collect();
    let line = format!("{}: {count} of 0..={} represented, first missing {missing:?}", s.form(), s.bound());
    (json!({ "form": s.form().to_string(), "bound": s.bound(), "represented": count, "first_missing": missing }), line)
}

fn sieve(c: &SieveCommand) -> Outcome {
    match c {
        SieveCommand::Build(a) => {
            let s = build_sieve(&gram(&a.form)?, a.bound).map_err(err)?;
            let (result, line) = sieve_summary(&s);
            Ok(Report::new(true, result).line(line))
        }
        SieveCommand::Export(a) => {
            let s = build_sieve(&gram(&a.form)?, a.bound).map_err(err)?;
            let file = File::create(&a.out).map_err(|e| format!("{}: {e}", a.out.display()))?;
            let mut w = BufWriter::new(file);
            s.write_to(&mut w).map_err(err)?;
            w.flush().map_err(err)?;
            let (result, line) = sieve_summary(&s);
            Ok(Report::new(true, result).line(line).line(format!("wrote {}", a.out.display())))
        }
        SieveCommand::Import(a) => {
            let file = File::open(&a.file).map_err(|e| format!("{}: {e}", a.file.display()))?;
            let s = RepresentationSieve::read_from(gram(&a.form)?, BufReader::new(file)).map_err(err)?;
            let (mut result, line) = sieve_summary(&s);
            let mut report = Report::new(true, Value::Null).line(line);
            if let Some(n) = a.n {
                if n > s.bound() {
                    return Err(format!("{n} is beyond the sieve bound {}", s.bound()));
                }
                let hit = s.represents(n);
                result["n"] = json!(n);
                result["represented"] = json!(hit);
                report.ok = hit;
                report = report.line(format!("{n}: {}", if hit { "represented" } else { "not represented" }));
            }
            report.result = result;
            Ok(report)
        }
    }
}

fn truant(a: &TruantArgs) -> Outcome {
    let f = diagonal(&a.form)?;
    let t = escalate::prime_truant(&f, a.bound).map_err(err)?;
    let line = match t {
        Some(p) => p.to_string(),
        None => format!("none up to {}", a.bound),
    };
    Ok(Report::new(t.is_none(), json!({ "truant": t, "bound": a.bound })).line(line))
}

fn criterion(a: &FormArgs) -> Outcome {
    let f = diagonal(&a.form)?;
    let (ok, missed) = escalate::criterion_check(&f);
    let line = if ok {
        "prime-universal (criterion S)".to_string()
    } else {
        format!("not prime-universal: misses {missed:?}")
    };
    let mut r = Report::new(ok, json!({ "prime_universal": ok, "missed": missed, "set": escalate::CRITERION_SET }));
    r.witnesses = missed.iter().map(|&p| json!(p)).collect();
    Ok(r.line(line))
}

fn proper(a: &FormArgs) -> Outcome {
    let f = diagonal(&a.form)?;
    let (universal, missed) = escalate::criterion_check(&f);
    if !universal {
        return Ok(Report::new(false, json!({ "prime_universal": false, "proper": false, "missed": missed }))
            .line(format!("not prime-universal: misses {missed:?}")));
    }
    let ok = escalate::is_proper(&f).map_err(err)?;
    let line = if ok { "proper" } else { "improper: a smaller subform is prime-universal" };
    Ok(Report::new(ok, json!({ "prime_universal": true, "proper": ok })).line(line))
}

fn escalate_cmd(a: &EscalateArgs) -> Outcome {
    let tree = escalate::escalate_tree(a.max_rank, a.node_cap).map_err(err)?;
    if let Some(path) = &a.tree {
        write_file(path, &serde_json::to_string_pretty(&tree.to_json()).map_err(err)?)?;
    }
    if let Some(path) = &a.dot {
        write_file(path, &tree.to_dot())?;
    }
    let by_rank: Vec<Value> = (1..=a.max_rank)
        .map(|r| {
            let proper: Vec<String> = tree.proper(r).iter().map(ToString::to_string).collect();
            json!({ "rank": r, "nodes": tree.rank_nodes(r).count(), "proper": proper })
        })
        .collect();
    let mut result = json!({ "max_rank": a.max_rank, "nodes": tree.nodes.len(), "complete": tree.complete, "ranks": by_rank });
    let mut report = Report::new(tree.complete, Value::Null).line(tree.to_string());
    let stuck: Vec<Value> = tree
        .nodes
        .iter()
        .filter_map(|n| match &n.repetition {
            Some(Repetition::Resolved { candidates, kept }) => {
                Some(json!({ "form": n.form.to_string(), "candidates": candidates, "kept": kept }))
            }
            _ => None,
        })
        .collect();
    report.witnesses = stuck;
    if let Some(bound) = a.bound {
        let audit = tree.audit(bound).map_err(err)?;
        report.ok &= audit.consistent();
        report = report.line(format!("audit to {bound}: {} nodes, {} disagreements", audit.nodes, audit.failures.len()));
        result["audit"] = serde_json::to_value(&audit).map_err(err)?;
    }
    report.result = result;
    Ok(report)
}

fn goodvec_cmd(a: &GoodvecArgs) -> Outcome {
    let (f, g) = (gram(&a.f)?, gram(&a.g)?);
    let cert = goodvec::good_vectors(&f, &g, a.d, a.a).map_err(err)?;
    let ok = cert.holds();
    let mut report = Report::new(
        ok,
        json!({ "precedes": ok, "good": cert.good_count, "total": cert.total_count, "bad": cert.bad }),
    )
    .line(format!("precedes: {ok}"))
    .line(format!("{} of {} coset vectors killed", cert.good_count, cert.total_count));
    if !ok {
        report = report.line(format!("bad vectors: {:?}", cert.bad));
    }
    report.witnesses = cert.witnesses.iter().map(|w| json!({ "vector": w.vector, "matrix": w.matrix })).collect();
    Ok(report)
}

fn good_residues(a: &GoodResiduesArgs) -> Outcome {
    let f = gram(&a.f)?;
    let mates: Vec<GramForm> = if a.g.is_empty() {
        genus_of(&f).ok_or_else(|| format!("no bundled genus record for {f}; pass --g"))?.mates.clone()
    } else {
        a.g.iter().map(|s| gram(s)).collect::<Result<_, _>>()?
    };
    let mut per_mate = Vec::new();
    for m in &mates {
        let table = TransferTable::new(&f, m, a.d).map_err(err)?;
        per_mate.push(json!({ "mate": m.to_string(), "good": table.good_residues() }));
    }
    let set = goodvec::good_residue_set(&f, &mates, a.d).map_err(err)?;
    let names: Vec<String> = mates.iter().map(ToString::to_string).collect();
    let mut report = Report::new(true, json!({ "f": f.to_string(), "d": a.d, "mates": names, "residues": set }))
        .line(format!("{set:?}"));
    report.witnesses = per_mate;
    Ok(report)
}

fn proof_script(a: &ProofScriptArgs) -> Outcome {
    let all = prooflib::bundled_scripts();
    if a.list {
        let names: Vec<&str> = all.iter().map(|s| s.name.as_str()).collect();
        let mut r = Report::new(true, json!({ "scripts": names }));
        r.lines = names.iter().map(|s| s.to_string()).collect();
        return Ok(r);
    }
    let scripts: Vec<ProofScript> = if a.names.is_empty() {
        all
    } else {
        a.names
            .iter()
            .map(|n| all.iter().find(|s| &s.name == n).cloned().ok_or_else(|| format!("unknown script {n}")))
            .collect::<Result<_, _>>()?
    };
    let reports = prooflib::verify_all(&scripts, a.bound).map_err(err)?;
    let ok = reports.iter().all(|r| r.verified());
    let verified = reports.iter().filter(|r| r.verified()).count();
    let mut report = Report::new(ok, json!({ "bound": a.bound, "scripts": reports.len(), "verified": verified }));
    report.lines = reports.iter().map(ToString::to_string).collect();
    report.witnesses = reports.iter().map(|r| serde_json::to_value(r).expect("report serializes")).collect();
    Ok(report)
}

fn mate_transfer(a: &BoundArgs) -> Outcome {
    let mut report = Report::new(true, Value::Null);
    for claim in prooflib::bundled_transfers() {
        let r = prooflib::verify_mate_transfer(&claim, a.bound).map_err(err)?;
        report.ok &= r.verified();
        report.lines.push(format!(
            "{} -> {} on {}: {} checked, {} counterexamples",
            r.mate,
            r.target,
            claim.condition,
            r.checked,
            r.counterexamples.len()
        ));
        report.witnesses.push(serde_json::to_value(&r).map_err(err)?);
    }
    report.result = json!({ "bound": a.bound, "claims": report.witnesses.len() });
    Ok(report)
}

fn verify_paper(a: &VerifyArgs) -> Outcome {
    let mut numbers: Vec<u8> = a.criterion.clone();
    if let Some(t) = a.table {
        numbers.extend_from_slice(match t {
            Table::Rank56 => &[9],
            Table::Exceptions => &[3, 4],
            Table::Candidates => &[1],
            Table::Truants => &[2],
        });
    }
    if a.all {
        numbers = (1..=audit::ALL.len() as u8).collect();
    }
    if numbers.is_empty() {
        return Err("nothing to run: pass --all, --criterion N or --table".into());
    }
    numbers.sort_unstable();
    numbers.dedup();
    let mut report = Report::new(true, Value::Null);
    let mut results = Vec::new();
    for n in numbers {
        let o = audit::ALL[n as usize - 1]();
        // stream progress, the full runs take a while
        println!("{o}");
        report.ok &= o.passed;
        results.push(json!({ "criterion": o.number, "title": o.title, "passed": o.passed, "detail": o.detail, "notes": o.notes }));
    }
    let failed: Vec<u8> = results.iter().filter(|r| r["passed"] == false).map(|r| r["criterion"].as_u64().unwrap() as u8).collect();
    report = report.line(if failed.is_empty() { "all checks passed".to_string() } else { format!("failed: {failed:?}") });
    report.result = json!({ "passed": report.ok, "failed": failed });
    report.witnesses = results;
    Ok(report)
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Represents(_) => "represents",
        Command::Sieve(SieveCommand::Build(_)) => "sieve build",
        Command::Sieve(SieveCommand::Export(_)) => "sieve export",
        Command::Sieve(SieveCommand::Import(_)) => "sieve import",
        Command::Truant(_) => "truant",
        Command::Criterion(_) => "criterion",
        Command::Proper(_) => "proper",
        Command::Escalate(_) => "escalate",
        Command::Goodvec(_) => "goodvec",
        Command::GoodResidues(_) => "good-residues",
        Command::ProofScript(_) => "proof-script",
        Command::MateTransfer(_) => "mate-transfer",
        Command::VerifyPaper(_) => "verify-paper",
    }
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Represents(a) => represents(a),
        Command::Sieve(c) => sieve(c),
        Command::Truant(a) => truant(a),
        Command::Criterion(a) => criterion(a),
        Command::Proper(a) => proper(a),
        Command::Escalate(a) => escalate_cmd(a),
        Command::Goodvec(a) => goodvec_cmd(a),
        Command::GoodResidues(a) => good_residues(a),
        Command::ProofScript(a) => proof_script(a),
        Command::MateTransfer(a) => mate_transfer(a),
        Command::VerifyPaper(a) => verify_paper(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("qpu: {e}");
            return ExitCode::from(2);
        }
    }
    let report = match run(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("qpu: {e}");
            return ExitCode::from(2);
        }
    };
    for line in &report.lines {
        println!("{line}");
    }
    if let Some(path) = &cli.json {
        let cert = Certificate {
            command: command_name(&cli.command).to_string(),
            inputs: serde_json::to_value(&cli.command).expect("arguments serialize"),
            result: report.result,
            witnesses: report.witnesses,
            tool_version: env!("CARGO_PKG_VERSION"),
        };
        let text = serde_json::to_string_pretty(&cert).expect("certificate serializes") + "\n";
        if let Err(e) = write_file(path, &text) {
            eprintln!("qpu: {e}");
            return ExitCode::from(2);
        }
    }
    ExitCode::from(if report.ok { 0 } else { 1 })
}
