//! `fgnet`: translate ReLU networks to automata and decide properties on them.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use fgnet::analysis::{arp_check, msr_check, msr_search, orp_check, AnalysisVerdict, Property};
use fgnet::automaton::{with_state_budget, Stats};
use fgnet::formats::{automaton_from_json, automaton_to_json, word_from_json};
use fgnet::network::network_automaton;
use fgnet::relations;
use fgnet::{eval_exact, Automaton, Network, Rational, UPWord};
use serde_json::{json, Value};

const DOT_LIMIT: usize = 200;

#[derive(Parser)]
#[command(name = "fgnet", version, about = "Exact ReLU network analysis through weak Büchi automata")]
struct Cli {
    /// Print results as one JSON object.
    #[arg(long, global = true)]
    json: bool,

    /// Abort any construction that would exceed this many states (exit code 3).
    #[arg(long, global = true, value_name = "N")]
    max_states: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the automaton of a network.
    Translate {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        stats: bool,
        /// Also write a Graphviz rendering (small automata only).
        #[arg(long, value_name = "FILE")]
        dot: Option<PathBuf>,
    },
    /// Decide an ARP, ORP or MSR property.
    Check {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        prop: PathBuf,
        #[arg(long)]
        witness: bool,
        #[arg(long)]
        stats: bool,
        /// How ORP verdicts map to exit codes.
        #[arg(long, value_enum, default_value_t = Polarity::Proof)]
        polarity: Polarity,
    },
    /// Test whether an automaton accepts a word.
    Member {
        #[arg(long)]
        aut: PathBuf,
        #[arg(long)]
        word: PathBuf,
    },
    /// Decide emptiness of an automaton.
    Empty {
        #[arg(long)]
        aut: PathBuf,
        #[arg(long)]
        witness: bool,
    },
    /// Write a basic relation automaton.
    Relation {
        kind: RelationKind,
        #[arg(long)]
        tracks: usize,
        #[arg(long)]
        i: Option<usize>,
        #[arg(long)]
        j: Option<usize>,
        /// Summand tracks for `add`, comma separated.
        #[arg(long, value_delimiter = ',')]
        inputs: Vec<usize>,
        /// Constant for `mult` and `const`.
        #[arg(long, allow_hyphen_values = true)]
        c: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_name = "FILE")]
        dot: Option<PathBuf>,
    },
    /// Evaluate a network exactly.
    Eval {
        #[arg(long)]
        net: PathBuf,
        /// Comma separated rationals, e.g. "1,-1/3,0.5".
        #[arg(long, allow_hyphen_values = true)]
        input: String,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Polarity {
    /// Exit 0 when the output region is unreachable.
    Proof,
    /// Exit 0 when the output region is reachable.
    Statement,
}

#[derive(Clone, Copy, ValueEnum)]
enum RelationKind {
    Wf,
    Eq,
    Lt,
    Leq,
    Neq,
    Relu,
    Abs,
    Add,
    Mult,
    Const,
}

/// What a command reports besides its exit code.
struct Report {
    ok: bool,
    text: Vec<String>,
    json: Value,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_net(path: &Path) -> Result<Network> {
    Network::from_json(&read(path)?).with_context(|| format!("in {}", path.display()))
}

fn load_aut(path: &Path) -> Result<Automaton> {
    automaton_from_json(&read(path)?).with_context(|| format!("in {}", path.display()))
}

fn list(v: &[Rational]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

fn strings(v: &[Rational]) -> Value {
    v.iter().map(ToString::to_string).collect()
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn stats_json(s: &Stats, build: Duration, check: Duration) -> Value {
    json!({"states": s.states, "transitions": s.transitions, "build_ms": ms(build), "check_ms": ms(check)})
}

fn stats_line(s: &Stats, build: Duration, check: Duration) -> String {
    format!(
        "states {} transitions {} accepting {} build {:.1} ms check {:.1} ms",
        s.states,
        s.transitions,
        s.accepting,
        ms(build),
        ms(check)
    )
}

fn write_dot(a: &Automaton, path: &Path) -> Result<()> {
    if a.states() > DOT_LIMIT {
        bail!("--dot supports at most {DOT_LIMIT} states, automaton has {}", a.states());
    }
    write(path, &a.to_dot())
}

fn translate(net: &Path, out: &Path, stats: bool, dot: Option<&Path>) -> Result<Report> {
    let net = load_net(net)?;
    let start = Instant::now();
    let a = network_automaton(&net)?;
    let build = start.elapsed();
    write(out, &automaton_to_json(&a))?;
    if let Some(p) = dot {
        write_dot(&a, p)?;
    }
    let s = a.stats();
    let mut text = vec![format!("wrote {}", out.display())];
    if stats {
        text.push(stats_line(&s, build, Duration::ZERO));
    }
    Ok(Report { ok: true, text, json: json!({"verdict": "written", "stats": stats_json(&s, build, Duration::ZERO)}) })
}

fn verdict_report(v: &AnalysisVerdict, verdict: &str, ok: bool, witness: bool, stats: bool) -> Report {
    let mut text = vec![verdict.to_string()];
    let mut j = json!({"verdict": verdict, "stats": stats_json(&v.stats, v.build_time, v.check_time)});
    if let Some(w) = &v.witness {
        j["witness_input"] = strings(&w.input);
        j["witness_output"] = strings(&w.output);
        j["witness_word"] = json!(w.word.to_string());
        if witness {
            text.push(format!("input  {}", list(&w.input)));
            text.push(format!("output {}", list(&w.output)));
            text.push(format!("word   {}", w.word));
        }
    }
    if stats {
        text.push(stats_line(&v.stats, v.build_time, v.check_time));
    }
    Report { ok, text, json: j }
}

fn check(net: &Path, prop: &Path, witness: bool, stats: bool, polarity: Polarity) -> Result<Report> {
    let net = load_net(net)?;
    let prop = Property::from_json(&read(prop)?).with_context(|| format!("in {}", prop.display()))?;
    Ok(match prop {
        Property::Arp(p) => {
            let v = arp_check(&net, &p)?;
            verdict_report(&v, if v.holds { "holds" } else { "violated" }, v.holds, witness, stats)
        }
        Property::Msr(p) => {
            let v = msr_check(&net, &p)?;
            verdict_report(&v, if v.holds { "holds" } else { "violated" }, v.holds, witness, stats)
        }
        Property::Orp(p) => {
            let v = orp_check(&net, &p)?;
            let ok = v.holds == (polarity == Polarity::Statement);
            verdict_report(&v, if v.holds { "reachable" } else { "unreachable" }, ok, witness, stats)
        }
        Property::MsrSearch { r, l } => {
            let start = Instant::now();
            let s = msr_search(&net, &r, l)?;
            let elapsed = start.elapsed();
            let subset: Option<Vec<String>> = s.subset.as_ref().map(|v| v.iter().map(ToString::to_string).collect());
            let verdict = if subset.is_some() { "found" } else { "none" };
            let mut text = vec![match &subset {
                Some(v) => format!("found {{{}}}", v.join(", ")),
                None => format!("no sufficient subset of size {l}"),
            }];
            if stats {
                text.push(format!("candidates {} time {:.1} ms", s.candidates, ms(elapsed)));
            }
            let j = json!({"verdict": verdict, "subset": s.subset, "candidates": s.candidates, "check_ms": ms(elapsed)});
            Report { ok: subset.is_some(), text, json: j }
        }
    })
}

fn member(aut: &Path, word: &Path) -> Result<Report> {
    let a = load_aut(aut)?;
    let w: UPWord = word_from_json(&read(word)?).with_context(|| format!("in {}", word.display()))?;
    let ok = a.member(&w)?;
    let verdict = if ok { "accepted" } else { "rejected" };
    Ok(Report { ok, text: vec![verdict.into()], json: json!({"verdict": verdict}) })
}

fn empty(aut: &Path, witness: bool) -> Result<Report> {
    let a = load_aut(aut)?;
    let start = Instant::now();
    let v = a.check();
    let elapsed = start.elapsed();
    let verdict = if v.empty { "empty" } else { "nonempty" };
    let mut text = vec![verdict.to_string()];
    let mut j = json!({"verdict": verdict, "stats": stats_json(&a.stats(), Duration::ZERO, elapsed)});
    if let Some(w) = &v.witness {
        j["witness_word"] = json!(w.to_string());
        if witness {
            text.push(format!("word   {w}"));
            if let Ok(values) = w.decode_tracks() {
                text.push(format!("values {}", list(&values)));
                j["witness_values"] = strings(&values);
            }
        }
    }
    Ok(Report { ok: v.empty, text, json: j })
}

#[allow(clippy::too_many_arguments)]
fn relation(
    kind: RelationKind,
    k: usize,
    i: Option<usize>,
    j: Option<usize>,
    inputs: &[usize],
    c: Option<&str>,
    out: &Path,
    dot: Option<&Path>,
) -> Result<Report> {
    let need = |v: Option<usize>, name: &str| v.with_context(|| format!("--{name} is required for this relation"));
    let constant = || -> Result<Rational> { Ok(c.context("--c is required for this relation")?.parse()?) };
    let a = match kind {
        RelationKind::Wf => relations::wf(k)?,
        RelationKind::Eq => relations::equality(k, need(i, "i")?, need(j, "j")?)?,
        RelationKind::Lt => relations::less_than(k, need(i, "i")?, need(j, "j")?)?,
        RelationKind::Leq => relations::less_equal(k, need(i, "i")?, need(j, "j")?)?,
        RelationKind::Neq => relations::not_equal(k, need(i, "i")?, need(j, "j")?)?,
        RelationKind::Relu => relations::relu(k, need(i, "i")?, need(j, "j")?)?,
        RelationKind::Abs => relations::abs(k, need(i, "i")?, need(j, "j")?)?,
        RelationKind::Add => relations::add(k, need(i, "i")?, inputs)?,
        RelationKind::Mult => relations::mult_const(k, &constant()?, need(i, "i")?, need(j, "j")?)?,
        RelationKind::Const => relations::constant(k, need(i, "i")?, &constant()?)?,
    };
    write(out, &automaton_to_json(&a))?;
    if let Some(p) = dot {
        write_dot(&a, p)?;
    }
    let s = a.stats();
    Ok(Report {
        ok: true,
        text: vec![format!("wrote {} ({} states)", out.display(), s.states)],
        json: json!({"verdict": "written", "stats": stats_json(&s, Duration::ZERO, Duration::ZERO)}),
    })
}

fn eval(net: &Path, input: &str) -> Result<Report> {
    let net = load_net(net)?;
    let x = input.split(',').map(|s| s.trim().parse::<Rational>()).collect::<fgnet::Result<Vec<_>>>()?;
    let y = eval_exact(&net, &x)?;
    Ok(Report { ok: true, text: vec![list(&y)], json: json!({"verdict": "evaluated", "output": strings(&y)}) })
}

fn run(cli: &Cli) -> Result<Report> {
    match &cli.command {
        Command::Translate { net, out, stats, dot } => translate(net, out, *stats, dot.as_deref()),
        Command::Check { net, prop, witness, stats, polarity } => check(net, prop, *witness, *stats, *polarity),
        Command::Member { aut, word } => member(aut, word),
        Command::Empty { aut, witness } => empty(aut, *witness),
        Command::Relation { kind, tracks, i, j, inputs, c, out, dot } => {
            relation(*kind, *tracks, *i, *j, inputs, c.as_deref(), out, dot.as_deref())
        }
        Command::Eval { net, input } => eval(net, input),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match with_state_budget(cli.max_states, || run(&cli)) {
        Ok(report) => {
            if cli.json {
                println!("{}", report.json);
            } else {
                for line in &report.text {
                    println!("{line}");
                }
            }
            ExitCode::from(if report.ok { 0 } else { 1 })
        }
        Err(e) => {
            let budget = e
                .chain()
                .any(|c| matches!(c.downcast_ref::<fgnet::Error>(), Some(fgnet::Error::StateBudget { .. })));
            if cli.json {
                println!("{}", json!({"verdict": "error", "error": format!("{e:#}")}));
            } else {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(if budget { 3 } else { 2 })
        }
    }
}
