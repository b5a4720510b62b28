//! `mddlog`: containment of MDDLog programs and MMSNP sentences from the
//! command line. Exit codes: 0 contained, 1 not contained, 2 error.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use mddlog_core::boolify::{eliminate_constants, strip_answer_vars};
use mddlog_core::driver::{
    brute_contains, contain_mmsnp_with, contain_with, ContainOptions, Decision, EmptinessPath,
    OracleResult, Verdict,
};
use mddlog_core::eval::{ddlog_answers_on, EvalOptions, Structure, GIRTH_INFINITE};
use mddlog_core::mmsnp::{eval_mmsnp, mddlog_to_mmsnp, mmsnp_to_mddlog, MmsnpSentence};
use mddlog_core::simplify::{align_schemas, simplify_pair};
use mddlog_core::textio::{
    parse_instance, parse_mmsnp, parse_program, parse_tiling, render_instance, render_mmsnp,
    render_program,
};
use mddlog_core::tilegen::{gen_canonical_grid, gen_lower_bound, query_program, QueryMode};
use mddlog_core::{Instance, Program};

#[derive(Parser)]
#[command(
    name = "mddlog",
    version,
    about = "Containment for monadic disjunctive Datalog and MMSNP"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct Guards {
    /// Abort evaluation when grounding exceeds this many clauses.
    #[arg(long, default_value_t = EvalOptions::default().max_ground_clauses)]
    max_ground_clauses: u64,
}

impl Guards {
    fn eval(self) -> EvalOptions {
        EvalOptions {
            max_ground_clauses: self.max_ground_clauses,
        }
    }
}

#[derive(Args)]
struct Record {
    /// Print a JSON verdict record instead of the bare verdict.
    #[arg(long)]
    json: bool,
    /// Leave `timing_ms` null so records of repeated runs compare equal.
    #[arg(long)]
    no_timing: bool,
    /// Directory receiving evidence files.
    #[arg(long)]
    evidence: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PathArg {
    Auto,
    Reduction,
    Templates,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Mddlog,
    Mmsnp,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Ucq,
    Cq,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether the left input is contained in the right one.
    Check {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        /// Inputs are MMSNP sentences; checks that the left one implies the right one.
        #[arg(long)]
        mmsnp: bool,
        /// How emptiness of the simplified pair is decided.
        #[arg(long, value_enum, default_value_t = PathArg::Auto)]
        path: PathArg,
        #[command(flatten)]
        record: Record,
        #[command(flatten)]
        guards: Guards,
    },
    /// Print the certain answers of a program (or the truth of a sentence) on an instance.
    Eval {
        #[arg(long)]
        program: PathBuf,
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        guards: Guards,
    },
    /// Search all small instances for a counterexample to containment.
    Brute {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        /// Largest number of elements enumerated.
        #[arg(long)]
        max_size: usize,
        /// Only instances of girth above this value; `inf` keeps acyclic ones only.
        #[arg(long, default_value = "0", value_parser = parse_girth)]
        min_girth: usize,
        /// Refuse domain sizes above this bound.
        #[arg(long, default_value_t = mddlog_core::driver::BRUTE_MAX_DOMAIN)]
        max_domain: usize,
        #[arg(long)]
        mmsnp: bool,
        #[command(flatten)]
        record: Record,
    },
    /// Translate between MMSNP sentences and their complement programs.
    Translate {
        input: PathBuf,
        #[arg(long, value_enum)]
        to: Target,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the tiling lower-bound program, query and canonical grid.
    GenTiling {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Ucq)]
        mode: ModeArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the simplified pair and the consolidated relations.
    Simplify {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_girth(s: &str) -> Result<usize, String> {
    match s {
        "inf" | "infinity" => Ok(GIRTH_INFINITE),
        _ => s.parse().map_err(|e| format!("{e}")),
    }
}

/// Machine-readable outcome of `check` and `brute`.
#[derive(Serialize)]
struct VerdictRecord {
    command: Vec<String>,
    verdict: String,
    evidence: Vec<String>,
    timing_ms: Option<u64>,
    stages: Vec<StageRecord>,
}

#[derive(Serialize)]
struct StageRecord {
    stage: String,
    branch: usize,
    quantities: BTreeMap<String, u64>,
}

type CliResult<T> = Result<T, String>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_program(path: &Path) -> CliResult<Program> {
    parse_program(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_sentence(path: &Path) -> CliResult<MmsnpSentence> {
    parse_mmsnp(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_instance(path: &Path) -> CliResult<Instance> {
    parse_instance(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn is_mmsnp_file(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "mmsnp")
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))
}

fn exit_for(v: Verdict) -> ExitCode {
    match v {
        Verdict::Contained => ExitCode::from(0),
        Verdict::NotContained => ExitCode::from(1),
    }
}

fn emit(record: &Record, rec: VerdictRecord) -> CliResult<()> {
    if record.json {
        let text = serde_json::to_string_pretty(&rec).map_err(|e| e.to_string())?;
        println!("{text}");
    } else {
        println!("{}", rec.verdict);
    }
    Ok(())
}

fn stage_records(d: &Decision) -> Vec<StageRecord> {
    d.stages
        .iter()
        .map(|s| StageRecord {
            stage: s.stage.to_string(),
            branch: s.branch,
            quantities: s
                .quantities
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .collect(),
        })
        .collect()
}

/// Writes the evidence of a negative decision and returns the written paths.
fn write_evidence(d: &Decision, dir: &Path, max_facts: u64) -> CliResult<Vec<String>> {
    let Some(ev) = &d.evidence else {
        return Ok(Vec::new());
    };
    create_dir(dir)?;
    let mut out = Vec::new();
    if let Ok(k) = ev.k_theta.materialize(max_facts) {
        let path = dir.join("k_theta.facts");
        write(&path, &render_instance(&k))?;
        out.push(path.display().to_string());
    }
    if let Some(c) = &ev.counterexample {
        let path = dir.join("counterexample.facts");
        let mut text = render_instance(&c.instance);
        text.push_str(&format!("% answer ({})\n", c.tuple.join(",")));
        write(&path, &text)?;
        out.push(path.display().to_string());
    }
    Ok(out)
}

fn run(cli: Cli, argv: Vec<String>) -> CliResult<ExitCode> {
    let started = Instant::now();
    match cli.command {
        Command::Check {
            left,
            right,
            mmsnp,
            path,
            record,
            guards,
        } => {
            let opts = ContainOptions {
                eval: guards.eval(),
                path: match path {
                    PathArg::Auto => EmptinessPath::Auto,
                    PathArg::Reduction => EmptinessPath::Reduction,
                    PathArg::Templates => EmptinessPath::Templates,
                },
                ..ContainOptions::default()
            };
            let decision = if mmsnp {
                contain_mmsnp_with(&load_sentence(&left)?, &load_sentence(&right)?, &opts)
            } else {
                contain_with(&load_program(&left)?, &load_program(&right)?, &opts)
            }
            .map_err(|e| e.to_string())?;
            let evidence = match &record.evidence {
                Some(dir) => write_evidence(&decision, dir, opts.certify_max_facts)?,
                None => Vec::new(),
            };
            let rec = VerdictRecord {
                command: argv,
                verdict: decision.verdict.as_str().to_string(),
                evidence,
                timing_ms: (!record.no_timing).then(|| started.elapsed().as_millis() as u64),
                stages: stage_records(&decision),
            };
            emit(&record, rec)?;
            Ok(exit_for(decision.verdict))
        }
        Command::Eval {
            program,
            instance,
            guards,
        } => {
            let i = load_instance(&instance)?;
            if is_mmsnp_file(&program) {
                let phi = load_sentence(&program)?;
                println!("{}", eval_mmsnp(&phi, &i).map_err(|e| e.to_string())?);
                return Ok(ExitCode::SUCCESS);
            }
            let p = load_program(&program)?;
            let answers = ddlog_answers_on(&p, &Structure::of(&i), &guards.eval())
                .map_err(|e| e.to_string())?;
            for t in answers {
                println!("({})", t.join(","));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Brute {
            left,
            right,
            max_size,
            min_girth,
            max_domain,
            mmsnp,
            record,
        } => {
            if max_size > max_domain {
                return Err(format!(
                    "--max-size {max_size} exceeds --max-domain {max_domain}"
                ));
            }
            let (p1, p2) = if mmsnp {
                let (s1, s2) = (load_sentence(&left)?, load_sentence(&right)?);
                let schema = s1.schema.merge(&s2.schema).map_err(|e| e.to_string())?;
                let c = |s: &MmsnpSentence| {
                    mddlog_core::mmsnp::mmsnp_to_mddlog_over(s, &schema).map_err(|e| e.to_string())
                };
                (c(&s2)?, c(&s1)?)
            } else {
                (load_program(&left)?, load_program(&right)?)
            };
            let result =
                brute_contains(&p1, &p2, max_size, min_girth).map_err(|e| e.to_string())?;
            let mut evidence = Vec::new();
            let verdict = match &result {
                OracleResult::NoCounterexampleUpTo(_) => Verdict::Contained,
                OracleResult::Counterexample(c) => {
                    if let Some(dir) = &record.evidence {
                        create_dir(dir)?;
                        let path = dir.join("counterexample.facts");
                        let mut text = render_instance(&c.instance);
                        text.push_str(&format!("% answer ({})\n", c.tuple.join(",")));
                        write(&path, &text)?;
                        evidence.push(path.display().to_string());
                    }
                    Verdict::NotContained
                }
            };
            if !record.json {
                if let OracleResult::Counterexample(c) = &result {
                    for f in c.instance.facts() {
                        eprintln!("{f}.");
                    }
                    eprintln!("% answer ({})", c.tuple.join(","));
                }
            }
            let rec = VerdictRecord {
                command: argv,
                verdict: verdict.as_str().to_string(),
                evidence,
                timing_ms: (!record.no_timing).then(|| started.elapsed().as_millis() as u64),
                stages: Vec::new(),
            };
            emit(&record, rec)?;
            Ok(exit_for(verdict))
        }
        Command::Translate { input, to, out } => {
            let text = match to {
                Target::Mddlog => {
                    let phi = load_sentence(&input)?;
                    render_program(&mmsnp_to_mddlog(&phi).map_err(|e| e.to_string())?)
                }
                Target::Mmsnp => {
                    let p = load_program(&input)?;
                    render_mmsnp(&mddlog_to_mmsnp(&p).map_err(|e| e.to_string())?)
                }
            };
            match out {
                Some(path) => write(&path, &text)?,
                None => print!("{text}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::GenTiling { problem, mode, out } => {
            let (p, w) = parse_tiling(&read(&problem)?)
                .map_err(|e| format!("{}: {e}", problem.display()))?;
            let mode = match mode {
                ModeArg::Ucq => QueryMode::Ucq,
                ModeArg::Cq => QueryMode::Cq,
            };
            let (prog, q) = gen_lower_bound(&p, &w, mode).map_err(|e| e.to_string())?;
            let qp = query_program(&q, mode).map_err(|e| e.to_string())?;
            create_dir(&out)?;
            let mut written = vec![out.join("program.mddlog"), out.join("query.mddlog")];
            write(&written[0], &render_program(&prog))?;
            write(&written[1], &render_program(&qp))?;
            if w.n() == 1 {
                let grid = gen_canonical_grid(&p, &w, mode).map_err(|e| e.to_string())?;
                written.push(out.join("grid.facts"));
                write(&written[2], &render_instance(&grid))?;
            } else {
                eprintln!("canonical grids are only generated for words of length 1");
            }
            for path in written {
                println!("{}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Simplify { left, right, out } => {
            let (p1, p2) = (load_program(&left)?, load_program(&right)?);
            let (p1, p2) = align_schemas(&p1, &p2).map_err(|e| e.to_string())?;
            let branches = strip_answer_vars(&p1, &p2).map_err(|e| e.to_string())?;
            for (k, (tuple, b1, b2)) in branches.iter().enumerate() {
                let (c1, c2) = eliminate_constants(b1, b2).map_err(|e| e.to_string())?;
                let s = simplify_pair(&c1, &c2).map_err(|e| e.to_string())?;
                let dir = out.join(format!("branch{k}"));
                create_dir(&dir)?;
                write(&dir.join("left.mddlog"), &render_program(&s.p1))?;
                write(&dir.join("right.mddlog"), &render_program(&s.p2))?;
                let mut defs = format!("% answer ({})\n% w = {}\n", tuple.constants.join(","), s.w);
                for e in s.map.entries.values() {
                    let vars = e.vars().join(",");
                    let body: Vec<String> = e.cq.iter().map(|a| a.to_string()).collect();
                    defs.push_str(&format!("{}({vars}) := {}.\n", e.relation, body.join(", ")));
                }
                write(&dir.join("consolidated.txt"), &defs)?;
                println!("{}: w = {}", dir.display(), s.w);
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli, argv) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
