//! Command-line front end: validate, solve, verify, search and generate
//! rerouting instances.
//!
//! Every command prints a JSON report on stdout and a one-line summary on
//! stderr. Exit codes: 0 positive verdict, 2 negative verdict, 3 search
//! limit hit, 1 usage or I/O error, 4 internal error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use flowreroute::blocks::BlockSet;
use flowreroute::format::{parse_instance, parse_schedule, serialize_instance, serialize_schedule};
use flowreroute::generators::{
    decode_assignment, gen_2flow_sat, gen_dag_sat, gen_random_dag, parse_dimacs, schedule_2flow, CnfFormula, GadgetMeta,
    GenError, RandomParams, GENERATOR_VERSION,
};
use flowreroute::oracle::{brute_force_with, Limit, OracleLimits, OracleVerdict, SearchMode};
use flowreroute::solver::{build_rh, solve_with, InfeasibleWitness, SolveOptions, SolveOutcome, SolveStats};
use flowreroute::{validate_network, verify_schedule, UpdateFlowNetwork, Violation};

const SEED_ENV: &str = "FLOWREROUTE_SEED";

#[derive(Parser)]
#[command(name = "flowreroute", version, about = "Congestion-free rerouting of unsplittable flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that an instance is well formed and both path families fit.
    Validate { instance: PathBuf },
    /// Decide an acyclic instance and emit a schedule if one exists.
    Solve {
        instance: PathBuf,
        /// Write the schedule here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Include the block decomposition in the report.
        #[arg(long)]
        dump_blocks: bool,
        /// Include the label groups in the report.
        #[arg(long)]
        dump_rh: bool,
        /// One update per round.
        #[arg(long)]
        singleton_rounds: bool,
    },
    /// Check a schedule against an instance.
    Verify { instance: PathBuf, schedule: PathBuf },
    /// Exhaustive search for small instances, cyclic ones included.
    Oracle {
        instance: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000_000)]
        max_states: u64,
        #[arg(long)]
        max_depth: Option<usize>,
        #[arg(long)]
        max_seconds: Option<f64>,
        /// Branch over every update instead of only edge swaps.
        #[arg(long)]
        full: bool,
    },
    /// Two-flow gadget of a DIMACS CNF formula.
    GenSat2 {
        cnf: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        meta: Option<PathBuf>,
        /// Also write the witness schedule of the first satisfying assignment.
        #[arg(long)]
        witness: Option<PathBuf>,
    },
    /// Acyclic many-flow gadget of a DIMACS CNF formula.
    GenSatdag {
        cnf: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        meta: Option<PathBuf>,
    },
    /// Random layered acyclic instance.
    GenRandom {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        vertices: usize,
        #[arg(long, default_value_t = 2)]
        pairs: usize,
        #[arg(long, default_value_t = 1)]
        cap_min: u64,
        #[arg(long, default_value_t = 2)]
        cap_max: u64,
        #[arg(long, default_value_t = 1)]
        demand_min: u64,
        #[arg(long, default_value_t = 1)]
        demand_max: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        meta: Option<PathBuf>,
    },
    /// Read the assignment off a feasible schedule of an acyclic gadget.
    Decode { meta: PathBuf, schedule: PathBuf },
}

struct Outcome {
    code: u8,
    verdict: &'static str,
    summary: String,
    artifacts: Vec<PathBuf>,
    counters: Value,
    details: Value,
}

impl Outcome {
    fn new(code: u8, verdict: &'static str, summary: impl Into<String>) -> Self {
        Outcome { code, verdict, summary: summary.into(), artifacts: Vec::new(), counters: json!({}), details: json!({}) }
    }

    fn counters(mut self, v: Value) -> Self {
        self.counters = v;
        self
    }

    fn details(mut self, v: Value) -> Self {
        self.details = v;
        self
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, text: &str, artifacts: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
    artifacts.push(path.to_path_buf());
    Ok(())
}

fn load_instance(path: &Path) -> Result<UpdateFlowNetwork> {
    parse_instance(&read(path)?).with_context(|| format!("cannot parse instance {}", path.display()))
}

fn load_cnf(path: &Path) -> Result<CnfFormula> {
    parse_dimacs(&read(path)?).with_context(|| format!("cannot parse formula {}", path.display()))
}

fn violations(v: &[Violation]) -> Value {
    Value::Array(v.iter().map(|x| Value::String(x.to_string())).collect())
}

fn invalid(v: &[Violation]) -> Outcome {
    Outcome::new(1, "invalid-instance", format!("instance is invalid ({} violations)", v.len()))
        .details(json!({ "violations": violations(v) }))
}

fn stats_json(s: &SolveStats) -> Value {
    json!({ "blocks": s.blocks, "labels": s.labels, "conflict_edges": s.conflict_edges, "waves": s.waves, "rounds": s.rounds })
}

fn dump_blocks(set: &BlockSet<'_>) -> Value {
    let net = set.network();
    let names = |p: &[flowreroute::VertexId]| p.iter().map(|&v| net.name(v).to_string()).collect::<Vec<_>>();
    Value::Array(
        set.blocks()
            .iter()
            .map(|b| {
                json!({
                    "id": b.id.0, "pair": b.pair, "index": b.index,
                    "start": net.name(b.start()), "end": net.name(b.end()),
                    "old": names(&b.old_path), "new": names(&b.new_path),
                })
            })
            .collect(),
    )
}

fn dump_rh(set: &BlockSet<'_>) -> Value {
    match build_rh(set) {
        Ok(rh) => {
            let ids = |l: &[flowreroute::blocks::BlockId]| l.iter().map(|b| b.0).collect::<Vec<_>>();
            let groups: Vec<Value> = rh
                .groups
                .iter()
                .map(|g| json!({ "block": g.block.0, "touch_list": ids(&g.touch_list), "labels": g.labels.iter().map(|l| ids(l)).collect::<Vec<_>>() }))
                .collect();
            let edges: Vec<Value> = rh.inter_group_edges().iter().map(|&(a, b)| json!([[a.0, a.1], [b.0, b.1]])).collect();
            json!({ "groups": groups, "conflict_edges": edges })
        }
        Err(b) => json!({ "unlabelled_block": b.0 }),
    }
}

fn cmd_validate(instance: &Path) -> Result<Outcome> {
    let net = load_instance(instance)?;
    let counters = json!({ "vertices": net.vertex_count(), "edges": net.edges().len(), "pairs": net.pair_count() });
    Ok(match validate_network(&net) {
        Ok(()) => Outcome::new(0, "valid", "instance is valid").counters(counters),
        Err(v) => Outcome::new(2, "invalid", format!("instance is invalid ({} violations)", v.len()))
            .counters(counters)
            .details(json!({ "violations": violations(&v) })),
    })
}

fn cmd_solve(instance: &Path, out: Option<&Path>, blocks: bool, rh: bool, singleton_rounds: bool) -> Result<Outcome> {
    let net = load_instance(instance)?;
    let mut extra = serde_json::Map::new();
    if blocks || rh {
        if let Ok(set) = BlockSet::for_network(&net) {
            if blocks {
                extra.insert("blocks".into(), dump_blocks(&set));
            }
            if rh {
                extra.insert("rh".into(), dump_rh(&set));
            }
        }
    }
    let mut o = match solve_with(&net, SolveOptions { singleton_rounds }) {
        SolveOutcome::Feasible { schedule, stats } => {
            let mut o = Outcome::new(0, "feasible", format!("feasible: {} rounds", schedule.len())).counters(stats_json(&stats));
            if let Some(path) = out {
                write(path, &serialize_schedule(&schedule), &mut o.artifacts)?;
            }
            extra.insert("schedule".into(), serde_json::from_str(&serialize_schedule(&schedule))?);
            o
        }
        SolveOutcome::Infeasible { witness, stats } => {
            let (text, w) = match witness {
                InfeasibleWitness::NoLabel { block, pair, start, end } => (
                    format!("infeasible: block {start}..{end} of {pair} cannot be switched"),
                    json!({ "kind": "no-label", "block": block.0, "pair": pair, "start": start, "end": end }),
                ),
                InfeasibleWitness::NoConsistentChoice => {
                    ("infeasible: no consistent choice of block orders".to_string(), json!({ "kind": "no-consistent-choice" }))
                }
            };
            extra.insert("witness".into(), w);
            Outcome::new(2, "infeasible", text).counters(stats_json(&stats))
        }
        SolveOutcome::NotADag(c) => {
            extra.insert("cycle".into(), json!(c.cycle));
            Outcome::new(2, "not-a-dag", format!("{c}; use `flowreroute oracle` for cyclic instances"))
        }
        SolveOutcome::InvalidInstance(v) => invalid(&v),
        SolveOutcome::InternalError(msg) => {
            extra.insert("instance".into(), serde_json::from_str(&serialize_instance(&net))?);
            Outcome::new(4, "internal-error", format!("internal error: {msg}"))
        }
    };
    if let Value::Object(d) = &mut o.details {
        d.extend(extra);
    }
    Ok(o)
}

fn cmd_verify(instance: &Path, schedule: &Path) -> Result<Outcome> {
    let net = load_instance(instance)?;
    let sched = parse_schedule(&read(schedule)?).with_context(|| format!("cannot parse schedule {}", schedule.display()))?;
    let counters = json!({ "rounds": sched.len(), "updates": sched.updates().count() });
    Ok(match verify_schedule(&net, &sched) {
        Ok(()) => Outcome::new(0, "accepted", "schedule is feasible").counters(counters),
        Err(r) if r.round == 0 => invalid(&r.violations).counters(counters),
        Err(r) => Outcome::new(2, "rejected", format!("schedule rejected at round {}", r.round))
            .counters(counters)
            .details(json!({ "round": r.round, "violations": violations(&r.violations) })),
    })
}

fn cmd_oracle(instance: &Path, out: Option<&Path>, limits: OracleLimits, full: bool) -> Result<Outcome> {
    let net = load_instance(instance)?;
    let mode = if full { SearchMode::Full } else { SearchMode::Reduced };
    let rep = match brute_force_with(&net, limits, mode) {
        Ok(r) => r,
        Err(v) => return Ok(invalid(&v)),
    };
    let counters = json!({ "oracle_states": rep.states });
    Ok(match rep.verdict {
        OracleVerdict::Feasible(s) => {
            let mut o = Outcome::new(0, "feasible", format!("feasible: {} updates", s.len())).counters(counters);
            if let Some(path) = out {
                write(path, &serialize_schedule(&s), &mut o.artifacts)?;
            }
            o.details(json!({ "schedule": serde_json::from_str::<Value>(&serialize_schedule(&s))? }))
        }
        OracleVerdict::Infeasible => Outcome::new(2, "infeasible", "infeasible: no consistent update order").counters(counters),
        OracleVerdict::LimitExceeded(l) => {
            let which = match l {
                Limit::States => "states",
                Limit::Depth => "depth",
                Limit::Time => "time",
            };
            Outcome::new(3, "limit-exceeded", format!("search stopped: {which} limit")).counters(counters).details(json!({ "limit": which }))
        }
    })
}

fn emit_gadget(net: &UpdateFlowNetwork, meta: &GadgetMeta, out: &Path, meta_out: Option<&Path>) -> Result<Outcome> {
    let mut o = Outcome::new(0, "generated", format!("{} vertices, {} pairs", net.vertex_count(), net.pair_count()))
        .counters(json!({ "vertices": net.vertex_count(), "edges": net.edges().len(), "pairs": net.pair_count() }));
    write(out, &serialize_instance(net), &mut o.artifacts)?;
    if let Some(path) = meta_out {
        write(path, &meta.to_json(), &mut o.artifacts)?;
    }
    Ok(o)
}

fn cmd_gen_sat2(cnf: &Path, out: &Path, meta: Option<&Path>, witness: Option<&Path>) -> Result<Outcome> {
    let f = load_cnf(cnf)?;
    let (net, m) = gen_2flow_sat(&f);
    let mut o = emit_gadget(&net, &m, out, meta)?;
    if let Some(path) = witness {
        let Some(a) = f.solve_brute_force() else {
            bail!("formula is unsatisfiable; there is no witness schedule");
        };
        let s = schedule_2flow(&f, &a)?;
        write(path, &serialize_schedule(&s), &mut o.artifacts)?;
    }
    Ok(o)
}

fn cmd_decode(meta: &Path, schedule: &Path) -> Result<Outcome> {
    let m = GadgetMeta::from_json(&read(meta)?).with_context(|| format!("cannot parse metadata {}", meta.display()))?;
    let sched = parse_schedule(&read(schedule)?).with_context(|| format!("cannot parse schedule {}", schedule.display()))?;
    Ok(match decode_assignment(&m, &sched) {
        Ok(a) => {
            let text: Vec<String> = a.values().iter().enumerate().map(|(i, &v)| format!("x{}={}", i + 1, u8::from(v))).collect();
            Outcome::new(0, "decoded", text.join(" ")).details(json!({ "assignment": a }))
        }
        Err(GenError::MalformedSchedule(msg)) => Outcome::new(2, "malformed", msg),
        Err(GenError::Internal(msg)) => Outcome::new(4, "internal-error", msg),
        Err(e) => return Err(e.into()),
    })
}

fn seed_override(seed: u64) -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s.trim().parse().with_context(|| format!("{SEED_ENV} is not an unsigned integer: {s:?}")),
        Err(_) => Ok(seed),
    }
}

fn run(cmd: Command) -> Result<(&'static str, Outcome)> {
    Ok(match cmd {
        Command::Validate { instance } => ("validate", cmd_validate(&instance)?),
        Command::Solve { instance, out, dump_blocks, dump_rh, singleton_rounds } => {
            ("solve", cmd_solve(&instance, out.as_deref(), dump_blocks, dump_rh, singleton_rounds)?)
        }
        Command::Verify { instance, schedule } => ("verify", cmd_verify(&instance, &schedule)?),
        Command::Oracle { instance, out, max_states, max_depth, max_seconds, full } => {
            let max_time = match max_seconds {
                Some(s) if !(s.is_finite() && s >= 0.0) => bail!("--max-seconds must be a non-negative number"),
                Some(s) => Some(Duration::from_secs_f64(s)),
                None => None,
            };
            ("oracle", cmd_oracle(&instance, out.as_deref(), OracleLimits { max_states, max_depth, max_time }, full)?)
        }
        Command::GenSat2 { cnf, out, meta, witness } => ("gen-sat2", cmd_gen_sat2(&cnf, &out, meta.as_deref(), witness.as_deref())?),
        Command::GenSatdag { cnf, out, meta } => {
            let (net, m) = gen_dag_sat(&load_cnf(&cnf)?);
            ("gen-satdag", emit_gadget(&net, &m, &out, meta.as_deref())?)
        }
        Command::GenRandom { seed, vertices, pairs, cap_min, cap_max, demand_min, demand_max, out, meta } => {
            let p = RandomParams { seed: seed_override(seed)?, vertices, pairs, cap_min, cap_max, demand_min, demand_max };
            p.validate()?;
            let net = gen_random_dag(&p);
            let mut o = Outcome::new(0, "generated", format!("{} vertices, {} pairs", net.vertex_count(), net.pair_count()))
                .counters(json!({ "vertices": net.vertex_count(), "edges": net.edges().len(), "pairs": net.pair_count() }));
            write(&out, &serialize_instance(&net), &mut o.artifacts)?;
            if let Some(path) = meta {
                let mut text = serde_json::to_string_pretty(&json!({ "generator": "chacha8", "params": p, "version": GENERATOR_VERSION }))?;
                text.push('\n');
                write(&path, &text, &mut o.artifacts)?;
            }
            ("gen-random", o)
        }
        Command::Decode { meta, schedule } => ("decode", cmd_decode(&meta, &schedule)?),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    match run(cli.command) {
        Ok((command, o)) => {
            let report = json!({
                "command": command,
                "verdict": o.verdict,
                "artifacts": o.artifacts,
                "timing_ms": start.elapsed().as_millis() as u64,
                "counters": o.counters,
                "details": o.details,
            });
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            eprintln!("{command}: {}", o.summary);
            ExitCode::from(o.code)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
