use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use treeprep::amplitude::{build_tree, AmplitudeFile, TargetOptions, TargetState};
use treeprep::architecture::Variant;
use treeprep::circuit::Circuit;
use treeprep::exec::Execution;
use treeprep::noise::{sample_config, NoiseParams};
use treeprep::plan::StageKind;
use treeprep::resources::{clifford_t_metrics, CliffordTMetrics, Strategy, TCostModel};
use treeprep::robustness::{
    counterexample_dump, run_trajectories, sweep_point, Experiment, SweepRow,
};
use treeprep::synth;

#[derive(Parser)]
#[command(
    name = "treeprep",
    version,
    about = "Bucket-brigade tree state preparation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a target state into a circuit
    Synth(SynthArgs),
    /// Check a circuit file for conflicts and connectivity
    Validate { circuit: PathBuf },
    /// Per-trajectory noisy simulation
    Simulate(SimulateArgs),
    /// Aggregated noisy simulation over n and epsilon
    Sweep(SweepArgs),
    /// Clifford+T resource estimates
    Resources(ResourceArgs),
}

#[derive(Args)]
struct Source {
    /// Amplitude file: {"n": int, "amplitudes": [[re, im], ...]}
    #[arg(long, conflicts_with = "preset")]
    amplitudes: Option<PathBuf>,
    /// uniform | basis:K | random
    #[arg(long)]
    preset: Option<String>,
    /// Renormalize instead of rejecting unnormalized input
    #[arg(long)]
    normalize: bool,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    protocol: Variant,
    #[arg(long)]
    n: Option<usize>,
    #[command(flatten)]
    source: Source,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    stagger: Option<usize>,
    /// Circuit JSON destination; embedded in the summary when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    protocol: Variant,
    #[arg(long)]
    n: Option<usize>,
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    epsilon: f64,
    #[arg(long, default_value_t = 100)]
    trajectories: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    stagger: Option<usize>,
    /// Where to write config dumps for failed or bound-violating trajectories
    #[arg(long)]
    dump_dir: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    protocol: Variant,
    /// Value, inclusive range `a..b`, or comma list
    #[arg(long)]
    n: String,
    /// Comma list
    #[arg(long)]
    epsilon: String,
    #[arg(long, default_value_t = 1000)]
    trajectories: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ResourceArgs {
    #[arg(long)]
    protocol: Variant,
    #[arg(long)]
    n: String,
    #[arg(long)]
    epsilon: String,
    /// Both strategies when absent
    #[arg(long)]
    strategy: Option<Strategy>,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Finding(String),
    Usage(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Finding(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Io(_) => 3,
        }
    }
}

impl From<treeprep::Error> for Failure {
    fn from(e: treeprep::Error) -> Self {
        match e {
            treeprep::Error::Io(e) => Failure::Io(e.to_string()),
            e => Failure::Usage(e.to_string()),
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write_out(out: Option<&Path>, bytes: &[u8]) -> CliResult {
    match out {
        Some(p) => fs::write(p, bytes).map_err(|e| Failure::Io(format!("{}: {e}", p.display()))),
        None => io::stdout()
            .write_all(bytes)
            .map_err(|e| Failure::Io(format!("stdout: {e}"))),
    }
}

fn parse_ns(s: &str) -> CliResult<Vec<usize>> {
    let bad = || Failure::Usage(format!("--n: cannot parse `{s}` (value, a..b, or list)"));
    let ns: Vec<usize> = if let Some((a, b)) = s.split_once("..") {
        let (a, b): (usize, usize) = (
            a.trim().parse().map_err(|_| bad())?,
            b.trim().parse().map_err(|_| bad())?,
        );
        (a..=b).collect()
    } else {
        s.split(',')
            .map(|x| x.trim().parse().map_err(|_| bad()))
            .collect::<CliResult<_>>()?
    };
    if ns.is_empty() || ns.contains(&0) {
        return Err(bad());
    }
    Ok(ns)
}

fn parse_eps(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| Failure::Usage(format!("--epsilon: cannot parse `{x}`")))
        })
        .collect()
}

fn load_target(source: &Source, n: Option<usize>, seed: u64) -> CliResult<TargetState> {
    let opts = TargetOptions {
        auto_normalize: source.normalize,
        ..TargetOptions::default()
    };
    if let Some(path) = &source.amplitudes {
        let file: AmplitudeFile = serde_json::from_str(&read(path)?)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        if let Some(n) = n {
            if n != file.n {
                return Err(Failure::Usage(format!(
                    "--n {n} does not match field `n` = {} in {}",
                    file.n,
                    path.display()
                )));
            }
        }
        return Ok(file.into_target(opts)?);
    }
    let n = n.ok_or_else(|| Failure::Usage("--n is required with a preset".into()))?;
    let preset = source.preset.as_deref().unwrap_or("random");
    let t = match preset {
        "uniform" => TargetState::uniform(n)?,
        "random" => TargetState::random(n, seed)?,
        p => match p.strip_prefix("basis:").map(str::parse::<usize>) {
            Some(Ok(k)) => TargetState::basis(n, k)?,
            _ => return Err(Failure::Usage(format!("--preset: unknown preset `{p}`"))),
        },
    };
    Ok(t)
}

fn cmd_synth(a: SynthArgs) -> CliResult {
    let target = load_target(&a.source, a.n, a.seed)?;
    let s = synth::synthesize(a.protocol, &build_tree(&target), a.stagger)?;
    let m = s.circuit.metrics();
    let mut summary = json!({
        "protocol": a.protocol.to_string(),
        "n": target.n(),
        "depth": m.depth,
        "gate_count": m.gate_count,
        "sta": m.sta,
        "max_degree": s.arch.max_degree(),
        "fanin_moments": s.plan.span(StageKind::Fanin),
        "fanout_moments": s.plan.span(StageKind::Fanout),
        "qubits": s.arch.num_qubits(),
    });
    let circuit = s.circuit.to_json();
    match &a.out {
        Some(p) => {
            write_out(Some(p), circuit.as_bytes())?;
            summary["circuit"] = json!(p.display().to_string());
        }
        None => summary["circuit"] = serde_json::from_str(&circuit).expect("valid json"),
    }
    write_out(None, format!("{summary}\n").as_bytes())
}

fn cmd_validate(path: &Path) -> CliResult {
    let c = Circuit::from_json(&read(path)?)?;
    let violations = c.validate();
    let report = json!({
        "protocol": c.variant().to_string(),
        "n": c.n(),
        "depth": c.depth(),
        "ok": violations.is_empty(),
        "violations": violations
            .iter()
            .map(|v| json!({"moment": v.moment, "gate": v.gate, "message": v.message}))
            .collect::<Vec<_>>(),
    });
    write_out(None, format!("{report}\n").as_bytes())?;
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Failure::Finding(format!("{} violations", violations.len())))
    }
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Failure::Io(e.to_string());
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(&r).map_err(err)?;
    }
    w.into_inner().map_err(|e| Failure::Io(e.to_string()))
}

fn cmd_simulate(a: SimulateArgs) -> CliResult {
    let target = load_target(&a.source, a.n, a.seed)?;
    let exp = Experiment::synthesize(a.protocol, target, a.stagger)?;
    let noise = NoiseParams::new(a.epsilon)?;
    let runs = run_trajectories(&exp, noise, a.seed, a.trajectories, Execution::default());
    let dump_dir = a
        .dump_dir
        .clone()
        .or_else(|| a.out.as_ref().map(|p| p.with_extension("dumps")));
    let mut rows = Vec::with_capacity(runs.len());
    for (i, r) in runs.iter().enumerate() {
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        let needs_dump = !matches!(r, Ok(t) if !t.violated);
        let mut status = match r {
            Ok(t) if t.violated => "violation".to_string(),
            Ok(_) => "ok".to_string(),
            Err(e) => format!("error: {e}"),
        };
        if needs_dump {
            if let Some(dir) = &dump_dir {
                fs::create_dir_all(dir)
                    .map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
                let cfg = sample_config(
                    exp.depth(),
                    exp.arch().num_qubits(),
                    noise,
                    a.seed,
                    i as u64,
                );
                let body = counterexample_dump(&exp, &cfg).unwrap_or_else(|_| cfg.to_json());
                let path = dir.join(format!("trajectory_{i}.json"));
                fs::write(&path, body)
                    .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
                status = format!("{status} ({})", path.display());
            }
        }
        rows.push(match r {
            Ok(t) => vec![
                i.to_string(),
                t.fidelity.to_string(),
                t.lambda.to_string(),
                opt(t.lambda_prime),
                t.good.to_string(),
                t.error_free.map(|x| x.to_string()).unwrap_or_default(),
                t.errors.to_string(),
                t.coherent.to_string(),
                status,
            ],
            Err(_) => {
                let mut row = vec![i.to_string()];
                row.extend(std::iter::repeat_n(String::new(), 7));
                row.push(status);
                row
            }
        });
    }
    let header = [
        "index",
        "fidelity",
        "lambda",
        "lambda_prime",
        "good",
        "error_free",
        "errors",
        "coherent",
        "status",
    ];
    write_out(a.out.as_deref(), &csv_bytes(&header, rows)?)
}

fn cmd_sweep(a: SweepArgs) -> CliResult {
    let mut rows = Vec::new();
    for n in parse_ns(&a.n)? {
        for eps in parse_eps(&a.epsilon)? {
            let row = sweep_point(
                a.protocol,
                n,
                eps,
                a.trajectories,
                a.seed,
                Execution::default(),
            )?;
            if row.failures > 0 {
                eprintln!(
                    "n={n} epsilon={eps}: {} trajectories hit the term cap",
                    row.failures
                );
            }
            rows.push(row.record());
        }
    }
    write_out(a.out.as_deref(), &csv_bytes(&SweepRow::HEADER, rows)?)
}

fn cmd_resources(a: ResourceArgs) -> CliResult {
    let strategies = match a.strategy {
        Some(s) => vec![s],
        None => vec![Strategy::Geometric, Strategy::Uniform],
    };
    let model = TCostModel::default();
    let mut rows = Vec::new();
    for n in parse_ns(&a.n)? {
        for eps in parse_eps(&a.epsilon)? {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(Failure::Usage(format!(
                    "--epsilon must lie in (0, 1), got {eps}"
                )));
            }
            for &s in &strategies {
                rows.push(clifford_t_metrics(a.protocol, n, eps, s, &model)?.record());
            }
        }
    }
    write_out(
        a.out.as_deref(),
        &csv_bytes(&CliffordTMetrics::HEADER, rows)?,
    )
}

fn configure_threads() -> CliResult {
    if let Ok(v) = std::env::var("TREEPREP_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| Failure::Usage(format!("TREEPREP_THREADS: not a number: `{v}`")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(format!("TREEPREP_THREADS: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|_| match cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Validate { circuit } => cmd_validate(&circuit),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Resources(a) => cmd_resources(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Finding(m) => eprintln!("treeprep: {m}"),
                Failure::Usage(m) => eprintln!("treeprep: error: {m}"),
                Failure::Io(m) => eprintln!("treeprep: i/o error: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
