//! `zldp` command line: configuration, dispatch, CSV tables and manifests.

pub mod config;
pub mod tables;

use clap::{Parser, Subcommand};
use serde_json::{json, Map, Value};
use std::io::Write;
use std::path::PathBuf;
use tables::Output;
use zldp::output::{read_manifest, sha256_hex, write_manifest, write_tables, OutputChecksum, RunManifest};
use zldp::Error;

pub use config::{validate_config, Resolved};

#[derive(Debug, Parser)]
#[command(name = "zldp", version, about = "Large-deviation laboratory for log|zeta(1/2+it)|")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Worker threads (0: all cores). Outputs do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for CSV tables and manifest.json; stdout if absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON file with flat dotted keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Re-run the configuration recorded in a manifest.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    samples: Option<u64>,
    /// Height scale; τ is drawn from [T, 2T].
    #[arg(long = "T", global = true)]
    big_t: Option<f64>,
    /// paper | desk
    #[arg(long, global = true)]
    profile: Option<String>,
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    alpha: Vec<f64>,
    /// Moment exponents, comma separated.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    beta: Vec<f64>,
    /// Short-interval exponent: windows have half-width (log T)^θ.
    #[arg(long, global = true)]
    theta: Option<f64>,
    #[arg(long, global = true)]
    windows: Option<u64>,
    /// Level offsets for `experiment max` and `experiment critical`.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    y: Vec<f64>,
    /// Majorant Δ, or interval widths for `model saddle`.
    #[arg(long, global = true, value_delimiter = ',')]
    delta: Vec<f64>,
    /// Truncation degree ν; default from the ledger.
    #[arg(long, global = true)]
    nu: Option<f64>,
    /// Heights for `zeta`.
    #[arg(long, global = true, value_delimiter = ',')]
    t: Vec<f64>,
    #[arg(long, global = true)]
    limit: Option<u64>,
    /// Tilts for `model mgf`.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    lambda: Vec<f64>,
    /// Model block index on the ladder; default is the range model.lo..model.hi.
    #[arg(long, global = true)]
    block: Option<u64>,
    /// Majorant exponent A.
    #[arg(long, global = true)]
    a: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Sieve primes up to --limit.
    Sieve,
    /// ζ(1/2+it) at the heights --t, one CSV row each.
    Zeta {
        /// Evaluate with the Euler–Maclaurin oracle (t <= 1e5).
        #[arg(long)]
        checked: bool,
    },
    /// Dirichlet polynomial mean values, moments and mollifiers.
    Dirichlet {
        #[command(subcommand)]
        op: DirichletOp,
    },
    /// Barrier constants, ladder points and the partition of H.
    Ladder {
        #[command(subcommand)]
        op: LadderOp,
    },
    /// Random model blocks over primes.
    Model {
        #[command(subcommand)]
        op: ModelOp,
    },
    /// Band-limited majorant of a short interval and its Taylor truncation.
    Majorant {
        #[command(subcommand)]
        op: MajorantOp,
    },
    /// Sampled-height experiments on log|ζ|.
    Experiment {
        #[command(subcommand)]
        op: ExperimentOp,
    },
}

#[derive(Debug, Subcommand, Clone, Copy)]
enum DirichletOp {
    /// Mean square of random polynomials against the diagonal sum.
    MeanValue,
    /// Mean square of products A·B against the product of mean squares.
    Splitting,
    /// 2q-th moment of a prime polynomial over (e^j, e^k] against the bound.
    Moments,
    /// How often the mollifier inequality holds at level --ell.
    MollifierCheck,
}

#[derive(Debug, Subcommand, Clone, Copy)]
enum LadderOp {
    /// The six barrier-constant inequalities at --alpha.
    Constraints,
    /// Ladder points and corridor at --T.
    Build,
    /// Partition counts of H over sampled heights.
    Decompose,
}

#[derive(Debug, Subcommand, Clone, Copy)]
enum ModelOp {
    /// Moment generating function against e^{λ²Δ/4}.
    Mgf,
    /// Worst interval gap between the block and its Gaussian surrogate.
    BerryEsseen,
    /// Interval probabilities [v, v+Δ] against the Gaussian asymptotic.
    Saddle,
    /// Integer moments against the Gaussian surrogate.
    Moments,
}

#[derive(Debug, Subcommand, Clone, Copy)]
enum MajorantOp {
    /// Kernel, residuals and truncation bounds.
    Build,
    /// Sandwich inequality on a grid around the interval.
    Sandwich,
    /// Reverse inequality on samples from a model block.
    Reverse,
}

#[derive(Debug, Subcommand, Clone, Copy)]
enum ExperimentOp {
    /// Tail frequency of log|ζ| at V = α log log T, with a tilted model companion.
    Tail,
    /// Fractional moments with the layer-cake decomposition.
    Moments,
    /// Fourth-moment anchor and the central limit check.
    Fourth,
    /// Maxima over short windows.
    Max,
    /// Short-interval moments, level sets and the freezing fit.
    ShortMoments,
    /// Level sets just below the critical maximum m(t).
    Critical,
    /// Event pipeline counts per piece of the partition.
    Pipeline,
}

impl Cmd {
    fn path(&self) -> Vec<String> {
        let (a, b): (&str, String) = match self {
            Cmd::Sieve => ("sieve", String::new()),
            Cmd::Zeta { .. } => ("zeta", String::new()),
            Cmd::Dirichlet { op } => ("dirichlet", kebab(op)),
            Cmd::Ladder { op } => ("ladder", kebab(op)),
            Cmd::Model { op } => ("model", kebab(op)),
            Cmd::Majorant { op } => ("majorant", kebab(op)),
            Cmd::Experiment { op } => ("experiment", kebab(op)),
        };
        if b.is_empty() {
            vec![a.to_string()]
        } else {
            vec![a.to_string(), b]
        }
    }
}

fn kebab(op: &impl std::fmt::Debug) -> String {
    let s = format!("{op:?}");
    let mut out = String::new();
    for (i, c) in s.chars().enumerate() {
        if c.is_uppercase() && i > 0 {
            out.push('-');
        }
        out.push(c.to_ascii_lowercase());
    }
    out
}

/// Flag overrides as config keys; which key a flag feeds depends on the command.
fn overrides(cli: &Cli) -> Map<String, Value> {
    let mut m = Map::new();
    let mut put = |k: &str, v: Value| {
        m.insert(k.to_string(), v);
    };
    if let Some(s) = cli.seed {
        put("run.seed", json!(s));
    }
    if let Some(n) = cli.samples {
        put("run.samples", json!(n));
    }
    if let Some(t) = cli.big_t {
        put("run.T", json!(t));
    }
    if let Some(p) = &cli.profile {
        put("run.profile", json!(p));
    }
    if let Some(th) = cli.theta {
        put("experiment.theta", json!(th));
    }
    if let Some(w) = cli.windows {
        put("experiment.windows", json!(w));
    }
    if let Some(nu) = cli.nu {
        put("majorant.nu", json!(nu));
    }
    if let Some(l) = cli.limit {
        put("sieve.limit", json!(l));
    }
    if !cli.t.is_empty() {
        put("zeta.t", json!(cli.t));
    }
    if let Cmd::Zeta { checked: true } = cli.cmd {
        put("zeta.checked", json!(true));
    }
    if let Some(b) = cli.block {
        put("model.block", json!(b));
    }
    if let Some(a) = cli.a {
        put("majorant.A", json!(a));
    }
    if !cli.lambda.is_empty() {
        put("model.lambda", json!(cli.lambda));
    }
    let ladder_alpha = matches!(
        cli.cmd,
        Cmd::Ladder { .. } | Cmd::Model { .. } | Cmd::Majorant { op: MajorantOp::Reverse } | Cmd::Dirichlet { op: DirichletOp::MollifierCheck } | Cmd::Experiment { op: ExperimentOp::Pipeline }
    );
    if !cli.alpha.is_empty() {
        if ladder_alpha {
            put("ladder.alpha", json!(cli.alpha[0]));
        } else {
            put("experiment.alpha", json!(cli.alpha));
        }
    }
    if !cli.beta.is_empty() {
        let k = if matches!(cli.cmd, Cmd::Experiment { op: ExperimentOp::ShortMoments }) {
            "experiment.short_beta"
        } else {
            "experiment.beta"
        };
        put(k, json!(cli.beta));
    }
    if !cli.y.is_empty() {
        let k = if matches!(cli.cmd, Cmd::Experiment { op: ExperimentOp::Critical }) {
            "experiment.critical_y"
        } else {
            "experiment.y"
        };
        put(k, json!(cli.y));
    }
    if !cli.delta.is_empty() {
        if matches!(cli.cmd, Cmd::Majorant { .. }) {
            put("majorant.delta", json!(cli.delta[0]));
        } else {
            put("model.delta", json!(cli.delta));
        }
    }
    m
}

fn fail(msg: &str, code: i32) -> i32 {
    eprintln!("zldp: {msg}");
    code
}

/// Runs the command line and returns the process exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let command = cli.cmd.path();

    let mut base = Map::new();
    if let Some(p) = &cli.manifest {
        let m = match read_manifest(p) {
            Ok(m) => m,
            Err(e) => return fail(&e.to_string(), e.exit_code()),
        };
        if m.command != command {
            return fail(&format!("manifest records command '{}', not '{}'", m.command.join(" "), command.join(" ")), 2);
        }
        base = m.config;
    }
    if let Some(p) = &cli.config {
        let text = match std::fs::read_to_string(p) {
            Ok(t) => t,
            Err(e) => return fail(&format!("cannot read config {}: {e}", p.display()), 2),
        };
        match serde_json::from_str::<Value>(&text) {
            Ok(Value::Object(o)) => base.extend(o),
            Ok(_) => return fail("configuration must be a JSON object", 2),
            Err(e) => return fail(&format!("invalid JSON in {}: {e}", p.display()), 2),
        }
    }
    base.extend(overrides(&cli));
    let cfg = match config::validate_map(base) {
        Ok(c) => c,
        Err(errs) => {
            for e in &errs {
                eprintln!("zldp: config: {e}");
            }
            return 2;
        }
    };
    for w in &cfg.warnings {
        eprintln!("zldp: warning: {w}");
    }

    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => return fail(&format!("thread pool: {e}"), 3),
    };
    let result = pool.install(|| dispatch(&cli.cmd, &cfg));
    let output = match result {
        Ok(o) => o,
        Err(e) => return fail(&e.to_string(), e.exit_code()),
    };

    match &cli.out {
        Some(dir) => {
            let mut outputs = match write_tables(dir, &output.tables) {
                Ok(o) => o,
                Err(e) => return fail(&e.to_string(), e.exit_code()),
            };
            for (name, value) in &output.json {
                let text = serde_json::to_string_pretty(value).unwrap_or_default() + "\n";
                let file = format!("{name}.json");
                if let Err(e) = std::fs::write(dir.join(&file), &text) {
                    return fail(&format!("cannot write {file}: {e}"), 3);
                }
                outputs.push(OutputChecksum { file, sha256: sha256_hex(text.as_bytes()) });
            }
            let manifest = RunManifest {
                version: env!("CARGO_PKG_VERSION").to_string(),
                command,
                config: cfg.map.clone(),
                profile: cfg.profile().to_string(),
                seed: cfg.u64("run.seed"),
                outputs,
            };
            if let Err(e) = write_manifest(dir, &manifest) {
                return fail(&e.to_string(), e.exit_code());
            }
        }
        None => {
            let mut out = std::io::stdout().lock();
            for t in &output.tables {
                let _ = writeln!(out, "# {}", t.name);
                let _ = out.write_all(t.to_csv().as_bytes());
            }
            for (name, value) in &output.json {
                let _ = writeln!(out, "# {name}.json\n{}", serde_json::to_string_pretty(value).unwrap_or_default());
            }
        }
    }
    0
}

fn dispatch(cmd: &Cmd, cfg: &Resolved) -> Result<Output, Error> {
    match *cmd {
        Cmd::Sieve => tables::sieve(cfg),
        Cmd::Zeta { .. } => tables::zeta_eval(cfg),
        Cmd::Dirichlet { op } => match op {
            DirichletOp::MeanValue => tables::mean_value(cfg, false),
            DirichletOp::Splitting => tables::mean_value(cfg, true),
            DirichletOp::Moments => tables::dirichlet_moments(cfg),
            DirichletOp::MollifierCheck => tables::mollifier_check(cfg),
        },
        Cmd::Ladder { op } => match op {
            LadderOp::Constraints => tables::constraints(cfg),
            LadderOp::Build => tables::ladder_build(cfg),
            LadderOp::Decompose => tables::decompose(cfg),
        },
        Cmd::Model { op } => match op {
            ModelOp::Mgf => tables::model_mgf(cfg),
            ModelOp::BerryEsseen => tables::berry_esseen(cfg),
            ModelOp::Saddle => tables::saddle(cfg),
            ModelOp::Moments => tables::model_moments(cfg),
        },
        Cmd::Majorant { op } => match op {
            MajorantOp::Build => tables::majorant_build(cfg),
            MajorantOp::Sandwich => tables::majorant_sandwich(cfg),
            MajorantOp::Reverse => tables::majorant_reverse(cfg),
        },
        Cmd::Experiment { op } => match op {
            ExperimentOp::Tail => tables::tail(cfg),
            ExperimentOp::Moments => tables::moments(cfg),
            ExperimentOp::Fourth => tables::fourth(cfg),
            ExperimentOp::Max => tables::max(cfg),
            ExperimentOp::ShortMoments => tables::short_moments(cfg),
            ExperimentOp::Critical => tables::critical(cfg),
            ExperimentOp::Pipeline => tables::pipeline(cfg),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_paths_are_kebab_case() {
        assert_eq!(Cmd::Experiment { op: ExperimentOp::ShortMoments }.path(), vec!["experiment", "short-moments"]);
        assert_eq!(Cmd::Model { op: ModelOp::BerryEsseen }.path(), vec!["model", "berry-esseen"]);
        assert_eq!(Cmd::Sieve.path(), vec!["sieve"]);
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        assert_eq!(run(["zldp", "sieve", "--bogus"]), 2);
        assert_eq!(run(["zldp", "nonsense"]), 2);
    }
}
