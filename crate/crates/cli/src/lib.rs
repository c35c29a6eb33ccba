//! Batch runner for `bwres-core`: seeded experiments with CSV and JSON output.

pub mod config;
pub mod experiments;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{Command, ExperimentConfig, Provenance};
pub use experiments::{csv_bytes, run, write_outputs, RunOutput};

/// Default output directory when neither `--out` nor `BWRES_OUT_DIR` is given.
pub const DEFAULT_OUT_DIR: &str = "bwres-out";
pub const OUT_DIR_ENV: &str = "BWRES_OUT_DIR";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] bwres_core::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Parser)]
#[command(name = "bwres", version, about = "Seeded experiments on spanning subgraphs of dense random graphs")]
pub struct Cli {
    /// `key = value` file; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = OUT_DIR_ENV)]
    pub out: Option<PathBuf>,
    /// Worker threads for the seed fan-out.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Sample G(n, p) hosts.
    Generate(Params),
    /// Apply an adversary (prune, triangle_blocker, wipe) to sampled hosts.
    Adversary(Params),
    /// Spanning embedding of a bounded-bandwidth H.
    Embed(Params),
    /// Almost-perfect H0-packing.
    Pack(Params),
    /// Statistical checks: lemma61, chernoff, mixing, turan.
    Verify {
        check: String,
        #[command(flatten)]
        params: Params,
    },
    /// Time the core kernels (timings go to the JSON file only).
    Bench(Params),
    /// Print the parameter sheet.
    Sheet(Params),
}

/// Every parameter is optional here; defaults are resolved per command.
#[derive(Debug, Clone, Default, Args)]
pub struct Params {
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub r: Option<String>,
    #[arg(long)]
    pub gamma: Option<String>,
    /// Maximum degree of H.
    #[arg(long = "delta", visible_alias = "Delta")]
    pub delta: Option<String>,
    #[arg(long)]
    pub beta: Option<String>,
    #[arg(long)]
    pub xi: Option<String>,
    #[arg(long)]
    pub xi0: Option<String>,
    #[arg(long)]
    pub eps: Option<String>,
    #[arg(long = "eps-bad")]
    pub eps_bad: Option<String>,
    #[arg(long)]
    pub d: Option<String>,
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub c: Option<String>,
    /// Set-size constant for the small-set properties.
    #[arg(long = "C")]
    pub big_c: Option<String>,
    #[arg(long)]
    pub k: Option<String>,
    /// Seeds, e.g. `1..10` or `1,4,7..9`.
    #[arg(long)]
    pub seeds: Option<String>,
    /// Spanning graph family: c4-factor, c4-path, path, p3-factor.
    #[arg(long)]
    pub h: Option<String>,
    /// Packed graph: K<m>, C<m>, P<m>, or K<a>,<b>,...
    #[arg(long)]
    pub h0: Option<String>,
    #[arg(long)]
    pub adversary: Option<String>,
    #[arg(long = "path-len")]
    pub path_len: Option<String>,
    #[arg(long)]
    pub vertex: Option<String>,
    #[arg(long)]
    pub trials: Option<String>,
    #[arg(long)]
    pub lambda: Option<String>,
    #[arg(long)]
    pub deg: Option<String>,
    #[arg(long)]
    pub budget: Option<String>,
    #[arg(long)]
    pub buffer: Option<String>,
    #[arg(long)]
    pub cleanup: Option<String>,
    #[arg(long = "beta-denominator")]
    pub beta_denominator: Option<String>,
    #[arg(long = "block-factor")]
    pub block_factor: Option<String>,
    #[arg(long = "write-graphs")]
    pub write_graphs: Option<String>,
}

impl Params {
    fn to_map(&self) -> BTreeMap<String, String> {
        let pairs: [(&str, &Option<String>); 30] = [
            ("n", &self.n),
            ("p", &self.p),
            ("r", &self.r),
            ("gamma", &self.gamma),
            ("delta", &self.delta),
            ("beta", &self.beta),
            ("xi", &self.xi),
            ("xi0", &self.xi0),
            ("eps", &self.eps),
            ("eps_bad", &self.eps_bad),
            ("d", &self.d),
            ("alpha", &self.alpha),
            ("c", &self.c),
            ("big_c", &self.big_c),
            ("k", &self.k),
            ("seeds", &self.seeds),
            ("h", &self.h),
            ("h0", &self.h0),
            ("adversary", &self.adversary),
            ("path_len", &self.path_len),
            ("vertex", &self.vertex),
            ("trials", &self.trials),
            ("lambda", &self.lambda),
            ("deg", &self.deg),
            ("budget", &self.budget),
            ("buffer", &self.buffer),
            ("cleanup", &self.cleanup),
            ("beta_denominator", &self.beta_denominator),
            ("block_factor", &self.block_factor),
            ("write_graphs", &self.write_graphs),
        ];
        pairs.into_iter().filter_map(|(k, v)| v.clone().map(|v| (k.to_string(), v))).collect()
    }
}

/// Turn parsed arguments into a resolved configuration.
pub fn resolve(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let file = match &cli.config {
        Some(path) => config::parse_config(&std::fs::read_to_string(path)?)?,
        None => BTreeMap::new(),
    };
    let (command, check, params) = match &cli.command {
        Sub::Generate(p) => (Command::Generate, None, p),
        Sub::Adversary(p) => (Command::Adversary, None, p),
        Sub::Embed(p) => (Command::Embed, None, p),
        Sub::Pack(p) => (Command::Pack, None, p),
        Sub::Verify { check, params } => (Command::Verify, Some(check.clone()), params),
        Sub::Bench(p) => (Command::Bench, None, p),
        Sub::Sheet(p) => (Command::Sheet, None, p),
    };
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    ExperimentConfig::resolve(command, check, &params.to_map(), &file, out, cli.jobs)
}

/// Entry point shared by the binary and tests. Returns the process exit code:
/// 0 on success, 1 when any seed hit a stage error, 2 on usage or I/O errors.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let outcome = resolve(&cli).and_then(|cfg| {
        let out = run(&cfg)?;
        let path = write_outputs(&out, &cfg.out_dir)?;
        Ok((out, path))
    });
    match outcome {
        Ok((out, path)) => {
            // A closed stdout (e.g. piped into `head`) must not turn a finished run into a panic.
            let mut stdout = std::io::stdout().lock();
            if matches!(cli.command, Sub::Sheet(_)) {
                let _ = writeln!(stdout, "{}", serde_json::to_string_pretty(&out.meta["sheet"]).expect("sheet serializes"));
            }
            let _ = writeln!(stdout, "wrote {} ({} rows, {} stage errors)", path.display(), out.rows.len(), out.stage_errors);
            i32::from(out.stage_errors > 0)
        }
        Err(e) => {
            eprintln!("bwres: {e}");
            2
        }
    }
}
