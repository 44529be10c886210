//! `maxent-triples` command line.
//!
//! Every command that writes files also writes a JSON manifest next to them.
//! `rerun` replays a manifest; outputs are byte-identical for any `--threads`.
//!
//! Exit codes: 0 ok, 1 usage or input error, 2 finished but the fraction of
//! triples with rejected marginals exceeded `--warn-fraction`.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::estimators::{estimate_raw_triple, EstimateRecord};
use crate::experiments::{
    self, error_ratio_table, precision_recall, EvalConfig, EvalMode, EvalOutput,
};
use crate::support_counts::count_supports;
use crate::transactions::{load_transactions, prune_singletons, Dataset, RawId};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_WARNINGS: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "maxent-triples",
    version,
    about = "Maximum-entropy triple frequency estimation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print all estimates for one triple of raw item ids as a CSV row.
    Estimate(EstimateArgs),
    /// Estimate every triple with enough support from full-data statistics.
    FullEval(EvalArgs),
    /// Estimate low-support triples from a Bernoulli sample.
    SampledEval(EvalArgs),
    /// Dump support counts (dense ids) as CSV.
    Count(CountArgs),
    /// Replay the command recorded in a manifest.
    Rerun(RerunArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// FIMI-style transaction file.
    pub input: PathBuf,
    /// Drop items occurring in fewer transactions than this.
    #[arg(long, default_value_t = 0)]
    pub min_occ: u64,
    /// Worker threads (results do not depend on it).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Three raw item ids.
    #[arg(num_args = 3, required = true)]
    pub items: Vec<RawId>,
    #[arg(long, default_value_t = crate::maxent::DEFAULT_ITERATIONS)]
    pub iterations: u32,
    /// Also write estimate.csv and a manifest here.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 30)]
    pub min_triple_occ: u64,
    #[arg(long, default_value_t = 100)]
    pub max_triple_occ: u64,
    #[arg(long, default_value_t = 0.01)]
    pub sample_rate: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.10)]
    pub top_frac: f64,
    #[arg(long, default_value_t = 0.90)]
    pub report_factor: f64,
    #[arg(long, default_value_t = crate::maxent::DEFAULT_ITERATIONS)]
    pub iterations: u32,
    #[arg(long)]
    pub with_closed_form: bool,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Exit with status 2 when more than this fraction of triples is rejected.
    #[arg(long, default_value_t = 0.0)]
    pub warn_fraction: f64,
}

impl EvalArgs {
    fn config(&self) -> EvalConfig {
        EvalConfig {
            min_triple_occ: self.min_triple_occ,
            max_triple_occ: self.max_triple_occ,
            sample_rate: self.sample_rate,
            seed: self.seed,
            top_fraction: self.top_frac,
            report_factor: self.report_factor,
            solver_iterations: self.iterations,
            with_closed_form: self.with_closed_form,
        }
    }
}

#[derive(Debug, Args)]
pub struct CountArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Also count triples.
    #[arg(long)]
    pub with_triples: bool,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RerunArgs {
    pub manifest: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Size and SHA-256 of an input file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub bytes: u64,
    pub sha256: String,
}

impl Fingerprint {
    pub fn of_file(path: &Path) -> Result<Self> {
        let data = fs::read(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        Ok(Self {
            bytes: data.len() as u64,
            sha256: hex::encode(Sha256::digest(&data)),
        })
    }
}

/// The recorded command, with every resolved setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum ManifestCommand {
    Estimate {
        items: [RawId; 3],
        iterations: u32,
    },
    FullEval {
        config: EvalConfig,
        warn_fraction: f64,
    },
    SampledEval {
        config: EvalConfig,
        warn_fraction: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    #[serde(flatten)]
    pub command: ManifestCommand,
    pub input: PathBuf,
    pub min_occ: u64,
    pub fingerprint: Fingerprint,
    pub m: u64,
    pub n_items: usize,
    pub sample_size: Option<u64>,
    pub records: usize,
    pub dropped: usize,
    pub warnings: usize,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// What a finished command reports back to `main`.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub exit_code: i32,
    pub manifest: Option<RunManifest>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_owned(),
        source,
    }
}

fn load(input: &Path, min_occ: u64) -> Result<Dataset> {
    let d = load_transactions(input)?;
    Ok(if min_occ > 0 {
        prune_singletons(&d, min_occ)
    } else {
        d
    })
}

fn dataset_name(input: &Path) -> String {
    input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into())
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Estimate rows in frequency units.
pub fn write_estimates(records: &[EstimateRecord], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "triple_i",
        "triple_j",
        "triple_k",
        "occ",
        "m",
        "independence",
        "extrapolation",
        "maxent",
        "closed_form",
        "closed_form_clamped",
        "pstar",
        "psharp",
    ])?;
    for r in records {
        w.write_record([
            r.raw[0].to_string(),
            r.raw[1].to_string(),
            r.raw[2].to_string(),
            r.occ_full.to_string(),
            r.m_full.to_string(),
            r.independence.to_string(),
            r.extrapolation.to_string(),
            r.maxent.to_string(),
            fmt_opt(r.closed_form),
            fmt_opt(r.closed_form_clamped),
            fmt_opt(r.pstar),
            fmt_opt(r.psharp),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

fn write_manifest(dir: &Path, name: &str, manifest: &RunManifest) -> Result<()> {
    let path = dir.join(name);
    let mut w = create(&path)?;
    serde_json::to_writer_pretty(&mut w, manifest)?;
    writeln!(w).map_err(io_err(&path))?;
    w.flush().map_err(io_err(&path))
}

fn run_estimate(
    input: &Path,
    min_occ: u64,
    items: [RawId; 3],
    iterations: u32,
    out_dir: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<Outcome> {
    let d = load(input, min_occ)?;
    let counts = count_supports(&d, true);
    let record = estimate_raw_triple(&d, &counts, items, iterations)?;
    write_estimates(std::slice::from_ref(&record), &mut *stdout)?;
    let Some(dir) = out_dir else {
        return Ok(Outcome {
            exit_code: EXIT_OK,
            manifest: None,
        });
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let csv_path = dir.join("estimate.csv");
    let mut w = create(&csv_path)?;
    write_estimates(std::slice::from_ref(&record), &mut w)?;
    w.flush().map_err(io_err(&csv_path))?;
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: ManifestCommand::Estimate { items, iterations },
        input: input.to_owned(),
        min_occ,
        fingerprint: Fingerprint::of_file(input)?,
        m: d.len() as u64,
        n_items: d.n_items(),
        sample_size: None,
        records: 1,
        dropped: 0,
        warnings: 0,
        outputs: vec!["estimate.csv".into()],
    };
    write_manifest(dir, "estimate_manifest.json", &manifest)?;
    Ok(Outcome {
        exit_code: EXIT_OK,
        manifest: Some(manifest),
    })
}

fn write_eval_outputs(
    out: &EvalOutput,
    cfg: &EvalConfig,
    dataset: &str,
    dir: &Path,
) -> Result<Vec<String>> {
    let mode = out.mode;
    let mut written = Vec::new();
    let mut file = |name: String, f: &dyn Fn(&mut BufWriter<File>) -> Result<()>| -> Result<()> {
        let path = dir.join(&name);
        let mut w = create(&path)?;
        f(&mut w)?;
        w.flush().map_err(io_err(&path))?;
        written.push(name);
        Ok(())
    };

    file(format!("{}_concentration.csv", mode.name()), &|w| {
        experiments::write_concentration(&out.records, w)
    })?;

    let prf: Vec<_> = if out.records.is_empty() {
        Vec::new()
    } else {
        cfg.scored_estimators(mode)
            .into_iter()
            .map(|e| {
                precision_recall(
                    &out.records,
                    e,
                    cfg.top_fraction,
                    cfg.report_factor_for(mode),
                )
            })
            .collect::<Result<_>>()?
    };
    file(format!("{}_prf.csv", mode.name()), &|w| {
        experiments::write_prf(&prf, dataset, mode, w)
    })?;

    if mode == EvalMode::Sampled {
        let ratios = error_ratio_table(&out.records, &cfg.ratio_baselines());
        file("sampled_ratios.csv".into(), &|w| {
            experiments::write_ratios(&ratios, dataset, w)
        })?;
    }
    Ok(written)
}

fn exit_code_for(out: &EvalOutput, warn_fraction: f64) -> i32 {
    if out.warning_fraction() > warn_fraction {
        EXIT_WARNINGS
    } else {
        EXIT_OK
    }
}

fn run_eval(
    input: &Path,
    min_occ: u64,
    mode: EvalMode,
    cfg: &EvalConfig,
    warn_fraction: f64,
    out_dir: &Path,
) -> Result<Outcome> {
    cfg.validate()?;
    if !(0.0..=1.0).contains(&warn_fraction) {
        return Err(Error::InvalidConfig(format!(
            "warning fraction must be in [0, 1], got {warn_fraction}"
        )));
    }
    let d = load(input, min_occ)?;
    let out = match mode {
        EvalMode::Full => experiments::run_full_eval(&d, cfg)?,
        EvalMode::Sampled => experiments::run_sampled_eval(&d, cfg)?,
    };
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let outputs = write_eval_outputs(&out, cfg, &dataset_name(input), out_dir)?;

    let command = match mode {
        EvalMode::Full => ManifestCommand::FullEval {
            config: cfg.clone(),
            warn_fraction,
        },
        EvalMode::Sampled => ManifestCommand::SampledEval {
            config: cfg.clone(),
            warn_fraction,
        },
    };
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command,
        input: input.to_owned(),
        min_occ,
        fingerprint: Fingerprint::of_file(input)?,
        m: d.len() as u64,
        n_items: d.n_items(),
        sample_size: out.sample_size,
        records: out.records.len(),
        dropped: out.dropped,
        warnings: out.warnings.len(),
        outputs,
    };
    write_manifest(
        out_dir,
        &format!("{}_manifest.json", mode.name()),
        &manifest,
    )?;

    for (raw, why) in &out.warnings {
        eprintln!("warning: triple {raw:?}: {why}");
    }
    eprintln!(
        "{} mode: {} targets, {} estimated, {} dropped, {} warnings",
        mode.name(),
        out.targets,
        out.records.len(),
        out.dropped,
        out.warnings.len()
    );
    Ok(Outcome {
        exit_code: exit_code_for(&out, warn_fraction),
        manifest: Some(manifest),
    })
}

fn replay(manifest: &RunManifest, out_dir: &Path, stdout: &mut dyn Write) -> Result<Outcome> {
    let current = Fingerprint::of_file(&manifest.input)?;
    if current != manifest.fingerprint {
        return Err(Error::InvalidConfig(format!(
            "{} changed since the manifest was written",
            manifest.input.display()
        )));
    }
    match &manifest.command {
        ManifestCommand::Estimate { items, iterations } => run_estimate(
            &manifest.input,
            manifest.min_occ,
            *items,
            *iterations,
            Some(out_dir),
            stdout,
        ),
        ManifestCommand::FullEval {
            config,
            warn_fraction,
        } => run_eval(
            &manifest.input,
            manifest.min_occ,
            EvalMode::Full,
            config,
            *warn_fraction,
            out_dir,
        ),
        ManifestCommand::SampledEval {
            config,
            warn_fraction,
        } => run_eval(
            &manifest.input,
            manifest.min_occ,
            EvalMode::Sampled,
            config,
            *warn_fraction,
            out_dir,
        ),
    }
}

/// Runs a parsed command line, writing CSV rows for `estimate` and `count`
/// to `stdout`.
pub fn run(cli: Cli, stdout: &mut (dyn Write + Send)) -> Result<Outcome> {
    match cli.command {
        Command::Estimate(a) => {
            let items = [a.items[0], a.items[1], a.items[2]];
            with_threads(a.data.threads, || {
                run_estimate(
                    &a.data.input,
                    a.data.min_occ,
                    items,
                    a.iterations,
                    a.out_dir.as_deref(),
                    stdout,
                )
            })?
        }
        Command::FullEval(a) => with_threads(a.data.threads, || {
            run_eval(
                &a.data.input,
                a.data.min_occ,
                EvalMode::Full,
                &a.config(),
                a.warn_fraction,
                &a.out_dir,
            )
        })?,
        Command::SampledEval(a) => with_threads(a.data.threads, || {
            run_eval(
                &a.data.input,
                a.data.min_occ,
                EvalMode::Sampled,
                &a.config(),
                a.warn_fraction,
                &a.out_dir,
            )
        })?,
        Command::Count(a) => with_threads(a.data.threads, || -> Result<Outcome> {
            let d = load(&a.data.input, a.data.min_occ)?;
            let counts = count_supports(&d, a.with_triples);
            match &a.out {
                Some(path) => {
                    let mut w = create(path)?;
                    counts.write_csv(&mut w)?;
                    w.flush().map_err(io_err(path))?;
                }
                None => counts.write_csv(&mut *stdout)?,
            }
            Ok(Outcome {
                exit_code: EXIT_OK,
                manifest: None,
            })
        })?,
        Command::Rerun(a) => {
            let manifest = RunManifest::read(&a.manifest)?;
            with_threads(a.threads, || replay(&manifest, &a.out_dir, stdout))?
        }
    }
}

/// Entry point used by the binary; returns the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    let mut stdout = io::stdout();
    match run(cli, &mut stdout) {
        Ok(outcome) => outcome.exit_code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn output(targets: usize, warnings: usize) -> EvalOutput {
        EvalOutput {
            mode: EvalMode::Full,
            records: Vec::new(),
            warnings: vec![([1, 2, 3], "infeasible".into()); warnings],
            dropped: 0,
            targets,
            sample_size: None,
        }
    }

    #[test]
    fn warning_fraction_sets_exit_code() {
        assert_eq!(exit_code_for(&output(10, 0), 0.0), EXIT_OK);
        assert_eq!(exit_code_for(&output(10, 1), 0.0), EXIT_WARNINGS);
        assert_eq!(exit_code_for(&output(10, 1), 0.1), EXIT_OK);
        assert_eq!(exit_code_for(&output(10, 2), 0.1), EXIT_WARNINGS);
        assert_eq!(exit_code_for(&output(0, 0), 0.0), EXIT_OK);
    }

    #[test]
    fn manifest_round_trips() {
        let m = RunManifest {
            tool: "t".into(),
            version: "0".into(),
            command: ManifestCommand::SampledEval {
                config: EvalConfig::default(),
                warn_fraction: 0.25,
            },
            input: "data.dat".into(),
            min_occ: 5,
            fingerprint: Fingerprint {
                bytes: 3,
                sha256: "ab".into(),
            },
            m: 10,
            n_items: 4,
            sample_size: Some(2),
            records: 1,
            dropped: 0,
            warnings: 0,
            outputs: vec!["x.csv".into()],
        };
        let json = serde_json::to_string(&m).unwrap();
        assert!(json.contains("\"command\":\"sampled-eval\""));
        assert_eq!(serde_json::from_str::<RunManifest>(&json).unwrap(), m);
    }
}
