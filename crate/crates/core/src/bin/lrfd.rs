use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lrfd::bench::{parse_config, run_to_csv, ExperimentGrid, ExperimentKind};

/// Low-rank matrix completion experiments.
#[derive(Parser)]
#[command(name = "lrfd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Complete one matrix read from disk.
    Complete {
        #[command(flatten)]
        common: Common,
        /// Matrix file (`rows,cols` header, one row per line).
        #[arg(long)]
        matrix: Option<PathBuf>,
        /// Mask file (`rows,cols,count` header, one `i,j` per line).
        #[arg(long)]
        mask: Option<PathBuf>,
        /// Dictionary for `lrfd`; without it the dictionary is learnt.
        #[arg(long)]
        dictionary: Option<PathBuf>,
        /// `cono` or `lrfd`.
        #[arg(long)]
        algorithm: Option<String>,
        #[arg(long)]
        lambda: Option<f64>,
        /// Report file; defaults to `<out>.report.csv`.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Coherence and completion error against the number of subspaces.
    CoherenceSweep(Common),
    /// Coherent rank-1 matrix completed with `[1, W]` dictionaries.
    Fig3Sweep(Common),
    /// Success counts over a (rank, observed fraction) grid.
    PhaseDiagram(Common),
    /// Operator-norm and Neumann-series checks on random subspaces.
    LemmaCheck(Common),
}

#[derive(Args)]
struct Common {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed (overrides the configuration).
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; sweeps print to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for independent cells.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

fn load_grid(common: &Common, kind: ExperimentKind) -> Result<ExperimentGrid, String> {
    let mut grid = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            parse_config(&text, kind).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => ExperimentGrid::defaults(kind),
    };
    if grid.experiment != kind {
        return Err(format!(
            "configuration is for `{}`, not `{}`",
            grid.experiment.name(),
            kind.name()
        ));
    }
    if let Some(seed) = common.seed {
        grid.base_seed = seed;
    }
    if let Some(out) = &common.out {
        grid.output_path = Some(out.clone());
    }
    Ok(grid)
}

fn run(cli: Cli) -> Result<(), String> {
    let (grid, workers) = match cli.command {
        Command::Complete {
            common,
            matrix,
            mask,
            dictionary,
            algorithm,
            lambda,
            report,
        } => {
            let mut grid = load_grid(&common, ExperimentKind::SingleComplete)?;
            grid.matrix_path = matrix.or(grid.matrix_path);
            grid.mask_path = mask.or(grid.mask_path);
            grid.dictionary_path = dictionary.or(grid.dictionary_path);
            grid.algorithm = algorithm.or(grid.algorithm);
            grid.report_path = report.or(grid.report_path);
            if lambda.is_some() {
                grid.lambda_override = lambda;
            }
            for (value, flag) in [
                (&grid.matrix_path, "--matrix"),
                (&grid.mask_path, "--mask"),
                (&grid.output_path, "--out"),
            ] {
                if value.is_none() {
                    return Err(format!("complete: missing {flag}"));
                }
            }
            (grid, common.workers)
        }
        Command::CoherenceSweep(c) => (load_grid(&c, ExperimentKind::CoherenceSweep)?, c.workers),
        Command::Fig3Sweep(c) => (load_grid(&c, ExperimentKind::Fig3Sweep)?, c.workers),
        Command::PhaseDiagram(c) => (load_grid(&c, ExperimentKind::PhaseDiagram)?, c.workers),
        Command::LemmaCheck(c) => (load_grid(&c, ExperimentKind::LemmaCheck)?, c.workers),
    };
    grid.validate().map_err(|e| e.to_string())?;

    let csv = run_to_csv(&grid, workers.max(1)).map_err(|e| e.to_string())?;
    match (&grid.output_path, grid.experiment) {
        (_, ExperimentKind::SingleComplete) => print!("{csv}"),
        (Some(path), _) => fs::write(path, &csv).map_err(|e| format!("{}: {e}", path.display()))?,
        (None, _) => {
            let mut out = std::io::stdout().lock();
            out.write_all(csv.as_bytes()).map_err(|e| e.to_string())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("lrfd: {msg}");
            ExitCode::from(2)
        }
    }
}
