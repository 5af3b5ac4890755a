//! Experiment runner behind the `lrfd` binary.
//!
//! A run is described by an [`ExperimentGrid`], usually parsed from a
//! `key = value` file (one key per line, `#` starts a comment). Lists are
//! written `a,b,c` or as an inclusive range `start:stop:step`.
//!
//! | key | meaning |
//! |-----|---------|
//! | `experiment` | `coherence-sweep`, `fig3-sweep`, `phase-diagram`, `lemma-check`, `complete` |
//! | `rows`, `cols` | matrix size |
//! | `ranks` | ranks of `L₀` (phase diagram) or of `U_A` (lemma check); the single rank of the coherence sweep |
//! | `fractions` | observed fractions; `ρ₀` values for the lemma check |
//! | `subspaces` | subspace counts `k` (coherence sweep) or the single `k` of the phase diagram |
//! | `dictionary_ranks` | `rank(A)` values of the fig3 sweep |
//! | `trials` | trials per cell |
//! | `seed` | base seed |
//! | `lambda` | penalty weight for every solve |
//! | `max_iters`, `rel_tol` | solver budget |
//! | `success_threshold` | a trial succeeds when its relative error is below this |
//! | `lemma_delta`, `lemma_terms` | slack `δ` in `1 − ρ₀ + δ` and Neumann terms |
//! | `matrix`, `mask`, `dictionary`, `algorithm`, `report` | inputs of `complete` |
//! | `out` | output path |
//!
//! Trial seeds are `mix_seed(seed, [experiment, cell coordinates…, trial])`,
//! so each cell can be rerun alone. Output rows are ordered by cell
//! coordinates whatever the worker count.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::coherence::{coherence, recovery_error};
use crate::error::{Error, Result};
use crate::linalg::io::{load_matrix, save_matrix};
use crate::linalg::{normalize_columns, qr_orthonormal, DenseMatrix};
use crate::observation::{ObservationSet, SamplingModel, SubspaceBasis};
use crate::pipeline::{finish_algorithm1, lemma1_operator_norm, lemma2_inverse_check};
use crate::rng::{gaussian_matrix, mix_seed, rng_from_seed};
use crate::solvers::{solve_cono, solve_lrfd, SolverConfig};
use crate::synth::{gen_coherent_rank1, gen_fig3_dictionary, gen_subspace_mixture, SubspaceMixSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    CoherenceSweep,
    Fig3Sweep,
    PhaseDiagram,
    SingleComplete,
    LemmaCheck,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::CoherenceSweep => "coherence-sweep",
            Self::Fig3Sweep => "fig3-sweep",
            Self::PhaseDiagram => "phase-diagram",
            Self::SingleComplete => "complete",
            Self::LemmaCheck => "lemma-check",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "coherence-sweep" => Self::CoherenceSweep,
            "fig3-sweep" => Self::Fig3Sweep,
            "phase-diagram" => Self::PhaseDiagram,
            "complete" => Self::SingleComplete,
            "lemma-check" => Self::LemmaCheck,
            other => return Err(Error::InvalidParameter(format!("unknown experiment `{other}`"))),
        })
    }

    fn tag(self) -> u64 {
        self as u64 + 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    Cono,
    Lrfd,
    /// Both stages: completion, then LRFD with the learnt dictionary.
    TwoStage,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Self::Cono => "cono",
            Self::Lrfd => "lrfd",
            Self::TwoStage => "alg1",
        }
    }
}

/// Everything needed to run one experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentGrid {
    pub experiment: ExperimentKind,
    pub rows: usize,
    pub cols: usize,
    pub ranks: Vec<usize>,
    pub fractions: Vec<f64>,
    pub subspaces: Vec<usize>,
    pub dictionary_ranks: Vec<usize>,
    pub trials_per_cell: usize,
    pub base_seed: u64,
    pub lambda_override: Option<f64>,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub success_threshold: f64,
    pub lemma_delta: f64,
    pub lemma_terms: usize,
    pub matrix_path: Option<PathBuf>,
    pub mask_path: Option<PathBuf>,
    pub dictionary_path: Option<PathBuf>,
    pub algorithm: Option<String>,
    pub report_path: Option<PathBuf>,
    pub output_path: Option<PathBuf>,
}

impl ExperimentGrid {
    /// Desk-scale defaults of each experiment.
    pub fn defaults(experiment: ExperimentKind) -> Self {
        let base = Self {
            experiment,
            rows: 200,
            cols: 200,
            ranks: vec![40],
            fractions: vec![0.55],
            subspaces: vec![1, 2, 4, 8, 20],
            dictionary_ranks: vec![1, 5, 10, 20],
            trials_per_cell: 10,
            base_seed: 0,
            lambda_override: None,
            max_iters: 5000,
            rel_tol: 1e-7,
            success_threshold: 0.05,
            lemma_delta: 0.3,
            lemma_terms: 40,
            matrix_path: None,
            mask_path: None,
            dictionary_path: None,
            algorithm: None,
            report_path: None,
            output_path: None,
        };
        match experiment {
            ExperimentKind::CoherenceSweep => Self {
                max_iters: 500,
                rel_tol: 1e-4,
                ..base
            },
            ExperimentKind::Fig3Sweep => Self {
                fractions: vec![0.1],
                ..base
            },
            ExperimentKind::PhaseDiagram => Self {
                rows: 100,
                cols: 300,
                ranks: (1..=10).map(|i| 5 * i).collect(),
                fractions: (0..10).map(|i| round12(0.35 + 0.05 * i as f64)).collect(),
                subspaces: vec![5],
                trials_per_cell: 5,
                max_iters: 500,
                rel_tol: 1e-4,
                ..base
            },
            ExperimentKind::LemmaCheck => Self {
                rows: 40,
                cols: 40,
                ranks: vec![3],
                fractions: vec![0.3, 0.5, 0.8],
                trials_per_cell: 100,
                ..base
            },
            ExperimentKind::SingleComplete => Self {
                lambda_override: Some(100.0),
                ..base
            },
        }
    }

    /// `λ` used by every solve of this run.
    pub fn lambda(&self) -> f64 {
        self.lambda_override.unwrap_or(match self.experiment {
            ExperimentKind::SingleComplete => 100.0,
            _ => 1e6,
        })
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            lambda: self.lambda(),
            max_iters: self.max_iters,
            rel_tol: self.rel_tol,
            ..SolverConfig::default()
        }
    }

    /// Sets one configuration key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::InvalidParameter(format!("`{key}`: {what} `{value}`"));
        let uint = || value.parse::<usize>().map_err(|_| bad("expected an integer, got"));
        let real = || value.parse::<f64>().map_err(|_| bad("expected a number, got"));
        match key {
            "experiment" => self.experiment = ExperimentKind::from_name(value)?,
            "rows" => self.rows = uint()?,
            "cols" => self.cols = uint()?,
            "ranks" => self.ranks = parse_list(value).map_err(|_| bad("bad list"))?,
            "fractions" => self.fractions = parse_list(value).map_err(|_| bad("bad list"))?,
            "subspaces" => self.subspaces = parse_list(value).map_err(|_| bad("bad list"))?,
            "dictionary_ranks" => self.dictionary_ranks = parse_list(value).map_err(|_| bad("bad list"))?,
            "trials" => self.trials_per_cell = uint()?,
            "seed" => self.base_seed = value.parse().map_err(|_| bad("expected a u64, got"))?,
            "lambda" => self.lambda_override = Some(real()?),
            "max_iters" => self.max_iters = uint()?,
            "rel_tol" => self.rel_tol = real()?,
            "success_threshold" => self.success_threshold = real()?,
            "lemma_delta" => self.lemma_delta = real()?,
            "lemma_terms" => self.lemma_terms = uint()?,
            "matrix" => self.matrix_path = Some(value.into()),
            "mask" => self.mask_path = Some(value.into()),
            "dictionary" => self.dictionary_path = Some(value.into()),
            "algorithm" => self.algorithm = Some(value.to_string()),
            "report" => self.report_path = Some(value.into()),
            "out" => self.output_path = Some(value.into()),
            _ => return Err(Error::InvalidParameter(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.trials_per_cell == 0 {
            return fail("trials must be at least 1");
        }
        if self.rows == 0 || self.cols == 0 {
            return fail("rows and cols must be positive");
        }
        let lists_ok = match self.experiment {
            ExperimentKind::CoherenceSweep => {
                !self.subspaces.is_empty() && self.ranks.len() == 1 && self.fractions.len() == 1
            }
            ExperimentKind::Fig3Sweep => !self.dictionary_ranks.is_empty() && self.fractions.len() == 1,
            ExperimentKind::PhaseDiagram => {
                !self.ranks.is_empty() && !self.fractions.is_empty() && self.subspaces.len() == 1
            }
            ExperimentKind::LemmaCheck => !self.ranks.is_empty() && !self.fractions.is_empty(),
            ExperimentKind::SingleComplete => true,
        };
        if !lists_ok {
            return fail("parameter lists are empty or have the wrong length for this experiment");
        }
        if self.fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return fail("fractions must lie in [0, 1]");
        }
        if self.dictionary_ranks.contains(&0) {
            return fail("dictionary ranks must be at least 1");
        }
        self.solver_config().validate()
    }
}

fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

/// `a,b,c` or inclusive `start:stop:step`.
pub fn parse_list<T>(text: &str) -> Result<Vec<T>>
where
    T: std::str::FromStr + FromF64,
{
    let bad = || Error::InvalidParameter(format!("bad list `{text}`"));
    let text = text.trim();
    if text.contains(':') {
        let parts: Vec<f64> = text
            .split(':')
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let [start, stop, step] = parts[..] else {
            return Err(bad());
        };
        if !(step > 0.0) || stop < start {
            return Err(bad());
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        return (0..count).map(|i| T::from_f64(round12(start + step * i as f64)).ok_or_else(bad)).collect();
    }
    let out: Vec<T> = text
        .split(',')
        .map(|p| p.trim().parse::<T>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

/// Exact conversion from a range endpoint.
pub trait FromF64: Sized {
    fn from_f64(x: f64) -> Option<Self>;
}

impl FromF64 for f64 {
    fn from_f64(x: f64) -> Option<Self> {
        Some(x)
    }
}

impl FromF64 for usize {
    fn from_f64(x: f64) -> Option<Self> {
        (x >= 0.0 && x.fract() == 0.0).then_some(x as usize)
    }
}

/// Parses a configuration file body; unspecified keys keep the defaults of
/// the experiment named by `experiment` (or `fallback`).
pub fn parse_config(text: &str, fallback: ExperimentKind) -> Result<ExperimentGrid> {
    let mut pairs = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse {
                line: k + 1,
                message: format!("expected `key = value`, got `{line}`"),
            });
        };
        pairs.push((k + 1, key.trim().to_string(), value.trim().to_string()));
    }
    let kind = match pairs.iter().find(|(_, key, _)| key == "experiment") {
        Some((_, _, v)) => ExperimentKind::from_name(v)?,
        None => fallback,
    };
    let mut grid = ExperimentGrid::defaults(kind);
    for (line, key, value) in pairs {
        grid.set(&key, &value).map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
    }
    Ok(grid)
}

/// Per-trial outcome of one cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CellResult {
    pub errors: Vec<f64>,
    pub wall_seconds: Vec<f64>,
    pub threshold: f64,
}

impl CellResult {
    fn new(threshold: f64) -> Self {
        Self {
            errors: Vec::new(),
            wall_seconds: Vec::new(),
            threshold,
        }
    }

    fn push(&mut self, error: f64, seconds: f64) {
        self.errors.push(error);
        self.wall_seconds.push(seconds);
    }

    pub fn trials(&self) -> usize {
        self.errors.len()
    }

    pub fn successes(&self) -> usize {
        self.errors.iter().filter(|&&e| e < self.threshold).count()
    }

    pub fn mean_error(&self) -> f64 {
        mean(&self.errors)
    }

    pub fn max_error(&self) -> f64 {
        self.errors.iter().copied().fold(0.0, f64::max)
    }

    pub fn mean_wall(&self) -> f64 {
        mean(&self.wall_seconds)
    }

    /// At least half of the trials succeeded.
    pub fn majority_success(&self) -> bool {
        2 * self.successes() >= self.trials()
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

/// Runs `f` over `cells`, on up to `workers` threads, keeping input order.
pub fn map_cells<C, T, F>(cells: &[C], workers: usize, f: F) -> Vec<T>
where
    C: Sync,
    T: Send,
    F: Fn(&C) -> T + Sync,
{
    if workers <= 1 || cells.len() <= 1 {
        return cells.iter().map(f).collect();
    }
    use rayon::prelude::*;
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| cells.par_iter().map(&f).collect()),
        Err(_) => cells.iter().map(f).collect(),
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed().as_secs_f64())
}

// ---------------------------------------------------------------------------
// Coherence sweep

#[derive(Clone, Debug, PartialEq)]
pub struct CoherenceRow {
    pub subspaces: usize,
    pub dim_per_subspace: usize,
    pub mean_mu1: f64,
    pub mean_mu2: f64,
    pub cono: CellResult,
}

pub const COHERENCE_HEADER: &str =
    "subspaces,dim_per_subspace,trials,mean_mu1,mean_mu2,mean_cono_error,successes,mean_wall_seconds";

pub fn run_coherence_sweep(grid: &ExperimentGrid, workers: usize) -> Result<Vec<CoherenceRow>> {
    expect_kind(grid, ExperimentKind::CoherenceSweep)?;
    let rank = grid.ranks[0];
    let fraction = grid.fractions[0];
    let cfg = grid.solver_config();
    let tag = grid.experiment.tag();
    let rows = map_cells(&grid.subspaces, workers, |&k| -> Result<CoherenceRow> {
        let mut cell = CellResult::new(grid.success_threshold);
        let (mut mu1, mut mu2) = (Vec::new(), Vec::new());
        for trial in 0..grid.trials_per_cell {
            let seed = mix_seed(grid.base_seed, &[tag, k as u64, trial as u64]);
            let spec = SubspaceMixSpec::even(grid.rows, grid.cols, k, rank, seed)?;
            let l0 = gen_subspace_mixture(&spec)?;
            let c = coherence(&l0)?;
            mu1.push(c.mu1);
            mu2.push(c.mu2);
            let omega = ObservationSet::sample_fraction(grid.rows, grid.cols, fraction, mix_seed(seed, &[1]))?;
            let (rep, secs) = timed(|| solve_cono(&l0, &omega, &cfg));
            cell.push(recovery_error(&rep?.reconstruction, &l0)?, secs);
        }
        Ok(CoherenceRow {
            subspaces: k,
            dim_per_subspace: rank / k,
            mean_mu1: mean(&mu1),
            mean_mu2: mean(&mu2),
            cono: cell,
        })
    });
    rows.into_iter().collect()
}

pub fn coherence_csv(rows: &[CoherenceRow]) -> String {
    let mut s = format!("{COHERENCE_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{:.6e},{:.6e},{:.6e},{},{:.3}",
            r.subspaces,
            r.dim_per_subspace,
            r.cono.trials(),
            r.mean_mu1,
            r.mean_mu2,
            r.cono.mean_error(),
            r.cono.successes(),
            r.cono.mean_wall()
        );
    }
    s
}

// ---------------------------------------------------------------------------
// Coherent rank-1 sweep over dictionary rank

#[derive(Clone, Debug, PartialEq)]
pub struct Fig3Row {
    pub algorithm: Algorithm,
    /// `rank(A)`; 0 for the completion baseline, which has no dictionary.
    pub dictionary_rank: usize,
    pub cell: CellResult,
}

pub const FIG3_HEADER: &str = "algorithm,dictionary_rank,trials,successes,mean_error,max_error,mean_wall_seconds";

/// Trial data shared by every dictionary rank: the matrix and the mask.
pub fn fig3_instance(grid: &ExperimentGrid, trial: usize) -> Result<(DenseMatrix, ObservationSet)> {
    let n = grid.rows;
    let l0 = gen_coherent_rank1(n)?;
    let count = (grid.fractions[0] * (n * n) as f64).round() as usize;
    let seed = mix_seed(grid.base_seed, &[ExperimentKind::Fig3Sweep.tag(), trial as u64]);
    let omega = ObservationSet::sample(n, n, SamplingModel::UniformExactCount { count }, seed)?;
    Ok((l0, omega))
}

/// Dictionary `[𝟏, W]` of the given rank for one trial.
pub fn fig3_dictionary(grid: &ExperimentGrid, rank: usize, trial: usize) -> Result<DenseMatrix> {
    let seed = mix_seed(
        grid.base_seed,
        &[ExperimentKind::Fig3Sweep.tag(), trial as u64, rank as u64],
    );
    gen_fig3_dictionary(grid.rows, rank - 1, seed)
}

pub fn run_fig3_sweep(grid: &ExperimentGrid, workers: usize) -> Result<Vec<Fig3Row>> {
    expect_kind(grid, ExperimentKind::Fig3Sweep)?;
    if grid.rows != grid.cols {
        return Err(Error::InvalidParameter("the coherent rank-1 instance is square".into()));
    }
    let cfg = grid.solver_config();
    let mut cells: Vec<Option<usize>> = grid.dictionary_ranks.iter().map(|&r| Some(r)).collect();
    cells.push(None);
    let rows = map_cells(&cells, workers, |cell| -> Result<Fig3Row> {
        let mut out = CellResult::new(grid.success_threshold);
        for trial in 0..grid.trials_per_cell {
            let (l0, omega) = fig3_instance(grid, trial)?;
            let (rep, secs) = match cell {
                Some(r) => {
                    let a = fig3_dictionary(grid, *r, trial)?;
                    timed(|| solve_lrfd(&l0, &a, &omega, &cfg))
                }
                None => timed(|| solve_cono(&l0, &omega, &cfg)),
            };
            out.push(recovery_error(&rep?.reconstruction, &l0)?, secs);
        }
        Ok(Fig3Row {
            algorithm: if cell.is_some() { Algorithm::Lrfd } else { Algorithm::Cono },
            dictionary_rank: cell.unwrap_or(0),
            cell: out,
        })
    });
    rows.into_iter().collect()
}

pub fn fig3_csv(rows: &[Fig3Row]) -> String {
    let mut s = format!("{FIG3_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{:.6e},{:.6e},{:.3}",
            r.algorithm.name(),
            r.dictionary_rank,
            r.cell.trials(),
            r.cell.successes(),
            r.cell.mean_error(),
            r.cell.max_error(),
            r.cell.mean_wall()
        );
    }
    s
}

// ---------------------------------------------------------------------------
// Phase diagram

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseCell {
    pub rank: usize,
    pub fraction: f64,
    pub cono: CellResult,
    pub two_stage: CellResult,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseSummary {
    pub cells: usize,
    pub cono_cells: usize,
    pub two_stage_cells: usize,
}

impl PhaseSummary {
    pub fn cono_area(&self) -> f64 {
        self.cono_cells as f64 / self.cells as f64
    }

    pub fn two_stage_area(&self) -> f64 {
        self.two_stage_cells as f64 / self.cells as f64
    }
}

pub const PHASE_HEADER: &str = "row_kind,rank,fraction,algorithm,trials,successes,mean_error,mean_wall_seconds,area";

/// Planted instance of one phase-diagram trial.
pub fn phase_instance(
    grid: &ExperimentGrid,
    rank: usize,
    fraction: f64,
    trial: usize,
) -> Result<(DenseMatrix, ObservationSet)> {
    let seed = mix_seed(
        grid.base_seed,
        &[ExperimentKind::PhaseDiagram.tag(), rank as u64, fraction.to_bits(), trial as u64],
    );
    let spec = SubspaceMixSpec::even(grid.rows, grid.cols, grid.subspaces[0], rank, seed)?;
    let l0 = gen_subspace_mixture(&spec)?;
    let omega = ObservationSet::sample_fraction(grid.rows, grid.cols, fraction, mix_seed(seed, &[1]))?;
    Ok((l0, omega))
}

/// One trial: the completion solve doubles as the first stage.
pub fn phase_trial(
    grid: &ExperimentGrid,
    rank: usize,
    fraction: f64,
    trial: usize,
) -> Result<((f64, f64), (f64, f64))> {
    let cfg = grid.solver_config();
    let (l0, omega) = phase_instance(grid, rank, fraction, trial)?;
    let (cono, t1) = timed(|| solve_cono(&l0, &omega, &cfg));
    let cono = cono?;
    let cono_err = recovery_error(&cono.reconstruction, &l0)?;
    let (alg1, t2) = timed(|| finish_algorithm1(&l0, &omega, &cfg, cono));
    let alg1_err = match alg1 {
        Ok(r) => recovery_error(&r.final_estimate, &l0)?,
        // A vanishing first-stage estimate leaves only the zero matrix.
        Err(Error::DegenerateEstimate) => 1.0,
        Err(e) => return Err(e),
    };
    Ok(((cono_err, t1), (alg1_err, t1 + t2)))
}

pub fn run_phase_diagram(grid: &ExperimentGrid, workers: usize) -> Result<(Vec<PhaseCell>, PhaseSummary)> {
    expect_kind(grid, ExperimentKind::PhaseDiagram)?;
    let k = grid.subspaces[0];
    if let Some(r) = grid.ranks.iter().find(|&&r| r % k != 0 || r > grid.rows.min(grid.cols)) {
        return Err(Error::InvalidParameter(format!("rank {r} is not a multiple of {k} or too large")));
    }
    let coords: Vec<(usize, f64)> = grid
        .ranks
        .iter()
        .flat_map(|&r| grid.fractions.iter().map(move |&f| (r, f)))
        .collect();
    let cells = map_cells(&coords, workers, |&(rank, fraction)| -> Result<PhaseCell> {
        let mut cono = CellResult::new(grid.success_threshold);
        let mut two = CellResult::new(grid.success_threshold);
        for trial in 0..grid.trials_per_cell {
            let ((e1, t1), (e2, t2)) = phase_trial(grid, rank, fraction, trial)?;
            cono.push(e1, t1);
            two.push(e2, t2);
        }
        Ok(PhaseCell {
            rank,
            fraction,
            cono,
            two_stage: two,
        })
    });
    let cells: Vec<PhaseCell> = cells.into_iter().collect::<Result<_>>()?;
    let summary = PhaseSummary {
        cells: cells.len(),
        cono_cells: cells.iter().filter(|c| c.cono.majority_success()).count(),
        two_stage_cells: cells.iter().filter(|c| c.two_stage.majority_success()).count(),
    };
    Ok((cells, summary))
}

pub fn phase_csv(cells: &[PhaseCell], summary: &PhaseSummary) -> String {
    let mut s = format!("{PHASE_HEADER}\n");
    for c in cells {
        for (alg, r) in [(Algorithm::Cono, &c.cono), (Algorithm::TwoStage, &c.two_stage)] {
            let _ = writeln!(
                s,
                "cell,{},{},{},{},{},{:.6e},{:.3},",
                c.rank,
                c.fraction,
                alg.name(),
                r.trials(),
                r.successes(),
                r.mean_error(),
                r.mean_wall()
            );
        }
    }
    for (alg, count, area) in [
        (Algorithm::Cono, summary.cono_cells, summary.cono_area()),
        (Algorithm::TwoStage, summary.two_stage_cells, summary.two_stage_area()),
    ] {
        let _ = writeln!(s, "area,,,{},{},{},,,{:.6}", alg.name(), summary.cells, count, area);
    }
    s
}

// ---------------------------------------------------------------------------
// Lemma check

#[derive(Clone, Debug, PartialEq)]
pub struct LemmaRow {
    pub rank: usize,
    pub rho: f64,
    /// Measured `‖P_U P_{Ω⊥} P_U‖` per trial.
    pub norms: Vec<f64>,
    /// `1 − ρ₀ + δ`.
    pub bound: f64,
    /// Neumann residual per trial; `None` when the series diverges.
    pub neumann_residuals: Vec<Option<f64>>,
}

impl LemmaRow {
    pub fn violations(&self) -> usize {
        self.norms.iter().filter(|&&n| n > self.bound).count()
    }

    /// Trials with `ψ < psi_max` whose Neumann residual is at least `tol`.
    pub fn neumann_failures(&self, psi_max: f64, tol: f64) -> (usize, usize) {
        let mut checked = 0;
        let mut failed = 0;
        for (&psi, res) in self.norms.iter().zip(&self.neumann_residuals) {
            if psi < psi_max {
                checked += 1;
                if res.map_or(true, |r| r >= tol) {
                    failed += 1;
                }
            }
        }
        (checked, failed)
    }
}

/// Residual cutoff and `ψ` range of the Neumann check in the CSV.
pub const NEUMANN_TOL: f64 = 1e-8;
pub const NEUMANN_PSI_MAX: f64 = 0.7;

pub const LEMMA_HEADER: &str = "rank,rho,trials,mean_norm,max_norm,bound,violations,lemma1_pass,neumann_checked,neumann_failures,neumann_diverged,max_neumann_residual,lemma2_pass";

/// Random basis and Bernoulli mask of one lemma-check trial.
pub fn lemma_instance(
    grid: &ExperimentGrid,
    rank: usize,
    rho: f64,
    trial: usize,
) -> Result<(SubspaceBasis, ObservationSet)> {
    let seed = mix_seed(
        grid.base_seed,
        &[ExperimentKind::LemmaCheck.tag(), rank as u64, rho.to_bits(), trial as u64],
    );
    let q = qr_orthonormal(&gaussian_matrix(grid.rows, rank, &mut rng_from_seed(seed)))?;
    let omega = ObservationSet::sample(grid.rows, grid.cols, SamplingModel::Bernoulli { rho }, mix_seed(seed, &[1]))?;
    Ok((SubspaceBasis::new(q)?, omega))
}

pub fn run_lemma_check(grid: &ExperimentGrid, workers: usize) -> Result<Vec<LemmaRow>> {
    expect_kind(grid, ExperimentKind::LemmaCheck)?;
    let coords: Vec<(usize, f64)> = grid
        .ranks
        .iter()
        .flat_map(|&r| grid.fractions.iter().map(move |&f| (r, f)))
        .collect();
    let rows = map_cells(&coords, workers, |&(rank, rho)| -> Result<LemmaRow> {
        let mut norms = Vec::new();
        let mut residuals = Vec::new();
        for trial in 0..grid.trials_per_cell {
            let (u, omega) = lemma_instance(grid, rank, rho, trial)?;
            norms.push(lemma1_operator_norm(&u, &omega)?);
            residuals.push(match lemma2_inverse_check(&u, &omega, grid.lemma_terms) {
                Ok(r) => Some(r),
                Err(Error::NeumannDiverges { .. }) => None,
                Err(e) => return Err(e),
            });
        }
        Ok(LemmaRow {
            rank,
            rho,
            norms,
            bound: 1.0 - rho + grid.lemma_delta,
            neumann_residuals: residuals,
        })
    });
    rows.into_iter().collect()
}

pub fn lemma_csv(rows: &[LemmaRow]) -> String {
    let mut s = format!("{LEMMA_HEADER}\n");
    for r in rows {
        let (checked, failed) = r.neumann_failures(NEUMANN_PSI_MAX, NEUMANN_TOL);
        let diverged = r.neumann_residuals.iter().filter(|x| x.is_none()).count();
        let max_res = r.neumann_residuals.iter().flatten().copied().fold(0.0, f64::max);
        let _ = writeln!(
            s,
            "{},{},{},{:.6e},{:.6e},{:.6},{},{},{},{},{},{:.3e},{}",
            r.rank,
            r.rho,
            r.norms.len(),
            mean(&r.norms),
            r.norms.iter().copied().fold(0.0, f64::max),
            r.bound,
            r.violations(),
            r.violations() == 0,
            checked,
            failed,
            diverged,
            max_res,
            failed == 0
        );
    }
    s
}

// ---------------------------------------------------------------------------
// Single completion from files

#[derive(Clone, Debug, PartialEq)]
pub struct CompleteReport {
    pub algorithm: Algorithm,
    pub lambda: f64,
    pub iterations: usize,
    pub converged: bool,
    pub residual_norm: f64,
    pub objective: f64,
    /// Rank of the learnt dictionary, or of the supplied one.
    pub dictionary_rank: Option<usize>,
}

pub const COMPLETE_HEADER: &str = "algorithm,lambda,iterations,converged,residual_norm,objective,dictionary_rank";

impl CompleteReport {
    pub fn csv(&self) -> String {
        format!(
            "{COMPLETE_HEADER}\n{},{},{},{},{:.16e},{:.16e},{}\n",
            self.algorithm.name(),
            self.lambda,
            self.iterations,
            self.converged,
            self.residual_norm,
            self.objective,
            self.dictionary_rank.map(|r| r.to_string()).unwrap_or_default()
        )
    }
}

/// Completes `x` on `omega`. `cono` solves the completion program, `lrfd`
/// with a dictionary solves LRFD with its normalized columns, and `lrfd`
/// without one runs both stages.
pub fn complete(
    x: &DenseMatrix,
    omega: &ObservationSet,
    dictionary: Option<&DenseMatrix>,
    algorithm: &str,
    cfg: &SolverConfig,
) -> Result<(DenseMatrix, CompleteReport)> {
    omega.check_shape(x)?;
    match (algorithm, dictionary) {
        ("cono", None) => {
            let rep = solve_cono(x, omega, cfg)?;
            let report = CompleteReport {
                algorithm: Algorithm::Cono,
                lambda: cfg.lambda,
                iterations: rep.iterations,
                converged: rep.converged,
                residual_norm: rep.residual_norm,
                objective: rep.objective,
                dictionary_rank: None,
            };
            Ok((rep.reconstruction, report))
        }
        ("cono", Some(_)) => Err(Error::InvalidParameter("cono takes no dictionary".into())),
        ("lrfd", Some(a)) => {
            let a = normalize_columns(a)?;
            let rep = solve_lrfd(x, &a, omega, cfg)?;
            let report = CompleteReport {
                algorithm: Algorithm::Lrfd,
                lambda: cfg.lambda,
                iterations: rep.iterations,
                converged: rep.converged,
                residual_norm: rep.residual_norm,
                objective: rep.objective,
                dictionary_rank: Some(crate::linalg::thin_svd(&a)?.rank()),
            };
            Ok((rep.reconstruction, report))
        }
        ("lrfd", None) => {
            let cono = solve_cono(x, omega, cfg)?;
            let res = finish_algorithm1(x, omega, cfg, cono)?;
            let report = CompleteReport {
                algorithm: Algorithm::TwoStage,
                lambda: cfg.lambda,
                iterations: res.cono_report.iterations + res.lrfd_report.iterations,
                converged: res.cono_report.converged && res.lrfd_report.converged,
                residual_norm: res.lrfd_report.residual_norm,
                objective: res.lrfd_report.objective,
                dictionary_rank: Some(res.rank_estimate),
            };
            Ok((res.final_estimate, report))
        }
        (other, _) => Err(Error::InvalidParameter(format!(
            "unknown algorithm `{other}` (expected cono or lrfd)"
        ))),
    }
}

/// File-based [`complete`]: reads the matrix, mask and optional dictionary
/// named in the grid, writes the completed matrix to `out` and the report
/// to `report` (default: `out` with `.report.csv` appended).
pub fn run_single_complete(grid: &ExperimentGrid) -> Result<CompleteReport> {
    let need = |p: &Option<PathBuf>, what: &str| {
        p.clone()
            .ok_or_else(|| Error::InvalidParameter(format!("complete needs a {what} path")))
    };
    let matrix_path = need(&grid.matrix_path, "matrix")?;
    let mask_path = need(&grid.mask_path, "mask")?;
    let out = need(&grid.output_path, "output")?;
    let x = load_matrix(&matrix_path)?;
    let omega = ObservationSet::load(&mask_path)?;
    let a = grid.dictionary_path.as_ref().map(load_matrix).transpose()?;
    let algorithm = grid.algorithm.as_deref().unwrap_or("lrfd");
    let (m, report) = complete(&x, &omega, a.as_ref(), algorithm, &grid.solver_config())?;
    save_matrix(&m, &out)?;
    let report_path = grid.report_path.clone().unwrap_or_else(|| default_report_path(&out));
    fs::write(report_path, report.csv())?;
    Ok(report)
}

pub fn default_report_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".report.csv");
    PathBuf::from(s)
}

fn expect_kind(grid: &ExperimentGrid, kind: ExperimentKind) -> Result<()> {
    if grid.experiment != kind {
        return Err(Error::InvalidParameter(format!(
            "grid is for {}, not {}",
            grid.experiment.name(),
            kind.name()
        )));
    }
    grid.validate()
}

/// Runs a sweep experiment and returns its CSV text.
pub fn run_to_csv(grid: &ExperimentGrid, workers: usize) -> Result<String> {
    Ok(match grid.experiment {
        ExperimentKind::CoherenceSweep => coherence_csv(&run_coherence_sweep(grid, workers)?),
        ExperimentKind::Fig3Sweep => fig3_csv(&run_fig3_sweep(grid, workers)?),
        ExperimentKind::PhaseDiagram => {
            let (cells, summary) = run_phase_diagram(grid, workers)?;
            phase_csv(&cells, &summary)
        }
        ExperimentKind::LemmaCheck => lemma_csv(&run_lemma_check(grid, workers)?),
        ExperimentKind::SingleComplete => run_single_complete(grid)?.csv(),
    })
}
