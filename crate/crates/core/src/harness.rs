//! Batch experiments over problem suites.
//!
//! Two studies are provided. The ratio study stops the perturbed and the
//! unperturbed method after the same number of iterations and scores the
//! predicted active sets. The crossover study runs the perturbed method to its
//! stopping rule, runs the unperturbed one for the same number of iterations,
//! and finishes both predictions with the active-set method.
//!
//! Instances are independent. With the `parallel` feature they are spread over
//! the rayon pool; results are collected in instance order, so the output does
//! not depend on scheduling.

use std::path::PathBuf;

use crate::asqp::{active_set_solve, crossover_from, SubproblemStatus};
use crate::gen::{generate, GenParams, ProblemKind};
use crate::io::{read_qps_file, CrossoverFigures, CrossoverRecord, RatioRow};
use crate::ipm::{solve, SolveOptions, SolveReport, SolveStatus};
use crate::model::{optimal_partition, IndexSet, StandardQP, ZERO_TOL};
use crate::predict::{prediction_ratios, PredictionRatios};
use crate::{Error, Result};

/// Where instances come from.
#[derive(Debug, Clone, PartialEq)]
pub enum Suite {
    Generated(ProblemKind),
    /// Every `*.qps` file in the directory, in file-name order.
    QpsDirectory(PathBuf),
}

impl std::str::FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.parse::<ProblemKind>() {
            Ok(kind) => Ok(Self::Generated(kind)),
            Err(_) => {
                let path = PathBuf::from(s);
                if path.is_dir() {
                    Ok(Self::QpsDirectory(path))
                } else {
                    Err(Error::InvalidParameter(format!(
                        "suite `{s}` is neither qts1, qts2 nor a directory"
                    )))
                }
            }
        }
    }
}

/// How instances are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Self::Parallel
        } else {
            Self::Sequential
        }
    }
}

/// Reference active set used to score predictions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GroundTruth {
    /// The generator's solution for QTS2, the active-set reference otherwise.
    #[default]
    Default,
    /// The unperturbed interior point method run to `μ < 1e-8`.
    InteriorPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub suite: Suite,
    /// One generated instance per seed. Ignored for QPS directories.
    pub seeds: Vec<u64>,
    /// Template for generated instances; its seed is overwritten.
    pub generator: GenParams,
    pub stop_iterations: Vec<usize>,
    pub options_perturbed: SolveOptions,
    pub options_unperturbed: SolveOptions,
    pub ground_truth: GroundTruth,
    pub execution: Execution,
}

impl ExperimentConfig {
    /// `count` consecutive seeds from `base_seed`, stop sweep `2, 4, …, 20`.
    pub fn new(suite: Suite, base_seed: u64, count: usize) -> Self {
        let perturbed = SolveOptions::default();
        Self {
            suite,
            seeds: (0..count as u64).map(|k| base_seed + k).collect(),
            generator: GenParams::default(),
            stop_iterations: (1..=10).map(|k| 2 * k).collect(),
            options_unperturbed: perturbed.unperturbed(),
            options_perturbed: perturbed,
            ground_truth: GroundTruth::Default,
            execution: Execution::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if matches!(self.suite, Suite::Generated(_)) && self.seeds.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one instance is required".into(),
            ));
        }
        if self.stop_iterations.is_empty() || self.stop_iterations[0] == 0 {
            return Err(Error::InvalidParameter(
                "stop iterations must be positive".into(),
            ));
        }
        if self.stop_iterations.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "stop iterations must be strictly increasing".into(),
            ));
        }
        if self.options_unperturbed.initial_perturbation != 0.0 {
            return Err(Error::InvalidParameter(
                "the unperturbed arm needs a zero perturbation".into(),
            ));
        }
        self.generator.validate()?;
        self.options_perturbed.validate()?;
        self.options_unperturbed.validate()
    }
}

/// A loaded instance with its reference data.
pub struct Instance {
    pub qp: StandardQP,
    /// Reference optimum from the active-set method.
    pub x_ref: crate::linalg::Vector,
    pub truth: IndexSet,
}

enum Source {
    Generated(ProblemKind, GenParams),
    File(PathBuf),
}

fn sources(cfg: &ExperimentConfig) -> Result<Vec<Source>> {
    match &cfg.suite {
        Suite::Generated(kind) => Ok(cfg
            .seeds
            .iter()
            .map(|&seed| {
                Source::Generated(
                    *kind,
                    GenParams {
                        seed,
                        ..cfg.generator.clone()
                    },
                )
            })
            .collect()),
        Suite::QpsDirectory(dir) => {
            let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("qps")))
                .collect();
            files.sort();
            Ok(files.into_iter().map(Source::File).collect())
        }
    }
}

fn active_below(x: &crate::linalg::Vector, tol: f64) -> IndexSet {
    (0..x.len()).filter(|&i| x[i] < tol).collect()
}

fn load(source: &Source, truth: GroundTruth) -> Result<Instance> {
    let (qp, known) = match source {
        Source::Generated(kind, params) => {
            let g = generate(*kind, params)?;
            let known = (*kind == ProblemKind::Qts2).then_some(g.point);
            (g.qp, known)
        }
        Source::File(path) => (read_qps_file(path)?.0, None),
    };
    let x_ref = active_set_solve(&qp, None)?.x;
    let truth = match (truth, known) {
        (GroundTruth::Default, Some(p)) => optimal_partition(&p.x, &p.s, 0.0)?.active(),
        (GroundTruth::Default, None) => active_below(&x_ref, ZERO_TOL),
        (GroundTruth::InteriorPoint, _) => {
            let opts = SolveOptions {
                mu_tolerance: 1e-8,
                ..SolveOptions::default().unperturbed()
            };
            let report = solve(&qp, &opts)?;
            if report.status != SolveStatus::Converged {
                return Err(Error::InvalidParameter(format!(
                    "{}: reference interior point run ended with {}",
                    qp.name(),
                    report.status.as_str()
                )));
            }
            active_below(&report.final_iterate.x, ZERO_TOL)
        }
    };
    Ok(Instance { qp, x_ref, truth })
}

fn for_each_instance<T, F>(execution: Execution, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if execution == Execution::Parallel {
        use rayon::prelude::*;
        return (0..count).into_par_iter().map(f).collect();
    }
    let _ = execution;
    (0..count).map(f).collect()
}

/// Options that run exactly `k` iterations unless the method breaks down.
fn fixed_iterations(opts: &SolveOptions, k: usize) -> SolveOptions {
    SolveOptions {
        mu_tolerance: f64::MIN_POSITIVE,
        max_iterations: k,
        stagnation_window: 0,
        ..opts.clone()
    }
}

#[derive(Debug, Clone, PartialEq)]
struct StopScore {
    per: PredictionRatios,
    unp: PredictionRatios,
    residual_per: f64,
    residual_unp: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioExperiment {
    pub rows: Vec<RatioRow>,
    pub instances: usize,
    /// Instances that could not be loaded or solved at all.
    pub failures: usize,
}

fn ratio_instance(cfg: &ExperimentConfig, source: &Source) -> Result<Vec<Option<StopScore>>> {
    let inst = load(source, cfg.ground_truth)?;
    let k_max = *cfg.stop_iterations.last().expect("validated");
    let per = solve(&inst.qp, &fixed_iterations(&cfg.options_perturbed, k_max))?;
    let unp = solve(&inst.qp, &fixed_iterations(&cfg.options_unperturbed, k_max))?;
    Ok(cfg
        .stop_iterations
        .iter()
        .map(|&k| {
            let (a, b) = (per.predicted_active_at(k)?, unp.predicted_active_at(k)?);
            debug_assert_eq!(per.trace[k - 1].iteration, unp.trace[k - 1].iteration);
            Some(StopScore {
                per: prediction_ratios(a, &inst.truth),
                unp: prediction_ratios(b, &inst.truth),
                residual_per: per.trace[k - 1].residual,
                residual_unp: unp.trace[k - 1].residual,
            })
        })
        .collect())
}

/// Prediction ratios of both methods stopped at each `K` in the sweep.
///
/// An instance that did not reach `K` in both runs is left out of that row;
/// `n_ok` counts the instances that remain.
pub fn run_ratio_experiment(cfg: &ExperimentConfig) -> Result<RatioExperiment> {
    cfg.validate()?;
    let sources = sources(cfg)?;
    let results = for_each_instance(cfg.execution, sources.len(), |i| {
        ratio_instance(cfg, &sources[i])
    });
    let mut failures = 0;
    let mut ok: Vec<Vec<Option<StopScore>>> = Vec::new();
    for r in results {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => {
                log::warn!("ratio experiment instance failed: {e}");
                failures += 1;
            }
        }
    }
    let rows = cfg
        .stop_iterations
        .iter()
        .enumerate()
        .map(|(j, &k)| {
            let scores: Vec<&StopScore> = ok.iter().filter_map(|v| v[j].as_ref()).collect();
            let n = scores.len();
            let mean = |f: &dyn Fn(&StopScore) -> f64| {
                if n == 0 {
                    f64::NAN
                } else {
                    scores.iter().map(|s| f(s)).sum::<f64>() / n as f64
                }
            };
            RatioRow {
                k,
                false_per: mean(&|s| s.per.false_prediction),
                missed_per: mean(&|s| s.per.missed_prediction),
                correction_per: mean(&|s| s.per.correction),
                false_unp: mean(&|s| s.unp.false_prediction),
                missed_unp: mean(&|s| s.unp.missed_prediction),
                correction_unp: mean(&|s| s.unp.correction),
                log10_residual_per: mean(&|s| s.residual_per).log10(),
                log10_residual_unp: mean(&|s| s.residual_unp).log10(),
                n_ok: n,
            }
        })
        .collect();
    Ok(RatioExperiment {
        rows,
        instances: sources.len(),
        failures,
    })
}

/// Per-instance details of the crossover study beyond the table columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossoverDetail {
    pub perturbed: SubproblemStatus,
    pub unperturbed: SubproblemStatus,
    pub predicted_per: usize,
    pub predicted_unp: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossoverExperiment {
    pub records: Vec<CrossoverRecord>,
    pub details: Vec<Option<CrossoverDetail>>,
    pub failures: usize,
}

fn crossover_instance(
    cfg: &ExperimentConfig,
    inst: &Instance,
) -> Result<(CrossoverFigures, CrossoverDetail)> {
    let qp = &inst.qp;
    let per: SolveReport = solve(qp, &cfg.options_perturbed)?;
    if per.status != SolveStatus::Converged {
        return Err(Error::InvalidParameter(format!(
            "{}: perturbed run ended with {}",
            qp.name(),
            per.status.as_str()
        )));
    }
    let k = per.iterations;
    let unp = solve(qp, &fixed_iterations(&cfg.options_unperturbed, k))?;
    if unp.iterations != k {
        return Err(Error::InvalidParameter(format!(
            "{}: unperturbed run stopped after {} of {k} iterations",
            qp.name(),
            unp.iterations
        )));
    }
    let cp = crossover_from(
        qp,
        &per.prediction.active,
        &inst.x_ref,
        Some(&per.final_iterate.x),
    )?;
    let cu = crossover_from(
        qp,
        &unp.prediction.active,
        &inst.x_ref,
        Some(&unp.final_iterate.x),
    )?;
    Ok((
        CrossoverFigures {
            mu_lambda: per.final_mu_lambda(),
            mu: unp.final_mu(),
            ipm_iterations: k,
            active_iterations_per: cp.score.active_set_iterations,
            active_iterations_unp: cu.score.active_set_iterations,
            feasibility_error_per: cp.score.feasibility_error,
            feasibility_error_unp: cu.score.feasibility_error,
            objective_error_per: cp.score.objective_error,
            objective_error_unp: cu.score.objective_error,
        },
        CrossoverDetail {
            perturbed: cp.status,
            unperturbed: cu.status,
            predicted_per: per.prediction.active.len(),
            predicted_unp: unp.prediction.active.len(),
        },
    ))
}

/// Crossover study; one record per instance, failures kept as empty rows.
pub fn run_crossover_experiment(cfg: &ExperimentConfig) -> Result<CrossoverExperiment> {
    cfg.validate()?;
    let sources = sources(cfg)?;
    let results = for_each_instance(cfg.execution, sources.len(), |i| {
        let label = match &sources[i] {
            Source::Generated(kind, p) => {
                (format!("{}-{}", kind.as_str().to_uppercase(), p.seed), 0, 0)
            }
            Source::File(path) => (path.display().to_string(), 0, 0),
        };
        match load(&sources[i], cfg.ground_truth) {
            Ok(inst) => {
                let (m, n) = (inst.qp.m(), inst.qp.n());
                let name = inst.qp.name().to_string();
                (name, m, n, crossover_instance(cfg, &inst))
            }
            Err(e) => (label.0, label.1, label.2, Err(e)),
        }
    });
    let mut records = Vec::new();
    let mut details = Vec::new();
    let mut failures = 0;
    for (name, m, n, r) in results {
        let (result, detail) = match r {
            Ok((f, d)) => (Some(f), Some(d)),
            Err(e) => {
                log::warn!("crossover experiment: {name}: {e}");
                failures += 1;
                (None, None)
            }
        };
        records.push(CrossoverRecord { name, m, n, result });
        details.push(detail);
    }
    Ok(CrossoverExperiment {
        records,
        details,
        failures,
    })
}
