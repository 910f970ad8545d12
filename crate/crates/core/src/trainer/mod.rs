//! Self-learning bootstrap: solve on the current lexicon, map, re-induce the
//! lexicon with CSLS, repeat.
//!
//! Alignment modes are [`Aligner`] strategies looked up by name in an
//! [`AlignerRegistry`]; all of them drive the shared epoch loop in
//! [`run_epochs`].

mod checkpoint;
mod strategy;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::embedspace::EmbeddingSpace;
use crate::error::{Error, Result};
use crate::lexicon::{triangulate, Lexicon, PairLexicon};
use crate::retrieval::{induce_pairs, CslsIndex, InduceParams, RankFilter, DEFAULT_K_DENSITY, DEFAULT_RANK_MAX};
use crate::solver::{compose_to_target, gpa_solve, procrustes_solve, GpaInit, GpaParams, OrthogonalMap, DEFAULT_GPA_TOLERANCE, DEFAULT_INNER_ITERS};

pub use checkpoint::{CheckpointDir, EpochObserver, MAP_FILE, METRICS_FILE};
pub use strategy::{Aligner, AlignerRegistry, GpaAligner, MgpaAligner, MgpaPlusAligner, PaAligner};

pub const DEFAULT_PATIENCE: usize = 5;
pub const DEFAULT_MAX_EPOCHS: usize = 100;
pub const DEFAULT_VALIDATION_TOP: usize = 10_000;
pub const DEFAULT_MGPA_EPOCHS: usize = 10;
pub const DEFAULT_FINETUNE_EPOCHS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Pa,
    Gpa,
    Mgpa,
    MgpaPlus,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Pa, Mode::Gpa, Mode::Mgpa, Mode::MgpaPlus];

    /// Registry key of the aligner implementing this mode.
    pub fn name(self) -> &'static str {
        match self {
            Mode::Pa => "pa",
            Mode::Gpa => "gpa",
            Mode::Mgpa => "mgpa",
            Mode::MgpaPlus => "mgpa+",
        }
    }

    pub fn spaces_required(self) -> usize {
        match self {
            Mode::Pa | Mode::Gpa => 2,
            Mode::Mgpa | Mode::MgpaPlus => 3,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pa" => Ok(Mode::Pa),
            "gpa" => Ok(Mode::Gpa),
            "mgpa" => Ok(Mode::Mgpa),
            "mgpa+" | "mgpa_plus" | "mgpa-plus" => Ok(Mode::MgpaPlus),
            other => Err(Error::InvalidArgument(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub mode: Mode,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    /// Hard cap on early-stopped runs.
    pub max_epochs: usize,
    pub inner_iters: usize,
    pub gpa_tolerance: Option<f64>,
    pub rank_max: usize,
    pub rank_filter: RankFilter,
    pub mutual: bool,
    /// Union the induced lexicon with the previous one instead of replacing it.
    pub union_lexicon: bool,
    pub csls_k_density: usize,
    pub validation_top: usize,
    pub mgpa_epochs: usize,
    pub finetune_epochs: usize,
    pub rng_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            mode: Mode::Gpa,
            patience: DEFAULT_PATIENCE,
            max_epochs: DEFAULT_MAX_EPOCHS,
            inner_iters: DEFAULT_INNER_ITERS,
            gpa_tolerance: Some(DEFAULT_GPA_TOLERANCE),
            rank_max: DEFAULT_RANK_MAX,
            rank_filter: RankFilter::Both,
            mutual: true,
            union_lexicon: false,
            csls_k_density: DEFAULT_K_DENSITY,
            validation_top: DEFAULT_VALIDATION_TOP,
            mgpa_epochs: DEFAULT_MGPA_EPOCHS,
            finetune_epochs: DEFAULT_FINETUNE_EPOCHS,
            rng_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("max_epochs", self.max_epochs),
            ("inner_iters", self.inner_iters),
            ("rank_max", self.rank_max),
            ("csls_k_density", self.csls_k_density),
            ("validation_top", self.validation_top),
            ("mgpa_epochs", self.mgpa_epochs),
            ("finetune_epochs", self.finetune_epochs),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        if let Some(t) = self.gpa_tolerance {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::InvalidArgument(format!("gpa_tolerance {t} is invalid")));
            }
        }
        Ok(())
    }

    fn gpa_params(&self) -> GpaParams {
        GpaParams {
            inner_iters: self.inner_iters,
            tolerance: self.gpa_tolerance,
        }
    }

    fn induce_params(&self) -> InduceParams {
        InduceParams {
            rank_max: self.rank_max,
            mutual: self.mutual,
            filter: self.rank_filter,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Main,
    /// Two-way fine-tuning after a three-way phase.
    Finetune,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    /// 1-based, continuous across phases.
    pub epoch: usize,
    pub phase: Phase,
    /// Size of the lexicon induced at the end of the epoch.
    pub dict_size: usize,
    pub validation: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Patience,
    EpochBudget,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::Patience => "patience",
            StopReason::EpochBudget => "epoch-budget",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub stop_reason: StopReason,
    /// Last epoch of the three-way phase when fine-tuning followed.
    pub phase_boundary: Option<usize>,
    /// GPA epochs after the first start from the previous epoch's transforms.
    pub warm_start: bool,
    /// Latent-mean seed index of the first GPA solve.
    pub init_index: Option<usize>,
}

impl TrainReport {
    pub fn best(&self) -> &EpochRecord {
        self.epochs
            .iter()
            .find(|r| r.epoch == self.best_epoch)
            .expect("best epoch is recorded")
    }

    pub fn dict_sizes(&self) -> Vec<usize> {
        self.epochs.iter().map(|r| r.dict_size).collect()
    }
}

/// Best transforms plus the state needed to continue training.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Per-space transforms of the best-validation epoch, pivot first.
    pub transforms: Vec<OrthogonalMap>,
    pub report: TrainReport,
    pub last_transforms: Vec<OrthogonalMap>,
    /// Lexicon induced by the last epoch.
    pub last_lexicon: Lexicon,
}

impl TrainOutcome {
    /// Pivot → target map of the best epoch.
    pub fn composed(&self) -> Result<OrthogonalMap> {
        compose_to_target(&self.transforms[0], &self.transforms[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Procrustes,
    Generalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    /// Stop after `patience` epochs without improvement, or at `max_epochs`.
    EarlyStop { patience: usize, max_epochs: usize },
    /// Run exactly this many epochs.
    Fixed(usize),
}

#[derive(Debug, Clone)]
pub struct EpochPlan {
    pub solver: Solver,
    pub schedule: Schedule,
    /// Initial transforms for the first GPA solve.
    pub warm_start: Option<Vec<OrthogonalMap>>,
    pub phase: Phase,
    /// Number given to the first epoch.
    pub first_epoch: usize,
}

/// Mean cosine between each of the `top_n` most frequent source words, mapped,
/// and its CSLS top-1 target.
pub fn validation_metric(
    src: &EmbeddingSpace,
    tgt: &EmbeddingSpace,
    map: &OrthogonalMap,
    top_n: usize,
    k_density: usize,
) -> Result<f64> {
    let mapped = map.apply(src.vectors())?;
    let index = CslsIndex::new(&mapped, tgt.vectors(), k_density)?;
    Ok(validation_from_index(&index, top_n))
}

fn validation_from_index(index: &CslsIndex<'_>, top_n: usize) -> f64 {
    let n = index.source_len();
    if top_n > n {
        log::warn!("validation_top {top_n} exceeds source vocabulary {n}; clamping");
    }
    let rows: Vec<usize> = (0..top_n.min(n)).collect();
    let best = index.topk(&rows, 1);
    let total: f64 = rows
        .iter()
        .zip(&best)
        .map(|(&i, b)| index.cosine(i, b[0].index))
        .sum();
    total / rows.len() as f64
}

/// Runs the configured mode through the builtin registry.
pub fn run_bootstrap(spaces: &[&EmbeddingSpace], seed: &Lexicon, config: &TrainConfig) -> Result<TrainOutcome> {
    let aligner = AlignerRegistry::builtin()
        .get(config.mode.name())
        .ok_or_else(|| Error::InvalidArgument(format!("no aligner named {}", config.mode)))?;
    aligner.align(spaces, seed, config, &mut ())
}

/// Three-way GPA for `mgpa_epochs`, then two-way GPA fine-tuning on the
/// pivot–target projection of the last three-way lexicon.
pub fn run_mgpa_plus(
    spaces: &[&EmbeddingSpace],
    seed: &Lexicon,
    config: &TrainConfig,
    observer: &mut dyn EpochObserver,
) -> Result<TrainOutcome> {
    let phase1 = run_epochs(
        spaces,
        seed,
        config,
        EpochPlan {
            solver: Solver::Generalized,
            schedule: Schedule::Fixed(config.mgpa_epochs),
            warm_start: None,
            phase: Phase::Main,
            first_epoch: 1,
        },
        observer,
    )?;
    let Lexicon::Triples(triples) = &phase1.last_lexicon else {
        return Err(Error::InvalidArgument("three-way phase produced a pair lexicon".into()));
    };
    let pairs = Lexicon::Pairs(triples.pivot_l2_pairs());
    let boundary = phase1.report.epochs.len();
    let phase2 = run_epochs(
        &spaces[..2],
        &pairs,
        config,
        EpochPlan {
            solver: Solver::Generalized,
            schedule: Schedule::Fixed(config.finetune_epochs),
            warm_start: Some(phase1.last_transforms[..2].to_vec()),
            phase: Phase::Finetune,
            first_epoch: boundary + 1,
        },
        observer,
    )?;

    let mut epochs = phase1.report.epochs;
    epochs.extend(phase2.report.epochs);
    let best_epoch = best_of(&epochs);
    let transforms = if best_epoch <= boundary {
        phase1.transforms[..2].to_vec()
    } else {
        phase2.transforms
    };
    Ok(TrainOutcome {
        transforms,
        report: TrainReport {
            epochs,
            best_epoch,
            stop_reason: StopReason::EpochBudget,
            phase_boundary: Some(boundary),
            warm_start: true,
            init_index: phase1.report.init_index,
        },
        last_transforms: phase2.last_transforms,
        last_lexicon: phase2.last_lexicon,
    })
}

/// First epoch number holding the maximal validation value.
fn best_of(epochs: &[EpochRecord]) -> usize {
    let mut best = 0;
    for (i, r) in epochs.iter().enumerate() {
        if r.validation > epochs[best].validation {
            best = i;
        }
    }
    epochs[best].epoch
}

fn check_spaces(spaces: &[&EmbeddingSpace], seed: &Lexicon) -> Result<()> {
    if spaces.len() != seed.arity() {
        return Err(Error::InvalidArgument(format!(
            "{} spaces for a {}-way lexicon",
            spaces.len(),
            seed.arity()
        )));
    }
    for (space, id) in spaces.iter().zip(seed.space_ids()) {
        if space.lang() != id {
            return Err(Error::SpaceMismatch(format!(
                "lexicon refers to space {id:?} but got {:?}",
                space.lang()
            )));
        }
        if space.dim() != spaces[0].dim() {
            return Err(Error::Shape("spaces have different dimensions".into()));
        }
    }
    if seed.is_empty() {
        return Err(Error::EmptyLexicon("empty seed lexicon".into()));
    }
    Ok(())
}

/// The epoch loop shared by every aligner.
///
/// Each epoch gathers the paired rows of the current lexicon, solves, maps
/// the pivot into the target (and support) space, measures validation and
/// induces the next lexicon. The returned transforms belong to the first
/// epoch with the highest validation value.
pub fn run_epochs(
    spaces: &[&EmbeddingSpace],
    seed: &Lexicon,
    config: &TrainConfig,
    plan: EpochPlan,
    observer: &mut dyn EpochObserver,
) -> Result<TrainOutcome> {
    config.validate()?;
    check_spaces(spaces, seed)?;
    if plan.solver == Solver::Procrustes && spaces.len() != 2 {
        return Err(Error::InvalidArgument("Procrustes aligns exactly 2 spaces".into()));
    }
    if let Schedule::Fixed(0) = plan.schedule {
        return Err(Error::InvalidArgument("fixed schedule needs at least one epoch".into()));
    }

    let gpa_params = config.gpa_params();
    let induce = config.induce_params();
    let warm_started = plan.warm_start.is_some();
    let mut warm = plan.warm_start;
    let mut lexicon = seed.clone();
    let mut records: Vec<EpochRecord> = Vec::new();
    let mut best: Option<(usize, f64, Vec<OrthogonalMap>)> = None;
    let mut init_index = None;
    let mut epoch = plan.first_epoch;

    let (stop_reason, last_transforms) = loop {
        let columns = lexicon.columns();
        let mats: Vec<DMatrix<f64>> = spaces
            .iter()
            .zip(&columns)
            .map(|(s, rows)| s.gather_rows(rows))
            .collect::<Result<_>>()?;

        let (transforms, objective) = match plan.solver {
            Solver::Procrustes => {
                let t = procrustes_solve(&mats[0], &mats[1])?;
                let objective = (&mats[0] * t.matrix() - &mats[1]).norm_squared();
                (vec![t, OrthogonalMap::identity(spaces[0].dim())], objective)
            }
            Solver::Generalized => {
                let init = match warm.take() {
                    Some(ts) => GpaInit::Warm(ts),
                    None => GpaInit::Random {
                        seed: config.rng_seed,
                    },
                };
                let state = gpa_solve(&mats, &gpa_params, init)?;
                if records.is_empty() {
                    init_index = state.init_index;
                }
                let objective = state.final_objective();
                (state.transforms, objective)
            }
        };

        let to_target = compose_to_target(&transforms[0], &transforms[1])?;
        let mapped = to_target.apply(spaces[0].vectors())?;
        let index = CslsIndex::new(&mapped, spaces[1].vectors(), config.csls_k_density)?;
        let validation = validation_from_index(&index, config.validation_top);
        let pivot_target = PairLexicon {
            src_space: spaces[0].lang().to_owned(),
            tgt_space: spaces[1].lang().to_owned(),
            pairs: induce_pairs(&index, &induce),
            unique: true,
        };
        drop(index);

        let mut induced = if spaces.len() == 3 {
            let to_support = compose_to_target(&transforms[0], &transforms[2])?;
            let mapped = to_support.apply(spaces[0].vectors())?;
            let index = CslsIndex::new(&mapped, spaces[2].vectors(), config.csls_k_density)?;
            let pivot_support = PairLexicon {
                src_space: spaces[0].lang().to_owned(),
                tgt_space: spaces[2].lang().to_owned(),
                pairs: induce_pairs(&index, &induce),
                unique: true,
            };
            Lexicon::Triples(triangulate(&pivot_target, &pivot_support)?)
        } else {
            Lexicon::Pairs(pivot_target)
        };
        if config.union_lexicon {
            induced = union(&lexicon, induced);
        }

        let record = EpochRecord {
            epoch,
            phase: plan.phase,
            dict_size: induced.len(),
            validation,
            objective,
        };
        log::info!(
            "epoch {epoch}: dict {} validation {validation:.6} objective {objective:.6e}",
            record.dict_size
        );
        observer.on_epoch(&record, &transforms)?;
        records.push(record);

        if best.as_ref().is_none_or(|(_, v, _)| validation > *v) {
            best = Some((epoch, validation, transforms.clone()));
        }
        if induced.is_empty() {
            return Err(Error::EmptyLexicon(format!("epoch {epoch} induced no translation pairs")));
        }
        lexicon = induced;

        let done = epoch + 1 - plan.first_epoch;
        let best_epoch = best.as_ref().map_or(epoch, |b| b.0);
        match plan.schedule {
            Schedule::Fixed(n) if done >= n => break (StopReason::EpochBudget, transforms),
            Schedule::EarlyStop { patience, .. } if epoch - best_epoch >= patience => {
                break (StopReason::Patience, transforms)
            }
            Schedule::EarlyStop { max_epochs, .. } if done >= max_epochs => {
                break (StopReason::EpochBudget, transforms)
            }
            _ => {}
        }
        if plan.solver == Solver::Generalized {
            warm = Some(transforms);
        }
        epoch += 1;
    };

    let (best_epoch, _, best_transforms) = best.expect("at least one epoch ran");
    Ok(TrainOutcome {
        transforms: best_transforms,
        report: TrainReport {
            epochs: records,
            best_epoch,
            stop_reason,
            phase_boundary: None,
            warm_start: warm_started || plan.solver == Solver::Generalized,
            init_index,
        },
        last_transforms,
        last_lexicon: lexicon,
    })
}

fn union(previous: &Lexicon, induced: Lexicon) -> Lexicon {
    match (previous, induced) {
        (Lexicon::Pairs(old), Lexicon::Pairs(mut new)) => {
            let mut pairs = old.pairs.clone();
            pairs.append(&mut new.pairs);
            Lexicon::Pairs(PairLexicon { pairs, ..new }.dedup())
        }
        (Lexicon::Triples(old), Lexicon::Triples(mut new)) => {
            let mut seen = std::collections::HashSet::new();
            let mut triples = old.triples.clone();
            triples.append(&mut new.triples);
            triples.retain(|t| seen.insert(*t));
            Lexicon::Triples(crate::lexicon::TripleLexicon { triples, ..new })
        }
        (_, induced) => induced,
    }
}
