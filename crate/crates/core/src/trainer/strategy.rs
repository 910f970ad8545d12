use std::collections::BTreeMap;
use std::sync::LazyLock;

use crate::embedspace::EmbeddingSpace;
use crate::error::{Error, Result};
use crate::lexicon::Lexicon;

use super::{run_epochs, run_mgpa_plus, EpochObserver, EpochPlan, Phase, Schedule, Solver, TrainConfig, TrainOutcome};

/// An alignment mode: how many spaces it takes and how it trains them.
pub trait Aligner: Send + Sync {
    /// Registry key, also accepted by `--mode`.
    fn name(&self) -> &'static str;

    fn spaces_required(&self) -> usize;

    /// Trains on `spaces` (pivot first) starting from `seed`.
    fn align(
        &self,
        spaces: &[&EmbeddingSpace],
        seed: &Lexicon,
        config: &TrainConfig,
        observer: &mut dyn EpochObserver,
    ) -> Result<TrainOutcome>;
}

fn check_arity(aligner: &dyn Aligner, spaces: &[&EmbeddingSpace]) -> Result<()> {
    if spaces.len() != aligner.spaces_required() {
        return Err(Error::InvalidArgument(format!(
            "{} needs {} spaces, got {}",
            aligner.name(),
            aligner.spaces_required(),
            spaces.len()
        )));
    }
    Ok(())
}

fn early_stop(config: &TrainConfig) -> Schedule {
    Schedule::EarlyStop {
        patience: config.patience,
        max_epochs: config.max_epochs,
    }
}

/// Two-way orthogonal Procrustes, early-stopped.
pub struct PaAligner;

impl Aligner for PaAligner {
    fn name(&self) -> &'static str {
        "pa"
    }

    fn spaces_required(&self) -> usize {
        2
    }

    fn align(
        &self,
        spaces: &[&EmbeddingSpace],
        seed: &Lexicon,
        config: &TrainConfig,
        observer: &mut dyn EpochObserver,
    ) -> Result<TrainOutcome> {
        check_arity(self, spaces)?;
        let plan = EpochPlan {
            solver: Solver::Procrustes,
            schedule: early_stop(config),
            warm_start: None,
            phase: Phase::Main,
            first_epoch: 1,
        };
        run_epochs(spaces, seed, config, plan, observer)
    }
}

/// Two-way Generalized Procrustes, early-stopped, warm-started across epochs.
pub struct GpaAligner;

impl Aligner for GpaAligner {
    fn name(&self) -> &'static str {
        "gpa"
    }

    fn spaces_required(&self) -> usize {
        2
    }

    fn align(
        &self,
        spaces: &[&EmbeddingSpace],
        seed: &Lexicon,
        config: &TrainConfig,
        observer: &mut dyn EpochObserver,
    ) -> Result<TrainOutcome> {
        check_arity(self, spaces)?;
        let plan = EpochPlan {
            solver: Solver::Generalized,
            schedule: early_stop(config),
            warm_start: None,
            phase: Phase::Main,
            first_epoch: 1,
        };
        run_epochs(spaces, seed, config, plan, observer)
    }
}

/// Three-way GPA with a support language for a fixed number of epochs.
pub struct MgpaAligner;

impl Aligner for MgpaAligner {
    fn name(&self) -> &'static str {
        "mgpa"
    }

    fn spaces_required(&self) -> usize {
        3
    }

    fn align(
        &self,
        spaces: &[&EmbeddingSpace],
        seed: &Lexicon,
        config: &TrainConfig,
        observer: &mut dyn EpochObserver,
    ) -> Result<TrainOutcome> {
        check_arity(self, spaces)?;
        let plan = EpochPlan {
            solver: Solver::Generalized,
            schedule: Schedule::Fixed(config.mgpa_epochs),
            warm_start: None,
            phase: Phase::Main,
            first_epoch: 1,
        };
        run_epochs(spaces, seed, config, plan, observer)
    }
}

/// Three-way GPA followed by two-way fine-tuning without the support space.
pub struct MgpaPlusAligner;

impl Aligner for MgpaPlusAligner {
    fn name(&self) -> &'static str {
        "mgpa+"
    }

    fn spaces_required(&self) -> usize {
        3
    }

    fn align(
        &self,
        spaces: &[&EmbeddingSpace],
        seed: &Lexicon,
        config: &TrainConfig,
        observer: &mut dyn EpochObserver,
    ) -> Result<TrainOutcome> {
        check_arity(self, spaces)?;
        run_mgpa_plus(spaces, seed, config, observer)
    }
}

/// Aligners by name.
#[derive(Default)]
pub struct AlignerRegistry {
    aligners: BTreeMap<&'static str, Box<dyn Aligner>>,
}

static BUILTIN: LazyLock<AlignerRegistry> = LazyLock::new(|| {
    let mut registry = AlignerRegistry::default();
    registry.register(Box::new(PaAligner));
    registry.register(Box::new(GpaAligner));
    registry.register(Box::new(MgpaAligner));
    registry.register(Box::new(MgpaPlusAligner));
    registry
});

impl AlignerRegistry {
    /// The `pa`, `gpa`, `mgpa` and `mgpa+` aligners.
    pub fn builtin() -> &'static AlignerRegistry {
        &BUILTIN
    }

    /// Adds an aligner, replacing any previous one with the same name.
    pub fn register(&mut self, aligner: Box<dyn Aligner>) {
        self.aligners.insert(aligner.name(), aligner);
    }

    pub fn get(&self, name: &str) -> Option<&dyn Aligner> {
        self.aligners.get(name).map(|a| a.as_ref())
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.aligners.keys().copied()
    }
}
