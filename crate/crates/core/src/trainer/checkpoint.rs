use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::solver::{compose_to_target, OrthogonalMap};

use super::{EpochRecord, TrainOutcome};

/// Metrics file name inside a run directory.
pub const METRICS_FILE: &str = "metrics.tsv";
/// Best pivot→target map inside a run directory.
pub const MAP_FILE: &str = "map.txt";

/// Receives every epoch as it completes.
pub trait EpochObserver {
    fn on_epoch(&mut self, record: &EpochRecord, transforms: &[OrthogonalMap]) -> Result<()>;
}

impl EpochObserver for () {
    fn on_epoch(&mut self, _: &EpochRecord, _: &[OrthogonalMap]) -> Result<()> {
        Ok(())
    }
}

/// A run directory:
///
/// ```text
/// metrics.tsv          epoch<TAB>dict_size<TAB>validation<TAB>objective
/// epoch_001/t0.txt     per-space transforms, pivot first
/// epoch_001/map.txt    composed pivot→target map
/// map.txt              composed map of the best epoch
/// ```
#[derive(Debug)]
pub struct CheckpointDir {
    root: PathBuf,
}

impl CheckpointDir {
    /// Creates the directory. An existing non-empty directory is refused so
    /// a rerun never mixes with earlier output.
    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        if root.exists() {
            let mut entries = fs::read_dir(&root).map_err(|e| Error::io(&root, e))?;
            if entries.next().is_some() {
                return Err(Error::InvalidArgument(format!(
                    "output directory {} is not empty",
                    root.display()
                )));
            }
        }
        fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        Ok(CheckpointDir { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn epoch_dir(&self, epoch: usize) -> PathBuf {
        self.root.join(format!("epoch_{epoch:03}"))
    }

    /// Writes the best composed map and per-space transforms.
    pub fn write_final(&self, outcome: &TrainOutcome) -> Result<()> {
        outcome.composed()?.save(self.root.join(MAP_FILE))?;
        for (i, t) in outcome.transforms.iter().enumerate() {
            t.save(self.root.join(format!("best_t{i}.txt")))?;
        }
        Ok(())
    }
}

impl EpochObserver for CheckpointDir {
    fn on_epoch(&mut self, record: &EpochRecord, transforms: &[OrthogonalMap]) -> Result<()> {
        let dir = self.epoch_dir(record.epoch);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for (i, t) in transforms.iter().enumerate() {
            t.save(dir.join(format!("t{i}.txt")))?;
        }
        compose_to_target(&transforms[0], &transforms[1])?.save(dir.join(MAP_FILE))?;

        let path = self.root.join(METRICS_FILE);
        let mut f: File = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        writeln!(
            f,
            "{}\t{}\t{:.6}\t{:.6e}",
            record.epoch, record.dict_size, record.validation, record.objective
        )
        .map_err(|e| Error::io(&path, e))
    }
}
