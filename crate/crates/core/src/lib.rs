//! Weakly-supervised bilingual dictionary induction.
//!
//! Monolingual word-embedding spaces are aligned with orthogonal Procrustes
//! Analysis (PA) or Generalized Procrustes Analysis (GPA), optionally with a
//! third support language, inside a self-learning bootstrap loop that
//! re-induces the training lexicon with CSLS retrieval after every solve.
//!
//! All matrices store one word vector per row and every transform is applied
//! on the right: `mapped = X * T`.

pub mod cli;
pub mod embedspace;
pub mod error;
pub mod eval;
pub mod lexicon;
pub mod retrieval;
pub mod solver;
pub mod synthkit;
pub mod trainer;

pub use embedspace::EmbeddingSpace;
pub use error::{Error, Result};
pub use lexicon::{PairLexicon, TripleLexicon};
pub use solver::{GpaState, OrthogonalMap};
pub use trainer::{Aligner, AlignerRegistry, Mode, TrainConfig, TrainReport};
