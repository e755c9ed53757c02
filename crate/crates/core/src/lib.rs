//! Unsupervised lexical simplification and substitution.
//!
//! Candidates come from two sources: words whose decontextualised embeddings
//! suit the target occurrence, and mask-fill predictions over corpus sentences
//! that use the target in the same sense. Four signals rank the merged pool.

pub mod augment;
pub mod backend;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod freq;
pub mod hash;
pub mod index;
pub mod kmeans;
pub mod pipeline;
pub mod profile;
pub mod rerank;
pub mod stub;
pub mod target;
pub mod text;

pub use backend::{ContextualEmbedding, MaskFillResult, ModelBackend, Segmentation, StaticEmbedding};
pub use corpus::{CorpusStore, Sentence};
pub use error::{Error, Result};
pub use index::{ClusterConfig, DecontextEntry, DecontextIndex, Vocabulary};
pub use profile::{GenerationConfig, Profile, ProfileSet, Task};
pub use stub::{StubBackend, StubFixture};
pub use target::{ScoredCandidate, Source, TargetInstance};
pub use text::Span;
