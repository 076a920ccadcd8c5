//! Text-to-SQL candidate generation, execution-equivalence labeling and
//! test-time selection (majority vote, execution best-of-N, verifier
//! best-of-N), with EX and Pass@N evaluation.

pub mod artifact;
pub mod corpus;
pub mod generation;
pub mod harness;
pub mod http;
pub mod labeling;
pub mod metrics;
pub mod scoring;
pub mod selection;
pub mod sqlexec;

pub use corpus::{BenchmarkQuestion, DatabaseRef, Difficulty, SchemaText, Split};
pub use generation::{CandidatePool, CandidateQuery, GenerationConfig};
pub use labeling::{BinaryLabel, DatasetStats, Label, LabeledExample};
pub use metrics::{EvaluationReport, Ratio};
pub use scoring::{CandidateScore, ScorerBinding, VerificationPromptVariant};
pub use selection::{SelectionResult, Strategy};
pub use harness::{HarnessError, RunConfig};
pub use sqlexec::{ExecutionDigest, ExecutionOutcome, Executed, ResultSet, Value};
