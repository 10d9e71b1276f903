//! Evaluation toolkit for multilingual machine unlearning.
//!
//! Everything operates on recorded model outputs: synthetic parallel QA data, language
//! confusion scoring (N-Mix), reference metrics (exact match, ROUGE-L), loss bookkeeping,
//! LLM-judge semantic scoring and linear CKA. Numeric routines are generic over
//! [`Scalar`]; the aliases below fix them to `f64`.

pub mod cka;
pub mod datagen;
pub mod datamodel;
pub mod judge;
pub mod langid;
pub mod language;
pub mod nmix;
pub mod refmetrics;
pub mod scalar;
pub mod segmenter;
pub mod synth;

pub use language::{LanguageTag, ScriptClass};
pub use scalar::Scalar;

pub type RougeScore64 = refmetrics::RougeScore<f64>;
pub type GroupScores64 = refmetrics::GroupScores<f64>;
pub type LossAudit64 = refmetrics::LossAudit<f64>;
pub type NMixResult64 = nmix::NMixResult<f64>;
pub type CorpusNMix64 = nmix::CorpusNMix<f64>;
pub type EmbeddingMatrix64 = cka::EmbeddingMatrix<f64>;
pub type CkaTable64 = cka::CkaTable<f64>;
pub type JudgeReport64 = judge::JudgeReport<f64>;
pub type JudgeGroup64 = judge::JudgeGroup<f64>;
