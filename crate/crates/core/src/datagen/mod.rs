//! Deterministic synthesis of the parallel multilingual profile QA dataset.

mod generate;
mod tables;

pub use generate::{
    assign_split, bundled_name_pool, generate_dataset, generate_profiles, render_qa, Dataset,
    GenError, GenSpec, SplitSummary,
};
pub use tables::{
    pool_kind, AttributePool, MissingCell, PoolKind, QaTemplate, TableError, TranslationTables,
};
