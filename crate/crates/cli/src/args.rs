use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use unlearn_eval_core::refmetrics::LossVariant;
use unlearn_eval_core::LanguageTag;

#[derive(Debug, Parser, Serialize)]
#[command(name = "unlearn-eval", version, about = "Multilingual unlearning evaluation over recorded model outputs")]
pub struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 7)]
    pub seed: u64,

    /// Language set: a comma list such as `en,de,zh,ru,ko`, or `set1`, `set2`, `all`.
    #[arg(long, global = true, value_parser = parse_lang_set)]
    pub lang_set: Option<LangSet>,

    /// Directory that outputs go to and relative inputs are looked up in.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,

    /// Format of metric tables.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "warn")]
    pub log_level: String,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Md,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Md => "md",
        }
    }
}

/// An ordered language list given as one flag value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct LangSet(pub Vec<LanguageTag>);

pub fn parse_lang_set(s: &str) -> Result<LangSet, String> {
    let langs = match s {
        "set1" => LanguageTag::SET_ONE.to_vec(),
        "set2" => LanguageTag::SET_TWO.to_vec(),
        "all" => LanguageTag::ALL.to_vec(),
        _ => LanguageTag::parse_list(s).map_err(|e| e.to_string())?,
    };
    Ok(LangSet(langs))
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Generate the synthetic parallel QA dataset.
    Gen(GenArgs),
    /// Produce generations from a synthetic model behavior.
    SynthModel(SynthArgs),
    /// Exact match and ROUGE-L knowledge memorization.
    Score(ScoreArgs),
    /// Recompute the GA or GD unlearning objective from per-pair log-likelihoods.
    LossAudit(LossAuditArgs),
    /// Language-confusion (N-Mix) scores.
    Nmix(NmixArgs),
    /// Semantic YES-ratio from an LLM judge or the offline mock judge.
    Judge(JudgeArgs),
    /// Linear CKA of per-language embedding matrices against a base language.
    Cka(CkaArgs),
    /// Join metric tables into one report.
    Report(ReportArgs),
    /// Detect the language of each stdin line.
    Detect(DetectArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct GenArgs {
    /// Dataset languages; defaults to --lang-set, then en,de,zh,ru,ko.
    #[arg(long, value_parser = parse_lang_set)]
    pub languages: Option<LangSet>,
    #[arg(long, default_value_t = 40)]
    pub n_profiles: usize,
    /// Profiles whose pairs form the forget split.
    #[arg(long, default_value_t = 2)]
    pub forget_profiles: usize,
    /// Translation tables JSON; languages it lacks fall back to the bundled tables.
    #[arg(long)]
    pub tables: Option<PathBuf>,
    /// Name pool, one name per line.
    #[arg(long)]
    pub names: Option<PathBuf>,
    #[arg(long, default_value = "profiles.jsonl")]
    pub profiles_out: PathBuf,
    #[arg(long, default_value = "qa.jsonl")]
    pub qa_out: PathBuf,
    /// Write the English pools and templates as a translation worksheet and stop.
    #[arg(long)]
    pub export_worksheet: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, default_value = "qa.jsonl")]
    pub qa: PathBuf,
    /// identity, confused:<lang>, refusal, forget-aware or forget-aware+confused:<lang>.
    #[arg(long)]
    pub behavior: String,
    #[arg(long, default_value = "generations.jsonl")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KmStat {
    F1,
    Recall,
}

#[derive(Debug, Args, Serialize)]
pub struct ScoreArgs {
    #[arg(long)]
    pub generations: PathBuf,
    /// Comma list of em, km.
    #[arg(long, default_value = "em,km")]
    pub metrics: String,
    #[arg(long, value_enum, default_value_t = KmStat::F1)]
    pub km_statistic: KmStat,
    /// Compare ROUGE-L tokens case-sensitively.
    #[arg(long)]
    pub no_lowercase: bool,
    /// Keep punctuation tokens in ROUGE-L.
    #[arg(long)]
    pub keep_punctuation: bool,
    /// Dataset to cross-check pair ids, languages and splits against.
    #[arg(long)]
    pub qa: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct LossAuditArgs {
    #[arg(long)]
    pub logprobs: PathBuf,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub alpha: f64,
    #[arg(long, value_parser = parse_variant)]
    pub variant: LossVariant,
    #[arg(long)]
    pub qa: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_variant(s: &str) -> Result<LossVariant, String> {
    s.parse()
}

#[derive(Debug, Args, Serialize)]
pub struct NmixArgs {
    #[arg(long)]
    pub generations: PathBuf,
    /// Comma list of n-gram orders.
    #[arg(long, default_value = "3,4,5,6")]
    pub levels: String,
    /// Fragments with fewer scripted characters are treated as undetectable.
    #[arg(long, default_value_t = 1)]
    pub min_alphabetic: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct JudgeArgs {
    #[arg(long, required_unless_present = "validate")]
    pub generations: Option<PathBuf>,
    /// Use the offline judge (needs --qa and --profiles).
    #[arg(long)]
    pub mock: bool,
    /// Judge every ground-truth answer against its parallel answers instead of generations.
    #[arg(long)]
    pub validate: bool,
    #[arg(long)]
    pub qa: Option<PathBuf>,
    #[arg(long)]
    pub profiles: Option<PathBuf>,
    /// Judge settings as JSON; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    /// Name of the environment variable holding the API key.
    #[arg(long)]
    pub api_key_env: Option<String>,
    #[arg(long)]
    pub cache: Option<PathBuf>,
    #[arg(long)]
    pub max_concurrency: Option<usize>,
    #[arg(long)]
    pub retries: Option<u32>,
    #[arg(long)]
    pub timeout_secs: Option<f64>,
    #[arg(long)]
    pub requests_per_second: Option<f64>,
    /// Also write every verdict as JSON lines.
    #[arg(long)]
    pub verdicts_out: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CkaArgs {
    /// Directory with one `<lang>.txt` or `<lang>.csv` matrix per language.
    #[arg(long)]
    pub dir: PathBuf,
    #[arg(long, default_value = "en")]
    pub base: LanguageTag,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    /// Metric tables (CSV or JSON) written by score, nmix or judge.
    #[arg(long, num_args = 1.., required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct DetectArgs {
    /// Read lines from this file instead of stdin.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub min_alphabetic: usize,
}
