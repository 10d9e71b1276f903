use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde_json::{json, Value};
use unlearn_eval_core::cka::cka_table;
use unlearn_eval_core::datagen::{bundled_name_pool, generate_dataset, GenSpec, TranslationTables};
use unlearn_eval_core::datamodel::{
    check_generations, check_logprobs, validate_dataset, ConsistencyIssue, GenerationRecord,
    LogProbRecord, Profile, QaPair,
};
use unlearn_eval_core::judge::{
    judge_corpus, prompt_hash, validate_judge, HttpTransport, Judge, JudgeConfig, LlmJudge, MockJudge,
    PROMPT_VERSION,
};
use unlearn_eval_core::langid::{detect, DetectorConfig};
use unlearn_eval_core::nmix::nmix_corpus;
use unlearn_eval_core::refmetrics::{loss_audit, score_corpus, KmStatistic, RougeOptions, ScoreOptions};
use unlearn_eval_core::synth::{synthesize, Behavior};
use unlearn_eval_core::{CkaTable64, CorpusNMix64, GroupScores64, JudgeReport64, LanguageTag, LossAudit64};

use crate::args::{
    CkaArgs, DetectArgs, GenArgs, JudgeArgs, KmStat, LossAuditArgs, NmixArgs, ScoreArgs, SynthArgs,
};
use crate::context::Context;
use crate::error::{CliError, CliResult};
use crate::table::{md_cell, markdown, num, opt, Table};

const KEY_COLUMNS: [&str; 3] = ["model_id", "query_language", "split"];

fn by_model(records: Vec<GenerationRecord>) -> BTreeMap<String, Vec<GenerationRecord>> {
    let mut out: BTreeMap<String, Vec<GenerationRecord>> = BTreeMap::new();
    for r in records {
        out.entry(r.model_id.clone()).or_default().push(r);
    }
    out
}

fn consistency(flag: &str, path: &Path, issues: Vec<ConsistencyIssue>) -> CliResult<()> {
    let Some(first) = issues.first() else { return Ok(()) };
    Err(CliError::usage(format!(
        "--{flag} {}: {} record(s) disagree with the dataset, first: {first}",
        path.display(),
        issues.len()
    )))
}

fn parse_usize_list(flag: &str, s: &str) -> CliResult<Vec<usize>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| CliError::usage(format!("--{flag}: `{t}` is not a non-negative integer")))
        })
        .collect()
}

fn read_names(ctx: &mut Context, path: &Path) -> CliResult<Vec<String>> {
    let (_, bytes) = ctx.read_bytes("names", path)?;
    let text = String::from_utf8(bytes).map_err(|e| CliError::schema(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_owned)
        .collect())
}

pub fn gen(mut ctx: Context, args: &GenArgs) -> CliResult<PathBuf> {
    if let Some(sheet) = &args.export_worksheet {
        let path = ctx.output(sheet);
        let text = TranslationTables::english_defaults().to_json();
        ctx.write_bytes(&path, text.as_bytes())?;
        return ctx.finish(&path);
    }
    let tables = match &args.tables {
        Some(p) => {
            let (resolved, _) = ctx.read_bytes("tables", p)?;
            TranslationTables::load(resolved)?
        }
        None => TranslationTables::bundled(),
    };
    let name_pool = match &args.names {
        Some(p) => read_names(&mut ctx, p)?,
        None => bundled_name_pool(),
    };
    let languages = args
        .languages
        .clone()
        .map(|s| s.0)
        .or_else(|| ctx.lang_set.clone())
        .unwrap_or_else(|| LanguageTag::SET_ONE.to_vec());
    let spec = GenSpec {
        seed: ctx.seed,
        n_profiles: args.n_profiles,
        languages,
        forget_profiles: args.forget_profiles,
        name_pool,
    };
    let dataset = generate_dataset(&spec, &tables)?;
    let report = validate_dataset(&dataset.pairs);
    if let Some(v) = report.violations.first() {
        return Err(CliError::usage(format!(
            "generated dataset fails validation ({} violations), first: {v}",
            report.violations.len()
        )));
    }
    log::info!(
        "{} profiles, {} pairs, {} languages",
        dataset.profiles.len(),
        dataset.pairs.len(),
        report.languages.len()
    );
    let profiles_path = ctx.output(&args.profiles_out);
    let qa_path = ctx.output(&args.qa_out);
    ctx.write_jsonl(&profiles_path, &dataset.profiles)?;
    ctx.write_jsonl(&qa_path, &dataset.pairs)?;
    ctx.finish(&qa_path)
}

pub fn synth_model(mut ctx: Context, args: &SynthArgs) -> CliResult<PathBuf> {
    let behavior: Behavior = args.behavior.parse().map_err(|e| CliError::usage(format!("--behavior: {e}")))?;
    let pairs: Vec<QaPair> = ctx.read_jsonl("qa", &args.qa)?;
    let records = synthesize(&pairs, behavior)?;
    let out = ctx.output(&args.out);
    ctx.write_jsonl(&out, &records)?;
    ctx.finish(&out)
}

pub fn score(mut ctx: Context, args: &ScoreArgs) -> CliResult<PathBuf> {
    let mut want_em = false;
    let mut want_km = false;
    for m in args.metrics.split(',').map(str::trim) {
        match m {
            "em" => want_em = true,
            "km" => want_km = true,
            other => return Err(CliError::usage(format!("--metrics: unknown metric `{other}` (expected em, km)"))),
        }
    }
    let records: Vec<GenerationRecord> = ctx.read_jsonl("generations", &args.generations)?;
    if let Some(qa) = &args.qa {
        let pairs: Vec<QaPair> = ctx.read_jsonl("qa", qa)?;
        consistency("generations", &args.generations, check_generations(&records, &pairs))?;
    }
    let options = ScoreOptions {
        rouge: RougeOptions {
            lowercase: !args.no_lowercase,
            keep_punctuation: args.keep_punctuation,
        },
        km: match args.km_statistic {
            KmStat::F1 => KmStatistic::F1,
            KmStat::Recall => KmStatistic::Recall,
        },
    };
    let mut columns: Vec<&str> = KEY_COLUMNS.to_vec();
    if want_em {
        columns.push("em");
    }
    if want_km {
        columns.push("km");
    }
    columns.push("n_records");
    let mut table = Table::new(columns);
    for (model, recs) in by_model(records) {
        let groups: BTreeMap<_, GroupScores64> = score_corpus(&recs, &options);
        for ((lang, split), s) in groups {
            let mut row = vec![json!(model), json!(lang), json!(split)];
            if want_em {
                row.push(num(s.em));
            }
            if want_km {
                row.push(num(s.km));
            }
            row.push(json!(s.n_records));
            table.push(row);
        }
    }
    let out = ctx.table_path(&args.out, "scores");
    ctx.write_table(&out, &table)?;
    ctx.finish(&out)
}

pub fn loss_audit_cmd(mut ctx: Context, args: &LossAuditArgs) -> CliResult<PathBuf> {
    let records: Vec<LogProbRecord> = ctx.read_jsonl("logprobs", &args.logprobs)?;
    if let Some(qa) = &args.qa {
        let pairs: Vec<QaPair> = ctx.read_jsonl("qa", qa)?;
        consistency("logprobs", &args.logprobs, check_logprobs(&records, &pairs))?;
    }
    let audit: LossAudit64 = loss_audit(&records, args.alpha, args.variant)?;
    let mut table = Table::new(["variant", "alpha", "forget_term", "retain_term", "total", "n_records"]);
    table.push(vec![
        json!(audit.variant),
        json!(audit.alpha),
        json!(audit.forget_term),
        json!(audit.retain_term),
        json!(audit.total),
        json!(records.len()),
    ]);
    let out = ctx.table_path(&args.out, "loss_audit");
    ctx.write_table(&out, &table)?;
    ctx.finish(&out)
}

pub fn nmix(mut ctx: Context, args: &NmixArgs) -> CliResult<PathBuf> {
    let levels = parse_usize_list("levels", &args.levels)?;
    let records: Vec<GenerationRecord> = ctx.read_jsonl("generations", &args.generations)?;
    let candidates: Vec<LanguageTag> = match &ctx.lang_set {
        Some(set) => set.clone(),
        None => records.iter().map(|r| r.query_language).collect::<BTreeSet<_>>().into_iter().collect(),
    };
    let mut table = Table::new(["model_id", "query_language", "split", "nmix_avg", "n_records", "n_skipped"]);
    if !candidates.is_empty() {
        let detector = DetectorConfig::new(candidates)
            .map_err(|e| CliError::usage(format!("--lang-set: {e}")))?
            .with_min_alphabetic_chars(args.min_alphabetic);
        for (model, recs) in by_model(records) {
            let groups: BTreeMap<_, CorpusNMix64> = nmix_corpus(&recs, &levels, &detector)?;
            for ((lang, split), g) in groups {
                table.push(vec![
                    json!(model),
                    json!(lang),
                    json!(split),
                    opt(g.mean),
                    json!(g.n_records),
                    json!(g.n_skipped),
                ]);
            }
        }
    }
    let out = ctx.table_path(&args.out, "nmix");
    ctx.write_table(&out, &table)?;
    ctx.finish(&out)
}

/// Judge settings from `--config`, then flag overrides. A config that tries to carry a
/// key value is rejected so secrets never land in files or manifests.
fn judge_config(ctx: &mut Context, args: &JudgeArgs) -> CliResult<JudgeConfig> {
    let mut config = match &args.config {
        Some(p) => {
            let (_, bytes) = ctx.read_bytes("config", p)?;
            let raw: Value = serde_json::from_slice(&bytes).map_err(|e| CliError::schema(p, e))?;
            if let Some(obj) = raw.as_object() {
                if let Some(k) = obj.keys().find(|k| {
                    let k = k.to_ascii_lowercase();
                    k.contains("key") && k != "api_key_env_var" || k.contains("token") || k.contains("secret")
                }) {
                    return Err(CliError::usage(format!(
                        "--config {}: field `{k}` looks like a credential; put the key in an environment \
                         variable and name it in api_key_env_var",
                        p.display()
                    )));
                }
            }
            serde_json::from_value(raw).map_err(|e| CliError::schema(p, e))?
        }
        None => JudgeConfig::default(),
    };
    if let Some(v) = &args.endpoint {
        config.endpoint_url = v.clone();
    }
    if let Some(v) = &args.model {
        config.model_name = v.clone();
    }
    if let Some(v) = &args.api_key_env {
        config.api_key_env_var = v.clone();
    }
    if let Some(v) = &args.cache {
        config.cache_dir = v.clone();
    }
    if let Some(v) = args.max_concurrency {
        config.max_concurrency = v;
    }
    if let Some(v) = args.retries {
        config.retries = v;
    }
    if let Some(v) = args.timeout_secs {
        config.timeout =
            Duration::try_from_secs_f64(v).map_err(|_| CliError::usage("--timeout-secs must be a non-negative number"))?;
    }
    if args.requests_per_second.is_some() {
        config.requests_per_second = args.requests_per_second;
    }
    config.cache_dir = ctx.output(&config.cache_dir);
    config.check().map_err(|e| CliError::usage(e.to_string()))?;
    Ok(config)
}

fn mock_judge(ctx: &mut Context, args: &JudgeArgs) -> CliResult<(MockJudge, Vec<QaPair>)> {
    let (Some(qa), Some(profiles)) = (&args.qa, &args.profiles) else {
        return Err(CliError::usage("--mock needs --qa and --profiles"));
    };
    let pairs: Vec<QaPair> = ctx.read_jsonl("qa", qa)?;
    let profiles: Vec<Profile> = ctx.read_jsonl("profiles", profiles)?;
    Ok((MockJudge::new(&profiles, &pairs), pairs))
}

pub fn judge(mut ctx: Context, args: &JudgeArgs) -> CliResult<PathBuf> {
    if args.mock {
        let concurrency = args.max_concurrency.unwrap_or(1).max(1);
        let (judge, pairs) = mock_judge(&mut ctx, args)?;
        return run_judge(ctx, args, &judge, pairs, concurrency);
    }
    let config = judge_config(&mut ctx, args)?;
    ctx.echo("judge", serde_json::to_value(&config).expect("judge config serializes"));
    ctx.set_judge_prompt(PROMPT_VERSION, prompt_hash());
    let pairs = match &args.qa {
        Some(qa) => ctx.read_jsonl("qa", qa)?,
        None if args.validate => return Err(CliError::usage("--validate needs --qa")),
        None => Vec::new(),
    };
    let transport = HttpTransport::new(&config)?;
    let concurrency = config.max_concurrency;
    let judge = LlmJudge::new(config, transport)?;
    run_judge(ctx, args, &judge, pairs, concurrency)
}

fn run_judge<J: Judge>(
    mut ctx: Context,
    args: &JudgeArgs,
    judge: &J,
    pairs: Vec<QaPair>,
    concurrency: usize,
) -> CliResult<PathBuf> {
    if args.validate {
        let languages: Vec<LanguageTag> = match &ctx.lang_set {
            Some(set) => set.clone(),
            None => validate_dataset(&pairs).languages,
        };
        let matrix = validate_judge::<f64, _>(&pairs, &languages, judge, concurrency)?;
        let mut columns = vec!["answer_language".to_owned()];
        columns.extend(languages.iter().map(|l| l.to_string()));
        let mut table = Table::new(columns);
        for (lang, row) in languages.iter().zip(matrix) {
            let mut cells = vec![json!(lang)];
            cells.extend(row.into_iter().map(opt));
            table.push(cells);
        }
        let out = ctx.table_path(&args.out, "judge_validation");
        ctx.write_table(&out, &table)?;
        return ctx.finish(&out);
    }
    let generations = args.generations.as_ref().expect("clap requires --generations without --validate");
    let records: Vec<GenerationRecord> = ctx.read_jsonl("generations", generations)?;
    if !pairs.is_empty() {
        consistency("generations", generations, check_generations(&records, &pairs))?;
    }
    let mut table = Table::new([
        "model_id",
        "query_language",
        "split",
        "judge_ratio",
        "n_yes",
        "n_no",
        "n_ambiguous",
        "n_records",
    ]);
    let mut verdict_lines = String::new();
    for (model, recs) in by_model(records) {
        let report: JudgeReport64 = judge_corpus(&recs, judge, concurrency)?;
        for ((lang, split), g) in &report.groups {
            table.push(vec![
                json!(model),
                json!(lang),
                json!(split),
                opt(g.ratio),
                json!(g.n_yes),
                json!(g.n_no),
                json!(g.n_ambiguous),
                json!(g.n_records()),
            ]);
        }
        for (r, v) in recs.iter().zip(&report.verdicts) {
            let line = json!({
                "pair_id": r.pair_id,
                "model_id": r.model_id,
                "query_language": r.query_language,
                "split": r.split,
                "verdict": v.value,
                "raw_response": v.raw_response,
                "cached": v.cached,
                "failure": v.failure,
            });
            verdict_lines.push_str(&line.to_string());
            verdict_lines.push('\n');
        }
    }
    if let Some(p) = &args.verdicts_out {
        let path = ctx.output(p);
        ctx.write_bytes(&path, verdict_lines.as_bytes())?;
    }
    let out = ctx.table_path(&args.out, "judge");
    ctx.write_table(&out, &table)?;
    ctx.finish(&out)
}

pub fn cka(mut ctx: Context, args: &CkaArgs) -> CliResult<PathBuf> {
    let dir = ctx.note_dir("dir", &args.dir)?;
    let result: CkaTable64 = cka_table(&dir, args.base)?;
    let out = ctx.table_path(&args.out, "cka");
    let text = match ctx.format {
        crate::args::Format::Md => {
            // One row, one column per language, as in a results appendix.
            let mut columns: Vec<String> = result.scores.keys().map(|l| l.code().to_uppercase()).collect();
            columns.push("Avg.".into());
            let mut row: Vec<String> = result.scores.values().map(|&v| md_cell(&num(v))).collect();
            row.push(md_cell(&opt(result.avg)));
            markdown(&columns, &[row])
        }
        format => {
            let mut table = Table::new(["language", "cka"]);
            for (lang, &v) in &result.scores {
                table.push(vec![json!(lang), num(v)]);
            }
            table.push(vec![json!("avg"), opt(result.avg)]);
            table.render(format)
        }
    };
    ctx.write_bytes(&out, text.as_bytes())?;
    ctx.finish(&out)
}

/// Prints `tag<TAB>line` per input line; `und` when nothing is detected.
pub fn detect_cmd(lang_set: Option<Vec<LanguageTag>>, args: &DetectArgs) -> CliResult<()> {
    let candidates = lang_set.unwrap_or_else(|| LanguageTag::ALL.to_vec());
    let config = DetectorConfig::new(candidates)
        .map_err(|e| CliError::usage(format!("--lang-set: {e}")))?
        .with_min_alphabetic_chars(args.min_alphabetic);
    let reader: Box<dyn BufRead> = match &args.input {
        Some(p) => {
            let file = std::fs::File::open(p).map_err(|e| {
                if e.kind() == std::io::ErrorKind::NotFound {
                    CliError::usage(format!("--input: file not found: {}", p.display()))
                } else {
                    CliError::io(p, e)
                }
            })?;
            Box::new(std::io::BufReader::new(file))
        }
        None => Box::new(std::io::stdin().lock()),
    };
    let source = args.input.clone().unwrap_or_else(|| PathBuf::from("<stdin>"));
    let stdout = std::io::stdout();
    let mut out = std::io::BufWriter::new(stdout.lock());
    for line in reader.lines() {
        let line = line.map_err(|e| CliError::io(&source, e))?;
        let tag = detect(&line, &config).map_or("und", |t| t.code());
        writeln!(out, "{tag}\t{line}").map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
    }
    out.flush().map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

