use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use unlearn_eval_core::datamodel::{MetricReport, MetricRow, SplitLabel};
use unlearn_eval_core::LanguageTag;

use crate::args::{Format, ReportArgs};
use crate::context::Context;
use crate::error::{CliError, CliResult};
use crate::table::{markdown, md_cell, num, opt, Table};

const METRICS: [&str; 4] = ["em", "km", "nmix_avg", "judge_ratio"];

type Key = (String, LanguageTag, SplitLabel);

#[derive(Debug, Default, Clone)]
struct Partial {
    metrics: [Option<f64>; 4],
    n_records: usize,
}

/// Rows of a CSV or JSON metric table as string maps; blank cells are dropped.
fn rows_of(path: &Path, bytes: &[u8]) -> CliResult<Vec<BTreeMap<String, String>>> {
    let is_json = path.extension().is_some_and(|e| e == "json")
        || bytes.iter().find(|b| !b.is_ascii_whitespace()) == Some(&b'[');
    if is_json {
        let rows: Vec<serde_json::Map<String, Value>> =
            serde_json::from_slice(bytes).map_err(|e| CliError::schema(path, e))?;
        return Ok(rows
            .into_iter()
            .map(|obj| {
                obj.into_iter()
                    .filter_map(|(k, v)| match v {
                        Value::Null => None,
                        Value::String(s) => Some((k, s)),
                        other => Some((k, other.to_string())),
                    })
                    .collect()
            })
            .collect());
    }
    let mut reader = csv::Reader::from_reader(bytes);
    let headers = reader.headers().map_err(|e| CliError::schema(path, e))?.clone();
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| CliError::schema(path, e))?;
        out.push(
            headers
                .iter()
                .zip(rec.iter())
                .filter(|(_, v)| !v.trim().is_empty())
                .map(|(k, v)| (k.to_owned(), v.trim().to_owned()))
                .collect(),
        );
    }
    Ok(out)
}

fn merge(path: &Path, rows: Vec<BTreeMap<String, String>>, into: &mut BTreeMap<Key, Partial>) -> CliResult<()> {
    let bad = |line: usize, msg: String| CliError::schema(path, format!("row {line}: {msg}"));
    for (i, row) in rows.into_iter().enumerate() {
        let line = i + 1;
        let field = |name: &str| row.get(name).ok_or_else(|| bad(line, format!("missing `{name}`")));
        let model = field("model_id")?.clone();
        let lang = field("query_language")?.parse::<LanguageTag>().map_err(|e| bad(line, e.to_string()))?;
        let split = field("split")?.parse::<SplitLabel>().map_err(|e| bad(line, e.to_string()))?;
        let entry = into.entry((model, lang, split)).or_default();
        let mut found = false;
        for (slot, name) in entry.metrics.iter_mut().zip(METRICS) {
            let Some(text) = row.get(name) else { continue };
            let v: f64 = text.parse().map_err(|_| bad(line, format!("`{name}` = `{text}` is not a number")))?;
            if slot.is_some() {
                return Err(bad(line, format!("`{name}` for this key was already supplied by an earlier row")));
            }
            *slot = Some(v);
            found = true;
        }
        if !found {
            return Err(bad(line, "no em, km, nmix_avg or judge_ratio column".into()));
        }
        if let Some(n) = row.get("n_records") {
            let n: usize = n.parse().map_err(|_| bad(line, format!("`n_records` = `{n}` is not a count")))?;
            entry.n_records = entry.n_records.max(n);
        }
    }
    Ok(())
}

pub fn report(mut ctx: Context, args: &ReportArgs) -> CliResult<PathBuf> {
    let mut joined: BTreeMap<Key, Partial> = BTreeMap::new();
    for input in &args.inputs {
        let (resolved, bytes) = ctx.read_bytes("inputs", input)?;
        let rows = rows_of(&resolved, &bytes)?;
        merge(&resolved, rows, &mut joined)?;
    }
    let rows: Vec<MetricRow> = joined
        .into_iter()
        .map(|((model_id, query_language, split), p)| MetricRow {
            model_id,
            query_language,
            split,
            em: p.metrics[0],
            km: p.metrics[1],
            nmix_avg: p.metrics[2],
            judge_ratio: p.metrics[3],
            n_records: p.n_records,
        })
        .collect();
    let report = MetricReport::new(rows).map_err(|e| CliError::schema(Path::new("report"), e))?;
    let out = ctx.table_path(&args.out, "report");
    let text = match ctx.format {
        Format::Md => render_markdown(&report, ctx.lang_set.as_deref()),
        format => long_table(&report).render(format),
    };
    ctx.write_bytes(&out, text.as_bytes())?;
    ctx.finish(&out)
}

pub fn long_table(report: &MetricReport) -> Table {
    let mut table = Table::new(["model_id", "query_language", "split", "em", "km", "nmix_avg", "judge_ratio", "n_records"]);
    for r in report.rows() {
        table.push(vec![
            json!(r.model_id),
            json!(r.query_language),
            json!(r.split),
            opt(r.em),
            opt(r.km),
            opt(r.nmix_avg),
            opt(r.judge_ratio),
            json!(r.n_records),
        ]);
    }
    table
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| md_cell(&num(x))).unwrap_or_default()
}

fn avg(values: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.into_iter().flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Up to three sections, each only when its metric is present: EM/KM with languages as
/// column pairs, N-Mix with query languages as rows, and judge ratios with forget/retain
/// columns.
pub fn render_markdown(report: &MetricReport, lang_order: Option<&[LanguageTag]>) -> String {
    let rows = report.rows();
    let models: Vec<&str> = rows
        .iter()
        .map(|r| r.model_id.as_str())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let present: BTreeSet<LanguageTag> = rows.iter().map(|r| r.query_language).collect();
    let langs: Vec<LanguageTag> = match lang_order {
        Some(order) => order.iter().copied().filter(|l| present.contains(l)).collect(),
        None => present.into_iter().collect(),
    };
    let splits = [SplitLabel::Forget, SplitLabel::Retain];
    let get = |m: &str, l: LanguageTag, s: SplitLabel| report.get(m, l, s);
    let upper = |l: &LanguageTag| l.code().to_uppercase();
    let mut sections = Vec::new();

    if rows.iter().any(|r| r.em.is_some() || r.km.is_some()) {
        let mut columns = vec!["Model".to_owned(), "Split".to_owned()];
        for l in &langs {
            columns.push(format!("{} EM", upper(l)));
            columns.push(format!("{} KM", upper(l)));
        }
        let mut body = Vec::new();
        for m in &models {
            for s in splits {
                if !langs.iter().any(|&l| get(m, l, s).is_some()) {
                    continue;
                }
                let mut row = vec![m.to_string(), s.name().to_owned()];
                for &l in &langs {
                    let r = get(m, l, s);
                    row.push(cell(r.and_then(|r| r.em)));
                    row.push(cell(r.and_then(|r| r.km)));
                }
                body.push(row);
            }
        }
        sections.push(format!("### EM and KM\n\n{}", markdown(&columns, &body)));
    }

    if rows.iter().any(|r| r.nmix_avg.is_some()) {
        // One N-Mix figure per (model, language): the record-weighted mean over splits.
        let nmix = |m: &str, l: LanguageTag| {
            let (sum, n) = splits
                .iter()
                .filter_map(|&s| get(m, l, s))
                .filter_map(|r| r.nmix_avg.map(|v| (v * r.n_records.max(1) as f64, r.n_records.max(1))))
                .fold((0.0, 0usize), |(a, b), (v, n)| (a + v, b + n));
            (n > 0).then(|| sum / n as f64)
        };
        let mut columns = vec!["Query Language".to_owned()];
        columns.extend(models.iter().map(|m| m.to_string()));
        let mut body: Vec<Vec<String>> = langs
            .iter()
            .map(|&l| {
                let mut row = vec![upper(&l)];
                row.extend(models.iter().map(|m| cell(nmix(m, l))));
                row
            })
            .collect();
        let mut avg_row = vec!["Average".to_owned()];
        avg_row.extend(models.iter().map(|m| cell(avg(langs.iter().map(|&l| nmix(m, l))))));
        body.push(avg_row);
        sections.push(format!("### N-Mix\n\n{}", markdown(&columns, &body)));
    }

    if rows.iter().any(|r| r.judge_ratio.is_some()) {
        let columns: Vec<String> = ["Model", "Language", "Forget", "Retain"].map(String::from).to_vec();
        let ratio = |m: &str, l, s| get(m, l, s).and_then(|r| r.judge_ratio);
        let mut body = Vec::new();
        for m in &models {
            for &l in &langs {
                if splits.iter().all(|&s| ratio(m, l, s).is_none()) {
                    continue;
                }
                body.push(vec![
                    m.to_string(),
                    upper(&l),
                    cell(ratio(m, l, SplitLabel::Forget)),
                    cell(ratio(m, l, SplitLabel::Retain)),
                ]);
            }
            body.push(vec![
                m.to_string(),
                "Average".into(),
                cell(avg(langs.iter().map(|&l| ratio(m, l, SplitLabel::Forget)))),
                cell(avg(langs.iter().map(|&l| ratio(m, l, SplitLabel::Retain)))),
            ]);
        }
        sections.push(format!("### Judge YES ratio\n\n{}", markdown(&columns, &body)));
    }

    sections.join("\n")
}
