//! Semantic scoring with an LLM judge: prompt construction, verdict parsing, YES-ratio
//! aggregation and the cross-language validation matrix.

mod client;
mod mock;
mod prompt;

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

pub use client::{
    ChatMessage, ChatRequest, ChatTransport, HttpTransport, JudgeConfig, LlmJudge, ResponseCache, TransportError,
};
pub use mock::MockJudge;
pub use prompt::{build_prompt, neutralize, parse_verdict, prompt_hash, VerdictValue, PROMPT_VERSION, SYSTEM_MESSAGE};

use crate::datamodel::{GenerationRecord, QaPair, SplitLabel};
use crate::language::LanguageTag;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Verdict {
    pub value: VerdictValue,
    pub raw_response: String,
    pub cached: bool,
    /// Why the verdict is ambiguous when no response could be obtained.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl Verdict {
    pub fn from_response(raw_response: String, cached: bool) -> Self {
        Self {
            value: parse_verdict(&raw_response),
            raw_response,
            cached,
            failure: None,
        }
    }

    pub fn failed(cause: String) -> Self {
        Self {
            value: VerdictValue::Ambiguous,
            raw_response: String::new(),
            cached: false,
            failure: Some(cause),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum JudgeError {
    #[error("no QA context for pair `{0}`")]
    UnknownPair(String),
    #[error("all {attempted} judge requests failed; last error: {last}")]
    AllRequestsFailed { attempted: usize, last: String },
    #[error("invalid judge configuration: {0}")]
    Config(String),
}

/// Anything that can rule on a single generation.
pub trait Judge: Sync {
    fn verdict(&self, record: &GenerationRecord) -> Result<Verdict, JudgeError>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JudgeGroup<T> {
    pub n_yes: usize,
    pub n_no: usize,
    pub n_ambiguous: usize,
    /// YES / (YES + NO); `None` when every verdict was ambiguous.
    pub ratio: Option<T>,
}

impl<T: Scalar> JudgeGroup<T> {
    pub fn n_records(&self) -> usize {
        self.n_yes + self.n_no + self.n_ambiguous
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JudgeReport<T> {
    pub groups: BTreeMap<(LanguageTag, SplitLabel), JudgeGroup<T>>,
    /// One verdict per input record, in input order.
    pub verdicts: Vec<Verdict>,
}

/// Runs `f` over `items` on up to `workers` threads, keeping input order in the result.
fn parallel_map<I: Sync, O: Send>(items: &[I], workers: usize, f: impl Fn(&I) -> O + Sync) -> Vec<O> {
    let workers = workers.clamp(1, items.len().max(1));
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<O>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(item) = items.get(i) else { break };
                let out = f(item);
                slots.lock().unwrap()[i] = Some(out);
            });
        }
    });
    slots.into_inner().unwrap().into_iter().map(|o| o.expect("every slot filled")).collect()
}

/// Judges every record with up to `concurrency` requests in flight and aggregates the
/// YES ratio per `(query_language, split)`.
///
/// Hard errors (such as an unknown pair for the mock judge) abort the run. Transport
/// failures only mark their record ambiguous, unless every record failed.
pub fn judge_corpus<T: Scalar, J: Judge + ?Sized>(
    records: &[GenerationRecord],
    judge: &J,
    concurrency: usize,
) -> Result<JudgeReport<T>, JudgeError> {
    let verdicts = parallel_map(records, concurrency, |r| judge.verdict(r))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    if !verdicts.is_empty() && verdicts.iter().all(|v| v.failure.is_some()) {
        return Err(JudgeError::AllRequestsFailed {
            attempted: verdicts.len(),
            last: verdicts.last().and_then(|v| v.failure.clone()).unwrap_or_default(),
        });
    }
    let mut counts: BTreeMap<(LanguageTag, SplitLabel), [usize; 3]> = BTreeMap::new();
    for (r, v) in records.iter().zip(&verdicts) {
        let c = counts.entry((r.query_language, r.split)).or_default();
        c[v.value as usize] += 1;
    }
    let groups = counts
        .into_iter()
        .map(|(k, [n_yes, n_no, n_ambiguous])| {
            let decided = n_yes + n_no;
            let ratio = (decided > 0).then(|| T::of_usize(n_yes) / T::of_usize(decided));
            (k, JudgeGroup { n_yes, n_no, n_ambiguous, ratio })
        })
        .collect();
    Ok(JudgeReport { groups, verdicts })
}

/// `|L|×|L|` matrix: cell `[a][b]` is the fraction of ground-truth answers in language `a`
/// judged NOT equivalent to their parallel answer in language `b`. Ambiguous verdicts are
/// left out of the denominator; a cell with no decided verdicts is `None`.
pub fn validate_judge<T: Scalar, J: Judge + ?Sized>(
    pairs: &[QaPair],
    languages: &[LanguageTag],
    judge: &J,
    concurrency: usize,
) -> Result<Vec<Vec<Option<T>>>, JudgeError> {
    let by_cell: HashMap<_, &QaPair> = pairs
        .iter()
        .map(|p| ((p.profile_id, p.attribute, p.language), p))
        .collect();
    let mut cells = Vec::new();
    let mut records = Vec::new();
    for (ia, &la) in languages.iter().enumerate() {
        for (ib, &lb) in languages.iter().enumerate() {
            for a in pairs.iter().filter(|p| p.language == la) {
                let Some(b) = by_cell.get(&(a.profile_id, a.attribute, lb)) else {
                    continue;
                };
                cells.push((ia, ib));
                records.push(GenerationRecord {
                    pair_id: b.pair_id.clone(),
                    query_language: lb,
                    question: b.question.clone(),
                    reference: b.answer.clone(),
                    output: a.answer.clone(),
                    model_id: "ground-truth".into(),
                    split: b.split,
                    extra: Default::default(),
                });
            }
        }
    }
    let report: JudgeReport<T> = judge_corpus(&records, judge, concurrency)?;
    let k = languages.len();
    let mut tallies = vec![vec![(0usize, 0usize); k]; k];
    for (&(ia, ib), v) in cells.iter().zip(&report.verdicts) {
        let t = &mut tallies[ia][ib];
        match v.value {
            VerdictValue::Yes => t.0 += 1,
            VerdictValue::No => t.1 += 1,
            VerdictValue::Ambiguous => {}
        }
    }
    Ok(tallies
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|(yes, no)| (yes + no > 0).then(|| T::of_usize(no) / T::of_usize(yes + no)))
                .collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Fixed(Vec<VerdictValue>);

    impl Judge for Fixed {
        fn verdict(&self, record: &GenerationRecord) -> Result<Verdict, JudgeError> {
            let i: usize = record.pair_id.parse().unwrap();
            Ok(Verdict::from_response(format!("[{:?}]", self.0[i]).to_uppercase(), false))
        }
    }

    fn record(i: usize) -> GenerationRecord {
        GenerationRecord {
            pair_id: i.to_string(),
            query_language: LanguageTag::En,
            question: String::new(),
            reference: String::new(),
            output: String::new(),
            model_id: "m".into(),
            split: SplitLabel::Forget,
            extra: Default::default(),
        }
    }

    #[test]
    fn seven_of_fourteen_is_one_half() {
        let values: Vec<_> = (0..14).map(|i| if i % 2 == 0 { VerdictValue::Yes } else { VerdictValue::No }).collect();
        let records: Vec<_> = (0..14).map(record).collect();
        let report: JudgeReport<f64> = judge_corpus(&records, &Fixed(values), 4).unwrap();
        let g = report.groups[&(LanguageTag::En, SplitLabel::Forget)];
        assert_eq!((g.n_yes, g.n_no, g.n_ambiguous), (7, 7, 0));
        assert_eq!(g.ratio, Some(0.5));
    }

    #[test]
    fn ambiguous_leaves_the_denominator() {
        let values = vec![VerdictValue::Yes, VerdictValue::Ambiguous, VerdictValue::No, VerdictValue::Yes];
        let records: Vec<_> = (0..4).map(record).collect();
        let report: JudgeReport<f64> = judge_corpus(&records, &Fixed(values), 2).unwrap();
        let g = report.groups[&(LanguageTag::En, SplitLabel::Forget)];
        assert_eq!(g.n_records(), 4);
        assert_eq!(g.ratio, Some(2.0 / 3.0));
    }

    #[test]
    fn parallel_map_keeps_order() {
        let items: Vec<usize> = (0..100).collect();
        assert_eq!(parallel_map(&items, 7, |x| x * 2), (0..100).map(|x| x * 2).collect::<Vec<_>>());
        assert!(parallel_map(&[] as &[usize], 3, |x| *x).is_empty());
    }
}
