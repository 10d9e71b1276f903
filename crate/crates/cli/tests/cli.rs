use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use serde_json::Value;
use sha2::{Digest, Sha256};

const BIN: &str = env!("CARGO_BIN_EXE_unlearn-eval");

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).arg("--out-dir").arg(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    run(dir, args).status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn manifest(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn hex_sha(path: &Path) -> String {
    hex::encode(Sha256::digest(std::fs::read(path).unwrap()))
}

fn dataset() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen"]);
    dir
}

#[test]
fn bad_flags_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(d, &["--format", "xml", "gen"]), 2);
    assert_eq!(code(d, &["--lang-set", "en,xx", "gen"]), 2);
    assert_eq!(code(d, &["--log-level", "loud", "gen"]), 2);
    assert_eq!(code(d, &["frobnicate"]), 2);
    assert_eq!(code(d, &["gen", "--n-profiles", "3", "--forget-profiles", "5"]), 2);
}

#[test]
fn help_and_version_exit_0() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(dir.path(), &["--help"]), 0);
    assert_eq!(code(dir.path(), &["--version"]), 0);
}

#[test]
fn missing_input_names_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["score", "--generations", "absent.jsonl"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--generations"), "{}", stderr(&out));
}

#[test]
fn unknown_behavior_exits_2() {
    let dir = dataset();
    let out = run(dir.path(), &["synth-model", "--behavior", "confused:xx"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--behavior"));
    assert_eq!(code(dir.path(), &["synth-model", "--behavior", "confused:es"]), 2);
}

#[test]
fn schema_errors_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("g.jsonl"), "{\"pair_id\": \"x\"}\n").unwrap();
    assert_eq!(code(d, &["score", "--generations", "g.jsonl"]), 4);
    std::fs::write(d.join("g.jsonl"), "not json\n").unwrap();
    assert_eq!(code(d, &["nmix", "--generations", "g.jsonl"]), 4);
    std::fs::write(d.join("m.csv"), "model_id,query_language,split,em\nm,en,forget,1.5\n").unwrap();
    assert_eq!(code(d, &["report", "--inputs", "m.csv"]), 4);
    std::fs::create_dir(d.join("emb")).unwrap();
    std::fs::write(d.join("emb/en.txt"), "2 2\n1 0\n").unwrap();
    assert_eq!(code(d, &["cka", "--dir", "emb"]), 4);
}

#[test]
fn unreadable_input_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::create_dir(d.join("g.jsonl")).unwrap();
    assert_eq!(code(d, &["score", "--generations", "g.jsonl"]), 3);
}

#[test]
fn qa_cross_check_rejects_mismatched_generations() {
    let dir = dataset();
    let d = dir.path();
    ok(d, &["synth-model", "--behavior", "identity"]);
    let text = std::fs::read_to_string(d.join("generations.jsonl")).unwrap();
    let mut rec: Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    let flipped = if rec["split"] == "forget" { "retain" } else { "forget" };
    rec["split"] = flipped.into();
    let line = rec.to_string();
    std::fs::write(d.join("bad.jsonl"), format!("{line}\n")).unwrap();
    let out = run(d, &["score", "--generations", "bad.jsonl", "--qa", "qa.jsonl"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn every_output_has_a_manifest_with_input_hashes() {
    let dir = dataset();
    let d = dir.path();
    ok(d, &["synth-model", "--behavior", "refusal"]);
    ok(d, &["score", "--generations", "generations.jsonl"]);
    let m = manifest(&d.join("scores.manifest.json"));
    assert_eq!(m["tool"], "unlearn-eval");
    assert_eq!(m["command"], "score");
    assert_eq!(m["inputs"][0]["path"], "generations.jsonl");
    assert_eq!(m["inputs"][0]["sha256"], hex_sha(&d.join("generations.jsonl")));
    assert_eq!(m["outputs"][0]["sha256"], hex_sha(&d.join("scores.csv")));
    assert_eq!(m["config"]["seed"], 7);
    assert!(m.get("judge_prompt_hash").is_none());

    let synth = manifest(&d.join("generations.manifest.json"));
    assert_eq!(synth["inputs"][0]["sha256"], hex_sha(&d.join("qa.jsonl")));
    let gen = manifest(&d.join("qa.manifest.json"));
    let outputs: Vec<&str> = gen["outputs"].as_array().unwrap().iter().map(|o| o["path"].as_str().unwrap()).collect();
    assert_eq!(outputs, ["profiles.jsonl", "qa.jsonl"]);
}

#[test]
fn same_flags_give_byte_identical_outputs() {
    let a = dataset();
    let b = dataset();
    for d in [a.path(), b.path()] {
        ok(d, &["synth-model", "--behavior", "confused:ru"]);
        ok(d, &["score", "--generations", "generations.jsonl"]);
        ok(d, &["nmix", "--generations", "generations.jsonl"]);
        ok(d, &["--format", "md", "report", "--inputs", "scores.csv", "nmix.csv"]);
    }
    for f in ["qa.jsonl", "generations.jsonl", "scores.csv", "nmix.csv", "report.md"] {
        assert_eq!(hex_sha(&a.path().join(f)), hex_sha(&b.path().join(f)), "{f}");
    }
}

#[test]
fn different_seed_changes_the_dataset() {
    let a = dataset();
    let b = tempfile::tempdir().unwrap();
    ok(b.path(), &["--seed", "8", "gen"]);
    assert_ne!(hex_sha(&a.path().join("qa.jsonl")), hex_sha(&b.path().join("qa.jsonl")));
}

#[test]
fn report_with_only_em_leaves_other_metrics_blank() {
    let dir = dataset();
    let d = dir.path();
    ok(d, &["synth-model", "--behavior", "identity"]);
    ok(d, &["score", "--generations", "generations.jsonl", "--metrics", "em", "--out", "em.csv"]);
    ok(d, &["report", "--inputs", "em.csv"]);
    let text = std::fs::read_to_string(d.join("report.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "model_id,query_language,split,em,km,nmix_avg,judge_ratio,n_records");
    assert_eq!(lines.next().unwrap(), "synth-identity,en,forget,1.0,,,,14");
    assert_eq!(text.lines().count(), 11);
}

#[test]
fn report_joins_json_and_csv_inputs() {
    let dir = dataset();
    let d = dir.path();
    ok(d, &["synth-model", "--behavior", "forget-aware"]);
    ok(d, &["--format", "json", "score", "--generations", "generations.jsonl"]);
    ok(d, &["judge", "--mock", "--qa", "qa.jsonl", "--profiles", "profiles.jsonl", "--generations", "generations.jsonl"]);
    ok(d, &["--format", "json", "report", "--inputs", "scores.json", "judge.csv"]);
    let rows: Vec<Value> = serde_json::from_str(&std::fs::read_to_string(d.join("report.json")).unwrap()).unwrap();
    assert_eq!(rows.len(), 10);
    for r in &rows {
        let retain = r["split"] == "retain";
        assert_eq!(r["em"].as_f64().unwrap(), if retain { 1.0 } else { 0.0 });
        assert_eq!(r["judge_ratio"].as_f64().unwrap(), if retain { 1.0 } else { 0.0 });
        assert!(r["nmix_avg"].is_null());
    }
    let m = manifest(&d.join("report.manifest.json"));
    assert_eq!(m["inputs"].as_array().unwrap().len(), 2);
}

#[test]
fn report_rejects_the_same_metric_twice() {
    let dir = dataset();
    let d = dir.path();
    ok(d, &["synth-model", "--behavior", "identity"]);
    ok(d, &["score", "--generations", "generations.jsonl"]);
    assert_eq!(code(d, &["report", "--inputs", "scores.csv", "scores.csv"]), 4);
}

#[test]
fn markdown_report_has_em_km_language_columns() {
    let dir = dataset();
    let d = dir.path();
    ok(d, &["synth-model", "--behavior", "confused:zh"]);
    ok(d, &["score", "--generations", "generations.jsonl"]);
    ok(d, &["nmix", "--generations", "generations.jsonl"]);
    ok(d, &["--format", "md", "report", "--inputs", "scores.csv", "nmix.csv"]);
    let md = std::fs::read_to_string(d.join("report.md")).unwrap();
    assert!(md.contains("| Model | Split | EN EM | EN KM | DE EM | DE KM | ZH EM | ZH KM |"), "{md}");
    assert!(md.contains("| ZH | 0.00 |"), "{md}");
    assert!(md.contains("| EN | 100.00 |"), "{md}");
    assert!(md.contains("| Average | 80.00 |"), "{md}");
}

#[test]
fn loss_audit_hand_example() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("lp.jsonl"),
        "{\"pair_id\":\"f\",\"split\":\"forget\",\"log_likelihood\":-2.0}\n\
         {\"pair_id\":\"r\",\"split\":\"retain\",\"log_likelihood\":-0.5}\n",
    )
    .unwrap();
    ok(d, &["loss-audit", "--logprobs", "lp.jsonl", "--alpha", "0.5", "--variant", "gd"]);
    let text = std::fs::read_to_string(d.join("loss_audit.csv")).unwrap();
    assert_eq!(text.lines().nth(1).unwrap(), "gd,0.5,-2.0,-0.5,-0.5,2");
    assert_eq!(code(d, &["loss-audit", "--logprobs", "lp.jsonl", "--alpha", "-1", "--variant", "gd"]), 2);
    std::fs::write(d.join("f.jsonl"), "{\"pair_id\":\"f\",\"split\":\"forget\",\"log_likelihood\":-2.0}\n").unwrap();
    let out = run(d, &["loss-audit", "--logprobs", "f.jsonl", "--variant", "gd"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("retain"));
}

#[test]
fn cka_table_and_appendix_layout() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::create_dir(d.join("emb")).unwrap();
    std::fs::write(d.join("emb/en.txt"), "3 2\n1 0\n0 1\n1 1\n").unwrap();
    std::fs::write(d.join("emb/de.txt"), "# scaled copy\n3 2\n2 0\n0 2\n2 2\n").unwrap();
    std::fs::write(d.join("emb/zh.csv"), "3,1\n1\n2\n3\n").unwrap();
    std::fs::write(d.join("emb/notes.md"), "ignored").unwrap();
    ok(d, &["cka", "--dir", "emb"]);
    let text = std::fs::read_to_string(d.join("cka.csv")).unwrap();
    assert!(text.starts_with("language,cka\nde,1.0\nzh,"), "{text}");
    assert!(text.contains("\navg,"));
    ok(d, &["--format", "md", "cka", "--dir", "emb"]);
    let md = std::fs::read_to_string(d.join("cka.md")).unwrap();
    assert!(md.starts_with("| DE | ZH | Avg. |"), "{md}");
    assert_eq!(manifest(&d.join("cka.manifest.json"))["inputs"].as_array().unwrap().len(), 4);
    assert_eq!(code(d, &["cka", "--dir", "emb", "--base", "ko"]), 2);
}

#[test]
fn detect_tags_each_line() {
    let mut child = Command::new(BIN)
        .args(["detect", "--lang-set", "en,de,zh,ru,ko"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all("the weather is nice today\nder Hund ist sehr müde\n今天天气很好\nПривет мир\n\n12345\n".as_bytes())
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let tags: Vec<&str> = text.lines().map(|l| l.split('\t').next().unwrap()).collect();
    assert_eq!(tags, ["en", "de", "zh", "ru", "und", "und"]);
}

#[test]
fn judge_mock_needs_dataset_files() {
    let dir = dataset();
    let d = dir.path();
    ok(d, &["synth-model", "--behavior", "identity"]);
    let out = run(d, &["judge", "--mock", "--generations", "generations.jsonl"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--qa"));
}

#[test]
fn judge_config_with_a_key_value_is_refused() {
    let dir = dataset();
    let d = dir.path();
    ok(d, &["synth-model", "--behavior", "identity"]);
    std::fs::write(d.join("judge.json"), r#"{"model_name": "m", "api_key": "sk-live"}"#).unwrap();
    let out = run(d, &["judge", "--config", "judge.json", "--generations", "generations.jsonl"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!stderr(&out).contains("sk-live"));
}

#[test]
fn judge_total_network_failure_exits_5() {
    let dir = dataset();
    let d = dir.path();
    ok(d, &["synth-model", "--behavior", "identity"]);
    // A port that was just bound and released refuses connections.
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let endpoint = format!("http://127.0.0.1:{port}/v1/chat/completions");
    let out = run(
        d,
        &["judge", "--generations", "generations.jsonl", "--endpoint", &endpoint, "--retries", "0", "--max-concurrency", "16"],
    );
    assert_eq!(out.status.code(), Some(5), "{}", stderr(&out));
}

/// Serves `[YES]` to every request and records each request's headers.
fn serve_yes(listener: TcpListener) -> std::sync::mpsc::Receiver<Vec<String>> {
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(stream) = stream else { break };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut headers = Vec::new();
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                    break;
                }
                headers.push(line.trim().to_owned());
            }
            let len: usize = headers
                .iter()
                .find_map(|h| h.to_lowercase().strip_prefix("content-length:").map(|v| v.trim().parse().unwrap()))
                .unwrap_or(0);
            let mut body = vec![0; len];
            let _ = reader.read_exact(&mut body);
            let reply = r#"{"choices":[{"message":{"role":"assistant","content":"[YES]"}}]}"#;
            let mut stream = stream;
            let _ = write!(
                stream,
                "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{reply}",
                reply.len()
            );
            let _ = tx.send(headers);
        }
    });
    rx
}

#[test]
fn judge_network_mode_records_prompt_hash_and_never_the_key() {
    let dir = dataset();
    let d = dir.path();
    std::fs::write(
        d.join("one.jsonl"),
        concat!(
            r#"{"pair_id":"0-gender-en","query_language":"en","question":"q","reference":"a","output":"a","model_id":"m","split":"retain"}"#,
            "\n",
            r#"{"pair_id":"0-hobby-en","query_language":"en","question":"q","reference":"b","output":"c","model_id":"m","split":"retain"}"#,
            "\n"
        ),
    )
    .unwrap();
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let endpoint = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let requests = serve_yes(listener);
    let secret = "sk-never-written-anywhere";
    let out = Command::new(BIN)
        .env("CLI_TEST_JUDGE_KEY", secret)
        .args(["--out-dir"])
        .arg(d)
        .args(["judge", "--generations", "one.jsonl", "--endpoint", &endpoint, "--model", "judge-x"])
        .args(["--api-key-env", "CLI_TEST_JUDGE_KEY", "--verdicts-out", "verdicts.jsonl"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let headers = requests.recv().unwrap();
    assert!(headers.iter().any(|h| h.eq_ignore_ascii_case(&format!("authorization: Bearer {secret}"))));

    let m = manifest(&d.join("judge.manifest.json"));
    assert_eq!(m["judge_prompt_version"], "equivalence-v1");
    assert_eq!(m["judge_prompt_hash"].as_str().unwrap(), unlearn_eval_core::judge::prompt_hash());
    assert_eq!(m["config"]["judge"]["api_key_env_var"], "CLI_TEST_JUDGE_KEY");
    let table = std::fs::read_to_string(d.join("judge.csv")).unwrap();
    assert_eq!(table.lines().nth(1).unwrap(), "m,en,retain,1.0,2,0,0,2");

    for entry in walk(d) {
        let bytes = std::fs::read(&entry).unwrap();
        assert!(!String::from_utf8_lossy(&bytes).contains(secret), "{} leaks the key", entry.display());
    }
    assert!(!stderr(&out).contains(secret));

    // Second run is served from the cache, so no new request arrives.
    let again = Command::new(BIN)
        .args(["--out-dir"])
        .arg(d)
        .args(["judge", "--generations", "one.jsonl", "--endpoint", &endpoint, "--model", "judge-x"])
        .args(["--verdicts-out", "again.jsonl"])
        .output()
        .unwrap();
    assert!(again.status.success());
    let verdicts = std::fs::read_to_string(d.join("again.jsonl")).unwrap();
    assert!(verdicts.lines().all(|l| l.contains("\"cached\":true")), "{verdicts}");
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}
