use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use unlearn_eval_core::datamodel::{read_records, write_records, Record};
use unlearn_eval_core::LanguageTag;

use crate::args::{Cli, Format};
use crate::error::{CliError, CliResult};
use crate::table::Table;

/// Per-run state: path resolution, output bookkeeping and the manifest.
pub struct Context {
    pub seed: u64,
    pub lang_set: Option<Vec<LanguageTag>>,
    pub format: Format,
    out_dir: PathBuf,
    manifest: Manifest,
}

#[derive(Debug, Serialize)]
struct FileHash {
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest {
    tool: &'static str,
    version: &'static str,
    command: String,
    config: Value,
    inputs: Vec<FileHash>,
    outputs: Vec<FileHash>,
    #[serde(skip_serializing_if = "Option::is_none")]
    judge_prompt_version: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    judge_prompt_hash: Option<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Context {
    pub fn new(cli: &Cli, command: &str) -> CliResult<Self> {
        let config = serde_json::to_value(cli).expect("arguments serialize");
        std::fs::create_dir_all(&cli.out_dir).map_err(|e| CliError::io(&cli.out_dir, e))?;
        Ok(Self {
            seed: cli.seed,
            lang_set: cli.lang_set.clone().map(|s| s.0),
            format: cli.format,
            out_dir: cli.out_dir.clone(),
            manifest: Manifest {
                tool: "unlearn-eval",
                version: env!("CARGO_PKG_VERSION"),
                command: command.to_owned(),
                config,
                inputs: Vec::new(),
                outputs: Vec::new(),
                judge_prompt_version: None,
                judge_prompt_hash: None,
            },
        })
    }

    /// Relative inputs are looked up under the output directory first, then the working
    /// directory. A missing file is a usage error naming the flag.
    pub fn input(&self, flag: &str, path: &Path) -> CliResult<PathBuf> {
        if path.is_absolute() {
            return if path.exists() { Ok(path.to_owned()) } else { Err(not_found(flag, path)) };
        }
        let under_out = self.out_dir.join(path);
        if under_out.exists() {
            Ok(under_out)
        } else if path.exists() {
            Ok(path.to_owned())
        } else {
            Err(not_found(flag, path))
        }
    }

    pub fn output(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_owned()
        } else {
            self.out_dir.join(path)
        }
    }

    /// Default metric-table path `<stem>.<format extension>` unless `--out` was given.
    pub fn table_path(&self, out: &Option<PathBuf>, stem: &str) -> PathBuf {
        let rel = out.clone().unwrap_or_else(|| PathBuf::from(format!("{stem}.{}", self.format.extension())));
        self.output(&rel)
    }

    pub fn read_bytes(&mut self, flag: &str, path: &Path) -> CliResult<(PathBuf, Vec<u8>)> {
        let resolved = self.input(flag, path)?;
        let bytes = std::fs::read(&resolved).map_err(|e| CliError::io(&resolved, e))?;
        self.manifest.inputs.push(FileHash {
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
        });
        Ok((resolved, bytes))
    }

    pub fn read_jsonl<R: Record>(&mut self, flag: &str, path: &Path) -> CliResult<Vec<R>> {
        let (resolved, _) = self.read_bytes(flag, path)?;
        read_records(&resolved).map_err(|e| CliError::records(&resolved, e))
    }

    /// Records a directory input by hashing every regular file in it, in name order.
    pub fn note_dir(&mut self, flag: &str, dir: &Path) -> CliResult<PathBuf> {
        let resolved = self.input(flag, dir)?;
        let mut entries: Vec<PathBuf> = std::fs::read_dir(&resolved)
            .map_err(|e| CliError::io(&resolved, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        entries.sort();
        for p in entries {
            let bytes = std::fs::read(&p).map_err(|e| CliError::io(&p, e))?;
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            self.manifest.inputs.push(FileHash {
                path: dir.join(name).display().to_string(),
                sha256: sha256_hex(&bytes),
            });
        }
        Ok(resolved)
    }

    pub fn write_bytes(&mut self, path: &Path, bytes: &[u8]) -> CliResult<()> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))?;
        self.note_output(path, bytes);
        Ok(())
    }

    pub fn write_jsonl<R: Record>(&mut self, path: &Path, records: &[R]) -> CliResult<()> {
        write_records(path, records).map_err(|e| CliError::records(path, e))?;
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        self.note_output(path, &bytes);
        Ok(())
    }

    pub fn write_table(&mut self, path: &Path, table: &Table) -> CliResult<()> {
        let text = table.render(self.format);
        self.write_bytes(path, text.as_bytes())
    }

    fn note_output(&mut self, path: &Path, bytes: &[u8]) {
        let shown = path.strip_prefix(&self.out_dir).unwrap_or(path);
        self.manifest.outputs.push(FileHash {
            path: shown.display().to_string(),
            sha256: sha256_hex(bytes),
        });
    }

    /// Adds a resolved setting to the config echo.
    pub fn echo(&mut self, key: &str, value: Value) {
        if let Value::Object(map) = &mut self.manifest.config {
            map.insert(key.to_owned(), value);
        }
    }

    pub fn set_judge_prompt(&mut self, version: &'static str, hash: String) {
        self.manifest.judge_prompt_version = Some(version);
        self.manifest.judge_prompt_hash = Some(hash);
    }

    /// Writes `<primary output without extension>.manifest.json` beside the primary output.
    pub fn finish(self, primary: &Path) -> CliResult<PathBuf> {
        let path = primary.with_extension("manifest.json");
        let mut text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

fn not_found(flag: &str, path: &Path) -> CliError {
    CliError::usage(format!("--{flag}: file not found: {}", path.display()))
}
