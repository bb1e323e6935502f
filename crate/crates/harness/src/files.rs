//! Line-oriented file formats: dataset splits, run records, fine-tune
//! records, and oracle solution dumps. Every format is one self-describing
//! JSON object per line; read errors carry the line number.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use ats_core::datasets::{DatasetSplit, NumberedInstance};
use ats_core::finetune::FinetuneRecord;
use ats_core::orchestrator::RunRecord;
use ats_core::puzzles::{PuzzleInstance, PuzzleKind};

#[derive(Debug, thiserror::Error)]
pub enum FileError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: String,
        line: usize,
        message: String,
    },
}

fn io_err(path: &Path, source: std::io::Error) -> FileError {
    FileError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn malformed(path: &Path, line: usize, message: impl Into<String>) -> FileError {
    FileError::Malformed {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum SplitLabel {
    Train,
    Test,
}

/// One dataset line: the instance plus its id, split label, and the split's
/// provenance (seed and enumeration-rule tag).
#[derive(Debug, Serialize, Deserialize)]
struct SplitLine {
    id: u64,
    split: SplitLabel,
    seed: u64,
    interpretation_tag: String,
    #[serde(flatten)]
    instance: PuzzleInstance,
}

/// Writes one split as JSON lines (train first, then test, ids ascending
/// within each).
pub fn write_split(split: &DatasetSplit, path: &Path) -> Result<(), FileError> {
    let mut out = Vec::new();
    for (label, entries) in [(SplitLabel::Train, &split.train), (SplitLabel::Test, &split.test)] {
        for n in entries {
            let line = SplitLine {
                id: n.id,
                split: label,
                seed: split.seed,
                interpretation_tag: split.interpretation_tag.clone(),
                instance: n.instance,
            };
            serde_json::to_writer(&mut out, &line).expect("split lines serialize");
            out.push(b'\n');
        }
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Reads a split back; rejects unknown kinds, duplicate ids, and mixed
/// kinds, each with the offending line number.
pub fn read_split(path: &Path) -> Result<DatasetSplit, FileError> {
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    let mut kind: Option<PuzzleKind> = None;
    let mut seed = 0u64;
    let mut interpretation_tag = String::new();
    let mut seen = std::collections::BTreeSet::new();
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: SplitLine = serde_json::from_str(&line)
            .map_err(|e| malformed(path, line_no, e.to_string()))?;
        if !seen.insert(parsed.id) {
            return Err(malformed(path, line_no, format!("duplicate id {}", parsed.id)));
        }
        let line_kind = parsed.instance.kind();
        match kind {
            None => kind = Some(line_kind),
            Some(k) if k != line_kind => {
                return Err(malformed(
                    path,
                    line_no,
                    format!("kind {line_kind:?} mixed into a {k:?} split"),
                ));
            }
            _ => {}
        }
        seed = parsed.seed;
        interpretation_tag = parsed.interpretation_tag;
        let numbered = NumberedInstance {
            id: parsed.id,
            instance: parsed.instance,
        };
        match parsed.split {
            SplitLabel::Train => train.push(numbered),
            SplitLabel::Test => test.push(numbered),
        }
    }
    let kind = kind.ok_or_else(|| malformed(path, 0, "empty split file"))?;
    Ok(DatasetSplit {
        kind,
        seed,
        interpretation_tag,
        train,
        test,
    })
}

/// Conventional file name for one puzzle's split.
pub fn split_file_name(kind: PuzzleKind) -> String {
    format!("{}.jsonl", kind.tag())
}

/// Writes run records as JSON lines, in the given order.
pub fn write_records(records: &[RunRecord], path: &Path) -> Result<(), FileError> {
    let mut out = Vec::new();
    for record in records {
        serde_json::to_writer(&mut out, record).expect("records serialize");
        out.push(b'\n');
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

pub fn read_records(path: &Path) -> Result<Vec<RunRecord>, FileError> {
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: RunRecord = serde_json::from_str(&line)
            .map_err(|e| malformed(path, idx + 1, e.to_string()))?;
        if !ats_core::orchestrator::usage_is_consistent(&record) {
            return Err(malformed(path, idx + 1, "trial usages do not sum to the total"));
        }
        records.push(record);
    }
    Ok(records)
}

/// Writes fine-tune records as JSON lines and a schema file alongside;
/// returns the number of lines written.
pub fn write_finetune(records: &[FinetuneRecord], path: &Path) -> Result<usize, FileError> {
    let mut out = Vec::new();
    for record in records {
        serde_json::to_writer(&mut out, record).expect("finetune records serialize");
        out.push(b'\n');
    }
    fs::write(path, out).map_err(|e| io_err(path, e))?;
    let schema_path = path.with_extension("schema.json");
    fs::write(&schema_path, FINETUNE_SCHEMA).map_err(|e| io_err(&schema_path, e))?;
    Ok(records.len())
}

pub fn read_finetune(path: &Path) -> Result<Vec<FinetuneRecord>, FileError> {
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(
            serde_json::from_str(&line).map_err(|e| malformed(path, idx + 1, e.to_string()))?,
        );
    }
    Ok(records)
}

/// JSON Schema for the instruction-pair lines, shipped next to every export.
pub const FINETUNE_SCHEMA: &str = r#"{
  "$schema": "https://json-schema.org/draft/2020-12/schema",
  "title": "Instruction pair",
  "description": "One supervised fine-tuning example per line (JSON Lines).",
  "type": "object",
  "required": ["kind", "instance_id", "tuned_type", "source", "prompt", "target"],
  "properties": {
    "kind": { "enum": ["drop_water", "number_path", "arithmetic", "minimal_grass"] },
    "instance_id": { "type": "integer", "minimum": 0 },
    "tuned_type": { "enum": ["ats_tuned", "cot_tuned", "tot_tuned"] },
    "source": { "enum": ["cot", "ats_bfs", "ats_dfs", "tot"] },
    "prompt": { "type": "string", "description": "rendered problem statement" },
    "target": { "type": "string", "description": "response text; re-scores correct under the tuned type's format" }
  },
  "additionalProperties": false
}
"#;

/// Writes an oracle solution dump: one line per instance with the plan (or
/// the optimal dimensions). Returns how many instances were unsolvable.
pub fn write_solutions(split: &DatasetSplit, path: &Path) -> Result<usize, FileError> {
    use ats_core::trace::{render_chain, ChainStyle};

    #[derive(Serialize)]
    struct SolutionLine<'a> {
        id: u64,
        #[serde(flatten)]
        instance: &'a PuzzleInstance,
        solvable: bool,
        #[serde(skip_serializing_if = "Option::is_none")]
        chain: Option<String>,
        #[serde(skip_serializing_if = "Option::is_none")]
        grass_area: Option<u64>,
    }

    let mut unsolvable = 0usize;
    let mut out = Vec::new();
    for n in split.all() {
        let plan = ats_core::oracle::solve(&n.instance);
        let grass_area = match &n.instance {
            PuzzleInstance::MinimalGrass(i) => {
                Some(ats_core::oracle::solve_minimal_grass(i).grass_area)
            }
            _ => None,
        };
        if plan.is_none() {
            unsolvable += 1;
        }
        let line = SolutionLine {
            id: n.id,
            instance: &n.instance,
            solvable: plan.is_some(),
            chain: plan
                .as_ref()
                .map(|p| render_chain(&p.states, &p.moves, ChainStyle::Summary)),
            grass_area,
        };
        serde_json::to_writer(&mut out, &line).expect("solution lines serialize");
        out.push(b'\n');
    }
    let mut file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    file.write_all(&out).map_err(|e| io_err(path, e))?;
    Ok(unsolvable)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ats_core::datasets;

    #[test]
    fn split_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let splits = datasets::generate_all(42).unwrap();
        for split in &splits {
            let path = dir.path().join(split_file_name(split.kind));
            write_split(split, &path).unwrap();
            let back = read_split(&path).unwrap();
            assert_eq!(&back, split);
        }
    }

    #[test]
    fn duplicate_ids_are_rejected_with_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        let line = r#"{"id":3,"split":"train","seed":1,"interpretation_tag":"t","kind":"number_path","start":1,"goal":16,"steps":4}"#;
        fs::write(&path, format!("{line}\n{line}\n")).unwrap();
        let err = read_split(&path).unwrap_err();
        assert!(matches!(err, FileError::Malformed { line: 2, .. }), "{err}");
    }

    #[test]
    fn unknown_kind_is_rejected_with_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        fs::write(
            &path,
            r#"{"id":0,"split":"train","seed":1,"interpretation_tag":"t","kind":"sudoku","rows":9}"#,
        )
        .unwrap();
        let err = read_split(&path).unwrap_err();
        assert!(matches!(err, FileError::Malformed { line: 1, .. }), "{err}");
    }

    #[test]
    fn solutions_dump_counts_unsolvable() {
        use ats_core::datasets::NumberedInstance;
        use ats_core::puzzles::ArithmeticInstance;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("solutions.jsonl");
        let split = DatasetSplit {
            kind: PuzzleKind::Arithmetic,
            seed: 0,
            interpretation_tag: "hand-built".into(),
            train: vec![NumberedInstance {
                id: 0,
                instance: PuzzleInstance::Arithmetic(ArithmeticInstance::new([2, 3, 10], 16)),
            }],
            test: vec![NumberedInstance {
                id: 1,
                instance: PuzzleInstance::Arithmetic(ArithmeticInstance::new([1, 1, 1], 24)),
            }],
        };
        let unsolvable = write_solutions(&split, &path).unwrap();
        assert_eq!(unsolvable, 1);
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.contains("\"solvable\":false"));
    }
}
