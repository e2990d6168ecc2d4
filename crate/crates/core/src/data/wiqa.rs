use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{Label, QuestionType, WiqaExample};
use crate::error::{Error, Result};

/// Where each field lives in a JSON record (dot-separated paths) and how
/// enum spellings map onto [`Label`] / [`QuestionType`].
///
/// Defaults follow the flattened WIQA layout; the synthetic generator
/// writes the same layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldMap {
    pub id: String,
    pub question: String,
    pub paragraph: String,
    pub label: String,
    pub question_type: String,
    pub hops: String,
    pub label_values: BTreeMap<String, Label>,
    pub question_type_values: BTreeMap<String, QuestionType>,
}

impl Default for FieldMap {
    fn default() -> Self {
        Self {
            id: "metadata_question_id".into(),
            question: "question_stem".into(),
            paragraph: "question_para_step".into(),
            label: "answer_label".into(),
            question_type: "metadata_question_type".into(),
            hops: "metadata_path_len".into(),
            label_values: [
                ("more", Label::More),
                ("less", Label::Less),
                ("no_effect", Label::NoEffect),
            ]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
            question_type_values: [
                ("INPARA_EFFECT", QuestionType::InPara),
                ("EXOGENOUS_EFFECT", QuestionType::OutOfPara),
                ("NO_EFFECT", QuestionType::NoEffect),
            ]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
        }
    }
}

impl FieldMap {
    fn label_spelling(&self, label: Label) -> String {
        self.label_values
            .iter()
            .find(|(_, &v)| v == label)
            .map_or_else(|| label.as_str().to_string(), |(k, _)| k.clone())
    }

    fn type_spelling(&self, qt: QuestionType) -> String {
        self.question_type_values
            .iter()
            .find(|(_, &v)| v == qt)
            .map_or_else(|| qt.as_str().to_string(), |(k, _)| k.clone())
    }

    /// Serialises an example in this layout.
    pub fn to_record(&self, ex: &WiqaExample) -> Value {
        let mut root = Value::Object(Map::new());
        set_path(&mut root, &self.id, Value::String(ex.id.clone()));
        set_path(&mut root, &self.question, Value::String(ex.question.clone()));
        set_path(
            &mut root,
            &self.paragraph,
            Value::Array(ex.paragraph.iter().cloned().map(Value::String).collect()),
        );
        if let Some(l) = ex.label {
            set_path(&mut root, &self.label, Value::String(self.label_spelling(l)));
        }
        if let Some(qt) = ex.question_type {
            set_path(
                &mut root,
                &self.question_type,
                Value::String(self.type_spelling(qt)),
            );
        }
        if let Some(h) = ex.hops {
            set_path(&mut root, &self.hops, Value::from(h));
        }
        root
    }
}

fn get_path<'a>(record: &'a Value, path: &str) -> Option<&'a Value> {
    if let Some(v) = record.get(path) {
        return Some(v);
    }
    path.split('.').try_fold(record, |v, key| v.get(key))
}

fn set_path(root: &mut Value, path: &str, value: Value) {
    let mut cur = root;
    let mut keys = path.split('.').peekable();
    while let Some(key) = keys.next() {
        let obj = match cur {
            Value::Object(m) => m,
            other => {
                *other = Value::Object(Map::new());
                other.as_object_mut().expect("just set")
            }
        };
        if keys.peek().is_none() {
            obj.insert(key.to_string(), value);
            return;
        }
        cur = obj
            .entry(key.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
    }
}

#[derive(Clone, Debug)]
pub struct LoadOptions {
    /// When false, missing label/type/hops fields load as `None`.
    pub labels_required: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            labels_required: true,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct LoadOutcome {
    pub examples: Vec<WiqaExample>,
    /// Non-fatal findings: empty input, label/hop disagreements.
    pub warnings: Vec<String>,
}

/// Reads newline-delimited JSON records into examples.
pub fn load_wiqa(path: &Path, fields: &FieldMap, options: &LoadOptions) -> Result<LoadOutcome> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let ingest = |message: String| Error::Ingest {
        path: path.to_path_buf(),
        message,
    };

    let mut outcome = LoadOutcome::default();
    let mut bad_enum: Vec<String> = Vec::new();
    let mut inconsistent: Vec<String> = Vec::new();

    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Value = serde_json::from_str(&line)
            .map_err(|e| ingest(format!("line {lineno}: malformed JSON: {e}")))?;

        let required = |field: &str, name: &str| {
            get_path(&record, field)
                .filter(|v| !v.is_null())
                .ok_or_else(|| ingest(format!("line {lineno}: missing field {name} ({field})")))
        };
        let optional = |field: &str, name: &str| -> Result<Option<&Value>> {
            match get_path(&record, field).filter(|v| !v.is_null()) {
                Some(v) => Ok(Some(v)),
                None if options.labels_required => Err(ingest(format!(
                    "line {lineno}: missing field {name} ({field})"
                ))),
                None => Ok(None),
            }
        };

        let id = match required(&fields.id, "id")? {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        let question = required(&fields.question, "question")?
            .as_str()
            .ok_or_else(|| ingest(format!("line {lineno}: question is not a string")))?
            .to_string();
        let paragraph = match required(&fields.paragraph, "paragraph")? {
            Value::String(s) => vec![s.clone()],
            Value::Array(items) => items
                .iter()
                .map(|v| {
                    v.as_str().map(str::to_string).ok_or_else(|| {
                        ingest(format!("line {lineno}: paragraph step is not a string"))
                    })
                })
                .collect::<Result<_>>()?,
            _ => {
                return Err(ingest(format!(
                    "line {lineno}: paragraph must be a string or list of strings"
                )))
            }
        };

        let mut record_bad = false;
        let label = match optional(&fields.label, "label")? {
            Some(v) => {
                let s = enum_text(v);
                match fields.label_values.get(&s) {
                    Some(&l) => Some(l),
                    None => {
                        record_bad = true;
                        None
                    }
                }
            }
            None => None,
        };
        let question_type = match optional(&fields.question_type, "question_type")? {
            Some(v) => {
                let s = enum_text(v);
                match fields.question_type_values.get(&s) {
                    Some(&q) => Some(q),
                    None => {
                        record_bad = true;
                        None
                    }
                }
            }
            None => None,
        };
        let hops = match optional(&fields.hops, "hops")? {
            Some(v) => Some(parse_hops(v).ok_or_else(|| {
                ingest(format!("line {lineno}: hops {v} is not a small integer"))
            })?),
            None => None,
        };
        if record_bad {
            bad_enum.push(id.clone());
            continue;
        }
        if let (Some(l), Some(h)) = (label, hops) {
            if (l == Label::NoEffect) != (h == 0) {
                inconsistent.push(id.clone());
            }
        }
        outcome.examples.push(WiqaExample::new(
            id,
            question,
            paragraph,
            label,
            question_type,
            hops,
        ));
    }

    if !bad_enum.is_empty() {
        let shown: Vec<_> = bad_enum.iter().take(20).cloned().collect();
        return Err(ingest(format!(
            "{} record(s) with unknown label or question-type values: {}{}",
            bad_enum.len(),
            shown.join(", "),
            if bad_enum.len() > shown.len() { ", ..." } else { "" }
        )));
    }
    if outcome.examples.is_empty() {
        outcome
            .warnings
            .push(format!("{} contains no examples", path.display()));
    }
    if !inconsistent.is_empty() {
        outcome.warnings.push(format!(
            "{} record(s) where no_effect label and hop count 0 disagree: {}",
            inconsistent.len(),
            inconsistent
                .iter()
                .take(20)
                .cloned()
                .collect::<Vec<_>>()
                .join(", ")
        ));
    }
    for w in &outcome.warnings {
        log::warn!("{w}");
    }
    Ok(outcome)
}

fn enum_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn parse_hops(v: &Value) -> Option<u8> {
    match v {
        Value::Number(n) => n.as_u64().and_then(|h| u8::try_from(h).ok()),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

/// Writes one JSON value per line.
pub fn write_jsonl<S: Serialize>(path: &Path, items: impl IntoIterator<Item = S>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, &item)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_jsonl<D: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<D>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Ingest {
            path: path.to_path_buf(),
            message: format!("line {}: {e}", i + 1),
        })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    const GOOD: &str = r#"{"metadata_question_id":"q1","question_stem":"suppose more rain falls, how will it affect more floods?","question_para_step":["Rain falls.","Rivers rise"],"answer_label":"more","metadata_question_type":"INPARA_EFFECT","metadata_path_len":1}"#;

    #[test]
    fn loads_flattened_records() {
        let f = write(&[GOOD]);
        let out = load_wiqa(f.path(), &FieldMap::default(), &LoadOptions::default()).unwrap();
        let ex = &out.examples[0];
        assert_eq!(ex.id, "q1");
        assert_eq!(ex.label, Some(Label::More));
        assert_eq!(ex.question_type, Some(QuestionType::InPara));
        assert_eq!(ex.hops, Some(1));
        assert_eq!(ex.paragraph_tokens, ["rain", "falls", ".", "rivers", "rise", "."]);
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn nested_paths() {
        let fields = FieldMap {
            id: "metadata.ques_id".into(),
            question: "question.stem".into(),
            paragraph: "steps".into(),
            label: "question.answer_label".into(),
            question_type: "metadata.question_type".into(),
            hops: "metadata.path_len".into(),
            ..FieldMap::default()
        };
        let f = write(&[
            r#"{"metadata":{"ques_id":"x","question_type":"NO_EFFECT","path_len":0},"question":{"stem":"s","answer_label":"no_effect"},"steps":"one step"}"#,
        ]);
        let out = load_wiqa(f.path(), &fields, &LoadOptions::default()).unwrap();
        assert_eq!(out.examples[0].label, Some(Label::NoEffect));
        let rec = fields.to_record(&out.examples[0]);
        assert_eq!(rec["metadata"]["ques_id"], "x");
        assert_eq!(rec["question"]["answer_label"], "no_effect");
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let f = write(&[GOOD, "{not json"]);
        let err = load_wiqa(f.path(), &FieldMap::default(), &LoadOptions::default())
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn unknown_enum_lists_record_ids() {
        let bad = GOOD.replace("\"more\"", "\"plenty\"").replace("q1", "q9");
        let f = write(&[GOOD, &bad]);
        let err = load_wiqa(f.path(), &FieldMap::default(), &LoadOptions::default())
            .unwrap_err()
            .to_string();
        assert!(err.contains("q9") && !err.contains("q1,"), "{err}");
    }

    #[test]
    fn missing_required_field() {
        let f = write(&[r#"{"metadata_question_id":"q","question_para_step":[]}"#]);
        let err = load_wiqa(f.path(), &FieldMap::default(), &LoadOptions::default())
            .unwrap_err()
            .to_string();
        assert!(err.contains("question"), "{err}");
    }

    #[test]
    fn unlabeled_input_allowed_when_optional() {
        let f = write(&[r#"{"metadata_question_id":"q","question_stem":"s","question_para_step":["a"]}"#]);
        let opts = LoadOptions {
            labels_required: false,
        };
        let out = load_wiqa(f.path(), &FieldMap::default(), &opts).unwrap();
        assert_eq!(out.examples[0].label, None);
    }

    #[test]
    fn empty_file_warns() {
        let f = write(&[]);
        let out = load_wiqa(f.path(), &FieldMap::default(), &LoadOptions::default()).unwrap();
        assert!(out.examples.is_empty());
        assert_eq!(out.warnings.len(), 1);
    }

    #[test]
    fn label_hop_disagreement_is_reported_not_fixed() {
        let odd = GOOD.replace("\"metadata_path_len\":1", "\"metadata_path_len\":0");
        let f = write(&[&odd]);
        let out = load_wiqa(f.path(), &FieldMap::default(), &LoadOptions::default()).unwrap();
        assert_eq!(out.examples[0].hops, Some(0));
        assert!(out.warnings[0].contains("q1"));
    }

    #[test]
    fn missing_file() {
        let err = load_wiqa(
            Path::new("/nonexistent/wiqa.jsonl"),
            &FieldMap::default(),
            &LoadOptions::default(),
        );
        assert!(matches!(err, Err(Error::Io { .. })));
    }
}
