//! Translating ID-form rule files to entity names and writing the summary.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::evolution::{classify_new_state, SnpReport};
use crate::model::EntityId;
use crate::preprocess::EntityIndex;

pub const NERS_NAME_FILE: &str = "NERs_Name.txt";
pub const SNERS_NAME_FILE: &str = "SNERs_Name.txt";
pub const REPORT_FILE: &str = "report.txt";

/// How many SNERs the summary lists.
pub const TOP_SNERS: usize = 10;

/// Splits a rule line into its rule tokens and the trailing `#...` annotation.
fn split_annotation(line: &str) -> (&str, &str) {
    match line.find(" #") {
        Some(at) => (&line[..at], &line[at..]),
        None if line.starts_with('#') => ("", line),
        None => (line, ""),
    }
}

fn map_line(line: &str, lineno: usize, mut map: impl FnMut(&str) -> Result<String>) -> Result<String> {
    let (rule, annotation) = split_annotation(line);
    let mut out = Vec::new();
    for tok in rule.split_whitespace() {
        if tok == "->" {
            out.push(tok.to_string());
        } else {
            out.push(map(tok).map_err(|e| match e {
                Error::UnknownId { id, .. } => Error::UnknownId { id, line: lineno },
                Error::UnknownName { name, .. } => Error::UnknownName { name, line: lineno },
                other => other,
            })?);
        }
    }
    Ok(out.join(" ") + annotation)
}

fn map_text(text: &str, map: impl Fn(&str) -> Result<String>) -> Result<String> {
    let mut out = String::with_capacity(text.len());
    for (i, line) in text.lines().enumerate() {
        out.push_str(&map_line(line, i + 1, &map)?);
        out.push('\n');
    }
    Ok(out)
}

/// Replaces each entity ID in rule lines with its name; annotations are kept
/// verbatim.
pub fn decode_text(text: &str, index: &EntityIndex) -> Result<String> {
    map_text(text, |tok| {
        let id: u32 = tok.parse().map_err(|_| Error::UnknownName {
            name: tok.to_string(),
            line: 0,
        })?;
        index
            .name(EntityId(id))
            .map(str::to_string)
            .ok_or(Error::UnknownId { id, line: 0 })
    })
}

/// Inverse of [`decode_text`].
pub fn encode_text(text: &str, index: &EntityIndex) -> Result<String> {
    map_text(text, |tok| {
        index
            .id(tok)
            .map(|id| id.to_string())
            .ok_or_else(|| Error::UnknownName {
                name: tok.to_string(),
                line: 0,
            })
    })
}

pub fn decode_rules(rules_file: &Path, index: &EntityIndex, out: &Path) -> Result<()> {
    let text = fs::read_to_string(rules_file).map_err(|e| Error::io(rules_file, e))?;
    let decoded = decode_text(&text, index)?;
    fs::write(out, decoded).map_err(|e| Error::io(out, e))
}

pub fn encode_rules(rules_file: &Path, index: &EntityIndex, out: &Path) -> Result<()> {
    let text = fs::read_to_string(rules_file).map_err(|e| Error::io(rules_file, e))?;
    let encoded = encode_text(&text, index)?;
    fs::write(out, encoded).map_err(|e| Error::io(out, e))
}

/// Everything the summary is built from.
pub struct ReportInputs<'a> {
    pub snp: &'a SnpReport,
    /// NER lines in name form.
    pub ners: &'a str,
    /// SNER lines in name form, most stable first.
    pub sners: &'a str,
    pub state_labels: &'a [String],
    /// SNP of the series before the newest state was appended.
    pub previous_snp: Option<f64>,
    pub tolerance: f64,
}

/// Renders the plain-text report. Fails if the counts in the SNP row do not
/// match the rule listings.
pub fn summarize(inputs: &ReportInputs<'_>) -> Result<String> {
    let snp = inputs.snp;
    let ner_lines = inputs.ners.lines().count();
    let sner_lines: Vec<&str> = inputs.sners.lines().collect();
    if ner_lines != snp.ner_count {
        return Err(Error::CountMismatch(format!(
            "report says {} NERs, listing has {ner_lines}",
            snp.ner_count
        )));
    }
    if sner_lines.len() != snp.sner_count {
        return Err(Error::CountMismatch(format!(
            "report says {} SNERs, listing has {}",
            snp.sner_count,
            sner_lines.len()
        )));
    }
    if inputs.state_labels.len() != snp.n_states {
        return Err(Error::CountMismatch(format!(
            "report covers {} states, {} labels given",
            snp.n_states,
            inputs.state_labels.len()
        )));
    }

    let mut out = String::new();
    let _ = writeln!(out, "Network evolution rule report");
    let _ = writeln!(out, "thresholds (minSupCount-minConf-minStabCount): {}", snp.thresholds);
    let _ = writeln!(out, "states (N): {}", snp.n_states);
    let _ = writeln!(out, "state order: {}", inputs.state_labels.join(", "));
    let _ = writeln!(out, "minStab: {}", snp.min_stab_text());
    let _ = writeln!(out, "NER count: {}", snp.ner_count);
    let _ = writeln!(out, "SNER count: {}", snp.sner_count);
    let _ = writeln!(out, "SNER fraction: {}", snp.sner_fraction_text());
    let _ = writeln!(out, "SNP: {}", snp.snp_text());
    if let Some(prev) = inputs.previous_snp {
        let class = classify_new_state(prev, snp.snp(), inputs.tolerance)?;
        let _ = writeln!(out, "previous SNP: {prev:.2}");
        let _ = writeln!(out, "new state: {class} ({})", class.describe());
    }
    let shown = sner_lines.len().min(TOP_SNERS);
    let _ = writeln!(out, "top SNERs ({shown} of {}):", sner_lines.len());
    for line in &sner_lines[..shown] {
        let _ = writeln!(out, "  {line}");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Thresholds;
    use tempfile::tempdir;

    fn index(names: &[&str]) -> EntityIndex {
        let mut idx = EntityIndex::new();
        for n in names {
            idx.intern(n);
        }
        idx
    }

    #[test]
    fn decode_keeps_annotations() {
        let idx = index(&["butter", "jam", "milk"]);
        let out = decode_text("1 2 -> 3 #STAB: 0.67\n", &idx).unwrap();
        assert_eq!(out, "butter jam -> milk #STAB: 0.67\n");
        assert_eq!(encode_text(&out, &idx).unwrap(), "1 2 -> 3 #STAB: 0.67\n");
        assert_eq!(decode_text("", &idx).unwrap(), "");
    }

    #[test]
    fn decode_names_unknown_id_and_line() {
        let idx = index(&["a", "b"]);
        let err = decode_text("1 -> 2 #SUP: 1\n1 -> 99 #SUP: 1\n", &idx).unwrap_err();
        assert!(matches!(err, Error::UnknownId { id: 99, line: 2 }), "{err}");
        let err = encode_text("a -> zz\n", &idx).unwrap_err();
        assert!(matches!(err, Error::UnknownName { line: 1, .. }), "{err}");
    }

    #[test]
    fn decode_files() {
        let dir = tempdir().unwrap();
        let idx = index(&["x", "y"]);
        let src = dir.path().join("NERs_ID.txt");
        let mid = dir.path().join("NERs_Name.txt");
        let back = dir.path().join("again.txt");
        fs::write(&src, "1 -> 2 #STABCOUNT: 1 #STAB: 1.00\n2 -> 1 2 #STABCOUNT: 1 #STAB: 1.00\n").unwrap();
        decode_rules(&src, &idx, &mid).unwrap();
        assert_eq!(
            fs::read_to_string(&mid).unwrap(),
            "x -> y #STABCOUNT: 1 #STAB: 1.00\ny -> x y #STABCOUNT: 1 #STAB: 1.00\n"
        );
        encode_rules(&mid, &idx, &back).unwrap();
        assert_eq!(fs::read(&back).unwrap(), fs::read(&src).unwrap());
    }

    fn report(sners: usize, ners: usize) -> SnpReport {
        let t = Thresholds::new(2, "0.5".parse().unwrap(), 2).unwrap();
        SnpReport::new(t, 3, sners, ners).unwrap()
    }

    fn labels() -> Vec<String> {
        vec!["s1".into(), "s2".into(), "s3".into()]
    }

    #[test]
    fn summary_of_worked_example() {
        let snp = report(5, 11);
        let ners = "r\n".repeat(11);
        let sners = "a -> b #STABCOUNT: 3 #STAB: 1.00\n".repeat(5);
        let labels = labels();
        let inputs = ReportInputs {
            snp: &snp,
            ners: &ners,
            sners: &sners,
            state_labels: &labels,
            previous_snp: None,
            tolerance: 0.5,
        };
        let text = summarize(&inputs).unwrap();
        assert!(text.contains("SNP: 30.30\n"), "{text}");
        assert!(text.contains("thresholds (minSupCount-minConf-minStabCount): 2-0.5-2\n"));
        assert!(text.contains("  a -> b #STABCOUNT: 3 #STAB: 1.00\n"));
        assert_eq!(summarize(&inputs).unwrap(), text);
    }

    #[test]
    fn summary_with_zero_sners_and_previous_metric() {
        let snp = report(0, 4);
        let labels = labels();
        let text = summarize(&ReportInputs {
            snp: &snp,
            ners: "a\nb\nc\nd\n",
            sners: "",
            state_labels: &labels,
            previous_snp: Some(12.5),
            tolerance: 0.5,
        })
        .unwrap();
        assert!(text.contains("SNP: 0.00\n"), "{text}");
        assert!(text.contains("new state: LessStableSeries"), "{text}");
    }

    #[test]
    fn summary_rejects_count_mismatch() {
        let snp = report(1, 2);
        let labels = labels();
        let err = summarize(&ReportInputs {
            snp: &snp,
            ners: "a\n",
            sners: "a\n",
            state_labels: &labels,
            previous_snp: None,
            tolerance: 0.0,
        })
        .unwrap_err();
        assert!(matches!(err, Error::CountMismatch(_)));
    }
}
