use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ErrorLabel, Group};
use crate::data::corpus::{join_tags, split_tags};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReportError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

fn parse_error(line: usize, message: impl Into<String>) -> ReportError {
    ReportError::Parse {
        line,
        message: message.into(),
    }
}

/// Label counts over a set of analyzed predictions.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub counts: BTreeMap<ErrorLabel, usize>,
    pub examples: usize,
    pub correct: usize,
    /// Rules that could not fire for the language profile used.
    #[serde(default)]
    pub skipped_rules: Vec<String>,
}

impl ErrorReport {
    pub fn count(&self, label: ErrorLabel) -> usize {
        self.counts.get(&label).copied().unwrap_or(0)
    }

    pub fn group_total(&self, group: Group) -> usize {
        ErrorLabel::TAXONOMY
            .iter()
            .filter(|l| l.group() == Some(group))
            .map(|&l| self.count(l))
            .sum()
    }

    pub fn add(&mut self, labels: &[ErrorLabel]) {
        self.examples += 1;
        if labels.is_empty() {
            self.correct += 1;
        }
        for &l in labels {
            *self.counts.entry(l).or_insert(0) += 1;
        }
    }

    /// `label,count` rows: every label in table order (the unclassified
    /// sentinel last), then the group totals, then example counts.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,count\n");
        for l in ErrorLabel::ALL {
            out.push_str(&format!("{},{}\n", l.display_name(), self.count(l)));
        }
        for g in Group::ALL {
            out.push_str(&format!("{},{}\n", g.as_str(), self.group_total(g)));
        }
        out.push_str(&format!("examples,{}\ncorrect,{}\n", self.examples, self.correct));
        out
    }

    /// Inverse of [`ErrorReport::to_csv`]; group totals are checked against
    /// the label counts.
    pub fn from_csv(text: &str) -> Result<Self, ReportError> {
        let mut report = ErrorReport::default();
        let mut totals = Vec::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            let n = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let (key, value) = line.split_once(',').ok_or_else(|| parse_error(n, "expected key,count"))?;
            let value: usize = value.trim().parse().map_err(|_| parse_error(n, format!("bad count {value:?}")))?;
            match key {
                "examples" => report.examples = value,
                "correct" => report.correct = value,
                "Stem" => totals.push((Group::Stem, value, n)),
                "Affix" => totals.push((Group::Affix, value, n)),
                "Misc" => totals.push((Group::Misc, value, n)),
                _ => {
                    let label: ErrorLabel = key.parse().map_err(|e: String| parse_error(n, e))?;
                    if value > 0 {
                        report.counts.insert(label, value);
                    }
                }
            }
        }
        for (g, value, n) in totals {
            if report.group_total(g) != value {
                return Err(parse_error(n, format!("{} total {value} does not match its labels", g.as_str())));
            }
        }
        Ok(report)
    }
}

/// Sums per-example label multisets into one report.
pub fn aggregate<L: AsRef<[ErrorLabel]>>(labels: &[L]) -> ErrorReport {
    let mut report = ErrorReport::default();
    for l in labels {
        report.add(l.as_ref());
    }
    report
}

/// One line of a predictions file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictionRecord {
    pub lemma: String,
    pub gold: String,
    pub predicted: String,
    pub tags: Vec<String>,
}

/// `lemma<TAB>gold<TAB>predicted<TAB>tag;tag…` lines.
pub fn render_predictions(records: &[PredictionRecord]) -> String {
    records
        .iter()
        .map(|r| format!("{}\t{}\t{}\t{}\n", r.lemma, r.gold, r.predicted, join_tags(&r.tags)))
        .collect()
}

pub fn parse_predictions(text: &str) -> Result<Vec<PredictionRecord>, ReportError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        // the prediction may legitimately be empty
        if fields.len() != 4 || fields[0].is_empty() || fields[1].is_empty() || fields[3].is_empty() {
            return Err(parse_error(i + 1, "expected lemma, gold, predicted and tags separated by tabs"));
        }
        out.push(PredictionRecord {
            lemma: fields[0].to_owned(),
            gold: fields[1].to_owned(),
            predicted: fields[2].to_owned(),
            tags: split_tags(fields[3]),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ErrorLabel::*;

    #[test]
    fn empty_input_is_all_zero() {
        let r = aggregate::<Vec<ErrorLabel>>(&[]);
        assert_eq!(r.examples, 0);
        assert!(Group::ALL.iter().all(|&g| r.group_total(g) == 0));
    }

    #[test]
    fn counting() {
        let r = aggregate(&vec![vec![AFF]; 10]);
        assert_eq!(r.group_total(Group::Affix), 10);
        let r = aggregate(&[vec![], vec![SUB_V, AFF], vec![UNCLASSIFIED]]);
        assert_eq!((r.examples, r.correct), (3, 1));
        assert_eq!(r.group_total(Group::Stem), 1);
        assert_eq!(r.count(UNCLASSIFIED), 1);
    }

    #[test]
    fn csv_round_trip_and_total_check() {
        let r = aggregate(&[vec![MULT, AFF], vec![REFL], vec![]]);
        let csv = r.to_csv();
        assert!(csv.contains("SUB(V),0\n") && csv.contains("Stem,1\n"));
        assert_eq!(ErrorReport::from_csv(&csv).unwrap(), r);
        let broken = csv.replace("Stem,1", "Stem,2");
        assert!(ErrorReport::from_csv(&broken).is_err());
    }

    #[test]
    fn predictions_round_trip() {
        let recs = vec![
            PredictionRecord {
                lemma: "sing".into(),
                gold: "sang".into(),
                predicted: "singed".into(),
                tags: vec!["V".into(), "PST".into()],
            },
            PredictionRecord {
                lemma: "doler".into(),
                gold: "nos doliéramos".into(),
                predicted: String::new(),
                tags: vec!["V".into()],
            },
        ];
        assert_eq!(parse_predictions(&render_predictions(&recs)).unwrap(), recs);
        assert!(parse_predictions("a\tb\n").is_err());
    }
}
