//! Accuracy and error tables as CSV and Markdown, plus CSV parsers so
//! every written table can be read back.

use std::collections::BTreeMap;

use crate::taxonomy::{ErrorLabel, ErrorReport, Group, ReportError};
use crate::train::format_accuracy;

/// Placeholder for a missing cell.
pub const MISSING: &str = "—";

/// Accuracies indexed by (target, source); rows are targets, columns sources.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AccuracyMatrix {
    pub sources: Vec<String>,
    pub targets: Vec<String>,
    pub cells: BTreeMap<(String, String), f64>,
}

impl AccuracyMatrix {
    pub fn new(sources: &[String], targets: &[String]) -> Self {
        Self {
            sources: sources.to_vec(),
            targets: targets.to_vec(),
            cells: BTreeMap::new(),
        }
    }

    pub fn set(&mut self, target: &str, source: &str, value: f64) {
        self.cells.insert((target.to_owned(), source.to_owned()), value);
    }

    pub fn get(&self, target: &str, source: &str) -> Option<f64> {
        self.cells.get(&(target.to_owned(), source.to_owned())).copied()
    }

    fn cell(&self, target: &str, source: &str) -> String {
        self.get(target, source).map_or_else(|| MISSING.to_owned(), format_accuracy)
    }

    fn rows(&self) -> (Vec<String>, Vec<Vec<String>>) {
        let header = std::iter::once("target".to_owned())
            .chain(self.sources.iter().map(|s| s.to_uppercase()))
            .collect();
        let rows = self
            .targets
            .iter()
            .map(|t| {
                std::iter::once(t.to_uppercase())
                    .chain(self.sources.iter().map(|s| self.cell(t, s)))
                    .collect()
            })
            .collect();
        (header, rows)
    }

    pub fn to_csv(&self) -> String {
        let (header, rows) = self.rows();
        csv(&header, &rows)
    }

    pub fn to_markdown(&self) -> String {
        let (header, rows) = self.rows();
        markdown(&header, &rows)
    }

    /// Reads a table written by [`AccuracyMatrix::to_csv`]; values come
    /// back at the one-decimal precision of the file.
    pub fn from_csv(text: &str) -> Result<Self, ReportError> {
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().unwrap_or("target").split(',').collect();
        if header.first() != Some(&"target") {
            return Err(parse_error(1, "header must start with \"target\""));
        }
        let sources: Vec<String> = header[1..].iter().map(|s| s.to_lowercase()).collect();
        let mut m = AccuracyMatrix::new(&sources, &[]);
        for (i, line) in lines.enumerate() {
            let n = i + 2;
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != header.len() {
                return Err(parse_error(n, format!("expected {} fields", header.len())));
            }
            let target = fields[0].to_lowercase();
            for (s, v) in sources.iter().zip(&fields[1..]) {
                if *v != MISSING {
                    let pct: f64 = v.parse().map_err(|_| parse_error(n, format!("bad value {v:?}")))?;
                    m.set(&target, s, pct / 100.0);
                }
            }
            m.targets.push(target);
        }
        Ok(m)
    }
}

/// Error counts of several sources for one target; rows are labels in
/// table order, then group totals, then unclassified predictions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ErrorTable {
    pub columns: Vec<(String, ErrorReport)>,
}

impl ErrorTable {
    fn rows(&self) -> (Vec<String>, Vec<Vec<String>>) {
        let header = std::iter::once("label".to_owned())
            .chain(self.columns.iter().map(|(s, _)| s.to_uppercase()))
            .collect();
        let row = |name: String, f: &dyn Fn(&ErrorReport) -> usize| -> Vec<String> {
            std::iter::once(name)
                .chain(self.columns.iter().map(|(_, r)| f(r).to_string()))
                .collect()
        };
        let mut rows: Vec<Vec<String>> = ErrorLabel::TAXONOMY
            .iter()
            .map(|&l| row(l.display_name(), &|r| r.count(l)))
            .collect();
        for g in Group::ALL {
            rows.push(row(g.as_str().to_owned(), &|r| r.group_total(g)));
        }
        rows.push(row(ErrorLabel::UNCLASSIFIED.display_name(), &|r| r.count(ErrorLabel::UNCLASSIFIED)));
        (header, rows)
    }

    pub fn to_csv(&self) -> String {
        let (header, rows) = self.rows();
        csv(&header, &rows)
    }

    pub fn to_markdown(&self) -> String {
        let (header, rows) = self.rows();
        markdown(&header, &rows)
    }

    /// Reads a table written by [`ErrorTable::to_csv`], checking every
    /// group total against its labels.
    pub fn from_csv(text: &str) -> Result<Self, ReportError> {
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().unwrap_or("label").split(',').collect();
        if header.first() != Some(&"label") {
            return Err(parse_error(1, "header must start with \"label\""));
        }
        let mut columns: Vec<(String, ErrorReport)> =
            header[1..].iter().map(|s| (s.to_lowercase(), ErrorReport::default())).collect();
        let mut totals = Vec::new();
        for (i, line) in lines.enumerate() {
            let n = i + 2;
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != header.len() {
                return Err(parse_error(n, format!("expected {} fields", header.len())));
            }
            let values = fields[1..]
                .iter()
                .map(|v| v.parse::<usize>().map_err(|_| parse_error(n, format!("bad count {v:?}"))))
                .collect::<Result<Vec<_>, _>>()?;
            let group = Group::ALL.into_iter().find(|g| g.as_str() == fields[0]);
            if let Some(g) = group {
                totals.push((g, values, n));
                continue;
            }
            let label: ErrorLabel = fields[0].parse().map_err(|e: String| parse_error(n, e))?;
            for ((_, r), v) in columns.iter_mut().zip(values) {
                if v > 0 {
                    r.counts.insert(label, v);
                }
            }
        }
        for (g, values, n) in totals {
            for ((s, r), v) in columns.iter().zip(values) {
                if r.group_total(g) != v {
                    return Err(parse_error(n, format!("{} total of {s} does not match its labels", g.as_str())));
                }
            }
        }
        Ok(Self { columns })
    }
}

fn parse_error(line: usize, message: impl Into<String>) -> ReportError {
    ReportError::Parse {
        line,
        message: message.into(),
    }
}

fn csv(header: &[String], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

fn markdown(header: &[String], rows: &[Vec<String>]) -> String {
    let mut out = format!("| {} |\n", header.join(" | "));
    let rule: Vec<&str> = std::iter::once(":--").chain(header.iter().skip(1).map(|_| "--:")).collect();
    out.push_str(&format!("|{}|\n", rule.join("|")));
    for r in rows {
        out.push_str(&format!("| {} |\n", r.join(" | ")));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::aggregate;

    fn names(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn accuracy_cells() {
        let mut m = AccuracyMatrix::new(&names(&["hun", "qvh"]), &names(&["eng", "zul"]));
        m.set("eng", "hun", 0.856);
        m.set("zul", "qvh", 0.107);
        let csv = m.to_csv();
        assert_eq!(csv, "target,HUN,QVH\nENG,85.6,—\nZUL,—,10.7\n");
        let back = AccuracyMatrix::from_csv(&csv).unwrap();
        assert_eq!(back.sources, m.sources);
        assert_eq!(back.targets, m.targets);
        assert!((back.get("eng", "hun").unwrap() - 0.856).abs() < 1e-12);
        assert_eq!(back.get("eng", "qvh"), None);
        assert!(m.to_markdown().starts_with("| target | HUN | QVH |\n|:--|--:|--:|\n| ENG | 85.6 | — |"));
    }

    #[test]
    fn empty_matrix_is_header_only() {
        let m = AccuracyMatrix::default();
        assert_eq!(m.to_csv(), "target\n");
        assert_eq!(m.to_markdown(), "| target |\n|:--|\n");
        assert_eq!(AccuracyMatrix::from_csv("target\n").unwrap(), m);
    }

    #[test]
    fn error_table_layout() {
        let t = ErrorTable {
            columns: vec![("eus".into(), aggregate(&vec![vec![ErrorLabel::SUB_V]; 2])), ("fra".into(), aggregate(&[vec![ErrorLabel::AFF]]))],
        };
        let csv = t.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "label,EUS,FRA");
        assert_eq!(lines[1], "SUB(V),2,0");
        assert_eq!(lines[2], "SUB(C),0,0");
        assert_eq!(lines[17], "Stem,2,0");
        assert_eq!(lines[18], "Affix,0,1");
        assert_eq!(ErrorTable::from_csv(&csv).unwrap().columns[0].1.counts, t.columns[0].1.counts);
    }
}
