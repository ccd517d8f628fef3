use std::fmt;

use thiserror::Error;

/// Subtag separator inside the tag column.
pub const TAG_SEPARATOR: char = ';';

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CorpusError {
    #[error("line {line}: expected 3 tab-separated fields, found {found}")]
    FieldCount { line: usize, found: usize },
    #[error("line {line}: empty {field}")]
    EmptyField { line: usize, field: &'static str },
    #[error("invalid example: {0}")]
    Invalid(String),
}

/// One `(lemma, tags, form)` triple.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InflectionExample {
    pub lemma: String,
    pub tags: Vec<String>,
    pub form: String,
}

fn has_control(s: &str) -> bool {
    s.contains(['\t', '\n', '\r'])
}

impl InflectionExample {
    /// Builds an example, enforcing the non-empty / no-TAB-or-newline invariants.
    pub fn new<L, T, F>(lemma: L, tags: T, form: F) -> Result<Self, CorpusError>
    where
        L: Into<String>,
        T: IntoIterator,
        T::Item: Into<String>,
        F: Into<String>,
    {
        let ex = Self {
            lemma: lemma.into(),
            tags: tags.into_iter().map(Into::into).collect(),
            form: form.into(),
        };
        ex.validate()?;
        Ok(ex)
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.lemma.is_empty() || self.form.is_empty() || self.tags.is_empty() {
            return Err(CorpusError::Invalid(format!("empty field in {self}")));
        }
        if self.tags.iter().any(|t| t.is_empty() || t.contains(TAG_SEPARATOR)) {
            return Err(CorpusError::Invalid(format!("bad subtag in {self}")));
        }
        if has_control(&self.lemma)
            || has_control(&self.form)
            || self.tags.iter().any(|t| has_control(t))
        {
            return Err(CorpusError::Invalid(format!(
                "tab or newline inside {:?}",
                self.lemma
            )));
        }
        Ok(())
    }

    /// Tags joined with `;`, as they appear in corpus files.
    pub fn tag_string(&self) -> String {
        join_tags(&self.tags)
    }
}

impl fmt::Display for InflectionExample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t{}", self.lemma, self.form, self.tag_string())
    }
}

pub fn join_tags<S: AsRef<str>>(tags: &[S]) -> String {
    let mut out = String::new();
    for (i, t) in tags.iter().enumerate() {
        if i > 0 {
            out.push(TAG_SEPARATOR);
        }
        out.push_str(t.as_ref());
    }
    out
}

pub fn split_tags(s: &str) -> Vec<String> {
    s.split(TAG_SEPARATOR).map(str::to_owned).collect()
}

/// Parses `lemma<TAB>form<TAB>tag(;tag)*` lines. Blank lines are skipped and
/// line numbers in errors are 1-based.
pub fn parse_corpus(text: &str) -> Result<Vec<InflectionExample>, CorpusError> {
    let mut out = Vec::new();
    for (idx, raw) in text.split('\n').enumerate() {
        let line = idx + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        if fields.len() != 3 {
            return Err(CorpusError::FieldCount {
                line,
                found: fields.len(),
            });
        }
        let (lemma, form, tags) = (fields[0], fields[1], fields[2]);
        for (name, value) in [("lemma", lemma), ("form", form), ("tags", tags)] {
            if value.is_empty() {
                return Err(CorpusError::EmptyField { line, field: name });
            }
        }
        let tags = split_tags(tags);
        if tags.iter().any(String::is_empty) {
            return Err(CorpusError::EmptyField {
                line,
                field: "subtag",
            });
        }
        out.push(InflectionExample {
            lemma: lemma.to_owned(),
            tags,
            form: form.to_owned(),
        });
    }
    Ok(out)
}

/// Inverse of [`parse_corpus`]: one line per example, LF terminated.
pub fn serialize_corpus(examples: &[InflectionExample]) -> String {
    let mut out = String::new();
    for ex in examples {
        out.push_str(&ex.to_string());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_eat_ate() {
        let got = parse_corpus("eat\tate\tV;PST").unwrap();
        assert_eq!(got, vec![InflectionExample::new("eat", ["V", "PST"], "ate").unwrap()]);
    }

    #[test]
    fn empty_text_is_empty_corpus() {
        assert!(parse_corpus("").unwrap().is_empty());
        assert!(parse_corpus("\n\n  \n").unwrap().is_empty());
    }

    #[test]
    fn four_subtags_in_order() {
        let got = parse_corpus("dance\tdances\tV;3;SG;PRS\n").unwrap();
        assert_eq!(got[0].tags, ["V", "3", "SG", "PRS"]);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = parse_corpus("eat\tate\tV;PST\n\nwalk\twalked\n").unwrap_err();
        assert_eq!(err, CorpusError::FieldCount { line: 3, found: 2 });
        let err = parse_corpus("a\tb\tc\td").unwrap_err();
        assert_eq!(err, CorpusError::FieldCount { line: 1, found: 4 });
    }

    #[test]
    fn empty_subtag_rejected() {
        assert!(parse_corpus("a\tb\tV;;PST").is_err());
        assert!(parse_corpus("\tb\tV").is_err());
    }

    #[test]
    fn multiword_forms_survive() {
        let got = parse_corpus("doler\tnos doliéramos\tV;SBJV;PST;1;PL").unwrap();
        assert_eq!(got[0].form, "nos doliéramos");
    }

    fn field() -> impl Strategy<Value = String> {
        "[a-zA-Zàáéíóúüñ ]{1,10}".prop_filter("non-blank", |s| !s.trim().is_empty())
    }

    proptest! {
        #[test]
        fn serialize_then_parse_is_identity(
            rows in prop::collection::vec((field(), prop::collection::vec("[A-Z0-9.]{1,4}", 1..5), field()), 0..20)
        ) {
            let examples: Vec<_> = rows
                .into_iter()
                .map(|(l, t, f)| InflectionExample::new(l, t, f).unwrap())
                .collect();
            let text = serialize_corpus(&examples);
            prop_assert_eq!(parse_corpus(&text).unwrap(), examples);
        }
    }
}
