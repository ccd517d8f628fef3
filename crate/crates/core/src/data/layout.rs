use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::corpus::{parse_corpus, InflectionExample};
use super::profile::{builtin_profile, load_language_profile, LanguageProfile};
use crate::Error;

/// Training-set size setting of the shared task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Low,
    Medium,
    High,
}

impl Tier {
    pub const ALL: [Tier; 3] = [Tier::Low, Tier::Medium, Tier::High];

    pub fn as_str(self) -> &'static str {
        match self {
            Tier::Low => "low",
            Tier::Medium => "medium",
            Tier::High => "high",
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Tier {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "low" => Ok(Tier::Low),
            "medium" => Ok(Tier::Medium),
            "high" => Ok(Tier::High),
            _ => Err(format!("unknown tier {s:?} (expected low, medium or high)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train(Tier),
    Dev,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Split::Train(t) => write!(f, "train-{t}"),
            Split::Dev => f.write_str("dev"),
            Split::Test => f.write_str("test"),
        }
    }
}

/// Shared-task file stem for a three-letter language code.
pub fn language_name(code: &str) -> Option<&'static str> {
    Some(match code {
        "eng" => "english",
        "spa" => "spanish",
        "zul" => "zulu",
        "eus" => "basque",
        "fra" => "french",
        "deu" => "german",
        "hun" => "hungarian",
        "ita" => "italian",
        "nav" => "navajo",
        "tur" => "turkish",
        "qvh" => "quechua",
        _ => return None,
    })
}

/// `<dir>/<name>-<split>`, e.g. `data/english-train-low`.
pub fn corpus_path(dir: &Path, code: &str, split: Split) -> PathBuf {
    let name = language_name(code).unwrap_or(code);
    dir.join(format!("{name}-{split}"))
}

/// Finds the corpus file for `code`, accepting either the long language
/// name or the code itself as the file stem.
pub fn find_corpus(dir: &Path, code: &str, split: Split) -> Option<PathBuf> {
    let primary = corpus_path(dir, code, split);
    if primary.is_file() {
        return Some(primary);
    }
    let by_code = dir.join(format!("{code}-{split}"));
    by_code.is_file().then_some(by_code)
}

pub fn read_corpus(path: &Path) -> Result<Vec<InflectionExample>, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&text).map_err(|e| Error::Corpus {
        path: path.to_owned(),
        source: e,
    })
}

pub fn load_split(dir: &Path, code: &str, split: Split) -> Result<Vec<InflectionExample>, Error> {
    let path = find_corpus(dir, code, split).ok_or_else(|| {
        Error::io(
            &corpus_path(dir, code, split),
            io::Error::new(io::ErrorKind::NotFound, "corpus file not found"),
        )
    })?;
    read_corpus(&path)
}

pub fn profile_path(dir: &Path, code: &str) -> PathBuf {
    dir.join("profiles").join(format!("{code}.profile"))
}

/// Loads `<dir>/profiles/<code>.profile`, falling back to the built-in
/// profile for `code`.
pub fn load_profile(dir: &Path, code: &str) -> Result<LanguageProfile, Error> {
    let path = profile_path(dir, code);
    if path.is_file() {
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        return load_language_profile(&text).map_err(|e| Error::Profile {
            path: path.clone(),
            source: e,
        });
    }
    builtin_profile(code).ok_or_else(|| {
        Error::io(
            &path,
            io::Error::new(io::ErrorKind::NotFound, "no profile file and no built-in profile"),
        )
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shared_task_names() {
        let p = corpus_path(Path::new("d"), "eng", Split::Train(Tier::Low));
        assert_eq!(p, Path::new("d/english-train-low"));
        assert_eq!(corpus_path(Path::new("d"), "hun", Split::Dev), Path::new("d/hungarian-dev"));
        assert_eq!(corpus_path(Path::new("d"), "xyz", Split::Test), Path::new("d/xyz-test"));
    }

    #[test]
    fn finds_code_named_files() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("eng-dev"), "a\tb\tV\n").unwrap();
        let got = load_split(dir.path(), "eng", Split::Dev).unwrap();
        assert_eq!(got.len(), 1);
        assert!(load_split(dir.path(), "eng", Split::Test).is_err());
    }

    #[test]
    fn profile_fallback_and_override() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(load_profile(dir.path(), "spa").unwrap().language_code, "spa");
        assert!(load_profile(dir.path(), "hun").is_err());
        fs::create_dir(dir.path().join("profiles")).unwrap();
        fs::write(profile_path(dir.path(), "hun"), "language = hun\nvowels = a á\n").unwrap();
        assert_eq!(load_profile(dir.path(), "hun").unwrap().vowels.len(), 2);
    }
}
