use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use super::corpus::{join_tags, split_tags};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProfileError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("duplicate vowel {0:?}")]
    DuplicateVowel(char),
    #[error("unknown orientation {0:?} (expected suffixing, prefixing or mixed)")]
    UnknownOrientation(String),
    #[error("bad rule template {0:?}")]
    BadTemplate(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Orientation {
    #[default]
    Suffixing,
    Prefixing,
    Mixed,
}

impl FromStr for Orientation {
    type Err = ProfileError;
    fn from_str(s: &str) -> Result<Self, ProfileError> {
        match s {
            "suffixing" => Ok(Self::Suffixing),
            "prefixing" => Ok(Self::Prefixing),
            "mixed" => Ok(Self::Mixed),
            other => Err(ProfileError::UnknownOrientation(other.to_owned())),
        }
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Suffixing => "suffixing",
            Self::Prefixing => "prefixing",
            Self::Mixed => "mixed",
        })
    }
}

/// A literal affixation template such as `STEM+ed` or `esika+STEM`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffixRule {
    pub prefix: String,
    pub suffix: String,
}

impl AffixRule {
    pub fn apply(&self, lemma: &str) -> String {
        format!("{}{}{}", self.prefix, lemma, self.suffix)
    }
}

impl FromStr for AffixRule {
    type Err = ProfileError;
    fn from_str(template: &str) -> Result<Self, ProfileError> {
        let bad = || ProfileError::BadTemplate(template.to_owned());
        let parts: Vec<&str> = template.split('+').map(str::trim).collect();
        let stem_at = parts.iter().position(|p| *p == "STEM").ok_or_else(bad)?;
        if parts.iter().filter(|p| **p == "STEM").count() != 1 || parts.len() > 3 {
            return Err(bad());
        }
        let (prefix, suffix) = match (stem_at, parts.len()) {
            (0, 1) => ("", ""),
            (0, 2) => ("", parts[1]),
            (1, 2) => (parts[0], ""),
            (1, 3) => (parts[0], parts[2]),
            _ => return Err(bad()),
        };
        if (stem_at == 1 && prefix.is_empty()) || (parts.len() > stem_at + 1 && suffix.is_empty()) {
            return Err(bad());
        }
        Ok(Self {
            prefix: prefix.to_owned(),
            suffix: suffix.to_owned(),
        })
    }
}

impl fmt::Display for AffixRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.prefix.is_empty() {
            write!(f, "{}+", self.prefix)?;
        }
        f.write_str("STEM")?;
        if !self.suffix.is_empty() {
            write!(f, "+{}", self.suffix)?;
        }
        Ok(())
    }
}

/// Per-language resources used by the error classifier.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LanguageProfile {
    pub language_code: String,
    /// Accented vowels are separate members.
    pub vowels: BTreeSet<char>,
    pub reflexive_pronouns: BTreeSet<String>,
    pub regular_rules: BTreeMap<Vec<String>, AffixRule>,
    pub orientation: Orientation,
}

impl LanguageProfile {
    /// Vowel membership; uppercase letters fall back to their lowercase form.
    pub fn is_vowel(&self, c: char) -> bool {
        self.vowels.contains(&c) || c.to_lowercase().any(|l| self.vowels.contains(&l))
    }

    pub fn rule_for<S: AsRef<str>>(&self, tags: &[S]) -> Option<&AffixRule> {
        let key: Vec<String> = tags.iter().map(|t| t.as_ref().to_owned()).collect();
        self.regular_rules.get(&key)
    }

    /// Serializes back to the profile file syntax.
    pub fn to_text(&self) -> String {
        let mut out = format!("language = {}\n", self.language_code);
        let vowels: Vec<String> = self.vowels.iter().map(char::to_string).collect();
        out.push_str(&format!("vowels = {}\n", vowels.join(" ")));
        if !self.reflexive_pronouns.is_empty() {
            let refl: Vec<&str> = self.reflexive_pronouns.iter().map(String::as_str).collect();
            out.push_str(&format!("reflexive = {}\n", refl.join(" ")));
        }
        out.push_str(&format!("orientation = {}\n", self.orientation));
        for (tags, rule) in &self.regular_rules {
            out.push_str(&format!("rule {} = {}\n", join_tags(tags), rule));
        }
        out
    }
}

/// Parses a profile file:
///
/// ```text
/// language = spa
/// vowels = a á e é i í o ó u ú ü
/// reflexive = me te se nos os
/// orientation = suffixing
/// rule V;PST = STEM+ed
/// ```
///
/// `#` starts a comment line. Missing sections default to empty sets.
pub fn load_language_profile(text: &str) -> Result<LanguageProfile, ProfileError> {
    let mut profile = LanguageProfile {
        language_code: "und".to_owned(),
        ..Default::default()
    };
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let syntax = |msg: &str| ProfileError::Syntax {
            line,
            msg: msg.to_owned(),
        };
        let (key, value) = trimmed.split_once('=').ok_or_else(|| syntax("expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        if let Some(tags) = key.strip_prefix("rule ") {
            let tags = split_tags(tags.trim());
            if tags.iter().any(String::is_empty) {
                return Err(syntax("empty subtag in rule"));
            }
            let rule: AffixRule = value.parse()?;
            if profile.regular_rules.insert(tags, rule).is_some() {
                return Err(syntax("duplicate rule"));
            }
            continue;
        }
        match key {
            "language" => profile.language_code = value.to_owned(),
            "vowels" => {
                for tok in value.split_whitespace() {
                    let mut it = tok.chars();
                    let c = match (it.next(), it.next()) {
                        (Some(c), None) => c,
                        _ => return Err(syntax("vowel entries must be single characters")),
                    };
                    if !profile.vowels.insert(c) {
                        return Err(ProfileError::DuplicateVowel(c));
                    }
                }
            }
            "reflexive" => {
                profile
                    .reflexive_pronouns
                    .extend(value.split_whitespace().map(str::to_owned));
            }
            "orientation" => profile.orientation = value.parse()?,
            other => return Err(syntax(&format!("unknown key {other:?}"))),
        }
    }
    Ok(profile)
}

/// Profiles shipped with the crate for the three target languages.
pub fn builtin_profile(code: &str) -> Option<LanguageProfile> {
    let text = match code {
        "eng" => include_str!("../../profiles/eng.profile"),
        "spa" => include_str!("../../profiles/spa.profile"),
        "zul" => include_str!("../../profiles/zul.profile"),
        _ => return None,
    };
    Some(load_language_profile(text).expect("builtin profiles parse"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accented_vowels_are_distinct() {
        let p = load_language_profile("vowels = a á e").unwrap();
        assert!(p.vowels.contains(&'a') && p.vowels.contains(&'á'));
        assert_eq!(p.vowels.len(), 3);
        assert!(p.is_vowel('á'));
        assert!(!p.is_vowel('é'));
    }

    #[test]
    fn duplicate_vowel_rejected() {
        assert_eq!(
            load_language_profile("vowels = a e a").unwrap_err(),
            ProfileError::DuplicateVowel('a')
        );
    }

    #[test]
    fn unknown_orientation_rejected() {
        assert!(matches!(
            load_language_profile("orientation = infixing").unwrap_err(),
            ProfileError::UnknownOrientation(_)
        ));
    }

    #[test]
    fn missing_sections_default_empty() {
        let p = load_language_profile("vowels = a\n").unwrap();
        assert!(p.reflexive_pronouns.is_empty());
        assert!(p.regular_rules.is_empty());
        assert_eq!(p.orientation, Orientation::Suffixing);
    }

    #[test]
    fn english_past_rule() {
        let p = load_language_profile("rule V;PST = STEM+ed\n").unwrap();
        assert_eq!(p.rule_for(&["V", "PST"]).unwrap().apply("walk"), "walked");
        assert!(p.rule_for(&["V", "PRS"]).is_none());
    }

    #[test]
    fn templates() {
        let r: AffixRule = "esika+STEM".parse().unwrap();
        assert_eq!(r.apply("Julayi"), "esikaJulayi");
        let r: AffixRule = "ge+STEM+t".parse().unwrap();
        assert_eq!(r.apply("mach"), "gemacht");
        for bad in ["ed", "STEM+STEM", "+STEM", "a+b+STEM+c", "STEM+"] {
            assert!(bad.parse::<AffixRule>().is_err(), "{bad}");
        }
    }

    #[test]
    fn text_round_trip() {
        for code in ["eng", "spa", "zul"] {
            let p = builtin_profile(code).unwrap();
            assert_eq!(p.language_code, code);
            assert_eq!(load_language_profile(&p.to_text()).unwrap(), p);
        }
    }

    #[test]
    fn spanish_profile_has_reflexives() {
        let p = builtin_profile("spa").unwrap();
        for pr in ["me", "te", "se", "nos", "os"] {
            assert!(p.reflexive_pronouns.contains(pr));
        }
        assert!(p.is_vowel('á') && p.is_vowel('a'));
    }
}
