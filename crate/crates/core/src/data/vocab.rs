use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::corpus::InflectionExample;

pub const PAD: usize = 0;
pub const BOS: usize = 1;
pub const EOS: usize = 2;
pub const UNK: usize = 3;
/// Number of reserved indices at the bottom of both index maps.
pub const NUM_SPECIALS: usize = 4;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VocabError {
    #[error("character {0:?} is not in the vocabulary")]
    UnknownChar(char),
    #[error("tag {0:?} is not in the vocabulary")]
    UnknownTag(String),
    #[error("index {0} is outside the vocabulary")]
    BadIndex(usize),
    #[error("duplicate vocabulary symbol {0:?}")]
    Duplicate(String),
}

/// Whether unseen symbols map to [`UNK`] or are rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnkPolicy {
    Reject,
    Substitute,
}

/// Dense index maps for characters and subtags. Indices `0..NUM_SPECIALS`
/// are PAD, BOS, EOS and UNK in both maps; real symbols follow in code point
/// (resp. lexicographic) order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    chars: Vec<char>,
    tags: Vec<String>,
    char_to_index: BTreeMap<char, usize>,
    tag_to_index: BTreeMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    chars: Vec<char>,
    tags: Vec<String>,
}

impl TryFrom<VocabularyRepr> for Vocabulary {
    type Error = VocabError;
    fn try_from(r: VocabularyRepr) -> Result<Self, VocabError> {
        Vocabulary::from_symbols(r.chars, r.tags)
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr {
            chars: v.chars,
            tags: v.tags,
        }
    }
}

/// An example rewritten as index sequences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedExample {
    /// BOS, lemma characters, EOS.
    pub lemma_ids: Vec<usize>,
    pub tag_ids: Vec<usize>,
    /// BOS, form characters, EOS.
    pub form_ids: Vec<usize>,
}

impl Vocabulary {
    /// Builds index maps from explicit symbol lists (specials excluded).
    /// Order is taken as given.
    pub fn from_symbols(chars: Vec<char>, tags: Vec<String>) -> Result<Self, VocabError> {
        let mut char_to_index = BTreeMap::new();
        for (i, &c) in chars.iter().enumerate() {
            if char_to_index.insert(c, i + NUM_SPECIALS).is_some() {
                return Err(VocabError::Duplicate(c.to_string()));
            }
        }
        let mut tag_to_index = BTreeMap::new();
        for (i, t) in tags.iter().enumerate() {
            if tag_to_index.insert(t.clone(), i + NUM_SPECIALS).is_some() {
                return Err(VocabError::Duplicate(t.clone()));
            }
        }
        Ok(Self {
            chars,
            tags,
            char_to_index,
            tag_to_index,
        })
    }

    pub fn char_size(&self) -> usize {
        NUM_SPECIALS + self.chars.len()
    }

    pub fn tag_size(&self) -> usize {
        NUM_SPECIALS + self.tags.len()
    }

    pub fn char_index(&self, c: char) -> Option<usize> {
        self.char_to_index.get(&c).copied()
    }

    pub fn tag_index(&self, t: &str) -> Option<usize> {
        self.tag_to_index.get(t).copied()
    }

    /// The character at `idx`, or `None` for specials and out-of-range indices.
    pub fn char_at(&self, idx: usize) -> Option<char> {
        idx.checked_sub(NUM_SPECIALS).and_then(|i| self.chars.get(i)).copied()
    }

    pub fn tag_at(&self, idx: usize) -> Option<&str> {
        idx.checked_sub(NUM_SPECIALS)
            .and_then(|i| self.tags.get(i))
            .map(String::as_str)
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    /// True when every character and subtag of `ex` has an index.
    pub fn covers(&self, ex: &InflectionExample) -> bool {
        self.missing_symbols(std::slice::from_ref(ex)).is_empty()
    }

    /// Symbols (characters or subtags, rendered as strings) absent from the maps.
    pub fn missing_symbols(&self, corpus: &[InflectionExample]) -> BTreeSet<String> {
        let mut missing = BTreeSet::new();
        for ex in corpus {
            for c in ex.lemma.chars().chain(ex.form.chars()) {
                if !self.char_to_index.contains_key(&c) {
                    missing.insert(c.to_string());
                }
            }
            for t in &ex.tags {
                if !self.tag_to_index.contains_key(t) {
                    missing.insert(t.clone());
                }
            }
        }
        missing
    }

    pub fn encode_chars(&self, s: &str, unk: UnkPolicy) -> Result<Vec<usize>, VocabError> {
        let mut ids = Vec::with_capacity(s.chars().count() + 2);
        ids.push(BOS);
        for c in s.chars() {
            ids.push(match (self.char_index(c), unk) {
                (Some(i), _) => i,
                (None, UnkPolicy::Substitute) => UNK,
                (None, UnkPolicy::Reject) => return Err(VocabError::UnknownChar(c)),
            });
        }
        ids.push(EOS);
        Ok(ids)
    }

    pub fn encode_tags<S: AsRef<str>>(
        &self,
        tags: &[S],
        unk: UnkPolicy,
    ) -> Result<Vec<usize>, VocabError> {
        tags.iter()
            .map(|t| {
                let t = t.as_ref();
                match (self.tag_index(t), unk) {
                    (Some(i), _) => Ok(i),
                    (None, UnkPolicy::Substitute) => Ok(UNK),
                    (None, UnkPolicy::Reject) => Err(VocabError::UnknownTag(t.to_owned())),
                }
            })
            .collect()
    }

    /// Decodes a character index sequence, dropping PAD/BOS/EOS. UNK
    /// becomes U+FFFD.
    pub fn decode_chars(&self, ids: &[usize]) -> Result<String, VocabError> {
        let mut out = String::new();
        for &i in ids {
            match i {
                PAD | BOS | EOS => {}
                UNK => out.push(char::REPLACEMENT_CHARACTER),
                _ => out.push(self.char_at(i).ok_or(VocabError::BadIndex(i))?),
            }
        }
        Ok(out)
    }

    pub fn decode_tags(&self, ids: &[usize]) -> Result<Vec<String>, VocabError> {
        ids.iter()
            .map(|&i| {
                self.tag_at(i)
                    .map(str::to_owned)
                    .ok_or(VocabError::BadIndex(i))
            })
            .collect()
    }
}

/// Builds one joint vocabulary over every corpus. Symbols are sorted, so
/// the result does not depend on corpus order or repetition.
pub fn build_vocabulary(corpora: &[&[InflectionExample]]) -> Vocabulary {
    let mut chars = BTreeSet::new();
    let mut tags = BTreeSet::new();
    for corpus in corpora {
        for ex in corpus.iter() {
            chars.extend(ex.lemma.chars());
            chars.extend(ex.form.chars());
            tags.extend(ex.tags.iter().cloned());
        }
    }
    Vocabulary::from_symbols(chars.into_iter().collect(), tags.into_iter().collect())
        .expect("sets have no duplicates")
}

pub fn encode_example(
    ex: &InflectionExample,
    vocab: &Vocabulary,
    unk: UnkPolicy,
) -> Result<EncodedExample, VocabError> {
    Ok(EncodedExample {
        lemma_ids: vocab.encode_chars(&ex.lemma, unk)?,
        tag_ids: vocab.encode_tags(&ex.tags, unk)?,
        form_ids: vocab.encode_chars(&ex.form, unk)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ex(l: &str, f: &str, t: &str) -> InflectionExample {
        InflectionExample::new(l, t.split(';'), f).unwrap()
    }

    #[test]
    fn union_of_alphabets() {
        let a = vec![ex("ab", "ba", "X")];
        let b = vec![ex("bc", "cb", "Y")];
        let v = build_vocabulary(&[&a, &b]);
        assert_eq!(v.chars(), ['a', 'b', 'c']);
        assert_eq!(v.char_size(), NUM_SPECIALS + 3);
        assert_eq!(v.tags(), ["X", "Y"]);
    }

    #[test]
    fn idempotent_and_order_independent() {
        let a = vec![ex("dance", "dancing", "V;V.PTCP;PRS")];
        let b = vec![ex("ház", "házban", "N;IN+ESS;SG")];
        let once = build_vocabulary(&[&a]);
        assert_eq!(build_vocabulary(&[&a, &a]), once);
        assert_eq!(build_vocabulary(&[&a, &b]), build_vocabulary(&[&b, &a]));
        // determinism: rebuilding yields identical assignments
        assert_eq!(build_vocabulary(&[&a, &b]), build_vocabulary(&[&a, &b]));
    }

    #[test]
    fn empty_input_gives_specials_only() {
        let v = build_vocabulary(&[]);
        assert_eq!(v.char_size(), NUM_SPECIALS);
        assert_eq!(v.tag_size(), NUM_SPECIALS);
    }

    #[test]
    fn framing() {
        let v = Vocabulary::from_symbols(vec!['x', 'a', 'b'], vec!["V".into()]).unwrap();
        // a -> 5, b -> 6 with this symbol order
        let e = encode_example(&ex("ab", "ba", "V"), &v, UnkPolicy::Reject).unwrap();
        assert_eq!(e.lemma_ids, vec![BOS, 5, 6, EOS]);
        assert_eq!(e.form_ids, vec![BOS, 6, 5, EOS]);
        assert_eq!(e.tag_ids, vec![4]);
    }

    #[test]
    fn unknown_symbols() {
        let v = build_vocabulary(&[&[ex("ab", "ab", "V")]]);
        let e = encode_example(&ex("aü", "a", "V"), &v, UnkPolicy::Substitute).unwrap();
        assert_eq!(e.lemma_ids[2], UNK);
        let err = encode_example(&ex("aü", "a", "V"), &v, UnkPolicy::Reject).unwrap_err();
        assert_eq!(err, VocabError::UnknownChar('ü'));
        let err = encode_example(&ex("a", "a", "N"), &v, UnkPolicy::Reject).unwrap_err();
        assert_eq!(err, VocabError::UnknownTag("N".into()));
    }

    #[test]
    fn serde_round_trip() {
        let v = build_vocabulary(&[&[ex("añb", "b", "V;PST")]]);
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(serde_json::from_str::<Vocabulary>(&json).unwrap(), v);
    }

    proptest! {
        #[test]
        fn decode_encode_round_trip(words in prop::collection::vec("[a-zéáñ]{1,12}", 1..10)) {
            let corpus: Vec<_> = words.iter().map(|w| ex(w, w, "V")).collect();
            let v = build_vocabulary(&[&corpus]);
            for w in &words {
                let ids = v.encode_chars(w, UnkPolicy::Reject).unwrap();
                prop_assert!(ids.iter().all(|&i| i < v.char_size()));
                prop_assert_eq!(&v.decode_chars(&ids).unwrap(), w);
            }
            for (i, &c) in v.chars().iter().enumerate() {
                prop_assert_eq!(v.char_index(c), Some(i + NUM_SPECIALS));
            }
        }
    }
}
