//! Corpus parsing, vocabularies, language profiles and on-disk layout.

pub mod corpus;
pub mod layout;
pub mod profile;
pub mod synthetic;
pub mod vocab;

pub use corpus::{parse_corpus, serialize_corpus, InflectionExample};
pub use layout::{Split, Tier};
pub use profile::{load_language_profile, AffixRule, LanguageProfile, Orientation};
pub use vocab::{build_vocabulary, encode_example, EncodedExample, UnkPolicy, Vocabulary};
