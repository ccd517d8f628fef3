//! Rule-generated corpora in the shared-task file format.
//!
//! These are stand-ins for the real CoNLL–SIGMORPHON 2018 files when those
//! are not available locally. Each language is a small hand-written
//! morphology (vowel harmony, consonant doubling, stem alternations, class
//! prefixes) over randomly generated but phonotactically plausible stems, so
//! that transfer between languages is meaningful at desk scale.

use std::collections::BTreeSet;
use std::fs;
use std::io;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::corpus::{serialize_corpus, InflectionExample};
use super::layout::{corpus_path, Split, Tier};

/// Language codes with a built-in generator.
pub const SYNTHETIC_LANGUAGES: &[&str] = &["eng", "spa", "zul", "hun", "tur", "nav"];

/// Number of examples per split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSizes {
    pub low: usize,
    pub medium: usize,
    pub high: usize,
    pub dev: usize,
    pub test: usize,
}

impl Default for SplitSizes {
    /// The shared-task sizes: 100 / 1000 / 10000 training examples, 1000 dev and test.
    fn default() -> Self {
        Self {
            low: 100,
            medium: 1000,
            high: 10000,
            dev: 1000,
            test: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticSplits {
    pub train_low: Vec<InflectionExample>,
    pub train_medium: Vec<InflectionExample>,
    pub train_high: Vec<InflectionExample>,
    pub dev: Vec<InflectionExample>,
    pub test: Vec<InflectionExample>,
}

impl SyntheticSplits {
    pub fn train(&self, tier: Tier) -> &[InflectionExample] {
        match tier {
            Tier::Low => &self.train_low,
            Tier::Medium => &self.train_medium,
            Tier::High => &self.train_high,
        }
    }
}

type Slot = (&'static str, fn(&Lexeme) -> String);

/// A generated lemma plus the hidden inflection class driving its forms.
#[derive(Debug, Clone)]
struct Lexeme {
    lemma: String,
    /// Bare stem for languages whose citation form carries a prefix.
    stem: String,
    class: usize,
    irregular: bool,
}

fn pick<'a, R: Rng>(rng: &mut R, items: &[&'a str]) -> &'a str {
    items[rng.gen_range(0..items.len())]
}

fn last_char(s: &str) -> char {
    s.chars().last().expect("non-empty")
}

fn ends_with_any(s: &str, ends: &[&str]) -> bool {
    ends.iter().any(|e| s.ends_with(e))
}

fn drop_last(s: &str) -> &str {
    let cut = s.char_indices().last().map_or(0, |(i, _)| i);
    &s[..cut]
}

fn replace_last_vowel(s: &str, vowels: &str, map: impl Fn(char) -> char) -> String {
    let mut chars: Vec<char> = s.chars().collect();
    if let Some(i) = chars.iter().rposition(|c| vowels.contains(*c)) {
        chars[i] = map(chars[i]);
    }
    chars.into_iter().collect()
}

// ---------------------------------------------------------------- English

const ENG_VOWELS: &str = "aeiou";

fn eng_is_cvc(s: &str) -> bool {
    let c: Vec<char> = s.chars().collect();
    let n = c.len();
    n >= 3
        && !ENG_VOWELS.contains(c[n - 3])
        && ENG_VOWELS.contains(c[n - 2])
        && "bdgmnpt".contains(c[n - 1])
        && c.iter().filter(|x| ENG_VOWELS.contains(**x)).count() == 1
}

fn eng_cons_y(s: &str) -> bool {
    let c: Vec<char> = s.chars().collect();
    c.len() >= 2 && c[c.len() - 1] == 'y' && !ENG_VOWELS.contains(c[c.len() - 2])
}

fn eng_third(l: &Lexeme) -> String {
    let s = &l.lemma;
    if eng_cons_y(s) {
        format!("{}ies", drop_last(s))
    } else if ends_with_any(s, &["s", "x", "z", "sh", "ch", "o"]) {
        format!("{s}es")
    } else {
        format!("{s}s")
    }
}

fn eng_ing(l: &Lexeme) -> String {
    let s = &l.lemma;
    if s.ends_with("ie") {
        format!("{}ying", &s[..s.len() - 2])
    } else if s.ends_with('e') && !s.ends_with("ee") {
        format!("{}ing", drop_last(s))
    } else if eng_is_cvc(s) {
        format!("{s}{}ing", last_char(s))
    } else {
        format!("{s}ing")
    }
}

fn eng_regular_past(s: &str) -> String {
    if s.ends_with('e') {
        format!("{s}d")
    } else if eng_cons_y(s) {
        format!("{}ied", drop_last(s))
    } else if eng_is_cvc(s) {
        format!("{s}{}ed", last_char(s))
    } else {
        format!("{s}ed")
    }
}

fn eng_past(l: &Lexeme) -> String {
    if l.irregular {
        replace_last_vowel(&l.lemma, ENG_VOWELS, |v| match v {
            'i' => 'a',
            'e' => 'o',
            'a' => 'u',
            'o' => 'e',
            _ => 'o',
        })
    } else {
        eng_regular_past(&l.lemma)
    }
}

fn eng_participle(l: &Lexeme) -> String {
    if l.irregular {
        let stem = replace_last_vowel(&l.lemma, ENG_VOWELS, |v| match v {
            'i' => 'u',
            'a' => 'a',
            _ => 'o',
        });
        format!("{stem}en")
    } else {
        eng_regular_past(&l.lemma)
    }
}

const ENG_SLOTS: &[Slot] = &[
    ("V;NFIN", |l| l.lemma.clone()),
    ("V;3;SG;PRS", eng_third),
    ("V;V.PTCP;PRS", eng_ing),
    ("V;PST", eng_past),
    ("V;V.PTCP;PST", eng_participle),
];

fn eng_lexeme<R: Rng>(rng: &mut R) -> Lexeme {
    const ONSETS: &[&str] = &[
        "b", "c", "d", "f", "g", "h", "j", "k", "l", "m", "n", "p", "r", "s", "t", "v", "w",
        "bl", "br", "cl", "cr", "dr", "fl", "fr", "gl", "gr", "pl", "pr", "sk", "sl", "sm", "sn",
        "sp", "st", "str", "tr", "th", "sh", "ch", "wh",
    ];
    const NUCLEI: &[&str] = &["a", "e", "i", "o", "u", "ee", "oo", "ea", "ai", "ou"];
    const CODAS: &[&str] = &[
        "b", "d", "g", "k", "l", "m", "n", "p", "r", "s", "t", "x", "ck", "nd", "nt", "rk", "st",
        "ng", "sh", "ch", "ll", "mp",
    ];
    let syllables = if rng.gen_bool(0.7) { 1 } else { 2 };
    let mut s = String::new();
    for i in 0..syllables {
        s.push_str(pick(rng, ONSETS));
        s.push_str(pick(rng, NUCLEI));
        if i + 1 == syllables || rng.gen_bool(0.3) {
            s.push_str(pick(rng, CODAS));
        }
    }
    let r: f64 = rng.gen();
    if r < 0.15 {
        s.push('e');
    } else if r < 0.22 {
        s.push('y');
    }
    let irregular =
        !s.ends_with('e') && !s.ends_with('y') && syllables == 1 && rng.gen_bool(0.12);
    Lexeme {
        stem: s.clone(),
        lemma: s,
        class: 0,
        irregular,
    }
}

// ---------------------------------------------------------------- Spanish

fn spa_stem(l: &Lexeme) -> &str {
    &l.lemma[..l.lemma.len() - 2]
}

/// Present-tense stem with e→ie / o→ue diphthongization in stressed persons.
fn spa_present_stem(l: &Lexeme, person: usize) -> String {
    let stem = spa_stem(l);
    if !l.irregular || matches!(person, 3 | 4) {
        return stem.to_owned();
    }
    let chars: Vec<char> = stem.chars().collect();
    match chars.iter().rposition(|c| "aeiou".contains(*c)) {
        Some(i) if chars[i] == 'e' || chars[i] == 'o' => {
            let diph = if chars[i] == 'e' { "ie" } else { "ue" };
            let head: String = chars[..i].iter().collect();
            let tail: String = chars[i + 1..].iter().collect();
            format!("{head}{diph}{tail}")
        }
        _ => stem.to_owned(),
    }
}

fn spa_form(l: &Lexeme, tense: usize, person: usize) -> String {
    const AR: [[&str; 6]; 3] = [
        ["o", "as", "a", "amos", "áis", "an"],
        ["é", "aste", "ó", "amos", "asteis", "aron"],
        ["ara", "aras", "ara", "áramos", "arais", "aran"],
    ];
    const ER: [[&str; 6]; 3] = [
        ["o", "es", "e", "emos", "éis", "en"],
        ["í", "iste", "ió", "imos", "isteis", "ieron"],
        ["iera", "ieras", "iera", "iéramos", "ierais", "ieran"],
    ];
    const IR: [[&str; 6]; 3] = [
        ["o", "es", "e", "imos", "ís", "en"],
        ["í", "iste", "ió", "imos", "isteis", "ieron"],
        ["iera", "ieras", "iera", "iéramos", "ierais", "ieran"],
    ];
    let table = match l.class {
        0 => &AR,
        1 => &ER,
        _ => &IR,
    };
    let stem = if tense == 0 {
        spa_present_stem(l, person)
    } else {
        spa_stem(l).to_owned()
    };
    format!("{stem}{}", table[tense][person])
}

macro_rules! spa_slots {
    ($($tag:literal => ($t:literal, $p:literal)),* $(,)?) => {
        &[("V;NFIN", |l| l.lemma.clone()), $(($tag, |l| spa_form(l, $t, $p))),*]
    };
}

const SPA_SLOTS: &[Slot] = spa_slots![
    "V;IND;PRS;1;SG" => (0, 0), "V;IND;PRS;2;SG" => (0, 1), "V;IND;PRS;3;SG" => (0, 2),
    "V;IND;PRS;1;PL" => (0, 3), "V;IND;PRS;2;PL" => (0, 4), "V;IND;PRS;3;PL" => (0, 5),
    "V;IND;PST;1;SG;PFV" => (1, 0), "V;IND;PST;2;SG;PFV" => (1, 1), "V;IND;PST;3;SG;PFV" => (1, 2),
    "V;IND;PST;1;PL;PFV" => (1, 3), "V;IND;PST;2;PL;PFV" => (1, 4), "V;IND;PST;3;PL;PFV" => (1, 5),
    "V;SBJV;PST;1;SG" => (2, 0), "V;SBJV;PST;2;SG" => (2, 1), "V;SBJV;PST;3;SG" => (2, 2),
    "V;SBJV;PST;1;PL" => (2, 3), "V;SBJV;PST;2;PL" => (2, 4), "V;SBJV;PST;3;PL" => (2, 5),
];

fn spa_lexeme<R: Rng>(rng: &mut R) -> Lexeme {
    const ONSETS: &[&str] = &[
        "b", "c", "d", "f", "g", "l", "m", "n", "p", "r", "s", "t", "v", "ll", "ch", "br", "tr",
        "pl", "cl", "gr", "", "",
    ];
    const VOWELS: &[&str] = &["a", "e", "i", "o", "u", "e", "o", "a"];
    const CODAS: &[&str] = &["", "", "", "n", "r", "s", "l"];
    let syllables = rng.gen_range(1..=3);
    let mut s = String::new();
    for i in 0..syllables {
        let onset = pick(rng, ONSETS);
        s.push_str(if i > 0 && onset.is_empty() { "d" } else { onset });
        s.push_str(pick(rng, VOWELS));
        if i + 1 < syllables {
            s.push_str(pick(rng, CODAS));
        } else {
            s.push_str(pick(rng, &["", "c", "t", "d", "l", "rr", "nd", "nt", "m"]));
        }
    }
    if !s.chars().last().is_some_and(|c| "bcdfglmnprstv".contains(c)) {
        s.push(['b', 'd', 'l', 'n', 'r', 't'][rng.gen_range(0..6)]);
    }
    let class = match rng.gen_range(0..10) {
        0..=5 => 0,
        6..=7 => 1,
        _ => 2,
    };
    s.push_str(["ar", "er", "ir"][class]);
    Lexeme {
        stem: s.clone(),
        lemma: s,
        class,
        irregular: rng.gen_bool(0.25),
    }
}

// ---------------------------------------------------------------- Zulu

/// Singular and plural prefixes for five noun classes.
const ZUL_CLASSES: [(&str, &str); 5] = [
    ("umu", "aba"),
    ("umu", "imi"),
    ("i", "ama"),
    ("isi", "izi"),
    ("in", "izin"),
];

fn zul_noun(l: &Lexeme, plural: bool) -> String {
    let (sg, pl) = ZUL_CLASSES[l.class];
    let stem = &l.stem;
    let prefix = if plural { pl } else { sg };
    // umu- shortens to um- before polysyllabic stems
    if prefix == "umu" && stem.chars().filter(|c| "aeiou".contains(*c)).count() > 1 {
        format!("um{stem}")
    } else {
        format!("{prefix}{stem}")
    }
}

fn zul_locative(l: &Lexeme, plural: bool) -> String {
    let noun = zul_noun(l, plural);
    let body = &noun[1..];
    let last = last_char(body);
    let head = drop_last(body);
    let suffix = match last {
        'a' | 'e' => format!("{head}eni"),
        'i' => format!("{head}ini"),
        'o' => format!("{head}weni"),
        'u' => format!("{head}wini"),
        _ => format!("{body}ini"),
    };
    format!("e{suffix}")
}

fn zul_instrumental(l: &Lexeme, plural: bool) -> String {
    let noun = zul_noun(l, plural);
    let rest = &noun[1..];
    let joined = match noun.chars().next() {
        Some('u') => "ngo",
        Some('i') => "nge",
        _ => "nga",
    };
    format!("{joined}{rest}")
}

const ZUL_SLOTS: &[Slot] = &[
    ("N;SG", |l| zul_noun(l, false)),
    ("N;PL", |l| zul_noun(l, true)),
    ("N;LOC;SG", |l| zul_locative(l, false)),
    ("N;LOC;PL", |l| zul_locative(l, true)),
    ("N;INS;SG", |l| zul_instrumental(l, false)),
    ("N;INS;PL", |l| zul_instrumental(l, true)),
];

fn zul_lexeme<R: Rng>(rng: &mut R) -> Lexeme {
    const ONSETS: &[&str] = &[
        "b", "d", "f", "g", "h", "k", "l", "m", "n", "p", "s", "t", "v", "w", "y", "z", "hl", "dl",
        "ng", "nk", "mb", "nd", "sh", "th", "kh", "ph",
    ];
    const VOWELS: &[&str] = &["a", "e", "i", "o", "u"];
    let class = rng.gen_range(0..ZUL_CLASSES.len());
    let mut stem = String::new();
    for _ in 0..rng.gen_range(1..=3) {
        stem.push_str(pick(rng, ONSETS));
        stem.push_str(pick(rng, VOWELS));
    }
    let mut lex = Lexeme {
        lemma: String::new(),
        stem,
        class,
        irregular: false,
    };
    lex.lemma = zul_noun(&lex, false);
    lex
}

// ---------------------------------------------------------------- Hungarian

#[derive(Clone, Copy)]
enum Harmony {
    Back,
    Front,
    Rounded,
}

fn hun_harmony(class: usize) -> Harmony {
    match class {
        0 => Harmony::Back,
        1 => Harmony::Front,
        _ => Harmony::Rounded,
    }
}

fn hun_ends_vowel(s: &str) -> bool {
    "aáeéiíoóöőuúüű".contains(last_char(s))
}

/// Final a/e lengthen before a suffix.
fn hun_lengthen(s: &str) -> String {
    match last_char(s) {
        'a' => format!("{}á", drop_last(s)),
        'e' => format!("{}é", drop_last(s)),
        _ => s.to_owned(),
    }
}

fn hun_plural(l: &Lexeme) -> String {
    let s = &l.lemma;
    if hun_ends_vowel(s) {
        format!("{}k", hun_lengthen(s))
    } else {
        let link = match hun_harmony(l.class) {
            Harmony::Back => "ok",
            Harmony::Front => "ek",
            Harmony::Rounded => "ök",
        };
        format!("{s}{link}")
    }
}

/// Attaches a case suffix given as back/front/rounded variants.
fn hun_case(l: &Lexeme, plural: bool, case: usize) -> String {
    const CASES: [[&str; 3]; 11] = [
        ["", "", ""],
        ["ot", "et", "öt"],
        ["nak", "nek", "nek"],
        ["ban", "ben", "ben"],
        ["ból", "ből", "ből"],
        ["ba", "be", "be"],
        ["nál", "nél", "nél"],
        ["hoz", "hez", "höz"],
        ["tól", "től", "től"],
        ["on", "en", "ön"],
        ["val", "vel", "vel"],
    ];
    let h = hun_harmony(l.class) as usize;
    let base = if plural { hun_plural(l) } else { l.lemma.clone() };
    match case {
        0 => base,
        // accusative and superessive lose their link vowel after vowels
        1 | 9 if hun_ends_vowel(&base) => {
            format!("{}{}", hun_lengthen(&base), &CASES[case][h][CASES[case][h].len() - 1..])
        }
        1 if plural => format!("{base}{}", ["at", "et", "et"][h]),
        // instrumental -val/-vel assimilates to a final consonant
        10 if !hun_ends_vowel(&base) => {
            let last = last_char(&base);
            format!("{base}{last}{}", &CASES[case][h][1..])
        }
        _ => format!("{}{}", hun_lengthen(&base), CASES[case][h]),
    }
}

macro_rules! hun_slots {
    ($($tag:literal => ($pl:literal, $c:literal)),* $(,)?) => {
        &[$(($tag, |l| hun_case(l, $pl, $c))),*]
    };
}

const HUN_SLOTS: &[Slot] = hun_slots![
    "N;NOM;SG" => (false, 0), "N;ACC;SG" => (false, 1), "N;DAT;SG" => (false, 2),
    "N;IN+ESS;SG" => (false, 3), "N;IN+ABL;SG" => (false, 4), "N;IN+ALL;SG" => (false, 5),
    "N;AT+ESS;SG" => (false, 6), "N;AT+ALL;SG" => (false, 7), "N;AT+ABL;SG" => (false, 8),
    "N;ON+ESS;SG" => (false, 9), "N;INS;SG" => (false, 10),
    "N;NOM;PL" => (true, 0), "N;ACC;PL" => (true, 1), "N;DAT;PL" => (true, 2),
    "N;IN+ESS;PL" => (true, 3), "N;IN+ABL;PL" => (true, 4), "N;IN+ALL;PL" => (true, 5),
    "N;AT+ESS;PL" => (true, 6), "N;AT+ALL;PL" => (true, 7), "N;AT+ABL;PL" => (true, 8),
    "N;ON+ESS;PL" => (true, 9), "N;INS;PL" => (true, 10),
];

fn hun_lexeme<R: Rng>(rng: &mut R) -> Lexeme {
    const ONSETS: &[&str] = &[
        "b", "c", "d", "f", "g", "h", "j", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "sz",
        "cs", "gy", "ny", "ty", "zs",
    ];
    const CODAS: &[&str] = &["", "", "l", "n", "r", "s", "t", "k", "m", "z", "sz", "g", "d"];
    let class = rng.gen_range(0..3);
    let vowels: &[&str] = match class {
        0 => &["a", "á", "o", "ó", "u", "ú", "a", "o"],
        1 => &["e", "é", "i", "í", "e"],
        _ => &["ö", "ő", "ü", "ű", "ö"],
    };
    let mut s = String::new();
    let n = rng.gen_range(1..=3);
    for i in 0..n {
        s.push_str(pick(rng, ONSETS));
        s.push_str(pick(rng, vowels));
        if i + 1 == n || rng.gen_bool(0.3) {
            s.push_str(pick(rng, CODAS));
        }
    }
    Lexeme {
        stem: s.clone(),
        lemma: s,
        class,
        irregular: false,
    }
}

// ---------------------------------------------------------------- Turkish

fn tur_back(class: usize) -> bool {
    class < 2
}

fn tur_high_vowel(class: usize) -> &'static str {
    ["ı", "u", "i", "ü"][class]
}

fn tur_low_vowel(class: usize) -> &'static str {
    if tur_back(class) {
        "a"
    } else {
        "e"
    }
}

fn tur_ends_vowel(s: &str) -> bool {
    "aeıioöuü".contains(last_char(s))
}

fn tur_voiceless(s: &str) -> bool {
    "çfhkpsşt".contains(last_char(s))
}

fn tur_case(l: &Lexeme, plural: bool, case: usize) -> String {
    let (base, class) = if plural {
        // the plural suffix fixes harmony to its own vowel
        let low = tur_low_vowel(l.class);
        (
            format!("{}l{low}r", l.lemma),
            if tur_back(l.class) { 0 } else { 2 },
        )
    } else {
        (l.lemma.clone(), l.class)
    };
    let high = tur_high_vowel(class);
    let low = tur_low_vowel(class);
    let vowel_final = tur_ends_vowel(&base);
    let d = if tur_voiceless(&base) { "t" } else { "d" };
    match case {
        0 => base,
        1 => format!("{base}{}{high}", if vowel_final { "y" } else { "" }),
        2 => format!("{base}{}{low}", if vowel_final { "y" } else { "" }),
        3 => format!("{base}{d}{low}"),
        4 => format!("{base}{d}{low}n"),
        _ => format!("{base}{}{high}n", if vowel_final { "n" } else { "" }),
    }
}

macro_rules! tur_slots {
    ($($tag:literal => ($pl:literal, $c:literal)),* $(,)?) => {
        &[$(($tag, |l| tur_case(l, $pl, $c))),*]
    };
}

const TUR_SLOTS: &[Slot] = tur_slots![
    "N;NOM;SG" => (false, 0), "N;ACC;SG" => (false, 1), "N;DAT;SG" => (false, 2),
    "N;LOC;SG" => (false, 3), "N;ABL;SG" => (false, 4), "N;GEN;SG" => (false, 5),
    "N;NOM;PL" => (true, 0), "N;ACC;PL" => (true, 1), "N;DAT;PL" => (true, 2),
    "N;LOC;PL" => (true, 3), "N;ABL;PL" => (true, 4), "N;GEN;PL" => (true, 5),
];

fn tur_lexeme<R: Rng>(rng: &mut R) -> Lexeme {
    const ONSETS: &[&str] = &[
        "b", "c", "ç", "d", "f", "g", "h", "k", "l", "m", "n", "p", "r", "s", "ş", "t", "v", "y",
        "z",
    ];
    const CODAS: &[&str] = &["", "", "k", "l", "m", "n", "r", "s", "t", "z", "p", "ç", "ş"];
    // harmony class of the last vowel: a/ı, o/u, e/i, ö/ü
    let class = rng.gen_range(0..4);
    let vowels: &[&str] = match class {
        0 => &["a", "ı"],
        1 => &["o", "u"],
        2 => &["e", "i"],
        _ => &["ö", "ü"],
    };
    let mut s = String::new();
    let n = rng.gen_range(1..=3);
    for i in 0..n {
        s.push_str(pick(rng, ONSETS));
        s.push_str(pick(rng, vowels));
        if i + 1 == n || rng.gen_bool(0.3) {
            s.push_str(pick(rng, CODAS));
        }
    }
    Lexeme {
        stem: s.clone(),
        lemma: s,
        class,
        irregular: false,
    }
}

// ---------------------------------------------------------------- Navajo-like prefixing verbs

fn nav_form(l: &Lexeme, perfective: bool, person: usize) -> String {
    const IMPF: [&str; 6] = ["yish", "ni", "yi", "yii", "woh", "dayi"];
    const PFV: [&str; 6] = ["sé", "síní", "yí", "siid", "soo", "dayí"];
    let prefix = if perfective { PFV[person] } else { IMPF[person] };
    let stem = if perfective {
        // perfective stems take a final glottal stop
        format!("{}'", l.lemma)
    } else {
        l.lemma.clone()
    };
    format!("{prefix}{stem}")
}

macro_rules! nav_slots {
    ($($tag:literal => ($p:literal, $n:literal)),* $(,)?) => {
        &[$(($tag, |l| nav_form(l, $p, $n))),*]
    };
}

const NAV_SLOTS: &[Slot] = nav_slots![
    "V;IPFV;1;SG" => (false, 0), "V;IPFV;2;SG" => (false, 1), "V;IPFV;3;SG" => (false, 2),
    "V;IPFV;1;DU" => (false, 3), "V;IPFV;2;DU" => (false, 4), "V;IPFV;3;PL" => (false, 5),
    "V;PFV;1;SG" => (true, 0), "V;PFV;2;SG" => (true, 1), "V;PFV;3;SG" => (true, 2),
    "V;PFV;1;DU" => (true, 3), "V;PFV;2;DU" => (true, 4), "V;PFV;3;PL" => (true, 5),
];

fn nav_lexeme<R: Rng>(rng: &mut R) -> Lexeme {
    const ONSETS: &[&str] = &[
        "b", "d", "g", "h", "j", "k", "l", "ł", "m", "n", "s", "t", "z", "ch", "dl", "dz", "gh",
        "sh", "tł", "ts", "zh",
    ];
    const VOWELS: &[&str] = &["a", "e", "i", "o", "á", "é", "í", "ó", "aa", "ee", "ii", "oo"];
    const CODAS: &[&str] = &["", "d", "h", "l", "ł", "s", "sh", "z", "'"];
    let mut s = String::new();
    s.push_str(pick(rng, ONSETS));
    s.push_str(pick(rng, VOWELS));
    s.push_str(pick(rng, CODAS));
    if rng.gen_bool(0.3) {
        s.push_str(pick(rng, ONSETS));
        s.push_str(pick(rng, VOWELS));
    }
    let s = s.trim_end_matches('\'').to_owned();
    Lexeme {
        stem: s.clone(),
        lemma: s,
        class: 0,
        irregular: false,
    }
}

// ---------------------------------------------------------------- driver

struct Grammar {
    slots: &'static [Slot],
    lexeme: fn(&mut ChaCha8Rng) -> Lexeme,
}

fn grammar(code: &str) -> Option<Grammar> {
    let (slots, lexeme): (&'static [Slot], fn(&mut ChaCha8Rng) -> Lexeme) = match code {
        "eng" => (ENG_SLOTS, eng_lexeme),
        "spa" => (SPA_SLOTS, spa_lexeme),
        "zul" => (ZUL_SLOTS, zul_lexeme),
        "hun" => (HUN_SLOTS, hun_lexeme),
        "tur" => (TUR_SLOTS, tur_lexeme),
        "nav" => (NAV_SLOTS, nav_lexeme),
        _ => return None,
    };
    Some(Grammar { slots, lexeme })
}

fn language_seed(code: &str, seed: u64) -> u64 {
    code.bytes()
        .fold(seed ^ 0x9e37_79b9_7f4a_7c15, |h, b| {
            (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
        })
}

/// Generates `n` distinct examples for `code`, or `None` for an unsupported language.
pub fn synthetic_corpus(code: &str, n: usize, seed: u64) -> Option<Vec<InflectionExample>> {
    let g = grammar(code)?;
    let mut rng = ChaCha8Rng::seed_from_u64(language_seed(code, seed));
    let mut lemmas = BTreeSet::new();
    let mut universe = Vec::new();
    // every lexeme contributes all of its slots; sample until there is enough
    let mut attempts = 0usize;
    while universe.len() < n + n / 2 + g.slots.len() {
        attempts += 1;
        if attempts > 50 * (n + 100) {
            break;
        }
        let lex = (g.lexeme)(&mut rng);
        if !lemmas.insert(lex.lemma.clone()) {
            continue;
        }
        for (tags, inflect) in g.slots {
            let ex = InflectionExample::new(lex.lemma.clone(), tags.split(';'), inflect(&lex))
                .expect("generated examples are well formed");
            universe.push(ex);
        }
    }
    universe.shuffle(&mut rng);
    universe.truncate(n);
    Some(universe)
}

/// Generates nested training tiers (low ⊂ medium ⊂ high) and disjoint dev/test sets.
pub fn synthetic_splits(code: &str, seed: u64, sizes: SplitSizes) -> Option<SyntheticSplits> {
    let high = sizes.high.max(sizes.medium).max(sizes.low);
    let all = synthetic_corpus(code, high + sizes.dev + sizes.test, seed)?;
    let dev = all[..sizes.dev].to_vec();
    let test = all[sizes.dev..sizes.dev + sizes.test].to_vec();
    let train = &all[sizes.dev + sizes.test..];
    Some(SyntheticSplits {
        train_low: train[..sizes.low].to_vec(),
        train_medium: train[..sizes.medium].to_vec(),
        train_high: train[..high].to_vec(),
        dev,
        test,
    })
}

/// Writes `<name>-train-{low,medium,high}`, `<name>-dev` and `<name>-test`
/// for `code` into `dir`, using the shared-task file names.
pub fn write_synthetic_dataset(
    dir: &Path,
    code: &str,
    seed: u64,
    sizes: SplitSizes,
) -> io::Result<()> {
    let splits = synthetic_splits(code, seed, sizes).ok_or_else(|| {
        io::Error::new(
            io::ErrorKind::InvalidInput,
            format!("no synthetic grammar for {code:?}"),
        )
    })?;
    fs::create_dir_all(dir)?;
    for tier in Tier::ALL {
        fs::write(
            corpus_path(dir, code, Split::Train(tier)),
            serialize_corpus(splits.train(tier)),
        )?;
    }
    fs::write(corpus_path(dir, code, Split::Dev), serialize_corpus(&splits.dev))?;
    fs::write(corpus_path(dir, code, Split::Test), serialize_corpus(&splits.test))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex(lemma: &str, class: usize, irregular: bool) -> Lexeme {
        Lexeme {
            lemma: lemma.into(),
            stem: lemma.into(),
            class,
            irregular,
        }
    }

    #[test]
    fn english_spelling_rules() {
        assert_eq!(eng_past(&lex("walk", 0, false)), "walked");
        assert_eq!(eng_past(&lex("dance", 0, false)), "danced");
        assert_eq!(eng_ing(&lex("dance", 0, false)), "dancing");
        assert_eq!(eng_third(&lex("dance", 0, false)), "dances");
        assert_eq!(eng_past(&lex("stop", 0, false)), "stopped");
        assert_eq!(eng_third(&lex("cry", 0, false)), "cries");
        assert_eq!(eng_past(&lex("sing", 0, true)), "sang");
        assert_eq!(eng_participle(&lex("sing", 0, true)), "sungen");
    }

    #[test]
    fn hungarian_harmony() {
        assert_eq!(hun_case(&lex("ház", 0, false), false, 3), "házban");
        assert_eq!(hun_case(&lex("kert", 1, false), false, 3), "kertben");
        assert_eq!(hun_case(&lex("ház", 0, false), true, 0), "házok");
        assert_eq!(hun_case(&lex("alma", 0, false), false, 1), "almát");
        assert_eq!(hun_case(&lex("ház", 0, false), false, 10), "házzal");
        assert_eq!(hun_case(&lex("tökör", 2, false), false, 7), "tökörhöz");
    }

    #[test]
    fn spanish_diphthongization() {
        let l = lex("perder", 1, true);
        assert_eq!(spa_form(&l, 0, 0), "pierdo");
        assert_eq!(spa_form(&l, 0, 3), "perdemos");
        assert_eq!(spa_form(&lex("cantar", 0, false), 1, 2), "cantó");
    }

    #[test]
    fn zulu_prefixes() {
        let l = Lexeme {
            stem: "hlalo".into(),
            ..lex("isihlalo", 3, false)
        };
        assert_eq!(zul_noun(&l, true), "izihlalo");
        assert_eq!(zul_locative(&l, false), "esihlalweni");
        assert_eq!(zul_instrumental(&l, false), "ngesihlalo");
    }

    #[test]
    fn deterministic_and_distinct() {
        for code in SYNTHETIC_LANGUAGES {
            let a = synthetic_corpus(code, 300, 7).unwrap();
            assert_eq!(a, synthetic_corpus(code, 300, 7).unwrap());
            assert_eq!(a.len(), 300, "{code}");
            let unique: BTreeSet<_> = a.iter().collect();
            assert_eq!(unique.len(), a.len());
            for ex in &a {
                ex.validate().unwrap();
            }
        }
        assert!(synthetic_corpus("xxx", 10, 0).is_none());
    }

    #[test]
    fn splits_are_nested_and_disjoint() {
        let sizes = SplitSizes {
            low: 10,
            medium: 50,
            high: 200,
            dev: 40,
            test: 40,
        };
        let s = synthetic_splits("hun", 3, sizes).unwrap();
        assert_eq!(&s.train_medium[..10], &s.train_low[..]);
        assert_eq!(&s.train_high[..50], &s.train_medium[..]);
        let train: BTreeSet<_> = s.train_high.iter().collect();
        assert!(s.dev.iter().chain(&s.test).all(|e| !train.contains(e)));
    }
}
