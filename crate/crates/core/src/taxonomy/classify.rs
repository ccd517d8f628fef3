use std::ops::Range;

use super::align::{align, segment, EditOp};
use super::{CharClass, ErrorLabel};
use crate::data::LanguageProfile;

/// The form a regular rule of the profile gives for these tags.
pub fn regular_form<S: AsRef<str>>(lemma: &str, tags: &[S], profile: &LanguageProfile) -> Option<String> {
    profile.rule_for(tags).map(|rule| rule.apply(lemma))
}

/// Rules that cannot fire for this profile because it lacks the data they
/// need.
pub fn skipped_rules(profile: &LanguageProfile) -> Vec<String> {
    let mut out = Vec::new();
    if profile.reflexive_pronouns.is_empty() {
        out.push("REFL/REFL_LOC: profile lists no reflexive pronouns".to_owned());
    }
    if profile.regular_rules.is_empty() {
        out.push("OVERREG: profile has no regular rules".to_owned());
    }
    if profile.vowels.is_empty() {
        out.push("vowel classes: profile lists no vowels, every character counts as a consonant".to_owned());
    }
    out
}

fn class(profile: &LanguageProfile, c: char) -> CharClass {
    if profile.is_vowel(c) {
        CharClass::Vowel
    } else {
        CharClass::Consonant
    }
}

/// Error labels of one prediction; empty iff `predicted == gold`.
pub fn classify<S: AsRef<str>>(
    lemma: &str,
    gold: &str,
    predicted: &str,
    tags: &[S],
    profile: &LanguageProfile,
) -> Vec<ErrorLabel> {
    if predicted == gold {
        return Vec::new();
    }
    let mut labels = Vec::new();
    let (gold, predicted) = reflexives(gold, predicted, profile, &mut labels);
    if gold != predicted {
        let regular = regular_form(lemma, tags, profile);
        if regular.as_deref() == Some(predicted.as_str()) {
            labels.push(ErrorLabel::OVERREG);
        } else if !gold.is_empty() && !predicted.is_empty() {
            labels.extend(stem_and_affix(lemma, &gold, &predicted, profile));
        }
    }
    if labels.is_empty() {
        labels.push(ErrorLabel::UNCLASSIFIED);
    }
    labels
}

/// Emits REFL or REFL_LOC and returns both forms with pronoun tokens removed.
fn reflexives(gold: &str, predicted: &str, profile: &LanguageProfile, labels: &mut Vec<ErrorLabel>) -> (String, String) {
    let pronouns = &profile.reflexive_pronouns;
    if pronouns.is_empty() {
        return (gold.to_owned(), predicted.to_owned());
    }
    let split = |s: &str| -> (Vec<(usize, String)>, String) {
        let tokens: Vec<&str> = s.split(' ').filter(|t| !t.is_empty()).collect();
        let found = tokens
            .iter()
            .enumerate()
            .filter(|(_, t)| pronouns.contains(**t))
            .map(|(i, t)| (i, (*t).to_owned()))
            .collect();
        let rest: Vec<&str> = tokens.into_iter().filter(|t| !pronouns.contains(*t)).collect();
        (found, rest.join(" "))
    };
    let (gold_pron, gold_rest) = split(gold);
    let (pred_pron, pred_rest) = split(predicted);
    // pronoun material glued onto a word of `x` but not of `y`
    let attached = |x: &str, y: &str| pronouns.iter().any(|p| x.matches(p.as_str()).count() > y.matches(p.as_str()).count());
    if gold_pron != pred_pron {
        if !gold_pron.is_empty() {
            if !pred_pron.is_empty() || attached(&pred_rest, &gold_rest) {
                labels.push(ErrorLabel::REFL_LOC);
            } else {
                labels.push(ErrorLabel::REFL);
            }
        } else if attached(&gold_rest, &pred_rest) {
            labels.push(ErrorLabel::REFL_LOC);
        }
    }
    (gold_rest, pred_rest)
}

/// How the lemma maps onto each gold character.
struct LemmaProjection {
    /// Lemma character aligned to each gold position (`None`: gold material
    /// not taken from the lemma).
    at: Vec<Option<char>>,
    /// Lemma characters absent from gold, keyed by the gold position they
    /// precede.
    dropped: Vec<Vec<char>>,
    /// Gold positions matched to the lemma outside the common substring.
    matched: Vec<usize>,
}

/// Aligns the lemma to gold around their longest common substring, so the
/// shared stem is always matched and only the flanks are aligned freely.
fn project_lemma(lemma: &[char], gold: &[char], stem: &Range<usize>) -> LemmaProjection {
    let mut p = LemmaProjection {
        at: vec![None; gold.len()],
        dropped: vec![Vec::new(); gold.len() + 1],
        matched: Vec::new(),
    };
    let gold_stem: String = gold[stem.clone()].iter().collect();
    let lemma_str: String = lemma.iter().collect();
    let Some(byte_at) = lemma_str.find(&gold_stem) else {
        // nothing shared: the whole gold is the stem and nothing is anchored
        flank(&mut p, lemma, gold, 0);
        return p;
    };
    let l0 = lemma_str[..byte_at].chars().count();
    let l1 = l0 + stem.len();
    flank(&mut p, &lemma[..l0], &gold[..stem.start], 0);
    for (k, g) in stem.clone().enumerate() {
        p.at[g] = Some(lemma[l0 + k]);
    }
    flank(&mut p, &lemma[l1..], &gold[stem.end..], stem.end);
    p
}

fn flank(p: &mut LemmaProjection, lemma: &[char], gold: &[char], offset: usize) {
    let lemma: String = lemma.iter().collect();
    let gold: String = gold.iter().collect();
    let mut g = offset;
    for op in align(&lemma, &gold).ops {
        match op {
            EditOp::Match(c) => {
                p.at[g] = Some(c);
                p.matched.push(g);
                g += 1;
            }
            EditOp::Substitute(l, _) => {
                p.at[g] = Some(l);
                g += 1;
            }
            EditOp::Delete(l) => p.dropped[g].push(l),
            EditOp::Insert(_) => g += 1,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Region {
    Prefix,
    Stem,
    Suffix,
}

fn stem_and_affix(lemma: &str, gold: &str, predicted: &str, profile: &LanguageProfile) -> Vec<ErrorLabel> {
    let l: Vec<char> = lemma.chars().collect();
    let g: Vec<char> = gold.chars().collect();
    let common = segment(lemma, gold).stem;
    let mut lp = project_lemma(&l, &g, &common);
    // lemma material matched outside the common substring (e.g. around an
    // internal vowel change) belongs to the stem as well
    let start = lp.matched.iter().copied().chain([common.start]).min().unwrap_or(common.start);
    let end = lp.matched.iter().map(|m| m + 1).chain([common.end]).max().unwrap_or(common.end);
    let stem = start..end;

    let region_of = |gi: usize, insert: bool| {
        if insert {
            if gi <= stem.start {
                Region::Prefix
            } else if gi >= stem.end {
                Region::Suffix
            } else {
                Region::Stem
            }
        } else if gi < stem.start {
            Region::Prefix
        } else if gi < stem.end {
            Region::Stem
        } else {
            Region::Suffix
        }
    };

    let mut pred_parts = [String::new(), String::new(), String::new()];
    let mut events = Vec::new();
    let mut gi = 0;
    for op in align(gold, predicted).ops {
        let insert = matches!(op, EditOp::Insert(_));
        let region = region_of(gi, insert);
        if let Some(c) = op.b_side() {
            pred_parts[region as usize].push(c);
        }
        if region == Region::Stem {
            if let Some(label) = stem_event(op, gi, &mut lp, profile) {
                events.push(label);
            }
        }
        if !insert {
            gi += 1;
        }
    }

    let take = |r: Range<usize>| g[r].iter().collect::<String>();
    let (gold_prefix, gold_stem, gold_suffix) = (take(0..stem.start), take(stem.clone()), take(stem.end..g.len()));
    let [pred_prefix, pred_stem, pred_suffix] = pred_parts;
    let prefix_ok = pred_prefix == gold_prefix;
    let suffix_ok = pred_suffix == gold_suffix;
    let shorter = pred_stem.chars().count() < gold_stem.chars().count();
    let cut_end = !gold_suffix.is_empty() && suffix_ok && shorter && gold_stem.starts_with(&pred_stem);
    let cut_start = !gold_prefix.is_empty() && prefix_ok && shorter && gold_stem.ends_with(&pred_stem);

    if !events.is_empty() && (cut_end || cut_start) && prefix_ok && suffix_ok {
        return vec![ErrorLabel::CUT];
    }
    let mut labels = if events.len() >= 2 { vec![ErrorLabel::MULT] } else { events };
    if !(prefix_ok && suffix_ok) {
        labels.push(ErrorLabel::AFF);
    }
    labels
}

fn stem_event(op: EditOp, gi: usize, lp: &mut LemmaProjection, profile: &LanguageProfile) -> Option<ErrorLabel> {
    let cls = |c| class(profile, c);
    match op {
        EditOp::Match(_) => None,
        EditOp::Substitute(gc, pc) => Some(match lp.at[gi] {
            Some(l) if l == gc => ErrorLabel::sub(cls(gc)),
            Some(l) if l == pc => ErrorLabel::no_change(cls(gc)),
            _ => ErrorLabel::wrong_change(cls(gc)),
        }),
        EditOp::Delete(gc) => Some(match lp.at[gi] {
            Some(l) if l == gc => ErrorLabel::del(cls(gc)),
            // gold added material the lemma lacks and the prediction left it out
            None => ErrorLabel::no_change(cls(gc)),
            Some(_) => ErrorLabel::wrong_change(cls(gc)),
        }),
        EditOp::Insert(pc) => {
            let dropped = &mut lp.dropped[gi];
            Some(match dropped.iter().position(|&d| d == pc) {
                // gold removed this lemma character, the prediction kept it
                Some(k) => {
                    dropped.remove(k);
                    ErrorLabel::no_change(cls(pc))
                }
                None => ErrorLabel::add(cls(pc)),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::profile::builtin_profile;
    use ErrorLabel::*;

    fn spa() -> LanguageProfile {
        builtin_profile("spa").unwrap()
    }

    fn run(lemma: &str, gold: &str, pred: &str) -> Vec<ErrorLabel> {
        classify(lemma, gold, pred, &["V"], &spa())
    }

    #[test]
    fn stem_errors() {
        assert_eq!(run("deculture", "decultured", "decultared"), vec![SUB_V]);
        assert_eq!(run("firtle", "firtle", "firte"), vec![DEL_C]);
        assert_eq!(run("verter", "vierto", "verto"), vec![NO_CHG_V]);
        assert_eq!(run("compilar", "compilan", "compillan"), vec![ADD_C]);
        assert_eq!(run("acondicionar", "acondicionaste", "aconcoonaste"), vec![MULT]);
        // required change done wrongly
        assert_eq!(run("verter", "vierto", "vuerto"), vec![CHG2E_V]);
    }

    #[test]
    fn multi_character_stem_change() {
        // g→gu spans two gold characters, so no single required change is
        // found; the pair comes out as a deletion plus an affix error
        assert_eq!(run("propagar", "propague", "propace"), vec![DEL_C, AFF]);
    }

    #[test]
    fn affix_errors() {
        let zul = builtin_profile("zul").unwrap();
        assert!(classify("Julayi", "esikaJulayi", "ezoJulayi", &["N"], &zul).contains(&AFF));
        assert_eq!(run("irradiar", "irradiaseis", "irradiseis"), vec![CUT]);
        assert_eq!(run("cantar", "cantaste", "cantamos"), vec![AFF]);
    }

    #[test]
    fn reflexives_and_overregularization() {
        assert!(run("doler", "nos doliéramos", "doliéramos").contains(&REFL));
        assert!(run("tapar", "os tapabais", "taparsebais").contains(&REFL_LOC));
        let eng = builtin_profile("eng").unwrap();
        assert_eq!(classify("sing", "sang", "singed", &["V", "PST"], &eng), vec![OVERREG]);
        assert_eq!(regular_form("walk", &["V", "PST"], &eng).as_deref(), Some("walked"));
        assert_eq!(regular_form("walk", &["N"], &eng), None);
    }

    #[test]
    fn correct_is_empty_and_fallback_is_unclassified() {
        assert!(run("x", "abc", "abc").is_empty());
        // only a pronoun was predicted: nothing left to analyze
        assert_eq!(run("doler", "nos duele", "se"), vec![REFL_LOC]);
        let eng = builtin_profile("eng").unwrap();
        assert_eq!(classify("go", "went", "", &["V"], &eng), vec![UNCLASSIFIED]);
    }

    #[test]
    fn skipped_rules_are_reported() {
        assert_eq!(skipped_rules(&builtin_profile("zul").unwrap()).len(), 2);
        assert!(skipped_rules(&spa()).iter().any(|s| s.starts_with("OVERREG")));
    }
}
