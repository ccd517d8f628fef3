use proptest::prelude::*;

use morph_transfer::data::profile::builtin_profile;
use morph_transfer::taxonomy::{align, classify, segment, ErrorLabel, Group};

fn word() -> impl Strategy<Value = String> {
    "[aeiouptkrnsl]{1,10}"
}

/// Plain dynamic-programming edit distance used as the oracle.
fn levenshtein(a: &str, b: &str) -> usize {
    let b: Vec<char> = b.chars().collect();
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.chars().enumerate() {
        let mut prev = row[0];
        row[0] = i + 1;
        for j in 1..=b.len() {
            let cur = row[j];
            row[j] = (prev + usize::from(ca != b[j - 1])).min(row[j] + 1).min(row[j - 1] + 1);
            prev = cur;
        }
    }
    row[b.len()]
}

fn longest_common_substring_len(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut best = 0;
    for i in 0..a.len() {
        for j in 0..b.len() {
            let k = (0..).take_while(|&k| i + k < a.len() && j + k < b.len() && a[i + k] == b[j + k]).count();
            best = best.max(k);
        }
    }
    best
}

proptest! {
    #[test]
    fn alignment_replays_both_strings(a in "[a-dé ]{0,12}", b in "[a-dé ]{0,12}") {
        let al = align(&a, &b);
        prop_assert_eq!(al.a_string(), a.clone());
        prop_assert_eq!(al.b_string(), b.clone());
        prop_assert_eq!(al.cost(), levenshtein(&a, &b));
        prop_assert_eq!(align(&b, &a).cost(), al.cost());
    }

    #[test]
    fn segmentation_partitions_gold(lemma in word(), gold in word()) {
        let seg = segment(&lemma, &gold);
        let (prefix, stem, suffix) = seg.parts(&gold);
        prop_assert_eq!(format!("{prefix}{stem}{suffix}"), gold.clone());
        let lcs = longest_common_substring_len(&lemma, &gold);
        if lcs > 0 {
            prop_assert_eq!(stem.chars().count(), lcs);
            prop_assert!(lemma.contains(&stem));
        } else {
            prop_assert_eq!(stem, gold);
        }
    }

    #[test]
    fn classification_invariants(lemma in word(), gold in word(), predicted in "[aeiouptkrnsl]{0,10}") {
        let spa = builtin_profile("spa").unwrap();
        prop_assert!(classify(&lemma, &gold, &gold, &["V"], &spa).is_empty());
        let labels = classify(&lemma, &gold, &predicted, &["V"], &spa);
        if predicted != gold {
            prop_assert!(!labels.is_empty());
        }
        let affix = labels.iter().filter(|l| matches!(l, ErrorLabel::AFF | ErrorLabel::CUT)).count();
        prop_assert!(affix <= 1);
        if labels.contains(&ErrorLabel::MULT) {
            prop_assert_eq!(labels.iter().filter(|l| l.group() == Some(Group::Stem)).count(), 1);
        }
    }
}

#[test]
fn label_groups_partition_the_taxonomy() {
    use ErrorLabel::*;
    let stem = [SUB_V, SUB_C, DEL_V, DEL_C, ADD_V, ADD_C, NO_CHG_V, NO_CHG_C, CHG2E_V, CHG2E_C, MULT];
    for l in ErrorLabel::TAXONOMY {
        let want = if stem.contains(&l) {
            Group::Stem
        } else if matches!(l, AFF | CUT) {
            Group::Affix
        } else {
            Group::Misc
        };
        assert_eq!(l.group(), Some(want), "{l:?}");
        assert_eq!(l.as_str().parse::<ErrorLabel>(), Ok(l));
        assert_eq!(l.display_name().parse::<ErrorLabel>(), Ok(l));
    }
    assert_eq!(UNCLASSIFIED.group(), None);
}

#[test]
fn segmentation_examples() {
    assert_eq!(segment("walk", "walked").parts("walked"), ("".into(), "walk".into(), "ed".into()));
    assert_eq!(segment("dance", "dancing").parts("dancing"), ("".into(), "danc".into(), "ing".into()));
    assert_eq!(
        segment("Julayi", "esikaJulayi").parts("esikaJulayi"),
        ("esika".into(), "Julayi".into(), "".into())
    );
}
