//! Automatic stem/affix error taxonomy: align a prediction to the gold
//! form, split the gold form into stem and affixes, and label the
//! differences.

pub mod align;
pub mod classify;
pub mod report;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use align::{align, segment, Alignment, EditOp, Segmentation};
pub use classify::{classify, regular_form, skipped_rules};
pub use report::{
    aggregate, parse_predictions, render_predictions, ErrorReport, PredictionRecord, ReportError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Group {
    Stem,
    Affix,
    Misc,
}

impl Group {
    pub const ALL: [Group; 3] = [Group::Stem, Group::Affix, Group::Misc];

    pub fn as_str(self) -> &'static str {
        match self {
            Group::Stem => "Stem",
            Group::Affix => "Affix",
            Group::Misc => "Misc",
        }
    }
}

/// Error categories. Declaration order is table row order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[allow(non_camel_case_types)]
pub enum ErrorLabel {
    SUB_V,
    SUB_C,
    DEL_C,
    DEL_V,
    NO_CHG_V,
    MULT,
    ADD_V,
    CHG2E_V,
    ADD_C,
    CHG2E_C,
    NO_CHG_C,
    AFF,
    CUT,
    REFL,
    REFL_LOC,
    OVERREG,
    /// Prediction differs from gold but no rule applied.
    UNCLASSIFIED,
}

/// Vowel or consonant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CharClass {
    Vowel,
    Consonant,
}

impl ErrorLabel {
    /// The taxonomy proper, in table row order (the sentinel excluded).
    pub const TAXONOMY: [ErrorLabel; 16] = [
        ErrorLabel::SUB_V,
        ErrorLabel::SUB_C,
        ErrorLabel::DEL_C,
        ErrorLabel::DEL_V,
        ErrorLabel::NO_CHG_V,
        ErrorLabel::MULT,
        ErrorLabel::ADD_V,
        ErrorLabel::CHG2E_V,
        ErrorLabel::ADD_C,
        ErrorLabel::CHG2E_C,
        ErrorLabel::NO_CHG_C,
        ErrorLabel::AFF,
        ErrorLabel::CUT,
        ErrorLabel::REFL,
        ErrorLabel::REFL_LOC,
        ErrorLabel::OVERREG,
    ];

    pub const ALL: [ErrorLabel; 17] = [
        ErrorLabel::SUB_V,
        ErrorLabel::SUB_C,
        ErrorLabel::DEL_C,
        ErrorLabel::DEL_V,
        ErrorLabel::NO_CHG_V,
        ErrorLabel::MULT,
        ErrorLabel::ADD_V,
        ErrorLabel::CHG2E_V,
        ErrorLabel::ADD_C,
        ErrorLabel::CHG2E_C,
        ErrorLabel::NO_CHG_C,
        ErrorLabel::AFF,
        ErrorLabel::CUT,
        ErrorLabel::REFL,
        ErrorLabel::REFL_LOC,
        ErrorLabel::OVERREG,
        ErrorLabel::UNCLASSIFIED,
    ];

    /// `None` only for the sentinel.
    pub fn group(self) -> Option<Group> {
        use ErrorLabel::*;
        Some(match self {
            SUB_V | SUB_C | DEL_C | DEL_V | NO_CHG_V | NO_CHG_C | MULT | ADD_V | ADD_C | CHG2E_V | CHG2E_C => Group::Stem,
            AFF | CUT => Group::Affix,
            REFL | REFL_LOC | OVERREG => Group::Misc,
            UNCLASSIFIED => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        use ErrorLabel::*;
        match self {
            SUB_V => "SUB_V",
            SUB_C => "SUB_C",
            DEL_C => "DEL_C",
            DEL_V => "DEL_V",
            NO_CHG_V => "NO_CHG_V",
            MULT => "MULT",
            ADD_V => "ADD_V",
            CHG2E_V => "CHG2E_V",
            ADD_C => "ADD_C",
            CHG2E_C => "CHG2E_C",
            NO_CHG_C => "NO_CHG_C",
            AFF => "AFF",
            CUT => "CUT",
            REFL => "REFL",
            REFL_LOC => "REFL_LOC",
            OVERREG => "OVERREG",
            UNCLASSIFIED => "UNCLASSIFIED",
        }
    }

    /// Table row name, e.g. `SUB(V)`.
    pub fn display_name(self) -> String {
        let s = self.as_str();
        match s.strip_suffix("_V").or_else(|| s.strip_suffix("_C")) {
            Some(base) => format!("{base}({})", &s[s.len() - 1..]),
            None => s.to_owned(),
        }
    }

    fn with_class(v: ErrorLabel, c: ErrorLabel, class: CharClass) -> ErrorLabel {
        match class {
            CharClass::Vowel => v,
            CharClass::Consonant => c,
        }
    }

    pub fn sub(class: CharClass) -> Self {
        Self::with_class(ErrorLabel::SUB_V, ErrorLabel::SUB_C, class)
    }

    pub fn del(class: CharClass) -> Self {
        Self::with_class(ErrorLabel::DEL_V, ErrorLabel::DEL_C, class)
    }

    pub fn add(class: CharClass) -> Self {
        Self::with_class(ErrorLabel::ADD_V, ErrorLabel::ADD_C, class)
    }

    pub fn no_change(class: CharClass) -> Self {
        Self::with_class(ErrorLabel::NO_CHG_V, ErrorLabel::NO_CHG_C, class)
    }

    pub fn wrong_change(class: CharClass) -> Self {
        Self::with_class(ErrorLabel::CHG2E_V, ErrorLabel::CHG2E_C, class)
    }
}

impl fmt::Display for ErrorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ErrorLabel {
    type Err = String;
    /// Accepts both `SUB_V` and `SUB(V)`.
    fn from_str(s: &str) -> Result<Self, String> {
        ErrorLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s || l.display_name() == s)
            .ok_or_else(|| format!("unknown error label {s:?}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn groups_partition_the_taxonomy() {
        let count = |g| ErrorLabel::TAXONOMY.iter().filter(|l| l.group() == Some(g)).count();
        assert_eq!(count(Group::Stem), 11);
        assert_eq!(count(Group::Affix), 2);
        assert_eq!(count(Group::Misc), 3);
        assert_eq!(ErrorLabel::UNCLASSIFIED.group(), None);
    }

    #[test]
    fn names_round_trip() {
        for l in ErrorLabel::ALL {
            assert_eq!(l.as_str().parse::<ErrorLabel>().unwrap(), l);
            assert_eq!(l.display_name().parse::<ErrorLabel>().unwrap(), l);
        }
        assert_eq!(ErrorLabel::NO_CHG_V.display_name(), "NO_CHG(V)");
        assert_eq!(ErrorLabel::REFL_LOC.display_name(), "REFL_LOC");
    }
}
