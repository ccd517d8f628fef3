use std::ops::Range;

/// One edit turning the first string of [`align`] into the second.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EditOp {
    Match(char),
    /// `(a_char, b_char)`.
    Substitute(char, char),
    /// Character of `a` absent from `b`.
    Delete(char),
    /// Character of `b` absent from `a`.
    Insert(char),
}

impl EditOp {
    pub fn a_side(self) -> Option<char> {
        match self {
            EditOp::Match(c) | EditOp::Substitute(c, _) | EditOp::Delete(c) => Some(c),
            EditOp::Insert(_) => None,
        }
    }

    pub fn b_side(self) -> Option<char> {
        match self {
            EditOp::Match(c) | EditOp::Substitute(_, c) | EditOp::Insert(c) => Some(c),
            EditOp::Delete(_) => None,
        }
    }

    pub fn is_match(self) -> bool {
        matches!(self, EditOp::Match(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Alignment {
    pub ops: Vec<EditOp>,
}

impl Alignment {
    /// Number of non-match operations.
    pub fn cost(&self) -> usize {
        self.ops.iter().filter(|o| !o.is_match()).count()
    }

    pub fn a_string(&self) -> String {
        self.ops.iter().filter_map(|o| o.a_side()).collect()
    }

    pub fn b_string(&self) -> String {
        self.ops.iter().filter_map(|o| o.b_side()).collect()
    }

    /// For every operation, the index into `a` it sits at: the consumed
    /// character for match/substitute/delete, the position before which
    /// `b` material is inserted for insert.
    pub fn a_positions(&self) -> Vec<usize> {
        let mut i = 0;
        self.ops
            .iter()
            .map(|o| {
                let at = i;
                if o.a_side().is_some() {
                    i += 1;
                }
                at
            })
            .collect()
    }
}

/// Minimal unit-cost alignment of `a` to `b`. Traceback from the end
/// prefers match, then substitute, then delete, then insert, which puts
/// gaps as far left as the optimum allows.
pub fn align(a: &str, b: &str) -> Alignment {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let (n, m) = (a.len(), b.len());
    let w = m + 1;
    let mut d = vec![0usize; (n + 1) * w];
    for i in 0..=n {
        d[i * w] = i;
    }
    for (j, v) in d.iter_mut().take(w).enumerate() {
        *v = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let diag = d[(i - 1) * w + j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i * w + j] = diag.min(d[(i - 1) * w + j] + 1).min(d[i * w + j - 1] + 1);
        }
    }
    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = d[i * w + j];
        if i > 0 && j > 0 && a[i - 1] == b[j - 1] && d[(i - 1) * w + j - 1] == here {
            ops.push(EditOp::Match(a[i - 1]));
            i -= 1;
            j -= 1;
        } else if i > 0 && j > 0 && d[(i - 1) * w + j - 1] + 1 == here {
            ops.push(EditOp::Substitute(a[i - 1], b[j - 1]));
            i -= 1;
            j -= 1;
        } else if i > 0 && d[(i - 1) * w + j] + 1 == here {
            ops.push(EditOp::Delete(a[i - 1]));
            i -= 1;
        } else {
            ops.push(EditOp::Insert(b[j - 1]));
            j -= 1;
        }
    }
    ops.reverse();
    Alignment { ops }
}

/// Gold form split into prefix, stem and suffix (character index ranges).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segmentation {
    pub prefix: Range<usize>,
    pub stem: Range<usize>,
    pub suffix: Range<usize>,
}

impl Segmentation {
    pub fn from_stem(stem: Range<usize>, len: usize) -> Self {
        Self {
            prefix: 0..stem.start,
            suffix: stem.end..len,
            stem,
        }
    }

    pub fn parts(&self, gold: &str) -> (String, String, String) {
        let chars: Vec<char> = gold.chars().collect();
        let take = |r: &Range<usize>| chars[r.clone()].iter().collect();
        (take(&self.prefix), take(&self.stem), take(&self.suffix))
    }
}

/// Stem = longest common substring of lemma and gold (longest, then
/// leftmost in gold); the whole gold when nothing is shared.
pub fn segment(lemma: &str, gold: &str) -> Segmentation {
    let l: Vec<char> = lemma.chars().collect();
    let g: Vec<char> = gold.chars().collect();
    let mut best = (0usize, 0usize); // (length, end in gold)
    let mut prev = vec![0usize; l.len() + 1];
    let mut cur = vec![0usize; l.len() + 1];
    for (gi, &gc) in g.iter().enumerate() {
        for (li, &lc) in l.iter().enumerate() {
            cur[li + 1] = if gc == lc { prev[li] + 1 } else { 0 };
            if cur[li + 1] > best.0 {
                best = (cur[li + 1], gi + 1);
            }
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let stem = if best.0 == 0 {
        0..g.len()
    } else {
        best.1 - best.0..best.1
    };
    Segmentation::from_stem(stem, g.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_degenerate() {
        let a = align("walk", "walk");
        assert_eq!(a.cost(), 0);
        assert!(a.ops.iter().all(|o| o.is_match()));
        assert_eq!(align("", "ab").ops, vec![EditOp::Insert('a'), EditOp::Insert('b')]);
        assert_eq!(align("ab", "").ops, vec![EditOp::Delete('a'), EditOp::Delete('b')]);
        assert!(align("", "").ops.is_empty());
    }

    #[test]
    fn kitten_sitting() {
        let a = align("kitten", "sitting");
        assert_eq!(a.cost(), 3);
        assert_eq!(a.a_string(), "kitten");
        assert_eq!(a.b_string(), "sitting");
    }

    #[test]
    fn gaps_go_left() {
        // "aa" → "a": the first a is the deleted one
        assert_eq!(align("aa", "a").ops, vec![EditOp::Delete('a'), EditOp::Match('a')]);
        assert_eq!(
            align("firtle", "firte").ops[4],
            EditOp::Delete('l'),
        );
    }

    #[test]
    fn segments() {
        assert_eq!(segment("walk", "walked").parts("walked"), ("".into(), "walk".into(), "ed".into()));
        assert_eq!(segment("dance", "dancing").parts("dancing"), ("".into(), "danc".into(), "ing".into()));
        assert_eq!(
            segment("Julayi", "esikaJulayi").parts("esikaJulayi"),
            ("esika".into(), "Julayi".into(), "".into())
        );
        assert_eq!(segment("xyz", "abc").stem, 0..3);
        // equal-length candidates: leftmost in gold wins
        assert_eq!(segment("abxcd", "cdab").stem, 0..2);
    }
}
