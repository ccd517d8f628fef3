use crate::data::vocab::{EncodedExample, BOS, EOS, PAD, UNK};

/// Index sequences of several examples, padded and laid out time-major
/// (`ids[t * size + b]`), ready for one batched forward pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    pub size: usize,
    pub lemma: Padded,
    pub tags: Padded,
    /// Decoder inputs: BOS and the form, without the final EOS.
    pub form_in: Padded,
    /// Decoder targets: the form and EOS, without the leading BOS.
    pub form_out: Padded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Padded {
    pub ids: Vec<usize>,
    pub lengths: Vec<usize>,
    pub steps: usize,
}

impl Padded {
    pub fn new<'a, I>(seqs: I) -> Self
    where
        I: IntoIterator<Item = &'a [usize]>,
        I::IntoIter: Clone,
    {
        let seqs = seqs.into_iter();
        let lengths: Vec<usize> = seqs.clone().map(|s| s.len()).collect();
        let steps = lengths.iter().copied().max().unwrap_or(0);
        let size = lengths.len();
        let mut ids = vec![PAD; steps * size];
        for (b, s) in seqs.enumerate() {
            for (t, &id) in s.iter().enumerate() {
                ids[t * size + b] = id;
            }
        }
        Self { ids, lengths, steps }
    }

    pub fn at(&self, t: usize) -> &[usize] {
        let size = self.lengths.len();
        &self.ids[t * size..(t + 1) * size]
    }

    /// `true` where step `t` of example `b` exists, time-major.
    pub fn live(&self, t: usize) -> Vec<bool> {
        self.lengths.iter().map(|&n| t < n).collect()
    }

    /// Ids rearranged batch-major (`[b * steps + t]`).
    pub fn batch_major(&self) -> Vec<usize> {
        let size = self.lengths.len();
        let mut out = vec![PAD; self.ids.len()];
        for t in 0..self.steps {
            for b in 0..size {
                out[b * self.steps + t] = self.ids[t * size + b];
            }
        }
        out
    }
}

/// Whether a lemma position can be copied: frame and padding symbols
/// cannot.
pub fn copyable(id: usize) -> bool {
    id != PAD && id != BOS && id != EOS
}

/// Positions whose symbol is unknown to the vocabulary.
pub fn is_unk(id: usize) -> bool {
    id == UNK
}

impl Batch {
    /// Panics if `examples` is empty or any sequence is too short to be an
    /// encoded example (see [`Batch::validate`]).
    pub fn new(examples: &[&EncodedExample]) -> Self {
        assert!(!examples.is_empty(), "empty batch");
        let lemma = Padded::new(examples.iter().map(|e| e.lemma_ids.as_slice()));
        let tags = Padded::new(examples.iter().map(|e| e.tag_ids.as_slice()));
        let form_in = Padded::new(
            examples
                .iter()
                .map(|e| &e.form_ids[..e.form_ids.len().saturating_sub(1)]),
        );
        let form_out = Padded::new(examples.iter().map(|e| e.form_ids.get(1..).unwrap_or(&[])));
        Self {
            size: examples.len(),
            lemma,
            tags,
            form_in,
            form_out,
        }
    }

    /// Batch of encoder inputs only (for prediction).
    pub fn inputs(lemmas: &[&[usize]], tags: &[&[usize]]) -> Self {
        assert_eq!(lemmas.len(), tags.len());
        assert!(!lemmas.is_empty(), "empty batch");
        let empty = Padded::new(lemmas.iter().map(|_| &[][..]));
        Self {
            size: lemmas.len(),
            lemma: Padded::new(lemmas.iter().copied()),
            tags: Padded::new(tags.iter().copied()),
            form_in: empty.clone(),
            form_out: empty,
        }
    }
}

pub fn validate(ex: &EncodedExample) -> Result<(), String> {
    if ex.tag_ids.is_empty() {
        return Err("example has no tags".into());
    }
    if ex.lemma_ids.len() < 3 || ex.lemma_ids[0] != BOS || ex.lemma_ids[ex.lemma_ids.len() - 1] != EOS {
        return Err("lemma must be BOS, at least one character, EOS".into());
    }
    if ex.form_ids.len() < 2 || ex.form_ids[0] != BOS || ex.form_ids[ex.form_ids.len() - 1] != EOS {
        return Err("form must be framed by BOS and EOS".into());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_major_layout() {
        let a = EncodedExample {
            lemma_ids: vec![1, 5, 6, 2],
            tag_ids: vec![4],
            form_ids: vec![1, 5, 2],
        };
        let b = EncodedExample {
            lemma_ids: vec![1, 7, 2],
            tag_ids: vec![4, 5],
            form_ids: vec![1, 7, 7, 7, 2],
        };
        let batch = Batch::new(&[&a, &b]);
        assert_eq!(batch.lemma.steps, 4);
        assert_eq!(batch.lemma.at(1), &[5, 7]);
        assert_eq!(batch.lemma.at(3), &[2, PAD]);
        assert_eq!(batch.form_in.lengths, vec![2, 4]);
        assert_eq!(batch.form_out.at(0), &[5, 7]);
        assert_eq!(batch.form_out.at(1), &[2, 7]);
        assert_eq!(batch.lemma.batch_major(), vec![1, 5, 6, 2, 1, 7, 2, PAD]);
        assert!(validate(&a).is_ok());
    }
}
