//! Additive (MLP) attention: `score_t = v · tanh(W_q q + W_s h_t + b)`.

use rand::Rng;

use super::float::Float;
use super::matrix::Matrix;
use super::param::{Init, ParamId, ParamSet};
use super::tape::{Tape, Var};
use super::NnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Attention {
    pub query_size: usize,
    pub state_size: usize,
    pub hidden: usize,
    /// `A × Q`
    pub w_query: ParamId,
    /// `A × D`
    pub w_state: ParamId,
    /// `1 × A`
    pub bias: ParamId,
    /// `1 × A`
    pub v: ParamId,
}

/// Encoder states prepared for repeated attention queries.
#[derive(Debug, Clone)]
pub struct Memory {
    /// `T·B × D`, time-major.
    pub states: Var,
    /// `T·B × A`: `W_s h + b` for every state.
    proj: Var,
    /// `B × T` row-major; `false` marks padding.
    mask: Vec<bool>,
    pub batch: usize,
    pub steps: usize,
}

impl Attention {
    pub fn new<F: Float, R: Rng>(
        params: &mut ParamSet<F>,
        name: &str,
        query_size: usize,
        state_size: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Self {
        Self {
            query_size,
            state_size,
            hidden,
            w_query: params.add(format!("{name}.w_query"), hidden, query_size, Init::Glorot, rng),
            w_state: params.add(format!("{name}.w_state"), hidden, state_size, Init::Glorot, rng),
            bias: params.add(format!("{name}.bias"), 1, hidden, Init::Zeros, rng),
            v: params.add(format!("{name}.v"), 1, hidden, Init::Glorot, rng),
        }
    }

    /// Precomputes the state projection for `batch` sequences of the given
    /// lengths stacked time-major in `states`.
    pub fn memory<F: Float>(
        &self,
        tape: &mut Tape<F>,
        params: &ParamSet<F>,
        states: Var,
        lengths: &[usize],
    ) -> Memory {
        let batch = lengths.len();
        let steps = tape.shape(states).0 / batch;
        let w = tape.param(params, self.w_state);
        let b = tape.param(params, self.bias);
        let proj = tape.linear(states, w, b);
        let mask = lengths
            .iter()
            .flat_map(|&n| (0..steps).map(move |t| t < n))
            .collect();
        Memory {
            states,
            proj,
            mask,
            batch,
            steps,
        }
    }

    /// Returns `(context B×D, weights B×T)` for queries `B×Q`.
    pub fn attend<F: Float>(
        &self,
        tape: &mut Tape<F>,
        params: &ParamSet<F>,
        memory: &Memory,
        query: Var,
    ) -> (Var, Var) {
        let wq = tape.param(params, self.w_query);
        let v = tape.param(params, self.v);
        let q = tape.matmul_t(query, wq);
        let scores = tape.attn_scores(memory.proj, q, v);
        let all_live = memory.mask.iter().all(|&m| m);
        let weights = tape.softmax_masked(scores, (!all_live).then_some(memory.mask.as_slice()));
        let context = tape.weighted_sum(weights, memory.states);
        (context, weights)
    }
}

/// Attention over one sequence of plain state vectors. Returns
/// `(context, weights)`.
pub fn additive_attention<F: Float>(
    query: &[F],
    states: &[Vec<F>],
    att: &Attention,
    params: &ParamSet<F>,
) -> Result<(Vec<F>, Vec<F>), NnError> {
    if states.is_empty() {
        return Err(NnError::Contract("attention over an empty state list".into()));
    }
    if query.len() != att.query_size {
        return Err(NnError::Contract(format!(
            "attention query has size {}, expected {}",
            query.len(),
            att.query_size
        )));
    }
    if let Some(s) = states.iter().find(|s| s.len() != att.state_size) {
        return Err(NnError::Contract(format!(
            "attention state has size {}, expected {}",
            s.len(),
            att.state_size
        )));
    }
    let mut tape = Tape::new();
    let data: Vec<F> = states.iter().flatten().copied().collect();
    let sv = tape.input(Matrix::from_vec(states.len(), att.state_size, data));
    let q = tape.input(Matrix::row_vector(query.to_vec()));
    let mem = att.memory(&mut tape, params, sv, &[states.len()]);
    let (ctx, w) = att.attend(&mut tape, params, &mem, q);
    Ok((tape.value(ctx).data().to_vec(), tape.value(w).data().to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (ParamSet<f64>, Attention) {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut ps = ParamSet::new();
        let att = Attention::new(&mut ps, "a", 2, 3, 2, &mut rng);
        (ps, att)
    }

    #[test]
    fn singleton_gets_all_weight() {
        let (ps, att) = setup();
        let s = vec![0.4, -0.1, 0.7];
        let (ctx, w) = additive_attention(&[0.3, 0.2], std::slice::from_ref(&s), &att, &ps).unwrap();
        assert_eq!(w, vec![1.0]);
        assert_eq!(ctx, s);
    }

    #[test]
    fn identical_states_give_that_state() {
        let (ps, att) = setup();
        let s = vec![0.4, -0.1, 0.7];
        let (ctx, w) = additive_attention(&[0.3, 0.2], &vec![s.clone(); 4], &att, &ps).unwrap();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (a, b) in ctx.iter().zip(&s) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn hand_set_scores() {
        let (mut ps, att) = setup();
        ps.value_mut(att.w_query).data_mut().copy_from_slice(&[1.0, 0.0, 0.0, 1.0]);
        ps.value_mut(att.w_state).data_mut().copy_from_slice(&[0.5, 0.0, 0.0, 0.0, -1.0, 0.0]);
        ps.value_mut(att.bias).data_mut().copy_from_slice(&[0.1, 0.0]);
        ps.value_mut(att.v).data_mut().copy_from_slice(&[2.0, -1.0]);
        let q = [0.3, -0.2];
        let states = vec![vec![1.0, 0.5, 0.0], vec![-1.0, 2.0, 3.0]];
        let score = |s: &[f64]| {
            2.0 * (q[0] + 0.5 * s[0] + 0.1).tanh() - (q[1] - s[1]).tanh()
        };
        let (e0, e1) = (score(&states[0]).exp(), score(&states[1]).exp());
        let (_, w) = additive_attention(&q, &states, &att, &ps).unwrap();
        assert!((w[0] - e0 / (e0 + e1)).abs() < 1e-12);
        assert!((w[1] - e1 / (e0 + e1)).abs() < 1e-12);
    }

    #[test]
    fn contract_errors() {
        let (ps, att) = setup();
        assert!(additive_attention(&[0.3, 0.2], &[], &att, &ps).is_err());
        assert!(additive_attention(&[0.3], &[vec![0.0; 3]], &att, &ps).is_err());
    }
}
