//! LSTM cells and bidirectional encoders.
//!
//! Gate pre-activations are laid out as `[input | forget | candidate | output]`,
//! each `H` wide. State vectors travel through the tape as `B×2H` matrices
//! holding `[h | c]`.

use rand::Rng;

use super::float::Float;
use super::matrix::Matrix;
use super::param::{Init, ParamId, ParamSet};
use super::tape::{Tape, Var};
use super::NnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LstmParams {
    pub input_size: usize,
    pub hidden: usize,
    /// `4H × I`
    pub w_x: ParamId,
    /// `4H × H`
    pub w_h: ParamId,
    /// `1 × 4H`, forget slice initialized to 1.
    pub bias: ParamId,
}

impl LstmParams {
    pub fn new<F: Float, R: Rng>(
        params: &mut ParamSet<F>,
        name: &str,
        input_size: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Self {
        let w_x = params.add(format!("{name}.w_x"), 4 * hidden, input_size, Init::Glorot, rng);
        let w_h = params.add(format!("{name}.w_h"), 4 * hidden, hidden, Init::Glorot, rng);
        let bias = params.add(format!("{name}.bias"), 1, 4 * hidden, Init::Zeros, rng);
        for v in &mut params.value_mut(bias).data_mut()[hidden..2 * hidden] {
            *v = F::one();
        }
        Self {
            input_size,
            hidden,
            w_x,
            w_h,
            bias,
        }
    }

    /// One step from precomputed input projection `xw = x·W_xᵀ + b` (`B×4H`)
    /// and previous state `[h | c]` (`B×2H`).
    pub fn step_projected<F: Float>(
        &self,
        tape: &mut Tape<F>,
        params: &ParamSet<F>,
        xw: Var,
        state: Var,
    ) -> Var {
        let w_h = tape.param(params, self.w_h);
        let h = tape.slice_cols(state, 0, self.hidden);
        let hw = tape.matmul_t(h, w_h);
        let z = tape.add(xw, hw);
        tape.lstm_cell(z, state)
    }

    /// One step from raw input `x` (`B×I`).
    pub fn step<F: Float>(&self, tape: &mut Tape<F>, params: &ParamSet<F>, x: Var, state: Var) -> Var {
        let xw = self.project(tape, params, x);
        self.step_projected(tape, params, xw, state)
    }

    /// `x·W_xᵀ + b` for any number of stacked rows.
    pub fn project<F: Float>(&self, tape: &mut Tape<F>, params: &ParamSet<F>, x: Var) -> Var {
        let w_x = tape.param(params, self.w_x);
        let b = tape.param(params, self.bias);
        tape.linear(x, w_x, b)
    }

    pub fn zero_state<F: Float>(&self, tape: &mut Tape<F>, batch: usize) -> Var {
        tape.zeros(batch, 2 * self.hidden)
    }
}

/// Single LSTM update on plain vectors. Returns `(h, c)`.
pub fn lstm_cell<F: Float>(
    x: &[F],
    h_prev: &[F],
    c_prev: &[F],
    lstm: &LstmParams,
    params: &ParamSet<F>,
) -> Result<(Vec<F>, Vec<F>), NnError> {
    let hsz = lstm.hidden;
    if x.len() != lstm.input_size || h_prev.len() != hsz || c_prev.len() != hsz {
        return Err(NnError::Contract(format!(
            "lstm_cell expects input {} and state {hsz}, got input {}, h {}, c {}",
            lstm.input_size,
            x.len(),
            h_prev.len(),
            c_prev.len()
        )));
    }
    let mut tape = Tape::new();
    let xv = tape.input(Matrix::row_vector(x.to_vec()));
    let mut prev = h_prev.to_vec();
    prev.extend_from_slice(c_prev);
    let state = tape.input(Matrix::row_vector(prev));
    let out = lstm.step(&mut tape, params, xv, state);
    let v = tape.value(out).data();
    Ok((v[..hsz].to_vec(), v[hsz..].to_vec()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BiLstm {
    pub forward: LstmParams,
    pub backward: LstmParams,
}

impl BiLstm {
    pub fn new<F: Float, R: Rng>(
        params: &mut ParamSet<F>,
        name: &str,
        input_size: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Self {
        Self {
            forward: LstmParams::new(params, &format!("{name}.fwd"), input_size, hidden, rng),
            backward: LstmParams::new(params, &format!("{name}.bwd"), input_size, hidden, rng),
        }
    }

    pub fn hidden(&self) -> usize {
        self.forward.hidden
    }

    /// Runs both directions over a time-major stack `xs` (`T·B×I`) of
    /// `batch` sequences with the given lengths. Returns the `T·B×2H` stack
    /// of `[h_fwd | h_bwd]`. Rows past a sequence's length hold no
    /// meaningful state and must be masked by the consumer.
    pub fn run_stacked<F: Float>(
        &self,
        tape: &mut Tape<F>,
        params: &ParamSet<F>,
        xs: Var,
        lengths: &[usize],
    ) -> Var {
        let batch = lengths.len();
        let steps = tape.shape(xs).0 / batch;
        let h = self.hidden();
        let run = |tape: &mut Tape<F>, lstm: &LstmParams, order: &mut dyn Iterator<Item = usize>| {
            let xw = lstm.project(tape, params, xs);
            let mut state = lstm.zero_state(tape, batch);
            let mut outs = vec![None; steps];
            for t in order {
                let xw_t = tape.slice_rows(xw, t * batch, batch);
                let next = lstm.step_projected(tape, params, xw_t, state);
                let live: Vec<bool> = lengths.iter().map(|&n| t < n).collect();
                state = if live.iter().all(|&l| l) {
                    next
                } else {
                    tape.select_rows(&live, next, state)
                };
                outs[t] = Some(tape.slice_cols(state, 0, h));
            }
            let outs: Vec<Var> = outs.into_iter().map(|o| o.expect("every step visited")).collect();
            tape.stack_rows(&outs)
        };
        let fwd = run(tape, &self.forward, &mut (0..steps));
        let bwd = run(tape, &self.backward, &mut (0..steps).rev());
        tape.concat_cols(&[fwd, bwd])
    }
}

/// Bidirectional encoding of one sequence of plain vectors.
pub fn bilstm<F: Float>(
    seq: &[Vec<F>],
    enc: &BiLstm,
    params: &ParamSet<F>,
) -> Result<Vec<Vec<F>>, NnError> {
    if seq.is_empty() {
        return Err(NnError::Contract("bilstm needs a non-empty sequence".into()));
    }
    let isz = enc.forward.input_size;
    if let Some(bad) = seq.iter().find(|x| x.len() != isz) {
        return Err(NnError::Contract(format!(
            "bilstm input width {} does not match {isz}",
            bad.len()
        )));
    }
    let mut tape = Tape::new();
    let data: Vec<F> = seq.iter().flatten().copied().collect();
    let xs = tape.input(Matrix::from_vec(seq.len(), isz, data));
    let out = enc.run_stacked(&mut tape, params, xs, &[seq.len()]);
    let v = tape.value(out);
    Ok((0..seq.len()).map(|t| v.row(t).to_vec()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sig(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }

    #[test]
    fn hand_computed_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut ps = ParamSet::<f64>::new();
        let l = LstmParams::new(&mut ps, "l", 2, 2, &mut rng);
        let wx: Vec<f64> = (0..16).map(|i| 0.1 * i as f64 - 0.7).collect();
        let wh: Vec<f64> = (0..16).map(|i| 0.03 * i as f64 - 0.2).collect();
        let b = [0.1, -0.1, 1.0, 1.0, 0.0, 0.2, -0.3, 0.3];
        ps.value_mut(l.w_x).data_mut().copy_from_slice(&wx);
        ps.value_mut(l.w_h).data_mut().copy_from_slice(&wh);
        ps.value_mut(l.bias).data_mut().copy_from_slice(&b);
        let (x, hp, cp) = ([0.5, -1.0], [0.2, 0.4], [-0.3, 0.6]);
        let (h, c) = lstm_cell(&x, &hp, &cp, &l, &ps).unwrap();
        for k in 0..2 {
            let z = |g: usize| {
                let r = g * 2 + k;
                wx[r * 2] * x[0] + wx[r * 2 + 1] * x[1] + wh[r * 2] * hp[0] + wh[r * 2 + 1] * hp[1] + b[r]
            };
            let c_k = sig(z(1)) * cp[k] + sig(z(0)) * z(2).tanh();
            let h_k = sig(z(3)) * c_k.tanh();
            assert!((c[k] - c_k).abs() < 1e-12);
            assert!((h[k] - h_k).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_weights_give_zero_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut ps = ParamSet::<f64>::new();
        let l = LstmParams::new(&mut ps, "l", 3, 4, &mut rng);
        ps.iter_mut().for_each(|p| p.value.fill(0.0));
        let (h, c) = lstm_cell(&[0.0; 3], &[0.0; 4], &[0.0; 4], &l, &ps).unwrap();
        assert!(h.iter().chain(&c).all(|&v| v == 0.0));
    }

    #[test]
    fn shape_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut ps = ParamSet::<f64>::new();
        let l = LstmParams::new(&mut ps, "l", 3, 4, &mut rng);
        assert!(lstm_cell(&[0.0; 2], &[0.0; 4], &[0.0; 4], &l, &ps).is_err());
        let enc = BiLstm::new(&mut ps, "e", 3, 4, &mut rng);
        assert!(bilstm(&[], &enc, &ps).is_err());
    }

    #[test]
    fn palindrome_symmetry_with_tied_directions() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut ps = ParamSet::<f64>::new();
        let enc = BiLstm::new(&mut ps, "e", 2, 3, &mut rng);
        for (src, dst) in [
            (enc.forward.w_x, enc.backward.w_x),
            (enc.forward.w_h, enc.backward.w_h),
            (enc.forward.bias, enc.backward.bias),
        ] {
            let v = ps.value(src).clone();
            *ps.value_mut(dst) = v;
        }
        let a = vec![0.3, -0.2];
        let b = vec![-0.5, 0.9];
        let c = vec![0.1, 0.4];
        let seq = vec![a.clone(), b.clone(), c, b, a];
        let out = bilstm(&seq, &enc, &ps).unwrap();
        let n = out.len();
        for t in 0..n {
            let (f, r) = out[t].split_at(3);
            let (f2, r2) = out[n - 1 - t].split_at(3);
            for k in 0..3 {
                assert!((f[k] - r2[k]).abs() < 1e-12);
                assert!((r[k] - f2[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn padded_batch_matches_single_runs() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut ps = ParamSet::<f64>::new();
        let enc = BiLstm::new(&mut ps, "e", 2, 3, &mut rng);
        let s1: Vec<Vec<f64>> = vec![vec![0.1, 0.2], vec![0.3, -0.4], vec![0.5, 0.0]];
        let s2: Vec<Vec<f64>> = vec![vec![-0.7, 0.2]];
        let mut data = Vec::new();
        for (t, x) in s1.iter().enumerate() {
            data.extend_from_slice(x);
            data.extend_from_slice(s2.get(t).map(|v| v.as_slice()).unwrap_or(&[9.0, 9.0]));
        }
        let mut tape = Tape::new();
        let xs = tape.input(Matrix::from_vec(6, 2, data));
        let out = enc.run_stacked(&mut tape, &ps, xs, &[3, 1]);
        let v = tape.value(out);
        let one = bilstm(&s1, &enc, &ps).unwrap();
        let two = bilstm(&s2, &enc, &ps).unwrap();
        let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12);
        for (t, h) in one.iter().enumerate() {
            assert!(close(v.row(t * 2), h));
        }
        assert!(close(v.row(1), &two[0]));
    }

    #[test]
    fn output_length_matches_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut ps = ParamSet::<f64>::new();
        let enc = BiLstm::new(&mut ps, "e", 2, 3, &mut rng);
        for n in 1..=10 {
            let seq: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64 * 0.1, 0.2]).collect();
            let out = bilstm(&seq, &enc, &ps).unwrap();
            assert_eq!(out.len(), n);
            assert!(out.iter().all(|s| s.len() == 6));
        }
    }
}
