use std::cell::RefCell;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::extended::Extended;
use super::float::Float;
use super::param::ParamSet;
use super::tape::{Tape, Var};
use super::NnError;

/// Which coordinates to perturb.
#[derive(Debug, Clone, Copy)]
pub enum Sampling {
    All,
    /// At most this many coordinates per parameter, chosen with the seed.
    PerParam { max: usize, seed: u64 },
}

#[derive(Debug, Clone)]
pub struct ParamCheck {
    pub name: String,
    pub relative_error: f64,
    pub analytic: f64,
    pub numeric: f64,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// Worst coordinate per parameter, in registration order.
    pub per_param: Vec<ParamCheck>,
    pub coordinates: usize,
}

/// Compares backpropagated gradients against central differences computed
/// with the same loss in 64-bit floats.
///
/// `loss` records a scalar loss on the given tape. Relative error per
/// coordinate is `|a − n| / max(|a|, |n|, 1e-8)`. Rounding in the loss
/// limits the numeric side to an absolute accuracy of roughly
/// `ulp(loss) / ε`, so coordinates whose true gradient is below about
/// 1e-6 can show large relative errors; see [`gradient_check_extended`].
pub fn gradient_check<L>(
    params: &mut ParamSet<f64>,
    loss: L,
    eps: f64,
    sampling: Sampling,
) -> Result<GradCheckReport, NnError>
where
    L: FnMut(&mut Tape<f64>, &ParamSet<f64>) -> Result<Var, NnError>,
{
    let loss = RefCell::new(loss);
    check(
        params,
        |t, p| (loss.borrow_mut())(t, p),
        |t, p| (loss.borrow_mut())(t, p),
        eps,
        sampling,
    )
}

/// Like [`gradient_check`], but the central differences are evaluated in
/// double-double precision, so the numeric reference is free of 64-bit
/// rounding noise. The analytic gradient is still computed in 64 bits.
pub fn gradient_check_extended<L, R>(
    params: &mut ParamSet<f64>,
    loss: L,
    reference: R,
    eps: f64,
    sampling: Sampling,
) -> Result<GradCheckReport, NnError>
where
    L: FnMut(&mut Tape<f64>, &ParamSet<f64>) -> Result<Var, NnError>,
    R: FnMut(&mut Tape<Extended>, &ParamSet<Extended>) -> Result<Var, NnError>,
{
    check(params, loss, reference, eps, sampling)
}

fn scalar_loss<N: Float>(tape: &Tape<N>, out: Var) -> Result<N, NnError> {
    let v = tape.value(out).scalar();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(NnError::NonFinite(format!("loss evaluated to {v}")))
    }
}

fn check<N, L, R>(
    params: &mut ParamSet<f64>,
    mut loss: L,
    mut reference: R,
    eps: f64,
    sampling: Sampling,
) -> Result<GradCheckReport, NnError>
where
    N: Float,
    L: FnMut(&mut Tape<f64>, &ParamSet<f64>) -> Result<Var, NnError>,
    R: FnMut(&mut Tape<N>, &ParamSet<N>) -> Result<Var, NnError>,
{
    params.zero_grads();
    {
        let mut tape = Tape::new();
        let out = loss(&mut tape, params)?;
        scalar_loss(&tape, out)?;
        tape.backward(out, params)?;
    }

    let mut probe: ParamSet<N> = params.convert();
    let mut eval = |probe: &ParamSet<N>| -> Result<N, NnError> {
        let mut tape = Tape::new();
        let out = reference(&mut tape, probe)?;
        scalar_loss(&tape, out)
    };
    let step = N::from_f64_lossy(eps);

    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        per_param: Vec::new(),
        coordinates: 0,
    };
    let ids: Vec<_> = params.iter().map(|(id, _)| id).collect();
    for id in ids {
        let n = params.value(id).len();
        let coords: Vec<usize> = match sampling {
            Sampling::PerParam { max, seed } if max < n => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ id.0 as u64);
                let mut c = sample(&mut rng, n, max).into_vec();
                c.sort_unstable();
                c
            }
            _ => (0..n).collect(),
        };
        let mut worst = ParamCheck {
            name: params.get(id).name.clone(),
            relative_error: 0.0,
            analytic: 0.0,
            numeric: 0.0,
        };
        for i in coords {
            let original = probe.value(id).data()[i];
            probe.value_mut(id).data_mut()[i] = original + step;
            let plus = eval(&probe)?;
            probe.value_mut(id).data_mut()[i] = original - step;
            let minus = eval(&probe)?;
            probe.value_mut(id).data_mut()[i] = original;
            let numeric = ((plus - minus) / (step + step)).as_f64();
            let analytic = params.grad(id).data()[i];
            let denom = analytic.abs().max(numeric.abs()).max(1e-8);
            let rel = (analytic - numeric).abs() / denom;
            if rel > worst.relative_error {
                worst.relative_error = rel;
                worst.analytic = analytic;
                worst.numeric = numeric;
            }
            report.coordinates += 1;
        }
        report.max_relative_error = report.max_relative_error.max(worst.relative_error);
        report.per_param.push(worst);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::matrix::Matrix;

    #[test]
    fn quadratic_and_linear() {
        let mut ps = ParamSet::<f64>::new();
        let id = ps.insert("x", Matrix::from_f64(1, 3, &[0.5, -1.5, 2.0]));
        let quad = gradient_check(
            &mut ps,
            |t, p| {
                let x = t.param(p, id);
                let sq = t.mul(x, x);
                Ok(t.sum_all(sq))
            },
            1e-5,
            Sampling::All,
        )
        .unwrap();
        assert!(quad.max_relative_error < 1e-8, "{quad:?}");

        let lin = gradient_check(
            &mut ps,
            |t, p| {
                let x = t.param(p, id);
                let s = t.scale(x, 3.0);
                Ok(t.sum_all(s))
            },
            1e-5,
            Sampling::All,
        )
        .unwrap();
        assert!(lin.max_relative_error < 1e-9, "{lin:?}");
        assert_eq!(lin.coordinates, 3);
    }

    #[test]
    fn extended_reference_on_cubic() {
        let mut ps = ParamSet::<f64>::new();
        let id = ps.insert("x", Matrix::from_f64(1, 2, &[0.3, -2.0]));
        let report = gradient_check_extended(
            &mut ps,
            |t, p| {
                let x = t.param(p, id);
                let sq = t.mul(x, x);
                let cube = t.mul(sq, x);
                Ok(t.sum_all(cube))
            },
            |t, p| {
                let x = t.param(p, id);
                let sq = t.mul(x, x);
                let cube = t.mul(sq, x);
                Ok(t.sum_all(cube))
            },
            1e-5,
            Sampling::All,
        )
        .unwrap();
        // central-difference truncation error is ε² relative to 3x²
        assert!(report.max_relative_error < 1e-9, "{report:?}");
    }

    #[test]
    fn non_finite_loss_is_an_error() {
        let mut ps = ParamSet::<f64>::new();
        let id = ps.insert("x", Matrix::from_f64(1, 1, &[0.0]));
        let r = gradient_check(
            &mut ps,
            |t, p| {
                let x = t.param(p, id);
                let l = t.scale(x, f64::INFINITY);
                Ok(t.sum_all(l))
            },
            1e-5,
            Sampling::All,
        );
        assert!(r.is_err());
    }
}
