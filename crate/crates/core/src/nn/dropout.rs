use rand::Rng;

use super::float::Float;
use super::tape::{Tape, Var};
use super::NnError;

fn check_rate(rate: f64) -> Result<(), NnError> {
    if (0.0..1.0).contains(&rate) {
        Ok(())
    } else {
        Err(NnError::Contract(format!("dropout rate {rate} outside [0, 1)")))
    }
}

/// Inverted-dropout mask: each entry is 0 with probability `rate`,
/// otherwise `1 / (1 − rate)`.
pub fn dropout_mask<F: Float, R: Rng + ?Sized>(len: usize, rate: f64, rng: &mut R) -> Result<Vec<F>, NnError> {
    check_rate(rate)?;
    let keep = F::from_f64_lossy(1.0 / (1.0 - rate));
    Ok((0..len)
        .map(|_| if rng.gen::<f64>() < rate { F::zero() } else { keep })
        .collect())
}

/// Dropout on a plain vector. Identity when `training` is false or the
/// rate is zero.
pub fn dropout<F: Float, R: Rng + ?Sized>(x: &[F], rate: f64, training: bool, rng: &mut R) -> Result<Vec<F>, NnError> {
    check_rate(rate)?;
    if !training || rate == 0.0 {
        return Ok(x.to_vec());
    }
    let mask = dropout_mask::<F, R>(x.len(), rate, rng)?;
    Ok(x.iter().zip(mask).map(|(&a, m)| a * m).collect())
}

/// Dropout of a tape value; `None` means inference mode.
pub fn dropout_var<F: Float, R: Rng + ?Sized>(
    tape: &mut Tape<F>,
    x: Var,
    rate: f64,
    rng: Option<&mut R>,
) -> Result<Var, NnError> {
    check_rate(rate)?;
    match rng {
        Some(rng) if rate > 0.0 => {
            let mask = dropout_mask(tape.value(x).len(), rate, rng)?;
            Ok(tape.mul_const(x, mask))
        }
        _ => Ok(x),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = vec![1.0f64, -2.0, 3.0];
        assert_eq!(dropout(&x, 0.0, true, &mut rng).unwrap(), x);
        assert_eq!(dropout(&x, 0.7, false, &mut rng).unwrap(), x);
        assert!(dropout(&x, 1.0, true, &mut rng).is_err());
        assert!(dropout(&x, -0.1, false, &mut rng).is_err());
    }

    #[test]
    fn monte_carlo_rate_and_expectation() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 100_000;
        let x = vec![1.0f64; n];
        let y = dropout(&x, 0.5, true, &mut rng).unwrap();
        let survived = y.iter().filter(|&&v| v != 0.0).count() as f64 / n as f64;
        assert!((survived - 0.5).abs() < 0.01, "survival {survived}");
        let mean = y.iter().sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
    }
}
