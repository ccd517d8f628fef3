use rand::Rng;

use super::float::Float;
use super::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub usize);

/// A learnable tensor and its accumulated gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Param<F> {
    pub name: String,
    pub value: Matrix<F>,
    pub grad: Matrix<F>,
}

/// Ordered collection of named parameters. Order is registration order and
/// is what checkpoints and optimizers iterate over.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSet<F> {
    params: Vec<Param<F>>,
}

#[derive(Debug, Clone, Copy)]
pub enum Init {
    Zeros,
    Constant(f64),
    /// Uniform in ±sqrt(6 / (fan_in + fan_out)), with fan_in = cols and
    /// fan_out = rows.
    Glorot,
}

impl<F: Float> ParamSet<F> {
    pub fn new() -> Self {
        Self { params: Vec::new() }
    }

    pub fn add<R: Rng>(
        &mut self,
        name: impl Into<String>,
        rows: usize,
        cols: usize,
        init: Init,
        rng: &mut R,
    ) -> ParamId {
        let value = match init {
            Init::Zeros => Matrix::zeros(rows, cols),
            Init::Constant(c) => Matrix::filled(rows, cols, F::from_f64_lossy(c)),
            Init::Glorot => {
                let bound = (6.0 / (rows + cols) as f64).sqrt();
                let data = (0..rows * cols)
                    .map(|_| F::from_f64_lossy(rng.gen_range(-bound..bound)))
                    .collect();
                Matrix::from_vec(rows, cols, data)
            }
        };
        self.insert(name, value)
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Matrix<F>) -> ParamId {
        let (r, c) = value.shape();
        self.params.push(Param {
            name: name.into(),
            value,
            grad: Matrix::zeros(r, c),
        });
        ParamId(self.params.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Param<F> {
        &self.params[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Param<F> {
        &mut self.params[id.0]
    }

    pub fn value(&self, id: ParamId) -> &Matrix<F> {
        &self.params[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Matrix<F> {
        &mut self.params[id.0].value
    }

    pub fn grad(&self, id: ParamId) -> &Matrix<F> {
        &self.params[id.0].grad
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Param<F>)> {
        self.params.iter().enumerate().map(|(i, p)| (ParamId(i), p))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Param<F>> {
        self.params.iter_mut()
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.params {
            p.grad.fill(F::zero());
        }
    }

    pub fn num_scalars(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    pub fn shapes(&self) -> Vec<(String, (usize, usize))> {
        self.params
            .iter()
            .map(|p| (p.name.clone(), p.value.shape()))
            .collect()
    }

    /// Copy of the values in another float type; gradients start at zero.
    pub fn convert<G: Float>(&self) -> ParamSet<G> {
        let mut out = ParamSet::new();
        for p in &self.params {
            let data = p.value.data().iter().map(|x| G::from_f64_lossy(x.as_f64())).collect();
            out.insert(p.name.clone(), Matrix::from_vec(p.value.rows(), p.value.cols(), data));
        }
        out
    }

    /// Bit-level equality of all values (names and shapes included).
    pub fn bit_identical(&self, other: &ParamSet<F>) -> bool {
        self.params.len() == other.params.len()
            && self.params.iter().zip(&other.params).all(|(a, b)| {
                a.name == b.name
                    && a.value.shape() == b.value.shape()
                    && a
                        .value
                        .data()
                        .iter()
                        .zip(b.value.data())
                        .all(|(x, y)| x.bits() == y.bits())
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn glorot_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut ps = ParamSet::<f64>::new();
        let id = ps.add("w", 40, 20, Init::Glorot, &mut rng);
        let bound = (6.0f64 / 60.0).sqrt();
        assert!(ps.value(id).data().iter().all(|x| x.abs() <= bound));
        assert_eq!(ps.find("w"), Some(id));
        assert_eq!(ps.num_scalars(), 800);
    }
}
