//! The black-box classifier contract consumed by every search stage.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tabular::Instance;

/// A classifier producing a probability vector per instance.
///
/// Implementations must be deterministic: the same instance always maps to
/// the same probabilities.
pub trait Predictor<T: Scalar>: Sync {
    fn n_classes(&self) -> usize;

    /// Probability vectors for a batch of instances.
    fn predict_batch(&self, xs: &[Instance<T>]) -> Result<Vec<Vec<T>>>;

    fn predict_proba(&self, x: &Instance<T>) -> Result<Vec<T>> {
        self.predict_batch(std::slice::from_ref(x))?
            .pop()
            .ok_or_else(|| Error::InvalidData("predictor returned no output".into()))
    }

    /// Probability of `class` for every instance in the batch.
    fn class_probabilities(&self, xs: &[Instance<T>], class: usize) -> Result<Vec<T>> {
        if class >= self.n_classes() {
            return Err(Error::InvalidQuery(format!(
                "class {class} out of range for a {}-class predictor",
                self.n_classes()
            )));
        }
        Ok(self.predict_batch(xs)?.into_iter().map(|p| p[class]).collect())
    }

    fn class_probability(&self, x: &Instance<T>, class: usize) -> Result<T> {
        Ok(self.class_probabilities(std::slice::from_ref(x), class)?[0])
    }
}

/// Binary predictor backed by a closure returning `P(class 1 | x)`.
pub struct FnPredictor<F> {
    f: F,
}

impl<F> FnPredictor<F> {
    pub fn new(f: F) -> Self {
        Self { f }
    }
}

impl<T, F> Predictor<T> for FnPredictor<F>
where
    T: Scalar,
    F: Fn(&Instance<T>) -> T + Sync,
{
    fn n_classes(&self) -> usize {
        2
    }

    fn predict_batch(&self, xs: &[Instance<T>]) -> Result<Vec<Vec<T>>> {
        Ok(xs
            .iter()
            .map(|x| {
                let p1 = (self.f)(x).max(T::zero()).min(T::one());
                vec![T::one() - p1, p1]
            })
            .collect())
    }
}

impl<T: Scalar, P: Predictor<T> + ?Sized> Predictor<T> for &P {
    fn n_classes(&self) -> usize {
        (**self).n_classes()
    }

    fn predict_batch(&self, xs: &[Instance<T>]) -> Result<Vec<Vec<T>>> {
        (**self).predict_batch(xs)
    }
}
