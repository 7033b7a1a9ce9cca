use crate::objective::{Form, Model};
use crate::Real;

/// A [`Model`] whose entries can be read and written from several threads
/// at once. Every access is a relaxed atomic load or store of the value's
/// bit pattern; the ordering contract is the one the async variants
/// document, not sequential consistency.
pub struct SharedModel<T: Real> {
    pub form: Form,
    pub weights: Vec<T::Atomic>,
    pub shared: Vec<T::Atomic>,
}

impl<T: Real> SharedModel<T> {
    pub fn from_model(model: &Model<T>) -> Self {
        SharedModel {
            form: model.form,
            weights: model.weights.iter().map(|&v| T::new_atomic(v)).collect(),
            shared: model.shared.iter().map(|&v| T::new_atomic(v)).collect(),
        }
    }

    /// Snapshot of the current contents.
    pub fn to_model(&self) -> Model<T> {
        Model {
            form: self.form,
            weights: self.weights.iter().map(T::load).collect(),
            shared: self.shared.iter().map(T::load).collect(),
        }
    }

    /// Copies the current contents into an existing model of the same shape.
    pub fn write_into(&self, model: &mut Model<T>) {
        for (dst, src) in model.weights.iter_mut().zip(&self.weights) {
            *dst = T::load(src);
        }
        for (dst, src) in model.shared.iter_mut().zip(&self.shared) {
            *dst = T::load(src);
        }
    }
}
