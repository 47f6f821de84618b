//! Dense field values over a space: real-valued fields and binary firing fields.

use std::sync::Arc;

use crate::model::ModelError;
use crate::space::{same_space, Space};

/// A dense real-valued field: one `f64` per cell of its space, row-major.
///
/// Construction guarantees the value count matches the space and that every
/// value is finite. Negative zero is canonicalized to positive zero so that
/// bit-level trace comparison is well defined.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    space: Arc<Space>,
    values: Vec<f64>,
}

impl Field {
    pub fn new(space: Arc<Space>, mut values: Vec<f64>) -> Result<Self, ModelError> {
        if values.len() != space.total_cells() {
            return Err(ModelError::FieldLength {
                space: space.id().to_string(),
                expected: space.total_cells(),
                got: values.len(),
            });
        }
        for v in &mut values {
            if !v.is_finite() {
                return Err(ModelError::NonFiniteValue {
                    space: space.id().to_string(),
                });
            }
            if *v == 0.0 {
                *v = 0.0; // -0.0 -> +0.0
            }
        }
        Ok(Field { space, values })
    }

    pub fn constant(space: Arc<Space>, value: f64) -> Result<Self, ModelError> {
        let n = space.total_cells();
        Field::new(space, vec![value; n])
    }

    pub fn zeros(space: Arc<Space>) -> Self {
        let n = space.total_cells();
        Field {
            space,
            values: vec![0.0; n],
        }
    }

    /// Construction without the finiteness check, for engine intermediates.
    /// Overflow surfaces at the kernel's step-boundary checks instead.
    pub(crate) fn from_raw(space: Arc<Space>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), space.total_cells());
        Field { space, values }
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mutable access for the stepping engines. Callers must keep values
    /// finite; the kernel re-checks at step boundaries.
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// True when every value compares equal to the first one.
    pub fn is_uniform(&self) -> bool {
        self.values.windows(2).all(|w| w[0] == w[1])
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// A field with entries restricted to {0, 1}; carries firing conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryField {
    space: Arc<Space>,
    values: Vec<u8>,
}

impl BinaryField {
    pub fn new(space: Arc<Space>, values: Vec<u8>) -> Result<Self, ModelError> {
        if values.len() != space.total_cells() {
            return Err(ModelError::FieldLength {
                space: space.id().to_string(),
                expected: space.total_cells(),
                got: values.len(),
            });
        }
        if values.iter().any(|&v| v > 1) {
            return Err(ModelError::NotBinary {
                space: space.id().to_string(),
            });
        }
        Ok(BinaryField { space, values })
    }

    pub fn zeros(space: Arc<Space>) -> Self {
        let n = space.total_cells();
        BinaryField {
            space,
            values: vec![0; n],
        }
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [u8] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The same field as reals (0.0 / 1.0), e.g. as operator input.
    pub fn to_field(&self) -> Field {
        Field {
            space: self.space.clone(),
            values: self.values.iter().map(|&v| v as f64).collect(),
        }
    }
}

/// Both fields live on the same space (structurally).
pub fn fields_compatible(a: &Field, b: &Field) -> bool {
    same_space(a.space(), b.space())
}
