//! Discretization domains: named n-dimensional grids that all fields live on.

use std::sync::Arc;

use crate::model::ModelError;

/// Default upper bound on the total cell count of a single space.
pub const DEFAULT_MAX_CELLS: usize = 1 << 24;

/// One axis of a space: a closed interval split into `cells` equal cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub cells: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, cells: usize) -> Result<Self, ModelError> {
        if !min.is_finite() || !max.is_finite() || max <= min {
            return Err(ModelError::BadAxis {
                reason: format!("axis bounds must be finite with max > min, got {min}:{max}"),
            });
        }
        if cells < 1 {
            return Err(ModelError::BadAxis {
                reason: "axis must have at least one cell".into(),
            });
        }
        Ok(Axis { min, max, cells })
    }

    /// Center coordinate of cell `idx` along this axis.
    pub fn center(&self, idx: usize) -> f64 {
        let width = (self.max - self.min) / self.cells as f64;
        self.min + (idx as f64 + 0.5) * width
    }
}

/// A named n-dimensional grid. All mark, threshold, rate and firing fields
/// reference a space; pointwise operations require the same space on both sides.
///
/// Cells are enumerated row-major in axis declaration order: the last axis
/// varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Space {
    id: String,
    axes: Vec<Axis>,
}

impl Space {
    pub fn new(id: impl Into<String>, axes: Vec<Axis>) -> Result<Arc<Self>, ModelError> {
        Self::with_cell_limit(id, axes, DEFAULT_MAX_CELLS)
    }

    pub fn with_cell_limit(
        id: impl Into<String>,
        axes: Vec<Axis>,
        max_cells: usize,
    ) -> Result<Arc<Self>, ModelError> {
        let id = id.into();
        if axes.is_empty() {
            return Err(ModelError::BadAxis {
                reason: format!("space '{id}' must have at least one axis"),
            });
        }
        let mut total: usize = 1;
        for axis in &axes {
            total = total.checked_mul(axis.cells).unwrap_or(usize::MAX);
        }
        if total > max_cells {
            return Err(ModelError::TooManyCells {
                space: id,
                cells: total,
                limit: max_cells,
            });
        }
        Ok(Arc::new(Space { id, axes }))
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn total_cells(&self) -> usize {
        self.axes.iter().map(|a| a.cells).product()
    }

    /// Multi-index of the cell at flat index `flat` (row-major, last axis fastest).
    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0usize; self.dims()];
        for (i, axis) in self.axes.iter().enumerate().rev() {
            idx[i] = flat % axis.cells;
            flat /= axis.cells;
        }
        idx
    }

    /// Coordinates of the center of the cell at flat index `flat`.
    pub fn cell_center(&self, flat: usize) -> Vec<f64> {
        self.unflatten(flat)
            .iter()
            .zip(&self.axes)
            .map(|(&i, a)| a.center(i))
            .collect()
    }
}

/// Structural equality of the two spaces a pointwise operation would pair up.
pub fn same_space(a: &Arc<Space>, b: &Arc<Space>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}
