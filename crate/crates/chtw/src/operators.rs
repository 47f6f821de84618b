//! Evaluation of declared operators: W-carrier transformations and the
//! threshold/rate control entries. Operators map a field on an input space to
//! a field on an output space; the two spaces may differ for const-deposit
//! and linear-kernel operators.

use std::sync::Arc;

use thiserror::Error;

use crate::field::Field;
use crate::model::{AggregateMode, OperatorSpec};
use crate::space::{same_space, Space};

#[derive(Debug, Error)]
pub enum OperatorError {
    #[error("gain requires identical input and output spaces, got '{input}' and '{output}'")]
    GainSpaceMismatch { input: String, output: String },
    #[error("const-deposit field lives on space '{got}', expected output space '{expected}'")]
    DepositSpaceMismatch { got: String, expected: String },
    #[error("kernel entry ({row}, {col}) is outside the {rows}x{cols} shape of the declared spaces")]
    KernelShape {
        row: u32,
        col: u32,
        rows: usize,
        cols: usize,
    },
    #[error("operator input lives on space '{got}', expected '{expected}'")]
    InputSpaceMismatch { got: String, expected: String },
    #[error("contribution lives on space '{got}', expected '{expected}'")]
    ContributionSpaceMismatch { got: String, expected: String },
}

/// Check an operator spec against the spaces it is attached to.
pub fn check_spec(
    spec: &OperatorSpec,
    input: &Arc<Space>,
    output: &Arc<Space>,
) -> Result<(), OperatorError> {
    match spec {
        OperatorSpec::Gain { .. } => {
            if !same_space(input, output) {
                return Err(OperatorError::GainSpaceMismatch {
                    input: input.id().to_string(),
                    output: output.id().to_string(),
                });
            }
        }
        OperatorSpec::ConstDeposit { deposit, .. } => {
            if !same_space(deposit.space(), output) {
                return Err(OperatorError::DepositSpaceMismatch {
                    got: deposit.space().id().to_string(),
                    expected: output.id().to_string(),
                });
            }
        }
        OperatorSpec::LinearKernel { kernel } => {
            let rows = output.total_cells();
            let cols = input.total_cells();
            for &(r, c, _) in kernel.triplets() {
                if r as usize >= rows || c as usize >= cols {
                    return Err(OperatorError::KernelShape {
                        row: r,
                        col: c,
                        rows,
                        cols,
                    });
                }
            }
        }
    }
    Ok(())
}

/// An operator spec with its endpoint spaces resolved.
#[derive(Debug, Clone)]
pub struct OperatorInstance<'a> {
    spec: &'a OperatorSpec,
    input: &'a Arc<Space>,
    output: &'a Arc<Space>,
}

impl<'a> OperatorInstance<'a> {
    pub fn new(
        spec: &'a OperatorSpec,
        input: &'a Arc<Space>,
        output: &'a Arc<Space>,
    ) -> Result<Self, OperatorError> {
        check_spec(spec, input, output)?;
        Ok(OperatorInstance { spec, input, output })
    }

    pub fn spec(&self) -> &OperatorSpec {
        self.spec
    }

    pub fn input_space(&self) -> &Arc<Space> {
        self.input
    }

    pub fn output_space(&self) -> &Arc<Space> {
        self.output
    }

    /// Evaluate the operator on `input`, producing a field on the output space.
    pub fn apply(&self, input: &Field) -> Result<Field, OperatorError> {
        if !same_space(input.space(), self.input) {
            return Err(OperatorError::InputSpaceMismatch {
                got: input.space().id().to_string(),
                expected: self.input.id().to_string(),
            });
        }
        let out = match self.spec {
            OperatorSpec::Gain { g } => {
                let mut values = input.values().to_vec();
                for v in &mut values {
                    *v *= g;
                }
                raw_field(self.output.clone(), values)
            }
            OperatorSpec::ConstDeposit { deposit, mode } => match mode {
                AggregateMode::Any => {
                    if input.values().iter().any(|&v| v > 0.0) {
                        deposit.clone()
                    } else {
                        Field::zeros(self.output.clone())
                    }
                }
                AggregateMode::Mean => {
                    let mut sum = 0.0;
                    for &v in input.values() {
                        sum += v;
                    }
                    let scale = sum / input.len() as f64;
                    let mut values = deposit.values().to_vec();
                    for v in &mut values {
                        *v *= scale;
                    }
                    raw_field(self.output.clone(), values)
                }
            },
            OperatorSpec::LinearKernel { kernel } => {
                let mut values = vec![0.0; self.output.total_cells()];
                // Triplets are sorted row-major; accumulation order is fixed.
                for &(r, c, v) in kernel.triplets() {
                    values[r as usize] += v * input.values()[c as usize];
                }
                raw_field(self.output.clone(), values)
            }
        };
        Ok(out)
    }
}

// Operator outputs may legitimately hold intermediate values the Field
// constructor would reject only if non-finite; keep the length invariant and
// the -0.0 canonicalization without re-checking finiteness (the kernel checks
// committed state at step boundaries).
fn raw_field(space: Arc<Space>, mut values: Vec<f64>) -> Field {
    for v in &mut values {
        if *v == 0.0 {
            *v = 0.0;
        }
    }
    Field::from_raw(space, values)
}

/// Pointwise sum of operator outputs, evaluated and accumulated in list order.
/// An empty list yields the zero field on `output`.
pub fn sum_contributions(
    output: &Arc<Space>,
    parts: &[(OperatorInstance<'_>, &Field)],
) -> Result<Field, OperatorError> {
    let mut acc = Field::zeros(output.clone());
    for (op, input) in parts {
        if !same_space(op.output_space(), output) {
            return Err(OperatorError::ContributionSpaceMismatch {
                got: op.output_space().id().to_string(),
                expected: output.id().to_string(),
            });
        }
        let part = op.apply(input)?;
        let acc_values = acc.values_mut();
        for (a, p) in acc_values.iter_mut().zip(part.values()) {
            *a += p;
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SparseKernel;
    use crate::space::Axis;

    fn space(id: &str, cells: usize) -> Arc<Space> {
        Space::new(id, vec![Axis::new(0.0, 1.0, cells).unwrap()]).unwrap()
    }

    #[test]
    fn gain_is_the_linear_same_space_case() {
        let s = space("X", 1);
        let spec = OperatorSpec::Gain { g: 0.1 };
        let op = OperatorInstance::new(&spec, &s, &s).unwrap();
        let m = Field::constant(s.clone(), 13.0).unwrap();
        let out = op.apply(&m).unwrap();
        assert_eq!(out.values(), &[0.1 * 13.0]);
        assert!((out.values()[0] - 1.3).abs() < 1e-12);
    }

    #[test]
    fn gain_one_is_identity() {
        let s = space("X", 3);
        let spec = OperatorSpec::Gain { g: 1.0 };
        let op = OperatorInstance::new(&spec, &s, &s).unwrap();
        let m = Field::new(s, vec![0.5, 0.0, 7.25]).unwrap();
        assert_eq!(op.apply(&m).unwrap().values(), m.values());
    }

    #[test]
    fn gain_rejects_distinct_spaces() {
        let a = space("A", 1);
        let b = space("B", 1);
        let spec = OperatorSpec::Gain { g: 1.0 };
        assert!(OperatorInstance::new(&spec, &a, &b).is_err());
    }

    #[test]
    fn const_deposit_any_crosses_spaces() {
        let x = space("X", 1);
        let y = space("Y", 2);
        let spec = OperatorSpec::ConstDeposit {
            deposit: Field::constant(y.clone(), 2.0).unwrap(),
            mode: AggregateMode::Any,
        };
        let op = OperatorInstance::new(&spec, &x, &y).unwrap();
        let silent = Field::constant(x.clone(), 0.0).unwrap();
        assert_eq!(op.apply(&silent).unwrap().values(), &[0.0, 0.0]);
        let active = Field::constant(x, 1.0).unwrap();
        assert_eq!(op.apply(&active).unwrap().values(), &[2.0, 2.0]);
    }

    #[test]
    fn const_deposit_mean_scales() {
        let x = space("X", 4);
        let y = space("Y", 1);
        let spec = OperatorSpec::ConstDeposit {
            deposit: Field::constant(y.clone(), 8.0).unwrap(),
            mode: AggregateMode::Mean,
        };
        let op = OperatorInstance::new(&spec, &x, &y).unwrap();
        let half = Field::new(x, vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(op.apply(&half).unwrap().values(), &[4.0]);
    }

    #[test]
    fn kernel_applies_linear_map() {
        let x = space("X", 2);
        let y = space("Y", 3);
        let kernel = SparseKernel::new(vec![(0, 0, 1.0), (1, 1, 2.0), (2, 0, 0.5), (2, 1, 0.5)])
            .unwrap();
        let spec = OperatorSpec::LinearKernel { kernel };
        let op = OperatorInstance::new(&spec, &x, &y).unwrap();
        let f = Field::new(x, vec![4.0, 6.0]).unwrap();
        assert_eq!(op.apply(&f).unwrap().values(), &[4.0, 12.0, 5.0]);
    }

    #[test]
    fn kernel_shape_is_checked() {
        let x = space("X", 2);
        let y = space("Y", 2);
        let kernel = SparseKernel::new(vec![(5, 0, 1.0)]).unwrap();
        let spec = OperatorSpec::LinearKernel { kernel };
        assert!(OperatorInstance::new(&spec, &x, &y).is_err());
    }

    #[test]
    fn contributions_sum_in_declaration_order() {
        let s = space("X", 1);
        let g1 = OperatorSpec::Gain { g: 0.5 };
        let g2 = OperatorSpec::Gain { g: 0.25 };
        let m1 = Field::constant(s.clone(), 2.0).unwrap();
        let m2 = Field::constant(s.clone(), 4.0).unwrap();
        let parts = vec![
            (OperatorInstance::new(&g1, &s, &s).unwrap(), &m1),
            (OperatorInstance::new(&g2, &s, &s).unwrap(), &m2),
        ];
        let sum = sum_contributions(&s, &parts).unwrap();
        assert_eq!(sum.values(), &[2.0]);
    }

    #[test]
    fn empty_contribution_list_is_zero() {
        let s = space("X", 3);
        let sum = sum_contributions(&s, &[]).unwrap();
        assert_eq!(sum.values(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn rate_contribution_matches_hand_evaluation() {
        // Two linear controllers feeding one T-brane: 0.1*11 + 0.1*17 = 2.8.
        let s = space("X", 1);
        let g = OperatorSpec::Gain { g: 0.1 };
        let mi = Field::constant(s.clone(), 11.0).unwrap();
        let mq = Field::constant(s.clone(), 17.0).unwrap();
        let parts = vec![
            (OperatorInstance::new(&g, &s, &s).unwrap(), &mi),
            (OperatorInstance::new(&g, &s, &s).unwrap(), &mq),
        ];
        let sum = sum_contributions(&s, &parts).unwrap();
        assert_eq!(sum.values()[0], 0.1 * 11.0 + 0.1 * 17.0);
        assert!((sum.values()[0] - 2.8).abs() < 1e-12);
    }

    #[test]
    fn linearity_of_gain_and_kernel() {
        let s = space("X", 3);
        let f = Field::new(s.clone(), vec![1.0, -2.0, 3.5]).unwrap();
        let g = Field::new(s.clone(), vec![0.25, 4.0, -1.0]).unwrap();
        let (a, b) = (2.0, -0.5);
        let combo_values: Vec<f64> = f
            .values()
            .iter()
            .zip(g.values())
            .map(|(x, y)| a * x + b * y)
            .collect();
        let combo = Field::new(s.clone(), combo_values).unwrap();

        let kernel =
            SparseKernel::new(vec![(0, 0, 1.0), (0, 2, -2.0), (1, 1, 3.0), (2, 2, 0.5)]).unwrap();
        for spec in [OperatorSpec::Gain { g: 1.75 }, OperatorSpec::LinearKernel { kernel }] {
            let op = OperatorInstance::new(&spec, &s, &s).unwrap();
            let lhs = op.apply(&combo).unwrap();
            let fa = op.apply(&f).unwrap();
            let gb = op.apply(&g).unwrap();
            for ((l, x), y) in lhs.values().iter().zip(fa.values()).zip(gb.values()) {
                let rhs = a * x + b * y;
                let scale = l.abs().max(rhs.abs()).max(1.0);
                assert!((l - rhs).abs() <= 1e-12 * scale, "{l} vs {rhs}");
            }
        }
    }
}
