//! Domain types for CHTW(R) nets and whole-net structural validation.
//!
//! A net is a bipartite graph of container branes (C) and transition branes (T)
//! joined by threshold carriers (C -> T) and transformation carriers (T -> C),
//! plus two control matrices that let C-brane resources drive thresholds and
//! uptake rates. Branes keep their declaration order; every matrix, trace and
//! snapshot index is derived from that order.

use std::collections::HashSet;
use std::sync::Arc;

use thiserror::Error;

use crate::field::Field;
use crate::space::{same_space, Space};

/// Errors raised while constructing model values.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("{reason}")]
    BadAxis { reason: String },
    #[error("space '{space}' exceeds the cell limit: {cells} > {limit}")]
    TooManyCells {
        space: String,
        cells: usize,
        limit: usize,
    },
    #[error("field on space '{space}' has {got} values, expected {expected}")]
    FieldLength {
        space: String,
        expected: usize,
        got: usize,
    },
    #[error("field on space '{space}' contains a non-finite value")]
    NonFiniteValue { space: String },
    #[error("binary field on space '{space}' contains a value outside {{0, 1}}")]
    NotBinary { space: String },
}

/// Simulation mode: `Chtw` freezes thresholds and rates, `Chtwr` lets the
/// control matrices update them each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Chtw,
    Chtwr,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Chtw => "chtw",
            Mode::Chtwr => "chtwr",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "chtw" => Ok(Mode::Chtw),
            "chtwr" => Ok(Mode::Chtwr),
            other => Err(format!("unknown mode '{other}', expected chtw or chtwr")),
        }
    }
}

/// Container brane: holds a distributed resource (its mark field).
#[derive(Debug, Clone, PartialEq)]
pub struct CBrane {
    pub id: String,
    pub space: Arc<Space>,
    pub mark: Field,
}

/// Transition brane: fires where resource exceeds threshold and uptake rate.
#[derive(Debug, Clone, PartialEq)]
pub struct TBrane {
    pub id: String,
    pub space: Arc<Space>,
    pub rate: Field,
}

/// Threshold carrier from a C-brane to a T-brane, with its threshold field.
#[derive(Debug, Clone, PartialEq)]
pub struct HCarrier {
    pub from: usize,
    pub to: usize,
    pub threshold: Field,
}

/// How a constant-deposit operator aggregates its input into a scale factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregateMode {
    /// Scale 1 if any input cell is strictly positive, else 0.
    Any,
    /// Scale by the mean of the input values.
    Mean,
}

impl AggregateMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            AggregateMode::Any => "any",
            AggregateMode::Mean => "mean",
        }
    }
}

/// Sparse matrix stored as (row, col, value) triplets, sorted row-major.
/// Row count is the output cell count, column count the input cell count;
/// both come from the spaces the operator is attached to.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseKernel {
    triplets: Vec<(u32, u32, f64)>,
}

impl SparseKernel {
    /// Sorts the triplets row-major. Duplicate (row, col) pairs and
    /// non-finite values are rejected.
    pub fn new(mut triplets: Vec<(u32, u32, f64)>) -> Result<Self, String> {
        if let Some(t) = triplets.iter().find(|t| !t.2.is_finite()) {
            return Err(format!("kernel entry ({}, {}) is not finite", t.0, t.1));
        }
        triplets.sort_by_key(|t| (t.0, t.1));
        if let Some(w) = triplets.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(format!("duplicate kernel entry ({}, {})", w[0].0, w[0].1));
        }
        Ok(SparseKernel { triplets })
    }

    pub fn triplets(&self) -> &[(u32, u32, f64)] {
        &self.triplets
    }

    pub fn max_row(&self) -> Option<u32> {
        self.triplets.iter().map(|t| t.0).max()
    }

    pub fn max_col(&self) -> Option<u32> {
        self.triplets.iter().map(|t| t.1).max()
    }
}

/// A declared transformation attached to a W-carrier or a control entry.
#[derive(Debug, Clone, PartialEq)]
pub enum OperatorSpec {
    /// Pointwise scaling; input and output spaces must coincide.
    Gain { g: f64 },
    /// Deposit a fixed field on the output space, scaled by an aggregate of
    /// the input field.
    ConstDeposit { deposit: Field, mode: AggregateMode },
    /// General linear map between the flattened input and output fields.
    LinearKernel { kernel: SparseKernel },
}

impl OperatorSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            OperatorSpec::Gain { .. } => "gain",
            OperatorSpec::ConstDeposit { .. } => "const-deposit",
            OperatorSpec::LinearKernel { .. } => "linear-kernel",
        }
    }
}

/// Transformation carrier from a T-brane to a C-brane: turns the firing field
/// on the T-brane's space into a deposit on the C-brane's space.
#[derive(Debug, Clone, PartialEq)]
pub struct WCarrier {
    pub from: usize,
    pub to: usize,
    pub op: OperatorSpec,
}

/// One control matrix entry: `src` C-brane's mark drives a parameter of `dst`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlEntry {
    pub src: usize,
    pub dst: usize,
    pub op: OperatorSpec,
}

/// The two control matrices. Entries keep declaration order, which fixes the
/// order contributions are summed in.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ControlMatrices {
    /// Threshold control: (source C, target C). The increment is broadcast to
    /// every H-carrier leaving the target brane.
    pub alpha: Vec<ControlEntry>,
    /// Rate control: (source C, target T).
    pub gamma: Vec<ControlEntry>,
}

/// A complete CHTW(R)-system.
#[derive(Debug, Clone, PartialEq)]
pub struct Net {
    pub mode: Mode,
    pub spaces: Vec<Arc<Space>>,
    pub cbranes: Vec<CBrane>,
    pub tbranes: Vec<TBrane>,
    pub hcarriers: Vec<HCarrier>,
    pub wcarriers: Vec<WCarrier>,
    pub controls: ControlMatrices,
}

impl Net {
    pub fn empty(mode: Mode) -> Self {
        Net {
            mode,
            spaces: Vec::new(),
            cbranes: Vec::new(),
            tbranes: Vec::new(),
            hcarriers: Vec::new(),
            wcarriers: Vec::new(),
            controls: ControlMatrices::default(),
        }
    }

    pub fn cbrane_index(&self, id: &str) -> Option<usize> {
        self.cbranes.iter().position(|b| b.id == id)
    }

    pub fn tbrane_index(&self, id: &str) -> Option<usize> {
        self.tbranes.iter().position(|b| b.id == id)
    }

    /// H-carrier indices leaving C-brane `c`, in declaration order.
    pub fn hcarriers_from(&self, c: usize) -> impl Iterator<Item = usize> + '_ {
        self.hcarriers
            .iter()
            .enumerate()
            .filter(move |(_, h)| h.from == c)
            .map(|(i, _)| i)
    }

    /// H-carrier indices entering T-brane `t`, in declaration order.
    pub fn hcarriers_into(&self, t: usize) -> impl Iterator<Item = usize> + '_ {
        self.hcarriers
            .iter()
            .enumerate()
            .filter(move |(_, h)| h.to == t)
            .map(|(i, _)| i)
    }
}

/// Diagnostic severity. Errors make a net unusable; warnings do not.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Warning,
    Error,
}

impl Severity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Severity::Warning => "WARNING",
            Severity::Error => "ERROR",
        }
    }
}

/// The net entity a diagnostic refers to, by kind and declaration index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subject {
    Space(usize),
    CBrane(usize),
    TBrane(usize),
    HCarrier(usize),
    WCarrier(usize),
    Alpha(usize),
    Gamma(usize),
    Net,
}

/// A validation finding: severity, message and the entity it points at.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub subject: Subject,
    pub message: String,
}

impl Diagnostic {
    fn error(subject: Subject, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            subject,
            message: message.into(),
        }
    }

    fn warning(subject: Subject, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            subject,
            message: message.into(),
        }
    }
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(|d| d.severity == Severity::Error)
}

/// Check every structural invariant of the net. Returns all findings;
/// an empty error set means the net is safe to simulate.
pub fn validate(net: &Net) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let nc = net.cbranes.len();
    let nt = net.tbranes.len();

    check_unique_ids(net, &mut diags);

    for (i, b) in net.cbranes.iter().enumerate() {
        if !same_space(b.mark.space(), &b.space) {
            diags.push(Diagnostic::error(
                Subject::CBrane(i),
                format!("space mismatch: mark of C-brane '{}' is not on its space", b.id),
            ));
        }
        if b.mark.min() < 0.0 {
            diags.push(Diagnostic::error(
                Subject::CBrane(i),
                format!("C-brane '{}' has a negative initial mark value", b.id),
            ));
        }
    }
    for (i, b) in net.tbranes.iter().enumerate() {
        if !same_space(b.rate.space(), &b.space) {
            diags.push(Diagnostic::error(
                Subject::TBrane(i),
                format!("space mismatch: rate of T-brane '{}' is not on its space", b.id),
            ));
        }
        if b.rate.min() < 0.0 {
            diags.push(Diagnostic::error(
                Subject::TBrane(i),
                format!("T-brane '{}' has a negative initial rate value", b.id),
            ));
        }
    }

    let mut h_pairs = HashSet::new();
    for (i, h) in net.hcarriers.iter().enumerate() {
        if h.from >= nc || h.to >= nt {
            diags.push(Diagnostic::error(
                Subject::HCarrier(i),
                "H-carrier references a brane that does not exist",
            ));
            continue;
        }
        let c = &net.cbranes[h.from];
        let t = &net.tbranes[h.to];
        if !h_pairs.insert((h.from, h.to)) {
            diags.push(Diagnostic::error(
                Subject::HCarrier(i),
                format!("duplicate H-carrier {} -> {}", c.id, t.id),
            ));
        }
        // m, h and r are compared pointwise, so all three live on one space.
        if !same_space(&c.space, &t.space) {
            diags.push(Diagnostic::error(
                Subject::HCarrier(i),
                format!(
                    "space mismatch: H-carrier {} -> {} joins spaces '{}' and '{}'",
                    c.id,
                    t.id,
                    c.space.id(),
                    t.space.id()
                ),
            ));
        }
        if !same_space(h.threshold.space(), &c.space) {
            diags.push(Diagnostic::error(
                Subject::HCarrier(i),
                format!(
                    "space mismatch: threshold of H-carrier {} -> {} is not on space '{}'",
                    c.id,
                    t.id,
                    c.space.id()
                ),
            ));
        }
    }

    let mut w_pairs = HashSet::new();
    for (i, w) in net.wcarriers.iter().enumerate() {
        if w.from >= nt || w.to >= nc {
            diags.push(Diagnostic::error(
                Subject::WCarrier(i),
                "W-carrier references a brane that does not exist",
            ));
            continue;
        }
        let t = &net.tbranes[w.from];
        let c = &net.cbranes[w.to];
        if !w_pairs.insert((w.from, w.to)) {
            diags.push(Diagnostic::error(
                Subject::WCarrier(i),
                format!("duplicate W-carrier {} -> {}", t.id, c.id),
            ));
        }
        if let Err(msg) = crate::operators::check_spec(&w.op, &t.space, &c.space) {
            diags.push(Diagnostic::error(
                Subject::WCarrier(i),
                format!("W-carrier {} -> {}: {}", t.id, c.id, msg),
            ));
        }
    }

    let mut a_pairs = HashSet::new();
    for (i, a) in net.controls.alpha.iter().enumerate() {
        if a.src >= nc || a.dst >= nc {
            diags.push(Diagnostic::error(
                Subject::Alpha(i),
                "threshold control entry references a C-brane that does not exist",
            ));
            continue;
        }
        let src = &net.cbranes[a.src];
        let dst = &net.cbranes[a.dst];
        if !a_pairs.insert((a.src, a.dst)) {
            diags.push(Diagnostic::error(
                Subject::Alpha(i),
                format!("duplicate threshold control entry {} -> {}", src.id, dst.id),
            ));
        }
        if net.hcarriers_from(a.dst).next().is_none() {
            diags.push(Diagnostic::error(
                Subject::Alpha(i),
                format!(
                    "threshold control targets C-brane '{}' which has no outgoing H-carrier",
                    dst.id
                ),
            ));
        }
        if let Err(msg) = crate::operators::check_spec(&a.op, &src.space, &dst.space) {
            diags.push(Diagnostic::error(
                Subject::Alpha(i),
                format!("threshold control {} -> {}: {}", src.id, dst.id, msg),
            ));
        }
    }

    let mut g_pairs = HashSet::new();
    for (i, g) in net.controls.gamma.iter().enumerate() {
        if g.src >= nc || g.dst >= nt {
            diags.push(Diagnostic::error(
                Subject::Gamma(i),
                "rate control entry references a brane that does not exist",
            ));
            continue;
        }
        let src = &net.cbranes[g.src];
        let dst = &net.tbranes[g.dst];
        if !g_pairs.insert((g.src, g.dst)) {
            diags.push(Diagnostic::error(
                Subject::Gamma(i),
                format!("duplicate rate control entry {} -> {}", src.id, dst.id),
            ));
        }
        if let Err(msg) = crate::operators::check_spec(&g.op, &src.space, &dst.space) {
            diags.push(Diagnostic::error(
                Subject::Gamma(i),
                format!("rate control {} -> {}: {}", src.id, dst.id, msg),
            ));
        }
    }

    // A T-brane with no inputs never fires.
    for t in 0..nt {
        if net.hcarriers_into(t).next().is_none() {
            diags.push(Diagnostic::warning(
                Subject::TBrane(t),
                format!("T-brane '{}' has no incoming H-carrier and never fires", net.tbranes[t].id),
            ));
        }
    }

    // A C-brane that appears in no carrier and no control entry is inert.
    for c in 0..nc {
        let used = net.hcarriers.iter().any(|h| h.from == c)
            || net.wcarriers.iter().any(|w| w.to == c)
            || net.controls.alpha.iter().any(|a| a.src == c || a.dst == c)
            || net.controls.gamma.iter().any(|g| g.src == c);
        if !used {
            diags.push(Diagnostic::warning(
                Subject::CBrane(c),
                format!("C-brane '{}' is not connected to anything", net.cbranes[c].id),
            ));
        }
    }

    if net.mode == Mode::Chtw
        && (!net.controls.alpha.is_empty() || !net.controls.gamma.is_empty())
    {
        diags.push(Diagnostic::warning(
            Subject::Net,
            "control entries are declared but ignored in chtw mode",
        ));
    }

    diags
}

fn check_unique_ids(net: &Net, diags: &mut Vec<Diagnostic>) {
    let mut seen = HashSet::new();
    for (i, s) in net.spaces.iter().enumerate() {
        if !seen.insert(s.id().to_string()) {
            diags.push(Diagnostic::error(
                Subject::Space(i),
                format!("duplicate space id '{}'", s.id()),
            ));
        }
    }
    seen.clear();
    for (i, b) in net.cbranes.iter().enumerate() {
        if !seen.insert(b.id.clone()) {
            diags.push(Diagnostic::error(
                Subject::CBrane(i),
                format!("duplicate C-brane id '{}'", b.id),
            ));
        }
    }
    seen.clear();
    for (i, b) in net.tbranes.iter().enumerate() {
        if !seen.insert(b.id.clone()) {
            diags.push(Diagnostic::error(
                Subject::TBrane(i),
                format!("duplicate T-brane id '{}'", b.id),
            ));
        }
    }
}

/// A 0/1 incidence matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnMatrix {
    rows: usize,
    cols: usize,
    bits: Vec<u8>,
}

impl ConnMatrix {
    fn new(rows: usize, cols: usize) -> Self {
        ConnMatrix {
            rows,
            cols,
            bits: vec![0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.bits[r * self.cols + c] == 1
    }

    fn set(&mut self, r: usize, c: usize) {
        self.bits[r * self.cols + c] = 1;
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        self.bits.chunks(self.cols.max(1)).map(|c| c.to_vec()).collect()
    }
}

/// The (C -> T) and (T -> C) connectivity matrices, in declaration order.
pub fn connectivity(net: &Net) -> (ConnMatrix, ConnMatrix) {
    let mut s_h = ConnMatrix::new(net.cbranes.len(), net.tbranes.len());
    for h in &net.hcarriers {
        s_h.set(h.from, h.to);
    }
    let mut s_w = ConnMatrix::new(net.tbranes.len(), net.cbranes.len());
    for w in &net.wcarriers {
        s_w.set(w.from, w.to);
    }
    (s_h, s_w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::Axis;

    pub(crate) fn unit_space(id: &str) -> Arc<Space> {
        Space::new(id, vec![Axis::new(0.0, 1.0, 1).unwrap()]).unwrap()
    }

    fn single_loop_net() -> Net {
        // C1(m=5) -> H(h=2) -> T1(r=1) -> W(const-deposit 2, any) -> C1
        let s = unit_space("P");
        let mut net = Net::empty(Mode::Chtw);
        net.spaces.push(s.clone());
        net.cbranes.push(CBrane {
            id: "c1".into(),
            space: s.clone(),
            mark: Field::constant(s.clone(), 5.0).unwrap(),
        });
        net.tbranes.push(TBrane {
            id: "t1".into(),
            space: s.clone(),
            rate: Field::constant(s.clone(), 1.0).unwrap(),
        });
        net.hcarriers.push(HCarrier {
            from: 0,
            to: 0,
            threshold: Field::constant(s.clone(), 2.0).unwrap(),
        });
        net.wcarriers.push(WCarrier {
            from: 0,
            to: 0,
            op: OperatorSpec::ConstDeposit {
                deposit: Field::constant(s, 2.0).unwrap(),
                mode: AggregateMode::Any,
            },
        });
        net
    }

    #[test]
    fn empty_net_is_clean() {
        let diags = validate(&Net::empty(Mode::Chtwr));
        assert!(diags.is_empty());
    }

    #[test]
    fn space_mismatch_is_an_error() {
        let sa = unit_space("A");
        let sb = unit_space("B");
        let mut net = Net::empty(Mode::Chtw);
        net.spaces.push(sa.clone());
        net.spaces.push(sb.clone());
        net.cbranes.push(CBrane {
            id: "c".into(),
            space: sa.clone(),
            mark: Field::constant(sa.clone(), 1.0).unwrap(),
        });
        net.tbranes.push(TBrane {
            id: "t".into(),
            space: sb.clone(),
            rate: Field::constant(sb, 1.0).unwrap(),
        });
        net.hcarriers.push(HCarrier {
            from: 0,
            to: 0,
            threshold: Field::constant(sa, 1.0).unwrap(),
        });
        let diags = validate(&net);
        assert!(diags
            .iter()
            .any(|d| d.severity == Severity::Error && d.message.contains("space mismatch")));
    }

    #[test]
    fn loop_net_validates_without_warnings() {
        let diags = validate(&single_loop_net());
        assert!(diags.is_empty(), "{diags:?}");
    }

    #[test]
    fn dead_tbrane_warns() {
        let mut net = single_loop_net();
        net.hcarriers.clear();
        let diags = validate(&net);
        assert!(diags.iter().any(|d| d.severity == Severity::Warning
            && d.message.contains("never fires")));
    }

    #[test]
    fn negative_mark_is_an_error() {
        let mut net = single_loop_net();
        let s = net.cbranes[0].space.clone();
        net.cbranes[0].mark = Field::new(s, vec![-1.0]).unwrap();
        assert!(has_errors(&validate(&net)));
    }

    #[test]
    fn alpha_without_outgoing_hcarrier_is_an_error() {
        let mut net = single_loop_net();
        let s = net.spaces[0].clone();
        net.cbranes.push(CBrane {
            id: "sink".into(),
            space: s.clone(),
            mark: Field::zeros(s),
        });
        // sink has no outgoing H-carrier: targeting it has no effect.
        net.controls.alpha.push(ControlEntry {
            src: 0,
            dst: 1,
            op: OperatorSpec::Gain { g: 0.5 },
        });
        let diags = validate(&net);
        assert!(diags
            .iter()
            .any(|d| d.severity == Severity::Error && d.message.contains("no outgoing H-carrier")));
    }

    #[test]
    fn connectivity_of_loop_net() {
        let (s_h, s_w) = connectivity(&single_loop_net());
        assert_eq!(s_h.to_rows(), vec![vec![1]]);
        assert_eq!(s_w.to_rows(), vec![vec![1]]);
    }

    #[test]
    fn connectivity_of_carrierless_net() {
        let mut net = single_loop_net();
        net.hcarriers.clear();
        net.wcarriers.clear();
        let (s_h, s_w) = connectivity(&net);
        assert_eq!(s_h.to_rows(), vec![vec![0]]);
        assert_eq!(s_w.to_rows(), vec![vec![0]]);
    }

    #[test]
    fn validate_is_idempotent() {
        let net = single_loop_net();
        assert_eq!(validate(&net), validate(&net));
    }

    #[test]
    fn duplicate_ids_are_errors() {
        let mut net = single_loop_net();
        let extra = net.cbranes[0].clone();
        net.cbranes.push(extra);
        assert!(has_errors(&validate(&net)));
    }

    #[test]
    fn sparse_kernel_rejects_duplicates() {
        assert!(SparseKernel::new(vec![(0, 0, 1.0), (0, 0, 2.0)]).is_err());
        assert!(SparseKernel::new(vec![(0, 1, 1.0), (1, 0, 2.0)]).is_ok());
    }
}
