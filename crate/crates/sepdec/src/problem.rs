//! The separable program model: per-component concave objectives, coupling
//! blocks, barrier-equipped feasible sets, validation and the JSON file
//! format.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::barrier::{Barrier, BoxProduct, Hessian};
use crate::error::{Error, Result};

/// Smooth part f of a structured scalar objective phi(x) = -f(x) - gamma |x|.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SmoothPart {
    Zero,
    /// f(x) = slope * x
    Affine { slope: f64 },
    /// f(x) = exp(-rate * x) - 1
    Exp { rate: f64 },
}

impl SmoothPart {
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            SmoothPart::Zero => 0.0,
            SmoothPart::Affine { slope } => slope * x,
            SmoothPart::Exp { rate } => (-rate * x).exp() - 1.0,
        }
    }

    pub fn deriv(&self, x: f64) -> f64 {
        match *self {
            SmoothPart::Zero => 0.0,
            SmoothPart::Affine { slope } => slope,
            SmoothPart::Exp { rate } => -rate * (-rate * x).exp(),
        }
    }

    pub fn is_affine(&self) -> bool {
        matches!(self, SmoothPart::Zero | SmoothPart::Affine { .. })
    }
}

/// Structured 1-D concave objective phi(x) = -f(x) - l1_weight * |x|.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarObjective {
    pub smooth: SmoothPart,
    pub l1_weight: f64,
}

impl ScalarObjective {
    pub fn value(&self, x: f64) -> f64 {
        -self.smooth.value(x) - self.l1_weight * x.abs()
    }
}

/// Smooth concave objective over several variables, exposing value, gradient
/// and Hessian for Newton-based subproblem solves.
pub trait SmoothObjective: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &DVector<f64>) -> f64;
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;
    /// Hessian of phi (negative semidefinite for a concave objective).
    fn hessian(&self, x: &DVector<f64>) -> Hessian;
}

/// phi(x) = 0.5 x' Q x + c' x with Q negative semidefinite.
#[derive(Debug, Clone)]
pub struct ConcaveQuadratic {
    pub q: DMatrix<f64>,
    pub c: DVector<f64>,
}

impl SmoothObjective for ConcaveQuadratic {
    fn dim(&self) -> usize {
        self.c.len()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * (x.transpose() * &self.q * x)[(0, 0)] + self.c.dot(x)
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.q * x + &self.c
    }

    fn hessian(&self, _x: &DVector<f64>) -> Hessian {
        Hessian::Dense(self.q.clone())
    }
}

/// Per-component objective oracle. The structured scalar form is what the
/// benchmark generators emit; smooth multi-dimensional oracles are available
/// programmatically.
#[derive(Clone)]
pub enum Objective {
    Scalar(ScalarObjective),
    Smooth(Arc<dyn SmoothObjective>),
}

impl std::fmt::Debug for Objective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Objective::Scalar(s) => write!(f, "Scalar({s:?})"),
            Objective::Smooth(o) => write!(f, "Smooth(dim={})", o.dim()),
        }
    }
}

/// Barrier-equipped feasible set of one component.
#[derive(Clone)]
pub enum FeasibleSet {
    Box(BoxProduct),
    Custom(Arc<dyn Barrier>),
}

impl FeasibleSet {
    pub fn barrier(&self) -> &dyn Barrier {
        match self {
            FeasibleSet::Box(b) => b,
            FeasibleSet::Custom(b) => b.as_ref(),
        }
    }

    pub fn as_box(&self) -> Option<&BoxProduct> {
        match self {
            FeasibleSet::Box(b) => Some(b),
            FeasibleSet::Custom(_) => None,
        }
    }
}

impl std::fmt::Debug for FeasibleSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FeasibleSet::Box(b) => write!(f, "Box(dim={})", b.dim()),
            FeasibleSet::Custom(b) => write!(f, "Custom(dim={})", b.dim()),
        }
    }
}

/// One component of the separable program: coupling block `a` (m x n_i),
/// offset `b` (m), feasible set and concave objective.
#[derive(Debug, Clone)]
pub struct Component {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub set: FeasibleSet,
    pub objective: Objective,
}

impl Component {
    pub fn new(
        a: DMatrix<f64>,
        b: DVector<f64>,
        set: FeasibleSet,
        objective: Objective,
    ) -> Result<Self> {
        let n = set.barrier().dim();
        if a.ncols() != n {
            return Err(Error::InvalidProblem(format!(
                "coupling block has {} columns but the feasible set has dimension {n}",
                a.ncols()
            )));
        }
        if a.nrows() != b.len() {
            return Err(Error::InvalidProblem(format!(
                "coupling block has {} rows but the offset has {}",
                a.nrows(),
                b.len()
            )));
        }
        match &objective {
            Objective::Scalar(_) if n != 1 => {
                return Err(Error::InvalidProblem(
                    "structured scalar objectives require a 1-D component".into(),
                ))
            }
            Objective::Smooth(o) if o.dim() != n => {
                return Err(Error::InvalidProblem(format!(
                    "smooth objective has dimension {} but the component has {n}",
                    o.dim()
                )))
            }
            _ => {}
        }
        Ok(Self {
            a,
            b,
            set,
            objective,
        })
    }

    pub fn dim(&self) -> usize {
        self.set.barrier().dim()
    }

    /// phi_i(x_i)
    pub fn objective_value(&self, x: &DVector<f64>) -> f64 {
        match &self.objective {
            Objective::Scalar(s) => s.value(x[0]),
            Objective::Smooth(o) => o.value(x),
        }
    }
}

/// The full separable program: N components coupled by sum_i (A_i x_i - b_i) = 0.
#[derive(Debug, Clone)]
pub struct SeparableProblem {
    pub components: Vec<Component>,
    pub m: usize,
}

impl SeparableProblem {
    pub fn new(components: Vec<Component>, m: usize) -> Result<Self> {
        for (i, c) in components.iter().enumerate() {
            if c.a.nrows() != m {
                return Err(Error::InvalidProblem(format!(
                    "component {i} has coupling dimension {}, expected {m}",
                    c.a.nrows()
                )));
            }
        }
        if components.is_empty() {
            return Err(Error::InvalidProblem("problem has no components".into()));
        }
        Ok(Self { components, m })
    }

    pub fn n(&self) -> usize {
        self.components.iter().map(|c| c.dim()).sum()
    }

    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    /// Aggregate right-hand side b = sum_i b_i.
    pub fn b_total(&self) -> DVector<f64> {
        let mut b = DVector::zeros(self.m);
        for c in &self.components {
            b += &c.b;
        }
        b
    }

    /// kappa = sum_i (nu_i + 2 sqrt(nu_i)).
    pub fn kappa(&self) -> f64 {
        self.components
            .iter()
            .map(|c| {
                let nu = c.set.barrier().nu();
                nu + 2.0 * nu.sqrt()
            })
            .sum()
    }

    /// Dense coupling matrix A = [A_1, ..., A_N].
    pub fn assemble_a(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.m, self.n());
        let mut col = 0;
        for c in &self.components {
            a.view_mut((0, col), (self.m, c.dim())).copy_from(&c.a);
            col += c.dim();
        }
        a
    }

    /// Concatenate per-component vectors into one n-vector.
    pub fn concat(&self, parts: &[DVector<f64>]) -> DVector<f64> {
        let mut x = DVector::zeros(self.n());
        let mut at = 0;
        for p in parts {
            x.rows_mut(at, p.len()).copy_from(p);
            at += p.len();
        }
        x
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        for (i, c) in self.components.iter().enumerate() {
            if let Objective::Scalar(s) = &c.objective {
                if s.l1_weight < 0.0 {
                    report.error(Some(i), "l1 weight must be nonnegative");
                }
                if let SmoothPart::Exp { rate } = s.smooth {
                    if rate < 0.0 {
                        report.error(Some(i), "exponential rate must be nonnegative");
                    }
                }
            }
        }
        check_row_rank(&self.assemble_a(), &mut report);
        report
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone)]
pub struct ValidationEntry {
    pub severity: Severity,
    pub component: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub entries: Vec<ValidationEntry>,
}

impl ValidationReport {
    fn push(&mut self, severity: Severity, component: Option<usize>, message: &str) {
        self.entries.push(ValidationEntry {
            severity,
            component,
            message: message.to_string(),
        });
    }

    fn error(&mut self, component: Option<usize>, message: &str) {
        self.push(Severity::Error, component, message);
    }

    fn warn(&mut self, component: Option<usize>, message: &str) {
        self.push(Severity::Warning, component, message);
    }

    pub fn is_clean(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn has_errors(&self) -> bool {
        self.entries.iter().any(|e| e.severity == Severity::Error)
    }
}

fn check_row_rank(a: &DMatrix<f64>, report: &mut ValidationReport) {
    if a.nrows() == 0 || a.ncols() == 0 {
        return;
    }
    let qr = a.clone().col_piv_qr();
    let r = qr.r();
    let scale = (0..r.nrows().min(r.ncols()))
        .map(|i| r[(i, i)].abs())
        .fold(0.0_f64, f64::max);
    let rank = if scale == 0.0 {
        0
    } else {
        qr.rank(1e-10 * scale)
    };
    if rank < a.nrows() {
        report.warn(
            None,
            &format!(
                "coupling matrix is row-rank deficient (rank {rank} of {})",
                a.nrows()
            ),
        );
    }
}

// ---------------------------------------------------------------------------
// JSON problem files
// ---------------------------------------------------------------------------

/// On-disk objective description; only the structured 1-D kinds are
/// serializable.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectiveFile {
    Zero { l1_weight: f64 },
    Affine { slope: f64, l1_weight: f64 },
    Exp { rate: f64, l1_weight: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BoxFile {
    pub l: Vec<f64>,
    pub u: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ComponentFile {
    pub n: usize,
    /// Row-major m x n block.
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    #[serde(rename = "box")]
    pub bounds: BoxFile,
    pub objective: ObjectiveFile,
}

/// The JSON problem format: dense row-major blocks, IEEE-754 doubles.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ProblemFile {
    pub m: usize,
    pub components: Vec<ComponentFile>,
}

impl ProblemFile {
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let mut dims_ok = true;
        for (i, c) in self.components.iter().enumerate() {
            if c.a.len() != self.m * c.n {
                report.error(
                    Some(i),
                    &format!(
                        "coupling block has {} entries, expected m*n = {}",
                        c.a.len(),
                        self.m * c.n
                    ),
                );
                dims_ok = false;
            }
            if c.b.len() != self.m {
                report.error(
                    Some(i),
                    &format!("offset has {} entries, expected m = {}", c.b.len(), self.m),
                );
                dims_ok = false;
            }
            if c.bounds.l.len() != c.n || c.bounds.u.len() != c.n {
                report.error(Some(i), "box bound lengths do not match the dimension");
                dims_ok = false;
            } else {
                for (l, u) in c.bounds.l.iter().zip(&c.bounds.u) {
                    if !(l < u) {
                        report.error(Some(i), &format!("empty or unbounded box [{l}, {u}]"));
                    }
                    if !l.is_finite() || !u.is_finite() {
                        report.error(Some(i), "box bounds must be finite");
                    }
                }
            }
            if c.n != 1 {
                report.error(
                    Some(i),
                    "structured scalar objectives require 1-D components in problem files",
                );
            }
            match c.objective {
                ObjectiveFile::Zero { l1_weight }
                | ObjectiveFile::Affine { l1_weight, .. }
                | ObjectiveFile::Exp { l1_weight, .. } => {
                    if l1_weight < 0.0 {
                        report.error(Some(i), "l1 weight must be nonnegative");
                    }
                }
            }
            if let ObjectiveFile::Exp { rate, .. } = c.objective {
                if rate < 0.0 {
                    report.error(Some(i), "exponential rate must be nonnegative");
                }
            }
        }
        if dims_ok && !self.components.is_empty() {
            let n: usize = self.components.iter().map(|c| c.n).sum();
            let mut a = DMatrix::zeros(self.m, n);
            let mut col = 0;
            for c in &self.components {
                a.view_mut((0, col), (self.m, c.n))
                    .copy_from(&DMatrix::from_row_slice(self.m, c.n, &c.a));
                col += c.n;
            }
            check_row_rank(&a, &mut report);
        }
        report
    }

    pub fn to_problem(&self) -> Result<SeparableProblem> {
        let report = self.validate();
        if report.has_errors() {
            let msgs: Vec<String> = report
                .entries
                .iter()
                .filter(|e| e.severity == Severity::Error)
                .map(|e| e.message.clone())
                .collect();
            return Err(Error::InvalidProblem(msgs.join("; ")));
        }
        let components = self
            .components
            .iter()
            .map(|c| {
                let a = DMatrix::from_row_slice(self.m, c.n, &c.a);
                let b = DVector::from_vec(c.b.clone());
                let set = FeasibleSet::Box(BoxProduct::new(
                    c.bounds.l.clone(),
                    c.bounds.u.clone(),
                )?);
                let objective = Objective::Scalar(match c.objective {
                    ObjectiveFile::Zero { l1_weight } => ScalarObjective {
                        smooth: SmoothPart::Zero,
                        l1_weight,
                    },
                    ObjectiveFile::Affine { slope, l1_weight } => ScalarObjective {
                        smooth: SmoothPart::Affine { slope },
                        l1_weight,
                    },
                    ObjectiveFile::Exp { rate, l1_weight } => ScalarObjective {
                        smooth: SmoothPart::Exp { rate },
                        l1_weight,
                    },
                });
                Component::new(a, b, set, objective)
            })
            .collect::<Result<Vec<_>>>()?;
        SeparableProblem::new(components, self.m)
    }

    pub fn from_problem(problem: &SeparableProblem) -> Result<Self> {
        let components = problem
            .components
            .iter()
            .map(|c| {
                let bounds = match c.set.as_box() {
                    Some(b) => BoxFile {
                        l: b.lower(),
                        u: b.upper(),
                    },
                    None => {
                        return Err(Error::InvalidProblem(
                            "only box feasible sets are serializable".into(),
                        ))
                    }
                };
                let objective = match &c.objective {
                    Objective::Scalar(s) => match s.smooth {
                        SmoothPart::Zero => ObjectiveFile::Zero {
                            l1_weight: s.l1_weight,
                        },
                        SmoothPart::Affine { slope } => ObjectiveFile::Affine {
                            slope,
                            l1_weight: s.l1_weight,
                        },
                        SmoothPart::Exp { rate } => ObjectiveFile::Exp {
                            rate,
                            l1_weight: s.l1_weight,
                        },
                    },
                    Objective::Smooth(_) => {
                        return Err(Error::InvalidProblem(
                            "smooth multi-dimensional objectives are not serializable".into(),
                        ))
                    }
                };
                Ok(ComponentFile {
                    n: c.dim(),
                    a: c.a.transpose().as_slice().to_vec(), // row-major
                    b: c.b.as_slice().to_vec(),
                    bounds,
                    objective,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            m: problem.m,
            components,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("problem files always serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

/// Load a problem from a JSON file, reporting validation errors.
pub fn load_problem(path: &Path) -> Result<(SeparableProblem, ValidationReport)> {
    let file = ProblemFile::load(path)?;
    let report = file.validate();
    let problem = file.to_problem()?;
    Ok((problem, report))
}
