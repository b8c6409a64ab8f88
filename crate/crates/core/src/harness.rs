//! Convergence studies: exact-error rates, reference-error rates and the
//! Milne device, assembled into tables keyed by `(s, level)`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::extension::ExtensionConfig;
use crate::field::FieldVector;
use crate::operators::DiscreteOperator;
use crate::problems::{builtin_problems, Discretization, Problem};
use crate::registry::Registry;
use crate::semigroup::spectral_decompose;
use crate::solvers::{builtin_solvers, TraceSolver};

/// Weighted discrete L² norm `sqrt(sum_i w_i v_i²)`.
pub fn discrete_norm(v: &FieldVector) -> f64 {
    v.norm()
}

/// `rate_i = log2(err_{i-1} / err_i)` for consecutive entries.
pub fn observed_rate(errors: &[f64]) -> Result<Vec<f64>> {
    if errors.len() < 2 {
        return Err(Error::param("errors", "need at least two errors"));
    }
    if let Some(e) = errors.iter().find(|e| !(**e > 0.0) || !e.is_finite()) {
        return Err(Error::param(
            "errors",
            format!("errors must be positive, got {e}"),
        ));
    }
    Ok(errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect())
}

/// Milne device `log2(|v_h - v_{h/2}| / |v_{h/2} - v_{h/4}|)`. All three
/// vectors must already live on the coarsest grid.
pub fn milne_rate(v_h: &FieldVector, v_h2: &FieldVector, v_h4: &FieldVector) -> Result<f64> {
    let num = v_h.sub(v_h2)?.norm();
    let den = v_h2.sub(v_h4)?.norm();
    if den == 0.0 || num == 0.0 {
        return Err(Error::Degenerate(
            "consecutive solutions coincide; the Milne rate is undefined".into(),
        ));
    }
    Ok((num / den).log2())
}

/// Injects a fine nested 1D solution onto a coarse grid. Fine grids come
/// from repeated `n -> 2n + 1` refinement, so coarse node `i` is fine node
/// `(i + 1) 2^L - 1`.
pub fn restrict_nested_1d(fine: &FieldVector, coarse_weights: Arc<[f64]>) -> Result<FieldVector> {
    let (nf, nc) = (fine.len() + 1, coarse_weights.len() + 1);
    if nf % nc != 0 || !(nf / nc).is_power_of_two() {
        return Err(Error::Unsupported(format!(
            "grids with {} and {} nodes are not nested",
            fine.len(),
            coarse_weights.len()
        )));
    }
    let ratio = nf / nc;
    let values = (1..nc).map(|i| fine.values()[i * ratio - 1]).collect();
    FieldVector::new(values, coarse_weights)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Vary {
    SpatialDx,
    ExtendedH,
    TruncationM,
}

impl Vary {
    pub fn as_str(&self) -> &'static str {
        match self {
            Vary::SpatialDx => "spatial",
            Vary::ExtendedH => "extended",
            Vary::TruncationM => "truncation",
        }
    }
}

impl fmt::Display for Vary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Vary {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spatial" => Ok(Vary::SpatialDx),
            "extended" => Ok(Vary::ExtendedH),
            "truncation" => Ok(Vary::TruncationM),
            other => Err(Error::UnknownName {
                kind: "study variable",
                name: other.into(),
                available: "spatial, extended, truncation".into(),
            }),
        }
    }
}

/// How the error column is produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorMode {
    /// Against the closed-form solution sampled on the grid.
    Exact,
    /// Against the dense spectral solve `(-A)^{-s} f` of the same discrete problem.
    Reference,
    /// Differences of consecutive levels, rates from the Milne device.
    Milne,
}

impl ErrorMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ErrorMode::Exact => "exact",
            ErrorMode::Reference => "reference",
            ErrorMode::Milne => "milne",
        }
    }
}

impl fmt::Display for ErrorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ErrorMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(ErrorMode::Exact),
            "reference" => Ok(ErrorMode::Reference),
            "milne" => Ok(ErrorMode::Milne),
            other => Err(Error::UnknownName {
                kind: "error mode",
                name: other.into(),
                available: "exact, reference, milne".into(),
            }),
        }
    }
}

/// A convergence study. `levels` holds the varied parameter: `dx` (or `dr`)
/// halving, `h` halving, or `M` doubling. The remaining parameters are
/// fixed. For `TruncationM` the error column is `|v_M(0) - v_{4M}(0)|`
/// whatever the mode.
#[derive(Clone, Debug, PartialEq)]
pub struct StudySpec {
    pub problem: String,
    pub solver: String,
    pub vary: Vary,
    pub mode: ErrorMode,
    pub s_values: Vec<f64>,
    pub levels: Vec<f64>,
    pub m: f64,
    pub h: f64,
    /// Spatial resolution when it is not varied; `None` uses the problem default.
    pub discretization: Option<Discretization>,
    /// Angular node count for disk spatial studies.
    pub nth: Option<usize>,
}

impl StudySpec {
    /// Small-machine defaults for each kind of study.
    pub fn desk_default(problem: &str, vary: Vary, s_values: Vec<f64>) -> Self {
        let has_exact = matches!(problem, "sine1d" | "disk");
        let (levels, m, h, mode) = match vary {
            Vary::SpatialDx => {
                let mode = if has_exact {
                    ErrorMode::Exact
                } else {
                    ErrorMode::Milne
                };
                if problem == "disk" {
                    (vec![1.0 / 4.0, 1.0 / 8.0, 1.0 / 16.0], 20.0, 2e-3, mode)
                } else {
                    (vec![0.04, 0.02, 0.01, 0.005], 20.0, 5e-4, mode)
                }
            }
            Vary::ExtendedH => (
                vec![0.02, 0.01, 0.005, 0.0025],
                20.0,
                0.02,
                ErrorMode::Reference,
            ),
            Vary::TruncationM => (vec![2.0, 4.0, 8.0, 16.0], 2.0, 0.01, ErrorMode::Reference),
        };
        StudySpec {
            problem: problem.into(),
            solver: "extension".into(),
            vary,
            mode,
            s_values,
            levels,
            m,
            h,
            discretization: None,
            nth: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.s_values.is_empty() {
            return Err(Error::param("s", "at least one s value is required"));
        }
        if let Some(s) = self.s_values.iter().find(|s| !(**s > 0.0 && **s <= 1.0)) {
            return Err(Error::param("s", format!("need s in (0, 1], got {s}")));
        }
        if self.levels.len() < 3 {
            return Err(Error::param("levels", "need at least three mesh levels"));
        }
        if let Some(l) = self.levels.iter().find(|l| !(**l > 0.0) || !l.is_finite()) {
            return Err(Error::param(
                "levels",
                format!("mesh parameters must be positive, got {l}"),
            ));
        }
        let factor = if self.vary == Vary::TruncationM {
            2.0
        } else {
            0.5
        };
        for w in self.levels.windows(2) {
            if ((w[1] / w[0]) / factor - 1.0).abs() > 1e-9 {
                let how = if factor > 1.0 { "double" } else { "halve" };
                return Err(Error::param(
                    "levels",
                    format!(
                        "each level must {how} the previous one ({} -> {})",
                        w[0], w[1]
                    ),
                ));
            }
        }
        if self.vary != Vary::TruncationM && !(self.m > 0.0) {
            return Err(Error::param("M", format!("need M > 0, got {}", self.m)));
        }
        if self.vary != Vary::ExtendedH && !(self.h > 0.0) {
            return Err(Error::param("h", format!("need h > 0, got {}", self.h)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TableCell {
    pub error: Option<f64>,
    pub rate: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub level: usize,
    pub mesh: f64,
    /// One cell per entry of `s_values`.
    pub cells: Vec<TableCell>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceTable {
    pub problem: String,
    pub solver: String,
    pub vary: Vary,
    pub mode: ErrorMode,
    /// Fixed truncation (absent when `M` is varied).
    pub m: Option<f64>,
    /// Fixed extended step (absent when `h` is varied).
    pub h: Option<f64>,
    pub norm: String,
    pub s_values: Vec<f64>,
    pub rows: Vec<TableRow>,
}

impl ConvergenceTable {
    pub fn errors(&self, s_index: usize) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.cells[s_index].error).collect()
    }

    pub fn rates(&self, s_index: usize) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.cells[s_index].rate).collect()
    }

    /// Rate in the last row.
    pub fn finest_rate(&self, s_index: usize) -> Option<f64> {
        self.rows.last().and_then(|r| r.cells[s_index].rate)
    }
}

pub const NORM_NAME: &str = "weighted discrete L2";

struct CellOutput {
    error: Option<f64>,
    solution: Option<FieldVector>,
}

struct Study<'a> {
    spec: &'a StudySpec,
    problem: &'a dyn Problem,
    solver: &'a dyn TraceSolver,
}

impl Study<'_> {
    fn discretization(&self, level: usize) -> Result<Discretization> {
        match self.spec.vary {
            Vary::SpatialDx => self
                .problem
                .discretization_for_spacing(self.spec.levels[level], self.spec.nth),
            _ => Ok(self
                .spec
                .discretization
                .unwrap_or_else(|| self.problem.default_discretization())),
        }
    }

    fn config(&self, s: f64, level: usize) -> Result<ExtensionConfig> {
        let x = self.spec.levels[level];
        match self.spec.vary {
            Vary::SpatialDx => ExtensionConfig::with_step(s, self.spec.m, self.spec.h),
            Vary::ExtendedH => ExtensionConfig::with_step(s, self.spec.m, x),
            Vary::TruncationM => ExtensionConfig::with_step(s, x, self.spec.h),
        }
    }

    fn run_cell(&self, s: f64, level: usize) -> Result<CellOutput> {
        let disc = self.discretization(level)?;
        let op = self.problem.build(&disc)?;
        let f = self.problem.forcing(&op, s)?;
        let cfg = self.config(s, level)?;
        let v = self.solver.solve(&op, &f, &cfg)?;
        if self.spec.vary == Vary::TruncationM {
            let far = ExtensionConfig::with_step(s, 4.0 * cfg.m(), self.spec.h)?;
            let w = self.solver.solve(&op, &f, &far)?;
            return Ok(CellOutput {
                error: Some(v.sub(&w)?.norm()),
                solution: None,
            });
        }
        match self.spec.mode {
            ErrorMode::Exact => {
                let exact = self.problem.exact(&op, s).ok_or_else(|| {
                    Error::Unsupported(format!(
                        "problem `{}` has no closed-form solution; use the reference or milne mode",
                        self.problem.name()
                    ))
                })?;
                let u = op.sample(|p| exact.trace(p));
                Ok(CellOutput {
                    error: Some(v.sub(&u)?.norm()),
                    solution: None,
                })
            }
            ErrorMode::Reference => {
                let u = reference_solution(&op, &f, s)?;
                Ok(CellOutput {
                    error: Some(v.sub(&u)?.norm()),
                    solution: None,
                })
            }
            ErrorMode::Milne => Ok(CellOutput {
                error: None,
                solution: Some(v),
            }),
        }
    }
}

/// `(-A)^{-s} f` from the dense eigendecomposition.
pub fn reference_solution(op: &DiscreteOperator, f: &FieldVector, s: f64) -> Result<FieldVector> {
    spectral_decompose(op)?.power_apply(-s, f)
}

/// Runs a study with the built-in problem and solver registries.
pub fn run_study(spec: &StudySpec) -> Result<ConvergenceTable> {
    run_study_with(spec, &builtin_problems(), &builtin_solvers())
}

/// Runs every `(s, level)` cell (in parallel) and assembles the table.
/// Results are reduced in `(s, level)` order, so the table is deterministic.
pub fn run_study_with(
    spec: &StudySpec,
    problems: &Registry<dyn Problem>,
    solvers: &Registry<dyn TraceSolver>,
) -> Result<ConvergenceTable> {
    spec.validate()?;
    let problem = problems.get(&spec.problem)?;
    let solver = solvers.get(&spec.solver)?;
    let milne = spec.mode == ErrorMode::Milne && spec.vary != Vary::TruncationM;
    if milne && spec.vary == Vary::SpatialDx && !problem.nested_refinement() {
        return Err(Error::Unsupported(format!(
            "problem `{}` has no nested spatial refinement; Milne rates need nested grids",
            problem.name()
        )));
    }
    let study = Study {
        spec,
        problem,
        solver,
    };
    let nl = spec.levels.len();
    let jobs: Vec<(usize, usize)> = (0..spec.s_values.len())
        .flat_map(|si| (0..nl).map(move |li| (si, li)))
        .collect();
    let outputs = jobs
        .par_iter()
        .map(|&(si, li)| study.run_cell(spec.s_values[si], li))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let mut rows: Vec<TableRow> = (0..nl)
        .map(|li| TableRow {
            level: li,
            mesh: spec.levels[li],
            cells: Vec::with_capacity(spec.s_values.len()),
        })
        .collect();
    for (si, column) in outputs.chunks(nl).enumerate() {
        let cells = if milne {
            milne_column(column)?
        } else {
            let errors: Vec<f64> = column.iter().map(|c| c.error.unwrap_or(f64::NAN)).collect();
            let rates = observed_rate(&errors)
                .map_err(|e| Error::Degenerate(format!("s = {}: {e}", spec.s_values[si])))?;
            errors
                .iter()
                .enumerate()
                .map(|(li, &e)| TableCell {
                    error: Some(e),
                    rate: li.checked_sub(1).map(|p| rates[p]),
                })
                .collect()
        };
        for (row, cell) in rows.iter_mut().zip(cells) {
            row.cells.push(cell);
        }
    }
    Ok(ConvergenceTable {
        problem: spec.problem.clone(),
        solver: spec.solver.clone(),
        vary: spec.vary,
        mode: if spec.vary == Vary::TruncationM {
            ErrorMode::Reference
        } else {
            spec.mode
        },
        m: (spec.vary != Vary::TruncationM).then_some(spec.m),
        h: (spec.vary != Vary::ExtendedH).then_some(spec.h),
        norm: NORM_NAME.into(),
        s_values: spec.s_values.clone(),
        rows,
    })
}

/// Level `i` error is `|v_{i-1} - v_i|` on grid `i - 1`; level `i` rate is
/// the Milne rate of levels `i - 2, i - 1, i` on grid `i - 2`.
fn milne_column(column: &[CellOutput]) -> Result<Vec<TableCell>> {
    let sols: Vec<&FieldVector> = column
        .iter()
        .map(|c| c.solution.as_ref().expect("milne cells keep solutions"))
        .collect();
    let on = |fine: &FieldVector, coarse: &FieldVector| -> Result<FieldVector> {
        if fine.len() == coarse.len() {
            Ok(fine.clone())
        } else {
            restrict_nested_1d(fine, Arc::clone(coarse.weights()))
        }
    };
    let mut cells = vec![TableCell {
        error: None,
        rate: None,
    }];
    for i in 1..sols.len() {
        let error = sols[i - 1].sub(&on(sols[i], sols[i - 1])?)?.norm();
        let rate = if i >= 2 {
            let base = sols[i - 2];
            Some(milne_rate(
                base,
                &on(sols[i - 1], base)?,
                &on(sols[i], base)?,
            )?)
        } else {
            None
        };
        cells.push(TableCell {
            error: Some(error),
            rate,
        });
    }
    Ok(cells)
}
