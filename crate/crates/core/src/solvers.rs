//! Interchangeable ways of producing `v(t)` and the trace `v(0)`.

use crate::error::{Error, Result};
use crate::extension::{extend, extend_parallel_split, ExtensionConfig};
use crate::field::FieldVector;
use crate::operators::DiscreteOperator;
use crate::registry::{Named, Registry};
use crate::semigroup::spectral_decompose;
use crate::specfun::extension_profile;

pub trait TraceSolver: Named + Send + Sync {
    /// `v(t)` for each `t`, in order.
    fn extend(
        &self,
        op: &DiscreteOperator,
        f: &FieldVector,
        cfg: &ExtensionConfig,
        t_values: &[f64],
    ) -> Result<Vec<FieldVector>>;

    fn solve(
        &self,
        op: &DiscreteOperator,
        f: &FieldVector,
        cfg: &ExtensionConfig,
    ) -> Result<FieldVector> {
        let mut out = self.extend(op, f, cfg, &[0.0])?;
        Ok(out.pop().expect("one profile per t"))
    }
}

/// Streaming single-chain evaluation.
pub struct StreamingSolver;

impl Named for StreamingSolver {
    fn name(&self) -> &'static str {
        "extension"
    }
    fn description(&self) -> &'static str {
        "rational-semigroup series, one streaming chain"
    }
}

impl TraceSolver for StreamingSolver {
    fn extend(
        &self,
        op: &DiscreteOperator,
        f: &FieldVector,
        cfg: &ExtensionConfig,
        t_values: &[f64],
    ) -> Result<Vec<FieldVector>> {
        Ok(extend(op, f, cfg, t_values)?.profiles)
    }
}

/// Even/odd two-chain evaluation on two threads.
pub struct SplitSolver;

impl Named for SplitSolver {
    fn name(&self) -> &'static str {
        "split"
    }
    fn description(&self) -> &'static str {
        "rational-semigroup series, even/odd chains stepped with S(2h)"
    }
}

impl TraceSolver for SplitSolver {
    fn extend(
        &self,
        op: &DiscreteOperator,
        f: &FieldVector,
        cfg: &ExtensionConfig,
        t_values: &[f64],
    ) -> Result<Vec<FieldVector>> {
        Ok(extend_parallel_split(op, f, cfg, t_values)?.profiles)
    }
}

/// Exact discrete extension from a dense eigendecomposition; ignores `M`
/// and `h`. Limited to small operators.
pub struct SpectralSolver;

impl Named for SpectralSolver {
    fn name(&self) -> &'static str {
        "spectral"
    }
    fn description(&self) -> &'static str {
        "dense eigendecomposition (reference, small grids only)"
    }
}

impl TraceSolver for SpectralSolver {
    fn extend(
        &self,
        op: &DiscreteOperator,
        f: &FieldVector,
        cfg: &ExtensionConfig,
        t_values: &[f64],
    ) -> Result<Vec<FieldVector>> {
        let s = cfg.s();
        let dec = spectral_decompose(op)?;
        t_values
            .iter()
            .map(|&t| {
                let v = dec.apply_function(f, |lam| {
                    let mu = -lam;
                    extension_profile(s, mu.sqrt() * t).unwrap_or(f64::NAN) * mu.powf(-s)
                })?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Degenerate(format!(
                        "spectral extension failed at t = {t}"
                    )))
                }
            })
            .collect()
    }
}

pub fn builtin_solvers() -> Registry<dyn TraceSolver> {
    let mut r: Registry<dyn TraceSolver> = Registry::new("solver");
    let all: Vec<Box<dyn TraceSolver>> = vec![
        Box::new(StreamingSolver),
        Box::new(SplitSolver),
        Box::new(SpectralSolver),
    ];
    for s in all {
        r.register(s).expect("built-in names are distinct");
    }
    r
}
