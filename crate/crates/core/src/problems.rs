//! Built-in test problems, looked up by name at runtime.

use crate::error::{Error, Result};
use crate::field::FieldVector;
use crate::operators::{
    build_elliptic_1d, build_laplacian_1d, build_laplacian_disk, DiscreteOperator, DiskGrid,
    EllipticCoefficients, Grid1D, GridLayout,
};
use crate::registry::{Named, Registry};
use crate::specfun::{exact_solution_1d, ExactSolutionSpec};

/// Spatial resolution: interior nodes in 1D, or radial cells plus an
/// optional angular count on the disk.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Discretization {
    pub n: usize,
    pub nth: Option<usize>,
}

impl Discretization {
    pub fn line(n: usize) -> Self {
        Discretization { n, nth: None }
    }

    pub fn disk(nr: usize, nth: usize) -> Self {
        Discretization {
            n: nr,
            nth: Some(nth),
        }
    }
}

pub trait Problem: Named + Send + Sync {
    fn default_discretization(&self) -> Discretization;

    /// Resolution with mesh width `spacing` (`dx` in 1D, `dr` on the disk).
    fn discretization_for_spacing(
        &self,
        spacing: f64,
        nth: Option<usize>,
    ) -> Result<Discretization>;

    /// Mesh width of a resolution.
    fn spacing(&self, disc: &Discretization) -> f64;

    fn build(&self, disc: &Discretization) -> Result<DiscreteOperator>;

    /// Right-hand side `f` of `(-A)^s u = f`.
    fn forcing(&self, op: &DiscreteOperator, s: f64) -> Result<FieldVector>;

    /// Closed-form solution, when one exists.
    fn exact(&self, _op: &DiscreteOperator, _s: f64) -> Option<ExactSolutionSpec> {
        None
    }

    /// Whether halving the spacing yields nested grids (coarse nodes are a
    /// subset of fine ones).
    fn nested_refinement(&self) -> bool {
        false
    }
}

fn check_s(s: f64) -> Result<()> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::param("s", format!("need s in (0, 1], got {s}")));
    }
    Ok(())
}

fn line_grid(op: &DiscreteOperator) -> Result<Grid1D> {
    match op.layout() {
        GridLayout::Line(g) => Ok(*g),
        _ => Err(Error::Unsupported("expected a 1D operator".into())),
    }
}

/// `(-d²/dx²)^s u = f` on `(-1, 1)` with `u = sin(pi (1 + x) / 2)`.
pub struct Sine1D;

impl Named for Sine1D {
    fn name(&self) -> &'static str {
        "sine1d"
    }
    fn description(&self) -> &'static str {
        "1D Laplacian on (-1,1), exact solution sin(pi(1+x)/2)"
    }
}

impl Problem for Sine1D {
    fn default_discretization(&self) -> Discretization {
        Discretization::line(63)
    }

    fn discretization_for_spacing(
        &self,
        spacing: f64,
        _nth: Option<usize>,
    ) -> Result<Discretization> {
        Ok(Discretization::line(
            Grid1D::with_spacing(-1.0, 1.0, spacing)?.n(),
        ))
    }

    fn spacing(&self, disc: &Discretization) -> f64 {
        2.0 / (disc.n + 1) as f64
    }

    fn build(&self, disc: &Discretization) -> Result<DiscreteOperator> {
        build_laplacian_1d(Grid1D::new(-1.0, 1.0, disc.n)?)
    }

    fn forcing(&self, op: &DiscreteOperator, s: f64) -> Result<FieldVector> {
        check_s(s)?;
        line_grid(op)?;
        let spec = ExactSolutionSpec::sine_1d(s);
        Ok(op.sample(|p| spec.forcing(p)))
    }

    fn exact(&self, _op: &DiscreteOperator, s: f64) -> Option<ExactSolutionSpec> {
        Some(ExactSolutionSpec::sine_1d(s))
    }

    fn nested_refinement(&self) -> bool {
        true
    }
}

/// Unit-disk Laplacian with the `J_1(j_{1,1} r) cos(theta)` mode as solution.
pub struct DiskMode;

impl DiskMode {
    fn grid(op: &DiscreteOperator) -> Result<DiskGrid> {
        match op.layout() {
            GridLayout::Disk(g) => Ok(*g),
            _ => Err(Error::Unsupported("expected a disk operator".into())),
        }
    }
}

impl Named for DiskMode {
    fn name(&self) -> &'static str {
        "disk"
    }
    fn description(&self) -> &'static str {
        "polar Laplacian on the unit disk, exact mode J_1(j11 r) cos(theta)"
    }
}

impl Problem for DiskMode {
    fn default_discretization(&self) -> Discretization {
        Discretization::disk(12, 40)
    }

    fn discretization_for_spacing(
        &self,
        spacing: f64,
        nth: Option<usize>,
    ) -> Result<Discretization> {
        if !(spacing > 0.0 && spacing <= 0.5) {
            return Err(Error::param(
                "dr",
                format!("need 0 < dr <= 0.5, got {spacing}"),
            ));
        }
        let nr = (1.0 / spacing).round() as usize;
        if ((nr as f64) * spacing - 1.0).abs() > 1e-9 {
            return Err(Error::param(
                "dr",
                format!("1/dr must be an integer, got dr = {spacing}"),
            ));
        }
        Ok(Discretization::disk(nr, nth.unwrap_or(4 * nr)))
    }

    fn spacing(&self, disc: &Discretization) -> f64 {
        1.0 / disc.n as f64
    }

    fn build(&self, disc: &Discretization) -> Result<DiscreteOperator> {
        let nth = disc.nth.unwrap_or(4 * disc.n);
        build_laplacian_disk(DiskGrid::new(disc.n, nth)?)
    }

    fn forcing(&self, op: &DiscreteOperator, s: f64) -> Result<FieldVector> {
        check_s(s)?;
        let spec = ExactSolutionSpec::disk(s, &Self::grid(op)?);
        Ok(op.sample(|p| spec.forcing(p)))
    }

    fn exact(&self, op: &DiscreteOperator, s: f64) -> Option<ExactSolutionSpec> {
        Self::grid(op).ok().map(|g| ExactSolutionSpec::disk(s, &g))
    }
}

/// `-(a u')' + c u` on `(-1, 1)` with data `sin(pi (1 + x) / 2)`; no closed
/// form is available for `s < 1`.
pub struct Elliptic1D {
    name: &'static str,
    description: &'static str,
    coeffs: EllipticCoefficients,
}

impl Elliptic1D {
    /// `a = 1`, `c = 1`.
    pub fn constant() -> Self {
        Elliptic1D {
            name: "elliptic1d",
            description: "1D elliptic operator with a = 1, c = 1",
            coeffs: EllipticCoefficients::constant(1.0, 1.0),
        }
    }

    /// `a = 1 + x²`, `c = 1 + x / 2`.
    pub fn variable() -> Self {
        Elliptic1D {
            name: "elliptic1d-variable",
            description: "1D elliptic operator with a = 1 + x^2, c = 1 + x/2",
            coeffs: EllipticCoefficients::new(|x| 1.0 + x * x, |x| 1.0 + 0.5 * x),
        }
    }
}

impl Named for Elliptic1D {
    fn name(&self) -> &'static str {
        self.name
    }
    fn description(&self) -> &'static str {
        self.description
    }
}

impl Problem for Elliptic1D {
    fn default_discretization(&self) -> Discretization {
        Discretization::line(63)
    }

    fn discretization_for_spacing(
        &self,
        spacing: f64,
        _nth: Option<usize>,
    ) -> Result<Discretization> {
        Ok(Discretization::line(
            Grid1D::with_spacing(-1.0, 1.0, spacing)?.n(),
        ))
    }

    fn spacing(&self, disc: &Discretization) -> f64 {
        2.0 / (disc.n + 1) as f64
    }

    fn build(&self, disc: &Discretization) -> Result<DiscreteOperator> {
        build_elliptic_1d(Grid1D::new(-1.0, 1.0, disc.n)?, &self.coeffs)
    }

    fn forcing(&self, op: &DiscreteOperator, s: f64) -> Result<FieldVector> {
        check_s(s)?;
        line_grid(op)?;
        Ok(op.sample(|p| exact_solution_1d(p[0])))
    }

    fn nested_refinement(&self) -> bool {
        true
    }
}

pub fn builtin_problems() -> Registry<dyn Problem> {
    let mut r: Registry<dyn Problem> = Registry::new("problem");
    let all: Vec<Box<dyn Problem>> = vec![
        Box::new(Sine1D),
        Box::new(DiskMode),
        Box::new(Elliptic1D::constant()),
        Box::new(Elliptic1D::variable()),
    ];
    for p in all {
        r.register(p).expect("built-in names are distinct");
    }
    r
}
