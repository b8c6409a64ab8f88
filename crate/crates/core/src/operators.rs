//! Finite-difference discretizations of strictly dissipative operators.
//!
//! Every [`DiscreteOperator`] stores the operator `A` itself (negative
//! definite), never the positive elliptic operator. Each one is self-adjoint
//! in the weighted inner product given by its `norm_weights`; for the 1D
//! builders the weights are uniform so the matrix is symmetric outright, for
//! the disk the weighted matrix `W A` is symmetric.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::banded::BandMatrix;
use crate::error::{Error, Result};
use crate::field::FieldVector;

const LOG_NORM_REL_TOL: f64 = 1e-8;
const LOG_NORM_MAX_ITER: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid1D {
    a: f64,
    b: f64,
    n: usize,
}

impl Grid1D {
    pub fn new(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::param("grid", format!("need a < b, got ({a}, {b})")));
        }
        if n == 0 {
            return Err(Error::param("n", "need at least one interior point"));
        }
        Ok(Grid1D { a, b, n })
    }

    /// Grid on `(a, b)` whose spacing is `dx`; `(b - a) / dx` must be an integer.
    pub fn with_spacing(a: f64, b: f64, dx: f64) -> Result<Self> {
        if !(dx > 0.0) {
            return Err(Error::param("dx", format!("must be positive, got {dx}")));
        }
        let cells = (b - a) / dx;
        let rounded = cells.round();
        if (cells - rounded).abs() > 1e-8 * cells.max(1.0) || rounded < 2.0 {
            return Err(Error::param(
                "dx",
                format!("{dx} does not divide the interval ({a}, {b}) into at least two cells"),
            ));
        }
        Grid1D::new(a, b, rounded as usize - 1)
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn dx(&self) -> f64 {
        (self.b - self.a) / (self.n + 1) as f64
    }

    /// Interior node `i` in `0..n` (the 1-based point `i + 1`).
    pub fn node(&self, i: usize) -> f64 {
        self.a + (i + 1) as f64 * self.dx()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Refinement that keeps every node of `self`: `n -> 2n + 1`.
    pub fn refined(&self) -> Grid1D {
        Grid1D {
            n: 2 * self.n + 1,
            ..*self
        }
    }
}

/// Polar grid on the unit disk with the radial nodes offset by half a cell,
/// `r_j = (j + 1/2) dr` for `j = 0..nr`, so no node sits at the origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiskGrid {
    nr: usize,
    nth: usize,
}

impl DiskGrid {
    pub fn new(nr: usize, nth: usize) -> Result<Self> {
        if nr < 2 {
            return Err(Error::param("nr", format!("need nr >= 2, got {nr}")));
        }
        if nth < 4 {
            return Err(Error::param("nth", format!("need nth >= 4, got {nth}")));
        }
        Ok(DiskGrid { nr, nth })
    }

    pub fn nr(&self) -> usize {
        self.nr
    }
    pub fn nth(&self) -> usize {
        self.nth
    }
    pub fn dr(&self) -> f64 {
        1.0 / self.nr as f64
    }
    pub fn dth(&self) -> f64 {
        2.0 * PI / self.nth as f64
    }
    pub fn radius(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dr()
    }
    pub fn angle(&self, i: usize) -> f64 {
        i as f64 * self.dth()
    }
    pub fn len(&self) -> usize {
        self.nr * self.nth
    }
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Unknowns are numbered angle-fastest, which keeps the bandwidth at `nth`.
    #[inline]
    pub fn index(&self, j: usize, i: usize) -> usize {
        j * self.nth + i
    }

    /// `(r, theta)` of unknown `k`.
    pub fn polar(&self, k: usize) -> (f64, f64) {
        (self.radius(k / self.nth), self.angle(k % self.nth))
    }
}

/// Where the unknowns of an operator live, for output and sampling.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GridLayout {
    Line(Grid1D),
    Disk(DiskGrid),
    Abstract(usize),
}

impl GridLayout {
    pub fn len(&self) -> usize {
        match self {
            GridLayout::Line(g) => g.n(),
            GridLayout::Disk(g) => g.len(),
            GridLayout::Abstract(n) => *n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cartesian coordinates of each unknown (`[x]` in 1D, `[x, y]` on the disk).
    pub fn coordinates(&self) -> Vec<Vec<f64>> {
        match self {
            GridLayout::Line(g) => g.nodes().into_iter().map(|x| vec![x]).collect(),
            GridLayout::Disk(g) => (0..g.len())
                .map(|k| {
                    let (r, th) = g.polar(k);
                    vec![r * th.cos(), r * th.sin()]
                })
                .collect(),
            GridLayout::Abstract(n) => (0..*n).map(|i| vec![i as f64]).collect(),
        }
    }

    pub fn spatial_dims(&self) -> usize {
        match self {
            GridLayout::Disk(_) => 2,
            _ => 1,
        }
    }
}

type CoefficientFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Diffusion `a(x) > 0` and reaction `c(x) >= 0` of `L u = -(a u')' + c u`.
#[derive(Clone)]
pub struct EllipticCoefficients {
    a_fn: CoefficientFn,
    c_fn: CoefficientFn,
}

impl EllipticCoefficients {
    pub fn new(
        a_fn: impl Fn(f64) -> f64 + Send + Sync + 'static,
        c_fn: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        EllipticCoefficients {
            a_fn: Arc::new(a_fn),
            c_fn: Arc::new(c_fn),
        }
    }

    pub fn constant(a: f64, c: f64) -> Self {
        Self::new(move |_| a, move |_| c)
    }

    pub fn diffusion(&self, x: f64) -> f64 {
        (self.a_fn)(x)
    }

    pub fn reaction(&self, x: f64) -> f64 {
        (self.c_fn)(x)
    }
}

impl fmt::Debug for EllipticCoefficients {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EllipticCoefficients")
            .finish_non_exhaustive()
    }
}

/// Banded matrix for a strictly dissipative operator plus the grid metadata
/// and discrete-L² weights that go with it.
#[derive(Clone, Debug)]
pub struct DiscreteOperator {
    matrix: BandMatrix,
    weights: Arc<[f64]>,
    layout: GridLayout,
    symmetric: bool,
    mu_estimate: f64,
}

impl DiscreteOperator {
    /// Validates weighted self-adjointness and negative definiteness, then
    /// caches the logarithmic-norm estimate.
    pub fn new(matrix: BandMatrix, weights: Arc<[f64]>, layout: GridLayout) -> Result<Self> {
        let n = matrix.dim();
        if n == 0 {
            return Err(Error::param("dimension", "operator must be nonempty"));
        }
        if weights.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: weights.len(),
            });
        }
        if layout.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: layout.len(),
            });
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::param(
                "weights",
                format!("weight {w} is not positive"),
            ));
        }
        check_weighted_symmetry(&matrix, &weights)?;
        let mu = largest_eigenvalue(&matrix, &weights)?;
        Ok(DiscreteOperator {
            matrix,
            weights,
            layout,
            symmetric: true,
            mu_estimate: mu,
        })
    }

    /// Operator from a dense row-major matrix with uniform unit weights.
    pub fn from_dense(n: usize, bandwidth: usize, dense: &[f64]) -> Result<Self> {
        let m = BandMatrix::from_dense(n, bandwidth, dense)?;
        Self::new(m, vec![1.0; n].into(), GridLayout::Abstract(n))
    }

    pub fn dimension(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &BandMatrix {
        &self.matrix
    }

    pub fn norm_weights(&self) -> &Arc<[f64]> {
        &self.weights
    }

    pub fn layout(&self) -> &GridLayout {
        &self.layout
    }

    /// Self-adjoint in the weighted inner product. Always true once constructed.
    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Cached logarithmic norm `mu(A)` (the largest eigenvalue, negative).
    pub fn mu_estimate(&self) -> f64 {
        self.mu_estimate
    }

    /// Upper bound on the spectral radius (largest absolute row sum).
    pub fn spectral_radius_bound(&self) -> f64 {
        self.matrix.max_row_abs_sum()
    }

    pub fn zeros(&self) -> FieldVector {
        FieldVector::zeros(Arc::clone(&self.weights))
    }

    /// Wraps raw values as a field on this operator's grid.
    pub fn field(&self, values: Vec<f64>) -> Result<FieldVector> {
        FieldVector::new(values, Arc::clone(&self.weights))
    }

    /// Samples `f` at each unknown's Cartesian coordinates.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> FieldVector {
        let values = self.layout.coordinates().iter().map(|c| f(c)).collect();
        FieldVector::new(values, Arc::clone(&self.weights)).expect("layout matches weights")
    }

    pub(crate) fn check_field(&self, v: &FieldVector) -> Result<()> {
        if v.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: v.len(),
            });
        }
        Ok(())
    }
}

fn check_weighted_symmetry(m: &BandMatrix, w: &[f64]) -> Result<()> {
    for i in 0..m.dim() {
        for j in m.row_range(i).filter(|&j| j > i) {
            let upper = w[i] * m.get(i, j);
            let lower = w[j] * m.get(j, i);
            let scale = upper.abs().max(lower.abs());
            if (upper - lower).abs() > 1e-13 * scale {
                return Err(Error::NotSymmetric { row: i, col: j });
            }
        }
    }
    Ok(())
}

/// Largest eigenvalue by inverse iteration (power iteration on `A^{-1}`,
/// i.e. shifted at zero). The Rayleigh quotient is taken in the weighted
/// inner product, where `A` is self-adjoint.
fn largest_eigenvalue(m: &BandMatrix, w: &[f64]) -> Result<f64> {
    let n = m.dim();
    let lu = m
        .factor()
        .map_err(|e| Error::NotDissipative(format!("A itself is singular ({e})")))?;
    // LU pivots of a weighted-symmetric matrix carry the signs of its LDL^T
    // pivots, so all negative <=> negative definite.
    if let Some((k, p)) = lu.pivots().enumerate().find(|(_, p)| *p >= 0.0) {
        return Err(Error::NotDissipative(format!(
            "pivot {k} of A is {p}, so A is not negative definite"
        )));
    }
    let wnorm = |x: &[f64]| -> f64 { x.iter().zip(w).map(|(v, w)| w * v * v).sum::<f64>().sqrt() };

    let mut v: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.25 * (1.3 * i as f64 + 0.7).sin())
        .collect();
    let mut av = vec![0.0; n];
    for _ in 0..LOG_NORM_MAX_ITER {
        lu.solve_in_place(&mut v);
        let nv = wnorm(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        m.matvec_into(&v, &mut av);
        let lambda: f64 = v.iter().zip(&av).zip(w).map(|((x, y), w)| w * x * y).sum();
        let residual = av
            .iter()
            .zip(&v)
            .zip(w)
            .map(|((y, x), w)| {
                let r = y - lambda * x;
                w * r * r
            })
            .sum::<f64>()
            .sqrt();
        if residual <= LOG_NORM_REL_TOL * lambda.abs() {
            return Ok(lambda);
        }
    }
    Err(Error::NoConvergence {
        what: "logarithmic-norm inverse iteration",
        iterations: LOG_NORM_MAX_ITER,
    })
}

/// Logarithmic norm `mu(A) = sup <A v, v> / <v, v>` in the weighted inner
/// product; for these self-adjoint operators it is the largest eigenvalue.
pub fn estimate_log_norm(op: &DiscreteOperator) -> Result<f64> {
    largest_eigenvalue(&op.matrix, &op.weights)
}

/// `A v`.
pub fn apply_operator(op: &DiscreteOperator, v: &FieldVector) -> Result<FieldVector> {
    op.check_field(v)?;
    v.with_values(op.matrix.matvec(v.values()))
}

/// Three-point second difference `(1, -2, 1) / dx²` with homogeneous
/// Dirichlet boundary values eliminated.
pub fn build_laplacian_1d(grid: Grid1D) -> Result<DiscreteOperator> {
    build_elliptic_1d(grid, &EllipticCoefficients::constant(1.0, 0.0))
}

/// `-L` for `L u = -(a u')' + c u`, with the flux differenced at midpoints:
/// `(A u)_i = [a_{i+1/2}(u_{i+1} - u_i) - a_{i-1/2}(u_i - u_{i-1})] / dx² - c_i u_i`.
pub fn build_elliptic_1d(grid: Grid1D, coeffs: &EllipticCoefficients) -> Result<DiscreteOperator> {
    let n = grid.n();
    let dx = grid.dx();
    let inv_dx2 = 1.0 / (dx * dx);
    // face k sits at a + (k + 1/2) dx, k = 0..=n
    let faces: Vec<f64> = (0..=n)
        .map(|k| coeffs.diffusion(grid.a() + (k as f64 + 0.5) * dx))
        .collect();
    if let Some((k, a)) = faces
        .iter()
        .enumerate()
        .find(|(_, a)| !(**a > 0.0 && a.is_finite()))
    {
        return Err(Error::param(
            "a_fn",
            format!(
                "diffusion coefficient {a} at x = {} is not positive",
                grid.a() + (k as f64 + 0.5) * dx
            ),
        ));
    }
    let mut m = BandMatrix::zeros(n, 1);
    for i in 0..n {
        let x = grid.node(i);
        let c = coeffs.reaction(x);
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::param(
                "c_fn",
                format!("reaction coefficient {c} at x = {x} is negative"),
            ));
        }
        let (west, east) = (faces[i] * inv_dx2, faces[i + 1] * inv_dx2);
        m.set(i, i, -(west + east) - c);
        if i > 0 {
            m.set(i, i - 1, west);
        }
        if i + 1 < n {
            m.set(i, i + 1, east);
        }
    }
    let weights: Arc<[f64]> = vec![dx; n].into();
    DiscreteOperator::new(m, weights, GridLayout::Line(grid))
}

/// Five-point polar Laplacian on the half-cell-offset grid.
///
/// Radial fluxes are differenced at faces `r_{j±1/2}`; the innermost face
/// has radius zero so the stencil needs no value at the origin. The outer
/// face `r = 1` carries the Dirichlet value, imposed through the half-cell
/// gradient `(0 - u) / (dr / 2)`. Weights `r_j dr dth` make `W A` symmetric.
pub fn build_laplacian_disk(grid: DiskGrid) -> Result<DiscreteOperator> {
    let (nr, nth) = (grid.nr(), grid.nth());
    let dr = grid.dr();
    let dth = grid.dth();
    let mut m = BandMatrix::zeros(grid.len(), nth);
    let mut weights = Vec::with_capacity(grid.len());
    for j in 0..nr {
        let r = grid.radius(j);
        let inner = j as f64 * dr;
        let outer = (j + 1) as f64 * dr;
        let radial = 1.0 / (r * dr * dr);
        let ang = 1.0 / (r * r * dth * dth);
        for i in 0..nth {
            let k = grid.index(j, i);
            weights.push(r * dr * dth);
            let mut diag = -2.0 * ang;
            if j > 0 {
                m.set(k, grid.index(j - 1, i), inner * radial);
                diag -= inner * radial;
            }
            if j + 1 < nr {
                m.set(k, grid.index(j + 1, i), outer * radial);
                diag -= outer * radial;
            } else {
                diag -= 2.0 * outer * radial;
            }
            m.add(k, grid.index(j, (i + 1) % nth), ang);
            m.add(k, grid.index(j, (i + nth - 1) % nth), ang);
            m.add(k, k, diag);
        }
    }
    DiscreteOperator::new(m, weights.into(), GridLayout::Disk(grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun;

    fn toeplitz_eig(n: usize, dx: f64, k: usize) -> f64 {
        let s = (k as f64 * PI / (2.0 * (n + 1) as f64)).sin();
        -4.0 / (dx * dx) * s * s
    }

    #[test]
    fn single_point_laplacian() {
        let op = build_laplacian_1d(Grid1D::new(-1.0, 1.0, 1).unwrap()).unwrap();
        assert_eq!(op.matrix().get(0, 0), -2.0);
        let v = apply_operator(&op, &op.field(vec![1.0]).unwrap()).unwrap();
        assert_eq!(v.values(), &[-2.0]);
        assert_eq!(op.mu_estimate(), -2.0);
    }

    #[test]
    fn three_point_log_norm_matches_closed_form() {
        let op = build_laplacian_1d(Grid1D::new(-1.0, 1.0, 3).unwrap()).unwrap();
        let expect = toeplitz_eig(3, 0.5, 1);
        assert!((expect + 2.343145750507619).abs() < 1e-12);
        assert!((op.mu_estimate() - expect).abs() < 1e-10 * expect.abs());
        assert!((estimate_log_norm(&op).unwrap() - expect).abs() < 1e-10 * expect.abs());
    }

    #[test]
    fn log_norm_tends_to_continuum_value() {
        let target = -PI * PI / 4.0;
        let mut prev = f64::INFINITY;
        for n in [15, 31, 63, 127, 255] {
            let op = build_laplacian_1d(Grid1D::new(-1.0, 1.0, n).unwrap()).unwrap();
            let err = (op.mu_estimate() - target).abs();
            assert!(err < prev);
            prev = err;
        }
        assert!(prev < 1e-4);
    }

    #[test]
    fn stencil_is_second_order_on_sine() {
        let u = |x: f64| (PI * (1.0 + x) / 2.0).sin();
        let mut errs = Vec::new();
        for n in [15usize, 31, 63, 127] {
            let g = Grid1D::new(-1.0, 1.0, n).unwrap();
            let op = build_laplacian_1d(g).unwrap();
            let v = op.sample(|c| u(c[0]));
            let av = apply_operator(&op, &v).unwrap();
            let k2 = (PI / 2.0).powi(2);
            let e = av
                .values()
                .iter()
                .zip(v.values())
                .map(|(a, b)| (a + k2 * b).abs())
                .fold(0.0, f64::max);
            errs.push(e);
        }
        for w in errs.windows(2) {
            let rate = (w[0] / w[1]).log2();
            assert!((1.9..=2.1).contains(&rate), "rate {rate}");
        }
    }

    #[test]
    fn stencil_consistency_on_non_eigenfunction() {
        // u = exp(x) sin(pi(1+x)) has u'' = e^x[(1 - pi^2) sin + 2 pi cos].
        let u = |x: f64| x.exp() * (PI * (1.0 + x)).sin();
        let upp = |x: f64| {
            let th = PI * (1.0 + x);
            x.exp() * ((1.0 - PI * PI) * th.sin() + 2.0 * PI * th.cos())
        };
        let mut errs = Vec::new();
        let mut g = Grid1D::new(-1.0, 1.0, 19).unwrap();
        for _ in 0..4 {
            let op = build_laplacian_1d(g).unwrap();
            let v = op.sample(|c| u(c[0]));
            let av = apply_operator(&op, &v).unwrap();
            let exact = op.sample(|c| upp(c[0]));
            errs.push(av.sub(&exact).unwrap().max_abs());
            g = g.refined();
        }
        for w in errs.windows(2) {
            let rate = (w[0] / w[1]).log2();
            assert!((1.9..=2.1).contains(&rate), "rate {rate}");
        }
    }

    #[test]
    fn elliptic_reduces_to_laplacian() {
        let g = Grid1D::new(-1.0, 1.0, 9).unwrap();
        let lap = build_laplacian_1d(g).unwrap();
        let ell = build_elliptic_1d(g, &EllipticCoefficients::constant(1.0, 0.0)).unwrap();
        assert_eq!(lap.matrix(), ell.matrix());
        let shifted = build_elliptic_1d(g, &EllipticCoefficients::constant(1.0, 1.0)).unwrap();
        for i in 0..9 {
            for j in 0..9 {
                let expect = lap.matrix().get(i, j) - if i == j { 1.0 } else { 0.0 };
                assert_eq!(shifted.matrix().get(i, j), expect);
            }
        }
        assert!((shifted.mu_estimate() - (lap.mu_estimate() - 1.0)).abs() < 1e-10);
    }

    #[test]
    fn variable_coefficient_assembly() {
        let g = Grid1D::new(-1.0, 1.0, 3).unwrap();
        let coeffs = EllipticCoefficients::new(|x| 1.0 + x * x, |_| 0.0);
        let op = build_elliptic_1d(g, &coeffs).unwrap();
        let m = op.matrix();
        // dx = 0.5, faces at -0.75, -0.25, 0.25, 0.75; 1/dx^2 = 4
        let a = |x: f64| 4.0 * (1.0 + x * x);
        assert_eq!(m.get(0, 1), a(-0.25));
        assert_eq!(m.get(1, 0), a(-0.25));
        assert_eq!(m.get(1, 2), a(0.25));
        assert_eq!(m.get(2, 1), a(0.25));
        assert_eq!(m.get(0, 0), -(a(-0.75) + a(-0.25)));
        assert_eq!(m.get(1, 1), -(a(-0.25) + a(0.25)));
        assert_eq!(m.get(2, 2), -(a(0.25) + a(0.75)));
        assert_eq!(m.get(0, 2), 0.0);
    }

    #[test]
    fn elliptic_rejects_nonpositive_diffusion() {
        let g = Grid1D::new(-1.0, 1.0, 5).unwrap();
        let bad = EllipticCoefficients::new(|x| x, |_| 0.0);
        assert!(matches!(
            build_elliptic_1d(g, &bad),
            Err(Error::InvalidParameter { name: "a_fn", .. })
        ));
        let neg_c = EllipticCoefficients::constant(1.0, -1.0);
        assert!(build_elliptic_1d(g, &neg_c).is_err());
    }

    #[test]
    fn disk_weighted_symmetry_and_constant() {
        let g = DiskGrid::new(8, 16).unwrap();
        let op = build_laplacian_disk(g).unwrap();
        let m = op.matrix();
        let w = op.norm_weights();
        for i in 0..g.len() {
            for j in m.row_range(i) {
                let (a, b) = (w[i] * m.get(i, j), w[j] * m.get(j, i));
                assert!((a - b).abs() <= 1e-13 * a.abs().max(b.abs()));
            }
        }
        // constant maps to zero away from the outer ring
        let ones = op.sample(|_| 1.0);
        let av = apply_operator(&op, &ones).unwrap();
        for k in 0..g.len() {
            if k / g.nth() + 1 < g.nr() {
                assert!(av.values()[k].abs() < 1e-10, "{}", av.values()[k]);
            }
        }
    }

    #[test]
    fn disk_smallest_eigenvalue_is_j01_squared() {
        // first Dirichlet eigenvalue of the unit disk is j_{0,1}^2 = 5.7831859629...
        let target = -5.783185962946784;
        let mut errs = Vec::new();
        for nr in [8, 16, 32] {
            let op = build_laplacian_disk(DiskGrid::new(nr, 4 * nr).unwrap()).unwrap();
            errs.push((op.mu_estimate() - target).abs());
        }
        assert!(errs[2] < errs[1] && errs[1] < errs[0]);
        assert!(errs[2] < 2e-3, "{errs:?}");
    }

    #[test]
    fn disk_mode_11_residual_and_rayleigh_quotient() {
        let j11 = specfun::j1_first_zero();
        let lam = j11 * j11;
        let mut rq_errs = Vec::new();
        let mut res = Vec::new();
        for nr in [8usize, 16, 32] {
            let g = DiskGrid::new(nr, 4 * nr).unwrap();
            let op = build_laplacian_disk(g).unwrap();
            let phi = op.sample(|c| {
                let r = c[0].hypot(c[1]);
                specfun::bessel_j1(j11 * r) * c[0] / r
            });
            let aphi = apply_operator(&op, &phi).unwrap();
            let rq = aphi.dot(&phi).unwrap() / phi.dot(&phi).unwrap();
            rq_errs.push((rq + lam).abs());
            // residual away from the origin, where polar truncation errors
            // scale like dr / r
            let mut e: f64 = 0.0;
            for k in 0..g.len() {
                let j = k / g.nth();
                if g.radius(j) > 0.25 && j + 1 < nr {
                    e = e.max((aphi.values()[k] + lam * phi.values()[k]).abs());
                }
            }
            res.push(e);
        }
        assert!(rq_errs[2] < 0.05, "{rq_errs:?}");
        for w in rq_errs.windows(2) {
            assert!((w[0] / w[1]).log2() > 1.8, "{rq_errs:?}");
        }
        for w in res.windows(2) {
            assert!((w[0] / w[1]).log2() > 1.8, "{res:?}");
        }
    }

    #[test]
    fn not_dissipative_is_rejected() {
        assert!(matches!(
            DiscreteOperator::from_dense(1, 0, &[2.0]),
            Err(Error::NotDissipative(_))
        ));
        assert!(matches!(
            DiscreteOperator::from_dense(2, 1, &[-2.0, 1.0, 0.0, -2.0]),
            Err(Error::NotSymmetric { .. })
        ));
        // symmetric but indefinite
        assert!(DiscreteOperator::from_dense(2, 1, &[-1.0, 2.0, 2.0, -1.0]).is_err());
    }

    #[test]
    fn grid_validation() {
        assert!(Grid1D::new(1.0, -1.0, 3).is_err());
        assert!(Grid1D::new(-1.0, 1.0, 0).is_err());
        assert_eq!(Grid1D::with_spacing(-1.0, 1.0, 0.04).unwrap().n(), 49);
        assert!(Grid1D::with_spacing(-1.0, 1.0, 0.3).is_err());
        assert_eq!(Grid1D::new(-1.0, 1.0, 49).unwrap().refined().n(), 99);
        assert!(DiskGrid::new(1, 8).is_err());
        assert!(DiskGrid::new(4, 3).is_err());
    }
}
