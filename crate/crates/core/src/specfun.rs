//! Special functions and closed-form reference solutions.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::operators::DiskGrid;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function for positive arguments (Lanczos, g = 7, nine terms).
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::param("x", format!("gamma needs x > 0, got {x}")));
    }
    Ok(gamma(x))
}

pub(crate) fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection keeps the Lanczos sum in its accurate range
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    let z = x - 1.0;
    let mut acc = LANCZOS_COEFFS[0];
    for (k, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (z + k as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * acc
}

const J1_SERIES_LIMIT: f64 = 12.0;

/// Bessel function of the first kind, order one.
pub fn bessel_j1(x: f64) -> f64 {
    if x < 0.0 {
        return -bessel_j1(-x);
    }
    if x <= J1_SERIES_LIMIT {
        j1_series(x)
    } else {
        j1_asymptotic(x)
    }
}

fn j1_series(x: f64) -> f64 {
    let half = 0.5 * x;
    let q = -half * half;
    let mut term = half;
    let mut sum = term;
    for m in 1..200 {
        let m = m as f64;
        term *= q / (m * (m + 1.0));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// Hankel expansion, summed until the terms stop shrinking.
fn j1_asymptotic(x: f64) -> f64 {
    let mu = 4.0;
    let eight_x = 8.0 * x;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..60 {
        let kf = (2 * k - 1) as f64;
        term *= (mu - kf * kf) / (k as f64 * eight_x);
        if term.abs() >= prev {
            break;
        }
        prev = term.abs();
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - 0.75 * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// First positive zero `j_{1,1}` of `J_1`, by bisection on `[3, 4.5]`.
pub fn j1_first_zero() -> f64 {
    let (mut lo, mut hi) = (3.0_f64, 4.5_f64);
    let flo = bessel_j1(lo);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        let fm = bessel_j1(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Modified Bessel function of the second kind, `K_nu(x)` for `|nu| < 2`,
/// from `K_nu(x) = int_0^inf exp(-x cosh u) cosh(nu u) du`.
///
/// The integrand is analytic and even in `u`, so the trapezoid rule on the
/// truncated half-line converges geometrically; the step is halved until
/// successive sums agree to `1e-15`.
pub fn bessel_k(order: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::param("x", format!("K_nu needs x > 0, got {x}")));
    }
    if !(order.abs() < 2.0) {
        return Err(Error::param(
            "order",
            format!("K_nu supports |nu| < 2, got {order}"),
        ));
    }
    // exp(-x) is factored out to keep large x representable
    let g = |u: f64| (-x * (u.cosh() - 1.0)).exp() * (order * u).cosh();
    let cutoff = {
        let mut peak = g(0.0);
        let mut u = 0.0;
        loop {
            u += 0.25;
            let v = g(u);
            peak = peak.max(v);
            if v < 1e-16 * peak {
                break u;
            }
        }
    };
    let mut step = 0.5;
    let mut sum = 0.5 * g(0.0);
    let mut k = 1;
    while k as f64 * step <= cutoff {
        sum += g(k as f64 * step);
        k += 1;
    }
    let mut estimate = step * sum;
    for _ in 0..20 {
        // midpoints of the current rule
        let mut mid = 0.0;
        let mut u = 0.5 * step;
        while u <= cutoff {
            mid += g(u);
            u += step;
        }
        sum += mid;
        step *= 0.5;
        let refined = step * sum;
        let done = (refined - estimate).abs() <= 1e-15 * refined.abs();
        estimate = refined;
        if done {
            break;
        }
    }
    Ok(estimate * (-x).exp())
}

/// Profile of the exact extension for a single mode:
/// `(2^{1-s} / Gamma(s)) x^s K_s(x)`, equal to 1 at `x = 0` and decaying
/// like `exp(-x)`. Here `x = sqrt(lambda) t`.
pub fn extension_profile(s: f64, x: f64) -> Result<f64> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::param("s", format!("need s in (0, 1], got {s}")));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    let k = bessel_k(s, x)?;
    Ok(2f64.powf(1.0 - s) / gamma(s) * x.powf(s) * k)
}

/// `u(x) = sin(pi (1 + x) / 2)` on `(-1, 1)`.
pub fn exact_solution_1d(x: f64) -> f64 {
    (PI * (1.0 + x) / 2.0).sin()
}

/// `f(x) = (pi/2)^{2s} sin(pi (1 + x) / 2)`, the data whose spectral
/// fractional solve is [`exact_solution_1d`].
pub fn forcing_1d(x: f64, s: f64) -> f64 {
    (PI / 2.0).powf(2.0 * s) * exact_solution_1d(x)
}

/// `phi_{1,1}(r, theta) = a11 J_1(j_{1,1} r) cos(theta)`.
pub fn disk_mode(r: f64, theta: f64, a11: f64) -> f64 {
    a11 * bessel_j1(j1_first_zero() * r) * theta.cos()
}

/// `A_{1,1}` making `phi_{1,1}` unit length in the grid's weighted norm.
pub fn disk_normalization(grid: &DiskGrid) -> f64 {
    let j11 = j1_first_zero();
    let dr_dth = grid.dr() * grid.dth();
    let mut sq = 0.0;
    for j in 0..grid.nr() {
        let r = grid.radius(j);
        let radial = bessel_j1(j11 * r);
        for i in 0..grid.nth() {
            let v = radial * grid.angle(i).cos();
            sq += r * dr_dth * v * v;
        }
    }
    1.0 / sq.sqrt()
}

/// Exact extension of `phi_{1,1}` on the unit disk:
/// `u(r, theta, t) = (2^{1-s}/Gamma(s)) (sqrt(lambda) t)^s K_s(sqrt(lambda) t) phi_{1,1}(r, theta)`
/// with `lambda = j_{1,1}^2`. Its trace at `t -> 0+` is `phi_{1,1}`.
pub fn exact_extension_disk(r: f64, theta: f64, t: f64, s: f64, a11: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::param("t", format!("need t > 0, got {t}")));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::param("s", format!("need s in (0, 1), got {s}")));
    }
    let x = j1_first_zero() * t;
    Ok(extension_profile(s, x)? * disk_mode(r, theta, a11))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExactKind {
    Sine1D,
    DiskMode,
}

/// Closed-form solution of one of the reference problems.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactSolutionSpec {
    pub kind: ExactKind,
    pub s: f64,
    /// `A_{1,1}` for the disk mode (`B_{1,1} = 0`); unused for `Sine1D`.
    pub normalization: f64,
}

impl ExactSolutionSpec {
    pub fn sine_1d(s: f64) -> Self {
        ExactSolutionSpec {
            kind: ExactKind::Sine1D,
            s,
            normalization: 1.0,
        }
    }

    pub fn disk(s: f64, grid: &DiskGrid) -> Self {
        ExactSolutionSpec {
            kind: ExactKind::DiskMode,
            s,
            normalization: disk_normalization(grid),
        }
    }

    /// Eigenvalue of the continuum mode.
    pub fn eigenvalue(&self) -> f64 {
        match self.kind {
            ExactKind::Sine1D => (PI / 2.0).powi(2),
            ExactKind::DiskMode => j1_first_zero().powi(2),
        }
    }

    /// Trace `u(., 0)` at Cartesian point `p`.
    pub fn trace(&self, p: &[f64]) -> f64 {
        match self.kind {
            ExactKind::Sine1D => exact_solution_1d(p[0]),
            ExactKind::DiskMode => {
                let r = p[0].hypot(p[1]);
                let th = p[1].atan2(p[0]);
                disk_mode(r, th, self.normalization)
            }
        }
    }

    /// Right-hand side `lambda^s u(., 0)`.
    pub fn forcing(&self, p: &[f64]) -> f64 {
        self.eigenvalue().powf(self.s) * self.trace(p)
    }

    /// Extension `u(., t)` at Cartesian point `p`.
    pub fn extension(&self, p: &[f64], t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::param("t", format!("need t >= 0, got {t}")));
        }
        let x = self.eigenvalue().sqrt() * t;
        Ok(extension_profile(self.s, x)? * self.trace(p))
    }
}
