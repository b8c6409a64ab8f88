//! Rational-semigroup approximation of the Bessel-type extension problem
//!
//! ```text
//! u''(t) + (1 - 2s)/t u'(t) = -A u(t),  u(0) = u0,
//! ```
//!
//! whose solution is `u(t) = 1/Gamma(s) int_0^inf z^{s-1} e^{-t²/4z} T(z) f dz`
//! with `f = (-A)^s u0`. The integral is truncated at `M`, split into
//! `N + 1` cells of width `h = M / (N + 1)`, the weight `z^{s-1}` is
//! integrated exactly on each cell and `T(z_{k+1/2})` is replaced by
//! `S(h)^k S(h/2)`:
//!
//! ```text
//! v(t) = sum_{k=0}^{N} gamma_k(t) S(h)^k S(h/2) f,
//! gamma_k(t) = h^s [(k+1)^s - k^s] / Gamma(1+s) * exp(-t² / (4 z_{k+1/2})).
//! ```
//!
//! The powers `S(h)^k f` are produced one after another, Horner style, so a
//! batch of `t` values costs one stepper chain of `N + 1` applications.

use crate::error::{Error, Result};
use crate::field::FieldVector;
use crate::operators::DiscreteOperator;
use crate::semigroup::{make_stepper, Stepper};
use crate::specfun::gamma;

/// Default truncation target for `M^{s-1} e^{mu M}`.
pub const TRUNCATION_TARGET: f64 = 1e-10;
/// Largest automatically chosen truncation.
pub const MAX_AUTO_TRUNCATION: f64 = 100.0;

/// Above this index `(k+1)^s - k^s` is evaluated as `k^s expm1(s ln1p(1/k))`.
const STABLE_DIFF_THRESHOLD: usize = 10_000;

/// Chain values below this fraction of the data are flushed to zero so the
/// stepper never works on subnormals.
const FLUSH_FRACTION: f64 = 1e-250;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtensionConfig {
    s: f64,
    m: f64,
    n: usize,
}

impl ExtensionConfig {
    pub fn new(s: f64, m: f64, n: usize) -> Result<Self> {
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::param("s", format!("need s in (0, 1], got {s}")));
        }
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::param("M", format!("need M > 0, got {m}")));
        }
        if n == 0 {
            return Err(Error::param("N", "need N >= 1"));
        }
        Ok(ExtensionConfig { s, m, n })
    }

    /// Configuration with step `h`; `M / h` must be an integer (it is `N + 1`).
    pub fn with_step(s: f64, m: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::param("h", format!("need h > 0, got {h}")));
        }
        let cells = m / h;
        let rounded = cells.round();
        if (cells - rounded).abs() > 1e-8 * cells.max(1.0) || rounded < 2.0 {
            return Err(Error::param(
                "h",
                format!("M = {m} is not a multiple (>= 2) of h = {h}"),
            ));
        }
        Self::new(s, m, rounded as usize - 1)
    }

    /// Step `h` with `M` picked so that `M^{s-1} e^{mu M} <= 1e-10`, capped at
    /// 100, then rounded up to a multiple of `h`.
    pub fn with_auto_truncation(s: f64, mu: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::param("h", format!("need h > 0, got {h}")));
        }
        let m = default_truncation(s, mu)?;
        let cells = (m / h).ceil().max(2.0);
        Self::new(s, cells * h, cells as usize - 1)
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// Truncation point `M`.
    pub fn m(&self) -> f64 {
        self.m
    }

    /// Index of the last quadrature cell.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.m / (self.n + 1) as f64
    }

    /// `z_k = k h`, `k = 0..=N+1`.
    pub fn z_node(&self, k: usize) -> f64 {
        k as f64 * self.h()
    }

    /// `z_{k+1/2} = z_k + h/2`.
    pub fn half_node(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.h()
    }

    /// `M^s / Gamma(1+s)`, the exact sum of the weights at `t = 0`.
    pub fn weight_sum_bound(&self) -> f64 {
        self.m.powf(self.s) / gamma(1.0 + self.s)
    }
}

/// Smallest `M <= 100` with `M^{s-1} e^{mu M} <= 1e-10`.
pub fn default_truncation(s: f64, mu: f64) -> Result<f64> {
    if !(mu < 0.0) {
        return Err(Error::param("mu", format!("need mu(A) < 0, got {mu}")));
    }
    let log_target = TRUNCATION_TARGET.ln();
    let g = |m: f64| (s - 1.0) * m.ln() + mu * m;
    if g(MAX_AUTO_TRUNCATION) > log_target {
        return Ok(MAX_AUTO_TRUNCATION);
    }
    // g is decreasing for M > 0
    let (mut lo, mut hi) = (1e-12, MAX_AUTO_TRUNCATION);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > log_target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// `(k+1)^s - k^s`.
fn power_difference(k: usize, s: f64) -> f64 {
    if k > STABLE_DIFF_THRESHOLD {
        let kf = k as f64;
        kf.powf(s) * (s * (1.0 / kf).ln_1p()).exp_m1()
    } else {
        ((k + 1) as f64).powf(s) - (k as f64).powf(s)
    }
}

/// Quadrature weights `gamma_0(t) ..= gamma_N(t)`.
pub fn weights(cfg: &ExtensionConfig, t: f64) -> Result<Vec<f64>> {
    check_t(t)?;
    let coeff = cfg.h().powf(cfg.s) / gamma(1.0 + cfg.s);
    Ok((0..=cfg.n)
        .map(|k| coeff * power_difference(k, cfg.s) * (-t * t / (4.0 * cfg.half_node(k))).exp())
        .collect())
}

fn check_t(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::param("t", format!("need finite t >= 0, got {t}")));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct ExtensionResult {
    pub t_values: Vec<f64>,
    /// `v(t)` for each requested `t`, in the same order.
    pub profiles: Vec<FieldVector>,
    pub config: ExtensionConfig,
    /// Stepper applications spent (including the initial half step).
    pub stepper_applications: usize,
}

/// Sums `gamma_k(t) w_j` over the cells `k = first, first + stride, ...`
/// while `w_{j+1} = step(w_j)`.
struct Chain<'a> {
    cfg: &'a ExtensionConfig,
    step: &'a Stepper,
    first: usize,
    stride: usize,
}

impl Chain<'_> {
    fn run(&self, mut w: Vec<f64>, t_values: &[f64], flush_below: f64) -> (Vec<Vec<f64>>, usize) {
        let n = w.len();
        let s = self.cfg.s;
        let h = self.cfg.h();
        let coeff = h.powf(s) / gamma(1.0 + s);
        let quarter_t2: Vec<f64> = t_values.iter().map(|t| t * t / (4.0 * h)).collect();
        let mut accs = vec![vec![0.0; n]; t_values.len()];
        let mut next = vec![0.0; n];
        let mut applications = 0;
        let mut k = self.first;
        let last = self.cfg.n;
        let mut flushed = false;
        while k <= last {
            if !flushed {
                let base = coeff * power_difference(k, s);
                let mid = k as f64 + 0.5;
                for (acc, q) in accs.iter_mut().zip(&quarter_t2) {
                    let g = base * (-q / mid).exp();
                    if g != 0.0 {
                        for (a, x) in acc.iter_mut().zip(&w) {
                            *a += g * x;
                        }
                    }
                }
            }
            if k + self.stride > last {
                break;
            }
            self.step.apply_into(&w, &mut next);
            std::mem::swap(&mut w, &mut next);
            applications += 1;
            if !flushed && w.iter().all(|x| x.abs() < flush_below) {
                w.iter_mut().for_each(|x| *x = 0.0);
                flushed = true;
            }
            k += self.stride;
        }
        (accs, applications)
    }
}

fn validate(op: &DiscreteOperator, f: &FieldVector, t_values: &[f64]) -> Result<()> {
    op.check_field(f)?;
    if t_values.is_empty() {
        return Err(Error::param("t_values", "at least one t is required"));
    }
    t_values.iter().try_for_each(|&t| check_t(t))
}

/// Evaluates `v(t)` for every requested `t` in one streaming pass.
///
/// Exactly `N + 1` stepper applications are made regardless of how many
/// `t` values are requested, and the sum runs in ascending `k`, so equal
/// inputs give bit-identical outputs.
pub fn extend(
    op: &DiscreteOperator,
    f: &FieldVector,
    cfg: &ExtensionConfig,
    t_values: &[f64],
) -> Result<ExtensionResult> {
    validate(op, f, t_values)?;
    let h = cfg.h();
    let full = make_stepper(op, h)?;
    let half = make_stepper(op, 0.5 * h)?;
    let mut g = vec![0.0; f.len()];
    half.apply_into(f.values(), &mut g);
    let chain = Chain {
        cfg,
        step: &full,
        first: 0,
        stride: 1,
    };
    let (accs, applications) = chain.run(g, t_values, FLUSH_FRACTION * f.max_abs());
    finish(f, cfg, t_values, accs, applications + 1)
}

fn finish(
    f: &FieldVector,
    cfg: &ExtensionConfig,
    t_values: &[f64],
    accs: Vec<Vec<f64>>,
    applications: usize,
) -> Result<ExtensionResult> {
    let profiles = accs
        .into_iter()
        .map(|a| f.with_values(a))
        .collect::<Result<Vec<_>>>()?;
    if let Some(p) = profiles.iter().position(|p| !p.is_finite()) {
        return Err(Error::Degenerate(format!(
            "non-finite profile at t = {}",
            t_values[p]
        )));
    }
    Ok(ExtensionResult {
        t_values: t_values.to_vec(),
        profiles,
        config: *cfg,
        stepper_applications: applications,
    })
}

/// Trace `v(0)`, approximating the solution of `(-A)^s u = f`.
pub fn solve_fractional(
    op: &DiscreteOperator,
    f: &FieldVector,
    cfg: &ExtensionConfig,
) -> Result<FieldVector> {
    let mut res = extend(op, f, cfg, &[0.0])?;
    Ok(res.profiles.pop().expect("one profile per t"))
}

/// Conormal derivative `-t^{1-2s} v'(t)` at `t = t_small`, with `v'` from a
/// central difference of half-width `t_small / 10`. Tends to `c_s f` with
/// `c_s = 2^{1-2s} Gamma(1-s) / Gamma(s)` as `t_small -> 0`.
pub fn conormal_estimate(
    op: &DiscreteOperator,
    f: &FieldVector,
    cfg: &ExtensionConfig,
    t_small: f64,
) -> Result<FieldVector> {
    let s = cfg.s();
    if !(s < 1.0) {
        return Err(Error::param(
            "s",
            "the conormal derivative needs s in (0, 1); s = 1 is degenerate",
        ));
    }
    if !(t_small > 0.0) || !t_small.is_finite() {
        return Err(Error::param(
            "t_small",
            format!("need t_small > 0, got {t_small}"),
        ));
    }
    let delta = t_small / 10.0;
    let res = extend(op, f, cfg, &[t_small - delta, t_small + delta])?;
    let scale = -t_small.powf(1.0 - 2.0 * s) / (2.0 * delta);
    let values = res.profiles[1]
        .values()
        .iter()
        .zip(res.profiles[0].values())
        .map(|(p, m)| scale * (p - m))
        .collect();
    f.with_values(values)
}

/// `c_s = 2^{1-2s} Gamma(1-s) / Gamma(s)`.
pub fn conormal_constant(s: f64) -> f64 {
    2f64.powf(1.0 - 2.0 * s) * gamma(1.0 - s) / gamma(s)
}

/// Even/odd split of the series evaluated by two independent chains, each
/// stepping with `S(2h)` in place of `S(h)^2`:
///
/// ```text
/// v(t) ~ sum_j gamma_{2j} S(2h)^j g + sum_j gamma_{2j+1} S(2h)^j S(h) g,   g = S(h/2) f.
/// ```
///
/// The chains run on two threads. The result differs from [`extend`] by
/// `O(h²) |f|`.
pub fn extend_parallel_split(
    op: &DiscreteOperator,
    f: &FieldVector,
    cfg: &ExtensionConfig,
    t_values: &[f64],
) -> Result<ExtensionResult> {
    validate(op, f, t_values)?;
    let h = cfg.h();
    let half = make_stepper(op, 0.5 * h)?;
    let full = make_stepper(op, h)?;
    let double = make_stepper(op, 2.0 * h)?;
    let flush = FLUSH_FRACTION * f.max_abs();

    let mut g = vec![0.0; f.len()];
    half.apply_into(f.values(), &mut g);
    let mut g_odd = vec![0.0; f.len()];
    full.apply_into(&g, &mut g_odd);

    let even = Chain {
        cfg,
        step: &double,
        first: 0,
        stride: 2,
    };
    let odd = Chain {
        cfg,
        step: &double,
        first: 1,
        stride: 2,
    };
    let ((mut accs, n_even), (odd_accs, n_odd)) = std::thread::scope(|scope| {
        let odd_handle = scope.spawn(|| odd.run(g_odd, t_values, flush));
        let even_result = even.run(g, t_values, flush);
        (even_result, odd_handle.join().expect("odd chain panicked"))
    });
    for (a, b) in accs.iter_mut().zip(odd_accs) {
        for (x, y) in a.iter_mut().zip(b) {
            *x += y;
        }
    }
    finish(f, cfg, t_values, accs, n_even + n_odd + 2)
}
