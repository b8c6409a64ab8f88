//! The Crank–Nicolson stepper `S(h)` plus dense oracles for the exact
//! semigroup, spectral fractional powers and the Balakrishnan integral.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::banded::{BandLu, BandMatrix};
use crate::error::{Error, Result};
use crate::field::FieldVector;
use crate::operators::DiscreteOperator;
use crate::specfun::gamma;

/// `S(h) = (I - h/2 A)^{-1} (I + h/2 A)` with the left factor LU-factored once.
#[derive(Clone, Debug)]
pub struct Stepper {
    h: f64,
    minus_half: BandLu,
    plus_half: BandMatrix,
}

impl Stepper {
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn dim(&self) -> usize {
        self.plus_half.dim()
    }

    /// `out = S(h) v`. `out` doubles as the solve workspace.
    pub fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        self.plus_half.matvec_into(v, out);
        self.minus_half.solve_in_place(out);
    }

    /// Solves `(I - h/2 A) x = b` in place.
    pub fn solve_minus_half(&self, b: &mut [f64]) {
        self.minus_half.solve_in_place(b);
    }
}

pub fn make_stepper(op: &DiscreteOperator, h: f64) -> Result<Stepper> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::param("h", format!("step must be positive, got {h}")));
    }
    let a = op.matrix();
    let minus_half = a.shifted(1.0, -0.5 * h).factor()?;
    let plus_half = a.shifted(1.0, 0.5 * h);
    Ok(Stepper {
        h,
        minus_half,
        plus_half,
    })
}

pub fn apply_stepper(st: &Stepper, v: &FieldVector) -> Result<FieldVector> {
    if v.len() != st.dim() {
        return Err(Error::DimensionMismatch {
            expected: st.dim(),
            got: v.len(),
        });
    }
    let mut out = vec![0.0; v.len()];
    st.apply_into(v.values(), &mut out);
    v.with_values(out)
}

pub const DEFAULT_DENSE_CAP: usize = 512;

/// Eigenpairs of `A`, orthonormal in the weighted inner product.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    /// column-major, one eigenvector per column
    eigenvectors: DMatrix<f64>,
    weights: std::sync::Arc<[f64]>,
}

impl SpectralDecomposition {
    /// Ascending, all negative.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, k: usize) -> FieldVector {
        FieldVector::new(
            self.eigenvectors.column(k).iter().copied().collect(),
            self.weights.clone(),
        )
        .expect("eigenvector length matches weights")
    }

    /// `sum_k m(lambda_k) <v, phi_k> phi_k`.
    pub fn apply_function(
        &self,
        v: &FieldVector,
        multiplier: impl Fn(f64) -> f64,
    ) -> Result<FieldVector> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        let n = self.dim();
        let mut out = vec![0.0; n];
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            let col = self.eigenvectors.column(k);
            let coef: f64 = col
                .iter()
                .zip(v.values())
                .zip(self.weights.iter())
                .map(|((p, x), w)| w * p * x)
                .sum();
            let scale = multiplier(lam) * coef;
            if scale != 0.0 {
                for (o, p) in out.iter_mut().zip(col.iter()) {
                    *o += scale * p;
                }
            }
        }
        v.with_values(out)
    }

    /// `(-A)^p v` for any real power `p`; negative powers invert.
    pub fn power_apply(&self, p: f64, v: &FieldVector) -> Result<FieldVector> {
        self.apply_function(v, |lam| (-lam).powf(p))
    }
}

pub fn spectral_decompose(op: &DiscreteOperator) -> Result<SpectralDecomposition> {
    spectral_decompose_capped(op, DEFAULT_DENSE_CAP)
}

/// Dense eigendecomposition of `W^{1/2} A W^{-1/2}` (symmetric), mapped back
/// to weighted-orthonormal eigenvectors of `A`.
pub fn spectral_decompose_capped(
    op: &DiscreteOperator,
    cap: usize,
) -> Result<SpectralDecomposition> {
    let n = op.dimension();
    if n > cap {
        return Err(Error::OracleCapExceeded { dimension: n, cap });
    }
    let a = op.matrix();
    let sw: Vec<f64> = op.norm_weights().iter().map(|w| w.sqrt()).collect();
    let mut b = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in a.row_range(i) {
            b[(i, j)] = sw[i] * a.get(i, j) / sw[j];
        }
    }
    let sym = (&b + b.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vecs = DMatrix::<f64>::zeros(n, n);
    for (c, &k) in order.iter().enumerate() {
        let q = eig.eigenvectors.column(k);
        // fix the sign so the largest-magnitude entry is positive
        let pivot = q
            .iter()
            .fold(0.0f64, |m, x| if x.abs() > m.abs() { *x } else { m });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vecs[(i, c)] = sign * q[i] / sw[i];
        }
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors: vecs,
        weights: op.norm_weights().clone(),
    })
}

/// Exact `T(z) v = exp(z A) v` on the discrete operator.
pub fn spectral_semigroup_apply(
    dec: &SpectralDecomposition,
    z: f64,
    v: &FieldVector,
) -> Result<FieldVector> {
    if !(z >= 0.0) {
        return Err(Error::param("z", format!("need z >= 0, got {z}")));
    }
    dec.apply_function(v, |lam| (lam * z).exp())
}

/// `(-A)^s v` for `s` in `(0, 1]`.
pub fn spectral_fractional_apply(
    dec: &SpectralDecomposition,
    s: f64,
    v: &FieldVector,
) -> Result<FieldVector> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::param("s", format!("need s in (0, 1], got {s}")));
    }
    dec.power_apply(s, v)
}

const BALAKRISHNAN_TAIL: f64 = 1e-12;

/// `(-A)^s v` from the Balakrishnan integral
/// `sin(pi s)/pi * int_0^inf z^{s-1} (z - A)^{-1} (-A) v dz`.
///
/// With `z = e^y` the integrand is analytic in a strip of half-width `pi`
/// and decays exponentially at both ends, so a plain trapezoid rule on
/// `[y_lo, y_hi]` converges geometrically. The interval is chosen from the
/// spectrum bounds `-mu(A)` and the row-sum bound so the neglected tails are
/// below `1e-12` of each mode's peak.
pub fn balakrishnan_apply(
    op: &DiscreteOperator,
    s: f64,
    v: &FieldVector,
    nquad: usize,
) -> Result<FieldVector> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::param(
            "s",
            format!("Balakrishnan representation needs s in (0, 1), got {s}"),
        ));
    }
    if nquad < 16 {
        return Err(Error::param(
            "nquad",
            format!("need at least 16 nodes, got {nquad}"),
        ));
    }
    op.check_field(v)?;
    let lam_min = -op.mu_estimate();
    let lam_max = op.spectral_radius_bound().max(lam_min);
    let tail = BALAKRISHNAN_TAIL.ln().abs();
    let y_lo = lam_min.ln() - tail / s;
    let y_hi = lam_max.ln() + tail / (1.0 - s);
    let dy = (y_hi - y_lo) / (nquad - 1) as f64;

    let a = op.matrix();
    let rhs: Vec<f64> = a.matvec(v.values()).into_iter().map(|x| -x).collect();
    let mut acc = vec![0.0; v.len()];
    let mut x = vec![0.0; v.len()];
    for j in 0..nquad {
        let y = y_lo + j as f64 * dy;
        let z = y.exp();
        let endpoint = if j == 0 || j == nquad - 1 { 0.5 } else { 1.0 };
        // (z I - A)
        let lu = a.shifted(z, -1.0).factor()?;
        x.copy_from_slice(&rhs);
        lu.solve_in_place(&mut x);
        let w = endpoint * dy * (s * y).exp();
        for (o, xi) in acc.iter_mut().zip(&x) {
            *o += w * xi;
        }
    }
    let scale = 1.0 / (gamma(s) * gamma(1.0 - s));
    acc.iter_mut().for_each(|o| *o *= scale);
    v.with_values(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{build_laplacian_1d, build_laplacian_disk, DiskGrid, Grid1D};
    use std::f64::consts::PI;

    fn lap(n: usize) -> DiscreteOperator {
        build_laplacian_1d(Grid1D::new(-1.0, 1.0, n).unwrap()).unwrap()
    }

    fn scalar(a: f64) -> DiscreteOperator {
        DiscreteOperator::from_dense(1, 0, &[a]).unwrap()
    }

    #[test]
    fn scalar_stepper_factors() {
        let op = scalar(-2.0);
        let v = op.field(vec![1.0]).unwrap();
        let st = make_stepper(&op, 1.0).unwrap();
        assert_eq!(apply_stepper(&st, &v).unwrap().values(), &[0.0]);
        let st = make_stepper(&op, 0.01).unwrap();
        let got = apply_stepper(&st, &v).unwrap().values()[0];
        assert!((got - 0.99 / 1.01).abs() < 1e-15);
        assert!((got - 0.980198).abs() < 1e-6);
        assert!(make_stepper(&op, 0.0).is_err());
        assert!(make_stepper(&op, -1.0).is_err());
    }

    #[test]
    fn stepper_on_eigenvector_and_powers() {
        let n = 31;
        let op = lap(n);
        let dx = 2.0 / (n + 1) as f64;
        let lam = 4.0 / (dx * dx) * (PI / (2.0 * (n + 1) as f64)).sin().powi(2);
        let phi = op.sample(|c| (PI * (1.0 + c[0]) / 2.0).sin());
        let h = 0.05;
        let rho = (1.0 - h * lam / 2.0) / (1.0 + h * lam / 2.0);
        let st = make_stepper(&op, h).unwrap();
        let once = apply_stepper(&st, &phi).unwrap();
        let err = once.sub(&phi.scaled(rho)).unwrap().max_abs();
        assert!(err < 1e-12, "{err}");
        let mut w = phi.clone();
        for k in 1..=1000 {
            w = apply_stepper(&st, &w).unwrap();
            if k % 250 == 0 {
                let expect = phi.scaled(rho.powi(k));
                assert!(w.sub(&expect).unwrap().max_abs() < 1e-10);
            }
        }
        let zero = apply_stepper(&st, &op.zeros()).unwrap();
        assert_eq!(zero.max_abs(), 0.0);
        assert!(apply_stepper(&st, &lap(5).zeros()).is_err());
    }

    #[test]
    fn minus_half_solve_residual() {
        let op = build_laplacian_disk(DiskGrid::new(6, 12).unwrap()).unwrap();
        let h = 0.1;
        let st = make_stepper(&op, h).unwrap();
        let b: Vec<f64> = (0..op.dimension()).map(|i| (i as f64).cos()).collect();
        let mut x = b.clone();
        st.solve_minus_half(&mut x);
        let ax = op.matrix().matvec(&x);
        let r: f64 = x
            .iter()
            .zip(&ax)
            .zip(&b)
            .map(|((x, ax), b)| (x - 0.5 * h * ax - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let bn = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(r <= 1e-12 * bn);
    }

    #[test]
    fn decomposition_of_small_laplacian() {
        let op = scalar(-2.0);
        let dec = spectral_decompose(&op).unwrap();
        assert_eq!(dec.eigenvalues(), &[-2.0]);
        assert!((dec.eigenvector(0).values()[0] - 1.0).abs() < 1e-15);

        let op = lap(3);
        let dec = spectral_decompose(&op).unwrap();
        let mut expect: Vec<f64> = (1..=3)
            .map(|k| -16.0 * (k as f64 * PI / 8.0).sin().powi(2))
            .collect();
        expect.sort_by(f64::total_cmp);
        for (a, b) in dec.eigenvalues().iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn decomposition_residual_and_orthonormality() {
        for op in [
            lap(40),
            build_laplacian_disk(DiskGrid::new(6, 16).unwrap()).unwrap(),
        ] {
            let dec = spectral_decompose(&op).unwrap();
            for k in 0..dec.dim() {
                let phi = dec.eigenvector(k);
                let aphi = crate::operators::apply_operator(&op, &phi).unwrap();
                let res = aphi.sub(&phi.scaled(dec.eigenvalues()[k])).unwrap().norm();
                assert!(
                    res <= 1e-8 * dec.eigenvalues()[k].abs().max(1.0),
                    "k={k} res={res}"
                );
                for j in 0..=k {
                    let ip = phi.dot(&dec.eigenvector(j)).unwrap();
                    let target = if j == k { 1.0 } else { 0.0 };
                    assert!((ip - target).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn eigenvectors_are_sampled_sines() {
        let n = 31;
        let op = lap(n);
        let dec = spectral_decompose(&op).unwrap();
        // largest eigenvalue is last: k = 1 mode
        let top = dec.eigenvector(n - 1);
        let sine = op.sample(|c| (PI * (1.0 + c[0]) / 2.0).sin());
        let sine = sine.scaled(1.0 / sine.norm());
        let err = top.sub(&sine).unwrap().max_abs();
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn cap_is_enforced() {
        let op = lap(20);
        assert!(matches!(
            spectral_decompose_capped(&op, 10),
            Err(Error::OracleCapExceeded {
                dimension: 20,
                cap: 10
            })
        ));
    }

    #[test]
    fn semigroup_oracle() {
        let op = scalar(-2.0);
        let dec = spectral_decompose(&op).unwrap();
        let v = op.field(vec![1.0]).unwrap();
        let t1 = spectral_semigroup_apply(&dec, 1.0, &v).unwrap();
        assert!((t1.values()[0] - (-2.0f64).exp()).abs() < 1e-15);
        assert!((t1.values()[0] - 0.135335).abs() < 1e-6);
        let t0 = spectral_semigroup_apply(&dec, 0.0, &v).unwrap();
        assert_eq!(t0.values(), v.values());
        assert!(spectral_semigroup_apply(&dec, -1.0, &v).is_err());
    }

    #[test]
    fn fractional_power_oracle() {
        let op = lap(24);
        let dec = spectral_decompose(&op).unwrap();
        let v = op.sample(|c| c[0].exp() * (1.0 - c[0] * c[0]));
        // s = 1 is -A v
        let one = spectral_fractional_apply(&dec, 1.0, &v).unwrap();
        let av = crate::operators::apply_operator(&op, &v).unwrap();
        let diff = one.sub(&av.scaled(-1.0)).unwrap().norm() / av.norm();
        assert!(diff < 1e-10);
        // round trip with the reciprocal multipliers
        let half = spectral_fractional_apply(&dec, 0.6, &v).unwrap();
        let back = dec.power_apply(-0.6, &half).unwrap();
        assert!(back.sub(&v).unwrap().norm() < 1e-10 * v.norm());
        // eigenvector: sqrt(lambda) scaling at s = 1/2
        let phi = dec.eigenvector(20);
        let lam = -dec.eigenvalues()[20];
        let got = spectral_fractional_apply(&dec, 0.5, &phi).unwrap();
        assert!(got.sub(&phi.scaled(lam.sqrt())).unwrap().max_abs() < 1e-9 * lam.sqrt());
        assert!(spectral_fractional_apply(&dec, 0.0, &v).is_err());
        assert!(spectral_fractional_apply(&dec, 1.5, &v).is_err());
    }

    #[test]
    fn balakrishnan_scalar() {
        let op = scalar(-2.0);
        let v = op.field(vec![1.0]).unwrap();
        let got = balakrishnan_apply(&op, 0.5, &v, 200).unwrap();
        assert!((got.values()[0] - 2f64.sqrt()).abs() < 1e-10);
        assert!(balakrishnan_apply(&op, 1.0, &v, 200).is_err());
        assert!(balakrishnan_apply(&op, 0.0, &v, 200).is_err());
        assert!(balakrishnan_apply(&op, 0.5, &v, 8).is_err());
    }

    #[test]
    fn balakrishnan_refinement_is_superalgebraic() {
        let op = lap(64);
        let dec = spectral_decompose(&op).unwrap();
        let v = op.sample(|c| (1.0 - c[0] * c[0]) * (3.0 * c[0]).cos());
        let exact = spectral_fractional_apply(&dec, 0.5, &v).unwrap();
        let err = |nq| {
            let b = balakrishnan_apply(&op, 0.5, &v, nq).unwrap();
            b.sub(&exact).unwrap().norm() / exact.norm()
        };
        let (e16, e32, e64) = (err(16), err(32), err(64));
        assert!(e16 / e32 > 4.0, "{e16} {e32}");
        assert!(e32 / e64 > 4.0, "{e32} {e64}");
        assert!(
            e32 / e64 > e16 / e32,
            "ratio should grow: {e16} {e32} {e64}"
        );
    }
}
