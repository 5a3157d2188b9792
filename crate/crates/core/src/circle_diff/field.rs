use std::cell::RefCell;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// Signed wavenumber of DFT index `j` on an `n`-point grid. The Nyquist index
/// maps to `+n/2`.
pub fn wavenumber(j: usize, n: usize) -> i64 {
    if j <= n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

fn check_grid(n: usize) -> Result<()> {
    if n < 16 || !n.is_power_of_two() {
        return Err(Error::InvalidGrid(n));
    }
    Ok(())
}

/// A real `2π`-periodic function sampled at `x_j = 2πj/N`.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicField {
    values: Vec<f64>,
}

impl PeriodicField {
    /// `N` must be a power of two, at least 16; all samples finite.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_grid(values.len())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { values })
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        check_grid(n)?;
        Self::new(Self::grid(n).into_iter().map(f).collect())
    }

    pub fn constant(n: usize, c: f64) -> Result<Self> {
        Self::from_fn(n, |_| c)
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::constant(n, 0.0)
    }

    /// `Σ a_k cos kx + b_k sin kx` with `cos[0]` the mean.
    pub fn from_modes(n: usize, cos: &[f64], sin: &[f64]) -> Result<Self> {
        let max_mode = cos.len().max(sin.len()).saturating_sub(1);
        if 2 * max_mode >= n {
            return Err(Error::InvalidArgument(format!(
                "mode {max_mode} is not resolved on a grid of {n} points"
            )));
        }
        Self::from_fn(n, |x| {
            let c: f64 = cos.iter().enumerate().map(|(k, a)| a * (k as f64 * x).cos()).sum();
            let s: f64 = sin.iter().enumerate().map(|(k, b)| b * (k as f64 * x).sin()).sum();
            c + s
        })
    }

    pub fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
    }

    /// Values unchecked for finiteness; used for intermediate stages.
    pub(crate) fn raw(values: Vec<f64>) -> Self {
        debug_assert!(check_grid(values.len()).is_ok());
        Self { values }
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub(crate) fn same_grid(&self, other: &Self) -> Result<()> {
        if self.n() != other.n() {
            return Err(Error::GridMismatch(self.n(), other.n()));
        }
        Ok(())
    }

    /// Normalised DFT: `u(x_j) = Σ ĉ_k e^{i k x_j}`.
    pub fn spectrum(&self) -> Vec<Complex64> {
        let n = self.n();
        let mut buf: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        plan(n, false).process(&mut buf);
        let s = 1.0 / n as f64;
        buf.iter_mut().for_each(|c| *c *= s);
        buf
    }

    /// Inverse of [`Self::spectrum`]; the imaginary part is discarded.
    pub fn from_spectrum(mut spec: Vec<Complex64>) -> Result<Self> {
        let n = spec.len();
        check_grid(n)?;
        plan(n, true).process(&mut spec);
        Self::new(spec.into_iter().map(|c| c.re).collect())
    }

    pub(crate) fn map_spectrum(&self, f: impl Fn(i64, Complex64) -> Complex64) -> Self {
        let n = self.n();
        let mut spec = self.spectrum();
        for (j, c) in spec.iter_mut().enumerate() {
            *c = f(wavenumber(j, n), *c);
        }
        plan(n, true).process(&mut spec);
        Self::raw(spec.into_iter().map(|c| c.re).collect())
    }

    /// Spectral derivative of the given order. The Nyquist mode is dropped
    /// for odd orders.
    pub fn derivative(&self, order: u32) -> Self {
        if order == 0 {
            return self.clone();
        }
        let nyq = (self.n() / 2) as i64;
        self.map_spectrum(|k, c| {
            if order % 2 == 1 && k == nyq {
                return Complex64::new(0.0, 0.0);
            }
            c * Complex64::new(0.0, k as f64).powu(order)
        })
    }

    pub fn dx(&self) -> Self {
        self.derivative(1)
    }

    /// 2/3-rule: zero every mode with `|k| > N/3`.
    pub fn dealias(&self) -> Self {
        let cut = (self.n() / 3) as i64;
        self.map_spectrum(|k, c| if k.abs() > cut { Complex64::new(0.0, 0.0) } else { c })
    }

    /// Band-limited interpolation onto a grid of `m` points.
    pub fn resample(&self, m: usize) -> Result<Self> {
        check_grid(m)?;
        let n = self.n();
        let spec = self.spectrum();
        let mut out = vec![Complex64::new(0.0, 0.0); m];
        let keep = (n.min(m) / 2) as i64;
        for (j, c) in spec.iter().enumerate() {
            let k = wavenumber(j, n);
            let target = |k: i64| k.rem_euclid(m as i64) as usize;
            if k.abs() < keep {
                out[target(k)] += *c;
            } else if k.abs() == keep && m > n {
                // split the Nyquist cosine between ±n/2
                out[target(k)] += *c * 0.5;
                out[target(-k)] += *c * 0.5;
            } else if k.abs() == keep {
                out[target(k)] += *c;
            }
        }
        plan(m, true).process(&mut out);
        Self::new(out.into_iter().map(|c| c.re).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::raw(self.values.iter().map(|v| v * s).collect())
    }

    /// `(2π/N) Σ u_j v_j`, exact for band-limited products.
    pub fn l2_inner(&self, other: &Self) -> Result<f64> {
        self.same_grid(other)?;
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        Ok(2.0 * PI * s / self.n() as f64)
    }

    pub fn integral(&self) -> f64 {
        2.0 * PI * self.values.iter().sum::<f64>() / self.n() as f64
    }

    pub fn interpolant(&self) -> TrigInterpolant {
        TrigInterpolant::new(self)
    }

    /// Trigonometric interpolant evaluated at arbitrary points.
    pub fn eval_at(&self, points: &[f64]) -> Vec<f64> {
        let interp = self.interpolant();
        points.iter().map(|&x| interp.eval(x)).collect()
    }
}

/// Off-grid evaluation of the band-limited interpolant of a field.
#[derive(Clone, Debug)]
pub struct TrigInterpolant {
    /// coefficients for `k = 0..=N/2`
    coeffs: Vec<Complex64>,
}

impl TrigInterpolant {
    fn new(u: &PeriodicField) -> Self {
        let spec = u.spectrum();
        Self {
            coeffs: spec[..=u.n() / 2].to_vec(),
        }
    }

    /// Interpolant of the `order`-th derivative.
    pub fn derivative(&self, order: u32) -> Self {
        let nyq = self.coeffs.len() - 1;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| {
                if order % 2 == 1 && k == nyq {
                    Complex64::new(0.0, 0.0)
                } else {
                    c * Complex64::new(0.0, k as f64).powu(order)
                }
            })
            .collect();
        Self { coeffs }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let nyq = self.coeffs.len() - 1;
        let base = Complex64::from_polar(1.0, x);
        let mut w = Complex64::new(1.0, 0.0);
        let mut acc = self.coeffs[0].re;
        for k in 1..nyq {
            w = if k % 32 == 0 {
                Complex64::from_polar(1.0, k as f64 * x)
            } else {
                w * base
            };
            acc += 2.0 * (self.coeffs[k] * w).re;
        }
        acc + self.coeffs[nyq].re * (nyq as f64 * x).cos()
    }
}

impl Add for &PeriodicField {
    type Output = PeriodicField;

    fn add(self, rhs: &PeriodicField) -> PeriodicField {
        assert_eq!(self.n(), rhs.n(), "grid size mismatch");
        PeriodicField::raw(self.values.iter().zip(&rhs.values).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &PeriodicField {
    type Output = PeriodicField;

    fn sub(self, rhs: &PeriodicField) -> PeriodicField {
        assert_eq!(self.n(), rhs.n(), "grid size mismatch");
        PeriodicField::raw(self.values.iter().zip(&rhs.values).map(|(a, b)| a - b).collect())
    }
}

/// Pointwise product.
impl Mul for &PeriodicField {
    type Output = PeriodicField;

    fn mul(self, rhs: &PeriodicField) -> PeriodicField {
        assert_eq!(self.n(), rhs.n(), "grid size mismatch");
        PeriodicField::raw(self.values.iter().zip(&rhs.values).map(|(a, b)| a * b).collect())
    }
}

impl Mul<f64> for &PeriodicField {
    type Output = PeriodicField;

    fn mul(self, rhs: f64) -> PeriodicField {
        self.scale(rhs)
    }
}

impl Neg for &PeriodicField {
    type Output = PeriodicField;

    fn neg(self) -> PeriodicField {
        self.scale(-1.0)
    }
}

/// Root of an increasing function bracketed by `[lo, hi]`, by Newton steps
/// that fall back to bisection when they leave the bracket.
pub(crate) fn solve_increasing(f: impl Fn(f64) -> (f64, f64), mut lo: f64, mut hi: f64) -> f64 {
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (v, dv) = f(x);
        if v == 0.0 {
            return x;
        }
        if v < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - v / dv;
        let next = if dv > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 1e-15 * (1.0 + x.abs()) || hi - lo <= 1e-15 * (1.0 + x.abs()) {
            return next;
        }
        x = next;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn grid_validation() {
        assert_eq!(PeriodicField::zeros(8), Err(Error::InvalidGrid(8)));
        assert_eq!(PeriodicField::zeros(48), Err(Error::InvalidGrid(48)));
        assert!(PeriodicField::zeros(16).is_ok());
        let mut v = vec![0.0; 16];
        v[3] = f64::NAN;
        assert_eq!(PeriodicField::new(v), Err(Error::NonFinite));
    }

    #[test]
    fn derivatives_of_trig_polynomials() {
        let u = PeriodicField::from_fn(64, |x| (3.0 * x).sin() + 0.5 * x.cos()).unwrap();
        let du = u.dx();
        let expected = PeriodicField::from_fn(64, |x| 3.0 * (3.0 * x).cos() - 0.5 * x.sin()).unwrap();
        assert!((&du - &expected).max_abs() < 1e-13);
        let d2 = u.derivative(2);
        let expected = PeriodicField::from_fn(64, |x| -9.0 * (3.0 * x).sin() - 0.5 * x.cos()).unwrap();
        assert!((&d2 - &expected).max_abs() < 1e-12);
        assert!(PeriodicField::constant(32, 4.0).unwrap().dx().max_abs() < 1e-14);
    }

    #[test]
    fn nyquist_mode_handling() {
        let n = 16;
        let u = PeriodicField::from_fn(n, |x| (8.0 * x).cos()).unwrap();
        assert!(u.dx().max_abs() < 1e-13);
        let d2 = u.derivative(2);
        assert!((&d2 + &u.scale(64.0)).max_abs() < 1e-12);
        let fine = u.resample(64).unwrap();
        let expected = PeriodicField::from_fn(64, |x| (8.0 * x).cos()).unwrap();
        assert!((&fine - &expected).max_abs() < 1e-13);
        assert_abs_diff_eq!(u.interpolant().eval(0.1), (0.8f64).cos(), epsilon = 1e-13);
    }

    #[test]
    fn interpolant_is_exact_for_band_limited_fields() {
        let f = |x: f64| 1.0 + (x).sin() - 0.3 * (5.0 * x).cos() + 0.01 * (40.0 * x).sin();
        let u = PeriodicField::from_fn(128, f).unwrap();
        let pts: Vec<f64> = (0..50).map(|i| -3.0 + 0.37 * i as f64).collect();
        for (x, v) in pts.iter().zip(u.eval_at(&pts)) {
            assert_abs_diff_eq!(v, f(*x), epsilon = 1e-13);
        }
        let du = u.interpolant().derivative(1);
        assert_abs_diff_eq!(
            du.eval(0.4),
            0.4f64.cos() + 1.5 * (2.0f64).sin() + 0.4 * (16.0f64).cos(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn resample_down_and_dealias() {
        let u = PeriodicField::from_modes(64, &[0.5, 1.0], &[0.0, 0.0, 0.3]).unwrap();
        let coarse = u.resample(16).unwrap();
        let expected = PeriodicField::from_modes(16, &[0.5, 1.0], &[0.0, 0.0, 0.3]).unwrap();
        assert!((&coarse - &expected).max_abs() < 1e-14);
        let high = PeriodicField::from_fn(64, |x| (30.0 * x).sin() + x.cos()).unwrap();
        let cleaned = high.dealias();
        let expected = PeriodicField::from_fn(64, |x| x.cos()).unwrap();
        assert!((&cleaned - &expected).max_abs() < 1e-13);
    }

    #[test]
    fn inner_products() {
        let u = PeriodicField::from_fn(32, |x| x.sin()).unwrap();
        let v = PeriodicField::from_fn(32, |x| x.cos()).unwrap();
        assert_abs_diff_eq!(u.l2_inner(&u).unwrap(), PI, epsilon = 1e-14);
        assert_abs_diff_eq!(u.l2_inner(&v).unwrap(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(
            PeriodicField::constant(16, 2.0).unwrap().integral(),
            4.0 * PI,
            epsilon = 1e-14
        );
        let w = PeriodicField::zeros(64).unwrap();
        assert_eq!(u.l2_inner(&w), Err(Error::GridMismatch(32, 64)));
    }

    #[test]
    fn monotone_solver() {
        let root = solve_increasing(|x| (x * x * x + x - 1.0, 3.0 * x * x + 1.0), -5.0, 5.0);
        assert_abs_diff_eq!(root * root * root + root, 1.0, epsilon = 1e-14);
    }

    proptest! {
        #[test]
        fn spectral_round_trip(values in proptest::collection::vec(-10.0f64..10.0, 64)) {
            let u = PeriodicField::new(values).unwrap();
            let back = PeriodicField::from_spectrum(u.spectrum()).unwrap();
            prop_assert!((&back - &u).max_abs() <= 1e-12);
        }
    }
}
