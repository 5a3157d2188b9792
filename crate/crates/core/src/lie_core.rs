//! Linear-algebra kernel for `so(n)`.
//!
//! Elements of the Lie algebra are real skew-symmetric matrices. The dual
//! space `so(n)*` is identified with `so(n)` through the trace form
//! `<a, b> = -1/2 tr(ab)`, so covectors are also stored as skew matrices but
//! carry their own type so that adjoint and coadjoint actions cannot be mixed
//! up.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector, Vector3};

use crate::error::{Error, Result};

/// Default tolerance on `||g^T g - I||_F` when a rotation is constructed.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

/// An element of `so(n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SkewMatrix(DMatrix<f64>);

impl SkewMatrix {
    /// Projects a square matrix onto its skew part `(X - X^T)/2`.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if m.nrows() < 2 {
            return Err(Error::InvalidDimension(m.nrows()));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self::project(m))
    }

    pub(crate) fn project(m: DMatrix<f64>) -> Self {
        let t = m.transpose();
        SkewMatrix((m - t) * 0.5)
    }

    pub fn zeros(n: usize) -> Self {
        SkewMatrix(DMatrix::zeros(n, n))
    }

    /// Coordinates in the basis `{L(e_i, e_j) : i < j}`, ordered
    /// lexicographically. Since `L(e_i, e_j)` has `+1` at `(j, i)`, the
    /// coordinate of the pair `(i, j)` is the entry `(j, i)`.
    pub fn coords(&self) -> Vec<f64> {
        let n = self.dim();
        let mut out = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                out.push(self.0[(j, i)]);
            }
        }
        out
    }

    pub fn from_coords(n: usize, coords: &[f64]) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension(n));
        }
        let d = n * (n - 1) / 2;
        if coords.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: coords.len(),
            });
        }
        let mut m = DMatrix::zeros(n, n);
        let mut it = coords.iter();
        for i in 0..n {
            for j in (i + 1)..n {
                let c = *it.next().unwrap();
                m[(j, i)] = c;
                m[(i, j)] = -c;
            }
        }
        Ok(SkewMatrix(m))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Add for &SkewMatrix {
    type Output = SkewMatrix;
    fn add(self, rhs: &SkewMatrix) -> SkewMatrix {
        SkewMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &SkewMatrix {
    type Output = SkewMatrix;
    fn sub(self, rhs: &SkewMatrix) -> SkewMatrix {
        SkewMatrix(&self.0 - &rhs.0)
    }
}

impl Mul<f64> for &SkewMatrix {
    type Output = SkewMatrix;
    fn mul(self, rhs: f64) -> SkewMatrix {
        SkewMatrix(&self.0 * rhs)
    }
}

impl Neg for &SkewMatrix {
    type Output = SkewMatrix;
    fn neg(self) -> SkewMatrix {
        SkewMatrix(-&self.0)
    }
}

/// An element of `so(n)*`, stored through the trace-form identification.
#[derive(Clone, Debug, PartialEq)]
pub struct Covector(SkewMatrix);

impl Covector {
    pub fn from_skew(m: SkewMatrix) -> Self {
        Covector(m)
    }

    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        SkewMatrix::from_matrix(m).map(Covector)
    }

    pub fn as_skew(&self) -> &SkewMatrix {
        &self.0
    }

    pub fn into_skew(self) -> SkewMatrix {
        self.0
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        self.0.as_matrix()
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    /// Evaluates the covector on `w`: `-1/2 tr(m w)`.
    pub fn pair(&self, w: &SkewMatrix) -> Result<f64> {
        killing_pair(&self.0, w)
    }
}

/// An element of `SO(n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RotationMatrix(DMatrix<f64>);

impl RotationMatrix {
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        Self::with_tolerance(m, ORTHOGONALITY_TOL)
    }

    pub fn with_tolerance(m: DMatrix<f64>, tol: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if m.nrows() < 2 {
            return Err(Error::InvalidDimension(m.nrows()));
        }
        let error = orthogonality_error(&m);
        let det = m.determinant();
        if !(error <= tol) || !(det > 0.0) {
            return Err(Error::NotRotation { error, det });
        }
        Ok(RotationMatrix(m))
    }

    /// Wraps a matrix produced by an integrator; orthogonality is monitored
    /// by the caller rather than enforced.
    pub(crate) fn from_integrator(m: DMatrix<f64>) -> Self {
        RotationMatrix(m)
    }

    pub fn identity(n: usize) -> Self {
        RotationMatrix(DMatrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn inverse(&self) -> Self {
        RotationMatrix(self.0.transpose())
    }

    pub fn compose(&self, other: &RotationMatrix) -> Result<Self> {
        check_dims(self.dim(), other.dim())?;
        Ok(RotationMatrix(&self.0 * &other.0))
    }

    /// `||g^T g - I||_F`.
    pub fn orthogonality_error(&self) -> f64 {
        orthogonality_error(&self.0)
    }
}

fn orthogonality_error(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    (m.transpose() * m - DMatrix::<f64>::identity(n, n)).norm()
}

pub(crate) fn check_dims(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected: a, found: b })
    }
}

/// `L(x, y) = y x^T - x y^T`.
pub fn l_op(x: &[f64], y: &[f64]) -> Result<SkewMatrix> {
    check_dims(x.len(), y.len())?;
    let n = x.len();
    if n < 2 {
        return Err(Error::InvalidDimension(n));
    }
    let xv = DVector::from_column_slice(x);
    let yv = DVector::from_column_slice(y);
    let m = &yv * xv.transpose() - &xv * yv.transpose();
    Ok(SkewMatrix(m))
}

/// Unit basis vector `e_i` of `R^n`.
pub fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

/// The trace pairing `-1/2 tr(ab)`.
pub fn killing_pair(a: &SkewMatrix, b: &SkewMatrix) -> Result<f64> {
    check_dims(a.dim(), b.dim())?;
    Ok(-0.5 * trace_of_product(a.as_matrix(), b.as_matrix()))
}

/// The Killing form of `so(n)`, `(n - 2) tr(ab)`.
pub fn killing_canonical(a: &SkewMatrix, b: &SkewMatrix) -> Result<f64> {
    check_dims(a.dim(), b.dim())?;
    let n = a.dim();
    if n < 3 {
        return Err(Error::DegenerateForm(n));
    }
    Ok((n as f64 - 2.0) * trace_of_product(a.as_matrix(), b.as_matrix()))
}

fn trace_of_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    // tr(ab) = sum_ij a_ij b_ji
    a.iter().zip(b.transpose().iter()).map(|(x, y)| x * y).sum()
}

/// The commutator `ab - ba`.
pub fn bracket(a: &SkewMatrix, b: &SkewMatrix) -> Result<SkewMatrix> {
    check_dims(a.dim(), b.dim())?;
    Ok(bracket_unchecked(a.as_matrix(), b.as_matrix()))
}

pub(crate) fn bracket_unchecked(a: &DMatrix<f64>, b: &DMatrix<f64>) -> SkewMatrix {
    SkewMatrix::project(a * b - b * a)
}

/// `Ad_g w = g w g^T`.
pub fn adjoint(g: &RotationMatrix, w: &SkewMatrix) -> Result<SkewMatrix> {
    check_dims(g.dim(), w.dim())?;
    let gm = g.as_matrix();
    Ok(SkewMatrix::project(gm * w.as_matrix() * gm.transpose()))
}

/// `Ad*_g m = g m g^T` under the trace-form identification.
pub fn coadjoint(g: &RotationMatrix, m: &Covector) -> Result<Covector> {
    adjoint(g, m.as_skew()).map(Covector)
}

/// `ad*_w m = -[w, m]`.
pub fn coadjoint_ad_star(w: &SkewMatrix, m: &Covector) -> Result<Covector> {
    let c = bracket(w, m.as_skew())?;
    Ok(Covector(-&c))
}

/// The `so(3) -> R^3` identification: `w_1 = -W_23`, `w_2 = W_13`,
/// `w_3 = -W_12`.
pub fn hat(v: &[f64]) -> Result<SkewMatrix> {
    check_dims(3, v.len())?;
    let (x, y, z) = (v[0], v[1], v[2]);
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(3, 3, &[
        0.0, -z,  y,
        z,  0.0, -x,
        -y,  x,  0.0,
    ]);
    Ok(SkewMatrix(m))
}

pub fn vee(w: &SkewMatrix) -> Result<Vector3<f64>> {
    check_dims(3, w.dim())?;
    let m = w.as_matrix();
    Ok(Vector3::new(-m[(1, 2)], m[(0, 2)], -m[(0, 1)]))
}
