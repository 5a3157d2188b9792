//! Euler-Arnold and Lie-Poisson machinery on a finite-dimensional Lie algebra.
//!
//! The algebra is described by structure constants in a fixed basis `e_1..e_d`
//! and by a positive-definite Gram matrix `P` of an inner product. Velocities
//! are coordinates in that basis; momenta are coordinates in the dual basis,
//! so the natural pairing `(m, ω)` is the plain dot product. A left-invariant
//! metric is given by a symmetric positive-definite inertia map
//! `A: 𝔤 → 𝔤*`.
//!
//! Left-invariant geodesics satisfy `ω̇ = B(ω, ω)` with
//! `B(a, b) = A⁻¹ ad*_b (A a)`, or equivalently `ṁ = ad*_ω m` with `m = Aω`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::lie_core::{self, check_dims, killing_pair, Covector, RotationMatrix, SkewMatrix};
use crate::rigid_body::{cayley, inertia_apply, MomentMatrix};

/// Velocity-side coordinates (an element of `𝔤`).
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraVector(pub DVector<f64>);

/// Momentum-side coordinates (an element of `𝔤*`).
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraCovector(pub DVector<f64>);

macro_rules! coords_impl {
    ($t:ident) => {
        impl $t {
            pub fn new(v: Vec<f64>) -> Self {
                $t(DVector::from_vec(v))
            }

            pub fn zeros(d: usize) -> Self {
                $t(DVector::zeros(d))
            }

            pub fn dim(&self) -> usize {
                self.0.len()
            }

            pub fn as_slice(&self) -> &[f64] {
                self.0.as_slice()
            }

            pub fn norm(&self) -> f64 {
                self.0.norm()
            }

            pub fn scaled(&self, s: f64) -> Self {
                $t(&self.0 * s)
            }

            pub fn add(&self, other: &Self) -> Self {
                $t(&self.0 + &other.0)
            }

            pub fn sub(&self, other: &Self) -> Self {
                $t(&self.0 - &other.0)
            }

            pub fn is_finite(&self) -> bool {
                self.0.iter().all(|v| v.is_finite())
            }
        }
    };
}

coords_impl!(AlgebraVector);
coords_impl!(AlgebraCovector);

/// A scalar function on `𝔤*`.
pub type ScalarField<'a> = dyn Fn(&AlgebraCovector) -> f64 + Sync + 'a;

/// A Lie algebra in a chosen basis.
#[derive(Clone, Debug)]
pub struct AlgebraSpec {
    dim: usize,
    /// `structure[(i * d + j) * d + k]` is the `k`-th coordinate of `[e_i, e_j]`.
    structure: Vec<f64>,
    pairing: DMatrix<f64>,
    pairing_chol: Cholesky<f64, Dyn>,
    basis: Option<Vec<SkewMatrix>>,
}

impl AlgebraSpec {
    /// Validates antisymmetry, the Jacobi identity on basis triples (to
    /// `1e-12` relative to the largest constant) and positivity of `pairing`.
    pub fn new(dim: usize, structure: Vec<f64>, pairing: DMatrix<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(0));
        }
        check_dims(dim * dim * dim, structure.len())?;
        check_dims(dim, pairing.nrows())?;
        check_dims(dim, pairing.ncols())?;
        if structure.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let c = |i: usize, j: usize, k: usize| structure[(i * dim + j) * dim + k];
        let scale = structure.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    if (c(i, j, k) + c(j, i, k)).abs() > 1e-12 * scale {
                        return Err(Error::InvalidArgument(format!(
                            "bracket is not antisymmetric at ({i}, {j})"
                        )));
                    }
                }
            }
        }
        // [e_i, [e_j, e_l]] + cyclic = 0
        for i in 0..dim {
            for j in 0..dim {
                for l in 0..dim {
                    for out in 0..dim {
                        let mut s = 0.0;
                        for p in 0..dim {
                            s += c(j, l, p) * c(i, p, out) + c(l, i, p) * c(j, p, out) + c(i, j, p) * c(l, p, out);
                        }
                        if s.abs() > 1e-12 * scale * scale {
                            return Err(Error::InvalidArgument(format!(
                                "Jacobi identity fails on basis triple ({i}, {j}, {l})"
                            )));
                        }
                    }
                }
            }
        }
        if (&pairing - pairing.transpose()).norm() > 1e-12 * pairing.norm() {
            return Err(Error::InvalidArgument("pairing matrix is not symmetric".into()));
        }
        let pairing_chol = Cholesky::new(pairing.clone())
            .ok_or_else(|| Error::InvalidArgument("pairing matrix is not positive-definite".into()))?;
        Ok(Self {
            dim,
            structure,
            pairing,
            pairing_chol,
            basis: None,
        })
    }

    /// Builds the algebra spanned by a basis of skew matrices, with the
    /// commutator as bracket and the trace form `-1/2 tr(ab)` as pairing.
    pub fn from_matrix_basis(basis: Vec<SkewMatrix>) -> Result<Self> {
        let d = basis.len();
        if d == 0 {
            return Err(Error::InvalidDimension(0));
        }
        let n = basis[0].dim();
        for b in &basis {
            check_dims(n, b.dim())?;
        }
        let gram = DMatrix::from_fn(d, d, |i, j| killing_pair(&basis[i], &basis[j]).unwrap());
        let chol =
            Cholesky::new(gram.clone()).ok_or_else(|| Error::InvalidArgument("basis is linearly dependent".into()))?;
        let mut structure = vec![0.0; d * d * d];
        for i in 0..d {
            for j in 0..d {
                let br = lie_core::bracket(&basis[i], &basis[j])?;
                let rhs = DVector::from_fn(d, |k, _| killing_pair(&br, &basis[k]).unwrap());
                let coords = chol.solve(&rhs);
                for k in 0..d {
                    structure[(i * d + j) * d + k] = coords[k];
                }
            }
        }
        let mut spec = Self::new(d, structure, gram)?;
        spec.basis = Some(basis);
        Ok(spec)
    }

    /// `so(n)` in the basis `{L(e_i, e_j) : i < j}` (orthonormal for the trace form).
    pub fn so_n(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension(n));
        }
        let mut basis = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                basis.push(lie_core::l_op(&lie_core::unit(n, i), &lie_core::unit(n, j))?);
            }
        }
        Self::from_matrix_basis(basis)
    }

    /// `so(3)` in the basis `hat(e_1), hat(e_2), hat(e_3)`; the bracket is the
    /// cross product.
    pub fn so3() -> Result<Self> {
        let basis = (0..3)
            .map(|i| lie_core::hat(&lie_core::unit(3, i)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_matrix_basis(basis)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pairing(&self) -> &DMatrix<f64> {
        &self.pairing
    }

    pub fn matrix_basis(&self) -> Option<&[SkewMatrix]> {
        self.basis.as_deref()
    }

    fn c(&self, i: usize, j: usize, k: usize) -> f64 {
        self.structure[(i * self.dim + j) * self.dim + k]
    }

    fn check_vec(&self, len: usize) -> Result<()> {
        check_dims(self.dim, len)
    }

    /// Left bracket `[a, b]` (the one induced by left-invariant fields).
    pub fn bracket(&self, a: &AlgebraVector, b: &AlgebraVector) -> Result<AlgebraVector> {
        self.check_vec(a.dim())?;
        self.check_vec(b.dim())?;
        let d = self.dim;
        let mut out = DVector::zeros(d);
        for i in 0..d {
            for j in (i + 1)..d {
                let w = a.0[i] * b.0[j] - a.0[j] * b.0[i];
                if w == 0.0 {
                    continue;
                }
                for k in 0..d {
                    out[k] += w * self.c(i, j, k);
                }
            }
        }
        Ok(AlgebraVector(out))
    }

    /// Bracket induced by right-invariant fields: `[a, b]_R = -[a, b]_L`.
    pub fn bracket_right(&self, a: &AlgebraVector, b: &AlgebraVector) -> Result<AlgebraVector> {
        Ok(self.bracket(a, b)?.scaled(-1.0))
    }

    /// `(ad*_ξ m)(η) = m([ξ, η])`.
    pub fn ad_star(&self, xi: &AlgebraVector, m: &AlgebraCovector) -> Result<AlgebraCovector> {
        self.check_vec(xi.dim())?;
        self.check_vec(m.dim())?;
        let d = self.dim;
        let out = DVector::from_fn(d, |i, _| {
            let mut s = 0.0;
            for j in 0..d {
                for k in 0..d {
                    s += m.0[k] * xi.0[j] * self.c(j, i, k);
                }
            }
            s
        });
        Ok(AlgebraCovector(out))
    }

    /// Natural pairing `(m, w)`.
    pub fn pair(&self, m: &AlgebraCovector, w: &AlgebraVector) -> Result<f64> {
        self.check_vec(m.dim())?;
        self.check_vec(w.dim())?;
        Ok(m.0.dot(&w.0))
    }

    /// Inner product `aᵀ P b`.
    pub fn inner(&self, a: &AlgebraVector, b: &AlgebraVector) -> Result<f64> {
        self.check_vec(a.dim())?;
        self.check_vec(b.dim())?;
        Ok(a.0.dot(&(&self.pairing * &b.0)))
    }

    /// `w ↦ P w`, the covector `⟨w, ·⟩`.
    pub fn flat(&self, w: &AlgebraVector) -> AlgebraCovector {
        AlgebraCovector(&self.pairing * &w.0)
    }

    /// `m ↦ P⁻¹ m`.
    pub fn sharp(&self, m: &AlgebraCovector) -> AlgebraVector {
        AlgebraVector(self.pairing_chol.solve(&m.0))
    }

    fn basis_or_err(&self) -> Result<&[SkewMatrix]> {
        self.matrix_basis()
            .ok_or_else(|| Error::InvalidArgument("algebra has no matrix realization".into()))
    }

    /// `Σ w_i E_i` for a matrix realization.
    pub fn to_matrix(&self, w: &AlgebraVector) -> Result<SkewMatrix> {
        let basis = self.basis_or_err()?;
        self.check_vec(w.dim())?;
        let n = basis[0].dim();
        let mut acc = DMatrix::zeros(n, n);
        for (c, e) in w.0.iter().zip(basis) {
            acc += e.as_matrix() * *c;
        }
        Ok(SkewMatrix::project(acc))
    }

    pub fn from_matrix(&self, x: &SkewMatrix) -> Result<AlgebraVector> {
        let m = self.covector_from_matrix(&Covector::from_skew(x.clone()))?;
        Ok(self.sharp(&m))
    }

    /// Dual coordinates `m_i = -1/2 tr(M E_i)` of a trace-identified covector.
    pub fn covector_from_matrix(&self, m: &Covector) -> Result<AlgebraCovector> {
        let basis = self.basis_or_err()?;
        check_dims(basis[0].dim(), m.dim())?;
        Ok(AlgebraCovector(DVector::from_fn(self.dim, |i, _| {
            killing_pair(m.as_skew(), &basis[i]).unwrap()
        })))
    }

    /// Inverse of [`Self::covector_from_matrix`]: `M = Σ (P⁻¹ m)_i E_i`.
    pub fn covector_to_matrix(&self, m: &AlgebraCovector) -> Result<Covector> {
        Ok(Covector::from_skew(self.to_matrix(&self.sharp(m))?))
    }
}

/// Symmetric positive-definite `A: 𝔤 → 𝔤*`.
#[derive(Clone, Debug)]
pub struct InertiaMap {
    matrix: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl InertiaMap {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        if (&matrix - matrix.transpose()).norm() > 1e-12 * matrix.norm() {
            return Err(Error::InvalidArgument("inertia map is not symmetric".into()));
        }
        let sym = (&matrix + matrix.transpose()) * 0.5;
        let min = sym.clone().symmetric_eigenvalues().min();
        let chol = Cholesky::new(sym.clone())
            .filter(|_| min > 1e-14 * sym.norm())
            .ok_or(Error::SingularInertia { pair_sum: min })?;
        Ok(Self { matrix: sym, chol })
    }

    /// The bi-invariant case `A = P`.
    pub fn from_pairing(spec: &AlgebraSpec) -> Result<Self> {
        Self::new(spec.pairing().clone())
    }

    /// The rigid-body inertia `Ω ↦ JΩ + ΩJ` expressed in the basis of a
    /// matrix realization of `so(n)`.
    pub fn rigid_body(spec: &AlgebraSpec, j: &MomentMatrix) -> Result<Self> {
        let basis = spec.basis_or_err()?;
        check_dims(basis[0].dim(), j.dim())?;
        let d = spec.dim();
        let images = basis.iter().map(|e| inertia_apply(j, e)).collect::<Result<Vec<_>>>()?;
        let a = DMatrix::from_fn(d, d, |i, c| killing_pair(images[c].as_skew(), &basis[i]).unwrap());
        Self::new(a)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, w: &AlgebraVector) -> Result<AlgebraCovector> {
        check_dims(self.dim(), w.dim())?;
        Ok(AlgebraCovector(&self.matrix * &w.0))
    }

    pub fn solve(&self, m: &AlgebraCovector) -> Result<AlgebraVector> {
        check_dims(self.dim(), m.dim())?;
        Ok(AlgebraVector(self.chol.solve(&m.0)))
    }

    /// `½ (A w, w)`.
    pub fn energy(&self, w: &AlgebraVector) -> Result<f64> {
        Ok(0.5 * self.apply(w)?.0.dot(&w.0))
    }
}

/// `B(a, b) = A⁻¹ ad*_b (A a)`, characterised by `⟨[a, b], c⟩ = ⟨B(c, a), b⟩`.
pub fn b_operator(
    spec: &AlgebraSpec,
    inertia: &InertiaMap,
    a: &AlgebraVector,
    b: &AlgebraVector,
) -> Result<AlgebraVector> {
    check_dims(spec.dim(), inertia.dim())?;
    inertia.solve(&spec.ad_star(b, &inertia.apply(a)?)?)
}

/// `(∇_{L_a} L_b)(e) = ½[a, b] - ½(B(a, b) + B(b, a))`.
pub fn connection_at_identity(
    spec: &AlgebraSpec,
    inertia: &InertiaMap,
    a: &AlgebraVector,
    b: &AlgebraVector,
) -> Result<AlgebraVector> {
    let br = spec.bracket(a, b)?;
    let sym = b_operator(spec, inertia, a, b)?.add(&b_operator(spec, inertia, b, a)?);
    Ok(br.sub(&sym).scaled(0.5))
}

/// `ω̇ = B(ω, ω)`.
pub fn euler_arnold_rhs(spec: &AlgebraSpec, inertia: &InertiaMap, w: &AlgebraVector) -> Result<AlgebraVector> {
    b_operator(spec, inertia, w, w)
}

/// `ṁ = ad*_ω m` with `ω = A⁻¹ m`.
pub fn dual_euler_arnold_rhs(spec: &AlgebraSpec, inertia: &InertiaMap, m: &AlgebraCovector) -> Result<AlgebraCovector> {
    check_dims(spec.dim(), inertia.dim())?;
    spec.ad_star(&inertia.solve(m)?, m)
}

fn rk4<T, F>(y: &T, dt: f64, f: F, axpy: impl Fn(&T, &T, f64) -> T) -> Result<T>
where
    F: Fn(&T) -> Result<T>,
{
    let k1 = f(y)?;
    let k2 = f(&axpy(y, &k1, 0.5 * dt))?;
    let k3 = f(&axpy(y, &k2, 0.5 * dt))?;
    let k4 = f(&axpy(y, &k3, dt))?;
    let incr = axpy(&axpy(&axpy(&k1, &k2, 2.0), &k3, 2.0), &k4, 1.0);
    Ok(axpy(y, &incr, dt / 6.0))
}

/// One RK4 step of `ω̇ = B(ω, ω)`.
pub fn step_velocity(spec: &AlgebraSpec, inertia: &InertiaMap, w: &AlgebraVector, dt: f64) -> Result<AlgebraVector> {
    let out = rk4(
        w,
        dt,
        |y| euler_arnold_rhs(spec, inertia, y),
        |a, b, s| a.add(&b.scaled(s)),
    )?;
    if !out.is_finite() {
        return Err(Error::Divergence {
            step: 0,
            time: f64::NAN,
        });
    }
    Ok(out)
}

/// One RK4 step of `ṁ = ad*_{A⁻¹m} m`.
pub fn step_momentum(
    spec: &AlgebraSpec,
    inertia: &InertiaMap,
    m: &AlgebraCovector,
    dt: f64,
) -> Result<AlgebraCovector> {
    let out = rk4(
        m,
        dt,
        |y| dual_euler_arnold_rhs(spec, inertia, y),
        |a, b, s| a.add(&b.scaled(s)),
    )?;
    if !out.is_finite() {
        return Err(Error::Divergence {
            step: 0,
            time: f64::NAN,
        });
    }
    Ok(out)
}

/// Configuration on the group together with the left angular velocity.
#[derive(Clone, Debug)]
pub struct GroupState {
    pub g: RotationMatrix,
    pub omega: AlgebraVector,
}

/// RK4 on `ω` followed by `g ← g · cay(dt Ω_mid)` where `Ω_mid` is the
/// matrix of the averaged velocity. Requires a matrix realization.
pub fn step_with_group(spec: &AlgebraSpec, inertia: &InertiaMap, state: &GroupState, dt: f64) -> Result<GroupState> {
    let w1 = step_velocity(spec, inertia, &state.omega, dt)?;
    let mid = spec.to_matrix(&state.omega.add(&w1).scaled(0.5))?;
    check_dims(state.g.dim(), mid.dim())?;
    let g = state.g.as_matrix() * cayley(&(mid.as_matrix() * dt));
    Ok(GroupState {
        g: RotationMatrix::from_integrator(g),
        omega: w1,
    })
}

/// Right angular momentum `m_R = Ad*_g m_L`.
///
/// Convention: with the trace identification of `so(n)*`, `Ad*_g M = g M gᵀ`,
/// so `m_R` is the spatial angular momentum `g A(ω_L) gᵀ` expressed in dual
/// coordinates. This is the choice under which `m_R` is constant along
/// left-invariant geodesics.
pub fn right_momentum(
    spec: &AlgebraSpec,
    inertia: &InertiaMap,
    g: &RotationMatrix,
    omega: &AlgebraVector,
) -> Result<AlgebraCovector> {
    let m_left = spec.covector_to_matrix(&inertia.apply(omega)?)?;
    spec.covector_from_matrix(&lie_core::coadjoint(g, &m_left)?)
}

/// Default finite-difference step `1e-4 (1 + |m|)`.
pub fn default_fd_step(m: &AlgebraCovector) -> f64 {
    1e-4 * (1.0 + m.norm())
}

/// `d_m f ∈ 𝔤` by the fourth-order central stencil.
pub fn gradient(f: &ScalarField, m: &AlgebraCovector, h: f64) -> Result<AlgebraVector> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "finite-difference step must be positive, got {h}"
        )));
    }
    let d = m.dim();
    let mut grad = DVector::zeros(d);
    let mut probe = m.clone();
    for i in 0..d {
        let base = m.0[i];
        let mut eval = |offset: f64| {
            probe.0[i] = base + offset;
            f(&probe)
        };
        let (p2, p1, m1, m2) = (eval(2.0 * h), eval(h), eval(-h), eval(-2.0 * h));
        probe.0[i] = base;
        if ![p2, p1, m1, m2].iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite);
        }
        grad[i] = (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * h);
    }
    Ok(AlgebraVector(grad))
}

/// `{f, g}(m) = (m, [d_m f, d_m g])`.
pub fn lie_poisson_bracket(
    spec: &AlgebraSpec,
    f: &ScalarField,
    g: &ScalarField,
    m: &AlgebraCovector,
    h: Option<f64>,
) -> Result<f64> {
    spec.check_vec(m.dim())?;
    let h = h.unwrap_or_else(|| default_fd_step(m));
    let df = gradient(f, m, h)?;
    let dg = gradient(g, m, h)?;
    spec.pair(m, &spec.bracket(&df, &dg)?)
}

/// `ξ_H(m) = ad*_{d_m H} m`.
pub fn hamiltonian_field(
    spec: &AlgebraSpec,
    hamiltonian: &ScalarField,
    m: &AlgebraCovector,
    h: Option<f64>,
) -> Result<AlgebraCovector> {
    spec.check_vec(m.dim())?;
    let h = h.unwrap_or_else(|| default_fd_step(m));
    let dh = gradient(hamiltonian, m, h)?;
    spec.ad_star(&dh, m)
}

/// Kirillov form on the coadjoint orbit of `m`:
/// `ω(ad*_a m, ad*_b m) = (m, [a, b])`.
pub fn kirillov_form(spec: &AlgebraSpec, a: &AlgebraVector, b: &AlgebraVector, m: &AlgebraCovector) -> Result<f64> {
    spec.pair(m, &spec.bracket(a, b)?)
}

/// Involution PASS threshold, dominated by finite-difference error.
pub const INVOLUTION_THRESHOLD: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq)]
pub struct InvolutionReport {
    /// Largest `|{f_i, f_j}(m)|` over all pairs and samples.
    pub max_abs: f64,
    /// `(i, j, sample)` attaining the maximum.
    pub worst: Option<(usize, usize, usize)>,
    pub threshold: f64,
    pub passed: bool,
}

/// Evaluates every pairwise Lie-Poisson bracket at every sample.
pub fn involution_check(
    spec: &AlgebraSpec,
    functions: &[&ScalarField],
    samples: &[AlgebraCovector],
    threshold: f64,
) -> Result<InvolutionReport> {
    let mut max_abs = 0.0;
    let mut worst = None;
    for (si, m) in samples.iter().enumerate() {
        let h = default_fd_step(m);
        let grads = functions
            .iter()
            .map(|f| gradient(*f, m, h))
            .collect::<Result<Vec<_>>>()?;
        for i in 0..grads.len() {
            for j in (i + 1)..grads.len() {
                let v = spec.pair(m, &spec.bracket(&grads[i], &grads[j])?)?.abs();
                if v > max_abs || worst.is_none() {
                    max_abs = v;
                    worst = Some((i, j, si));
                }
            }
        }
    }
    Ok(InvolutionReport {
        max_abs,
        worst,
        threshold,
        passed: max_abs <= threshold,
    })
}
