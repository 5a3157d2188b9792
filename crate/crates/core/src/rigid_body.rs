//! The free n-dimensional rigid body with a fixed point.
//!
//! The body angular velocity `Ω = g⁻¹ġ` lives in `so(n)`, the body angular
//! momentum is `M = A(Ω) = JΩ + ΩJ` where `J` is the matrix of second moments
//! of the mass distribution, and the motion obeys `Ṁ = [M, Ω]`, `ġ = gΩ`.
//! Conserved along the flow: the kinetic energy, the spatial angular momentum
//! `gMgᵀ`, the spectrum of `M` and every coefficient of the polynomials
//! `tr(M + J²λ)^k`.

use nalgebra::{DMatrix, DVector, Matrix3, SymmetricEigen};

use crate::error::{Error, Result};
use crate::lie_core::{self, check_dims, Covector, RotationMatrix, SkewMatrix};

/// Finite list of point masses.
#[derive(Clone, Debug, PartialEq)]
pub struct MassDistribution {
    points: Vec<(f64, Vec<f64>)>,
}

impl MassDistribution {
    pub fn new(points: Vec<(f64, Vec<f64>)>) -> Result<Self> {
        let n = match points.first() {
            Some((_, r)) => r.len(),
            None => return Err(Error::InvalidArgument("empty mass distribution".into())),
        };
        if n < 2 {
            return Err(Error::InvalidDimension(n));
        }
        for (m, r) in &points {
            check_dims(n, r.len())?;
            if !(*m > 0.0) || !m.is_finite() {
                return Err(Error::InvalidArgument(format!("mass must be positive, got {m}")));
            }
            if r.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
        Ok(Self { points })
    }

    pub fn dim(&self) -> usize {
        self.points[0].1.len()
    }

    pub fn points(&self) -> &[(f64, Vec<f64>)] {
        &self.points
    }
}

/// Symmetric positive semi-definite matrix of second moments `J_ij = ∫ x_i x_j dμ`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentMatrix(DMatrix<f64>);

impl MomentMatrix {
    /// Accepts a matrix that is symmetric and PSD up to round-off; the stored
    /// matrix is the exact symmetric part.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
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
        let scale = m.norm().max(1.0);
        let asym = (&m - m.transpose()).norm();
        if asym > 1e-10 * scale {
            return Err(Error::InvalidArgument(format!(
                "moment matrix is not symmetric (asymmetry {asym:.3e})"
            )));
        }
        let sym = (&m + m.transpose()) * 0.5;
        let min_eig = sym.clone().symmetric_eigenvalues().min();
        if min_eig < -1e-12 * scale {
            return Err(Error::InvalidArgument(format!(
                "moment matrix is not positive semi-definite (eigenvalue {min_eig:.3e})"
            )));
        }
        Ok(Self(sym))
    }

    pub fn diagonal(d: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// `J = Σ m_k r_k r_kᵀ`.
pub fn moment_matrix(dist: &MassDistribution) -> MomentMatrix {
    let n = dist.dim();
    let mut j = DMatrix::zeros(n, n);
    for (m, r) in dist.points() {
        let r = DVector::from_column_slice(r);
        j += (&r * r.transpose()) * *m;
    }
    MomentMatrix(j)
}

/// The classical 3x3 inertia tensor, evaluated directly from
/// `∫ (|r|² Id - r rᵀ) dμ`.
pub fn classical_inertia_3d(dist: &MassDistribution) -> Result<Matrix3<f64>> {
    check_dims(3, dist.dim())?;
    let mut out = Matrix3::zeros();
    for (m, r) in dist.points() {
        let (x, y, z) = (r[0], r[1], r[2]);
        #[rustfmt::skip]
        let atom = Matrix3::new(
            y * y + z * z, -x * y,         -x * z,
            -x * y,        x * x + z * z,  -y * z,
            -x * z,        -y * z,         x * x + y * y,
        );
        out += atom * *m;
    }
    Ok(out)
}

/// `A(Ω) = JΩ + ΩJ`.
pub fn inertia_apply(j: &MomentMatrix, w: &SkewMatrix) -> Result<Covector> {
    check_dims(j.dim(), w.dim())?;
    Ok(Covector::from_skew(apply_raw(j.as_matrix(), w.as_matrix())))
}

fn apply_raw(j: &DMatrix<f64>, w: &DMatrix<f64>) -> SkewMatrix {
    SkewMatrix::project(j * w + w * j)
}

/// Solves `JΩ + ΩJ = M` for `Ω`.
pub fn inertia_solve(j: &MomentMatrix, m: &Covector) -> Result<SkewMatrix> {
    check_dims(j.dim(), m.dim())?;
    InertiaOperator::new(j)?.solve(m)
}

/// `K = -1/2 tr(ΩJΩ)`.
pub fn kinetic_energy(j: &MomentMatrix, w: &SkewMatrix) -> Result<f64> {
    check_dims(j.dim(), w.dim())?;
    let w = w.as_matrix();
    Ok(-0.5 * (w * j.as_matrix() * w).trace())
}

/// The inertia operator with `J` pre-diagonalised, so that `A⁻¹` is a
/// componentwise division in the eigenbasis.
#[derive(Clone, Debug)]
pub struct InertiaOperator {
    j: MomentMatrix,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl InertiaOperator {
    /// Fails with [`Error::SingularInertia`] when some `λ_i + λ_j` (`i ≠ j`)
    /// is not positive.
    pub fn new(j: &MomentMatrix) -> Result<Self> {
        let SymmetricEigen {
            eigenvalues,
            eigenvectors,
        } = SymmetricEigen::new(j.as_matrix().clone());
        let n = j.dim();
        let tol = 1e-12 * eigenvalues.amax().max(1e-300);
        for a in 0..n {
            for b in (a + 1)..n {
                let pair_sum = eigenvalues[a] + eigenvalues[b];
                if pair_sum <= tol {
                    return Err(Error::SingularInertia { pair_sum });
                }
            }
        }
        Ok(Self {
            j: j.clone(),
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn moment(&self) -> &MomentMatrix {
        &self.j
    }

    pub fn dim(&self) -> usize {
        self.j.dim()
    }

    pub fn apply(&self, w: &SkewMatrix) -> Result<Covector> {
        inertia_apply(&self.j, w)
    }

    pub fn solve(&self, m: &Covector) -> Result<SkewMatrix> {
        check_dims(self.dim(), m.dim())?;
        Ok(self.solve_raw(m.as_matrix()))
    }

    fn solve_raw(&self, m: &DMatrix<f64>) -> SkewMatrix {
        let q = &self.eigenvectors;
        let mut mp = q.transpose() * m * q;
        let n = self.dim();
        for a in 0..n {
            for b in 0..n {
                mp[(a, b)] = if a == b {
                    0.0
                } else {
                    mp[(a, b)] / (self.eigenvalues[a] + self.eigenvalues[b])
                };
            }
        }
        SkewMatrix::project(q * mp * q.transpose())
    }

    pub fn energy(&self, w: &SkewMatrix) -> Result<f64> {
        kinetic_energy(&self.j, w)
    }
}

/// Configuration and body angular velocity at a given time.
#[derive(Clone, Debug, PartialEq)]
pub struct BodyState {
    pub g: RotationMatrix,
    pub omega: SkewMatrix,
    pub time: f64,
}

impl BodyState {
    pub fn new(g: RotationMatrix, omega: SkewMatrix, time: f64) -> Result<Self> {
        check_dims(g.dim(), omega.dim())?;
        Ok(Self { g, omega, time })
    }

    /// Starts at the identity configuration.
    pub fn at_identity(omega: SkewMatrix) -> Self {
        let n = omega.dim();
        Self {
            g: RotationMatrix::identity(n),
            omega,
            time: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.omega.dim()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Integrator {
    /// Classical RK4 on `(g, M)`.
    Rk4,
    /// RK4 on `M`; `g ← g · cay(dt Ω_mid)` so that `g` stays orthogonal.
    CayleyLieGroup,
}

/// The free rigid body for a fixed moment matrix.
#[derive(Clone, Debug)]
pub struct RigidBody {
    inertia: InertiaOperator,
}

impl RigidBody {
    pub fn new(j: MomentMatrix) -> Result<Self> {
        Ok(Self {
            inertia: InertiaOperator::new(&j)?,
        })
    }

    pub fn from_distribution(dist: &MassDistribution) -> Result<Self> {
        Self::new(moment_matrix(dist))
    }

    pub fn moment(&self) -> &MomentMatrix {
        self.inertia.moment()
    }

    pub fn inertia(&self) -> &InertiaOperator {
        &self.inertia
    }

    pub fn dim(&self) -> usize {
        self.inertia.dim()
    }

    pub fn momentum(&self, state: &BodyState) -> Result<Covector> {
        self.inertia.apply(&state.omega)
    }

    pub fn energy(&self, state: &BodyState) -> Result<f64> {
        self.inertia.energy(&state.omega)
    }

    /// `(ġ, Ṁ) = (gΩ, [M, Ω])`.
    pub fn euler_rhs(&self, state: &BodyState) -> Result<(DMatrix<f64>, SkewMatrix)> {
        check_dims(self.dim(), state.dim())?;
        let w = state.omega.as_matrix();
        let m = self.inertia.apply(&state.omega)?;
        let dm = lie_core::bracket_unchecked(m.as_matrix(), w);
        Ok((state.g.as_matrix() * w, dm))
    }

    fn momentum_rhs(&self, m: &DMatrix<f64>) -> (SkewMatrix, DMatrix<f64>) {
        let w = self.inertia.solve_raw(m);
        let dm = m * w.as_matrix() - w.as_matrix() * m;
        (w, dm)
    }

    pub fn step(&self, state: &BodyState, dt: f64, method: Integrator) -> Result<BodyState> {
        check_dims(self.dim(), state.dim())?;
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        let g0 = state.g.as_matrix();
        let m0 = self.inertia.apply(&state.omega)?.into_skew().into_matrix();

        let (w1, k1) = self.momentum_rhs(&m0);
        let m_a = &m0 + &k1 * (0.5 * dt);
        let (w2, k2) = self.momentum_rhs(&m_a);
        let m_b = &m0 + &k2 * (0.5 * dt);
        let (w3, k3) = self.momentum_rhs(&m_b);
        let m_c = &m0 + &k3 * dt;
        let (w4, k4) = self.momentum_rhs(&m_c);
        let m1 = &m0 + (&k1 + &k2 * 2.0 + &k3 * 2.0 + &k4) * (dt / 6.0);
        let m1 = SkewMatrix::project(m1);

        let g1 = match method {
            Integrator::Rk4 => {
                let l1 = g0 * w1.as_matrix();
                let l2 = (g0 + &l1 * (0.5 * dt)) * w2.as_matrix();
                let l3 = (g0 + &l2 * (0.5 * dt)) * w3.as_matrix();
                let l4 = (g0 + &l3 * dt) * w4.as_matrix();
                g0 + (l1 + l2 * 2.0 + l3 * 2.0 + l4) * (dt / 6.0)
            }
            Integrator::CayleyLieGroup => {
                let m_mid = (&m0 + m1.as_matrix()) * 0.5;
                let w_mid = self.inertia.solve_raw(&m_mid);
                g0 + g0 * cayley_increment(&(w_mid.as_matrix() * dt))
            }
        };
        let omega = self.inertia.solve_raw(m1.as_matrix());
        let time = state.time + dt;
        if !omega.is_finite() || g1.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { step: 0, time });
        }
        Ok(BodyState {
            g: RotationMatrix::from_integrator(g1),
            omega,
            time,
        })
    }

    /// Runs `steps` steps, calling `observe` on the initial state and after
    /// every step.
    pub fn integrate<F>(
        &self,
        state: &BodyState,
        dt: f64,
        steps: usize,
        method: Integrator,
        mut observe: F,
    ) -> Result<BodyState>
    where
        F: FnMut(usize, &BodyState),
    {
        let mut s = state.clone();
        observe(0, &s);
        for i in 1..=steps {
            s = self.step(&s, dt, method).map_err(|e| e.at_step(i))?;
            observe(i, &s);
        }
        Ok(s)
    }

    /// `g A(Ω) gᵀ`.
    pub fn spatial_momentum(&self, state: &BodyState) -> Result<Covector> {
        let m = self.momentum(state)?;
        lie_core::coadjoint(&state.g, &m)
    }
}

/// Cayley transform `(I - X/2)⁻¹ (I + X/2)`.
pub fn cayley(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    DMatrix::<f64>::identity(n, n) + cayley_increment(x)
}

/// `cay(X) - I = (I - X/2)⁻¹ X`, computed without forming `cay(X)` so that the
/// small increment keeps full relative precision.
fn cayley_increment(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let lhs = DMatrix::<f64>::identity(n, n) - x * 0.5;
    lhs.lu().solve(x).expect("I - X/2 is invertible for skew X")
}

pub fn euler_rhs(j: &MomentMatrix, state: &BodyState) -> Result<(DMatrix<f64>, SkewMatrix)> {
    RigidBody::new(j.clone())?.euler_rhs(state)
}

pub fn step(j: &MomentMatrix, state: &BodyState, dt: f64, method: Integrator) -> Result<BodyState> {
    RigidBody::new(j.clone())?.step(state, dt, method)
}

pub fn spatial_momentum(j: &MomentMatrix, state: &BodyState) -> Result<Covector> {
    check_dims(j.dim(), state.dim())?;
    let m = inertia_apply(j, &state.omega)?;
    lie_core::coadjoint(&state.g, &m)
}

/// `tr((M + J²λ)^k)` for each `λ` in `lambdas`.
pub fn manakov_integrals(j: &MomentMatrix, m: &Covector, k: usize, lambdas: &[f64]) -> Result<Vec<f64>> {
    let n = j.dim();
    check_dims(n, m.dim())?;
    if k < 2 || k > n {
        return Err(Error::InvalidArgument(format!("degree k = {k} outside 2..={n}")));
    }
    if lambdas.iter().any(|l| !l.is_finite()) {
        return Err(Error::NonFinite);
    }
    let j2 = j.as_matrix() * j.as_matrix();
    Ok(lambdas
        .iter()
        .map(|&l| {
            let lax = m.as_matrix() + &j2 * l;
            let mut p = lax.clone();
            for _ in 1..k {
                p = &p * &lax;
            }
            p.trace()
        })
        .collect())
}

/// Chebyshev nodes on `[-1, 1]`, used as default λ-samples.
pub fn default_lambda_samples(k: usize) -> Vec<f64> {
    let m = k + 1;
    (0..m)
        .map(|i| (std::f64::consts::PI * (2 * i + 1) as f64 / (2 * m) as f64).cos())
        .collect()
}

/// Condition-number ceiling for the sampling Vandermonde system.
pub const VANDERMONDE_MAX_COND: f64 = 1e10;

/// Coefficients `c_0..c_k` of `tr(M + J²λ)^k = Σ c_s λ^s`, recovered from
/// `k + 1` samples by solving the Vandermonde system.
pub fn manakov_coefficients(j: &MomentMatrix, m: &Covector, k: usize, samples: &[f64]) -> Result<Vec<f64>> {
    if samples.len() != k + 1 {
        return Err(Error::DimensionMismatch {
            expected: k + 1,
            found: samples.len(),
        });
    }
    let values = manakov_integrals(j, m, k, samples)?;
    let v = DMatrix::from_fn(k + 1, k + 1, |r, c| samples[r].powi(c as i32));
    let sv = v.clone().singular_values();
    let cond = sv.max() / sv.min();
    if !(cond <= VANDERMONDE_MAX_COND) {
        return Err(Error::IllConditioned(cond));
    }
    let c = v
        .lu()
        .solve(&DVector::from_vec(values))
        .ok_or(Error::IllConditioned(f64::INFINITY))?;
    Ok(c.iter().copied().collect())
}

/// The non-trivial λ-coefficients of the Manakov polynomials for `so(n)`:
/// pairs `(k, s)` with `2 ≤ k ≤ n`, `s < k` and `s ≡ k (mod 2)`. The top
/// coefficient `s = k` is `tr J^{2k}` and carries no information; odd-parity
/// coefficients vanish identically.
pub fn manakov_indices(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for k in 2..=n {
        for s in (k % 2..k).step_by(2) {
            out.push((k, s));
        }
    }
    out
}

/// Evaluates every coefficient listed by [`manakov_indices`].
pub fn manakov_family(j: &MomentMatrix, m: &Covector) -> Result<Vec<f64>> {
    let n = j.dim();
    let mut out = Vec::new();
    for k in 2..=n {
        let c = manakov_coefficients(j, m, k, &default_lambda_samples(k))?;
        out.extend((k % 2..k).step_by(2).map(|s| c[s]));
    }
    Ok(out)
}

/// Number of integrals in involution `½⌊n/2⌋ + n(n-1)/4`, evaluated exactly.
pub fn manakov_count(n: usize) -> Result<usize> {
    if n < 2 {
        return Err(Error::InvalidDimension(n));
    }
    // 4 N(n) = 2⌊n/2⌋ + n(n-1)
    let numerator = 2 * (n / 2) + n * (n - 1);
    debug_assert_eq!(numerator % 4, 0);
    Ok(numerator / 4)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie_core::{hat, killing_pair, l_op, unit, vee};
    use approx::assert_abs_diff_eq;
    use nalgebra::Vector3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_skew(rng: &mut ChaCha8Rng, n: usize) -> SkewMatrix {
        SkewMatrix::from_matrix(DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0))).unwrap()
    }

    fn random_pd(rng: &mut ChaCha8Rng, n: usize) -> MomentMatrix {
        let q = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0)).qr().q();
        let d = DMatrix::from_diagonal(&DVector::from_fn(n, |_, _| rng.gen_range(0.5..3.0)));
        let j = &q * d * q.transpose();
        MomentMatrix::new((&j + j.transpose()) * 0.5).unwrap()
    }

    fn random_distribution(rng: &mut ChaCha8Rng, n: usize, atoms: usize) -> MassDistribution {
        MassDistribution::new(
            (0..atoms)
                .map(|_| {
                    (
                        rng.gen_range(0.1..2.0),
                        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                    )
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn moment_matrix_examples() {
        let one = |pts: Vec<(f64, Vec<f64>)>| moment_matrix(&MassDistribution::new(pts).unwrap());
        assert_eq!(
            one(vec![(1.0, unit(3, 0))]).as_matrix(),
            &DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0, 0.0]))
        );
        assert_eq!(
            one((0..3).map(|i| (1.0, unit(3, i))).collect()).as_matrix(),
            &DMatrix::identity(3, 3)
        );
        assert_eq!(
            one(vec![(2.0, unit(3, 0)), (1.0, unit(3, 1))]).as_matrix(),
            &DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0, 0.0]))
        );
        assert!(MassDistribution::new(vec![]).is_err());
        assert!(MassDistribution::new(vec![(0.0, unit(3, 0))]).is_err());
        assert!(MassDistribution::new(vec![(1.0, unit(3, 0)), (1.0, unit(2, 0))]).is_err());
    }

    #[test]
    fn classical_inertia_examples() {
        let d = MassDistribution::new(vec![(1.0, unit(3, 0))]).unwrap();
        assert_eq!(
            classical_inertia_3d(&d).unwrap(),
            Matrix3::from_diagonal(&Vector3::new(0.0, 1.0, 1.0))
        );

        // J = diag(a, b, c) -> I = diag(b + c, a + c, a + b)
        let d = MassDistribution::new(vec![(2.0, unit(3, 0)), (3.0, unit(3, 1)), (5.0, unit(3, 2))]).unwrap();
        assert_eq!(
            classical_inertia_3d(&d).unwrap(),
            Matrix3::from_diagonal(&Vector3::new(8.0, 7.0, 5.0))
        );

        let iso: Vec<_> = (0..3)
            .flat_map(|i| {
                let mut p = unit(3, i);
                let q = p.clone();
                p[i] = -1.0;
                [(1.0, p), (1.0, q)]
            })
            .collect();
        let i = classical_inertia_3d(&MassDistribution::new(iso).unwrap()).unwrap();
        assert_abs_diff_eq!(i, Matrix3::identity() * 4.0);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = random_distribution(&mut rng, 3, 7);
        let j = moment_matrix(&d);
        let via_j = DMatrix::identity(3, 3) * j.as_matrix().trace() - j.as_matrix();
        let direct = classical_inertia_3d(&d).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                assert_abs_diff_eq!(via_j[(r, c)], direct[(r, c)], epsilon = 1e-12);
            }
        }
        let d4 = random_distribution(&mut rng, 4, 3);
        assert!(classical_inertia_3d(&d4).is_err());
    }

    #[test]
    fn inertia_apply_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = [0.7, 1.3, 2.1, 0.4];
        let j = MomentMatrix::diagonal(&d).unwrap();
        let w = random_skew(&mut rng, 4);
        let a = inertia_apply(&j, &w).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                assert_abs_diff_eq!(
                    a.as_matrix()[(r, c)],
                    (d[r] + d[c]) * w.as_matrix()[(r, c)],
                    epsilon = 1e-15
                );
            }
        }
        let id = MomentMatrix::diagonal(&[1.0; 4]).unwrap();
        assert_eq!(inertia_apply(&id, &w).unwrap().into_skew(), &w * 2.0);

        for _ in 0..10 {
            let dist = random_distribution(&mut rng, 3, 5);
            let j = moment_matrix(&dist);
            let i = classical_inertia_3d(&dist).unwrap();
            let omega = Vector3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let a = inertia_apply(&j, &hat(omega.as_slice()).unwrap()).unwrap();
            assert_abs_diff_eq!(vee(a.as_skew()).unwrap(), i * omega, epsilon = 1e-12);
        }

        // symmetric with respect to the trace pairing
        let j = random_pd(&mut rng, 5);
        let a = random_skew(&mut rng, 5);
        let b = random_skew(&mut rng, 5);
        assert_abs_diff_eq!(
            inertia_apply(&j, &a).unwrap().pair(&b).unwrap(),
            inertia_apply(&j, &b).unwrap().pair(&a).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn inertia_solve_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = random_skew(&mut rng, 4);
        let id = MomentMatrix::diagonal(&[1.0; 4]).unwrap();
        let w = inertia_solve(&id, &Covector::from_skew(m.clone())).unwrap();
        assert_abs_diff_eq!((&w - &(&m * 0.5)).norm(), 0.0, epsilon = 1e-15);

        for n in 2..=6 {
            let j = random_pd(&mut rng, n);
            let w = random_skew(&mut rng, n);
            let back = inertia_solve(&j, &inertia_apply(&j, &w).unwrap()).unwrap();
            assert!((&back - &w).norm() <= 1e-10);
        }

        let j = MomentMatrix::diagonal(&[1.0, 0.0, 0.0]).unwrap();
        let m = Covector::from_skew(l_op(&unit(3, 1), &unit(3, 2)).unwrap());
        assert!(matches!(inertia_solve(&j, &m), Err(Error::SingularInertia { .. })));
    }

    #[test]
    fn kinetic_energy_examples() {
        let (a, b) = (1.7, 0.6);
        let j = MomentMatrix::diagonal(&[a, b, 2.0, 3.0]).unwrap();
        let w = l_op(&unit(4, 0), &unit(4, 1)).unwrap();
        assert_abs_diff_eq!(kinetic_energy(&j, &w).unwrap(), (a + b) / 2.0, epsilon = 1e-15);
        assert_eq!(kinetic_energy(&j, &SkewMatrix::zeros(4)).unwrap(), 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for n in 2..=6 {
            let j = random_pd(&mut rng, n);
            let w = random_skew(&mut rng, n);
            let k = kinetic_energy(&j, &w).unwrap();
            let half_pair = 0.5 * inertia_apply(&j, &w).unwrap().pair(&w).unwrap();
            assert_abs_diff_eq!(k, half_pair, epsilon = 1e-12);
            assert!(k >= 0.0);
        }
    }

    #[test]
    fn euler_rhs_examples() {
        // steady rotation in a coordinate plane
        let j = MomentMatrix::diagonal(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        let w = &l_op(&unit(4, 1), &unit(4, 3)).unwrap() * 0.8;
        let (_, dm) = euler_rhs(&j, &BodyState::at_identity(w)).unwrap();
        assert_eq!(dm.norm(), 0.0);

        // n = 3 reduction to the classical component equations
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let jd = [2.0, 1.0, 0.0];
        let i = [jd[1] + jd[2], jd[0] + jd[2], jd[0] + jd[1]];
        let j = MomentMatrix::diagonal(&jd).unwrap();
        for _ in 0..10 {
            let om: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let state = BodyState::at_identity(hat(&om).unwrap());
            let (_, dm) = euler_rhs(&j, &state).unwrap();
            let dm = vee(&dm).unwrap();
            let classical = Vector3::new(
                (i[1] - i[2]) * om[1] * om[2],
                (i[2] - i[0]) * om[2] * om[0],
                (i[0] - i[1]) * om[0] * om[1],
            );
            assert_abs_diff_eq!(dm, classical, epsilon = 1e-14);
        }

        // dK/dt = <[M, Ω], Ω> = 0 and the two forms of the Euler equation agree
        for n in 3..=6 {
            let j = random_pd(&mut rng, n);
            let w = random_skew(&mut rng, n);
            let body = RigidBody::new(j.clone()).unwrap();
            let (_, dm) = body.euler_rhs(&BodyState::at_identity(w.clone())).unwrap();
            let dk = killing_pair(&dm, &w).unwrap();
            assert!(dk.abs() <= 1e-12, "{dk}");

            let a = inertia_apply(&j, &w).unwrap().into_skew();
            let euler_form =
                SkewMatrix::from_matrix(a.as_matrix() * w.as_matrix() - w.as_matrix() * a.as_matrix()).unwrap();
            let w_dot = body.inertia().solve(&Covector::from_skew(dm.clone())).unwrap();
            let a_wdot = inertia_apply(&j, &w_dot).unwrap().into_skew();
            assert!((&a_wdot - &euler_form).norm() <= 1e-12);
        }
    }

    #[test]
    fn steady_rotation_is_a_one_parameter_subgroup() {
        let j = MomentMatrix::diagonal(&[1.0, 2.0, 3.0]).unwrap();
        let w = &hat(&unit(3, 2)).unwrap() * 0.5;
        let body = RigidBody::new(j).unwrap();
        let dt = 1e-2;
        let end = body
            .integrate(&BodyState::at_identity(w.clone()), dt, 100, Integrator::Rk4, |_, _| {})
            .unwrap();
        assert!((&end.omega - &w).norm() <= 1e-14);
        let (s, c) = (0.5f64).sin_cos();
        let g = end.g.as_matrix();
        assert_abs_diff_eq!(g[(0, 0)], c, epsilon = 1e-9);
        assert_abs_diff_eq!(g[(1, 0)], s, epsilon = 1e-9);
    }

    #[test]
    fn rk4_local_error_is_fifth_order() {
        let j = MomentMatrix::diagonal(&[2.0, 1.0, 0.0]).unwrap(); // I = diag(1, 2, 3)
        let body = RigidBody::new(j).unwrap();
        let w0 = hat(&[1.0, 1.0, 1.0]).unwrap();
        let s0 = BodyState::at_identity(w0);
        let reference = |h: f64| {
            let sub = 2000;
            body.integrate(&s0, h / sub as f64, sub, Integrator::Rk4, |_, _| {})
                .unwrap()
        };
        let err = |h: f64| {
            let one = body.step(&s0, h, Integrator::Rk4).unwrap();
            (&one.omega - &reference(h).omega).norm()
        };
        let (e1, e2) = (err(0.1), err(0.05));
        let order = (e1 / e2).log2();
        assert!(order > 4.6 && order < 5.4, "observed local order {order}");
    }

    #[test]
    fn cayley_keeps_rotation_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let j = random_pd(&mut rng, 4);
        let body = RigidBody::new(j).unwrap();
        let w = random_skew(&mut rng, 4);
        let w = &w * (1.0 / w.norm());
        let end = body
            .integrate(
                &BodyState::at_identity(w),
                1e-3,
                100_000,
                Integrator::CayleyLieGroup,
                |_, _| {},
            )
            .unwrap();
        let err = end.g.orthogonality_error();
        assert!(err <= 1e-13, "orthogonality error {err:.3e}");
    }

    #[test]
    fn spatial_momentum_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let j = random_pd(&mut rng, 4);
        let w = random_skew(&mut rng, 4);
        let s = BodyState::at_identity(w.clone());
        assert_eq!(spatial_momentum(&j, &s).unwrap(), inertia_apply(&j, &w).unwrap());

        let body = RigidBody::new(j.clone()).unwrap();
        let mut first = None;
        body.integrate(&s, 1e-3, 2000, Integrator::Rk4, |_, st| {
            let sm = body.spatial_momentum(st).unwrap();
            let bm = body.momentum(st).unwrap();
            assert_abs_diff_eq!(sm.as_skew().norm(), bm.as_skew().norm(), epsilon = 1e-9);
            let f = first.get_or_insert_with(|| sm.clone());
            assert!((sm.as_skew() - f.as_skew()).norm() <= 1e-9 * f.as_skew().norm());
        })
        .unwrap();
    }

    #[test]
    fn manakov_integral_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let j = random_pd(&mut rng, 3);
        let m = Covector::from_skew(random_skew(&mut rng, 3));
        let v = manakov_integrals(&j, &m, 2, &[0.0]).unwrap()[0];
        assert_abs_diff_eq!(
            v,
            -2.0 * killing_pair(m.as_skew(), m.as_skew()).unwrap(),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(v, -2.0 * vee(m.as_skew()).unwrap().norm_squared(), epsilon = 1e-14);

        // M = 0: tr(J^{2k}) λ^k
        let z = Covector::from_skew(SkewMatrix::zeros(3));
        let c = manakov_coefficients(&j, &z, 3, &default_lambda_samples(3)).unwrap();
        let j6 = j.as_matrix().pow(6).trace();
        assert_abs_diff_eq!(c[3], j6, epsilon = 1e-10 * j6);
        for v in &c[..3] {
            assert_abs_diff_eq!(*v, 0.0, epsilon = 1e-10 * j6);
        }

        assert!(manakov_integrals(&j, &m, 1, &[0.0]).is_err());
        assert!(manakov_integrals(&j, &m, 4, &[0.0]).is_err());
        assert!(matches!(
            manakov_coefficients(&j, &m, 2, &[0.5, 0.5 + 1e-9, 0.2]),
            Err(Error::IllConditioned(_))
        ));
    }

    #[test]
    fn manakov_in_three_dimensions_reduces_to_norm_and_energy() {
        // tr(M²J²) = (α - tr J²)|m|² + 2β K where α, β solve J_i² = α + β / I_i
        let jd = [0.9, 1.4, 2.3];
        let j = MomentMatrix::diagonal(&jd).unwrap();
        let i: Vec<f64> = (0..3).map(|a| jd.iter().sum::<f64>() - jd[a]).collect();
        let beta = i[0] * i[1] * i[2];
        let alpha = jd[0] * jd[0] - beta / i[0];
        let tr_j2: f64 = jd.iter().map(|x| x * x).sum();
        let body = RigidBody::new(j.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for _ in 0..10 {
            let m = Covector::from_skew(random_skew(&mut rng, 3));
            let c = manakov_coefficients(&j, &m, 3, &default_lambda_samples(3)).unwrap();
            let norm2 = vee(m.as_skew()).unwrap().norm_squared();
            let energy = body.inertia().energy(&body.inertia().solve(&m).unwrap()).unwrap();
            assert_abs_diff_eq!(
                c[1] / 3.0,
                (alpha - tr_j2) * norm2 + 2.0 * beta * energy,
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn manakov_count_examples() {
        assert_eq!(manakov_count(2).unwrap(), 1);
        assert_eq!(manakov_count(3).unwrap(), 2);
        assert_eq!(manakov_count(4).unwrap(), 4);
        assert_eq!(manakov_count(5).unwrap(), 6);
        assert_eq!(manakov_count(6).unwrap(), 9);
        assert!(manakov_count(1).is_err());
        for n in 2..40 {
            assert_eq!(manakov_indices(n).len(), manakov_count(n).unwrap());
        }
    }

    #[test]
    fn manakov_coefficients_are_conserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let j = random_pd(&mut rng, 5);
        let body = RigidBody::new(j.clone()).unwrap();
        let s0 = BodyState::at_identity(random_skew(&mut rng, 5));
        let f0 = manakov_family(&j, &body.momentum(&s0).unwrap()).unwrap();
        let end = body.integrate(&s0, 1e-3, 2000, Integrator::Rk4, |_, _| {}).unwrap();
        let f1 = manakov_family(&j, &body.momentum(&end).unwrap()).unwrap();
        for (a, b) in f0.iter().zip(&f1) {
            assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn singular_body_is_rejected() {
        let j = MomentMatrix::diagonal(&[1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(RigidBody::new(j), Err(Error::SingularInertia { .. })));
        assert!(MomentMatrix::diagonal(&[1.0, -1.0, 0.0]).is_err());
    }
}
