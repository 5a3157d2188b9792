//! Built-in invariant suites behind `lieflow verify`.

use lieflow_core::circle_diff::{
    breaking_time, burgers_exact, dexp_at_zero, geodesic_flow, hk_energy, momentum_k, riemannian_exp,
    riemannian_exp_with, GeodesicFlow, PeriodicField,
};
use lieflow_core::error::Error;
use lieflow_core::euler_arnold::{involution_check, AlgebraCovector, AlgebraSpec, ScalarField, INVOLUTION_THRESHOLD};
use lieflow_core::lie_core::{Covector, SkewMatrix};
use lieflow_core::rigid_body::{
    default_lambda_samples, manakov_coefficients, manakov_count, manakov_family, manakov_indices, BodyState,
    Integrator, MomentMatrix, RigidBody,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    RigidConservation,
    Manakov,
    Involution,
    CircleConservation,
    BurgersOracle,
    Expmap,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
        }
    }

    pub fn passed(&self) -> bool {
        self.value <= self.tolerance
    }

    pub fn line(&self) -> String {
        let tag = if self.passed() { "PASS" } else { "FAIL" };
        format!(
            "{tag} {}: {:.3e} (tolerance {:.1e})",
            self.name, self.value, self.tolerance
        )
    }
}

pub fn run_suite(suite: Suite) -> Result<Vec<Check>, Error> {
    match suite {
        Suite::RigidConservation => rigid_conservation(),
        Suite::Manakov => manakov(),
        Suite::Involution => involution(),
        Suite::CircleConservation => circle_conservation(),
        Suite::BurgersOracle => burgers_oracle(),
        Suite::Expmap => expmap(),
    }
}

/// `Q diag(λ) Qᵀ` with `λ ∈ [0.5, 3]` and a random rotation `Q`.
pub fn random_moment_matrix(rng: &mut ChaCha8Rng, n: usize) -> Result<MomentMatrix, Error> {
    let q = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0)).qr().q();
    let d = DVector::from_fn(n, |_, _| rng.gen_range(0.5..3.0));
    MomentMatrix::new(&q * DMatrix::from_diagonal(&d) * q.transpose())
}

pub fn random_unit_skew(rng: &mut ChaCha8Rng, n: usize) -> Result<SkewMatrix, Error> {
    let coords: Vec<f64> = (0..n * (n - 1) / 2).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let w = SkewMatrix::from_coords(n, &coords)?;
    Ok(&w * (1.0 / w.norm()))
}

/// Singular values of a skew matrix, i.e. the moduli of its eigenvalues.
fn skew_spectrum(m: &Covector) -> Vec<f64> {
    let mut s: Vec<f64> = m.as_matrix().clone().singular_values().iter().copied().collect();
    s.sort_by(f64::total_cmp);
    s
}

fn rigid_conservation() -> Result<Vec<Check>, Error> {
    let mut out = Vec::new();
    for n in 3..=5 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + n as u64);
        let body = RigidBody::new(random_moment_matrix(&mut rng, n)?)?;
        let state = BodyState::at_identity(random_unit_skew(&mut rng, n)?);
        let e0 = body.energy(&state)?;
        let s0 = body.spatial_momentum(&state)?;
        let spec0 = skew_spectrum(&body.momentum(&state)?);
        let (mut de, mut ds, mut dl) = (0.0f64, 0.0f64, 0.0f64);
        let mut err = None;
        body.integrate(&state, 1e-3, 10_000, Integrator::Rk4, |_, s| {
            let r = (|| {
                de = de.max((body.energy(s)? - e0).abs() / e0);
                let sm = body.spatial_momentum(s)?;
                ds = ds.max((sm.as_matrix() - s0.as_matrix()).norm() / s0.as_matrix().norm());
                let sp = skew_spectrum(&body.momentum(s)?);
                let top = spec0.last().copied().unwrap_or(1.0);
                for (a, b) in sp.iter().zip(&spec0) {
                    dl = dl.max((a - b).abs() / top);
                }
                Ok::<_, Error>(())
            })();
            if let Err(e) = r {
                err.get_or_insert(e);
            }
        })?;
        if let Some(e) = err {
            return Err(e);
        }
        out.push(Check::new(format!("n={n} energy drift"), de, 1e-7));
        out.push(Check::new(format!("n={n} spatial momentum drift"), ds, 1e-7));
        out.push(Check::new(format!("n={n} spectrum of M drift"), dl, 1e-7));
    }
    Ok(out)
}

fn manakov() -> Result<Vec<Check>, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let j = random_moment_matrix(&mut rng, 4)?;
    let body = RigidBody::new(j.clone())?;
    let state = BodyState::at_identity(random_unit_skew(&mut rng, 4)?);
    let c0 = manakov_family(&j, &body.momentum(&state)?)?;
    let mut drift = vec![0.0f64; c0.len()];
    let mut err = None;
    body.integrate(&state, 1e-3, 10_000, Integrator::Rk4, |i, s| {
        if i % 10 != 0 {
            return;
        }
        match body.momentum(s).and_then(|m| manakov_family(&j, &m)) {
            Ok(c) => {
                for ((d, c), c0) in drift.iter_mut().zip(&c).zip(&c0) {
                    *d = d.max((c - c0).abs() / c0.abs());
                }
            }
            Err(e) => {
                err.get_or_insert(e);
            }
        }
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    let mut out: Vec<Check> = manakov_indices(4)
        .iter()
        .zip(&drift)
        .map(|((k, s), d)| Check::new(format!("n=4 coefficient k={k} s={s} drift"), *d, 1e-6))
        .collect();
    for (n, expected) in [(3, 2), (4, 4)] {
        let count = manakov_count(n)?;
        out.push(Check::new(
            format!("n={n} integral count {count}"),
            (count as f64 - expected as f64).abs(),
            0.0,
        ));
    }
    Ok(out)
}

fn involution() -> Result<Vec<Check>, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let spec = AlgebraSpec::so_n(4)?;
    let j = random_moment_matrix(&mut rng, 4)?;
    let functions: Vec<Box<ScalarField>> = manakov_indices(4)
        .into_iter()
        .map(|(k, s)| {
            let (spec, j) = (spec.clone(), j.clone());
            Box::new(move |m: &AlgebraCovector| {
                spec.covector_to_matrix(m)
                    .and_then(|mm| manakov_coefficients(&j, &mm, k, &default_lambda_samples(k)))
                    .map_or(f64::NAN, |c| c[s])
            }) as Box<ScalarField>
        })
        .collect();
    let refs: Vec<&ScalarField> = functions.iter().map(|f| f.as_ref()).collect();
    let samples: Vec<AlgebraCovector> = (0..10)
        .map(|_| AlgebraCovector::new((0..6).map(|_| rng.gen_range(-1.0..1.0)).collect()))
        .collect();
    let report = involution_check(&spec, &refs, &samples, INVOLUTION_THRESHOLD)?;
    Ok(vec![Check::new(
        "n=4 Manakov brackets at 10 random points",
        report.max_abs,
        INVOLUTION_THRESHOLD,
    )])
}

/// Energy and momentum drift of the geodesic from `u0`, momentum sampled
/// every `every` steps.
fn conservation_run(u0: PeriodicField, k: usize, dt: f64, t_end: f64, every: usize) -> Result<(f64, f64), Error> {
    let e0 = hk_energy(&u0, k)?;
    let mut flow = GeodesicFlow::new(u0.clone(), k, dt)?;
    let m0 = momentum_k(&flow.state(), &u0, k)?;
    let (mut de, mut dm) = (0.0f64, 0.0f64);
    let mut err = None;
    flow.run_until(t_end, |f| {
        let r = (|| {
            de = de.max((hk_energy(f.u(), k)? - e0).abs() / e0);
            if f.steps() % every == 0 {
                let m = momentum_k(&f.state(), f.u(), k)?;
                dm = dm.max((&m - &m0).max_abs() / m0.max_abs());
            }
            Ok::<_, Error>(())
        })();
        if let Err(e) = r {
            err.get_or_insert(e);
        }
    })?;
    match err {
        Some(e) => Err(e),
        None => Ok((de, dm)),
    }
}

fn circle_conservation() -> Result<Vec<Check>, Error> {
    let mut out = Vec::new();
    let runs = [
        (0, 256, 0.1, 1e-3, 1.0),
        (1, 512, 0.5, 5e-4, 1.8),
        (2, 256, 0.1, 1e-3, 1.0),
    ];
    for (k, n, a, dt, t_end) in runs {
        let u0 = PeriodicField::from_fn(n, |x| a * x.cos())?;
        let (de, dm) = conservation_run(u0, k, dt, t_end, 100)?;
        let label = format!("k={k} u0={a} cos x N={n} T={t_end}");
        out.push(Check::new(format!("{label} energy drift"), de, 1e-6));
        out.push(Check::new(format!("{label} momentum drift"), dm, 1e-6));
    }
    Ok(out)
}

fn burgers_oracle() -> Result<Vec<Check>, Error> {
    let u0 = PeriodicField::from_fn(256, |x| 0.1 * x.sin())?;
    let t = 0.5 * breaking_time(&u0);
    let mut flow = GeodesicFlow::new(u0.clone(), 0, 1e-4)?;
    flow.run_until(t, |_| {})?;
    let err = (flow.u() - &burgers_exact(&u0, t)?).max_abs();
    let neg_sin = PeriodicField::from_fn(256, |x| -x.sin())?;
    Ok(vec![
        Check::new("spectral vs characteristics at t*/2", err, 1e-6),
        Check::new(
            "breaking time of -sin x",
            (breaking_time(&neg_sin) - 1.0 / 3.0).abs(),
            1e-10,
        ),
    ])
}

fn expmap() -> Result<Vec<Check>, Error> {
    let n = 64;
    let mut out = Vec::new();
    let exp0 = riemannian_exp(&PeriodicField::zeros(n)?, 1)?;
    out.push(Check::new("exp(0) displacement", exp0.psi.max_abs(), 0.0));
    let mut dirs = Vec::new();
    for m in 1..=3 {
        let m = m as f64;
        dirs.push(PeriodicField::from_fn(n, |x| (m * x).cos())?);
        dirs.push(PeriodicField::from_fn(n, |x| (m * x).sin())?);
    }
    let probes = dexp_at_zero(1, &dirs, 1e-4)?;
    let worst = probes
        .iter()
        .zip(&dirs)
        .fold(0.0f64, |a, (p, w)| a.max((p - w).max_abs()));
    out.push(Check::new("Dexp at 0 on modes 1..3", worst, 1e-5));
    let u0 = PeriodicField::from_fn(n, |x| 0.5 * x.cos())?;
    let traj = geodesic_flow(&u0, 1, 1.0, 1e-3)?;
    let mut ray = 0.0f64;
    for (t, idx) in [(0.25, 250), (0.5, 500), (1.0, 1000)] {
        let e = riemannian_exp_with(&u0.scale(t), 1, 1e-3)?;
        ray = ray.max((&e.psi - &traj[idx].state.psi).max_abs());
    }
    out.push(Check::new("ray property exp(t u0) = phi(t)", ray, 1e-7));
    Ok(out)
}
