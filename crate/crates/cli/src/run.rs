//! Runs a validated scenario and collects its time series and report.

use std::collections::BTreeMap;

use lieflow_core::circle_diff::{
    breaking_time, burgers_exact, dexp_at_zero, hk_energy, momentum_k, riemannian_exp, step_schedule, GeodesicFlow,
    PeriodicField,
};
use lieflow_core::error::Error;
use lieflow_core::euler_arnold::{involution_check, AlgebraCovector, AlgebraSpec, ScalarField};
use lieflow_core::lie_core::{hat, SkewMatrix};
use lieflow_core::rigid_body::{
    default_lambda_samples, manakov_coefficients, manakov_family, manakov_indices, BodyState, Integrator, MomentMatrix,
    RigidBody,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::CliError;
use crate::output::{Sink, Snapshots, Table};
use crate::presets;
use crate::scenario::{
    CircleScenario, ExpmapScenario, IntegratorName, InvolutionScenario, RigidScenario, Scenario, Solver,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Completed,
    Blowup,
    Shock,
    DiffeoLoss,
    SingularInertia,
    ConfigError,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Completed => 0,
            Status::Blowup | Status::Shock | Status::DiffeoLoss => 2,
            Status::ConfigError => 3,
            Status::SingularInertia => 4,
        }
    }

    fn of(e: &Error) -> Self {
        match e {
            Error::SingularInertia { .. } => Status::SingularInertia,
            Error::Shock { .. } => Status::Shock,
            Error::DiffeoLoss { .. } => Status::DiffeoLoss,
            Error::OutOfDomain(inner) => Status::of(inner),
            _ => Status::Blowup,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub status: Status,
    /// Time reached by the integrator; `None` for kinds without a time axis.
    pub final_time: Option<f64>,
    pub steps: usize,
    /// Maximum relative drift of each invariant over the emitted rows.
    pub drifts: BTreeMap<String, f64>,
    /// Other summary numbers (extrema, breaking time, check residuals).
    pub metrics: BTreeMap<String, f64>,
    pub tolerances: BTreeMap<String, f64>,
    pub within_tolerance: BTreeMap<String, bool>,
    /// File names relative to the output directory.
    pub outputs: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl RunReport {
    fn new(status: Status) -> Self {
        Self {
            status,
            final_time: None,
            steps: 0,
            drifts: BTreeMap::new(),
            metrics: BTreeMap::new(),
            tolerances: BTreeMap::new(),
            within_tolerance: BTreeMap::new(),
            outputs: BTreeMap::new(),
            message: None,
        }
    }

    pub fn config_error(message: impl Into<String>) -> Self {
        let mut r = Self::new(Status::ConfigError);
        r.message = Some(message.into());
        r
    }

    fn fail(&mut self, e: &Error) {
        self.status = Status::of(e);
        self.message = Some(e.to_string());
    }

    fn check(&mut self, name: &str, value: f64, tol: f64) {
        self.tolerances.insert(name.into(), tol);
        self.within_tolerance.insert(name.into(), value <= tol);
    }
}

/// Everything a run produces before it is written out.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub report: RunReport,
    pub series: Table,
    pub snapshots: Option<Snapshots>,
}

pub fn run(scenario: &Scenario) -> Outcome {
    match scenario {
        Scenario::RigidBody(s) => run_rigid(s),
        Scenario::Circle(s) => run_circle(s),
        Scenario::Involution(s) => run_involution(s),
        Scenario::Expmap(s) => run_expmap(s),
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    presets_version: u32,
    scenario: Option<&'a Scenario>,
    #[serde(flatten)]
    report: &'a RunReport,
}

pub fn write_manifest(sink: &Sink, scenario: Option<&Scenario>, report: &RunReport) -> Result<(), CliError> {
    let manifest = Manifest {
        presets_version: presets::PRESETS_VERSION,
        scenario,
        report,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    sink.write("manifest.json", &text)?;
    Ok(())
}

/// Runs `scenario` and writes `series.csv`, `snapshots.csv` (when requested)
/// and `manifest.json` into the sink.
pub fn execute(scenario: &Scenario, sink: &Sink) -> Result<RunReport, CliError> {
    let Outcome {
        mut report,
        series,
        snapshots,
    } = run(scenario);
    sink.write("series.csv", &series.to_csv())?;
    report.outputs.insert("series".into(), "series.csv".into());
    if let Some(snap) = snapshots {
        sink.write("snapshots.csv", &snap.to_csv())?;
        report.outputs.insert("snapshots".into(), "snapshots.csv".into());
    }
    write_manifest(sink, Some(scenario), &report)?;
    Ok(report)
}

/// `max_i |x_i - x_0| / |x_0|`, or the absolute drift when `x_0 = 0`.
pub fn relative_drift(values: &[f64]) -> f64 {
    let Some(&x0) = values.first() else { return 0.0 };
    let scale = if x0 == 0.0 { 1.0 } else { x0.abs() };
    values.iter().fold(0.0f64, |m, x| m.max((x - x0).abs() / scale))
}

pub fn column_max(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |m, x| m.max(*x))
}

fn to_dmatrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    DMatrix::from_fn(n, n, |r, c| rows[r][c])
}

fn omega_matrix(n: usize, v: &[f64]) -> Result<SkewMatrix, Error> {
    if n == 3 {
        hat(v)
    } else {
        SkewMatrix::from_coords(n, v)
    }
}

fn run_rigid(s: &RigidScenario) -> Outcome {
    let mut header: Vec<String> = ["t", "K", "spatial_momentum_drift", "orthogonality_error"]
        .map(String::from)
        .to_vec();
    let indices = manakov_indices(s.n);
    header.extend(indices.iter().map(|(k, q)| format!("manakov_k{k}_s{q}")));
    let mut series = Table::new(header);
    let mut report = RunReport::new(Status::Completed);
    report.final_time = Some(0.0);

    let setup = (|| {
        let j = MomentMatrix::new(to_dmatrix(&s.j))?;
        let body = RigidBody::new(j.clone())?;
        let omega = omega_matrix(s.n, &s.omega0)?;
        let schedule = step_schedule(s.t_end, s.dt)?;
        Ok::<_, Error>((j, body, omega, schedule))
    })();
    let (j, body, omega, schedule) = match setup {
        Ok(v) => v,
        Err(e) => {
            report.fail(&e);
            return Outcome {
                report,
                series,
                snapshots: None,
            };
        }
    };
    let method = match s.integrator {
        IntegratorName::Rk4 => Integrator::Rk4,
        IntegratorName::Cayley => Integrator::CayleyLieGroup,
    };

    let mut state = BodyState::at_identity(omega);
    let reference = (|| {
        let m = body.spatial_momentum(&state)?;
        let c = manakov_family(&j, &body.momentum(&state)?)?;
        Ok::<_, Error>((m, c))
    })();
    let (m0, c0) = match reference {
        Ok(v) => v,
        Err(e) => {
            report.fail(&e);
            return Outcome {
                report,
                series,
                snapshots: None,
            };
        }
    };
    let m0_norm = m0.as_matrix().norm();
    let c_scale = c0.iter().fold(0.0f64, |a, c| a.max(c.abs()));
    let c_denom: Vec<f64> = c0
        .iter()
        .map(|c| {
            if c_scale == 0.0 {
                1.0
            } else {
                c.abs().max(1e-12 * c_scale)
            }
        })
        .collect();

    let sample = |state: &BodyState| -> Result<Vec<f64>, Error> {
        let k = body.energy(state)?;
        let m = body.spatial_momentum(state)?;
        let dm = (m.as_matrix() - m0.as_matrix()).norm() / if m0_norm == 0.0 { 1.0 } else { m0_norm };
        let c = manakov_family(&j, &body.momentum(state)?)?;
        let mut row = vec![state.time, k, dm, state.g.orthogonality_error()];
        row.extend(c.iter().zip(&c0).zip(&c_denom).map(|((c, c0), d)| (c - c0).abs() / d));
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                step: 0,
                time: state.time,
            });
        }
        Ok(row)
    };

    match sample(&state) {
        Ok(row) => series.push(row),
        Err(e) => report.fail(&e),
    }
    if report.status == Status::Completed {
        for (i, &h) in schedule.iter().enumerate() {
            let step = i + 1;
            let next = body.step(&state, h, method).map_err(|e| e.at_step(step));
            match next {
                Ok(next) => state = next,
                Err(e) => {
                    report.fail(&e);
                    break;
                }
            }
            report.steps = step;
            if step % s.stride == 0 {
                match sample(&state) {
                    Ok(row) => series.push(row),
                    Err(e) => {
                        report.fail(&e.at_step(step));
                        break;
                    }
                }
            }
        }
    }
    report.final_time = Some(state.time);

    if let Some(k) = series.column("K") {
        report.drifts.insert("energy".into(), relative_drift(&k));
    }
    for (name, key) in [
        ("spatial_momentum_drift", "spatial_momentum"),
        ("orthogonality_error", "orthogonality"),
    ] {
        report
            .drifts
            .insert(key.into(), column_max(&series.column(name).unwrap_or_default()));
    }
    for (k, q) in &indices {
        let name = format!("manakov_k{k}_s{q}");
        let v = column_max(&series.column(&name).unwrap_or_default());
        report.drifts.insert(name, v);
    }
    let drifts = report.drifts.clone();
    for (name, v) in &drifts {
        let tol = match name.as_str() {
            "energy" => s.energy_tol,
            "spatial_momentum" => s.momentum_tol,
            "orthogonality" => s.orthogonality_tol,
            _ => s.manakov_tol,
        };
        report.check(name, *v, tol);
    }
    Outcome {
        report,
        series,
        snapshots: None,
    }
}

pub fn initial_field(s: &CircleScenario) -> Result<PeriodicField, Error> {
    let u = match &s.u0 {
        Some(name) => {
            let f =
                presets::field_preset(name).ok_or_else(|| Error::InvalidArgument(format!("unknown preset {name}")))?;
            PeriodicField::from_fn(s.grid, f)?
        }
        None => PeriodicField::from_modes(
            s.grid,
            s.u0_cos.as_deref().unwrap_or(&[]),
            s.u0_sin.as_deref().unwrap_or(&[]),
        )?,
    };
    if s.amplitude == 1.0 {
        Ok(u)
    } else {
        Ok(u.scale(s.amplitude))
    }
}

fn sup_relative(a: &PeriodicField, b: &PeriodicField) -> f64 {
    let scale = b.max_abs();
    (a - b).max_abs() / if scale == 0.0 { 1.0 } else { scale }
}

/// Step index whose end time is closest to `t`.
fn snapshot_index(t: f64, dt: f64, steps: usize) -> usize {
    ((t / dt).round() as usize).min(steps)
}

fn run_circle(s: &CircleScenario) -> Outcome {
    let header = ["t", "energy", "momentum_drift", "min_phi_x"]
        .map(String::from)
        .to_vec();
    let mut series = Table::new(header);
    let mut report = RunReport::new(Status::Completed);
    report.final_time = Some(0.0);
    let mut snapshots = (!s.snapshot_times.is_empty()).then(|| Snapshots {
        grid: PeriodicField::grid(s.grid),
        rows: Vec::new(),
    });

    let setup = (|| Ok::<_, Error>((initial_field(s)?, step_schedule(s.t_end, s.dt)?)))();
    let (u0, schedule) = match setup {
        Ok(v) => v,
        Err(e) => {
            report.status = Status::ConfigError;
            report.message = Some(e.to_string());
            return Outcome {
                report,
                series,
                snapshots,
            };
        }
    };
    let t_star = if s.k == 0 { breaking_time(&u0) } else { f64::INFINITY };
    if t_star.is_finite() {
        report.metrics.insert("breaking_time".into(), t_star);
    }
    let snap_at: Vec<usize> = s
        .snapshot_times
        .iter()
        .map(|t| snapshot_index(*t, s.dt, schedule.len()))
        .collect();
    let mut take_snapshot = |idx: usize, t: f64, u: &PeriodicField| {
        if let Some(snap) = snapshots.as_mut() {
            for _ in snap_at.iter().filter(|&&i| i == idx) {
                snap.rows.push((t, u.values().to_vec()));
            }
        }
    };

    let result = match s.solver {
        Solver::Spectral => circle_spectral(s, &u0, &schedule, t_star, &mut series, &mut report, &mut take_snapshot),
        Solver::Characteristics => {
            circle_characteristics(s, &u0, &schedule, t_star, &mut series, &mut report, &mut take_snapshot)
        }
    };
    if let Err(e) = result {
        report.fail(&e);
    }

    let energy = series.column("energy").unwrap_or_default();
    report.drifts.insert("energy".into(), relative_drift(&energy));
    report.check("energy", report.drifts["energy"], s.energy_tol);
    if s.solver == Solver::Spectral {
        let m = column_max(&series.column("momentum_drift").unwrap_or_default());
        report.drifts.insert("momentum".into(), m);
        report.check("momentum", m, s.momentum_tol);
        let min = series
            .column("min_phi_x")
            .unwrap_or_default()
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        report.metrics.insert("min_phi_x".into(), min);
    }
    Outcome {
        report,
        series,
        snapshots,
    }
}

fn shock(report: &mut RunReport, t: f64, t_star: f64) {
    report.status = Status::Shock;
    report.message = Some(format!("characteristics cross at t* = {t_star}; stopped at t = {t}"));
}

fn circle_spectral(
    s: &CircleScenario,
    u0: &PeriodicField,
    schedule: &[f64],
    t_star: f64,
    series: &mut Table,
    report: &mut RunReport,
    take_snapshot: &mut dyn FnMut(usize, f64, &PeriodicField),
) -> Result<(), Error> {
    let mut flow = GeodesicFlow::new(u0.clone(), s.k, s.dt)?
        .with_dealias(s.dealias)
        .with_diffeo_eps(s.diffeo_eps);
    let m0 = momentum_k(&flow.state(), u0, s.k)?;
    let row = |flow: &GeodesicFlow| -> Result<Vec<f64>, Error> {
        let m = momentum_k(&flow.state(), flow.u(), s.k)?;
        Ok(vec![
            flow.time(),
            hk_energy(flow.u(), s.k)?,
            sup_relative(&m, &m0),
            flow.min_phi_x(),
        ])
    };
    series.push(row(&flow)?);
    take_snapshot(0, 0.0, u0);
    for (i, &h) in schedule.iter().enumerate() {
        if flow.time() + h >= t_star {
            shock(report, flow.time(), t_star);
            break;
        }
        let stepped = flow.step_by(h);
        report.final_time = Some(flow.time());
        stepped?;
        report.steps = i + 1;
        if report.steps.is_multiple_of(s.stride) {
            series.push(row(&flow)?);
        }
        take_snapshot(report.steps, flow.time(), flow.u());
    }
    report.final_time = Some(flow.time());
    Ok(())
}

fn circle_characteristics(
    s: &CircleScenario,
    u0: &PeriodicField,
    schedule: &[f64],
    t_star: f64,
    series: &mut Table,
    report: &mut RunReport,
    take_snapshot: &mut dyn FnMut(usize, f64, &PeriodicField),
) -> Result<(), Error> {
    series.push(vec![0.0, hk_energy(u0, 0)?, f64::NAN, f64::NAN]);
    take_snapshot(0, 0.0, u0);
    let wanted: Vec<usize> = s
        .snapshot_times
        .iter()
        .map(|t| snapshot_index(*t, s.dt, schedule.len()))
        .collect();
    let mut t = 0.0;
    for (i, &h) in schedule.iter().enumerate() {
        if t + h >= t_star {
            shock(report, t, t_star);
            break;
        }
        t += h;
        let step = i + 1;
        report.steps = step;
        report.final_time = Some(t);
        let sampled = step % s.stride == 0;
        if sampled || wanted.contains(&step) {
            let u = burgers_exact(u0, t)?;
            if sampled {
                series.push(vec![t, hk_energy(&u, 0)?, f64::NAN, f64::NAN]);
            }
            take_snapshot(step, t, &u);
        }
    }
    Ok(())
}

fn run_involution(s: &InvolutionScenario) -> Outcome {
    let mut series = Table::new(vec!["sample".into(), "max_abs_bracket".into()]);
    let mut report = RunReport::new(Status::Completed);
    let result = (|| {
        let spec = AlgebraSpec::so_n(s.n)?;
        let j = MomentMatrix::new(to_dmatrix(&s.j))?;
        let functions: Vec<Box<ScalarField>> = manakov_indices(s.n)
            .into_iter()
            .map(|(k, q)| {
                let (spec, j) = (spec.clone(), j.clone());
                Box::new(move |m: &AlgebraCovector| {
                    spec.covector_to_matrix(m)
                        .and_then(|mm| manakov_coefficients(&j, &mm, k, &default_lambda_samples(k)))
                        .map_or(f64::NAN, |c| c[q])
                }) as Box<ScalarField>
            })
            .collect();
        let refs: Vec<&ScalarField> = functions.iter().map(|f| f.as_ref()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
        let mut worst = 0.0f64;
        for i in 0..s.samples {
            let m = AlgebraCovector::new((0..spec.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect());
            let r = involution_check(&spec, &refs, &[m], s.bracket_tol)?;
            series.push(vec![i as f64, r.max_abs]);
            worst = worst.max(r.max_abs);
        }
        Ok::<_, Error>(worst)
    })();
    match result {
        Ok(worst) => {
            report.metrics.insert("max_bracket".into(), worst);
            report.check("max_bracket", worst, s.bracket_tol);
        }
        Err(e) => report.fail(&e),
    }
    Outcome {
        report,
        series,
        snapshots: None,
    }
}

fn run_expmap(s: &ExpmapScenario) -> Outcome {
    let mut series = Table::new(["mode", "cos_error", "sin_error"].map(String::from).to_vec());
    let mut report = RunReport::new(Status::Completed);
    let result = (|| {
        let exp0 = riemannian_exp(&PeriodicField::zeros(s.grid)?, s.k)?.psi.max_abs();
        let mut worst = 0.0f64;
        for &m in &s.modes {
            let c = PeriodicField::from_fn(s.grid, |x| (m as f64 * x).cos())?;
            let sn = PeriodicField::from_fn(s.grid, |x| (m as f64 * x).sin())?;
            let probes = dexp_at_zero(s.k, &[c.clone(), sn.clone()], s.probe_step)?;
            let (ec, es) = (sup_relative(&probes[0], &c), sup_relative(&probes[1], &sn));
            series.push(vec![m as f64, ec, es]);
            worst = worst.max(ec).max(es);
        }
        Ok::<_, Error>((exp0, worst))
    })();
    match result {
        Ok((exp0, worst)) => {
            report.metrics.insert("exp_zero".into(), exp0);
            report.metrics.insert("dexp_max_error".into(), worst);
            report.check("exp_zero", exp0, 0.0);
            report.check("dexp_max_error", worst, s.dexp_tol);
        }
        Err(e) => report.fail(&e),
    }
    Outcome {
        report,
        series,
        snapshots: None,
    }
}
