//! Scenario documents: one flat JSON object per run.

use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::presets;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    RigidBody,
    Circle,
    Involution,
    Expmap,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegratorName {
    #[default]
    Rk4,
    Cayley,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    #[default]
    Spectral,
    Characteristics,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ListOrName {
    List(Vec<f64>),
    Name(String),
}

/// The document as written, before defaults and cross-field checks.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    kind: Kind,
    n: Option<usize>,
    #[serde(rename = "N")]
    grid: Option<usize>,
    #[serde(rename = "J")]
    j: Option<Vec<Vec<f64>>>,
    #[serde(rename = "J_diag")]
    j_diag: Option<ListOrName>,
    atoms: Option<Vec<Vec<f64>>>,
    omega0: Option<ListOrName>,
    integrator: Option<IntegratorName>,
    k: Option<usize>,
    u0: Option<String>,
    u0_cos: Option<Vec<f64>>,
    u0_sin: Option<Vec<f64>>,
    amplitude: Option<f64>,
    solver: Option<Solver>,
    dealias: Option<bool>,
    dt: Option<f64>,
    #[serde(rename = "T")]
    t_end: Option<f64>,
    stride: Option<usize>,
    snapshot_times: Option<Vec<f64>>,
    seed: Option<u64>,
    samples: Option<usize>,
    modes: Option<Vec<usize>>,
    probe_step: Option<f64>,
    diffeo_eps: Option<f64>,
    energy_tol: Option<f64>,
    momentum_tol: Option<f64>,
    manakov_tol: Option<f64>,
    orthogonality_tol: Option<f64>,
    bracket_tol: Option<f64>,
    dexp_tol: Option<f64>,
}

/// Source of the moment matrix, resolved to the full matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RigidScenario {
    pub n: usize,
    #[serde(rename = "J")]
    pub j: Vec<Vec<f64>>,
    /// `so(3)` vector when `n = 3`, otherwise coordinates on the basis
    /// `L(e_i, e_j)`, `i < j`.
    pub omega0: Vec<f64>,
    pub integrator: IntegratorName,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub stride: usize,
    pub seed: u64,
    pub energy_tol: f64,
    pub momentum_tol: f64,
    pub manakov_tol: f64,
    pub orthogonality_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CircleScenario {
    #[serde(rename = "N")]
    pub grid: usize,
    pub k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u0: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u0_cos: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u0_sin: Option<Vec<f64>>,
    pub amplitude: f64,
    pub solver: Solver,
    pub dealias: bool,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub stride: usize,
    pub snapshot_times: Vec<f64>,
    pub diffeo_eps: f64,
    pub energy_tol: f64,
    pub momentum_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvolutionScenario {
    pub n: usize,
    #[serde(rename = "J")]
    pub j: Vec<Vec<f64>>,
    pub samples: usize,
    pub seed: u64,
    pub bracket_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpmapScenario {
    #[serde(rename = "N")]
    pub grid: usize,
    pub k: usize,
    pub modes: Vec<usize>,
    pub probe_step: f64,
    pub dexp_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scenario {
    RigidBody(RigidScenario),
    Circle(CircleScenario),
    Involution(InvolutionScenario),
    Expmap(ExpmapScenario),
}

impl Scenario {
    pub fn kind(&self) -> Kind {
        match self {
            Scenario::RigidBody(_) => Kind::RigidBody,
            Scenario::Circle(_) => Kind::Circle,
            Scenario::Involution(_) => Kind::Involution,
            Scenario::Expmap(_) => Kind::Expmap,
        }
    }
}

/// 1-based line of the first occurrence of `"key"` in the document.
fn line_of(text: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&needle)).map(|i| i + 1)
}

struct Ctx<'a> {
    text: &'a str,
    kind: Kind,
}

impl Ctx<'_> {
    fn err(&self, field: &str, message: impl Into<String>) -> CliError {
        CliError::config(Some(field.to_string()), line_of(self.text, field), message)
    }

    fn reject(&self, field: &str, present: bool) -> Result<(), CliError> {
        if present {
            let kind = serde_json::to_string(&self.kind).unwrap_or_default();
            return Err(self.err(field, format!("not valid for kind {}", kind.trim_matches('"'))));
        }
        Ok(())
    }

    fn positive(&self, field: &str, v: Option<f64>, default: Option<f64>) -> Result<f64, CliError> {
        let v = match (v, default) {
            (Some(v), _) => v,
            (None, Some(d)) => return Ok(d),
            (None, None) => return Err(self.err(field, "required")),
        };
        if !(v > 0.0) || !v.is_finite() {
            return Err(self.err(field, format!("must be a positive finite number, got {v}")));
        }
        Ok(v)
    }

    fn stride(&self, v: Option<usize>) -> Result<usize, CliError> {
        match v {
            Some(0) => Err(self.err("stride", "must be at least 1")),
            Some(s) => Ok(s),
            None => Ok(1),
        }
    }
}

fn diag_matrix(d: &[f64]) -> Vec<Vec<f64>> {
    (0..d.len())
        .map(|i| (0..d.len()).map(|j| if i == j { d[i] } else { 0.0 }).collect())
        .collect()
}

/// Exactly one of `J`, `J_diag`, `atoms`; returns the full matrix.
fn inertia_source(ctx: &Ctx, raw: &RawScenario) -> Result<Vec<Vec<f64>>, CliError> {
    let given: Vec<&str> = [
        ("J", raw.j.is_some()),
        ("J_diag", raw.j_diag.is_some()),
        ("atoms", raw.atoms.is_some()),
    ]
    .iter()
    .filter(|(_, p)| *p)
    .map(|(k, _)| *k)
    .collect();
    match given.len() {
        0 => return Err(ctx.err("J", "one inertia source is required: J, J_diag or atoms")),
        1 => {}
        _ => {
            return Err(ctx.err(
                given[1],
                format!("inertia sources are exclusive, found {}", given.join(" and ")),
            ))
        }
    }
    let j = if let Some(j) = &raw.j {
        let n = j.len();
        if n < 2 || j.iter().any(|row| row.len() != n) {
            return Err(ctx.err("J", "must be a square matrix of size at least 2"));
        }
        j.clone()
    } else if let Some(d) = &raw.j_diag {
        let d = match d {
            ListOrName::List(v) => v.clone(),
            ListOrName::Name(name) => presets::j_preset(name)
                .ok_or_else(|| {
                    ctx.err(
                        "J_diag",
                        format!(
                            "unknown preset `{name}` (known: {})",
                            presets::preset_names(presets::J_PRESETS)
                        ),
                    )
                })?
                .to_vec(),
        };
        if d.len() < 2 {
            return Err(ctx.err("J_diag", "needs at least 2 entries"));
        }
        diag_matrix(&d)
    } else {
        let atoms = raw.atoms.as_ref().expect("checked above");
        let n = atoms.first().map_or(0, |a| a.len().saturating_sub(1));
        if n < 2 || atoms.iter().any(|a| a.len() != n + 1) {
            return Err(ctx.err(
                "atoms",
                "each atom is [mass, x_1, ..., x_n] with n >= 2, all of equal length",
            ));
        }
        let points = atoms.iter().map(|a| (a[0], a[1..].to_vec())).collect();
        let dist =
            lieflow_core::rigid_body::MassDistribution::new(points).map_err(|e| ctx.err("atoms", e.to_string()))?;
        let j = lieflow_core::rigid_body::moment_matrix(&dist);
        let m = j.as_matrix();
        (0..n).map(|r| (0..n).map(|c| m[(r, c)]).collect()).collect()
    };
    if j.iter().flatten().any(|v| !v.is_finite()) {
        return Err(ctx.err(given[0], "entries must be finite"));
    }
    let n = j.len();
    lieflow_core::rigid_body::MomentMatrix::new(nalgebra::DMatrix::from_fn(n, n, |r, c| j[r][c]))
        .map_err(|e| ctx.err(given[0], e.to_string()))?;
    if let Some(n) = raw.n {
        if n != j.len() {
            return Err(ctx.err(
                "n",
                format!("n = {n} disagrees with the inertia source of size {}", j.len()),
            ));
        }
    }
    Ok(j)
}

fn finite_list(ctx: &Ctx, field: &str, v: &[f64]) -> Result<(), CliError> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(ctx.err(field, "entries must be finite"));
    }
    Ok(())
}

fn rigid(ctx: &Ctx, raw: &RawScenario) -> Result<RigidScenario, CliError> {
    for (field, present) in [
        ("N", raw.grid.is_some()),
        ("k", raw.k.is_some()),
        ("u0", raw.u0.is_some()),
        ("u0_cos", raw.u0_cos.is_some()),
        ("u0_sin", raw.u0_sin.is_some()),
        ("amplitude", raw.amplitude.is_some()),
        ("solver", raw.solver.is_some()),
        ("dealias", raw.dealias.is_some()),
        ("snapshot_times", raw.snapshot_times.is_some()),
        ("samples", raw.samples.is_some()),
        ("modes", raw.modes.is_some()),
        ("probe_step", raw.probe_step.is_some()),
        ("diffeo_eps", raw.diffeo_eps.is_some()),
        ("bracket_tol", raw.bracket_tol.is_some()),
        ("dexp_tol", raw.dexp_tol.is_some()),
    ] {
        ctx.reject(field, present)?;
    }
    let j = inertia_source(ctx, raw)?;
    let n = j.len();
    let seed = raw.seed.unwrap_or(0);
    let omega0 = match &raw.omega0 {
        None => return Err(ctx.err("omega0", "required")),
        Some(ListOrName::List(v)) => {
            let want = if n == 3 { 3 } else { n * (n - 1) / 2 };
            if v.len() != want {
                return Err(ctx.err(
                    "omega0",
                    format!("expected {want} entries for n = {n}, found {}", v.len()),
                ));
            }
            finite_list(ctx, "omega0", v)?;
            v.clone()
        }
        Some(ListOrName::Name(name)) => {
            if !presets::is_omega_preset(name) {
                return Err(ctx.err(
                    "omega0",
                    format!(
                        "unknown preset `{name}` (known: {})",
                        presets::preset_names(presets::OMEGA_PRESETS)
                    ),
                ));
            }
            match presets::omega_vector3(name) {
                Some(v) if n == 3 => v.to_vec(),
                Some(_) => return Err(ctx.err("omega0", format!("preset `{name}` needs n = 3"))),
                None => random_unit(seed, if n == 3 { 3 } else { n * (n - 1) / 2 }),
            }
        }
    };
    Ok(RigidScenario {
        n,
        j,
        omega0,
        integrator: raw.integrator.unwrap_or_default(),
        dt: ctx.positive("dt", raw.dt, None)?,
        t_end: ctx.positive("T", raw.t_end, None)?,
        stride: ctx.stride(raw.stride)?,
        seed,
        energy_tol: ctx.positive("energy_tol", raw.energy_tol, Some(1e-7))?,
        momentum_tol: ctx.positive("momentum_tol", raw.momentum_tol, Some(1e-7))?,
        manakov_tol: ctx.positive("manakov_tol", raw.manakov_tol, Some(1e-6))?,
        orthogonality_tol: ctx.positive("orthogonality_tol", raw.orthogonality_tol, Some(1e-10))?,
    })
}

/// Unit vector with uniformly distributed direction, from a fixed seed.
pub fn random_unit(seed: u64, d: usize) -> Vec<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    loop {
        // rejection from the cube keeps the direction uniform
        let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-3 && norm <= 1.0 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn grid_size(ctx: &Ctx, v: Option<usize>, default: usize) -> Result<usize, CliError> {
    let n = v.unwrap_or(default);
    if n < 16 || !n.is_power_of_two() {
        return Err(ctx.err("N", format!("grid size must be a power of two >= 16, got {n}")));
    }
    Ok(n)
}

fn order(ctx: &Ctx, v: Option<usize>) -> Result<usize, CliError> {
    let k = v.unwrap_or(1);
    if k > lieflow_core::circle_diff::MetricOrder::MAX {
        return Err(ctx.err("k", format!("metric order must be in 0..=3, got {k}")));
    }
    Ok(k)
}

fn circle(ctx: &Ctx, raw: &RawScenario) -> Result<CircleScenario, CliError> {
    for (field, present) in [
        ("n", raw.n.is_some()),
        ("J", raw.j.is_some()),
        ("J_diag", raw.j_diag.is_some()),
        ("atoms", raw.atoms.is_some()),
        ("omega0", raw.omega0.is_some()),
        ("integrator", raw.integrator.is_some()),
        ("seed", raw.seed.is_some()),
        ("samples", raw.samples.is_some()),
        ("modes", raw.modes.is_some()),
        ("probe_step", raw.probe_step.is_some()),
        ("manakov_tol", raw.manakov_tol.is_some()),
        ("orthogonality_tol", raw.orthogonality_tol.is_some()),
        ("bracket_tol", raw.bracket_tol.is_some()),
        ("dexp_tol", raw.dexp_tol.is_some()),
    ] {
        ctx.reject(field, present)?;
    }
    let grid = grid_size(ctx, raw.grid, 256)?;
    let k = order(ctx, raw.k)?;
    let fourier = raw.u0_cos.is_some() || raw.u0_sin.is_some();
    match (&raw.u0, fourier) {
        (Some(_), true) => {
            let other = if raw.u0_cos.is_some() { "u0_cos" } else { "u0_sin" };
            return Err(ctx.err(other, "initial-field sources are exclusive: u0 preset or u0_cos/u0_sin"));
        }
        (None, false) => return Err(ctx.err("u0", "one initial-field source is required: u0 or u0_cos/u0_sin")),
        (Some(name), false) if presets::field_preset(name).is_none() => {
            return Err(ctx.err(
                "u0",
                format!(
                    "unknown preset `{name}` (known: {})",
                    presets::preset_names(presets::FIELD_PRESETS)
                ),
            ))
        }
        _ => {}
    }
    for (field, list) in [("u0_cos", &raw.u0_cos), ("u0_sin", &raw.u0_sin)] {
        if let Some(v) = list {
            finite_list(ctx, field, v)?;
            if v.len() > grid / 2 {
                return Err(ctx.err(field, format!("at most N/2 = {} modes, found {}", grid / 2, v.len())));
            }
        }
    }
    let amplitude = raw.amplitude.unwrap_or(1.0);
    if !amplitude.is_finite() {
        return Err(ctx.err("amplitude", "must be finite"));
    }
    let solver = raw.solver.unwrap_or_default();
    if solver == Solver::Characteristics && k != 0 {
        return Err(ctx.err("solver", "the characteristics solver needs k = 0"));
    }
    let t_end = ctx.positive("T", raw.t_end, None)?;
    let snapshot_times = raw.snapshot_times.clone().unwrap_or_default();
    if let Some(bad) = snapshot_times.iter().find(|t| !(**t >= 0.0 && **t <= t_end)) {
        return Err(ctx.err("snapshot_times", format!("times must lie in [0, T], found {bad}")));
    }
    Ok(CircleScenario {
        grid,
        k,
        u0: raw.u0.clone(),
        u0_cos: if fourier {
            Some(raw.u0_cos.clone().unwrap_or_default())
        } else {
            None
        },
        u0_sin: if fourier {
            Some(raw.u0_sin.clone().unwrap_or_default())
        } else {
            None
        },
        amplitude,
        solver,
        dealias: raw.dealias.unwrap_or(false),
        dt: ctx.positive("dt", raw.dt, None)?,
        t_end,
        stride: ctx.stride(raw.stride)?,
        snapshot_times,
        diffeo_eps: ctx.positive(
            "diffeo_eps",
            raw.diffeo_eps,
            Some(lieflow_core::circle_diff::DEFAULT_DIFFEO_EPS),
        )?,
        energy_tol: ctx.positive("energy_tol", raw.energy_tol, Some(1e-6))?,
        momentum_tol: ctx.positive("momentum_tol", raw.momentum_tol, Some(1e-6))?,
    })
}

fn involution(ctx: &Ctx, raw: &RawScenario) -> Result<InvolutionScenario, CliError> {
    for (field, present) in [
        ("N", raw.grid.is_some()),
        ("k", raw.k.is_some()),
        ("u0", raw.u0.is_some()),
        ("u0_cos", raw.u0_cos.is_some()),
        ("u0_sin", raw.u0_sin.is_some()),
        ("amplitude", raw.amplitude.is_some()),
        ("solver", raw.solver.is_some()),
        ("dealias", raw.dealias.is_some()),
        ("omega0", raw.omega0.is_some()),
        ("integrator", raw.integrator.is_some()),
        ("dt", raw.dt.is_some()),
        ("T", raw.t_end.is_some()),
        ("stride", raw.stride.is_some()),
        ("snapshot_times", raw.snapshot_times.is_some()),
        ("modes", raw.modes.is_some()),
        ("probe_step", raw.probe_step.is_some()),
        ("diffeo_eps", raw.diffeo_eps.is_some()),
        ("energy_tol", raw.energy_tol.is_some()),
        ("momentum_tol", raw.momentum_tol.is_some()),
        ("manakov_tol", raw.manakov_tol.is_some()),
        ("orthogonality_tol", raw.orthogonality_tol.is_some()),
        ("dexp_tol", raw.dexp_tol.is_some()),
    ] {
        ctx.reject(field, present)?;
    }
    let j = inertia_source(ctx, raw)?;
    let samples = raw.samples.unwrap_or(10);
    if samples == 0 {
        return Err(ctx.err("samples", "must be at least 1"));
    }
    Ok(InvolutionScenario {
        n: j.len(),
        j,
        samples,
        seed: raw.seed.unwrap_or(0),
        bracket_tol: ctx.positive(
            "bracket_tol",
            raw.bracket_tol,
            Some(lieflow_core::euler_arnold::INVOLUTION_THRESHOLD),
        )?,
    })
}

fn expmap(ctx: &Ctx, raw: &RawScenario) -> Result<ExpmapScenario, CliError> {
    for (field, present) in [
        ("n", raw.n.is_some()),
        ("J", raw.j.is_some()),
        ("J_diag", raw.j_diag.is_some()),
        ("atoms", raw.atoms.is_some()),
        ("omega0", raw.omega0.is_some()),
        ("integrator", raw.integrator.is_some()),
        ("u0", raw.u0.is_some()),
        ("u0_cos", raw.u0_cos.is_some()),
        ("u0_sin", raw.u0_sin.is_some()),
        ("amplitude", raw.amplitude.is_some()),
        ("solver", raw.solver.is_some()),
        ("dealias", raw.dealias.is_some()),
        ("dt", raw.dt.is_some()),
        ("T", raw.t_end.is_some()),
        ("stride", raw.stride.is_some()),
        ("snapshot_times", raw.snapshot_times.is_some()),
        ("seed", raw.seed.is_some()),
        ("samples", raw.samples.is_some()),
        ("diffeo_eps", raw.diffeo_eps.is_some()),
        ("energy_tol", raw.energy_tol.is_some()),
        ("momentum_tol", raw.momentum_tol.is_some()),
        ("manakov_tol", raw.manakov_tol.is_some()),
        ("orthogonality_tol", raw.orthogonality_tol.is_some()),
        ("bracket_tol", raw.bracket_tol.is_some()),
    ] {
        ctx.reject(field, present)?;
    }
    let grid = grid_size(ctx, raw.grid, 64)?;
    let modes = raw.modes.clone().unwrap_or_else(|| vec![1, 2, 3]);
    if modes.is_empty() || modes.iter().any(|&m| m == 0 || m >= grid / 2) {
        return Err(ctx.err("modes", format!("modes must be non-empty and lie in 1..{}", grid / 2)));
    }
    Ok(ExpmapScenario {
        grid,
        k: order(ctx, raw.k)?,
        modes,
        probe_step: ctx.positive("probe_step", raw.probe_step, Some(1e-4))?,
        dexp_tol: ctx.positive("dexp_tol", raw.dexp_tol, Some(1e-5))?,
    })
}

/// Parses and validates a scenario document, applying defaults.
pub fn parse_scenario(text: &str) -> Result<Scenario, CliError> {
    let raw: RawScenario = serde_json::from_str(text).map_err(|e| {
        let msg = e.to_string();
        let field = msg
            .strip_prefix("unknown field `")
            .and_then(|rest| rest.split('`').next())
            .map(str::to_string);
        let line = (e.line() > 0).then_some(e.line());
        CliError::config(field, line, msg)
    })?;
    let ctx = Ctx { text, kind: raw.kind };
    Ok(match raw.kind {
        Kind::RigidBody => Scenario::RigidBody(rigid(&ctx, &raw)?),
        Kind::Circle => Scenario::Circle(circle(&ctx, &raw)?),
        Kind::Involution => Scenario::Involution(involution(&ctx, &raw)?),
        Kind::Expmap => Scenario::Expmap(expmap(&ctx, &raw)?),
    })
}
