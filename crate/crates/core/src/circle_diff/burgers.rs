use crate::error::{Error, Result};

use super::field::{solve_increasing, PeriodicField};

const OVERSAMPLE: usize = 4;

/// Slope threshold below which a field counts as non-steepening.
fn flat_tolerance(u0: &PeriodicField) -> f64 {
    1e-13 * u0.max_abs().max(1.0)
}

/// Minimum of `u0'`, located on a 4× refined grid and polished by Newton
/// iteration on `u0'' = 0`.
pub fn min_slope(u0: &PeriodicField) -> Result<f64> {
    let fine = u0.resample(OVERSAMPLE * u0.n())?;
    let slope = fine.dx();
    let (j, &m) = slope
        .values()
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty grid");
    let interp = u0.interpolant();
    let (d1, d2, d3) = (interp.derivative(1), interp.derivative(2), interp.derivative(3));
    let h = 2.0 * std::f64::consts::PI / fine.n() as f64;
    let x0 = j as f64 * h;
    let (mut x, mut best) = (x0, d1.eval(x0).min(m));
    for _ in 0..20 {
        let curv = d3.eval(x);
        if curv <= 0.0 {
            break;
        }
        let next = x - d2.eval(x) / curv;
        if (next - x0).abs() > h {
            break;
        }
        let val = d1.eval(next);
        if val > best {
            break;
        }
        let done = (next - x).abs() < 1e-15;
        x = next;
        best = val;
        if done {
            break;
        }
    }
    Ok(best)
}

/// Time at which characteristics of `u_t + 3 u u_x = 0` first cross:
/// `-1 / (3 min u0')`, or `+∞` when `u0` does not steepen.
pub fn breaking_time(u0: &PeriodicField) -> f64 {
    match min_slope(u0) {
        Ok(m) if m < -flat_tolerance(u0) => -1.0 / (3.0 * m),
        _ => f64::INFINITY,
    }
}

/// Solution of `u_t + 3 u u_x = 0` at time `t` by characteristics:
/// `u(x0 + 3 u0(x0) t) = u0(x0)`, with `x0` solved per grid node.
pub fn burgers_exact(u0: &PeriodicField, t: f64) -> Result<PeriodicField> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "time must be finite and non-negative, got {t}"
        )));
    }
    let t_star = breaking_time(u0);
    if t >= t_star {
        return Err(Error::Shock {
            time: t,
            breaking_time: t_star,
        });
    }
    if t == 0.0 {
        return Ok(u0.clone());
    }
    let interp = u0.interpolant();
    let slope = interp.derivative(1);
    let reach = 3.0 * u0.max_abs() * t * 1.01 + 1e-12;
    let values = PeriodicField::grid(u0.n())
        .into_iter()
        .map(|x| {
            let f = |x0: f64| (x0 + 3.0 * interp.eval(x0) * t - x, 1.0 + 3.0 * slope.eval(x0) * t);
            let x0 = solve_increasing(f, x - reach, x + reach);
            interp.eval(x0)
        })
        .collect();
    PeriodicField::new(values)
}
