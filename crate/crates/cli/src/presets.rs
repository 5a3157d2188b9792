//! Named initial conditions and inertia spectra. The table is versioned; a
//! preset never changes meaning within a version.

pub const PRESETS_VERSION: u32 = 1;

/// Initial fields `u0(x)` on the circle.
pub const FIELD_PRESETS: &[(&str, &str)] = &[
    ("zero", "0"),
    ("const1", "1"),
    ("cos1", "cos x"),
    ("sin1", "sin x"),
    ("neg_sin", "-sin x"),
    ("cos2", "cos 2x"),
    ("sin2", "sin 2x"),
    ("poisson07", "(0.7 cos x - 0.49) / (1 - 1.4 cos x + 0.49)"),
];

pub fn field_preset(name: &str) -> Option<fn(f64) -> f64> {
    let f: fn(f64) -> f64 = match name {
        "zero" => |_| 0.0,
        "const1" => |_| 1.0,
        "cos1" => f64::cos,
        "sin1" => f64::sin,
        "neg_sin" => |x| -x.sin(),
        "cos2" => |x| (2.0 * x).cos(),
        "sin2" => |x| (2.0 * x).sin(),
        "poisson07" => |x| (0.7 * x.cos() - 0.49) / (1.0 - 1.4 * x.cos() + 0.49),
        _ => return None,
    };
    Some(f)
}

/// Diagonal moment-matrix spectra.
pub const J_PRESETS: &[(&str, &[f64])] = &[
    ("diag123", &[1.0, 2.0, 3.0]),
    ("diag1234", &[1.0, 2.0, 3.0, 4.0]),
    ("spread4", &[0.5, 1.2, 2.1, 3.0]),
    ("diag12345", &[1.0, 2.0, 3.0, 4.0, 5.0]),
];

pub fn j_preset(name: &str) -> Option<&'static [f64]> {
    J_PRESETS.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
}

/// Initial angular velocities. `near_axis1` and `diagonal` are `so(3)`
/// vectors; `random_unit` draws unit coordinates from the scenario seed.
pub const OMEGA_PRESETS: &[(&str, &str)] = &[
    ("near_axis1", "(1, 1e-3, 0), n = 3"),
    ("diagonal", "(1, 1, 1)/sqrt 3, n = 3"),
    ("random_unit", "uniform direction in so(n) coordinates, seeded"),
];

pub fn omega_vector3(name: &str) -> Option<[f64; 3]> {
    match name {
        "near_axis1" => Some([1.0, 1e-3, 0.0]),
        "diagonal" => {
            let c = 1.0 / 3f64.sqrt();
            Some([c, c, c])
        }
        _ => None,
    }
}

pub fn is_omega_preset(name: &str) -> bool {
    OMEGA_PRESETS.iter().any(|(n, _)| *n == name)
}

pub fn preset_names(table: &[(&str, impl Sized)]) -> String {
    table.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", ")
}
