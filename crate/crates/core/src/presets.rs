//! Built-in reference shape, frameworks and scenario files.

/// Eight-agent hexagonal reference shape, unit grid spacing, centered.
pub const PAPER8_POSITIONS: [[f64; 2]; 8] = [
    [-1.0, 1.0],
    [0.0, 1.0],
    [1.0, 1.0],
    [2.0, 0.0],
    [1.0, -1.0],
    [0.0, -1.0],
    [-1.0, -1.0],
    [-2.0, 0.0],
];

/// The 15-edge list as published for the eight-agent shape (1-based).
///
/// With these positions the stress space is two-dimensional and contains no
/// positive semidefinite member, so this framework does not certify.
pub const PRINTED_EDGES: &[(usize, usize)] = &[
    (1, 2),
    (1, 3),
    (1, 4),
    (1, 5),
    (2, 4),
    (2, 7),
    (3, 5),
    (3, 6),
    (4, 5),
    (4, 6),
    (5, 7),
    (6, 8),
    (7, 8),
    (4, 8),
    (5, 8),
];

/// Printed edges plus the outline edges (1,8) and (3,4), which mirror (7,8)
/// and (4,5). This is the framework the figure presets run on.
pub const PAPER8_EDGES: &[(usize, usize)] = &[
    (1, 2),
    (1, 3),
    (1, 4),
    (1, 5),
    (2, 4),
    (2, 7),
    (3, 5),
    (3, 6),
    (4, 5),
    (4, 6),
    (5, 7),
    (6, 8),
    (7, 8),
    (4, 8),
    (5, 8),
    (1, 8),
    (3, 4),
];

/// Named scenario files shipped with the binary.
pub const SCENARIOS: &[(&str, &str)] = &[
    ("fig3", include_str!("../scenarios/fig3.scenario")),
    ("fig4", include_str!("../scenarios/fig4.scenario")),
    ("fig5", include_str!("../scenarios/fig5.scenario")),
    ("fig6", include_str!("../scenarios/fig6.scenario")),
];

pub fn scenario_text(name: &str) -> Option<&'static str> {
    SCENARIOS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

/// Positions and edges of a named shape preset.
pub fn shape_preset(name: &str) -> Option<(Vec<Vec<f64>>, &'static [(usize, usize)])> {
    match name {
        "paper8" => Some((PAPER8_POSITIONS.iter().map(|p| p.to_vec()).collect(), PAPER8_EDGES)),
        "paper8-printed" => {
            Some((PAPER8_POSITIONS.iter().map(|p| p.to_vec()).collect(), PRINTED_EDGES))
        }
        _ => None,
    }
}

pub const SHAPE_PRESETS: &[&str] = &["paper8", "paper8-printed"];
