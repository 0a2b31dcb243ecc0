//! Synthetic stand-ins for the built-in datasets. They share the built-in
//! schemas so the CLI and report machinery can be exercised without the real
//! files; their values are generated, not the published data.

#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::Path;

use atlm::registry::Builtin;
use atlm::rng::SplitMix64;
use atlm::Kind;
use atlm::Role;

pub fn uniform(rng: &mut SplitMix64) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

pub fn normal(rng: &mut SplitMix64) -> f64 {
    let u1 = uniform(rng).max(f64::MIN_POSITIVE);
    let u2 = uniform(rng);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// CSV text for a built-in schema with `rows` generated rows. Effort is
/// log-linear in the log of every numeric feature plus lognormal noise.
pub fn synthetic_csv(builtin: &str, rows: usize, seed: u64, missing: &[(usize, &str)]) -> String {
    let schema = Builtin::find(builtin).unwrap().schema();
    let mut rng = SplitMix64::new(seed);
    let mut out = String::new();
    let header: Vec<&str> = schema.iter().map(|c| c.name.as_str()).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    let levels = ["embedded", "organic", "semidetached"];
    for row in 0..rows {
        let mut log_effort = 1.0 + 0.3 * normal(&mut rng);
        let mut cells = Vec::new();
        for col in &schema {
            let cell = match (col.kind, col.role) {
                (_, Role::Response) => String::new(),
                (Kind::Categorical, _) => {
                    let l = (rng.next_u64() % 3) as usize;
                    log_effort += [0.4, 0.0, 0.2][l];
                    levels[l].to_string()
                }
                (Kind::Numeric, Role::Ignored) => (row + 1).to_string(),
                (Kind::Numeric, _) if col.name == "Language" => {
                    let l = 1 + rng.next_u64() % 3;
                    log_effort += 0.1 * l as f64;
                    l.to_string()
                }
                (Kind::Numeric, _) => {
                    let v = (0.5 * normal(&mut rng) + 1.5).exp();
                    let v = (v * 100.0).round() / 100.0 + 0.01;
                    log_effort += 0.15 * v.ln();
                    v.to_string()
                }
            };
            cells.push(cell);
        }
        let effort = (log_effort.exp() * 100.0).round() / 10.0 + 0.1;
        for (cell, col) in cells.iter_mut().zip(&schema) {
            if col.role == Role::Response {
                *cell = effort.to_string();
            }
            if missing.iter().any(|&(r, c)| r == row && c == col.name) {
                *cell = "?".to_string();
            }
        }
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

/// Writes stand-ins for all three built-ins with their raw row counts.
pub fn write_synthetic_data_dir(dir: &Path) {
    std::fs::write(dir.join("cocomo81.csv"), synthetic_csv("cocomo81", 63, 11, &[])).unwrap();
    std::fs::write(
        dir.join("desharnais.csv"),
        synthetic_csv(
            "desharnais",
            81,
            12,
            &[(37, "TeamExp"), (43, "TeamExp"), (65, "ManagerExp"), (74, "ManagerExp")],
        ),
    )
    .unwrap();
    std::fs::write(dir.join("maxwell.csv"), synthetic_csv("maxwell", 62, 13, &[])).unwrap();
}
