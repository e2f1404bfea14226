#![allow(dead_code)]

use quantum_vertex::coupling::VertexCoupling;
use quantum_vertex::random::corpus;
use quantum_vertex::scattering::{bc_residual, SMatrix};
use rand::rngs::StdRng;
use rand::SeedableRng;

pub const BC_TOL: f64 = 1e-9;

/// 100 couplings over every rank pair with n in 1..=5, half of them with
/// isolated Dirichlet/Neumann edges in shuffled positions.
pub fn standard_corpus() -> Vec<VertexCoupling> {
    let mut rng = StdRng::seed_from_u64(20_240_611);
    corpus(100, 5, &mut rng)
}

/// Seven log-spaced momenta in [1e-3, 1e3].
pub fn log_grid() -> Vec<f64> {
    (0..7).map(|i| 10f64.powi(i - 3)).collect()
}

/// Returns `s` after asserting that it satisfies the boundary condition of `c`.
pub fn checked(c: &VertexCoupling, s: SMatrix) -> SMatrix {
    let r = bc_residual(c, &s);
    assert!(r < BC_TOL, "bc_residual {r:e} at k={} for n={}", s.k(), c.n());
    s
}

pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Runs the `qvertex` binary with `args`, feeding `stdin`.
pub fn qvertex(args: &[&str], stdin: &str) -> Output {
    use std::io::Write;
    use std::process::{Command, Stdio};
    let mut child = Command::new(env!("CARGO_BIN_EXE_qvertex"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("qvertex binary runs");
    child
        .stdin
        .take()
        .expect("piped stdin")
        .write_all(stdin.as_bytes())
        .expect("stdin accepts input");
    let out = child.wait_with_output().expect("qvertex exits");
    Output {
        code: out.status.code().expect("exited normally"),
        stdout: String::from_utf8(out.stdout).expect("utf-8 stdout"),
        stderr: String::from_utf8(out.stderr).expect("utf-8 stderr"),
    }
}

/// CSV of the preset's filter coupling swept over `[1e-2, 1e2]` at 41 log points.
pub fn preset_sweep(preset: &str) -> String {
    let doc = qvertex(&["filter-demo", "--preset", preset], "");
    assert_eq!(doc.code, 0, "{}", doc.stderr);
    let sweep = qvertex(&["sweep", "-", "--points", "41"], &doc.stdout);
    assert_eq!(sweep.code, 0, "{}", sweep.stderr);
    sweep.stdout
}

pub fn golden_path(preset: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(format!("{preset}_sweep.csv"))
}

/// Parses a sweep CSV into its header and numeric rows.
pub fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    let header = lines
        .next()
        .expect("header line")
        .split(',')
        .map(str::to_owned)
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().expect("numeric cell")).collect())
        .collect();
    (header, rows)
}
