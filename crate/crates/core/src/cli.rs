//! `qvertex` command-line front end.
//!
//! Exit codes: 0 success, 1 I/O or parse failure, 2 domain error
//! (inadmissible coupling, invalid ranks or parameters).

use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::coupling::VertexCoupling;
use crate::document::{convert, matrix_to_json, CouplingDocument, Document, DocumentError, FormTarget};
use crate::filters::{amplitude_limits, uniform_block_pqrs, FilterParams, DEFAULT_THRESHOLD};
use crate::forms::{
    delta_parameters, parameter_count, subfamily_count, to_pqrs_form, to_projector_form,
    to_reverse_st_form, to_st_form,
};
use crate::scattering::{
    smatrix_direct, smatrix_pqrs, smatrix_projector, smatrix_reverse_st, smatrix_st, SMatrix,
};
use crate::sweep::{k_grid, BlockLayout, GridScale, SweepTable};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Io(_) | Self::Parse(_) => 1,
            Self::Domain(_) => 2,
        }
    }

    fn domain(e: impl std::fmt::Display) -> Self {
        Self::Domain(e.to_string())
    }
}

impl From<DocumentError> for CliError {
    fn from(e: DocumentError) -> Self {
        if e.is_domain() {
            Self::Domain(e.to_string())
        } else {
            Self::Parse(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "qvertex", version, about = "Vertex couplings of quantum graphs: canonical forms and scattering matrices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    St,
    ReverseSt,
    Pqrs,
    Unitary,
    Projector,
}

impl From<Target> for FormTarget {
    fn from(t: Target) -> Self {
        match t {
            Target::St => FormTarget::St,
            Target::ReverseSt => FormTarget::ReverseSt,
            Target::Pqrs => FormTarget::Pqrs,
            Target::Unitary => FormTarget::Unitary,
            Target::Projector => FormTarget::Projector,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Method {
    #[default]
    Direct,
    St,
    ReverseSt,
    Pqrs,
    Projector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Scale {
    #[default]
    Log,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Fig1,
    Fig2,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check admissibility and print the ranks and parameter count.
    Validate {
        /// Coupling or form document; `-` reads standard input.
        input: PathBuf,
    },
    /// Rewrite a coupling in a canonical form.
    Convert {
        input: PathBuf,
        #[arg(long, value_enum)]
        to: Target,
    },
    /// Scattering matrix at one momentum, as JSON.
    Smatrix {
        input: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        k: f64,
        #[arg(long, value_enum, default_value_t = Method::Direct)]
        method: Method,
    },
    /// Table of |S_ij(k)|^2 over a momentum grid, as CSV.
    Sweep {
        input: PathBuf,
        #[arg(long, default_value_t = 1e-2, allow_negative_numbers = true)]
        k_min: f64,
        #[arg(long, default_value_t = 1e2, allow_negative_numbers = true)]
        k_max: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
        #[arg(long, value_enum, default_value_t = Scale::Log)]
        scale: Scale,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Sizes of consecutive edge blocks for block aggregates, e.g. `2,2,1`.
        /// Overrides blocks declared in the document.
        #[arg(long, value_delimiter = ',')]
        blocks: Option<Vec<usize>>,
        #[arg(long, value_enum, default_value_t = Method::Direct)]
        method: Method,
    },
    /// Uniform-block filter coupling with its limit table and branching type.
    ///
    /// The coupling document goes to standard output, the report to standard
    /// error or to `--report`.
    FilterDemo {
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long = "r-a")]
        rank_a: Option<usize>,
        #[arg(long = "r-b")]
        rank_b: Option<usize>,
        #[arg(long, allow_negative_numbers = true)]
        p: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        q: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        r: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        s: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Parameter counts of the subfamily (n, r_A, r_B).
    Params {
        n: usize,
        r_a: usize,
        r_b: usize,
    },
}

fn read_input(path: &Path, stdin: &mut dyn Read) -> Result<Document, CliError> {
    let text = if path.as_os_str() == "-" {
        let mut buf = String::new();
        stdin.read_to_string(&mut buf)?;
        buf
    } else {
        std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?
    };
    Ok(Document::parse(&text)?)
}

fn scattering_at(c: &VertexCoupling, method: Method) -> Result<impl Fn(f64) -> Result<SMatrix, CliError> + '_, CliError> {
    enum Prepared {
        Direct,
        St(crate::forms::StForm),
        ReverseSt(crate::forms::ReverseStForm),
        Pqrs(crate::forms::PqrsForm),
        Projector(crate::forms::ProjectorForm),
    }
    let prepared = match method {
        Method::Direct => Prepared::Direct,
        Method::St => Prepared::St(to_st_form(c).map_err(CliError::domain)?),
        Method::ReverseSt => Prepared::ReverseSt(to_reverse_st_form(c).map_err(CliError::domain)?),
        Method::Pqrs => Prepared::Pqrs(to_pqrs_form(c).map_err(CliError::domain)?),
        Method::Projector => Prepared::Projector(to_projector_form(c).map_err(CliError::domain)?),
    };
    Ok(move |k: f64| {
        match &prepared {
            Prepared::Direct => smatrix_direct(c, k),
            Prepared::St(f) => smatrix_st(f, k),
            Prepared::ReverseSt(f) => smatrix_reverse_st(f, k),
            Prepared::Pqrs(f) => smatrix_pqrs(f, k),
            Prepared::Projector(f) => smatrix_projector(f, k),
        }
        .map_err(CliError::domain)
    })
}

fn filter_params(
    preset: Option<Preset>,
    n: Option<usize>,
    rank_a: Option<usize>,
    rank_b: Option<usize>,
    consts: [Option<f64>; 4],
) -> Result<FilterParams, CliError> {
    let base = match preset {
        Some(Preset::Fig1) => FilterParams::fig1(),
        Some(Preset::Fig2) => FilterParams::fig2(),
        None => {
            let (Some(n), Some(rank_a), Some(rank_b)) = (n, rank_a, rank_b) else {
                return Err(CliError::Parse(
                    "filter-demo needs --preset or all of --n, --r-a, --r-b".into(),
                ));
            };
            FilterParams { n, rank_a, rank_b, p: 0.0, q: 0.0, r: 0.0, s: 1.0 }
        }
    };
    let [p, q, r, s] = consts;
    Ok(FilterParams {
        n: n.unwrap_or(base.n),
        rank_a: rank_a.unwrap_or(base.rank_a),
        rank_b: rank_b.unwrap_or(base.rank_b),
        p: p.unwrap_or(base.p),
        q: q.unwrap_or(base.q),
        r: r.unwrap_or(base.r),
        s: s.unwrap_or(base.s),
    })
}

/// Runs one command, writing results to `out` and diagnostics to `err`.
pub fn execute(
    cli: Cli,
    stdin: &mut dyn Read,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    match cli.command {
        Command::Validate { input } => {
            let doc = read_input(&input, stdin)?;
            let c = doc.to_coupling()?;
            let params = parameter_count(c.n(), c.rank_a(), c.rank_b()).map_err(CliError::domain)?;
            writeln!(out, "valid, n={}, r_A={}, r_B={}, params={params}", c.n(), c.rank_a(), c.rank_b())?;
        }
        Command::Convert { input, to } => {
            let c = read_input(&input, stdin)?.to_coupling()?;
            let doc = convert(&c, to.into())?;
            writeln!(out, "{}", Document::Form(doc).to_json())?;
        }
        Command::Smatrix { input, k, method } => {
            let c = read_input(&input, stdin)?.to_coupling()?;
            let s = scattering_at(&c, method)?(k)?;
            let method = method.to_possible_value().expect("no skipped variants");
            let value = json!({
                "k": k,
                "method": method.get_name(),
                "S": matrix_to_json(s.matrix()),
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&value).expect("json"))?;
        }
        Command::Sweep { input, k_min, k_max, points, scale, out: path, blocks, method } => {
            let doc = read_input(&input, stdin)?;
            let c = doc.to_coupling()?;
            let scale = match scale {
                Scale::Log => GridScale::Log,
                Scale::Linear => GridScale::Linear,
            };
            let ks = k_grid(k_min, k_max, points, scale).map_err(CliError::domain)?;
            let layout = match blocks.or_else(|| doc.blocks()) {
                Some(sizes) => {
                    let layout = BlockLayout::contiguous(&sizes);
                    if layout.n() != c.n() {
                        return Err(CliError::Domain(format!(
                            "block sizes {sizes:?} do not add up to n={}",
                            c.n()
                        )));
                    }
                    Some(layout)
                }
                None => None,
            };
            let eval = scattering_at(&c, method)?;
            let table = SweepTable::build(c.n(), &ks, layout, eval)?;
            table.check_doubly_stochastic(1e-8).map_err(CliError::domain)?;
            let csv = table.to_csv();
            match path {
                Some(p) => std::fs::write(&p, csv).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?,
                None => out.write_all(csv.as_bytes())?,
            }
        }
        Command::FilterDemo { preset, n, rank_a, rank_b, p, q, r, s, threshold, report } => {
            let fp = filter_params(preset, n, rank_a, rank_b, [p, q, r, s])?;
            let form = uniform_block_pqrs(&fp).map_err(CliError::domain)?;
            let c = form.to_coupling().map_err(CliError::domain)?;
            let limits = amplitude_limits(&fp).map_err(CliError::domain)?;
            let label = limits.classify(threshold);

            let mut doc = CouplingDocument::from_coupling(&c);
            doc.label = Some(match preset {
                Some(Preset::Fig1) => "fig1".into(),
                Some(Preset::Fig2) => "fig2".into(),
                None => "uniform-block".into(),
            });
            doc.description = Some(format!(
                "uniform-block PQRS coupling: n={}, r_A={}, r_B={}, p={}, q={}, r={}, s={}",
                fp.n, fp.rank_a, fp.rank_b, fp.p, fp.q, fp.r, fp.s
            ));
            doc.blocks = Some(fp.block_sizes().to_vec());
            writeln!(out, "{}", Document::Coupling(doc).to_json())?;

            let text = format!("{}classification (threshold {threshold}): {label}\n", limits.report());
            match report {
                Some(p) => std::fs::write(&p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?,
                None => err.write_all(text.as_bytes())?,
            }
        }
        Command::Params { n, r_a, r_b } => {
            let params = parameter_count(n, r_a, r_b).map_err(CliError::domain)?;
            let delta = delta_parameters(n, r_a, r_b).map_err(CliError::domain)?;
            writeln!(out, "params={params}, delta={delta}, subfamilies={}", subfamily_count(n))?;
        }
    }
    Ok(())
}

impl From<crate::sweep::SweepError> for CliError {
    fn from(e: crate::sweep::SweepError) -> Self {
        Self::Domain(e.to_string())
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I, stdin: &mut dyn Read, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli, stdin, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str], input: &str) -> (i32, String, String) {
        let mut stdin = input.as_bytes();
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let mut full = vec!["qvertex"];
        full.extend_from_slice(args);
        let code = run(full, &mut stdin, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    fn dirichlet_json() -> String {
        Document::Coupling(CouplingDocument::from_coupling(&VertexCoupling::dirichlet(2))).to_json()
    }

    #[test]
    fn validate_dirichlet() {
        let (code, out, _) = run_capture(&["validate", "-"], &dirichlet_json());
        assert_eq!(code, 0);
        assert_eq!(out.trim(), "valid, n=2, r_A=2, r_B=0, params=0");
    }

    #[test]
    fn params_examples() {
        assert_eq!(run_capture(&["params", "5", "3", "4"], "").1.trim(), "params=20, delta=16, subfamilies=21");
        assert_eq!(run_capture(&["params", "3", "3", "3"], "").1.trim(), "params=9, delta=0, subfamilies=10");
        assert_eq!(run_capture(&["params", "3", "1", "1"], "").0, 2);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run_capture(&["validate", "-"], "not json").0, 1);
        assert_eq!(run_capture(&["validate", "/nonexistent/file.json"], "").0, 1);
        assert_eq!(run_capture(&["bogus"], "").0, 1);
        assert_eq!(run_capture(&["--help"], "").0, 0);
        assert_eq!(run_capture(&["smatrix", "-", "--k", "-1"], &dirichlet_json()).0, 2);
    }

    #[test]
    fn filter_demo_explicit_none() {
        let (code, out, err) = run_capture(
            &["filter-demo", "--n", "5", "--r-a", "3", "--r-b", "4", "--p", "0", "--q", "0", "--r", "0", "--s", "1"],
            "",
        );
        assert_eq!(code, 0, "{err}");
        assert!(err.contains("classification (threshold 3): none"), "{err}");
        assert!(Document::parse(&out).is_ok());
    }
}
