//! Uniform-block couplings used as spectral branching filters.
//!
//! Every block of the PQRS form is a constant times the all-ones matrix `F`,
//! so scattering between two edge blocks has one amplitude per block pair at
//! each limit. Those amplitudes have closed forms, which are checked here
//! against the matrix limits.

use std::fmt;
use std::fmt::Write as _;

use crate::forms::{FormError, PqrsForm};
use crate::linalg::{re, ComplexMatrix};
use crate::permutation::Permutation;
use crate::scattering::{
    limit_high_k, limit_low_k_general, limit_low_k_unchecked, smatrix_pqrs, SMatrix, ScatteringError,
};
use crate::sweep::{BlockLayout, SweepError, SweepTable};

pub const DEFAULT_THRESHOLD: f64 = 3.0;
/// Agreement required between a closed form and the matrix limit.
pub const CLOSED_FORM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FilterError {
    #[error("invalid filter shape: {0}")]
    InvalidShape(String),
    #[error("parameter {name} must be finite, got {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("S block of size {size} vanishes: s must be nonzero when r_A + r_B > n")]
    SingularSBlock { size: usize },
    #[error("I + alpha F is singular for m={m}, alpha={alpha} (1 + alpha m = 0)")]
    SingularShift { m: usize, alpha: f64 },
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Scattering(#[from] ScatteringError),
    #[error(transparent)]
    Sweep(#[from] SweepError),
}

/// Degree, ranks and the four block constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterParams {
    pub n: usize,
    pub rank_a: usize,
    pub rank_b: usize,
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub s: f64,
}

impl FilterParams {
    /// `n = 5` split 2-2-1 with `p = 2.5, q = 1.2, r = 0, s = 3`.
    pub fn fig1() -> Self {
        Self { n: 5, rank_a: 3, rank_b: 4, p: 2.5, q: 1.2, r: 0.0, s: 3.0 }
    }

    /// `n = 5` split 2-2-1 with `p = 0, q = 1.2, r = 2.1, s = 0.2`.
    pub fn fig2() -> Self {
        Self { n: 5, rank_a: 3, rank_b: 4, p: 0.0, q: 1.2, r: 2.1, s: 0.2 }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "fig1" => Some(Self::fig1()),
            "fig2" => Some(Self::fig2()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), FilterError> {
        let (n, ra, rb) = (self.n, self.rank_a, self.rank_b);
        if n == 0 || ra > n || rb > n || ra + rb < n {
            return Err(FilterError::InvalidShape(format!(
                "need 1 <= n, r_A, r_B <= n and r_A + r_B >= n; got n={n}, r_A={ra}, r_B={rb}"
            )));
        }
        for (name, value) in [("p", self.p), ("q", self.q), ("r", self.r), ("s", self.s)] {
            if !value.is_finite() {
                return Err(FilterError::InvalidParameter { name, value });
            }
        }
        let m = self.overlap();
        if m > 0 && self.s == 0.0 {
            return Err(FilterError::SingularSBlock { size: m });
        }
        Ok(())
    }

    /// `m = r_A + r_B − n`.
    pub fn overlap(&self) -> usize {
        self.rank_a + self.rank_b - self.n
    }

    /// Sizes of blocks {1}, {2}, {3}.
    pub fn block_sizes(&self) -> [usize; 3] {
        [self.overlap(), self.n - self.rank_a, self.n - self.rank_b]
    }

    pub fn layout(&self) -> BlockLayout {
        BlockLayout::contiguous(&self.block_sizes())
    }

    /// `l_p = (n − r_B)(r_A + r_B − n)`.
    pub fn l_p(&self) -> f64 {
        ((self.n - self.rank_b) * self.overlap()) as f64
    }

    /// `l_q = (n − r_B)(n − r_A)`.
    pub fn l_q(&self) -> f64 {
        ((self.n - self.rank_b) * (self.n - self.rank_a)) as f64
    }

    /// `l_r = (n − r_A)(r_A + r_B − n)`.
    pub fn l_r(&self) -> f64 {
        ((self.n - self.rank_a) * self.overlap()) as f64
    }
}

/// PQRS form with `P = pF`, `Q = qF`, `R = rF`, `S = sF` and identity permutation.
///
/// For `m > 1` the block `sF` has rank one. It is accepted: the PQRS
/// scattering formula does not invert `S`, but the validated coupling then
/// has a smaller `rank(A)` than the nominal `r_A`.
pub fn uniform_block_pqrs(fp: &FilterParams) -> Result<PqrsForm, FilterError> {
    fp.validate()?;
    let [m, na, nb] = fp.block_sizes();
    Ok(PqrsForm::new(
        fp.n,
        fp.rank_a,
        fp.rank_b,
        Permutation::identity(fp.n),
        ComplexMatrix::filled(m, nb, re(fp.p)),
        ComplexMatrix::filled(na, nb, re(fp.q)),
        ComplexMatrix::filled(na, m, re(fp.r)),
        ComplexMatrix::filled(m, m, re(fp.s)),
    )?)
}

/// `(I + αF)⁻¹ = I − α/(1 + αm)·F` for the `m × m` all-ones `F`.
pub fn rank_one_inverse(m: usize, alpha: f64) -> Result<ComplexMatrix, FilterError> {
    let denom = 1.0 + alpha * m as f64;
    if denom == 0.0 {
        return Err(FilterError::SingularShift { m, alpha });
    }
    let off = -alpha / denom;
    Ok(ComplexMatrix::from_fn(m, m, |i, j| re(if i == j { 1.0 + off } else { off })))
}

/// The three cross-block pairs carried by the closed forms.
pub const CROSS_PAIRS: [(usize, usize); 3] = [(1, 2), (2, 3), (3, 1)];

/// `|𝒮_{μν}|` per block pair; `None` where a block is empty.
pub type BlockTable = [[Option<f64>; 3]; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Limit {
    High,
    Low,
}

impl fmt::Display for Limit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Limit::High => "k->inf",
            Limit::Low => "k->0",
        })
    }
}

/// A closed form that disagrees with the matrix limit.
#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    pub limit: Limit,
    pub pair: (usize, usize),
    pub closed_form: f64,
    pub matrix: f64,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} |S{{{}}}{{{}}}|: closed form {:.12} vs matrix {:.12} (diff {:.3e})",
            self.limit,
            self.pair.0,
            self.pair.1,
            self.closed_form,
            self.matrix,
            (self.closed_form - self.matrix).abs()
        )
    }
}

/// Block-pair amplitudes at both limits, from the closed forms and from the
/// limit matrices.
#[derive(Debug, Clone)]
pub struct AmplitudeLimits {
    pub params: FilterParams,
    /// Closed forms for `(1,2)`, `(2,3)`, `(3,1)` at `k → ∞`.
    pub closed_high: [Option<f64>; 3],
    /// Closed forms for `(1,2)`, `(2,3)`, `(3,1)` at `k → 0`.
    pub closed_low: [Option<f64>; 3],
    /// Block means of `|S_ij|` of the `k → ∞` limit.
    pub high_k: BlockTable,
    /// Block means of `|S_ij|` of the true `k → 0` limit.
    pub low_k: BlockTable,
    /// Block means of the low-momentum formula `−I + 2Y(Y*Y)⁻¹Y*`. Differs
    /// from `low_k` only inside block {1} and only when `S` is singular.
    pub low_k_formula: BlockTable,
}

fn block_table(s: &SMatrix, layout: &BlockLayout) -> BlockTable {
    let mags: Vec<Vec<f64>> = s
        .probabilities()
        .into_iter()
        .map(|row| row.into_iter().map(f64::sqrt).collect())
        .collect();
    let mut table = [[None; 3]; 3];
    for (mu, nu) in layout.pairs() {
        table[mu - 1][nu - 1] = Some(layout.mean(&mags, mu, nu));
    }
    table
}

/// Largest spread `max − min` of `|S_ij|` inside any off-diagonal block pair.
pub fn uniformity_defect(s: &SMatrix, layout: &BlockLayout) -> f64 {
    let groups = layout.groups();
    let mut worst: f64 = 0.0;
    for (a, ga) in groups.iter().enumerate() {
        for (b, gb) in groups.iter().enumerate() {
            if a == b || ga.is_empty() || gb.is_empty() {
                continue;
            }
            let vals: Vec<f64> = ga
                .iter()
                .flat_map(|&i| gb.iter().map(move |&j| s.get(i, j).norm()))
                .collect();
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().copied().fold(0.0, f64::max);
            worst = worst.max(hi - lo);
        }
    }
    worst
}

fn closed_forms(fp: &FilterParams) -> ([Option<f64>; 3], [Option<f64>; 3]) {
    let [m, na, nb] = fp.block_sizes();
    let present = [m > 0, na > 0, nb > 0];
    let (n, ra, rb) = (fp.n as f64, fp.rank_a as f64, fp.rank_b as f64);
    let (p, q, r) = (fp.p.abs(), fp.q, fp.r.abs());
    let (l_p, l_q, l_r) = (fp.l_p(), fp.l_q(), fp.l_r());

    let shifted = (fp.q - (ra + rb - n) * fp.r * fp.p).abs();
    let d_high = 1.0 + l_p * p * p + l_q * shifted * shifted;
    let high = [
        2.0 * (n - rb) * p * shifted / d_high,
        2.0 * shifted / d_high,
        2.0 * p / d_high,
    ];
    let q = q.abs();
    let d_low = 1.0 + l_r * r * r + l_q * q * q;
    let low = [2.0 * r / d_low, 2.0 * q / d_low, 2.0 * (n - ra) * r * q / d_low];

    let mask = |vals: [f64; 3]| {
        let mut out = [None; 3];
        for (slot, (&(a, b), v)) in out.iter_mut().zip(CROSS_PAIRS.iter().zip(vals)) {
            if present[a - 1] && present[b - 1] {
                *slot = Some(v);
            }
        }
        out
    };
    (mask(high), mask(low))
}

/// Closed-form amplitude limits together with the matrix limits they describe.
pub fn amplitude_limits(fp: &FilterParams) -> Result<AmplitudeLimits, FilterError> {
    let form = uniform_block_pqrs(fp)?;
    let layout = fp.layout();
    let (closed_high, closed_low) = closed_forms(fp);
    Ok(AmplitudeLimits {
        params: *fp,
        closed_high,
        closed_low,
        high_k: block_table(&limit_high_k(&form)?, &layout),
        low_k: block_table(&limit_low_k_general(&form)?, &layout),
        low_k_formula: block_table(&limit_low_k_unchecked(&form)?, &layout),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchingLabel {
    DeltaDeltaDeltaPrime,
    DeltaDeltaPrimeDeltaPrime,
    None,
}

impl BranchingLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::DeltaDeltaDeltaPrime => "delta-delta-deltaprime",
            Self::DeltaDeltaPrimeDeltaPrime => "delta-deltaprime-deltaprime",
            Self::None => "none",
        }
    }
}

impl fmt::Display for BranchingLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl AmplitudeLimits {
    /// Matrix value for a pair at a limit (true limit at `k → 0`).
    pub fn matrix_value(&self, limit: Limit, pair: (usize, usize)) -> Option<f64> {
        let table = match limit {
            Limit::High => &self.high_k,
            Limit::Low => &self.low_k,
        };
        table[pair.0 - 1][pair.1 - 1]
    }

    pub fn closed_value(&self, limit: Limit, pair: (usize, usize)) -> Option<f64> {
        let idx = CROSS_PAIRS.iter().position(|&p| p == pair)?;
        match limit {
            Limit::High => self.closed_high[idx],
            Limit::Low => self.closed_low[idx],
        }
    }

    /// Closed forms deviating from the limit matrices by more than `tol`.
    /// The low-momentum forms are compared with the formula matrix.
    pub fn mismatches(&self, tol: f64) -> Vec<Mismatch> {
        let mut out = Vec::new();
        for (idx, &pair) in CROSS_PAIRS.iter().enumerate() {
            let candidates = [
                (Limit::High, self.closed_high[idx], self.high_k[pair.0 - 1][pair.1 - 1]),
                (Limit::Low, self.closed_low[idx], self.low_k_formula[pair.0 - 1][pair.1 - 1]),
            ];
            for (limit, closed, matrix) in candidates {
                if let (Some(closed_form), Some(matrix)) = (closed, matrix) {
                    if (closed_form - matrix).abs() > tol {
                        out.push(Mismatch { limit, pair, closed_form, matrix });
                    }
                }
            }
        }
        out
    }

    /// δδδ′: at `k → ∞` both `|S31|²` and `|S12|²` exceed `threshold·|S23|²`,
    /// and at `k → 0` `|S23|²` exceeds `threshold` times both. δδ′δ′ is the
    /// same pattern with the limits exchanged. Probabilities, strict inequality.
    pub fn classify(&self, threshold: f64) -> BranchingLabel {
        let probs = |limit| -> Option<[f64; 3]> {
            let mut out = [0.0; 3];
            for (slot, &pair) in out.iter_mut().zip(CROSS_PAIRS.iter()) {
                *slot = self.matrix_value(limit, pair)?.powi(2);
            }
            Some(out)
        };
        let (Some(high), Some(low)) = (probs(Limit::High), probs(Limit::Low)) else {
            return BranchingLabel::None;
        };
        // [S12, S23, S31]
        let spread = |t: [f64; 3]| t[0].min(t[2]) > threshold * t[1];
        let focused = |t: [f64; 3]| t[1] > threshold * t[0].max(t[2]);
        if spread(high) && focused(low) {
            BranchingLabel::DeltaDeltaDeltaPrime
        } else if focused(high) && spread(low) {
            BranchingLabel::DeltaDeltaPrimeDeltaPrime
        } else {
            BranchingLabel::None
        }
    }

    /// Plain-text table of both limits.
    pub fn report(&self) -> String {
        let fp = &self.params;
        let [b1, b2, b3] = fp.block_sizes();
        let mut out = String::new();
        let _ = writeln!(
            out,
            "n={} r_A={} r_B={} blocks={b1}-{b2}-{b3} p={} q={} r={} s={}",
            fp.n, fp.rank_a, fp.rank_b, fp.p, fp.q, fp.r, fp.s
        );
        let _ = writeln!(out, "l_p={} l_q={} l_r={}", fp.l_p(), fp.l_q(), fp.l_r());
        let _ = writeln!(out, "{:<7} {:<7} {:>14} {:>14}", "limit", "pair", "closed-form", "matrix");
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.10}"));
        for limit in [Limit::High, Limit::Low] {
            for mu in 1..=3 {
                for nu in 1..=3 {
                    let pair = (mu, nu);
                    let _ = writeln!(
                        out,
                        "{:<7} {:<7} {:>14} {:>14}",
                        limit.to_string(),
                        format!("{{{mu}}}{{{nu}}}"),
                        fmt(self.closed_value(limit, pair)),
                        fmt(self.matrix_value(limit, pair)),
                    );
                }
            }
        }
        for m in self.mismatches(CLOSED_FORM_TOL) {
            let _ = writeln!(out, "mismatch: {m}");
        }
        out
    }
}

/// Convenience wrapper: limits, then [`AmplitudeLimits::classify`].
pub fn classify_branching(fp: &FilterParams, threshold: f64) -> Result<BranchingLabel, FilterError> {
    Ok(amplitude_limits(fp)?.classify(threshold))
}

/// `|S_ij(k)|²` with block-pair means, evaluated through the PQRS formula.
pub fn probability_sweep(fp: &FilterParams, ks: &[f64]) -> Result<SweepTable, FilterError> {
    let form = uniform_block_pqrs(fp)?;
    SweepTable::build(fp.n, ks, Some(fp.layout()), |k| {
        smatrix_pqrs(&form, k).map_err(FilterError::from)
    })
}
