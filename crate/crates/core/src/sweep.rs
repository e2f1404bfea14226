//! Momentum grids and tables of `|S_ij(k)|²`.

use std::fmt::Write as _;

use crate::scattering::SMatrix;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SweepError {
    #[error("invalid momentum range: need 0 < k_min < k_max, got [{k_min}, {k_max}]")]
    InvalidRange { k_min: f64, k_max: f64 },
    #[error("a sweep needs at least two points, got {0}")]
    TooFewPoints(usize),
    #[error("momenta must be positive and strictly ascending")]
    NotAscending,
    #[error("row at k={k}: probability row/column sum deviates from 1 by {defect:.3e}")]
    NotDoublyStochastic { k: f64, defect: f64 },
    #[error("blocks must partition 0..{n} into disjoint edge sets")]
    InvalidBlocks { n: usize },
    #[error("S matrix at k={k} has size {found}, expected {expected}")]
    SizeMismatch { k: f64, expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GridScale {
    #[default]
    Log,
    Linear,
}

/// `points` momenta from `k_min` to `k_max`; both endpoints are hit exactly.
pub fn k_grid(k_min: f64, k_max: f64, points: usize, scale: GridScale) -> Result<Vec<f64>, SweepError> {
    if !(k_min.is_finite() && k_max.is_finite() && 0.0 < k_min && k_min < k_max) {
        return Err(SweepError::InvalidRange { k_min, k_max });
    }
    if points < 2 {
        return Err(SweepError::TooFewPoints(points));
    }
    let last = (points - 1) as f64;
    let mut grid: Vec<f64> = match scale {
        GridScale::Log => {
            let (a, b) = (k_min.log10(), k_max.log10());
            (0..points)
                .map(|i| 10f64.powf(a + (b - a) * i as f64 / last))
                .collect()
        }
        GridScale::Linear => (0..points)
            .map(|i| k_min + (k_max - k_min) * i as f64 / last)
            .collect(),
    };
    grid[0] = k_min;
    grid[points - 1] = k_max;
    Ok(grid)
}

fn check_ascending(ks: &[f64]) -> Result<(), SweepError> {
    if ks.iter().any(|&k| !(k > 0.0 && k.is_finite())) || ks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SweepError::NotAscending);
    }
    Ok(())
}

/// Edge groups used for block-pair aggregates. Labels are 1-based; empty
/// groups keep their label but produce no columns.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockLayout {
    groups: Vec<Vec<usize>>,
}

impl BlockLayout {
    pub fn new(n: usize, groups: Vec<Vec<usize>>) -> Result<Self, SweepError> {
        let mut seen = vec![false; n];
        for &i in groups.iter().flatten() {
            if i >= n || seen[i] {
                return Err(SweepError::InvalidBlocks { n });
            }
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(SweepError::InvalidBlocks { n });
        }
        Ok(Self { groups })
    }

    /// Consecutive blocks of the given sizes.
    pub fn contiguous(sizes: &[usize]) -> Self {
        let mut start = 0;
        let groups = sizes
            .iter()
            .map(|&len| {
                let g = (start..start + len).collect();
                start += len;
                g
            })
            .collect();
        Self { groups }
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn n(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    /// Non-empty `(μ, ν)` label pairs in row-major order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let nonempty: Vec<usize> = (0..self.groups.len())
            .filter(|&g| !self.groups[g].is_empty())
            .collect();
        nonempty
            .iter()
            .flat_map(|&a| nonempty.iter().map(move |&b| (a + 1, b + 1)))
            .collect()
    }

    /// Mean of `values[i][j]` over `i ∈ μ`, `j ∈ ν` (1-based labels).
    pub fn mean(&self, values: &[Vec<f64>], mu: usize, nu: usize) -> f64 {
        let (rows, cols) = (&self.groups[mu - 1], &self.groups[nu - 1]);
        let total: f64 = rows
            .iter()
            .flat_map(|&i| cols.iter().map(move |&j| values[i][j]))
            .sum();
        total / (rows.len() * cols.len()) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub k: f64,
    /// `|S_ij|²`, row-major.
    pub probabilities: Vec<f64>,
    /// Block-pair means in the order of [`BlockLayout::pairs`].
    pub aggregates: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    n: usize,
    blocks: Option<BlockLayout>,
    rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Evaluates `smatrix` on every momentum of `ks` (positive, strictly ascending).
    pub fn build<E>(
        n: usize,
        ks: &[f64],
        blocks: Option<BlockLayout>,
        mut smatrix: impl FnMut(f64) -> Result<SMatrix, E>,
    ) -> Result<Self, E>
    where
        E: From<SweepError>,
    {
        check_ascending(ks)?;
        if let Some(b) = &blocks {
            if b.n() != n {
                return Err(SweepError::InvalidBlocks { n }.into());
            }
        }
        let mut rows = Vec::with_capacity(ks.len());
        for &k in ks {
            let s = smatrix(k)?;
            if s.n() != n {
                return Err(SweepError::SizeMismatch { k, expected: n, found: s.n() }.into());
            }
            let probs = s.probabilities();
            let aggregates = blocks
                .as_ref()
                .map(|b| b.pairs().into_iter().map(|(mu, nu)| b.mean(&probs, mu, nu)).collect())
                .unwrap_or_default();
            rows.push(SweepRow {
                k,
                probabilities: probs.into_iter().flatten().collect(),
                aggregates,
            });
        }
        Ok(Self { n, blocks, rows })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> &[SweepRow] {
        &self.rows
    }

    pub fn blocks(&self) -> Option<&BlockLayout> {
        self.blocks.as_ref()
    }

    /// `k, S11, S12, …` (`S1_2` style once `n > 9`), then `B11, B12, …`.
    pub fn header(&self) -> Vec<String> {
        let wide = self.n > 9;
        let mut header = vec!["k".to_string()];
        for i in 1..=self.n {
            for j in 1..=self.n {
                header.push(if wide { format!("S{i}_{j}") } else { format!("S{i}{j}") });
            }
        }
        if let Some(b) = &self.blocks {
            header.extend(b.pairs().into_iter().map(|(mu, nu)| format!("B{mu}{nu}")));
        }
        header
    }

    /// Index of a header column, if present.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header().iter().position(|h| h == name)
    }

    /// Value of `name` in row `row`.
    pub fn value(&self, row: usize, name: &str) -> Option<f64> {
        let col = self.column(name)?;
        let r = &self.rows[row];
        match col {
            0 => Some(r.k),
            c if c <= r.probabilities.len() => Some(r.probabilities[c - 1]),
            c => r.aggregates.get(c - 1 - r.probabilities.len()).copied(),
        }
    }

    /// Row and column sums of every probability matrix equal one within `tol`.
    pub fn check_doubly_stochastic(&self, tol: f64) -> Result<(), SweepError> {
        let n = self.n;
        for row in &self.rows {
            let p = &row.probabilities;
            let mut defect: f64 = 0.0;
            for i in 0..n {
                let row_sum: f64 = (0..n).map(|j| p[i * n + j]).sum();
                let col_sum: f64 = (0..n).map(|j| p[j * n + i]).sum();
                defect = defect.max((row_sum - 1.0).abs()).max((col_sum - 1.0).abs());
            }
            if defect > tol {
                return Err(SweepError::NotDoublyStochastic { k: row.k, defect });
            }
        }
        Ok(())
    }

    /// CSV with shortest round-trip number formatting (exponent notation
    /// below `1e-4`).
    pub fn to_csv(&self) -> String {
        let mut out = self.header().join(",");
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "{:?}", row.k);
            for v in row.probabilities.iter().chain(&row.aggregates) {
                let _ = write!(out, ",{v:?}");
            }
            out.push('\n');
        }
        out
    }
}
