//! JSON documents for couplings and their canonical forms.
//!
//! Complex entries are `[re, im]` pairs and matrices are arrays of rows.
//! A document without a `"form"` key is a plain `(A, B)` coupling; otherwise
//! `"form"` is one of `st`, `reverse-st`, `pqrs`, `unitary`, `projector`.
//! Permutations are written 1-based. Matrices with zero rows or columns are
//! read against the shape their form implies, so `[]` is always accepted.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::coupling::{
    from_unitary, to_unitary, validate, CouplingError, Tolerances, UnitaryForm, VertexCoupling,
};
use crate::forms::{
    to_pqrs_form, to_projector_form, to_reverse_st_form, to_st_form, FormError, PqrsForm,
    ProjectorForm, ReverseStForm, StForm,
};
use crate::linalg::ComplexMatrix;
use crate::permutation::{InvalidPermutation, Permutation};

pub type JsonMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Debug, thiserror::Error)]
pub enum DocumentError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed document: {0}")]
    Malformed(String),
    #[error("invalid permutation: {0}")]
    Permutation(#[from] InvalidPermutation),
    #[error(transparent)]
    Coupling(#[from] CouplingError),
    #[error(transparent)]
    Form(#[from] FormError),
}

impl DocumentError {
    /// True for errors about the mathematical content rather than the file.
    pub fn is_domain(&self) -> bool {
        matches!(self, Self::Coupling(_) | Self::Form(_))
    }
}

pub fn matrix_to_json(m: &ComplexMatrix) -> JsonMatrix {
    m.to_nested()
        .into_iter()
        .map(|row| row.into_iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

/// Reads `json` as a `rows × cols` matrix.
pub fn matrix_from_json(
    json: &JsonMatrix,
    name: &str,
    rows: usize,
    cols: usize,
) -> Result<ComplexMatrix, DocumentError> {
    let bad = || DocumentError::Malformed(format!("{name} must be {rows}x{cols}"));
    if rows == 0 {
        return if json.is_empty() { Ok(ComplexMatrix::zeros(0, cols)) } else { Err(bad()) };
    }
    if json.len() != rows || json.iter().any(|r| r.len() != cols) {
        return Err(bad());
    }
    let entries: Vec<Complex64> = json.iter().flatten().map(|&[re, im]| Complex64::new(re, im)).collect();
    if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(DocumentError::Malformed(format!("{name} has non-finite entries")));
    }
    ComplexMatrix::from_row_major(rows, cols, entries).map_err(|_| bad())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingDocument {
    pub n: usize,
    #[serde(rename = "A")]
    pub a: JsonMatrix,
    #[serde(rename = "B")]
    pub b: JsonMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    /// Sizes of consecutive edge blocks, used for block aggregates in sweeps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<usize>>,
}

impl CouplingDocument {
    pub fn from_coupling(c: &VertexCoupling) -> Self {
        Self {
            n: c.n(),
            a: matrix_to_json(c.a()),
            b: matrix_to_json(c.b()),
            label: None,
            description: None,
            blocks: None,
        }
    }

    pub fn to_coupling(&self) -> Result<VertexCoupling, DocumentError> {
        let a = matrix_from_json(&self.a, "A", self.n, self.n)?;
        let b = matrix_from_json(&self.b, "B", self.n, self.n)?;
        Ok(validate(a, b, Tolerances::default())?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum FormDocument {
    St {
        n: usize,
        permutation: Vec<usize>,
        r_b: usize,
        #[serde(rename = "S")]
        s: JsonMatrix,
        #[serde(rename = "T")]
        t: JsonMatrix,
    },
    ReverseSt {
        n: usize,
        permutation: Vec<usize>,
        r_a: usize,
        #[serde(rename = "S")]
        s: JsonMatrix,
        #[serde(rename = "T")]
        t: JsonMatrix,
    },
    Pqrs {
        n: usize,
        r_a: usize,
        r_b: usize,
        permutation: Vec<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        blocks: Option<[usize; 3]>,
        #[serde(rename = "P")]
        p: JsonMatrix,
        #[serde(rename = "Q")]
        q: JsonMatrix,
        #[serde(rename = "R")]
        r: JsonMatrix,
        #[serde(rename = "S")]
        s: JsonMatrix,
    },
    Unitary {
        n: usize,
        #[serde(rename = "U")]
        u: JsonMatrix,
    },
    Projector {
        n: usize,
        #[serde(rename = "P")]
        p: JsonMatrix,
        #[serde(rename = "Q")]
        q: JsonMatrix,
        #[serde(rename = "C")]
        c: JsonMatrix,
        #[serde(rename = "Lambda")]
        lambda: JsonMatrix,
    },
}

fn check_rank(what: &str, rank: usize, n: usize) -> Result<(), DocumentError> {
    if rank > n {
        return Err(DocumentError::Malformed(format!("{what}={rank} exceeds n={n}")));
    }
    Ok(())
}

impl FormDocument {
    pub fn from_st(f: &StForm) -> Self {
        Self::St {
            n: f.n(),
            permutation: f.permutation().to_one_based(),
            r_b: f.rank_b(),
            s: matrix_to_json(f.s()),
            t: matrix_to_json(f.t()),
        }
    }

    pub fn from_reverse_st(f: &ReverseStForm) -> Self {
        Self::ReverseSt {
            n: f.n(),
            permutation: f.permutation().to_one_based(),
            r_a: f.rank_a(),
            s: matrix_to_json(f.s()),
            t: matrix_to_json(f.t()),
        }
    }

    pub fn from_pqrs(f: &PqrsForm) -> Self {
        Self::Pqrs {
            n: f.n(),
            r_a: f.rank_a(),
            r_b: f.rank_b(),
            permutation: f.permutation().to_one_based(),
            blocks: Some(f.block_sizes()),
            p: matrix_to_json(f.p()),
            q: matrix_to_json(f.q()),
            r: matrix_to_json(f.r()),
            s: matrix_to_json(f.s()),
        }
    }

    pub fn from_unitary(u: &UnitaryForm) -> Self {
        Self::Unitary { n: u.n(), u: matrix_to_json(u.matrix()) }
    }

    pub fn from_projector(f: &ProjectorForm) -> Self {
        Self::Projector {
            n: f.n(),
            p: matrix_to_json(f.p()),
            q: matrix_to_json(f.q()),
            c: matrix_to_json(f.c()),
            lambda: matrix_to_json(f.lambda()),
        }
    }

    pub fn to_pqrs(&self) -> Result<Option<PqrsForm>, DocumentError> {
        let Self::Pqrs { n, r_a, r_b, permutation, blocks, p, q, r, s } = self else {
            return Ok(None);
        };
        let (n, ra, rb) = (*n, *r_a, *r_b);
        check_rank("r_A", ra, n)?;
        check_rank("r_B", rb, n)?;
        if ra + rb < n {
            return Err(FormError::InvalidRankPair { n, rank_a: ra, rank_b: rb }.into());
        }
        let (m, na, nb) = (ra + rb - n, n - ra, n - rb);
        if let Some(b) = blocks {
            if *b != [m, na, nb] {
                return Err(DocumentError::Malformed(format!(
                    "blocks {b:?} do not match r_A={ra}, r_B={rb}"
                )));
            }
        }
        Ok(Some(PqrsForm::new(
            n,
            ra,
            rb,
            Permutation::from_one_based(permutation)?,
            matrix_from_json(p, "P", m, nb)?,
            matrix_from_json(q, "Q", na, nb)?,
            matrix_from_json(r, "R", na, m)?,
            matrix_from_json(s, "S", m, m)?,
        )?))
    }

    pub fn to_coupling(&self) -> Result<VertexCoupling, DocumentError> {
        match self {
            Self::St { n, permutation, r_b, s, t } => {
                check_rank("r_B", *r_b, *n)?;
                let f = StForm::new(
                    *n,
                    Permutation::from_one_based(permutation)?,
                    matrix_from_json(s, "S", *r_b, *r_b)?,
                    matrix_from_json(t, "T", *r_b, n - r_b)?,
                )?;
                Ok(f.to_coupling()?)
            }
            Self::ReverseSt { n, permutation, r_a, s, t } => {
                check_rank("r_A", *r_a, *n)?;
                let f = ReverseStForm::new(
                    *n,
                    Permutation::from_one_based(permutation)?,
                    matrix_from_json(s, "S", *r_a, *r_a)?,
                    matrix_from_json(t, "T", *r_a, n - r_a)?,
                )?;
                Ok(f.to_coupling()?)
            }
            Self::Pqrs { .. } => {
                let f = self.to_pqrs()?.expect("pqrs variant");
                Ok(f.to_coupling()?)
            }
            Self::Unitary { n, u } => {
                let u = UnitaryForm::new(matrix_from_json(u, "U", *n, *n)?, Tolerances::default().unitary)?;
                Ok(from_unitary(&u)?)
            }
            Self::Projector { n, p, q, c, lambda } => {
                let f = ProjectorForm::new(
                    matrix_from_json(p, "P", *n, *n)?,
                    matrix_from_json(q, "Q", *n, *n)?,
                    matrix_from_json(lambda, "Lambda", *n, *n)?,
                    1e-8,
                )?;
                let given = matrix_from_json(c, "C", *n, *n)?;
                if given.max_distance(f.c()) > 1e-8 {
                    return Err(FormError::ProjectorInvariant("P + Q + C = I violated".into()).into());
                }
                Ok(f.to_coupling()?)
            }
        }
    }
}

/// Any readable document.
#[derive(Debug, Clone, PartialEq)]
pub enum Document {
    Coupling(CouplingDocument),
    Form(FormDocument),
}

impl Document {
    pub fn parse(text: &str) -> Result<Self, DocumentError> {
        let value: Value = serde_json::from_str(text)?;
        if value.get("form").is_some() {
            Ok(Self::Form(serde_json::from_value(value)?))
        } else {
            Ok(Self::Coupling(serde_json::from_value(value)?))
        }
    }

    pub fn to_coupling(&self) -> Result<VertexCoupling, DocumentError> {
        match self {
            Self::Coupling(d) => d.to_coupling(),
            Self::Form(f) => f.to_coupling(),
        }
    }

    /// Block sizes declared by the document, if any.
    pub fn blocks(&self) -> Option<Vec<usize>> {
        match self {
            Self::Coupling(d) => d.blocks.clone(),
            Self::Form(FormDocument::Pqrs { blocks, .. }) => blocks.map(|b| b.to_vec()),
            Self::Form(_) => None,
        }
    }

    pub fn to_json(&self) -> String {
        let text = match self {
            Self::Coupling(d) => serde_json::to_string_pretty(d),
            Self::Form(f) => serde_json::to_string_pretty(f),
        };
        text.expect("documents serialize")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormTarget {
    St,
    ReverseSt,
    Pqrs,
    Unitary,
    Projector,
}

/// `c` rewritten in the target form.
pub fn convert(c: &VertexCoupling, target: FormTarget) -> Result<FormDocument, DocumentError> {
    Ok(match target {
        FormTarget::St => FormDocument::from_st(&to_st_form(c)?),
        FormTarget::ReverseSt => FormDocument::from_reverse_st(&to_reverse_st_form(c)?),
        FormTarget::Pqrs => FormDocument::from_pqrs(&to_pqrs_form(c)?),
        FormTarget::Unitary => FormDocument::from_unitary(&to_unitary(c)?),
        FormTarget::Projector => FormDocument::from_projector(&to_projector_form(c)?),
    })
}
