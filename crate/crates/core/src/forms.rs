//! Diagonal and Gram-matrix quadratic forms.
//!
//! A [`DiagonalForm`] is the multiset of coefficients `<a1,...,an>`, kept
//! sorted so that structural equality is multiset equality. A [`GramForm`]
//! is the raw symmetric matrix `M` with `f(x) = x M x^t`; off-diagonal
//! entries therefore contribute twice.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest rank accepted anywhere in the crate.
pub const MAX_RANK: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormError {
    #[error("malformed form literal: {0}")]
    Malformed(String),
    #[error("coefficient {0} is not positive")]
    NonPositiveCoefficient(i64),
    #[error("matrix is not symmetric at ({row}, {col})")]
    Asymmetric { row: usize, col: usize },
    #[error("matrix is not positive definite (leading minor {order} is {minor})")]
    NotPositiveDefinite { order: usize, minor: i128 },
    #[error("rank {0} exceeds the supported maximum of {MAX_RANK}")]
    RankTooLarge(usize),
    #[error("vector has length {got}, form has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// `<a1,...,an>` with `1 <= a1 <= ... <= an`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct DiagonalForm {
    coeffs: Vec<u64>,
}

impl DiagonalForm {
    pub fn new(mut coeffs: Vec<u64>) -> Result<Self, FormError> {
        if coeffs.is_empty() {
            return Err(FormError::Malformed("empty coefficient list".into()));
        }
        if coeffs.len() > MAX_RANK {
            return Err(FormError::RankTooLarge(coeffs.len()));
        }
        if let Some(&c) = coeffs.iter().find(|&&c| c == 0) {
            return Err(FormError::NonPositiveCoefficient(c as i64));
        }
        coeffs.sort_unstable();
        Ok(Self { coeffs })
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn rank(&self) -> usize {
        self.coeffs.len()
    }

    pub fn min(&self) -> u64 {
        self.coeffs[0]
    }

    pub fn max(&self) -> u64 {
        self.coeffs[self.coeffs.len() - 1]
    }

    /// The form with `a` appended, re-sorted.
    pub fn with(&self, a: u64) -> Result<Self, FormError> {
        let mut coeffs = self.coeffs.clone();
        coeffs.push(a);
        Self::new(coeffs)
    }

    /// Every coefficient multiplied by `c`.
    pub fn scaled(&self, c: u64) -> Result<Self, FormError> {
        Self::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn to_gram(&self) -> GramForm {
        let n = self.rank();
        let mut entries = vec![0i64; n * n];
        for (i, &a) in self.coeffs.iter().enumerate() {
            entries[i * n + i] = a as i64;
        }
        GramForm { dim: n, entries }
    }

    pub fn evaluate(&self, x: &[i64]) -> Result<u64, FormError> {
        if x.len() != self.rank() {
            return Err(FormError::DimensionMismatch { expected: self.rank(), got: x.len() });
        }
        Ok(self.coeffs.iter().zip(x).map(|(&a, &xi)| a * (xi.unsigned_abs() * xi.unsigned_abs())).sum())
    }

    /// All forms obtained by deleting a nonempty proper sub-multiset of the
    /// coefficients, ordered by rank and then lexicographically.
    pub fn sub_multisets(&self) -> Vec<DiagonalForm> {
        // distinct values with multiplicities
        let mut distinct: Vec<(u64, usize)> = Vec::new();
        for &c in &self.coeffs {
            match distinct.last_mut() {
                Some((v, m)) if *v == c => *m += 1,
                _ => distinct.push((c, 1)),
            }
        }
        let mut out = Vec::new();
        let mut counts = vec![0usize; distinct.len()];
        loop {
            // odometer over multiplicity vectors
            let mut i = 0;
            while i < counts.len() {
                if counts[i] < distinct[i].1 {
                    counts[i] += 1;
                    break;
                }
                counts[i] = 0;
                i += 1;
            }
            if i == counts.len() {
                break;
            }
            let size: usize = counts.iter().sum();
            if size == 0 || size == self.rank() {
                continue;
            }
            let coeffs: Vec<u64> = distinct
                .iter()
                .zip(&counts)
                .flat_map(|(&(v, _), &k)| std::iter::repeat_n(v, k))
                .collect();
            out.push(DiagonalForm { coeffs });
        }
        out.sort_by(|a, b| a.rank().cmp(&b.rank()).then_with(|| a.coeffs.cmp(&b.coeffs)));
        out
    }

    /// True if `self` is a sub-multiset of `other` (not necessarily proper).
    pub fn is_subform_of(&self, other: &DiagonalForm) -> bool {
        let mut rest = other.coeffs.iter().peekable();
        'outer: for &c in &self.coeffs {
            while let Some(&&o) = rest.peek() {
                rest.next();
                if o == c {
                    continue 'outer;
                }
                if o > c {
                    return false;
                }
            }
            return false;
        }
        true
    }
}

impl TryFrom<Vec<u64>> for DiagonalForm {
    type Error = FormError;

    fn try_from(v: Vec<u64>) -> Result<Self, FormError> {
        DiagonalForm::new(v)
    }
}

impl From<DiagonalForm> for Vec<u64> {
    fn from(f: DiagonalForm) -> Vec<u64> {
        f.coeffs
    }
}

impl fmt::Display for DiagonalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for DiagonalForm {
    type Err = FormError;

    fn from_str(s: &str) -> Result<Self, FormError> {
        match parse_form(s)? {
            Form::Diagonal(d) => Ok(d),
            Form::Gram(g) => g
                .as_diagonal()
                .ok_or_else(|| FormError::Malformed(format!("{s} is not a diagonal form"))),
        }
    }
}

/// Symmetric positive definite integer matrix, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<i64>>", into = "Vec<Vec<i64>>")]
pub struct GramForm {
    dim: usize,
    entries: Vec<i64>,
}

impl GramForm {
    pub fn new(rows: Vec<Vec<i64>>) -> Result<Self, FormError> {
        let dim = rows.len();
        if dim == 0 {
            return Err(FormError::Malformed("empty matrix".into()));
        }
        if dim > MAX_RANK {
            return Err(FormError::RankTooLarge(dim));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != dim) {
            return Err(FormError::Malformed(format!("row of length {} in a {dim}x{dim} matrix", r.len())));
        }
        for i in 0..dim {
            for j in 0..i {
                if rows[i][j] != rows[j][i] {
                    return Err(FormError::Asymmetric { row: i, col: j });
                }
            }
        }
        let entries: Vec<i64> = rows.into_iter().flatten().collect();
        let form = GramForm { dim, entries };
        for order in 1..=dim {
            let minor = form.leading_minor(order);
            if minor <= 0 {
                return Err(FormError::NotPositiveDefinite { order, minor });
            }
        }
        Ok(form)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> i64 {
        self.entries[i * self.dim + j]
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        self.entries.chunks(self.dim).map(<[i64]>::to_vec).collect()
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.dim).all(|i| (0..self.dim).all(|j| i == j || self.entry(i, j) == 0))
    }

    /// The diagonal form with the same matrix, if the matrix is diagonal.
    pub fn as_diagonal(&self) -> Option<DiagonalForm> {
        self.is_diagonal()
            .then(|| DiagonalForm::new((0..self.dim).map(|i| self.entry(i, i) as u64).collect()).ok())
            .flatten()
    }

    pub fn determinant(&self) -> i128 {
        self.leading_minor(self.dim)
    }

    /// Determinant of the leading `order x order` block (Bareiss elimination).
    pub fn leading_minor(&self, order: usize) -> i128 {
        let mut a: Vec<Vec<i128>> =
            (0..order).map(|i| (0..order).map(|j| self.entry(i, j) as i128).collect()).collect();
        let mut sign = 1i128;
        let mut prev = 1i128;
        for k in 0..order {
            if a[k][k] == 0 {
                match (k + 1..order).find(|&r| a[r][k] != 0) {
                    Some(r) => {
                        a.swap(k, r);
                        sign = -sign;
                    }
                    None => return 0,
                }
            }
            for i in k + 1..order {
                for j in k + 1..order {
                    a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
                }
            }
            prev = a[k][k];
        }
        if order == 0 {
            1
        } else {
            sign * a[order - 1][order - 1]
        }
    }

    /// `x M x^t`.
    pub fn evaluate(&self, x: &[i64]) -> Result<u64, FormError> {
        if x.len() != self.dim {
            return Err(FormError::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        let mut total: i128 = 0;
        for i in 0..self.dim {
            let mut row = 0i128;
            for j in 0..self.dim {
                row += self.entry(i, j) as i128 * x[j] as i128;
            }
            total += row * x[i] as i128;
        }
        Ok(total as u64)
    }

    /// `x M y^t`.
    pub fn bilinear(&self, x: &[i64], y: &[i64]) -> i128 {
        let mut total = 0i128;
        for i in 0..self.dim {
            for j in 0..self.dim {
                total += x[i] as i128 * self.entry(i, j) as i128 * y[j] as i128;
            }
        }
        total
    }

    /// Splits the coordinates into those with no off-diagonal coupling
    /// (returned as diagonal coefficients) and the coupled remainder.
    pub(crate) fn split_diagonal_part(&self) -> (Vec<u64>, Option<GramForm>) {
        let n = self.dim;
        let isolated: Vec<bool> = (0..n).map(|i| (0..n).all(|j| j == i || self.entry(i, j) == 0)).collect();
        let diag = (0..n).filter(|&i| isolated[i]).map(|i| self.entry(i, i) as u64).collect();
        let coupled: Vec<usize> = (0..n).filter(|&i| !isolated[i]).collect();
        if coupled.is_empty() {
            return (diag, None);
        }
        let entries = coupled.iter().flat_map(|&i| coupled.iter().map(move |&j| (i, j))).map(|(i, j)| self.entry(i, j)).collect();
        (diag, Some(GramForm { dim: coupled.len(), entries }))
    }
}

impl TryFrom<Vec<Vec<i64>>> for GramForm {
    type Error = FormError;

    fn try_from(rows: Vec<Vec<i64>>) -> Result<Self, FormError> {
        GramForm::new(rows)
    }
}

impl From<GramForm> for Vec<Vec<i64>> {
    fn from(g: GramForm) -> Self {
        g.rows()
    }
}

impl From<&DiagonalForm> for GramForm {
    fn from(d: &DiagonalForm) -> Self {
        d.to_gram()
    }
}

impl fmt::Display for GramForm {
    /// Diagonal matrices print as the coefficient list, others as a matrix literal.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(d) = self.as_diagonal() {
            return d.fmt(f);
        }
        f.write_str("[")?;
        for (i, row) in self.entries.chunks(self.dim).enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str("[")?;
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{v}")?;
            }
            f.write_str("]")?;
        }
        f.write_str("]")
    }
}

impl FromStr for GramForm {
    type Err = FormError;

    fn from_str(s: &str) -> Result<Self, FormError> {
        parse_form(s).map(Form::into_gram)
    }
}

/// Result of [`parse_form`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Form {
    Diagonal(DiagonalForm),
    Gram(GramForm),
}

impl Form {
    pub fn into_gram(self) -> GramForm {
        match self {
            Form::Diagonal(d) => d.to_gram(),
            Form::Gram(g) => g,
        }
    }
}

/// A value of a form together with a vector attaining it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FormValue {
    pub value: u64,
    pub witness: Vec<i64>,
}

/// Parses `"2,3,5"` (optionally wrapped in `<...>`) or a matrix literal
/// such as `"[[1,0,0],[0,10,4],[0,4,10]]"`.
pub fn parse_form(text: &str) -> Result<Form, FormError> {
    let text = text.trim();
    if text.starts_with('[') {
        let rows: Vec<Vec<i64>> =
            serde_json::from_str(text).map_err(|e| FormError::Malformed(format!("{text}: {e}")))?;
        return GramForm::new(rows).map(Form::Gram);
    }
    let inner = text
        .strip_prefix('<')
        .and_then(|t| t.strip_suffix('>'))
        .or_else(|| text.strip_prefix('⟨').and_then(|t| t.strip_suffix('⟩')))
        .unwrap_or(text);
    if inner.trim().is_empty() {
        return Err(FormError::Malformed("empty coefficient list".into()));
    }
    let mut coeffs = Vec::new();
    for part in inner.split(',') {
        let part = part.trim();
        let v: i64 = part.parse().map_err(|_| FormError::Malformed(format!("bad coefficient {part:?}")))?;
        if v <= 0 {
            return Err(FormError::NonPositiveCoefficient(v));
        }
        coeffs.push(v as u64);
    }
    DiagonalForm::new(coeffs).map(Form::Diagonal)
}

/// `x M x^t` for a Gram form.
pub fn evaluate(form: &GramForm, x: &[i64]) -> Result<u64, FormError> {
    form.evaluate(x)
}
