//! Orthonormal basis matrices of the subspace orthogonal to the uniform
//! direction, and the change of variables θ = v·1⃗ + W·u.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use ndarray::{Array1, Array2};

use crate::error::{CoreError, Result};

/// An N×(N−1) matrix whose columns form an orthonormal basis of
/// `{x : 1⃗ᵀx = 0}`, where `1⃗ = (1/√N, …, 1/√N)ᵀ`.
#[derive(Debug, Clone)]
pub struct BasisMatrix {
    n: usize,
    entries: Array2<f64>,
    mode_injective: bool,
}

/// Diagnostics from [`validate_basis`]. Failures are carried, not raised.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ValidationReport {
    /// max |(WᵀW − I)_{ij}|
    pub orthonormality_err: f64,
    /// max |(1⃗ᵀW)_j|
    pub uniform_err: f64,
    /// whether every column assigns pairwise-distinct coefficients to the
    /// N oscillators (see [`BasisMatrix::mode_injective`])
    pub mode_injective: bool,
    /// ‖W‖_∞ = max |W_{jk}|
    pub max_entry: f64,
    /// tolerance the pass/fail verdict was taken against
    pub tol: f64,
}

impl ValidationReport {
    /// True when both orthogonality checks are within tolerance.
    /// Mode injectivity is reported, not required (it is a hypothesis of
    /// the partial-coherence dichotomy, not a defining property of the
    /// basis).
    pub fn orthogonality_ok(&self) -> bool {
        self.orthonormality_err <= self.tol && self.uniform_err <= self.tol
    }
}

/// The coordinates of a phase vector in the `[1⃗ | W]` frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDecomposition {
    /// time-like scalar coordinate along 1⃗
    pub v: f64,
    /// phase-deviation vector of length N−1
    pub u: Array1<f64>,
}

/// Build the Fourier-family basis `W_{jk} = (1/√n)(sin(2πjk/n) + cos(2πjk/n))`
/// for rows j = 1..n and columns k = 1..n−1.
///
/// Column orthonormality and orthogonality to 1⃗ hold exactly by discrete
/// trigonometric sum identities; floating evaluation keeps them below 1e-12.
pub fn build_fourier_basis(n: usize) -> Result<BasisMatrix> {
    if n < 2 {
        return Err(CoreError::InvalidDimension(format!(
            "need n >= 2 oscillators, got {n}"
        )));
    }
    let scale = 1.0 / (n as f64).sqrt();
    let mut entries = Array2::zeros((n, n - 1));
    for j in 1..=n {
        for k in 1..=n - 1 {
            let x = 2.0 * PI * (j as f64) * (k as f64) / n as f64;
            entries[[j - 1, k - 1]] = scale * (x.sin() + x.cos());
        }
    }
    Ok(BasisMatrix::from_entries(entries))
}

impl BasisMatrix {
    /// Wrap an N×(N−1) matrix, recording the mode-injectivity flag.
    /// No orthogonality check is performed here; use [`validate_basis`].
    pub fn from_entries(entries: Array2<f64>) -> Self {
        let n = entries.nrows();
        let mode_injective = columns_injective(&entries);
        Self {
            n,
            entries,
            mode_injective,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of columns, N−1 for a complement basis.
    pub fn k(&self) -> usize {
        self.entries.ncols()
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.entries
    }

    /// Whether every column assigns pairwise-distinct coefficients to the
    /// N oscillators. If two oscillators share the coefficient of every
    /// mode whose rotation rate is nonzero, their output frequencies tie
    /// exactly, so the partial-coherence dichotomy holds only under this
    /// injectivity. The trigonometric family violates it at some sizes
    /// (e.g. n = 4 and n = 8, where cos is sampled symmetrically about a
    /// peak); the flag reports that rather than failing.
    pub fn mode_injective(&self) -> bool {
        self.mode_injective
    }

    /// The normalized uniform vector 1⃗ = (1/√N, …, 1/√N)ᵀ.
    pub fn uniform(&self) -> Array1<f64> {
        Array1::from_elem(self.n, 1.0 / (self.n as f64).sqrt())
    }

    /// Column j as an owned vector.
    pub fn column(&self, j: usize) -> Array1<f64> {
        self.entries.column(j).to_owned()
    }

    /// Write as CSV: header "N,K", then one comma-separated row per line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{},{}", self.n, self.k())?;
        for row in self.entries.rows() {
            let line: Vec<String> = row.iter().map(|x| format!("{x:.17e}")).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    /// Read back a matrix written by [`BasisMatrix::write_csv`].
    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| CoreError::Parse("empty basis CSV".into()))??;
        let dims: Vec<usize> = header
            .split(',')
            .map(|s| s.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| CoreError::Parse(format!("bad header '{header}': {e}")))?;
        if dims.len() != 2 {
            return Err(CoreError::Parse(format!("bad header '{header}'")));
        }
        let (n, k) = (dims[0], dims[1]);
        let mut entries = Array2::zeros((n, k));
        for i in 0..n {
            let line = lines
                .next()
                .ok_or_else(|| CoreError::Parse(format!("expected {n} rows, got {i}")))??;
            let vals: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| CoreError::Parse(format!("row {i}: {e}")))?;
            if vals.len() != k {
                return Err(CoreError::DimensionMismatch {
                    expected: k,
                    got: vals.len(),
                });
            }
            for (j, v) in vals.into_iter().enumerate() {
                entries[[i, j]] = v;
            }
        }
        Ok(Self::from_entries(entries))
    }
}

/// Exact floating comparison after rounding to 1e-10 granularity, so
/// sub-epsilon noise does not fake distinctness.
fn columns_injective(entries: &Array2<f64>) -> bool {
    let n = entries.nrows();
    for col in entries.columns() {
        let mut keys: Vec<i64> = col.iter().map(|x| (x * 1e10).round() as i64).collect();
        keys.sort_unstable();
        for i in 1..n {
            if keys[i] == keys[i - 1] {
                return false;
            }
        }
    }
    true
}

/// Measure how well `w` satisfies the basis invariants.
pub fn validate_basis(w: &BasisMatrix, tol: f64) -> ValidationReport {
    let m = w.matrix();
    let gram = m.t().dot(m);
    let k = w.k();
    let mut orthonormality_err = 0.0f64;
    for i in 0..k {
        for j in 0..k {
            let target = if i == j { 1.0 } else { 0.0 };
            orthonormality_err = orthonormality_err.max((gram[[i, j]] - target).abs());
        }
    }
    let ones = w.uniform();
    let proj = ones.dot(m);
    let uniform_err = proj.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let max_entry = m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    ValidationReport {
        orthonormality_err,
        uniform_err,
        mode_injective: w.mode_injective(),
        max_entry,
        tol,
    }
}

/// v = 1⃗ᵀθ, u = Wᵀθ. Exact inverse of [`compose`] because `[1⃗ | W]`
/// is orthogonal.
pub fn decompose(theta: &Array1<f64>, w: &BasisMatrix) -> Result<PhaseDecomposition> {
    if theta.len() != w.n() {
        return Err(CoreError::DimensionMismatch {
            expected: w.n(),
            got: theta.len(),
        });
    }
    let v = w.uniform().dot(theta);
    let u = w.matrix().t().dot(theta);
    Ok(PhaseDecomposition { v, u })
}

/// θ = v·1⃗ + W·u.
pub fn compose(d: &PhaseDecomposition, w: &BasisMatrix) -> Result<Array1<f64>> {
    if d.u.len() != w.k() {
        return Err(CoreError::DimensionMismatch {
            expected: w.k(),
            got: d.u.len(),
        });
    }
    Ok(w.uniform() * d.v + w.matrix().dot(&d.u))
}

/// Seeded random orthonormal complement of 1⃗: Gaussian columns made
/// orthogonal to 1⃗ and to each other by two-pass Gram–Schmidt. With
/// probability one the result is mode-injective, which makes it the basis
/// of choice for checks that require that hypothesis at sizes where the
/// trigonometric family violates it.
pub fn random_complement_basis(n: usize, seed: u64) -> Result<BasisMatrix> {
    if n < 2 {
        return Err(CoreError::InvalidDimension(format!(
            "need n >= 2 oscillators, got {n}"
        )));
    }
    use rand::Rng;
    for attempt in 0..8u64 {
        let mut rng = crate::rng::stream_rng(seed, attempt);
        let ones = Array1::from_elem(n, 1.0 / (n as f64).sqrt());
        let mut cols: Vec<Array1<f64>> = Vec::with_capacity(n - 1);
        for _ in 0..n - 1 {
            let v: Array1<f64> = (0..n)
                .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
                .collect();
            let mut w = &v - &(&ones * ones.dot(&v));
            for c in &cols {
                let proj = c.dot(&w);
                w = &w - &(c * proj);
            }
            let mut w2 = &w - &(&ones * ones.dot(&w));
            for c in &cols {
                let proj = c.dot(&w2);
                w2 = &w2 - &(c * proj);
            }
            let norm = w2.dot(&w2).sqrt();
            if norm < 1e-8 {
                // near-degenerate draw; restart with the next stream
                cols.clear();
                break;
            }
            cols.push(w2 / norm);
        }
        if cols.len() != n - 1 {
            continue;
        }
        let mut entries = Array2::zeros((n, n - 1));
        for (j, c) in cols.iter().enumerate() {
            for i in 0..n {
                entries[[i, j]] = c[i];
            }
        }
        let w = BasisMatrix::from_entries(entries);
        if w.mode_injective() {
            return Ok(w);
        }
    }
    Err(CoreError::InvalidParameter(format!(
        "could not draw a mode-injective complement basis for n = {n}"
    )))
}

/// Gram–Schmidt complement of 1⃗ from the standard basis. Test utility
/// only; the limit theorems need the explicit Fourier family.
#[doc(hidden)]
pub fn gram_schmidt_complement(n: usize) -> Result<BasisMatrix> {
    if n < 2 {
        return Err(CoreError::InvalidDimension(format!(
            "need n >= 2 oscillators, got {n}"
        )));
    }
    let mut cols: Vec<Array1<f64>> = Vec::with_capacity(n - 1);
    let ones = Array1::from_elem(n, 1.0 / (n as f64).sqrt());
    for i in 0..n - 1 {
        let mut v = Array1::zeros(n);
        v[i] = 1.0;
        let mut w = &v - &(&ones * ones.dot(&v));
        for c in &cols {
            let proj = c.dot(&w);
            w = &w - &(c * proj);
        }
        // second pass keeps orthogonality at 1e-12 scale
        let mut w2 = &w - &(&ones * ones.dot(&w));
        for c in &cols {
            let proj = c.dot(&w2);
            w2 = &w2 - &(c * proj);
        }
        let norm = w2.dot(&w2).sqrt();
        cols.push(w2 / norm);
    }
    let mut entries = Array2::zeros((n, n - 1));
    for (j, c) in cols.iter().enumerate() {
        for i in 0..n {
            entries[[i, j]] = c[i];
        }
    }
    Ok(BasisMatrix::from_entries(entries))
}
