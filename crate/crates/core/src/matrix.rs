//! Spectral diagnostics and projections for recurrent weight matrices.
//!
//! The reservoir is critical when its recurrent matrix sits exactly on the
//! boundary of the echo-state condition. For normal matrices the necessary
//! bound (spectral radius) and the sufficient bound (largest singular value)
//! coincide, so the projections here keep `W` on one of three normal or
//! unit-radius families:
//!
//! - orthogonal matrices, via the polar factor `U·Vᵀ` of an SVD,
//! - skew-symmetric matrices with unit spectral radius,
//! - general matrices rescaled to unit spectral radius.
//!
//! Eigenvalues are always computed over the complex field; `|λ|` is the
//! complex modulus.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, Schur};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;

/// Singular values below this fraction of `σ_max` count as zero.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Spectral radii below this are treated as nilpotent.
pub const MIN_SPECTRAL_RADIUS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatrixError {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix has zero dimension")]
    Empty,
    #[error("matrix entry ({row}, {col}) is not finite: {value}")]
    NonFinite { row: usize, col: usize, value: f64 },
    #[error("eigenvalue solver did not converge for {n}x{n} matrix (frobenius norm {norm:e})")]
    EigenNoConvergence { n: usize, norm: f64 },
    #[error("SVD did not converge for {n}x{n} matrix (frobenius norm {norm:e})")]
    SvdNoConvergence { n: usize, norm: f64 },
    #[error("matrix is rank deficient: smallest singular value {sigma_min:e} vs largest {sigma_max:e}")]
    RankDeficient { sigma_min: f64, sigma_max: f64 },
    #[error("degenerate skew part: m - mᵀ has spectral radius {radius:e}")]
    DegenerateSkewPart { radius: f64 },
    #[error("spectral radius {radius:e} too small to normalize")]
    NilpotentMatrix { radius: f64 },
    #[error("matrix text parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// A finite, square, dense real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix(DMatrix<f64>);

impl SquareMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self, MatrixError> {
        if m.nrows() != m.ncols() {
            return Err(MatrixError::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(MatrixError::Empty);
        }
        check_finite(&m)?;
        Ok(Self(m))
    }

    pub fn from_row_slice(n: usize, data: &[f64]) -> Result<Self, MatrixError> {
        if data.len() != n * n {
            return Err(MatrixError::NotSquare {
                rows: n,
                cols: data.len().checked_div(n).unwrap_or(0),
            });
        }
        Self::new(DMatrix::from_row_slice(n, n, data))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    /// Multiplies every entry by `c`. Panics in debug builds if the result is non-finite.
    pub fn scaled(&self, c: f64) -> Self {
        let m = &self.0 * c;
        debug_assert!(m.iter().all(|v| v.is_finite()));
        Self(m)
    }

    /// Max-abs-entry distance from the identity of `mᵀm`.
    pub fn orthogonality_defect(&self) -> f64 {
        let n = self.dim();
        max_abs(&(self.0.transpose() * &self.0 - DMatrix::<f64>::identity(n, n)))
    }

    /// Max-abs-entry of `m + mᵀ`.
    pub fn skew_defect(&self) -> f64 {
        max_abs(&(&self.0 + self.0.transpose()))
    }

    pub fn to_text(&self) -> String {
        matrix_to_text(&self.0)
    }
}

impl FromStr for SquareMatrix {
    type Err = MatrixError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let m = parse_matrix_text(s)?;
        Self::new(m)
    }
}

impl fmt::Display for SquareMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Which constraint the trainer re-imposes on `W` after every update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintMode {
    /// Nearest orthogonal matrix (polar factor).
    Orthogonal,
    /// Skew part rescaled to unit spectral radius.
    SkewSymmetricUnitSpectrum,
    /// Unconstrained shape, spectral radius rescaled to one.
    GeneralUnitSpectralRadius,
}

impl ConstraintMode {
    pub const ALL: [ConstraintMode; 3] = [
        ConstraintMode::Orthogonal,
        ConstraintMode::SkewSymmetricUnitSpectrum,
        ConstraintMode::GeneralUnitSpectralRadius,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ConstraintMode::Orthogonal => "orthogonal",
            ConstraintMode::SkewSymmetricUnitSpectrum => "skew-symmetric-unit-spectrum",
            ConstraintMode::GeneralUnitSpectralRadius => "general-unit-spectral-radius",
        }
    }

    /// Maps `m` onto the constraint set.
    pub fn project(self, m: &SquareMatrix) -> Result<SquareMatrix, MatrixError> {
        match self {
            ConstraintMode::Orthogonal => project_orthogonal(m),
            ConstraintMode::SkewSymmetricUnitSpectrum => project_skew_unit(m),
            ConstraintMode::GeneralUnitSpectralRadius => normalize_spectral_radius(m),
        }
    }
}

impl fmt::Display for ConstraintMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn check_finite(m: &DMatrix<f64>) -> Result<(), MatrixError> {
    for (col, column) in m.column_iter().enumerate() {
        for (row, &value) in column.iter().enumerate() {
            if !value.is_finite() {
                return Err(MatrixError::NonFinite { row, col, value });
            }
        }
    }
    Ok(())
}

pub(crate) fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Diagonal similarity scaling by powers of two so that each row and column
/// have comparable off-diagonal mass. Eigenvalues are unchanged.
fn balance(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut a = m.clone();
    let n = a.nrows();
    for _ in 0..100 {
        let mut done = true;
        for i in 0..n {
            let c: f64 = (0..n).filter(|&j| j != i).map(|j| a[(j, i)].abs()).sum();
            let r: f64 = (0..n).filter(|&j| j != i).map(|j| a[(i, j)].abs()).sum();
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let mut f = 1.0;
            let (mut cs, mut rs) = (c, r);
            while cs < rs / 2.0 {
                f *= 2.0;
                cs *= 2.0;
                rs /= 2.0;
            }
            while cs > rs * 2.0 {
                f /= 2.0;
                cs /= 2.0;
                rs *= 2.0;
            }
            if cs + rs < 0.95 * (c + r) {
                done = false;
                a.column_mut(i).scale_mut(f);
                a.row_mut(i).scale_mut(1.0 / f);
            }
        }
        if done {
            break;
        }
    }
    a
}

const SCHUR_TOLERANCES: [f64; 4] = [f64::EPSILON, 16.0 * f64::EPSILON, 256.0 * f64::EPSILON, 4096.0 * f64::EPSILON];

fn max_iterations(n: usize) -> usize {
    1000 * n.max(1)
}

/// Complex moduli of all eigenvalues of `m`.
pub fn eigenvalue_moduli(m: &SquareMatrix) -> Result<Vec<f64>, MatrixError> {
    let n = m.dim();
    // Strongly non-normal inputs can stall the QR iteration; balancing and,
    // failing that, a slightly looser deflation tolerance resolve them.
    let balanced = balance(&m.0);
    let schur = SCHUR_TOLERANCES
        .iter()
        .find_map(|&eps| Schur::try_new(balanced.clone(), eps, max_iterations(n)))
        .ok_or(MatrixError::EigenNoConvergence {
            n,
            norm: m.0.norm(),
        })?;
    Ok(schur.complex_eigenvalues().iter().map(|z| z.norm()).collect())
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(m: &SquareMatrix) -> Result<f64, MatrixError> {
    Ok(eigenvalue_moduli(m)?.into_iter().fold(0.0, f64::max))
}

/// Singular values, largest first.
pub fn singular_values(m: &SquareMatrix) -> Result<Vec<f64>, MatrixError> {
    let n = m.dim();
    let svd = m
        .0
        .clone()
        .try_svd(false, false, f64::EPSILON, max_iterations(n))
        .ok_or(MatrixError::SvdNoConvergence {
            n,
            norm: m.0.norm(),
        })?;
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

pub fn largest_singular_value(m: &SquareMatrix) -> Result<f64, MatrixError> {
    Ok(singular_values(m)?.first().copied().unwrap_or(0.0))
}

/// `‖mᵀm − mmᵀ‖` in the max-abs-entry norm. Zero exactly for normal matrices.
pub fn normality_defect(m: &SquareMatrix) -> f64 {
    let t = m.0.transpose();
    max_abs(&(&t * &m.0 - &m.0 * &t))
}

/// Nearest orthogonal matrix in Frobenius norm: the polar factor `U·Vᵀ`.
///
/// Fails when the input is numerically rank deficient, since the nearest
/// orthogonal matrix is then not unique.
pub fn project_orthogonal(m: &SquareMatrix) -> Result<SquareMatrix, MatrixError> {
    let n = m.dim();
    let svd = m
        .0
        .clone()
        .try_svd(true, true, f64::EPSILON, max_iterations(n))
        .ok_or(MatrixError::SvdNoConvergence {
            n,
            norm: m.0.norm(),
        })?;
    let sigma_max = svd.singular_values.max();
    let sigma_min = svd.singular_values.min();
    if sigma_max <= 0.0 || sigma_min < RANK_TOLERANCE * sigma_max {
        return Err(MatrixError::RankDeficient {
            sigma_min,
            sigma_max,
        });
    }
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => unreachable!("SVD requested with both factors"),
    };
    SquareMatrix::new(u * v_t)
}

/// `(m − mᵀ) / ρ(m − mᵀ)`: skew-symmetric with unit spectral radius.
pub fn project_skew_unit(m: &SquareMatrix) -> Result<SquareMatrix, MatrixError> {
    let skew = SquareMatrix(&m.0 - m.0.transpose());
    let radius = spectral_radius(&skew)?;
    let scale = max_abs(&m.0).max(1.0);
    if radius <= MIN_SPECTRAL_RADIUS * scale {
        return Err(MatrixError::DegenerateSkewPart { radius });
    }
    // Divide then re-symmetrize so the result is skew to the last bit.
    let r = &skew.0 / radius;
    let exact = (&r - r.transpose()) * 0.5;
    SquareMatrix::new(exact)
}

/// `m / ρ(m)`. Exact unit radius only up to the accuracy of the eigen solver.
pub fn normalize_spectral_radius(m: &SquareMatrix) -> Result<SquareMatrix, MatrixError> {
    let radius = spectral_radius(m)?;
    if radius <= MIN_SPECTRAL_RADIUS {
        return Err(MatrixError::NilpotentMatrix { radius });
    }
    Ok(m.scaled(1.0 / radius))
}

/// Haar-distributed orthogonal matrix from a seed.
pub fn random_orthogonal(n: usize, seed: u64) -> SquareMatrix {
    random_orthogonal_with(n, &mut rng::from_seed(seed))
}

/// Orthogonalizes a standard Gaussian matrix by QR, fixing signs so that
/// `R` has a positive diagonal.
pub fn random_orthogonal_with<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SquareMatrix {
    assert!(n >= 1, "random_orthogonal needs n >= 1");
    loop {
        let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
        let qr = g.qr();
        let r = qr.r();
        if (0..n).any(|i| r[(i, i)].abs() < 1e-10) {
            // Numerically singular draw; has probability zero but costs nothing to redo.
            continue;
        }
        let mut q = qr.q();
        for (j, mut col) in q.column_iter_mut().enumerate() {
            if r[(j, j)] < 0.0 {
                col.neg_mut();
            }
        }
        return SquareMatrix(q);
    }
}

/// Renders a matrix in the plain-text exchange format.
///
/// Square matrices get a single `n` header line; rectangular ones get
/// `rows cols`. Entries use Rust's shortest round-trip decimal rendering.
pub fn matrix_to_text(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    if m.nrows() == m.ncols() {
        out.push_str(&format!("{}\n", m.nrows()));
    } else {
        out.push_str(&format!("{} {}\n", m.nrows(), m.ncols()));
    }
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// Inverse of [`matrix_to_text`]. Blank lines and `#` comments are skipped.
pub fn parse_matrix_text(s: &str) -> Result<DMatrix<f64>, MatrixError> {
    let mut lines = s
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hline, header) = lines.next().ok_or(MatrixError::Parse {
        line: 1,
        message: "missing dimension header".into(),
    })?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| {
            t.parse::<usize>().map_err(|e| MatrixError::Parse {
                line: hline,
                message: format!("bad dimension {t:?}: {e}"),
            })
        })
        .collect::<Result<_, _>>()?;
    let (rows, cols) = match dims.as_slice() {
        [n] => (*n, *n),
        [r, c] => (*r, *c),
        _ => {
            return Err(MatrixError::Parse {
                line: hline,
                message: "header must be `n` or `rows cols`".into(),
            })
        }
    };
    if rows == 0 || cols == 0 {
        return Err(MatrixError::Empty);
    }
    let mut data = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for (line, text) in lines {
        if seen == rows {
            return Err(MatrixError::Parse {
                line,
                message: format!("expected {rows} rows, found more"),
            });
        }
        let before = data.len();
        for tok in text.split_whitespace() {
            let v: f64 = tok.parse().map_err(|e| MatrixError::Parse {
                line,
                message: format!("bad entry {tok:?}: {e}"),
            })?;
            data.push(v);
        }
        if data.len() - before != cols {
            return Err(MatrixError::Parse {
                line,
                message: format!("expected {cols} entries, found {}", data.len() - before),
            });
        }
        seen += 1;
    }
    if seen != rows {
        return Err(MatrixError::Parse {
            line: hline + seen + 1,
            message: format!("expected {rows} rows, found {seen}"),
        });
    }
    let m = DMatrix::from_row_slice(rows, cols, &data);
    check_finite(&m)?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn balancing_keeps_the_spectrum() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 1.0, 1.0, 2.0, 1.0, 1.0, 1.0, 3.0]);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&[1e-6, 1.0, 1e6]));
        let inv = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&[1e6, 1.0, 1e-6]));
        let m = &d * &a * &inv;
        assert!(max_abs(&balance(&m)) < max_abs(&m) * 1e-6);
        let sorted = |x: DMatrix<f64>| {
            let mut v = eigenvalue_moduli(&SquareMatrix::new(x).unwrap()).unwrap();
            v.sort_by(f64::total_cmp);
            v
        };
        for (got, want) in sorted(m).iter().zip(sorted(a)) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-9);
        }
    }

    fn rotation(phi: f64) -> SquareMatrix {
        SquareMatrix::from_row_slice(2, &[phi.cos(), -phi.sin(), phi.sin(), phi.cos()]).unwrap()
    }

    fn diag(values: &[f64]) -> SquareMatrix {
        SquareMatrix::new(DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(
            values,
        )))
        .unwrap()
    }

    #[test]
    fn rejects_non_square_and_non_finite() {
        assert!(matches!(
            SquareMatrix::new(DMatrix::zeros(2, 3)),
            Err(MatrixError::NotSquare { rows: 2, cols: 3 })
        ));
        let mut m = DMatrix::zeros(2, 2);
        m[(1, 0)] = f64::NAN;
        assert!(matches!(
            SquareMatrix::new(m),
            Err(MatrixError::NonFinite { row: 1, col: 0, .. })
        ));
    }

    #[test]
    fn spectral_radius_examples() {
        assert_abs_diff_eq!(spectral_radius(&SquareMatrix::identity(4)).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(spectral_radius(&SquareMatrix::zeros(3)).unwrap(), 0.0);
        for phi in [0.1, 1.0, 2.5, std::f64::consts::FRAC_PI_2] {
            assert_abs_diff_eq!(spectral_radius(&rotation(phi)).unwrap(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn largest_singular_value_examples() {
        assert_abs_diff_eq!(largest_singular_value(&diag(&[2.0, 0.5])).unwrap(), 2.0, epsilon = 1e-12);
        let q = random_orthogonal(6, 3);
        assert_abs_diff_eq!(largest_singular_value(&q).unwrap(), 1.0, epsilon = 1e-12);

        // U Σ Vᵀ with known Σ.
        let u = random_orthogonal(5, 10).into_inner();
        let v = random_orthogonal(5, 11).into_inner();
        let sigma = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&[3.0, 1.0, 1.0, 0.5, 0.1]));
        let m = SquareMatrix::new(&u * sigma * v.transpose()).unwrap();
        assert_abs_diff_eq!(largest_singular_value(&m).unwrap(), 3.0, epsilon = 1e-12);
        let s = singular_values(&m).unwrap();
        assert_abs_diff_eq!(s[4], 0.1, epsilon = 1e-12);
    }

    #[test]
    fn normality_defect_examples() {
        let sym = SquareMatrix::from_row_slice(3, &[1.0, 2.0, 3.0, 2.0, -1.0, 0.5, 3.0, 0.5, 4.0]).unwrap();
        assert_eq!(normality_defect(&sym), 0.0);
        assert!(normality_defect(&random_orthogonal(5, 1)) < 1e-12);
        // [[0,1],[0,0]]: WᵀW = diag(0,1), WWᵀ = diag(1,0).
        let jordan = SquareMatrix::from_row_slice(2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(normality_defect(&jordan), 1.0);
    }

    #[test]
    fn project_orthogonal_examples() {
        let id = SquareMatrix::identity(3);
        assert!(max_abs(&(project_orthogonal(&id).unwrap().into_inner() - id.as_matrix())) < 1e-14);

        let p = project_orthogonal(&diag(&[2.0, 0.5])).unwrap();
        assert!(max_abs(&(p.into_inner() - DMatrix::identity(2, 2))) < 1e-14);

        let q = random_orthogonal(7, 42);
        let p = project_orthogonal(&q.scaled(0.7)).unwrap();
        assert!(max_abs(&(p.as_matrix() - q.as_matrix())) < 1e-12);
        assert!(p.orthogonality_defect() <= 1e-10);
    }

    #[test]
    fn project_orthogonal_rejects_rank_deficient() {
        let m = SquareMatrix::from_row_slice(2, &[1.0, 2.0, 2.0, 4.0]).unwrap();
        assert!(matches!(project_orthogonal(&m), Err(MatrixError::RankDeficient { .. })));
        assert!(project_orthogonal(&SquareMatrix::zeros(3)).is_err());
    }

    #[test]
    fn project_skew_unit_examples() {
        // m - mᵀ = [[0,4],[-4,0]] has eigenvalues ±4i.
        let m = SquareMatrix::from_row_slice(2, &[0.0, 2.0, -2.0, 0.0]).unwrap();
        let r = project_skew_unit(&m).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!(max_abs(&(r.as_matrix() - want)) < 1e-14);

        let sym = SquareMatrix::from_row_slice(2, &[1.0, 3.0, 3.0, 1.0]).unwrap();
        assert!(matches!(project_skew_unit(&sym), Err(MatrixError::DegenerateSkewPart { .. })));

        // An already-unit skew matrix is a fixed point: (S - Sᵀ)/ρ(S - Sᵀ) = 2S/2.
        let fixed = project_skew_unit(&r).unwrap();
        assert!(max_abs(&(fixed.as_matrix() - r.as_matrix())) < 1e-14);
    }

    #[test]
    fn normalize_spectral_radius_examples() {
        let n = normalize_spectral_radius(&SquareMatrix::identity(3).scaled(3.0)).unwrap();
        assert!(max_abs(&(n.into_inner() - DMatrix::identity(3, 3))) < 1e-14);

        let q = random_orthogonal(4, 8);
        let n = normalize_spectral_radius(&q).unwrap();
        assert!(max_abs(&(n.as_matrix() - q.as_matrix())) < 1e-12);

        // Eigenvalues of [[a,b],[c,d]]: (tr ± sqrt(tr² - 4 det)) / 2.
        let (a, b, c, d) = (0.5, 0.2, 0.1, 0.4);
        let tr: f64 = a + d;
        let det = a * d - b * c;
        let lambda = (tr + (tr * tr - 4.0 * det).sqrt()) / 2.0;
        let m = SquareMatrix::from_row_slice(2, &[a, b, c, d]).unwrap();
        let n = normalize_spectral_radius(&m).unwrap();
        let want = m.as_matrix() / lambda;
        assert!(max_abs(&(n.as_matrix() - want)) < 1e-14);
        assert_abs_diff_eq!(spectral_radius(&n).unwrap(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn normalize_rejects_nilpotent() {
        let m = SquareMatrix::from_row_slice(2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(normalize_spectral_radius(&m), Err(MatrixError::NilpotentMatrix { .. })));
    }

    #[test]
    fn random_orthogonal_examples() {
        let one = random_orthogonal(1, 5);
        assert_eq!(one.as_matrix()[(0, 0)].abs(), 1.0);
        assert_eq!(random_orthogonal(6, 77), random_orthogonal(6, 77));
        assert_ne!(random_orthogonal(6, 77), random_orthogonal(6, 78));
        let q = random_orthogonal(8, 0);
        assert!(normality_defect(&q) <= 1e-10);
        assert!(q.orthogonality_defect() <= 1e-10);
    }

    #[test]
    fn text_format_round_trips_square_and_rectangular() {
        let q = random_orthogonal(4, 9);
        let back: SquareMatrix = q.to_text().parse().unwrap();
        assert_eq!(back, q);

        let rect = DMatrix::from_row_slice(2, 3, &[0.1, -2.5e-17, 3.0, 1.0 / 3.0, 7.0, -0.0]);
        let text = matrix_to_text(&rect);
        assert!(text.starts_with("2 3\n"));
        assert_eq!(parse_matrix_text(&text).unwrap(), rect);
    }

    #[test]
    fn text_format_reports_bad_lines() {
        let err = parse_matrix_text("2\n1 2\n3 x\n").unwrap_err();
        assert!(matches!(err, MatrixError::Parse { line: 3, .. }), "{err}");
        let err = parse_matrix_text("2\n1 2 3\n3 4\n").unwrap_err();
        assert!(matches!(err, MatrixError::Parse { line: 2, .. }), "{err}");
        assert!(parse_matrix_text("3\n1 2 3\n").is_err());
        assert!(matches!(
            "2\n1 2\n3 4 \n5 6\n".parse::<SquareMatrix>(),
            Err(MatrixError::Parse { line: 4, .. })
        ));
    }
}
