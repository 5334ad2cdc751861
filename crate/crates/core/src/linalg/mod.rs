//! Tolerance-aware dense real linear algebra.
//!
//! All rank decisions are relative: a singular value counts when it exceeds
//! `tol * sigma_max`. Subspaces are carried around as orthonormal column
//! bases ([`SubspaceBasis`]).

mod pencil;
mod qz;

pub use pencil::{ordered_pencil_eigenspace, pencil_is_regular, EigenRegion, PencilEigenspace};

use nalgebra::DMatrix;

use crate::error::{GeoError, Result};

/// Dense real matrix used throughout the crate.
pub type RealMatrix = DMatrix<f64>;

/// Default relative rank tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Orthonormal column basis of a subspace of `R^ambient_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    basis: RealMatrix,
    tol: f64,
}

impl SubspaceBasis {
    /// Wraps a matrix whose columns are already orthonormal.
    pub fn from_orthonormal(basis: RealMatrix, tol: f64) -> Self {
        debug_assert!(orthonormality_defect(&basis) <= 1e-8);
        Self { basis, tol }
    }

    pub fn zero(ambient_dim: usize, tol: f64) -> Self {
        Self {
            basis: RealMatrix::zeros(ambient_dim, 0),
            tol,
        }
    }

    pub fn full(ambient_dim: usize, tol: f64) -> Self {
        Self {
            basis: RealMatrix::identity(ambient_dim, ambient_dim),
            tol,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &RealMatrix {
        &self.basis
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    /// Orthogonal projection of `v` onto the subspace.
    pub fn project(&self, v: &RealMatrix) -> RealMatrix {
        &self.basis * (self.basis.transpose() * v)
    }

    /// Largest column-wise distance from the columns of `m` to this subspace.
    pub fn residual(&self, m: &RealMatrix) -> f64 {
        let r = m - self.project(m);
        r.column_iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Whether every column of `m` lies in the subspace, relative to the
    /// column norms of `m`.
    pub fn contains(&self, m: &RealMatrix, tol: f64) -> bool {
        m.column_iter().all(|c| {
            let c = c.clone_owned();
            let r = &c - &self.basis * (self.basis.transpose() * &c);
            r.norm() <= tol * c.norm().max(1.0)
        })
    }

    /// Orthonormal basis of the orthogonal complement.
    pub fn complement(&self) -> SubspaceBasis {
        let n = self.ambient_dim();
        if self.dim() == 0 {
            return SubspaceBasis::full(n, self.tol);
        }
        nullspace_basis(&self.basis.transpose(), self.tol).expect("orthonormal basis is finite")
    }
}

fn orthonormality_defect(m: &RealMatrix) -> f64 {
    if m.ncols() == 0 {
        return 0.0;
    }
    let g = m.transpose() * m - RealMatrix::identity(m.ncols(), m.ncols());
    g.amax()
}

pub(crate) fn ensure_finite(m: &RealMatrix) -> Result<()> {
    match m.iter().position(|x| !x.is_finite()) {
        None => Ok(()),
        Some(idx) => {
            // nalgebra stores column-major
            let (row, col) = (idx % m.nrows(), idx / m.nrows());
            Err(GeoError::InvalidMatrix(format!(
                "non-finite entry at ({row}, {col})"
            )))
        }
    }
}

fn to_faer(m: &RealMatrix) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, f64>) -> RealMatrix {
    RealMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Full singular value decomposition `M = U diag(s) V^T`, `s` sorted largest first.
#[derive(Debug, Clone)]
pub(crate) struct Svd {
    pub u: RealMatrix,
    pub s: Vec<f64>,
    pub v: RealMatrix,
}

pub(crate) fn full_svd(m: &RealMatrix) -> Result<Svd> {
    ensure_finite(m)?;
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Ok(Svd {
            u: RealMatrix::identity(rows, rows),
            s: Vec::new(),
            v: RealMatrix::identity(cols, cols),
        });
    }
    let svd = to_faer(m)
        .svd()
        .map_err(|e| GeoError::NumericalInconsistency(format!("SVD failed: {e:?}")))?;
    let s: Vec<f64> = svd.S().column_vector().iter().copied().collect();
    debug_assert!(s.windows(2).all(|w| w[0] >= w[1]));
    Ok(Svd {
        u: from_faer(svd.U()),
        s,
        v: from_faer(svd.V()),
    })
}

/// Singular values, largest first. Empty matrices have none.
pub fn singular_values(m: &RealMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    to_faer(m)
        .singular_values()
        .expect("SVD of a finite matrix converges")
}

/// Moore-Penrose pseudo-inverse, dropping singular values `<= tol * sigma_max`.
pub fn pseudo_inverse(m: &RealMatrix, tol: f64) -> Result<RealMatrix> {
    let svd = full_svd(m)?;
    let r = count_above(&svd.s, tol);
    let mut out = RealMatrix::zeros(m.ncols(), m.nrows());
    for k in 0..r {
        out += svd.v.column(k) * svd.u.column(k).transpose() / svd.s[k];
    }
    Ok(out)
}

fn count_above(sv: &[f64], tol: f64) -> usize {
    count_above_scale(sv, tol, 0.0)
}

fn count_above_scale(sv: &[f64], tol: f64, scale: f64) -> usize {
    let smax = sv.iter().copied().fold(scale, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * smax).count()
}

/// Numerical rank: number of singular values above `tol * sigma_max`.
pub fn rank(m: &RealMatrix, tol: f64) -> Result<usize> {
    ensure_finite(m)?;
    Ok(count_above(&singular_values(m), tol))
}

/// Orthonormal basis of the right nullspace of `m`.
pub fn nullspace_basis(m: &RealMatrix, tol: f64) -> Result<SubspaceBasis> {
    ensure_finite(m)?;
    let (rows, cols) = m.shape();
    if cols == 0 {
        return Ok(SubspaceBasis::zero(0, tol));
    }
    if rows == 0 || m.amax() == 0.0 {
        return Ok(SubspaceBasis::full(cols, tol));
    }
    let svd = full_svd(m)?;
    let r = count_above(&svd.s, tol);
    // singular values are sorted, so the trailing right singular vectors span the kernel
    let kernel = svd.v.columns(r, cols - r).into_owned();
    Ok(SubspaceBasis { basis: kernel, tol })
}

/// Orthonormal basis of the column span of `m`.
pub fn image_basis(m: &RealMatrix, tol: f64) -> Result<SubspaceBasis> {
    ensure_finite(m)?;
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 || m.amax() == 0.0 {
        return Ok(SubspaceBasis::zero(rows, tol));
    }
    let svd = full_svd(m)?;
    let r = count_above(&svd.s, tol);
    Ok(SubspaceBasis {
        basis: svd.u.columns(0, r).into_owned(),
        tol,
    })
}

/// Like [`image_basis`], but singular values are compared against
/// `tol * max(sigma_max, scale)`. Use when `m` is a product `X * Q` with
/// orthonormal `Q` and `scale = ||X||`: rounding noise in `Q` then never
/// shows up as a spurious direction.
pub fn image_basis_scaled(m: &RealMatrix, tol: f64, scale: f64) -> Result<SubspaceBasis> {
    ensure_finite(m)?;
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 || m.amax() == 0.0 {
        return Ok(SubspaceBasis::zero(rows, tol));
    }
    let svd = full_svd(m)?;
    let r = count_above_scale(&svd.s, tol, scale);
    Ok(SubspaceBasis {
        basis: svd.u.columns(0, r).into_owned(),
        tol,
    })
}

/// Span equality by mutual projection residuals.
pub fn subspace_equal(u: &SubspaceBasis, v: &SubspaceBasis, tol: f64) -> Result<bool> {
    if u.ambient_dim() != v.ambient_dim() {
        return Err(GeoError::DimensionMismatch {
            expected: u.ambient_dim(),
            found: v.ambient_dim(),
        });
    }
    if u.dim() != v.dim() {
        return Ok(false);
    }
    Ok(v.residual(u.basis()) <= tol && u.residual(v.basis()) <= tol)
}

/// Orthonormal basis of `U + V`.
pub fn subspace_sum(u: &SubspaceBasis, v: &SubspaceBasis, tol: f64) -> Result<SubspaceBasis> {
    if u.ambient_dim() != v.ambient_dim() {
        return Err(GeoError::DimensionMismatch {
            expected: u.ambient_dim(),
            found: v.ambient_dim(),
        });
    }
    image_basis(&hstack(&[u.basis(), v.basis()]), tol)
}

/// Orthonormal basis of `U ∩ V`, via the kernel of `[U  -V]`.
pub fn subspace_intersection(
    u: &SubspaceBasis,
    v: &SubspaceBasis,
    tol: f64,
) -> Result<SubspaceBasis> {
    if u.ambient_dim() != v.ambient_dim() {
        return Err(GeoError::DimensionMismatch {
            expected: u.ambient_dim(),
            found: v.ambient_dim(),
        });
    }
    if u.is_zero() || v.is_zero() {
        return Ok(SubspaceBasis::zero(u.ambient_dim(), tol));
    }
    let stacked = hstack(&[u.basis(), &(-v.basis())]);
    let k = nullspace_basis(&stacked, tol)?;
    let coeffs = k.basis().rows(0, u.dim()).into_owned();
    image_basis(&(u.basis() * coeffs), tol)
}

/// Horizontal concatenation; all blocks must share a row count.
pub fn hstack(blocks: &[&RealMatrix]) -> RealMatrix {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = RealMatrix::zeros(rows, cols);
    let mut c = 0;
    for b in blocks {
        assert_eq!(b.nrows(), rows, "hstack row mismatch");
        out.view_mut((0, c), (rows, b.ncols())).copy_from(*b);
        c += b.ncols();
    }
    out
}

/// Vertical concatenation; all blocks must share a column count.
pub fn vstack(blocks: &[&RealMatrix]) -> RealMatrix {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = RealMatrix::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        assert_eq!(b.ncols(), cols, "vstack column mismatch");
        out.view_mut((r, 0), (b.nrows(), cols)).copy_from(*b);
        r += b.nrows();
    }
    out
}

/// Spectral norm (0 for empty matrices).
pub fn norm2(m: &RealMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}
