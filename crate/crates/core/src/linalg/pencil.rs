use num_complex::Complex64;
use serde::Serialize;

use super::qz::FiniteSchur;
use super::{ensure_finite, norm2, rank, RealMatrix};
use crate::error::{GeoError, Result};

/// Which finite generalized eigenvalues to collect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EigenRegion {
    AllFinite,
    OpenLeftHalfPlane,
}

/// Basis `V = [V1; V2]` of a deflating subspace of `s*U1 - U2` with
/// `U2 V = U1 V J`. `V` has orthonormal columns.
#[derive(Debug, Clone)]
pub struct PencilEigenspace {
    pub v1: RealMatrix,
    pub v2: RealMatrix,
    pub j: RealMatrix,
    pub eigenvalues: Vec<Complex64>,
}

impl PencilEigenspace {
    pub fn dim(&self) -> usize {
        self.j.nrows()
    }

    pub fn stacked(&self) -> RealMatrix {
        super::vstack(&[&self.v1, &self.v2])
    }

    /// `||U2 V - U1 V J||_2`.
    pub fn residual(&self, u1: &RealMatrix, u2: &RealMatrix) -> f64 {
        let v = self.stacked();
        norm2(&(u2 * &v - u1 * &v * &self.j))
    }
}

fn check_pencil(u1: &RealMatrix, u2: &RealMatrix) -> Result<()> {
    if !u1.is_square() {
        return Err(GeoError::InvalidMatrix(format!(
            "U1 is {}x{}, expected square",
            u1.nrows(),
            u1.ncols()
        )));
    }
    if u2.shape() != u1.shape() {
        return Err(GeoError::DimensionMismatch {
            expected: u1.nrows(),
            found: u2.nrows(),
        });
    }
    ensure_finite(u1)?;
    ensure_finite(u2)
}

/// Whether `det(s*U1 - U2)` is not identically zero.
///
/// A polynomial of degree at most `N` vanishing at `N + 1` points is zero, so
/// the pencil is singular exactly when `s*U1 - U2` is rank deficient at every
/// sample `s = 1, ..., N + 1`.
pub fn pencil_is_regular(u1: &RealMatrix, u2: &RealMatrix, tol: f64) -> Result<bool> {
    check_pencil(u1, u2)?;
    let n = u1.nrows();
    for k in 1..=n + 1 {
        let m = u1 * (k as f64) - u2;
        if rank(&m, tol)? == n {
            return Ok(true);
        }
    }
    Ok(n == 0)
}

/// Deflating subspace of the regular pencil `s*U1 - U2` for the finite
/// eigenvalues in `region`. The first `state_dim` rows of the basis go to `v1`.
pub fn ordered_pencil_eigenspace(
    u1: &RealMatrix,
    u2: &RealMatrix,
    state_dim: usize,
    region: EigenRegion,
    tol: f64,
) -> Result<PencilEigenspace> {
    check_pencil(u1, u2)?;
    let n = u1.nrows();
    if state_dim > n {
        return Err(GeoError::DimensionMismatch {
            expected: n,
            found: state_dim,
        });
    }
    if !pencil_is_regular(u1, u2, tol)? {
        return Err(GeoError::SingularPencil);
    }
    let mut schur = FiniteSchur::compute(u2, u1, tol)?;

    let mut selected = Vec::with_capacity(schur.blocks.len());
    for b in &schur.blocks {
        let eig = schur.block_eigenvalues(*b);
        let take = match region {
            EigenRegion::AllFinite => true,
            EigenRegion::OpenLeftHalfPlane => {
                let z = eig[0];
                if z.re.abs() <= tol * z.norm().max(1.0) {
                    return Err(GeoError::BoundaryAmbiguity { re: z.re, im: z.im });
                }
                z.re < 0.0
            }
        };
        selected.push(take);
    }
    let r = schur.reorder(&selected)?;

    let v = schur.z.columns(0, r).into_owned();
    let s11 = schur.s.view((0, 0), (r, r)).into_owned();
    let t11 = schur.t.view((0, 0), (r, r)).into_owned();
    let j = t11
        .lu()
        .solve(&s11)
        .filter(|m| m.iter().all(|x| x.is_finite()))
        .ok_or_else(|| GeoError::NumericalInconsistency("finite block of U1 is singular".into()))?;

    let mut eigenvalues = Vec::with_capacity(r);
    let mut acc = 0;
    for b in &schur.blocks {
        if acc >= r {
            break;
        }
        eigenvalues.extend(schur.block_eigenvalues(*b));
        acc += b.size;
    }

    let out = PencilEigenspace {
        v1: v.rows(0, state_dim).into_owned(),
        v2: v.rows(state_dim, n - state_dim).into_owned(),
        j,
        eigenvalues,
    };
    let res = out.residual(u1, u2);
    if res > tol * (1.0 + norm2(u2)) {
        return Err(GeoError::NumericalInconsistency(format!(
            "deflating subspace residual {res:.2e} exceeds tolerance"
        )));
    }
    Ok(out)
}
