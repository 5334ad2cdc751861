//! Weakly unobservable subspaces of square systems from the finite deflating
//! subspaces of the Rosenbrock pencil `s U1 - U2`.

use crate::error::{GeoError, Result};
use crate::linalg::{
    image_basis, norm2, ordered_pencil_eigenspace, pseudo_inverse, rank, EigenRegion,
    PencilEigenspace, RealMatrix, SubspaceBasis,
};
use crate::sysmodel::StateSpaceSystem;

/// `U1 = diag(I_n, 0)`, `U2 = [[A, B], [C, D]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RosenbrockPencil {
    pub u1: RealMatrix,
    pub u2: RealMatrix,
}

pub fn build_pencil(sys: &StateSpaceSystem) -> Result<RosenbrockPencil> {
    if !sys.is_square() {
        return Err(GeoError::NotSquare { p: sys.p, m: sys.m });
    }
    let (n, m) = (sys.n, sys.m);
    let mut u1 = RealMatrix::zeros(n + m, n + m);
    u1.view_mut((0, 0), (n, n)).fill_with_identity();
    let mut u2 = RealMatrix::zeros(n + m, n + m);
    u2.view_mut((0, 0), (n, n)).copy_from(&sys.a);
    u2.view_mut((0, n), (n, m)).copy_from(&sys.b);
    u2.view_mut((n, 0), (m, n)).copy_from(&sys.c);
    u2.view_mut((n, n), (m, m)).copy_from(&sys.d);
    Ok(RosenbrockPencil { u1, u2 })
}

fn slow_space(
    sys: &StateSpaceSystem,
    region: EigenRegion,
    tol: f64,
) -> Result<(SubspaceBasis, PencilEigenspace)> {
    let pencil = build_pencil(sys)?;
    let eig = ordered_pencil_eigenspace(&pencil.u1, &pencil.u2, sys.n, region, tol)?;
    let r = eig.dim();
    if rank(&eig.v1, tol)? < r {
        return Err(GeoError::NumericalInconsistency(format!(
            "V1 is rank deficient (r = {r})"
        )));
    }
    let basis = image_basis(&eig.v1, tol)?;
    if basis.dim() != r {
        return Err(GeoError::NumericalInconsistency(format!(
            "slow subspace has dimension {} but the pencil has {r} finite eigenvalues",
            basis.dim()
        )));
    }
    Ok((basis, eig))
}

/// `O_w = img V1` over all finite eigenvalues of the pencil.
pub fn weakly_unobservable(
    sys: &StateSpaceSystem,
    tol: f64,
) -> Result<(SubspaceBasis, PencilEigenspace)> {
    slow_space(sys, EigenRegion::AllFinite, tol)
}

/// `O_wg = img V1g` over the finite eigenvalues in the open left half-plane.
pub fn good_weakly_unobservable(
    sys: &StateSpaceSystem,
    tol: f64,
) -> Result<(SubspaceBasis, PencilEigenspace)> {
    slow_space(sys, EigenRegion::OpenLeftHalfPlane, tol)
}

/// Minimum-norm `F` (m x n) with `F V1 = V2`.
pub fn friend_feedback(eig: &PencilEigenspace, tol: f64) -> Result<RealMatrix> {
    let (n, r) = eig.v1.shape();
    let m = eig.v2.nrows();
    if r == 0 {
        return Ok(RealMatrix::zeros(m, n));
    }
    if rank(&eig.v1, tol)? < r {
        return Err(GeoError::NumericalInconsistency(
            "V1 is rank deficient".into(),
        ));
    }
    Ok(&eig.v2 * pseudo_inverse(&eig.v1, tol)?)
}

/// `(||(A + BF) V1 - V1 J||, ||(C + DF) V1||)`.
pub fn friend_residuals(
    sys: &StateSpaceSystem,
    eig: &PencilEigenspace,
    f: &RealMatrix,
) -> (f64, f64) {
    let closed_a = &sys.a + &sys.b * f;
    let closed_c = &sys.c + &sys.d * f;
    (
        norm2(&(closed_a * &eig.v1 - &eig.v1 * &eig.j)),
        norm2(&(closed_c * &eig.v1)),
    )
}
