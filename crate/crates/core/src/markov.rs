//! Markov parameter matrices, admissible impulsive inputs and the strongly
//! reachable (fast) subspace in closed form.
//!
//! An impulsive input `u = sum_i u_i delta^(i)` with coefficients
//! `u_0, ..., u_{k-1}` is admissible when `col(u_0, ..., u_{k-1})` lies in the
//! kernel of `M_k`.

use crate::error::{GeoError, Result};
use crate::linalg::{
    hstack, image_basis_scaled, norm2, nullspace_basis, vstack, RealMatrix, SubspaceBasis,
};
use crate::sysmodel::StateSpaceSystem;

/// Block anti-triangular matrix of the Markov parameters `D, CB, CAB, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovMatrix {
    pub k: usize,
    /// `blocks[0] = D`, `blocks[t] = C A^(t-1) B`.
    pub blocks: Vec<RealMatrix>,
    p: usize,
    m: usize,
}

impl MarkovMatrix {
    /// `kp x km`; block `(i, j)` is `blocks[i + j - (k - 1)]` when that index is non-negative.
    pub fn assembled(&self) -> RealMatrix {
        let (k, p, m) = (self.k, self.p, self.m);
        let mut out = RealMatrix::zeros(k * p, k * m);
        for i in 0..k {
            for j in (k - 1 - i)..k {
                out.view_mut((i * p, j * m), (p, m))
                    .copy_from(&self.blocks[i + j + 1 - k]);
            }
        }
        out
    }
}

pub fn build_markov(sys: &StateSpaceSystem, k: usize) -> Result<MarkovMatrix> {
    if k == 0 {
        return Err(GeoError::InvalidOrder);
    }
    let mut blocks = Vec::with_capacity(k);
    blocks.push(sys.d.clone());
    let mut ab = sys.b.clone();
    for _ in 1..k {
        blocks.push(&sys.c * &ab);
        ab = &sys.a * ab;
    }
    Ok(MarkovMatrix {
        k,
        blocks,
        p: sys.p,
        m: sys.m,
    })
}

/// Scale `alpha >= max(1, ||A||_F)` of the balanced system `(A/alpha, B/alpha, C, D)`,
/// rounded up to a power of two so that the scaling itself is exact.
///
/// Its Markov matrix is `M'_k = alpha^(k-1) R M_k S` with block-diagonal
/// `R = diag(alpha^-i I_p)` and `S = diag(alpha^-j I_m)`, so `ker M_k = S ker M'_k`.
/// Without balancing the parameters `C A^t B` grow geometrically and the
/// relative rank test reports spurious kernel vectors for larger `k`.
fn balance(sys: &StateSpaceSystem) -> f64 {
    sys.a.norm().max(1.0).log2().ceil().exp2()
}

fn balanced_markov(sys: &StateSpaceSystem, k: usize) -> Result<(RealMatrix, Vec<f64>)> {
    let alpha = balance(sys);
    let mut scaled = sys.clone();
    scaled.a /= alpha;
    scaled.b /= alpha;
    let m = build_markov(&scaled, k)?.assembled();
    let col_scale = (0..k)
        .flat_map(|j| std::iter::repeat_n(alpha.powi(-(j as i32)), sys.m))
        .collect();
    Ok((m, col_scale))
}

/// Orthonormal basis of `ker M_k`.
pub fn markov_kernel(sys: &StateSpaceSystem, k: usize, tol: f64) -> Result<SubspaceBasis> {
    let (m, col_scale) = balanced_markov(sys, k)?;
    let ker = nullspace_basis(&m, tol)?;
    if ker.dim() == 0 || ker.dim() == k * sys.m {
        return Ok(ker);
    }
    let mut mapped = ker.basis().clone();
    for (i, s) in col_scale.iter().enumerate() {
        mapped.row_mut(i).scale_mut(*s);
    }
    let q = mapped.qr().q();
    Ok(SubspaceBasis::from_orthonormal(q, tol))
}

/// `[dim ker M_1, ..., dim ker M_{k_max}]`.
pub fn kernel_dim_sequence(sys: &StateSpaceSystem, k_max: usize, tol: f64) -> Result<Vec<usize>> {
    if k_max == 0 {
        return Err(GeoError::InvalidOrder);
    }
    (1..=k_max)
        .map(|k| Ok(nullspace_basis(&balanced_markov(sys, k)?.0, tol)?.dim()))
        .collect()
}

/// Orthonormal basis `N` of `ker M_{f-d+1}`, split into `m x f` blocks
/// `N_0, ..., N_{f-d}`. The admissible impulsive inputs are
/// `sum_i N_i v delta^(i)` for `v` in `R^f`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulsiveInputBasis {
    pub f: usize,
    pub d: usize,
    pub blocks: Vec<RealMatrix>,
    pub basis: RealMatrix,
}

pub fn impulsive_space(sys: &StateSpaceSystem, tol: f64) -> Result<ImpulsiveInputBasis> {
    let n = sys.n;
    let mut dims: Vec<usize> = Vec::new();
    let mut stable_at = None;
    for k in 1..=n + 2 {
        let dk = nullspace_basis(&balanced_markov(sys, k)?.0, tol)?.dim();
        dims.push(dk);
        if dk > n {
            return Err(GeoError::InfiniteImpulsiveSpace {
                n,
                kernel_dims: dims,
            });
        }
        if k > 1 && dims[k - 2] == dk {
            stable_at = Some(k - 1);
            break;
        }
    }
    let Some(first) = stable_at else {
        return Err(GeoError::InfiniteImpulsiveSpace {
            n,
            kernel_dims: dims,
        });
    };
    let f = dims[first - 1];
    let d = dims[0];
    if f == 0 {
        return Ok(ImpulsiveInputBasis {
            f,
            d,
            blocks: Vec::new(),
            basis: RealMatrix::zeros(0, 0),
        });
    }
    if first > f - d + 1 {
        return Err(GeoError::NumericalInconsistency(format!(
            "kernel dimensions {dims:?} stabilize at k = {first}, beyond f - d + 1 = {}",
            f - d + 1
        )));
    }
    let order = f - d + 1;
    let kernel = markov_kernel(sys, order, tol)?;
    if kernel.dim() != f {
        return Err(GeoError::NumericalInconsistency(format!(
            "ker M_{order} has dimension {}, expected f = {f}",
            kernel.dim()
        )));
    }
    let basis = kernel.basis().clone();
    let blocks = (0..order)
        .map(|i| basis.rows(i * sys.m, sys.m).into_owned())
        .collect();
    Ok(ImpulsiveInputBasis {
        f,
        d,
        blocks,
        basis,
    })
}

fn stack_coeffs(sys: &StateSpaceSystem, coeffs: &[Vec<f64>]) -> Result<RealMatrix> {
    for u in coeffs {
        if u.len() != sys.m {
            return Err(GeoError::DimensionMismatch {
                expected: sys.m,
                found: u.len(),
            });
        }
    }
    Ok(RealMatrix::from_iterator(
        sys.m * coeffs.len(),
        1,
        coeffs.iter().flatten().copied(),
    ))
}

/// Whether `col(u_0, ..., u_k)` lies in `ker M_{k+1}` within `tol`.
pub fn is_admissible(sys: &StateSpaceSystem, coeffs: &[Vec<f64>], tol: f64) -> Result<bool> {
    if coeffs.is_empty() {
        return Ok(true);
    }
    let mut u = stack_coeffs(sys, coeffs)?;
    let (m, col_scale) = balanced_markov(sys, coeffs.len())?;
    for (i, s) in col_scale.iter().enumerate() {
        u[i] /= s;
    }
    let res = (&m * &u).norm();
    Ok(res <= tol * norm2(&m) * u.norm())
}

/// `(u_0, ..., u_k) -> (u_1, ..., u_k)`.
pub fn shift_input(coeffs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    if coeffs.len() < 2 {
        return Err(GeoError::NothingToShift);
    }
    Ok(coeffs[1..].to_vec())
}

/// Impulsive state coefficients `x_0, ..., x_{k-2}` for input coefficients
/// `u_0, ..., u_{k-1}`: `x_{k-2} = B u_{k-1}`, `x_j = A x_{j+1} + B u_{j+1}`.
pub fn impulse_state_coeffs(sys: &StateSpaceSystem, coeffs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let k = coeffs.len();
    if k < 2 {
        return Err(GeoError::NoImpulsivePart);
    }
    stack_coeffs(sys, coeffs)?;
    let col = |u: &Vec<f64>| RealMatrix::from_column_slice(sys.m, 1, u);
    let mut xs = vec![RealMatrix::zeros(sys.n, 1); k - 1];
    xs[k - 2] = &sys.b * col(&coeffs[k - 1]);
    for j in (0..k - 2).rev() {
        xs[j] = &sys.a * &xs[j + 1] + &sys.b * col(&coeffs[j + 1]);
    }
    Ok(xs.into_iter().map(|x| x.as_slice().to_vec()).collect())
}

/// `[B AB ... A^(k-1) B]`.
pub fn krylov_input_matrix(sys: &StateSpaceSystem, k: usize) -> RealMatrix {
    let mut cols = Vec::with_capacity(k);
    let mut ab = sys.b.clone();
    for _ in 0..k {
        let next = &sys.a * &ab;
        cols.push(std::mem::replace(&mut ab, next));
    }
    let refs: Vec<&RealMatrix> = cols.iter().collect();
    if refs.is_empty() {
        RealMatrix::zeros(sys.n, 0)
    } else {
        hstack(&refs)
    }
}

/// State jump `[B AB ... A^(k-1) B] col(u_0, ..., u_{k-1})` produced by an admissible input.
pub fn strong_state_from_input(
    sys: &StateSpaceSystem,
    coeffs: &[Vec<f64>],
    tol: f64,
) -> Result<Vec<f64>> {
    if !is_admissible(sys, coeffs, tol)? {
        return Err(GeoError::NotAdmissible);
    }
    if coeffs.is_empty() {
        return Ok(vec![0.0; sys.n]);
    }
    let u = stack_coeffs(sys, coeffs)?;
    Ok((krylov_input_matrix(sys, coeffs.len()) * u)
        .as_slice()
        .to_vec())
}

/// Strongly reachable subspace `R_s = img [B AB ... A^(f-d) B] N`.
pub fn fast_space(sys: &StateSpaceSystem, tol: f64) -> Result<SubspaceBasis> {
    let imp = impulsive_space(sys, tol)?;
    if imp.f == 0 {
        return Ok(SubspaceBasis::zero(sys.n, tol));
    }
    let k = krylov_input_matrix(sys, imp.f - imp.d + 1);
    let scale = norm2(&k);
    let rs = image_basis_scaled(&(k * &imp.basis), tol, scale)?;
    if rs.dim() != imp.f {
        return Err(GeoError::NumericalInconsistency(format!(
            "fast subspace has dimension {}, expected f = {}",
            rs.dim(),
            imp.f
        )));
    }
    Ok(rs)
}

/// `M_{k+1}` written as `[[0, D], [M_k, m_{k+1}]]` and as `[[0, M_k], [D, l_{k+1}]]`.
pub fn partition_forms(sys: &StateSpaceSystem, k: usize) -> Result<(RealMatrix, RealMatrix)> {
    let mk = build_markov(sys, k)?;
    let next = build_markov(sys, k + 1)?;
    let (p, m) = (sys.p, sys.m);
    let small = mk.assembled();
    // last block column / last block row of M_{k+1} below / right of the corner
    let col: Vec<&RealMatrix> = next.blocks[1..].iter().collect();
    let m_next = vstack(&col);
    let row: Vec<&RealMatrix> = next.blocks[1..].iter().collect();
    let l_next = hstack(&row);

    let mut first = RealMatrix::zeros((k + 1) * p, (k + 1) * m);
    first.view_mut((0, k * m), (p, m)).copy_from(&sys.d);
    first.view_mut((p, 0), (k * p, k * m)).copy_from(&small);
    first.view_mut((p, k * m), (k * p, m)).copy_from(&m_next);

    let mut second = RealMatrix::zeros((k + 1) * p, (k + 1) * m);
    second.view_mut((0, m), (k * p, k * m)).copy_from(&small);
    second.view_mut((k * p, 0), (p, m)).copy_from(&sys.d);
    second.view_mut((k * p, m), (p, k * m)).copy_from(&l_next);
    Ok((first, second))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{singular_values, DEFAULT_TOL};
    use crate::sysmodel::fixtures::*;
    use crate::sysmodel::random_system;
    use nalgebra::dmatrix;
    use proptest::prelude::*;

    #[test]
    fn markov_examples() {
        assert_eq!(
            build_markov(&s1(), 3).unwrap().assembled(),
            dmatrix![0.0, 0.0, 0.0; 0.0, 0.0, 0.0; 0.0, 0.0, 1.0]
        );
        assert_eq!(build_markov(&s2(), 1).unwrap().assembled(), s2().d);
        assert_eq!(
            build_markov(&s2(), 2).unwrap().assembled(),
            dmatrix![0.0, 1.0; 1.0, 1.0]
        );
        assert_eq!(build_markov(&s2(), 0).unwrap_err(), GeoError::InvalidOrder);
    }

    #[test]
    fn kernel_sequences() {
        assert_eq!(
            kernel_dim_sequence(&s1(), 3, DEFAULT_TOL).unwrap(),
            vec![1, 2, 2]
        );
        assert_eq!(
            kernel_dim_sequence(&s2(), 3, DEFAULT_TOL).unwrap(),
            vec![0, 0, 0]
        );
        let mut eye = random_system(3, 2, 2, 11, (-3, 3));
        eye.d = RealMatrix::identity(2, 2);
        assert_eq!(
            kernel_dim_sequence(&eye, 2, DEFAULT_TOL).unwrap(),
            vec![0, 0]
        );
    }

    #[test]
    fn impulsive_space_examples() {
        let u = impulsive_space(&s1(), DEFAULT_TOL).unwrap();
        assert_eq!((u.f, u.d), (2, 1));
        assert_eq!(u.blocks.len(), 2);
        assert_eq!(u.basis.shape(), (2, 2));

        let u = impulsive_space(&s2(), DEFAULT_TOL).unwrap();
        assert_eq!((u.f, u.d), (0, 0));
        assert!(u.blocks.is_empty());
        assert_eq!(u.basis.ncols(), 0);

        match impulsive_space(&s5(), DEFAULT_TOL) {
            Err(GeoError::InfiniteImpulsiveSpace { n: 2, kernel_dims }) => {
                assert_eq!(kernel_dims, vec![1, 2, 3])
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn admissibility_examples() {
        assert!(is_admissible(&s1(), &[vec![0.0], vec![1.0]], DEFAULT_TOL).unwrap());
        assert!(!is_admissible(&s2(), &[vec![1.0]], DEFAULT_TOL).unwrap());
        assert!(is_admissible(&s2(), &[vec![0.0], vec![0.0]], DEFAULT_TOL).unwrap());
    }

    #[test]
    fn shift_examples() {
        let u = vec![vec![1.0], vec![2.0], vec![3.0]];
        assert_eq!(shift_input(&u).unwrap(), vec![vec![2.0], vec![3.0]]);
        let shifted = shift_input(&[vec![0.0], vec![1.0]]).unwrap();
        assert_eq!(shifted, vec![vec![1.0]]);
        assert!(is_admissible(&s1(), &shifted, DEFAULT_TOL).unwrap());
        assert_eq!(
            shift_input(&[vec![0.0], vec![0.0]]).unwrap(),
            vec![vec![0.0]]
        );
        assert_eq!(
            shift_input(&[vec![1.0]]).unwrap_err(),
            GeoError::NothingToShift
        );
    }

    #[test]
    fn impulse_state_examples() {
        assert_eq!(
            impulse_state_coeffs(&s1(), &[vec![0.0], vec![1.0]]).unwrap(),
            vec![vec![0.0, 1.0]]
        );
        assert_eq!(
            impulse_state_coeffs(&s1(), &[vec![0.0], vec![0.0], vec![1.0]]).unwrap(),
            vec![vec![1.0, 0.0], vec![0.0, 1.0]]
        );
        assert_eq!(
            impulse_state_coeffs(&s1(), &[vec![0.0], vec![0.0], vec![0.0]]).unwrap(),
            vec![vec![0.0, 0.0], vec![0.0, 0.0]]
        );
        assert_eq!(
            impulse_state_coeffs(&s1(), &[vec![1.0]]).unwrap_err(),
            GeoError::NoImpulsivePart
        );
    }

    #[test]
    fn strong_state_examples() {
        assert_eq!(
            strong_state_from_input(&s1(), &[vec![0.0], vec![1.0]], DEFAULT_TOL).unwrap(),
            vec![1.0, 0.0]
        );
        assert_eq!(
            strong_state_from_input(&s1(), &[vec![1.0], vec![0.0]], DEFAULT_TOL).unwrap(),
            vec![0.0, 1.0]
        );
        assert_eq!(
            strong_state_from_input(&s2(), &[vec![0.0]], DEFAULT_TOL).unwrap(),
            vec![0.0]
        );
        assert_eq!(
            strong_state_from_input(&s2(), &[vec![1.0]], DEFAULT_TOL).unwrap_err(),
            GeoError::NotAdmissible
        );
    }

    #[test]
    fn fast_space_examples() {
        let rs = fast_space(&s1(), DEFAULT_TOL).unwrap();
        assert_eq!(rs.dim(), 2);
        assert!(fast_space(&s2(), DEFAULT_TOL).unwrap().is_zero());
        let mut eye = random_system(4, 2, 2, 3, (-3, 3));
        eye.d = RealMatrix::identity(2, 2);
        assert!(fast_space(&eye, DEFAULT_TOL).unwrap().is_zero());
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 500, max_global_rejects: 100_000, ..ProptestConfig::default() })]

        #[test]
        fn kernel_sequence_shape(seed in any::<u64>(), n in 1usize..=6, m in 1usize..=3, p in 1usize..=3) {
            let sys = random_system(n, m, p, seed, (-3, 3));
            // the invariants hold for exact ranks; skip systems whose rank decisions sit near the threshold
            for k in 1..=n + 2 {
                let sv = singular_values(&balanced_markov(&sys, k).unwrap().0);
                let smax = sv[0];
                prop_assume!(sv.iter().all(|&s| s <= 1e-12 * smax || s >= 1e-6 * smax));
            }
            let dims = kernel_dim_sequence(&sys, n + 2, DEFAULT_TOL).unwrap();
            prop_assert!(dims.windows(2).all(|w| w[0] <= w[1]));
            if let Some(i) = dims.windows(2).position(|w| w[0] == w[1]) {
                prop_assert!(dims[i..].iter().all(|&x| x == dims[i]));
            }
        }

        #[test]
        fn kernel_nesting(seed in any::<u64>(), n in 1usize..=6, m in 1usize..=3, p in 1usize..=3, k in 1usize..=5) {
            let sys = random_system(n, m, p, seed, (-3, 3));
            let mk = build_markov(&sys, k).unwrap().assembled();
            let next = build_markov(&sys, k + 1).unwrap().assembled();
            let ker = nullspace_basis(&mk, DEFAULT_TOL).unwrap();
            let padded = vstack(&[ker.basis(), &RealMatrix::zeros(m, ker.dim())]);
            prop_assert!((next * padded).amax() <= 1e-8 * (1.0 + mk.amax()));
        }

        #[test]
        fn partition_identity(seed in any::<u64>(), n in 1usize..=6, m in 1usize..=3, p in 1usize..=3, k in 1usize..=6) {
            let sys = random_system(n, m, p, seed, (-3, 3));
            let next = build_markov(&sys, k + 1).unwrap().assembled();
            let (first, second) = partition_forms(&sys, k).unwrap();
            prop_assert_eq!(&next, &first);
            prop_assert_eq!(&next, &second);
        }

        #[test]
        fn shift_closure(seed in any::<u64>(), n in 1usize..=6, m in 1usize..=3, p in 1usize..=3, k in 2usize..=5, pick in any::<u64>()) {
            let sys = random_system(n, m, p, seed, (-3, 3));
            let ker = markov_kernel(&sys, k, DEFAULT_TOL).unwrap();
            prop_assume!(ker.dim() > 0);
            let v = ker.basis().column(pick as usize % ker.dim()).into_owned();
            let coeffs: Vec<Vec<f64>> = v.as_slice().chunks(m).map(|c| c.to_vec()).collect();
            prop_assert!(is_admissible(&sys, &coeffs, DEFAULT_TOL).unwrap());
            // v is a unit vector, so the shifted tail may be pure rounding noise; test it on an absolute scale
            let shifted = shift_input(&coeffs).unwrap();
            let tail = RealMatrix::from_iterator(m * (k - 1), 1, shifted.iter().flatten().copied());
            let mk = build_markov(&sys, k - 1).unwrap().assembled();
            prop_assert!((&mk * tail).norm() <= 1e-8 * norm2(&mk));
        }

        #[test]
        fn fast_space_dimension_and_membership(seed in any::<u64>(), n in 1usize..=6, m in 1usize..=3, p in 1usize..=3) {
            let sys = random_system(n, m, p, seed, (-3, 3));
            let imp = match impulsive_space(&sys, DEFAULT_TOL) {
                Ok(x) => x,
                Err(GeoError::InfiniteImpulsiveSpace { .. }) => return Ok(()),
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            };
            let rs = fast_space(&sys, DEFAULT_TOL).unwrap();
            prop_assert_eq!(rs.dim(), imp.f);
            for j in 0..imp.f {
                let coeffs: Vec<Vec<f64>> = imp.basis.column(j).as_slice().chunks(m).map(|c| c.to_vec()).collect();
                let x = strong_state_from_input(&sys, &coeffs, 1e-8).unwrap();
                let x = RealMatrix::from_column_slice(n, 1, &x);
                prop_assert!(rs.contains(&x, 1e-8 * (1.0 + x.norm())));
            }
        }
    }
}
