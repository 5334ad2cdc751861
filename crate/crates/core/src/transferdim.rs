//! Transfer-matrix polynomials and the dimension formulas for the slow and
//! fast subspaces.
//!
//! `G(s) = P(s) / chi(s)` with `chi = det(sI - A)` and
//! `P(s) = C adj(sI - A) B + D chi(s)`. Determinants of polynomial matrices
//! are obtained by evaluating on a circle of nodes and transforming back with
//! a discrete Fourier sum, which is exact for polynomials of degree below the
//! node count and perfectly conditioned on the unit circle.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{GeoError, Result};
use crate::linalg::{rank, RealMatrix};
use crate::slowspace::build_pencil;
use crate::sysmodel::StateSpaceSystem;

type ComplexMatrix = DMatrix<Complex64>;

/// Interpolated coefficients below this fraction of the a-priori magnitude
/// bound of the sampled values are treated as zero.
pub const NOISE_REL: f64 = 1e-13;

const INTERPOLATION_RADII: [f64; 4] = [0.5, 1.0, 2.0, 4.0];

/// Real polynomial in ascending powers. The zero polynomial has no coefficients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    /// Drops exactly-zero leading coefficients.
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Polynomial::new(vec![c])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |a, c| a.max(c.abs()))
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
    }

    /// `p(-s)`.
    pub fn reflect(&self) -> Self {
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| if i % 2 == 1 { -c } else { *c })
                .collect(),
        )
    }

    pub fn add(&self, other: &Polynomial) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        let get = |p: &Polynomial, i: usize| p.coeffs.get(i).copied().unwrap_or(0.0);
        Polynomial::new((0..len).map(|i| get(self, i) + get(other, i)).collect())
    }

    pub fn mul(&self, other: &Polynomial) -> Self {
        if self.is_zero() || other.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }

    pub fn scale(&self, k: f64) -> Self {
        Polynomial::new(self.coeffs.iter().map(|c| c * k).collect())
    }

    /// Degree after discarding coefficients of magnitude `<= floor`.
    pub fn degree_above(&self, floor: f64) -> Option<usize> {
        self.coeffs.iter().rposition(|c| c.abs() > floor)
    }
}

/// Matrix of polynomials, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Polynomial>,
}

impl PolyMatrix {
    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> Polynomial,
    ) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        PolyMatrix {
            rows,
            cols,
            entries,
        }
    }

    /// `sum_k coeffs[k] s^k`.
    pub fn from_coefficients(coeffs: &[RealMatrix]) -> Self {
        let (rows, cols) = coeffs.first().map_or((0, 0), |c| c.shape());
        PolyMatrix::from_fn(rows, cols, |i, j| {
            Polynomial::new(coeffs.iter().map(|c| c[(i, j)]).collect())
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> &Polynomial {
        &self.entries[i * self.cols + j]
    }

    pub fn max_degree(&self) -> Option<usize> {
        self.entries.iter().filter_map(Polynomial::degree).max()
    }

    pub fn eval(&self, s: f64) -> RealMatrix {
        RealMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).eval(s))
    }

    pub fn eval_complex(&self, z: Complex64) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).eval_complex(z))
    }

    pub fn reflect(&self) -> Self {
        PolyMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).reflect())
    }

    pub fn transpose(&self) -> Self {
        PolyMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn mul(&self, other: &PolyMatrix) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        PolyMatrix::from_fn(self.rows, other.cols, |i, j| {
            (0..self.cols).fold(Polynomial::zero(), |acc, k| {
                acc.add(&self.get(i, k).mul(other.get(k, j)))
            })
        })
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.entries
            .iter()
            .fold(0.0, |a, p| a.max(p.max_abs_coeff()))
    }
}

/// `chi(s) = det(sI - A)` and `adj(sI - A)` by the Faddeev-LeVerrier recursion.
pub fn char_poly_and_adjugate(a: &RealMatrix) -> (Polynomial, PolyMatrix) {
    assert!(a.is_square(), "A must be square");
    let n = a.nrows();
    let id = RealMatrix::identity(n, n);
    // chi = s^n + c[n-1] s^{n-1} + ... + c[0]
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    // adj = sum_{k=1}^{n} M_k s^{n-k}; adj_coeffs[j] multiplies s^j
    let mut adj_coeffs = vec![RealMatrix::zeros(n, n); n];
    let mut mk = id.clone();
    for k in 1..=n {
        adj_coeffs[n - k] = mk.clone();
        let am = a * &mk;
        c[n - k] = -am.trace() / k as f64;
        mk = am + &id * c[n - k];
    }
    let adj = if n == 0 {
        PolyMatrix::from_fn(0, 0, |_, _| Polynomial::zero())
    } else {
        PolyMatrix::from_coefficients(&adj_coeffs)
    };
    (Polynomial::new(c), adj)
}

/// `P(s) = C adj(sI - A) B + D chi(s)` together with `chi`.
pub fn numerator_matrix(sys: &StateSpaceSystem) -> (PolyMatrix, Polynomial) {
    let (chi, adj) = char_poly_and_adjugate(&sys.a);
    let n = sys.n;
    let coeffs: Vec<RealMatrix> = (0..=n)
        .map(|j| {
            let mut cj = &sys.d * chi.coeffs()[j];
            if j < n {
                let adj_j = RealMatrix::from_fn(n, n, |r, c| {
                    adj.get(r, c).coeffs().get(j).copied().unwrap_or(0.0)
                });
                cj += &sys.c * adj_j * &sys.b;
            }
            cj
        })
        .collect();
    (PolyMatrix::from_coefficients(&coeffs), chi)
}

fn hadamard_bound(m: &ComplexMatrix) -> f64 {
    m.column_iter()
        .map(|c| c.norm().max(f64::MIN_POSITIVE))
        .product()
}

/// Interpolates a polynomial of degree `<= degree_bound` from its values on
/// a circle. `f` returns the value at a node together with an a-priori bound
/// on its magnitude; `avoid` lists polynomials that must stay away from zero
/// on the nodes (they appear as divisors inside `f`).
fn interpolate_on_circle(
    degree_bound: usize,
    avoid: Option<&Polynomial>,
    f: impl Fn(Complex64) -> (Complex64, f64),
) -> Result<Polynomial> {
    let k = degree_bound + 3;
    let nodes = |r: f64, phase: f64| -> Vec<Complex64> {
        (0..k)
            .map(|j| Complex64::from_polar(r, 2.0 * PI * (j as f64 + phase) / k as f64))
            .collect()
    };
    let mut best: Vec<(f64, f64)> = vec![(0.0, f64::INFINITY); degree_bound + 1];
    for radius in INTERPOLATION_RADII {
        let mut phase = 0.0;
        if let Some(div) = avoid {
            let mut widest = -1.0;
            for step in 0..8 {
                let ph = step as f64 / 8.0;
                let worst = nodes(radius, ph)
                    .iter()
                    .map(|z| div.eval_complex(*z).norm())
                    .fold(f64::INFINITY, f64::min);
                if worst > widest {
                    widest = worst;
                    phase = ph;
                }
            }
        }
        let zs = nodes(radius, phase);
        let mut values = Vec::with_capacity(k);
        let mut bound = 0.0f64;
        for z in &zs {
            let (v, b) = f(*z);
            if !v.re.is_finite() || !v.im.is_finite() || !b.is_finite() {
                return Err(GeoError::NumericalInconsistency(
                    "non-finite value during interpolation".into(),
                ));
            }
            values.push(v);
            bound = bound.max(b);
        }
        for l in 0..k {
            let sum: Complex64 = zs
                .iter()
                .zip(&values)
                .map(|(z, v)| v * Complex64::from_polar(1.0, -(l as f64) * z.arg()))
                .sum();
            let c = sum / (k as f64) / radius.powi(l as i32);
            // rounding error of coefficient l is at most about NOISE_REL * bound / r^l
            let noise = NOISE_REL * bound / radius.powi(l as i32);
            let excess = if l > degree_bound {
                c.norm()
            } else {
                c.im.abs()
            };
            if excess > noise {
                return Err(GeoError::NumericalInconsistency(format!(
                    "interpolated polynomial exceeds degree {degree_bound} or is not real (coefficient {l} = {c:.3e})"
                )));
            }
            if let Some(slot) = best.get_mut(l).filter(|slot| noise < slot.1) {
                *slot = (c.re, noise);
            }
        }
    }
    Ok(Polynomial::new(
        best.into_iter()
            .map(|(c, noise)| if c.abs() <= noise { 0.0 } else { c })
            .collect(),
    ))
}

/// `det(s U1 - U2)` for the Rosenbrock pencil of a square system.
pub fn pencil_det_poly(sys: &StateSpaceSystem) -> Result<Polynomial> {
    let pencil = build_pencil(sys)?;
    let u1 = pencil.u1.map(|x| Complex64::new(x, 0.0));
    let u2 = pencil.u2.map(|x| Complex64::new(x, 0.0));
    interpolate_on_circle(sys.n, None, |z| {
        let m = &u1 * z - &u2;
        (m.determinant(), hadamard_bound(&m))
    })
}

/// Whether `P(s)` (equivalently `G(s)`) has full column rank over the
/// rational functions, decided on the sample points `s = 0, 1, ..., n m`.
pub fn is_left_invertible(sys: &StateSpaceSystem, tol: f64) -> Result<bool> {
    if sys.m > sys.p {
        return Ok(false);
    }
    let (p, _) = numerator_matrix(sys);
    for s in 0..=sys.n * sys.m {
        if rank(&p.eval(s as f64), tol)? == sys.m {
            return Ok(true);
        }
    }
    Ok(false)
}

/// `det(P(-s)^T P(s)) / (chi(s) chi(-s))^{m-1}`, an even polynomial of degree `<= 2n`.
pub fn even_numdet(sys: &StateSpaceSystem, tol: f64) -> Result<Polynomial> {
    if !is_left_invertible(sys, tol)? {
        return Err(GeoError::NotLeftInvertible);
    }
    let (p, chi) = numerator_matrix(sys);
    let chichi = chi.mul(&chi.reflect());
    let m = sys.m as i32;
    let q = interpolate_on_circle(2 * sys.n, Some(&chichi), |z| {
        let phi = p.eval_complex(-z).transpose() * p.eval_complex(z);
        let div = chichi.eval_complex(z).powi(m - 1);
        (phi.determinant() / div, hadamard_bound(&phi) / div.norm())
    })?;
    for (i, c) in q.coeffs().iter().enumerate() {
        if i % 2 == 1 && *c != 0.0 {
            return Err(GeoError::NumericalInconsistency(format!(
                "odd coefficient {i} of an even polynomial is {c:.3e}"
            )));
        }
    }
    Ok(q)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Square,
    Even,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TransferDims {
    pub n_s: usize,
    pub n_f: usize,
    pub route: Route,
}

/// `n_s` and `n_f = n - n_s` from the transfer matrix.
pub fn dims_from_transfer(sys: &StateSpaceSystem, tol: f64) -> Result<TransferDims> {
    let square = if sys.is_square() {
        let det = pencil_det_poly(sys)?;
        det.degree()
    } else {
        None
    };
    let even = if is_left_invertible(sys, tol)? {
        let q = even_numdet(sys, tol)?;
        let deg = q.degree().ok_or_else(|| {
            GeoError::NumericalInconsistency(
                "even determinant vanished for a left-invertible system".into(),
            )
        })?;
        Some(deg / 2)
    } else {
        None
    };
    let (n_s, route) = match (square, even) {
        (Some(a), Some(b)) if a == b => (a, Route::Both),
        (Some(a), Some(b)) => {
            return Err(GeoError::NumericalInconsistency(format!(
                "square route gives n_s = {a}, even route gives n_s = {b}"
            )))
        }
        (Some(a), None) => (a, Route::Square),
        (None, Some(b)) => (b, Route::Even),
        (None, None) => return Err(GeoError::Inapplicable),
    };
    if n_s > sys.n {
        return Err(GeoError::NumericalInconsistency(format!(
            "n_s = {n_s} exceeds n = {}",
            sys.n
        )));
    }
    Ok(TransferDims {
        n_s,
        n_f: sys.n - n_s,
        route,
    })
}

/// Evaluates both sides of "r(s) strictly proper iff r(-s)^T r(s) strictly
/// proper" for `r = G U` with `U(s) = sum_i u_i s^i`, and returns their
/// common verdict.
pub fn strictly_proper_product_check(sys: &StateSpaceSystem, coeffs: &[Vec<f64>]) -> Result<bool> {
    for u in coeffs {
        if u.len() != sys.m {
            return Err(GeoError::DimensionMismatch {
                expected: sys.m,
                found: u.len(),
            });
        }
    }
    let n = sys.n;
    let (p, chi) = numerator_matrix(sys);
    let u = PolyMatrix::from_fn(sys.m, 1, |i, _| {
        Polynomial::new(coeffs.iter().map(|c| c[i]).collect())
    });
    let u_scale = coeffs.iter().flatten().fold(0.0f64, |a, c| a.max(c.abs()));
    let p_scale = p.max_abs_coeff();
    let terms = (coeffs.len() * sys.m).max(1) as f64;
    let x = (p_scale * u_scale * terms).max(f64::MIN_POSITIVE);
    let floor = 1e-8 * x;

    let pu = p.mul(&u);
    let lhs = (0..sys.p).all(|i| pu.get(i, 0).degree_above(floor).is_none_or(|d| d < n));

    let product = pu.reflect().transpose().mul(&pu);
    let rhs = product
        .get(0, 0)
        .degree_above(1e-8 * x * x * sys.p as f64)
        .is_none_or(|d| d < 2 * n);
    debug_assert_eq!(chi.degree(), Some(n));

    if lhs != rhs {
        return Err(GeoError::NumericalInconsistency(
            "strict properness of r and of r(-s)^T r(s) disagree".into(),
        ));
    }
    Ok(lhs)
}
