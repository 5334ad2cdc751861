//! Real generalized Schur form of a regular pencil `s*E - A`, restricted to
//! its finite spectrum, with adjacent-block swapping.
//!
//! Infinite eigenvalues are split off first: while the leading block of the
//! triangular factor is numerically singular, a left singular vector of that
//! block is rotated into the last row, which exposes a `1x1` block with zero
//! `E`-part at the bottom. The remaining leading block has a nonsingular
//! `E`-part and is reduced to Hessenberg-triangular form and iterated with
//! the implicit double-shift QZ sweep.
//!
//! Invariant kept by every routine here: `A = Q * S * Z^T` and
//! `E = Q * T * Z^T` with `Q`, `Z` orthogonal.

use num_complex::Complex64;

use super::{hstack, vstack, RealMatrix};
use crate::error::{GeoError, Result};

const EPS: f64 = f64::EPSILON;
const MAX_SWEEPS_PER_EIGENVALUE: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Block {
    pub start: usize,
    pub size: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct FiniteSchur {
    pub s: RealMatrix,
    pub t: RealMatrix,
    pub q: RealMatrix,
    pub z: RealMatrix,
    /// Diagonal blocks of the leading `finite x finite` part.
    pub blocks: Vec<Block>,
}

impl FiniteSchur {
    /// Generalized Schur form of `(a, e)` with the finite eigenvalues in the
    /// leading block. `tol` is the relative threshold under which the
    /// `E`-part is considered singular (i.e. an infinite eigenvalue remains).
    pub fn compute(a: &RealMatrix, e: &RealMatrix, tol: f64) -> Result<Self> {
        let n = a.nrows();
        let mut f = FiniteSchur {
            s: a.clone(),
            t: e.clone(),
            q: RealMatrix::identity(n, n),
            z: RealMatrix::identity(n, n),
            blocks: Vec::new(),
        };
        let finite = f.deflate_infinite(tol)?;
        f.hessenberg_triangular(finite);
        f.iterate(finite)?;
        f.blocks = f.standardize(finite);
        Ok(f)
    }

    #[cfg(test)]
    pub fn finite(&self) -> usize {
        self.blocks.iter().map(|b| b.size).sum()
    }

    pub fn block_eigenvalues(&self, b: Block) -> Vec<Complex64> {
        let j = b.start;
        if b.size == 1 {
            return vec![Complex64::new(self.s[(j, j)] / self.t[(j, j)], 0.0)];
        }
        let (a2, a1, a0) = quadratic(&self.s, &self.t, j);
        let disc = a1 * a1 - 4.0 * a2 * a0;
        if disc >= 0.0 {
            let r = disc.sqrt();
            vec![
                Complex64::new((-a1 + r) / (2.0 * a2), 0.0),
                Complex64::new((-a1 - r) / (2.0 * a2), 0.0),
            ]
        } else {
            let re = -a1 / (2.0 * a2);
            let im = (-disc).sqrt() / (2.0 * a2.abs());
            vec![Complex64::new(re, im), Complex64::new(re, -im)]
        }
    }

    fn deflate_infinite(&mut self, tol: f64) -> Result<usize> {
        let n = self.s.nrows();
        let e_scale = super::norm2(&self.t);
        let a_scale = super::norm2(&self.s);
        let mut k = n;
        while k > 0 {
            if e_scale == 0.0 {
                // E = 0: every eigenvalue is infinite
                if a_scale == 0.0 {
                    return Err(GeoError::SingularPencil);
                }
            } else {
                let tk = self.t.view((0, 0), (k, k)).into_owned();
                let svd = super::full_svd(&tk)?;
                if svd.s[k - 1] > tol * e_scale {
                    break;
                }
                let w: Vec<f64> = svd.u.column(k - 1).iter().copied().collect();
                self.rotate_rows_onto_last(w, k);
            }
            // last row of the leading block of S: rotate its mass into column k-1
            let mut x: Vec<f64> = (0..k).map(|c| self.s[(k - 1, c)]).collect();
            let xnorm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if xnorm <= tol * a_scale.max(f64::MIN_POSITIVE) {
                return Err(GeoError::SingularPencil);
            }
            for i in 0..k - 1 {
                let (c, s) = col_zeroing(x[i], x[i + 1]);
                let (xi, xj) = (x[i], x[i + 1]);
                x[i] = c * xi + s * xj;
                x[i + 1] = -s * xi + c * xj;
                rot_cols(&mut self.s, i, i + 1, c, s);
                rot_cols(&mut self.t, i, i + 1, c, s);
                rot_cols(&mut self.z, i, i + 1, c, s);
            }
            for c in 0..k - 1 {
                self.s[(k - 1, c)] = 0.0;
            }
            for c in 0..k {
                self.t[(k - 1, c)] = 0.0;
            }
            k -= 1;
        }
        Ok(k)
    }

    /// Left rotations within rows `0..k` taking the unit vector `w` to `±e_{k-1}`.
    fn rotate_rows_onto_last(&mut self, mut w: Vec<f64>, k: usize) {
        for i in 0..k - 1 {
            let (c, s) = col_zeroing(w[i], w[i + 1]);
            let (wi, wj) = (w[i], w[i + 1]);
            w[i] = c * wi + s * wj;
            w[i + 1] = -s * wi + c * wj;
            rot_rows(&mut self.s, i, i + 1, c, s);
            rot_rows(&mut self.t, i, i + 1, c, s);
            rot_cols(&mut self.q, i, i + 1, c, s);
        }
    }

    fn hessenberg_triangular(&mut self, k: usize) {
        for j in 0..k {
            for i in (j + 1..k).rev() {
                let (c, s) = givens(self.t[(i - 1, j)], self.t[(i, j)]);
                self.left(i - 1, i, c, s);
                self.t[(i, j)] = 0.0;
            }
        }
        for j in 0..k.saturating_sub(2) {
            for i in (j + 2..k).rev() {
                let (c, s) = givens(self.s[(i - 1, j)], self.s[(i, j)]);
                self.left(i - 1, i, c, s);
                self.s[(i, j)] = 0.0;
                let (c, s) = col_zeroing(self.t[(i, i - 1)], self.t[(i, i)]);
                self.right(i - 1, i, c, s);
                self.t[(i, i - 1)] = 0.0;
            }
        }
    }

    fn left(&mut self, i: usize, j: usize, c: f64, s: f64) {
        rot_rows(&mut self.s, i, j, c, s);
        rot_rows(&mut self.t, i, j, c, s);
        rot_cols(&mut self.q, i, j, c, s);
    }

    fn right(&mut self, i: usize, j: usize, c: f64, s: f64) {
        rot_cols(&mut self.s, i, j, c, s);
        rot_cols(&mut self.t, i, j, c, s);
        rot_cols(&mut self.z, i, j, c, s);
    }

    fn negligible_subdiag(&self, l: usize, s_norm: f64) -> bool {
        let mut scale = self.s[(l - 1, l - 1)].abs() + self.s[(l, l)].abs();
        if scale == 0.0 {
            scale = s_norm;
        }
        self.s[(l, l - 1)].abs() <= EPS * scale
    }

    fn iterate(&mut self, k: usize) -> Result<()> {
        let s_norm = self.s.view((0, 0), (k, k)).norm();
        let mut hi = k;
        let mut sweeps = 0usize;
        let mut since_deflation = 0usize;
        while hi > 0 {
            let mut lo = hi - 1;
            while lo > 0 {
                if self.negligible_subdiag(lo, s_norm) {
                    self.s[(lo, lo - 1)] = 0.0;
                    break;
                }
                lo -= 1;
            }
            match hi - lo {
                1 | 2 => {
                    hi = lo;
                    since_deflation = 0;
                    continue;
                }
                _ => {}
            }
            sweeps += 1;
            since_deflation += 1;
            if sweeps > MAX_SWEEPS_PER_EIGENVALUE * k {
                return Err(GeoError::NumericalInconsistency(
                    "QZ iteration did not converge".into(),
                ));
            }
            self.double_shift_sweep(lo, hi, since_deflation % 11 == 10);
        }
        Ok(())
    }

    fn double_shift_sweep(&mut self, lo: usize, hi: usize, exceptional: bool) {
        let b = hi - 2;
        let (h00, h01, h10, h11) = (
            self.s[(b, b)],
            self.s[(b, b + 1)],
            self.s[(b + 1, b)],
            self.s[(b + 1, b + 1)],
        );
        let (t00, t01, t11) = (self.t[(b, b)], self.t[(b, b + 1)], self.t[(b + 1, b + 1)]);
        // bottom 2x2 of S T^{-1}
        let m00 = h00 / t00;
        let m01 = (h01 - h00 * t01 / t00) / t11;
        let m10 = h10 / t00;
        let m11 = (h11 - h10 * t01 / t00) / t11;
        let (mut sum, mut prod) = (m00 + m11, m00 * m11 - m01 * m10);
        if exceptional {
            let x = (self.s[(hi - 1, hi - 2)] / self.t[(hi - 2, hi - 2)]).abs()
                + (self.s[(hi - 2, hi - 3)] / self.t[(hi - 3, hi - 3)]).abs();
            sum = 1.5 * x;
            prod = x * x;
        }

        let l = lo;
        let y0 = self.s[(l, l)] / self.t[(l, l)];
        let y1 = self.s[(l + 1, l)] / self.t[(l, l)];
        let x1 = y1 / self.t[(l + 1, l + 1)];
        let x0 = (y0 - self.t[(l, l + 1)] * x1) / self.t[(l, l)];
        let v = [
            self.s[(l, l)] * x0 + self.s[(l, l + 1)] * x1 - sum * y0 + prod,
            self.s[(l + 1, l)] * x0 + self.s[(l + 1, l + 1)] * x1 - sum * y1,
            self.s[(l + 2, l + 1)] * x1,
        ];

        for k in lo..hi - 2 {
            let (x, y, z) = if k == lo {
                (v[0], v[1], v[2])
            } else {
                (
                    self.s[(k, k - 1)],
                    self.s[(k + 1, k - 1)],
                    self.s[(k + 2, k - 1)],
                )
            };
            let (c, s) = givens(y, z);
            self.left(k + 1, k + 2, c, s);
            let (c, s) = givens(x, y.hypot(z));
            self.left(k, k + 1, c, s);
            if k > lo {
                self.s[(k + 1, k - 1)] = 0.0;
                self.s[(k + 2, k - 1)] = 0.0;
            }
            let (c, s) = col_zeroing(self.t[(k + 2, k + 1)], self.t[(k + 2, k + 2)]);
            self.right(k + 1, k + 2, c, s);
            self.t[(k + 2, k + 1)] = 0.0;
            let (c, s) = col_zeroing(self.t[(k + 2, k)], self.t[(k + 2, k + 2)]);
            self.right(k, k + 2, c, s);
            self.t[(k + 2, k)] = 0.0;
            let (c, s) = col_zeroing(self.t[(k + 1, k)], self.t[(k + 1, k + 1)]);
            self.right(k, k + 1, c, s);
            self.t[(k + 1, k)] = 0.0;
        }
        let k = hi - 2;
        let (c, s) = givens(self.s[(k, k - 1)], self.s[(k + 1, k - 1)]);
        self.left(k, k + 1, c, s);
        self.s[(k + 1, k - 1)] = 0.0;
        let (c, s) = col_zeroing(self.t[(k + 1, k)], self.t[(k + 1, k + 1)]);
        self.right(k, k + 1, c, s);
        self.t[(k + 1, k)] = 0.0;
    }

    /// Splits 2x2 blocks with real eigenvalues and returns the block list.
    fn standardize(&mut self, k: usize) -> Vec<Block> {
        let mut blocks = Vec::new();
        let mut j = 0;
        while j < k {
            if j + 1 < k && self.s[(j + 1, j)] != 0.0 {
                if self.split_real_pair(j) {
                    blocks.push(Block { start: j, size: 1 });
                    blocks.push(Block {
                        start: j + 1,
                        size: 1,
                    });
                } else {
                    blocks.push(Block { start: j, size: 2 });
                }
                j += 2;
            } else {
                blocks.push(Block { start: j, size: 1 });
                j += 1;
            }
        }
        blocks
    }

    /// Triangularizes the 2x2 block at `j` when its eigenvalues are real.
    fn split_real_pair(&mut self, j: usize) -> bool {
        let (a2, a1, a0) = quadratic(&self.s, &self.t, j);
        let disc = a1 * a1 - 4.0 * a2 * a0;
        if disc < 0.0 {
            return false;
        }
        // numerically stable root of a2 x^2 + a1 x + a0
        let sgn = if a1 >= 0.0 { 1.0 } else { -1.0 };
        let q = -0.5 * (a1 + sgn * disc.sqrt());
        let lambda = if q != 0.0 { a0 / q } else { -a1 / (2.0 * a2) };
        let m = [
            [
                self.s[(j, j)] - lambda * self.t[(j, j)],
                self.s[(j, j + 1)] - lambda * self.t[(j, j + 1)],
            ],
            [
                self.s[(j + 1, j)],
                self.s[(j + 1, j + 1)] - lambda * self.t[(j + 1, j + 1)],
            ],
        ];
        let row = if m[0][0].hypot(m[0][1]) >= m[1][0].hypot(m[1][1]) {
            m[0]
        } else {
            m[1]
        };
        // right null vector of m, rotated into the first column
        let (v0, v1) = if row[0] == 0.0 && row[1] == 0.0 {
            (1.0, 0.0)
        } else {
            (-row[1], row[0])
        };
        let r = v0.hypot(v1);
        let (c, s) = (v0 / r, v1 / r);
        // new first column = c*col_j + s*col_{j+1}
        self.right(j, j + 1, c, s);
        let (tv0, tv1) = (self.t[(j, j)], self.t[(j + 1, j)]);
        let (sv0, sv1) = (self.s[(j, j)], self.s[(j + 1, j)]);
        let (c, s) = if tv0.hypot(tv1) >= sv0.hypot(sv1) {
            givens(tv0, tv1)
        } else {
            givens(sv0, sv1)
        };
        self.left(j, j + 1, c, s);
        self.s[(j + 1, j)] = 0.0;
        self.t[(j + 1, j)] = 0.0;
        true
    }

    /// Swaps the adjacent diagonal blocks starting at `j` (sizes `p` then `q`).
    pub fn swap(&mut self, j: usize, p: usize, q: usize) -> Result<()> {
        let w = p + q;
        let a11 = self.s.view((j, j), (p, p)).into_owned();
        let a12 = self.s.view((j, j + p), (p, q)).into_owned();
        let a22 = self.s.view((j + p, j + p), (q, q)).into_owned();
        let b11 = self.t.view((j, j), (p, p)).into_owned();
        let b12 = self.t.view((j, j + p), (p, q)).into_owned();
        let b22 = self.t.view((j + p, j + p), (q, q)).into_owned();

        // A11 R - L A22 = -A12, B11 R - L B22 = -B12
        let iq = RealMatrix::identity(q, q);
        let ip = RealMatrix::identity(p, p);
        let top = hstack(&[&iq.kronecker(&a11), &(-a22.transpose().kronecker(&ip))]);
        let bottom = hstack(&[&iq.kronecker(&b11), &(-b22.transpose().kronecker(&ip))]);
        let sys = vstack(&[&top, &bottom]);
        let rhs = vstack(&[
            &RealMatrix::from_column_slice(p * q, 1, (-&a12).as_slice()),
            &RealMatrix::from_column_slice(p * q, 1, (-&b12).as_slice()),
        ]);
        let sol = sys
            .full_piv_lu()
            .solve(&rhs)
            .filter(|x| x.iter().all(|v| v.is_finite()))
            .ok_or_else(|| {
                GeoError::NumericalInconsistency("cannot swap blocks with equal eigenvalues".into())
            })?;
        let r = RealMatrix::from_column_slice(p, q, &sol.as_slice()[..p * q]);
        let l = RealMatrix::from_column_slice(p, q, &sol.as_slice()[p * q..]);

        let zr = full_orthogonal(&vstack(&[&r, &iq]));
        let ql = full_orthogonal(&vstack(&[&l, &iq]));

        let n = self.s.nrows();
        for m in [&mut self.s, &mut self.t] {
            let rows = m.view((j, 0), (w, n)).into_owned();
            m.view_mut((j, 0), (w, n))
                .copy_from(&(ql.transpose() * rows));
            let cols = m.view((0, j), (n, w)).into_owned();
            m.view_mut((0, j), (n, w)).copy_from(&(cols * &zr));
        }
        let qc = self.q.view((0, j), (n, w)).into_owned();
        self.q.view_mut((0, j), (n, w)).copy_from(&(qc * &ql));
        let zc = self.z.view((0, j), (n, w)).into_owned();
        self.z.view_mut((0, j), (n, w)).copy_from(&(zc * &zr));

        let scale = self.s.view((j, j), (w, w)).norm() + self.t.view((j, j), (w, w)).norm();
        let leak = self
            .s
            .view((j + q, j), (p, q))
            .amax()
            .max(self.t.view((j + q, j), (p, q)).amax());
        if leak > 1e-8 * scale.max(1.0) {
            return Err(GeoError::NumericalInconsistency(format!(
                "block swap left residual {leak:.2e}"
            )));
        }
        self.s.view_mut((j + q, j), (p, q)).fill(0.0);
        self.t.view_mut((j + q, j), (p, q)).fill(0.0);

        for (start, size) in [(j, q), (j + q, p)] {
            if size == 2 {
                let (c, s) =
                    col_zeroing(self.t[(start + 1, start)], self.t[(start + 1, start + 1)]);
                self.right(start, start + 1, c, s);
                self.t[(start + 1, start)] = 0.0;
            }
        }
        Ok(())
    }

    /// Moves the selected blocks to the top (stable order). Returns how many
    /// eigenvalues the selected leading block holds.
    pub fn reorder(&mut self, selected: &[bool]) -> Result<usize> {
        assert_eq!(selected.len(), self.blocks.len());
        let mut order: Vec<(Block, bool)> = self
            .blocks
            .iter()
            .copied()
            .zip(selected.iter().copied())
            .collect();
        let mut target = 0;
        for b in 0..order.len() {
            if !order[b].1 {
                continue;
            }
            let mut pos = b;
            while pos > target {
                let (first, second) = (order[pos - 1].0, order[pos].0);
                self.swap(first.start, first.size, second.size)?;
                order[pos - 1] = (
                    Block {
                        start: first.start,
                        size: second.size,
                    },
                    true,
                );
                order[pos] = (
                    Block {
                        start: first.start + second.size,
                        size: first.size,
                    },
                    false,
                );
                pos -= 1;
            }
            target += 1;
        }
        self.blocks = order.iter().map(|(b, _)| *b).collect();
        Ok(order.iter().filter(|(_, s)| *s).map(|(b, _)| b.size).sum())
    }
}

/// Coefficients of `det(S_jj - x T_jj)` for the 2x2 block at `j` (T block upper triangular).
fn quadratic(s: &RealMatrix, t: &RealMatrix, j: usize) -> (f64, f64, f64) {
    let (h00, h01, h10, h11) = (s[(j, j)], s[(j, j + 1)], s[(j + 1, j)], s[(j + 1, j + 1)]);
    let (t00, t01, t11) = (t[(j, j)], t[(j, j + 1)], t[(j + 1, j + 1)]);
    (
        t00 * t11,
        -(h00 * t11 + h11 * t00) + t01 * h10,
        h00 * h11 - h01 * h10,
    )
}

/// Orthogonal matrix whose leading columns span the columns of `x` (full column rank).
fn full_orthogonal(x: &RealMatrix) -> RealMatrix {
    let n = x.nrows();
    let aug = hstack(&[x, &RealMatrix::identity(n, n)]);
    aug.qr().q()
}

/// `(c, s)` with `[c s; -s c] [a; b] = [r; 0]`.
fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        return (1.0, 0.0);
    }
    let r = a.hypot(b);
    (a / r, b / r)
}

/// `(c, s)` such that the rotation `x_i' = c x_i + s x_j`, `x_j' = -s x_i + c x_j`
/// zeroes `x_i` and moves the mass to `x_j`.
fn col_zeroing(a: f64, b: f64) -> (f64, f64) {
    if a == 0.0 {
        return (1.0, 0.0);
    }
    let r = a.hypot(b);
    (b / r, -a / r)
}

fn rot_rows(m: &mut RealMatrix, i: usize, j: usize, c: f64, s: f64) {
    for col in 0..m.ncols() {
        let (x, y) = (m[(i, col)], m[(j, col)]);
        m[(i, col)] = c * x + s * y;
        m[(j, col)] = -s * x + c * y;
    }
}

fn rot_cols(m: &mut RealMatrix, i: usize, j: usize, c: f64, s: f64) {
    for row in 0..m.nrows() {
        let (x, y) = (m[(row, i)], m[(row, j)]);
        m[(row, i)] = c * x + s * y;
        m[(row, j)] = -s * x + c * y;
    }
}
