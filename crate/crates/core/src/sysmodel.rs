//! Continuous-time LTI systems `dx/dt = Ax + Bu`, `y = Cx + Du`.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};
use crate::linalg::RealMatrix;

pub const DEFAULT_ENTRY_RANGE: (i64, i64) = (-3, 3);

#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceSystem {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub a: RealMatrix,
    pub b: RealMatrix,
    pub c: RealMatrix,
    pub d: RealMatrix,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemFile {
    n: usize,
    m: usize,
    p: usize,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    c: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    d: Vec<Vec<f64>>,
}

fn rows_of(m: &RealMatrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix_from_rows(
    field: &str,
    rows: &[Vec<f64>],
    nrows: usize,
    ncols: usize,
) -> Result<RealMatrix> {
    if rows.len() != nrows {
        return Err(GeoError::ShapeMismatch {
            field: field.into(),
            detail: format!("expected {nrows} rows, found {}", rows.len()),
        });
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != ncols {
            return Err(GeoError::ShapeMismatch {
                field: field.into(),
                detail: format!("row {i} has length {}, expected {ncols}", r.len()),
            });
        }
    }
    Ok(RealMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

impl StateSpaceSystem {
    /// Builds and validates a system from its four matrices.
    pub fn new(a: RealMatrix, b: RealMatrix, c: RealMatrix, d: RealMatrix) -> Result<Self> {
        let sys = StateSpaceSystem {
            n: a.nrows(),
            m: b.ncols(),
            p: c.nrows(),
            a,
            b,
            c,
            d,
        };
        sys.validate()?;
        Ok(sys)
    }

    /// Row-major convenience constructor, mainly for fixtures.
    pub fn from_rows(a: &[&[f64]], b: &[&[f64]], c: &[&[f64]], d: &[&[f64]]) -> Result<Self> {
        let to_vec = |x: &[&[f64]]| x.iter().map(|r| r.to_vec()).collect::<Vec<_>>();
        let n = a.len();
        let m = b.first().map_or(0, |r| r.len());
        let p = c.len();
        let sys = StateSpaceSystem {
            n,
            m,
            p,
            a: matrix_from_rows("A", &to_vec(a), n, n)?,
            b: matrix_from_rows("B", &to_vec(b), n, m)?,
            c: matrix_from_rows("C", &to_vec(c), p, n)?,
            d: matrix_from_rows("D", &to_vec(d), p, m)?,
        };
        sys.validate()?;
        Ok(sys)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("n", self.n), ("m", self.m), ("p", self.p)] {
            if v == 0 {
                return Err(GeoError::ShapeMismatch {
                    field: name.into(),
                    detail: "must be at least 1".into(),
                });
            }
        }
        let expected = [
            ("A", &self.a, self.n, self.n),
            ("B", &self.b, self.n, self.m),
            ("C", &self.c, self.p, self.n),
            ("D", &self.d, self.p, self.m),
        ];
        for (name, mat, r, c) in expected {
            if mat.shape() != (r, c) {
                return Err(GeoError::ShapeMismatch {
                    field: name.into(),
                    detail: format!("expected {r}x{c}, found {}x{}", mat.nrows(), mat.ncols()),
                });
            }
        }
        for (name, mat, _, _) in expected {
            for j in 0..mat.ncols() {
                for i in 0..mat.nrows() {
                    if !mat[(i, j)].is_finite() {
                        return Err(GeoError::NonFiniteEntry {
                            field: name.into(),
                            row: i,
                            col: j,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn is_square(&self) -> bool {
        self.p == self.m
    }

    pub fn to_json(&self) -> Result<String> {
        self.validate()?;
        let file = SystemFile {
            n: self.n,
            m: self.m,
            p: self.p,
            a: rows_of(&self.a),
            b: rows_of(&self.b),
            c: rows_of(&self.c),
            d: rows_of(&self.d),
        };
        serde_json::to_string_pretty(&file).map_err(|e| GeoError::Parse(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: SystemFile =
            serde_json::from_str(text).map_err(|e| GeoError::Parse(e.to_string()))?;
        let sys = StateSpaceSystem {
            n: f.n,
            m: f.m,
            p: f.p,
            a: matrix_from_rows("A", &f.a, f.n, f.n)?,
            b: matrix_from_rows("B", &f.b, f.n, f.m)?,
            c: matrix_from_rows("C", &f.c, f.p, f.n)?,
            d: matrix_from_rows("D", &f.d, f.p, f.m)?,
        };
        sys.validate()?;
        Ok(sys)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| GeoError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = self.to_json()?;
        text.push('\n');
        fs::write(path, text).map_err(|e| GeoError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

/// Random system with integer entries drawn uniformly from `entry_range`
/// (inclusive), filling `A`, `B`, `C`, `D` in column-major order.
pub fn random_system(
    n: usize,
    m: usize,
    p: usize,
    seed: u64,
    entry_range: (i64, i64),
) -> StateSpaceSystem {
    let (lo, hi) = entry_range;
    assert!(n >= 1 && m >= 1 && p >= 1, "dimensions must be positive");
    assert!(lo <= hi, "empty entry range");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw =
        |r: usize, c: usize| RealMatrix::from_fn(r, c, |_, _| rng.gen_range(lo..=hi) as f64);
    let a = draw(n, n);
    let b = draw(n, m);
    let c = draw(p, n);
    let d = draw(p, m);
    StateSpaceSystem {
        n,
        m,
        p,
        a,
        b,
        c,
        d,
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn validate_examples() {
        assert!(s1().validate().is_ok());
        let mut bad = s1();
        bad.b = RealMatrix::zeros(3, 1);
        assert!(
            matches!(bad.validate(), Err(GeoError::ShapeMismatch { field, .. }) if field == "B")
        );
        let mut nan = s1();
        nan.a[(1, 0)] = f64::NAN;
        assert_eq!(
            nan.validate(),
            Err(GeoError::NonFiniteEntry {
                field: "A".into(),
                row: 1,
                col: 0
            })
        );
    }

    #[test]
    fn random_is_deterministic() {
        let x = random_system(2, 1, 1, 0, DEFAULT_ENTRY_RANGE);
        let y = random_system(2, 1, 1, 0, DEFAULT_ENTRY_RANGE);
        assert_eq!(x, y);
        assert!(x.validate().is_ok());
        assert!(x
            .a
            .iter()
            .chain(x.b.iter())
            .all(|v| v.fract() == 0.0 && v.abs() <= 3.0));
        assert_ne!(x, random_system(2, 1, 1, 1, DEFAULT_ENTRY_RANGE));
    }

    #[test]
    fn degenerate_range_gives_zero_system() {
        let z = random_system(1, 1, 1, 7, (0, 0));
        assert!(z
            .a
            .iter()
            .chain(z.b.iter())
            .chain(z.c.iter())
            .chain(z.d.iter())
            .all(|v| *v == 0.0));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s1.json");
        s1().save(&path).unwrap();
        assert_eq!(StateSpaceSystem::load(&path).unwrap(), s1());
    }

    #[test]
    fn missing_field_is_named() {
        let text = r#"{"n":1,"m":1,"p":1,"A":[[1]],"B":[[1]],"C":[[1]]}"#;
        match StateSpaceSystem::from_json(text) {
            Err(GeoError::Parse(msg)) => assert!(msg.contains("`D`"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_field_rejected() {
        let text = r#"{"n":1,"m":1,"p":1,"A":[[1]],"B":[[1]],"C":[[1]],"D":[[0]],"E":[[1]]}"#;
        assert!(matches!(
            StateSpaceSystem::from_json(text),
            Err(GeoError::Parse(_))
        ));
    }

    #[test]
    fn short_row_is_shape_mismatch() {
        let text = r#"{"n":2,"m":1,"p":1,"A":[[1,0],[0]],"B":[[1],[0]],"C":[[1,0]],"D":[[0]]}"#;
        assert!(matches!(
            StateSpaceSystem::from_json(text),
            Err(GeoError::ShapeMismatch { field, .. }) if field == "A"
        ));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            StateSpaceSystem::load("/nonexistent/sys.json"),
            Err(GeoError::Io { .. })
        ));
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(
            (n, m, p, vals) in (1usize..4, 1usize..4, 1usize..4)
                .prop_flat_map(|(n, m, p)| (Just(n), Just(m), Just(p),
                    proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO, (n + p) * (n + m))))
        ) {
            let mut it = vals.into_iter();
            let mut take = |r: usize, c: usize| RealMatrix::from_fn(r, c, |_, _| it.next().unwrap());
            let a = take(n, n);
            let b = take(n, m);
            let c = take(p, n);
            let d = take(p, m);
            let sys = StateSpaceSystem::new(a, b, c, d).unwrap();
            let back = StateSpaceSystem::from_json(&sys.to_json().unwrap()).unwrap();
            for (x, y) in sys.a.iter().chain(sys.b.iter()).chain(sys.c.iter()).chain(sys.d.iter())
                .zip(back.a.iter().chain(back.b.iter()).chain(back.c.iter()).chain(back.d.iter())) {
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }
}
