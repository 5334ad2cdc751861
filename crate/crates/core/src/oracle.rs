//! Fixpoint recursions for the fast and slow subspaces, and a report that
//! compares them with the closed forms.

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{GeoError, Result};
use crate::linalg::{
    hstack, image_basis_scaled, norm2, nullspace_basis, subspace_equal, subspace_intersection,
    vstack, RealMatrix, SubspaceBasis,
};
use crate::markov::{fast_space, impulsive_space};
use crate::slowspace::weakly_unobservable;
use crate::sysmodel::StateSpaceSystem;
use crate::transferdim::{dims_from_transfer, is_left_invertible};

/// Rows spanning the orthogonal complement of `s`, i.e. a left annihilator of its basis.
fn annihilator(s: &SubspaceBasis) -> RealMatrix {
    s.complement().basis().transpose()
}

/// `R_0 = {0}`, `R_{i+1} = [A B] ((R_i x R^m) ∩ ker [C D])`, up to and including the fixpoint.
pub fn fast_space_iterates(sys: &StateSpaceSystem, tol: f64) -> Result<Vec<SubspaceBasis>> {
    let (n, m) = (sys.n, sys.m);
    let ab = hstack(&[&sys.a, &sys.b]);
    let ab_norm = norm2(&ab);
    let cd = hstack(&[&sys.c, &sys.d]);
    let mut iterates = vec![SubspaceBasis::zero(n, tol)];
    for _ in 0..=n + 1 {
        let current = iterates.last().expect("non-empty");
        let q = annihilator(current);
        let constraint = vstack(&[&cd, &hstack(&[&q, &RealMatrix::zeros(q.nrows(), m)])]);
        let kernel = nullspace_basis(&constraint, tol)?;
        let next = image_basis_scaled(&(&ab * kernel.basis()), tol, ab_norm)?;
        let done = subspace_equal(&next, current, tol)?;
        iterates.push(next);
        if done {
            break;
        }
    }
    Ok(iterates)
}

pub fn recursive_fast_space(sys: &StateSpaceSystem, tol: f64) -> Result<SubspaceBasis> {
    Ok(fast_space_iterates(sys, tol)?.pop().expect("non-empty"))
}

/// `V_0 = R^n`, `V_{i+1} = {x : exists u, Ax + Bu in V_i and Cx + Du = 0}`, up to the fixpoint.
pub fn weakly_unobservable_iterates(
    sys: &StateSpaceSystem,
    tol: f64,
) -> Result<Vec<SubspaceBasis>> {
    let n = sys.n;
    let cd = hstack(&[&sys.c, &sys.d]);
    let mut iterates = vec![SubspaceBasis::full(n, tol)];
    for _ in 0..=n + 1 {
        let current = iterates.last().expect("non-empty");
        let p = annihilator(current);
        let constraint = vstack(&[&hstack(&[&(&p * &sys.a), &(&p * &sys.b)]), &cd]);
        let kernel = nullspace_basis(&constraint, tol)?;
        let next = image_basis_scaled(&kernel.basis().rows(0, n).into_owned(), tol, 1.0)?;
        let done = subspace_equal(&next, current, tol)?;
        iterates.push(next);
        if done {
            break;
        }
    }
    Ok(iterates)
}

pub fn recursive_weakly_unobservable(sys: &StateSpaceSystem, tol: f64) -> Result<SubspaceBasis> {
    Ok(weakly_unobservable_iterates(sys, tol)?
        .pop()
        .expect("non-empty"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Agree,
    Disagree,
    Inapplicable,
    /// The closed form raised a numerical inconsistency.
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckEntry {
    pub quantity: &'static str,
    pub closed_form: Value,
    pub oracle: Value,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossCheckReport {
    pub entries: Vec<CheckEntry>,
}

impl CrossCheckReport {
    /// Entries that compared two values.
    pub fn compared(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| matches!(e.verdict, Verdict::Agree | Verdict::Disagree))
            .count()
    }

    pub fn disagreements(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| matches!(e.verdict, Verdict::Disagree | Verdict::Error))
            .count()
    }

    pub fn entry(&self, quantity: &str) -> Option<&CheckEntry> {
        self.entries.iter().find(|e| e.quantity == quantity)
    }
}

pub fn subspace_json(s: &SubspaceBasis) -> Value {
    let basis: Vec<Vec<f64>> = s
        .basis()
        .column_iter()
        .map(|c| c.iter().copied().collect())
        .collect();
    json!({ "dim": s.dim(), "basis": basis })
}

fn failed(quantity: &'static str, oracle: Value, err: &GeoError) -> CheckEntry {
    let verdict = match err {
        GeoError::NumericalInconsistency(_) => Verdict::Error,
        _ => Verdict::Inapplicable,
    };
    CheckEntry {
        quantity,
        closed_form: Value::Null,
        oracle,
        verdict,
        note: Some(err.to_string()),
    }
}

fn compare(quantity: &'static str, closed_form: Value, oracle: Value, agree: bool) -> CheckEntry {
    let verdict = if agree {
        Verdict::Agree
    } else {
        Verdict::Disagree
    };
    CheckEntry {
        quantity,
        closed_form,
        oracle,
        verdict,
        note: None,
    }
}

fn inapplicable(quantity: &'static str, note: impl Into<String>) -> CheckEntry {
    CheckEntry {
        quantity,
        closed_form: Value::Null,
        oracle: Value::Null,
        verdict: Verdict::Inapplicable,
        note: Some(note.into()),
    }
}

/// Runs every applicable closed form against its oracle. Subspaces are
/// compared with `subspace_equal` at `10 * tol`.
pub fn cross_check(sys: &StateSpaceSystem, tol: f64) -> Result<CrossCheckReport> {
    sys.validate()?;
    let cmp_tol = 10.0 * tol;
    let mut entries = Vec::new();

    let oracle_fast = recursive_fast_space(sys, tol)?;
    let closed_fast = fast_space(sys, tol);
    match &closed_fast {
        Ok(rs) => entries.push(compare(
            "fast_space",
            subspace_json(rs),
            subspace_json(&oracle_fast),
            subspace_equal(rs, &oracle_fast, cmp_tol)?,
        )),
        Err(e) => entries.push(failed("fast_space", subspace_json(&oracle_fast), e)),
    }

    let oracle_slow = recursive_weakly_unobservable(sys, tol)?;
    let closed_slow = weakly_unobservable(sys, tol).map(|(ow, _)| ow);
    match &closed_slow {
        Ok(ow) => entries.push(compare(
            "slow_space",
            subspace_json(ow),
            subspace_json(&oracle_slow),
            subspace_equal(ow, &oracle_slow, cmp_tol)?,
        )),
        Err(e) => entries.push(failed("slow_space", subspace_json(&oracle_slow), e)),
    }

    let imp = impulsive_space(sys, tol);
    match &imp {
        Ok(u) => entries.push(compare(
            "f_vs_dim_fast_space",
            json!(u.f),
            json!(oracle_fast.dim()),
            u.f == oracle_fast.dim(),
        )),
        Err(e) => entries.push(failed("f_vs_dim_fast_space", json!(oracle_fast.dim()), e)),
    }

    if is_left_invertible(sys, tol)? {
        match (&dims_from_transfer(sys, tol), &imp) {
            (Ok(d), Ok(u)) => {
                entries.push(compare("n_f_vs_f", json!(d.n_f), json!(u.f), d.n_f == u.f))
            }
            (Err(e), _) | (_, Err(e)) => entries.push(failed("n_f_vs_f", Value::Null, e)),
        }
    } else {
        entries.push(inapplicable(
            "n_f_vs_f",
            "transfer matrix is not left-invertible",
        ));
    }

    match (&closed_slow, &closed_fast) {
        (Ok(ow), Ok(rs)) => {
            let meet = subspace_intersection(ow, rs, cmp_tol)?;
            let ok = meet.dim() == 0 && ow.dim() + rs.dim() == sys.n;
            entries.push(compare(
                "direct_sum",
                json!({ "dim_slow": ow.dim(), "dim_fast": rs.dim(), "dim_intersection": meet.dim() }),
                json!({ "n": sys.n }),
                ok,
            ));
        }
        (Err(e), _) | (_, Err(e)) => entries.push(match e {
            GeoError::NumericalInconsistency(_) => failed("direct_sum", Value::Null, e),
            _ => inapplicable(
                "direct_sum",
                "requires a square system with invertible transfer matrix",
            ),
        }),
    }

    Ok(CrossCheckReport { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{image_basis, DEFAULT_TOL};
    use crate::sysmodel::fixtures::*;
    use crate::sysmodel::random_system;
    use proptest::prelude::*;

    fn span(cols: &[&[f64]]) -> SubspaceBasis {
        let n = cols[0].len();
        let m = RealMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]);
        image_basis(&m, DEFAULT_TOL).unwrap()
    }

    #[test]
    fn fast_recursion_examples() {
        let it = fast_space_iterates(&s1(), DEFAULT_TOL).unwrap();
        assert!(subspace_equal(&it[1], &span(&[&[0.0, 1.0]]), 1e-12).unwrap());
        assert_eq!(it[2].dim(), 2);
        assert_eq!(recursive_fast_space(&s1(), DEFAULT_TOL).unwrap().dim(), 2);

        assert!(recursive_fast_space(&s2(), DEFAULT_TOL).unwrap().is_zero());

        let s5_fast = recursive_fast_space(&s5(), DEFAULT_TOL).unwrap();
        assert!(subspace_equal(&s5_fast, &span(&[&[1.0, 0.0]]), 1e-12).unwrap());
    }

    #[test]
    fn slow_recursion_examples() {
        assert_eq!(
            recursive_weakly_unobservable(&s2(), DEFAULT_TOL)
                .unwrap()
                .dim(),
            1
        );
        assert!(recursive_weakly_unobservable(&s1(), DEFAULT_TOL)
            .unwrap()
            .is_zero());
        let mut blind = random_system(3, 2, 2, 5, (-3, 3));
        blind.c.fill(0.0);
        blind.d.fill(0.0);
        assert_eq!(
            recursive_weakly_unobservable(&blind, DEFAULT_TOL)
                .unwrap()
                .dim(),
            3
        );
    }

    #[test]
    fn cross_check_examples() {
        for sys in [s1(), s2()] {
            let r = cross_check(&sys, DEFAULT_TOL).unwrap();
            assert_eq!(r.disagreements(), 0, "{r:?}");
            assert!(
                r.entries.iter().all(|e| e.verdict == Verdict::Agree),
                "{r:?}"
            );
        }
        let r = cross_check(&s2(), DEFAULT_TOL).unwrap();
        assert_eq!(r.entry("direct_sum").unwrap().verdict, Verdict::Agree);

        let r = cross_check(&s5(), DEFAULT_TOL).unwrap();
        let fast = r.entry("fast_space").unwrap();
        assert_eq!(fast.verdict, Verdict::Inapplicable);
        assert_eq!(fast.oracle["dim"], 1);
        assert_eq!(r.disagreements(), 0);
    }

    /// Each basis vector v of V admits u with Av + Bu in V and Cv + Du = 0.
    fn slow_certificate(sys: &StateSpaceSystem, v: &SubspaceBasis) -> f64 {
        let p = annihilator(v);
        let lhs = vstack(&[&(&p * &sys.b), &sys.d]);
        let mut worst = 0.0f64;
        for col in v.basis().column_iter() {
            let x = RealMatrix::from_column_slice(col.len(), 1, col.as_slice());
            let rhs = -vstack(&[&(&p * &sys.a * &x), &(&sys.c * &x)]);
            let u = crate::linalg::pseudo_inverse(&lhs, 1e-12).unwrap() * &rhs;
            worst = worst.max((&lhs * u - rhs).norm());
        }
        worst
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn recursion_properties(seed in any::<u64>(), n in 1usize..=6, m in 1usize..=3, p in 1usize..=3) {
            let sys = random_system(n, m, p, seed, (-3, 3));
            let fast = fast_space_iterates(&sys, DEFAULT_TOL).unwrap();
            prop_assert!(fast.len() <= n + 2);
            prop_assert!(fast.windows(2).all(|w| w[0].dim() <= w[1].dim()));
            let slow = weakly_unobservable_iterates(&sys, DEFAULT_TOL).unwrap();
            prop_assert!(slow.len() <= n + 2);
            prop_assert!(slow.windows(2).all(|w| w[0].dim() >= w[1].dim()));

            let v = slow.last().unwrap();
            prop_assert!(slow_certificate(&sys, v) <= 1e-8);

            // R* = [A B]((R* x R^m) ∩ ker [C D])
            let r = fast.last().unwrap();
            let q = annihilator(r);
            let constraint = vstack(&[&hstack(&[&sys.c, &sys.d]), &hstack(&[&q, &RealMatrix::zeros(q.nrows(), m)])]);
            let kernel = nullspace_basis(&constraint, DEFAULT_TOL).unwrap();
            let ab = hstack(&[&sys.a, &sys.b]);
            let image = image_basis_scaled(&(&ab * kernel.basis()), DEFAULT_TOL, norm2(&ab)).unwrap();
            prop_assert!(subspace_equal(&image, r, 1e-8).unwrap());
        }
    }
}
