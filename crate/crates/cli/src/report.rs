//! JSON report written by `geosub compute`.

use geosub_core::linalg::{PencilEigenspace, SubspaceBasis};
use geosub_core::markov::{fast_space, impulsive_space};
use geosub_core::slowspace::{
    friend_feedback, friend_residuals, good_weakly_unobservable, weakly_unobservable,
};
use geosub_core::transferdim::dims_from_transfer;
use geosub_core::{GeoError, StateSpaceSystem};
use serde::Serialize;
use serde_json::{json, Value};

use crate::outcome::{classify, error_kind, Outcome, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Quantity {
    Fast,
    Slow,
    Goodslow,
    Uimp,
    Dims,
    All,
}

impl Quantity {
    pub fn expand(self) -> Vec<Quantity> {
        match self {
            Quantity::All => vec![
                Quantity::Fast,
                Quantity::Slow,
                Quantity::Goodslow,
                Quantity::Uimp,
                Quantity::Dims,
            ],
            q => vec![q],
        }
    }

    fn name(self) -> &'static str {
        match self {
            Quantity::Fast => "fast",
            Quantity::Slow => "slow",
            Quantity::Goodslow => "goodslow",
            Quantity::Uimp => "uimp",
            Quantity::Dims => "dims",
            Quantity::All => "all",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SystemMeta {
    pub n: usize,
    pub m: usize,
    pub p: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Entry {
    pub name: &'static str,
    pub status: Status,
    pub dim: Option<usize>,
    /// Basis vectors, one array per column. Present only when `status` is ok.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basis: Option<Vec<Vec<f64>>>,
    pub diagnostics: Value,
    #[serde(skip)]
    pub outcome: Outcome,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub tol: f64,
    pub system: SystemMeta,
    pub quantities: Vec<Entry>,
}

impl Report {
    pub fn outcome(&self) -> Outcome {
        self.quantities
            .iter()
            .map(|e| e.outcome)
            .max()
            .unwrap_or(Outcome::Ok)
    }
}

fn columns(basis: &SubspaceBasis) -> Vec<Vec<f64>> {
    basis
        .basis()
        .column_iter()
        .map(|c| c.iter().copied().collect())
        .collect()
}

fn ok(
    name: &'static str,
    dim: Option<usize>,
    basis: Option<Vec<Vec<f64>>>,
    diagnostics: Value,
) -> Entry {
    Entry {
        name,
        status: Status::Ok,
        dim,
        basis,
        diagnostics,
        outcome: Outcome::Ok,
    }
}

fn failed(name: &'static str, err: &GeoError) -> Entry {
    let outcome = classify(err);
    Entry {
        name,
        status: outcome.status(),
        dim: None,
        basis: None,
        diagnostics: json!({ "error": error_kind(err), "message": err.to_string() }),
        outcome,
    }
}

fn slow_entry(
    name: &'static str,
    sys: &StateSpaceSystem,
    tol: f64,
    result: geosub_core::Result<(SubspaceBasis, PencilEigenspace)>,
) -> Entry {
    let (space, eig) = match result {
        Ok(x) => x,
        Err(e) => return failed(name, &e),
    };
    let f = match friend_feedback(&eig, tol) {
        Ok(f) => f,
        Err(e) => return failed(name, &e),
    };
    let (ra, rc) = friend_residuals(sys, &eig, &f);
    let eigenvalues: Vec<[f64; 2]> = eig.eigenvalues.iter().map(|z| [z.re, z.im]).collect();
    let friend: Vec<Vec<f64>> = f.row_iter().map(|r| r.iter().copied().collect()).collect();
    ok(
        name,
        Some(space.dim()),
        Some(columns(&space)),
        json!({ "eigenvalues": eigenvalues, "friend_feedback": friend, "friend_residuals": [ra, rc] }),
    )
}

fn entry(q: Quantity, sys: &StateSpaceSystem, tol: f64) -> Entry {
    let name = q.name();
    match q {
        Quantity::Fast => {
            match impulsive_space(sys, tol).and_then(|imp| Ok((imp, fast_space(sys, tol)?))) {
                Ok((imp, rs)) => ok(
                    name,
                    Some(rs.dim()),
                    Some(columns(&rs)),
                    json!({ "f": imp.f, "d": imp.d }),
                ),
                Err(e) => failed(name, &e),
            }
        }
        Quantity::Slow => slow_entry(name, sys, tol, weakly_unobservable(sys, tol)),
        Quantity::Goodslow => slow_entry(name, sys, tol, good_weakly_unobservable(sys, tol)),
        Quantity::Uimp => match impulsive_space(sys, tol) {
            Ok(imp) => {
                let basis = imp
                    .basis
                    .column_iter()
                    .map(|c| c.iter().copied().collect())
                    .collect();
                let order = imp.blocks.len();
                ok(
                    name,
                    Some(imp.f),
                    Some(basis),
                    json!({ "f": imp.f, "d": imp.d, "markov_order": order }),
                )
            }
            Err(e) => failed(name, &e),
        },
        Quantity::Dims => match dims_from_transfer(sys, tol) {
            Ok(d) => ok(
                name,
                None,
                None,
                json!({ "n_s": d.n_s, "n_f": d.n_f, "route": d.route }),
            ),
            Err(e) => failed(name, &e),
        },
        Quantity::All => unreachable!("expanded before evaluation"),
    }
}

pub fn compute(sys: &StateSpaceSystem, what: Quantity, tol: f64) -> Report {
    Report {
        tool: "geosub",
        version: env!("CARGO_PKG_VERSION"),
        tol,
        system: SystemMeta {
            n: sys.n,
            m: sys.m,
            p: sys.p,
        },
        quantities: what
            .expand()
            .into_iter()
            .map(|q| entry(q, sys, tol))
            .collect(),
    }
}
