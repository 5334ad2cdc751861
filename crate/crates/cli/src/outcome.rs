//! Mapping from computation results to report statuses and exit codes.

use geosub_core::GeoError;
use serde::Serialize;

/// Outcome classes, ordered by precedence: when several quantities are
/// computed the process exits with the code of the greatest outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Outcome {
    Ok,
    Inapplicable,
    Infinite,
    Failure,
    Invalid,
}

impl Outcome {
    pub fn exit_code(self) -> u8 {
        match self {
            Outcome::Ok => 0,
            Outcome::Failure => 1,
            Outcome::Invalid => 2,
            Outcome::Inapplicable => 3,
            Outcome::Infinite => 4,
        }
    }

    pub fn status(self) -> Status {
        match self {
            Outcome::Ok => Status::Ok,
            Outcome::Inapplicable | Outcome::Infinite => Status::Inapplicable,
            Outcome::Failure | Outcome::Invalid => Status::Error,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Inapplicable,
    Error,
}

pub fn classify(err: &GeoError) -> Outcome {
    match err {
        GeoError::NotSquare { .. }
        | GeoError::SingularPencil
        | GeoError::NotLeftInvertible
        | GeoError::Inapplicable => Outcome::Inapplicable,
        GeoError::InfiniteImpulsiveSpace { .. } => Outcome::Infinite,
        GeoError::InvalidMatrix(_)
        | GeoError::ShapeMismatch { .. }
        | GeoError::NonFiniteEntry { .. }
        | GeoError::Parse(_)
        | GeoError::Io { .. } => Outcome::Invalid,
        GeoError::NumericalInconsistency(_)
        | GeoError::BoundaryAmbiguity { .. }
        | GeoError::DimensionMismatch { .. }
        | GeoError::InvalidOrder
        | GeoError::NothingToShift
        | GeoError::NoImpulsivePart
        | GeoError::NotAdmissible => Outcome::Failure,
    }
}

/// Short machine-readable name of an error variant.
pub fn error_kind(err: &GeoError) -> &'static str {
    match err {
        GeoError::InvalidMatrix(_) => "invalid_matrix",
        GeoError::DimensionMismatch { .. } => "dimension_mismatch",
        GeoError::SingularPencil => "singular_pencil",
        GeoError::BoundaryAmbiguity { .. } => "boundary_ambiguity",
        GeoError::ShapeMismatch { .. } => "shape_mismatch",
        GeoError::NonFiniteEntry { .. } => "non_finite_entry",
        GeoError::Parse(_) => "parse",
        GeoError::Io { .. } => "io",
        GeoError::InvalidOrder => "invalid_order",
        GeoError::InfiniteImpulsiveSpace { .. } => "infinite_impulsive_space",
        GeoError::NothingToShift => "nothing_to_shift",
        GeoError::NoImpulsivePart => "no_impulsive_part",
        GeoError::NotAdmissible => "not_admissible",
        GeoError::NumericalInconsistency(_) => "numerical_inconsistency",
        GeoError::NotSquare { .. } => "not_square",
        GeoError::NotLeftInvertible => "not_left_invertible",
        GeoError::Inapplicable => "inapplicable",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let all = [
            Outcome::Ok,
            Outcome::Inapplicable,
            Outcome::Infinite,
            Outcome::Failure,
            Outcome::Invalid,
        ];
        let codes: Vec<u8> = all.iter().map(|o| o.exit_code()).collect();
        assert_eq!(codes, [0, 3, 4, 1, 2]);
        assert_eq!(all.iter().copied().max(), Some(Outcome::Invalid));
        assert!(Outcome::Infinite > Outcome::Inapplicable);
    }

    #[test]
    fn error_classes() {
        assert_eq!(
            classify(&GeoError::NotSquare { p: 2, m: 1 }),
            Outcome::Inapplicable
        );
        assert_eq!(classify(&GeoError::SingularPencil), Outcome::Inapplicable);
        assert_eq!(
            classify(&GeoError::NotLeftInvertible),
            Outcome::Inapplicable
        );
        let inf = GeoError::InfiniteImpulsiveSpace {
            n: 2,
            kernel_dims: vec![1, 2, 3],
        };
        assert_eq!(classify(&inf).exit_code(), 4);
        assert_eq!(classify(&GeoError::Parse("x".into())).exit_code(), 2);
        assert_eq!(
            classify(&GeoError::NumericalInconsistency("x".into())).status(),
            Status::Error
        );
    }
}
