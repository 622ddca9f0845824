use thiserror::Error;

use crate::exprfield::ExprError;
use crate::liecore::LieError;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("chart mismatch: {0}")]
    ChartMismatch(String),
    #[error("forms take values in different Lie algebra bundles")]
    AlgebraMismatch,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("metric has {found} signature entries for a {expected}-dimensional chart")]
    MetricDimensionMismatch { expected: usize, found: usize },
    #[error("PreconditionFailed: {hypothesis} (residual {residual:e})")]
    PreconditionFailed { hypothesis: String, residual: f64 },
    #[error("NotInAdjointImage: curvature leaves the image of ad (residual {residual:e})")]
    NotInAdjointImage { residual: f64 },
    #[error("NotClosed: d(omega) has residual {residual:e}")]
    NotClosed { residual: f64 },
    #[error("QuadratureDegradation: d(K omega) - omega has residual {residual:e}")]
    QuadratureDegradation { residual: f64 },
    #[error("NotInnerValued: connection coefficients leave the image of ad (residual {residual:e})")]
    NotInnerValued { residual: f64 },
    #[error("CentreAmbiguity: centre has dimension {centre_dim}, inner part is not unique")]
    CentreAmbiguity { centre_dim: usize },
    #[error("NoCentre: the algebra has trivial centre")]
    NoCentre,
    #[error("DimensionTooSmall: need at least {required} dimensions, got {found}")]
    DimensionTooSmall { required: usize, found: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
