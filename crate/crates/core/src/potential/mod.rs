//! Potential functions: data model, evaluation, and the built-in 5_2 instance.

mod five_two;
mod model;
mod spec;

pub use five_two::{edge_residuals, reduced_residual, shapes_from_point, Shapes};
pub use model::{ParamPoint, Potential, SINGULAR_EPS};
pub use spec::{
    builtin, builtin_five_two, load_spec, DilogTerm, LongitudeExpr, LongitudeFactor, LongitudeSpec,
    Monomial, PotentialSpec, QuadLogTerm, Rational,
};
