//! Problem data: field expressions, problem instances and hypothesis checks.

mod expr;
mod spec;

pub use expr::{eval_field, parse_field, BinOp, FieldExpr, Func};
pub use spec::{
    classify, exponent_bounds, exponent_bounds_on_mesh, validate_on, validate_spec, DomainSpec, FieldTexts,
    ProblemSpec, Regime, RegimeReport, SpecDocument, Violation,
};
