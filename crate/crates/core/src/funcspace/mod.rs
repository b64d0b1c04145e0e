//! Strictly increasing piecewise-analytic functions on open intervals.

mod generator;
mod interval;
mod primitive;

pub use generator::{validate_generator, GenInverse, GeneratorFn, GeneratorSpec, Limits, Violation};
pub use interval::Interval;
pub use primitive::{NegateTag, Piece, Primitive, Stage};

/// `f ∘ g`.
pub fn compose(f: &GeneratorFn, g: &GeneratorFn) -> crate::Result<GeneratorFn> {
    f.compose(g)
}

/// `x ↦ -f(-x)` on the reflected domain.
pub fn reflect(f: &GeneratorFn) -> GeneratorFn {
    f.reflect()
}
