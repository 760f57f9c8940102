//! Exact and floating polynomial arithmetic, root finding and critical values.

mod complex;
mod critical;
mod rat;
mod roots;

pub use complex::ComplexPoly;
pub use critical::{critical_values, CriticalData};
pub use rat::{format_rational, int, parse_rational, rat, RatPoly};
pub use roots::{rat_roots, roots, simple_roots, Root, RootOptions};
