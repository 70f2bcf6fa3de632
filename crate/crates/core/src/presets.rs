//! Named example polynomials.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poly::Polynomial;

/// Coefficient of `z^2` in the cubic `z^3 + a z^2`, as usually quoted.
pub const CUBIC_ROUNDED_A: Complex64 = Complex64::new(0.31629, -1.92522);

/// The parameter nearest to [`CUBIC_ROUNDED_A`] for which the ray at angle
/// 1/2 runs exactly into the free critical point `-2a/3`. With the rounded
/// value that ray misses it by about 8e-6 turns and stays smooth.
pub const CUBIC_A: Complex64 = Complex64::new(0.316205082923957, -1.9255222181492548);

pub const NAMES: [&str; 4] = ["square", "quadratic", "cubic", "cubic-rounded"];

/// `z^2`.
pub fn square() -> Polynomial {
    Polynomial::unicritical(2, Complex64::new(0.0, 0.0)).expect("valid")
}

/// `z^2 + 1`.
pub fn quadratic() -> Polynomial {
    Polynomial::unicritical(2, Complex64::new(1.0, 0.0)).expect("valid")
}

/// `z^3 + a z^2` with `a` = [`CUBIC_A`].
pub fn cubic() -> Polynomial {
    cubic_with(CUBIC_A)
}

pub fn cubic_with(a: Complex64) -> Polynomial {
    let zero = Complex64::new(0.0, 0.0);
    Polynomial::new(vec![zero, zero, a]).expect("valid")
}

pub fn by_name(name: &str) -> Result<Polynomial> {
    match name {
        "square" => Ok(square()),
        "quadratic" => Ok(quadratic()),
        "cubic" => Ok(cubic()),
        "cubic-rounded" => Ok(cubic_with(CUBIC_ROUNDED_A)),
        other => Err(Error::InvalidPolynomial(format!(
            "unknown preset `{other}` (expected one of {})",
            NAMES.join(", ")
        ))),
    }
}
