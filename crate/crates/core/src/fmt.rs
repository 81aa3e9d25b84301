//! Number formatting shared by every text export.

/// Shortest decimal that parses back to exactly `x`; integral values print
/// without a fractional part.
pub fn num(x: f64) -> String {
    if x.is_finite() && x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x)
    } else {
        format!("{:?}", x)
    }
}
