//! The library loaded before user programs.
//!
//! | name | |
//! |---|---|
//! | `gradient f x` | derivative of a scalar function |
//! | `fold f acc v` | left fold, `f` takes `(cons acc x)` |
//! | `log1pexp`, `log1pexp-custom` | `log(1 + e^x)` and its stable-derivative version |
//! | `one-sided`, `one-sided-custom` | `x / (1 + √x)`, the latter differentiable at 0 |
//! | `sin-approx`, `cos-approx` | 32-piece quadratic interpolants on `[-π, π)` |
//! | `sin-custom`, `cos-custom` | the interpolants with each other as derivatives |
//! | `fix p f x`, `fix-custom` | fixed-point iteration; the custom version solves the adjoint fixed point |
//! | `sqrt-newton`, `sqrt-newton-custom` | Newton square root via `fix` / `fix-custom` |
//! | `map f v`, `map-custom` | list map; the custom backward pass walks the list front to back |

pub const SOURCE: &str = include_str!("../stdlib.vl");

/// Names defined by [`SOURCE`], in definition order.
pub fn names() -> Vec<String> {
    crate::reader::parse(SOURCE)
        .expect("stdlib parses")
        .into_iter()
        .filter_map(|form| match form {
            crate::reader::SurfaceExpr::List(items) => match items.get(1) {
                Some(crate::reader::SurfaceExpr::Symbol(s)) => Some(s.clone()),
                _ => None,
            },
            _ => None,
        })
        .collect()
}
