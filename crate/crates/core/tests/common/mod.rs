#![allow(dead_code)]

pub mod algebra;

use vlad::reader::print_value;
use vlad::{Interpreter, Value};

/// Evaluates `src` with the standard library on a large stack and returns the printed value.
pub fn eval_print(src: &str, budget: u64) -> Result<String, String> {
    let src = src.to_string();
    vlad::runtime::with_big_stack(move || {
        let mut it = Interpreter::with_stdlib().map_err(|e| e.to_string())?;
        it.set_step_budget(budget);
        it.eval_str(&src).map(|v| print_value(&v)).map_err(|e| e.to_string())
    })
}

/// Evaluates `src` to a real, panicking on errors and non-reals.
pub fn eval_real(src: &str, budget: u64) -> f64 {
    let src = src.to_string();
    vlad::runtime::with_big_stack(move || {
        let mut it = Interpreter::with_stdlib().unwrap();
        it.set_step_budget(budget);
        real(&it.eval_str(&src).unwrap_or_else(|e| panic!("{src}: {e}")))
    })
}

/// Evaluates each expression in one interpreter, in order, returning the reals.
pub fn eval_reals(prelude: &str, exprs: Vec<String>, budget: u64) -> Vec<f64> {
    let prelude = prelude.to_string();
    vlad::runtime::with_big_stack(move || {
        let mut it = Interpreter::with_stdlib().unwrap();
        it.set_step_budget(budget);
        it.load(&prelude).unwrap();
        exprs
            .iter()
            .map(|e| real(&it.eval_str(e).unwrap_or_else(|err| panic!("{e}: {err}"))))
            .collect()
    })
}

pub fn real(v: &Value) -> f64 {
    v.as_real().unwrap_or_else(|| panic!("expected a real, got {}", print_value(v)))
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Central difference of a host-side function.
pub fn central(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    let h = 1e-6 * x.abs().max(1.0);
    (f(x + h) - f(x - h)) / (2.0 * h)
}

pub const BIG: u64 = 50_000_000;
