//! Browser bindings for the vlad interpreter.
//!
//! Each export builds a fresh interpreter with the standard library, so calls do not
//! share state. The plain functions return `Result<_, String>` and are what the tests use.

use vlad::gradcheck::{self, Options};
use vlad::reader::print_value;
use vlad::Interpreter;
use wasm_bindgen::prelude::*;

/// Non-tail application depth the browser stack survives.
const MAX_DEPTH: usize = 3_000;

fn interpreter(steps: u32) -> Result<Interpreter, String> {
    let mut it = Interpreter::with_stdlib().map_err(|e| e.to_string())?;
    it.set_step_budget(u64::from(steps));
    it.set_depth_limit(MAX_DEPTH);
    Ok(it)
}

/// Value of the last expression in `source`, printed.
pub fn eval_program(source: &str, steps: u32) -> Result<String, String> {
    let mut it = interpreter(steps)?;
    match it.load(source).map_err(|e| e.to_string())? {
        Some(v) => Ok(print_value(&v)),
        None => Ok(String::new()),
    }
}

/// Samples `name` (defined by `source` or the stdlib) at `n` evenly spaced points of
/// `[lo, hi]`. Returns rows `x, f(x), ∇f(x), finite difference` flattened.
pub fn curve(source: &str, name: &str, lo: f64, hi: f64, n: u32, steps: u32) -> Result<Vec<f64>, String> {
    let mut it = interpreter(steps)?;
    it.load(source).map_err(|e| e.to_string())?;
    let f = it.lookup(name).ok_or_else(|| format!("unbound function `{name}`"))?;
    let n = n.max(2);
    let xs: Vec<f64> = (0..n)
        .map(|i| lo + (hi - lo) * f64::from(i) / f64::from(n - 1))
        .collect();
    let rows = gradcheck::check_all(&it, &f, &xs, Options::default()).map_err(|e| e.to_string())?;
    Ok(rows.iter().flat_map(|r| [r.point, r.value, r.grad, r.fd]).collect())
}

/// Reverse transform of a lambda expression, after loading `source`.
pub fn transform_text(source: &str, lambda: &str) -> Result<String, String> {
    let mut it = interpreter(1_000_000)?;
    it.load(source).map_err(|e| e.to_string())?;
    it.transform_source(lambda).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn evaluate(source: &str, steps: u32) -> Result<String, JsValue> {
    eval_program(source, steps).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn gradient_curve(
    source: &str,
    name: &str,
    lo: f64,
    hi: f64,
    n: u32,
    steps: u32,
) -> Result<Vec<f64>, JsValue> {
    curve(source, name, lo, hi, n, steps).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn transform(source: &str, lambda: &str) -> Result<String, JsValue> {
    transform_text(source, lambda).map_err(|e| JsValue::from_str(&e))
}
