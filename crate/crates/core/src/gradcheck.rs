//! Compares in-language gradients of scalar functions with finite differences.

use std::fmt;

use crate::error::{Error, Result};
use crate::reader::format_real;
use crate::runtime::{Interpreter, Value};

#[derive(Clone, Copy, Debug)]
pub struct Options {
    /// Difference step; `None` uses `1e-6 · max(1, |x|)`.
    pub h: Option<f64>,
    pub tol: f64,
}

impl Default for Options {
    fn default() -> Self {
        Options { h: None, tol: 1e-4 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// One side is not finite, so the point does not count.
    Skipped,
}

#[derive(Clone, Debug)]
pub struct Row {
    pub point: f64,
    pub value: f64,
    pub grad: f64,
    pub fd: f64,
    pub abs_err: f64,
    pub rel_err: f64,
    pub status: Status,
    /// The difference was taken forward from `x` because `f(x - h)` failed or was NaN.
    pub one_sided: bool,
    /// Gradient and difference were both NaN.
    pub both_nan: bool,
}

impl Row {
    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }
}

pub const HEADER: &str = "point value grad fd abs_err rel_err status";

impl fmt::Display for Row {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut status = match self.status {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::Skipped => "skip",
        }
        .to_string();
        if self.both_nan {
            status.push_str(",nan-agrees");
        }
        if self.one_sided {
            status.push_str(",one-sided");
        }
        write!(
            f,
            "{} {} {} {} {} {} {}",
            format_real(self.point),
            format_real(self.value),
            format_real(self.grad),
            format_real(self.fd),
            sci(self.abs_err),
            sci(self.rel_err),
            status
        )
    }
}

fn sci(r: f64) -> String {
    if r.is_finite() {
        format!("{r:.3e}")
    } else {
        format_real(r)
    }
}

fn scalar(it: &Interpreter, f: &Value, x: f64) -> Result<f64> {
    let v = it.call(f, Value::Real(x))?;
    v.as_real()
        .ok_or_else(|| Error::Structural(format!("function returned {}, not a real", v.shape())))
}

/// `rel_err` is `abs_err / max(1, |fd|)`.
pub fn check(it: &Interpreter, f: &Value, x: f64, opts: Options) -> Result<Row> {
    let value = scalar(it, f, x)?;
    let g = it.gradient(f, Value::Real(x))?;
    let grad = g.as_real().ok_or_else(|| {
        Error::Structural(format!("gradient is {}, not a real", g.shape()))
    })?;
    let h = opts.h.unwrap_or(1e-6 * x.abs().max(1.0));
    let below = match scalar(it, f, x - h) {
        Ok(v) if !v.is_nan() => Some(v),
        Ok(_) => None,
        Err(e) if e.is_resource() => return Err(e),
        Err(_) => None,
    };
    let (fd, one_sided) = match below {
        Some(lo) => ((scalar(it, f, x + h)? - lo) / (2.0 * h), false),
        None => {
            let step = h * 1e-3;
            ((scalar(it, f, x + step)? - value) / step, true)
        }
    };
    let abs_err = (grad - fd).abs();
    let rel_err = abs_err / fd.abs().max(1.0);
    let both_nan = grad.is_nan() && fd.is_nan();
    let status = if both_nan {
        Status::Pass
    } else if !grad.is_finite() || !fd.is_finite() {
        Status::Skipped
    } else if rel_err <= opts.tol {
        Status::Pass
    } else {
        Status::Fail
    };
    Ok(Row {
        point: x,
        value,
        grad,
        fd,
        abs_err,
        rel_err,
        status,
        one_sided,
        both_nan,
    })
}

/// Checks `f` at every point; the report passes when no row fails.
pub fn check_all(it: &Interpreter, f: &Value, xs: &[f64], opts: Options) -> Result<Vec<Row>> {
    xs.iter().map(|&x| check(it, f, x, opts)).collect()
}
