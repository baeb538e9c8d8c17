//! Values, the evaluator, and the AD value operations.

mod ad;
mod eval;

pub use eval::{with_big_stack, Interpreter, DEFAULT_STEP_BUDGET};

use std::rc::Rc;

use crate::error::Result;
use crate::prim::Prim;
use crate::reader::{format_real, Mode};
use crate::syntax::{Expr, Lambda, Literal};

#[derive(Clone, Debug)]
pub enum Value {
    Empty,
    Real(f64),
    /// `⃖v`
    Tagged(Rc<Value>),
    Primitive(Prim),
    Closure(Rc<Closure>),
    /// `v1 ↤ v2`: a primal with an attached replacement for its reverse transform.
    Custom(Rc<(Value, Value)>),
}

/// A lambda with the values of its free variables, aligned with [`Lambda::free`].
#[derive(Debug)]
pub struct Closure {
    pub lambda: Rc<Lambda>,
    pub env: Vec<Value>,
}

impl PartialEq for Value {
    fn eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Empty, Value::Empty) => true,
            (Value::Real(a), Value::Real(b)) => a == b,
            (Value::Tagged(a), Value::Tagged(b)) => a == b,
            (Value::Primitive(a), Value::Primitive(b)) => a == b,
            (Value::Closure(a), Value::Closure(b)) => {
                Rc::ptr_eq(a, b) || (a.lambda == b.lambda && a.env == b.env)
            }
            (Value::Custom(a), Value::Custom(b)) => Rc::ptr_eq(a, b) || a == b,
            _ => false,
        }
    }
}

thread_local! {
    static PAIR: Rc<Lambda> = pair_lambda_uncached();
    static BOOLS: (Value, Value) = (
        closed_value("(lambda (p) (car p))"),
        closed_value("(lambda (p) (cdr p))"),
    );
}

fn pair_lambda_uncached() -> Rc<Lambda> {
    let outer = match crate::syntax::to_anf(&crate::syntax::desugar::pair_constructor())
        .expect("pair constructor converts")
    {
        Expr::Lam(l) => l,
        _ => unreachable!(),
    };
    let inner = |l: &Lambda| match &l.body.bindings[0].rhs {
        crate::syntax::Rhs::Abstraction(l) => l.clone(),
        _ => unreachable!(),
    };
    inner(&inner(&outer))
}

/// Compiles a closed lambda in internal syntax to a closure value.
pub(crate) fn closed_value(src: &str) -> Value {
    match compile(src, Mode::Internal).expect("builtin source compiles") {
        Expr::Lam(l) => {
            assert!(l.free().is_empty(), "builtin `{src}` is not closed");
            Value::Closure(Rc::new(Closure {
                lambda: l,
                env: Vec::new(),
            }))
        }
        _ => panic!("builtin `{src}` is not a lambda"),
    }
}

/// Parses, desugars and ANF-converts a single expression.
pub(crate) fn compile(src: &str, mode: Mode) -> Result<Expr> {
    let forms = crate::reader::parse_forms(src, mode)?;
    let form = forms.first().ok_or_else(|| crate::error::Error::Parse {
        pos: crate::error::Pos { line: 1, col: 1 },
        msg: "expected an expression".to_string(),
    })?;
    crate::syntax::to_anf(&crate::syntax::desugar(&form.expr)?)
}

impl Value {
    pub fn real(r: f64) -> Value {
        Value::Real(r)
    }

    pub fn tagged(v: Value) -> Value {
        Value::Tagged(Rc::new(v))
    }

    /// The encoded pair `⟨{x1 ↦ a, x2 ↦ b}, λx3. ((x3 x1) x2)⟩`.
    pub fn cons(a: Value, b: Value) -> Value {
        Value::Closure(Rc::new(Closure {
            lambda: pair_lambda(),
            env: vec![a, b],
        }))
    }

    pub fn list(items: impl IntoIterator<Item = Value, IntoIter: DoubleEndedIterator>) -> Value {
        items
            .into_iter()
            .rev()
            .fold(Value::Empty, |acc, v| Value::cons(v, acc))
    }

    pub fn boolean(b: bool) -> Value {
        BOOLS.with(|(t, f)| if b { t.clone() } else { f.clone() })
    }

    pub fn custom(primal: Value, derivative: Value) -> Value {
        Value::Custom(Rc::new((primal, derivative)))
    }

    pub fn as_real(&self) -> Option<f64> {
        match self {
            Value::Real(r) => Some(*r),
            _ => None,
        }
    }

    /// Car and cdr of an encoded pair.
    pub fn as_pair(&self) -> Option<(&Value, &Value)> {
        match self {
            Value::Closure(c) if c.lambda.is_pair() => Some((&c.env[0], &c.env[1])),
            _ => None,
        }
    }

    /// Elements of a proper encoded list.
    pub fn as_list(&self) -> Option<Vec<Value>> {
        let mut out = Vec::new();
        let mut cur = self;
        loop {
            match cur {
                Value::Empty => return Some(out),
                v => {
                    let (h, t) = v.as_pair()?;
                    out.push(h.clone());
                    cur = t;
                }
            }
        }
    }

    /// Whether this is one of the two boolean selector closures.
    pub fn as_bool(&self) -> Option<bool> {
        BOOLS.with(|(t, f)| {
            if self == t {
                Some(true)
            } else if self == f {
                Some(false)
            } else {
                None
            }
        })
    }

    /// Short description used in error messages.
    pub fn shape(&self) -> String {
        match self {
            Value::Empty => "()".to_string(),
            Value::Real(r) => format!("the real {}", format_real(*r)),
            Value::Tagged(v) => format!("(reverse {})", v.shape()),
            Value::Primitive(p) => format!("primitive {p}"),
            Value::Closure(c) if c.lambda.is_pair() => "a pair".to_string(),
            Value::Closure(c) => format!("closure λ{}", c.lambda.param),
            Value::Custom(c) => format!("custom {}", c.0.shape()),
        }
    }
}

pub(crate) fn pair_lambda() -> Rc<Lambda> {
    PAIR.with(Rc::clone)
}

pub(crate) fn literal_value(lit: Literal, depth: usize) -> Value {
    let mut v = match lit {
        Literal::Real(r) => Value::Real(r),
        Literal::Empty => Value::Empty,
    };
    for _ in 0..depth {
        v = Value::tagged(v);
    }
    v
}
