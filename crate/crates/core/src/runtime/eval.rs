use std::cell::{Cell, RefCell};
use std::collections::HashMap;
use std::rc::Rc;

use super::{closed_value, compile, literal_value, Closure, Value};
use crate::error::{Error, Result};
use crate::prim::{Prim, UnaryPred};
use crate::reader::{parse_forms, Mode, SurfaceExpr};
use crate::syntax::{print_lambda, Expr, Lambda, Slot, Step, Variable};
use crate::transform::{support, transform_lambda, TransformCache};

/// Nested (non-tail) applications allowed before evaluation stops; fits the stack given by
/// [`with_big_stack`].
pub const MAX_DEPTH: usize = 250_000;

pub const DEFAULT_STEP_BUDGET: u64 = 1_000_000;

/// Stack size for threads that run programs; deep non-tail recursion (long backward
/// passes) needs far more than the default.
const BIG_STACK: usize = 1 << 30;

/// Runs `f` on a fresh thread with a large stack and returns its result.
pub fn with_big_stack<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> T {
    std::thread::Builder::new()
        .stack_size(BIG_STACK)
        .spawn(f)
        .expect("spawn evaluation thread")
        .join()
        .unwrap_or_else(|e| std::panic::resume_unwind(e))
}

type IdentityMemo = RefCell<HashMap<*const Closure, (Rc<Closure>, Value)>>;

/// One evaluation context: `σ₀`, user definitions, caches and the step counter.
pub struct Interpreter {
    sigma0: HashMap<Variable, Value>,
    globals: HashMap<Variable, Value>,
    pub(super) cache: TransformCache,
    pub(super) prim_transforms: RefCell<HashMap<Prim, Value>>,
    pub(super) j_memo: IdentityMemo,
    pub(super) jinv_memo: IdentityMemo,
    /// `v2 ↦ (v1 ↤ v2)` for every derivative extracted by `J`.
    pub(super) custom_inverse: IdentityMemo,
    steps: Cell<u64>,
    budget: u64,
    trace: bool,
    depth: Cell<usize>,
    max_depth: usize,
}

impl Default for Interpreter {
    fn default() -> Self {
        Interpreter::new()
    }
}

impl Interpreter {
    /// An interpreter with only `σ₀` bound.
    pub fn new() -> Interpreter {
        let mut sigma0 = HashMap::new();
        for p in Prim::all() {
            sigma0.insert(Variable::new(p.name()), Value::Primitive(p));
        }
        let cons = closed_value("(lambda (a b) (cons a b))");
        let car = closed_value("(lambda (p) (car p))");
        let cdr = closed_value("(lambda (p) (cdr p))");
        for (name, v) in [
            ("cons", cons.clone()),
            ("car", car.clone()),
            ("cdr", cdr.clone()),
            ("true", Value::boolean(true)),
            ("false", Value::boolean(false)),
            (support::CONS, cons),
            (support::CAR, car),
            (support::CDR, cdr),
            (support::ZERO, Value::Primitive(Prim::Zero)),
            (support::PLUS, Value::Primitive(Prim::Plus)),
            (support::J, Value::Primitive(Prim::J)),
            (support::J_INV, Value::Primitive(Prim::JInv)),
            (support::ATTACH, Value::Primitive(Prim::Attach)),
            (support::J_BACKPROP, Value::Primitive(Prim::JBackprop)),
            (support::J_INV_BACKPROP, Value::Primitive(Prim::JInvBackprop)),
        ] {
            sigma0.insert(Variable::new(name), v);
        }
        Interpreter {
            sigma0,
            globals: HashMap::new(),
            cache: TransformCache::default(),
            prim_transforms: RefCell::new(HashMap::new()),
            j_memo: RefCell::new(HashMap::new()),
            jinv_memo: RefCell::new(HashMap::new()),
            custom_inverse: RefCell::new(HashMap::new()),
            steps: Cell::new(0),
            budget: DEFAULT_STEP_BUDGET,
            trace: false,
            depth: Cell::new(0),
            max_depth: MAX_DEPTH,
        }
    }

    /// An interpreter with the standard library loaded.
    pub fn with_stdlib() -> Result<Interpreter> {
        let mut it = Interpreter::new();
        let budget = it.budget;
        it.budget = u64::MAX;
        it.load(crate::stdlib::SOURCE)?;
        it.budget = budget;
        Ok(it)
    }

    pub fn set_step_budget(&mut self, budget: u64) {
        self.budget = budget.max(1);
    }

    /// Caps non-tail application depth. The default suits a 1 GiB stack (see
    /// [`with_big_stack`]); smaller stacks need a smaller cap.
    pub fn set_depth_limit(&mut self, depth: usize) {
        self.max_depth = depth.max(1);
    }

    pub fn step_budget(&self) -> u64 {
        self.budget
    }

    /// Apply-steps taken since the last top-level evaluation began.
    pub fn steps(&self) -> u64 {
        self.steps.get()
    }

    pub fn set_trace(&mut self, on: bool) {
        self.trace = on;
    }

    pub fn sigma0(&self, name: &Variable) -> Option<&Value> {
        self.sigma0.get(name)
    }

    pub fn lookup(&self, name: &str) -> Option<Value> {
        let v = Variable::new(name);
        self.globals
            .get(&v)
            .or_else(|| self.sigma0.get(&v))
            .cloned()
    }

    pub fn define(&mut self, name: &str, value: Value) {
        self.globals.insert(Variable::new(name), value);
    }

    /// Evaluates every top-level form; returns the value of the last non-definition.
    pub fn load(&mut self, text: &str) -> Result<Option<Value>> {
        let mut last = None;
        for form in parse_forms(text, Mode::User)? {
            if let Some(v) = self.eval_form(&form.expr).map_err(|e| e.at(form.pos))? {
                last = Some(v);
            }
        }
        Ok(last)
    }

    /// Evaluates source text that must produce a value.
    pub fn eval_str(&mut self, text: &str) -> Result<Value> {
        self.load(text)?.ok_or_else(|| Error::Structural("no expression to evaluate".into()))
    }

    /// One top-level form: `(define name e)`, `(define (name args…) e)` or an expression.
    pub fn eval_form(&mut self, form: &SurfaceExpr) -> Result<Option<Value>> {
        self.begin();
        if let SurfaceExpr::List(items) = form {
            if items.first() == Some(&SurfaceExpr::Symbol("define".into())) {
                let (name, expr) = define_parts(form, items)?;
                let value = self.eval_surface(&expr)?;
                self.globals.insert(Variable::new(&name), value);
                return Ok(None);
            }
        }
        self.eval_surface(form).map(Some)
    }

    pub(crate) fn begin(&self) {
        self.steps.set(0);
        self.j_memo.borrow_mut().clear();
        self.jinv_memo.borrow_mut().clear();
    }

    fn eval_surface(&self, e: &SurfaceExpr) -> Result<Value> {
        let expr = crate::syntax::to_anf(&crate::syntax::desugar(e)?)?;
        self.eval_expr(&expr)
    }

    pub fn eval_expr(&self, e: &Expr) -> Result<Value> {
        match e {
            Expr::Var(x) => self.lookup_var(x),
            Expr::App(f, a) => {
                let f = self.eval_expr(f)?;
                let a = self.eval_expr(a)?;
                self.apply(f, a)
            }
            Expr::Lam(l) => self.close_top(l),
        }
    }

    fn lookup_var(&self, x: &Variable) -> Result<Value> {
        if let Some(lit) = x.literal() {
            return Ok(literal_value(lit, x.reverse_depth()));
        }
        self.globals
            .get(x)
            .or_else(|| self.sigma0.get(x))
            .cloned()
            .ok_or_else(|| Error::Unbound(x.display_name()))
    }

    fn close_top(&self, l: &Rc<Lambda>) -> Result<Value> {
        let env = l
            .free()
            .iter()
            .map(|x| self.lookup_var(x))
            .collect::<Result<Vec<_>>>()?;
        Ok(Value::Closure(Rc::new(Closure {
            lambda: l.clone(),
            env,
        })))
    }

    /// Applies `f` to `x` as a fresh top-level evaluation with its own step budget.
    pub fn call(&self, f: &Value, x: Value) -> Result<Value> {
        self.begin();
        self.apply(f.clone(), x)
    }

    /// Like [`Interpreter::call`] without resetting the step counter.
    pub fn call_continuing(&self, f: &Value, x: Value) -> Result<Value> {
        self.apply(f.clone(), x)
    }

    fn tick(&self) -> Result<()> {
        let n = self.steps.get() + 1;
        if n > self.budget {
            return Err(Error::StepBudget(self.budget));
        }
        self.steps.set(n);
        Ok(())
    }

    /// `A f x`. Final applications in a lambda body reuse this frame.
    pub(crate) fn apply(&self, mut f: Value, mut x: Value) -> Result<Value> {
        let depth = self.depth.get();
        if depth >= self.max_depth {
            return Err(Error::Depth(self.max_depth));
        }
        self.depth.set(depth + 1);
        let out = loop {
            if let Err(e) = self.tick() {
                break Err(e);
            }
            if self.trace {
                eprintln!("{:width$}apply {} to {}", "", f.shape(), x.shape(), width = depth);
            }
            match f {
                Value::Custom(c) => f = c.0.clone(),
                Value::Primitive(p) => break self.apply_prim(p, x),
                Value::Closure(c) => match self.run_body(&c, x) {
                    Ok(Body::Done(v)) => break Ok(v),
                    Ok(Body::Tail(g, y)) => {
                        f = g;
                        x = y;
                    }
                    Err(e) => break Err(e),
                },
                other => break Err(Error::NotAFunction(other.shape())),
            }
        };
        self.depth.set(depth);
        out
    }

    fn run_body(&self, c: &Closure, arg: Value) -> Result<Body> {
        let lam = &c.lambda;
        let n = lam.steps.len();
        let mut locals: Vec<Value> = Vec::with_capacity(n);
        let get = |s: &Slot, locals: &[Value]| -> Value {
            match s {
                Slot::Param => arg.clone(),
                Slot::Local(i) => locals[*i].clone(),
                Slot::Free(i) => c.env[*i].clone(),
                Slot::Const(lit, depth) => literal_value(*lit, *depth),
            }
        };
        for (i, step) in lam.steps.iter().enumerate() {
            let v = match step {
                Step::Alias(s) => get(s, &locals),
                Step::Apply(fs, xs) => {
                    let fv = get(fs, &locals);
                    let xv = get(xs, &locals);
                    if i + 1 == n {
                        return Ok(Body::Tail(fv, xv));
                    }
                    self.apply(fv, xv)?
                }
                Step::Close(inner, slots) => Value::Closure(Rc::new(Closure {
                    lambda: inner.clone(),
                    env: slots.iter().map(|s| get(s, &locals)).collect(),
                })),
            };
            locals.push(v);
        }
        Ok(Body::Done(get(&lam.result, &locals)))
    }

    fn apply_prim(&self, p: Prim, x: Value) -> Result<Value> {
        let numeric = |v: &Value| match p {
            Prim::Unary(_) | Prim::Binary(_) | Prim::UnaryBool(_) | Prim::BinaryBool(_) => {
                strip_custom(v.clone())
            }
            _ => v.clone(),
        };
        let x = numeric(&x);
        let expect_real = |v: &Value| {
            strip_custom(v.clone()).as_real().ok_or_else(|| Error::Arity {
                prim: p.name().to_string(),
                expected: "a real".to_string(),
                got: v.shape(),
            })
        };
        let pair = |v: &Value| -> Result<(Value, Value)> {
            v.as_pair()
                .map(|(a, b)| (a.clone(), b.clone()))
                .ok_or_else(|| Error::Arity {
                    prim: p.name().to_string(),
                    expected: "a pair".to_string(),
                    got: v.shape(),
                })
        };
        Ok(match p {
            Prim::Unary(u) => Value::Real(u.eval(expect_real(&x)?)),
            Prim::Binary(b) => {
                let (a, c) = pair(&x)?;
                Value::Real(b.eval(expect_real(&a)?, expect_real(&c)?))
            }
            Prim::UnaryBool(q) => Value::boolean(match q {
                UnaryPred::IsZero => expect_real(&x)? == 0.0,
                UnaryPred::IsPositive => expect_real(&x)? > 0.0,
                UnaryPred::IsNegative => expect_real(&x)? < 0.0,
                UnaryPred::IsNull => matches!(x, Value::Empty),
                UnaryPred::IsReal => matches!(x, Value::Real(_)),
                UnaryPred::IsPair => x.as_pair().is_some(),
            }),
            Prim::BinaryBool(q) => {
                let (a, c) = pair(&x)?;
                Value::boolean(q.eval(expect_real(&a)?, expect_real(&c)?))
            }
            Prim::Zero => self.zero_of(&x)?,
            Prim::Plus => {
                let (a, c) = pair(&x)?;
                self.plus(&a, &c)?
            }
            Prim::J => self.j(&x)?,
            Prim::JInv => self.j_inverse(&x)?,
            Prim::Attach => {
                let (a, c) = pair(&x)?;
                Value::custom(a, c)
            }
            Prim::JBackprop => {
                let (a, dy) = pair(&x)?;
                self.j_backprop(&a, &dy)?
            }
            Prim::JInvBackprop => {
                let (a, dy) = pair(&x)?;
                self.j_inverse_backprop(&a, &dy)?
            }
        })
    }

    /// Reverse transform of a lambda expression, printed in internal syntax.
    pub fn transform_source(&self, text: &str) -> Result<String> {
        match compile(text, Mode::User)? {
            Expr::Lam(l) => Ok(print_lambda(&transform_lambda(&l, &self.cache)?.lambda)),
            _ => Err(Error::Structural("`:transform` expects a lambda expression".into())),
        }
    }

    /// Reverse transform of the lambda underneath a closure value, printed.
    pub fn transform_value(&self, v: &Value) -> Result<String> {
        match v {
            Value::Closure(c) => Ok(print_lambda(&transform_lambda(&c.lambda, &self.cache)?.lambda)),
            other => Err(Error::Structural(format!(
                "only closures have a transformed source, got {}",
                other.shape()
            ))),
        }
    }

    /// Closes printed transformed source (see [`Interpreter::transform_source`]) over the
    /// environment `J` would give it for the untransformed closure `original`.
    pub fn close_transformed(&self, text: &str, original: &Value) -> Result<Value> {
        let forms = parse_forms(text, Mode::Internal)?;
        let form = forms
            .first()
            .ok_or_else(|| Error::Structural("expected a lambda".into()))?;
        let lam = crate::transform::relink(&crate::syntax::read_lambda(&form.expr)?)?;
        let c = match original {
            Value::Closure(c) => c,
            other => return Err(Error::Structural(format!("expected a closure, got {}", other.shape()))),
        };
        let env = lam
            .free()
            .iter()
            .map(|v| {
                let from_source = v
                    .unreverse()
                    .and_then(|x| c.lambda.free().binary_search(&x).ok());
                match from_source {
                    Some(i) => self.j(&c.env[i]),
                    None => self
                        .sigma0
                        .get(v)
                        .cloned()
                        .ok_or_else(|| Error::Unbound(v.to_string())),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Value::Closure(Rc::new(Closure { lambda: lam, env })))
    }
}

enum Body {
    Done(Value),
    Tail(Value, Value),
}

fn strip_custom(mut v: Value) -> Value {
    while let Value::Custom(c) = v {
        v = c.0.clone();
    }
    v
}

fn define_parts(whole: &SurfaceExpr, items: &[SurfaceExpr]) -> Result<(String, SurfaceExpr)> {
    let bad = |msg: &str| Error::Syntax {
        form: crate::reader::print_surface(whole),
        msg: msg.to_string(),
    };
    if items.len() != 3 {
        return Err(bad("define takes a name and one expression"));
    }
    match &items[1] {
        SurfaceExpr::Symbol(name) => Ok((name.clone(), items[2].clone())),
        SurfaceExpr::List(sig) => match sig.split_first() {
            Some((SurfaceExpr::Symbol(name), params)) => {
                let params = if params.is_empty() {
                    SurfaceExpr::Empty
                } else {
                    SurfaceExpr::List(params.to_vec())
                };
                Ok((
                    name.clone(),
                    SurfaceExpr::List(vec![
                        SurfaceExpr::Symbol("lambda".into()),
                        params,
                        items[2].clone(),
                    ]),
                ))
            }
            _ => Err(bad("malformed function definition")),
        },
        _ => Err(bad("define needs a name")),
    }
}
