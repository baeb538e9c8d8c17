//! Variables, the core AST, A-normal form and free-variable analyses.

mod anf;
pub(crate) mod desugar;

pub use anf::{anf_to_term, to_anf};
pub use desugar::{desugar, Desugarer};

use std::cell::OnceCell;
use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::rc::Rc;

use crate::error::{Error, Result};
use crate::prim::Prim;

/// Decoration added to a variable by the reverse transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tag {
    Reverse,
    Sensitivity,
    Backpropagator,
}

impl Tag {
    fn suffix(self) -> char {
        match self {
            Tag::Reverse => 'r',
            Tag::Sensitivity => 's',
            Tag::Backpropagator => 'b',
        }
    }
}

/// Constant denoted by a self-evaluating variable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Literal {
    Real(f64),
    Empty,
}

/// A base name plus a stack of tags, innermost first.
///
/// The derived order compares base names lexicographically, then tag stacks
/// lexicographically with `Reverse < Sensitivity < Backpropagator`; a stack that is a
/// prefix of another sorts first.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Variable {
    base: Rc<str>,
    tags: Vec<Tag>,
}

/// Prefix of names that only the implementation generates.
pub const RESERVED_PREFIX: char = '%';
const LITERAL_PREFIX: char = '#';

impl Variable {
    pub fn new(base: &str) -> Variable {
        Variable {
            base: Rc::from(base),
            tags: Vec::new(),
        }
    }

    pub fn with_tags(base: &str, tags: &[Tag]) -> Variable {
        Variable {
            base: Rc::from(base),
            tags: tags.to_vec(),
        }
    }

    pub fn real(r: f64) -> Variable {
        Variable::new(&format!("{LITERAL_PREFIX}{r:?}"))
    }

    pub fn empty() -> Variable {
        Variable::new(&format!("{LITERAL_PREFIX}nil"))
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    pub fn tags(&self) -> &[Tag] {
        &self.tags
    }

    pub fn is_untagged(&self) -> bool {
        self.tags.is_empty()
    }

    /// Adds `tag` as the new outermost decoration.
    pub fn tagged(&self, tag: Tag) -> Variable {
        let mut tags = self.tags.clone();
        tags.push(tag);
        Variable {
            base: self.base.clone(),
            tags,
        }
    }

    pub fn reverse(&self) -> Variable {
        self.tagged(Tag::Reverse)
    }

    pub fn sensitivity(&self) -> Variable {
        self.tagged(Tag::Sensitivity)
    }

    pub fn backpropagator(&self) -> Variable {
        self.tagged(Tag::Backpropagator)
    }

    /// Removes one outermost `Reverse` tag, if present.
    pub fn unreverse(&self) -> Option<Variable> {
        match self.tags.last() {
            Some(Tag::Reverse) => {
                let mut tags = self.tags.clone();
                tags.pop();
                Some(Variable {
                    base: self.base.clone(),
                    tags,
                })
            }
            _ => None,
        }
    }

    /// Number of consecutive `Reverse` tags at the outer end of the stack.
    pub fn reverse_depth(&self) -> usize {
        self.tags
            .iter()
            .rev()
            .take_while(|t| **t == Tag::Reverse)
            .count()
    }

    pub fn has_transform_tags(&self) -> bool {
        self.tags
            .iter()
            .any(|t| matches!(t, Tag::Sensitivity | Tag::Backpropagator))
    }

    pub fn is_reserved(&self) -> bool {
        self.base.starts_with(RESERVED_PREFIX)
    }

    /// The constant this variable denotes, if it is a literal.
    pub fn literal(&self) -> Option<Literal> {
        let rest = self.base.strip_prefix(LITERAL_PREFIX)?;
        if rest == "nil" {
            Some(Literal::Empty)
        } else {
            rest.parse().ok().map(Literal::Real)
        }
    }

    pub fn is_literal(&self) -> bool {
        self.base.starts_with(LITERAL_PREFIX)
    }

    /// Parses the internal token syntax `base^r^s...` written by [`Variable`]'s `Display`.
    pub fn parse_internal(token: &str) -> Option<Variable> {
        let mut parts = token.split('^');
        let base = parts.next()?;
        if base.is_empty() {
            return None;
        }
        let mut tags = Vec::new();
        for p in parts {
            tags.push(match p {
                "r" => Tag::Reverse,
                "s" => Tag::Sensitivity,
                "b" => Tag::Backpropagator,
                _ => return None,
            });
        }
        Some(Variable::with_tags(base, &tags))
    }

    /// User-facing rendering: untagged literals print as their value.
    pub fn display_name(&self) -> String {
        match (self.literal(), self.tags.is_empty()) {
            (Some(Literal::Real(r)), true) => crate::reader::format_real(r),
            (Some(Literal::Empty), true) => "()".to_string(),
            _ => self.to_string(),
        }
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.base)?;
        for t in &self.tags {
            write!(f, "^{}", t.suffix())?;
        }
        Ok(())
    }
}

impl fmt::Debug for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Strict total order on variables.
pub fn compare_vars(a: &Variable, b: &Variable) -> std::cmp::Ordering {
    a.cmp(b)
}

/// Lambda calculus terms whose lambda bodies are arbitrary; the input to [`to_anf`].
///
/// `Let` only appears when re-expanding an ANF body (see [`anf_to_term`]); the desugarer
/// encodes user `let` as an applied lambda.
#[derive(Clone, Debug, PartialEq)]
pub enum Term {
    Var(Variable),
    App(Box<Term>, Box<Term>),
    Lam(Variable, Box<Term>),
    Let(Variable, Box<Term>, Box<Term>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(Variable::new(name))
    }

    pub fn app(f: Term, a: Term) -> Term {
        Term::App(Box::new(f), Box::new(a))
    }

    pub fn lam(x: Variable, body: Term) -> Term {
        Term::Lam(x, Box::new(body))
    }
}

/// Core expression; every lambda body is in A-normal form.
#[derive(Clone, Debug)]
pub enum Expr {
    Var(Variable),
    App(Rc<Expr>, Rc<Expr>),
    Lam(Rc<Lambda>),
}

impl PartialEq for Expr {
    fn eq(&self, other: &Expr) -> bool {
        match (self, other) {
            (Expr::Var(a), Expr::Var(b)) => a == b,
            (Expr::App(f1, a1), Expr::App(f2, a2)) => f1 == f2 && a1 == a2,
            (Expr::Lam(l1), Expr::Lam(l2)) => l1 == l2,
            _ => false,
        }
    }
}

/// Right-hand side of one ANF step.
#[derive(Clone, Debug, PartialEq)]
pub enum Rhs {
    Alias(Variable),
    Apply(Variable, Variable),
    Abstraction(Rc<Lambda>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Binding {
    pub target: Variable,
    pub rhs: Rhs,
}

impl Binding {
    pub fn alias(target: Variable, x: Variable) -> Binding {
        Binding {
            target,
            rhs: Rhs::Alias(x),
        }
    }

    pub fn apply(target: Variable, f: Variable, x: Variable) -> Binding {
        Binding {
            target,
            rhs: Rhs::Apply(f, x),
        }
    }

    pub fn abstraction(target: Variable, lam: Rc<Lambda>) -> Binding {
        Binding {
            target,
            rhs: Rhs::Abstraction(lam),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnfBody {
    pub bindings: Vec<Binding>,
    pub result: Variable,
}

/// Where a lambda came from; decides its untransformed free variables.
#[derive(Clone, Debug)]
pub enum Origin {
    Source,
    /// Output of the reverse transform applied to the given lambda.
    Transformed(Rc<Lambda>),
    /// Body of the reverse transform of a primitive.
    Primitive(Prim),
}

impl PartialEq for Origin {
    fn eq(&self, other: &Origin) -> bool {
        match (self, other) {
            (Origin::Source, Origin::Source) => true,
            (Origin::Transformed(a), Origin::Transformed(b)) => a == b,
            (Origin::Primitive(a), Origin::Primitive(b)) => a == b,
            _ => false,
        }
    }
}

/// Resolved location of a variable reference inside a lambda body.
#[derive(Clone, Debug)]
pub(crate) enum Slot {
    Param,
    Local(usize),
    Free(usize),
    Const(Literal, usize),
}

#[derive(Clone, Debug)]
pub(crate) enum Step {
    Alias(Slot),
    Apply(Slot, Slot),
    Close(Rc<Lambda>, Vec<Slot>),
}

/// `λparam. body` with its free variables and resolved body code.
pub struct Lambda {
    pub param: Variable,
    pub body: AnfBody,
    pub origin: Origin,
    free: Vec<Variable>,
    hash: u64,
    is_pair: bool,
    pub(crate) steps: Vec<Step>,
    pub(crate) result: Slot,
    bree: OnceCell<Vec<usize>>,
}

impl fmt::Debug for Lambda {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "λ{}. {:?}", self.param, self.body)
    }
}

impl PartialEq for Lambda {
    fn eq(&self, other: &Lambda) -> bool {
        std::ptr::eq(self, other)
            || (self.hash == other.hash
                && self.param == other.param
                && self.body == other.body
                && self.origin == other.origin)
    }
}

impl Lambda {
    pub fn new(param: Variable, body: AnfBody, origin: Origin) -> Result<Rc<Lambda>> {
        if body.bindings.last().map(|b| &b.target) != Some(&body.result) {
            return Err(Error::Internal(format!(
                "lambda body result `{}` is not its last binding target",
                body.result
            )));
        }
        let free = body_free_vars(&param, &body);
        let steps = body
            .bindings
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let res = |x: &Variable| resolve(x, &param, &body.bindings[..i], &free);
                match &b.rhs {
                    Rhs::Alias(x) => Step::Alias(res(x)),
                    Rhs::Apply(f, x) => Step::Apply(res(f), res(x)),
                    Rhs::Abstraction(l) => {
                        Step::Close(l.clone(), l.free.iter().map(res).collect())
                    }
                }
            })
            .collect();
        let n = body.bindings.len();
        let result = resolve(&body.result, &param, &body.bindings[..n], &free);

        let mut h = DefaultHasher::new();
        hash_lambda_parts(&param, &body, &mut h);
        let hash = h.finish();

        let is_pair = matches!(origin, Origin::Source) && is_pair_shape(&param, &body);
        Ok(Rc::new(Lambda {
            param,
            body,
            origin,
            free,
            hash,
            is_pair,
            steps,
            result,
            bree: OnceCell::new(),
        }))
    }

    /// Same body and parameter with a different origin.
    pub fn with_origin(&self, origin: Origin) -> Result<Rc<Lambda>> {
        Lambda::new(self.param.clone(), self.body.clone(), origin)
    }

    /// Free variables, sorted by [`compare_vars`].
    pub fn free(&self) -> &[Variable] {
        &self.free
    }

    /// True for `λx3. ((x3 x1) x2)`, the body shared by every encoded pair.
    pub fn is_pair(&self) -> bool {
        self.is_pair
    }

    /// Positions in [`Lambda::free`] of the untransformed free variables, in order.
    pub fn bree_indices(&self) -> &[usize] {
        self.bree.get_or_init(|| {
            bree(self)
                .iter()
                .map(|v| {
                    self.free
                        .binary_search(v)
                        .expect("untransformed free variable is free")
                })
                .collect()
        })
    }
}

fn hash_lambda_parts(param: &Variable, body: &AnfBody, h: &mut DefaultHasher) {
    param.hash(h);
    for b in &body.bindings {
        b.target.hash(h);
        match &b.rhs {
            Rhs::Alias(x) => (0u8, x).hash(h),
            Rhs::Apply(f, x) => (1u8, f, x).hash(h),
            Rhs::Abstraction(l) => (2u8, l.hash).hash(h),
        }
    }
    body.result.hash(h);
}

fn is_pair_shape(param: &Variable, body: &AnfBody) -> bool {
    let x1 = Variable::new("x1");
    let x2 = Variable::new("x2");
    if *param != Variable::new("x3") || body.bindings.len() != 2 {
        return false;
    }
    let (b0, b1) = (&body.bindings[0], &body.bindings[1]);
    b0.rhs == Rhs::Apply(param.clone(), x1) && b1.rhs == Rhs::Apply(b0.target.clone(), x2)
}

fn resolve(x: &Variable, param: &Variable, earlier: &[Binding], free: &[Variable]) -> Slot {
    if let Some(i) = earlier.iter().rposition(|b| &b.target == x) {
        return Slot::Local(i);
    }
    if x == param {
        return Slot::Param;
    }
    if let Some(lit) = x.literal() {
        return Slot::Const(lit, x.reverse_depth());
    }
    Slot::Free(free.binary_search(x).expect("reference is free"))
}

fn body_free_vars(param: &Variable, body: &AnfBody) -> Vec<Variable> {
    let mut bound: BTreeSet<&Variable> = BTreeSet::new();
    bound.insert(param);
    let mut free = BTreeSet::new();
    let mut note = |x: &Variable, bound: &BTreeSet<&Variable>| {
        if !bound.contains(x) && !x.is_literal() {
            free.insert(x.clone());
        }
    };
    for b in &body.bindings {
        match &b.rhs {
            Rhs::Alias(x) => note(x, &bound),
            Rhs::Apply(f, x) => {
                note(f, &bound);
                note(x, &bound);
            }
            Rhs::Abstraction(l) => {
                for x in &l.free {
                    note(x, &bound);
                }
            }
        }
        bound.insert(&b.target);
    }
    note(&body.result, &bound);
    free.into_iter().collect()
}

/// `FV e`, in `≺` order. Literals are constants, not variables.
pub fn free_vars(e: &Expr) -> Vec<Variable> {
    fn go(e: &Expr, out: &mut BTreeSet<Variable>) {
        match e {
            Expr::Var(x) => {
                if !x.is_literal() {
                    out.insert(x.clone());
                }
            }
            Expr::App(f, a) => {
                go(f, out);
                go(a, out);
            }
            Expr::Lam(l) => out.extend(l.free.iter().cloned()),
        }
    }
    let mut out = BTreeSet::new();
    go(e, &mut out);
    out.into_iter().collect()
}

/// Untransformed free variables of a lambda, in `≺` order.
///
/// Lambdas produced by the reverse transform report the reverse-tagging of their
/// source's list; bodies of transformed primitives report the empty list.
pub fn bree(lam: &Lambda) -> Vec<Variable> {
    match &lam.origin {
        Origin::Primitive(_) => Vec::new(),
        Origin::Transformed(src) => bree(src).iter().map(Variable::reverse).collect(),
        Origin::Source => lam.free.clone(),
    }
}

/// Pretty form used by `:transform` and `--emit-transformed`; re-parses in internal mode.
pub fn print_lambda(lam: &Lambda) -> String {
    let mut out = String::new();
    write_lambda(lam, 0, &mut out);
    out
}

fn write_lambda(lam: &Lambda, indent: usize, out: &mut String) {
    use std::fmt::Write;
    let pad = " ".repeat(indent + 2);
    let _ = write!(out, "(lambda ({})\n{pad}(let* (", lam.param);
    for (i, b) in lam.body.bindings.iter().enumerate() {
        if i > 0 {
            let _ = write!(out, "\n{pad}        ");
        }
        let _ = write!(out, "({} ", b.target);
        match &b.rhs {
            Rhs::Alias(x) => out.push_str(&x.to_string()),
            Rhs::Apply(f, x) => {
                let _ = write!(out, "({f} {x})");
            }
            Rhs::Abstraction(l) => write_lambda(l, indent + 10, out),
        }
        out.push(')');
    }
    let _ = write!(out, ")\n{pad}  {}))", lam.body.result);
}

/// Reads a lambda printed by [`print_lambda`] back into the same ANF lambda, binding for
/// binding. Going through [`desugar`] instead would turn each `let*` step into a closure.
pub fn read_lambda(e: &crate::reader::SurfaceExpr) -> Result<Rc<Lambda>> {
    use crate::reader::{print_surface, SurfaceExpr as S};
    let bad = |e: &S, msg: &str| Error::Syntax {
        form: print_surface(e),
        msg: msg.to_string(),
    };
    let atom = |e: &S| -> Result<Variable> {
        match e {
            S::Symbol(s) => Variable::parse_internal(s).ok_or_else(|| bad(e, "malformed variable")),
            S::Real(r) => Ok(Variable::real(*r)),
            S::Empty => Ok(Variable::empty()),
            _ => Err(bad(e, "expected a variable")),
        }
    };
    let is_lambda = |items: &[S]| items.len() == 3 && items[0] == S::Symbol("lambda".into());
    let S::List(items) = e else {
        return Err(bad(e, "expected a lambda"));
    };
    let (param, body) = match items.as_slice() {
        [_, S::List(ps), body] if is_lambda(items) && ps.len() == 1 => (atom(&ps[0])?, body),
        _ => return Err(bad(e, "expected (lambda (x) (let* (...) result))")),
    };
    let (bindings, result) = match body {
        S::List(parts) if parts.len() == 3 && parts[0] == S::Symbol("let*".into()) => {
            match &parts[1] {
                S::List(bs) => (bs, atom(&parts[2])?),
                other => return Err(bad(other, "expected a binding list")),
            }
        }
        other => return Err(bad(other, "expected a let* body")),
    };
    let bindings = bindings
        .iter()
        .map(|b| match b {
            S::List(pair) if pair.len() == 2 => {
                let target = atom(&pair[0])?;
                Ok(match &pair[1] {
                    S::List(rhs) if is_lambda(rhs) => Binding::abstraction(target, read_lambda(&pair[1])?),
                    S::List(rhs) if rhs.len() == 2 => {
                        Binding::apply(target, atom(&rhs[0])?, atom(&rhs[1])?)
                    }
                    other => Binding::alias(target, atom(other)?),
                })
            }
            other => Err(bad(other, "expected (target rhs)")),
        })
        .collect::<Result<Vec<_>>>()?;
    Lambda::new(param, AnfBody { bindings, result }, Origin::Source)
}

pub fn print_expr(e: &Expr) -> String {
    match e {
        Expr::Var(x) => x.display_name(),
        Expr::App(f, a) => format!("({} {})", print_expr(f), print_expr(a)),
        Expr::Lam(l) => print_lambda(l),
    }
}
