//! Reverse-mode source transformation of ANF lambdas.
//!
//! `λx0. let x1 ≜ e1 … let xn ≜ en in xn` becomes
//! `λx0^r. let φ{x1 ≜ e1} … let φ{xn ≜ en} in (xn^r, è)` where the backpropagator
//! `è = λxn^s. …` zero-initialises the sensitivities of the untransformed free variables,
//! of `x0` and of `x1 … x(n-1)`, runs every `ρ` rule in reverse order, and returns
//! `([x'1^s, …, x'l^s]_x0, x0^s)`.
//!
//! Destructuring binds are compiled to a fresh temporary plus `%car`/`%cdr` steps, and each
//! `⊕≜` binds a fresh name, so generated bodies never rebind a variable.

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap};
use std::rc::Rc;

use crate::error::{Error, Result};
use crate::prim::Prim;
use crate::syntax::{bree, AnfBody, Binding, Lambda, Origin, Rhs, Variable};

/// Names the generated code expects the top-level environment to bind.
pub mod support {
    pub const CAR: &str = "%car";
    pub const CDR: &str = "%cdr";
    pub const CONS: &str = "%cons";
    pub const ZERO: &str = "%zero";
    pub const PLUS: &str = "%plus";
    pub const J: &str = "%rad";
    pub const J_INV: &str = "%rad-inverse";
    pub const ATTACH: &str = "%attach";
    pub const J_BACKPROP: &str = "%rad-backprop";
    pub const J_INV_BACKPROP: &str = "%rad-inverse-backprop";
}

/// How each free variable of a transformed lambda is populated from the source closure.
#[derive(Clone, Debug, PartialEq)]
pub enum EnvSource {
    /// `x^r ↦ J (σ x)` where `x` is the source free variable at this index.
    Transformed(usize),
    /// Taken from the top-level environment.
    TopLevel(Variable),
}

#[derive(Debug)]
pub struct Transformed {
    pub lambda: Rc<Lambda>,
    /// One entry per free variable of `lambda`.
    pub env: Vec<EnvSource>,
    /// For each source free variable, the index of its reverse-tagged twin in `lambda`.
    pub inverse: Vec<usize>,
}

/// The source is kept alive so its address is not reused.
type CacheEntry = (Rc<Lambda>, Rc<Transformed>);

/// Memoizes [`transform_lambda`] by lambda identity.
#[derive(Default)]
pub struct TransformCache {
    map: RefCell<HashMap<*const Lambda, CacheEntry>>,
}

impl TransformCache {
    pub fn len(&self) -> usize {
        self.map.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, lam: &Rc<Lambda>) -> Option<Rc<Transformed>> {
        self.map
            .borrow()
            .get(&Rc::as_ptr(lam))
            .map(|(_, t)| t.clone())
    }
}

struct Fresh {
    counter: usize,
}

impl Fresh {
    fn next(&mut self) -> Variable {
        self.counter += 1;
        Variable::new(&format!("%q{}", self.counter))
    }
}

fn sup(name: &str) -> Variable {
    Variable::new(name)
}

/// Transforms `lam` into `e⃖`, reusing earlier results for the same lambda object.
pub fn transform_lambda(lam: &Rc<Lambda>, cache: &TransformCache) -> Result<Rc<Transformed>> {
    if let Some(t) = cache.get(lam) {
        return Ok(t);
    }
    let lambda = build(lam, cache)?;
    let env = lambda
        .free()
        .iter()
        .map(|v| {
            v.unreverse()
                .and_then(|x| lam.free().binary_search(&x).ok())
                .map(EnvSource::Transformed)
                .unwrap_or_else(|| EnvSource::TopLevel(v.clone()))
        })
        .collect::<Vec<_>>();
    let inverse = lam
        .free()
        .iter()
        .map(|x| {
            lambda.free().binary_search(&x.reverse()).map_err(|_| {
                Error::Internal(format!("transformed lambda lost free variable `{x}`"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(EnvSource::TopLevel(v)) = env
        .iter()
        .find(|s| matches!(s, EnvSource::TopLevel(v) if !v.is_reserved()))
    {
        return Err(Error::Internal(format!(
            "transformed lambda refers to unexpected free variable `{v}`"
        )));
    }
    let t = Rc::new(Transformed {
        lambda,
        env,
        inverse,
    });
    cache
        .map
        .borrow_mut()
        .insert(Rc::as_ptr(lam), (lam.clone(), t.clone()));
    Ok(t)
}

/// `φ` for one binding.
pub fn phi(b: &Binding, fresh_pair: Variable, cache: &TransformCache) -> Result<Vec<Binding>> {
    let xi = &b.target;
    Ok(match &b.rhs {
        Rhs::Alias(xj) => vec![Binding::alias(xi.reverse(), xj.reverse())],
        Rhs::Apply(xj, xk) => vec![
            Binding::apply(fresh_pair.clone(), xj.reverse(), xk.reverse()),
            Binding::apply(xi.reverse(), sup(support::CAR), fresh_pair.clone()),
            Binding::apply(xi.backpropagator(), sup(support::CDR), fresh_pair),
        ],
        Rhs::Abstraction(l) => vec![Binding::abstraction(
            xi.reverse(),
            transform_lambda(l, cache)?.lambda.clone(),
        )],
    })
}

/// Emits code for the backward pass of one body; tracks the current SSA name of every
/// sensitivity variable.
struct Backward<'a> {
    out: Vec<Binding>,
    fresh: &'a mut Fresh,
    current: HashMap<Variable, Variable>,
}

impl Backward<'_> {
    fn emit_apply(&mut self, f: Variable, x: Variable) -> Variable {
        let t = self.fresh.next();
        self.out.push(Binding::apply(t.clone(), f, x));
        t
    }

    fn repeat(&mut self, f: &str, times: usize, mut x: Variable) -> Variable {
        for _ in 0..times {
            x = self.emit_apply(sup(f), x);
        }
        x
    }

    fn pair(&mut self, a: Variable, b: Variable) -> Variable {
        let partial = self.emit_apply(sup(support::CONS), a);
        self.emit_apply(partial, b)
    }

    /// `x^s ⊕≜ contribution`; a no-op for variables outside the tracked set.
    fn accumulate(&mut self, x: &Variable, contribution: Variable) {
        let Some(cur) = self.current.get(x).cloned() else {
            return;
        };
        let both = self.pair(cur, contribution);
        let next = self.emit_apply(sup(support::PLUS), both);
        self.current.insert(x.clone(), next);
    }

    /// Tagged list `[v1, …, vl]_x` for a parameter with `depth` reverse tags.
    fn tagged_list(&mut self, items: Vec<Variable>, depth: usize) -> Variable {
        let mut empty = Variable::empty();
        for _ in 0..depth {
            empty = empty.reverse();
        }
        let mut acc = empty;
        for item in items.into_iter().rev() {
            let a = self.repeat(support::J_INV, depth, item);
            let b = self.repeat(support::J_INV, depth, acc);
            let p = self.pair(a, b);
            acc = self.repeat(support::J, depth, p);
        }
        acc
    }

    /// `ρ` for one binding.
    fn rho(&mut self, b: &Binding) -> Result<()> {
        let xi = &b.target;
        let si = self.current.get(xi).cloned().ok_or_else(|| {
            Error::Internal(format!("no sensitivity for binding target `{xi}`"))
        })?;
        match &b.rhs {
            Rhs::Alias(xj) => self.accumulate(xj, si),
            Rhs::Apply(xj, xk) => {
                let t = self.emit_apply(xi.backpropagator(), si);
                if self.current.contains_key(xj) {
                    let a = self.emit_apply(sup(support::CAR), t.clone());
                    self.accumulate(xj, a);
                }
                if self.current.contains_key(xk) {
                    let d = self.emit_apply(sup(support::CDR), t);
                    self.accumulate(xk, d);
                }
            }
            Rhs::Abstraction(l) => {
                let closed = bree(l);
                if closed.iter().all(|y| !self.current.contains_key(y)) {
                    return Ok(());
                }
                let depth = l.param.reverse_depth();
                let mut cursor = self.repeat(support::J_INV, depth, si);
                let last = closed.len().saturating_sub(1);
                for (m, y) in closed.iter().enumerate() {
                    if self.current.contains_key(y) {
                        let e = self.emit_apply(sup(support::CAR), cursor.clone());
                        let e = self.repeat(support::J, depth, e);
                        self.accumulate(y, e);
                    }
                    if m < last {
                        cursor = self.emit_apply(sup(support::CDR), cursor);
                    }
                }
            }
        }
        Ok(())
    }
}

fn build(lam: &Rc<Lambda>, cache: &TransformCache) -> Result<Rc<Lambda>> {
    let x0 = &lam.param;
    let bindings = &lam.body.bindings;
    let n = bindings.len();
    let xn = &lam.body.result;
    let closed = bree(lam);
    let mut fresh = Fresh { counter: 0 };

    let mut forward = Vec::new();
    for b in bindings {
        let pair = fresh.next();
        forward.extend(phi(b, pair, cache)?);
    }

    // Backpropagator è.
    let mut back = Backward {
        out: Vec::new(),
        fresh: &mut fresh,
        current: HashMap::new(),
    };
    let mut seen = BTreeSet::new();
    let zeroed = closed
        .iter()
        .chain(std::iter::once(x0))
        .chain(bindings[..n - 1].iter().map(|b| &b.target));
    for x in zeroed {
        if !seen.insert(x.clone()) {
            return Err(Error::Internal(format!("`{x}` bound twice in one body")));
        }
        let primal = back.emit_apply(sup(support::J_INV), x.reverse());
        back.out
            .push(Binding::apply(x.sensitivity(), sup(support::ZERO), primal));
        back.current.insert(x.clone(), x.sensitivity());
    }
    back.current.insert(xn.clone(), xn.sensitivity());
    for b in bindings.iter().rev() {
        back.rho(b)?;
    }
    let items = closed
        .iter()
        .map(|x| back.current[x].clone())
        .collect::<Vec<_>>();
    let list = back.tagged_list(items, x0.reverse_depth());
    let s0 = back.current[x0].clone();
    let result = back.pair(list, s0);
    let back_body = AnfBody {
        bindings: std::mem::take(&mut back.out),
        result,
    };
    let backprop = Lambda::new(xn.sensitivity(), back_body, Origin::Source)?;

    let bp = fresh.next();
    forward.push(Binding::abstraction(bp.clone(), backprop));
    let half = fresh.next();
    forward.push(Binding::apply(half.clone(), sup(support::CONS), xn.reverse()));
    let out = fresh.next();
    forward.push(Binding::apply(out.clone(), half, bp));

    Lambda::new(
        x0.reverse(),
        AnfBody {
            bindings: forward,
            result: out,
        },
        Origin::Transformed(lam.clone()),
    )
}

/// Recovers the source of a lambda that has the shape [`transform_lambda`] produces,
/// for transformed code that was printed and read back.
pub fn untransform(t: &Lambda) -> Option<Rc<Lambda>> {
    let param = t.param.unreverse()?;
    let bs = &t.body.bindings;
    let n = bs.len();
    if n < 3 {
        return None;
    }
    let result = match (&bs[n - 3].rhs, &bs[n - 2].rhs, &bs[n - 1].rhs) {
        (Rhs::Abstraction(bp), Rhs::Apply(cons, xn), Rhs::Apply(half, b))
            if cons == &sup(support::CONS)
                && half == &bs[n - 2].target
                && b == &bs[n - 3].target
                && bp.param.tags().last() == Some(&crate::syntax::Tag::Sensitivity) =>
        {
            xn.unreverse()?
        }
        _ => return None,
    };
    let mut out = Vec::new();
    let mut i = 0;
    while i < n - 3 {
        let b = &bs[i];
        match &b.rhs {
            Rhs::Alias(x) => out.push(Binding::alias(b.target.unreverse()?, x.unreverse()?)),
            Rhs::Abstraction(l) => {
                out.push(Binding::abstraction(b.target.unreverse()?, untransform(l)?))
            }
            Rhs::Apply(f, x) => {
                let car = bs.get(i + 1)?;
                let target = car.target.unreverse()?;
                if car.rhs != Rhs::Apply(sup(support::CAR), b.target.clone())
                    || bs.get(i + 2)?.target != target.backpropagator()
                {
                    return None;
                }
                out.push(Binding::apply(target, f.unreverse()?, x.unreverse()?));
                i += 2;
            }
        }
        i += 1;
    }
    let body = AnfBody {
        bindings: out,
        result,
    };
    // A transform of a transform recovers a lambda that is itself transformed.
    relink(&Lambda::new(param, body, Origin::Source).ok()?).ok()
}

/// Marks every lambda in `lam` that has the transformed shape as the transform of its
/// recovered source, so `J⁻¹` can map closures of read-back code to the primal world.
pub fn relink(lam: &Rc<Lambda>) -> Result<Rc<Lambda>> {
    let mut changed = false;
    let mut bindings = Vec::with_capacity(lam.body.bindings.len());
    for b in &lam.body.bindings {
        bindings.push(match &b.rhs {
            Rhs::Abstraction(inner) => {
                let relinked = relink(inner)?;
                changed |= !Rc::ptr_eq(&relinked, inner);
                Binding::abstraction(b.target.clone(), relinked)
            }
            _ => b.clone(),
        });
    }
    let origin = match (&lam.origin, lam.param.reverse_depth()) {
        (Origin::Source, d) if d > 0 => match untransform(lam) {
            Some(src) => {
                changed = true;
                Origin::Transformed(src)
            }
            None => Origin::Source,
        },
        (o, _) => o.clone(),
    };
    if !changed {
        return Ok(lam.clone());
    }
    Lambda::new(
        lam.param.clone(),
        AnfBody {
            bindings,
            result: lam.body.result.clone(),
        },
        origin,
    )
}

/// Source of `t⃖` for a primitive, in internal syntax.
///
/// The parameter is `%a^r`, the reverse-tagged argument; `%x` is its primal. Every
/// backpropagator returns `([], input sensitivity)`; sensitivities of pair arguments are
/// two-element lists, the shape `zero` gives an encoded pair. Attaching passes the output
/// sensitivity to the primal and a zero to the derivative.
pub fn primitive_source(p: Prim) -> String {
    let primal = "(%rad-inverse %a^r)";
    let wrap = |bind: &str, result: &str, sens: &str| {
        format!(
            "(lambda (%a^r) (let* ({bind}) (cons (%rad {result}) (lambda (%dy) (cons () {sens})))))"
        )
    };
    let pair_bind = format!("(%x {primal}) (%x1 (car %x)) (%x2 (cdr %x))");
    let unary_bind = format!("(%x {primal})");
    match p {
        Prim::Unary(u) => wrap(
            &unary_bind,
            &format!("({} %x)", u.name()),
            &format!("(* {} %dy)", u.derivative_source()),
        ),
        Prim::Binary(b) => {
            let (d1, d2) = b.partials_source();
            wrap(
                &pair_bind,
                &format!("({} %x)", b.name()),
                &format!("(list (* {d1} %dy) (* {d2} %dy))"),
            )
        }
        Prim::UnaryBool(_)
        | Prim::BinaryBool(_)
        | Prim::Zero
        | Prim::JBackprop
        | Prim::JInvBackprop => {
            wrap(&unary_bind, &format!("({} %x)", p.name()), "(zero %x)")
        }
        Prim::Plus => wrap(&unary_bind, "(plus %x)", "(list %dy %dy)"),
        Prim::J => wrap("(%x %a^r)", "%x", "(%rad-backprop (cons %a^r %dy))"),
        Prim::JInv => wrap(
            &unary_bind,
            "(%rad-inverse %x)",
            "(%rad-inverse-backprop (cons %x %dy))",
        ),
        Prim::Attach => wrap(&pair_bind, "(%attach %x)", "(list %dy (zero %x2))"),
    }
}
