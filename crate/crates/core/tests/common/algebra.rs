//! Property checks for the value algebra, shared by the algebra tests and acceptance.

use std::rc::Rc;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use vlad::prim::Prim;
use vlad::reader::print_value;
use vlad::runtime::Closure;
use vlad::{Error, Interpreter, Value};

/// A recipe for a primal value, built inside an interpreter.
#[derive(Clone, Debug)]
pub enum Spec {
    Empty,
    Real(f64),
    Tagged(Box<Spec>),
    Prim(usize),
    Pair(Box<Spec>, Box<Spec>),
    /// A closure from `TEMPLATES[i]` over the given values.
    Closure(usize, Vec<Spec>),
    Custom(Box<Spec>),
    J(Box<Spec>),
}

const TEMPLATES: [(&str, usize); 3] = [
    ("(lambda (a) (lambda (x) (* x a)))", 1),
    ("(lambda (a) (lambda (b) (lambda (x) (+ (cons (* x a) (car b))))))", 2),
    ("(lambda (f) (lambda (x) (cons (f x) x)))", 1),
];

fn spec(custom: bool) -> impl Strategy<Value = Spec> {
    let leaf = prop_oneof![
        Just(Spec::Empty),
        (-1e3f64..1e3).prop_map(Spec::Real),
        (0..Prim::all().len()).prop_map(Spec::Prim),
    ];
    leaf.prop_recursive(3, 24, 3, move |inner| {
        let mut options = vec![
            inner.clone().prop_map(|s| Spec::Tagged(Box::new(s))).boxed(),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Spec::Pair(Box::new(a), Box::new(b)))
                .boxed(),
            (0..TEMPLATES.len(), prop::collection::vec(inner.clone(), 2))
                .prop_map(|(i, vs)| Spec::Closure(i, vs[..TEMPLATES[i].1].to_vec()))
                .boxed(),
            inner.clone().prop_map(|s| Spec::J(Box::new(s))).boxed(),
        ];
        if custom {
            options.push(inner.prop_map(|s| Spec::Custom(Box::new(s))).boxed());
        }
        prop::strategy::Union::new(options)
    })
}

/// Primals without attached derivatives.
pub fn plain() -> impl Strategy<Value = Spec> {
    spec(false)
}

pub fn any_value() -> impl Strategy<Value = Spec> {
    spec(true)
}

fn eval(it: &Interpreter, src: &str) -> Value {
    let form = &vlad::reader::parse(src).unwrap()[0];
    let e = vlad::syntax::to_anf(&vlad::syntax::desugar(form).unwrap()).unwrap();
    it.eval_expr(&e).unwrap()
}

pub fn build(it: &Interpreter, s: &Spec) -> Value {
    match s {
        Spec::Empty => Value::Empty,
        Spec::Real(r) => Value::Real(*r),
        Spec::Tagged(s) => Value::tagged(build(it, s)),
        Spec::Prim(i) => Value::Primitive(Prim::all()[*i]),
        Spec::Pair(a, b) => Value::cons(build(it, a), build(it, b)),
        Spec::Closure(i, vs) => {
            let mut f = eval(it, TEMPLATES[*i].0);
            for v in vs {
                f = it.call(&f, build(it, v)).unwrap();
            }
            f
        }
        Spec::Custom(s) => Value::custom(build(it, s), eval(it, "(lambda (rx) rx)")),
        Spec::J(s) => it.j(&build(it, s)).unwrap(),
    }
}

fn fresh() -> Interpreter {
    Interpreter::new()
}

/// `v` with every real replaced by the next value of `reals`.
pub fn refill(v: &Value, reals: &mut dyn Iterator<Item = f64>) -> Value {
    match v {
        Value::Real(_) => Value::Real(reals.next().unwrap()),
        Value::Tagged(inner) => Value::tagged(refill(inner, reals)),
        Value::Closure(c) => Value::Closure(Rc::new(Closure {
            lambda: c.lambda.clone(),
            env: c.env.iter().map(|v| refill(v, reals)).collect(),
        })),
        Value::Custom(c) => Value::custom(refill(&c.0, reals), c.1.clone()),
        other => other.clone(),
    }
}

fn map_reals(v: &Value, f: &dyn Fn(f64) -> f64) -> Value {
    match v {
        Value::Real(r) => Value::Real(f(*r)),
        Value::Tagged(inner) => Value::tagged(map_reals(inner, f)),
        Value::Closure(c) => Value::Closure(Rc::new(Closure {
            lambda: c.lambda.clone(),
            env: c.env.iter().map(|v| map_reals(v, f)).collect(),
        })),
        other => other.clone(),
    }
}

/// Same structure as `b`, reals within `tol · scale` where `scale` is the matching real.
fn close(a: &Value, b: &Value, scale: &Value, tol: f64) -> bool {
    match (a, b, scale) {
        (Value::Real(x), Value::Real(y), Value::Real(s)) => (x - y).abs() <= tol * s.max(1e-300),
        (Value::Tagged(x), Value::Tagged(y), Value::Tagged(s)) => close(x, y, s, tol),
        (Value::Closure(x), Value::Closure(y), Value::Closure(s)) => {
            x.lambda == y.lambda
                && x.env.len() == y.env.len()
                && x.env.iter().zip(&y.env).zip(&s.env).all(|((p, q), r)| close(p, q, r, tol))
        }
        _ => a == b,
    }
}

/// Replaces the `n`-th leaf (real or empty) with one of the other kind. Returns the
/// path to it in the form conformance errors report.
fn mutate(v: &Value, n: &mut usize) -> Option<(Value, Vec<String>)> {
    match v {
        Value::Real(_) | Value::Empty => {
            if *n == 0 {
                let swapped = match v {
                    Value::Real(_) => Value::Empty,
                    _ => Value::Real(1.0),
                };
                return Some((swapped, Vec::new()));
            }
            *n -= 1;
            None
        }
        Value::Tagged(inner) => mutate(inner, n).map(|(w, mut p)| {
            p.push("reverse".into());
            (Value::tagged(w), p)
        }),
        Value::Closure(c) => {
            for (i, e) in c.env.iter().enumerate() {
                if let Some((w, mut p)) = mutate(e, n) {
                    p.push(match (c.lambda.is_pair(), i) {
                        (true, 0) => "car".into(),
                        (true, _) => "cdr".into(),
                        _ => format!("free variable `{}`", c.lambda.free()[i]),
                    });
                    let mut env = c.env.clone();
                    env[i] = w;
                    let lambda = c.lambda.clone();
                    return Some((Value::Closure(Rc::new(Closure { lambda, env })), p));
                }
            }
            None
        }
        _ => None,
    }
}

fn leaves(v: &Value) -> usize {
    match v {
        Value::Real(_) | Value::Empty => 1,
        Value::Tagged(inner) => leaves(inner),
        Value::Closure(c) => c.env.iter().map(leaves).sum(),
        _ => 0,
    }
}

fn check<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

/// Structural equality where NaN equals NaN.
fn identical(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Real(x), Value::Real(y)) => x == y || (x.is_nan() && y.is_nan()),
        (Value::Tagged(x), Value::Tagged(y)) => identical(x, y),
        (Value::Closure(x), Value::Closure(y)) => {
            Rc::ptr_eq(x, y)
                || (x.lambda == y.lambda
                    && x.env.len() == y.env.len()
                    && x.env.iter().zip(&y.env).all(|(p, q)| identical(p, q)))
        }
        (Value::Custom(x), Value::Custom(y)) => identical(&x.0, &y.0) && identical(&x.1, &y.1),
        _ => a == b,
    }
}

fn same(a: &Value, b: &Value) -> Result<(), TestCaseError> {
    if identical(a, b) {
        Ok(())
    } else {
        Err(TestCaseError::fail(format!("{} != {}", print_value(a), print_value(b))))
    }
}

fn ok<T>(r: vlad::Result<T>) -> Result<T, TestCaseError> {
    r.map_err(|e| TestCaseError::fail(e.to_string()))
}

/// `J⁻¹ (J v) = v`, both through the identity memo and structurally in a fresh interpreter.
pub fn inverse_after_j(cases: u32) -> Result<(), String> {
    check(cases, plain(), |s| {
        let it = fresh();
        let v = build(&it, &s);
        let jv = ok(it.j(&v))?;
        same(&ok(it.j_inverse(&jv))?, &v)?;
        let other = fresh();
        same(&ok(other.j_inverse(&jv))?, &v)
    })
}

/// `J (J⁻¹ w) = w` for reverse-tagged `w`.
pub fn j_after_inverse(cases: u32) -> Result<(), String> {
    check(cases, plain(), |s| {
        let it = fresh();
        let w = ok(it.j(&build(&it, &s)))?;
        let other = fresh();
        let back = ok(other.j_inverse(&w))?;
        same(&ok(other.j(&back))?, &w)?;
        same(&ok(it.j(&ok(it.j_inverse(&w))?))?, &w)
    })
}

/// The five primal-projection rules of attached derivatives.
pub fn projections(cases: u32) -> Result<(), String> {
    check(
        cases,
        (any_value(), any_value(), any_value(), -1e3f64..1e3, prop::collection::vec(-1e3f64..1e3, 64)),
        |(p, g, q, x, reals)| {
            let it = fresh();
            let v1 = build(&it, &p);
            let v2 = build(&it, &g);
            let custom = Value::custom(v1.clone(), v2.clone());

            // A (v1 ↤ v2) v ≡ A v1 v
            let lhs = it.call(&custom, Value::Real(x)).map_err(|e| e.to_string());
            let rhs = it.call(&v1, Value::Real(x)).map_err(|e| e.to_string());
            match (&lhs, &rhs) {
                (Ok(a), Ok(b)) => same(a, b)?,
                (Err(a), Err(b)) => prop_assert_eq!(a, b),
                _ => prop_assert!(false, "{:?} vs {:?}", lhs, rhs),
            }

            // 0 (v1 ↤ v2) ≡ 0 v1
            same(&ok(it.zero_of(&custom))?, &ok(it.zero_of(&v1))?)?;

            // (v1 ↤ v2) ⊕ v ≡ v1 ⊕ v and v ⊕ (v1 ↤ v2) ≡ v ⊕ v1, on a conformant v.
            let v = refill(&v1, &mut reals.iter().copied().cycle());
            same(&ok(it.plus(&custom, &v))?, &ok(it.plus(&v1, &v))?)?;
            same(&ok(it.plus(&v, &custom))?, &ok(it.plus(&v, &v1))?)?;
            let w = build(&it, &q);
            let left = it.plus(&custom, &w).map_err(|e| e.to_string());
            let right = it.plus(&v1, &w).map_err(|e| e.to_string());
            prop_assert_eq!(left.is_ok(), right.is_ok());

            // A (↤) ⟨v1, v2⟩ ≡ v1 ↤ v2
            let attach = Value::Primitive(Prim::Attach);
            same(&ok(it.call(&attach, Value::cons(v1.clone(), v2.clone())))?, &custom)
        },
    )
}

/// `J (v1 ↤ v2) ≡ v2` and `J⁻¹ (v1 ↤ v2) ≡ (J⁻¹ v1) ↤ (v1 ↤ v2)`.
pub fn j_rules(cases: u32) -> Result<(), String> {
    check(cases, (plain(), any_value()), |(p, g)| {
        let it = fresh();
        let v2 = build(&it, &g);
        let custom = Value::custom(build(&it, &p), v2.clone());
        same(&ok(it.j(&custom))?, &v2)?;

        let v1 = ok(it.j(&build(&it, &p)))?;
        let custom = Value::custom(v1.clone(), v2);
        let expected = Value::custom(ok(it.j_inverse(&v1))?, custom.clone());
        same(&ok(it.j_inverse(&custom))?, &expected)
    })
}

/// Identity, commutativity and associativity of ⊕ on sensitivities of random primals.
pub fn monoid(cases: u32) -> Result<(), String> {
    check(
        cases,
        (any_value(), prop::collection::vec(-1e3f64..1e3, 192)),
        |(p, reals)| {
            let it = fresh();
            let zero = ok(it.zero_of(&build(&it, &p)))?;
            let mut reals = reals.into_iter().cycle();
            let a = refill(&zero, &mut reals);
            let b = refill(&zero, &mut reals);
            let c = refill(&zero, &mut reals);

            same(&ok(it.plus(&a, &zero))?, &a)?;
            same(&ok(it.plus(&zero, &a))?, &a)?;
            same(&ok(it.plus(&a, &b))?, &ok(it.plus(&b, &a))?)?;

            let left = ok(it.plus(&ok(it.plus(&a, &b))?, &c))?;
            let right = ok(it.plus(&a, &ok(it.plus(&b, &c))?))?;
            let abs = |v: &Value| map_reals(v, &f64::abs);
            let scale = ok(it.plus(&ok(it.plus(&abs(&a), &abs(&b)))?, &abs(&c)))?;
            prop_assert!(
                close(&left, &right, &scale, 1e-12),
                "{} vs {}",
                print_value(&left),
                print_value(&right)
            );
            Ok(())
        },
    )
}

/// Changing one leaf of a sensitivity makes ⊕ fail, naming the path to that leaf.
pub fn non_conformance(cases: u32) -> Result<(), String> {
    check(cases, (any_value(), any::<prop::sample::Index>()), |(p, pick)| {
        let it = fresh();
        let zero = ok(it.zero_of(&build(&it, &p)))?;
        let n = leaves(&zero);
        prop_assume!(n > 0);
        let (bad, path) = mutate(&zero, &mut pick.index(n)).unwrap();
        let expected = if path.is_empty() {
            "top level".to_string()
        } else {
            path.join(" of ")
        };
        for r in [it.plus(&zero, &bad), it.plus(&bad, &zero)] {
            match r {
                Err(Error::Conformance { path, .. }) => prop_assert_eq!(&path, &expected),
                other => prop_assert!(false, "expected a conformance error, got {:?}", other.map(|v| print_value(&v))),
            }
        }
        Ok(())
    })
}
