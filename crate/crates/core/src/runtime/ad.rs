//! `0`, `⊕`, `J` and `J⁻¹` on values.

use std::rc::Rc;

use super::{compile, Closure, Interpreter, Value};
use crate::error::{Error, Result};
use crate::prim::Prim;
use crate::reader::Mode;
use crate::syntax::{Expr, Origin};
use crate::transform::{primitive_source, transform_lambda, EnvSource};

impl Interpreter {
    /// `0 v`: a zero of the sensitivity type of `v`.
    pub fn zero_of(&self, v: &Value) -> Result<Value> {
        Ok(match v {
            Value::Empty | Value::Primitive(_) => Value::Empty,
            Value::Real(_) => Value::Real(0.0),
            Value::Tagged(inner) => Value::tagged(self.zero_of(inner)?),
            Value::Custom(c) => self.zero_of(&c.0)?,
            Value::Closure(c) => match &c.lambda.origin {
                // `0 ⃖v ≡ ⃖(0 v)` lifted to closures.
                Origin::Transformed(_) => {
                    let primal = self.j_inverse_closure(c)?;
                    let z = self.zero_of(&primal)?;
                    self.j(&z)?
                }
                _ => {
                    let items = c
                        .lambda
                        .bree_indices()
                        .iter()
                        .map(|&i| self.zero_of(&c.env[i]))
                        .collect::<Result<Vec<_>>>()?;
                    self.tagged_list(items, c.lambda.param.reverse_depth())?
                }
            },
        })
    }

    /// `v1 ,ₓ v2` where `x` carries `depth` reverse tags.
    pub fn tagged_pair(&self, a: Value, b: Value, depth: usize) -> Result<Value> {
        if depth == 0 {
            return Ok(Value::cons(a, b));
        }
        let a = self.j_inverse(&a)?;
        let b = self.j_inverse(&b)?;
        let inner = self.tagged_pair(a, b, depth - 1)?;
        self.j(&inner)
    }

    /// `[]ₓ`
    pub fn tagged_empty(&self, depth: usize) -> Value {
        (0..depth).fold(Value::Empty, |v, _| Value::tagged(v))
    }

    pub fn tagged_list(&self, items: Vec<Value>, depth: usize) -> Result<Value> {
        items
            .into_iter()
            .rev()
            .try_fold(self.tagged_empty(depth), |acc, v| {
                self.tagged_pair(v, acc, depth)
            })
    }

    /// `v1 ⊕ v2` on conformant values.
    pub fn plus(&self, a: &Value, b: &Value) -> Result<Value> {
        self.plus_at(a, b, &mut Vec::new())
    }

    fn plus_at(&self, a: &Value, b: &Value, path: &mut Vec<String>) -> Result<Value> {
        Ok(match (a, b) {
            (Value::Custom(c), _) => self.plus_at(&c.0, b, path)?,
            (_, Value::Custom(c)) => self.plus_at(a, &c.0, path)?,
            (Value::Empty, Value::Empty) => Value::Empty,
            (Value::Real(x), Value::Real(y)) => Value::Real(x + y),
            (Value::Tagged(x), Value::Tagged(y)) => {
                path.push("reverse".to_string());
                let v = Value::tagged(self.plus_at(x, y, path)?);
                path.pop();
                v
            }
            (Value::Primitive(p), Value::Primitive(q)) if p == q => a.clone(),
            (Value::Closure(c1), Value::Closure(c2)) if c1.lambda == c2.lambda => {
                let pair = c1.lambda.is_pair();
                let env = c1
                    .lambda
                    .free()
                    .iter()
                    .enumerate()
                    .map(|(i, x)| {
                        path.push(match (pair, i) {
                            (true, 0) => "car".to_string(),
                            (true, _) => "cdr".to_string(),
                            _ => format!("free variable `{x}`"),
                        });
                        let v = self.plus_at(&c1.env[i], &c2.env[i], path);
                        path.pop();
                        v
                    })
                    .collect::<Result<Vec<_>>>()?;
                Value::Closure(Rc::new(Closure {
                    lambda: c1.lambda.clone(),
                    env,
                }))
            }
            _ => {
                let path = if path.is_empty() {
                    "top level".to_string()
                } else {
                    path.iter().rev().cloned().collect::<Vec<_>>().join(" of ")
                };
                return Err(Error::Conformance {
                    path,
                    left: a.shape(),
                    right: b.shape(),
                });
            }
        })
    }

    /// `⃖J v`
    pub fn j(&self, v: &Value) -> Result<Value> {
        Ok(match v {
            Value::Empty | Value::Real(_) | Value::Tagged(_) => Value::tagged(v.clone()),
            Value::Primitive(p) => self.transform_primitive(*p)?,
            Value::Custom(c) => {
                if let Value::Closure(d) = &c.1 {
                    self.custom_inverse
                        .borrow_mut()
                        .entry(Rc::as_ptr(d))
                        .or_insert_with(|| (d.clone(), v.clone()));
                }
                c.1.clone()
            }
            Value::Closure(c) => {
                if let Some((_, out)) = self.j_memo.borrow().get(&Rc::as_ptr(c)) {
                    return Ok(out.clone());
                }
                let t = transform_lambda(&c.lambda, &self.cache)?;
                let env = t
                    .env
                    .iter()
                    .map(|s| match s {
                        EnvSource::Transformed(i) => self.j(&c.env[*i]),
                        EnvSource::TopLevel(x) => self
                            .sigma0(x)
                            .cloned()
                            .ok_or_else(|| Error::Unbound(x.to_string())),
                    })
                    .collect::<Result<Vec<_>>>()?;
                let out = Value::Closure(Rc::new(Closure {
                    lambda: t.lambda.clone(),
                    env,
                }));
                self.j_memo
                    .borrow_mut()
                    .insert(Rc::as_ptr(c), (c.clone(), out.clone()));
                if let Value::Closure(o) = &out {
                    self.jinv_memo
                        .borrow_mut()
                        .insert(Rc::as_ptr(o), (o.clone(), v.clone()));
                }
                out
            }
        })
    }

    /// `⃖J⁻¹ v`
    pub fn j_inverse(&self, v: &Value) -> Result<Value> {
        let not_tagged = || Error::NotReverseTagged(v.shape());
        Ok(match v {
            Value::Tagged(inner) => (**inner).clone(),
            Value::Custom(c) => Value::custom(self.j_inverse(&c.0)?, v.clone()),
            Value::Empty | Value::Real(_) | Value::Primitive(_) => return Err(not_tagged()),
            Value::Closure(c) => {
                if let Some((_, custom)) = self.custom_inverse.borrow().get(&Rc::as_ptr(c)) {
                    return Ok(custom.clone());
                }
                self.j_inverse_closure(c)?
            }
        })
    }

    /// `⃖J⁻¹` of a closure by its structure alone, ignoring attached derivatives.
    fn j_inverse_closure(&self, c: &Rc<Closure>) -> Result<Value> {
        let v = Value::Closure(c.clone());
        let not_tagged = || Error::NotReverseTagged(v.shape());
        Ok({
            {
                if let Some((_, out)) = self.jinv_memo.borrow().get(&Rc::as_ptr(c)) {
                    return Ok(out.clone());
                }
                let out = match &c.lambda.origin {
                    Origin::Primitive(p) => Value::Primitive(*p),
                    Origin::Transformed(src) => {
                        let env = src
                            .free()
                            .iter()
                            .map(|x| {
                                let i = c
                                    .lambda
                                    .free()
                                    .binary_search(&x.reverse())
                                    .map_err(|_| {
                                        Error::Internal(format!(
                                            "transformed closure lost `{}`",
                                            x.reverse()
                                        ))
                                    })?;
                                self.j_inverse(&c.env[i])
                            })
                            .collect::<Result<Vec<_>>>()?;
                        Value::Closure(Rc::new(Closure {
                            lambda: src.clone(),
                            env,
                        }))
                    }
                    Origin::Source => return Err(not_tagged()),
                };
                self.jinv_memo
                    .borrow_mut()
                    .insert(Rc::as_ptr(c), (c.clone(), out.clone()));
                if let Value::Closure(o) = &out {
                    self.j_memo
                        .borrow_mut()
                        .insert(Rc::as_ptr(o), (o.clone(), v.clone()));
                }
                out
            }
        })
    }

    /// Sensitivity of `x` given `Jx` and the sensitivity `dy` of `Jx`.
    ///
    /// When `x` carries an attached derivative, `Jx` is that derivative and `dy` is laid
    /// out by its free variables; those shared with the primal carry over.
    pub fn j_backprop(&self, jx: &Value, dy: &Value) -> Result<Value> {
        match self.registered_custom(jx) {
            Some(Value::Custom(c)) => self.convert_sensitivity(jx, dy, &c.0),
            _ => self.j_inverse(dy),
        }
    }

    /// Sensitivity of `x` given the sensitivity `dy` of `J⁻¹ x`.
    pub fn j_inverse_backprop(&self, x: &Value, dy: &Value) -> Result<Value> {
        match self.registered_custom(x) {
            Some(Value::Custom(c)) => self.convert_sensitivity(&c.0, dy, x),
            _ => self.j(dy),
        }
    }

    fn registered_custom(&self, v: &Value) -> Option<Value> {
        match v {
            Value::Closure(c) => self
                .custom_inverse
                .borrow()
                .get(&Rc::as_ptr(c))
                .map(|(_, custom)| custom.clone()),
            _ => None,
        }
    }

    /// Moves a closure sensitivity of `from` onto the free variables of `to` that have
    /// the same name and value.
    fn convert_sensitivity(&self, from: &Value, dy: &Value, to: &Value) -> Result<Value> {
        let (Value::Closure(f), Value::Closure(t)) = (from, to) else {
            return self.zero_of(to);
        };
        if is_zero_sensitivity(dy) {
            return self.zero_of(to);
        }
        let f_depth = f.lambda.param.reverse_depth();
        let mut cursor = dy.clone();
        let mut found = Vec::new();
        for &i in f.lambda.bree_indices() {
            let mut inner = cursor.clone();
            for _ in 0..f_depth {
                inner = self.j_inverse(&inner)?;
            }
            let Some((mut head, mut rest)) = inner.as_pair().map(|(a, b)| (a.clone(), b.clone()))
            else {
                return self.zero_of(to);
            };
            for _ in 0..f_depth {
                head = self.j(&head)?;
                rest = self.j(&rest)?;
            }
            found.push((&f.lambda.free()[i], &f.env[i], head));
            cursor = rest;
        }
        let items = t
            .lambda
            .bree_indices()
            .iter()
            .map(|&i| {
                let (name, value) = (&t.lambda.free()[i], &t.env[i]);
                let mut acc = self.zero_of(value)?;
                for (n, v, s) in &found {
                    if *n == name && *v == value {
                        acc = self.plus(&acc, s)?;
                    }
                }
                Ok(acc)
            })
            .collect::<Result<Vec<_>>>()?;
        self.tagged_list(items, t.lambda.param.reverse_depth())
    }

    /// `∇ f x`, evaluated directly rather than through the stdlib definition, with a fresh
    /// step budget.
    pub fn gradient(&self, f: &Value, x: Value) -> Result<Value> {
        self.begin();
        let jf = self.j(f)?;
        let jx = self.j(&x)?;
        let out = self.call_continuing(&jf, jx)?;
        let (_, bp) = out
            .as_pair()
            .ok_or_else(|| Error::Internal("transformed call did not return a pair".into()))?;
        let sens = self.call_continuing(bp, Value::Real(1.0))?;
        let (_, dx) = sens
            .as_pair()
            .ok_or_else(|| Error::Internal("backpropagator did not return a pair".into()))?;
        Ok(dx.clone())
    }

    /// `t⃖`, built once per interpreter.
    pub fn transform_primitive(&self, p: Prim) -> Result<Value> {
        if let Some(v) = self.prim_transforms.borrow().get(&p) {
            return Ok(v.clone());
        }
        let lam = match compile(&primitive_source(p), Mode::Internal)? {
            Expr::Lam(l) => l.with_origin(Origin::Primitive(p))?,
            _ => return Err(Error::Internal(format!("transform of {p} is not a lambda"))),
        };
        let env = lam
            .free()
            .iter()
            .map(|x| {
                self.sigma0(x)
                    .cloned()
                    .ok_or_else(|| Error::Internal(format!("`{x}` missing from σ₀")))
            })
            .collect::<Result<Vec<_>>>()?;
        let v = Value::Closure(Rc::new(Closure { lambda: lam, env }));
        self.prim_transforms.borrow_mut().insert(p, v.clone());
        Ok(v)
    }
}

/// True when `v` is built only from `[]`, zeros and closures whose untransformed free
/// variables hold such values.
pub(crate) fn is_zero_sensitivity(v: &Value) -> bool {
    match v {
        Value::Empty | Value::Primitive(_) => true,
        Value::Real(r) => *r == 0.0,
        Value::Tagged(inner) => is_zero_sensitivity(inner),
        Value::Custom(c) => is_zero_sensitivity(&c.0),
        Value::Closure(c) => c
            .lambda
            .bree_indices()
            .iter()
            .all(|&i| is_zero_sensitivity(&c.env[i])),
    }
}
