use std::rc::Rc;

use super::{AnfBody, Binding, Expr, Lambda, Origin, Rhs, Term, Variable};
use crate::error::Result;

/// Converts a core term to an [`Expr`] whose lambda bodies are in A-normal form.
///
/// Applications keep their left-to-right, operator-before-operand order. Fresh targets are
/// `%t1`, `%t2`, ... counted per body.
pub fn to_anf(t: &Term) -> Result<Expr> {
    Ok(match t {
        Term::Var(x) => Expr::Var(x.clone()),
        Term::App(f, a) => Expr::App(Rc::new(to_anf(f)?), Rc::new(to_anf(a)?)),
        Term::Lam(x, body) => Expr::Lam(convert_lambda(x, body)?),
        Term::Let(x, e1, e2) => Expr::App(
            Rc::new(Expr::Lam(convert_lambda(x, e2)?)),
            Rc::new(to_anf(e1)?),
        ),
    })
}

/// Re-expands ANF bodies as nested `Let` terms; inverse of [`to_anf`] on its image.
pub fn anf_to_term(e: &Expr) -> Term {
    match e {
        Expr::Var(x) => Term::Var(x.clone()),
        Expr::App(f, a) => Term::app(anf_to_term(f), anf_to_term(a)),
        Expr::Lam(l) => Term::lam(l.param.clone(), lambda_body_term(l)),
    }
}

fn lambda_body_term(l: &Lambda) -> Term {
    l.body
        .bindings
        .iter()
        .rev()
        .fold(Term::Var(l.body.result.clone()), |body, b| {
            let rhs = match &b.rhs {
                Rhs::Alias(x) => Term::Var(x.clone()),
                Rhs::Apply(f, x) => Term::app(Term::Var(f.clone()), Term::Var(x.clone())),
                Rhs::Abstraction(inner) => {
                    Term::lam(inner.param.clone(), lambda_body_term(inner))
                }
            };
            Term::Let(b.target.clone(), Box::new(rhs), Box::new(body))
        })
}

struct BodyBuilder {
    bindings: Vec<Binding>,
    counter: usize,
}

impl BodyBuilder {
    fn fresh(&mut self) -> Variable {
        self.counter += 1;
        Variable::new(&format!("%t{}", self.counter))
    }

    /// Emits bindings computing `t`; returns the variable holding its value.
    fn atom(&mut self, t: &Term) -> Result<Variable> {
        Ok(match t {
            Term::Var(x) => x.clone(),
            Term::Let(x, e1, e2) => {
                let rhs = self.rhs(e1)?;
                self.bindings.push(Binding {
                    target: x.clone(),
                    rhs,
                });
                self.atom(e2)?
            }
            _ => {
                let rhs = self.rhs(t)?;
                let target = self.fresh();
                self.bindings.push(Binding {
                    target: target.clone(),
                    rhs,
                });
                target
            }
        })
    }

    fn rhs(&mut self, t: &Term) -> Result<Rhs> {
        Ok(match t {
            Term::Var(x) => Rhs::Alias(x.clone()),
            Term::App(f, a) => {
                let f = self.atom(f)?;
                let a = self.atom(a)?;
                Rhs::Apply(f, a)
            }
            Term::Lam(x, body) => Rhs::Abstraction(convert_lambda(x, body)?),
            Term::Let(..) => Rhs::Alias(self.atom(t)?),
        })
    }
}

fn convert_lambda(param: &Variable, body: &Term) -> Result<Rc<Lambda>> {
    let mut b = BodyBuilder {
        bindings: Vec::new(),
        counter: 0,
    };
    let result = b.atom(body)?;
    let result = if b.bindings.last().map(|l| &l.target) == Some(&result) {
        result
    } else {
        let t = b.fresh();
        b.bindings.push(Binding::alias(t.clone(), result));
        t
    };
    Lambda::new(
        param.clone(),
        AnfBody {
            bindings: b.bindings,
            result,
        },
        Origin::Source,
    )
}
