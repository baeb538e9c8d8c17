use super::{Term, Variable};
use crate::error::{Error, Result};
use crate::prim::Prim;
use crate::reader::{print_surface, SurfaceExpr};

/// Expands surface forms into core terms.
///
/// Encodings: `(let ((x e1)) e)` is `((λx. e) e1)`; `(if c a b)` is
/// `((c (cons (λ_. a) (λ_. b))) ())`; `(cons a b)` applies the pair constructor
/// `λx1. λx2. λx3. ((x3 x1) x2)` inline; `letrec` goes through an applicative-order
/// fixpoint combinator; a binary primitive call `(+ a b)` becomes `(+ (cons a b))`.
#[derive(Default)]
pub struct Desugarer {
    counter: usize,
}

pub fn desugar(e: &SurfaceExpr) -> Result<Term> {
    Desugarer::default().desugar(e)
}

fn syntax_error<T>(e: &SurfaceExpr, msg: &str) -> Result<T> {
    Err(Error::Syntax {
        form: print_surface(e),
        msg: msg.to_string(),
    })
}

fn symbol_var(s: &str) -> Result<Variable> {
    Variable::parse_internal(s).ok_or_else(|| Error::Syntax {
        form: s.to_string(),
        msg: "malformed variable".to_string(),
    })
}

pub(crate) fn pair_constructor() -> Term {
    let body = Term::app(
        Term::app(Term::var("x3"), Term::var("x1")),
        Term::var("x2"),
    );
    Term::lam(
        Variable::new("x1"),
        Term::lam(Variable::new("x2"), Term::lam(Variable::new("x3"), body)),
    )
}

pub(crate) fn cons_term(a: Term, b: Term) -> Term {
    Term::app(Term::app(pair_constructor(), a), b)
}

fn selector(first: bool) -> Term {
    let pick = if first { "x1" } else { "x2" };
    Term::lam(
        Variable::new("x1"),
        Term::lam(Variable::new("x2"), Term::var(pick)),
    )
}

pub(crate) fn car_term(e: Term) -> Term {
    Term::app(e, selector(true))
}

pub(crate) fn cdr_term(e: Term) -> Term {
    Term::app(e, selector(false))
}

fn let_term(x: Variable, e: Term, body: Term) -> Term {
    Term::app(Term::lam(x, body), e)
}

fn nil() -> Term {
    Term::Var(Variable::empty())
}

impl Desugarer {
    fn fresh(&mut self, stem: &str) -> Variable {
        self.counter += 1;
        Variable::new(&format!("%{stem}{}", self.counter))
    }

    /// `Z = λF. (λx. F (λv. (x x) v)) (λx. F (λv. (x x) v))`
    fn z_combinator(&mut self) -> Term {
        let f = self.fresh("F");
        let x = self.fresh("x");
        let v = self.fresh("v");
        let half = Term::lam(
            x.clone(),
            Term::app(
                Term::Var(f.clone()),
                Term::lam(
                    v.clone(),
                    Term::app(
                        Term::app(Term::Var(x.clone()), Term::Var(x.clone())),
                        Term::Var(v.clone()),
                    ),
                ),
            ),
        );
        Term::lam(f, Term::app(half.clone(), half))
    }

    pub fn desugar(&mut self, e: &SurfaceExpr) -> Result<Term> {
        match e {
            SurfaceExpr::Symbol(s) => Ok(Term::Var(symbol_var(s)?)),
            SurfaceExpr::Real(r) => Ok(Term::Var(Variable::real(*r))),
            SurfaceExpr::Empty => Ok(nil()),
            SurfaceExpr::Dotted(..) => syntax_error(e, "dotted pairs are data, not expressions"),
            SurfaceExpr::List(items) => self.list(e, items),
        }
    }

    fn list(&mut self, whole: &SurfaceExpr, items: &[SurfaceExpr]) -> Result<Term> {
        let head = match &items[0] {
            SurfaceExpr::Symbol(s) => Some(s.as_str()),
            _ => None,
        };
        let args = &items[1..];
        match head {
            Some("lambda") | Some("λ") => self.lambda(whole, args),
            Some("let") => self.let_form(whole, args),
            Some("let*") => self.let_star(whole, args),
            Some("letrec") => self.letrec(whole, args),
            Some("if") => {
                if args.len() != 3 {
                    return syntax_error(whole, "if takes a condition and two branches");
                }
                let c = self.desugar(&args[0])?;
                let a = self.desugar(&args[1])?;
                let b = self.desugar(&args[2])?;
                let thunk_a = Term::lam(self.fresh("_"), a);
                let thunk_b = Term::lam(self.fresh("_"), b);
                Ok(Term::app(Term::app(c, cons_term(thunk_a, thunk_b)), nil()))
            }
            Some("cons") => {
                if args.len() != 2 {
                    return syntax_error(whole, "cons takes two arguments");
                }
                let a = self.desugar(&args[0])?;
                let b = self.desugar(&args[1])?;
                Ok(cons_term(a, b))
            }
            Some("car") | Some("cdr") => {
                if args.len() != 1 {
                    return syntax_error(whole, "car/cdr take one argument");
                }
                let x = self.desugar(&args[0])?;
                Ok(if head == Some("car") {
                    car_term(x)
                } else {
                    cdr_term(x)
                })
            }
            Some("list") => {
                let mut acc = nil();
                for a in args.iter().rev() {
                    acc = cons_term(self.desugar(a)?, acc);
                }
                Ok(acc)
            }
            Some("define") => syntax_error(whole, "define is only allowed at top level"),
            Some(name) if args.len() == 2 && Prim::by_name(name).is_some_and(Prim::takes_pair) => {
                let a = self.desugar(&args[0])?;
                let b = self.desugar(&args[1])?;
                Ok(Term::app(Term::Var(symbol_var(name)?), cons_term(a, b)))
            }
            _ => {
                let mut f = self.desugar(&items[0])?;
                if args.is_empty() {
                    return Ok(Term::app(f, nil()));
                }
                for a in args {
                    f = Term::app(f, self.desugar(a)?);
                }
                Ok(f)
            }
        }
    }

    fn lambda(&mut self, whole: &SurfaceExpr, args: &[SurfaceExpr]) -> Result<Term> {
        if args.len() != 2 {
            return syntax_error(whole, "lambda takes a parameter list and one body");
        }
        let params = match &args[0] {
            SurfaceExpr::Empty => vec![self.fresh("_")],
            SurfaceExpr::List(ps) => ps
                .iter()
                .map(|p| match p {
                    SurfaceExpr::Symbol(s) => symbol_var(s),
                    _ => syntax_error(whole, "parameters must be symbols"),
                })
                .collect::<Result<_>>()?,
            SurfaceExpr::Symbol(s) => vec![symbol_var(s)?],
            _ => return syntax_error(whole, "malformed parameter list"),
        };
        let body = self.desugar(&args[1])?;
        Ok(params
            .into_iter()
            .rev()
            .fold(body, |b, p| Term::lam(p, b)))
    }

    fn bindings(
        &mut self,
        whole: &SurfaceExpr,
        spec: &SurfaceExpr,
    ) -> Result<Vec<(Variable, SurfaceExpr)>> {
        let items = match spec {
            SurfaceExpr::Empty => return Ok(Vec::new()),
            SurfaceExpr::List(items) => items,
            _ => return syntax_error(whole, "expected a binding list"),
        };
        items
            .iter()
            .map(|b| match b {
                SurfaceExpr::List(pair) if pair.len() == 2 => match &pair[0] {
                    SurfaceExpr::Symbol(s) => Ok((symbol_var(s)?, pair[1].clone())),
                    _ => syntax_error(whole, "binding name must be a symbol"),
                },
                _ => syntax_error(whole, "each binding is (name expr)"),
            })
            .collect()
    }

    fn let_form(&mut self, whole: &SurfaceExpr, args: &[SurfaceExpr]) -> Result<Term> {
        if args.len() != 2 {
            return syntax_error(whole, "let takes bindings and one body");
        }
        let bs = self.bindings(whole, &args[0])?;
        let body = self.desugar(&args[1])?;
        let mut f = bs
            .iter()
            .rev()
            .fold(body, |b, (x, _)| Term::lam(x.clone(), b));
        for (_, e) in &bs {
            f = Term::app(f, self.desugar(e)?);
        }
        Ok(f)
    }

    fn let_star(&mut self, whole: &SurfaceExpr, args: &[SurfaceExpr]) -> Result<Term> {
        if args.len() != 2 {
            return syntax_error(whole, "let* takes bindings and one body");
        }
        let bs = self.bindings(whole, &args[0])?;
        let mut inits = Vec::new();
        for (x, e) in &bs {
            inits.push((x.clone(), self.desugar(e)?));
        }
        let body = self.desugar(&args[1])?;
        Ok(inits
            .into_iter()
            .rev()
            .fold(body, |b, (x, e)| let_term(x, e, b)))
    }

    fn letrec(&mut self, whole: &SurfaceExpr, args: &[SurfaceExpr]) -> Result<Term> {
        if args.len() != 2 {
            return syntax_error(whole, "letrec takes bindings and one body");
        }
        let bs = self.bindings(whole, &args[0])?;
        if bs.is_empty() {
            return syntax_error(whole, "letrec needs at least one binding");
        }
        let body = self.desugar(&args[1])?;
        let z = self.z_combinator();
        if bs.len() == 1 {
            let (f, e) = &bs[0];
            let e = self.desugar(e)?;
            return Ok(let_term(
                f.clone(),
                Term::app(z, Term::lam(f.clone(), e)),
                body,
            ));
        }
        // Mutual recursion: one fixpoint over the list of all bound values. Each name is
        // an eta-expanded selector into the recursive list.
        let this = self.fresh("self");
        let all = self.fresh("rec");
        let nth = |root: Term, i: usize| {
            let mut t = root;
            for _ in 0..i {
                t = cdr_term(t);
            }
            car_term(t)
        };
        let mut values = nil();
        for (_, e) in bs.iter().rev() {
            values = cons_term(self.desugar(e)?, values);
        }
        let mut generator_body = values;
        for (i, (f, _)) in bs.iter().enumerate().rev() {
            let v = self.fresh("v");
            let sel = Term::lam(
                v.clone(),
                Term::app(nth(Term::Var(this.clone()), i), Term::Var(v)),
            );
            generator_body = let_term(f.clone(), sel, generator_body);
        }
        let mut rest = body;
        for (i, (f, _)) in bs.iter().enumerate().rev() {
            rest = let_term(f.clone(), nth(Term::Var(all.clone()), i), rest);
        }
        Ok(let_term(
            all,
            Term::app(z, Term::lam(this, generator_body)),
            rest,
        ))
    }
}
