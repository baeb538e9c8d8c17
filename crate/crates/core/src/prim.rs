//! Primitive operations bound in the top-level environment.

use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UnaryOp {
    Sqrt,
    Exp,
    Log,
    Sin,
    Cos,
    Neg,
    Abs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Atan2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UnaryPred {
    IsZero,
    IsPositive,
    IsNegative,
    IsNull,
    IsReal,
    IsPair,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinaryPred {
    Lt,
    Le,
    Eq,
    Gt,
    Ge,
}

/// A primitive value `t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Prim {
    Unary(UnaryOp),
    Binary(BinaryOp),
    UnaryBool(UnaryPred),
    BinaryBool(BinaryPred),
    Zero,
    Plus,
    J,
    JInv,
    Attach,
    /// Input sensitivity of `J` from `(cons Jx dy)`.
    JBackprop,
    /// Input sensitivity of `J⁻¹` from `(cons x dy)`.
    JInvBackprop,
}

impl UnaryOp {
    pub const ALL: [UnaryOp; 7] = [
        UnaryOp::Sqrt,
        UnaryOp::Exp,
        UnaryOp::Log,
        UnaryOp::Sin,
        UnaryOp::Cos,
        UnaryOp::Neg,
        UnaryOp::Abs,
    ];

    pub fn eval(self, x: f64) -> f64 {
        match self {
            UnaryOp::Sqrt => x.sqrt(),
            UnaryOp::Exp => x.exp(),
            UnaryOp::Log => x.ln(),
            UnaryOp::Sin => x.sin(),
            UnaryOp::Cos => x.cos(),
            UnaryOp::Neg => -x,
            UnaryOp::Abs => x.abs(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Neg => "neg",
            UnaryOp::Abs => "abs",
        }
    }

    /// Derivative as a source expression in `%x`.
    pub(crate) fn derivative_source(self) -> &'static str {
        match self {
            UnaryOp::Sqrt => "(/ 1 (* 2 (sqrt %x)))",
            UnaryOp::Exp => "(exp %x)",
            UnaryOp::Log => "(/ 1 %x)",
            UnaryOp::Sin => "(cos %x)",
            UnaryOp::Cos => "(neg (sin %x))",
            UnaryOp::Neg => "-1",
            UnaryOp::Abs => "(if (< %x 0) -1 1)",
        }
    }
}

impl BinaryOp {
    pub const ALL: [BinaryOp; 5] = [
        BinaryOp::Add,
        BinaryOp::Sub,
        BinaryOp::Mul,
        BinaryOp::Div,
        BinaryOp::Atan2,
    ];

    pub fn eval(self, a: f64, b: f64) -> f64 {
        match self {
            BinaryOp::Add => a + b,
            BinaryOp::Sub => a - b,
            BinaryOp::Mul => a * b,
            BinaryOp::Div => a / b,
            BinaryOp::Atan2 => a.atan2(b),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Atan2 => "atan2",
        }
    }

    /// The two partial derivatives as source expressions in `%x1`, `%x2`.
    pub(crate) fn partials_source(self) -> (&'static str, &'static str) {
        match self {
            BinaryOp::Add => ("1", "1"),
            BinaryOp::Sub => ("1", "-1"),
            BinaryOp::Mul => ("%x2", "%x1"),
            BinaryOp::Div => ("(/ 1 %x2)", "(neg (/ %x1 (* %x2 %x2)))"),
            BinaryOp::Atan2 => (
                "(/ %x2 (+ (* %x1 %x1) (* %x2 %x2)))",
                "(neg (/ %x1 (+ (* %x1 %x1) (* %x2 %x2))))",
            ),
        }
    }
}

impl UnaryPred {
    pub const ALL: [UnaryPred; 6] = [
        UnaryPred::IsZero,
        UnaryPred::IsPositive,
        UnaryPred::IsNegative,
        UnaryPred::IsNull,
        UnaryPred::IsReal,
        UnaryPred::IsPair,
    ];

    pub fn name(self) -> &'static str {
        match self {
            UnaryPred::IsZero => "zero?",
            UnaryPred::IsPositive => "positive?",
            UnaryPred::IsNegative => "negative?",
            UnaryPred::IsNull => "null?",
            UnaryPred::IsReal => "real?",
            UnaryPred::IsPair => "pair?",
        }
    }
}

impl BinaryPred {
    pub const ALL: [BinaryPred; 5] = [
        BinaryPred::Lt,
        BinaryPred::Le,
        BinaryPred::Eq,
        BinaryPred::Gt,
        BinaryPred::Ge,
    ];

    pub fn eval(self, a: f64, b: f64) -> bool {
        match self {
            BinaryPred::Lt => a < b,
            BinaryPred::Le => a <= b,
            BinaryPred::Eq => a == b,
            BinaryPred::Gt => a > b,
            BinaryPred::Ge => a >= b,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BinaryPred::Lt => "<",
            BinaryPred::Le => "<=",
            BinaryPred::Eq => "=",
            BinaryPred::Gt => ">",
            BinaryPred::Ge => ">=",
        }
    }
}

impl Prim {
    /// Every primitive, each paired with its user-visible name.
    pub fn all() -> Vec<Prim> {
        let mut out = Vec::new();
        out.extend(UnaryOp::ALL.iter().map(|&u| Prim::Unary(u)));
        out.extend(BinaryOp::ALL.iter().map(|&b| Prim::Binary(b)));
        out.extend(UnaryPred::ALL.iter().map(|&p| Prim::UnaryBool(p)));
        out.extend(BinaryPred::ALL.iter().map(|&q| Prim::BinaryBool(q)));
        out.extend([Prim::Zero, Prim::Plus, Prim::J, Prim::JInv, Prim::Attach]);
        out
    }

    pub fn name(self) -> &'static str {
        match self {
            Prim::Unary(u) => u.name(),
            Prim::Binary(b) => b.name(),
            Prim::UnaryBool(p) => p.name(),
            Prim::BinaryBool(q) => q.name(),
            Prim::Zero => "zero",
            Prim::Plus => "plus",
            Prim::J => "rad",
            Prim::JInv => "rad-inverse",
            Prim::Attach => "attach-derivative",
            Prim::JBackprop => "%rad-backprop",
            Prim::JInvBackprop => "%rad-inverse-backprop",
        }
    }

    /// Primitives whose argument is an encoded pair.
    pub fn takes_pair(self) -> bool {
        matches!(
            self,
            Prim::Binary(_)
                | Prim::BinaryBool(_)
                | Prim::Plus
                | Prim::Attach
                | Prim::JBackprop
                | Prim::JInvBackprop
        )
    }

    pub fn by_name(name: &str) -> Option<Prim> {
        Prim::all().into_iter().find(|p| p.name() == name)
    }
}

impl fmt::Display for Prim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
