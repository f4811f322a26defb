//! Guard and assignment expressions over net variables.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Value {
    Int(i64),
    Bool(bool),
}

impl Value {
    pub fn kind(self) -> Kind {
        match self {
            Value::Int(_) => Kind::Int,
            Value::Bool(_) => Kind::Bool,
        }
    }

    pub fn as_bool(self) -> bool {
        matches!(self, Value::Bool(true))
    }

    pub fn as_int(self) -> i64 {
        match self {
            Value::Int(v) => v,
            Value::Bool(b) => b as i64,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Bool(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Int,
    Bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArithOp {
    Add,
    Sub,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Const(Value),
    Var(VarId),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    Arith(ArithOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn int(v: i64) -> Self {
        Expr::Const(Value::Int(v))
    }

    pub fn bool(v: bool) -> Self {
        Expr::Const(Value::Bool(v))
    }

    pub fn var(v: VarId) -> Self {
        Expr::Var(v)
    }

    fn cmp(self, op: CmpOp, rhs: Expr) -> Self {
        Expr::Cmp(op, Box::new(self), Box::new(rhs))
    }

    pub fn eq(self, rhs: Expr) -> Self {
        self.cmp(CmpOp::Eq, rhs)
    }

    pub fn ne(self, rhs: Expr) -> Self {
        self.cmp(CmpOp::Ne, rhs)
    }

    pub fn lt(self, rhs: Expr) -> Self {
        self.cmp(CmpOp::Lt, rhs)
    }

    pub fn le(self, rhs: Expr) -> Self {
        self.cmp(CmpOp::Le, rhs)
    }

    pub fn gt(self, rhs: Expr) -> Self {
        self.cmp(CmpOp::Gt, rhs)
    }

    pub fn ge(self, rhs: Expr) -> Self {
        self.cmp(CmpOp::Ge, rhs)
    }

    pub fn and(self, rhs: Expr) -> Self {
        Expr::And(Box::new(self), Box::new(rhs))
    }

    pub fn or(self, rhs: Expr) -> Self {
        Expr::Or(Box::new(self), Box::new(rhs))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        Expr::Not(Box::new(self))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(self, rhs: Expr) -> Self {
        Expr::Arith(ArithOp::Add, Box::new(self), Box::new(rhs))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(self, rhs: Expr) -> Self {
        Expr::Arith(ArithOp::Sub, Box::new(self), Box::new(rhs))
    }

    /// Type of the expression, or a description of the first type error.
    pub fn check(&self, vars: &[Kind]) -> Result<Kind, String> {
        match self {
            Expr::Const(v) => Ok(v.kind()),
            Expr::Var(VarId(i)) => vars
                .get(*i)
                .copied()
                .ok_or_else(|| format!("undeclared variable #{i}")),
            Expr::Not(e) => match e.check(vars)? {
                Kind::Bool => Ok(Kind::Bool),
                Kind::Int => Err("`not` applied to an integer".into()),
            },
            Expr::And(a, b) | Expr::Or(a, b) => match (a.check(vars)?, b.check(vars)?) {
                (Kind::Bool, Kind::Bool) => Ok(Kind::Bool),
                _ => Err("logical operator applied to an integer".into()),
            },
            Expr::Cmp(op, a, b) => {
                let (ka, kb) = (a.check(vars)?, b.check(vars)?);
                if ka != kb {
                    return Err(format!("comparison {op:?} between {ka:?} and {kb:?}"));
                }
                if ka == Kind::Bool && !matches!(op, CmpOp::Eq | CmpOp::Ne) {
                    return Err(format!("ordering comparison {op:?} on booleans"));
                }
                Ok(Kind::Bool)
            }
            Expr::Arith(_, a, b) => match (a.check(vars)?, b.check(vars)?) {
                (Kind::Int, Kind::Int) => Ok(Kind::Int),
                _ => Err("arithmetic on a boolean".into()),
            },
        }
    }

    /// Evaluates a type-checked expression.
    pub fn eval(&self, vars: &[Value]) -> Value {
        match self {
            Expr::Const(v) => *v,
            Expr::Var(VarId(i)) => vars[*i],
            Expr::Not(e) => Value::Bool(!e.eval(vars).as_bool()),
            Expr::And(a, b) => Value::Bool(a.eval(vars).as_bool() && b.eval(vars).as_bool()),
            Expr::Or(a, b) => Value::Bool(a.eval(vars).as_bool() || b.eval(vars).as_bool()),
            Expr::Cmp(op, a, b) => {
                let (x, y) = (a.eval(vars), b.eval(vars));
                let r = match (x, y) {
                    (Value::Bool(x), Value::Bool(y)) => match op {
                        CmpOp::Eq => x == y,
                        _ => x != y,
                    },
                    _ => {
                        let (x, y) = (x.as_int(), y.as_int());
                        match op {
                            CmpOp::Eq => x == y,
                            CmpOp::Ne => x != y,
                            CmpOp::Lt => x < y,
                            CmpOp::Le => x <= y,
                            CmpOp::Gt => x > y,
                            CmpOp::Ge => x >= y,
                        }
                    }
                };
                Value::Bool(r)
            }
            Expr::Arith(op, a, b) => {
                let (x, y) = (a.eval(vars).as_int(), b.eval(vars).as_int());
                Value::Int(match op {
                    ArithOp::Add => x.wrapping_add(y),
                    ArithOp::Sub => x.wrapping_sub(y),
                })
            }
        }
    }

    /// Renders with variable names resolved through `names`.
    pub fn display<'a>(&'a self, names: &'a [String]) -> impl fmt::Display + 'a {
        ExprDisplay { expr: self, names }
    }
}

struct ExprDisplay<'a> {
    expr: &'a Expr,
    names: &'a [String],
}

impl<'a> fmt::Display for ExprDisplay<'a> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sub = |e: &'a Expr| ExprDisplay { expr: e, names: self.names };
        match self.expr {
            Expr::Const(v) => write!(f, "{v}"),
            Expr::Var(VarId(i)) => match self.names.get(*i) {
                Some(name) => f.write_str(name),
                None => write!(f, "#{i}"),
            },
            Expr::Not(e) => write!(f, "!({})", sub(e)),
            Expr::And(a, b) => write!(f, "({} && {})", sub(a), sub(b)),
            Expr::Or(a, b) => write!(f, "({} || {})", sub(a), sub(b)),
            Expr::Cmp(op, a, b) => {
                let sym = match op {
                    CmpOp::Eq => "==",
                    CmpOp::Ne => "!=",
                    CmpOp::Lt => "<",
                    CmpOp::Le => "<=",
                    CmpOp::Gt => ">",
                    CmpOp::Ge => ">=",
                };
                write!(f, "{} {sym} {}", sub(a), sub(b))
            }
            Expr::Arith(op, a, b) => {
                let sym = match op {
                    ArithOp::Add => "+",
                    ArithOp::Sub => "-",
                };
                write!(f, "{} {sym} {}", sub(a), sub(b))
            }
        }
    }
}

/// `var := expr`, applied when a transition fires.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub var: VarId,
    pub expr: Expr,
}

impl Assignment {
    pub fn set(var: VarId, expr: Expr) -> Self {
        Assignment { var, expr }
    }

    pub fn increment(var: VarId, by: i64) -> Self {
        Assignment {
            var,
            expr: Expr::var(var).add(Expr::int(by)),
        }
    }
}
