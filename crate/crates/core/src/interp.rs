//! Reference interpreter for MiniLang, used to check that attacks and
//! normalization preserve behavior.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::minilang::{Ast, BinOp, Block, Expr, FnDecl, Stmt, StmtKind, UnOp};

pub const DEFAULT_STEP_BUDGET: u64 = 10_000_000;
pub const MAX_CALL_DEPTH: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Bool(bool),
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Bool(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum RuntimeError {
    #[error("division by zero at line {0}")]
    DivisionByZero(u32),
    #[error("read() past end of input at line {0}")]
    InputExhausted(u32),
    #[error("undefined variable `{name}` at line {line}")]
    UndefinedVariable { name: String, line: u32 },
    #[error("unknown function `{name}` at line {line}")]
    UnknownFunction { name: String, line: u32 },
    #[error("`{name}` expects {expected} arguments, got {got}")]
    Arity { name: String, expected: usize, got: usize },
    #[error("type error at line {0}")]
    Type(u32),
    #[error("call depth exceeded at line {0}")]
    StackOverflow(u32),
    #[error("function `{0}` returned no value")]
    MissingReturnValue(String),
    #[error("no `main` function")]
    NoMain,
    #[error("step budget of {0} exhausted")]
    StepBudgetExceeded(u64),
}

/// Observable behavior of one run: what was printed, and how it ended.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub output: Vec<Value>,
    pub error: Option<RuntimeError>,
}

pub fn interpret(ast: &Ast, input: &[i64]) -> Outcome {
    interpret_with_budget(ast, input, DEFAULT_STEP_BUDGET)
}

pub fn interpret_with_budget(ast: &Ast, input: &[i64], budget: u64) -> Outcome {
    let mut m = Machine {
        fns: ast.functions().map(|f| (f.name.as_str(), f)).collect(),
        globals: HashMap::new(),
        input,
        pos: 0,
        output: Vec::new(),
        steps: 0,
        budget,
        depth: 0,
    };
    for c in ast.consts() {
        match m.eval(&c.value, &HashMap::new(), c.line) {
            Ok(v) => {
                m.globals.insert(c.name.as_str(), v);
            }
            Err(e) => return m.finish(Some(e)),
        }
    }
    let err = match m.fns.get("main") {
        None => Some(RuntimeError::NoMain),
        Some(main) => m.call(main, Vec::new(), main.line).err(),
    };
    m.finish(err)
}

enum Flow {
    Next,
    Return(Option<Value>),
}

struct Machine<'a> {
    fns: HashMap<&'a str, &'a FnDecl>,
    globals: HashMap<&'a str, Value>,
    input: &'a [i64],
    pos: usize,
    output: Vec<Value>,
    steps: u64,
    budget: u64,
    depth: usize,
}

type Frame<'a> = HashMap<&'a str, Value>;

impl<'a> Machine<'a> {
    fn finish(self, error: Option<RuntimeError>) -> Outcome {
        Outcome {
            output: self.output,
            error,
        }
    }

    fn tick(&mut self) -> Result<(), RuntimeError> {
        self.steps += 1;
        if self.steps > self.budget {
            Err(RuntimeError::StepBudgetExceeded(self.budget))
        } else {
            Ok(())
        }
    }

    fn call(&mut self, f: &'a FnDecl, args: Vec<Value>, line: u32) -> Result<Option<Value>, RuntimeError> {
        if args.len() != f.params.len() {
            return Err(RuntimeError::Arity {
                name: f.name.clone(),
                expected: f.params.len(),
                got: args.len(),
            });
        }
        if self.depth >= MAX_CALL_DEPTH {
            return Err(RuntimeError::StackOverflow(line));
        }
        self.depth += 1;
        let mut frame: Frame<'a> = f.params.iter().map(|p| p.name.as_str()).zip(args).collect();
        let r = self.block(&f.body, &mut frame);
        self.depth -= 1;
        match r? {
            Flow::Next => Ok(None),
            Flow::Return(v) => Ok(v),
        }
    }

    fn block(&mut self, b: &'a Block, frame: &mut Frame<'a>) -> Result<Flow, RuntimeError> {
        for s in &b.stmts {
            if let Flow::Return(v) = self.stmt(s, frame)? {
                return Ok(Flow::Return(v));
            }
        }
        Ok(Flow::Next)
    }

    fn stmt(&mut self, s: &'a Stmt, frame: &mut Frame<'a>) -> Result<Flow, RuntimeError> {
        self.tick()?;
        let line = s.line;
        match &s.kind {
            StmtKind::VarDecl { ty, name, init } => {
                let v = match init {
                    Some(e) => self.eval(e, frame, line)?,
                    None => match ty {
                        crate::minilang::Type::Int => Value::Int(0),
                        crate::minilang::Type::Bool => Value::Bool(false),
                    },
                };
                frame.insert(name.as_str(), v);
            }
            StmtKind::Assign { name, value } => {
                let v = self.eval(value, frame, line)?;
                frame.insert(name.as_str(), v);
            }
            StmtKind::If {
                cond,
                then_body,
                else_body,
            } => {
                if self.eval_bool(cond, frame, line)? {
                    return self.block(then_body, frame);
                } else if let Some(b) = else_body {
                    return self.block(b, frame);
                }
            }
            StmtKind::While { cond, body } => {
                while self.eval_bool(cond, frame, line)? {
                    if let Flow::Return(v) = self.block(body, frame)? {
                        return Ok(Flow::Return(v));
                    }
                    self.tick()?;
                }
            }
            StmtKind::Call { name, args } => {
                self.invoke(name, args, frame, line)?;
            }
            StmtKind::Return(e) => {
                let v = match e {
                    Some(e) => Some(self.eval(e, frame, line)?),
                    None => None,
                };
                return Ok(Flow::Return(v));
            }
            StmtKind::Print(e) => {
                let v = self.eval(e, frame, line)?;
                self.output.push(v);
            }
        }
        Ok(Flow::Next)
    }

    fn invoke(
        &mut self,
        name: &str,
        args: &'a [Expr],
        frame: &Frame<'a>,
        line: u32,
    ) -> Result<Option<Value>, RuntimeError> {
        let f = *self.fns.get(name).ok_or_else(|| RuntimeError::UnknownFunction {
            name: name.to_string(),
            line,
        })?;
        let mut vals = Vec::with_capacity(args.len());
        for a in args {
            vals.push(self.eval(a, frame, line)?);
        }
        self.call(f, vals, line)
    }

    fn eval_bool(&mut self, e: &'a Expr, frame: &Frame<'a>, line: u32) -> Result<bool, RuntimeError> {
        match self.eval(e, frame, line)? {
            Value::Bool(b) => Ok(b),
            Value::Int(_) => Err(RuntimeError::Type(line)),
        }
    }

    fn eval_int(&mut self, e: &'a Expr, frame: &Frame<'a>, line: u32) -> Result<i64, RuntimeError> {
        match self.eval(e, frame, line)? {
            Value::Int(v) => Ok(v),
            Value::Bool(_) => Err(RuntimeError::Type(line)),
        }
    }

    fn eval(&mut self, e: &'a Expr, frame: &Frame<'a>, line: u32) -> Result<Value, RuntimeError> {
        Ok(match e {
            Expr::Int(v) => Value::Int(*v),
            Expr::Bool(b) => Value::Bool(*b),
            Expr::Var(name) => match frame.get(name.as_str()) {
                Some(v) => *v,
                None => *self
                    .globals
                    .get(name.as_str())
                    .ok_or_else(|| RuntimeError::UndefinedVariable {
                        name: name.clone(),
                        line,
                    })?,
            },
            Expr::Read => {
                let v = *self.input.get(self.pos).ok_or(RuntimeError::InputExhausted(line))?;
                self.pos += 1;
                Value::Int(v)
            }
            Expr::Call { name, args } => self
                .invoke(name, args, frame, line)?
                .ok_or_else(|| RuntimeError::MissingReturnValue(name.clone()))?,
            Expr::Unary { op, expr } => match op {
                UnOp::Not => Value::Bool(!self.eval_bool(expr, frame, line)?),
                UnOp::Neg => Value::Int(self.eval_int(expr, frame, line)?.wrapping_neg()),
            },
            Expr::Binary { op, lhs, rhs } => match op {
                BinOp::And => Value::Bool(self.eval_bool(lhs, frame, line)? && self.eval_bool(rhs, frame, line)?),
                BinOp::Or => Value::Bool(self.eval_bool(lhs, frame, line)? || self.eval_bool(rhs, frame, line)?),
                BinOp::Eq | BinOp::Ne => {
                    let l = self.eval(lhs, frame, line)?;
                    let r = self.eval(rhs, frame, line)?;
                    if std::mem::discriminant(&l) != std::mem::discriminant(&r) {
                        return Err(RuntimeError::Type(line));
                    }
                    Value::Bool((l == r) == (*op == BinOp::Eq))
                }
                _ => {
                    let l = self.eval_int(lhs, frame, line)?;
                    let r = self.eval_int(rhs, frame, line)?;
                    match op {
                        BinOp::Add => Value::Int(l.wrapping_add(r)),
                        BinOp::Sub => Value::Int(l.wrapping_sub(r)),
                        BinOp::Mul => Value::Int(l.wrapping_mul(r)),
                        BinOp::Div | BinOp::Mod if r == 0 => return Err(RuntimeError::DivisionByZero(line)),
                        BinOp::Div => Value::Int(l.wrapping_div(r)),
                        BinOp::Mod => Value::Int(l.wrapping_rem(r)),
                        BinOp::Lt => Value::Bool(l < r),
                        BinOp::Le => Value::Bool(l <= r),
                        BinOp::Gt => Value::Bool(l > r),
                        BinOp::Ge => Value::Bool(l >= r),
                        _ => unreachable!("logical operators handled above"),
                    }
                }
            },
        })
    }
}
