//! A small expression language for user-supplied data such as `t*exp(u+2*v)`.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?          right-associative
//! primary := number | name | name '(' args ')' | '(' sum ')'
//! ```
//!
//! `pi` and `e` are predefined. There is no implicit multiplication.
//! Parsed trees are compiled to a postfix program for evaluation.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
    Abs,
    Min,
    Max,
    Pow,
}

impl Func {
    pub const ALL: [Func; 9] = [
        Func::Exp,
        Func::Log,
        Func::Sin,
        Func::Cos,
        Func::Sqrt,
        Func::Abs,
        Func::Min,
        Func::Max,
        Func::Pow,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
            Func::Pow => "pow",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max | Func::Pow => 2,
            _ => 1,
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constant {
    Pi,
    E,
}

impl Constant {
    pub fn value(self) -> f64 {
        match self {
            Constant::Pi => std::f64::consts::PI,
            Constant::E => std::f64::consts::E,
        }
    }
}

/// Syntax tree node.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Const(Constant),
    Var(String),
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Num(x) => write!(f, "{x:?}"),
            Node::Const(Constant::Pi) => f.write_str("pi"),
            Node::Const(Constant::E) => f.write_str("e"),
            Node::Var(name) => f.write_str(name),
            Node::Neg(inner) => write!(f, "(-{inner})"),
            Node::Binary(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
            Node::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("empty expression")]
    Empty,
    #[error("unexpected character `{ch}` at column {}", .pos + 1)]
    BadChar { ch: char, pos: usize },
    #[error("syntax error at column {}: expected {expected}, found {found}", .pos + 1)]
    Syntax {
        pos: usize,
        expected: &'static str,
        found: String,
    },
    #[error("unknown identifier `{name}` at column {}", .pos + 1)]
    UnknownIdentifier { name: String, pos: usize },
    #[error("`{name}` takes {expected} argument(s), got {got}")]
    Arity {
        name: &'static str,
        expected: usize,
        got: usize,
    },
}

impl ParseError {
    /// Zero-based character offset of the error, when it has one.
    pub fn position(&self) -> Option<usize> {
        match self {
            ParseError::BadChar { pos, .. }
            | ParseError::Syntax { pos, .. }
            | ParseError::UnknownIdentifier { pos, .. } => Some(*pos),
            _ => None,
        }
    }
}

impl From<ParseError> for Error {
    fn from(e: ParseError) -> Self {
        Error::Eval(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(x) => write!(f, "number {x}"),
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Op(c) => write!(f, "`{c}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::End => f.write_str("end of input"),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = if c.is_ascii_digit() || c == '.' {
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // exponent only when digits follow, so `2e` stays a syntax error
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let value = text
                .parse::<f64>()
                .map_err(|_| ParseError::BadChar { ch: c, pos: start })?;
            Tok::Num(value)
        } else if c.is_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            Tok::Ident(chars[start..i].iter().collect())
        } else {
            i += 1;
            match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                _ => return Err(ParseError::BadChar { ch: c, pos: start }),
            }
        };
        out.push((tok, start));
    }
    out.push((Tok::End, chars.len()));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    at: usize,
    vars: &'a [&'a str],
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, expected: &'static str) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(expected))
        }
    }

    fn unexpected(&self, expected: &'static str) -> ParseError {
        ParseError::Syntax {
            pos: self.pos(),
            expected,
            found: self.peek().to_string(),
        }
    }

    fn sum(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.product()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn product(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if *self.peek() == Tok::Op('-') {
            self.bump();
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.primary()?;
        if *self.peek() == Tok::Op('^') {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Node::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Num(x) => {
                self.bump();
                Ok(Node::Num(x))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.sum()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.bump();
                if *self.peek() == Tok::LParen {
                    let func = Func::from_name(&name).ok_or(ParseError::UnknownIdentifier {
                        name: name.clone(),
                        pos,
                    })?;
                    self.bump();
                    let mut args = Vec::new();
                    if *self.peek() != Tok::RParen {
                        args.push(self.sum()?);
                        while *self.peek() == Tok::Comma {
                            self.bump();
                            args.push(self.sum()?);
                        }
                    }
                    self.expect(Tok::RParen, "`,` or `)`")?;
                    if args.len() != func.arity() {
                        return Err(ParseError::Arity {
                            name: func.name(),
                            expected: func.arity(),
                            got: args.len(),
                        });
                    }
                    Ok(Node::Call(func, args))
                } else if self.vars.contains(&name.as_str()) {
                    Ok(Node::Var(name))
                } else if name == "pi" {
                    Ok(Node::Const(Constant::Pi))
                } else if name == "e" {
                    Ok(Node::Const(Constant::E))
                } else {
                    Err(ParseError::UnknownIdentifier { name, pos })
                }
            }
            _ => Err(self.unexpected("a number, name or `(`")),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Push(f64),
    Load(usize),
    Neg,
    Bin(BinOp),
    Call(Func),
}

/// A parsed, immutable expression over a declared set of variables.
#[derive(Debug, Clone)]
pub struct Expr {
    root: Node,
    vars: Vec<String>,
    program: Vec<Op>,
    // source text of the sub-expression each op produces, for error messages
    spans: Vec<String>,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

impl Expr {
    pub fn parse(src: &str, variables: &[&str]) -> Result<Self, ParseError> {
        let toks = tokenize(src)?;
        if toks.len() == 1 {
            return Err(ParseError::Empty);
        }
        let mut p = Parser {
            toks,
            at: 0,
            vars: variables,
        };
        let root = p.sum()?;
        if *p.peek() != Tok::End {
            return Err(p.unexpected("an operator or end of input"));
        }
        Ok(Self::from_node(root, variables))
    }

    /// Builds an expression from an existing tree.
    ///
    /// Every variable in `root` must appear in `variables`; unknown names
    /// make evaluation fail with a missing-binding error.
    pub fn from_node(root: Node, variables: &[&str]) -> Self {
        let vars: Vec<String> = variables.iter().map(|s| s.to_string()).collect();
        let mut program = Vec::new();
        let mut spans = Vec::new();
        compile(&root, &vars, &mut program, &mut spans);
        Self {
            root,
            vars,
            program,
            spans,
        }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn declared(&self) -> &[String] {
        &self.vars
    }

    /// Variables that actually occur in the expression, sorted.
    pub fn variables(&self) -> Vec<String> {
        fn walk(n: &Node, out: &mut BTreeSet<String>) {
            match n {
                Node::Var(v) => {
                    out.insert(v.clone());
                }
                Node::Neg(a) => walk(a, out),
                Node::Binary(_, a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
                Node::Call(_, args) => args.iter().for_each(|a| walk(a, out)),
                Node::Num(_) | Node::Const(_) => {}
            }
        }
        let mut set = BTreeSet::new();
        walk(&self.root, &mut set);
        set.into_iter().collect()
    }

    /// Evaluates with values looked up by variable name.
    pub fn eval_with(&self, lookup: impl Fn(&str) -> Option<f64>) -> Result<f64, Error> {
        let slots: Vec<Option<f64>> = self.vars.iter().map(|v| lookup(v)).collect();
        self.run(|i| slots.get(i).copied().flatten())
    }

    /// Evaluates with values given positionally, in declaration order.
    pub fn eval_positional(&self, values: &[f64]) -> Result<f64, Error> {
        self.run(|i| values.get(i).copied())
    }

    /// Evaluates with `(name, value)` bindings.
    pub fn eval(&self, bindings: &[(&str, f64)]) -> Result<f64, Error> {
        self.eval_with(|name| bindings.iter().find(|b| b.0 == name).map(|b| b.1))
    }

    fn run(&self, slot: impl Fn(usize) -> Option<f64>) -> Result<f64, Error> {
        let mut stack: Vec<f64> = Vec::with_capacity(8);
        for (op, span) in self.program.iter().zip(&self.spans) {
            let value = match *op {
                Op::Push(x) => x,
                Op::Load(i) => {
                    slot(i).ok_or_else(|| Error::Eval(format!("no value bound for `{span}`")))?
                }
                Op::Neg => -stack.pop().expect("operand"),
                Op::Bin(bin) => {
                    let r = stack.pop().expect("operand");
                    let l = stack.pop().expect("operand");
                    match bin {
                        BinOp::Add => l + r,
                        BinOp::Sub => l - r,
                        BinOp::Mul => l * r,
                        BinOp::Div => {
                            if r == 0.0 {
                                return Err(Error::Eval(format!("division by zero in `{span}`")));
                            }
                            l / r
                        }
                        BinOp::Pow => l.powf(r),
                    }
                }
                Op::Call(func) => {
                    let x = stack.pop().expect("operand");
                    match func {
                        Func::Exp => x.exp(),
                        Func::Log => {
                            if x <= 0.0 {
                                return Err(Error::Eval(format!("log of {x} in `{span}`")));
                            }
                            x.ln()
                        }
                        Func::Sin => x.sin(),
                        Func::Cos => x.cos(),
                        Func::Sqrt => {
                            if x < 0.0 {
                                return Err(Error::Eval(format!("sqrt of {x} in `{span}`")));
                            }
                            x.sqrt()
                        }
                        Func::Abs => x.abs(),
                        Func::Min | Func::Max | Func::Pow => {
                            let l = stack.pop().expect("operand");
                            match func {
                                Func::Min => l.min(x),
                                Func::Max => l.max(x),
                                _ => l.powf(x),
                            }
                        }
                    }
                }
            };
            if !value.is_finite() {
                return Err(Error::Eval(format!("`{span}` evaluates to {value}")));
            }
            stack.push(value);
        }
        Ok(stack.pop().expect("result"))
    }
}

fn compile(node: &Node, vars: &[String], program: &mut Vec<Op>, spans: &mut Vec<String>) {
    let op = match node {
        Node::Num(x) => Op::Push(*x),
        Node::Const(c) => Op::Push(c.value()),
        // undeclared names get a slot past the end, which is never bound
        Node::Var(name) => Op::Load(vars.iter().position(|v| v == name).unwrap_or(vars.len())),
        Node::Neg(a) => {
            compile(a, vars, program, spans);
            Op::Neg
        }
        Node::Binary(bin, a, b) => {
            compile(a, vars, program, spans);
            compile(b, vars, program, spans);
            Op::Bin(*bin)
        }
        Node::Call(func, args) => {
            for a in args {
                compile(a, vars, program, spans);
            }
            Op::Call(*func)
        }
    };
    program.push(op);
    spans.push(node.to_string());
}
