//! The `.dfy` problem language: a line-oriented system description whose
//! expressions elaborate directly to kernel expressions.
//!
//! ```text
//! system example4
//! indep x
//! dep u, v
//! func F(1)
//! eq D(u) = F(D(v))
//! assume nonzero F''(D(v))*D(D(v))
//! query analyze order=4
//! ```

use std::fmt;

use diffiety_core::diffiety::ambient_total;
use diffiety_core::symkernel::{AssumptionSet, Coordinate, Expr, JetIndex, MAX_INDEP};
use num_bigint::BigInt;
use num_rational::BigRational;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DslError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: unknown identifier `{name}`")]
    Unknown { line: usize, col: usize, name: String },
    #[error("{line}:{col}: `{name}` takes {expected} argument(s), got {got}")]
    Arity {
        line: usize,
        col: usize,
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("{line}:{col}: {msg}")]
    Semantic { line: usize, col: usize, msg: String },
}

impl DslError {
    pub fn position(&self) -> (usize, usize) {
        match self {
            DslError::Syntax { line, col, .. }
            | DslError::Unknown { line, col, .. }
            | DslError::Arity { line, col, .. }
            | DslError::Semantic { line, col, .. } => (*line, *col),
        }
    }
}

type DResult<T> = Result<T, DslError>;

/// A value with the source position it came from; equality ignores the position.
#[derive(Clone, Debug)]
pub struct Located<T> {
    pub value: T,
    pub line: usize,
    pub col: usize,
}

impl<T: PartialEq> PartialEq for Located<T> {
    fn eq(&self, other: &Self) -> bool {
        self.value == other.value
    }
}

/// One resolved equation `lhs = rhs` with `lhs` a jet coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct Equation {
    pub lhs: Coordinate,
    pub rhs: Expr,
}

impl Equation {
    pub fn dep(&self) -> usize {
        match &self.lhs {
            Coordinate::Jet { dep, .. } => *dep as usize,
            _ => unreachable!("equation heads are jet coordinates"),
        }
    }

    pub fn order(&self) -> JetIndex {
        match &self.lhs {
            Coordinate::Jet { order, .. } => *order,
            _ => unreachable!("equation heads are jet coordinates"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Query {
    pub analysis: Located<String>,
    pub args: Vec<(String, Located<String>)>,
}

impl Query {
    pub fn get(&self, key: &str) -> Option<&Located<String>> {
        self.args.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn get_all(&self, key: &str) -> Vec<&Located<String>> {
        self.args.iter().filter(|(k, _)| k == key).map(|(_, v)| v).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FuncDecl {
    pub name: String,
    pub arity: usize,
}

/// A parsed problem file.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ProblemSpec {
    pub name: String,
    pub indep: Vec<String>,
    pub dep: Vec<String>,
    pub funcs: Vec<FuncDecl>,
    pub equations: Vec<Equation>,
    pub assumptions: Vec<Expr>,
    pub queries: Vec<Query>,
}

impl ProblemSpec {
    pub fn n(&self) -> usize {
        self.indep.len().max(1)
    }

    pub fn m(&self) -> usize {
        self.dep.len()
    }

    pub fn scope(&self) -> Scope<'_> {
        Scope {
            spec: self,
            placeholder: None,
        }
    }

    pub fn assumption_set(&self) -> AssumptionSet {
        let mut a = AssumptionSet::new();
        for e in &self.assumptions {
            a.insert(e.clone()).expect("assumptions were validated when parsed");
        }
        a
    }

    /// Parses an expression written against this spec's declarations.
    pub fn expr(&self, text: &str) -> DResult<Expr> {
        parse_expr_at(text, &self.scope(), 1, 1)
    }
}

/// Names visible to expressions.
#[derive(Clone, Copy)]
pub struct Scope<'a> {
    spec: &'a ProblemSpec,
    placeholder: Option<&'a str>,
}

impl<'a> Scope<'a> {
    /// Accepts `name` as an opaque plain coordinate.
    pub fn with_placeholder(mut self, name: &'a str) -> Self {
        self.placeholder = Some(name);
        self
    }

    fn n(&self) -> usize {
        self.spec.n()
    }

    fn indep_coord(&self, i: usize) -> Coordinate {
        if self.n() == 1 {
            Coordinate::x()
        } else {
            Coordinate::xi(i)
        }
    }

    fn func(&self, name: &str) -> Option<usize> {
        self.spec.funcs.iter().find(|f| f.name == name).map(|f| f.arity)
    }
}

// ---------------------------------------------------------------- lexer

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(BigInt),
    Sym(char),
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    col: usize,
}

const SYMBOLS: &str = "+-*/^()[],='";

fn lex(text: &str, line: usize, col0: usize) -> DResult<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = col0 + i;
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            out.push(Token {
                tok: Tok::Num(s.parse().expect("digits")),
                col,
            });
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            // Multi-index jets print as `w1_{0,1}`.
            if i < chars.len() && chars[i] == '{' && chars[i - 1] == '_' {
                while i < chars.len() && chars[i] != '}' {
                    i += 1;
                }
                if i == chars.len() {
                    return Err(DslError::Syntax {
                        line,
                        col,
                        msg: "unclosed `{` in jet name".into(),
                    });
                }
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                col,
            });
        } else if SYMBOLS.contains(c) {
            out.push(Token { tok: Tok::Sym(c), col });
            i += 1;
        } else {
            return Err(DslError::Syntax {
                line,
                col,
                msg: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------- parser

struct Parser<'s> {
    toks: Vec<Token>,
    pos: usize,
    line: usize,
    end_col: usize,
    scope: Scope<'s>,
}

impl<'s> Parser<'s> {
    fn new(toks: Vec<Token>, line: usize, end_col: usize, scope: Scope<'s>) -> Self {
        Parser {
            toks,
            pos: 0,
            line,
            end_col,
            scope,
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |t| t.col)
    }

    fn syntax(&self, msg: impl Into<String>) -> DslError {
        DslError::Syntax {
            line: self.line,
            col: self.col(),
            msg: msg.into(),
        }
    }

    fn semantic(&self, col: usize, msg: impl Into<String>) -> DslError {
        DslError::Semantic {
            line: self.line,
            col,
            msg: msg.into(),
        }
    }

    fn at_sym(&self, c: char) -> bool {
        self.peek() == Some(&Tok::Sym(c))
    }

    fn eat(&mut self, c: char) -> bool {
        if self.at_sym(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> DResult<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.syntax(format!("expected `{c}`")))
        }
    }

    fn done(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn finish(&self) -> DResult<()> {
        if self.done() {
            Ok(())
        } else {
            Err(self.syntax("unexpected trailing input"))
        }
    }

    fn sum(&mut self) -> DResult<Expr> {
        let mut acc = self.product()?;
        loop {
            if self.eat('+') {
                acc = acc + self.product()?;
            } else if self.eat('-') {
                acc = acc - self.product()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn product(&mut self) -> DResult<Expr> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc = acc * self.unary()?;
            } else if self.at_sym('/') {
                let col = self.col();
                self.pos += 1;
                let d = self.unary()?;
                acc = acc.checked_div(&d).ok_or_else(|| self.semantic(col, "division by zero"))?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> DResult<Expr> {
        if self.eat('-') {
            return Ok(-self.unary()?);
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> DResult<Expr> {
        let base = self.atom()?;
        if !self.at_sym('^') {
            return Ok(base);
        }
        let col = self.col();
        self.pos += 1;
        let paren = self.eat('(');
        let neg = self.eat('-');
        let Some(Tok::Num(n)) = self.peek().cloned() else {
            return Err(self.syntax("expected an integer exponent"));
        };
        self.pos += 1;
        if paren {
            self.expect(')')?;
        }
        let e: i32 = i32::try_from(n).map_err(|_| self.semantic(col, "exponent too large"))?;
        let e = if neg { -e } else { e };
        if e < 0 && base.is_zero() {
            return Err(self.semantic(col, "negative power of zero"));
        }
        Ok(base.pow(e))
    }

    fn args(&mut self) -> DResult<Vec<Expr>> {
        self.expect('(')?;
        let mut out = Vec::new();
        if self.eat(')') {
            return Ok(out);
        }
        loop {
            out.push(self.sum()?);
            if self.eat(')') {
                return Ok(out);
            }
            self.expect(',')?;
        }
    }

    fn small_int(&mut self) -> DResult<usize> {
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                self.pos += 1;
                usize::try_from(n).map_err(|_| self.syntax("index too large"))
            }
            _ => Err(self.syntax("expected a nonnegative integer")),
        }
    }

    fn atom(&mut self) -> DResult<Expr> {
        let col = self.col();
        match self.peek().cloned() {
            None => Err(self.syntax("expected an expression")),
            Some(Tok::Num(n)) => {
                self.pos += 1;
                Ok(Expr::rational(BigRational::from_integer(n)))
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let e = self.sum()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(Tok::Sym(c)) => Err(self.syntax(format!("unexpected `{c}`"))),
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                self.ident(&name, col)
            }
        }
    }

    fn total(&mut self, dir: usize, col: usize) -> DResult<Expr> {
        self.expect('(')?;
        let e = self.sum()?;
        self.expect(')')?;
        ambient_total(dir, self.scope.n(), &e).map_err(|err| self.semantic(col, err.to_string()))
    }

    fn ident(&mut self, name: &str, col: usize) -> DResult<Expr> {
        let spec = self.scope.spec;
        let n = self.scope.n();
        if let Some(arity) = self.scope.func(name) {
            return self.application(name, arity, col);
        }
        if let Some(j) = spec.dep.iter().position(|d| d == name) {
            return Ok(Expr::coord(Coordinate::jet(j + 1, JetIndex::zero(n))));
        }
        if let Some(i) = spec.indep.iter().position(|d| d == name) {
            return Ok(Expr::coord(self.scope.indep_coord(i + 1)));
        }
        if let Some(base) = name.strip_suffix("bar").filter(|_| n == 1) {
            if let Some(j) = spec.dep.iter().position(|d| d == base) {
                return Ok(Expr::coord(Coordinate::wbar(j + 1, 0)));
            }
            if spec.indep.iter().any(|d| d == base) {
                return Ok(Expr::coord(Coordinate::xbar()));
            }
        }
        if self.scope.placeholder == Some(name) {
            return Ok(Expr::coord(Coordinate::plain(name)));
        }
        if name == "D" && self.at_sym('(') {
            if n != 1 {
                return Err(self.semantic(col, "`D` needs a direction, e.g. `D_x`, with several independent variables"));
            }
            return self.total(0, col);
        }
        if let Some(dir) = name.strip_prefix("D_") {
            if self.at_sym('(') {
                let i = spec
                    .indep
                    .iter()
                    .position(|d| d == dir)
                    .or_else(|| dir.parse::<usize>().ok().filter(|&i| (1..=n).contains(&i)).map(|i| i - 1))
                    .ok_or_else(|| DslError::Unknown {
                        line: self.line,
                        col,
                        name: name.to_string(),
                    })?;
                return self.total(i, col);
            }
        }
        if name == "Int" && self.at_sym('(') {
            self.pos += 1;
            let integrand = self.sum()?;
            self.expect(',')?;
            let vcol = self.col();
            let var = self.sum()?;
            self.expect(')')?;
            let var = var
                .as_coord()
                .ok_or_else(|| self.semantic(vcol, "the integration variable must be a coordinate"))?;
            return Ok(Expr::integral(integrand, var));
        }
        if name == "w" && self.at_sym('[') {
            if n != 1 {
                return Err(self.semantic(col, "`w[j,s]` is for one independent variable"));
            }
            self.pos += 1;
            let j = self.small_int()?;
            self.expect(',')?;
            let s = self.small_int()?;
            self.expect(']')?;
            return self.check_dep(j, col).map(|_| Expr::coord(Coordinate::w(j, s)));
        }
        if let Some(c) = canonical_coordinate(name, n) {
            if let Coordinate::Jet { dep, .. } = &c {
                self.check_dep(*dep as usize, col)?;
            }
            return Ok(Expr::coord(c));
        }
        Err(DslError::Unknown {
            line: self.line,
            col,
            name: name.to_string(),
        })
    }

    fn check_dep(&self, j: usize, col: usize) -> DResult<()> {
        if (1..=self.scope.spec.m()).contains(&j) {
            Ok(())
        } else {
            Err(self.semantic(col, format!("dependent index {j} is out of range")))
        }
    }

    fn application(&mut self, name: &str, arity: usize, col: usize) -> DResult<Expr> {
        let mut derivs = vec![0u16; arity];
        let mut primes = 0u16;
        while self.eat('\'') {
            primes += 1;
        }
        if primes > 0 {
            if arity != 1 {
                return Err(self.semantic(col, format!("primes need a one-argument function; `{name}` has {arity}")));
            }
            derivs[0] = primes;
        } else if self.at_sym('[') {
            self.pos += 1;
            let mut ds = Vec::new();
            loop {
                ds.push(self.small_int()? as u16);
                if self.eat(']') {
                    break;
                }
                self.expect(',')?;
            }
            if ds.len() != arity {
                return Err(DslError::Arity {
                    line: self.line,
                    col,
                    name: name.to_string(),
                    expected: arity,
                    got: ds.len(),
                });
            }
            derivs = ds;
        }
        let args = if arity == 0 && !self.at_sym('(') {
            Vec::new()
        } else {
            self.args()?
        };
        if args.len() != arity {
            return Err(DslError::Arity {
                line: self.line,
                col,
                name: name.to_string(),
                expected: arity,
                got: args.len(),
            });
        }
        if arity == 0 {
            return Ok(Expr::param(name));
        }
        if derivs.iter().all(|&d| d == 0) {
            Ok(Expr::func(name, args))
        } else {
            Ok(Expr::func_deriv(name, derivs, args))
        }
    }
}

/// Kernel names such as `x`, `x2`, `xbar`, `w1_0`, `wbar2_3` and `w1_{0,1}`.
fn canonical_coordinate(name: &str, n: usize) -> Option<Coordinate> {
    let (bar, rest) = if let Some(r) = name.strip_prefix("xbar") {
        (true, ("x", r))
    } else if let Some(r) = name.strip_prefix("wbar") {
        (true, ("w", r))
    } else if let Some(r) = name.strip_prefix('x') {
        (false, ("x", r))
    } else if let Some(r) = name.strip_prefix('w') {
        (false, ("w", r))
    } else {
        return None;
    };
    match rest {
        ("x", "") if n == 1 => Some(if bar { Coordinate::xbar() } else { Coordinate::x() }),
        ("x", digits) if n > 1 && !bar => {
            let i: usize = digits.parse().ok()?;
            (1..=n).contains(&i).then(|| Coordinate::xi(i))
        }
        ("w", r) => {
            let (j, idx) = r.split_once('_')?;
            let j: usize = j.parse().ok()?;
            if j == 0 {
                return None;
            }
            if let Some(inner) = idx.strip_prefix('{').and_then(|s| s.strip_suffix('}')) {
                let e: Vec<usize> = inner.split(',').map(|p| p.trim().parse().ok()).collect::<Option<_>>()?;
                (e.len() == n && !bar).then(|| Coordinate::jet(j, JetIndex::new(&e)))
            } else if n == 1 {
                let s: usize = idx.parse().ok()?;
                Some(if bar { Coordinate::wbar(j, s) } else { Coordinate::w(j, s) })
            } else {
                None
            }
        }
        _ => None,
    }
}

/// Parses one expression; positions are reported relative to `(line, col)`.
pub fn parse_expr_at(text: &str, scope: &Scope<'_>, line: usize, col: usize) -> DResult<Expr> {
    let toks = lex(text, line, col)?;
    let end = col + text.chars().count();
    let mut p = Parser::new(toks, line, end, *scope);
    let e = p.sum()?;
    p.finish()?;
    Ok(e)
}

// ---------------------------------------------------------------- statements

fn names(rest: &str, line: usize, col: usize) -> DResult<Vec<String>> {
    let mut out = Vec::new();
    let mut offset = 0;
    for part in rest.split(',') {
        let name = part.trim();
        let lead = part.len() - part.trim_start().len();
        let c = col + rest[..offset].chars().count() + lead;
        if name.is_empty() || !is_identifier(name) {
            return Err(DslError::Syntax {
                line,
                col: c,
                msg: format!("expected a name, found `{name}`"),
            });
        }
        out.push(name.to_string());
        offset += part.len() + 1;
    }
    Ok(out)
}

fn is_identifier(s: &str) -> bool {
    let mut cs = s.chars();
    cs.next().is_some_and(|c| c.is_alphabetic() || c == '_') && cs.all(|c| c.is_alphanumeric() || c == '_')
}

const RESERVED: &[&str] = &["D", "Int", "w", "x"];

/// Splits query arguments on whitespace, honoring double quotes.
fn query_args(rest: &str, line: usize, col: usize) -> DResult<Vec<(String, Located<String>)>> {
    let chars: Vec<char> = rest.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        if chars[i] == '#' {
            break;
        }
        let start = i;
        while i < chars.len() && chars[i] != '=' && !chars[i].is_whitespace() {
            i += 1;
        }
        let key: String = chars[start..i].iter().collect();
        if i >= chars.len() || chars[i] != '=' || key.is_empty() {
            return Err(DslError::Syntax {
                line,
                col: col + start,
                msg: "query arguments have the form key=value".into(),
            });
        }
        i += 1;
        let (value, vcol) = if i < chars.len() && chars[i] == '"' {
            let vstart = i + 1;
            i += 1;
            while i < chars.len() && chars[i] != '"' {
                i += 1;
            }
            if i >= chars.len() {
                return Err(DslError::Syntax {
                    line,
                    col: col + vstart - 1,
                    msg: "unterminated string".into(),
                });
            }
            let v: String = chars[vstart..i].iter().collect();
            i += 1;
            (v, col + vstart)
        } else {
            let vstart = i;
            while i < chars.len() && !chars[i].is_whitespace() {
                i += 1;
            }
            (chars[vstart..i].iter().collect(), col + vstart)
        };
        out.push((
            key,
            Located {
                value,
                line,
                col: vcol,
            },
        ));
    }
    Ok(out)
}

/// Parses a problem file.
pub fn parse(text: &str) -> DResult<ProblemSpec> {
    let mut spec = ProblemSpec::default();
    let mut named = false;
    // Equations and assumptions are elaborated once every declaration is known.
    let mut pending: Vec<(usize, usize, String, bool)> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let trimmed = raw.trim_start();
        let lead = raw.chars().count() - trimmed.chars().count();
        let body = trimmed.split('#').next().unwrap_or("").trim_end();
        if body.is_empty() {
            continue;
        }
        let (kw, rest) = body.split_once(char::is_whitespace).unwrap_or((body, ""));
        let rest_trim = rest.trim_start();
        let rest_col = lead + 1 + kw.chars().count() + (rest.chars().count() - rest_trim.chars().count()) + 1;
        let kw_col = lead + 1;
        match kw {
            "system" => {
                if named {
                    return Err(DslError::Semantic {
                        line,
                        col: kw_col,
                        msg: "only one system per file".into(),
                    });
                }
                let name = rest_trim.trim();
                if name.is_empty() || name.contains(char::is_whitespace) {
                    return Err(DslError::Syntax {
                        line,
                        col: rest_col.min(kw_col + kw.len()),
                        msg: "expected a single system name".into(),
                    });
                }
                spec.name = name.to_string();
                named = true;
            }
            "indep" => {
                let ns = names(rest_trim, line, rest_col)?;
                if ns.len() > MAX_INDEP {
                    return Err(DslError::Semantic {
                        line,
                        col: rest_col,
                        msg: format!("at most {MAX_INDEP} independent variables"),
                    });
                }
                spec.indep.extend(ns);
            }
            "dep" => spec.dep.extend(names(rest_trim, line, rest_col)?),
            "func" => {
                for part in split_top_level(rest_trim) {
                    let (text, off) = part;
                    let c = rest_col + off;
                    let (name, arity) = text.split_once('(').ok_or_else(|| DslError::Syntax {
                        line,
                        col: c,
                        msg: "expected `Name(arity)`".into(),
                    })?;
                    let name = name.trim();
                    let arity = arity
                        .trim()
                        .strip_suffix(')')
                        .and_then(|a| a.trim().parse::<usize>().ok())
                        .ok_or_else(|| DslError::Syntax {
                            line,
                            col: c,
                            msg: "expected `Name(arity)` with an integer arity".into(),
                        })?;
                    if !is_identifier(name) || RESERVED.contains(&name) {
                        return Err(DslError::Syntax {
                            line,
                            col: c,
                            msg: format!("`{name}` cannot name a function"),
                        });
                    }
                    spec.funcs.push(FuncDecl {
                        name: name.to_string(),
                        arity,
                    });
                }
            }
            "eq" => pending.push((line, rest_col, rest_trim.to_string(), true)),
            "assume" => {
                let Some(expr) = rest_trim.strip_prefix("nonzero") else {
                    return Err(DslError::Syntax {
                        line,
                        col: rest_col,
                        msg: "expected `assume nonzero <expr>`".into(),
                    });
                };
                let c = rest_col + "nonzero".len() + (expr.chars().count() - expr.trim_start().chars().count());
                pending.push((line, c, expr.trim_start().to_string(), false));
            }
            "query" => {
                let (name, args) = rest_trim.split_once(char::is_whitespace).unwrap_or((rest_trim, ""));
                if name.is_empty() {
                    return Err(DslError::Syntax {
                        line,
                        col: rest_col,
                        msg: "expected an analysis name".into(),
                    });
                }
                let acol = rest_col + name.chars().count() + 1 + (args.chars().count() - args.trim_start().chars().count());
                spec.queries.push(Query {
                    analysis: Located {
                        value: name.to_string(),
                        line,
                        col: rest_col,
                    },
                    args: query_args(args.trim_start(), line, acol)?,
                });
            }
            other => {
                return Err(DslError::Syntax {
                    line,
                    col: kw_col,
                    msg: format!("unknown statement `{other}`"),
                })
            }
        }
    }
    check_declarations(&spec)?;
    for (line, col, text, is_eq) in pending {
        if is_eq {
            let eq = parse_equation(&text, &spec, line, col)?;
            if spec.equations.iter().any(|e| e.lhs == eq.lhs) {
                return Err(DslError::Semantic {
                    line,
                    col,
                    msg: format!("second equation for {}", eq.lhs),
                });
            }
            spec.equations.push(eq);
        } else {
            let e = parse_expr_at(&text, &spec.scope(), line, col)?;
            let mut probe = spec.assumption_set();
            probe.insert(e.clone()).map_err(|err| DslError::Semantic {
                line,
                col,
                msg: err.to_string(),
            })?;
            spec.assumptions.push(e);
        }
    }
    Ok(spec)
}

/// Splits `F(1), G(2)` at commas outside parentheses, with char offsets.
fn split_top_level(s: &str) -> Vec<(String, usize)> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    let mut start = 0;
    for (i, c) in s.chars().enumerate() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                let lead = cur.chars().count() - cur.trim_start().chars().count();
                out.push((cur.trim().to_string(), start + lead));
                cur.clear();
                start = i + 1;
                continue;
            }
            _ => {}
        }
        cur.push(c);
    }
    let lead = cur.chars().count() - cur.trim_start().chars().count();
    out.push((cur.trim().to_string(), start + lead));
    out
}

fn check_declarations(spec: &ProblemSpec) -> DResult<()> {
    let mut seen = std::collections::BTreeSet::new();
    let all = spec
        .indep
        .iter()
        .chain(&spec.dep)
        .chain(spec.funcs.iter().map(|f| &f.name));
    for name in all {
        if !seen.insert(name.clone()) {
            return Err(DslError::Semantic {
                line: 1,
                col: 1,
                msg: format!("`{name}` is declared twice"),
            });
        }
    }
    if spec.dep.is_empty() {
        return Err(DslError::Semantic {
            line: 1,
            col: 1,
            msg: "no dependent variables declared".into(),
        });
    }
    Ok(())
}

fn parse_equation(text: &str, spec: &ProblemSpec, line: usize, col: usize) -> DResult<Equation> {
    let scope = spec.scope();
    let toks = lex(text, line, col)?;
    let end = col + text.chars().count();
    let Some(eq_at) = toks.iter().position(|t| t.tok == Tok::Sym('=')) else {
        return Err(DslError::Syntax {
            line,
            col: end,
            msg: "expected `=`".into(),
        });
    };
    let eq_col = toks[eq_at].col;
    let (lhs_toks, rhs_toks) = (toks[..eq_at].to_vec(), toks[eq_at + 1..].to_vec());
    let mut lp = Parser::new(lhs_toks, line, eq_col, scope);
    let lhs = lp.sum()?;
    lp.finish()?;
    let lhs = match lhs.as_coord() {
        Some(c @ Coordinate::Jet { bar: false, .. }) if c.jet_order() > 0 => c,
        _ => {
            return Err(DslError::Semantic {
                line,
                col,
                msg: "the left-hand side must be a derivative of a dependent variable".into(),
            })
        }
    };
    let mut rp = Parser::new(rhs_toks, line, end, scope);
    if rp.done() {
        return Err(rp.syntax("empty right-hand side"));
    }
    let rhs = rp.sum()?;
    rp.finish()?;
    Ok(Equation { lhs, rhs })
}

// ---------------------------------------------------------------- rendering

fn lhs_text(spec: &ProblemSpec, c: &Coordinate) -> String {
    let Coordinate::Jet { dep, order, .. } = c else {
        return c.to_string();
    };
    let mut s = spec.dep[*dep as usize - 1].clone();
    for (i, &k) in order.entries().iter().enumerate() {
        for _ in 0..k {
            s = if spec.n() == 1 {
                format!("D({s})")
            } else {
                format!("D_{}({s})", spec.indep[i])
            };
        }
    }
    s
}

fn quote(v: &str) -> String {
    if v.is_empty() || v.contains(char::is_whitespace) || v.contains('#') {
        format!("\"{v}\"")
    } else {
        v.to_string()
    }
}

impl fmt::Display for ProblemSpec {
    /// The canonical text of the spec; parsing it gives back an equal spec.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "system {}", self.name)?;
        if !self.indep.is_empty() {
            writeln!(f, "indep {}", self.indep.join(", "))?;
        }
        writeln!(f, "dep {}", self.dep.join(", "))?;
        for d in &self.funcs {
            writeln!(f, "func {}({})", d.name, d.arity)?;
        }
        for e in &self.equations {
            writeln!(f, "eq {} = {}", lhs_text(self, &e.lhs), e.rhs)?;
        }
        for a in &self.assumptions {
            writeln!(f, "assume nonzero {a}")?;
        }
        for q in &self.queries {
            write!(f, "query {}", q.analysis.value)?;
            for (k, v) in &q.args {
                write!(f, " {k}={}", quote(&v.value))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
