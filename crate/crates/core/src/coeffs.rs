//! Scalar coefficient functions and the scalar reduction `t_alpha`.
//!
//! Coefficients are small expression trees over the complex variable `w`.
//! The textual grammar is
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := base ('^' integer)?
//! base   := number | 'w' | 'i' | '(' expr ')' | ('sin' | 'cos' | 'exp') '(' expr ')'
//! ```
//!
//! Numbers are unsigned decimal literals; whitespace is insignificant.

use std::fmt;

use num_complex::Complex64;

use crate::{Error, Result};

/// Expression tree for one coefficient function `C -> C`.
#[derive(Debug, Clone, PartialEq)]
pub enum CoeffExpr {
    Const(Complex64),
    Var,
    Add(Box<CoeffExpr>, Box<CoeffExpr>),
    Sub(Box<CoeffExpr>, Box<CoeffExpr>),
    Mul(Box<CoeffExpr>, Box<CoeffExpr>),
    Div(Box<CoeffExpr>, Box<CoeffExpr>),
    Pow(Box<CoeffExpr>, u32),
    Sin(Box<CoeffExpr>),
    Cos(Box<CoeffExpr>),
    Exp(Box<CoeffExpr>),
}

impl CoeffExpr {
    pub fn parse(text: &str) -> Result<CoeffExpr> {
        let mut parser = Parser {
            src: text.as_bytes(),
            pos: 0,
        };
        let expr = parser.expr()?;
        parser.skip_ws();
        if parser.pos < parser.src.len() {
            return Err(parser.syntax("unexpected trailing input"));
        }
        Ok(expr)
    }

    pub fn constant(c: impl Into<Complex64>) -> CoeffExpr {
        CoeffExpr::Const(c.into())
    }

    /// Evaluates at `w`. Division by zero and non-finite results are domain errors.
    pub fn eval(&self, w: Complex64) -> Result<Complex64> {
        let value = match self {
            CoeffExpr::Const(c) => *c,
            CoeffExpr::Var => w,
            CoeffExpr::Add(a, b) => a.eval(w)? + b.eval(w)?,
            CoeffExpr::Sub(a, b) => a.eval(w)? - b.eval(w)?,
            CoeffExpr::Mul(a, b) => a.eval(w)? * b.eval(w)?,
            CoeffExpr::Div(a, b) => {
                let den = b.eval(w)?;
                if den.re == 0.0 && den.im == 0.0 {
                    return Err(Error::Domain(format!(
                        "division by zero in `{self}` at w = {w}"
                    )));
                }
                a.eval(w)? / den
            }
            CoeffExpr::Pow(a, k) => a.eval(w)?.powu(*k),
            CoeffExpr::Sin(a) => a.eval(w)?.sin(),
            CoeffExpr::Cos(a) => a.eval(w)?.cos(),
            CoeffExpr::Exp(a) => a.eval(w)?.exp(),
        };
        if value.re.is_finite() && value.im.is_finite() {
            Ok(value)
        } else {
            Err(Error::Domain(format!("`{self}` is not finite at w = {w}")))
        }
    }

    /// Every node is holomorphic wherever it evaluates, so this is exactly
    /// "evaluation succeeds at `w`".
    pub fn is_holomorphic_at(&self, w: Complex64) -> bool {
        self.eval(w).is_ok()
    }

    /// True when the tree does not mention `w`.
    pub fn is_constant(&self) -> bool {
        match self {
            CoeffExpr::Const(_) => true,
            CoeffExpr::Var => false,
            CoeffExpr::Add(a, b)
            | CoeffExpr::Sub(a, b)
            | CoeffExpr::Mul(a, b)
            | CoeffExpr::Div(a, b) => a.is_constant() && b.is_constant(),
            CoeffExpr::Pow(a, _) | CoeffExpr::Sin(a) | CoeffExpr::Cos(a) | CoeffExpr::Exp(a) => {
                a.is_constant()
            }
        }
    }

    /// `c * self`.
    pub fn scaled(&self, c: Complex64) -> CoeffExpr {
        CoeffExpr::Mul(Box::new(CoeffExpr::Const(c)), Box::new(self.clone()))
    }

    fn precedence(&self) -> u8 {
        match self {
            CoeffExpr::Add(..) | CoeffExpr::Sub(..) => 1,
            CoeffExpr::Mul(..) | CoeffExpr::Div(..) => 2,
            CoeffExpr::Pow(..) => 3,
            CoeffExpr::Const(c) if !is_plain_literal(*c) => 0,
            _ => 4,
        }
    }

    fn write_at(&self, out: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        if self.precedence() < min_prec {
            out.write_str("(")?;
            self.write_at(out, 0)?;
            return out.write_str(")");
        }
        match self {
            CoeffExpr::Const(c) => write_const(out, *c),
            CoeffExpr::Var => out.write_str("w"),
            CoeffExpr::Add(a, b) => {
                a.write_at(out, 1)?;
                out.write_str(" + ")?;
                b.write_at(out, 2)
            }
            CoeffExpr::Sub(a, b) => {
                a.write_at(out, 1)?;
                out.write_str(" - ")?;
                b.write_at(out, 2)
            }
            CoeffExpr::Mul(a, b) => {
                a.write_at(out, 2)?;
                out.write_str("*")?;
                b.write_at(out, 3)
            }
            CoeffExpr::Div(a, b) => {
                a.write_at(out, 2)?;
                out.write_str("/")?;
                b.write_at(out, 3)
            }
            CoeffExpr::Pow(a, k) => {
                a.write_at(out, 4)?;
                write!(out, "^{k}")
            }
            CoeffExpr::Sin(a) => write_call(out, "sin", a),
            CoeffExpr::Cos(a) => write_call(out, "cos", a),
            CoeffExpr::Exp(a) => write_call(out, "exp", a),
        }
    }
}

fn is_plain_literal(c: Complex64) -> bool {
    (c.im == 0.0 && c.re >= 0.0 && c.re.is_finite() && !c.re.is_sign_negative())
        || (c.re == 0.0 && c.im == 1.0)
}

fn write_call(out: &mut fmt::Formatter<'_>, name: &str, arg: &CoeffExpr) -> fmt::Result {
    write!(out, "{name}(")?;
    arg.write_at(out, 0)?;
    out.write_str(")")
}

fn write_real(out: &mut fmt::Formatter<'_>, x: f64) -> fmt::Result {
    if x < 0.0 {
        write!(out, "0 - {}", -x)
    } else {
        write!(out, "{x}")
    }
}

// Constants that the grammar cannot spell directly (negative or general
// complex values) are written as parenthesized arithmetic.
fn write_const(out: &mut fmt::Formatter<'_>, c: Complex64) -> fmt::Result {
    if c.re == 0.0 && c.im == 1.0 {
        return out.write_str("i");
    }
    if c.im == 0.0 {
        return write_real(out, c.re);
    }
    if c.re != 0.0 {
        write_real(out, c.re)?;
        out.write_str(if c.im < 0.0 { " - " } else { " + " })?;
    } else if c.im < 0.0 {
        out.write_str("0 - ")?;
    }
    write!(out, "{}*i", c.im.abs())
}

/// Canonical printer. `CoeffExpr::parse(&e.to_string()) == e` for every tree
/// produced by the parser.
impl fmt::Display for CoeffExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}

impl std::str::FromStr for CoeffExpr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CoeffExpr::parse(s)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn syntax(&self, message: &str) -> Error {
        Error::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, byte: u8) -> Result<()> {
        if self.peek() == Some(byte) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.syntax(&format!("expected `{}`", byte as char)))
        }
    }

    fn expr(&mut self) -> Result<CoeffExpr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    lhs = CoeffExpr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    lhs = CoeffExpr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<CoeffExpr> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    lhs = CoeffExpr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Some(b'/') => {
                    self.pos += 1;
                    lhs = CoeffExpr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<CoeffExpr> {
        let base = self.base()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(self.syntax("expected integer exponent"));
            }
            let digits = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
            let k = digits.parse::<u32>().map_err(|_| Error::Syntax {
                offset: start,
                message: "exponent out of range".to_string(),
            })?;
            return Ok(CoeffExpr::Pow(Box::new(base), k));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<CoeffExpr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(b')')?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            Some(_) => Err(self.syntax("expected number, `w`, `i`, `(` or function")),
            None => Err(self.syntax("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<CoeffExpr> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            let frac = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if frac == self.pos {
                return Err(self.syntax("expected digits after decimal point"));
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii number");
        let value: f64 = text.parse().map_err(|_| Error::Syntax {
            offset: start,
            message: format!("bad number `{text}`"),
        })?;
        Ok(CoeffExpr::Const(Complex64::new(value, 0.0)))
    }

    fn identifier(&mut self) -> Result<CoeffExpr> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii identifier");
        let wrap: fn(Box<CoeffExpr>) -> CoeffExpr = match name {
            "w" => return Ok(CoeffExpr::Var),
            "i" => return Ok(CoeffExpr::Const(Complex64::new(0.0, 1.0))),
            "sin" => CoeffExpr::Sin,
            "cos" => CoeffExpr::Cos,
            "exp" => CoeffExpr::Exp,
            _ => {
                return Err(Error::UnknownIdentifier {
                    offset: start,
                    name: name.to_string(),
                })
            }
        };
        self.expect(b'(')?;
        let arg = self.expr()?;
        self.expect(b')')?;
        Ok(wrap(Box::new(arg)))
    }
}

/// The operator function `g(w) + sum_j A_j f_j(w)`, described by its scalar
/// coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub g: CoeffExpr,
    pub f: Vec<CoeffExpr>,
    /// User assertion that the coefficients are holomorphic and linearly
    /// independent on the region of interest. Not checked numerically.
    pub holomorphic_independent: bool,
}

impl ProblemSpec {
    pub fn new(g: CoeffExpr, f: Vec<CoeffExpr>) -> Result<ProblemSpec> {
        if f.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one operator coefficient is required".into(),
            ));
        }
        Ok(ProblemSpec {
            g,
            f,
            holomorphic_independent: true,
        })
    }

    pub fn parse(g: &str, f: &[&str]) -> Result<ProblemSpec> {
        let f = f
            .iter()
            .map(|s| CoeffExpr::parse(s))
            .collect::<Result<Vec<_>>>()?;
        ProblemSpec::new(CoeffExpr::parse(g)?, f)
    }

    /// Number of operator coefficients.
    pub fn n(&self) -> usize {
        self.f.len()
    }

    /// Multiplies `g` and every `f_j` by `c`.
    pub fn scaled(&self, c: Complex64) -> ProblemSpec {
        ProblemSpec {
            g: self.g.scaled(c),
            f: self.f.iter().map(|e| e.scaled(c)).collect(),
            holomorphic_independent: self.holomorphic_independent,
        }
    }

    fn check_dim(&self, alpha: &[f64]) -> Result<()> {
        if alpha.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: alpha.len(),
            });
        }
        Ok(())
    }

    /// `t_alpha(w) = g(w) + sum_j alpha_j f_j(w)`.
    pub fn eval_t(&self, alpha: &[f64], w: Complex64) -> Result<Complex64> {
        self.check_dim(alpha)?;
        let mut acc = self.g.eval(w)?;
        for (fj, &aj) in self.f.iter().zip(alpha) {
            acc += fj.eval(w)? * aj;
        }
        Ok(acc)
    }

    /// Real form `F alpha = G` of `t_alpha(w) = 0`.
    pub fn linearize(&self, w: Complex64) -> Result<LinearSystem> {
        let g = self.g.eval(w)?;
        let columns = self
            .f
            .iter()
            .map(|fj| fj.eval(w).map(|v| [v.re, v.im]))
            .collect::<Result<Vec<_>>>()?;
        Ok(LinearSystem {
            columns,
            rhs: [-g.re, -g.im],
        })
    }

    pub fn classify_degeneracy(&self, w: Complex64, tau: f64) -> Result<Degeneracy> {
        if tau < 0.0 {
            return Err(Error::InvalidArgument(
                "degeneracy tolerance must be >= 0".into(),
            ));
        }
        Ok(self.linearize(w)?.degeneracy(tau))
    }
}

/// Whether `F(w)` has full rank 2 (unique real solution structure) or not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Degeneracy {
    /// `rank F(w) = 2`.
    Regular,
    /// `rank F(w) < 2`; for two coefficients this is `Im(f1 conj(f2)) = 0`.
    Degenerate,
}

/// The 2 x n real system `F alpha = G`, stored by columns: column `j` is
/// `(Re f_j(w), Im f_j(w))` and `G = -(Re g(w), Im g(w))`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub columns: Vec<[f64; 2]>,
    pub rhs: [f64; 2],
}

impl LinearSystem {
    pub fn n(&self) -> usize {
        self.columns.len()
    }

    /// Row `r` of `F` (0 = real parts, 1 = imaginary parts).
    pub fn row(&self, r: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[r]).collect()
    }

    pub fn apply(&self, alpha: &[f64]) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (c, &a) in self.columns.iter().zip(alpha) {
            out[0] += c[0] * a;
            out[1] += c[1] * a;
        }
        out
    }

    /// `||F alpha - G||`, which equals `|t_alpha(w)|`.
    pub fn residual_norm(&self, alpha: &[f64]) -> f64 {
        let v = self.apply(alpha);
        (v[0] - self.rhs[0]).hypot(v[1] - self.rhs[1])
    }

    /// Gram matrix `F F^T` as `(a, b, c)` for `[[a, b], [b, c]]`, and its
    /// determinant computed as the sum of squared 2 x 2 minors.
    pub(crate) fn gram(&self) -> (f64, f64, f64, f64) {
        gram_of(self.columns.iter())
    }

    /// Singular values `(sigma_max, sigma_min)` of `F`.
    pub fn singular_values(&self) -> (f64, f64) {
        let (a, b, c, det) = self.gram();
        let (l1, l2) = sym2_eigenvalues(a, b, c, det);
        (l1.sqrt(), l2.sqrt())
    }

    pub fn degeneracy(&self, tau: f64) -> Degeneracy {
        let (smax, smin) = self.singular_values();
        if smin > tau * (smax + 1.0) {
            Degeneracy::Regular
        } else {
            Degeneracy::Degenerate
        }
    }
}

pub(crate) fn gram_of<'a>(
    cols: impl Iterator<Item = &'a [f64; 2]> + Clone,
) -> (f64, f64, f64, f64) {
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for col in cols.clone() {
        a += col[0] * col[0];
        b += col[0] * col[1];
        c += col[1] * col[1];
    }
    // Cauchy-Binet keeps the small eigenvalue accurate when F is nearly rank one.
    let cols: Vec<&[f64; 2]> = cols.collect();
    let mut det = 0.0;
    for i in 0..cols.len() {
        for j in i + 1..cols.len() {
            let m = cols[i][0] * cols[j][1] - cols[i][1] * cols[j][0];
            det += m * m;
        }
    }
    (a, b, c, det)
}

/// Eigenvalues `(l1 >= l2 >= 0)` of the PSD matrix `[[a, b], [b, c]]` with known determinant.
pub(crate) fn sym2_eigenvalues(a: f64, b: f64, c: f64, det: f64) -> (f64, f64) {
    let half_tr = 0.5 * (a + c);
    let l1 = half_tr + (0.5 * (a - c)).hypot(b);
    let l2 = if l1 > 0.0 { (det / l1).max(0.0) } else { 0.0 };
    (l1, l2)
}
