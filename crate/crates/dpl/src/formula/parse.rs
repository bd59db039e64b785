//! Recursive-descent parser for the ASCII formula syntax.

use super::*;
use num_bigint::BigInt;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(BigInt),
    Slash,
    LBrack,
    RBrack,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Colon,
    Bang,
    Amp,
    Pipe,
    Arrow,
    DArrow,
    Lt,
    Le,
    Ge,
    Gt,
    Eq,
    Caret,
    Plus,
    Minus,
    Star,
    Eof,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let push = |out: &mut Vec<Spanned>, tok| out.push(Spanned { tok, line: l0, col: c0 });
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            push(&mut out, Tok::Ident(chars[start..i].iter().collect()));
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            col += i - start;
            let s: String = chars[start..i].iter().collect();
            push(&mut out, Tok::Num(BigInt::from_str(&s).unwrap()));
            continue;
        }
        let peek = |k: usize| chars.get(i + k).copied();
        let (tok, width) = match c {
            '/' => (Tok::Slash, 1),
            '[' => (Tok::LBrack, 1),
            ']' => (Tok::RBrack, 1),
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            '{' => (Tok::LBrace, 1),
            '}' => (Tok::RBrace, 1),
            ',' => (Tok::Comma, 1),
            ';' => (Tok::Semi, 1),
            ':' => (Tok::Colon, 1),
            '!' => (Tok::Bang, 1),
            '&' => (Tok::Amp, 1),
            '|' => (Tok::Pipe, 1),
            '^' => (Tok::Caret, 1),
            '+' => (Tok::Plus, 1),
            '*' => (Tok::Star, 1),
            '=' => (Tok::Eq, 1),
            '-' if peek(1) == Some('>') => (Tok::Arrow, 2),
            '-' => (Tok::Minus, 1),
            '<' if peek(1) == Some('-') && peek(2) == Some('>') => (Tok::DArrow, 3),
            '<' if peek(1) == Some('=') => (Tok::Le, 2),
            '<' => (Tok::Lt, 1),
            '>' if peek(1) == Some('=') => (Tok::Ge, 2),
            '>' => (Tok::Gt, 1),
            _ => {
                return Err(ParseError { line, col, msg: format!("unexpected character '{}'", c) });
            }
        };
        push(&mut out, tok);
        i += width;
        col += width;
    }
    out.push(Spanned { tok: Tok::Eof, line, col });
    Ok(out)
}

const KEYWORDS: &[&str] = &[
    "L", "M", "I", "LN", "O", "And", "Or", "AndTail", "OrTail", "AndBelow", "OrBelow", "AndSum", "OrSum",
    "LimL", "LimM", "Iter", "true", "false",
];

/// Comparison operators for linear constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Cmp {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn new(text: &str) -> PResult<Self> {
        Ok(Parser { toks: lex(text)?, pos: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let s = &self.toks[self.pos];
        Err(ParseError { line: s.line, col: s.col, msg: msg.into() })
    }

    fn err_at<T>(&self, pos: usize, msg: impl Into<String>) -> PResult<T> {
        let s = &self.toks[pos];
        Err(ParseError { line: s.line, col: s.col, msg: msg.into() })
    }

    fn expect(&mut self, t: Tok, what: &str) -> PResult<()> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected {}, found {}", what, describe(self.peek())))
        }
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn finish(&self) -> PResult<()> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            self.err(format!("unexpected {}", describe(self.peek())))
        }
    }

    fn formula(&mut self) -> PResult<Formula> {
        let mut left = self.imp()?;
        while self.eat(&Tok::DArrow) {
            let right = self.imp()?;
            left = iff(left, right);
        }
        Ok(left)
    }

    fn imp(&mut self) -> PResult<Formula> {
        let left = self.or()?;
        if self.eat(&Tok::Arrow) {
            let right = self.imp()?;
            return Ok(implies(left, right));
        }
        Ok(left)
    }

    fn or(&mut self) -> PResult<Formula> {
        let mut fs = vec![self.and()?];
        while self.eat(&Tok::Pipe) {
            fs.push(self.and()?);
        }
        Ok(if fs.len() == 1 { fs.pop().unwrap() } else { or(fs) })
    }

    fn and(&mut self) -> PResult<Formula> {
        let mut fs = vec![self.unary()?];
        while self.eat(&Tok::Amp) {
            fs.push(self.unary()?);
        }
        Ok(and(fs))
    }

    fn unary(&mut self) -> PResult<Formula> {
        if self.eat(&Tok::Bang) {
            return Ok(neg(self.unary()?));
        }
        let Tok::Ident(name) = self.peek().clone() else {
            if self.eat(&Tok::LParen) {
                let f = self.formula()?;
                self.expect(Tok::RParen, "')'")?;
                return Ok(f);
            }
            return self.err(format!("expected a formula, found {}", describe(self.peek())));
        };
        if !KEYWORDS.contains(&name.as_str()) {
            self.bump();
            return Ok(Formula::Atom(name));
        }
        let kw_pos = self.pos;
        self.bump();
        match name.as_str() {
            "true" => Ok(top()),
            "false" => Ok(bot()),
            "L" | "M" | "I" => {
                self.expect(Tok::LBrack, "'['")?;
                let t = self.threshold()?;
                self.expect(Tok::RBrack, "']'")?;
                let body = self.unary()?;
                Ok(match name.as_str() {
                    "L" => Formula::L(t, Box::new(body)),
                    "M" => m(t, body),
                    _ => Formula::InitL(t, Box::new(body)),
                })
            }
            "LN" => {
                self.expect(Tok::LBrack, "'['")?;
                let n = self.nat()?;
                self.expect(Tok::Comma, "','")?;
                let t = self.threshold()?;
                self.expect(Tok::RBrack, "']'")?;
                let body = self.unary()?;
                Ok(Formula::NStepL(n, t, Box::new(body)))
            }
            "O" => {
                let n = if self.eat(&Tok::Caret) { self.nat()? } else { 1 };
                let body = self.unary()?;
                Ok(next_n(n, body))
            }
            "And" | "Or" => {
                self.expect(Tok::LParen, "'('")?;
                let fs = self.list(&Tok::RParen)?;
                self.expect(Tok::RParen, "')'")?;
                let fam = Family::Finite(fs);
                Ok(if name == "And" { Formula::BigAnd(fam) } else { Formula::BigOr(fam) })
            }
            "AndTail" | "OrTail" => {
                self.expect(Tok::LParen, "'('")?;
                let prefix = self.list(&Tok::Semi)?;
                self.expect(Tok::Semi, "';'")?;
                let tail = self.formula()?;
                self.expect(Tok::RParen, "')'")?;
                let fam = Family::Nat { prefix, tail: Box::new(tail) };
                Ok(if name == "AndTail" { Formula::BigAnd(fam) } else { Formula::BigOr(fam) })
            }
            "AndBelow" | "OrBelow" => {
                self.expect(Tok::LBrack, "'['")?;
                let var = self.ident()?;
                let strict = match self.bump() {
                    Tok::Lt => true,
                    Tok::Le => false,
                    _ => return self.err_at(self.pos - 1, "expected '<' or '<='"),
                };
                let bound = self.threshold()?;
                self.expect(Tok::RBrack, "']'")?;
                self.expect(Tok::LBrace, "'{'")?;
                let template = self.formula()?;
                self.expect(Tok::RBrace, "'}'")?;
                let fam = Family::Threshold { var, template: Box::new(template), bound, strict };
                Ok(if name == "AndBelow" { Formula::BigAnd(fam) } else { Formula::BigOr(fam) })
            }
            "AndSum" | "OrSum" => {
                self.expect(Tok::LBrack, "'['")?;
                let var = self.ident()?;
                self.expect(Tok::Ge, "'>='")?;
                let bound = self.affine()?;
                self.expect(Tok::RBrack, "']'")?;
                self.expect(Tok::LBrace, "'{'")?;
                let mut parts = Vec::new();
                loop {
                    let weight = self.rational()?;
                    self.expect(Tok::LBrace, "'{'")?;
                    let mut grid = Vec::new();
                    if *self.peek() != Tok::RBrace {
                        loop {
                            grid.push(self.rational()?);
                            if !self.eat(&Tok::Comma) {
                                break;
                            }
                        }
                    }
                    self.expect(Tok::RBrace, "'}'")?;
                    self.expect(Tok::Colon, "':'")?;
                    let template = self.formula()?;
                    parts.push(SumPart { weight, grid, template });
                    if !self.eat(&Tok::Semi) {
                        break;
                    }
                }
                self.expect(Tok::RBrace, "'}'")?;
                let fam = Family::WeightedSum { var, parts, bound };
                Ok(if name == "AndSum" { Formula::BigAnd(fam) } else { Formula::BigOr(fam) })
            }
            "LimL" | "LimM" => {
                self.expect(Tok::LBrack, "'['")?;
                let t = self.threshold()?;
                self.expect(Tok::RBrack, "']'")?;
                self.expect(Tok::LBrace, "'{'")?;
                let body_pos = self.pos;
                let body = self.formula()?;
                self.expect(Tok::RBrace, "'}'")?;
                if let Err(e) = NatTemplate::new(body.clone()) {
                    return self.err_at(body_pos, e.to_string());
                }
                Ok(if name == "LimL" { Formula::LimL(t, Box::new(body)) } else { Formula::LimM(t, Box::new(body)) })
            }
            "Iter" => {
                self.expect(Tok::LParen, "'('")?;
                let f = self.formula()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(iter(f))
            }
            _ => self.err_at(kw_pos, format!("unexpected keyword {}", name)),
        }
    }

    fn list(&mut self, end: &Tok) -> PResult<Vec<Formula>> {
        let mut fs = Vec::new();
        if self.peek() == end {
            return Ok(fs);
        }
        loop {
            fs.push(self.formula()?);
            if !self.eat(&Tok::Comma) {
                return Ok(fs);
            }
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            t => self.err(format!("expected an identifier, found {}", describe(&t))),
        }
    }

    fn nat(&mut self) -> PResult<u32> {
        match self.peek().clone() {
            Tok::Num(n) => match u32::try_from(&n) {
                Ok(v) => {
                    self.bump();
                    Ok(v)
                }
                Err(_) => self.err("natural number too large"),
            },
            t => self.err(format!("expected a natural number, found {}", describe(&t))),
        }
    }

    fn rational(&mut self) -> PResult<Rational> {
        let start = self.pos;
        let negative = self.eat(&Tok::Minus);
        let Tok::Num(n) = self.peek().clone() else {
            return self.err(format!("malformed rational: expected a number, found {}", describe(self.peek())));
        };
        self.bump();
        let mut q = Rational::from_integer(n);
        if *self.peek() == Tok::Slash {
            self.bump();
            let Tok::Num(d) = self.peek().clone() else {
                return self.err("malformed rational: expected a denominator");
            };
            if d.is_zero() {
                return self.err_at(start, "malformed rational: zero denominator");
            }
            self.bump();
            q /= Rational::from_integer(d);
        }
        Ok(if negative { -q } else { q })
    }

    /// A threshold slot; ground values must lie in [0, 1].
    fn threshold(&mut self) -> PResult<Thr> {
        let start = self.pos;
        let a = self.affine()?;
        if let Some(q) = a.ground() {
            if !in_unit(q) {
                return self.err_at(start, format!("threshold {} out of range [0,1]", q));
            }
        }
        Ok(a)
    }

    fn affine(&mut self) -> PResult<Affine> {
        let mut acc = self.affine_term()?;
        loop {
            if self.eat(&Tok::Plus) {
                acc = acc.add(&self.affine_term()?);
            } else if *self.peek() == Tok::Minus {
                self.bump();
                acc = acc.sub(&self.affine_term()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn affine_term(&mut self) -> PResult<Affine> {
        if self.eat(&Tok::Minus) {
            return Ok(self.affine_term()?.scale(&-Rational::one()));
        }
        match self.peek().clone() {
            Tok::Num(_) => {
                let q = self.rational()?;
                if self.eat(&Tok::Star) {
                    let v = self.ident()?;
                    Ok(Affine::var(&v).scale(&q))
                } else {
                    Ok(Affine::constant(q))
                }
            }
            Tok::Ident(_) => {
                let v = self.ident()?;
                let mut a = Affine::var(&v);
                if self.eat(&Tok::Slash) {
                    let Tok::Num(d) = self.peek().clone() else {
                        return self.err("expected a divisor");
                    };
                    if d.is_zero() {
                        return self.err("division by zero");
                    }
                    self.bump();
                    a = a.scale(&(Rational::one() / Rational::from_integer(d)));
                }
                Ok(a)
            }
            Tok::LParen => {
                self.bump();
                let a = self.affine()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(a)
            }
            t => self.err(format!("expected a threshold expression, found {}", describe(&t))),
        }
    }

    fn cmp(&mut self) -> PResult<Cmp> {
        let op = match self.peek() {
            Tok::Lt => Cmp::Lt,
            Tok::Le => Cmp::Le,
            Tok::Eq => Cmp::Eq,
            Tok::Ge => Cmp::Ge,
            Tok::Gt => Cmp::Gt,
            t => return self.err(format!("expected a comparison, found {}", describe(t))),
        };
        self.bump();
        Ok(op)
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("'{}'", s),
        Tok::Num(n) => format!("'{}'", n),
        Tok::Eof => "end of input".into(),
        other => format!("{:?}", other),
    }
}

pub fn parse(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser::new(text)?;
    let f = p.formula()?;
    p.finish()?;
    Ok(f)
}

pub fn parse_affine(text: &str) -> Result<Affine, ParseError> {
    let mut p = Parser::new(text)?;
    let a = p.affine()?;
    p.finish()?;
    Ok(a)
}

pub fn parse_rational(text: &str) -> Result<Rational, ParseError> {
    let mut p = Parser::new(text)?;
    let q = p.rational()?;
    p.finish()?;
    Ok(q)
}

/// `lhs op rhs` over affine expressions.
pub fn parse_comparison(text: &str) -> Result<(Affine, Cmp, Affine), ParseError> {
    let mut p = Parser::new(text)?;
    let a = p.affine()?;
    let op = p.cmp()?;
    let b = p.affine()?;
    p.finish()?;
    Ok((a, op, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(parse("L[1/2] p").unwrap(), l(rat(1, 2), atom("p")));
        assert_eq!(parse("O O !p").unwrap(), next(next(neg(atom("p")))));
        assert_eq!(parse("O^2 !p").unwrap(), next(next(neg(atom("p")))));
        let e = parse("L[3/2] p").unwrap_err();
        assert!(e.msg.contains("out of range"), "{}", e);
        assert_eq!((e.line, e.col), (1, 3));
    }

    #[test]
    fn precedence() {
        let f = parse("!p & q | r -> s <-> t").unwrap();
        let pq = and2(neg(atom("p")), atom("q"));
        let lhs = implies(or2(pq, atom("r")), atom("s"));
        assert_eq!(f, iff(lhs, atom("t")));
        assert_eq!(parse("L[1/2] p & q").unwrap(), and2(l(rat(1, 2), atom("p")), atom("q")));
        assert_eq!(parse("p -> q -> r").unwrap(), implies(atom("p"), implies(atom("q"), atom("r"))));
    }

    #[test]
    fn errors_carry_position() {
        let e = parse("p &\n  & q").unwrap_err();
        assert_eq!((e.line, e.col), (2, 3));
        assert!(parse("L[1/0] p").unwrap_err().msg.contains("zero denominator"));
        assert!(parse("L[x p").is_err());
        assert!(parse("p q").is_err());
        assert!(parse("LimL[1/2]{ p }").unwrap_err().msg.contains("Iter"));
    }

    #[test]
    fn modalities_and_families() {
        assert_eq!(parse("M[1/4] p").unwrap(), l(rat(3, 4), neg(atom("p"))));
        assert_eq!(parse("I[1] p").unwrap(), init_l(int(1), atom("p")));
        assert_eq!(parse("LN[2, 1/3] p").unwrap(), nstep_l(2, rat(1, 3), atom("p")));
        let f = parse("AndBelow[s < 1/2]{ L[s] p }").unwrap();
        match f {
            Formula::BigAnd(Family::Threshold { var, strict, .. }) => {
                assert_eq!(var, "s");
                assert!(strict);
            }
            _ => panic!(),
        }
        assert!(parse("AndTail(p, q ; r)").is_ok());
        assert!(parse("AndTail(; r)").is_ok());
        assert!(parse("LimL[1/4]{ Iter(p) & q }").is_ok());
        assert!(parse("OrSum[c >= 1/2]{ 1/2 {0, 1}: L[c] p ; 1 {1/3}: I[c] q }").is_ok());
        assert_eq!(parse("true").unwrap(), top());
        assert_eq!(parse("false").unwrap(), bot());
    }

    #[test]
    fn affine_thresholds() {
        let f = parse("L[1 - r] p").unwrap();
        assert_eq!(f, l(Affine::var("r").complement(), atom("p")));
        let a = parse_affine("r/2 + 1/3*s - 1").unwrap();
        assert_eq!(a.terms.len(), 2);
        let (lhs, op, rhs) = parse_comparison("r + s <= 1").unwrap();
        assert_eq!(op, Cmp::Le);
        assert_eq!(lhs, Affine::var("r").add(&Affine::var("s")));
        assert_eq!(rhs, Affine::constant(int(1)));
    }
}
