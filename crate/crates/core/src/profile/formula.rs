use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{message} at offset {offset}")]
pub struct FormulaError {
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    Field(String),
    Neg(Box<Expr>),
    Binary(Box<Expr>, Op, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Op(Op),
    Open,
    Close,
}

fn err(offset: usize, message: impl Into<String>) -> FormulaError {
    FormulaError {
        offset,
        message: message.into(),
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn tokenize(src: &str) -> Result<Vec<(usize, Token)>, FormulaError> {
    let mut out = Vec::new();
    let mut it = src.char_indices().peekable();
    while let Some(&(i, c)) = it.peek() {
        match c {
            c if c.is_whitespace() => {
                it.next();
            }
            '+' | '-' | '*' | '/' => {
                let op = match c {
                    '+' => Op::Add,
                    '-' => Op::Sub,
                    '*' => Op::Mul,
                    _ => Op::Div,
                };
                out.push((i, Token::Op(op)));
                it.next();
            }
            '(' => {
                out.push((i, Token::Open));
                it.next();
            }
            ')' => {
                out.push((i, Token::Close));
                it.next();
            }
            '0'..='9' | '.' => {
                let mut end = i;
                while let Some(&(j, d)) = it.peek() {
                    if d.is_ascii_digit() || d == '.' {
                        end = j + 1;
                        it.next();
                    } else {
                        break;
                    }
                }
                let text = &src[i..end];
                let v: f64 = text
                    .parse()
                    .map_err(|_| err(i, format!("invalid number `{text}`")))?;
                out.push((i, Token::Number(v)));
            }
            '"' => {
                it.next();
                let mut name = String::new();
                loop {
                    match it.next() {
                        Some((_, '"')) => break,
                        Some((_, ch)) => name.push(ch),
                        None => return Err(err(src.len(), "unterminated quoted name")),
                    }
                }
                if name.is_empty() {
                    return Err(err(i, "empty quoted name"));
                }
                out.push((i, Token::Ident(name)));
            }
            c if is_ident_start(c) => {
                let mut end = i;
                while let Some(&(j, d)) = it.peek() {
                    if is_ident_char(d) {
                        end = j + d.len_utf8();
                        it.next();
                    } else {
                        break;
                    }
                }
                out.push((i, Token::Ident(src[i..end].to_string())));
            }
            other => return Err(err(i, format!("unexpected character `{other}`"))),
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: &'a [(usize, Token)],
    pos: usize,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    // expr := term (('+' | '-') term)*
    fn expr(&mut self) -> Result<Expr, FormulaError> {
        let mut lhs = self.term()?;
        while let Some(Token::Op(op @ (Op::Add | Op::Sub))) = self.peek() {
            let op = *op;
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Binary(Box::new(lhs), op, Box::new(rhs));
        }
        Ok(lhs)
    }

    // term := unary (('*' | '/') unary)*
    fn term(&mut self) -> Result<Expr, FormulaError> {
        let mut lhs = self.unary()?;
        while let Some(Token::Op(op @ (Op::Mul | Op::Div))) = self.peek() {
            let op = *op;
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Binary(Box::new(lhs), op, Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, FormulaError> {
        match self.peek() {
            Some(Token::Op(Op::Sub)) => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some(Token::Op(Op::Add)) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Expr, FormulaError> {
        let offset = self.offset();
        match self.peek().cloned() {
            Some(Token::Number(v)) => {
                self.pos += 1;
                Ok(Expr::Number(v))
            }
            Some(Token::Ident(name)) => {
                self.pos += 1;
                Ok(Expr::Field(name))
            }
            Some(Token::Open) => {
                self.pos += 1;
                let inner = self.expr()?;
                match self.peek() {
                    Some(Token::Close) => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    _ => Err(err(self.offset(), "expected `)`")),
                }
            }
            Some(_) => Err(err(offset, "expected a number, a name or `(`")),
            None => Err(err(offset, "unexpected end of formula")),
        }
    }
}

/// Parses `+ - * /` expressions over numbers and attribute names. Names with
/// spaces or symbols go in double quotes.
pub fn parse(src: &str) -> Result<Expr, FormulaError> {
    let tokens = tokenize(src)?;
    let mut p = Parser {
        tokens: &tokens,
        pos: 0,
        end: src.len(),
    };
    let expr = p.expr()?;
    if p.pos < tokens.len() {
        return Err(err(p.offset(), "unexpected trailing input"));
    }
    Ok(expr)
}

impl Expr {
    pub fn references(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect(&mut out);
        out
    }

    fn collect<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Expr::Number(_) => {}
            Expr::Field(f) => {
                out.insert(f);
            }
            Expr::Neg(e) => e.collect(out),
            Expr::Binary(a, _, b) => {
                a.collect(out);
                b.collect(out);
            }
        }
    }

    /// `None` when a referenced value is missing or the result is not finite.
    pub fn eval(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Option<f64> {
        let v = match self {
            Expr::Number(v) => *v,
            Expr::Field(f) => lookup(f)?,
            Expr::Neg(e) => -e.eval(lookup)?,
            Expr::Binary(a, op, b) => {
                let (a, b) = (a.eval(lookup)?, b.eval(lookup)?);
                match op {
                    Op::Add => a + b,
                    Op::Sub => a - b,
                    Op::Mul => a * b,
                    Op::Div => a / b,
                }
            }
        };
        v.is_finite().then_some(v)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Number(v) => write!(f, "{v}"),
            Expr::Field(name) if name.chars().all(is_ident_char) && name.starts_with(is_ident_start) => {
                write!(f, "{name}")
            }
            Expr::Field(name) => write!(f, "\"{name}\""),
            Expr::Neg(e) => write!(f, "-({e})"),
            Expr::Binary(a, op, b) => {
                let sym = match op {
                    Op::Add => '+',
                    Op::Sub => '-',
                    Op::Mul => '*',
                    Op::Div => '/',
                };
                write!(f, "({a} {sym} {b})")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(src: &str, vars: &[(&str, f64)]) -> Option<f64> {
        parse(src)
            .unwrap()
            .eval(&|name| vars.iter().find(|(n, _)| *n == name).map(|(_, v)| *v))
    }

    #[test]
    fn precedence_and_unary() {
        assert_eq!(eval("1 + 2 * 3", &[]), Some(7.0));
        assert_eq!(eval("(1 + 2) * 3", &[]), Some(9.0));
        assert_eq!(eval("-2 - -3", &[]), Some(1.0));
        assert_eq!(eval("8 / 4 / 2", &[]), Some(1.0));
        assert_eq!(eval("10 - 4 - 3", &[]), Some(3.0));
    }

    #[test]
    fn fields() {
        assert_eq!(eval("1 - women_expression_rate", &[("women_expression_rate", 0.25)]), Some(0.75));
        assert_eq!(eval("\"speech rate\" * 2", &[("speech rate", 1.5)]), Some(3.0));
        assert_eq!(eval("a / b", &[("a", 1.0), ("b", 0.0)]), None);
        assert_eq!(eval("a + 1", &[]), None);
    }

    #[test]
    fn error_offsets() {
        assert_eq!(parse("rate / ").unwrap_err().offset, 7);
        assert_eq!(parse("(a + b").unwrap_err().offset, 6);
        assert_eq!(parse("a b").unwrap_err().offset, 2);
        assert_eq!(parse("a $ b").unwrap_err().offset, 2);
        assert_eq!(parse("").unwrap_err().offset, 0);
        assert_eq!(parse("1.2.3").unwrap_err().offset, 0);
    }

    #[test]
    fn references_are_collected() {
        let e = parse("a * (b - a) / \"c d\"").unwrap();
        assert_eq!(e.references().into_iter().collect::<Vec<_>>(), ["a", "b", "c d"]);
    }

    #[test]
    fn display_reparses_to_same_tree() {
        let e = parse("-a * (\"x y\" + 2.5) / 3").unwrap();
        assert_eq!(parse(&e.to_string()).unwrap(), e);
    }
}
