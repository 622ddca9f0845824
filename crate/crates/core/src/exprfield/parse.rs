//! Recursive-descent parser for the coefficient expression language.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' integer)?
//! integer := '-'? digits | '(' '-'? digits ')'
//! primary := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! Function names: `sin`, `cos`, `exp`.

use super::{Chart, Expr, ExprError};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Slash => "'/'".into(),
            Tok::Caret => "'^'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let lit = &text[start..i];
                let value = lit.parse::<f64>().map_err(|_| ExprError::Parse {
                    offset: start,
                    expected: vec!["a numeric literal".into()],
                    found: format!("'{lit}'"),
                })?;
                out.push((start, Tok::Num(value)));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Tok::Ident(text[start..i].to_string())));
                continue;
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(ExprError::Parse {
                    offset: start,
                    expected: vec!["a token".into()],
                    found: format!("'{ch}'"),
                });
            }
        };
        out.push((start, tok));
        i += 1;
    }
    out.push((text.len(), Tok::End));
    Ok(out)
}

struct Parser<'c> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    chart: &'c Chart,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn fail(&self, expected: &[&str]) -> ExprError {
        ExprError::Parse {
            offset: self.offset(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().describe(),
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    acc = acc.add(&self.term()?);
                }
                Tok::Minus => {
                    self.bump();
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    acc = acc.mul(&self.unary()?);
                }
                Tok::Slash => {
                    self.bump();
                    acc = acc.div(&self.unary()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(self.unary()?.neg());
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let n = self.integer()?;
        Ok(base.powi(n))
    }

    fn integer(&mut self) -> Result<i32, ExprError> {
        let parenthesized = *self.peek() == Tok::LParen;
        if parenthesized {
            self.bump();
        }
        let negative = *self.peek() == Tok::Minus;
        if negative {
            self.bump();
        }
        let value = match self.peek() {
            Tok::Num(v) if v.fract() == 0.0 && v.abs() <= f64::from(i32::MAX) => *v as i32,
            _ => return Err(self.fail(&["an integer exponent"])),
        };
        self.bump();
        if parenthesized {
            if *self.peek() != Tok::RParen {
                return Err(self.fail(&["')'"]));
            }
            self.bump();
        }
        Ok(if negative { -value } else { value })
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::constant(v))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                if *self.peek() != Tok::RParen {
                    return Err(self.fail(&["')'", "'+'", "'-'", "'*'", "'/'", "'^'"]));
                }
                self.bump();
                Ok(e)
            }
            Tok::Ident(name) => {
                let at = self.offset();
                self.bump();
                if *self.peek() == Tok::LParen {
                    let f: fn(&Expr) -> Expr = match name.as_str() {
                        "sin" => Expr::sin,
                        "cos" => Expr::cos,
                        "exp" => Expr::exp,
                        _ => {
                            return Err(ExprError::UnknownIdentifier { name, offset: at });
                        }
                    };
                    self.bump();
                    let arg = self.expr()?;
                    if *self.peek() != Tok::RParen {
                        return Err(self.fail(&["')'"]));
                    }
                    self.bump();
                    return Ok(f(&arg));
                }
                match self.chart.coordinate_index(&name) {
                    Some(i) => Ok(Expr::var(i)),
                    None => Err(ExprError::UnknownIdentifier { name, offset: at }),
                }
            }
            _ => Err(self.fail(&["a number", "an identifier", "'('", "'-'"])),
        }
    }
}

/// Parses `text` into an expression over the coordinates of `chart`.
pub fn parse_expression(text: &str, chart: &Chart) -> Result<Expr, ExprError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        chart,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.fail(&["'+'", "'-'", "'*'", "'/'", "end of input"]));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r3() -> Chart {
        Chart::euclidean(3)
    }

    #[test]
    fn precedence_and_functions() {
        let e = parse_expression("x^2*y + sin(z)", &r3()).unwrap();
        assert_eq!(e.eval(&[2.0, 3.0, 0.0]).unwrap(), 12.0);
        let e = parse_expression("-x^2", &r3()).unwrap();
        assert_eq!(e.eval(&[3.0, 0.0, 0.0]).unwrap(), -9.0);
        let e = parse_expression("2 - 3 - 4", &r3()).unwrap();
        assert_eq!(e.eval(&[0.0; 3]).unwrap(), -5.0);
        let e = parse_expression("8 / 2 / 2", &r3()).unwrap();
        assert_eq!(e.eval(&[0.0; 3]).unwrap(), 2.0);
        let e = parse_expression("x^(-1) + 1.5e-1", &r3()).unwrap();
        assert_eq!(e.eval(&[4.0, 0.0, 0.0]).unwrap(), 0.4);
    }

    #[test]
    fn malformed_reports_offset() {
        match parse_expression("x +* y", &r3()) {
            Err(ExprError::Parse { offset, .. }) => assert_eq!(offset, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_expression("x^1.5", &r3()),
            Err(ExprError::Parse { offset: 2, .. })
        ));
        assert!(matches!(
            parse_expression("(x", &r3()),
            Err(ExprError::Parse { offset: 2, .. })
        ));
        assert!(matches!(
            parse_expression("x y", &r3()),
            Err(ExprError::Parse { offset: 2, .. })
        ));
    }

    #[test]
    fn unknown_identifier() {
        let chart = Chart::with_names(vec!["x1".into(), "x2".into()]).unwrap();
        match parse_expression("x1 + w", &chart) {
            Err(ExprError::UnknownIdentifier { name, .. }) => assert_eq!(name, "w"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_expression("tan(x1)", &chart),
            Err(ExprError::UnknownIdentifier { .. })
        ));
    }

    #[test]
    fn display_round_trips() {
        let chart = r3();
        let e = parse_expression("-(x - 2.5e-3)^3 / (1 + exp(-y)) * cos(z)^(-2)", &chart).unwrap();
        let text = e.display_with(chart.coordinate_names()).to_string();
        let back = parse_expression(&text, &chart).unwrap();
        let p = [0.3, -0.7, 0.2];
        assert_eq!(e.eval(&p).unwrap(), back.eval(&p).unwrap());
    }
}
