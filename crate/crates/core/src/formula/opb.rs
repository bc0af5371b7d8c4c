//! Reading and writing the linear subset of the OPB format.

use std::fmt::Write as _;

use thiserror::Error;

use super::{normalize, Lit, NormalizeError, PbFormula, RelOp, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("malformed token `{0}`")]
    MalformedToken(String),
    #[error("expected {expected}, found `{found}`")]
    Unexpected { expected: &'static str, found: String },
    #[error("invalid variable index in `{0}`")]
    BadVariable(String),
    #[error("non-linear term (product of literals)")]
    Nonlinear,
    #[error("missing `;` at end of constraint")]
    MissingSemicolon,
    #[error("integer `{0}` does not fit in 64 bits")]
    IntegerOverflow(String),
    #[error("{0}")]
    Normalize(#[from] NormalizeError),
}

/// One constraint exactly as written, before normalization.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawConstraint {
    pub terms: Vec<(i64, Lit)>,
    pub op: RelOp,
    pub degree: i64,
    /// Line on which the constraint starts.
    pub line: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RawOpb {
    pub declared_vars: Option<u32>,
    pub declared_constraints: Option<usize>,
    /// Largest variable index used by any term, objective included.
    pub max_var: u32,
    pub constraints: Vec<RawConstraint>,
    /// Comment lines other than the size header, without the leading `*`.
    pub comments: Vec<String>,
    pub warnings: Vec<String>,
}

impl RawOpb {
    pub fn num_vars(&self) -> u32 {
        self.declared_vars.unwrap_or(0).max(self.max_var)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParsedOpb {
    pub formula: PbFormula,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Int(i64),
    Lit(Lit),
    Op(RelOp),
    Semi,
    Objective,
}

fn describe(t: Option<&(usize, Tok)>) -> String {
    match t {
        None => "end of input".to_string(),
        Some((_, Tok::Int(v))) => v.to_string(),
        Some((_, Tok::Lit(l))) => l.to_string(),
        Some((_, Tok::Op(op))) => op.to_string(),
        Some((_, Tok::Semi)) => ";".to_string(),
        Some((_, Tok::Objective)) => "objective".to_string(),
    }
}

fn err(line: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { line, kind }
}

fn parse_int(word: &str, line: usize) -> Result<i64, ParseError> {
    let digits = word.strip_prefix(['+', '-']).unwrap_or(word);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(err(line, ParseErrorKind::MalformedToken(word.to_string())));
    }
    word.parse::<i64>()
        .map_err(|_| err(line, ParseErrorKind::IntegerOverflow(word.to_string())))
}

fn parse_lit(word: &str, line: usize) -> Result<Lit, ParseError> {
    let (negated, rest) = match word.strip_prefix('~') {
        Some(rest) => (true, rest),
        None => (false, word),
    };
    let idx = rest
        .strip_prefix('x')
        .filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
        .ok_or_else(|| err(line, ParseErrorKind::MalformedToken(word.to_string())))?;
    match idx.parse::<u32>() {
        Ok(i) if (1..u32::MAX / 2).contains(&i) => Ok(Lit::new(Var::new(i), negated)),
        _ => Err(err(line, ParseErrorKind::BadVariable(word.to_string()))),
    }
}

/// Splits a line into tokens. Relational operators and `;` may be glued to
/// their neighbours (`x1>=2;`).
fn lex_line(line: &str, lineno: usize, out: &mut Vec<(usize, Tok)>) -> Result<(), ParseError> {
    let mut spaced = String::with_capacity(line.len() + 8);
    let bytes = line.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b';' => spaced.push_str(" ; "),
            b'>' | b'<' if bytes.get(i + 1) == Some(&b'=') => {
                spaced.push(' ');
                spaced.push(bytes[i] as char);
                spaced.push_str("= ");
                i += 1;
            }
            b'=' => spaced.push_str(" = "),
            _ => {
                let ch = line[i..].chars().next().unwrap();
                spaced.push(ch);
                i += ch.len_utf8();
                continue;
            }
        }
        i += 1;
    }
    for word in spaced.split_whitespace() {
        let tok = match word {
            ";" => Tok::Semi,
            ">=" => Tok::Op(RelOp::Ge),
            "<=" => Tok::Op(RelOp::Le),
            "=" => Tok::Op(RelOp::Eq),
            "min:" | "max:" => Tok::Objective,
            w if w.starts_with(['x', '~']) => Tok::Lit(parse_lit(w, lineno)?),
            w if w.starts_with(|c: char| c == '+' || c == '-' || c.is_ascii_digit()) => Tok::Int(parse_int(w, lineno)?),
            w => return Err(err(lineno, ParseErrorKind::MalformedToken(w.to_string()))),
        };
        out.push((lineno, tok));
    }
    Ok(())
}

/// Reads `* #variable= N #constraint= M` style size headers.
fn header_field(comment: &str, key: &str) -> Option<u64> {
    let rest = &comment[comment.find(key)? + key.len()..];
    rest.split_whitespace().next()?.parse().ok()
}

/// Parses OPB text without normalizing, keeping constraints as written.
pub fn parse_opb_raw(text: &str) -> Result<RawOpb, ParseError> {
    let mut raw = RawOpb::default();
    let mut toks = Vec::new();
    let mut last_line = 0;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        last_line = lineno;
        let trimmed = line.trim_start();
        if let Some(comment) = trimmed.strip_prefix('*') {
            if raw.declared_vars.is_none() && comment.contains("#variable=") {
                raw.declared_vars = header_field(comment, "#variable=").map(|v| v as u32);
                raw.declared_constraints = header_field(comment, "#constraint=").map(|v| v as usize);
            } else {
                raw.comments.push(comment.trim().to_string());
            }
            continue;
        }
        lex_line(line, lineno, &mut toks)?;
    }

    let mut pos = 0;
    while pos < toks.len() {
        let start_line = toks[pos].0;
        if toks[pos].1 == Tok::Objective {
            while pos < toks.len() && toks[pos].1 != Tok::Semi {
                if let Tok::Lit(l) = toks[pos].1 {
                    raw.max_var = raw.max_var.max(l.var().id());
                }
                pos += 1;
            }
            if pos == toks.len() {
                return Err(err(last_line, ParseErrorKind::MissingSemicolon));
            }
            pos += 1;
            raw.warnings
                .push(format!("line {start_line}: objective function ignored"));
            continue;
        }

        let mut terms = Vec::new();
        let op = loop {
            match toks.get(pos) {
                Some(&(_, Tok::Op(op))) => {
                    pos += 1;
                    break op;
                }
                Some(&(_, Tok::Int(a))) => {
                    pos += 1;
                    let lit = match toks.get(pos) {
                        Some(&(_, Tok::Lit(l))) => l,
                        other => {
                            return Err(err(
                                other.map_or(last_line, |t| t.0),
                                ParseErrorKind::Unexpected {
                                    expected: "a literal after the coefficient",
                                    found: describe(other),
                                },
                            ))
                        }
                    };
                    pos += 1;
                    if let Some(&(l2, Tok::Lit(_))) = toks.get(pos) {
                        return Err(err(l2, ParseErrorKind::Nonlinear));
                    }
                    raw.max_var = raw.max_var.max(lit.var().id());
                    terms.push((a, lit));
                }
                Some(&(line, Tok::Semi)) if terms.is_empty() => {
                    return Err(err(
                        line,
                        ParseErrorKind::Unexpected {
                            expected: "a constraint",
                            found: ";".into(),
                        },
                    ))
                }
                other => {
                    return Err(err(
                        other.map_or(last_line, |t| t.0),
                        ParseErrorKind::Unexpected {
                            expected: "a term or relational operator",
                            found: describe(other),
                        },
                    ))
                }
            }
        };
        let degree = match toks.get(pos) {
            Some(&(_, Tok::Int(k))) => k,
            other => {
                return Err(err(
                    other.map_or(last_line, |t| t.0),
                    ParseErrorKind::Unexpected {
                        expected: "an integer right-hand side",
                        found: describe(other),
                    },
                ))
            }
        };
        pos += 1;
        match toks.get(pos) {
            Some((_, Tok::Semi)) => pos += 1,
            Some(&(line, _)) => return Err(err(line, ParseErrorKind::MissingSemicolon)),
            None => return Err(err(last_line, ParseErrorKind::MissingSemicolon)),
        }
        raw.constraints.push(RawConstraint {
            terms,
            op,
            degree,
            line: start_line,
        });
    }

    if let Some(declared) = raw.declared_vars {
        if raw.max_var > declared {
            raw.warnings.push(format!(
                "header declares {declared} variables but x{} is used",
                raw.max_var
            ));
        }
    }
    Ok(raw)
}

/// Parses and normalizes an OPB instance.
pub fn parse_opb(text: &str) -> Result<ParsedOpb, ParseError> {
    let raw = parse_opb_raw(text)?;
    let mut formula = PbFormula::new(raw.num_vars());
    for c in &raw.constraints {
        let n = normalize(&c.terms, c.op, c.degree).map_err(|e| err(c.line, e.into()))?;
        formula.add_normalized(n).map_err(|e| err(c.line, e.into()))?;
    }
    Ok(ParsedOpb {
        formula,
        warnings: raw.warnings,
    })
}

/// Writes a formula as OPB. Negated literals are expressed through negative
/// coefficients, so the output uses only `+a xi` / `-a xi` terms. An
/// unsatisfiable formula gets an extra empty constraint `>= 1`.
pub fn emit_opb(f: &PbFormula) -> String {
    let mut out = String::new();
    let m = f.num_constraints() + f.is_unsat() as usize;
    let _ = writeln!(out, "* #variable= {} #constraint= {}", f.num_vars(), m);
    for c in f.constraints() {
        // a * ~x = a - a * x
        let mut degree = c.degree() as i64;
        for t in c.terms() {
            if t.lit.is_negated() {
                degree -= t.coef as i64;
                let _ = write!(out, "-{} x{} ", t.coef, t.lit.var().id());
            } else {
                let _ = write!(out, "+{} x{} ", t.coef, t.lit.var().id());
            }
        }
        let _ = writeln!(out, ">= {degree} ;");
    }
    if f.is_unsat() {
        out.push_str(" >= 1 ;\n");
    }
    out
}
