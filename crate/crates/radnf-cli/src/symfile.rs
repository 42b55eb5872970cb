//! Text format for classical symbols.
//!
//! ```text
//! # comment to end of line
//! n = 2
//! order = 1
//! caps = 6 4          # filtration cap N, y-degree cap M
//! [1]                 # one section per homogeneity component, descending
//! 1 z
//! -2/3 z^2 theta1
//! [0]
//! 1/2 theta1 y1
//! ```
//!
//! Coefficients are integers or `p/q`; the Unicode minus sign is accepted.
//! Monomial factors are `z`, `theta<i>`, `y<i>`, each with an optional
//! `^<exponent>`; the bare token `1` is the unit monomial. Sections may skip
//! homogeneities; skipped components are zero. `emit` writes the canonical
//! form: header, then every component in order with terms in the ring's own
//! term order, so emit ∘ parse is idempotent byte-for-byte.

use std::fmt;

use radnf::symbol::ClassicalSymbol;
use radnf::{JetCaps, JetSeries, Monomial, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for ParseError {}

fn err(line: usize, column: usize, message: impl Into<String>) -> ParseError {
    ParseError { line, column, message: message.into() }
}

/// Source line with comments removed and the Unicode minus normalized. The
/// normalization preserves char counts, so columns computed here locate the
/// same token in the raw text.
struct Line {
    number: usize,
    text: String,
}

impl Line {
    fn column_of(&self, token: &str) -> usize {
        match self.text.find(token) {
            Some(byte) => self.text[..byte].chars().count() + 1,
            None => 1,
        }
    }

    fn fail(&self, token: &str, message: impl Into<String>) -> ParseError {
        err(self.number, self.column_of(token), message)
    }
}

fn clean_lines(input: &str) -> Vec<Line> {
    input
        .lines()
        .enumerate()
        .filter_map(|(i, raw)| {
            let no_comment = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let text = no_comment.replace('\u{2212}', "-");
            if text.trim().is_empty() {
                None
            } else {
                Some(Line { number: i + 1, text })
            }
        })
        .collect()
}

fn parse_rational(line: &Line, token: &str) -> Result<Rational, ParseError> {
    token.parse::<Rational>().map_err(|_| {
        line.fail(token, format!("invalid coefficient `{token}`: expected an integer or p/q"))
    })
}

/// One factor `z`, `theta<i>`, `y<i>`, or `1`, with an optional `^<exp>`.
fn apply_factor(line: &Line, token: &str, vars: usize, m: &mut Monomial) -> Result<(), ParseError> {
    let (name, exp) = match token.split_once('^') {
        Some((name, e)) => {
            let exp: u32 = e
                .parse()
                .map_err(|_| line.fail(token, format!("invalid exponent in `{token}`")))?;
            (name, exp)
        }
        None => (token, 1),
    };
    if name == "1" {
        return Ok(());
    }
    if name == "z" {
        m.z += exp;
        return Ok(());
    }
    for (prefix, slots) in [("theta", &mut m.theta), ("y", &mut m.y)] {
        if let Some(idx) = name.strip_prefix(prefix) {
            let i: usize = idx
                .parse()
                .map_err(|_| line.fail(token, format!("invalid variable index in `{token}`")))?;
            if i == 0 || i > vars {
                return Err(line.fail(
                    token,
                    format!("`{token}` out of range: indices run 1..{vars} when n = {}", vars + 1),
                ));
            }
            slots[i - 1] += exp;
            return Ok(());
        }
    }
    Err(line.fail(token, format!("unknown monomial factor `{token}`")))
}

fn parse_term(line: &Line, caps: JetCaps) -> Result<(Monomial, Rational), ParseError> {
    let mut tokens = line.text.split_whitespace();
    let coeff_tok = tokens.next().expect("blank lines are filtered out");
    let coeff = parse_rational(line, coeff_tok)?;
    let mut m = Monomial::unit(caps.vars());
    for tok in tokens {
        apply_factor(line, tok, caps.vars(), &mut m)?;
    }
    if m.filtration() >= caps.fil_cap || m.y_degree() > caps.y_cap {
        return Err(line.fail(coeff_tok, format!("monomial {m} violates caps {caps}")));
    }
    Ok((m, coeff))
}

fn header_value<'a>(line: &Line, piece: &'a str) -> Result<(&'a str, &'a str), ParseError> {
    match piece.split_once('=') {
        Some((k, v)) => Ok((k.trim(), v.trim())),
        None => Err(line.fail(piece.trim(), "expected `key = value`")),
    }
}

pub fn parse_symbol(input: &str) -> Result<ClassicalSymbol, ParseError> {
    let lines = clean_lines(input);
    let mut n: Option<usize> = None;
    let mut order: Option<i64> = None;
    let mut caps_pair: Option<(u32, u32)> = None;

    let mut cursor = 0;
    while cursor < lines.len() {
        let line = &lines[cursor];
        let trimmed = line.text.trim();
        if trimmed.starts_with('[') {
            break;
        }
        // Header assignments; commas separate several on one line.
        for piece in trimmed.split(',') {
            if piece.trim().is_empty() {
                continue;
            }
            let (key, value) = header_value(line, piece)?;
            match key {
                "n" => {
                    let v: usize =
                        value.parse().map_err(|_| line.fail(value, "n must be an integer >= 2"))?;
                    if v < 2 {
                        return Err(line.fail(value, "n must be at least 2"));
                    }
                    n = Some(v);
                }
                "order" => {
                    let v: i64 =
                        value.parse().map_err(|_| line.fail(value, "order must be an integer"))?;
                    order = Some(v);
                }
                "caps" => {
                    let nums: Vec<&str> = value.split_whitespace().collect();
                    if nums.len() != 2 {
                        return Err(line.fail(value, "caps takes two integers: `caps = N M`"));
                    }
                    let fil: u32 = nums[0]
                        .parse()
                        .map_err(|_| line.fail(nums[0], "filtration cap must be an integer"))?;
                    let y: u32 = nums[1]
                        .parse()
                        .map_err(|_| line.fail(nums[1], "y cap must be an integer"))?;
                    if fil < 1 {
                        return Err(line.fail(nums[0], "filtration cap must be at least 1"));
                    }
                    caps_pair = Some((fil, y));
                }
                other => {
                    return Err(line.fail(other, format!("unknown header key `{other}`")));
                }
            }
        }
        cursor += 1;
    }

    let top = lines.first().map_or(1, |l| l.number);
    let n = n.ok_or_else(|| err(top, 1, "missing header key `n`"))?;
    let order = order.ok_or_else(|| err(top, 1, "missing header key `order`"))?;
    let (fil_cap, y_cap) = caps_pair.ok_or_else(|| err(top, 1, "missing header key `caps`"))?;
    let caps = JetCaps::new(n, fil_cap, y_cap);

    // Sections: strictly descending homogeneities starting at or below the
    // order; gaps are zero components.
    let mut components: Vec<JetSeries> = Vec::new();
    let mut last_h: Option<i64> = None;
    let mut section_terms: Vec<(Monomial, Rational)> = Vec::new();
    let zero = JetSeries::zero(caps);

    let flush = |components: &mut Vec<JetSeries>,
                 terms: Vec<(Monomial, Rational)>,
                 h: i64,
                 line: &Line|
     -> Result<(), ParseError> {
        let j = (order - h) as usize;
        while components.len() < j {
            components.push(zero.clone());
        }
        let jet =
            JetSeries::from_terms(terms, caps).map_err(|e| err(line.number, 1, e.to_string()))?;
        components.push(jet);
        Ok(())
    };

    let mut section_line = top;
    while cursor < lines.len() {
        let line = &lines[cursor];
        let trimmed = line.text.trim();
        if let Some(inner) = trimmed.strip_prefix('[') {
            let Some(inner) = inner.strip_suffix(']') else {
                return Err(line.fail(trimmed, "unterminated section header"));
            };
            let h: i64 = inner
                .trim()
                .parse()
                .map_err(|_| line.fail(inner, "section header must be an integer homogeneity"))?;
            if h > order {
                return Err(line.fail(inner, format!("homogeneity {h} exceeds the order {order}")));
            }
            if let Some(prev) = last_h {
                if h >= prev {
                    return Err(line.fail(
                        inner,
                        format!("sections must be strictly descending; [{h}] after [{prev}]"),
                    ));
                }
                flush(&mut components, std::mem::take(&mut section_terms), prev, line)?;
            }
            last_h = Some(h);
            section_line = line.number;
        } else {
            if last_h.is_none() {
                return Err(
                    line.fail(trimmed, "term line before the first `[homogeneity]` section")
                );
            }
            section_terms.push(parse_term(line, caps)?);
        }
        cursor += 1;
    }
    let Some(h) = last_h else {
        return Err(err(section_line, 1, "no component sections"));
    };
    let closing = Line { number: section_line, text: String::new() };
    flush(&mut components, section_terms, h, &closing)?;

    ClassicalSymbol::new(order, components).map_err(|e| err(section_line, 1, e.to_string()))
}

pub fn emit_symbol(symbol: &ClassicalSymbol) -> String {
    let caps = symbol.caps();
    let mut out = String::new();
    out.push_str(&format!("n = {}\n", caps.n));
    out.push_str(&format!("order = {}\n", symbol.order()));
    out.push_str(&format!("caps = {} {}\n", caps.fil_cap, caps.y_cap));
    for (j, comp) in symbol.components().iter().enumerate() {
        out.push_str(&format!("[{}]\n", symbol.order() - j as i64));
        for (m, c) in comp.terms() {
            out.push_str(&format!("{c} {m}\n"));
        }
    }
    out
}

/// The same symbol re-truncated: terms outside the requested caps drop, which
/// is the meaning of double-checking a file at lower precision.
pub fn with_caps(
    symbol: &ClassicalSymbol,
    cap_fil: Option<u32>,
    cap_y: Option<u32>,
) -> Result<ClassicalSymbol, String> {
    if cap_fil.is_none() && cap_y.is_none() {
        return Ok(symbol.clone());
    }
    let old = symbol.caps();
    let caps = JetCaps::new(old.n, cap_fil.unwrap_or(old.fil_cap), cap_y.unwrap_or(old.y_cap));
    let components = symbol
        .components()
        .iter()
        .map(|comp| {
            let kept = comp
                .terms()
                .filter(|(m, _)| m.filtration() < caps.fil_cap && m.y_degree() <= caps.y_cap)
                .map(|(m, c)| (m.clone(), c.clone()));
            JetSeries::from_terms(kept, caps)
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    ClassicalSymbol::new(symbol.order(), components).map_err(|e| e.to_string())
}
