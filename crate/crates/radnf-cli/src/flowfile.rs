//! Text format for flow problems.
//!
//! ```text
//! # comment to end of line
//! dim = 2
//! A = -1 0 0 -1            # row-major dim x dim entries
//! L = 1                    # 1-based null coordinates; omit or leave empty for none
//! radius = 1               # bump support radius for perturbation and g
//! perturb x2: 1/2 x2^9     # target coordinate, coefficient, monomial in x1..xk
//! perturb x2: -0.3 x1^2 x2^8
//! g: 1 x1^4                # transport data (scalar cutoff polynomial)
//! base = 0.05 0            # sample point (origin when omitted)
//! direction = 0 1          # probe direction (last axis when omitted)
//! h0 = 0.05                # probe initial step
//! box_half_width = 0.25    # linearization sample box
//! box_per_axis = 3
//! vanish_order = 9         # optional; defaults to the least transverse degree
//! ```
//!
//! Numbers are integers, rationals `p/q`, or decimals; the Unicode minus is
//! accepted. Matrix `A` must carry zero columns over the `L` coordinates and
//! be hyperbolic off them; that is checked here so a bad file fails with a
//! position before any integration starts.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use radnf::flow::{FlowSpec, PerturbationTerm, ScalarCutoffPoly};
use radnf::Rational;

#[derive(Debug, Clone, PartialEq)]
pub struct FlowParseError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for FlowParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for FlowParseError {}

fn err(line: usize, message: impl Into<String>) -> FlowParseError {
    FlowParseError { line, message: message.into() }
}

/// Flow specification plus the optional sampling data the commands draw
/// defaults from.
#[derive(Debug, Clone)]
pub struct FlowFile {
    pub spec: FlowSpec,
    pub g: Option<ScalarCutoffPoly>,
    pub base: Option<DVector<f64>>,
    pub direction: Option<DVector<f64>>,
    pub h0: Option<f64>,
    pub box_half_width: Option<f64>,
    pub box_per_axis: Option<usize>,
}

fn parse_number(line: usize, tok: &str) -> Result<f64, FlowParseError> {
    if let Ok(v) = tok.parse::<f64>() {
        return Ok(v);
    }
    if let Ok(r) = tok.parse::<Rational>() {
        return Ok(r.to_f64());
    }
    Err(err(line, format!("invalid number `{tok}`: expected integer, p/q, or decimal")))
}

fn parse_numbers(line: usize, value: &str) -> Result<Vec<f64>, FlowParseError> {
    value.split_whitespace().map(|t| parse_number(line, t)).collect()
}

/// Coordinate token `x<i>` with 1-based index; returns the 0-based index.
fn parse_coord(line: usize, tok: &str, dim: usize) -> Result<usize, FlowParseError> {
    let idx = tok
        .strip_prefix('x')
        .and_then(|s| s.parse::<usize>().ok())
        .ok_or_else(|| err(line, format!("expected a coordinate `x<i>`, got `{tok}`")))?;
    if idx == 0 || idx > dim {
        return Err(err(line, format!("coordinate `{tok}` out of range 1..{dim}")));
    }
    Ok(idx - 1)
}

/// `<coeff> <factor>..` where factors are `x<i>[^e]` or the unit token `1`.
fn parse_scalar_term(
    line: usize,
    body: &str,
    dim: usize,
) -> Result<(f64, Vec<u32>), FlowParseError> {
    let mut tokens = body.split_whitespace();
    let coeff_tok = tokens.next().ok_or_else(|| err(line, "expected `coefficient monomial`"))?;
    let coeff = parse_number(line, coeff_tok)?;
    let mut exponents = vec![0u32; dim];
    for tok in tokens {
        let (name, exp) = match tok.split_once('^') {
            Some((name, e)) => {
                let e: u32 =
                    e.parse().map_err(|_| err(line, format!("invalid exponent in `{tok}`")))?;
                (name, e)
            }
            None => (tok, 1),
        };
        if name == "1" {
            continue;
        }
        let i = parse_coord(line, name, dim)?;
        exponents[i] += exp;
    }
    Ok((coeff, exponents))
}

pub fn parse_flow(input: &str) -> Result<FlowFile, FlowParseError> {
    let mut dim: Option<usize> = None;
    let mut a_entries: Option<(usize, Vec<f64>)> = None;
    let mut l_coords: Vec<usize> = Vec::new();
    let mut radius = 1.0;
    let mut vanish_order: Option<u32> = None;
    let mut perturbation: Vec<PerturbationTerm> = Vec::new();
    let mut g_terms: Vec<(f64, Vec<u32>)> = Vec::new();
    let mut base: Option<(usize, Vec<f64>)> = None;
    let mut direction: Option<(usize, Vec<f64>)> = None;
    let mut h0 = None;
    let mut box_half_width = None;
    let mut box_per_axis = None;

    for (i, raw) in input.lines().enumerate() {
        let lno = i + 1;
        let no_comment = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let text = no_comment.replace('\u{2212}', "-");
        let line = text.trim();
        if line.is_empty() {
            continue;
        }

        let need_dim =
            move |what: &str| dim.ok_or_else(|| err(lno, format!("`{what}` before `dim = k`")));

        if let Some(body) = line.strip_prefix("perturb") {
            let (target_tok, rest) = body
                .split_once(':')
                .ok_or_else(|| err(lno, "expected `perturb x<i>: coefficient monomial`"))?;
            let d = need_dim("perturb")?;
            let target = parse_coord(lno, target_tok.trim(), d)?;
            let (coeff, exponents) = parse_scalar_term(lno, rest, d)?;
            perturbation.push(PerturbationTerm { target, coeff, exponents });
            continue;
        }
        if let Some(rest) = line.strip_prefix("g:") {
            g_terms.push(parse_scalar_term(lno, rest, need_dim("g")?)?);
            continue;
        }

        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| err(lno, format!("unrecognized line `{line}`")))?;
        match key {
            "dim" => {
                let v: usize =
                    value.parse().map_err(|_| err(lno, "dim must be a positive integer"))?;
                if v == 0 {
                    return Err(err(lno, "dim must be a positive integer"));
                }
                dim = Some(v);
            }
            "A" => {
                let d = need_dim("A")?;
                let entries = parse_numbers(lno, value)?;
                if entries.len() != d * d {
                    return Err(err(
                        lno,
                        format!("A needs {}x{} = {} entries, got {}", d, d, d * d, entries.len()),
                    ));
                }
                a_entries = Some((d, entries));
            }
            "L" => {
                let d = need_dim("L")?;
                l_coords = value
                    .split_whitespace()
                    .map(|t| {
                        let idx: usize = t.parse().map_err(|_| {
                            err(lno, format!("L takes 1-based coordinate indices, got `{t}`"))
                        })?;
                        if idx == 0 || idx > d {
                            return Err(err(lno, format!("L index {idx} out of range 1..{d}")));
                        }
                        Ok(idx - 1)
                    })
                    .collect::<Result<_, _>>()?;
            }
            "radius" => {
                radius = parse_number(lno, value)?;
                if radius <= 0.0 {
                    return Err(err(lno, "radius must be positive"));
                }
            }
            "vanish_order" => {
                vanish_order = Some(
                    value
                        .parse()
                        .map_err(|_| err(lno, "vanish_order must be a nonnegative integer"))?,
                );
            }
            "base" => base = Some((lno, parse_numbers(lno, value)?)),
            "direction" => direction = Some((lno, parse_numbers(lno, value)?)),
            "h0" => h0 = Some(parse_number(lno, value)?),
            "box_half_width" => box_half_width = Some(parse_number(lno, value)?),
            "box_per_axis" => {
                box_per_axis = Some(
                    value
                        .parse()
                        .map_err(|_| err(lno, "box_per_axis must be a positive integer"))?,
                );
            }
            other => return Err(err(lno, format!("unknown key `{other}`"))),
        }
    }

    let dim = dim.ok_or_else(|| err(1, "missing `dim = k`"))?;
    let (_, entries) = a_entries.ok_or_else(|| err(1, "missing `A = <row-major entries>`"))?;
    let a = DMatrix::from_row_slice(dim, dim, &entries);

    let fixed_len = |name: &str,
                     v: Option<(usize, Vec<f64>)>|
     -> Result<Option<DVector<f64>>, FlowParseError> {
        match v {
            None => Ok(None),
            Some((_, v)) if v.len() == dim => Ok(Some(DVector::from_vec(v))),
            Some((lno, v)) => {
                Err(err(lno, format!("`{name}` needs {dim} entries, got {}", v.len())))
            }
        }
    };

    // Transverse degree of a term: exponents off the null coordinates.
    let transverse = |exps: &[u32]| -> u32 {
        exps.iter().enumerate().filter(|(i, _)| !l_coords.contains(i)).map(|(_, &e)| e).sum()
    };
    let vanish_order = vanish_order.unwrap_or_else(|| {
        perturbation.iter().map(|t| transverse(&t.exponents)).min().unwrap_or(0)
    });

    let spec = FlowSpec { dim, a, l_coords, perturbation, vanish_order, bump_radius: radius };
    spec.validate().map_err(|e| err(1, e.to_string()))?;

    let g =
        if g_terms.is_empty() { None } else { Some(ScalarCutoffPoly { terms: g_terms, radius }) };

    Ok(FlowFile {
        spec,
        g,
        base: fixed_len("base", base)?,
        direction: fixed_len("direction", direction)?,
        h0,
        box_half_width,
        box_per_axis,
    })
}
