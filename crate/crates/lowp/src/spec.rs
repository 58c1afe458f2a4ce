//! Format spec strings: `float:E:M`, `fixed:WL:FL[:symmetric][:wrap]`,
//! `block:WL[:DIM]`. The grammar is the `Display` form of `NumberFormat`.

use lowp_core::{BlockAssignment, BlockFloatFormat, FixedFormat, FloatFormat, NumberFormat, RoundingMode};

use crate::Diagnostic;

fn field<T: std::str::FromStr>(s: &str, name: &'static str, spec: &str) -> Result<T, Diagnostic> {
    s.parse().map_err(|_| Diagnostic::new(name, format!("`{s}` is not a valid {name} in format `{spec}`")))
}

pub fn parse_format(spec: &str) -> Result<NumberFormat, Diagnostic> {
    let parts: Vec<&str> = spec.split(':').collect();
    let arity = |lo: usize, hi: usize| {
        if (lo..=hi).contains(&parts.len()) {
            Ok(())
        } else {
            Err(Diagnostic::new("format", format!("`{spec}` has the wrong number of fields")))
        }
    };
    let fmt: NumberFormat = match parts[0] {
        "float" => {
            arity(3, 3)?;
            FloatFormat::new(field(parts[1], "exp", spec)?, field(parts[2], "man", spec)?)?.into()
        }
        "fixed" => {
            arity(3, 5)?;
            let (mut symmetric, mut saturate) = (false, true);
            for flag in &parts[3..] {
                match *flag {
                    "symmetric" if !symmetric => symmetric = true,
                    "wrap" if saturate => saturate = false,
                    other => return Err(Diagnostic::new("format", format!("unknown or repeated fixed-point flag `{other}`"))),
                }
            }
            FixedFormat::new(field(parts[1], "wl", spec)?, field(parts[2], "fl", spec)?, symmetric, saturate)?.into()
        }
        "block" => {
            arity(2, 3)?;
            let block = match parts.get(2) {
                Some(d) => BlockAssignment::AlongDim(field(d, "dim", spec)?),
                None => BlockAssignment::WholeTensor,
            };
            BlockFloatFormat::new(field(parts[1], "wl", spec)?, block)?.into()
        }
        other => {
            return Err(Diagnostic::new("format", format!("unknown format kind `{other}` (expected float, fixed or block)")))
        }
    };
    Ok(fmt)
}

pub fn parse_rounding(s: &str) -> Result<RoundingMode, Diagnostic> {
    s.parse().map_err(|_| {
        Diagnostic::new("rounding", format!("unknown rounding `{s}` (expected stochastic, nearest_even, nearest_away or nearest_zero)"))
    })
}
