//! The JSON quantization config. Every key is checked: unknown keys, keys
//! that do not belong to the chosen kind, and out-of-range values are all
//! reported with the path of the offending key.

use lowp_core::train::QuantConfig;
use lowp_core::{BlockAssignment, BlockFloatFormat, FixedFormat, FloatFormat, NumberFormat, QuantSpec, RoundingMode};
use serde::Deserialize;

use crate::spec::parse_rounding;
use crate::Diagnostic;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDoc {
    weight: Option<SpecDoc>,
    accumulator: Option<SpecDoc>,
    gradient: Option<SpecDoc>,
    activation: Option<SpecDoc>,
    error: Option<SpecDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Kind {
    Float,
    Fixed,
    Block,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum BlockDoc {
    Name(String),
    Dim(DimDoc),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DimDoc {
    dim: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecDoc {
    kind: Kind,
    exp: Option<u32>,
    man: Option<u32>,
    wl: Option<u32>,
    fl: Option<i32>,
    symmetric: Option<bool>,
    saturate: Option<bool>,
    block: Option<BlockDoc>,
    rounding: Option<String>,
    seed: Option<u64>,
}

impl SpecDoc {
    /// Names of the keys that were given, for kind-mismatch checks.
    fn present(&self) -> Vec<&'static str> {
        let mut keys = Vec::new();
        let mut push = |set: bool, k| {
            if set {
                keys.push(k)
            }
        };
        push(self.exp.is_some(), "exp");
        push(self.man.is_some(), "man");
        push(self.wl.is_some(), "wl");
        push(self.fl.is_some(), "fl");
        push(self.symmetric.is_some(), "symmetric");
        push(self.saturate.is_some(), "saturate");
        push(self.block.is_some(), "block");
        keys
    }

    fn into_spec(self, category: &str, default_seed: u64) -> Result<QuantSpec, Diagnostic> {
        let key = |k: &str| format!("{category}.{k}");
        let (kind, allowed): (&str, &[&str]) = match self.kind {
            Kind::Float => ("float", &["exp", "man"]),
            Kind::Fixed => ("fixed", &["wl", "fl", "symmetric", "saturate"]),
            Kind::Block => ("block", &["wl", "block"]),
        };
        if let Some(k) = self.present().into_iter().find(|k| !allowed.contains(k)) {
            return Err(Diagnostic::new(key(k), format!("`{k}` is not a field of {kind} formats")));
        }
        let required = |v: Option<u32>, k: &str| v.ok_or_else(|| Diagnostic::new(key(k), format!("{kind} formats require `{k}`")));
        let in_category = |e: lowp_core::Error| {
            let d = Diagnostic::from(e);
            Diagnostic { key: key(&d.key), message: d.message }
        };
        let format: NumberFormat = match self.kind {
            Kind::Float => FloatFormat::new(required(self.exp, "exp")?, required(self.man, "man")?).map_err(in_category)?.into(),
            Kind::Fixed => {
                let fl = self.fl.ok_or_else(|| Diagnostic::new(key("fl"), "fixed formats require `fl`"))?;
                FixedFormat::new(required(self.wl, "wl")?, fl, self.symmetric.unwrap_or(false), self.saturate.unwrap_or(true))
                    .map_err(in_category)?
                    .into()
            }
            Kind::Block => {
                let block = match self.block {
                    None => BlockAssignment::WholeTensor,
                    Some(BlockDoc::Name(n)) if n == "tensor" => BlockAssignment::WholeTensor,
                    Some(BlockDoc::Name(n)) => {
                        return Err(Diagnostic::new(key("block"), format!("`{n}` is not a block assignment (expected \"tensor\" or {{\"dim\": d}})")))
                    }
                    Some(BlockDoc::Dim(d)) => BlockAssignment::AlongDim(d.dim),
                };
                BlockFloatFormat::new(required(self.wl, "wl")?, block).map_err(in_category)?.into()
            }
        };
        let mode = match &self.rounding {
            Some(r) => parse_rounding(r).map_err(|d| Diagnostic { key: key("rounding"), message: d.message })?,
            None => RoundingMode::NearestEven,
        };
        Ok(QuantSpec::new(format, mode, self.seed.unwrap_or(default_seed)))
    }
}

/// Parses a config document. Categories without an explicit `"seed"` get
/// one derived from `seed` and the category, so one command-line seed
/// determines every stream.
pub fn parse_config(json: &str, seed: u64) -> Result<QuantConfig, Diagnostic> {
    let value: serde_json::Value = serde_json::from_str(json).map_err(|e| Diagnostic::new("config", e.to_string()))?;
    if !value.is_object() {
        return Err(Diagnostic::new("config", "the config must be a JSON object"));
    }
    let doc: ConfigDoc = serde_path_to_error::deserialize(value).map_err(|e| {
        // The path already ends in the offending key, including unknown ones.
        let key = e.path().to_string();
        Diagnostic::new(key, e.into_inner().to_string())
    })?;
    let spec = |d: Option<SpecDoc>, name: &str, index: u64| {
        d.map(|d| d.into_spec(name, seed.wrapping_mul(5).wrapping_add(index))).transpose()
    };
    Ok(QuantConfig {
        weight: spec(doc.weight, "weight", 0)?,
        accumulator: spec(doc.accumulator, "accumulator", 1)?,
        gradient: spec(doc.gradient, "gradient", 2)?,
        activation: spec(doc.activation, "activation", 3)?,
        error: spec(doc.error, "error", 4)?,
    })
}
