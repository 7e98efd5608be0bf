//! JSON number encoding shared by the file formats.
//!
//! Exact values are written as integers or `"p/q"` strings; readers accept either form,
//! decimal literals, and `null` / `"-inf"` for an absent tropical coefficient.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{format_rational, parse_rational, Rational, Scalar};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NumWire {
    Num(serde_json::Number),
    Str(String),
}

pub trait WireScalar: Scalar {
    fn from_wire(w: &NumWire) -> Result<Self>;
    fn to_wire(&self) -> NumWire;
}

fn is_neg_inf_text(s: &str) -> bool {
    matches!(s.trim(), "-inf" | "-Infinity" | "-infinity" | "-INF")
}

impl NumWire {
    pub fn is_neg_inf(&self) -> bool {
        matches!(self, NumWire::Str(s) if is_neg_inf_text(s))
    }
}

impl WireScalar for f64 {
    fn from_wire(w: &NumWire) -> Result<Self> {
        match w {
            NumWire::Num(n) => n.as_f64().ok_or_else(|| Error::InvalidInput(format!("bad number {n}"))),
            NumWire::Str(s) => {
                if let Ok(v) = s.trim().parse::<f64>() {
                    if v.is_finite() {
                        return Ok(v);
                    }
                }
                parse_rational(s).map(|r| r.to_f64())
            }
        }
    }

    fn to_wire(&self) -> NumWire {
        match serde_json::Number::from_f64(*self) {
            Some(n) => NumWire::Num(n),
            None => NumWire::Str(self.to_string()),
        }
    }
}

impl WireScalar for Rational {
    fn from_wire(w: &NumWire) -> Result<Self> {
        match w {
            NumWire::Num(n) => parse_rational(&n.to_string()),
            NumWire::Str(s) => parse_rational(s),
        }
    }

    fn to_wire(&self) -> NumWire {
        let text = format_rational(self);
        if self.is_integer() {
            if let Ok(i) = text.parse::<i64>() {
                return NumWire::Num(i.into());
            }
        }
        NumWire::Str(text)
    }
}

pub fn vec_from_wire<S: WireScalar>(v: &[NumWire]) -> Result<Vec<S>> {
    v.iter().map(S::from_wire).collect()
}

pub fn vec_to_wire<S: WireScalar>(v: &[S]) -> Vec<NumWire> {
    v.iter().map(S::to_wire).collect()
}
