//! JSON conventions shared by all reports: complex numbers are `[re, im]`
//! pairs of decimal strings (shortest round-trip form), rationals are `"p/q"`.

use crate::error::{Error, Result};
use crate::precision::C64;
use serde::de::{self, Deserializer};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

/// Complex number with the `[re, im]` string encoding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cx(pub C64);

impl From<C64> for Cx {
    fn from(z: C64) -> Self {
        Cx(z)
    }
}

impl Serialize for Cx {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [fmt_f64(self.0.re), fmt_f64(self.0.im)].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Cx {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Part {
            S(String),
            F(f64),
        }
        let [re, im]: [Part; 2] = Deserialize::deserialize(d)?;
        let conv = |p: Part| match p {
            Part::F(x) => Ok(x),
            Part::S(s) => s
                .trim()
                .parse::<f64>()
                .map_err(|_| de::Error::custom(format!("not a number: {s:?}"))),
        };
        Ok(Cx(C64::new(conv(re)?, conv(im)?)))
    }
}

pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 {
        "0".into()
    } else if (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn fmt_c64(z: C64) -> String {
    let im = fmt_f64(z.im);
    let sign = if im.starts_with('-') { "" } else { "+" };
    format!("{}{sign}{im}i", fmt_f64(z.re))
}

pub fn ser_c64<S: Serializer>(z: &C64, s: S) -> std::result::Result<S::Ok, S::Error> {
    Cx(*z).serialize(s)
}

pub fn ser_c64_vec<S: Serializer>(v: &[C64], s: S) -> std::result::Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for z in v {
        seq.serialize_element(&Cx(*z))?;
    }
    seq.end()
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v)
        .map(|s| s + "\n")
        .map_err(|e| Error::Parse(e.to_string()))
}
