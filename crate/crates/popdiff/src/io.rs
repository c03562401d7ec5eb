//! Artifact formats: function and set files (JSON), per-difference profiles (CSV).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::group::{ApProfile, DensityFn, Domain, Kind};
use crate::product::Mode;

pub const TOOL: &str = concat!("popdiff ", env!("CARGO_PKG_VERSION"));

/// Provenance block embedded in every artifact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub tool: String,
    pub command: String,
    pub seed: Option<u64>,
    pub mode: Option<Mode>,
    pub params: BTreeMap<String, Value>,
}

impl Meta {
    pub fn new(command: &str, seed: Option<u64>, mode: Option<Mode>) -> Self {
        Meta { tool: TOOL.into(), command: command.into(), seed, mode, params: BTreeMap::new() }
    }

    pub fn param(mut self, key: &str, v: impl Serialize) -> Self {
        self.params.insert(key.into(), serde_json::to_value(v).expect("plain data"));
        self
    }

    pub fn f64_param(&self, key: &str) -> Option<f64> {
        self.params.get(key).and_then(Value::as_f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub alpha: f64,
    pub n: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionFile {
    pub domain: Domain,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelMeta>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<Meta>,
}

impl FunctionFile {
    pub fn new(f: &DensityFn, meta: Option<Meta>) -> Self {
        FunctionFile { domain: f.domain.clone(), values: f.values.clone(), model: None, meta }
    }

    pub fn density_fn(&self) -> Result<DensityFn> {
        DensityFn::new(self.domain.clone(), self.values.clone()).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// A set in `[1, n]` (interval) or `Z_n` (cyclic), stored as a sorted integer array.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetFile {
    pub kind: Kind,
    pub n: u64,
    pub elements: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ap_density: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<Meta>,
}

impl SetFile {
    pub fn validate(&self) -> Result<()> {
        if self.kind == Kind::Product {
            return Err(Error::Parse("sets live on an interval or a cyclic group".into()));
        }
        if self.elements.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Parse("set elements must be strictly increasing".into()));
        }
        let ok = match self.kind {
            Kind::Interval => self.elements.iter().all(|&x| x >= 1 && x <= self.n),
            _ => self.elements.iter().all(|&x| x < self.n),
        };
        if !ok {
            return Err(Error::Parse(format!("set elements outside the {:?} of size {}", self.kind, self.n)));
        }
        Ok(())
    }

    pub fn indicator(&self) -> Result<DensityFn> {
        let mut v = vec![0.0; self.n as usize];
        let off = usize::from(self.kind == Kind::Interval);
        for &x in &self.elements {
            v[x as usize - off] = 1.0;
        }
        let dom = match self.kind {
            Kind::Interval => Domain::interval(self.n as usize)?,
            _ => Domain::cyclic(self.n as usize)?,
        };
        DensityFn::new(dom, v)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Artifact {
    Function(FunctionFile),
    Set(SetFile),
}

impl Artifact {
    pub fn meta(&self) -> Option<&Meta> {
        match self {
            Artifact::Function(f) => f.meta.as_ref(),
            Artifact::Set(s) => s.meta.as_ref(),
        }
    }
}

/// Parses a function file (has `values`) or a set file (has `elements`).
pub fn parse_artifact(text: &str) -> Result<Artifact> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::Parse(format!("invalid JSON: {e}")))?;
    let obj = v.as_object().ok_or_else(|| Error::Parse("top level must be an object".into()))?;
    if obj.contains_key("values") {
        let f: FunctionFile = serde_json::from_value(v).map_err(|e| Error::Parse(format!("function file: {e}")))?;
        f.density_fn()?;
        Ok(Artifact::Function(f))
    } else if obj.contains_key("elements") {
        let s: SetFile = serde_json::from_value(v).map_err(|e| Error::Parse(format!("set file: {e}")))?;
        s.validate()?;
        Ok(Artifact::Set(s))
    } else {
        Err(Error::Parse("expected a \"values\" or \"elements\" field".into()))
    }
}

pub fn read_artifact(path: &Path) -> Result<Artifact> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    parse_artifact(&text)
}

pub fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("plain data");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    write_text(path, &to_json(v))
}

pub fn write_text(path: &Path, s: &str) -> Result<()> {
    std::fs::write(path, s).map_err(|e| Error::Parse(format!("writing {}: {e}", path.display())))
}

/// `%.12g`: 12 significant digits, trailing zeros trimmed.
pub fn fmt_g12(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{:.11e}", v);
    let (mant, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, v))
    } else {
        format!("{}e{}{:02}", trim_zeros(mant.to_string()), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// `d,density` rows for every entry of the profile.
pub fn profile_csv(p: &ApProfile) -> String {
    let mut s = String::from("d,density\n");
    for (d, &v) in p.densities.iter().enumerate() {
        writeln!(s, "{d},{}", fmt_g12(v)).expect("string write");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{ap_profile, Norm};

    #[test]
    fn g12_format() {
        assert_eq!(fmt_g12(0.027), "0.027");
        assert_eq!(fmt_g12(1.0), "1");
        assert_eq!(fmt_g12(31.0 / 2048.0), "0.01513671875");
        assert_eq!(fmt_g12(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_g12(2.5e-9), "2.5e-09");
        assert_eq!(fmt_g12(-1.0 / 7.0), "-0.142857142857");
        assert_eq!(fmt_g12(123456789012345.0), "1.23456789012e+14");
        for v in [0.1, 1e-4, 0.015625, 7.0 / 9.0] {
            let back: f64 = fmt_g12(v).parse().unwrap();
            assert!((back - v).abs() <= v.abs() * 1e-11);
        }
    }

    #[test]
    fn function_round_trip() {
        let f = DensityFn::constant(Domain::product(&[3, 5]).unwrap(), 0.2).unwrap();
        let file = FunctionFile::new(&f, Some(Meta::new("construct", Some(7), Some(Mode::Desk)).param("alpha", 0.2)));
        let text = to_json(&file);
        assert!(text.contains("\"kind\": \"product\""));
        match parse_artifact(&text).unwrap() {
            Artifact::Function(g) => {
                assert_eq!(g, file);
                assert_eq!(g.meta.unwrap().f64_param("alpha"), Some(0.2));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bare_function_file() {
        let text = r#"{"domain":{"kind":"cyclic","n":3},"values":[0.1,0.2,0.3]}"#;
        assert!(matches!(parse_artifact(text).unwrap(), Artifact::Function(_)));
    }

    #[test]
    fn malformed_inputs() {
        for bad in [
            "not json",
            "[1,2]",
            r#"{"domain":{"kind":"cyclic","n":3},"values":[0.1,0.2]}"#,
            r#"{"domain":{"kind":"cyclic","n":2},"values":[0.1,1.5]}"#,
            r#"{"domain":{"kind":"torus","n":2},"values":[0.1,0.5]}"#,
            r#"{"kind":"interval","n":5,"elements":[3,2]}"#,
            r#"{"kind":"interval","n":5,"elements":[0,2]}"#,
            r#"{"n":5}"#,
        ] {
            assert!(matches!(parse_artifact(bad), Err(Error::Parse(_))), "{bad}");
        }
    }

    #[test]
    fn set_indicator_offsets() {
        let s = SetFile { kind: Kind::Interval, n: 5, elements: vec![1, 5], density: None, ap_density: None, meta: None };
        assert_eq!(s.indicator().unwrap().values, vec![1.0, 0.0, 0.0, 0.0, 1.0]);
        let c = SetFile { kind: Kind::Cyclic, elements: vec![0, 4], ..s };
        assert_eq!(c.indicator().unwrap().values, vec![1.0, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn csv_shape() {
        let f = DensityFn::constant(Domain::cyclic(5).unwrap(), 0.5).unwrap();
        let csv = profile_csv(&ap_profile(&f, Norm::Group).unwrap());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "d,density");
        assert_eq!(lines.len(), 6);
        assert!(lines[1..].iter().all(|l| l.ends_with(",0.125")));
    }
}
