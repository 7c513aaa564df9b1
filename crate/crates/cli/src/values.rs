//! `--values` files: CSV with header `n,f`, one row per grid index `n = 0..N`, plus
//! optional rows `n=-1` for `f(1/q)` and `n=inf` for `f(0+)`.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context};
use qbf_core::{GridFunction, QContext};

#[derive(Debug, Default, PartialEq)]
pub struct GridSamples {
    pub values: Vec<f64>,
    pub pre_value: Option<f64>,
    pub limit_value: Option<f64>,
}

pub fn parse(text: &str) -> anyhow::Result<GridSamples> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().context("reading header")?.clone();
    if headers.len() != 2 || &headers[0] != "n" || &headers[1] != "f" {
        bail!("expected header `n,f`, found `{}`", headers.iter().collect::<Vec<_>>().join(","));
    }
    let mut grid = BTreeMap::new();
    let mut out = GridSamples::default();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.with_context(|| format!("line {line}"))?;
        let value: f64 = rec[1].parse().with_context(|| format!("line {line}: `{}` is not a number", &rec[1]))?;
        if !value.is_finite() {
            bail!("line {line}: value must be finite");
        }
        let slot = match &rec[0] {
            "inf" => &mut out.limit_value,
            "-1" => &mut out.pre_value,
            s => {
                let n: usize = s.parse().with_context(|| format!("line {line}: bad grid index `{s}`"))?;
                if grid.insert(n, value).is_some() {
                    bail!("line {line}: duplicate index {n}");
                }
                continue;
            }
        };
        if slot.replace(value).is_some() {
            bail!("line {line}: duplicate index {}", &rec[0]);
        }
    }
    if grid.is_empty() {
        bail!("no grid rows");
    }
    for (expected, (&n, &v)) in grid.iter().enumerate() {
        if n != expected {
            bail!("grid indices must run 0, 1, 2, ... without gaps; index {expected} is missing");
        }
        out.values.push(v);
    }
    Ok(out)
}

pub fn load(path: &Path) -> anyhow::Result<GridSamples> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse(&text).with_context(|| format!("parsing {}", path.display()))
}

impl GridSamples {
    pub fn to_grid(&self, ctx: &QContext) -> qbf_core::Result<GridFunction> {
        let mut g = GridFunction::from_values(ctx, &self.values)?;
        if let Some(v) = self.pre_value {
            g = g.with_pre_value(v)?;
        }
        if let Some(v) = self.limit_value {
            g = g.with_limit_value(v)?;
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_optional_rows() {
        let s = parse("n,f\n-1,4\n0,1\n1,0.25\ninf,0\n2,0.0625\n").unwrap();
        assert_eq!(s.values, vec![1.0, 0.25, 0.0625]);
        assert_eq!(s.pre_value, Some(4.0));
        assert_eq!(s.limit_value, Some(0.0));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse("x,y\n0,1\n").is_err());
        assert!(parse("n,f\n0,1\n2,3\n").is_err());
        assert!(parse("n,f\n0,abc\n").is_err());
        assert!(parse("n,f\n0,1\n0,2\n").is_err());
        assert!(parse("n,f\n").is_err());
        assert!(parse("n,f\n0,NaN\n").is_err());
    }
}
