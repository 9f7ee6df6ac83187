//! Typed run parameters shared by flags, config files and manifests.

use std::collections::BTreeMap;
use std::fmt;

use anyhow::{anyhow, bail, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Float,
    Int,
    FloatList,
    /// Inclusive range `a..b`.
    Range,
    Text,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Float(f64),
    Int(u64),
    FloatList(Vec<f64>),
    Range(u64, u64),
    Text(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Float(x) => write!(f, "{x:?}"),
            Value::Int(n) => write!(f, "{n}"),
            Value::FloatList(v) => {
                let s: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
                write!(f, "{}", s.join(","))
            }
            Value::Range(a, b) => write!(f, "{a}..{b}"),
            Value::Text(s) => write!(f, "{s}"),
        }
    }
}

impl Value {
    pub fn parse(kind: Kind, s: &str) -> Result<Value> {
        let s = s.trim();
        let float = |t: &str| -> Result<f64> {
            let x: f64 = t
                .trim()
                .parse()
                .map_err(|_| anyhow!("`{t}` is not a number"))?;
            if !x.is_finite() {
                bail!("`{t}` is not finite");
            }
            Ok(x)
        };
        Ok(match kind {
            Kind::Float => Value::Float(float(s)?),
            Kind::Int => Value::Int(
                s.parse()
                    .map_err(|_| anyhow!("`{s}` is not a non-negative integer"))?,
            ),
            Kind::FloatList => {
                let v = s.split(',').map(float).collect::<Result<Vec<_>>>()?;
                if v.is_empty() {
                    bail!("empty list");
                }
                Value::FloatList(v)
            }
            Kind::Range => {
                let (a, b) = s
                    .split_once("..")
                    .ok_or_else(|| anyhow!("`{s}` is not a range a..b"))?;
                let a: u64 = a
                    .trim()
                    .parse()
                    .map_err(|_| anyhow!("bad range start in `{s}`"))?;
                let b: u64 = b
                    .trim()
                    .parse()
                    .map_err(|_| anyhow!("bad range end in `{s}`"))?;
                if a > b {
                    bail!("empty range `{s}`");
                }
                Value::Range(a, b)
            }
            Kind::Text => Value::Text(s.to_string()),
        })
    }

    /// Read a value of `kind` from a config file entry.
    pub fn from_toml(kind: Kind, v: &toml::Value) -> Result<Value> {
        match (kind, v) {
            (Kind::Float, toml::Value::Float(x)) => Ok(Value::Float(*x)),
            (Kind::Float, toml::Value::Integer(n)) => Ok(Value::Float(*n as f64)),
            (Kind::Int, toml::Value::Integer(n)) if *n >= 0 => Ok(Value::Int(*n as u64)),
            (Kind::FloatList, toml::Value::Array(a)) => {
                let v = a
                    .iter()
                    .map(|e| match e {
                        toml::Value::Float(x) => Ok(*x),
                        toml::Value::Integer(n) => Ok(*n as f64),
                        other => Err(anyhow!("list entry {other} is not a number")),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Value::FloatList(v))
            }
            (_, toml::Value::String(s)) => Value::parse(kind, s),
            (k, other) => Err(anyhow!("{other} does not fit a {k:?} parameter")),
        }
    }

    pub fn to_toml(&self) -> toml::Value {
        match self {
            Value::Float(x) => toml::Value::Float(*x),
            Value::Int(n) => toml::Value::Integer(*n as i64),
            Value::FloatList(v) => {
                toml::Value::Array(v.iter().map(|x| toml::Value::Float(*x)).collect())
            }
            Value::Range(..) | Value::Text(_) => toml::Value::String(self.to_string()),
        }
    }
}

/// A named parameter with its default and help line.
#[derive(Clone, Copy, Debug)]
pub struct Param {
    /// Config key; the flag is the same name with `-` for `_`.
    pub key: &'static str,
    pub kind: Kind,
    pub default: &'static str,
    pub help: &'static str,
}

impl Param {
    pub fn flag(&self) -> String {
        self.key.replace('_', "-")
    }
}

const fn p(key: &'static str, kind: Kind, default: &'static str, help: &'static str) -> Param {
    Param {
        key,
        kind,
        default,
        help,
    }
}

pub const COMMON: &[Param] = &[
    p(
        "c0",
        Kind::Float,
        "-2",
        "base parameter of the quadratic family x^2 + c0 + t",
    ),
    p(
        "seed",
        Kind::Int,
        "7",
        "base seed of the counter-based sample streams",
    ),
];

const THETA: Param = p(
    "theta",
    Kind::Float,
    "0.2",
    "clearance of the critical orbit from 0, relative",
);

/// Parameters of each subcommand besides [`COMMON`].
pub fn params_of(sub: &str) -> &'static [Param] {
    match sub {
        "certify" => {
            const P: &[Param] = &[
                p(
                    "horizon",
                    Kind::Int,
                    "64",
                    "iterates searched for a periodic coincidence",
                ),
                p(
                    "match_tol",
                    Kind::Float,
                    "1e-9",
                    "tolerance for matching orbit points",
                ),
                p(
                    "lambda_min",
                    Kind::Float,
                    "1",
                    "least admissible cycle multiplier",
                ),
            ];
            P
        }
        "transversality" => {
            const P: &[Param] = &[
                p("terms", Kind::Int, "60", "terms of the series"),
                p(
                    "tol",
                    Kind::Float,
                    "1e-10",
                    "convergence tolerance on the tail",
                ),
            ];
            P
        }
        "superattracting" => {
            const P: &[Param] = &[
                p("n_range", Kind::Range, "5..12", "inclusive range of n"),
                THETA,
                p(
                    "big_n",
                    Kind::Int,
                    "0",
                    "preimage depth N; 0 picks it from the density scan",
                ),
                p("kappa", Kind::Float, "1", "constant in the scale gamma_n"),
                p(
                    "grid",
                    Kind::Int,
                    "4096",
                    "grid points scanned for sign changes",
                ),
            ];
            P
        }
        "branches" => {
            const P: &[Param] = &[
                p("n", Kind::Int, "0", "use t = t_n; 0 means t = 0"),
                THETA,
                p(
                    "max_probes",
                    Kind::Int,
                    "20000",
                    "orbits followed while filling gaps",
                ),
                p("cap", Kind::Int, "1000000", "cap on each return time"),
                p(
                    "min_width",
                    Kind::Float,
                    "1e-10",
                    "gaps narrower than this are not probed",
                ),
            ];
            P
        }
        "scheme" => {
            const P: &[Param] = &[
                p("n_range", Kind::Range, "6..10", "inclusive range of n"),
                THETA,
                p(
                    "samples",
                    Kind::Int,
                    "20000",
                    "uniform points of U_1 per parameter",
                ),
                p(
                    "max_height",
                    Kind::Int,
                    "400",
                    "largest height explored per point",
                ),
                p(
                    "cap",
                    Kind::Int,
                    "1000000",
                    "cap on each return and on the induced time",
                ),
                p(
                    "min_count",
                    Kind::Int,
                    "100",
                    "least surviving samples for a tail point to enter the fit",
                ),
            ];
            P
        }
        "escape" => {
            const P: &[Param] = &[
                p("n", Kind::Int, "0", "use t = t_n; 0 means t = 0"),
                THETA,
                p("times", Kind::Range, "25..200", "inclusive range of times"),
                p("step", Kind::Int, "25", "spacing of the times"),
                p(
                    "samples",
                    Kind::Int,
                    "100000",
                    "uniform points of the invariant interval",
                ),
            ];
            P
        }
        "breakdown" => {
            const P: &[Param] = &[
                p(
                    "a",
                    Kind::Float,
                    "1",
                    "timescale constant; horizon floor(a / t_n)",
                ),
                p("n_range", Kind::Range, "6..10", "inclusive range of n"),
                THETA,
                p(
                    "big_n",
                    Kind::Int,
                    "0",
                    "preimage depth N; 0 picks it from the density scan",
                ),
                p("eps_f", Kind::Float, "0.01", "radius of the bump core"),
                p("w", Kind::Float, "0.01", "width of the bump ramp"),
                p("samples", Kind::Int, "2000", "orbits per parameter"),
            ];
            P
        }
        "persistence" => {
            const P: &[Param] = &[
                p(
                    "beta",
                    Kind::FloatList,
                    "0.5,0.8",
                    "exponents in n(t) = floor(t^-beta)",
                ),
                p(
                    "n_range",
                    Kind::Range,
                    "6..10",
                    "the t grid is t_n over this range",
                ),
                THETA,
                p(
                    "big_n",
                    Kind::Int,
                    "0",
                    "preimage depth N; 0 picks it from the density scan",
                ),
                p("eps_f", Kind::Float, "0.01", "radius of the bump core"),
                p("w", Kind::Float, "0.01", "width of the bump ramp"),
                p(
                    "samples",
                    Kind::Int,
                    "2000",
                    "orbits per (observable, beta, t)",
                ),
            ];
            P
        }
        "tower-check" => {
            const P: &[Param] = &[
                p(
                    "k_exponents",
                    Kind::Range,
                    "4..10",
                    "k and n run over 2^a..2^b",
                ),
                p(
                    "blocks",
                    Kind::Int,
                    "256",
                    "blocks at the largest k for the concentration check",
                ),
                p(
                    "replicas",
                    Kind::Int,
                    "64",
                    "independent F-orbits sampling mu_Y",
                ),
                p(
                    "burn_in",
                    Kind::Int,
                    "10000",
                    "F-steps discarded per replica",
                ),
                p(
                    "moment_samples",
                    Kind::Int,
                    "4000",
                    "orbits for the maximal-moment check",
                ),
                THETA,
                p(
                    "cells",
                    Kind::Int,
                    "2000",
                    "sample points used to list scheme cells for the contract",
                ),
            ];
            P
        }
        "basin" => {
            const P: &[Param] = &[
                p("n_range", Kind::Range, "6..12", "inclusive range of n"),
                THETA,
                p(
                    "big_n",
                    Kind::Int,
                    "0",
                    "preimage depth N; 0 picks it from the density scan",
                ),
                p(
                    "samples",
                    Kind::Int,
                    "2000",
                    "uniform points of the invariant interval",
                ),
                p(
                    "max_horizon",
                    Kind::Int,
                    "10000000",
                    "basin entry is skipped, and counted as a cap hit, when 1/t_n exceeds this",
                ),
            ];
            P
        }
        _ => &[],
    }
}

pub const SUBCOMMANDS: &[(&str, &str)] = &[
    ("certify", "certify that f_0 is a Misiurewicz map"),
    (
        "transversality",
        "partial sums of the transversality series",
    ),
    (
        "superattracting",
        "superattracting parameters t_n and their periods",
    ),
    ("branches", "branches of the first return map to U_1"),
    (
        "scheme",
        "coloured partition, red measure, rho moments and induced tail",
    ),
    ("escape", "measures of the escape sets E_n and R_n"),
    ("breakdown", "Birkhoff means at the timescale a / t_n"),
    ("persistence", "Birkhoff deviations below the timescale"),
    (
        "tower-check",
        "induced-map contract, tau concentration and maximal moments",
    ),
    ("basin", "central geometry and basin entry at t_n"),
];

/// Resolved parameters of one run, in key order.
#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    pub subcommand: String,
    pub values: BTreeMap<String, Value>,
}

impl Params {
    pub fn all_params(sub: &str) -> Vec<Param> {
        COMMON.iter().chain(params_of(sub)).copied().collect()
    }

    /// Defaults, then the config file (top level, then the subcommand's
    /// section), then flags.
    pub fn resolve(
        sub: &str,
        file: Option<&toml::Table>,
        flags: &BTreeMap<String, String>,
    ) -> Result<Params> {
        let specs = Params::all_params(sub);
        let mut values = BTreeMap::new();
        for s in &specs {
            values.insert(s.key.to_string(), Value::parse(s.kind, s.default)?);
        }
        if let Some(file) = file {
            let known = |k: &str| specs.iter().find(|s| s.key == k);
            // top-level keys first, so the section wins whatever the file order
            for (k, v) in file {
                match v {
                    toml::Value::Table(_) => {
                        if !SUBCOMMANDS.iter().any(|(name, _)| name == k) {
                            bail!("unknown section [{k}] in the config file");
                        }
                    }
                    _ => {
                        if let Some(s) = known(k) {
                            values.insert(
                                k.clone(),
                                Value::from_toml(s.kind, v).map_err(|e| anyhow!("{k}: {e}"))?,
                            );
                        } else if !SUBCOMMANDS
                            .iter()
                            .any(|(name, _)| params_of(name).iter().any(|p| p.key == k))
                        {
                            bail!("unknown key `{k}` in the config file");
                        }
                    }
                }
            }
            if let Some(toml::Value::Table(section)) = file.get(sub) {
                for (k, v) in section {
                    let s =
                        known(k).ok_or_else(|| anyhow!("unknown key `{k}` in section [{sub}]"))?;
                    values.insert(
                        k.clone(),
                        Value::from_toml(s.kind, v).map_err(|e| anyhow!("{k}: {e}"))?,
                    );
                }
            }
        }
        for (k, v) in flags {
            let s = specs
                .iter()
                .find(|s| s.key == k)
                .ok_or_else(|| anyhow!("unknown flag --{k}"))?;
            values.insert(
                k.clone(),
                Value::parse(s.kind, v).map_err(|e| anyhow!("--{}: {e}", s.flag()))?,
            );
        }
        let out = Params {
            subcommand: sub.to_string(),
            values,
        };
        out.validate()?;
        Ok(out)
    }

    fn validate(&self) -> Result<()> {
        for (k, v) in &self.values {
            let flag = k.replace('_', "-");
            match (k.as_str(), v) {
                (
                    "samples" | "moment_samples" | "replicas" | "blocks" | "terms" | "horizon"
                    | "grid" | "cells" | "max_horizon",
                    Value::Int(0),
                ) => {
                    bail!("--{flag} must be positive")
                }
                ("theta", Value::Float(x)) if !(*x > 0.0 && *x < 1.0) => {
                    bail!("--theta must lie in (0, 1)")
                }
                ("a" | "w" | "kappa" | "match_tol" | "tol", Value::Float(x)) if *x <= 0.0 => {
                    bail!("--{flag} must be positive")
                }
                ("eps_f", Value::Float(x)) if *x < 0.0 => bail!("--eps-f must be non-negative"),
                ("beta", Value::FloatList(bs)) if bs.iter().any(|b| !(*b > 0.0 && *b < 1.0)) => {
                    bail!("--beta entries must lie in (0, 1)")
                }
                ("n_range", Value::Range(a, _)) if *a == 0 => {
                    bail!("--n-range must start at 1 or later")
                }
                ("k_exponents", Value::Range(a, b)) if *a == *b || *b > 20 => {
                    bail!("--k-exponents needs at least two exponents, at most 20")
                }
                ("step", Value::Int(0)) => bail!("--step must be positive"),
                _ => {}
            }
        }
        Ok(())
    }

    pub fn f64(&self, k: &str) -> f64 {
        match self.values.get(k) {
            Some(Value::Float(x)) => *x,
            other => panic!("parameter {k} is not a float: {other:?}"),
        }
    }

    pub fn u64(&self, k: &str) -> u64 {
        match self.values.get(k) {
            Some(Value::Int(n)) => *n,
            other => panic!("parameter {k} is not an integer: {other:?}"),
        }
    }

    pub fn usize(&self, k: &str) -> usize {
        self.u64(k) as usize
    }

    pub fn list(&self, k: &str) -> Vec<f64> {
        match self.values.get(k) {
            Some(Value::FloatList(v)) => v.clone(),
            other => panic!("parameter {k} is not a list: {other:?}"),
        }
    }

    pub fn range(&self, k: &str) -> (u64, u64) {
        match self.values.get(k) {
            Some(Value::Range(a, b)) => (*a, *b),
            other => panic!("parameter {k} is not a range: {other:?}"),
        }
    }

    /// `Some(n)` unless the integer is the `0` sentinel.
    pub fn optional(&self, k: &str) -> Option<usize> {
        Some(self.usize(k)).filter(|&n| n > 0)
    }

    pub fn to_toml(&self) -> toml::Table {
        self.values
            .iter()
            .map(|(k, v)| (k.clone(), v.to_toml()))
            .collect()
    }

    /// Rebuild from the `[config]` table of a manifest.
    pub fn from_manifest(sub: &str, config: &toml::Table) -> Result<Params> {
        let specs = Params::all_params(sub);
        let mut values = BTreeMap::new();
        for s in &specs {
            let v = config
                .get(s.key)
                .ok_or_else(|| anyhow!("manifest config lacks `{}`", s.key))?;
            values.insert(s.key.to_string(), Value::from_toml(s.kind, v)?);
        }
        let out = Params {
            subcommand: sub.to_string(),
            values,
        };
        out.validate()?;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(kv: &[(&str, &str)]) -> BTreeMap<String, String> {
        kv.iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn flags_override_file_override_defaults() {
        let file: toml::Table =
            toml::from_str("seed = 3\nsamples = 10\n[breakdown]\nsamples = 20\na = 2.0\n").unwrap();
        let p = Params::resolve("breakdown", Some(&file), &flags(&[("a", "1.5")])).unwrap();
        assert_eq!(p.u64("seed"), 3);
        assert_eq!(p.u64("samples"), 20);
        assert_eq!(p.f64("a"), 1.5);
        assert_eq!(p.range("n_range"), (6, 10));
    }

    #[test]
    fn manifest_round_trip() {
        let p = Params::resolve(
            "persistence",
            None,
            &flags(&[("beta", "0.3,0.7"), ("eps_f", "0.1")]),
        )
        .unwrap();
        let text = toml::to_string(&p.to_toml()).unwrap();
        let back = Params::from_manifest("persistence", &toml::from_str(&text).unwrap()).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn bad_values_are_usage_errors() {
        assert!(Params::resolve("breakdown", None, &flags(&[("samples", "0")])).is_err());
        assert!(Params::resolve("persistence", None, &flags(&[("beta", "1.5")])).is_err());
        assert!(Params::resolve("breakdown", None, &flags(&[("n_range", "9..3")])).is_err());
        let file: toml::Table = toml::from_str("bogus = 1").unwrap();
        assert!(Params::resolve("certify", Some(&file), &flags(&[])).is_err());
    }

    #[test]
    fn floats_echo_exactly() {
        let v = Value::parse(Kind::Float, "0.1").unwrap();
        assert_eq!(Value::from_toml(Kind::Float, &v.to_toml()).unwrap(), v);
        assert_eq!(
            Value::parse(Kind::Range, "6..10").unwrap().to_string(),
            "6..10"
        );
    }
}
