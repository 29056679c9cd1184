//! Flat `key = value` run configuration.
//!
//! Keys: `scheme`, `U1`, `U2`, `a`, `b`, `T`, `J`, `N`, `r`, `mode`, `L`, `nu`,
//! `ic`, `snapshots`, `out_dir`, `norm_bound`. Blank lines and `#` comments are
//! ignored. Missing keys fall back to the first benchmark with the one-sided
//! scheme, `J = 5000`, `N = 2560`, direct mode.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::problem::{InitialCondition, ProblemSpec, Scheme};
use crate::soe::{DEFAULT_HEAD, DEFAULT_TERMS};
use crate::solver::Mode;

/// Default bound on `max_n ||u(n)|| / ||u(0)||` before a run is flagged.
pub const DEFAULT_NORM_BOUND: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub spec: ProblemSpec,
    pub mode: Mode,
    pub snapshots: Vec<f64>,
    pub out_dir: PathBuf,
    pub norm_bound: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            spec: ProblemSpec::example1(Scheme::Rcn, 5000, 2560),
            mode: Mode::Direct,
            snapshots: vec![1.0, 2.0, 3.0, 4.0],
            out_dir: PathBuf::from("out"),
            norm_bound: DEFAULT_NORM_BOUND,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        text.parse()
    }
}

impl FromStr for RunConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let (mut mode, mut terms, mut head) = (None::<String>, DEFAULT_TERMS, DEFAULT_HEAD);
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let spec = &mut cfg.spec;
            match key {
                "scheme" => spec.scheme = value.parse()?,
                "U1" => spec.u1 = parse(key, value)?,
                "U2" => spec.u2 = parse(key, value)?,
                "a" => spec.a = parse(key, value)?,
                "b" => spec.b = parse(key, value)?,
                "T" => spec.t_final = parse(key, value)?,
                "J" => spec.j = parse(key, value)?,
                "N" => spec.n_steps = parse(key, value)?,
                "r" => spec.radius = parse(key, value)?,
                "ic" => spec.initial = InitialCondition::from_str(value)?,
                "mode" => mode = Some(value.to_ascii_lowercase()),
                "L" => terms = parse(key, value)?,
                "nu" => head = parse(key, value)?,
                "snapshots" => {
                    cfg.snapshots = value
                        .split([',', ' '])
                        .filter(|s| !s.is_empty())
                        .map(|s| parse(key, s))
                        .collect::<Result<_>>()?
                }
                "out_dir" => cfg.out_dir = PathBuf::from(value),
                "norm_bound" => cfg.norm_bound = parse(key, value)?,
                other => return Err(Error::Config(format!("line {}: unknown key `{other}`", lineno + 1))),
            }
        }
        cfg.mode = match mode.as_deref() {
            None | Some("direct") => Mode::Direct,
            Some("fast") => Mode::Fast { terms, head },
            Some(other) => return Err(Error::Config(format!("unknown mode `{other}`"))),
        };
        cfg.spec.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_config() {
        let text = "
            # second benchmark
            scheme = ccn
            U1 = 1
            U2 = 1
            a = 0
            b = 10
            T = 4.8e-4
            J = 5000
            N = 2560
            r = 1.001
            mode = fast
            L = 12
            nu = 2
            ic = wavepacket
            snapshots = 2.4e-4, 4.8e-4
            out_dir = results
        ";
        let cfg: RunConfig = text.parse().unwrap();
        assert_eq!(cfg.spec, ProblemSpec::example2(5000, 2560));
        assert_eq!(cfg.mode, Mode::Fast { terms: 12, head: 2 });
        assert_eq!(cfg.snapshots, vec![2.4e-4, 4.8e-4]);
        assert_eq!(cfg.out_dir, PathBuf::from("results"));
    }

    #[test]
    fn defaults_and_errors() {
        let cfg: RunConfig = "J = 100\nN = 20".parse().unwrap();
        assert_eq!(cfg.spec, ProblemSpec::example1(Scheme::Rcn, 100, 20));
        assert_eq!(cfg.mode, Mode::Direct);
        assert!(matches!("J = ten".parse::<RunConfig>(), Err(Error::Config(_))));
        assert!(matches!("colour = red".parse::<RunConfig>(), Err(Error::Config(_))));
        assert!(matches!("J".parse::<RunConfig>(), Err(Error::Config(_))));
        assert!(matches!("mode = slow".parse::<RunConfig>(), Err(Error::Config(_))));
        // R-CN with advection is rejected by validation.
        assert!(matches!("U1 = 1".parse::<RunConfig>(), Err(Error::InvalidInput(_))));
    }
}
