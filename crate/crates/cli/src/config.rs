//! Flat key=value experiment configs with line-level diagnostics.
//!
//! One `key = value` pair per line; `#` starts a comment. Keys are consumed
//! as commands read them, and anything left unread is rejected by
//! [`Config::finish`] so typos fail loudly instead of silently using a
//! default.

use std::cell::RefCell;
use std::collections::HashSet;
use std::fmt::Display;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use csl_core::{ChannelParams, Prior};

#[derive(Debug)]
pub struct Config {
    entries: Vec<(String, String, usize)>,
    consumed: RefCell<HashSet<String>>,
    source: String,
}

impl Config {
    pub fn parse(text: &str, source: &str) -> Result<Config> {
        let mut entries = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("{source}:{}: expected `key = value`, got `{line}`", idx + 1))?;
            let key = key.trim().to_string();
            if entries.iter().any(|(k, _, _)| *k == key) {
                bail!("{source}:{}: duplicate key `{key}`", idx + 1);
            }
            entries.push((key, value.trim().to_string(), idx + 1));
        }
        Ok(Config {
            entries,
            consumed: RefCell::new(HashSet::new()),
            source: source.to_string(),
        })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.consumed.borrow_mut().insert(key.to_string());
        self.entries
            .iter()
            .find(|(k, _, _)| k == key)
            .map(|(_, v, _)| v.as_str())
    }

    fn line_of(&self, key: &str) -> usize {
        self.entries
            .iter()
            .find(|(k, _, _)| k == key)
            .map(|&(_, _, l)| l)
            .unwrap_or(0)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v.parse::<T>().map(Some).map_err(|e| {
                anyhow!("{}:{}: key `{key}`: {e}", self.source, self.line_of(key))
            }),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: Display,
    {
        self.get(key)?
            .ok_or_else(|| anyhow!("{}: missing required key `{key}`", self.source))
    }

    /// Comma-separated list value.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: Display,
    {
        let Some(v) = self.raw(key) else {
            return Ok(None);
        };
        let line = self.line_of(key);
        v.split(',')
            .map(|item| {
                item.trim()
                    .parse::<T>()
                    .map_err(|e| anyhow!("{}:{line}: key `{key}`: `{}`: {e}", self.source, item.trim()))
            })
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }

    pub fn require_list<T: FromStr>(&self, key: &str) -> Result<Vec<T>>
    where
        T::Err: Display,
    {
        self.get_list(key)?
            .ok_or_else(|| anyhow!("{}: missing required key `{key}`", self.source))
    }

    /// Channel parameters from `a`, `sigma`, `gamma`, `tol` (all optional,
    /// defaulting to 1, 1, 1 and the library default tolerance).
    pub fn channel_params(&self) -> Result<ChannelParams> {
        let a = self.get_or("a", 1.0)?;
        let sigma = self.get_or("sigma", 1.0)?;
        let gamma = self.get_or("gamma", 1.0)?;
        let params = match self.get::<f64>("tol")? {
            Some(tol) => ChannelParams::new(a, sigma, gamma, tol),
            None => ChannelParams::with_default_tol(a, sigma, gamma),
        };
        params.map_err(|e| anyhow!("{}: invalid channel parameters: {e}", self.source))
    }

    /// Prior spec under `key`: `dirac(x)`, `two_point(x,y,w)`,
    /// `uniform_grid(m)`, or `atoms(x1:w1, x2:w2, ...)`.
    pub fn prior(&self, key: &str, support_bound: f64) -> Result<Prior> {
        let spec = self
            .raw(key)
            .ok_or_else(|| anyhow!("{}: missing required prior key `{key}`", self.source))?
            .to_string();
        let line = self.line_of(key);
        parse_prior(&spec, support_bound)
            .with_context(|| format!("{}:{line}: key `{key}`", self.source))
    }

    /// Errors on any key never read by the command, naming lines.
    pub fn finish(&self) -> Result<()> {
        let consumed = self.consumed.borrow();
        let unknown: Vec<String> = self
            .entries
            .iter()
            .filter(|(k, _, _)| !consumed.contains(k))
            .map(|(k, _, l)| format!("{}:{l}: unknown key `{k}`", self.source))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            bail!("{}", unknown.join("\n"))
        }
    }
}

fn args_of<'a>(spec: &'a str, name: &str) -> Option<&'a str> {
    spec.strip_prefix(name)?
        .trim()
        .strip_prefix('(')?
        .strip_suffix(')')
}

pub fn parse_prior(spec: &str, support_bound: f64) -> Result<Prior> {
    let spec = spec.trim();
    let prior = if let Some(args) = args_of(spec, "dirac") {
        Prior::dirac(args.trim().parse::<f64>()?, support_bound)
    } else if let Some(args) = args_of(spec, "two_point") {
        let parts: Vec<f64> = args
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()?;
        if parts.len() != 3 {
            bail!("two_point takes (x, y, w), got `{spec}`");
        }
        Prior::two_point(parts[0], parts[1], parts[2], support_bound)
    } else if let Some(args) = args_of(spec, "uniform_grid") {
        Prior::uniform_grid(args.trim().parse::<usize>()?, support_bound)
    } else if let Some(args) = args_of(spec, "atoms") {
        let mut atoms = Vec::new();
        let mut weights = Vec::new();
        for pair in args.split(',') {
            let (x, w) = pair
                .split_once(':')
                .ok_or_else(|| anyhow!("atoms takes `x:w` pairs, got `{pair}`"))?;
            atoms.push(x.trim().parse::<f64>()?);
            weights.push(w.trim().parse::<f64>()?);
        }
        Prior::new(atoms, weights, support_bound)
    } else {
        bail!(
            "unrecognized prior spec `{spec}` \
             (expected dirac(x), two_point(x,y,w), uniform_grid(m), or atoms(x:w, ...))"
        );
    };
    prior.map_err(|e| anyhow!("invalid prior `{spec}`: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects_unknown_keys() {
        let cfg = Config::parse("a = 2.0\nsigma = 0.5\nbogus = 1\n", "test.cfg").unwrap();
        let p = cfg.channel_params().unwrap();
        assert_eq!(p.a, 2.0);
        assert_eq!(p.sigma, 0.5);
        assert_eq!(p.gamma, 1.0);
        let err = cfg.finish().unwrap_err().to_string();
        assert!(err.contains("test.cfg:3"), "{err}");
        assert!(err.contains("bogus"), "{err}");
    }

    #[test]
    fn diagnostics_carry_line_numbers() {
        let err = Config::parse("a 2.0\n", "t").unwrap_err().to_string();
        assert!(err.contains("t:1"), "{err}");
        let cfg = Config::parse("\n# comment\na = abc\n", "t").unwrap();
        let err = cfg.get::<f64>("a").unwrap_err().to_string();
        assert!(err.contains("t:3"), "{err}");
    }

    #[test]
    fn duplicate_keys_rejected() {
        let err = Config::parse("a = 1\na = 2\n", "t").unwrap_err().to_string();
        assert!(err.contains("duplicate"), "{err}");
    }

    #[test]
    fn prior_specs() {
        assert_eq!(parse_prior("dirac(0.5)", 1.0).unwrap().atoms(), &[0.5]);
        let tp = parse_prior("two_point(0.3, 0.9, 0.5)", 1.0).unwrap();
        assert_eq!(tp.atoms(), &[0.3, 0.9]);
        assert_eq!(parse_prior("uniform_grid(5)", 1.0).unwrap().len(), 5);
        let at = parse_prior("atoms(0.1:0.25, 0.7:0.75)", 1.0).unwrap();
        assert_eq!(at.weights(), &[0.25, 0.75]);
        assert!(parse_prior("mystery(1)", 1.0).is_err());
        assert!(parse_prior("dirac(2.0)", 1.0).is_err()); // outside [0, a]
    }

    #[test]
    fn lists() {
        let cfg = Config::parse("ns = 10, 20, 30\n", "t").unwrap();
        assert_eq!(cfg.require_list::<usize>("ns").unwrap(), vec![10, 20, 30]);
    }
}
