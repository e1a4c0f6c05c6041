use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    OneWay,
    TwoWay,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "oneway" | "one-way" | "one_way" => Ok(Mode::OneWay),
            "twoway" | "two-way" | "two_way" => Ok(Mode::TwoWay),
            other => Err(Error::Config(format!("unknown mode `{other}`"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::OneWay => "oneway",
            Mode::TwoWay => "twoway",
        })
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Node counts, antenna counts, stream counts, power budgets and noise
/// variances. Per-pair vectors have length `k`.
///
/// In two-way mode pair `k` consists of user `k` (with `n_s[k]` antennas)
/// and user `K + k` (with `n_d[k]` antennas); both ends send `n_b[k]`
/// streams under the budget `p_s[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub k: usize,
    pub n_s: Vec<usize>,
    pub n_r: usize,
    pub n_d: Vec<usize>,
    pub n_b: Vec<usize>,
    pub p_s: Vec<f64>,
    pub p_r: f64,
    pub sigma2_r: f64,
    pub sigma2_d: f64,
    pub mode: Mode,
}

impl SystemConfig {
    /// Same counts and budgets for every pair.
    #[allow(clippy::too_many_arguments)]
    pub fn uniform(
        mode: Mode,
        k: usize,
        n_s: usize,
        n_r: usize,
        n_d: usize,
        n_b: usize,
        p_s: f64,
        p_r: f64,
    ) -> Result<Self> {
        let cfg = Self {
            k,
            n_s: vec![n_s; k],
            n_r,
            n_d: vec![n_d; k],
            n_b: vec![n_b; k],
            p_s: vec![p_s; k],
            p_r,
            sigma2_r: 1.0,
            sigma2_d: 1.0,
            mode,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_source_power(&self, p_s: f64) -> Self {
        let mut c = self.clone();
        c.p_s = vec![p_s; self.k];
        c
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.k == 0 {
            return bad("K must be at least 1".into());
        }
        for (name, v) in [("n_s", &self.n_s), ("n_d", &self.n_d), ("n_b", &self.n_b)] {
            if v.len() != self.k {
                return bad(format!("{name} has {} entries for K = {}", v.len(), self.k));
            }
            if v.contains(&0) {
                return bad(format!("{name} entries must be positive"));
            }
        }
        if self.p_s.len() != self.k {
            return bad(format!("p_s has {} entries for K = {}", self.p_s.len(), self.k));
        }
        if self.n_r == 0 {
            return bad("n_r must be positive".into());
        }
        for k in 0..self.k {
            if self.n_b[k] > self.n_s[k] {
                return bad(format!(
                    "pair {}: n_b = {} exceeds n_s = {}",
                    k + 1,
                    self.n_b[k],
                    self.n_s[k]
                ));
            }
            if self.mode == Mode::TwoWay && self.n_b[k] > self.n_d[k] {
                return bad(format!(
                    "pair {}: n_b = {} exceeds the partner's n_d = {}",
                    k + 1,
                    self.n_b[k],
                    self.n_d[k]
                ));
            }
        }
        let total: usize = self.n_b.iter().sum();
        if self.n_r < total {
            return bad(format!("n_r = {} is below the total stream count {total}", self.n_r));
        }
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !self.p_s.iter().all(|&p| p.is_finite() && p >= 0.0) || !positive(self.p_r) {
            return bad("source budgets must be non-negative and the relay budget positive".into());
        }
        if !positive(self.sigma2_r) || !positive(self.sigma2_d) {
            return bad("noise variances must be positive and finite".into());
        }
        Ok(())
    }

    /// Number of transmitting (and receiving) users: `K` or `2K`.
    pub fn users(&self) -> usize {
        match self.mode {
            Mode::OneWay => self.k,
            Mode::TwoWay => 2 * self.k,
        }
    }

    /// Antennas of transmitting user `j` (two-way users `K..2K` use `n_d`).
    pub fn tx_antennas(&self, j: usize) -> usize {
        if j < self.k {
            self.n_s[j]
        } else {
            self.n_d[j - self.k]
        }
    }

    /// Streams sent by user `j`.
    pub fn streams(&self, j: usize) -> usize {
        self.n_b[j % self.k]
    }

    pub fn source_power(&self, j: usize) -> f64 {
        self.p_s[j % self.k]
    }

    pub fn total_streams(&self) -> usize {
        (0..self.users()).map(|j| self.streams(j)).sum()
    }

    /// Reads the key-value format: one `key = value` per line, `#` starts a
    /// comment, per-pair keys take a scalar or a comma-separated list.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|e| match e {
            Error::Parse { line, message, .. } => Error::Parse {
                path: path.to_path_buf(),
                line,
                message,
            },
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let perr = |line: usize, message: String| Error::Parse {
            path: "<config>".into(),
            line,
            message,
        };
        let mut entries: Vec<(usize, String, String)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| perr(i + 1, format!("expected `key = value`, got `{line}`")))?;
            let key = key.trim().to_string();
            if entries.iter().any(|e| e.1 == key) {
                return Err(perr(i + 1, format!("duplicate key `{key}`")));
            }
            entries.push((i + 1, key, value.trim().to_string()));
        }
        const KNOWN: [&str; 10] = [
            "K", "n_s", "n_r", "n_d", "n_b", "p_s_db", "p_r_db", "sigma2_r", "sigma2_d", "mode",
        ];
        if let Some(e) = entries.iter().find(|e| !KNOWN.contains(&e.1.as_str())) {
            return Err(perr(e.0, format!("unknown key `{}`", e.1)));
        }
        let get = |key: &str| entries.iter().find(|e| e.1 == key);
        let scalar = |key: &str| -> Result<Option<f64>> {
            match get(key) {
                None => Ok(None),
                Some((line, _, v)) => v
                    .parse::<f64>()
                    .map(Some)
                    .map_err(|_| perr(*line, format!("`{key}` expects a number, got `{v}`"))),
            }
        };
        let require = |key: &str| -> Result<f64> {
            scalar(key)?.ok_or_else(|| Error::Config(format!("missing key `{key}`")))
        };
        let k_val = require("K")?;
        if k_val < 1.0 || k_val.fract() != 0.0 {
            return Err(Error::Config(format!("K must be a positive integer, got {k_val}")));
        }
        let k = k_val as usize;
        let list = |key: &str, default: Option<&str>| -> Result<Vec<f64>> {
            let (line, v) = match get(key) {
                Some((line, _, v)) => (*line, v.as_str()),
                None => match default {
                    Some(d) => (0, d),
                    None => return Err(Error::Config(format!("missing key `{key}`"))),
                },
            };
            let vals: Vec<f64> = v
                .split(',')
                .map(|p| p.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| perr(line, format!("`{key}` expects numbers, got `{v}`")))?;
            match vals.len() {
                1 => Ok(vec![vals[0]; k]),
                n if n == k => Ok(vals),
                n => Err(perr(line, format!("`{key}` has {n} values for K = {k}"))),
            }
        };
        let counts = |key: &str, default: Option<&str>| -> Result<Vec<usize>> {
            list(key, default)?
                .into_iter()
                .map(|x| {
                    if x >= 1.0 && x.fract() == 0.0 {
                        Ok(x as usize)
                    } else {
                        Err(Error::Config(format!("`{key}` entries must be positive integers")))
                    }
                })
                .collect()
        };
        let n_s = counts("n_s", None)?;
        let n_d = counts("n_d", None)?;
        let n_b = match get("n_b") {
            Some(_) => counts("n_b", None)?,
            None => n_s.clone(),
        };
        let n_r_val = require("n_r")?;
        if n_r_val < 1.0 || n_r_val.fract() != 0.0 {
            return Err(Error::Config("`n_r` must be a positive integer".into()));
        }
        let mode = match get("mode") {
            Some((_, _, v)) => v.parse()?,
            None => Mode::OneWay,
        };
        let cfg = Self {
            k,
            n_s,
            n_r: n_r_val as usize,
            n_d,
            n_b,
            p_s: list("p_s_db", Some("0"))?.into_iter().map(db_to_linear).collect(),
            p_r: db_to_linear(require("p_r_db")?),
            sigma2_r: scalar("sigma2_r")?.unwrap_or(1.0),
            sigma2_d: scalar("sigma2_d")?.unwrap_or(1.0),
            mode,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_broadcast_and_lists() {
        let cfg = SystemConfig::parse(
            "# fig 2\nK = 3\nn_s = 3\nn_r = 9\nn_d = 3, 3, 3\np_s_db = 10\np_r_db = 20\n",
        )
        .unwrap();
        assert_eq!(cfg.n_b, vec![3, 3, 3]);
        assert!((cfg.p_r - 100.0).abs() < 1e-12);
        assert!((cfg.p_s[2] - 10.0).abs() < 1e-12);
        assert_eq!(cfg.mode, Mode::OneWay);
        assert_eq!(cfg.sigma2_d, 1.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(SystemConfig::parse("K = 2\nn_s = 2\nn_r = 1\nn_d = 2\np_r_db = 0").is_err());
        assert!(matches!(
            SystemConfig::parse("K = 2\nbogus = 1"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            SystemConfig::parse("K = 2\nn_s = 1,2,3\nn_r = 9\nn_d = 2\np_r_db = 0"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(SystemConfig::parse("K = 1\nn_s = 2\nn_b = 3\nn_r = 9\nn_d = 2\np_r_db = 0").is_err());
    }

    #[test]
    fn two_way_stream_budget_counts_pairs() {
        let cfg = SystemConfig::uniform(Mode::TwoWay, 3, 2, 6, 6, 2, 10.0, 100.0).unwrap();
        assert_eq!(cfg.users(), 6);
        assert_eq!(cfg.tx_antennas(4), 6);
        assert_eq!(cfg.total_streams(), 12);
    }
}
