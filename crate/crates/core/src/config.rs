//! Plain-text run configuration: one `key = value` per line, `#` starts a
//! comment. Values stay strings until a consumer asks for a type.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::augment::{AugmentDistribution, PositionLaw};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, (usize, String)>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                msg: format!("expected `key = value`, got {line:?}"),
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: "empty key".into(),
                });
            }
            entries.insert(key.to_string(), (i + 1, value.trim().to_string()));
        }
        Ok(Config { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Config::parse(&text)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v.parse().map(Some).map_err(|_| Error::Parse {
                line: *line,
                msg: format!("bad value {v:?} for {key}"),
            }),
        }
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => parse_list(v).map(Some).map_err(|msg| Error::Parse { line: *line, msg }),
        }
    }

    /// Applies the augmentation keys `alpha`, `position_law`, `area_lo`,
    /// `area_hi`, `aspect_lo`, `aspect_hi` and the per-label overrides
    /// `label<k>_area = a, b` / `label<k>_aspect = a, b`.
    pub fn apply_augment(&self, dist: &mut AugmentDistribution) -> Result<()> {
        if let Some(a) = self.get("alpha")? {
            dist.alpha = a;
        }
        if let Some(law) = self.raw("position_law") {
            dist.position_law = PositionLaw::parse(law)?;
        }
        let geo = &mut dist.geometry;
        for (key, slot) in [
            ("area_lo", &mut geo.area_lo),
            ("area_hi", &mut geo.area_hi),
            ("aspect_lo", &mut geo.aspect_lo),
            ("aspect_hi", &mut geo.aspect_hi),
        ] {
            if let Some(v) = self.get(key)? {
                *slot = v;
            }
        }
        for key in self.keys() {
            let Some(rest) = key.strip_prefix("label") else {
                continue;
            };
            let Some((label, which)) = rest.split_once('_') else {
                continue;
            };
            let label: usize = label.parse().map_err(|_| Error::Invalid(format!("bad label in key {key}")))?;
            let iv = self.list::<f64>(key)?.unwrap_or_default();
            let [lo, hi] = iv[..] else {
                return Err(Error::Invalid(format!("{key} needs two values `lo, hi`")));
            };
            if label >= dist.label_intervals.len() {
                dist.label_intervals.resize(label + 1, ([0.0, 1.0], [0.0, 1.0]));
            }
            match which {
                "area" => dist.label_intervals[label].0 = [lo, hi],
                "aspect" => dist.label_intervals[label].1 = [lo, hi],
                _ => return Err(Error::Invalid(format!("unknown key {key}"))),
            }
        }
        dist.validate()
    }
}

pub fn parse_list<T: FromStr>(v: &str) -> std::result::Result<Vec<T>, String> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| format!("bad list item {s:?}")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_types() {
        let c = Config::parse("# run\nseed = 7\n\ndatasets=3 # small\nalphas = 0, 0.5 ,1\n").unwrap();
        assert_eq!(c.get::<u64>("seed").unwrap(), Some(7));
        assert_eq!(c.get::<usize>("datasets").unwrap(), Some(3));
        assert_eq!(c.list::<f64>("alphas").unwrap(), Some(vec![0.0, 0.5, 1.0]));
        assert_eq!(c.get::<u64>("missing").unwrap(), None);
    }

    #[test]
    fn reports_the_offending_line() {
        assert!(matches!(Config::parse("a = 1\nnonsense\n"), Err(Error::Parse { line: 2, .. })));
        let c = Config::parse("\nseed = x\n").unwrap();
        assert!(matches!(c.get::<u64>("seed"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn augment_keys_override_defaults() {
        let c = Config::parse(
            "alpha = 0.3\nposition_law = periphery\narea_hi = 0.5\nlabel9_area = 0.1, 0.2\nlabel0_aspect = 0.5,0.6\n",
        )
        .unwrap();
        let mut d = AugmentDistribution::default();
        c.apply_augment(&mut d).unwrap();
        assert_eq!(d.alpha, 0.3);
        assert_eq!(d.position_law, PositionLaw::PeripheryM0);
        assert_eq!(d.geometry.area_hi, 0.5);
        assert_eq!(d.label_intervals[9], ([0.1, 0.2], [0.0, 0.0]));
        assert_eq!(d.label_intervals[0].1, [0.5, 0.6]);

        let bad = Config::parse("label3_area = 0.7, 0.2\n").unwrap();
        assert!(bad.apply_augment(&mut AugmentDistribution::default()).is_err());
    }
}
