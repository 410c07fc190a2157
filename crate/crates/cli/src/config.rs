//! Optional `key = value` configuration file. Keys are the long flag names;
//! any flag given on the command line wins over the file.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{CliError, CliResult};

/// Environment variable naming the configuration file.
pub const CONFIG_ENV: &str = "QFI_ARRAY_CONFIG";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut entries = BTreeMap::new();
        for (number, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!(
                    "config line {}: expected `key = value`, got `{raw}`",
                    number + 1
                ))
            })?;
            let key = key.trim().trim_start_matches("--").replace('_', "-");
            if key.is_empty() {
                return Err(CliError::Usage(format!(
                    "config line {}: empty key",
                    number + 1
                )));
            }
            entries.insert(key, value.trim().to_string());
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Loads the file named by `--config`, falling back to the environment
    /// variable; an empty configuration when neither is set.
    pub fn discover(flag: Option<&Path>) -> CliResult<Self> {
        match flag {
            Some(path) => Self::load(path),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(path) if !path.is_empty() => Self::load(Path::new(&path)),
                _ => Ok(Self::default()),
            },
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> CliResult<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| CliError::Usage(format!("config key `{key}` = `{v}`: {e}")))
            })
            .transpose()
    }

    pub fn get_list<T: FromStr>(&self, key: &str) -> CliResult<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(|item| {
                        item.trim().parse::<T>().map_err(|e| {
                            CliError::Usage(format!("config key `{key}` = `{v}`: {e}"))
                        })
                    })
                    .collect()
            })
            .transpose()
    }

    /// Flag value, else config value, else `default`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> CliResult<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.pick_opt(flag, key)?.unwrap_or(default))
    }

    pub fn pick_opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }

    pub fn pick_required<T: FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<T>
    where
        T::Err: std::fmt::Display,
    {
        self.pick_opt(flag, key)?.ok_or_else(|| {
            CliError::Usage(format!("--{key} is required (flag or config key `{key}`)"))
        })
    }

    pub fn pick_list<T: FromStr>(&self, flag: Vec<T>, key: &str) -> CliResult<Vec<T>>
    where
        T::Err: std::fmt::Display,
    {
        if !flag.is_empty() {
            return Ok(flag);
        }
        Ok(self.get_list(key)?.unwrap_or_default())
    }

    /// A boolean switch set by the flag or by `key = true` in the file.
    pub fn pick_switch(&self, flag: bool, key: &str) -> CliResult<bool> {
        Ok(flag || self.get::<bool>(key)?.unwrap_or(false))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_whitespace() {
        let c = Config::parse("# header\n n = 4 \nsigma=0.3 # trailing\n\nmean_photons = 1,2\n")
            .unwrap();
        assert_eq!(c.get::<usize>("n").unwrap(), Some(4));
        assert_eq!(c.get::<f64>("sigma").unwrap(), Some(0.3));
        assert_eq!(
            c.get_list::<f64>("mean-photons").unwrap(),
            Some(vec![1.0, 2.0])
        );
        assert_eq!(c.get::<f64>("d").unwrap(), None);
    }

    #[test]
    fn flags_win() {
        let c = Config::parse("n = 4").unwrap();
        assert_eq!(c.pick(Some(6usize), "n", 1).unwrap(), 6);
        assert_eq!(c.pick(None::<usize>, "n", 1).unwrap(), 4);
        assert_eq!(c.pick(None::<f64>, "d", 1.5).unwrap(), 1.5);
    }

    #[test]
    fn rejects_malformed() {
        assert!(matches!(
            Config::parse("just words"),
            Err(CliError::Usage(_))
        ));
        let c = Config::parse("n = four").unwrap();
        assert!(matches!(c.get::<usize>("n"), Err(CliError::Usage(_))));
    }
}
