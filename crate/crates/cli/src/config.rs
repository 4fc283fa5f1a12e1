//! Config resolution: CLI flags override config-file values, which override
//! built-in defaults. Every command writes the fully resolved values back
//! out as `<command>.config.txt` beside its outputs; that echo is itself a
//! valid config file, so it alone reproduces the run.
//!
//! The file format is flat `key = value` lines. `#` starts a comment, blank
//! lines are skipped, and list values are comma-separated (paths in lists
//! therefore must not contain commas).

use crate::errors::{CliError, CliResult};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug)]
pub struct Resolver {
    file: BTreeMap<String, String>,
    unused: BTreeSet<String>,
    echo: BTreeMap<String, String>,
}

impl Resolver {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let mut file = BTreeMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
            for (lineno, raw) in text.lines().enumerate() {
                let line = raw.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let Some((key, value)) = line.split_once('=') else {
                    return Err(CliError::parse(format!(
                        "{}:{}: expected `key = value`, got `{raw}`",
                        path.display(),
                        lineno + 1
                    )));
                };
                let key = key.trim().to_string();
                if file.insert(key.clone(), value.trim().to_string()).is_some() {
                    return Err(CliError::parse(format!(
                        "{}:{}: duplicate key `{key}`",
                        path.display(),
                        lineno + 1
                    )));
                }
            }
        }
        let unused = file.keys().cloned().collect();
        Ok(Resolver { file, unused, echo: BTreeMap::new() })
    }

    fn take_file(&mut self, key: &str) -> Option<String> {
        self.unused.remove(key);
        self.file.get(key).cloned()
    }

    fn record(&mut self, key: &str, value: impl Display) {
        self.echo.insert(key.to_string(), value.to_string());
    }

    fn parse_value<T: FromStr>(key: &str, raw: &str) -> CliResult<T>
    where
        T::Err: Display,
    {
        raw.parse().map_err(|e| CliError::parse(format!("config key {key}: {e} (got `{raw}`)")))
    }

    pub fn get<T>(&mut self, key: &str, flag: Option<T>, default: T) -> CliResult<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let value = match (flag, self.take_file(key)) {
            (Some(v), _) => v,
            (None, Some(raw)) => Self::parse_value(key, &raw)?,
            (None, None) => default,
        };
        self.record(key, &value);
        Ok(value)
    }

    /// A value with no built-in default; absent stays absent (and out of the
    /// echo, so absence also reproduces).
    pub fn get_opt<T>(&mut self, key: &str, flag: Option<T>) -> CliResult<Option<T>>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let value = match (flag, self.take_file(key)) {
            (Some(v), _) => Some(v),
            (None, Some(raw)) => Some(Self::parse_value(key, &raw)?),
            (None, None) => None,
        };
        if let Some(v) = &value {
            self.record(key, v);
        }
        Ok(value)
    }

    /// Bare CLI switches can only push one way, so they arrive as
    /// `Some(bool)` when given and fall through to the file otherwise.
    pub fn get_flag(&mut self, key: &str, flag: Option<bool>, default: bool) -> CliResult<bool> {
        self.get(key, flag, default)
    }

    pub fn get_path(&mut self, key: &str, flag: Option<PathBuf>) -> CliResult<Option<PathBuf>> {
        let file = self.take_file(key).map(PathBuf::from);
        let value = flag.or(file);
        if let Some(v) = &value {
            self.record(key, v.display());
        }
        Ok(value)
    }

    pub fn require_path(&mut self, key: &str, flag: Option<PathBuf>) -> CliResult<PathBuf> {
        self.get_path(key, flag)?.ok_or_else(|| {
            CliError::invalid_argument(format!("{key} is required (flag --{} or config)", key.replace('_', "-")))
        })
    }

    pub fn require_paths(&mut self, key: &str, flags: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
        let file = self.take_file(key);
        let paths: Vec<PathBuf> = if flags.is_empty() {
            file.map(|raw| raw.split(',').map(|p| PathBuf::from(p.trim())).collect())
                .unwrap_or_default()
        } else {
            flags.to_vec()
        };
        if paths.is_empty() {
            return Err(CliError::invalid_argument(format!(
                "{key} is required (flag --{} or config)",
                key.replace('_', "-")
            )));
        }
        let joined: Vec<String> = paths.iter().map(|p| p.display().to_string()).collect();
        self.record(key, joined.join(","));
        Ok(paths)
    }

    /// Comma-separated list, from a flag string or the file.
    pub fn get_list<T>(&mut self, key: &str, flag: Option<String>, default: &[T]) -> CliResult<Vec<T>>
    where
        T: FromStr + Display + Clone,
        T::Err: Display,
    {
        let file = self.take_file(key);
        let values = match flag.or(file) {
            Some(raw) => raw
                .split(',')
                .map(|item| Self::parse_value(key, item.trim()))
                .collect::<CliResult<Vec<T>>>()?,
            None => default.to_vec(),
        };
        let joined: Vec<String> = values.iter().map(T::to_string).collect();
        self.record(key, joined.join(","));
        Ok(values)
    }

    /// Output directory: flag, then config, then $CROWDGROUPS_OUT_DIR, then
    /// the working directory. Created if missing.
    pub fn resolve_out_dir(&mut self, flag: Option<PathBuf>) -> CliResult<PathBuf> {
        let file = self.take_file("out_dir").map(PathBuf::from);
        let dir = flag
            .or(file)
            .or_else(|| std::env::var_os("CROWDGROUPS_OUT_DIR").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."));
        self.record("out_dir", dir.display());
        std::fs::create_dir_all(&dir)
            .map_err(|e| CliError::io(format!("{}: {e}", dir.display())))?;
        Ok(dir)
    }

    /// Rejects config keys the command never consumed (typo protection) and
    /// writes the echo.
    pub fn finish(self, dir: &Path, command: &str) -> CliResult<()> {
        if !self.unused.is_empty() {
            let keys: Vec<&str> = self.unused.iter().map(String::as_str).collect();
            return Err(CliError::validation(format!(
                "unknown config keys for {command}: {}",
                keys.join(", ")
            )));
        }
        let mut text = format!("# crowdgroups {command}\n");
        for (key, value) in &self.echo {
            text.push_str(&format!("{key} = {value}\n"));
        }
        let path = dir.join(format!("{command}.config.txt"));
        std::fs::write(&path, text).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, body: &str) -> PathBuf {
        let p = dir.join("c.txt");
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn precedence_is_flag_then_file_then_default() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "a = 5\nb = 6\n");
        let mut r = Resolver::load(Some(&p)).unwrap();
        assert_eq!(r.get("a", Some(1u32), 9).unwrap(), 1);
        assert_eq!(r.get("b", None, 9u32).unwrap(), 6);
        assert_eq!(r.get("c", None, 9u32).unwrap(), 9);
    }

    #[test]
    fn echo_reproduces_resolved_values() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "b = 6");
        let mut r = Resolver::load(Some(&p)).unwrap();
        r.get("a", Some(0.25f64), 0.0).unwrap();
        r.get("b", None, 0u32).unwrap();
        r.finish(dir.path(), "demo").unwrap();

        let echo = dir.path().join("demo.config.txt");
        let mut r2 = Resolver::load(Some(&echo)).unwrap();
        assert_eq!(r2.get("a", None, 0.0f64).unwrap(), 0.25);
        assert_eq!(r2.get("b", None, 0u32).unwrap(), 6);
        r2.finish(dir.path(), "demo").unwrap();
    }

    #[test]
    fn overridden_file_keys_still_count_as_used() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "a = 5\nout_dir = elsewhere\nlist = 1,2\npath = x.json\n");
        let mut r = Resolver::load(Some(&p)).unwrap();
        r.get("a", Some(1u32), 9).unwrap();
        r.resolve_out_dir(Some(dir.path().to_path_buf())).unwrap();
        r.get_list("list", Some("3".into()), &[0u32]).unwrap();
        r.get_path("path", Some(PathBuf::from("y.json"))).unwrap();
        r.finish(dir.path(), "demo").unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "typo_key = 1");
        let r = Resolver::load(Some(&p)).unwrap();
        let err = r.finish(dir.path(), "demo").unwrap_err();
        assert_eq!(err.exit, 5);
        assert!(err.message.contains("typo_key"));
    }

    #[test]
    fn malformed_lines_and_duplicates_fail_parse() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "nonsense line");
        assert_eq!(Resolver::load(Some(&p)).unwrap_err().exit, 4);
        let p = write(dir.path(), "a = 1\na = 2");
        assert_eq!(Resolver::load(Some(&p)).unwrap_err().exit, 4);
    }

    #[test]
    fn bad_numeric_value_fails_parse() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "a = soup");
        let mut r = Resolver::load(Some(&p)).unwrap();
        assert_eq!(r.get("a", None, 1u32).unwrap_err().exit, 4);
    }
}
