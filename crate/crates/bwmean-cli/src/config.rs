//! Config ingestion: flat `key = value` text with one `[section]` per
//! subcommand, merged under any command-line flags, then resolved into a
//! fully validated, canonically rendered key-value map. The resolved map is
//! what output headers embed, and re-ingesting it reproduces the run.

use std::collections::BTreeMap;
use std::path::Path;

use bwmean::cramer::Atom;

use crate::fail::{CliResult, Failure};

/// Keys of the `[section]` named `want`. Keys outside any section and
/// malformed lines are rejected; other sections are ignored.
pub fn parse_section(text: &str, want: &str) -> CliResult<BTreeMap<String, String>> {
    let mut current: Option<String> = None;
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(inner) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            current = Some(inner.trim().to_string());
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Failure::Config(format!(
                "config line {}: expected 'key = value' or '[section]', got '{line}'",
                i + 1
            )));
        };
        let Some(section) = current.as_deref() else {
            return Err(Failure::Config(format!(
                "config line {}: key '{}' appears before any [section]",
                i + 1,
                key.trim()
            )));
        };
        if section == want {
            let key = key.trim().to_string();
            if out.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(Failure::Config(format!(
                    "config line {}: duplicate key '{key}' in [{want}]",
                    i + 1
                )));
            }
        }
    }
    Ok(out)
}

pub fn read_section(path: &Path, want: &str) -> CliResult<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    parse_section(&text, want)
}

/// Typed, consuming view of a merged key-value map. Every key a subcommand
/// understands is taken out; whatever remains at `finish` is unknown and
/// rejected.
pub struct KvReader {
    map: BTreeMap<String, String>,
}

impl KvReader {
    pub fn new(map: BTreeMap<String, String>) -> KvReader {
        KvReader { map }
    }

    pub fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key)
    }

    pub fn require(&mut self, key: &str, cmd: &str) -> CliResult<String> {
        self.take(key).ok_or_else(|| {
            Failure::Config(format!(
                "missing required key '{key}' for {cmd} (flag --{key} or config entry)"
            ))
        })
    }

    pub fn f64_opt(&mut self, key: &str) -> CliResult<Option<f64>> {
        self.take(key).map(|v| parse_num(key, &v)).transpose()
    }

    pub fn f64_or(&mut self, key: &str, default: f64) -> CliResult<f64> {
        Ok(self.f64_opt(key)?.unwrap_or(default))
    }

    pub fn require_f64(&mut self, key: &str, cmd: &str) -> CliResult<f64> {
        let v = self.require(key, cmd)?;
        parse_num(key, &v)
    }

    pub fn u64_opt(&mut self, key: &str) -> CliResult<Option<u64>> {
        self.take(key).map(|v| parse_int(key, &v)).transpose()
    }

    pub fn u64_or(&mut self, key: &str, default: u64) -> CliResult<u64> {
        Ok(self.u64_opt(key)?.unwrap_or(default))
    }

    pub fn require_u64(&mut self, key: &str, cmd: &str) -> CliResult<u64> {
        let v = self.require(key, cmd)?;
        parse_int(key, &v)
    }

    pub fn u32_or(&mut self, key: &str, default: u32) -> CliResult<u32> {
        Ok(self.u64_or(key, default as u64)? as u32)
    }

    pub fn finish(self, cmd: &str) -> CliResult<()> {
        if self.map.is_empty() {
            return Ok(());
        }
        let keys: Vec<&str> = self.map.keys().map(String::as_str).collect();
        Err(Failure::Config(format!(
            "unknown key(s) for {cmd}: {}",
            keys.join(", ")
        )))
    }
}

pub fn parse_num(key: &str, v: &str) -> CliResult<f64> {
    v.parse()
        .map_err(|_| Failure::Config(format!("bad number for '{key}': '{v}'")))
}

pub fn parse_int<T: std::str::FromStr>(key: &str, v: &str) -> CliResult<T> {
    v.parse()
        .map_err(|_| Failure::Config(format!("bad integer for '{key}': '{v}'")))
}

pub fn parse_u64_list(key: &str, v: &str) -> CliResult<Vec<u64>> {
    v.split(',').map(|s| parse_int(key, s.trim())).collect()
}

pub fn parse_f64_list(key: &str, v: &str) -> CliResult<Vec<f64>> {
    v.split(',').map(|s| parse_num(key, s.trim())).collect()
}

pub fn render_u64_list(xs: &[u64]) -> String {
    xs.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
}

pub fn render_f64_list(xs: &[f64]) -> String {
    xs.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

/// Evaluation grid: the library default, or an inclusive arithmetic range
/// `lo:hi:step`.
#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    Default,
    Range { lo: f64, hi: f64, step: f64 },
}

impl GridSpec {
    pub fn parse(text: &str) -> CliResult<GridSpec> {
        if text == "default" {
            return Ok(GridSpec::Default);
        }
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(Failure::Config(format!(
                "bad grid '{text}': expected lo:hi:step or 'default'"
            )));
        }
        let lo = parse_num("grid lo", parts[0])?;
        let hi = parse_num("grid hi", parts[1])?;
        let step = parse_num("grid step", parts[2])?;
        if !(step > 0.0) || hi < lo {
            return Err(Failure::Config(format!(
                "bad grid '{text}': need step > 0 and hi >= lo"
            )));
        }
        Ok(GridSpec::Range { lo, hi, step })
    }

    pub fn render(&self) -> String {
        match self {
            GridSpec::Default => "default".into(),
            GridSpec::Range { lo, hi, step } => format!("{lo}:{hi}:{step}"),
        }
    }

    pub fn points(&self) -> Vec<f64> {
        match self {
            GridSpec::Default => bwmean::default_grid(),
            GridSpec::Range { lo, hi, step } => {
                let count = ((hi - lo) / step + 1e-9).floor() as usize;
                (0..=count).map(|i| lo + i as f64 * step).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutFormat {
    Csv,
    Json,
}

impl OutFormat {
    pub fn parse(text: &str) -> CliResult<OutFormat> {
        match text {
            "csv" => Ok(OutFormat::Csv),
            "json" => Ok(OutFormat::Json),
            other => Err(Failure::Config(format!(
                "bad format '{other}': expected csv or json"
            ))),
        }
    }

    pub fn render(&self) -> &'static str {
        match self {
            OutFormat::Csv => "csv",
            OutFormat::Json => "json",
        }
    }
}

/// Atom syntax for 1-D support lists: `e` and `pi` are symbolic, `a/b` is an
/// exact rational, a bare integer is exact, anything else is a float (which
/// can only ever earn a resolution-qualified verdict).
pub fn parse_atom(tok: &str) -> CliResult<Atom> {
    match tok {
        "e" => return Ok(Atom::euler()),
        "pi" => return Ok(Atom::pi()),
        _ => {}
    }
    if let Some((num, den)) = tok.split_once('/') {
        let num: i64 = parse_int("atom numerator", num.trim())?;
        let den: i64 = parse_int("atom denominator", den.trim())?;
        return Atom::rational(num, den).map_err(Failure::Domain);
    }
    if let Ok(k) = tok.parse::<i64>() {
        return Ok(Atom::integer(k));
    }
    Ok(Atom::float(parse_num("atom", tok)?))
}

pub fn parse_atom_list(v: &str) -> CliResult<Vec<Atom>> {
    v.split(',').map(|s| parse_atom(s.trim())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn section_parsing_scopes_and_rejects() {
        let text = "# comment\n[mc]\nseed = 7\nreps=100\n[expand]\nn = 5\n";
        let mc = parse_section(text, "mc").unwrap();
        assert_eq!(mc.get("seed").map(String::as_str), Some("7"));
        assert_eq!(mc.get("reps").map(String::as_str), Some("100"));
        assert!(!mc.contains_key("n"));
        assert!(parse_section("seed = 7\n", "mc").is_err());
        assert!(parse_section("[mc]\nseed = 1\nseed = 2\n", "mc").is_err());
        assert!(parse_section("[mc]\njust words\n", "mc").is_err());
    }

    #[test]
    fn value_after_first_equals_survives() {
        let text = "[expand]\ndist = family=exponential rate=1\n";
        let map = parse_section(text, "expand").unwrap();
        assert_eq!(
            map.get("dist").map(String::as_str),
            Some("family=exponential rate=1")
        );
    }

    #[test]
    fn grid_round_trip() {
        for text in ["default", "-8:8:0.01", "0:1:0.25"] {
            let g = GridSpec::parse(text).unwrap();
            assert_eq!(GridSpec::parse(&g.render()).unwrap(), g);
        }
        assert_eq!(
            GridSpec::parse("0:1:0.25").unwrap().points(),
            vec![0.0, 0.25, 0.5, 0.75, 1.0]
        );
        assert!(GridSpec::parse("1:0:0.1").is_err());
        assert!(GridSpec::parse("0:1:0").is_err());
        assert!(GridSpec::parse("0:1").is_err());
    }

    #[test]
    fn atom_syntax() {
        assert_eq!(parse_atom("e").unwrap(), Atom::euler());
        assert_eq!(parse_atom("pi").unwrap(), Atom::pi());
        assert_eq!(parse_atom("3").unwrap(), Atom::integer(3));
        assert_eq!(parse_atom("1/3").unwrap(), Atom::rational(1, 3).unwrap());
        assert_eq!(parse_atom("0.5").unwrap(), Atom::float(0.5));
        assert!(parse_atom("x").is_err());
        assert!(parse_atom("1/0").is_err());
    }

    #[test]
    fn unknown_keys_reported() {
        let mut map = BTreeMap::new();
        map.insert("n".to_string(), "5".to_string());
        map.insert("bogus".to_string(), "1".to_string());
        let mut r = KvReader::new(map);
        assert_eq!(r.require_u64("n", "expand").unwrap(), 5);
        let err = r.finish("expand").unwrap_err();
        assert!(format!("{err}").contains("bogus"));
    }
}
