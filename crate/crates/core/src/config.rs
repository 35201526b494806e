//! Plain-text experiment configuration: `key = value` lines grouped under
//! `[section]` headers, lists as comma-separated decimals. Parsing either
//! succeeds totally or fails with a line-numbered message; a SHA-256 digest of
//! the raw text ties every output file back to its configuration.

use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

use crate::chains::Kernel;
use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupSpec};
use crate::renewal::InterarrivalLaw;

/// A parsed configuration: sections of ordered `key = value` entries, each
/// entry remembering its source line for diagnostics.
#[derive(Debug, Clone, Default)]
pub struct Config {
    sections: BTreeMap<String, BTreeMap<String, (String, usize)>>,
    digest: String,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let mut sections: BTreeMap<String, BTreeMap<String, (String, usize)>> = BTreeMap::new();
        let mut current = String::new();
        sections.entry(current.clone()).or_default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| {
                        Error::Config(format!("line {line_no}: unterminated section header"))
                    })?
                    .trim();
                if name.is_empty() {
                    return Err(Error::Config(format!("line {line_no}: empty section name")));
                }
                current = name.to_string();
                sections.entry(current.clone()).or_default();
                continue;
            }
            let eq = line.find('=').ok_or_else(|| {
                Error::Config(format!("line {line_no}: expected `key = value` or `[section]`"))
            })?;
            let key = line[..eq].trim();
            let value = line[eq + 1..].trim();
            if key.is_empty() {
                return Err(Error::Config(format!("line {line_no}: empty key")));
            }
            let section = sections.get_mut(&current).unwrap();
            if section
                .insert(key.to_string(), (value.to_string(), line_no))
                .is_some()
            {
                return Err(Error::Config(format!(
                    "line {line_no}: duplicate key `{key}` in section `[{current}]`"
                )));
            }
        }
        let mut hasher = Sha256::new();
        hasher.update(text.as_bytes());
        let digest = hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect::<String>();
        Ok(Config { sections, digest })
    }

    pub fn load(path: &std::path::Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Config::parse(&text)
    }

    /// SHA-256 of the raw configuration text (hex).
    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.sections.get(section).is_some_and(|s| !s.is_empty())
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections
            .get(section)
            .and_then(|s| s.get(key))
            .map(|(v, _)| v.as_str())
    }

    fn require(&self, section: &str, key: &str) -> Result<&str> {
        self.get(section, key).ok_or_else(|| {
            Error::Config(format!("missing key `{key}` in section `[{section}]`"))
        })
    }

    fn line_of(&self, section: &str, key: &str) -> usize {
        self.sections
            .get(section)
            .and_then(|s| s.get(key))
            .map(|(_, l)| *l)
            .unwrap_or(0)
    }

    pub fn get_u64(&self, section: &str, key: &str) -> Result<u64> {
        let raw = self.require(section, key)?;
        raw.parse().map_err(|_| {
            Error::Config(format!(
                "line {}: `{key}` must be a nonnegative integer, got `{raw}`",
                self.line_of(section, key)
            ))
        })
    }

    pub fn get_u64_or(&self, section: &str, key: &str, default: u64) -> Result<u64> {
        match self.get(section, key) {
            Some(_) => self.get_u64(section, key),
            None => Ok(default),
        }
    }

    pub fn get_f64(&self, section: &str, key: &str) -> Result<f64> {
        let raw = self.require(section, key)?;
        raw.parse().map_err(|_| {
            Error::Config(format!(
                "line {}: `{key}` must be a decimal number, got `{raw}`",
                self.line_of(section, key)
            ))
        })
    }

    pub fn get_f64_or(&self, section: &str, key: &str, default: f64) -> Result<f64> {
        match self.get(section, key) {
            Some(_) => self.get_f64(section, key),
            None => Ok(default),
        }
    }

    pub fn get_str_or<'a>(&'a self, section: &str, key: &str, default: &'a str) -> &'a str {
        self.get(section, key).unwrap_or(default)
    }

    pub fn get_u64_list(&self, section: &str, key: &str) -> Result<Vec<u64>> {
        let raw = self.require(section, key)?;
        raw.split(',')
            .map(|t| {
                t.trim().parse().map_err(|_| {
                    Error::Config(format!(
                        "line {}: `{key}` must be a comma-separated integer list, got `{t}`",
                        self.line_of(section, key)
                    ))
                })
            })
            .collect()
    }

    pub fn get_f64_list(&self, section: &str, key: &str) -> Result<Vec<f64>> {
        let raw = self.require(section, key)?;
        raw.split(',')
            .map(|t| {
                t.trim().parse().map_err(|_| {
                    Error::Config(format!(
                        "line {}: `{key}` must be a comma-separated decimal list, got `{t}`",
                        self.line_of(section, key)
                    ))
                })
            })
            .collect()
    }
}

/// `[group]`: `p` and `exponents` (one cyclic p-power factor per entry).
pub fn load_group(cfg: &Config) -> Result<GroupSpec> {
    let p = cfg.get_u64("group", "p")?;
    let exponents: Vec<u32> = cfg
        .get_u64_list("group", "exponents")?
        .into_iter()
        .map(|e| e as u32)
        .collect();
    GroupSpec::new(p, &exponents)
}

/// `[automaton]`: `mu` and `nu` (default 1 each).
pub fn load_automaton(cfg: &Config, spec: GroupSpec) -> Result<crate::automaton::AutomatonParams> {
    let mu = cfg.get_u64_or("automaton", "mu", 1)?;
    let nu = cfg.get_u64_or("automaton", "nu", 1)?;
    crate::automaton::AutomatonParams::new(mu, nu, spec)
}

fn elements_from_indices(spec: &GroupSpec, idx: &[u64]) -> Result<Vec<GroupElement>> {
    idx.iter()
        .map(|&i| {
            if i >= spec.order() {
                Err(Error::Config(format!(
                    "element index {i} out of range for group of order {}",
                    spec.order()
                )))
            } else {
                Ok(spec.element_at(i))
            }
        })
        .collect()
}

/// `[kernel]`: `family = product | markov | geometric_mixture` plus the
/// family's tables. Group elements are written as their enumeration indices;
/// table rows use numbered keys (`row_0`, `row_1`, ... and
/// `table_0_row_0`, ...).
pub fn load_kernel(cfg: &Config, spec: &GroupSpec) -> Result<Kernel> {
    let family = cfg.require("kernel", "family")?;
    let q = spec.order() as usize;
    match family {
        "product" => match cfg.get("kernel", "probs") {
            Some(_) => Kernel::product(spec.clone(), cfg.get_f64_list("kernel", "probs")?),
            None => Ok(Kernel::uniform_product(spec.clone())),
        },
        "markov" => {
            let order = cfg.get_u64("kernel", "order")? as usize;
            let rows = q
                .checked_pow(order as u32)
                .ok_or_else(|| Error::Capacity("markov state space overflows".into()))?;
            let mut table = Vec::with_capacity(rows);
            for r in 0..rows {
                table.push(cfg.get_f64_list("kernel", &format!("row_{r}"))?);
            }
            let past_idx = match cfg.get("kernel", "initial_past") {
                Some(_) => cfg.get_u64_list("kernel", "initial_past")?,
                None => vec![0],
            };
            Kernel::markov(spec.clone(), order, table, elements_from_indices(spec, &past_idx)?)
        }
        "geometric_mixture" => {
            let delta0 = cfg.get_f64_or("kernel", "delta0", 0.05)?;
            let rho = cfg.get_f64_or("kernel", "rho", 0.5)?;
            let depth = cfg.get_u64_or("kernel", "tables", 1)? as usize;
            let mut tables = Vec::with_capacity(depth);
            for t in 0..depth {
                let mut table = Vec::with_capacity(q);
                for w in 0..q {
                    table.push(cfg.get_f64_list("kernel", &format!("table_{t}_row_{w}"))?);
                }
                tables.push(table);
            }
            let d = cfg.get_u64_or("kernel", "default_symbol", 0)?;
            let default_symbol = elements_from_indices(spec, &[d])?.pop().unwrap();
            Kernel::geometric_mixture(spec.clone(), delta0, rho, tables, default_symbol)
        }
        other => Err(Error::Config(format!(
            "line {}: unknown kernel family `{other}`",
            cfg.line_of("kernel", "family")
        ))),
    }
}

/// `[past]`: optional conditioning past, newest first, as element indices.
pub fn load_past(cfg: &Config, spec: &GroupSpec) -> Result<Vec<GroupElement>> {
    match cfg.get("past", "symbols") {
        Some(_) => elements_from_indices(spec, &cfg.get_u64_list("past", "symbols")?),
        None => Ok(Vec::new()),
    }
}

/// `[renewal]`: `family = geometric | two_point | pmf` with its parameters.
pub fn load_renewal_law(cfg: &Config) -> Result<InterarrivalLaw> {
    let law = match cfg.require("renewal", "family")? {
        "geometric" => InterarrivalLaw::Geometric { beta: cfg.get_f64("renewal", "beta")? },
        "two_point" => InterarrivalLaw::TwoPoint {
            k1: cfg.get_u64("renewal", "k1")? as usize,
            k2: cfg.get_u64("renewal", "k2")? as usize,
            p1: cfg.get_f64("renewal", "p1")?,
        },
        "pmf" => InterarrivalLaw::Pmf(cfg.get_f64_list("renewal", "pmf")?),
        other => {
            return Err(Error::Config(format!(
                "line {}: unknown interarrival family `{other}`",
                cfg.line_of("renewal", "family")
            )))
        }
    };
    law.validate()?;
    Ok(law)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
[group]
p = 2
exponents = 1

[kernel]
family = markov
order = 1
row_0 = 0.7, 0.3
row_1 = 0.3, 0.7
initial_past = 0

[experiment]
n = 1000
m_grid = 16, 64, 256
";

    #[test]
    fn parses_sections_and_lists() {
        let cfg = Config::parse(SAMPLE).unwrap();
        assert_eq!(cfg.get_u64("group", "p").unwrap(), 2);
        assert_eq!(cfg.get_u64_list("experiment", "m_grid").unwrap(), vec![16, 64, 256]);
        assert_eq!(cfg.get_f64_list("kernel", "row_0").unwrap(), vec![0.7, 0.3]);
        assert!(cfg.has_section("kernel"));
        assert!(!cfg.has_section("missing"));
    }

    #[test]
    fn digest_is_stable_and_sensitive() {
        let a = Config::parse(SAMPLE).unwrap();
        let b = Config::parse(SAMPLE).unwrap();
        assert_eq!(a.digest(), b.digest());
        let c = Config::parse(&SAMPLE.replace("0.7", "0.8")).unwrap();
        assert_ne!(a.digest(), c.digest());
        assert_eq!(a.digest().len(), 64);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = Config::parse("[group]\np ~ 2\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = Config::parse("[group\np = 2\n").unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
        let cfg = Config::parse("[group]\np = two\n").unwrap();
        let err = cfg.get_u64("group", "p").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn duplicate_keys_rejected() {
        assert!(Config::parse("a = 1\na = 2\n").is_err());
    }

    #[test]
    fn loads_group_and_kernel() {
        let cfg = Config::parse(SAMPLE).unwrap();
        let spec = load_group(&cfg).unwrap();
        assert_eq!(spec.order(), 2);
        let kernel = load_kernel(&cfg, &spec).unwrap();
        let one = spec.element(&[1]).unwrap();
        let p = kernel.eval(&one, &[one.clone()], crate::chains::TailMode::DefaultTail);
        assert!((p - 0.7).abs() < 1e-12);
    }

    #[test]
    fn missing_keys_are_reported() {
        let cfg = Config::parse("[kernel]\nfamily = markov\n").unwrap();
        let spec = GroupSpec::new(2, &[1]).unwrap();
        let err = load_kernel(&cfg, &spec).unwrap_err();
        assert!(err.to_string().contains("order"), "{err}");
    }

    #[test]
    fn renewal_laws_load() {
        let cfg = Config::parse("[renewal]\nfamily = geometric\nbeta = 0.3\n").unwrap();
        assert!(matches!(
            load_renewal_law(&cfg).unwrap(),
            InterarrivalLaw::Geometric { .. }
        ));
        let cfg = Config::parse("[renewal]\nfamily = pmf\npmf = 0.5, 0.25, 0.25\n").unwrap();
        assert!(load_renewal_law(&cfg).is_ok());
        let cfg = Config::parse("[renewal]\nfamily = zeta\n").unwrap();
        assert!(load_renewal_law(&cfg).is_err());
    }
}
