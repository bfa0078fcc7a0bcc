//! `key = value` experiment configuration with per-command key schemas.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

pub struct Key {
    pub name: &'static str,
    pub default: Option<&'static str>,
    pub help: &'static str,
}

const fn key(name: &'static str, default: Option<&'static str>, help: &'static str) -> Key {
    Key { name, default, help }
}

pub struct CommandSpec {
    pub name: &'static str,
    pub about: &'static str,
    pub keys: &'static [Key],
}

/// Keys every command accepts.
pub const GLOBAL_KEYS: &[Key] = &[
    key("seed", Some("1"), "base seed for every random stream"),
    key("out", None, "directory for the CSV and summary artifacts"),
    key("format", Some("text"), "stdout format: text or csv"),
];

const F_ROOF: &str = "jump=1; c0=1; k:1=0,0.1";
const G_ROOF: &str = "jump=2; c0=1; k:1=0.1,0";

pub const COMMANDS: &[CommandSpec] = &[
    CommandSpec {
        name: "cf",
        about: "continued fraction digits and denominator table",
        keys: &[
            key("real", None, "decimal in (0,1); precision follows the digits written"),
            key("digits", None, "explicit partial quotients a1,a2,..."),
            key("depth", Some("10"), "number of digits"),
            key("precision", None, "override the precision of --real in bits"),
        ],
    },
    CommandSpec {
        name: "ostrowski",
        about: "greedy Ostrowski expansion of an integer",
        keys: &[key("n", None, "positive integer"), key("alpha", Some("cf:[1]"), "frequency")],
    },
    CommandSpec {
        name: "dk-audit",
        about: "Denjoy-Koksma deviations at denominator times",
        keys: &[
            key("alpha", Some("cf:[1]"), "frequency"),
            key("roof", Some("jump=1; c0=0"), "roof function"),
            key("max-index", Some("12"), "largest denominator index"),
            key("samples", Some("10000"), "sampled base points"),
        ],
    },
    CommandSpec {
        name: "flow-orbit",
        about: "special flow orbit on a time grid",
        keys: &[
            key("alpha", Some("cf:[1]"), "frequency"),
            key("roof", Some(F_ROOF), "roof function"),
            key("x", Some("0.3"), "base point"),
            key("s", Some("0.2"), "height"),
            key("horizon", Some("20"), "final time"),
            key("step", Some("0.5"), "time step"),
        ],
    },
    CommandSpec {
        name: "trichotomy",
        about: "which clause of the three-way alternative holds for an arc",
        keys: &[
            key("beta", Some("cf:[1]"), "frequency"),
            key("y", None, "arc start"),
            key("y-prime", None, "arc end"),
            key("n", None, "denominator index"),
        ],
    },
    CommandSpec {
        name: "match",
        about: "matching-window audit over sampled pairs",
        keys: &[
            key("preset", Some("acceptance-unbounded"), "acceptance-unbounded, acceptance-bounded or contrast-equal-jumps"),
            key("trials", Some("200"), "number of sampled pairs"),
            key("epsilon", Some("0.05"), "epsilon"),
            key("c", Some("0.05"), "scale constant c"),
            key("mode", Some("desk"), "desk or paper constants"),
            key("alpha", None, "override the first frequency"),
            key("beta", None, "override the second frequency"),
            key("f", None, "override the first roof"),
            key("g", None, "override the second roof"),
        ],
    },
    CommandSpec {
        name: "lift",
        about: "continuous-time lift of one matching window",
        keys: &[
            key("preset", Some("acceptance-unbounded"), "preset name"),
            key("trial", Some("0"), "trial index"),
            key("epsilon", Some("0.05"), "epsilon"),
            key("c", Some("0.05"), "scale constant c"),
            key("mode", Some("desk"), "desk or paper constants"),
        ],
    },
    CommandSpec {
        name: "coboundary",
        about: "equal-jump / unequal-jump dichotomy for two roofs",
        keys: &[
            key("alpha", Some("cf:[1]"), "frequency"),
            key("psi", Some("jump=1; c0=1; k:1=0.1,0.1"), "first roof"),
            key("phi", Some(F_ROOF), "second roof"),
            key("max-harmonic", Some("16"), "truncation of the Fourier solve"),
        ],
    },
    CommandSpec {
        name: "joining",
        about: "product Birkhoff correlations with a diagonal control",
        keys: &[
            key("alpha", Some("cf:[1]"), "first frequency"),
            key("beta", Some("cf:[1]"), "second frequency"),
            key("roof-a", Some(F_ROOF), "first roof"),
            key("roof-b", Some(G_ROOF), "second roof"),
            key("harmonic", Some("1"), "observables are centered cos(2πkx)"),
            key("horizon", Some("10000"), "time horizon T"),
            key("samples", Some("20"), "independent starts"),
            key("control", Some("true"), "also run the diagonal control"),
        ],
    },
];

pub fn command_spec(name: &str) -> Option<&'static CommandSpec> {
    COMMANDS.iter().find(|c| c.name == name)
}

/// A command name and its explicitly set keys.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExperimentConfig {
    pub command: String,
    pub values: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn new(command: &str) -> Result<Self, ConfigError> {
        if command_spec(command).is_none() {
            return err(format!("unknown command {command:?}"));
        }
        Ok(ExperimentConfig { command: command.to_string(), values: BTreeMap::new() })
    }

    pub fn spec(&self) -> &'static CommandSpec {
        command_spec(&self.command).expect("validated on construction")
    }

    fn find_key(&self, name: &str) -> Option<&'static Key> {
        GLOBAL_KEYS.iter().chain(self.spec().keys).find(|k| k.name == name)
    }

    pub fn set(&mut self, name: &str, value: &str) -> Result<(), ConfigError> {
        if self.find_key(name).is_none() {
            return err(format!("unknown key {name:?} for command {}", self.command));
        }
        self.values.insert(name.to_string(), value.trim().to_string());
        Ok(())
    }

    /// Explicit value or the schema default.
    pub fn raw(&self, name: &str) -> Option<&str> {
        let key = self.find_key(name).unwrap_or_else(|| panic!("key {name} not in schema"));
        self.values.get(name).map(String::as_str).or(key.default)
    }

    pub fn get<T: FromStr>(&self, name: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.raw(name)
            .map(|v| v.parse::<T>().map_err(|e| ConfigError(format!("key {name} = {v:?}: {e}"))))
            .transpose()
    }

    pub fn require<T: FromStr>(&self, name: &str) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.get(name)?.ok_or_else(|| ConfigError(format!("missing required key {name}")))
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("command = {}\n", self.command);
        for (k, v) in &self.values {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }
}

impl FromStr for ExperimentConfig {
    type Err = ConfigError;

    /// Lines `key = value`; blank lines and lines starting with `#` are skipped.
    fn from_str(text: &str) -> Result<Self, ConfigError> {
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return err(format!("line {}: expected key = value", i + 1));
            };
            pairs.push((i + 1, k.trim().to_string(), v.trim().to_string()));
        }
        let Some(pos) = pairs.iter().position(|(_, k, _)| k == "command") else {
            return err("no command key");
        };
        let (_, _, command) = pairs.remove(pos);
        let mut cfg = ExperimentConfig::new(&command)?;
        for (line, k, v) in pairs {
            if cfg.values.contains_key(&k) {
                return err(format!("line {line}: duplicate key {k:?}"));
            }
            cfg.set(&k, &v).map_err(|e| ConfigError(format!("line {line}: {}", e.0)))?;
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_examples() {
        let cfg: ExperimentConfig = "# a comment\ncommand = cf\n\nreal = 0.6180339887\ndepth=8\n".parse().unwrap();
        assert_eq!(cfg.command, "cf");
        assert_eq!(cfg.require::<usize>("depth").unwrap(), 8);
        assert_eq!(cfg.get::<u64>("seed").unwrap(), Some(1));
        assert_eq!(cfg.get::<String>("digits").unwrap(), None);
        assert!("".parse::<ExperimentConfig>().is_err());
        assert!("command = cf\nbogus = 1".parse::<ExperimentConfig>().is_err());
        assert!("command = nope".parse::<ExperimentConfig>().is_err());
        assert!("command = cf\ndepth = 1\ndepth = 2".parse::<ExperimentConfig>().is_err());
        let roof: ExperimentConfig = "command = dk-audit\nroof = jump=1; c0=0.5".parse().unwrap();
        assert_eq!(roof.raw("roof"), Some("jump=1; c0=0.5"));
    }

    #[test]
    fn round_trip() {
        for spec in COMMANDS {
            let mut cfg = ExperimentConfig::new(spec.name).unwrap();
            for (i, k) in spec.keys.iter().enumerate() {
                cfg.set(k.name, &format!("v{i} = x")).unwrap();
            }
            cfg.set("seed", "7").unwrap();
            let back: ExperimentConfig = cfg.to_text().parse().unwrap();
            assert_eq!(back, cfg);
        }
    }
}
