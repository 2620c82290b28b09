//! Experiment configuration: built-in defaults, overlaid by a TOML file, overlaid by
//! dotted `key=value` overrides.

use std::path::{Path, PathBuf};

use qdecouple_core::channels::ChannelFamily;
use qdecouple_core::decode::ExponentDivisor;
use qdecouple_core::gaussian::TailBound;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Concentration,
    CodeRun,
    IidSweep,
    Uncertainty,
    Pgm,
    Typicality,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Concentration => "concentration",
            Self::CodeRun => "code-run",
            Self::IidSweep => "iid-sweep",
            Self::Uncertainty => "uncertainty",
            Self::Pgm => "pgm",
            Self::Typicality => "typicality",
        }
    }
}

/// Worker count; `auto` uses the global pool size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Workers {
    #[default]
    Auto,
    Count(usize),
}

impl Serialize for Workers {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Workers::Auto => s.serialize_str("auto"),
            Workers::Count(k) => s.serialize_u64(*k as u64),
        }
    }
}

impl<'de> Deserialize<'de> for Workers {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Count(u64),
            Name(String),
        }
        match Repr::deserialize(d)? {
            Repr::Count(0) => Err(serde::de::Error::custom("worker count must be >= 1")),
            Repr::Count(k) => Ok(Workers::Count(k as usize)),
            Repr::Name(s) if s == "auto" => Ok(Workers::Auto),
            Repr::Name(s) => Err(serde::de::Error::custom(format!(
                "expected \"auto\" or a positive integer, got \"{s}\""
            ))),
        }
    }
}

/// Seeds may exceed the TOML integer range, so strings are accepted too.
fn de_seed<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Int(u64),
        Text(String),
    }
    match Repr::deserialize(d)? {
        Repr::Int(v) => Ok(v),
        Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    /// One of `identity`, `dephasing`, `depolarizing`, `amplitude_damping`, `erasure`.
    pub family: String,
    /// `p` for dephasing, depolarizing and erasure; `g` for amplitude damping.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param: Option<f64>,
    /// Input dimension of one use.
    pub d: usize,
    /// Number of uses.
    pub n: usize,
}

impl ChannelSpec {
    pub fn family(&self) -> Result<ChannelFamily, HarnessError> {
        let need = |name: &str| {
            self.param.ok_or_else(|| HarnessError::Config {
                path: "channel.param".into(),
                message: format!("family `{name}` needs a parameter"),
            })
        };
        Ok(match self.family.as_str() {
            "identity" => ChannelFamily::Identity,
            "dephasing" => ChannelFamily::Dephasing { p: need("dephasing")? },
            "depolarizing" => ChannelFamily::Depolarizing {
                p: need("depolarizing")?,
            },
            "amplitude_damping" => ChannelFamily::AmplitudeDamping {
                g: need("amplitude_damping")?,
            },
            "erasure" => ChannelFamily::Erasure { p: need("erasure")? },
            other => {
                return Err(HarnessError::Config {
                    path: "channel.family".into(),
                    message: format!("unknown channel family `{other}`"),
                })
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeSpec {
    /// Code dimension; takes precedence over `rate`.
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Bits per channel use; `N = max(1, ⌊2^{n·rate}⌋)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    /// Typicality width for `iid-sweep`.
    pub delta: f64,
    pub exponent_divisor: ExponentDivisor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcentrationSpec {
    pub dims: Vec<usize>,
    pub epsilons: Vec<f64>,
    /// `A` is a projector of rank `rank_fraction · D`.
    pub rank_fraction: f64,
    pub copies: usize,
    pub bounds: Vec<TailBound>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IidSpec {
    pub ns: Vec<usize>,
    /// Upper limit on the output PGM errors at the largest `n`.
    pub pgm_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UncertaintySpec {
    pub max_dim_a: usize,
    pub max_dim_b: usize,
    pub max_dim_e: usize,
    pub max_code: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PgmSpec {
    /// Dimensions drawn from uniformly per trial.
    pub dims: Vec<usize>,
    /// Every trial whose index is `≡ symmetric_every − 1` modulo `symmetric_every` uses a
    /// unitarily related pure pair; 0 disables them.
    pub symmetric_every: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypicalitySpec {
    pub spectrum: Vec<f64>,
    pub ns: Vec<usize>,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(deserialize_with = "de_seed")]
    pub master_seed: u64,
    pub trials: u64,
    /// Index of the first trial; lets a run cover a slice of a larger sweep.
    #[serde(default)]
    pub first_trial: u64,
    pub output_path: PathBuf,
    #[serde(default)]
    pub workers: Workers,
    pub channel: ChannelSpec,
    pub code: CodeSpec,
    pub concentration: ConcentrationSpec,
    pub iid: IidSpec,
    pub uncertainty: UncertaintySpec,
    pub pgm: PgmSpec,
    pub typicality: TypicalitySpec,
}

impl ExperimentConfig {
    pub fn default_for(kind: ExperimentKind) -> Self {
        let (channel, n_code, trials) = match kind {
            ExperimentKind::CodeRun => (
                ChannelSpec {
                    family: "identity".into(),
                    param: None,
                    d: 16,
                    n: 1,
                },
                Some(4),
                50,
            ),
            ExperimentKind::IidSweep => (
                ChannelSpec {
                    family: "dephasing".into(),
                    param: Some(0.1),
                    d: 2,
                    n: 1,
                },
                None,
                20,
            ),
            _ => (
                ChannelSpec {
                    family: "identity".into(),
                    param: None,
                    d: 2,
                    n: 1,
                },
                None,
                match kind {
                    ExperimentKind::Concentration => 20_000,
                    ExperimentKind::Uncertainty | ExperimentKind::Pgm => 500,
                    _ => 1,
                },
            ),
        };
        Self {
            experiment: kind,
            master_seed: 1,
            trials,
            first_trial: 0,
            output_path: PathBuf::from("qdecouple-out"),
            workers: Workers::Auto,
            channel,
            code: CodeSpec {
                n: n_code,
                rate: None,
                delta: 0.15,
                exponent_divisor: ExponentDivisor::default(),
            },
            concentration: ConcentrationSpec {
                dims: vec![512],
                epsilons: vec![0.25],
                rank_fraction: 0.25,
                copies: 1,
                bounds: TailBound::ALL.to_vec(),
            },
            iid: IidSpec {
                ns: vec![2, 4, 6],
                pgm_threshold: 0.3,
            },
            uncertainty: UncertaintySpec {
                max_dim_a: 4,
                max_dim_b: 4,
                max_dim_e: 8,
                max_code: 4,
            },
            pgm: PgmSpec {
                dims: vec![2, 3],
                symmetric_every: 10,
            },
            typicality: TypicalitySpec {
                spectrum: vec![0.2, 0.8],
                ns: vec![8, 12, 16, 20],
                delta: 0.1,
            },
        }
    }

    /// Defaults for `kind`, overlaid by `file` (if any), then by `overrides`.
    pub fn load(
        kind: ExperimentKind,
        file: Option<&Path>,
        overrides: &[(String, toml::Value)],
    ) -> Result<Self, HarnessError> {
        let mut tree = toml::Value::try_from(Self::default_for(kind))
            .map_err(|e| HarnessError::Invalid(e.to_string()))?;
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
                path: path.to_path_buf(),
                source: e,
            })?;
            let user: toml::Value = toml::from_str(&text).map_err(|e| HarnessError::Config {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            if let Some(k) = user.get("experiment").and_then(|v| v.as_str()) {
                if k != kind.name() {
                    return Err(HarnessError::Config {
                        path: "experiment".into(),
                        message: format!("config is for `{k}` but `{}` was requested", kind.name()),
                    });
                }
            }
            merge(&mut tree, user);
        }
        for (key, value) in overrides {
            set_path(&mut tree, key, value.clone())?;
        }
        let cfg: Self = serde_path_to_error::deserialize(tree).map_err(|e| HarnessError::Config {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |path: &str, message: &str| {
            Err(HarnessError::Config {
                path: path.into(),
                message: message.into(),
            })
        };
        if self.trials < 1 {
            return bad("trials", "must be >= 1");
        }
        if self.channel.d < 1 || self.channel.n < 1 {
            return bad("channel", "d and n must be >= 1");
        }
        self.channel.family()?;
        if !(self.code.delta > 0.0) {
            return bad("code.delta", "must be > 0");
        }
        if self.code.n == Some(0) {
            return bad("code.N", "must be >= 1");
        }
        if self.concentration.dims.is_empty() || self.concentration.epsilons.is_empty() {
            return bad("concentration", "dims and epsilons must be non-empty");
        }
        if !(self.concentration.rank_fraction > 0.0 && self.concentration.rank_fraction <= 1.0) {
            return bad("concentration.rank_fraction", "must lie in (0, 1]");
        }
        if self.iid.ns.is_empty() || self.iid.ns.contains(&0) {
            return bad("iid.ns", "must be non-empty positive block lengths");
        }
        let u = &self.uncertainty;
        if u.max_dim_a < 1 || u.max_dim_b < 1 || u.max_dim_e < 1 || u.max_code < 1 {
            return bad("uncertainty", "all maxima must be >= 1");
        }
        if u.max_dim_b * u.max_dim_e < u.max_dim_a {
            return bad("uncertainty", "max_dim_b * max_dim_e must be >= max_dim_a");
        }
        if self.pgm.dims.is_empty() || self.pgm.dims.iter().any(|&d| d < 2) {
            return bad("pgm.dims", "dimensions must be >= 2");
        }
        if self.typicality.ns.is_empty() {
            return bad("typicality.ns", "must be non-empty");
        }
        Ok(())
    }

    /// Code dimension for `uses` channel uses.
    pub fn code_size(&self, uses: usize) -> Option<usize> {
        self.code.n.or_else(|| {
            self.code
                .rate
                .map(|r| ((uses as f64 * r).exp2().floor() as usize).max(1))
        })
    }
}

fn merge(base: &mut toml::Value, over: toml::Value) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_table() && v.is_table() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

fn set_path(tree: &mut toml::Value, key: &str, value: toml::Value) -> Result<(), HarnessError> {
    let mut node = tree;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let table = node.as_table_mut().ok_or_else(|| HarnessError::Config {
            path: parts[..i].join("."),
            message: "not a table".into(),
        })?;
        if i + 1 == parts.len() {
            table.insert(part.to_string(), value);
            return Ok(());
        }
        node = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    Ok(())
}

/// Parses `key=value`; the value is read as a TOML literal, falling back to a bare string.
pub fn parse_override(s: &str) -> Result<(String, toml::Value), HarnessError> {
    let (key, raw) = s.split_once('=').ok_or_else(|| HarnessError::Config {
        path: s.into(),
        message: "expected key=value".into(),
    })?;
    let key = key.trim();
    if key.is_empty() {
        return Err(HarnessError::Config {
            path: s.into(),
            message: "empty key".into(),
        });
    }
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    Ok((key.to_string(), value))
}

/// Seed override; seeds beyond the TOML integer range are carried as strings.
pub fn seed_value(seed: u64) -> toml::Value {
    i64::try_from(seed).map_or_else(|_| toml::Value::String(seed.to_string()), toml::Value::Integer)
}
