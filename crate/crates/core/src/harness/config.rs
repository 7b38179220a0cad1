use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::engine::{CorrelationPolicy, EqualizerSpec, Schedule, SiseConfig};
use crate::signal::{normalize_channel, standard_channel};
use crate::trellis::coded_len;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    /// Cataloged channel name (`h1`..`h4`); ignored when `taps` is set.
    #[serde(default)]
    pub name: Option<String>,
    /// Raw taps, energy-normalized on load.
    #[serde(default)]
    pub taps: Option<Vec<f64>>,
    /// Receiver uses perturbed taps drawn once per packet.
    #[serde(default)]
    pub mismatch: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeSection {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "default_message_bits")]
    pub message_bits: usize,
    #[serde(default = "default_outer")]
    pub outer_iterations: usize,
}

fn default_message_bits() -> usize {
    2048
}

fn default_outer() -> usize {
    20
}

impl Default for CodeSection {
    fn default() -> Self {
        Self {
            enabled: false,
            message_bits: default_message_bits(),
            outer_iterations: default_outer(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiverSection {
    pub schedule: Schedule,
    pub main: EqualizerSpec,
    #[serde(default)]
    pub branches: Vec<EqualizerSpec>,
    #[serde(default = "default_self_iterations")]
    pub self_iterations: usize,
    /// Optional display name for CSV rows.
    #[serde(default)]
    pub label: Option<String>,
}

fn default_self_iterations() -> usize {
    2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// SNR points in dB under `convention`.
    pub snr_db: Vec<f64>,
    /// Defaults to Eb/N0 for coded runs and Es/N0 for uncoded runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convention: Option<SnrConvention>,
    /// Packet budget per SNR point.
    pub packets: usize,
    /// Stop a point once this many bit errors are counted.
    #[serde(default = "default_min_errors")]
    pub min_errors: usize,
    /// Symbols per uncoded packet.
    #[serde(default = "default_symbols")]
    pub symbols: usize,
    /// Codeword blocks averaged per EXIT trajectory.
    #[serde(default = "default_exit_blocks")]
    pub exit_blocks: usize,
}

fn default_min_errors() -> usize {
    100
}

fn default_symbols() -> usize {
    4096
}

fn default_exit_blocks() -> usize {
    100
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedSection {
    pub root: u64,
}

impl Default for SeedSection {
    fn default() -> Self {
        Self { root: 1 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub path: Option<PathBuf>,
}

/// Full description of one experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub channel: ChannelSection,
    #[serde(default)]
    pub code: CodeSection,
    pub receiver: ReceiverSection,
    pub sweep: SweepSection,
    #[serde(default)]
    pub seeds: SeedSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SnrConvention {
    EsN0,
    EbN0,
}

impl std::fmt::Display for SnrConvention {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SnrConvention::EsN0 => "EsN0",
            SnrConvention::EbN0 => "EbN0",
        })
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Normalized true channel taps.
    pub fn taps(&self) -> Result<Vec<f64>> {
        match (&self.channel.taps, &self.channel.name) {
            (Some(t), _) => normalize_channel(t),
            (None, Some(n)) => standard_channel(n),
            (None, None) => Err(Error::config("channel", "set either `name` or `taps`")),
        }
    }

    pub fn convention(&self) -> SnrConvention {
        if let Some(c) = self.sweep.convention {
            c
        } else if self.code.enabled {
            SnrConvention::EbN0
        } else {
            SnrConvention::EsN0
        }
    }

    /// Noise variance for unit-energy symbols at `snr_db` under the run's convention.
    pub fn noise_variance(&self, snr_db: f64) -> f64 {
        let snr = 10f64.powf(snr_db / 10.0);
        match self.convention() {
            SnrConvention::EsN0 => 1.0 / snr,
            SnrConvention::EbN0 => 1.0 / (0.5 * snr),
        }
    }

    /// Transmitted symbols per packet.
    pub fn packet_symbols(&self) -> usize {
        if self.code.enabled {
            coded_len(self.code.message_bits)
        } else {
            self.sweep.symbols
        }
    }

    pub fn sise(&self) -> SiseConfig {
        SiseConfig {
            main: self.receiver.main,
            branches: self.receiver.branches.clone(),
            self_iterations: self.receiver.self_iterations,
            schedule: self.receiver.schedule,
            correlation: CorrelationPolicy::Estimated,
        }
    }

    /// Display name of the receiver.
    pub fn label(&self) -> String {
        if let Some(l) = &self.receiver.label {
            return l.clone();
        }
        let main = self.receiver.main.label();
        let branches: Vec<String> = self.receiver.branches.iter().map(|b| b.label()).collect();
        match self.receiver.schedule {
            Schedule::Single => main,
            Schedule::Uncoded if branches.is_empty() => main,
            Schedule::Uncoded => format!("SISE({main},{})", branches.join(",")),
            Schedule::Sise1 => format!("SISE1({main},{})", branches.join(",")),
            Schedule::Sise2 => format!("SISE2({main},{})", branches.join(",")),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let taps = self.taps()?;
        if self.sweep.snr_db.is_empty() {
            return Err(Error::config("sweep.snr_db", "must not be empty"));
        }
        if self.sweep.packets == 0 {
            return Err(Error::config("sweep.packets", "must be at least 1"));
        }
        if self.sweep.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::config("sweep.snr_db", "values must be finite"));
        }
        if !self.code.enabled && self.sweep.symbols == 0 {
            return Err(Error::config("sweep.symbols", "must be at least 1"));
        }
        if self.code.enabled && self.code.message_bits == 0 {
            return Err(Error::config("code.message_bits", "must be at least 1"));
        }
        match (self.code.enabled, self.receiver.schedule) {
            (true, Schedule::Uncoded) => {
                return Err(Error::config("receiver.schedule", "coded runs need single, sise1 or sise2"))
            }
            (false, s) if s != Schedule::Uncoded => {
                return Err(Error::config("receiver.schedule", "uncoded runs need the uncoded schedule"))
            }
            _ => {}
        }
        self.sise().validate(taps.len() - 1)
    }
}
