//! TOML experiment description.

use std::fmt;
use std::path::Path;

use serde::Deserialize;

use crate::analysis::{DEFAULT_DRAWS_PER_STATE, DEFAULT_STATE_CAP};
use crate::channel::{ConstellationKind, CsiModel, LinkVarianceProfile};
use crate::engine::{EngineConfig, Protocol};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// A configuration problem, anchored to a source line when one applies.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum SnrGrid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLinks {
    #[serde(default = "one")]
    sr: f64,
    #[serde(default = "one")]
    rd: f64,
    #[serde(default = "one")]
    sd: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCsi {
    #[serde(default)]
    beta: f64,
    #[serde(default)]
    alpha: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDtmc {
    #[serde(default = "default_draws")]
    draws_per_state: usize,
    #[serde(default = "default_cap")]
    state_cap: usize,
    #[serde(default = "half")]
    rho: f64,
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

fn default_draws() -> usize {
    DEFAULT_DRAWS_PER_STATE
}

fn default_cap() -> usize {
    DEFAULT_STATE_CAP
}

impl Default for RawLinks {
    fn default() -> Self {
        Self {
            sr: 1.0,
            rd: 1.0,
            sd: 1.0,
        }
    }
}

impl Default for RawDtmc {
    fn default() -> Self {
        Self {
            draws_per_state: default_draws(),
            state_cap: default_cap(),
            rho: half(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default = "default_name")]
    name: String,
    #[serde(alias = "N")]
    relays: usize,
    #[serde(alias = "M_S")]
    ms: usize,
    #[serde(default = "default_u", alias = "U")]
    u: usize,
    #[serde(alias = "J")]
    j: usize,
    constellation: String,
    #[serde(default = "one", alias = "S")]
    switch: f64,
    snr_db: SnrGrid,
    packets: Option<usize>,
    #[serde(default = "default_spp")]
    symbols_per_packet: usize,
    protocols: Vec<String>,
    seeds: Vec<u64>,
    #[serde(default = "one")]
    r0: f64,
    #[serde(default)]
    links: RawLinks,
    #[serde(default)]
    csi: RawCsi,
    #[serde(default)]
    dtmc: RawDtmc,
}

fn default_name() -> String {
    "experiment".into()
}

fn default_u() -> usize {
    1
}

fn default_spp() -> usize {
    100
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DtmcSettings {
    pub draws_per_state: usize,
    pub state_cap: usize,
    pub rho: f64,
}

/// Validated experiment with defaults applied. Energies follow N0 = 1 and
/// E = 10^(SNR/10).
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub relays: usize,
    pub ms: usize,
    pub u: usize,
    /// Buffer size J in packets.
    pub j: usize,
    pub constellation: ConstellationKind,
    pub switch: f64,
    pub snr_db: Vec<f64>,
    /// Total packets; a packet-set carries M_S of them.
    pub packets: usize,
    pub symbols_per_packet: usize,
    pub links: LinkVarianceProfile<f64>,
    pub csi: CsiModel<f64>,
    pub protocols: Vec<Protocol>,
    pub seeds: Vec<u64>,
    pub r0: f64,
    pub dtmc: DtmcSettings,
}

impl ExperimentConfig {
    /// Buffer capacity L = J / M_S in packet-sets.
    pub fn buffer_sets(&self) -> usize {
        self.j / self.ms
    }

    pub fn packet_sets(&self) -> usize {
        self.packets / self.ms
    }

    pub fn energy(snr_db: f64) -> f64 {
        10f64.powf(snr_db / 10.0)
    }

    pub fn engine_config<T: Real>(&self, snr_db: f64) -> EngineConfig<T> {
        let mut c = EngineConfig::new(self.relays, self.ms, self.buffer_sets(), self.constellation, snr_db);
        c.u = self.u;
        c.packet_sets = self.packet_sets();
        c.symbols_per_packet = self.symbols_per_packet;
        c.profile = LinkVarianceProfile {
            sigma2_sr: T::lit(self.links.sigma2_sr),
            sigma2_rd: T::lit(self.links.sigma2_rd),
            sigma2_sd: T::lit(self.links.sigma2_sd),
        };
        c.csi = CsiModel {
            beta: T::lit(self.csi.beta),
            alpha: T::lit(self.csi.alpha),
        };
        c
    }
}

/// 1-based line of the first `key = ...` assignment (any of `keys`).
fn key_line(source: &str, keys: &[&str]) -> Option<usize> {
    source
        .lines()
        .position(|l| {
            let t = l.trim_start();
            keys.iter().any(|k| {
                t.strip_prefix(k)
                    .map(|rest| rest.trim_start().starts_with('='))
                    .unwrap_or(false)
            })
        })
        .map(|i| i + 1)
}

fn offset_line(source: &str, offset: usize) -> usize {
    source[..offset.min(source.len())].matches('\n').count() + 1
}

fn expand_grid(grid: SnrGrid) -> std::result::Result<Vec<f64>, String> {
    match grid {
        SnrGrid::List(v) => Ok(v),
        SnrGrid::Range { start, stop, step } => {
            if !(step > 0.0) || !start.is_finite() || !stop.is_finite() {
                return Err("SNR range needs finite bounds and a positive step".into());
            }
            let count = ((stop - start) / step + 1e-9).floor();
            if count < 0.0 {
                return Err("SNR range stop lies below start".into());
            }
            Ok((0..=count as usize).map(|k| start + k as f64 * step).collect())
        }
    }
}

/// Parses and validates a TOML experiment description.
pub fn parse_config(source: &str) -> std::result::Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(source).map_err(|e| ConfigError {
        line: e.span().map(|s| offset_line(source, s.start)),
        message: e.message().trim().to_string(),
    })?;
    let at = |keys: &[&str], message: String| ConfigError {
        line: key_line(source, keys),
        message,
    };

    if raw.ms == 0 {
        return Err(at(&["ms", "M_S"], "M_S must be at least 1".into()));
    }
    if raw.u == 0 {
        return Err(at(&["u", "U"], "U must be at least 1".into()));
    }
    if raw.j % raw.ms != 0 || raw.j == 0 {
        return Err(at(
            &["j", "J"],
            format!(
                "buffer size must hold whole packet-sets (J = {} with M_S = {})",
                raw.j, raw.ms
            ),
        ));
    }
    let constellation: ConstellationKind = raw
        .constellation
        .parse()
        .map_err(|e: Error| at(&["constellation"], e.to_string()))?;
    if !(raw.switch >= 0.0 && raw.switch.is_finite()) {
        return Err(at(&["switch", "S"], format!("switch must be >= 0, got {}", raw.switch)));
    }
    if !(raw.r0 > 0.0 && raw.r0.is_finite()) {
        return Err(at(&["r0"], format!("r0 must be > 0, got {}", raw.r0)));
    }
    let snr_db = expand_grid(raw.snr_db).map_err(|m| at(&["snr_db"], m))?;
    if snr_db.is_empty() || snr_db.iter().any(|s| !s.is_finite()) {
        return Err(at(
            &["snr_db"],
            "SNR grid must be a nonempty list of finite values".into(),
        ));
    }
    let packets = raw.packets.unwrap_or(10_000 * raw.ms);
    if packets == 0 || packets % raw.ms != 0 {
        return Err(at(
            &["packets"],
            format!("packets must be a positive multiple of M_S = {}", raw.ms),
        ));
    }
    if raw.symbols_per_packet == 0 {
        return Err(at(
            &["symbols_per_packet"],
            "symbols_per_packet must be positive".into(),
        ));
    }
    if raw.protocols.is_empty() {
        return Err(at(&["protocols"], "at least one protocol is required".into()));
    }
    let protocols = raw
        .protocols
        .iter()
        .map(|p| Protocol::parse_with_defaults(p, raw.switch, raw.r0))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| at(&["protocols"], e.to_string()))?;
    if raw.relays == 0 {
        if let Some(p) = protocols.iter().find(|p| p.uses_relays() && !p.has_direct_mode()) {
            return Err(at(&["relays", "N"], format!("{} needs at least one relay", p.name())));
        }
    }
    if raw.seeds.is_empty() {
        return Err(at(&["seeds"], "at least one seed is required".into()));
    }
    for (key, v) in [("sr", raw.links.sr), ("rd", raw.links.rd), ("sd", raw.links.sd)] {
        LinkVarianceProfile::new(v, 1.0, 1.0).map_err(|e| at(&[key], e.to_string()))?;
    }
    let links = LinkVarianceProfile::new(raw.links.sr, raw.links.rd, raw.links.sd)
        .map_err(|e| at(&["sr", "rd", "sd"], e.to_string()))?;
    CsiModel::new(raw.csi.beta, 0.0).map_err(|e| at(&["beta"], e.to_string()))?;
    let csi = CsiModel::new(raw.csi.beta, raw.csi.alpha).map_err(|e| at(&["alpha"], e.to_string()))?;
    if raw.dtmc.draws_per_state == 0 {
        return Err(at(&["draws_per_state"], "draws_per_state must be positive".into()));
    }
    if !(raw.dtmc.rho > 0.0 && raw.dtmc.rho <= 1.0) {
        return Err(at(&["rho"], format!("rho must lie in (0, 1], got {}", raw.dtmc.rho)));
    }

    Ok(ExperimentConfig {
        name: raw.name,
        relays: raw.relays,
        ms: raw.ms,
        u: raw.u,
        j: raw.j,
        constellation,
        switch: raw.switch,
        snr_db,
        packets,
        symbols_per_packet: raw.symbols_per_packet,
        links,
        csi,
        protocols,
        seeds: raw.seeds,
        r0: raw.r0,
        dtmc: DtmcSettings {
            draws_per_state: raw.dtmc.draws_per_state,
            state_cap: raw.dtmc.state_cap,
            rho: raw.dtmc.rho,
        },
    })
}

/// Reads and parses a config file; errors name the file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text).map_err(|source| Error::Config {
        path: path.to_path_buf(),
        source,
    })
}
