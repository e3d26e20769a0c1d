//! Experiment presets for the three scheme comparisons.
//!
//! * `fig6`: analog-NC against DmNC, uncoded 4-QAM over AWGN, scored on the
//!   relayed XOR message (no direct links).
//! * `fig7`: analog-NC, DF-NC and QDF-NC with the convolutional code and BPSK.
//! * `fig8`: analog-NC, QDF-NC and the adaptive scheme at thresholds
//!   0.2, 0.3 and 0.4.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelConfig, ChannelKind};
use crate::destination::Topology;
use crate::fec::CodeConfig;
use crate::harness::{grid, SnrAxis, SweepConfig};
use crate::modem::Modulation;
use crate::relay::{BerProxy, RxMode, SchemeConfig};
use crate::{Error, Result};

/// Adaptive thresholds compared by the `fig8` preset.
pub const FIG8_THRESHOLDS: [f64; 3] = [0.2, 0.3, 0.4];

/// Packets per SNR point for presets scored on both sources: 500 packets of
/// two 1000-bit messages, i.e. 10^6 bits per point.
pub const PRESET_PACKETS: u64 = 500;

/// Packets per SNR point for `fig6`, which scores one XOR message per packet.
pub const FIG6_PACKETS: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Fig6,
    Fig7,
    Fig8,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig6 => "fig6",
            Preset::Fig7 => "fig7",
            Preset::Fig8 => "fig8",
        }
    }

    /// Default SNR grid (Es/N0, dB).
    pub fn default_grid(self) -> Vec<f64> {
        match self {
            Preset::Fig6 | Preset::Fig7 => grid(0.0, 20.0, 2.0),
            // the proxy only crosses 0.4 near -15 dB Es/N0
            Preset::Fig8 => grid(-20.0, 10.0, 2.0),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig6" => Ok(Preset::Fig6),
            "fig7" => Ok(Preset::Fig7),
            "fig8" => Ok(Preset::Fig8),
            _ => Err(Error::Config(format!("unknown preset `{s}` (expected fig6, fig7 or fig8)"))),
        }
    }
}

/// Values that replace a preset's defaults when set.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub snr_grid: Option<Vec<f64>>,
    pub snr_axis: Option<SnrAxis>,
    pub packets: Option<u64>,
    pub packet_len: Option<usize>,
    /// `Some(None)` disables early stopping.
    pub min_errors: Option<Option<u64>>,
    pub seed: Option<u64>,
    /// Restricts `fig8` to a single adaptive threshold.
    pub p_th: Option<f64>,
    pub quantizer_bits: Option<u32>,
    pub channel: Option<ChannelKind>,
    pub code: Option<CodeConfig>,
    pub topology: Option<Topology>,
    pub proxy: Option<BerProxy>,
    pub doppler_hz: Option<f64>,
    pub slot_duration: Option<f64>,
}

fn base(preset: Preset, modulation: Modulation, code: Option<CodeConfig>, o: &Overrides) -> SweepConfig {
    let (packets, topology) = match preset {
        Preset::Fig6 => (FIG6_PACKETS, Topology::NoDirect),
        Preset::Fig7 | Preset::Fig8 => (PRESET_PACKETS, Topology::Direct),
    };
    SweepConfig {
        label: None,
        snr_grid: o.snr_grid.clone().unwrap_or_else(|| preset.default_grid()),
        snr_axis: o.snr_axis.unwrap_or(SnrAxis::EsN0),
        packets_max: o.packets.unwrap_or(packets),
        min_bit_errors: o.min_errors.unwrap_or(None),
        scheme: SchemeConfig::df_nc(),
        code: code.map(|c| o.code.clone().unwrap_or(c)),
        channel: ChannelConfig {
            kind: o.channel.unwrap_or(ChannelKind::Awgn),
            doppler_hz: o.doppler_hz,
            ..Default::default()
        },
        modulation,
        packet_len: o.packet_len.unwrap_or(crate::bitsource::DEFAULT_PACKET_LEN),
        topology: o.topology.unwrap_or(topology),
        master_seed: o.seed.unwrap_or(1),
        slot_duration: o.slot_duration,
    }
}

/// Sweep configurations of a preset, one per curve, sharing grid, channel
/// and seed.
pub fn preset_configs(preset: Preset, o: &Overrides) -> Vec<SweepConfig> {
    let q_bits = o.quantizer_bits.unwrap_or(crate::relay::DEFAULT_QUANTIZER_BITS);
    let with = |cfg: &SweepConfig, scheme: SchemeConfig| SweepConfig { scheme, ..cfg.clone() };
    match preset {
        Preset::Fig6 => {
            let cfg = base(preset, Modulation::Qam4, None, o);
            vec![
                with(&cfg, SchemeConfig::analog_nc(RxMode::Superposed)),
                with(&cfg, SchemeConfig::dmnc(RxMode::Superposed)),
            ]
        }
        Preset::Fig7 => {
            let cfg = base(preset, Modulation::Bpsk, Some(CodeConfig::default()), o);
            vec![
                with(&cfg, SchemeConfig::analog_nc(RxMode::Orthogonal)),
                with(&cfg, SchemeConfig::df_nc()),
                with(&cfg, SchemeConfig::qdf_nc(q_bits)),
            ]
        }
        Preset::Fig8 => {
            let cfg = base(preset, Modulation::Bpsk, Some(CodeConfig::default()), o);
            let thresholds: Vec<f64> = match o.p_th {
                Some(p) => vec![p],
                None => FIG8_THRESHOLDS.to_vec(),
            };
            let mut v =
                vec![with(&cfg, SchemeConfig::analog_nc(RxMode::Orthogonal)), with(&cfg, SchemeConfig::qdf_nc(q_bits))];
            for p in thresholds {
                let mut s = SchemeConfig::adaptive(p);
                s.quantizer_bits = q_bits;
                if let Some(proxy) = o.proxy {
                    s.proxy = proxy;
                }
                v.push(with(&cfg, s));
            }
            v
        }
    }
}
