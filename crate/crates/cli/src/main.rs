//! `marc-sim`: run relay-scheme BER sweeps from the command line.
//!
//! Exit codes: 0 on success, 1 on I/O or simulation failure, 2 on usage or
//! configuration errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{ArgGroup, Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use marc_sim::channel::ChannelKind;
use marc_sim::destination::Topology;
use marc_sim::fec::CodeConfig;
use marc_sim::harness::{compare_schemes, grid, SnrAxis, SweepConfig};
use marc_sim::modem::Modulation;
use marc_sim::presets::{preset_configs, Overrides, Preset};
use marc_sim::relay::{BerProxy, RxMode, SchemeConfig, DEFAULT_QUANTIZER_BITS};
use marc_sim::report::{direct_only_row, emit_results, render, OutputFormat, ResultRow};
use marc_sim::Error;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SchemeArg {
    P2p,
    AnalogNc,
    Dmnc,
    DfNc,
    QdfNc,
    Adaptive,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PresetArg {
    Fig6,
    Fig7,
    Fig8,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ChannelArg {
    Awgn,
    Rayleigh,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModArg {
    Bpsk,
    Qam4,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RxModeArg {
    Orthogonal,
    Superposed,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TopologyArg {
    Direct,
    NoDirect,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AxisArg {
    Esn0,
    Ebn0,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ProxyArg {
    Hard,
    Aposteriori,
}

#[derive(Debug, Clone)]
enum CodeArg {
    Uncoded,
    Code(CodeConfig),
}

fn parse_code(s: &str) -> Result<CodeArg, String> {
    if s == "none" {
        return Ok(CodeArg::Uncoded);
    }
    s.parse().map(CodeArg::Code).map_err(|e: Error| e.to_string())
}

fn parse_pth(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

/// Monte Carlo BER sweeps for two-source relay network coding schemes.
#[derive(Debug, Parser)]
#[command(name = "marc-sim", version, arg_required_else_help = true)]
#[command(group(ArgGroup::new("what").required(true).args(["scheme", "preset", "from_manifest"])))]
struct Cli {
    /// Single scheme to simulate.
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,

    /// Predefined scheme comparison.
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,

    /// Re-run the configurations recorded in a run manifest.
    #[arg(long, value_name = "PATH")]
    from_manifest: Option<PathBuf>,

    /// First SNR point in dB (with --snr-stop).
    #[arg(long, allow_negative_numbers = true, requires_all = ["snr_stop"])]
    snr_start: Option<f64>,
    /// Last SNR point in dB, inclusive.
    #[arg(long, allow_negative_numbers = true, requires_all = ["snr_start"])]
    snr_stop: Option<f64>,
    #[arg(long, default_value_t = 2.0)]
    snr_step: f64,

    /// Which SNR the grid values denote.
    #[arg(long, value_enum)]
    snr_axis: Option<AxisArg>,

    /// Packets per SNR point (upper bound when early stopping is on).
    #[arg(long)]
    packets: Option<u64>,

    /// Information bits per source packet.
    #[arg(long)]
    packet_len: Option<usize>,

    /// Stop a point once this many bit errors are seen (0 disables).
    #[arg(long)]
    min_errors: Option<u64>,

    /// Adaptive threshold in [0, 1].
    #[arg(long, value_parser = parse_pth)]
    pth: Option<f64>,

    /// Relay quantizer resolution for QDF-NC and the adaptive scheme.
    #[arg(long)]
    quantizer_bits: Option<u32>,

    #[arg(long, value_enum)]
    channel: Option<ChannelArg>,

    #[arg(long = "mod", value_enum)]
    modulation: Option<ModArg>,

    /// Convolutional code as K:g1,g2 in octal (e.g. 6:23,35), or `none`.
    #[arg(long, value_parser = parse_code)]
    code: Option<CodeArg>,

    #[arg(long, value_enum)]
    rx_mode: Option<RxModeArg>,

    #[arg(long, value_enum)]
    topology: Option<TopologyArg>,

    /// BER proxy used by the adaptive relay.
    #[arg(long, value_enum)]
    proxy: Option<ProxyArg>,

    #[arg(long, env = "MARC_SIM_SEED")]
    seed: Option<u64>,

    /// Output file; results go to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,

    /// Worker threads (0 uses every core).
    #[arg(long, default_value_t = 0)]
    threads: usize,

    /// Recorded in the manifest; the channel models do not use it.
    #[arg(long)]
    doppler: Option<f64>,

    /// Recorded in the manifest; the channel models do not use it.
    #[arg(long)]
    slot_duration: Option<f64>,

    /// Add a direct-link-only row next to each relayed result.
    #[arg(long)]
    report_direct: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct RunManifest {
    version: String,
    seed: u64,
    timestamp_unix: u64,
    format: OutputFormat,
    report_direct: bool,
    outputs: Vec<PathBuf>,
    configs: Vec<SweepConfig>,
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidArgument(_) => Failure::Usage(e.to_string()),
            other => Failure::Run(other),
        }
    }
}

impl Cli {
    fn snr_grid(&self) -> Result<Option<Vec<f64>>, Failure> {
        match (self.snr_start, self.snr_stop) {
            (Some(a), Some(b)) => {
                let g = grid(a, b, self.snr_step);
                if g.is_empty() {
                    return Err(Failure::Usage(format!("empty SNR grid {a}..{b} step {}", self.snr_step)));
                }
                Ok(Some(g))
            }
            _ => Ok(None),
        }
    }

    fn code(&self) -> Option<Option<CodeConfig>> {
        self.code.clone().map(|c| match c {
            CodeArg::Uncoded => None,
            CodeArg::Code(c) => Some(c),
        })
    }

    fn overrides(&self) -> Result<Overrides, Failure> {
        Ok(Overrides {
            snr_grid: self.snr_grid()?,
            snr_axis: self.snr_axis.map(axis),
            packets: self.packets,
            packet_len: self.packet_len,
            min_errors: self.min_errors.map(|m| (m > 0).then_some(m)),
            seed: self.seed,
            p_th: self.pth,
            quantizer_bits: self.quantizer_bits,
            channel: self.channel.map(|c| match c {
                ChannelArg::Awgn => ChannelKind::Awgn,
                ChannelArg::Rayleigh => ChannelKind::RayleighBlock,
            }),
            code: None,
            topology: self.topology.map(|t| match t {
                TopologyArg::Direct => Topology::Direct,
                TopologyArg::NoDirect => Topology::NoDirect,
            }),
            proxy: self.proxy.map(proxy),
            doppler_hz: self.doppler,
            slot_duration: self.slot_duration,
        })
    }

    fn scheme(&self, kind: SchemeArg) -> Result<SchemeConfig, Failure> {
        let rx = self.rx_mode.map(rx_mode);
        let q = self.quantizer_bits.unwrap_or(DEFAULT_QUANTIZER_BITS);
        let mut s = match kind {
            SchemeArg::P2p => SchemeConfig::point_to_point(),
            SchemeArg::AnalogNc => SchemeConfig::analog_nc(rx.unwrap_or(RxMode::Orthogonal)),
            SchemeArg::Dmnc => SchemeConfig::dmnc(rx.unwrap_or(RxMode::Superposed)),
            SchemeArg::DfNc => SchemeConfig::df_nc(),
            SchemeArg::QdfNc => SchemeConfig::qdf_nc(q),
            SchemeArg::Adaptive => {
                let p = self.pth.ok_or_else(|| Failure::Usage("--scheme adaptive needs --pth".into()))?;
                let mut s = SchemeConfig::adaptive(p);
                s.quantizer_bits = q;
                s
            }
        };
        if let Some(rx) = rx {
            s.rx_mode = rx;
        }
        if let Some(p) = self.proxy {
            s.proxy = proxy(p);
        }
        Ok(s)
    }

    fn configs(&self) -> Result<Vec<SweepConfig>, Failure> {
        let o = self.overrides()?;
        let mut configs = if let Some(p) = self.preset {
            let preset = match p {
                PresetArg::Fig6 => Preset::Fig6,
                PresetArg::Fig7 => Preset::Fig7,
                PresetArg::Fig8 => Preset::Fig8,
            };
            let mut v = preset_configs(preset, &o);
            for c in &mut v {
                if let Some(code) = self.code() {
                    if c.code.is_some() || code.is_none() {
                        c.code = code;
                    }
                }
                if let Some(rx) = self.rx_mode {
                    c.scheme.rx_mode = rx_mode(rx);
                }
            }
            v
        } else if let Some(kind) = self.scheme {
            let scheme = self.scheme(kind)?;
            let d = SweepConfig::default();
            let code = self.code().unwrap_or_else(|| scheme.kind.needs_code().then(CodeConfig::default));
            vec![SweepConfig {
                label: None,
                snr_grid: o.snr_grid.unwrap_or(d.snr_grid),
                snr_axis: o.snr_axis.unwrap_or(d.snr_axis),
                packets_max: o.packets.unwrap_or(d.packets_max),
                min_bit_errors: o.min_errors.unwrap_or(d.min_bit_errors),
                scheme,
                code,
                channel: marc_sim::channel::ChannelConfig {
                    kind: o.channel.unwrap_or(d.channel.kind),
                    doppler_hz: o.doppler_hz,
                    ..d.channel
                },
                modulation: d.modulation,
                packet_len: o.packet_len.unwrap_or(d.packet_len),
                topology: o.topology.unwrap_or(d.topology),
                master_seed: o.seed.unwrap_or(d.master_seed),
                slot_duration: o.slot_duration,
            }]
        } else {
            unreachable!("clap enforces one of --scheme, --preset, --from-manifest");
        };
        if let Some(m) = self.modulation {
            for c in &mut configs {
                c.modulation = match m {
                    ModArg::Bpsk => Modulation::Bpsk,
                    ModArg::Qam4 => Modulation::Qam4,
                };
            }
        }
        for c in &configs {
            c.validate()?;
        }
        Ok(configs)
    }
}

fn axis(a: AxisArg) -> SnrAxis {
    match a {
        AxisArg::Esn0 => SnrAxis::EsN0,
        AxisArg::Ebn0 => SnrAxis::EbN0,
    }
}

fn proxy(p: ProxyArg) -> BerProxy {
    match p {
        ProxyArg::Hard => BerProxy::Hard,
        ProxyArg::Aposteriori => BerProxy::Aposteriori,
    }
}

fn rx_mode(r: RxModeArg) -> RxMode {
    match r {
        RxModeArg::Orthogonal => RxMode::Orthogonal,
        RxModeArg::Superposed => RxMode::Superposed,
    }
}

fn simulate(configs: &[SweepConfig], threads: usize, report_direct: bool) -> Result<Vec<ResultRow>, Failure> {
    let table = compare_schemes(configs, threads)?;
    let mut rows = Vec::new();
    for r in table.records() {
        rows.push(ResultRow::from(&r));
        if report_direct && r.direct_bits > 0 {
            rows.push(direct_only_row(&r));
        }
    }
    Ok(rows)
}

fn write_output(rows: &[ResultRow], format: OutputFormat, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => emit_results(rows, format, path)?,
        None => print!("{}", render(rows, format)?),
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(path) = &cli.from_manifest {
        let text =
            std::fs::read_to_string(path).map_err(|e| Failure::Run(Error::Io(format!("{}: {e}", path.display()))))?;
        let manifest: RunManifest = serde_json::from_str(&text)
            .map_err(|e| Failure::Usage(format!("invalid manifest {}: {e}", path.display())))?;
        for c in &manifest.configs {
            c.validate()?;
        }
        let rows = simulate(&manifest.configs, cli.threads, manifest.report_direct)?;
        return write_output(&rows, manifest.format, cli.out.as_deref());
    }

    let configs = cli.configs()?;
    let format = match cli.format {
        FormatArg::Csv => OutputFormat::Csv,
        FormatArg::Json => OutputFormat::Json,
    };
    let rows = simulate(&configs, cli.threads, cli.report_direct)?;
    write_output(&rows, format, cli.out.as_deref())?;

    if let Some(out) = &cli.out {
        let manifest = RunManifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: configs[0].master_seed,
            timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            format,
            report_direct: cli.report_direct,
            outputs: vec![out.clone()],
            configs,
        };
        let path = manifest_path(out);
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        std::fs::write(&path, json).map_err(|e| Failure::Run(Error::Io(format!("{}: {e}", path.display()))))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
