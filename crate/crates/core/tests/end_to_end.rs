use proptest::prelude::*;
use statrs::function::erf::erfc;

use marc_sim::bitsource::{Packet, SourceId};
use marc_sim::channel::ChannelKind;
use marc_sim::destination::Topology;
use marc_sim::fec::CodeConfig;
use marc_sim::harness::{compare_schemes, run_point, run_sweep, simulate_packet_pair, SnrAxis, SweepConfig};
use marc_sim::modem::Modulation;
use marc_sim::relay::{RxMode, SchemeConfig};

fn q_func(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

fn p2p(modulation: Modulation, kind: ChannelKind) -> SweepConfig {
    let mut cfg = SweepConfig {
        scheme: SchemeConfig::point_to_point(),
        code: None,
        modulation,
        min_bit_errors: None,
        ..SweepConfig::default()
    };
    cfg.channel.kind = kind;
    cfg
}

#[test]
fn uncoded_qam_matches_gray_closed_form() {
    // Gray 4-QAM at Es/N0 = g has per-bit error Q(sqrt(g))
    let cfg =
        SweepConfig { snr_grid: vec![0.0, 3.0, 6.0], packets_max: 100, ..p2p(Modulation::Qam4, ChannelKind::Awgn) };
    for r in run_sweep(&cfg, 1).unwrap() {
        let expected = q_func(10f64.powf(r.snr_db / 10.0).sqrt());
        let (lo, hi) = r.ci();
        assert!(lo <= expected && expected <= hi, "{} dB: {} vs {expected}", r.snr_db, r.ber());
    }
}

#[test]
fn rayleigh_bpsk_matches_closed_form() {
    // average BER 0.5 (1 - sqrt(g / (1 + g))); bits within a packet share one
    // fade, so compare with a tolerance rather than a binomial interval
    let cfg = SweepConfig {
        snr_grid: vec![0.0, 5.0, 10.0],
        packets_max: 4000,
        packet_len: 50,
        ..p2p(Modulation::Bpsk, ChannelKind::RayleighBlock)
    };
    for r in run_sweep(&cfg, 0).unwrap() {
        let g = 10f64.powf(r.snr_db / 10.0);
        let expected = 0.5 * (1.0 - (g / (1.0 + g)).sqrt());
        assert!((r.ber() - expected).abs() < 0.1 * expected, "{} dB: {} vs {expected}", r.snr_db, r.ber());
    }
}

#[test]
fn eb_n0_axis_shifts_by_code_rate() {
    let cfg = SweepConfig { snr_axis: SnrAxis::EbN0, ..SweepConfig::default() };
    assert!((cfg.es_n0_db(5.0) - (5.0 - 10.0 * 2f64.log10())).abs() < 1e-12);
    let qam = SweepConfig { modulation: Modulation::Qam4, code: None, ..cfg };
    assert!((qam.es_n0_db(5.0) - (5.0 + 10.0 * 2f64.log10())).abs() < 1e-12);
}

#[test]
fn thread_count_does_not_change_results() {
    let cfg = SweepConfig {
        snr_grid: vec![0.0, 2.0],
        packets_max: 150,
        packet_len: 100,
        min_bit_errors: Some(40),
        scheme: SchemeConfig::adaptive(0.3),
        channel: marc_sim::channel::ChannelConfig { kind: ChannelKind::RayleighBlock, ..Default::default() },
        ..SweepConfig::default()
    };
    let one = run_sweep(&cfg, 1).unwrap();
    assert_eq!(one, run_sweep(&cfg, 3).unwrap());
    assert_eq!(one, run_sweep(&cfg, 8).unwrap());
}

#[test]
fn early_stop_counts_whole_packets() {
    let cfg = SweepConfig {
        packets_max: 1000,
        packet_len: 100,
        min_bit_errors: Some(250),
        ..p2p(Modulation::Bpsk, ChannelKind::Awgn)
    };
    let r = run_point(&cfg, 0, 0.0).unwrap();
    assert!(r.bit_errors >= 250);
    assert!(r.packets < 1000);
    assert_eq!(r.bits_simulated, r.packets * 100);
    // one packet fewer would not have reached the target
    let shorter = SweepConfig { packets_max: r.packets - 1, min_bit_errors: None, ..cfg };
    assert!(run_point(&shorter, 0, 0.0).unwrap().bit_errors < 250);
}

#[test]
fn schemes_share_source_and_direct_link_draws() {
    let base = SweepConfig {
        snr_grid: vec![2.0, 6.0],
        packets_max: 30,
        packet_len: 200,
        min_bit_errors: None,
        ..SweepConfig::default()
    };
    let configs: Vec<SweepConfig> =
        [SchemeConfig::analog_nc(RxMode::Orthogonal), SchemeConfig::df_nc(), SchemeConfig::qdf_nc(3)]
            .into_iter()
            .map(|scheme| SweepConfig { scheme, ..base.clone() })
            .collect();
    let table = compare_schemes(&configs, 0).unwrap();
    let direct: Vec<Vec<u64>> =
        table.curves.iter().map(|c| c.records.iter().map(|r| r.direct_errors).collect()).collect();
    assert!(direct.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn mismatched_comparisons_are_rejected() {
    let a = SweepConfig::default();
    let b = SweepConfig { master_seed: 2, ..a.clone() };
    assert!(compare_schemes(&[a, b], 1).is_err());
}

fn packet(bits: &[u8], source: SourceId) -> Packet {
    Packet::new(bits.to_vec(), source).unwrap()
}

fn noiseless_schemes() -> Vec<SchemeConfig> {
    vec![
        SchemeConfig::analog_nc(RxMode::Orthogonal),
        SchemeConfig::analog_nc(RxMode::Superposed),
        SchemeConfig::dmnc(RxMode::Orthogonal),
        SchemeConfig::dmnc(RxMode::Superposed),
        SchemeConfig::df_nc(),
        SchemeConfig::qdf_nc(2),
        SchemeConfig::adaptive(0.5),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn noiseless_recovery_is_exact(
        b1 in proptest::collection::vec(0u8..2, 16),
        b2 in proptest::collection::vec(0u8..2, 16),
        scheme in proptest::sample::select(noiseless_schemes()),
        qam in any::<bool>(),
        rayleigh in any::<bool>(),
        direct in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let mut cfg = SweepConfig {
            snr_grid: vec![f64::INFINITY],
            packet_len: 16,
            scheme,
            code: Some(CodeConfig::default()),
            modulation: if qam { Modulation::Qam4 } else { Modulation::Bpsk },
            topology: if direct { Topology::Direct } else { Topology::NoDirect },
            master_seed: seed,
            ..SweepConfig::default()
        };
        if rayleigh {
            cfg.channel.kind = ChannelKind::RayleighBlock;
        }
        let o = simulate_packet_pair(&cfg, f64::INFINITY, &packet(&b1, SourceId::S1), &packet(&b2, SourceId::S2)).unwrap();
        prop_assert_eq!(o.errors, 0);
        prop_assert_eq!(o.bits, if direct { 32 } else { 16 });
    }

    #[test]
    fn noiseless_outcome_is_symmetric_in_sources(
        b1 in proptest::collection::vec(0u8..2, 12),
        b2 in proptest::collection::vec(0u8..2, 12),
    ) {
        let cfg = SweepConfig { packet_len: 12, scheme: SchemeConfig::df_nc(), ..SweepConfig::default() };
        let a = simulate_packet_pair(&cfg, f64::INFINITY, &packet(&b1, SourceId::S1), &packet(&b2, SourceId::S2)).unwrap();
        let b = simulate_packet_pair(&cfg, f64::INFINITY, &packet(&b2, SourceId::S1), &packet(&b1, SourceId::S2)).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn wrong_packet_length_is_rejected() {
    let cfg = SweepConfig { packet_len: 8, ..SweepConfig::default() };
    let short = packet(&[0, 1, 1], SourceId::S1);
    assert!(simulate_packet_pair(&cfg, 0.0, &short, &short).is_err());
}
