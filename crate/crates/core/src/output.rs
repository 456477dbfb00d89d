//! Text artifacts for scans. Every artifact starts with the resolved config so
//! a file on its own is enough to reproduce it.

use std::fmt::Write as _;

use serde::Serialize;

use crate::config::ResolvedConfig;
use crate::scanner::{BandReport, BracketFailure, PoleExclusion};
use crate::units::UnitSystem;

pub const SAMPLES_HEADER: &str = "e_internal,e_cm1,a,s_re,s_im,branch";

fn config_line(cfg: &ResolvedConfig) -> String {
    format!("# config: {}\n", cfg.to_json())
}

/// `samples.csv`: config comment, column header, one row per sample.
///
/// Floats use the shortest representation that round-trips, so the bytes
/// depend only on the values.
pub fn samples_csv(cfg: &ResolvedConfig, report: &BandReport) -> String {
    let u = UnitSystem::standard();
    let mut out = config_line(cfg);
    out.push_str(SAMPLES_HEADER);
    out.push('\n');
    for s in &report.samples {
        writeln!(
            out,
            "{:e},{:e},{:e},{:e},{:e},{}",
            s.e,
            u.internal_to_wavenumber(s.e),
            s.a,
            s.s.re,
            s.s.im,
            s.branch.as_str()
        )
        .unwrap();
    }
    out
}

#[derive(Debug, Serialize)]
struct BandOut {
    e_lo_cm1: f64,
    e_hi_cm1: f64,
    e_lo_internal: f64,
    e_hi_internal: f64,
}

#[derive(Debug, Serialize)]
struct BandsDoc<'a> {
    config: &'a ResolvedConfig,
    bands: Vec<BandOut>,
    pole_exclusions: &'a [PoleExclusion],
    failures: &'a [BracketFailure],
}

/// `bands.json`: the config plus band edges in both energy scales.
pub fn bands_json(cfg: &ResolvedConfig, report: &BandReport) -> String {
    let u = UnitSystem::standard();
    let doc = BandsDoc {
        config: cfg,
        bands: report
            .bands
            .iter()
            .map(|b| BandOut {
                e_lo_cm1: u.internal_to_wavenumber(b.e_lo),
                e_hi_cm1: u.internal_to_wavenumber(b.e_hi),
                e_lo_internal: b.e_lo,
                e_hi_internal: b.e_hi,
            })
            .collect(),
        pole_exclusions: &report.pole_exclusions,
        failures: &report.failures,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("bands serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{resolve, Preset, RawConfig};
    use crate::scanner::{band_report, ScanOptions};

    #[test]
    fn csv_layout_and_thread_independence() {
        let mut flags = RawConfig::default();
        flags.set("n_grid", "50");
        let cfg = resolve(Some(Preset::PaperBanded), None, &flags).unwrap();
        let spec = cfg.chain_spec().unwrap();
        let run = |threads| {
            let opts = ScanOptions {
                threads: Some(threads),
                ..ScanOptions::default()
            };
            band_report(
                &spec,
                cfg.internal.e_min,
                cfg.internal.e_max,
                cfg.n_grid,
                &opts,
            )
            .unwrap()
        };
        let one = samples_csv(&cfg, &run(1));
        let many = samples_csv(&cfg, &run(4));
        assert_eq!(one, many);
        let mut lines = one.lines();
        assert!(lines.next().unwrap().starts_with("# config: {"));
        assert_eq!(lines.next().unwrap(), SAMPLES_HEADER);
        assert_eq!(lines.clone().count(), 50);
        assert!(lines.all(|l| l.split(',').count() == 6));

        let json: serde_json::Value = serde_json::from_str(&bands_json(&cfg, &run(2))).unwrap();
        assert_eq!(json["config"]["preset"], "paper-banded");
        assert_eq!(json["bands"].as_array().unwrap().len(), 2);
    }
}
