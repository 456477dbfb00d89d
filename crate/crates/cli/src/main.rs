use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nonad_band::chain::{fixed_point_surface_gf, gf_cell, iterate_chain};
use nonad_band::checks::run_checks;
use nonad_band::config::{resolve, Preset, RawConfig, ResolvedConfig};
use nonad_band::greens::{gf_eval, EnergyPoint, GfMethod, HarmonicSite};
use nonad_band::output::{bands_json, samples_csv};
use nonad_band::scanner::{band_report, ScanOptions};
use nonad_band::twostate::{denominator, g11, g12, CouplingSpec, HarmonicProvider};
use nonad_band::units::UnitSystem;
use nonad_band::{Error, Result};
use serde_json::json;

#[derive(Parser, Debug)]
#[command(
    name = "nonad-band",
    version,
    about = "Green's functions and band scans for delta-coupled harmonic chains"
)]
struct Cli {
    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Named parameter set: paper or paper-banded.
    #[arg(long, global = true)]
    preset: Option<String>,

    /// Flat key = value file layered over the preset.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true)]
    mass_amu: Option<String>,
    #[arg(long, global = true)]
    omega_cm1: Option<String>,
    #[arg(long, global = true)]
    site_spacing_angstrom: Option<String>,
    #[arg(long, global = true)]
    crossing_offset_angstrom: Option<String>,
    #[arg(long, global = true)]
    k0_value: Option<String>,
    #[arg(long, global = true)]
    k0_unit: Option<String>,
    #[arg(long, global = true)]
    eta_internal: Option<String>,
    #[arg(long, global = true)]
    emin_cm1: Option<String>,
    #[arg(long, global = true)]
    emax_cm1: Option<String>,
    #[arg(long, global = true)]
    n_grid: Option<String>,

    /// Directory for scan artifacts.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Also run the oracle self-checks and fail if any residual is too large.
    #[arg(long, global = true)]
    check: bool,

    /// Worker threads for scans.
    #[arg(long, global = true, env = "NONAD_BAND_THREADS")]
    threads: Option<usize>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    Closed,
    Spectral,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Uncoupled Green's function of the configured well.
    Gf {
        /// Field point in Å.
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        /// Source point in Å.
        #[arg(long, allow_hyphen_values = true)]
        x0: f64,
        #[arg(long)]
        e_cm1: f64,
        /// Broadening in internal energy units (defaults to eta_internal).
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long, value_enum, default_value_t = Method::Closed)]
        method: Method,
        /// Highest level kept by the spectral sum.
        #[arg(long, default_value_t = 10_000)]
        n_max: usize,
    },
    /// Two delta-coupled wells: denominator, G11 and G12 over the energy window.
    Twostate {
        /// Coupling in internal units (defaults to the configured one).
        #[arg(long)]
        k0: Option<f64>,
        /// Crossing point in Å (defaults to the crossing offset).
        #[arg(long, allow_hyphen_values = true)]
        xc: Option<f64>,
        /// Centre of the second well in Å (defaults to one site spacing).
        #[arg(long, allow_hyphen_values = true)]
        center2: Option<f64>,
        /// Frequency of the second well (defaults to omega_cm1).
        #[arg(long)]
        omega2_cm1: Option<f64>,
        /// Vertical shift of the second well.
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        offset2_cm1: f64,
        /// Field and source point in Å (default: the crossing point).
        #[arg(long, allow_hyphen_values = true)]
        x: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        x0: Option<f64>,
        /// Number of energies across [emin, emax].
        #[arg(long, default_value_t = 101)]
        n_e: usize,
    },
    /// Site-by-site surface Green's function of a finite chain.
    Converge {
        #[arg(long, default_value_t = 200)]
        n_sites: usize,
        /// Broadening in internal energy units.
        #[arg(long)]
        eta: f64,
        #[arg(long)]
        e_cm1: f64,
    },
    /// Sweep the discriminant, locate bands and write samples.csv and bands.json.
    Scan,
}

impl Common {
    fn flags(&self) -> RawConfig {
        let mut raw = RawConfig::default();
        for (key, value) in [
            ("mass_amu", &self.mass_amu),
            ("omega_cm1", &self.omega_cm1),
            ("site_spacing_angstrom", &self.site_spacing_angstrom),
            ("crossing_offset_angstrom", &self.crossing_offset_angstrom),
            ("k0_value", &self.k0_value),
            ("k0_unit", &self.k0_unit),
            ("eta_internal", &self.eta_internal),
            ("emin_cm1", &self.emin_cm1),
            ("emax_cm1", &self.emax_cm1),
            ("n_grid", &self.n_grid),
        ] {
            if let Some(v) = value {
                raw.set(key, v);
            }
        }
        raw
    }

    fn resolve(&self) -> Result<ResolvedConfig> {
        let preset = self
            .preset
            .as_deref()
            .map(str::parse::<Preset>)
            .transpose()?;
        let file = match &self.config {
            Some(path) => Some(RawConfig::parse(&fs::read_to_string(path)?)?),
            None => None,
        };
        resolve(preset, file.as_ref(), &self.flags())
    }
}

fn header(cfg: &ResolvedConfig) -> String {
    format!("# config: {}\n", cfg.to_json())
}

#[allow(clippy::too_many_arguments)]
fn run_gf(
    cfg: &ResolvedConfig,
    fmt: Format,
    x: f64,
    x0: f64,
    e_cm1: f64,
    eta: Option<f64>,
    method: Method,
    n_max: usize,
) -> Result<String> {
    let u = UnitSystem::standard();
    let site = cfg.base_site()?;
    let e = EnergyPoint::new(
        u.wavenumber_to_internal(e_cm1),
        eta.unwrap_or(cfg.eta_internal),
    )?;
    let method = match method {
        Method::Closed => GfMethod::Closed,
        Method::Spectral => GfMethod::Spectral { n_max },
    };
    // lengths are already internal: the length unit is the ångström
    let g = gf_eval(&site, x, x0, e, method)?;
    Ok(match fmt {
        Format::Csv => format!("{}re,im\n{:e},{:e}\n", header(cfg), g.re, g.im),
        Format::Json => json!({"config": cfg, "re": g.re, "im": g.im}).to_string() + "\n",
    })
}

#[allow(clippy::too_many_arguments)]
fn run_twostate(
    cfg: &ResolvedConfig,
    fmt: Format,
    k0: Option<f64>,
    xc: Option<f64>,
    center2: Option<f64>,
    omega2_cm1: Option<f64>,
    offset2_cm1: f64,
    x: Option<f64>,
    x0: Option<f64>,
    n_e: usize,
) -> Result<String> {
    if n_e < 2 {
        return Err(Error::InvalidParameter(format!(
            "n_e must be >= 2, got {n_e}"
        )));
    }
    let u = UnitSystem::standard();
    let p = &cfg.internal;
    let site1 = cfg.base_site()?;
    let omega2 = omega2_cm1
        .map(|w| u.wavenumber_to_internal(w))
        .unwrap_or(p.omega);
    let site2 = HarmonicSite::new(
        p.mass,
        omega2,
        center2.unwrap_or(p.spacing),
        u.wavenumber_to_internal(offset2_cm1),
    )?;
    let coupling = CouplingSpec::new(k0.unwrap_or(p.k0), xc.unwrap_or(p.crossing_offset))?;
    let (x, x0) = (x.unwrap_or(coupling.xc), x0.unwrap_or(coupling.xc));
    let (s1, s2) = (
        HarmonicProvider::closed(site1),
        HarmonicProvider::closed(site2),
    );

    let mut rows = Vec::with_capacity(n_e);
    for i in 0..n_e {
        let e_cm1 = cfg.emin_cm1 + (cfg.emax_cm1 - cfg.emin_cm1) * i as f64 / (n_e - 1) as f64;
        let e = EnergyPoint::new(u.wavenumber_to_internal(e_cm1), cfg.eta_internal)?;
        let row = (|| -> Result<_> {
            Ok((
                denominator(&s1, &s2, &coupling, e)?,
                g11(&s1, &s2, &coupling, x, x0, e)?,
                g12(&s1, &s2, &coupling, x, x0, e)?,
            ))
        })();
        match row {
            Ok((den, a, b)) => rows.push((e_cm1, den, a, b)),
            // energies on top of a level carry no finite value
            Err(Error::PoleProximity { .. }) => continue,
            Err(err) => return Err(err),
        }
    }
    Ok(match fmt {
        Format::Csv => {
            let mut out = header(cfg);
            out.push_str("e_cm1,den_re,den_im,g11_re,g11_im,g12_re,g12_im\n");
            for (e, den, a, b) in rows {
                writeln!(
                    out,
                    "{e:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                    den.re, den.im, a.re, a.im, b.re, b.im
                )
                .unwrap();
            }
            out
        }
        Format::Json => {
            let rows: Vec<_> = rows
                .iter()
                .map(|(e, den, a, b)| {
                    json!({"e_cm1": e, "den_re": den.re, "den_im": den.im,
                           "g11_re": a.re, "g11_im": a.im, "g12_re": b.re, "g12_im": b.im})
                })
                .collect();
            json!({"config": cfg, "k0": coupling.k0, "xc": coupling.xc, "rows": rows}).to_string()
                + "\n"
        }
    })
}

fn run_converge(
    cfg: &ResolvedConfig,
    fmt: Format,
    n_sites: usize,
    eta: f64,
    e_cm1: f64,
) -> Result<String> {
    let u = UnitSystem::standard();
    let spec = cfg.chain_spec()?;
    let e = EnergyPoint::new(u.wavenumber_to_internal(e_cm1), eta)?;
    let history = iterate_chain(&spec, e, n_sites)?;
    let fixed = fixed_point_surface_gf(&gf_cell(&spec.base_site, &spec, e)?, spec.k0)?;
    let deltas: Vec<Option<f64>> = std::iter::once(None)
        .chain(history.windows(2).map(|w| Some((w[1] - w[0]).norm())))
        .collect();
    Ok(match fmt {
        Format::Csv => {
            let mut out = header(cfg);
            out.push_str("n,s_re,s_im,delta\n");
            for (i, (s, d)) in history.iter().zip(&deltas).enumerate() {
                let d = d.map(|d| format!("{d:e}")).unwrap_or_default();
                writeln!(out, "{},{:e},{:e},{d}", i + 1, s.re, s.im).unwrap();
            }
            writeln!(
                out,
                "# fixed_point: {:e},{:e},{}",
                fixed.value.re,
                fixed.value.im,
                fixed.branch.as_str()
            )
            .unwrap();
            out
        }
        Format::Json => {
            let rows: Vec<_> = history
                .iter()
                .zip(&deltas)
                .enumerate()
                .map(|(i, (s, d))| json!({"n": i + 1, "s_re": s.re, "s_im": s.im, "delta": d}))
                .collect();
            json!({"config": cfg, "eta": eta, "rows": rows,
                   "fixed_point": {"re": fixed.value.re, "im": fixed.value.im, "branch": fixed.branch.as_str()}})
            .to_string()
                + "\n"
        }
    })
}

fn run_scan(
    cfg: &ResolvedConfig,
    fmt: Format,
    out_dir: &Path,
    threads: Option<usize>,
) -> Result<String> {
    let spec = cfg.chain_spec()?;
    let opts = ScanOptions {
        threads,
        ..ScanOptions::default()
    };
    let report = band_report(
        &spec,
        cfg.internal.e_min,
        cfg.internal.e_max,
        cfg.n_grid,
        &opts,
    )?;
    fs::create_dir_all(out_dir)?;
    let samples_path = out_dir.join("samples.csv");
    let bands_path = out_dir.join("bands.json");
    fs::write(&samples_path, samples_csv(cfg, &report))?;
    fs::write(&bands_path, bands_json(cfg, &report))?;

    let u = UnitSystem::standard();
    let bands: Vec<(f64, f64)> = report
        .bands
        .iter()
        .map(|b| {
            (
                u.internal_to_wavenumber(b.e_lo),
                u.internal_to_wavenumber(b.e_hi),
            )
        })
        .collect();
    Ok(match fmt {
        Format::Csv => {
            let mut out = String::from("e_lo_cm1,e_hi_cm1\n");
            for (lo, hi) in bands {
                writeln!(out, "{lo:e},{hi:e}").unwrap();
            }
            out
        }
        Format::Json => json!({
            "samples": samples_path.display().to_string(),
            "bands_file": bands_path.display().to_string(),
            "bands": bands.iter().map(|(lo, hi)| json!({"e_lo_cm1": lo, "e_hi_cm1": hi})).collect::<Vec<_>>(),
            "bracket_failures": report.failures.len(),
        })
        .to_string()
            + "\n",
    })
}

fn run(cli: &Cli) -> Result<bool> {
    let c = &cli.common;
    let cfg = c.resolve()?;
    let out = match &cli.command {
        Command::Gf {
            x,
            x0,
            e_cm1,
            eta,
            method,
            n_max,
        } => run_gf(&cfg, c.format, *x, *x0, *e_cm1, *eta, *method, *n_max)?,
        Command::Twostate {
            k0,
            xc,
            center2,
            omega2_cm1,
            offset2_cm1,
            x,
            x0,
            n_e,
        } => run_twostate(
            &cfg,
            c.format,
            *k0,
            *xc,
            *center2,
            *omega2_cm1,
            *offset2_cm1,
            *x,
            *x0,
            *n_e,
        )?,
        Command::Converge {
            n_sites,
            eta,
            e_cm1,
        } => run_converge(&cfg, c.format, *n_sites, *eta, *e_cm1)?,
        Command::Scan => run_scan(&cfg, c.format, &c.out_dir, c.threads)?,
    };
    print!("{out}");
    if c.check {
        let report = run_checks(&cfg)?;
        eprintln!(
            "{}",
            serde_json::to_string(&report).expect("report serializes")
        );
        return Ok(report.passed);
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!(
                "{}",
                json!({"error": "check_failed", "message": "oracle residuals above tolerance"})
            );
            ExitCode::from(2)
        }
        Err(err) => {
            let details = match &err {
                Error::Config(list) => json!(list),
                _ => serde_json::Value::Null,
            };
            eprintln!(
                "{}",
                json!({"error": err.kind(), "message": err.to_string(), "details": details})
            );
            ExitCode::FAILURE
        }
    }
}
