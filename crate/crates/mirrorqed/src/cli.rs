//! Command-line front end.

use std::f64::consts::PI;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use mirrorqed_core::emission::{integrate, rabi_envelope, EmissionConfig};
use mirrorqed_core::grid::{logspace, refine, transmon_default, Refinement};
use mirrorqed_core::hopfield::{self, build_with_couplings, diagonalize};
use mirrorqed_core::params::{cc_fraction_to_ratio, dimensionless, Ratios};
use mirrorqed_core::poles::{self, find_poles, rabi_row, Rect};
use mirrorqed_core::scattering::{reflection_open, transmission_open, trapped_field};
use mirrorqed_core::{CircuitParams, Convention};

use crate::flags::{parse_positive_list, parse_range, parse_window, positive, FlagError, Range};
use crate::manifest::{self, ParamRecord, RunManifest};
use crate::output::{write_bytes, write_csv, Artifact, Cell};
use crate::plot::{heatmap, line_plot, Axes, Series};
use crate::presets::Preset;

pub const THREADS_ENV: &str = "MIRRORQED_THREADS";

/// Most points drawn per curve in the SVG figures; the CSVs keep everything.
const PLOT_POINTS: usize = 4000;

#[derive(Debug, Parser)]
#[command(
    name = "mirrorqed",
    version,
    about = "Linear transmon in front of a mirror on a transmission line"
)]
pub struct Cli {
    /// Directory for CSV, SVG and manifest output.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// |r| on the open line for a family of Z_0/Z_J.
    Reflection(ReflectionArgs),
    /// Field |f| between transmon and mirror; `--heatmap` sweeps the delay.
    Response(ResponseArgs),
    /// Time-domain emission of an initially excited transmon.
    Emission(EmissionArgs),
    /// Poles of the response and the Rabi splitting table.
    Poles(PolesArgs),
    /// Hopfield eigenfrequencies of the effective multimode model.
    Hopfield(HopfieldArgs),
}

/// SI input. Frequencies and times in the output stay in units of ω_J.
#[derive(Debug, Clone, Default, Args)]
pub struct SiArgs {
    /// Read the circuit from --c-c, --c-j, --l-j, --z0-ohm, --delay-s.
    #[arg(long)]
    pub si: bool,
    /// Coupling capacitance in farad.
    #[arg(long, requires = "si")]
    pub c_c: Option<f64>,
    /// Junction capacitance in farad.
    #[arg(long, requires = "si")]
    pub c_j: Option<f64>,
    /// Josephson inductance in henry.
    #[arg(long, requires = "si")]
    pub l_j: Option<f64>,
    /// Line impedance in ohm; a comma-separated list for `reflection`.
    #[arg(long, requires = "si")]
    pub z0_ohm: Option<String>,
    /// Round-trip delay in seconds.
    #[arg(long, requires = "si")]
    pub delay_s: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum ConventionArg {
    /// Time dependence e^{−iωt}; poles in the lower half plane.
    #[default]
    Minus,
    /// Time dependence e^{+iωt}; everything complex-conjugated.
    Plus,
}

impl From<ConventionArg> for Convention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::Minus => Convention::ExpMinusIwt,
            ConventionArg::Plus => Convention::ExpPlusIwt,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ReflectionArgs {
    /// C_c/(C_c + C_J).
    #[arg(long, conflicts_with = "cc_ratio")]
    pub cc_frac: Option<f64>,
    /// C_c/C_J (default 1/9, i.e. a fraction of 0.1).
    #[arg(long)]
    pub cc_ratio: Option<f64>,
    #[arg(long, default_value = "0.1,1,10,100,1000")]
    pub z0_ratios: String,
    /// ω/ω_J as start:stop:count. Without it a 4001-point grid on
    /// [0.9, 1.1] is refined around each resonance.
    #[arg(long)]
    pub grid: Option<String>,
    #[command(flatten)]
    pub si: SiArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ResponseArgs {
    /// C_c/C_J (default 0.1, or 0.3 with --heatmap).
    #[arg(long)]
    pub cc_ratio: Option<f64>,
    /// Z_0/Z_J (default 1000, or 100 with --heatmap).
    #[arg(long)]
    pub z0_ratio: Option<f64>,
    /// ω_c/ω_J values, one curve each.
    #[arg(long, default_value = "0.98,0.99,1,1.01,1.02")]
    pub detunings: String,
    /// ω/ω_J as start:stop:count; refined default when absent.
    #[arg(long)]
    pub grid: Option<String>,
    /// Wide grid for the higher cavity modes.
    #[arg(long, default_value = "0.2:4.5:8601")]
    pub wide_grid: String,
    #[arg(long, value_enum, default_value_t)]
    pub convention: ConventionArg,
    /// Sweep ω_J T and overlay Hopfield eigenfrequencies on |f|.
    #[arg(long)]
    pub heatmap: bool,
    /// ω_J T values for --heatmap.
    #[arg(long, default_value = "4:14:201")]
    pub t_grid: String,
    /// ω/ω_J for --heatmap.
    #[arg(long, default_value = "0.2:2.5:4001")]
    pub freq_grid: String,
    /// Cavity modes in the Hopfield model for --heatmap.
    #[arg(long, default_value_t = 8)]
    pub modes: usize,
    #[command(flatten)]
    pub si: SiArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EmissionArgs {
    #[arg(long, value_enum, default_value = "fig4")]
    pub preset: Preset,
    /// Overrides the preset's C_c/C_J.
    #[arg(long)]
    pub cc_ratio: Option<f64>,
    /// Overrides the preset's Z_0/Z_J.
    #[arg(long)]
    pub z0_ratio: Option<f64>,
    /// Overrides the mirror position through ω_c/ω_J.
    #[arg(long)]
    pub cavity_ratio: Option<f64>,
    /// Duration in Rabi periods 2π/Ω.
    #[arg(long, default_value_t = 5.0)]
    pub periods: f64,
    /// Duration in units of 1/ω_J; overrides --periods.
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Time steps per round trip.
    #[arg(long)]
    pub steps_per_delay: Option<usize>,
    /// Remove the mirror.
    #[arg(long)]
    pub open: bool,
    /// Keep every k-th step in trajectory.csv.
    #[arg(long, default_value_t = 1)]
    pub record_every: usize,
    #[command(flatten)]
    pub si: SiArgs,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct PolesArgs {
    #[arg(long, default_value_t = 0.1)]
    pub cc_ratio: f64,
    #[arg(long, default_value_t = 1000.0)]
    pub z0_ratio: f64,
    /// ω_c/ω_J; T = 2πn/ω_c.
    #[arg(long, default_value_t = 1.0)]
    pub cavity_ratio: f64,
    #[arg(long, default_value_t = 1)]
    pub n: u32,
    /// Search the open line instead.
    #[arg(long)]
    pub open: bool,
    /// Search rectangle re_lo:re_hi:im_lo:im_hi.
    #[arg(long, allow_hyphen_values = true)]
    pub window: Option<String>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
    #[arg(long, value_enum, default_value_t)]
    pub convention: ConventionArg,
    /// Also list the mirror-image poles −z̄.
    #[arg(long)]
    pub with_partners: bool,
    /// Numerical against analytic Rabi splitting at T = 2π/ω_J.
    #[arg(long)]
    pub rabi_table: bool,
    #[arg(long, default_value = "0.01,0.05,0.3")]
    pub cc_ratios: String,
    /// Z_0/Z_J values for --rabi-table (default 7 points from 10 to 10⁴).
    #[arg(long)]
    pub z0_ratios: Option<String>,
    #[command(flatten)]
    pub si: SiArgs,
}

#[derive(Debug, Clone, Args)]
pub struct HopfieldArgs {
    #[arg(long, default_value_t = 0.3)]
    pub cc_ratio: f64,
    #[arg(long, default_value_t = 100.0)]
    pub z0_ratio: f64,
    /// Cavity modes N.
    #[arg(long, default_value_t = 8)]
    pub modes: usize,
    /// ω_J T values.
    #[arg(long, default_value = "4:14:101")]
    pub t_grid: String,
    /// Transmon-mode couplings g_1,…,g_N replacing Ω/2.
    #[arg(long)]
    pub couplings: Option<String>,
    /// Report the shift of the levels near ω_J when N grows to this value.
    #[arg(long)]
    pub convergence: Option<usize>,
    #[command(flatten)]
    pub si: SiArgs,
}

/// Parses `args` (program name first), runs the command and maps failures
/// to exit codes: 2 usage, 3 numerical, 1 anything else.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

pub fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<FlagError>().is_some() {
        2
    } else if e.downcast_ref::<mirrorqed_core::Error>().is_some() {
        3
    } else {
        1
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got `{v}`"))?;
    // A second call in the same process keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    let start = Instant::now();
    let mut rec = Record::default();
    let name = match &cli.command {
        Command::Reflection(a) => {
            cmd_reflection(a, &cli.out, &mut rec)?;
            "reflection"
        }
        Command::Response(a) => {
            cmd_response(a, &cli.out, &mut rec)?;
            "response"
        }
        Command::Emission(a) => {
            cmd_emission(a, &cli.out, &mut rec)?;
            "emission"
        }
        Command::Poles(a) => {
            cmd_poles(a, &cli.out, &mut rec)?;
            "poles"
        }
        Command::Hopfield(a) => {
            cmd_hopfield(a, &cli.out, &mut rec)?;
            "hopfield"
        }
    };
    let m = RunManifest {
        command: name.into(),
        args: std::env::args().skip(1).collect(),
        params: rec.params,
        si: rec.si,
        grids: serde_json::Value::Object(rec.grids),
        outputs: rec.outputs,
        version: env!("CARGO_PKG_VERSION").into(),
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    manifest::append(&cli.out, &m)?;
    for a in &m.outputs {
        println!("{}", a.path.display());
    }
    Ok(())
}

#[derive(Default)]
struct Record {
    params: Vec<ParamRecord>,
    si: Vec<ParamRecord>,
    grids: serde_json::Map<String, serde_json::Value>,
    outputs: Vec<Artifact>,
}

impl Record {
    fn param(&mut self, p: &CircuitParams) {
        self.params.push(p.into());
    }

    fn grid(&mut self, key: &str, v: serde_json::Value) {
        self.grids.insert(key.into(), v);
    }
}

/// Normalized circuits from SI flags, one per --z0-ohm entry.
fn si_params(si: &SiArgs, need_delay: bool) -> Result<(Vec<CircuitParams>, Vec<ParamRecord>)> {
    let need = |flag: &'static str, v: Option<f64>| -> Result<f64> {
        let v = v.ok_or_else(|| FlagError::new(flag, "required with --si"))?;
        Ok(positive(flag, v)?)
    };
    let c_c = need("c-c", si.c_c)?;
    let c_j = need("c-j", si.c_j)?;
    let l_j = need("l-j", si.l_j)?;
    let z0s = parse_positive_list(
        "z0-ohm",
        si.z0_ohm
            .as_deref()
            .ok_or_else(|| FlagError::new("z0-ohm", "required with --si"))?,
    )?;
    let delay = match si.delay_s {
        Some(t) => Some(positive("delay-s", t)?),
        None if need_delay => {
            return Err(FlagError::new("delay-s", "required with --si for this command").into())
        }
        None => None,
    };
    let mut out = Vec::new();
    let mut raw = Vec::new();
    for z in z0s {
        let p = CircuitParams::new(c_c, c_j, l_j, z, delay)?;
        raw.push((&p).into());
        out.push(p.normalized());
    }
    Ok((out, raw))
}

fn single_si(si: &SiArgs, need_delay: bool, rec: &mut Record) -> Result<CircuitParams> {
    let (ps, raw) = si_params(si, need_delay)?;
    if ps.len() != 1 {
        return Err(FlagError::new("z0-ohm", "expects a single value for this command").into());
    }
    rec.si = raw;
    Ok(ps[0])
}

fn range(flag: &'static str, s: &str) -> Result<Range> {
    Ok(parse_range(flag, s)?)
}

fn thin(x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let step = x.len().div_ceil(PLOT_POINTS).max(1);
    let pick = |v: &[f64]| v.iter().step_by(step).copied().collect();
    (pick(x), pick(y))
}

fn tag(v: f64) -> String {
    format!("{v}")
}

fn cmd_reflection(a: &ReflectionArgs, out: &Path, rec: &mut Record) -> Result<()> {
    let (set, labels): (Vec<CircuitParams>, Vec<String>) = if a.si.si {
        let (ps, raw) = si_params(&a.si, false)?;
        rec.si = raw;
        let labels = ps.iter().map(|p| tag(p.z_0())).collect();
        (ps, labels)
    } else {
        let cc = match (a.cc_frac, a.cc_ratio) {
            (Some(f), _) => {
                if !(f > 0.0 && f < 1.0) {
                    return Err(FlagError::new("cc-frac", "must lie in (0, 1)").into());
                }
                cc_fraction_to_ratio(f)
            }
            (None, Some(r)) => positive("cc-ratio", r)?,
            (None, None) => cc_fraction_to_ratio(0.1),
        };
        let zs = parse_positive_list("z0-ratios", &a.z0_ratios)?;
        let ps = zs
            .iter()
            .map(|&z| dimensionless(&Ratios::new(cc, z)))
            .collect::<mirrorqed_core::Result<Vec<_>>>()?;
        (ps, zs.iter().map(|&z| tag(z)).collect())
    };
    let fixed = a.grid.as_deref().map(|g| range("grid", g)).transpose()?;
    rec.grid(
        "omega",
        match &fixed {
            Some(r) => json!(r.to_string()),
            None => json!({"base": "0.9:1.1:4001", "refinement": format!("{:?}", Refinement::default())}),
        },
    );

    let curves = set
        .par_iter()
        .map(|p| {
            let grid = match &fixed {
                Some(r) => r.points(),
                None => {
                    let h = mirrorqed_core::scattering::HelperFunctions::new(p);
                    refine(
                        &transmon_default(1.0),
                        |w| h.reflection(w).norm(),
                        Refinement::default(),
                    )
                    .0
                }
            };
            Ok((reflection_open(p, &grid)?, transmission_open(p, &grid)?))
        })
        .collect::<mirrorqed_core::Result<Vec<_>>>()?;

    let mut series = Vec::new();
    for ((p, label), (r, t)) in set.iter().zip(&labels).zip(&curves) {
        rec.param(p);
        let rows = (0..r.len()).map(|i| {
            let (rv, tv) = (r.values[i], t.values[i]);
            vec![
                r.grid[i].into(),
                rv.re.into(),
                rv.im.into(),
                rv.norm().into(),
                tv.re.into(),
                tv.im.into(),
                tv.norm().into(),
            ]
        });
        rec.outputs.push(write_csv(
            &out.join(format!("reflection_z{label}.csv")),
            &["omega", "r_re", "r_im", "abs_r", "t_re", "t_im", "abs_t"],
            rows,
        )?);
        let (x, y) = thin(&r.grid, &r.magnitudes());
        series.push(Series::line(format!("Z0/ZJ = {label}"), x, y));
    }
    rec.outputs.push(line_plot(
        &out.join("reflection.svg"),
        Axes {
            title: "Reflection on the open line",
            x_label: "ω/ω_J",
            y_label: "|r|",
            log_x: false,
        },
        &series,
    )?);
    Ok(())
}

fn complex_rows(
    r: &mirrorqed_core::scattering::ComplexResponse,
) -> impl Iterator<Item = Vec<Cell>> + '_ {
    (0..r.len()).map(move |i| {
        let v = r.values[i];
        vec![r.grid[i].into(), v.re.into(), v.im.into(), v.norm().into()]
    })
}

fn cmd_response(a: &ResponseArgs, out: &Path, rec: &mut Record) -> Result<()> {
    if a.heatmap {
        return response_heatmap(a, out, rec);
    }
    let convention: Convention = a.convention.into();
    let base = if a.si.si {
        Some(single_si(&a.si, false, rec)?)
    } else {
        None
    };
    let cc = positive("cc-ratio", a.cc_ratio.unwrap_or(0.1))?;
    let z = positive("z0-ratio", a.z0_ratio.unwrap_or(1000.0))?;
    let detunings = parse_positive_list("detunings", &a.detunings)?;
    let fixed = a.grid.as_deref().map(|g| range("grid", g)).transpose()?;
    let wide = range("wide-grid", &a.wide_grid)?.points();
    rec.grid(
        "omega",
        json!(fixed.map_or("refined 0.9:1.1:4001".to_string(), |r| r.to_string())),
    );
    rec.grid("wide", json!(a.wide_grid));

    let set = detunings
        .iter()
        .map(|&d| match base {
            Some(p) => p.with_delay(2.0 * PI / d),
            None => dimensionless(&Ratios::new(cc, z).cavity(d, 1)),
        })
        .collect::<mirrorqed_core::Result<Vec<_>>>()?;
    let curves = set
        .par_iter()
        .map(|p| {
            let grid = match &fixed {
                Some(r) => r.points(),
                None => {
                    refine(
                        &transmon_default(1.0),
                        |w| {
                            trapped_field(p, &[w])
                                .map(|r| r.values[0].norm())
                                .unwrap_or(0.0)
                        },
                        Refinement::default(),
                    )
                    .0
                }
            };
            Ok((
                trapped_field(p, &grid)?.with_convention(convention),
                trapped_field(p, &wide)?.with_convention(convention),
            ))
        })
        .collect::<mirrorqed_core::Result<Vec<_>>>()?;

    let header = ["omega", "f_re", "f_im", "abs_f"];
    let (mut main, mut inset) = (Vec::new(), Vec::new());
    for ((p, &d), (f, fw)) in set.iter().zip(&detunings).zip(&curves) {
        rec.param(p);
        rec.outputs.push(write_csv(
            &out.join(format!("response_d{}.csv", tag(d))),
            &header,
            complex_rows(f),
        )?);
        rec.outputs.push(write_csv(
            &out.join(format!("response_wide_d{}.csv", tag(d))),
            &header,
            complex_rows(fw),
        )?);
        let (x, y) = thin(&f.grid, &f.magnitudes());
        main.push(Series::line(format!("ω_c/ω_J = {d}"), x, y));
        let (x, y) = thin(&fw.grid, &fw.magnitudes());
        inset.push(Series::line(format!("ω_c/ω_J = {d}"), x, y));
    }
    let axes = |title| Axes {
        title,
        x_label: "ω/ω_J",
        y_label: "|f|",
        log_x: false,
    };
    rec.outputs.push(line_plot(
        &out.join("response.svg"),
        axes("Field between transmon and mirror"),
        &main,
    )?);
    rec.outputs.push(line_plot(
        &out.join("response_wide.svg"),
        axes("Higher cavity modes"),
        &inset,
    )?);
    Ok(())
}

fn response_heatmap(a: &ResponseArgs, out: &Path, rec: &mut Record) -> Result<()> {
    let p = if a.si.si {
        single_si(&a.si, false, rec)?
    } else {
        let cc = positive("cc-ratio", a.cc_ratio.unwrap_or(0.3))?;
        let z = positive("z0-ratio", a.z0_ratio.unwrap_or(100.0))?;
        dimensionless(&Ratios::new(cc, z))?
    };
    if a.modes == 0 {
        return Err(FlagError::new("modes", "must be at least 1").into());
    }
    let t_grid = range("t-grid", &a.t_grid)?.points();
    let freq = range("freq-grid", &a.freq_grid)?.points();
    rec.param(&p);
    rec.grid("omega_j_t", json!(a.t_grid));
    rec.grid("omega", json!(a.freq_grid));
    rec.grid("modes", json!(a.modes));

    let slices = t_grid
        .par_iter()
        .map(|&wt| {
            let q = p.with_delay(wt / p.omega_j())?;
            let mags = trapped_field(&q, &freq)?.magnitudes();
            let s = hopfield::overlay_slice(&p, a.modes, wt, &freq)?;
            Ok((mags, s))
        })
        .collect::<mirrorqed_core::Result<Vec<_>>>()?;

    let mut ridge_rows = Vec::new();
    let mut eig_rows = Vec::new();
    let mut markers = Vec::new();
    let mut field = Vec::with_capacity(slices.len());
    for (mags, s) in slices {
        for (r, d) in s.ridges.iter().zip(&s.distances) {
            ridge_rows.push(vec![s.omega_j_t.into(), (*r).into(), (*d).into()]);
        }
        for &e in &s.eigenfrequencies {
            eig_rows.push(vec![s.omega_j_t.into(), e.into()]);
            markers.push((s.omega_j_t, e));
        }
        field.push(mags);
    }
    rec.outputs.push(write_csv(
        &out.join("heatmap_ridges.csv"),
        &["omega_j_t", "ridge", "distance_cells"],
        ridge_rows,
    )?);
    rec.outputs.push(write_csv(
        &out.join("heatmap_eigenfrequencies.csv"),
        &["omega_j_t", "eigfreq"],
        eig_rows,
    )?);
    rec.outputs.push(heatmap(
        &out.join("heatmap.svg"),
        Axes {
            title: "|f| with Hopfield eigenfrequencies",
            x_label: "ω_J T",
            y_label: "ω/ω_J",
            log_x: false,
        },
        &t_grid,
        &freq,
        &field,
        &markers,
    )?);
    Ok(())
}

fn cmd_emission(a: &EmissionArgs, out: &Path, rec: &mut Record) -> Result<()> {
    let p = if a.si.si {
        single_si(&a.si, true, rec)?
    } else {
        let mut r = a.preset.ratios();
        if let Some(cc) = a.cc_ratio {
            r.cc_over_cj = positive("cc-ratio", cc)?;
        }
        if let Some(z) = a.z0_ratio {
            r.z0_over_zj = positive("z0-ratio", z)?;
        }
        if let Some(c) = a.cavity_ratio {
            r = r.cavity(positive("cavity-ratio", c)?, 1);
        }
        dimensionless(&r)?
    };
    let d = p.derive();
    let rabi = d.rabi.ok_or(mirrorqed_core::Error::MirrorRequired)?;
    let period = 2.0 * PI / rabi;
    let t_max = match a.t_max {
        Some(t) => positive("t-max", t)?,
        None => positive("periods", a.periods)? * period,
    };
    if a.record_every == 0 {
        return Err(FlagError::new("record-every", "must be at least 1").into());
    }
    let mut cfg = EmissionConfig::new(&p, t_max, !a.open);
    if let Some(m) = a.steps_per_delay {
        if m == 0 {
            return Err(FlagError::new("steps-per-delay", "must be at least 1").into());
        }
        cfg = cfg.with_steps_per_delay(&p, m)?;
    }
    let cfg = cfg.record_every(a.record_every);
    rec.param(&p);
    rec.grid(
        "time",
        json!({"t_max": t_max, "dt": cfg.dt, "record_every": cfg.record_every, "mirror": cfg.mirror, "preset": a.preset.name()}),
    );

    let traj = integrate(&p, &cfg)?;
    let total = traj.e_total();
    let rows = (0..traj.len()).map(|i| {
        vec![
            traj.t[i].into(),
            traj.phi_j[i].into(),
            traj.p_j[i].into(),
            traj.p_0[i].into(),
            traj.e_q[i].into(),
            traj.e_r[i].into(),
            traj.e_l[i].into(),
            total[i].into(),
        ]
    });
    rec.outputs.push(write_csv(
        &out.join("trajectory.csv"),
        &["t", "phi_j", "p_j", "p_0", "e_q", "e_r", "e_l", "e_total"],
        rows,
    )?);

    let e0 = traj.e_q[0];
    let env: Vec<f64> = traj
        .t
        .iter()
        .map(|&t| e0 * rabi_envelope(t, d.gamma_j_mirror, rabi))
        .collect();
    rec.outputs.push(write_csv(
        &out.join("envelope.csv"),
        &["t", "e_q", "envelope"],
        (0..traj.len()).map(|i| vec![traj.t[i].into(), traj.e_q[i].into(), env[i].into()]),
    )?);

    let x: Vec<f64> = traj.t.iter().map(|t| t / period).collect();
    let mut series = Vec::new();
    for (label, y) in [
        ("E_q", &traj.e_q),
        ("E_R", &traj.e_r),
        ("E_L", &traj.e_l),
        ("E_total", &total),
        ("envelope", &env),
    ] {
        let (xs, ys) = thin(&x, y);
        series.push(Series::line(label, xs, ys));
    }
    rec.outputs.push(line_plot(
        &out.join("energies.svg"),
        Axes {
            title: "Energy exchange",
            x_label: "t Ω/2π",
            y_label: "energy",
            log_x: false,
        },
        &series,
    )?);
    Ok(())
}

#[derive(Serialize)]
struct PoleRow {
    re: f64,
    im: f64,
    residue_phi_re: f64,
    residue_phi_im: f64,
    label: String,
}

fn cmd_poles(a: &PolesArgs, out: &Path, rec: &mut Record) -> Result<()> {
    if a.rabi_table {
        return rabi_table(a, out, rec);
    }
    let p = if a.si.si {
        let p = single_si(&a.si, !a.open, rec)?;
        if a.open {
            p.without_mirror()
        } else {
            p
        }
    } else {
        let r = Ratios::new(
            positive("cc-ratio", a.cc_ratio)?,
            positive("z0-ratio", a.z0_ratio)?,
        );
        if a.open {
            dimensionless(&r)?
        } else {
            if a.n == 0 {
                return Err(FlagError::new("n", "must be at least 1").into());
            }
            dimensionless(&r.cavity(positive("cavity-ratio", a.cavity_ratio)?, a.n))?
        }
    };
    let window = match &a.window {
        Some(w) => {
            let [a0, a1, b0, b1] = parse_window("window", w)?;
            Rect::new(a0, a1, b0, b1)
        }
        None if p.has_mirror() => poles::default_window(&p),
        None => poles::reconstruction_window(&p),
    };
    rec.param(&p);
    let set = find_poles(&p, window)?.with_convention(a.convention.into());
    let w = set.search_window;
    rec.grid(
        "window",
        json!({"re": [w.re_lo, w.re_hi], "im": [w.im_lo, w.im_hi], "expansions": set.method_report.expansions, "winding": set.method_report.winding}),
    );
    let list = if a.with_partners {
        set.with_partners()
    } else {
        set.poles.clone()
    };
    let rows: Vec<PoleRow> = list
        .iter()
        .map(|q| PoleRow {
            re: q.z.re,
            im: q.z.im,
            residue_phi_re: q.residue_phi.re,
            residue_phi_im: q.residue_phi.im,
            label: q.label.clone(),
        })
        .collect();
    let art = match a.format {
        Format::Csv => write_csv(
            &out.join("poles.csv"),
            &["re", "im", "residue_phi_re", "residue_phi_im", "label"],
            rows.iter().map(|r| {
                vec![
                    r.re.into(),
                    r.im.into(),
                    r.residue_phi_re.into(),
                    r.residue_phi_im.into(),
                    r.label.as_str().into(),
                ]
            }),
        )?,
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&rows)?;
            s.push('\n');
            write_bytes(&out.join("poles.json"), s.as_bytes())?
        }
    };
    rec.outputs.push(art);
    Ok(())
}

fn rabi_table(a: &PolesArgs, out: &Path, rec: &mut Record) -> Result<()> {
    let ccs = parse_positive_list("cc-ratios", &a.cc_ratios)?;
    let zs = match &a.z0_ratios {
        Some(s) => parse_positive_list("z0-ratios", s)?,
        None => logspace(1.0, 4.0, 7),
    };
    rec.grid("cc_ratios", json!(ccs));
    rec.grid("z0_ratios", json!(zs));
    let pairs: Vec<(f64, f64)> = ccs
        .iter()
        .flat_map(|&c| zs.iter().map(move |&z| (c, z)))
        .collect();
    let rows = pairs
        .par_iter()
        .map(|&(c, z)| rabi_row(c, z))
        .collect::<mirrorqed_core::Result<Vec<_>>>()?;
    for &(c, z) in &pairs {
        rec.param(&dimensionless(&Ratios::new(c, z).cavity(1.0, 1))?);
    }
    rec.outputs.push(write_csv(
        &out.join("rabi.csv"),
        &[
            "cc_over_cj",
            "z0_over_zj",
            "product",
            "omega_numeric",
            "omega_analytic",
            "relative_error",
            "signed_error",
            "resolved",
        ],
        rows.iter().map(|r| {
            vec![
                r.cc_over_cj.into(),
                r.z0_over_zj.into(),
                (r.cc_over_cj * r.z0_over_zj).into(),
                r.omega_numeric.into(),
                r.omega_analytic.into(),
                r.relative_error.into(),
                r.signed_error.into(),
                r.resolved.into(),
            ]
        }),
    )?);
    let series: Vec<Series> = ccs
        .iter()
        .map(|&c| {
            let (x, y) = rows
                .iter()
                .filter(|r| r.cc_over_cj == c)
                .filter_map(|r| Some((r.cc_over_cj * r.z0_over_zj, r.relative_error?)))
                .unzip();
            Series::points(format!("C_c/C_J = {c}"), x, y)
        })
        .collect();
    rec.outputs.push(line_plot(
        &out.join("rabi.svg"),
        Axes {
            title: "Rabi splitting, numerical against analytic",
            x_label: "(C_c/C_J)(Z_0/Z_J)",
            y_label: "|Ω_N − Ω_A|/Ω_A",
            log_x: true,
        },
        &series,
    )?);
    Ok(())
}

fn cmd_hopfield(a: &HopfieldArgs, out: &Path, rec: &mut Record) -> Result<()> {
    let p = if a.si.si {
        single_si(&a.si, false, rec)?
    } else {
        dimensionless(&Ratios::new(
            positive("cc-ratio", a.cc_ratio)?,
            positive("z0-ratio", a.z0_ratio)?,
        ))?
    };
    if a.modes == 0 {
        return Err(FlagError::new("modes", "must be at least 1").into());
    }
    let couplings = a
        .couplings
        .as_deref()
        .map(|s| parse_positive_list("couplings", s))
        .transpose()?;
    if let Some(g) = &couplings {
        if g.len() != a.modes {
            return Err(FlagError::new(
                "couplings",
                format!("expected {} values, got {}", a.modes, g.len()),
            )
            .into());
        }
    }
    let t_grid = range("t-grid", &a.t_grid)?.points();
    rec.param(&p);
    rec.grid("omega_j_t", json!(a.t_grid));
    rec.grid("modes", json!(a.modes));

    let spectra = t_grid
        .par_iter()
        .map(|&wt| {
            let q = p.with_delay(wt / p.omega_j())?;
            diagonalize(&build_with_couplings(&q, a.modes, couplings.as_deref())?)
        })
        .collect::<mirrorqed_core::Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    let mut unstable = 0;
    for (&wt, s) in t_grid.iter().zip(&spectra) {
        unstable += s.complex_eigenvalues.len();
        let positive = s
            .eigenfrequencies
            .iter()
            .zip(&s.bosonicity)
            .filter(|(&w, _)| w > 0.0);
        for (alpha, (&w, &b)) in positive.enumerate() {
            rows.push(vec![wt.into(), alpha.into(), w.into(), b.into()]);
            xs.push(wt);
            ys.push(w);
        }
    }
    if unstable > 0 {
        eprintln!("warning: {unstable} complex eigenvalues; the quadratic Hamiltonian is not positive there");
    }
    rec.outputs.push(write_csv(
        &out.join("spectrum.csv"),
        &["omega_j_T", "alpha", "eigfreq", "bosonicity"],
        rows,
    )?);
    rec.outputs.push(line_plot(
        &out.join("spectrum.svg"),
        Axes {
            title: "Hopfield eigenfrequencies",
            x_label: "ω_J T",
            y_label: "ω/ω_J",
            log_x: false,
        },
        &[Series::points("eigenfrequencies", xs, ys)],
    )?);

    if let Some(n2) = a.convergence {
        if n2 <= a.modes {
            return Err(FlagError::new("convergence", "must exceed --modes").into());
        }
        let shifts = t_grid
            .par_iter()
            .map(|&wt| hopfield::n_convergence(&p.with_delay(wt / p.omega_j())?, a.modes, n2))
            .collect::<mirrorqed_core::Result<Vec<_>>>()?;
        let worst = shifts.iter().copied().fold(0.0, f64::max);
        println!(
            "N {} -> {}: largest shift of the levels near ω_J = {worst:.3e}",
            a.modes, n2
        );
        rec.grid(
            "convergence",
            json!({"n1": a.modes, "n2": n2, "max_shift": worst}),
        );
    }
    Ok(())
}

/// Runs a command with an explicit output directory; used by tests.
pub fn run_args<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).context("parsing arguments")?;
    run(&cli)
}
