//! Command-line front end: configuration, subcommand dispatch and CSV/text output.

mod config;
mod output;

pub use config::{
    load_config, sweep_values, AsymmetryOptions, BudgetOptions, ConfigError, EnvironmentConfig, FitOptions, GridConfig,
    OccupationOptions, OracleOptions, OutputConfig, ParamsConfig, RunConfig, SpectrumOptions, SweepConfig,
};

use clap::{Parser, Subcommand};
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::analysis::{extract_dispersion_points, fit_lorentzians_in, LorentzianFit};
use crate::error::Error;
use crate::langevin::{
    bright_dark_decompose, build_drift_matrix, dispersion, eigensolve, strong_coupling_thresholds, weak_coupling_approx,
};
use crate::model::units::{khz, to_khz};
use crate::model::{decoherence_budget, Mode, PhysicalParams};
use crate::oracle::{compare_with_analytic, default_band, simulate_psd, WelchOptions};
use crate::spectra::{
    analyze_sidebands, coldest_angle, heterodyne_spectrum, mechanical_spectrum_with, FrequencyGrid, NoiseWeights,
    SidebandOptions, Spectrum, SpectrumKind,
};
use output::{fmt_f, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const EXIT_UNSTABLE: i32 = 5;
pub const EXIT_NUMERICAL: i32 = 6;

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Io { path: PathBuf, source: std::io::Error },
    Model(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(ConfigError::Io { .. }) | Self::Io { .. } => EXIT_IO,
            Self::Config(_) => EXIT_CONFIG,
            Self::Model(Error::Unstable { .. }) => EXIT_UNSTABLE,
            Self::Model(_) => EXIT_NUMERICAL,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Config(e) => write!(f, "{e}"),
            Self::Io { path, source } => write!(f, "{}: {source}", path.display()),
            Self::Model(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::Config(e)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self::Model(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "polaritron",
    version,
    about = "Cavity-levitated-particle polariton spectra, dispersion and occupations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, clap::Args)]
pub struct CommonArgs {
    /// TOML run configuration; defaults apply when omitted
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding `output.dir`
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps and grids (0 = all available)
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// Grid start in kHz
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub grid_start: Option<f64>,
    /// Grid stop in kHz
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub grid_stop: Option<f64>,
    /// Grid step in kHz
    #[arg(long, global = true)]
    pub grid_step: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Heterodyne and mechanical spectra at each operating point
    Spectrum,
    /// Eigenfrequency sweep over detuning
    Dispersion,
    /// Occupation versus direction and operating point, with the coldest direction
    Occupation,
    /// Lorentzian fits of a model or file spectrum
    Fit,
    /// Sideband-asymmetry thermometry
    Asymmetry,
    /// Decoherence rates and coupling-regime predicates
    Budget,
    /// Stochastic time-domain cross-check of the mechanical spectra
    Oracle,
}

/// Parses arguments, runs, reports errors on stderr and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Applies command-line overrides to the configuration.
pub fn resolve_config(common: &CommonArgs) -> CliResult<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => load_config(p)?,
        None => RunConfig::default(),
    };
    if let Some(v) = common.grid_start {
        cfg.grid.start_khz = v;
    }
    if let Some(v) = common.grid_stop {
        cfg.grid.stop_khz = v;
    }
    if let Some(v) = common.grid_step {
        cfg.grid.step_khz = v;
    }
    if let Some(o) = &common.out {
        cfg.output.dir = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one subcommand and returns the files written.
pub fn execute(cli: &Cli) -> CliResult<Vec<PathBuf>> {
    let cfg = resolve_config(&cli.common)?;
    if cli.common.jobs > 0 {
        // a pool may already exist when called repeatedly in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.common.jobs).build_global();
    }
    run(cli.command, &cfg)
}

pub fn run(command: Command, cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io { path: dir.clone(), source: e })?;
    let mut files = vec![write_text(&dir.join("config.toml"), &cfg.to_toml())?];
    files.extend(match command {
        Command::Spectrum => cmd_spectrum(cfg)?,
        Command::Dispersion => cmd_dispersion(cfg)?,
        Command::Occupation => cmd_occupation(cfg)?,
        Command::Fit => cmd_fit(cfg)?,
        Command::Asymmetry => cmd_asymmetry(cfg)?,
        Command::Budget => cmd_budget(cfg)?,
        Command::Oracle => cmd_oracle(cfg)?,
    });
    Ok(files)
}

fn write_text(path: &Path, text: &str) -> CliResult<PathBuf> {
    std::fs::write(path, text).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
    Ok(path.to_path_buf())
}

/// Sweep column name and `(value, params)` rows; without a sweep the single
/// row is labelled by its detuning.
fn operating_points(cfg: &RunConfig) -> CliResult<(String, Vec<(f64, PhysicalParams)>)> {
    let pts = cfg.sweep_points()?;
    Ok(match &cfg.sweep {
        Some(s) => (s.parameter.clone(), pts),
        None => ("detuning_khz".into(), pts.into_iter().map(|(_, p)| (to_khz(p.delta), p)).collect()),
    })
}

fn numbered(dir: &Path, stem: &str, i: usize, many: bool) -> PathBuf {
    if many {
        dir.join(format!("{stem}_{i:03}.csv"))
    } else {
        dir.join(format!("{stem}.csv"))
    }
}

fn cmd_spectrum(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let grid = cfg.grid()?;
    let theta = cfg.spectrum.theta_deg.to_radians();
    let (col, pts) = operating_points(cfg)?;
    let mut files = Vec::new();
    for (i, (v, p)) in pts.iter().enumerate() {
        let het = heterodyne_spectrum(p, &grid)?;
        let (bb, bdb) = mechanical_spectrum_with(p, theta, &grid, &NoiseWeights::quantum(p), cfg.grid.tail_threshold)?;
        let mut t = Table::new("spectrum", Some(p));
        t.note(format!("{col} = {}", fmt_f(*v)));
        t.note(format!("theta_deg = {}", fmt_f(cfg.spectrum.theta_deg)));
        t.note(format!("occupation = {}", fmt_f(bb.integral())));
        t.unit("freq_khz", "kHz, signed offset from the local oscillator (positive: anti-Stokes)");
        t.unit("s_out", "shot-noise units");
        t.unit("s_bb_theta", "quanta/Hz");
        t.unit("s_bdagbdag_theta", "quanta/Hz");
        t.columns(&["freq_khz", "s_out", "s_bb_theta", "s_bdagbdag_theta"]);
        for (k, w) in grid.points().enumerate() {
            t.row(&[to_khz(w), het.values[k], bb.values[k], bdb.values[k]]);
        }
        files.push(t.write(&numbered(&cfg.output.dir, "spectrum", i, pts.len() > 1))?);
    }
    Ok(files)
}

fn cmd_dispersion(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let mut c = cfg.clone();
    match &c.sweep {
        Some(s) if s.parameter != "detuning_khz" => {
            return Err(ConfigError::Invalid {
                field: "sweep.parameter".into(),
                reason: "dispersion sweeps detuning_khz".into(),
            }
            .into())
        }
        Some(_) => {}
        None => c.sweep = Some(SweepConfig { parameter: "detuning_khz".into(), start: -260.0, stop: -60.0, step: 1.0 }),
    }
    let params: Vec<PhysicalParams> = c.sweep_points()?.into_iter().map(|(_, p)| p).collect();
    let curve = dispersion(&params)?;
    let mut t = Table::new("dispersion", Some(&params[0]));
    t.note(format!("avoided_crossings = {}", curve.avoided_crossings()));
    for b in curve.bare_crossings(2.0 * curve.max_step()) {
        t.note(format!(
            "bare crossing {:?} at detuning_khz = {}: min gap {} kHz at {} kHz, avoided = {}",
            b.mode,
            fmt_f(to_khz(b.detuning)),
            fmt_f(to_khz(b.min_gap)),
            fmt_f(to_khz(b.at_detuning)),
            b.avoided
        ));
    }
    t.unit("detuning_khz", "kHz");
    t.unit("f1_khz..f3_khz", "kHz, tracked branch eigenfrequencies");
    t.unit("w1_khz..w3_khz", "kHz, eigenvalue real parts (half-widths)");
    t.unit("photfrac1..3", "photonic weight of each branch");
    t.unit("label1..3", "photon / phonon / dark by composition");
    let mut cols = vec!["detuning_khz"];
    cols.extend(["f1_khz", "f2_khz", "f3_khz", "w1_khz", "w2_khz", "w3_khz", "photfrac1", "photfrac2", "photfrac3"]);
    cols.extend(["label1", "label2", "label3", "ambiguous"]);
    t.columns(&cols);
    for p in &curve.points {
        let mut row: Vec<String> = vec![fmt_f(to_khz(p.detuning()))];
        row.extend(p.frequencies.iter().map(|f| fmt_f(to_khz(*f))));
        row.extend(p.half_widths.iter().map(|f| fmt_f(to_khz(*f))));
        row.extend(p.compositions.iter().map(|c| fmt_f(c.photonic)));
        row.extend(p.labels.iter().map(|l| l.as_str().to_string()));
        row.push(p.ambiguous.to_string());
        t.row_str(row);
    }
    Ok(vec![t.write(&c.output.dir.join("dispersion.csv"))?])
}

fn cmd_occupation(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let grid = cfg.grid()?;
    let (col, pts) = operating_points(cfg)?;
    let results: Vec<_> = pts.iter().map(|(_, p)| coldest_angle(p, &grid)).collect::<Result<_, _>>()?;

    let mut t = Table::new("occupation", Some(&pts[0].1));
    t.unit(&col, "sweep value");
    t.unit("n_x, n_y, n_min, n_max", "quanta");
    t.unit("theta_min_deg", "degrees from X towards Y");
    t.columns(&[col.as_str(), "n_x", "n_y", "theta_min_deg", "n_min", "n_max"]);
    for ((v, _), c) in pts.iter().zip(&results) {
        t.row(&[*v, c.n_x, c.n_y, c.theta.to_degrees(), c.n_min, c.n_max]);
    }
    let mut files = vec![t.write(&cfg.output.dir.join("occupation.csv"))?];

    let base = &results[0];
    let mut a = Table::new("occupation versus direction", Some(&pts[0].1));
    a.note(format!("theta_min_deg = {}", fmt_f(base.theta.to_degrees())));
    a.note(format!("n_min = {}", fmt_f(base.n_min)));
    a.unit("theta_deg", "degrees from X towards Y");
    a.unit("n", "quanta");
    a.columns(&["theta_deg", "n"]);
    let step = cfg.occupation.theta_step_deg;
    let n = (180.0 / step).floor() as usize;
    for k in 0..=n {
        let th = -90.0 + k as f64 * step;
        a.row(&[th, base.occupation_at(th.to_radians())]);
    }
    files.push(a.write(&cfg.output.dir.join("occupation_theta.csv"))?);
    Ok(files)
}

/// Restriction of a spectrum to `[lo, hi]`.
fn crop(spec: &Spectrum, lo: f64, hi: f64) -> CliResult<Spectrum> {
    let g = spec.grid;
    let (i0, i1) = (g.index_of(lo.max(g.start())), g.index_of(hi.min(g.stop())));
    let sub = FrequencyGrid::new(g.at(i0), g.at(i1), i1 - i0 + 1)?;
    let mut out = Spectrum::new(sub, spec.kind, spec.values[i0..=i1].to_vec())?;
    out.params = spec.params;
    Ok(out)
}

fn read_spectrum(path: &Path) -> CliResult<Spectrum> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
    let bad = |reason: String| CliError::Config(ConfigError::Invalid { field: "fit.input".into(), reason });
    let mut freq = Vec::new();
    let mut vals = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split(',').map(str::trim);
        let (Some(a), Some(b)) = (it.next(), it.next()) else {
            return Err(bad(format!("line {}: expected two columns", n + 1)));
        };
        match (a.parse::<f64>(), b.parse::<f64>()) {
            (Ok(f), Ok(v)) => {
                freq.push(khz(f));
                vals.push(v);
            }
            // column header
            _ if freq.is_empty() => continue,
            _ => return Err(bad(format!("line {}: not numeric", n + 1))),
        }
    }
    if freq.len() < 3 {
        return Err(bad("fewer than three samples".into()));
    }
    let grid = FrequencyGrid::new(freq[0], freq[freq.len() - 1], freq.len())?;
    let tol = 1e-6 * grid.step();
    if freq.iter().enumerate().any(|(i, f)| (f - grid.at(i)).abs() > tol.max(1e-9 * f.abs())) {
        return Err(bad("frequencies are not uniformly spaced".into()));
    }
    Ok(Spectrum::new(grid, SpectrumKind::Synthetic, vals)?)
}

fn fit_rows(t: &mut Table, v: f64, fit: &LorentzianFit, eigen: &[f64]) {
    for (k, pk) in fit.peaks.iter().enumerate() {
        let e = eigen.get(k).map(|f| fmt_f(to_khz(*f))).unwrap_or_else(|| "nan".into());
        t.row_str(vec![
            fmt_f(v),
            (k + 1).to_string(),
            fmt_f(to_khz(pk.center)),
            fmt_f(to_khz(pk.half_width)),
            fmt_f(to_khz(pk.area)),
            e,
            fmt_f(fit.offset),
            fmt_f(fit.residual_rms),
            fit.converged.to_string(),
        ]);
    }
}

fn cmd_fit(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let o = &cfg.fit;
    let (col, pts) = operating_points(cfg)?;
    let mut t = Table::new("fit", cfg.fit.input.is_none().then_some(&pts[0].1));
    t.unit("center_khz, half_width_khz", "kHz");
    t.unit("area_khz", "spectrum units times kHz");
    t.unit("eigen_khz", "kHz, matched eigenfrequency (nan without a model)");
    let column = if o.input.is_some() { "index".to_string() } else { col };
    t.columns(&[
        column.as_str(),
        "peak",
        "center_khz",
        "half_width_khz",
        "area_khz",
        "eigen_khz",
        "offset",
        "residual_rms",
        "converged",
    ]);

    if let Some(path) = &o.input {
        let spec = read_spectrum(path)?;
        let lo = o.window_start_khz.map(khz).unwrap_or(spec.grid.start());
        let hi = o.window_stop_khz.map(khz).unwrap_or(spec.grid.stop());
        let fit = fit_lorentzians_in(&spec, lo, hi, o.n_peaks, None)?;
        t.note(format!("input = {}", path.display()));
        fit_rows(&mut t, 0.0, &fit, &[]);
    } else {
        let grid = cfg.grid()?;
        let lo = o.window_start_khz.map(khz).unwrap_or(0.0);
        let hi = o.window_stop_khz.map(khz).unwrap_or(grid.stop());
        let spectra: Vec<Spectrum> =
            pts.iter().map(|(_, p)| crop(&heterodyne_spectrum(p, &grid)?, lo, hi)).collect::<CliResult<_>>()?;
        let ex = extract_dispersion_points(&spectra, o.n_peaks);
        for (d, why) in &ex.excluded {
            t.note(format!("excluded detuning_khz = {}: {why}", fmt_f(to_khz(*d))));
        }
        for fp in &ex.points {
            let v = pts.iter().find(|(_, p)| p.delta == fp.detuning).map(|(v, _)| *v).unwrap_or(to_khz(fp.detuning));
            // rows in branch order, matched one-to-one to eigenfrequencies
            let mut fit = fp.fit.clone();
            fit.peaks = fp
                .centers
                .iter()
                .zip(&fp.half_widths)
                .map(|(c, w)| {
                    let area = fp.fit.peaks.iter().find(|q| q.center == *c).map(|q| q.area).unwrap_or(f64::NAN);
                    crate::analysis::Peak { center: *c, half_width: *w, area }
                })
                .collect();
            fit_rows(&mut t, v, &fit, &fp.eigenfrequencies);
        }
    }
    Ok(vec![t.write(&cfg.output.dir.join("fit.csv"))?])
}

fn cmd_asymmetry(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let grid = cfg.grid()?;
    let a = &cfg.asymmetry;
    let opts = SidebandOptions { mode: a.mode, half_widths: a.half_widths, fit_span: a.fit_span };
    let (col, pts) = operating_points(cfg)?;
    let mut t = Table::new("sideband asymmetry", Some(&pts[0].1));
    t.note(format!("mode = {:?}", a.mode));
    t.unit("anti_stokes_khz, stokes_khz", "kHz, fitted sideband centres");
    t.unit("area_*", "Hz, filtered shot-noise-subtracted area");
    t.unit("model_n", "occupation of the mode from the full model");
    t.columns(&[
        col.as_str(),
        "anti_stokes_khz",
        "stokes_khz",
        "area_anti_stokes",
        "area_stokes",
        "ratio",
        "inferred_n",
        "model_n",
        "reliable",
    ]);
    let mut last = None;
    for (v, p) in &pts {
        let r = analyze_sidebands(p, &grid, &opts)?;
        let c = coldest_angle(p, &grid)?;
        let model_n = if a.mode == Mode::X { c.n_x } else { c.n_y };
        t.row_str(vec![
            fmt_f(*v),
            fmt_f(to_khz(r.anti_stokes.center)),
            fmt_f(to_khz(r.stokes.center)),
            fmt_f(r.anti_stokes.area),
            fmt_f(r.stokes.area),
            fmt_f(r.ratio),
            fmt_f(r.inferred_n),
            fmt_f(model_n),
            r.reliable.to_string(),
        ]);
        for w in &r.warnings {
            t.note(format!("{col} = {}: {w}", fmt_f(*v)));
        }
        last = Some((r, *p));
    }
    let mut files = vec![t.write(&cfg.output.dir.join("asymmetry.csv"))?];
    if let (1, Some((r, p))) = (pts.len(), last) {
        let het = heterodyne_spectrum(&p, &grid)?;
        let mut s = Table::new("sideband spectra", Some(&p));
        s.unit("freq_khz", "kHz, signed offset from the local oscillator");
        s.unit("s_out", "shot-noise units");
        s.unit("filtered", "(s_out - 1) times the cavity filtering function");
        s.unit("classical_reference", "symmetric-sideband expectation, shot noise removed");
        s.columns(&["freq_khz", "s_out", "filtered", "classical_reference"]);
        for (k, w) in grid.points().enumerate() {
            s.row(&[to_khz(w), het.values[k], r.filtered.values[k], r.classical_reference.values[k]]);
        }
        files.push(s.write(&cfg.output.dir.join("asymmetry_spectrum.csv"))?);
    }
    Ok(files)
}

fn cmd_budget(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let p = cfg.resolve()?;
    let env = cfg.environment();
    let k = |w: f64| fmt_f(to_khz(w));
    let mut s = String::new();
    let _ = writeln!(s, "# polaritron {} budget", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "# rates in kHz (angular rate divided by 2π)");
    let _ = writeln!(s, "{}", output::params_line(&p));
    for mode in Mode::BOTH {
        let b = decoherence_budget(&p, &env, mode, cfg.budget.include_rin)?;
        let _ = writeln!(s, "[{mode:?}]");
        let _ = writeln!(s, "thermal_khz = {}", k(b.thermal));
        let _ = writeln!(s, "recoil_khz = {}", k(b.recoil));
        let _ = writeln!(s, "rin_khz = {}", k(b.rin));
        let _ = writeln!(s, "total_khz = {}", k(b.total));
        let _ = writeln!(s, "swap_rate_khz = {}", k(b.swap_rate));
        let _ = writeln!(s, "coherent = {}", b.coherent);
        let w = weak_coupling_approx(&p, mode);
        let _ = writeln!(s, "weak_coupling_omega_khz = {}", k(w.omega_eff));
        let _ = writeln!(s, "weak_coupling_gamma_khz = {}", k(w.gamma_eff));
    }
    let th = strong_coupling_thresholds(&p, &env)?;
    let _ = writeln!(s, "[thresholds]");
    let _ = writeln!(s, "single_mode_x = {}", th.single_mode_x);
    let _ = writeln!(s, "single_mode_y = {}", th.single_mode_y);
    let _ = writeln!(s, "two_mode = {}", th.two_mode);
    let _ = writeln!(s, "coherent_x = {}", th.coherent_x);
    let _ = writeln!(s, "coherent_y = {}", th.coherent_y);
    if let Ok(bd) = bright_dark_decompose(&p) {
        let _ = writeln!(s, "[bright_dark]");
        let _ = writeln!(s, "bright = ({}, {})", fmt_f(bd.bright.0), fmt_f(bd.bright.1));
        let _ = writeln!(s, "dark = ({}, {})", fmt_f(bd.dark.0), fmt_f(bd.dark.1));
    }
    let sol = eigensolve(&build_drift_matrix(&p))?;
    let _ = writeln!(s, "[eigenvalues]");
    let _ = writeln!(s, "stable = {}", sol.is_stable());
    for q in &sol.pairs {
        let _ = writeln!(
            s,
            "{} = {} kHz, half_width {} kHz, photonic {}",
            q.label.as_str(),
            k(q.frequency()),
            k(q.half_width()),
            fmt_f(q.composition.photonic)
        );
    }
    Ok(vec![write_text(&cfg.output.dir.join("budget.txt"), &s)?])
}

fn cmd_oracle(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let p = cfg.resolve()?;
    let traj = cfg.trajectory(&p);
    let out = simulate_psd(&p, &traj, &WelchOptions::new(cfg.oracle.segment_length))?;
    let auto = default_band(&p)?;
    let band =
        (cfg.oracle.band_start_khz.map(khz).unwrap_or(auto.0), cfg.oracle.band_stop_khz.map(khz).unwrap_or(auto.1));
    let cx = compare_with_analytic(&out.b_x, &p, Mode::X, band)?;
    let cy = compare_with_analytic(&out.b_y, &p, Mode::Y, band)?;

    let mut t = Table::new("oracle", Some(&p));
    t.note(format!("seed = {}", traj.seed));
    t.note(format!("dt_s = {}", fmt_f(traj.dt)));
    t.note(format!("n_steps = {}", traj.n_steps));
    t.note(format!("segments = {}", out.segments));
    t.note(format!("rms_error_x = {}", fmt_f(cx.rms_error)));
    t.note(format!("rms_error_y = {}", fmt_f(cy.rms_error)));
    t.unit("freq_khz", "kHz");
    t.unit("psd_*, analytic_*", "quanta/Hz, classical noise");
    t.columns(&["freq_khz", "psd_bx", "analytic_bx", "psd_by", "analytic_by"]);
    for k in 0..cx.frequencies.len() {
        t.row(&[to_khz(cx.frequencies[k]), cx.simulated[k], cx.analytic[k], cy.simulated[k], cy.analytic[k]]);
    }
    let csv = t.write(&cfg.output.dir.join("oracle.csv"))?;
    let report = format!(
        "seed = {}\nsegments = {}\nband_khz = [{}, {}]\nrms_error_x = {}\nrms_error_y = {}\n",
        traj.seed,
        out.segments,
        fmt_f(to_khz(band.0)),
        fmt_f(to_khz(band.1)),
        fmt_f(cx.rms_error),
        fmt_f(cy.rms_error)
    );
    Ok(vec![csv, write_text(&cfg.output.dir.join("oracle.txt"), &report)?])
}
