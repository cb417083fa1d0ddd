//! The `oamrot` command line.
//!
//! Every subcommand is a thin wrapper over a `cmd_*` function that returns
//! a plain report, so the same code paths are reachable from tests and
//! from the examples. Output is deterministic for a given set of flags and
//! seed.

mod config;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use config::{RunConfig, OUTPUT_DIR_ENV};

use crate::error::{Error, Result};
use crate::magnetometer::{
    calibrate_offset, fit_symmetry_center, invert_theta, precision, CalibrationMethod, CalibrationOptions,
    CalibrationResult, FieldSweepRecord, DEFAULT_ANGLE_ACCURACY_DEG,
};
use crate::nmor_model::{rotation_angle, sweep, weak_field_slope, DispersionSample};
use crate::oam_state::ScalarPattern;
use crate::pattern_image::{add_noise, read_image, render_with, write_image, PatternImage};
use crate::rotation_estimator::{estimate_rotation, RotationEstimate};

/// Exit status for bad input (flags, files, parameters).
pub const EXIT_INPUT: i32 = 2;
/// Exit status for failures of the numerical model.
pub const EXIT_NUMERIC: i32 = 3;

pub fn exit_code(err: &Error) -> i32 {
    if err.is_numeric_domain() {
        EXIT_NUMERIC
    } else {
        EXIT_INPUT
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "oamrot",
    version,
    about = "Magnetic-field-induced rotation of OAM interference patterns"
)]
pub struct Cli {
    /// Flat `key = value` file; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(flatten)]
    pub overrides: Overrides,

    #[command(subcommand)]
    pub command: Command,
}

/// Settings shared by every subcommand. Same names as the config keys.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// OAM number of the beam
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub l: Option<i32>,
    /// Absorption linewidth, MHz
    #[arg(long, global = true)]
    pub linewidth: Option<f64>,
    /// Transit relaxation rate, MHz
    #[arg(long, global = true)]
    pub transit_rate: Option<f64>,
    /// Transit relaxation rate as a fraction of the linewidth
    #[arg(long, global = true)]
    pub transit_ratio: Option<f64>,
    #[arg(long, global = true)]
    pub kappa2: Option<f64>,
    /// Detuning from resonance, MHz
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub detuning: Option<f64>,
    /// Vapor-cell length, cm
    #[arg(long, global = true)]
    pub cell_length: Option<f64>,
    /// Unsaturated absorption length, cm
    #[arg(long, global = true)]
    pub absorption_length: Option<f64>,
    /// Larmor frequency per gauss, MHz/G
    #[arg(long, global = true)]
    pub larmor_coeff: Option<f64>,
    #[arg(long, global = true)]
    pub width: Option<usize>,
    #[arg(long, global = true)]
    pub height: Option<usize>,
    #[arg(long, global = true)]
    pub center_x: Option<f64>,
    #[arg(long, global = true)]
    pub center_y: Option<f64>,
    #[arg(long, global = true)]
    pub pixels_per_waist: Option<f64>,
    #[arg(long, global = true)]
    pub supersample: Option<bool>,
    /// 8 or 16
    #[arg(long, global = true)]
    pub bit_depth: Option<u32>,
    /// none, gaussian or poisson
    #[arg(long, global = true)]
    pub noise: Option<String>,
    /// Gaussian noise, fraction of peak intensity
    #[arg(long, global = true)]
    pub sigma: Option<f64>,
    /// Poisson noise, mean counts at the peak pixel
    #[arg(long, global = true)]
    pub peak_counts: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Comma-separated scan steps in degrees, coarse to fine
    #[arg(long, global = true)]
    pub ladder: Option<String>,
    #[arg(long, global = true)]
    pub window_halfwidth: Option<f64>,
    #[arg(long, global = true)]
    pub mask_r_min: Option<f64>,
    #[arg(long, global = true)]
    pub mask_r_max: Option<f64>,
    #[arg(long, global = true)]
    pub refine: Option<bool>,
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
}

impl Overrides {
    fn pairs(&self) -> Vec<(&'static str, String)> {
        fn push<T: ToString>(out: &mut Vec<(&'static str, String)>, key: &'static str, v: &Option<T>) {
            if let Some(v) = v {
                out.push((key, v.to_string()));
            }
        }
        let mut out = Vec::new();
        push(&mut out, "l", &self.l);
        push(&mut out, "linewidth", &self.linewidth);
        push(&mut out, "transit-rate", &self.transit_rate);
        push(&mut out, "transit-ratio", &self.transit_ratio);
        push(&mut out, "kappa2", &self.kappa2);
        push(&mut out, "detuning", &self.detuning);
        push(&mut out, "cell-length", &self.cell_length);
        push(&mut out, "absorption-length", &self.absorption_length);
        push(&mut out, "larmor-coeff", &self.larmor_coeff);
        push(&mut out, "width", &self.width);
        push(&mut out, "height", &self.height);
        push(&mut out, "center-x", &self.center_x);
        push(&mut out, "center-y", &self.center_y);
        push(&mut out, "pixels-per-waist", &self.pixels_per_waist);
        push(&mut out, "supersample", &self.supersample);
        push(&mut out, "bit-depth", &self.bit_depth);
        push(&mut out, "noise", &self.noise);
        push(&mut out, "sigma", &self.sigma);
        push(&mut out, "peak-counts", &self.peak_counts);
        push(&mut out, "seed", &self.seed);
        push(&mut out, "ladder", &self.ladder);
        push(&mut out, "window-halfwidth", &self.window_halfwidth);
        push(&mut out, "mask-r-min", &self.mask_r_min);
        push(&mut out, "mask-r-max", &self.mask_r_max);
        push(&mut out, "refine", &self.refine);
        if let Some(p) = &self.output_dir {
            out.push(("output-dir", p.display().to_string()));
        }
        out
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rotation angle at one field
    Theta {
        #[arg(long, allow_negative_numbers = true)]
        b_gauss: f64,
        /// Report angles in the orientation where the weak-field slope is positive
        #[arg(long)]
        positive_slope: bool,
    },
    /// Rotation angle over a field range, as CSV `b_gauss,theta_deg`
    Sweep {
        #[arg(long, allow_negative_numbers = true)]
        b_start: f64,
        #[arg(long, allow_negative_numbers = true)]
        b_end: f64,
        #[arg(long)]
        steps: usize,
        /// Defaults to `<output-dir>/sweep.csv`
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        positive_slope: bool,
    },
    /// Render the pattern at one field as PGM
    Render {
        #[arg(long, allow_negative_numbers = true)]
        b_gauss: f64,
        /// Defaults to `<output-dir>/pattern.pgm`
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rotation between two PGM patterns
    Estimate {
        reference: PathBuf,
        target: PathBuf,
        /// Write the finest correlation curve as CSV `angle_deg,score`
        #[arg(long)]
        curve_out: Option<PathBuf>,
    },
    /// Field from a rotation angle, on the weak-field branch
    Invert {
        #[arg(long, allow_negative_numbers = true)]
        theta_deg: f64,
        #[arg(long)]
        positive_slope: bool,
    },
    /// Synthetic end-to-end measurement of one field
    Pipeline {
        #[arg(long, allow_negative_numbers = true)]
        b_gauss: f64,
    },
    /// Background field from the zero-current pattern angle
    Calibrate {
        #[arg(long, allow_negative_numbers = true)]
        theta_deg: f64,
        /// offset_slope or full_inversion
        #[arg(long, default_value = "offset_slope")]
        method: String,
        /// Slope in deg/G to use instead of the model's weak-field slope
        #[arg(long, allow_negative_numbers = true)]
        slope_override: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_ANGLE_ACCURACY_DEG)]
        angle_accuracy_deg: f64,
    },
    /// Zero-field point from a field sweep CSV `coil_gauss,theta_deg`
    Fit {
        #[arg(long)]
        data: PathBuf,
    },
}

/// Defaults, then the config file, then the environment, then flags.
pub fn build_config(config_path: Option<&Path>, overrides: &Overrides) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(p) = config_path {
        cfg.apply_file(p)?;
    }
    if let Ok(dir) = std::env::var(OUTPUT_DIR_ENV) {
        if !dir.is_empty() {
            cfg.output_dir = PathBuf::from(dir);
        }
    }
    for (k, v) in overrides.pairs() {
        cfg.set(k, &v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaReport {
    pub b_gauss: f64,
    pub theta_rad: f64,
    pub theta_deg: f64,
}

fn orientation(config: &RunConfig, positive_slope: bool) -> f64 {
    if positive_slope {
        weak_field_slope(&config.params).signum()
    } else {
        1.0
    }
}

pub fn cmd_theta(b_gauss: f64, config: &RunConfig, positive_slope: bool) -> ThetaReport {
    let theta = orientation(config, positive_slope) * rotation_angle(b_gauss, &config.params);
    ThetaReport {
        b_gauss,
        theta_rad: theta,
        theta_deg: theta.to_degrees(),
    }
}

/// `steps` fields evenly spaced from `b_start` to `b_end` inclusive.
pub fn sweep_fields(b_start: f64, b_end: f64, steps: usize) -> Result<Vec<f64>> {
    match steps {
        0 => Err(Error::InvalidParameter("steps must be at least 1".into())),
        1 => Ok(vec![b_start]),
        n => {
            let dx = (b_end - b_start) / (n - 1) as f64;
            Ok((0..n)
                .map(|i| if i + 1 == n { b_end } else { b_start + i as f64 * dx })
                .collect())
        }
    }
}

pub fn cmd_sweep(b_start: f64, b_end: f64, steps: usize, config: &RunConfig, positive_slope: bool) -> Result<String> {
    let sign = orientation(config, positive_slope);
    let samples: Vec<DispersionSample> = sweep(&config.params, &sweep_fields(b_start, b_end, steps)?);
    let mut out = String::from("b_gauss,theta_deg\n");
    for s in samples {
        out.push_str(&format!("{},{}\n", s.b_gauss, sign * s.theta_deg));
    }
    Ok(out)
}

/// Noiseless pattern at the rotation produced by field `b_gauss`.
pub fn render_at_field(b_gauss: f64, config: &RunConfig) -> Result<PatternImage> {
    let theta = rotation_angle(b_gauss, &config.params);
    let pattern = ScalarPattern::new(config.params.l, theta)?;
    Ok(render_with(&pattern, &config.geometry()?, config.sampling)?.with_bit_depth(config.bit_depth))
}

/// Rendered pattern with the configured noise applied.
pub fn cmd_render(b_gauss: f64, config: &RunConfig) -> Result<PatternImage> {
    add_noise(&render_at_field(b_gauss, config)?, &config.noise_for(0))
}

/// Load a PGM with the configured optic axis and scale.
pub fn load_pattern(path: &Path, config: &RunConfig) -> Result<PatternImage> {
    let img = read_image(path)?;
    let g = img.geometry;
    let cx = config.center_x.unwrap_or((g.width as f64 - 1.0) / 2.0);
    let cy = config.center_y.unwrap_or((g.height as f64 - 1.0) / 2.0);
    img.with_optics(cx, cy, config.pixels_per_waist)
}

pub fn cmd_estimate(reference: &Path, target: &Path, config: &RunConfig) -> Result<RotationEstimate> {
    let r = load_pattern(reference, config)?;
    let t = load_pattern(target, config)?;
    estimate_rotation(&r, &t, &config.estimator, config.params.l)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvertReport {
    pub theta_deg: f64,
    pub b_gauss: f64,
}

pub fn cmd_invert(theta_deg: f64, config: &RunConfig, positive_slope: bool) -> Result<InvertReport> {
    let literal = orientation(config, positive_slope) * theta_deg;
    Ok(InvertReport {
        theta_deg,
        b_gauss: invert_theta(literal.to_radians(), &config.params)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineReport {
    pub b_true: f64,
    pub theta_true_deg: f64,
    pub theta_est_deg: f64,
    pub b_est: f64,
    pub peak_score: f64,
    /// Field resolution at the estimate for the configured finest step.
    pub precision: f64,
}

impl PipelineReport {
    pub fn error(&self) -> f64 {
        self.b_est - self.b_true
    }
}

/// Render a zero-field reference and a target at `b_true`, add noise,
/// recover the rotation and invert it to a field.
pub fn cmd_pipeline(b_true: f64, config: &RunConfig) -> Result<PipelineReport> {
    let reference = add_noise(&render_at_field(0.0, config)?, &config.noise_for(0))?;
    let target = add_noise(&render_at_field(b_true, config)?, &config.noise_for(1))?;
    let est = estimate_rotation(&reference, &target, &config.estimator, config.params.l)?;
    let b_est = invert_theta(est.angle.to_radians(), &config.params)?;
    let finest = *config.estimator.ladder.last().unwrap_or(&DEFAULT_ANGLE_ACCURACY_DEG);
    Ok(PipelineReport {
        b_true,
        theta_true_deg: rotation_angle(b_true, &config.params).to_degrees(),
        theta_est_deg: est.angle,
        b_est,
        peak_score: est.peak_score,
        precision: precision(finest.max(DEFAULT_ANGLE_ACCURACY_DEG), &config.params, b_est)?,
    })
}

pub fn cmd_calibrate(
    theta_deg: f64,
    method: CalibrationMethod,
    options: &CalibrationOptions,
    config: &RunConfig,
) -> Result<CalibrationResult> {
    calibrate_offset(theta_deg, &config.params, method, options)
}

pub fn cmd_fit(data: &Path, config: &RunConfig) -> Result<CalibrationResult> {
    fit_symmetry_center(&FieldSweepRecord::read(data)?, &config.params)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn out_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

/// Parse `args` (including the program name) and run one command,
/// printing its report to `out`.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    execute(&cli, out)
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let config = build_config(cli.config.as_deref(), &cli.overrides)?;
    match &cli.command {
        Command::Theta {
            b_gauss,
            positive_slope,
        } => {
            let r = cmd_theta(*b_gauss, &config, *positive_slope);
            writeln!(
                out,
                "b_gauss = {}\ntheta_deg = {}\ntheta_rad = {}",
                r.b_gauss, r.theta_deg, r.theta_rad
            )
            .map_err(out_err)?;
        }
        Command::Sweep {
            b_start,
            b_end,
            steps,
            out: path,
            positive_slope,
        } => {
            let csv = cmd_sweep(*b_start, *b_end, *steps, &config, *positive_slope)?;
            let path = path.clone().unwrap_or_else(|| config.output_dir.join("sweep.csv"));
            write_text(&path, &csv)?;
            writeln!(out, "wrote {} rows to {}", steps, path.display()).map_err(out_err)?;
        }
        Command::Render { b_gauss, out: path } => {
            let img = cmd_render(*b_gauss, &config)?;
            let path = path.clone().unwrap_or_else(|| config.output_dir.join("pattern.pgm"));
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            write_image(&img, &path)?;
            let theta = rotation_angle(*b_gauss, &config.params).to_degrees();
            writeln!(out, "theta_deg = {theta}\nwrote {}", path.display()).map_err(out_err)?;
        }
        Command::Estimate {
            reference,
            target,
            curve_out,
        } => {
            let est = cmd_estimate(reference, target, &config)?;
            if let Some(p) = curve_out {
                write_text(p, &est.curve_finest.to_csv())?;
            }
            writeln!(out, "angle_deg = {}\npeak_score = {}", est.angle, est.peak_score).map_err(out_err)?;
        }
        Command::Invert {
            theta_deg,
            positive_slope,
        } => {
            let r = cmd_invert(*theta_deg, &config, *positive_slope)?;
            writeln!(out, "b_gauss = {}\nb_mgauss = {}", r.b_gauss, 1e3 * r.b_gauss).map_err(out_err)?;
        }
        Command::Pipeline { b_gauss } => {
            let r = cmd_pipeline(*b_gauss, &config)?;
            writeln!(
                out,
                "b_true_gauss = {}\ntheta_true_deg = {}\ntheta_est_deg = {}\nb_est_gauss = {}\nerror_gauss = {}\nerror_mgauss = {}\nprecision_gauss = {}",
                r.b_true,
                r.theta_true_deg,
                r.theta_est_deg,
                r.b_est,
                r.error(),
                1e3 * r.error(),
                r.precision
            )
            .map_err(out_err)?;
        }
        Command::Calibrate {
            theta_deg,
            method,
            slope_override,
            angle_accuracy_deg,
        } => {
            let options = CalibrationOptions {
                angle_accuracy_deg: *angle_accuracy_deg,
                slope_override: *slope_override,
            };
            let r = cmd_calibrate(*theta_deg, method.parse()?, &options, &config)?;
            write!(out, "{r}").map_err(out_err)?;
        }
        Command::Fit { data } => {
            let r = cmd_fit(data, &config)?;
            write!(out, "{r}").map_err(out_err)?;
        }
    }
    Ok(())
}
