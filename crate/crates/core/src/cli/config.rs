//! Run configuration assembled from defaults, a `key = value` file, the
//! environment and command-line flags, in that order of precedence.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::nmor_model::MediumParams;
use crate::pattern_image::{BitDepth, ImageGeometry, NoiseKind, NoiseSpec, Sampling};
use crate::rotation_estimator::{Annulus, EstimatorConfig};

/// Overrides the output directory unless `--output-dir` is given.
pub const OUTPUT_DIR_ENV: &str = "OAMROT_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: MediumParams,
    pub width: usize,
    pub height: usize,
    /// `None` puts the axis at the image center.
    pub center_x: Option<f64>,
    pub center_y: Option<f64>,
    pub pixels_per_waist: f64,
    pub sampling: Sampling,
    pub bit_depth: BitDepth,
    pub noise: NoiseSpec,
    pub estimator: EstimatorConfig,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let g = ImageGeometry::default();
        Self {
            params: MediumParams::default(),
            width: g.width,
            height: g.height,
            center_x: None,
            center_y: None,
            pixels_per_waist: g.pixels_per_waist,
            sampling: Sampling::PixelCenter,
            bit_depth: BitDepth::Eight,
            noise: NoiseSpec::default(),
            estimator: EstimatorConfig::default(),
            output_dir: PathBuf::from("."),
            seed: 0,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("{key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        v => Err(Error::InvalidParameter(format!("{key}: expected a boolean, got {v:?}"))),
    }
}

impl RunConfig {
    /// Keys accepted by [`RunConfig::set`] (dashes and underscores are interchangeable).
    pub const KEYS: &'static [&'static str] = &[
        "l",
        "linewidth",
        "transit-rate",
        "transit-ratio",
        "kappa2",
        "detuning",
        "cell-length",
        "absorption-length",
        "larmor-coeff",
        "width",
        "height",
        "center-x",
        "center-y",
        "pixels-per-waist",
        "supersample",
        "bit-depth",
        "noise",
        "sigma",
        "peak-counts",
        "seed",
        "ladder",
        "window-halfwidth",
        "mask-r-min",
        "mask-r-max",
        "refine",
        "output-dir",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let norm = key.trim().replace('_', "-");
        let k = norm.as_str();
        match k {
            "l" => self.params.l = parse(k, value)?,
            "linewidth" => self.params.linewidth = parse(k, value)?,
            "transit-rate" => self.params.transit_rate = parse(k, value)?,
            "transit-ratio" => {
                let r: f64 = parse(k, value)?;
                self.params = self.params.with_transit_ratio(r);
            }
            "kappa2" => self.params.kappa2 = parse(k, value)?,
            "detuning" => self.params.detuning = parse(k, value)?,
            "cell-length" => self.params.cell_length = parse(k, value)?,
            "absorption-length" => self.params.absorption_length = parse(k, value)?,
            "larmor-coeff" => self.params.larmor_coeff = parse(k, value)?,
            "width" => self.width = parse(k, value)?,
            "height" => self.height = parse(k, value)?,
            "center-x" => self.center_x = Some(parse(k, value)?),
            "center-y" => self.center_y = Some(parse(k, value)?),
            "pixels-per-waist" => self.pixels_per_waist = parse(k, value)?,
            "supersample" => {
                self.sampling = if parse_bool(k, value)? {
                    Sampling::Supersample2x2
                } else {
                    Sampling::PixelCenter
                }
            }
            "bit-depth" => self.bit_depth = BitDepth::from_bits(parse(k, value)?)?,
            "noise" => {
                self.noise.kind = match value.trim() {
                    "none" => NoiseKind::None,
                    "gaussian" => NoiseKind::Gaussian,
                    "poisson" => NoiseKind::Poisson,
                    v => {
                        return Err(Error::InvalidParameter(format!(
                            "noise: expected none, gaussian or poisson, got {v:?}"
                        )))
                    }
                }
            }
            "sigma" => self.noise.sigma = parse(k, value)?,
            "peak-counts" => self.noise.peak_counts = parse(k, value)?,
            "seed" => self.seed = parse(k, value)?,
            "ladder" => self.estimator.ladder = value.split(',').map(|s| parse(k, s)).collect::<Result<Vec<f64>>>()?,
            "window-halfwidth" => self.estimator.window_halfwidth = parse(k, value)?,
            "mask-r-min" => self.estimator.mask.r_min = parse(k, value)?,
            "mask-r-max" => self.estimator.mask.r_max = parse(k, value)?,
            "refine" => self.estimator.refine = parse_bool(k, value)?,
            "output-dir" => self.output_dir = PathBuf::from(value.trim()),
            _ => return Err(Error::InvalidParameter(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Apply a flat `key = value` file. Blank lines and `#` comments are ignored.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let config_err = |reason: String| Error::Config {
                path: path.to_path_buf(),
                line: i + 1,
                reason,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| config_err("expected key = value".into()))?;
            self.set(key, value).map_err(|e| config_err(e.to_string()))?;
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<ImageGeometry> {
        ImageGeometry::new(
            self.width,
            self.height,
            self.center_x.unwrap_or((self.width as f64 - 1.0) / 2.0),
            self.center_y.unwrap_or((self.height as f64 - 1.0) / 2.0),
            self.pixels_per_waist,
        )
    }

    pub fn mask(&self) -> Result<Annulus> {
        Annulus::new(self.estimator.mask.r_min, self.estimator.mask.r_max)
    }

    /// Noise for one of several images in a run; each gets its own stream.
    pub fn noise_for(&self, image_index: u64) -> NoiseSpec {
        NoiseSpec {
            seed: self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(image_index),
            ..self.noise
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.geometry()?;
        self.noise.validate()?;
        self.estimator.validate()
    }
}
