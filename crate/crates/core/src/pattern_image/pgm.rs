//! Binary portable graymap (P5).
//!
//! Written as `P5\n<width> <height>\n<maxval>\n` followed by big-endian
//! samples, one byte each for maxval < 256 and two otherwise. Intensities
//! `[0, max_pixel]` map linearly to `[0, maxval]` with round-half-up.
//! Reading accepts comments and arbitrary whitespace in the header and
//! returns intensities in `[0, 1]`.

use std::fs;
use std::path::Path;

use super::{BitDepth, ImageGeometry, PatternImage};
use crate::error::{Error, Result};

/// Raw decoded graymap.
#[derive(Debug, Clone, PartialEq)]
pub struct PgmData {
    pub width: usize,
    pub height: usize,
    pub maxval: u32,
    pub samples: Vec<u16>,
}

impl PgmData {
    pub fn intensities(&self) -> Vec<f64> {
        let m = f64::from(self.maxval);
        self.samples.iter().map(|&s| f64::from(s) / m).collect()
    }
}

/// Quantize and serialize a row-major intensity array.
pub fn encode_pgm(width: usize, height: usize, pixels: &[f64], depth: BitDepth) -> Result<Vec<u8>> {
    if width == 0 || height == 0 || pixels.len() != width * height {
        return Err(Error::InvalidParameter(format!(
            "{} pixels do not fill a {width}x{height} image",
            pixels.len()
        )));
    }
    let maxval = depth.maxval();
    let peak = pixels.iter().copied().fold(0.0, f64::max);
    let mut out = format!("P5\n{width} {height}\n{maxval}\n").into_bytes();
    out.reserve(pixels.len() * usize::from(depth.bits() / 8));
    for &v in pixels {
        let q = if peak > 0.0 {
            (v / peak * f64::from(maxval) + 0.5)
                .floor()
                .clamp(0.0, f64::from(maxval)) as u32
        } else {
            0
        };
        match depth {
            BitDepth::Eight => out.push(q as u8),
            BitDepth::Sixteen => out.extend_from_slice(&(q as u16).to_be_bytes()),
        }
    }
    Ok(out)
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&c| c != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::MalformedPgm(format!("missing {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::MalformedPgm(format!("{what} out of range")))
    }
}

/// Parse a P5 graymap. `expected` rejects files whose maxval does not fit
/// the given depth.
pub fn decode_pgm(bytes: &[u8], expected: Option<BitDepth>) -> Result<PgmData> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(Error::MalformedPgm("missing P5 magic".into()));
    }
    let mut h = Header { bytes, pos: 2 };
    let width = h.number("width")? as usize;
    let height = h.number("height")? as usize;
    let maxval = h.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::MalformedPgm(format!("empty image {width}x{height}")));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::UnsupportedMaxval {
            maxval,
            expected_bits: None,
        });
    }
    if let Some(depth) = expected {
        if maxval > depth.maxval() {
            return Err(Error::UnsupportedMaxval {
                maxval,
                expected_bits: Some(depth.bits()),
            });
        }
    }
    match bytes.get(h.pos) {
        Some(b) if b.is_ascii_whitespace() => h.pos += 1,
        _ => return Err(Error::MalformedPgm("no whitespace after maxval".into())),
    }
    let wide = maxval > 255;
    let bytes_per = if wide { 2 } else { 1 };
    let expected_len = width * height * bytes_per;
    let payload = &bytes[h.pos..];
    if payload.len() < expected_len {
        return Err(Error::TruncatedPgm {
            expected: expected_len,
            found: payload.len(),
        });
    }
    let samples: Vec<u16> = if wide {
        payload[..expected_len]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    } else {
        payload[..expected_len].iter().map(|&b| u16::from(b)).collect()
    };
    if let Some(s) = samples.iter().find(|&&s| u32::from(s) > maxval) {
        return Err(Error::MalformedPgm(format!("sample {s} exceeds maxval {maxval}")));
    }
    Ok(PgmData {
        width,
        height,
        maxval,
        samples,
    })
}

pub fn write_image(image: &PatternImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let g = &image.geometry;
    let bytes = encode_pgm(g.width, g.height, &image.pixels, image.bit_depth)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Read a graymap with the optic axis at the image center and the default
/// scale; use [`PatternImage::with_optics`] to override.
pub fn read_image(path: impl AsRef<Path>) -> Result<PatternImage> {
    read(path.as_ref(), None)
}

/// As [`read_image`], rejecting files whose maxval exceeds `depth`.
pub fn read_image_expecting(path: impl AsRef<Path>, depth: BitDepth) -> Result<PatternImage> {
    read(path.as_ref(), Some(depth))
}

fn read(path: &Path, expected: Option<BitDepth>) -> Result<PatternImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let pgm = decode_pgm(&bytes, expected)?;
    let geometry = ImageGeometry::new(
        pgm.width,
        pgm.height,
        (pgm.width as f64 - 1.0) / 2.0,
        (pgm.height as f64 - 1.0) / 2.0,
        ImageGeometry::DEFAULT_PIXELS_PER_WAIST,
    )?;
    let depth = if pgm.maxval > 255 {
        BitDepth::Sixteen
    } else {
        BitDepth::Eight
    };
    Ok(PatternImage::new(geometry, pgm.intensities())?.with_bit_depth(depth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oam_state::ScalarPattern;
    use crate::pattern_image::render;
    use proptest::prelude::*;

    #[test]
    fn two_by_two_bytes() {
        let bytes = encode_pgm(2, 2, &[0.0, 0.5, 0.75, 1.0], BitDepth::Eight).unwrap();
        assert_eq!(&bytes[..], b"P5\n2 2\n255\n\x00\x80\xbf\xff");
        let back = decode_pgm(&bytes, Some(BitDepth::Eight)).unwrap();
        assert_eq!(back.samples, vec![0, 128, 191, 255]);
    }

    #[test]
    fn sixteen_bit_is_big_endian() {
        let bytes = encode_pgm(2, 1, &[0.5, 1.0], BitDepth::Sixteen).unwrap();
        assert_eq!(&bytes[..], b"P5\n2 1\n65535\n\x80\x00\xff\xff");
    }

    #[test]
    fn header_with_comments() {
        let data = b"P5 # made by hand\n2 # w\n1\n# maxval next\n255 \x07\x09";
        let p = decode_pgm(data, None).unwrap();
        assert_eq!((p.width, p.height, p.maxval), (2, 1, 255));
        assert_eq!(p.samples, vec![7, 9]);
    }

    #[test]
    fn format_errors() {
        assert!(matches!(
            decode_pgm(b"P2\n2 2\n255\n", None),
            Err(Error::MalformedPgm(_))
        ));
        assert!(matches!(decode_pgm(b"P5\n2\n", None), Err(Error::MalformedPgm(_))));
        assert!(matches!(
            decode_pgm(b"P5\n2 2\n255\n\x01\x02", None),
            Err(Error::TruncatedPgm { expected: 4, found: 2 })
        ));
        assert!(matches!(
            decode_pgm(b"P5\n1 1\n300\n\x00\x10", Some(BitDepth::Eight)),
            Err(Error::UnsupportedMaxval { maxval: 300, .. })
        ));
        assert!(decode_pgm(b"P5\n1 1\n300\n\x00\x10", None).is_ok());
        assert!(matches!(
            decode_pgm(b"P5\n1 1\n70000\n\x00\x10", None),
            Err(Error::UnsupportedMaxval { .. })
        ));
        assert!(matches!(
            decode_pgm(b"P5\n1 1\n100\n\xff", None),
            Err(Error::MalformedPgm(_))
        ));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ring.pgm");
        let img = render(
            &ScalarPattern::new(2, 0.3).unwrap(),
            &ImageGeometry::centered(64, 12.0).unwrap(),
        )
        .unwrap()
        .with_bit_depth(BitDepth::Sixteen);
        write_image(&img, &path).unwrap();
        let back = read_image(&path).unwrap().with_optics(31.5, 31.5, 12.0).unwrap();
        assert_eq!(back.geometry, img.geometry);
        assert_eq!(back.bit_depth, BitDepth::Sixteen);
        let peak = img.max_pixel();
        for (a, b) in img.pixels.iter().zip(&back.pixels) {
            assert!((a / peak - b).abs() <= 0.5 / 65535.0 + 1e-15);
        }
        assert!(matches!(
            read_image(dir.path().join("missing.pgm")),
            Err(Error::Io { .. })
        ));
    }

    proptest! {
        #[test]
        fn quantization_error_bounded(vals in prop::collection::vec(0.0f64..10.0, 256),
                                      wide in any::<bool>()) {
            let depth = if wide { BitDepth::Sixteen } else { BitDepth::Eight };
            let bytes = encode_pgm(16, 16, &vals, depth).unwrap();
            let back = decode_pgm(&bytes, Some(depth)).unwrap().intensities();
            let peak = vals.iter().copied().fold(0.0, f64::max);
            let step = 0.5 / f64::from(depth.maxval());
            for (a, b) in vals.iter().zip(&back) {
                let norm = if peak > 0.0 { a / peak } else { 0.0 };
                prop_assert!((norm - b).abs() <= step + 1e-12);
            }
        }
    }
}
