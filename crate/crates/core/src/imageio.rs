//! Image, mask, label and membership file formats.
//!
//! Grayscale input is binary PGM (`P5`, maxval 255) or 8-bit grayscale PNG,
//! detected by magic bytes. Label images and masks are always written as P5
//! PGM; `write_gray` picks PNG when the path ends in `.png`.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::BinaryMask;
use crate::model::{GrayImage, Matrix};

const PNG_MAGIC: &[u8] = b"\x89PNG\r\n\x1a\n";

/// Per-pixel cluster indices together with the cluster count used for the
/// gray-level mapping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelImage {
    width: usize,
    height: usize,
    clusters: usize,
    labels: Vec<u8>,
}

impl LabelImage {
    pub fn new(width: usize, height: usize, clusters: usize, labels: &[usize]) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: width * height,
                found: labels.len(),
            });
        }
        if clusters == 0 || clusters > 256 {
            return Err(Error::invalid(format!(
                "label images support 1..=256 clusters, got {clusters}"
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l >= clusters) {
            return Err(Error::invalid(format!(
                "label {bad} exceeds cluster count {clusters}"
            )));
        }
        Ok(Self {
            width,
            height,
            clusters,
            labels: labels.iter().map(|&l| l as u8).collect(),
        })
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// Gray level of label `i`: `floor(255·i/(c-1))`, or 0 when `c = 1`.
    pub fn gray_level(&self, label: u8) -> u8 {
        if self.clusters <= 1 {
            0
        } else {
            (255 * usize::from(label) / (self.clusters - 1)) as u8
        }
    }
}

pub fn encode_pgm(width: usize, height: usize, samples: &[u8]) -> Vec<u8> {
    let header = format!("P5\n{width} {height}\n255\n");
    let mut out = Vec::with_capacity(header.len() + samples.len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(samples);
    out
}

/// Reads the next whitespace-delimited header token, skipping `#` comments.
fn header_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() && bytes[*pos] != b'#' {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::MalformedHeader("unexpected end of PGM header".into()));
    }
    Ok(&bytes[start..*pos])
}

fn header_number(bytes: &[u8], pos: &mut usize, what: &str) -> Result<usize> {
    let token = header_token(bytes, pos)?;
    std::str::from_utf8(token)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| {
            Error::MalformedHeader(format!(
                "bad PGM {what} `{}`",
                String::from_utf8_lossy(token)
            ))
        })
}

/// Decodes a P5 PGM into `(width, height, samples)`.
pub fn decode_pgm(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let mut pos = 0;
    let magic = header_token(bytes, &mut pos)?;
    if magic != b"P5" {
        return Err(Error::UnsupportedFormat(format!(
            "PGM magic `{}` (only binary P5 is supported)",
            String::from_utf8_lossy(magic)
        )));
    }
    let width = header_number(bytes, &mut pos, "width")?;
    let height = header_number(bytes, &mut pos, "height")?;
    let maxval = header_number(bytes, &mut pos, "maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader(format!(
            "PGM dimensions {width}x{height}"
        )));
    }
    if maxval != 255 {
        return Err(Error::UnsupportedFormat(format!(
            "PGM maxval {maxval} (only 255 is supported)"
        )));
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => {
            return Err(Error::MalformedHeader(
                "PGM header must end with a single whitespace byte".into(),
            ))
        }
    }
    let expected = width
        .checked_mul(height)
        .ok_or_else(|| Error::MalformedHeader("PGM dimensions overflow".into()))?;
    let payload = &bytes[pos..];
    if payload.len() < expected {
        return Err(Error::TruncatedPayload {
            expected,
            found: payload.len(),
        });
    }
    Ok((width, height, payload[..expected].to_vec()))
}

fn decode_png(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let decoder = png::Decoder::new(bytes);
    let mut reader = decoder.read_info().map_err(png_error)?;
    let info = reader.info();
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Eight {
        return Err(Error::UnsupportedFormat(format!(
            "PNG {:?} at {:?} bits (only 8-bit grayscale is supported)",
            info.color_type, info.bit_depth
        )));
    }
    let (width, height) = (info.width as usize, info.height as usize);
    let mut buf = vec![0; reader.output_buffer_size()];
    let frame = reader.next_frame(&mut buf).map_err(|e| match e {
        png::DecodingError::IoError(ref io) if io.kind() == io::ErrorKind::UnexpectedEof => {
            Error::TruncatedPayload {
                expected: width * height,
                found: 0,
            }
        }
        other => png_error(other),
    })?;
    buf.truncate(frame.buffer_size());
    Ok((width, height, buf))
}

fn png_error(e: png::DecodingError) -> Error {
    match e {
        png::DecodingError::IoError(io) if io.kind() == io::ErrorKind::UnexpectedEof => {
            Error::MalformedHeader("PNG stream ends early".into())
        }
        png::DecodingError::IoError(io) => Error::Io(io),
        other => Error::MalformedHeader(format!("PNG: {other}")),
    }
}

/// Decodes 8-bit samples from PGM or PNG bytes.
pub fn decode_samples(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    if bytes.starts_with(PNG_MAGIC) {
        decode_png(bytes)
    } else if bytes.first() == Some(&b'P') {
        decode_pgm(bytes)
    } else {
        Err(Error::UnsupportedFormat(
            "neither a PGM nor a PNG file".into(),
        ))
    }
}

pub fn decode_gray(bytes: &[u8]) -> Result<GrayImage> {
    let (w, h, samples) = decode_samples(bytes)?;
    GrayImage::from_u8(w, h, &samples)
}

pub fn read_gray(path: impl AsRef<Path>) -> Result<GrayImage> {
    decode_gray(&fs::read(path)?)
}

pub fn encode_png(width: usize, height: usize, samples: &[u8]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, width as u32, height as u32);
        encoder.set_color(png::ColorType::Grayscale);
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = encoder
            .write_header()
            .map_err(|e| Error::Io(io::Error::other(e)))?;
        writer
            .write_image_data(samples)
            .map_err(|e| Error::Io(io::Error::other(e)))?;
    }
    Ok(out)
}

fn is_png_path(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"))
}

/// Writes 8-bit quantized intensities; PNG for `.png` paths, P5 PGM otherwise.
pub fn write_gray(image: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let samples = image.to_u8();
    let bytes = if is_png_path(path) {
        encode_png(image.width(), image.height(), &samples)?
    } else {
        encode_pgm(image.width(), image.height(), &samples)
    };
    fs::write(path, bytes)?;
    Ok(())
}

pub fn encode_labels(labels: &LabelImage) -> Vec<u8> {
    let samples: Vec<u8> = labels.labels.iter().map(|&l| labels.gray_level(l)).collect();
    encode_pgm(labels.width, labels.height, &samples)
}

pub fn write_labels(labels: &LabelImage, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_labels(labels))?;
    Ok(())
}

pub fn encode_mask(mask: &BinaryMask) -> Vec<u8> {
    let samples: Vec<u8> = mask.bits().iter().map(|&b| if b { 255 } else { 0 }).collect();
    encode_pgm(mask.width(), mask.height(), &samples)
}

pub fn write_mask(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_mask(mask))?;
    Ok(())
}

/// Any sample `≥ 128` is object.
pub fn decode_mask(bytes: &[u8]) -> Result<BinaryMask> {
    let (w, h, samples) = decode_samples(bytes)?;
    BinaryMask::new(w, h, samples.iter().map(|&s| s >= 128).collect())
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    decode_mask(&fs::read(path)?)
}

/// Rounds to 9 significant digits and prints the shortest form of the result.
fn nine_digits(v: f64) -> String {
    let rounded: f64 = format!("{v:.8e}").parse().unwrap_or(v);
    format!("{rounded}")
}

/// CSV with header `pixel,c0,c1,...` and one row per point.
pub fn membership_csv<U: AsRef<Matrix> + ?Sized>(u: &U) -> String {
    let u = u.as_ref();
    let mut s = String::from("pixel");
    for i in 0..u.rows() {
        let _ = write!(s, ",c{i}");
    }
    s.push('\n');
    for k in 0..u.cols() {
        let _ = write!(s, "{k}");
        for v in u.column(k) {
            s.push(',');
            s.push_str(&nine_digits(v));
        }
        s.push('\n');
    }
    s
}

pub fn write_membership_csv<U: AsRef<Matrix> + ?Sized>(u: &U, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    out.write_all(membership_csv(u).as_bytes())?;
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn decode_small_pgm() {
        let bytes = encode_pgm(2, 2, &[0, 255, 128, 64]);
        let image = decode_gray(&bytes).unwrap();
        assert_eq!(
            image.intensities(),
            &[0.0, 1.0, 128.0 / 255.0, 64.0 / 255.0]
        );
    }

    #[test]
    fn header_comments_are_skipped() {
        let bytes = b"P5 # magic\n# a comment line\n2 1\n255\n\x07\x09";
        let (w, h, s) = decode_pgm(bytes).unwrap();
        assert_eq!((w, h, s), (2, 1, vec![7, 9]));
    }

    #[test]
    fn pgm_errors_are_distinct() {
        assert!(matches!(
            decode_gray(b"P5\n2 2\n65535\n\0\0\0\0\0\0\0\0"),
            Err(Error::UnsupportedFormat(_))
        ));
        assert!(matches!(
            decode_gray(b"P2\n1 1\n255\n0\n"),
            Err(Error::UnsupportedFormat(_))
        ));
        assert!(matches!(
            decode_gray(b"P5\n2 x\n255\n\0\0"),
            Err(Error::MalformedHeader(_))
        ));
        assert!(matches!(decode_gray(b"P5\n2 2\n"), Err(Error::MalformedHeader(_))));
        assert!(matches!(
            decode_gray(b"P5\n2 2\n255\n\0\0\0"),
            Err(Error::TruncatedPayload {
                expected: 4,
                found: 3
            })
        ));
        assert!(matches!(decode_gray(b"GIF89a"), Err(Error::UnsupportedFormat(_))));
    }

    #[test]
    fn png_round_trip_and_rejects_color() {
        let bytes = encode_png(3, 2, &[0, 10, 20, 200, 255, 128]).unwrap();
        let (w, h, s) = decode_samples(&bytes).unwrap();
        assert_eq!((w, h, s), (3, 2, vec![0, 10, 20, 200, 255, 128]));

        let mut rgb = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut rgb, 1, 1);
            enc.set_color(png::ColorType::Rgb);
            enc.set_depth(png::BitDepth::Eight);
            enc.write_header().unwrap().write_image_data(&[1, 2, 3]).unwrap();
        }
        assert!(matches!(decode_gray(&rgb), Err(Error::UnsupportedFormat(_))));
        assert!(decode_gray(&bytes[..20]).is_err());
    }

    #[test]
    fn label_gray_levels() {
        let labels = LabelImage::new(2, 1, 2, &[0, 1]).unwrap();
        assert_eq!(encode_labels(&labels)[encode_pgm(2, 1, &[]).len()..], [0, 255]);
        let three = LabelImage::new(3, 1, 3, &[0, 1, 2]).unwrap();
        assert_eq!(encode_labels(&three)[encode_pgm(3, 1, &[]).len()..], [0, 127, 255]);
        let one = LabelImage::new(1, 1, 1, &[0]).unwrap();
        assert_eq!(one.gray_level(0), 0);
        assert!(LabelImage::new(1, 1, 2, &[2]).is_err());
    }

    #[test]
    fn mask_threshold_and_round_trip() {
        let m = decode_mask(&encode_pgm(3, 1, &[127, 128, 255])).unwrap();
        assert_eq!(m.bits(), &[false, true, true]);
        let mask = BinaryMask::new(2, 2, vec![true, false, false, true]).unwrap();
        assert_eq!(decode_mask(&encode_mask(&mask)).unwrap(), mask);
    }

    #[test]
    fn membership_csv_format() {
        let u = Matrix::from_rows(&[vec![0.25], vec![0.75]]).unwrap();
        assert_eq!(membership_csv(&u), "pixel,c0,c1\n0,0.25,0.75\n");
        let u = Matrix::from_rows(&[vec![81.0 / 82.0, 0.5], vec![1.0 / 82.0, 0.5]]).unwrap();
        let csv = membership_csv(&u);
        let rows: Vec<&str> = csv.lines().collect();
        assert_eq!(rows[1], "0,0.987804878,0.012195122");
        assert!(rows.iter().all(|r| r.split(',').count() == 3));
    }

    #[test]
    fn files_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let image = GrayImage::from_u8(3, 2, &[0, 1, 2, 253, 254, 255]).unwrap();
        for name in ["a.pgm", "a.png"] {
            let path = dir.path().join(name);
            write_gray(&image, &path).unwrap();
            assert_eq!(read_gray(&path).unwrap(), image);
        }
        assert!(matches!(
            read_gray(dir.path().join("missing.pgm")),
            Err(Error::Io(_))
        ));
    }

    proptest! {
        #[test]
        fn quantized_images_round_trip(w in 1usize..12, h in 1usize..12, seed in any::<u64>()) {
            let samples: Vec<u8> = (0..w * h).map(|i| (seed.wrapping_mul(i as u64 + 1) >> 13) as u8).collect();
            let image = GrayImage::from_u8(w, h, &samples).unwrap();
            prop_assert_eq!(decode_gray(&encode_pgm(w, h, &image.to_u8())).unwrap(), image.clone());
            prop_assert_eq!(decode_gray(&encode_png(w, h, &image.to_u8()).unwrap()).unwrap(), image);
        }

        #[test]
        fn membership_csv_reparses_within_tolerance(seed in any::<u64>()) {
            let u = crate::model::init_membership(3, 7, seed).unwrap();
            let csv = membership_csv(&u);
            for (k, line) in csv.lines().skip(1).enumerate() {
                let fields: Vec<f64> = line.split(',').skip(1).map(|f| f.parse().unwrap()).collect();
                prop_assert_eq!(fields.len(), 3);
                for (i, v) in fields.iter().enumerate() {
                    prop_assert!((v - u.get(i, k)).abs() <= 1e-8);
                }
            }
        }
    }
}
