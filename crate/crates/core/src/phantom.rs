//! Synthetic test images with exactly known ground truth.
//!
//! A phantom is a constant background with disks and rectangles painted at a
//! single object intensity. Noise is applied to the image only; the mask is
//! the noiseless object set.
//!
//! Specs are read from flat `key=value` text, one key per line, `#` comments:
//!
//! ```text
//! width=128
//! height=128
//! background=0.25
//! object=0.75
//! disk=40,64,20        # center x, center y, radius (repeatable)
//! rect=10,10,8,4       # x, y, width, height (repeatable)
//! noise=gaussian:0.15  # none | gaussian:<sigma> | salt_pepper:<prob>
//! seed=1
//! ```

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::metrics::BinaryMask;
use crate::model::GrayImage;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Disk { cx: f64, cy: f64, radius: f64 },
    Rect { x: usize, y: usize, w: usize, h: usize },
}

impl Shape {
    /// Parses `cx,cy,r`.
    pub fn disk_from_str(value: &str) -> Option<Self> {
        let v = parse_list::<f64>(value, 3)?;
        Some(Shape::Disk {
            cx: v[0],
            cy: v[1],
            radius: v[2],
        })
    }

    /// Parses `x,y,w,h`.
    pub fn rect_from_str(value: &str) -> Option<Self> {
        let v = parse_list::<usize>(value, 4)?;
        Some(Shape::Rect {
            x: v[0],
            y: v[1],
            w: v[2],
            h: v[3],
        })
    }

    /// Disks use the center-in-circle rule `(x-cx)² + (y-cy)² ≤ r²`.
    fn contains(&self, x: usize, y: usize) -> bool {
        match *self {
            Shape::Disk { cx, cy, radius } => {
                let dx = x as f64 - cx;
                let dy = y as f64 - cy;
                dx * dx + dy * dy <= radius * radius
            }
            Shape::Rect { x: rx, y: ry, w, h } => x >= rx && x < rx + w && y >= ry && y < ry + h,
        }
    }

    fn check_bounds(&self, width: usize, height: usize) -> Result<()> {
        let inside = match *self {
            Shape::Disk { cx, cy, radius } => {
                radius >= 0.0
                    && cx - radius >= 0.0
                    && cy - radius >= 0.0
                    && cx + radius <= (width - 1) as f64
                    && cy + radius <= (height - 1) as f64
            }
            Shape::Rect { x, y, w, h } => w > 0 && h > 0 && x + w <= width && y + h <= height,
        };
        if inside {
            Ok(())
        } else {
            Err(Error::InvalidSpec(format!("{self:?} extends past the {width}x{height} image")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Noise {
    #[default]
    None,
    /// Additive zero-mean Gaussian, clamped to `[0, 1]`.
    Gaussian { sigma: f64 },
    /// Each pixel independently replaced with probability `prob` by 0 or 1.
    SaltPepper { prob: f64 },
}

impl fmt::Display for Noise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Noise::None => write!(f, "none"),
            Noise::Gaussian { sigma } => write!(f, "gaussian:{sigma}"),
            Noise::SaltPepper { prob } => write!(f, "salt_pepper:{prob}"),
        }
    }
}

impl FromStr for Noise {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("none") {
            return Ok(Noise::None);
        }
        let (kind, value) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidSpec(format!("bad noise `{s}`")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::InvalidSpec(format!("bad noise parameter in `{s}`")))?;
        match kind.trim().to_ascii_lowercase().as_str() {
            "gaussian" => Ok(Noise::Gaussian { sigma: value }),
            "salt_pepper" | "saltpepper" | "salt-pepper" => Ok(Noise::SaltPepper { prob: value }),
            other => Err(Error::InvalidSpec(format!("unknown noise kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomSpec {
    pub width: usize,
    pub height: usize,
    pub background_intensity: f64,
    pub object_intensity: f64,
    pub objects: Vec<Shape>,
    pub noise: Noise,
    pub seed: u64,
}

impl PhantomSpec {
    /// 128×128, two disks of radius 20 and 16 at intensity 0.75 on a 0.25
    /// background.
    pub fn two_disk(noise: Noise, seed: u64) -> Self {
        Self {
            width: 128,
            height: 128,
            background_intensity: 0.25,
            object_intensity: 0.75,
            objects: vec![
                Shape::Disk {
                    cx: 40.0,
                    cy: 64.0,
                    radius: 20.0,
                },
                Shape::Disk {
                    cx: 90.0,
                    cy: 64.0,
                    radius: 16.0,
                },
            ],
            noise,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidSpec("width and height must be at least 1".into()));
        }
        for v in [self.background_intensity, self.object_intensity] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidSpec(format!("intensity {v} outside [0, 1]")));
            }
        }
        if self.background_intensity == self.object_intensity {
            return Err(Error::InvalidSpec(
                "background and object intensities must differ".into(),
            ));
        }
        for shape in &self.objects {
            shape.check_bounds(self.width, self.height)?;
        }
        match self.noise {
            Noise::Gaussian { sigma } if !(sigma >= 0.0) || !sigma.is_finite() => {
                Err(Error::InvalidSpec(format!("sigma must be >= 0, got {sigma}")))
            }
            Noise::SaltPepper { prob } if !(0.0..=1.0).contains(&prob) => Err(Error::InvalidSpec(
                format!("salt-and-pepper probability must lie in [0, 1], got {prob}"),
            )),
            _ => Ok(()),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut width = None;
        let mut height = None;
        let mut background = None;
        let mut object = None;
        let mut objects = Vec::new();
        let mut noise = Noise::None;
        let mut seed = 1;

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidSpec(format!("line {}: expected key=value", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| Error::InvalidSpec(format!("line {}: bad {what} `{value}`", lineno + 1));
            match key {
                "width" => width = Some(value.parse().map_err(|_| bad("width"))?),
                "height" => height = Some(value.parse().map_err(|_| bad("height"))?),
                "background" | "background_intensity" => {
                    background = Some(value.parse().map_err(|_| bad("intensity"))?)
                }
                "object" | "object_intensity" => {
                    object = Some(value.parse().map_err(|_| bad("intensity"))?)
                }
                "disk" => objects.push(Shape::disk_from_str(value).ok_or_else(|| bad("disk"))?),
                "rect" => objects.push(Shape::rect_from_str(value).ok_or_else(|| bad("rect"))?),
                "noise" => noise = value.parse()?,
                "seed" => seed = value.parse().map_err(|_| bad("seed"))?,
                other => {
                    return Err(Error::InvalidSpec(format!(
                        "line {}: unknown key `{other}`",
                        lineno + 1
                    )))
                }
            }
        }

        let missing = |k: &str| Error::InvalidSpec(format!("missing key `{k}`"));
        let spec = Self {
            width: width.ok_or_else(|| missing("width"))?,
            height: height.ok_or_else(|| missing("height"))?,
            background_intensity: background.ok_or_else(|| missing("background"))?,
            object_intensity: object.ok_or_else(|| missing("object"))?,
            objects,
            noise,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_spec_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "width={}", self.width);
        let _ = writeln!(s, "height={}", self.height);
        let _ = writeln!(s, "background={}", self.background_intensity);
        let _ = writeln!(s, "object={}", self.object_intensity);
        for shape in &self.objects {
            let _ = match shape {
                Shape::Disk { cx, cy, radius } => writeln!(s, "disk={cx},{cy},{radius}"),
                Shape::Rect { x, y, w, h } => writeln!(s, "rect={x},{y},{w},{h}"),
            };
        }
        let _ = writeln!(s, "noise={}", self.noise);
        let _ = writeln!(s, "seed={}", self.seed);
        s
    }
}

fn parse_list<T: FromStr>(value: &str, len: usize) -> Option<Vec<T>> {
    let items: Vec<T> = value
        .split(',')
        .map(|p| p.trim().parse().ok())
        .collect::<Option<_>>()?;
    (items.len() == len).then_some(items)
}

/// Renders the phantom and its ground-truth mask.
pub fn generate(spec: &PhantomSpec) -> Result<(GrayImage, BinaryMask)> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let mut bits = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            bits.push(spec.objects.iter().any(|s| s.contains(x, y)));
        }
    }
    let mut pixels: Vec<f64> = bits
        .iter()
        .map(|&b| {
            if b {
                spec.object_intensity
            } else {
                spec.background_intensity
            }
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    match spec.noise {
        Noise::None => {}
        Noise::Gaussian { sigma: 0.0 } => {}
        Noise::Gaussian { sigma } => {
            for p in pixels.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *p = (*p + sigma * z).clamp(0.0, 1.0);
            }
        }
        Noise::SaltPepper { prob } => {
            for p in pixels.iter_mut() {
                if rng.gen::<f64>() < prob {
                    *p = if rng.gen::<bool>() { 1.0 } else { 0.0 };
                }
            }
        }
    }

    Ok((GrayImage::new(w, h, pixels)?, BinaryMask::new(w, h, bits)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_disk(noise: Noise) -> PhantomSpec {
        PhantomSpec {
            width: 32,
            height: 24,
            background_intensity: 0.1,
            object_intensity: 0.9,
            objects: vec![Shape::Disk {
                cx: 15.0,
                cy: 11.0,
                radius: 6.0,
            }],
            noise,
            seed: 4,
        }
    }

    #[test]
    fn noiseless_disk() {
        let (image, mask) = generate(&one_disk(Noise::None)).unwrap();
        let mut distinct: Vec<f64> = image.intensities().to_vec();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        assert_eq!(distinct, vec![0.1, 0.9]);
        let mut expected = 0;
        for y in 0..24i64 {
            for x in 0..32i64 {
                if (x - 15) * (x - 15) + (y - 11) * (y - 11) <= 36 {
                    expected += 1;
                }
            }
        }
        assert_eq!(mask.count(), expected);
        for (v, b) in image.intensities().iter().zip(mask.bits()) {
            assert_eq!(*v == 0.9, *b);
        }
    }

    #[test]
    fn zero_sigma_is_noiseless() {
        assert_eq!(
            generate(&one_disk(Noise::Gaussian { sigma: 0.0 })).unwrap(),
            generate(&one_disk(Noise::None)).unwrap()
        );
    }

    #[test]
    fn full_salt_pepper_is_binary_and_reproducible() {
        let spec = one_disk(Noise::SaltPepper { prob: 1.0 });
        let (a, mask_a) = generate(&spec).unwrap();
        assert!(a.intensities().iter().all(|&v| v == 0.0 || v == 1.0));
        let (b, mask_b) = generate(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(mask_a, mask_b);
        assert_eq!(mask_a, generate(&one_disk(Noise::None)).unwrap().1);
    }

    #[test]
    fn gaussian_noise_has_requested_spread() {
        let sigma = 0.1;
        let clean = generate(&PhantomSpec::two_disk(Noise::None, 3)).unwrap().0;
        let noisy = generate(&PhantomSpec::two_disk(Noise::Gaussian { sigma }, 3)).unwrap().0;
        let diffs: Vec<f64> = clean
            .intensities()
            .iter()
            .zip(noisy.intensities())
            .filter(|(_, &n)| n > 0.0 && n < 1.0)
            .map(|(c, n)| n - c)
            .collect();
        let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
        let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (diffs.len() - 1) as f64;
        assert!((var.sqrt() - sigma).abs() < 0.1 * sigma, "{}", var.sqrt());
        assert!(noisy.intensities().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn spec_text_round_trip() {
        let spec = PhantomSpec {
            objects: vec![
                Shape::Disk {
                    cx: 40.0,
                    cy: 64.0,
                    radius: 20.0,
                },
                Shape::Rect {
                    x: 1,
                    y: 2,
                    w: 3,
                    h: 4,
                },
            ],
            ..PhantomSpec::two_disk(Noise::SaltPepper { prob: 0.05 }, 9)
        };
        assert_eq!(PhantomSpec::parse(&spec.to_spec_text()).unwrap(), spec);
    }

    #[test]
    fn spec_parse_errors() {
        let base = "width=8\nheight=8\nbackground=0.1\nobject=0.9\n";
        assert!(PhantomSpec::parse(base).is_ok());
        assert!(PhantomSpec::parse("width=8\n").is_err());
        assert!(PhantomSpec::parse(&format!("{base}disk=4,4,9\n")).is_err());
        assert!(PhantomSpec::parse(&format!("{base}noise=gaussian:-1\n")).is_err());
        assert!(PhantomSpec::parse(&format!("{base}noise=salt_pepper:1.5\n")).is_err());
        assert!(PhantomSpec::parse(&format!("{base}colour=red\n")).is_err());
        assert!(PhantomSpec::parse("width=8\nheight=8\nbackground=0.5\nobject=0.5\n").is_err());
        let with_comments = format!("# a phantom\n{base}rect=0,0,2,2  # corner\n");
        assert_eq!(PhantomSpec::parse(&with_comments).unwrap().objects.len(), 1);
    }
}
