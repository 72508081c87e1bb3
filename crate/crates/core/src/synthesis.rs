//! Clean edge rasterization and the Bernoulli degradation process.

use rand::Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{OrientedRect, Point};
use crate::image::BinaryImage;
use crate::params::DegradationParams;

/// Ground-truth segment: pose, extent and orthogonal motion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub midpoint: Point,
    /// Radians in `[0, 2pi)`.
    pub angle: f64,
    pub length: f64,
    pub width: f64,
    /// Pixels per frame, orthogonal to the edge.
    pub velocity: f64,
    pub direction_sign: i8,
}

impl EdgeSpec {
    pub fn fixed(midpoint: Point, angle: f64, length: f64, width: f64) -> Self {
        Self {
            midpoint,
            angle,
            length,
            width,
            velocity: 0.0,
            direction_sign: 1,
        }
    }

    /// Footprint at `frame_index` frames after the pose was drawn.
    pub fn footprint(&self, frame_index: u32) -> OrientedRect {
        let shift = frame_index as f64 * self.velocity * f64::from(self.direction_sign);
        let center = Point::new(
            self.midpoint.x - shift * self.angle.sin(),
            self.midpoint.y + shift * self.angle.cos(),
        );
        OrientedRect::centered(center, self.angle, self.length, self.width)
    }

    /// Checks that the axis segment at `frame_index` lies in the canvas.
    pub fn check_fits(&self, canvas: (usize, usize), frame_index: u32) -> Result<()> {
        if !(self.length > 0.0) || !(self.width > 0.0) {
            return Err(Error::Geometry(format!(
                "edge needs positive length and width, got {} x {}",
                self.length, self.width
            )));
        }
        if self.direction_sign != 1 && self.direction_sign != -1 {
            return Err(Error::Geometry("direction sign must be +1 or -1".into()));
        }
        let (a, b) = self.footprint(frame_index).axis_endpoints();
        let inside =
            |p: Point| p.x >= 0.0 && p.y >= 0.0 && p.x <= canvas.0 as f64 && p.y <= canvas.1 as f64;
        if inside(a) && inside(b) {
            Ok(())
        } else {
            Err(Error::Geometry(format!(
                "edge at frame {frame_index} leaves the {}x{} canvas",
                canvas.0, canvas.1
            )))
        }
    }
}

/// Clean frame with every pixel whose center lies on the thick segment set.
pub fn rasterize_edge(spec: &EdgeSpec, canvas: (usize, usize), frame_index: u32) -> Result<BinaryImage> {
    spec.check_fits(canvas, frame_index)?;
    let mut img = BinaryImage::new(canvas.0, canvas.1);
    for (x, y) in spec.footprint(frame_index).pixels(canvas.0, canvas.1) {
        img.set(x as usize, y as usize, true);
    }
    Ok(img)
}

/// Samples `I^B v I^F`: iid Bernoulli(`p_b`) everywhere, Bernoulli(`p_f`) on
/// the foreground of `clean`.
pub fn degrade_image<R: Rng + ?Sized>(clean: &BinaryImage, params: DegradationParams, rng: &mut R) -> BinaryImage {
    let (w, h) = clean.dims();
    let mut out = BinaryImage::new(w, h);
    sprinkle(&mut out, params.p_b, rng);
    if params.p_f > 0.0 {
        for (i, &fg) in clean.bits().iter().enumerate() {
            if fg && rng.random_bool(params.p_f) {
                out.set_index(i);
            }
        }
    }
    out
}

/// Sets each pixel with probability `p`, skipping over runs of zeros with
/// geometric gaps.
fn sprinkle<R: Rng + ?Sized>(img: &mut BinaryImage, p: f64, rng: &mut R) {
    let n = img.width() * img.height();
    if p <= 0.0 {
        return;
    }
    if p >= 1.0 {
        (0..n).for_each(|i| img.set_index(i));
        return;
    }
    let gaps = Geometric::new(p).expect("p in (0, 1)");
    let mut i: u64 = 0;
    loop {
        i = i.saturating_add(gaps.sample(rng));
        if i >= n as u64 {
            break;
        }
        img.set_index(i as usize);
        i += 1;
    }
}

/// Frame rate, duration and jump period of a video.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VideoSpec {
    pub fps: f64,
    pub duration: f64,
    pub jump_period: u32,
}

impl VideoSpec {
    pub const PAPER: VideoSpec = VideoSpec {
        fps: 30.0,
        duration: 10.0,
        jump_period: 16,
    };

    pub fn frame_count(&self) -> usize {
        (self.fps * self.duration).round() as usize
    }

    pub fn segment_count(&self) -> usize {
        self.frame_count().div_ceil(self.jump_period as usize)
    }

    fn validate(&self) -> Result<()> {
        if self.frame_count() < 1 || self.jump_period < 1 {
            return Err(Error::InvalidParameter(format!(
                "video needs at least one frame and a positive jump period, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Degraded frames plus the pose used in each jump segment.
#[derive(Clone, Debug, PartialEq)]
pub struct Video {
    pub frames: Vec<BinaryImage>,
    pub poses: Vec<EdgeSpec>,
}

/// Redraws midpoint, angle and (for moving edges) direction of `template`
/// until every pose of a `frames`-long segment fits the canvas. The midpoint
/// is uniform over the central third of the canvas.
pub fn sample_pose<R: Rng + ?Sized>(
    template: &EdgeSpec,
    canvas: (usize, usize),
    frames: u32,
    rng: &mut R,
) -> Result<EdgeSpec> {
    let (w, h) = (canvas.0 as f64, canvas.1 as f64);
    for _ in 0..10_000 {
        let mut pose = *template;
        pose.midpoint = Point::new(rng.random_range(w / 3.0..2.0 * w / 3.0), rng.random_range(h / 3.0..2.0 * h / 3.0));
        pose.angle = rng.random_range(0.0..std::f64::consts::TAU);
        if template.velocity != 0.0 {
            pose.direction_sign = if rng.random_bool(0.5) { 1 } else { -1 };
        }
        if (0..frames.max(1)).all(|f| pose.check_fits(canvas, f).is_ok()) {
            return Ok(pose);
        }
    }
    Err(Error::Geometry(format!(
        "no pose of a {}x{} edge fits the {}x{} canvas",
        template.length, template.width, canvas.0, canvas.1
    )))
}

/// Degrades every frame independently. The first segment uses `spec` as
/// given; the pose is redrawn every `jump_period` frames. `None` yields
/// background-only frames.
pub fn degrade_video<R: Rng + ?Sized>(
    spec: Option<&EdgeSpec>,
    video: VideoSpec,
    params: DegradationParams,
    canvas: (usize, usize),
    rng: &mut R,
) -> Result<Video> {
    video.validate()?;
    let n = video.frame_count();
    let period = video.jump_period as usize;
    let mut frames = Vec::with_capacity(n);
    let mut poses = Vec::new();
    let Some(first) = spec else {
        let blank = BinaryImage::new(canvas.0, canvas.1);
        for _ in 0..n {
            frames.push(degrade_image(&blank, params, rng));
        }
        return Ok(Video { frames, poses });
    };
    for start in (0..n).step_by(period) {
        let len = period.min(n - start) as u32;
        let pose = if start == 0 {
            for f in 0..len {
                first.check_fits(canvas, f)?;
            }
            *first
        } else {
            sample_pose(first, canvas, len, rng)?
        };
        poses.push(pose);
        for f in 0..len {
            let clean = rasterize_edge(&pose, canvas, f)?;
            frames.push(degrade_image(&clean, params, rng));
        }
    }
    Ok(Video { frames, poses })
}
