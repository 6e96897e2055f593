//! Procedural scenes for tests, demos and the example corpora.
//!
//! [`RectWorld`] is a painter's-order stack of axis-aligned rectangles with
//! real-valued edges. Frames point-sample it at pixel centers through an
//! arbitrary image-to-world map, so translations and rotations of the
//! camera are exact.

use rand::Rng;

use crate::curation::{FaceAnnotation, Reason};
use crate::error::Result;
use crate::imaging::{DisparityMap, Frame, VideoClip};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Rect {
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
    rgb: [f64; 3],
}

impl Rect {
    fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }
}

const CELL: f64 = 16.0;

#[derive(Debug, Clone)]
pub struct RectWorld {
    rects: Vec<Rect>,
    background: [f64; 3],
    origin: (f64, f64),
    cols: usize,
    rows: usize,
    /// Rectangle indices overlapping each cell, in painting order.
    cells: Vec<Vec<u32>>,
}

impl RectWorld {
    /// Random rectangles (6-30 px sides) covering `[x0, x0 + width) x
    /// [y0, y0 + height)`, about one per 150 square pixels.
    pub fn random(seed: u64, x0: f64, y0: f64, width: f64, height: f64) -> Self {
        let mut r = rng::stream(seed, &[0x5CE4E]);
        let count = (width * height / 150.0).ceil() as usize;
        let rects = (0..count)
            .map(|_| {
                let (w, h) = (r.random_range(6.0..30.0), r.random_range(6.0..30.0));
                let (x, y) = (
                    r.random_range(x0 - w..x0 + width),
                    r.random_range(y0 - h..y0 + height),
                );
                let luma: f64 = r.random_range(0.05..0.95);
                let rgb = [0, 1, 2].map(|_| (luma + r.random_range(-0.05..0.05)).clamp(0.0, 1.0));
                Rect {
                    x0: x,
                    y0: y,
                    x1: x + w,
                    y1: y + h,
                    rgb,
                }
            })
            .collect();
        Self::build(rects, [0.5; 3], x0, y0, width, height)
    }

    fn build(rects: Vec<Rect>, background: [f64; 3], x0: f64, y0: f64, width: f64, height: f64) -> Self {
        let cols = (width / CELL).ceil().max(1.0) as usize;
        let rows = (height / CELL).ceil().max(1.0) as usize;
        let mut cells = vec![Vec::new(); cols * rows];
        let cell_of = |v: f64, o: f64, n: usize| (((v - o) / CELL).floor().max(0.0) as usize).min(n - 1);
        for (i, rc) in rects.iter().enumerate() {
            if rc.x1 <= x0 || rc.y1 <= y0 || rc.x0 >= x0 + width || rc.y0 >= y0 + height {
                continue;
            }
            for cy in cell_of(rc.y0, y0, rows)..=cell_of(rc.y1, y0, rows) {
                for cx in cell_of(rc.x0, x0, cols)..=cell_of(rc.x1, x0, cols) {
                    cells[cy * cols + cx].push(i as u32);
                }
            }
        }
        Self {
            rects,
            background,
            origin: (x0, y0),
            cols,
            rows,
            cells,
        }
    }

    /// Color at world point `(x, y)`; outside the covered area only the
    /// background shows.
    pub fn sample(&self, x: f64, y: f64) -> [f64; 3] {
        let (cx, cy) = ((x - self.origin.0) / CELL, (y - self.origin.1) / CELL);
        if cx < 0.0 || cy < 0.0 || cx >= self.cols as f64 || cy >= self.rows as f64 {
            return self.background;
        }
        let cell = &self.cells[cy as usize * self.cols + cx as usize];
        cell.iter()
            .rev()
            .map(|&i| &self.rects[i as usize])
            .find(|rc| rc.contains(x, y))
            .map_or(self.background, |rc| rc.rgb)
    }

    /// Renders a `w x h` frame; `to_world` maps a pixel center to world
    /// coordinates.
    pub fn render(&self, w: usize, h: usize, to_world: impl Fn(f64, f64) -> (f64, f64)) -> Result<Frame> {
        Frame::from_fn(w, h, |x, y| {
            let (wx, wy) = to_world(x as f64, y as f64);
            self.sample(wx, wy)
        })
    }

    /// Frame whose top-left pixel sits at world `(ox, oy)`.
    pub fn view(&self, w: usize, h: usize, ox: f64, oy: f64) -> Result<Frame> {
        self.render(w, h, |x, y| (x + ox, y + oy))
    }
}

/// Camera panning over `world` at `velocity` pixels per frame, starting at
/// `start`.
pub fn pan_clip(
    world: &RectWorld,
    w: usize,
    h: usize,
    frames: usize,
    start: (f64, f64),
    velocity: (f64, f64),
) -> Result<VideoClip> {
    let frames = (0..frames)
        .map(|t| world.view(w, h, start.0 + velocity.0 * t as f64, start.1 + velocity.1 * t as f64))
        .collect::<Result<Vec<_>>>()?;
    VideoClip::new(frames, 24.0)
}

/// Static camera with independent per-frame uniform noise of amplitude
/// `noise` (keyed by `seed`).
pub fn static_clip(world: &RectWorld, w: usize, h: usize, frames: usize, noise: f64, seed: u64) -> Result<VideoClip> {
    let base = world.view(w, h, 0.0, 0.0)?;
    let frames = (0..frames)
        .map(|t| {
            let mut r = rng::stream(seed, &[t as u64]);
            Frame::from_fn(w, h, |x, y| {
                base.pixel(x, y).map(|v| v + noise * r.random_range(-1.0..1.0))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    VideoClip::new(frames, 24.0)
}

/// Scales every channel by `gain`.
pub fn darken(clip: &VideoClip, gain: f64) -> Result<VideoClip> {
    VideoClip::new(
        clip.frames().iter().map(|f| f.map_channels(|_, v| v * gain)).collect(),
        clip.fps,
    )
}

/// Concatenates clips of equal dimensions.
pub fn concat(clips: &[VideoClip]) -> Result<VideoClip> {
    let fps = clips.first().map_or(24.0, |c| c.fps);
    VideoClip::new(clips.iter().flat_map(|c| c.frames().iter().cloned()).collect(), fps)
}

/// A textured background at disparity `far` with a textured rectangle in
/// front of it at disparity `near`, covering the middle third.
pub fn layered_scene(w: usize, h: usize, seed: u64, far: f64, near: f64) -> Result<(Frame, DisparityMap)> {
    let back = RectWorld::random(seed, 0.0, 0.0, w as f64, h as f64);
    let front = RectWorld::random(seed ^ 0xF00D, 0.0, 0.0, w as f64, h as f64);
    let inside = |x: usize, y: usize| (w / 3..2 * w / 3).contains(&x) && (h / 3..2 * h / 3).contains(&y);
    let frame = Frame::from_fn(w, h, |x, y| {
        let world = if inside(x, y) { &front } else { &back };
        world.sample(x as f64, y as f64)
    })?;
    let disp = DisparityMap::from_fn(w, h, |x, y| if inside(x, y) { near } else { far })?;
    Ok((frame, disp))
}

/// Frame size of the curation corpus.
pub const CORPUS_SIZE: (usize, usize) = (128, 96);

/// Expected verdict for one partition of a corpus video.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedVerdict {
    pub start: usize,
    pub end: usize,
    pub reasons: Vec<Reason>,
}

#[derive(Debug, Clone)]
pub struct CorpusVideo {
    pub name: String,
    pub clip: VideoClip,
    pub faces: Option<FaceAnnotation>,
    pub expected: Vec<ExpectedVerdict>,
}

fn pan(seed: u64, frames: usize, velocity: (f64, f64)) -> Result<VideoClip> {
    let (w, h) = CORPUS_SIZE;
    let reach = (velocity.0.abs().max(velocity.1.abs()) * frames as f64).ceil() + 64.0;
    let world = RectWorld::random(seed, -reach, -reach, w as f64 + 2.0 * reach, h as f64 + 2.0 * reach);
    pan_clip(&world, w, h, frames, (0.0, 0.0), velocity)
}

fn expect(start: usize, end: usize, reasons: &[Reason]) -> ExpectedVerdict {
    ExpectedVerdict {
        start,
        end,
        reasons: reasons.to_vec(),
    }
}

/// Twenty short videos with planted cuts, dark footage, static shots,
/// annotated close-ups and slow pans, with the verdicts they should get
/// under the default curation and vision settings.
pub fn curation_corpus() -> Result<Vec<CorpusVideo>> {
    use Reason::*;
    let (w, h) = CORPUS_SIZE;
    let mut out = Vec::new();
    let mut add = |name: &str, clip: VideoClip, faces: Option<FaceAnnotation>, expected: Vec<ExpectedVerdict>| {
        out.push(CorpusVideo {
            name: name.to_string(),
            clip,
            faces,
            expected,
        })
    };

    for (i, v) in [(1.0, 0.0), (0.0, 1.0), (-1.5, 0.5), (2.0, -1.0), (0.7, 0.7), (-0.5, -1.2)]
        .into_iter()
        .enumerate()
    {
        add(&format!("pan_{i}"), pan(100 + i as u64, 100, v)?, None, vec![expect(0, 100, &[])]);
    }

    let cut = concat(&[pan(200, 100, (1.0, 0.0))?, pan(201, 100, (0.0, -1.0))?])?;
    add("cut_even", cut, None, vec![expect(0, 100, &[]), expect(100, 200, &[])]);
    let cut = concat(&[pan(202, 90, (1.2, 0.3))?, pan(203, 95, (-1.0, 0.0))?])?;
    add("cut_uneven", cut, None, vec![expect(0, 90, &[]), expect(90, 185, &[])]);
    let cut = concat(&[pan(204, 120, (0.0, 1.5))?, pan(205, 80, (1.0, 1.0))?])?;
    add(
        "cut_short_tail",
        cut,
        None,
        vec![expect(0, 100, &[]), expect(120, 200, &[TooShort])],
    );
    let cuts = concat(&[pan(206, 85, (1.0, 0.0))?, pan(207, 90, (0.0, 1.0))?, pan(208, 95, (-1.0, -1.0))?])?;
    add(
        "two_cuts",
        cuts,
        None,
        vec![expect(0, 85, &[]), expect(85, 175, &[]), expect(175, 270, &[])],
    );

    add("dark_pan", darken(&pan(300, 100, (1.0, 0.0))?, 0.2)?, None, vec![expect(0, 100, &[TooDark])]);
    add("dark_tilt", darken(&pan(301, 100, (0.0, 1.0))?, 0.15)?, None, vec![expect(0, 100, &[TooDark])]);

    let still = RectWorld::random(400, 0.0, 0.0, w as f64, h as f64);
    add("static", static_clip(&still, w, h, 100, 0.004, 400)?, None, vec![expect(0, 100, &[LowInfo])]);
    let still = RectWorld::random(401, 0.0, 0.0, w as f64, h as f64);
    add(
        "static_dark",
        darken(&static_clip(&still, w, h, 100, 0.004, 401)?, 0.15)?,
        None,
        vec![expect(0, 100, &[LowInfo, TooDark])],
    );

    // 50 x 40 box covers 16% of the frame, 24 x 20 about 4%
    let big: Vec<Option<[f64; 4]>> = (0..100).map(|t| (t % 3 == 0).then_some([30.0, 20.0, 50.0, 40.0])).collect();
    add(
        "face_closeup",
        pan(500, 100, (1.0, 0.5))?,
        Some(FaceAnnotation { boxes: big }),
        vec![expect(0, 100, &[FaceCloseup])],
    );
    let small: Vec<Option<[f64; 4]>> = (0..100).map(|_| Some([50.0, 30.0, 24.0, 20.0])).collect();
    add(
        "face_small",
        pan(501, 100, (-1.0, 0.0))?,
        Some(FaceAnnotation { boxes: small }),
        vec![expect(0, 100, &[])],
    );

    add("slow_pan", pan(600, 100, (0.15, 0.0))?, None, vec![expect(0, 100, &[])]);
    add("crawl", pan(601, 100, (0.04, 0.0))?, None, vec![expect(0, 100, &[LowInfo])]);
    add("fast_pan", pan(602, 100, (3.0, 0.0))?, None, vec![expect(0, 100, &[])]);
    add("short_pan", pan(700, 80, (1.0, 0.0))?, None, vec![expect(0, 80, &[TooShort])]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_translation_shifts_pixels() {
        let world = RectWorld::random(3, 0.0, 0.0, 200.0, 100.0);
        let a = world.view(64, 48, 10.0, 5.0).unwrap();
        let b = world.view(64, 48, 13.0, 5.0).unwrap();
        for y in 0..48 {
            for x in 0..61 {
                assert_eq!(a.pixel(x + 3, y), b.pixel(x, y));
            }
        }
    }

    #[test]
    fn world_is_textured() {
        let world = RectWorld::random(4, 0.0, 0.0, 100.0, 100.0);
        let f = world.view(100, 100, 0.0, 0.0).unwrap();
        let distinct: std::collections::BTreeSet<u64> = f.data().iter().map(|v| v.to_bits()).collect();
        assert!(distinct.len() > 30);
    }
}
