//! The two per-frame control signals: photographic parameters and camera
//! trajectory.
//!
//! Signal files are JSON documents with keys `K`, `d_f`, `f`, `S`, `T`.
//! Each key holds either a scalar (broadcast to every frame) or an array of
//! one value per frame. Numbers may also be given as numeric strings. When
//! every key is a scalar, `frames` sets the length (default 1). An optional
//! `trajectory` holds one 12-element row-major 3x4 extrinsic per frame.

use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};

/// Photographic parameters for one frame.
///
/// `blur` and `focus` drive bokeh, `focal` drives zoom, `shutter` exposure
/// and `temperature` color tone. All are relative to the source video.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhotoParams {
    #[serde(rename = "K")]
    pub blur: f64,
    #[serde(rename = "d_f")]
    pub focus: f64,
    #[serde(rename = "f")]
    pub focal: f64,
    #[serde(rename = "S")]
    pub shutter: f64,
    #[serde(rename = "T")]
    pub temperature: f64,
}

const UNIT: (f64, f64) = (0.0, 1.0);
const SYMMETRIC: (f64, f64) = (-1.0, 1.0);

impl PhotoParams {
    pub const NEUTRAL: PhotoParams = PhotoParams {
        blur: 0.0,
        focus: 0.0,
        focal: 0.0,
        shutter: 0.0,
        temperature: 0.0,
    };

    pub fn new(blur: f64, focus: f64, focal: f64, shutter: f64, temperature: f64) -> Self {
        Self {
            blur,
            focus,
            focal,
            shutter,
            temperature,
        }
    }

    /// (field name, value, allowed interval) in canonical order.
    fn fields(&self) -> [(&'static str, f64, (f64, f64)); 5] {
        [
            ("K", self.blur, UNIT),
            ("d_f", self.focus, UNIT),
            ("f", self.focal, UNIT),
            ("S", self.shutter, SYMMETRIC),
            ("T", self.temperature, SYMMETRIC),
        ]
    }

    pub fn validate_at(&self, frame: usize) -> Result<()> {
        for (field, value, (lo, hi)) in self.fields() {
            if !(lo..=hi).contains(&value) {
                return Err(Error::OutOfRange {
                    frame,
                    field,
                    value,
                    range: if lo == 0.0 { "[0, 1]" } else { "[-1, 1]" },
                });
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_at(0)
    }

    pub fn as_array(&self) -> [f64; 5] {
        [
            self.blur,
            self.focus,
            self.focal,
            self.shutter,
            self.temperature,
        ]
    }

    fn lerp(a: &Self, b: &Self, u: f64) -> Self {
        let mix = |x: f64, y: f64| ((1.0 - u) * x + u * y).clamp(x.min(y), x.max(y));
        Self {
            blur: mix(a.blur, b.blur),
            focus: mix(a.focus, b.focus),
            focal: mix(a.focal, b.focal),
            shutter: mix(a.shutter, b.shutter),
            temperature: mix(a.temperature, b.temperature),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<PhotoParams>", into = "Vec<PhotoParams>")]
pub struct PhotoSignal {
    per_frame: Vec<PhotoParams>,
}

impl PhotoSignal {
    pub fn new(per_frame: Vec<PhotoParams>) -> Result<Self> {
        let s = Self { per_frame };
        validate(&s)?;
        Ok(s)
    }

    pub fn frames(&self) -> &[PhotoParams] {
        &self.per_frame
    }

    pub fn len(&self) -> usize {
        self.per_frame.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_frame.is_empty()
    }

    pub fn get(&self, i: usize) -> PhotoParams {
        self.per_frame[i]
    }

    /// Same signal with a per-frame transform applied.
    pub fn map(&self, f: impl Fn(PhotoParams) -> PhotoParams) -> Result<PhotoSignal> {
        PhotoSignal::new(self.per_frame.iter().copied().map(f).collect())
    }
}

impl TryFrom<Vec<PhotoParams>> for PhotoSignal {
    type Error = Error;
    fn try_from(v: Vec<PhotoParams>) -> Result<Self> {
        PhotoSignal::new(v)
    }
}

impl From<PhotoSignal> for Vec<PhotoParams> {
    fn from(s: PhotoSignal) -> Self {
        s.per_frame
    }
}

/// Checks the length and per-frame ranges, naming the first violation.
pub fn validate(signal: &PhotoSignal) -> Result<()> {
    if signal.per_frame.is_empty() {
        return Err(Error::InvalidValue("photo signal has no frames".into()));
    }
    for (i, p) in signal.per_frame.iter().enumerate() {
        p.validate_at(i)?;
    }
    Ok(())
}

pub fn constant_signal(params: PhotoParams, frames: usize) -> Result<PhotoSignal> {
    params.validate()?;
    PhotoSignal::new(vec![params; frames])
}

/// Componentwise linear schedule from `start` (frame 0) to `end` (last frame).
pub fn ramp_signal(start: PhotoParams, end: PhotoParams, frames: usize) -> Result<PhotoSignal> {
    start.validate()?;
    end.validate()?;
    if frames == 0 {
        return Err(Error::InvalidValue("photo signal has no frames".into()));
    }
    if frames == 1 {
        return PhotoSignal::new(vec![start]);
    }
    let last = (frames - 1) as f64;
    PhotoSignal::new(
        (0..frames)
            .map(|i| PhotoParams::lerp(&start, &end, i as f64 / last))
            .collect(),
    )
}

/// A 3x4 extrinsic `[R | t]`, row-major.
pub type Extrinsic = [f64; 12];

pub const IDENTITY_EXTRINSIC: Extrinsic = [
    1.0, 0.0, 0.0, 0.0, //
    0.0, 1.0, 0.0, 0.0, //
    0.0, 0.0, 1.0, 0.0,
];

const ROTATION_TOL: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Extrinsic>", into = "Vec<Extrinsic>")]
pub struct TrajSignal {
    per_frame: Vec<Extrinsic>,
}

impl TrajSignal {
    pub fn new(per_frame: Vec<Extrinsic>) -> Result<Self> {
        if per_frame.is_empty() {
            return Err(Error::InvalidValue("trajectory has no frames".into()));
        }
        for (i, m) in per_frame.iter().enumerate() {
            check_rotation(m).map_err(|msg| Error::InvalidValue(format!("trajectory frame {i}: {msg}")))?;
        }
        Ok(Self { per_frame })
    }

    pub fn frames(&self) -> &[Extrinsic] {
        &self.per_frame
    }

    pub fn len(&self) -> usize {
        self.per_frame.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_frame.is_empty()
    }
}

fn check_rotation(m: &Extrinsic) -> std::result::Result<(), String> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err("non-finite entry".into());
    }
    let r = |i: usize, j: usize| m[i * 4 + j];
    for a in 0..3 {
        for b in 0..3 {
            let dot: f64 = (0..3).map(|k| r(a, k) * r(b, k)).sum();
            let want = if a == b { 1.0 } else { 0.0 };
            if (dot - want).abs() > ROTATION_TOL {
                return Err(format!("rotation rows {a},{b} not orthonormal (dot {dot})"));
            }
        }
    }
    let det = r(0, 0) * (r(1, 1) * r(2, 2) - r(1, 2) * r(2, 1))
        - r(0, 1) * (r(1, 0) * r(2, 2) - r(1, 2) * r(2, 0))
        + r(0, 2) * (r(1, 0) * r(2, 1) - r(1, 1) * r(2, 0));
    if (det - 1.0).abs() > ROTATION_TOL {
        return Err(format!("rotation determinant {det} != 1"));
    }
    Ok(())
}

impl TryFrom<Vec<Extrinsic>> for TrajSignal {
    type Error = Error;
    fn try_from(v: Vec<Extrinsic>) -> Result<Self> {
        TrajSignal::new(v)
    }
}

impl From<TrajSignal> for Vec<Extrinsic> {
    fn from(s: TrajSignal) -> Self {
        s.per_frame
    }
}

/// `frames` copies of `[I | 0]`: the camera path is left unchanged.
pub fn identity_traj(frames: usize) -> Result<TrajSignal> {
    if frames == 0 {
        return Err(Error::InvalidValue("trajectory needs at least one frame".into()));
    }
    TrajSignal::new(vec![IDENTITY_EXTRINSIC; frames])
}

// ---------------------------------------------------------------------------
// Text format
// ---------------------------------------------------------------------------

/// A number written either as a JSON number or a numeric string.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Num(f64);

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct NumVisitor;
        impl Visitor<'_> for NumVisitor {
            type Value = Num;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or numeric string")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Num, E> {
                Ok(Num(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Num, E> {
                Ok(Num(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Num, E> {
                Ok(Num(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Num, E> {
                v.trim()
                    .parse::<f64>()
                    .map(Num)
                    .map_err(|_| E::invalid_value(de::Unexpected::Str(v), &self))
            }
        }
        d.deserialize_any(NumVisitor)
    }
}

/// Scalar-or-array channel.
#[derive(Debug, Clone, PartialEq)]
enum Channel {
    Scalar(f64),
    Series(Vec<f64>),
}

impl<'de> Deserialize<'de> for Channel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct ChannelVisitor;
        impl<'de> Visitor<'de> for ChannelVisitor {
            type Value = Channel;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number, numeric string, or array of numbers")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Channel, E> {
                Ok(Channel::Scalar(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Channel, E> {
                Ok(Channel::Scalar(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Channel, E> {
                Ok(Channel::Scalar(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Channel, E> {
                Num::deserialize(de::value::StrDeserializer::<E>::new(v)).map(|n| Channel::Scalar(n.0))
            }
            fn visit_seq<A: de::SeqAccess<'de>>(self, mut seq: A) -> std::result::Result<Channel, A::Error> {
                let mut out = Vec::new();
                while let Some(Num(v)) = seq.next_element()? {
                    out.push(v);
                }
                Ok(Channel::Series(out))
            }
        }
        d.deserialize_any(ChannelVisitor)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SignalDoc {
    #[serde(default)]
    frames: Option<usize>,
    #[serde(rename = "K")]
    blur: Channel,
    #[serde(rename = "d_f")]
    focus: Channel,
    #[serde(rename = "f")]
    focal: Channel,
    #[serde(rename = "S")]
    shutter: Channel,
    #[serde(rename = "T")]
    temperature: Channel,
    #[serde(default)]
    trajectory: Option<Vec<Vec<Num>>>,
}

#[derive(Serialize)]
struct SignalDocOut<'a> {
    frames: usize,
    #[serde(rename = "K")]
    blur: Vec<f64>,
    #[serde(rename = "d_f")]
    focus: Vec<f64>,
    #[serde(rename = "f")]
    focal: Vec<f64>,
    #[serde(rename = "S")]
    shutter: Vec<f64>,
    #[serde(rename = "T")]
    temperature: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trajectory: Option<&'a [Extrinsic]>,
}

/// Serialized control signals: photographic parameters plus an optional
/// trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalFile {
    pub photo: PhotoSignal,
    pub trajectory: Option<TrajSignal>,
}

/// Writes every channel as a full per-frame array. Values use shortest
/// round-trip decimal formatting, so parsing restores them bit-exactly.
pub fn serialize(photo: &PhotoSignal, trajectory: Option<&TrajSignal>) -> String {
    let col = |f: fn(&PhotoParams) -> f64| photo.per_frame.iter().map(f).collect::<Vec<_>>();
    let doc = SignalDocOut {
        frames: photo.len(),
        blur: col(|p| p.blur),
        focus: col(|p| p.focus),
        focal: col(|p| p.focal),
        shutter: col(|p| p.shutter),
        temperature: col(|p| p.temperature),
        trajectory: trajectory.map(|t| t.frames()),
    };
    serde_json::to_string_pretty(&doc).expect("signal serialization is infallible")
}

pub fn deserialize(text: &str) -> Result<SignalFile> {
    let doc: SignalDoc = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let channels = [
        ("K", &doc.blur),
        ("d_f", &doc.focus),
        ("f", &doc.focal),
        ("S", &doc.shutter),
        ("T", &doc.temperature),
    ];
    let mut len: Option<(usize, &str)> = doc.frames.map(|n| (n, "frames"));
    for (name, ch) in &channels {
        if let Channel::Series(v) = ch {
            match len {
                Some((n, other)) if n != v.len() => {
                    return Err(Error::Parse(format!(
                        "field {name} has {} entries but {other} implies {n}",
                        v.len()
                    )))
                }
                None => len = Some((v.len(), name)),
                _ => {}
            }
        }
    }
    let frames = len.map(|(n, _)| n).unwrap_or(1);
    let at = |ch: &Channel, i: usize| match ch {
        Channel::Scalar(v) => *v,
        Channel::Series(v) => v[i],
    };
    let per_frame = (0..frames)
        .map(|i| PhotoParams {
            blur: at(&doc.blur, i),
            focus: at(&doc.focus, i),
            focal: at(&doc.focal, i),
            shutter: at(&doc.shutter, i),
            temperature: at(&doc.temperature, i),
        })
        .collect();
    let photo = PhotoSignal::new(per_frame)?;
    let trajectory = match doc.trajectory {
        None => None,
        Some(rows) => {
            if rows.len() != frames {
                return Err(Error::Parse(format!(
                    "trajectory has {} entries, expected {frames}",
                    rows.len()
                )));
            }
            let mut mats = Vec::with_capacity(rows.len());
            for (i, row) in rows.iter().enumerate() {
                let m: Extrinsic = row
                    .iter()
                    .map(|n| n.0)
                    .collect::<Vec<_>>()
                    .try_into()
                    .map_err(|_| Error::Parse(format!("trajectory entry {i} needs 12 values")))?;
                mats.push(m);
            }
            Some(TrajSignal::new(mats)?)
        }
    };
    Ok(SignalFile { photo, trajectory })
}
