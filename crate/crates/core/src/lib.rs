//! Physically based photographic effect simulators (bokeh, zoom, exposure,
//! color temperature), a real-video curation pipeline, paired-dataset
//! generation, per-effect correlation scoring, and a small numerical
//! reference of a camera-decoupled cross-attention layer.
//!
//! Pixels are stored as `f64` in `[0, 1]`; 8-bit quantization only happens
//! at the file boundary (see [`imaging::save_clip`]).

pub mod attention;
pub mod bokeh;
pub mod color;
pub mod config;
pub mod curation;
pub mod error;
pub mod eval;
pub mod exposure;
pub mod imaging;
pub mod pairs;
pub mod rng;
pub mod signals;
pub mod synth;
pub mod vision;
pub mod zoom;

pub use error::{Error, Result};
pub use imaging::{DisparityMap, Frame, GrayFrame, VideoClip};
pub use signals::{PhotoParams, PhotoSignal, TrajSignal};
