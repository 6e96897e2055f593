//! Top-level configuration shared by every pipeline.

use serde::{Deserialize, Serialize};

use crate::bokeh::BokehConfig;
use crate::color::ColorTempConfig;
use crate::curation::CurationConfig;
use crate::error::Result;
use crate::exposure::SensorConfig;
use crate::pairs::{EffectConfigs, EffectFamily, SamplingStrategy, DEFAULT_ORDER};
use crate::vision::VisionConfig;
use crate::zoom::OpticsConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GlobalConfig {
    pub seed: u64,
    pub optics: OpticsConfig,
    pub sensor: SensorConfig,
    pub color: ColorTempConfig,
    pub bokeh: BokehConfig,
    pub curation: CurationConfig,
    pub vision: VisionConfig,
    pub sampling: SamplingStrategy,
    pub effect_order: Vec<EffectFamily>,
    pub noisy_exposure: bool,
    pub normalize_disparity: bool,
}

impl Default for GlobalConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            optics: OpticsConfig::default(),
            sensor: SensorConfig::default(),
            color: ColorTempConfig::default(),
            bokeh: BokehConfig::default(),
            curation: CurationConfig::default(),
            vision: VisionConfig::default(),
            sampling: SamplingStrategy::default(),
            effect_order: DEFAULT_ORDER.to_vec(),
            noisy_exposure: false,
            normalize_disparity: false,
        }
    }
}

impl GlobalConfig {
    pub fn effects(&self) -> EffectConfigs {
        EffectConfigs {
            bokeh: self.bokeh,
            optics: self.optics,
            sensor: self.sensor,
            color: self.color,
            order: self.effect_order.clone(),
            noisy_exposure: self.noisy_exposure,
            normalize_disparity: self.normalize_disparity,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.effects().validate()?;
        self.curation.validate()?;
        self.vision.validate()?;
        self.sampling.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        GlobalConfig::default().validate().unwrap();
    }
}
