use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::synth::semantics::{self, SemanticVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Striped,
    Spotted,
    Wavy,
    Rhombus,
    Marble,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Striped,
        Family::Spotted,
        Family::Wavy,
        Family::Rhombus,
        Family::Marble,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Striped => "striped",
            Family::Spotted => "spotted",
            Family::Wavy => "wavy",
            Family::Rhombus => "rhombus",
            Family::Marble => "marble",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown texture family {s:?}")))
    }
}

/// Parameters of one procedural texture.
///
/// Family parameters a family does not use are ignored by the renderer.
#[derive(Debug, Clone, PartialEq)]
pub struct TextureSpec {
    pub family: Family,
    /// Pattern frequency in cycles per pixel, in `[1/16, 1/3]`.
    pub frequency: f64,
    /// Pattern orientation in radians, in `[0, π)`.
    pub orientation: f64,
    /// Spot count per square pixel, in `[0.002, 0.05]`.
    pub spot_density: f64,
    /// Wave displacement amplitude in pixels, in `[0, 8]`.
    pub wave_amplitude: f64,
    /// Turbulence octaves for marble, in `1..=6`.
    pub octaves: u32,
    /// Signed luminance offset, in `[-1, 1]`.
    pub brightness: f64,
    /// Chroma scale, in `[0, 1]`.
    pub colorfulness: f64,
    /// Hue of the tint, in `[0, 1)`.
    pub hue: f64,
    /// 1 is a perfectly periodic pattern; lower values add smooth positional jitter.
    pub repetitiveness: f64,
    pub seed: u64,
}

impl TextureSpec {
    /// A mid-range spec of the given family.
    pub fn new(family: Family) -> Self {
        Self {
            family,
            frequency: 0.125,
            orientation: 0.0,
            spot_density: 0.01,
            wave_amplitude: 2.0,
            octaves: 3,
            brightness: 0.0,
            colorfulness: 0.0,
            hue: 0.0,
            repetitiveness: 1.0,
            seed: 0,
        }
    }

    /// Draws every parameter uniformly from a sub-range that renders well at 32 px.
    pub fn random<R: Rng + ?Sized>(family: Family, rng: &mut R) -> Self {
        let wavelength: f64 = rng.random_range(4.0..12.0);
        Self {
            family,
            frequency: 1.0 / wavelength,
            orientation: rng.random_range(0.0..PI),
            spot_density: rng.random_range(0.005..0.03),
            wave_amplitude: rng.random_range(1.0..4.0),
            octaves: rng.random_range(2..=5),
            brightness: rng.random_range(-1.0..=1.0),
            colorfulness: rng.random_range(0.0..=1.0),
            hue: rng.random_range(0.0..1.0),
            repetitiveness: rng.random_range(0.0..=1.0),
            seed: rng.random(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let checks: [(&str, bool); 9] = [
            ("frequency", (1.0 / 16.0..=1.0 / 3.0).contains(&self.frequency)),
            ("orientation", (0.0..PI).contains(&self.orientation)),
            ("spot_density", (0.002..=0.05).contains(&self.spot_density)),
            ("wave_amplitude", (0.0..=8.0).contains(&self.wave_amplitude)),
            ("octaves", (1..=6).contains(&self.octaves)),
            ("brightness", (-1.0..=1.0).contains(&self.brightness)),
            ("colorfulness", (0.0..=1.0).contains(&self.colorfulness)),
            ("hue", (0.0..1.0).contains(&self.hue)),
            ("repetitiveness", (0.0..=1.0).contains(&self.repetitiveness)),
        ];
        match checks.iter().find(|(_, ok)| !ok) {
            Some((name, _)) => Err(Error::Config(format!("{name} out of range in {self:?}"))),
            None => Ok(()),
        }
    }
}

/// The attribute vector a spec's texture carries by construction.
///
/// The family sets its style adjective (and noun, for rhombi and spots) to 1; the
/// global parameters are copied into the `bright`, `colorful` and `repetitive`
/// slots, and the color value is the tint hue (0 for grayscale textures). The seed
/// never affects the result.
pub fn ground_truth_semantics(spec: &TextureSpec) -> SemanticVector {
    let mut v = vec![0.0; semantics::SEMANTIC_DIM];
    match spec.family {
        Family::Striped => v[semantics::STRIPED] = 1.0,
        Family::Wavy => v[semantics::WAVY] = 1.0,
        Family::Spotted => {
            v[semantics::SPOTTED] = 1.0;
            v[semantics::CIRCLE] = 1.0;
        }
        Family::Rhombus => {
            v[semantics::GEOMETRIC] = 1.0;
            v[semantics::RHOMBUS] = 1.0;
        }
        Family::Marble => v[semantics::MARBLE] = 1.0,
    }
    v[semantics::BRIGHT] = spec.brightness.clamp(-1.0, 1.0);
    v[semantics::COLORFUL] = spec.colorfulness.clamp(0.0, 1.0);
    v[semantics::REPETITIVE] = spec.repetitiveness.clamp(0.0, 1.0);
    v[semantics::COLOR_INDEX] = if spec.colorfulness > 0.0 {
        spec.hue.clamp(0.0, 1.0)
    } else {
        0.0
    };
    SemanticVector::new(v).expect("clamped into range")
}
