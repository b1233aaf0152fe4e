use crate::error::{Error, Result};
use crate::ldl::{normalize_to_distribution, LabelDistribution};

pub const ADJECTIVES: [&str; 38] = [
    "repetitive",
    "floral",
    "regular",
    "fresh",
    "vintage",
    "wooden",
    "blurry",
    "striped",
    "zig-zag",
    "wavy",
    "classical",
    "undertint",
    "simple",
    "modern",
    "lovely",
    "worn-out",
    "elegant",
    "serried",
    "exquisite",
    "patterned",
    "symmetrical",
    "country-style",
    "bright-colored",
    "complex",
    "bright",
    "post-modern",
    "colorful",
    "messy",
    "somber",
    "granular",
    "cracked",
    "coarse",
    "spotted",
    "marble",
    "stone",
    "bent",
    "netted",
    "geometric",
];

pub const NOUNS: [&str; 55] = [
    "triangle",
    "leafage",
    "rhombus",
    "square",
    "animal",
    "circle",
    "plant",
    "bird",
    "butterfly",
    "dragonfly",
    "tree",
    "branch",
    "letter",
    "star",
    "brick",
    "plume",
    "figure",
    "polygon",
    "book",
    "bookshelf",
    "grape",
    "pinecone",
    "pineapple",
    "cherry",
    "fish and grass",
    "photo frame",
    "automobile",
    "bicycle",
    "balloon",
    "building",
    "cloud",
    "airplane",
    "mountain",
    "arrow",
    "mushroom",
    "musical note",
    "boat",
    "horologe",
    "dandelion",
    "crown",
    "button",
    "robot",
    "sky",
    "vine",
    "bowknot",
    "seawater",
    "water-drop",
    "soil",
    "skirt",
    "snow",
    "cotton",
    "tyre",
    "shoes",
    "glasses",
    "windmill",
];

pub const ADJECTIVE_COUNT: usize = ADJECTIVES.len();
pub const NOUN_COUNT: usize = NOUNS.len();
/// 38 adjectives, 55 nouns and one color value.
pub const SEMANTIC_DIM: usize = ADJECTIVE_COUNT + NOUN_COUNT + 1;
pub const NOUN_OFFSET: usize = ADJECTIVE_COUNT;
pub const COLOR_INDEX: usize = SEMANTIC_DIM - 1;

pub const fn adjective(i: usize) -> usize {
    i
}

pub const fn noun(i: usize) -> usize {
    NOUN_OFFSET + i
}

pub const REPETITIVE: usize = adjective(0);
pub const STRIPED: usize = adjective(7);
pub const WAVY: usize = adjective(9);
pub const BRIGHT: usize = adjective(24);
pub const COLORFUL: usize = adjective(26);
pub const SPOTTED: usize = adjective(32);
pub const MARBLE: usize = adjective(33);
pub const GEOMETRIC: usize = adjective(37);
pub const RHOMBUS: usize = noun(2);
pub const CIRCLE: usize = noun(5);

/// Column label for semantic index `i`: `adj:<word>`, `noun:<word>` or `color`.
pub fn label_name(i: usize) -> String {
    if i < NOUN_OFFSET {
        format!("adj:{}", ADJECTIVES[i])
    } else if i < COLOR_INDEX {
        format!("noun:{}", NOUNS[i - NOUN_OFFSET])
    } else {
        "color".to_string()
    }
}

/// Looks up a semantic index by bare word (`"bright"`, `"rhombus"`, `"color"`).
pub fn label_index(word: &str) -> Option<usize> {
    if word == "color" {
        return Some(COLOR_INDEX);
    }
    ADJECTIVES
        .iter()
        .position(|a| *a == word)
        .or_else(|| NOUNS.iter().position(|n| *n == word).map(noun))
}

/// The 94-entry attribute vector describing one texture.
///
/// Adjectives lie in `[0, 1]` except `bright`, which is signed in `[-1, 1]`; nouns are
/// exactly 0 or 1; the color value lies in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticVector {
    values: Vec<f64>,
}

impl SemanticVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() != SEMANTIC_DIM {
            return Err(Error::DimensionMismatch {
                expected: SEMANTIC_DIM,
                got: values.len(),
            });
        }
        for (i, &v) in values.iter().enumerate() {
            let ok = if i == BRIGHT {
                (-1.0..=1.0).contains(&v)
            } else if i < NOUN_OFFSET || i == COLOR_INDEX {
                (0.0..=1.0).contains(&v)
            } else {
                v == 0.0 || v == 1.0
            };
            if !ok {
                return Err(Error::Config(format!("{} = {v} out of range", label_name(i))));
            }
        }
        Ok(Self { values })
    }

    pub fn zeros() -> Self {
        Self {
            values: vec![0.0; SEMANTIC_DIM],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Sets one entry, re-checking that entry's range.
    pub fn with(mut self, i: usize, v: f64) -> Result<Self> {
        self.values[i] = v;
        Self::new(self.values)
    }

    /// Label distribution over the 94 labels; `bright` is mapped from `[-1, 1]`
    /// to `[0, 1]` first so every degree is nonnegative.
    pub fn to_distribution(&self) -> Result<LabelDistribution> {
        let mut v = self.values.clone();
        v[BRIGHT] = (v[BRIGHT] + 1.0) / 2.0;
        normalize_to_distribution(&v)
    }
}
