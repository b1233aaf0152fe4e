use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::io::{write_ppm, DatasetManifest, ManifestRow, MANIFEST_FILE};
use crate::synth::image::TextureImage;
use crate::synth::render::render_texture;
use crate::synth::semantics::{SemanticVector, SEMANTIC_DIM};
use crate::synth::spec::{ground_truth_semantics, Family, TextureSpec};

#[derive(Debug, Clone)]
pub struct Sample {
    pub spec: TextureSpec,
    pub image: TextureImage,
    pub semantics: SemanticVector,
}

/// Random specs for a corpus of `n`; families cycle so counts differ by at most one.
pub fn corpus_specs(n: usize, master_seed: u64) -> Result<Vec<TextureSpec>> {
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    Ok((0..n)
        .map(|i| TextureSpec::random(Family::ALL[i % Family::ALL.len()], &mut rng))
        .collect())
}

/// Renders `n` samples in memory.
pub fn synthesize(n: usize, master_seed: u64, size: usize) -> Result<Vec<Sample>> {
    corpus_specs(n, master_seed)?
        .into_iter()
        .map(|spec| {
            let image = render_texture(&spec, size)?;
            let semantics = ground_truth_semantics(&spec);
            Ok(Sample { spec, image, semantics })
        })
        .collect()
}

pub fn image_file_name(i: usize) -> String {
    format!("tex_{i:05}.ppm")
}

/// Writes `n` PPM images and `manifest.tsv` into `out_dir` and returns the manifest.
pub fn generate_corpus(n: usize, master_seed: u64, size: usize, out_dir: &Path) -> Result<DatasetManifest> {
    let samples = synthesize(n, master_seed, size)?;
    std::fs::create_dir_all(out_dir)?;
    let mut manifest = DatasetManifest::new(SEMANTIC_DIM);
    for (i, s) in samples.iter().enumerate() {
        let name = image_file_name(i);
        write_ppm(&out_dir.join(&name), &s.image)?;
        manifest.push(ManifestRow {
            image: name,
            semantics: s.semantics.values().to_vec(),
            features: Vec::new(),
        })?;
    }
    manifest.write(&out_dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn families_are_balanced() {
        for n in [1, 7, 13, 25] {
            let specs = corpus_specs(n, 4).unwrap();
            let counts: Vec<usize> = Family::ALL
                .iter()
                .map(|f| specs.iter().filter(|s| s.family == *f).count())
                .collect();
            assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
        }
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert!(synthesize(0, 1, 32).is_err());
    }

    #[test]
    fn specs_are_valid_and_seeded() {
        let a = corpus_specs(20, 9).unwrap();
        assert!(a.iter().all(|s| s.validate().is_ok()));
        assert_eq!(a, corpus_specs(20, 9).unwrap());
        assert_ne!(a, corpus_specs(20, 10).unwrap());
    }
}
