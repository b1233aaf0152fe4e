use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use texsem::diagnostics::gradient_suite;
use texsem::features::{extract_all, make_gabor_bank};
use texsem::gan::{
    evaluate_generated, noise_from_seed, perceptual_error, pretrain_perceptual, train, write_trace, CheckpointPlan,
    CosineMode, DcganConfig, GanDataset, GanState, GeneratedReport, GeneratorNet, JointConfig, PerceptualConfig,
    PerceptualNet, PretrainLog,
};
use texsem::io::{
    load_checkpoint, read_vectors, save_checkpoint, write_atomic, write_ppm, DatasetManifest, ModelKind,
};
use texsem::ldl::{aggregate_report_with, normalize_to_distribution, LabelDistribution, MeasureMode, MeasureReport};
use texsem::learn::{
    bp_fit, maxent_fit, pearson_correlation, BpConfig, KnnModel, LdlModel, MaxEntConfig, TrainingSet,
};
use texsem::synth::{generate_corpus, SemanticVector};
use texsem::AdamConfig;

use crate::{
    Algorithm, Command, EvalGeneratedArgs, ExtractFeaturesArgs, GanTrainArgs, GenerateArgs, GradCheckArgs, LdlEvalArgs,
    LdlFitArgs, Outcome, PearsonArgs, PretrainArgs, SynthCorpusArgs, TrainDcganArgs, TrainJointArgs, UsageError,
};

pub(crate) fn dispatch(command: Command) -> Result<Outcome> {
    match command {
        Command::SynthCorpus(a) => synth_corpus(a),
        Command::ExtractFeatures(a) => extract_features(a),
        Command::LdlFit(a) => ldl_fit(a),
        Command::LdlEval(a) => ldl_eval(a),
        Command::Pearson(a) => pearson(a),
        Command::PretrainPerceptual(a) => pretrain(a),
        Command::TrainJoint(a) => train_joint(a),
        Command::TrainDcgan(a) => train_dcgan(a),
        Command::Generate(a) => generate(a),
        Command::EvalGenerated(a) => eval_generated(a),
        Command::GradCheck(a) => grad_check(a),
    }
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Directory that a manifest's relative image paths are resolved against.
fn manifest_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn read_manifest(path: &Path) -> Result<DatasetManifest> {
    DatasetManifest::read(path).with_context(|| format!("reading manifest {}", path.display()))
}

fn read_dataset(path: &Path) -> Result<GanDataset> {
    let manifest = read_manifest(path)?;
    GanDataset::from_manifest(&manifest, &manifest_dir(path))
        .with_context(|| format!("loading images of {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_atomic(path, text.as_bytes()).with_context(|| format!("writing {}", path.display()))
}

fn read_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    read_vectors(path).with_context(|| format!("reading {}", path.display()))
}

fn read_semantics(path: &Path) -> Result<Vec<SemanticVector>> {
    read_rows(path)?
        .into_iter()
        .enumerate()
        .map(|(i, r)| SemanticVector::new(r).with_context(|| format!("{} row {}", path.display(), i + 1)))
        .collect()
}

fn synth_corpus(a: SynthCorpusArgs) -> Result<Outcome> {
    if a.count == 0 {
        return Err(usage("--count must be at least 1"));
    }
    let manifest = generate_corpus(a.count, a.seed, a.size, &a.out)?;
    println!("wrote {} images and manifest to {}", manifest.len(), a.out.display());
    Ok(Outcome::Success)
}

fn extract_features(a: ExtractFeaturesArgs) -> Result<Outcome> {
    let mut manifest = read_manifest(&a.manifest)?;
    let dir = manifest_dir(&a.manifest);
    let images = manifest.load_images(&dir)?;
    let bank = make_gabor_bank(a.scales, a.orientations)?;
    let refs: Vec<_> = images.iter().collect();
    let features = extract_all(&refs, &bank)?;
    manifest.set_features(bank.feature_names(), features)?;

    let out = a.out.unwrap_or_else(|| a.manifest.clone());
    let out_dir = manifest_dir(&out);
    std::fs::create_dir_all(&out_dir)?;
    if std::fs::canonicalize(&out_dir)? != std::fs::canonicalize(&dir)? {
        // Image paths are relative to the manifest; anchor them when it moves.
        let base = std::fs::canonicalize(&dir)?;
        for row in &mut manifest.rows {
            row.image = base.join(&row.image).to_string_lossy().into_owned();
        }
    }
    manifest.write(&out)?;
    println!("{} features for {} images -> {}", bank.feature_dim(), manifest.len(), out.display());
    Ok(Outcome::Success)
}

fn training_set(path: &Path) -> Result<TrainingSet> {
    let manifest = read_manifest(path)?;
    if manifest.feature_dim() == 0 {
        return Err(usage(format!(
            "{} has no feature columns; run extract-features first",
            path.display()
        )));
    }
    Ok(TrainingSet::from_manifest(&manifest)?)
}

fn ldl_fit(a: LdlFitArgs) -> Result<Outcome> {
    let train = training_set(&a.manifest)?;
    let model = match a.algorithm {
        Algorithm::SaBfgs | Algorithm::SaIis => {
            let mut config = if a.algorithm == Algorithm::SaBfgs {
                MaxEntConfig::sa_bfgs()
            } else {
                MaxEntConfig::sa_iis()
            };
            config.optimizer.max_iterations = a.max_iterations;
            LdlModel::MaxEnt(maxent_fit(&train, &config)?)
        }
        Algorithm::AaKnn => {
            if a.k == 0 || a.k > train.len() {
                return Err(usage(format!("--k must be in 1..={}", train.len())));
            }
            LdlModel::Knn(KnnModel::fit(&train, a.k)?)
        }
        Algorithm::AaBp => LdlModel::BpNet(bp_fit(
            &train,
            &BpConfig {
                hidden: a.hidden,
                steps: a.steps,
                seed: a.seed,
                ..BpConfig::default()
            },
        )?),
    };
    let predictions = predict_all(&model, train.features())?;
    let report = aggregate_report_with(&predictions, train.targets(), MeasureMode::Lenient)?;
    save_checkpoint(&model.to_checkpoint(), &a.out)?;
    println!("training-set measures ({} instances)\n{report}", train.len());
    Ok(Outcome::Success)
}

fn predict_all(model: &LdlModel, features: &[Vec<f64>]) -> Result<Vec<LabelDistribution>> {
    Ok(features.iter().map(|x| model.predict(x)).collect::<texsem::Result<_>>()?)
}

fn distributions(path: &Path) -> Result<Vec<LabelDistribution>> {
    read_rows(path)?
        .iter()
        .enumerate()
        .map(|(i, r)| {
            LabelDistribution::new(r.clone())
                .or_else(|_| normalize_to_distribution(r))
                .with_context(|| format!("{} row {}", path.display(), i + 1))
        })
        .collect()
}

fn ldl_eval(a: LdlEvalArgs) -> Result<Outcome> {
    let (predictions, truths) = match (&a.model, &a.manifest, &a.predictions, &a.truths) {
        (Some(model), Some(manifest), None, None) => {
            let model = LdlModel::from_checkpoint(&load_checkpoint(model)?)?;
            let test = training_set(manifest)?;
            (predict_all(&model, test.features())?, test.targets().to_vec())
        }
        (None, None, Some(p), Some(t)) => (distributions(p)?, distributions(t)?),
        _ => return Err(usage("give either --model with --manifest, or --predictions with --truths")),
    };
    let mode = if a.strict {
        MeasureMode::Strict
    } else {
        MeasureMode::Lenient
    };
    let report = aggregate_report_with(&predictions, &truths, mode)?;
    let text = format_measure_report(&report);
    if let Some(out) = &a.out {
        write_text(out, &text)?;
    }
    print!("{text}");
    Ok(Outcome::Success)
}

fn format_measure_report(report: &MeasureReport) -> String {
    let mut s = format!("samples\t{}\n", MeasureReport::header());
    let _ = writeln!(s, "{}\t{}", report.samples, report.row());
    let undefined: Vec<String> = report.summaries.iter().map(|m| m.undefined.to_string()).collect();
    if report.summaries.iter().any(|m| m.undefined > 0) {
        let _ = writeln!(s, "undefined\t{}", undefined.join("\t"));
    }
    s
}

fn pearson(a: PearsonArgs) -> Result<Outcome> {
    let x: Vec<f64> = read_rows(&a.a)?.concat();
    let y: Vec<f64> = read_rows(&a.b)?.concat();
    let r = pearson_correlation(&x, &y)?;
    let text = format!("{r}\n");
    if let Some(out) = &a.out {
        write_text(out, &text)?;
    }
    print!("{text}");
    Ok(Outcome::Success)
}

fn format_pretrain_log(log: &PretrainLog) -> String {
    let mut s = String::from("epoch\tstep\ttrain_quadratic\tvalidation_quadratic\n");
    for e in &log.epochs {
        let v = e.validation_quadratic.map_or_else(|| "-".to_string(), |v| v.to_string());
        let _ = writeln!(s, "{}\t{}\t{}\t{}", e.epoch, e.step, e.train_quadratic, v);
    }
    s
}

fn pretrain(a: PretrainArgs) -> Result<Outcome> {
    let data = read_dataset(&a.manifest)?;
    let (train_set, validation) = if a.validation > 0 {
        if a.validation >= data.len() {
            return Err(usage(format!("--validation must be below the {} manifest rows", data.len())));
        }
        let (t, v) = data.split(data.len() - a.validation)?;
        (t, Some(v))
    } else {
        (data, None)
    };
    let config = PerceptualConfig {
        capacity: a.capacity,
        steps: a.steps,
        batch_size: a.batch,
        adam: AdamConfig::default().with_learning_rate(a.lr),
        beta: a.beta,
        cosine_mode: if a.cosine_literal {
            CosineMode::Literal
        } else {
            CosineMode::PerSample
        },
        seed: a.seed,
    };
    let (net, log) = pretrain_perceptual(&train_set, validation.as_ref(), &config)?;
    save_checkpoint(&net.to_checkpoint(), &a.out)?;
    if let Some(path) = &a.log {
        write_text(path, &format_pretrain_log(&log))?;
    }
    println!("train quadratic error {}", perceptual_error(&net, &train_set)?);
    if let Some(v) = &validation {
        println!("validation quadratic error {}", perceptual_error(&net, v)?);
    }
    Ok(Outcome::Success)
}

fn load_state(path: &Path) -> Result<GanState> {
    let c = load_checkpoint(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(GanState::from_checkpoint(&c)?)
}

fn run_training(mut state: GanState, a: &GanTrainArgs) -> Result<Outcome> {
    let data = read_dataset(&a.manifest)?;
    if data.image_size() != state.generator.image_size {
        bail!(
            "manifest images are {}px but the model renders {}px",
            data.image_size(),
            state.generator.image_size
        );
    }
    let plan = CheckpointPlan {
        path: &a.out,
        every: a.checkpoint_every,
    };
    let records = train(&mut state, &data, a.iterations, Some(plan))?;
    if let Some(path) = &a.trace {
        write_trace(&records, path)?;
    }
    if let Some(last) = records.last() {
        println!(
            "iteration {}: D_loss {} G_loss {} (G_loss_d {}, G_loss_f {})",
            last.step, last.d_loss, last.g_loss, last.g_loss_d, last.g_loss_f
        );
    }
    Ok(Outcome::Success)
}

fn adam(lr: f64) -> AdamConfig {
    texsem::gan::gan_adam().with_learning_rate(lr)
}

fn train_joint(a: TrainJointArgs) -> Result<Outcome> {
    let c = &a.common;
    let state = match (&c.resume, &a.perceptual) {
        (Some(path), _) => {
            let state = load_state(path)?;
            if !state.is_conditional() {
                return Err(usage("--resume state is an unconditional baseline; use train-dcgan"));
            }
            state
        }
        (None, Some(f)) => {
            let perceptual = PerceptualNet::from_checkpoint(&load_checkpoint(f)?)?;
            let config = JointConfig {
                alpha: a.alpha,
                d_steps: a.d_steps,
                g_steps: a.g_steps,
                batch_size: c.batch,
                iterations: c.iterations,
                seed: c.seed,
                adam: adam(c.lr),
                noise_dim: c.noise_dim,
            };
            GanState::joint(&config, perceptual)?
        }
        (None, None) => return Err(usage("--perceptual is required unless --resume is given")),
    };
    run_training(state, c)
}

fn train_dcgan(a: TrainDcganArgs) -> Result<Outcome> {
    let c = &a.common;
    let state = match &c.resume {
        Some(path) => {
            let state = load_state(path)?;
            if state.is_conditional() {
                return Err(usage("--resume state is a joint model; use train-joint"));
            }
            state
        }
        None => {
            let size = read_manifest(&c.manifest)?;
            let probe = GanDataset::from_manifest(&size, &manifest_dir(&c.manifest))?;
            let config = DcganConfig {
                batch_size: c.batch,
                iterations: c.iterations,
                seed: c.seed,
                adam: adam(c.lr),
                noise_dim: c.noise_dim,
            };
            GanState::dcgan(&config, probe.image_size())?
        }
    };
    run_training(state, c)
}

/// Generator and, for joint training states, the frozen regressor.
fn load_generator(path: &Path) -> Result<(GeneratorNet<f32>, Option<PerceptualNet<f32>>)> {
    let c = load_checkpoint(path).with_context(|| format!("reading {}", path.display()))?;
    match c.kind {
        ModelKind::GanState => {
            let s = GanState::from_checkpoint(&c)?;
            Ok((s.generator, s.perceptual))
        }
        ModelKind::Generator => Ok((GeneratorNet::from_checkpoint(&c)?, None)),
        other => Err(usage(format!("{} holds a {other} model, not a generator", path.display()))),
    }
}

fn generate(a: GenerateArgs) -> Result<Outcome> {
    let (gen, _) = load_generator(&a.model)?;
    let semantics = match (&a.semantics, a.count) {
        (Some(path), _) => read_semantics(path)?,
        (None, Some(n)) if !gen.is_conditional() => vec![SemanticVector::zeros(); n],
        _ => return Err(usage("a conditional generator needs --semantics")),
    };
    std::fs::create_dir_all(&a.out)?;
    for (i, y) in semantics.iter().enumerate() {
        let z = noise_from_seed(a.seed.wrapping_add(i as u64), gen.noise_dim);
        let image = gen.generate(y, &z)?;
        write_ppm(&a.out.join(format!("gen_{i:05}.ppm")), &image)?;
    }
    println!("wrote {} images to {}", semantics.len(), a.out.display());
    Ok(Outcome::Success)
}

fn format_generated_report(r: &GeneratedReport) -> String {
    let mut s = String::from("samples\tmean_quadratic\tmean_cosine\tconstant_floor\n");
    let _ = writeln!(s, "{}\t{}\t{}\t{}", r.samples, r.mean_quadratic, r.mean_cosine, r.constant_floor);
    s.push_str("\nattribute\tvalue\tperceived\tmean_luminance\tmean_chroma\n");
    for c in &r.curves {
        for i in 0..c.values.len() {
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}",
                c.attribute, c.values[i], c.perceived[i], c.mean_luminance[i], c.mean_chroma[i]
            );
        }
    }
    s
}

fn eval_generated(a: EvalGeneratedArgs) -> Result<Outcome> {
    let (gen, inner) = load_generator(&a.model)?;
    let perceptual = match (&a.perceptual, inner) {
        (Some(path), _) => PerceptualNet::from_checkpoint(&load_checkpoint(path)?)?,
        (None, Some(f)) => f,
        (None, None) => return Err(usage("--perceptual is required for models without a regressor")),
    };
    let semantics = match (&a.semantics, &a.manifest) {
        (Some(path), _) => read_semantics(path)?,
        (None, Some(path)) => read_manifest(path)?
            .rows
            .into_iter()
            .map(|r| SemanticVector::new(r.semantics))
            .collect::<texsem::Result<_>>()?,
        (None, None) => return Err(usage("give --semantics or --manifest")),
    };
    if a.draws == 0 {
        return Err(usage("--draws must be at least 1"));
    }
    let seeds: Vec<u64> = (0..a.draws).map(|i| a.seed.wrapping_add(i)).collect();
    let report = evaluate_generated(&gen, &perceptual, &semantics, &seeds)?;
    let text = format_generated_report(&report);
    if let Some(out) = &a.out {
        write_text(out, &text)?;
    }
    print!("{text}");
    Ok(Outcome::Success)
}

fn grad_check(a: GradCheckArgs) -> Result<Outcome> {
    if a.threshold.is_nan() || a.threshold <= 0.0 {
        return Err(usage("--threshold must be positive"));
    }
    let cases = gradient_suite(a.seed)?;
    let mut text = String::from("case\tchecked\tkinks\tmax_relative_error\tworst\n");
    let mut max = 0.0f64;
    for c in &cases {
        max = max.max(c.report.max_relative_error);
        let worst = c
            .report
            .worst
            .as_ref()
            .map_or_else(|| "-".to_string(), |(name, i)| format!("{name}[{i}]"));
        let _ = writeln!(
            text,
            "{}\t{}\t{}\t{:e}\t{}",
            c.name, c.report.checked, c.report.kinks, c.report.max_relative_error, worst
        );
    }
    if let Some(out) = &a.out {
        write_text(out, &text)?;
    }
    print!("{text}");
    if max <= a.threshold {
        println!("max relative error {max:e} <= {:e}", a.threshold);
        Ok(Outcome::Success)
    } else {
        Ok(Outcome::CheckFailed(format!("max relative error {max:e} exceeds {:e}", a.threshold)))
    }
}
