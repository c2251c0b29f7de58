use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use lmm_core::checkpoint::{load_probe, save_probe, Checkpoint};
use lmm_core::dataset::{
    self, cached_ground_truth, dataset_hash, lip_shift_set, read_ground_truth, reference_probe_grid, split_path,
    synthetic_dataset, GroundTruthHeader, ReferenceProbe, Split, REFERENCE_WINDOW,
};
use lmm_core::pgm::{read_pgm, write_dump, DISPLAY_SCALING};
use lmm_core::training::{self, evaluate_layer, Metric, Optimizer, TestSet, TrainConfig};
use lmm_core::{asplund_map, AsplundLayer, DistanceMap, LipImage, DEFAULT_CEILING};

use crate::config::{parse_list, Config};
use crate::error::{io_error, CliError, CliResult};
use crate::manifest::RunManifest;
use crate::DataArgs;

const DEFAULT_SHIFT: f64 = 100.0;

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = OsString::from(path.as_os_str());
    s.push(suffix);
    PathBuf::from(s)
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| io_error(path, e))
}

fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))
}

struct Dataset {
    images: Vec<LipImage>,
    label: String,
    hash: String,
}

fn load_data(cfg: &Config, args: &DataArgs) -> CliResult<Dataset> {
    let path = cfg.resolve_opt(args.data.clone(), "data")?;
    let synthetic = cfg.resolve_opt(args.synthetic, "synthetic")?;
    let limit = cfg.resolve_opt(args.limit, "limit")?;
    let (mut images, label) = match (path, synthetic) {
        (Some(path), _) => {
            let file = if path.is_dir() {
                let split = match cfg.resolve_opt(args.split.clone(), "split")?.as_deref() {
                    None | Some("train") => Split::Train,
                    Some("test") => Split::Test,
                    Some(other) => return Err(CliError::Usage(format!("unknown split `{other}` (train or test)"))),
                };
                split_path(&path, split)?
            } else {
                path
            };
            (dataset::load_idx(&file)?, format!("idx:{}", file.display()))
        }
        (None, Some(count)) => {
            let seed = cfg.resolve(args.data_seed, "data-seed", 0)?;
            (synthetic_dataset(count, seed), format!("synthetic:{count}:{seed}"))
        }
        (None, None) => return Err(CliError::Usage("give --data PATH or --synthetic COUNT".into())),
    };
    if let Some(n) = limit {
        images.truncate(n);
    }
    if images.is_empty() {
        return Err(CliError::Data(format!("{label}: no images")));
    }
    let hash = dataset_hash(&images);
    log::info!("{label}: {} images, hash {hash}", images.len());
    Ok(Dataset { images, label, hash })
}

fn record_data(m: &mut RunManifest, data: &Dataset) {
    m.set("dataset", &data.label);
    m.set("dataset_count", data.images.len());
    m.set("dataset_hash", &data.hash);
}

fn load_truth(path: &Path, data: &Dataset) -> CliResult<(GroundTruthHeader, Vec<DistanceMap>)> {
    let (header, maps) = read_ground_truth(path)?;
    if header.dataset != data.hash || maps.len() != data.images.len() {
        return Err(CliError::Data(format!(
            "{}: ground truth was built for dataset {} ({} maps), not {} ({} images)",
            path.display(),
            header.dataset,
            maps.len(),
            data.hash,
            data.images.len()
        )));
    }
    Ok((header, maps))
}

fn load_checkpoint(path: &Path) -> CliResult<AsplundLayer> {
    let ckpt = Checkpoint::load(path)?;
    Ok(AsplundLayer::with_kernels(ckpt.kernels, ckpt.ceiling)?)
}

pub fn gen_probes(cfg: &Config, beta_list: Option<String>, c_list: Option<String>, out: &Path) -> CliResult<()> {
    let list = |flag: Option<String>, key: &str, default: Vec<f64>| -> CliResult<Vec<f64>> {
        match cfg.resolve_opt(flag, key)? {
            Some(text) => parse_list(&text).map_err(|e| CliError::Usage(format!("--{key}: {e}"))),
            None => Ok(default),
        }
    };
    let betas = list(beta_list, "beta-list", dataset::default_beta_grid())?;
    let cs = list(c_list, "c-list", dataset::default_c_grid())?;
    let probes = reference_probe_grid(&betas, &cs, DEFAULT_CEILING).map_err(|e| CliError::Usage(e.to_string()))?;

    create_dir(out)?;
    let mut index = String::from("file,beta,c,support\n");
    for p in &probes {
        let stem = p.file_stem();
        save_probe(out.join(format!("{stem}.txt")), p)?;
        write_dump(out, &format!("{stem}_heights"), p.width(), p.height(), p.ceiling, &p.heights)?;
        let support = p.mask.iter().filter(|&&s| s).count();
        let _ = writeln!(index, "{stem}.txt,{:?},{:?},{support}", p.beta, p.c);
    }
    write_text(&out.join("probes.csv"), &index)?;

    let mut m = RunManifest::start("gen-probes");
    m.set("beta_list", format!("{betas:?}"));
    m.set("c_list", format!("{cs:?}"));
    m.set("probe_count", probes.len());
    m.set("display_scaling", DISPLAY_SCALING);
    m.finish(&out.join("gen-probes.manifest"))?;
    println!("wrote {} probes to {}", probes.len(), out.display());
    Ok(())
}

pub fn ground_truth(cfg: &Config, args: &DataArgs, probe: &Path, out: &Path) -> CliResult<()> {
    let data = load_data(cfg, args)?;
    let reference = load_probe(probe)?;
    let maps = cached_ground_truth(out, &data.images, &reference)?;

    let mut m = RunManifest::start("ground-truth");
    record_data(&mut m, &data);
    record_probe(&mut m, &reference, probe);
    m.set("maps", maps.len());
    m.finish(&with_suffix(out, ".manifest"))?;
    println!("{} ground-truth maps in {}", maps.len(), out.display());
    Ok(())
}

fn record_probe(m: &mut RunManifest, p: &ReferenceProbe, path: &Path) {
    m.set("probe_file", path.display());
    m.set("probe_beta", format!("{:?}", p.beta));
    m.set("probe_c", format!("{:?}", p.c));
}

pub struct TrainFlags {
    pub epochs: Option<usize>,
    pub lr: Option<f64>,
    pub batch: Option<usize>,
    pub loss: Option<String>,
    pub optimizer: Option<String>,
    pub seed: Option<u64>,
}

fn parse_optimizer(name: &str) -> CliResult<Optimizer> {
    match name.to_ascii_lowercase().as_str() {
        "adam" => Ok(Optimizer::adam()),
        "sgd" => Ok(Optimizer::Sgd),
        other => Err(CliError::Usage(format!("unknown optimizer `{other}` (adam or sgd)"))),
    }
}

pub fn train(
    cfg: &Config,
    args: &DataArgs,
    gt: &Path,
    flags: TrainFlags,
    checkpoint_out: &Path,
    log_out: Option<PathBuf>,
) -> CliResult<()> {
    let defaults = TrainConfig::default();
    let loss: String = cfg.resolve(flags.loss, "loss", defaults.loss.name().to_string())?;
    let optimizer: String = cfg.resolve(flags.optimizer, "optimizer", "adam".to_string())?;
    let config = TrainConfig {
        epochs: cfg.resolve(flags.epochs, "epochs", defaults.epochs)?,
        learning_rate: cfg.resolve(flags.lr, "lr", defaults.learning_rate)?,
        batch_size: cfg.resolve(flags.batch, "batch", defaults.batch_size)?,
        optimizer: parse_optimizer(&optimizer)?,
        loss: loss.parse::<Metric>().map_err(|e| CliError::Usage(e.to_string()))?,
        seed: cfg.resolve(flags.seed, "seed", defaults.seed)?,
    };
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;

    let data = load_data(cfg, args)?;
    let (header, truth) = load_truth(gt, &data)?;
    let mut layer = AsplundLayer::new(REFERENCE_WINDOW, REFERENCE_WINDOW, header.ceiling)?;
    let run = training::train(&mut layer, &data.images, &truth, &config)?;

    Checkpoint {
        kernels: layer.kernels().clone(),
        ceiling: layer.ceiling(),
    }
    .save(checkpoint_out)?;
    let log_out = log_out.unwrap_or_else(|| with_suffix(checkpoint_out, ".log.csv"));
    write_text(&log_out, &run.to_csv())?;

    let mut m = RunManifest::start("train");
    record_data(&mut m, &data);
    m.set("ground_truth", gt.display());
    m.set("probe_beta", format!("{:?}", header.beta));
    m.set("probe_c", format!("{:?}", header.c));
    m.set("epochs", config.epochs);
    m.set("lr", format!("{:?}", config.learning_rate));
    m.set("batch", config.batch_size);
    m.set("loss", config.loss);
    m.set("optimizer", format!("{:?}", config.optimizer));
    m.set("seed", config.seed);
    m.set("final_loss", format!("{:e}", run.epoch_losses.last().copied().unwrap_or(f64::NAN)));
    m.set("tie_fraction", format!("{:e}", run.tie_fraction()));
    m.set("negative_outputs", run.negative_outputs);
    m.set("clamped_heights", run.clamped_heights);
    m.set("checkpoint", checkpoint_out.display());
    m.set("log", log_out.display());
    m.finish(&with_suffix(checkpoint_out, ".manifest"))?;
    println!(
        "trained {} epochs, final mean loss {:e}; checkpoint {}",
        config.epochs,
        run.epoch_losses.last().copied().unwrap_or(f64::NAN),
        checkpoint_out.display()
    );
    Ok(())
}

fn shifted_sets(images: &[LipImage], shift: f64) -> Vec<TestSet> {
    vec![
        TestSet {
            name: "initial".into(),
            images: images.to_vec(),
        },
        TestSet {
            name: "dark".into(),
            images: lip_shift_set(images, shift),
        },
        TestSet {
            name: "bright".into(),
            images: lip_shift_set(images, -shift),
        },
    ]
}

fn check_shift(shift: f64) -> CliResult<f64> {
    if shift.is_finite() && (0.0..DEFAULT_CEILING).contains(&shift) {
        Ok(shift)
    } else {
        Err(CliError::Usage(format!("--shift must lie in [0, {DEFAULT_CEILING}), got {shift}")))
    }
}

pub fn eval(
    cfg: &Config,
    args: &DataArgs,
    gt: &Path,
    checkpoint: &Path,
    shift: Option<f64>,
    report_out: Option<&Path>,
) -> CliResult<()> {
    let shift = check_shift(cfg.resolve(shift, "shift", DEFAULT_SHIFT)?)?;
    let layer = load_checkpoint(checkpoint)?;
    let data = load_data(cfg, args)?;
    let (header, truth) = load_truth(gt, &data)?;
    let report = evaluate_layer(&layer, &shifted_sets(&data.images, shift), &truth)?;
    let all_finite = report
        .sets
        .iter()
        .flat_map(|s| &s.metrics)
        .all(|m| m.average.is_finite() && m.std_dev.is_finite());
    if !all_finite {
        return Err(CliError::Numeric("non-finite validation metric".into()));
    }
    let csv = report.to_csv();
    match report_out {
        Some(path) => {
            write_text(path, &csv)?;
            let mut m = RunManifest::start("eval");
            record_data(&mut m, &data);
            m.set("ground_truth", gt.display());
            m.set("probe_beta", format!("{:?}", header.beta));
            m.set("probe_c", format!("{:?}", header.c));
            m.set("checkpoint", checkpoint.display());
            m.set("shift", format!("{shift:?}"));
            m.set("max_abs_avg_diff", format!("{:e}", report.max_abs_avg_diff()));
            m.finish(&with_suffix(path, ".manifest"))?;
            println!("max abs avg diff {:e}; report {}", report.max_abs_avg_diff(), path.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn load_image(path: &Path, index: usize) -> CliResult<LipImage> {
    let is_pgm = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "pgm" | "pnm"));
    if is_pgm {
        return Ok(read_pgm(path, DEFAULT_CEILING)?);
    }
    let mut images = dataset::load_idx(path)?;
    if index >= images.len() {
        return Err(CliError::Usage(format!(
            "--index {index} out of range: {} holds {} images",
            path.display(),
            images.len()
        )));
    }
    Ok(images.swap_remove(index))
}

pub fn predict(
    cfg: &Config,
    image: &Path,
    index: usize,
    checkpoint: &Path,
    probe: &Path,
    shift: Option<f64>,
    out: &Path,
) -> CliResult<()> {
    let shift = check_shift(cfg.resolve(shift, "shift", DEFAULT_SHIFT)?)?;
    let layer = load_checkpoint(checkpoint)?;
    let reference = load_probe(probe)?;
    let f = load_image(image, index)?;
    let dark = f.lip_add_constant(shift);
    let bright = f.lip_sub_constant(shift);
    let truth = asplund_map(&f, &reference.to_probe())?;
    let probes = layer.effective_probes();
    let predict = |g: &LipImage| -> CliResult<LipImage> { Ok(layer.forward_with(&probes, g)?.0) };

    let panels = [
        ("1_input", f.clone()),
        ("2_dark", dark.clone()),
        ("3_bright", bright.clone()),
        ("4_ground_truth", truth),
        ("5_prediction", predict(&f)?),
        ("6_prediction_dark", predict(&dark)?),
        ("7_prediction_bright", predict(&bright)?),
    ];
    create_dir(out)?;
    for (stem, img) in &panels {
        write_dump(out, stem, img.width(), img.height(), img.ceiling(), img.as_slice())?;
    }

    let mut m = RunManifest::start("predict");
    m.set("image", image.display());
    m.set("index", index);
    m.set("checkpoint", checkpoint.display());
    record_probe(&mut m, &reference, probe);
    m.set("shift", format!("{shift:?}"));
    m.set("display_scaling", DISPLAY_SCALING);
    m.finish(&out.join("predict.manifest"))?;
    println!("wrote {} panels to {}", panels.len(), out.display());
    Ok(())
}

pub fn probe_error(checkpoint: &Path, reference: &Path, out: Option<&Path>) -> CliResult<()> {
    let ckpt = Checkpoint::load(checkpoint)?;
    let r = load_probe(reference)?;
    let k = &ckpt.kernels;
    if (k.width(), k.height()) != (r.width(), r.height()) {
        return Err(CliError::Data(format!(
            "checkpoint window {}x{} does not match reference {}x{}",
            k.width(),
            k.height(),
            r.width(),
            r.height()
        )));
    }
    let e = training::probe_error(&k.heights, &k.mask_logits, &r.heights, &r.mask, ckpt.ceiling)?;
    if !e.e_pr.is_finite() || !e.mask_mse.is_finite() {
        return Err(CliError::Numeric("non-finite probe error".into()));
    }
    let csv = format!(
        "beta,c,e_pr,mask_mse,shift\n{:?},{:?},{:e},{:e},{:?}\n",
        r.beta, r.c, e.e_pr, e.mask_mse, e.shift
    );
    match out {
        Some(path) => write_text(path, &csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}
