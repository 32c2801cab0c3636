use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use morsemap_core::embed::{import_embedding, Method};
use morsemap_core::morse::ArcMode;
use morsemap_cli::dataset::{self, ExtractInput, ExtractOptions, GenSynthOptions};
use morsemap_cli::manifest::DatasetManifest;
use morsemap_cli::pipeline::{self, LatentSet, TrainOptions};
use morsemap_cli::{plot, server};

/// Turn scalar fields into images of their Morse complexes, learn a latent
/// space over the images and project it to 2D.
#[derive(Parser)]
#[command(name = "morsemap", version)]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; all cores by default.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ExtractArgs {
    /// Persistence threshold for cancellation.
    #[arg(long, default_value_t = 0.04)]
    simplify: f64,
    /// Side of the square output images.
    #[arg(long, default_value_t = 64)]
    resolution: usize,
    /// Separatrices to draw: saddle-min or saddle-max.
    #[arg(long, default_value = "saddle-min")]
    mode: ArcMode,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset of base functions and noisy variants.
    GenSynth {
        #[arg(long)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 4)]
        variants: usize,
        /// Upper bound of the uniform noise added to every sample.
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
        #[arg(long, default_value_t = 256)]
        field_size: usize,
        #[command(flatten)]
        extract: ExtractArgs,
    },
    /// Build a dataset from stored fields (MSF1 or CSV).
    Extract {
        fields: Vec<PathBuf>,
        /// Take the fields from a crop listing instead.
        #[arg(long)]
        crops: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "field")]
        label: String,
        #[arg(long)]
        dataset_id: Option<String>,
        #[command(flatten)]
        extract: ExtractArgs,
    },
    /// Cut a field into windows.
    Crop {
        field: PathBuf,
        /// Window as WxH.
        #[arg(long, value_parser = parse_pair)]
        window: (usize, usize),
        /// Step as SXxSY; defaults to the window, giving disjoint crops.
        #[arg(long, value_parser = parse_pair)]
        stride: Option<(usize, usize)>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the autoencoder on a dataset.
    Train {
        #[arg(long)]
        manifest: PathBuf,
        /// Checkpoint to write.
        #[arg(long)]
        out: PathBuf,
        /// Held-out dataset evaluated after every epoch.
        #[arg(long)]
        test: Option<PathBuf>,
        /// Continue from a checkpoint with optimizer state.
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Per-epoch CSV report; `<out>.csv` by default.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Train one model per latent size and seed and record the loss curves.
    Sweep {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "16,32,64,128")]
        latent_dims: Vec<usize>,
        /// Runs per latent size; seeds follow the global seed.
        #[arg(long, default_value_t = 3)]
        runs: u64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Encode every image of a dataset.
    Encode {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Project latent vectors to 2D.
    Project {
        #[arg(long)]
        latents: PathBuf,
        #[arg(long, default_value = "tsne")]
        method: Method,
        /// t-SNE perplexity.
        #[arg(long, default_value_t = 30.0)]
        perplexity: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render an embedding, or a sweep's loss curves, as SVG.
    Plot {
        #[arg(long, required_unless_present = "sweep")]
        embedding: Option<PathBuf>,
        #[arg(long, conflicts_with = "embedding")]
        sweep: Option<PathBuf>,
        /// `label`, `id` or a metadata key.
        #[arg(long, default_value = "label")]
        color_by: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve an embedding and its dataset over HTTP.
    Serve {
        #[arg(long)]
        embedding: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        /// Latents enabling reprojection.
        #[arg(long)]
        latents: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, default_value_t = 64)]
    latent_dim: usize,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Encoder channels per stage.
    #[arg(long, value_delimiter = ',')]
    channels: Option<Vec<usize>>,
}

impl TrainArgs {
    fn options(&self, seed: u64) -> TrainOptions {
        let d = TrainOptions::default();
        TrainOptions {
            latent_dim: self.latent_dim,
            channels: self.channels.clone().unwrap_or(d.channels),
            epochs: self.epochs.unwrap_or(d.epochs),
            batch_size: self.batch_size.unwrap_or(d.batch_size),
            lr: self.lr.unwrap_or(d.lr),
            seed,
            ..d
        }
    }
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
    match s.split_once(['x', 'X']) {
        Some((a, b)) => Ok((parse(a)?, parse(b)?)),
        None => parse(s).map(|v| (v, v)),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    let seed = cli.seed;
    match cli.command {
        Command::GenSynth { count, out, variants, noise, field_size, extract } => {
            let opts = GenSynthOptions {
                count,
                variants,
                noise,
                simplify: extract.simplify,
                resolution: extract.resolution,
                field_size,
                mode: extract.mode,
                seed,
            };
            let m = dataset::gen_synth(&opts, &out)?;
            eprintln!("{} images in {}", m.entries.len(), out.join("manifest.json").display());
        }
        Command::Extract { fields, crops, out, label, dataset_id, extract } => {
            let mut inputs: Vec<ExtractInput> =
                fields.into_iter().map(|path| ExtractInput { path, meta: Default::default() }).collect();
            if let Some(listing) = crops {
                inputs.extend(dataset::crop_inputs(&listing)?);
            }
            if inputs.is_empty() {
                bail!("give field paths or --crops");
            }
            let opts = ExtractOptions {
                simplify: extract.simplify,
                resolution: extract.resolution,
                mode: extract.mode,
                dataset_id: dataset_id.unwrap_or_else(|| format!("{label}-s{seed}-{}", inputs.len())),
                label,
                seed,
            };
            let m = dataset::extract(&inputs, &opts, &out)?;
            eprintln!("{} images in {}", m.entries.len(), out.join("manifest.json").display());
        }
        Command::Crop { field, window, stride, out } => {
            let listing = dataset::crop(&field, window, stride.unwrap_or(window), &out)?;
            eprintln!("{} crops in {}", listing.crops.len(), out.join("crops.json").display());
        }
        Command::Train { manifest, out, test, resume, report, train } => {
            let m = DatasetManifest::load(&manifest)?;
            let test = test.map(|p| DatasetManifest::load(&p)).transpose()?;
            let opts = train.options(seed);
            let rep = pipeline::train(&m, &opts, &out, test.as_ref(), resume.as_deref(), |r| {
                let test = r.test_bce.map(|t| format!(" test {t:.5}")).unwrap_or_default();
                eprintln!("epoch {:>3}  train {:.5}{test}  lr {:.2e}  {:.1}s", r.epoch, r.train_bce, r.lr, r.elapsed_s);
            })?;
            let report = report.unwrap_or_else(|| out.with_extension("csv"));
            write_text(&report, &rep.to_csv())?;
            eprintln!("checkpoint {}, report {}", out.display(), report.display());
        }
        Command::Sweep { manifest, latent_dims, runs, out, train } => {
            let m = DatasetManifest::load(&manifest)?;
            let seeds: Vec<u64> = (0..runs).map(|k| seed + k).collect();
            print!("{}", pipeline::sweep(&m, &latent_dims, &seeds, &train.options(seed), &out)?);
        }
        Command::Encode { model, manifest, out } => {
            let set = pipeline::encode(&model, &DatasetManifest::load(&manifest)?)?;
            set.save(&out)?;
            eprintln!("{} vectors of size {} in {}", set.items.len(), set.latent_dim, out.display());
        }
        Command::Project { latents, method, perplexity, out } => {
            let set = LatentSet::load(&latents)?;
            let perplexity = (method == Method::Tsne).then_some(perplexity);
            let e = pipeline::project_to_file(&set, method, perplexity, seed, &out)?;
            eprintln!("{} points in {}", e.points.len(), out.display());
        }
        Command::Plot { embedding, sweep, color_by, out } => {
            let svg = match (embedding, sweep) {
                (Some(path), _) => {
                    let (svg, warnings) = plot::embedding_svg(&import_embedding(&path)?, &color_by);
                    for w in warnings {
                        log::warn!("{w}");
                    }
                    svg
                }
                (None, Some(dir)) => plot::loss_curves_svg(&plot::read_sweep(&dir)?),
                (None, None) => bail!("give --embedding or --sweep"),
            };
            write_text(&out, &svg)?;
        }
        Command::Serve { embedding, manifest, latents, host, port } => {
            let text = std::fs::read_to_string(&embedding).with_context(|| format!("reading {}", embedding.display()))?;
            let m = DatasetManifest::load(&manifest)?;
            let latents = latents.map(|p| LatentSet::load(&p)).transpose()?;
            let state = server::AppState::new(text, m, latents)?;
            server::serve(state, &format!("{host}:{port}"), cli.jobs.unwrap_or(4))?;
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            log::warn!("thread pool: {e}");
        }
    }
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
