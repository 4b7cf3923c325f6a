use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use hydroptic::dataset::{build_dataset, sha256_hex, BatchOptions, DatasetConfig, LabelConfig, Provenance, ValidateConfig};
use hydroptic::imaging::{degrade_with_geometry, restore_with_geometry, RestoreParams, SceneGeometry};
use hydroptic::losses::{FeatureStack, LossWeights};
use hydroptic::metrics::{evaluate_dirs, list_pngs, SsimMode};
use hydroptic::raster::write_atomic;
use hydroptic::site::Site;
use hydroptic::spectral::{ChannelAttenuation, IntegrationBounds, Normalization};
use hydroptic::{Error, ErrorKind, ImagePlane, Result};

mod losscheck;
mod parse;

#[derive(Parser)]
#[command(name = "hydroptic", version, about = "Underwater image restoration, metrics and dataset tooling")]
struct Cli {
    /// Worker threads; 0 uses one per core.
    #[arg(long, global = true, env = "HYDROPTIC_THREADS", default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Invert the water column for one PNG or a directory of PNGs.
    Restore(RestoreArgs),
    /// Apply the forward water-column model to clean PNGs.
    Synthesize(SynthesizeArgs),
    /// Full-reference and no-reference metrics for paired directories.
    Evaluate(EvaluateArgs),
    /// Verify the contrastive loss kernels against independent computations.
    Losscheck(LosscheckArgs),
    /// Label, restore, split and validate a dataset root.
    Dataset(DatasetArgs),
}

#[derive(Args)]
struct SpectralArgs {
    /// Wavelength integration bounds in nm.
    #[arg(long, value_parser = parse::f64_range, default_value = "400:750")]
    bounds: (f64, f64),
    /// Use the bare integral of β·S instead of the response-weighted mean.
    #[arg(long)]
    literal_integral: bool,
}

impl SpectralArgs {
    fn bounds(&self) -> Result<IntegrationBounds> {
        IntegrationBounds::new(self.bounds.0, self.bounds.1)
    }

    fn normalization(&self) -> Normalization {
        if self.literal_integral {
            Normalization::Literal
        } else {
            Normalization::WeightedMean
        }
    }
}

#[derive(Args)]
struct InversionArgs {
    /// Lower bound on the transmission divisor.
    #[arg(long, default_value_t = 0.1)]
    t0: f64,
    /// 8-bit input range inverted without clamping.
    #[arg(long, value_parser = parse::u8_range, default_value = "13:255")]
    keep_range: (u8, u8),
    /// Skip the per-channel min-max stretch.
    #[arg(long)]
    no_rescale: bool,
}

impl InversionArgs {
    fn params(&self) -> Result<RestoreParams> {
        let p = RestoreParams {
            t0: self.t0,
            keep_range: self.keep_range,
            rescale: !self.no_rescale,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Args)]
struct GeometryArgs {
    /// Camera-to-scene distance in m; overrides `<stem>.geometry.json`.
    #[arg(long)]
    distance: Option<f64>,
    /// Dive depth in m; overrides `<stem>.geometry.json`.
    #[arg(long)]
    depth: Option<f64>,
}

impl GeometryArgs {
    /// Sidecar values with flag overrides applied.
    fn resolve(&self, image: &Path) -> Result<SceneGeometry> {
        let sidecar = geometry_sidecar(image);
        let base = if sidecar.is_file() {
            Some(SceneGeometry::load(&sidecar)?)
        } else {
            None
        };
        let distance = self.distance.or(base.map(|g| g.distance_m));
        let depth = self.depth.or(base.map(|g| g.dive_depth_m));
        match (distance, depth) {
            (Some(d), Some(phi)) => SceneGeometry::new(d, phi),
            _ => Err(Error::parse(
                image.display().to_string(),
                format!("no geometry: pass --distance and --depth or provide {}", sidecar.display()),
            )),
        }
    }
}

#[derive(Args)]
struct RestoreArgs {
    /// A PNG file or a directory of PNGs.
    #[arg(long)]
    input: PathBuf,
    /// Directory for restored PNGs and their provenance.
    #[arg(long)]
    output: PathBuf,
    /// Site metadata JSON.
    #[arg(long)]
    site: PathBuf,
    #[command(flatten)]
    geometry: GeometryArgs,
    #[command(flatten)]
    inversion: InversionArgs,
    #[command(flatten)]
    spectral: SpectralArgs,
    /// Also write `<stem>.panel.png` with input and output side by side.
    #[arg(long)]
    panel: bool,
}

#[derive(Args)]
struct SynthesizeArgs {
    /// A clean PNG file or a directory of them.
    #[arg(long)]
    input: PathBuf,
    /// Directory for degraded PNGs and their geometry sidecars.
    #[arg(long)]
    output: PathBuf,
    /// Site metadata JSON supplying the attenuation.
    #[arg(long, conflicts_with = "attenuation", required_unless_present = "attenuation")]
    site: Option<PathBuf>,
    /// Per-channel attenuation in 1/m as r,g,b.
    #[arg(long, value_parser = parse::triple)]
    attenuation: Option<[f64; 3]>,
    #[command(flatten)]
    geometry: GeometryArgs,
    #[command(flatten)]
    spectral: SpectralArgs,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Directory of images under test.
    #[arg(long)]
    test: PathBuf,
    /// Directory of same-named reference images.
    #[arg(long)]
    reference: PathBuf,
    /// CSV path; a JSON summary is written beside it.
    #[arg(long)]
    output: PathBuf,
    /// SSIM on luma instead of the mean over RGB channels.
    #[arg(long)]
    ssim_gray: bool,
}

#[derive(Args)]
struct LosscheckArgs {
    /// Feature stack of the source image.
    #[arg(long, requires = "features_gx", conflicts_with = "random")]
    features_x: Option<PathBuf>,
    /// Feature stack of the translated image.
    #[arg(long, requires = "features_x")]
    features_gx: Option<PathBuf>,
    /// Generate both stacks from --seed.
    #[arg(long, required_unless_present = "features_x")]
    random: bool,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Layer shapes for --random as `s,c;s,c;...`.
    #[arg(long, value_parser = parse::shapes, default_value = "8,16;6,12;4,8")]
    shapes: parse::Shapes,
    #[arg(long, default_value_t = 0.07)]
    tau: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda_gan: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda_nce: f64,
    #[arg(long, default_value_t = 10.0)]
    lambda_idt: f64,
}

#[derive(Args)]
struct DatasetArgs {
    /// Dataset root holding records.json, raw/ and sites/.
    #[arg(long)]
    root: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 300)]
    test_count: usize,
    /// Largest depth change between consecutive readings for a good frame, m.
    #[arg(long, default_value_t = 0.5)]
    depth_jitter: f64,
    /// Warn about any image that is not WxH.
    #[arg(long, value_parser = parse::dims)]
    expect_dims: Option<(u32, u32)>,
    #[command(flatten)]
    inversion: InversionArgs,
    #[command(flatten)]
    spectral: SpectralArgs,
}

fn geometry_sidecar(image: &Path) -> PathBuf {
    image.with_extension("geometry.json")
}

fn inputs(input: &Path) -> Result<Vec<PathBuf>> {
    if input.is_dir() {
        list_pngs(input)
    } else if input.is_file() {
        Ok(vec![input.to_path_buf()])
    } else {
        Err(Error::io(input, std::io::Error::new(std::io::ErrorKind::NotFound, "no such file or directory")))
    }
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Runs `f` over every input in parallel and reports failures in input order.
/// Returns the first failure, if any.
fn for_each_input(paths: &[PathBuf], f: impl Fn(&Path) -> Result<()> + Sync) -> Result<()> {
    let results: Vec<Result<()>> = paths.par_iter().map(|p| f(p)).collect();
    let mut first = None;
    for (path, r) in paths.iter().zip(results) {
        if let Err(e) = r {
            eprintln!("{}: {e}", path.display());
            first.get_or_insert(e);
        }
    }
    first.map_or(Ok(()), Err)
}

fn cmd_restore(args: &RestoreArgs) -> Result<()> {
    let params = args.inversion.params()?;
    let bounds = args.spectral.bounds()?;
    let normalize = args.spectral.normalization();
    let site = Site::load(&args.site)?;
    let attenuation = site.channel_attenuation(bounds, normalize)?;
    let paths = inputs(&args.input)?;
    for_each_input(&paths, |path| {
        let geometry = args.geometry.resolve(path)?;
        let source_bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let observed = ImagePlane::load_png(path)?;
        let (restored, medium) = restore_with_geometry(&observed, &attenuation, &geometry, &params)?;
        let png = restored.encode_png()?;
        let out = args.output.join(format!("{}.png", stem(path)));
        let provenance = Provenance {
            source: path.to_path_buf(),
            source_sha256: sha256_hex(&source_bytes),
            output: out.clone(),
            output_sha256: sha256_hex(&png),
            site_id: site.id.clone(),
            attenuation,
            geometry,
            medium,
            params,
            bounds,
            normalize,
        };
        write_atomic(&out, &png)?;
        write_atomic(&Provenance::sidecar_path(&out), provenance.to_json().as_bytes())?;
        if args.panel {
            let panel = observed.hconcat(&restored)?;
            panel.save_png(&args.output.join(format!("{}.panel.png", stem(path))))?;
        }
        Ok(())
    })?;
    println!("restored {} image(s) into {}", paths.len(), args.output.display());
    Ok(())
}

fn cmd_synthesize(args: &SynthesizeArgs) -> Result<()> {
    let attenuation = match (&args.site, args.attenuation) {
        (Some(site), _) => Site::load(site)?.channel_attenuation(args.spectral.bounds()?, args.spectral.normalization())?,
        (None, Some(p)) => ChannelAttenuation::from_array(p)?,
        (None, None) => return Err(Error::parse("synthesize", "pass --site or --attenuation")),
    };
    let paths = inputs(&args.input)?;
    for_each_input(&paths, |path| {
        let geometry = args.geometry.resolve(path)?;
        let scene = ImagePlane::load_png(path)?;
        let degraded = degrade_with_geometry(&scene, &attenuation, &geometry)?.with_alpha(scene.alpha().map(<[u8]>::to_vec))?;
        let out = args.output.join(format!("{}.png", stem(path)));
        degraded.save_png(&out)?;
        let sidecar = serde_json::to_string_pretty(&geometry).map_err(|e| Error::parse("geometry", e))?;
        write_atomic(&geometry_sidecar(&out), sidecar.as_bytes())
    })?;
    println!("degraded {} image(s) into {}", paths.len(), args.output.display());
    Ok(())
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let mode = if args.ssim_gray { SsimMode::Luma } else { SsimMode::RgbMean };
    let evaluation = evaluate_dirs(&args.test, &args.reference, mode)?;
    evaluation.write(&args.output)?;
    let m = &evaluation.mean;
    println!(
        "{} pair(s): MSE {:.4}  PSNR {:.4}  SSIM {:.6}  UIQM {:.4}",
        evaluation.count, m.mse, m.psnr, m.ssim, m.uiqm
    );
    Ok(())
}

fn load_stack(path: &Path) -> Result<FeatureStack> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    FeatureStack::from_json(&text).map_err(|e| match e {
        Error::Parse { message, .. } => Error::parse(path.display().to_string(), message),
        other => Error::invariant(format!("{}: {other}", path.display())),
    })
}

fn cmd_losscheck(args: &LosscheckArgs) -> Result<()> {
    let (x, gx) = match (&args.features_x, &args.features_gx) {
        (Some(fx), Some(fgx)) => (load_stack(fx)?, load_stack(fgx)?),
        _ => (
            FeatureStack::random_seeded(&args.shapes, args.seed)?,
            FeatureStack::random_seeded(&args.shapes, args.seed.wrapping_add(1))?,
        ),
    };
    let weights = LossWeights {
        lambda_gan: args.lambda_gan,
        lambda_nce: args.lambda_nce,
        lambda_idt: args.lambda_idt,
        tau: args.tau,
    };
    let checks = losscheck::run(&x, &gx, &weights)?;
    for c in &checks {
        println!("{}", c.line());
    }
    let failed = checks.iter().filter(|c| !c.passed()).count();
    if failed > 0 {
        return Err(Error::invariant(format!("{failed} loss check(s) failed")));
    }
    Ok(())
}

fn cmd_dataset(args: &DatasetArgs) -> Result<()> {
    let config = DatasetConfig {
        seed: args.seed,
        test_count: args.test_count,
        label: LabelConfig {
            depth_jitter_max_m: args.depth_jitter,
        },
        batch: BatchOptions {
            params: args.inversion.params()?,
            bounds: args.spectral.bounds()?,
            normalize: args.spectral.normalization(),
        },
        validate: ValidateConfig {
            expected_dims: args.expect_dims,
        },
    };
    let summary = build_dataset(&args.root, &config)?;
    write_atomic(
        &args.root.join("manifests/validation.json"),
        summary.validation.to_json().as_bytes(),
    )?;
    for (path, reason) in &summary.skipped {
        eprintln!("skipped {}: {reason}", path.display());
    }
    for issue in &summary.validation.issues {
        eprintln!("{:?} {:?} {}: {}", issue.severity, issue.kind, issue.path.display(), issue.detail);
    }
    println!(
        "{} records: {} good, {} low, {} restored, {} excluded; unpaired {} low + {} restored, paired train {}, test {}",
        summary.records,
        summary.good,
        summary.low,
        summary.restored,
        summary.excluded,
        summary.unpaired_low,
        summary.unpaired_restored,
        summary.paired_train,
        summary.test
    );
    let errors = summary.validation.errors();
    if errors > 0 {
        return Err(Error::invariant(format!("[validate] {errors} manifest violation(s)")));
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Io => 1,
        ErrorKind::Parse => 2,
        ErrorKind::Invariant => 3,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    };
    let result = pool.install(|| match &cli.command {
        Command::Restore(a) => cmd_restore(a),
        Command::Synthesize(a) => cmd_synthesize(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Losscheck(a) => cmd_losscheck(a),
        Command::Dataset(a) => cmd_dataset(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
