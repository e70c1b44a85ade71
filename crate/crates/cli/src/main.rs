use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use physmap::checkpoint::Checkpoint;
use physmap::config::RunConfig;
use physmap::mesh::read_mesh;
use physmap::pipeline;
use physmap::Error;

/// Neural SDF mapping from point clouds with biharmonic smoothing and mesh refinement.
#[derive(Parser, Debug)]
#[command(name = "physmap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a scan of the configured synthetic scene.
    Synth {
        #[command(flatten)]
        common: Common,
    },
    /// Train a field on a point cloud and write a checkpoint.
    Train {
        /// Point cloud, ASCII XYZ or PLY.
        #[arg(long)]
        points: PathBuf,
        /// Poses, one 3x4 row-major transform per frame [default: sensor at the origin]
        #[arg(long)]
        poses: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Extract a triangle mesh from a checkpoint.
    Extract {
        #[arg(long)]
        checkpoint: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Refine a mesh by Laplacian smoothing.
    Refine {
        /// Mesh, PLY or OBJ.
        #[arg(long)]
        mesh: PathBuf,
        /// Ground truth mesh or point cloud; enables the Chamfer plateau test.
        #[arg(long)]
        gt: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a mesh against ground truth.
    Eval {
        #[arg(long)]
        mesh: PathBuf,
        /// Ground truth mesh (surface-sampled) or point cloud.
        #[arg(long)]
        gt: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Synthesize, train, extract, refine and evaluate in one go.
    Run {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// TOML run config [default: built-in defaults; `run` and `synth` use the bundled sphere scene]
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Master seed [default: train.seed from the config, 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for all parallel phases [default: all cores]
    #[arg(long)]
    threads: Option<usize>,
    /// Training steps [default: 5000]
    #[arg(long)]
    steps: Option<usize>,
    /// Training batch size [default: 1024]
    #[arg(long)]
    batch: Option<usize>,
    /// Octree levels [default: 3]
    #[arg(long)]
    levels: Option<usize>,
    /// Leaf voxel size in meters [default: 0.10]
    #[arg(long)]
    leaf_size: Option<f64>,
    /// Corner feature dimension [default: 128]
    #[arg(long)]
    feature_dim: Option<usize>,
    /// Hidden layer width [default: 128]
    #[arg(long)]
    width: Option<usize>,
    /// Weight of the biharmonic term [default: 1.0]
    #[arg(long)]
    lambda_hessian: Option<f64>,
    /// Scale applied to the biharmonic term [default: 1e-11]
    #[arg(long)]
    hessian_scale: Option<f64>,
    /// Marching-cubes cell size in meters [default: half the leaf size]
    #[arg(long)]
    cell: Option<f64>,
    /// Refinement step size [default: 0.5]
    #[arg(long)]
    eta: Option<f64>,
    /// Refinement iteration cap [default: 20]
    #[arg(long)]
    max_iters: Option<usize>,
    /// F-score distance threshold in centimeters [default: 10]
    #[arg(long)]
    threshold_cm: Option<f64>,
    /// Surface samples for evaluation [default: 10000]
    #[arg(long)]
    n_samples: Option<usize>,
}

impl Common {
    fn config(&self, bundled_scene: bool) -> physmap::Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None if bundled_scene => RunConfig::sphere_scene(),
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($flag:ident => $($field:ident).+),* $(,)?) => {
                $(if let Some(v) = self.$flag { c.$($field).+ = v.into(); })*
            };
        }
        set!(
            seed => train.seed,
            steps => train.steps,
            batch => train.batch,
            levels => octree.levels,
            leaf_size => octree.leaf_size,
            feature_dim => octree.feature_dim,
            width => network.width,
            lambda_hessian => loss.lambda_hessian,
            hessian_scale => loss.hessian_scale,
            cell => extract.cell,
            eta => refine.eta,
            max_iters => refine.max_iters,
            threshold_cm => eval.threshold_cm,
            n_samples => eval.n_samples,
        );
        if self.threads.is_some() {
            c.threads = self.threads;
        }
        c.validate()?;
        Ok(c)
    }
}

fn run(cli: Cli) -> physmap::Result<()> {
    match cli.command {
        Command::Synth { common } => {
            let cfg = common.config(true)?;
            let pts = pipeline::cmd_synth(&cfg, &common.out)?;
            println!("points={} out={}", pts.len(), common.out.display());
        }
        Command::Train { points, poses, common } => {
            let cfg = common.config(false)?;
            let pts = pipeline::load_points(&points, poses.as_deref())?;
            pipeline::cmd_train(&pts, &cfg, &common.out)?;
            println!("checkpoint={}", common.out.join(pipeline::CHECKPOINT_FILE).display());
        }
        Command::Extract { checkpoint, common } => {
            let mut ckpt = Checkpoint::load(&checkpoint)?;
            if let Some(c) = common.cell {
                ckpt.config.extract.cell = Some(c);
            }
            if common.threads.is_some() {
                ckpt.config.threads = common.threads;
            }
            ckpt.config.validate()?;
            let mesh = pipeline::cmd_extract(&ckpt, &common.out)?;
            println!("vertices={} faces={}", mesh.vertices.len(), mesh.faces.len());
        }
        Command::Refine { mesh, gt, common } => {
            let cfg = common.config(false)?;
            let m = read_mesh(&mesh)?;
            let gt = gt.as_deref().map(|p| pipeline::load_ground_truth(p, &cfg)).transpose()?;
            let outcome = pipeline::cmd_refine(&m, &cfg, &common.out, gt.as_deref())?;
            println!("iterations={} stop={:?}", outcome.report.len(), outcome.stop);
        }
        Command::Eval { mesh, gt, common } => {
            let cfg = common.config(false)?;
            let m = read_mesh(&mesh)?;
            let gt = pipeline::load_ground_truth(&gt, &cfg)?;
            print!("{}", pipeline::cmd_eval(&m, &gt, &cfg, &common.out)?.to_text());
        }
        Command::Run { common } => {
            let cfg = common.config(true)?;
            print!("{}", pipeline::cmd_run(&cfg, &common.out)?.report.to_text());
        }
    }
    Ok(())
}

fn error_line(e: &Error) -> String {
    let mut v = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
    if let Error::Config { key, .. } = e {
        v["key"] = key.clone().into();
    }
    v.to_string()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_line(&e));
            ExitCode::from(if matches!(e, Error::Config { .. }) { 2 } else { 1 })
        }
    }
}
