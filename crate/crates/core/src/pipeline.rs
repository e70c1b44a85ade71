//! Pipeline stages behind the command-line tool. Each stage writes its
//! artifact and the effective config into an output directory.

use std::fs;
use std::path::{Path, PathBuf};

use crate::checkpoint::Checkpoint;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::mesh::{marching_cubes, read_mesh, write_mesh, MeshFormat, TriangleMesh};
use crate::metrics::{evaluate, evaluate_mesh, sample_surface, ReconReport};
use crate::pointcloud::{load_pointcloud, synth_scan, write_poses, write_xyz, PointSample, Pose, RawPoint};
use crate::refine::{refine, write_report_csv, RefineOutcome};
use crate::training::{train, write_history_csv, Seeds};

pub const CONFIG_FILE: &str = "config.toml";
pub const POINTS_FILE: &str = "points.xyz";
pub const POSES_FILE: &str = "poses.txt";
pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const LOSS_FILE: &str = "loss.csv";
pub const MESH_FILE: &str = "mesh.ply";
pub const REFINED_FILE: &str = "refined.ply";
pub const REFINE_LOG_FILE: &str = "refine.csv";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TEXT: &str = "report.txt";

/// Run `f` on a pool of `threads` workers, or on the global pool when unset.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(f),
    }
}

fn prepare(out: &Path, cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write(&out.join(CONFIG_FILE), cfg.effective().to_toml().as_bytes())
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn scene(cfg: &RunConfig) -> Result<&crate::pointcloud::SyntheticScene> {
    cfg.scene.as_ref().ok_or_else(|| Error::Config {
        key: "scene".into(),
        msg: "a synthetic scene is required for this command".into(),
    })
}

/// Simulate a scan of the configured scene; writes sensor-frame points and one pose per sensor.
pub fn cmd_synth(cfg: &RunConfig, out: &Path) -> Result<Vec<PointSample>> {
    let scene = scene(cfg)?;
    prepare(out, cfg)?;
    let points = with_threads(cfg.threads, || synth_scan(scene, Seeds::derive(cfg.seed()).scan))?;
    let poses: Vec<Pose> = scene
        .scan
        .sensors
        .iter()
        .map(|s| Pose::translation(Vec3::from(*s)))
        .collect();
    let raw: Vec<RawPoint> = points
        .iter()
        .map(|p| RawPoint {
            position: p.position - p.sensor_origin,
            frame: p.frame_id,
        })
        .collect();
    write_xyz(&out.join(POINTS_FILE), &raw)?;
    write_poses(&out.join(POSES_FILE), &poses)?;
    log::info!("synthesized {} points from {} sensors", points.len(), poses.len());
    Ok(points)
}

pub fn load_points(path: &Path, poses: Option<&Path>) -> Result<Vec<PointSample>> {
    load_pointcloud(path, poses)
}

/// Train a field on `points`; writes the checkpoint and loss history.
pub fn cmd_train(points: &[PointSample], cfg: &RunConfig, out: &Path) -> Result<Checkpoint> {
    prepare(out, cfg)?;
    let trained = with_threads(cfg.threads, || train(points, &cfg.train_setup()))?;
    write_history_csv(&out.join(LOSS_FILE), &trained.state.history)?;
    let ckpt = Checkpoint::new(cfg, trained.field, trained.grid)?;
    ckpt.save(&out.join(CHECKPOINT_FILE))?;
    Ok(ckpt)
}

/// Marching cubes over the dilated occupied leaves of a checkpoint.
pub fn cmd_extract(ckpt: &Checkpoint, out: &Path) -> Result<TriangleMesh> {
    let cfg = &ckpt.config;
    prepare(out, cfg)?;
    let bounds = ckpt.grid.occupied_leaf_bounds(cfg.extract.dilation);
    let mesh = with_threads(cfg.threads, || {
        marching_cubes(&ckpt.field.view(&ckpt.grid)?, cfg.extract_cell(), &bounds)
    })?;
    if mesh.is_empty() {
        log::warn!("extracted mesh is empty");
    } else {
        write_mesh(&mesh, &out.join(MESH_FILE), MeshFormat::Ply)?;
    }
    Ok(mesh)
}

/// Laplacian refinement; with ground truth the plateau test tracks Chamfer-L1.
pub fn cmd_refine(mesh: &TriangleMesh, cfg: &RunConfig, out: &Path, gt: Option<&[Vec3]>) -> Result<RefineOutcome> {
    prepare(out, cfg)?;
    let seed = Seeds::derive(cfg.seed()).eval;
    let outcome = with_threads(cfg.threads, || match gt {
        Some(gt) => {
            let mut chamfer = |m: &TriangleMesh| -> Result<f64> {
                let pred = sample_surface(m, cfg.eval.n_samples, seed)?;
                Ok(-evaluate(&pred, gt, cfg.eval.threshold_cm)?.chamfer_l1_m)
            };
            refine(mesh, &cfg.refine, Some(&mut chamfer))
        }
        None => refine(mesh, &cfg.refine, None),
    })?;
    if let Some(w) = &outcome.warning {
        log::warn!("{w}");
    }
    write_mesh(&outcome.mesh, &out.join(REFINED_FILE), MeshFormat::Ply)?;
    write_report_csv(&out.join(REFINE_LOG_FILE), &outcome.report)?;
    Ok(outcome)
}

/// Ground truth from a file: meshes are surface-sampled, point clouds are used as is.
pub fn load_ground_truth(path: &Path, cfg: &RunConfig) -> Result<Vec<Vec3>> {
    let as_points = |p: &Path| Ok(load_pointcloud(p, None)?.into_iter().map(|s| s.position).collect());
    match MeshFormat::from_path(path) {
        Ok(_) => {
            let mesh = read_mesh(path)?;
            if mesh.faces.is_empty() {
                Ok(mesh.vertices)
            } else {
                sample_surface(&mesh, cfg.eval.n_samples, Seeds::derive(cfg.seed()).eval)
            }
        }
        Err(_) => as_points(path),
    }
}

/// Score `mesh` against ground-truth points; writes JSON and text reports.
pub fn cmd_eval(mesh: &TriangleMesh, gt: &[Vec3], cfg: &RunConfig, out: &Path) -> Result<ReconReport> {
    prepare(out, cfg)?;
    let seed = Seeds::derive(cfg.seed()).eval;
    let report = with_threads(cfg.threads, || evaluate_mesh(mesh, gt, &cfg.eval, seed))?;
    write(&out.join(REPORT_JSON), report.to_json().as_bytes())?;
    write(&out.join(REPORT_TEXT), report.to_text().as_bytes())?;
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub points: usize,
    pub mesh: TriangleMesh,
    pub refined: RefineOutcome,
    pub report: ReconReport,
    pub out: PathBuf,
}

/// Synthesize, train, extract, refine and evaluate against dense analytic ground truth.
pub fn cmd_run(cfg: &RunConfig, out: &Path) -> Result<RunOutcome> {
    let scene = scene(cfg)?;
    let points = cmd_synth(cfg, out)?;
    let ckpt = cmd_train(&points, cfg, out)?;
    let mesh = cmd_extract(&ckpt, out)?;
    if mesh.is_empty() {
        return Err(Error::Empty("extracted mesh"));
    }
    let gt = scene.surface_points(cfg.eval.n_samples, Seeds::derive(cfg.seed()).ground_truth);
    let refined = cmd_refine(&mesh, cfg, out, Some(&gt))?;
    let report = cmd_eval(&refined.mesh, &gt, cfg, out)?;
    Ok(RunOutcome {
        points: points.len(),
        mesh,
        refined,
        report,
        out: out.to_path_buf(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::icosphere;

    #[test]
    fn synth_output_reloads_in_world_frame() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig::sphere_scene();
        cfg.scene.as_mut().unwrap().scan.rays_per_sensor = 50;
        cfg.scene.as_mut().unwrap().scan.noise_sigma = 0.0;
        let pts = cmd_synth(&cfg, dir.path()).unwrap();
        let back = load_points(&dir.path().join(POINTS_FILE), Some(&dir.path().join(POSES_FILE))).unwrap();
        assert_eq!(pts.len(), back.len());
        for (a, b) in pts.iter().zip(&back) {
            assert!((a.position - b.position).norm() < 1e-12);
            assert_eq!(a.sensor_origin, b.sensor_origin);
            assert_eq!(a.frame_id, b.frame_id);
        }
        let echo = RunConfig::load(&dir.path().join(CONFIG_FILE)).unwrap();
        assert_eq!(echo, cfg.effective());
    }

    #[test]
    fn eval_of_mesh_against_itself_is_perfect() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig::default();
        let mesh = icosphere(2, 1.0);
        let path = dir.path().join("m.ply");
        write_mesh(&mesh, &path, MeshFormat::Ply).unwrap();
        let gt = load_ground_truth(&path, &cfg).unwrap();
        let r = cmd_eval(&read_mesh(&path).unwrap(), &gt, &cfg, dir.path()).unwrap();
        assert_eq!(r.f_score_pct, 100.0);
        assert_eq!(r.chamfer_l1_m, 0.0);
        assert!(dir.path().join(REPORT_JSON).exists());
    }

    #[test]
    fn refine_without_iterations_keeps_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig::default();
        cfg.refine.max_iters = 0;
        let input = dir.path().join("in.ply");
        write_mesh(&icosphere(2, 1.0), &input, MeshFormat::Ply).unwrap();
        let mesh = read_mesh(&input).unwrap();
        cmd_refine(&mesh, &cfg, dir.path(), None).unwrap();
        assert_eq!(fs::read(&input).unwrap(), fs::read(dir.path().join(REFINED_FILE)).unwrap());
    }

    #[test]
    fn missing_scene_names_the_key() {
        let dir = tempfile::tempdir().unwrap();
        match cmd_synth(&RunConfig::default(), dir.path()) {
            Err(Error::Config { key, .. }) => assert_eq!(key, "scene"),
            other => panic!("{other:?}"),
        }
    }
}
