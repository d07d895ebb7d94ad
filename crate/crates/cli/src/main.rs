use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use metric_layout::harness::{
    evaluate, run_pipeline, synth_scene, EvalOptions, PipelineOptions, PosesFile, RotationSource, SceneSpec,
    SynthConfig,
};
use metric_layout::metrics::ChamferConvention;
use metric_layout::pose::{ExternalPoseAdapter, RotationGrid};
use metric_layout::raster::io::{write_depth, write_mask, write_normals};

#[derive(Parser, Debug)]
#[command(name = "metric-layout", version, about = "Place meshes into a single image at metric scale")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic scene with known poses.
    Synth(SynthArgs),
    /// Render the ground-truth scene: depth, normals and per-object masks.
    Render(RenderArgs),
    /// Recover scale, translation and rotation for every object.
    Solve(SolveArgs),
    /// Score predicted poses against the scene's ground truth.
    Eval(EvalArgs),
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    objects: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 20.0)]
    fov_min: f64,
    #[arg(long, default_value_t = 60.0)]
    fov_max: f64,
    /// Largest hidden fraction allowed per object.
    #[arg(long, default_value_t = 0.0)]
    occlusion: f64,
    #[arg(long, default_value_t = 512)]
    width: u32,
    #[arg(long, default_value_t = 512)]
    height: u32,
}

#[derive(Args, Debug)]
struct RenderArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long, default_value_t = 4)]
    iters: usize,
    #[arg(long)]
    out: PathBuf,
    /// Skip rotation estimation and keep the identity.
    #[arg(long, conflicts_with_all = ["external_pose", "gt_rotation"])]
    no_rotation: bool,
    #[arg(long, default_value_t = 42)]
    rot_grid_viewpoints: usize,
    #[arg(long, default_value_t = 12)]
    rot_grid_inplane: usize,
    /// Hand rotation estimation to an external service through this directory.
    #[arg(long)]
    external_pose: Option<PathBuf>,
    /// Command run per object before reading the external answer.
    #[arg(long, requires = "external_pose", num_args = 1.., allow_hyphen_values = true)]
    external_command: Option<Vec<String>>,
    /// Use the rotations stored with the scene's ground truth.
    #[arg(long, conflicts_with = "external_pose")]
    gt_rotation: bool,
    /// Keep the scale at 1 and solve translation only.
    #[arg(long)]
    fix_scale: bool,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    scene: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    tau: f64,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Use squared distances in the Chamfer distance (non-default).
    #[arg(long)]
    chamfer_squared: bool,
    /// Score without the rigid pre-alignment.
    #[arg(long)]
    no_align: bool,
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    let config = SynthConfig {
        seed: a.seed,
        object_count: a.objects,
        fov_degrees_range: (a.fov_min, a.fov_max),
        occlusion_target: a.occlusion,
        width: a.width,
        height: a.height,
        ..SynthConfig::default()
    };
    let s = synth_scene(&config)?;
    let path = s.scene.save(&a.out)?;
    fs::write(a.out.join("synth.json"), serde_json::to_string_pretty(&config)? + "\n")?;
    println!("{} ({} objects, fov {:.2}°)", path.display(), s.scene.objects.len(), s.fov_degrees);
    Ok(())
}

fn render(a: RenderArgs) -> Result<()> {
    let scene = SceneSpec::load(&a.scene).with_context(|| format!("loading {}", a.scene.display()))?;
    let r = scene.render_ground_truth()?;
    fs::create_dir_all(a.out.join("masks"))?;
    write_depth(&a.out.join("depth.dpt"), &r.depth)?;
    write_normals(&a.out.join("normals.nrm"), &r.normals)?;
    for (i, o) in scene.objects.iter().enumerate() {
        write_mask(&a.out.join("masks").join(format!("{}.pgm", o.id)), &r.mask_of(i as u32))?;
    }
    println!("{}", a.out.display());
    Ok(())
}

fn solve(a: SolveArgs) -> Result<()> {
    let scene = SceneSpec::load(&a.scene).with_context(|| format!("loading {}", a.scene.display()))?;
    let rotation = if a.no_rotation {
        RotationSource::None
    } else if a.gt_rotation {
        RotationSource::GroundTruth
    } else if let Some(dir) = a.external_pose {
        let adapter = ExternalPoseAdapter::new(dir);
        RotationSource::External(match a.external_command {
            Some(cmd) => adapter.with_command(cmd),
            None => adapter,
        })
    } else {
        RotationSource::Grid(RotationGrid::new(a.rot_grid_viewpoints, a.rot_grid_inplane)?)
    };
    let options = PipelineOptions {
        iters: a.iters,
        rotation,
        fix_scale: a.fix_scale,
    };
    let poses = run_pipeline(&scene, &options)?;
    create_parent(&a.out)?;
    fs::write(&a.out, poses.to_json_string()?)?;
    let failed = poses.objects.iter().filter(|o| o.error.is_some()).count();
    for o in poses.objects.iter().filter(|o| o.error.is_some()) {
        eprintln!("{}: {}", o.id, o.error.as_deref().unwrap_or_default());
    }
    println!("{} ({} solved, {failed} failed)", a.out.display(), poses.objects.len() - failed);
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let scene = SceneSpec::load(&a.scene).with_context(|| format!("loading {}", a.scene.display()))?;
    let text = fs::read_to_string(&a.pred).with_context(|| format!("reading {}", a.pred.display()))?;
    let pred = PosesFile::from_json_str(&text)?;
    let options = EvalOptions {
        tau: a.tau,
        samples: a.samples,
        seed: a.seed,
        convention: if a.chamfer_squared {
            ChamferConvention::MeanSquaredL2
        } else {
            ChamferConvention::MeanL2
        },
        align: !a.no_align,
    };
    let report = evaluate(&pred, &scene, &options)?;
    create_parent(&a.out)?;
    fs::write(&a.out, report.to_json_string()?)?;
    let s = &report.scene;
    println!(
        "CD-S {:.4}  FScore-S {:.2}  CD-O {:.4}  FScore-O {:.2}  IoU-B {:.4}",
        s.cd, s.fscore, s.cd_o, s.fscore_o, s.iou_b
    );
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::Synth(a) => synth(a),
        Command::Render(a) => render(a),
        Command::Solve(a) => solve(a),
        Command::Eval(a) => eval(a),
    }
}
