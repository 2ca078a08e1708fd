use std::fs;
use std::path::{Path, PathBuf};

use panoscene::export::{render_translated, unproject, write_ply};
use panoscene::integrate::{self, coarse_weight_floorplan, coarse_weight_terrain, IntegrationConfig, ViewEstimate};
use panoscene::io::{read_map, read_png, write_gray_png, write_map, write_png, write_semantic};
use panoscene::layout::{
    floorplan_coarse_depth, floorplan_semantic_map, load_layout, synth_terrain_gmm, terrain_coarse_depth, GmmSpec,
    Layout,
};
use panoscene::metrics::evaluate_depth;
use panoscene::sphere::{erp_to_perspective, perspective_to_erp, tangent_rig_sized, CameraSpec};
use panoscene::{ErpGrid, Error, Grid};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::manifest::{beside, write_json, RunManifest};
use crate::{
    ConvertLayoutArgs, EvaluateArgs, ExportArgs, IntegrateArgs, SynthTerrainArgs, TangentViewsArgs, ViewsToErpArgs,
};

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn load_config(path: Option<&Path>) -> CliResult<IntegrationConfig> {
    let Some(path) = path else {
        return Ok(IntegrationConfig::default());
    };
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let cfg: IntegrationConfig =
        serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    cfg.validate()?;
    Ok(cfg)
}

fn parse_erp(s: &str) -> CliResult<ErpGrid> {
    Ok(ErpGrid::parse(s)?)
}

fn config_json(cfg: &IntegrationConfig) -> serde_json::Value {
    serde_json::to_value(cfg).expect("config serializes")
}

pub fn convert_layout(args: &ConvertLayoutArgs) -> CliResult<()> {
    let grid = parse_erp(&args.erp)?;
    let cfg = load_config(args.config.as_deref())?;
    let mut manifest = RunManifest::new("convert-layout");
    manifest.input("layout", &args.layout);
    manifest.config = config_json(&cfg);
    let layout = load_layout(&args.layout)?;
    create_dir(&args.out_dir)?;
    manifest.lap("parse");

    let observer = layout.observer().clone();
    let cam = observer.camera;
    let partial = match &observer.partial_image {
        Some(path) => {
            manifest.input("partial_image", path);
            let img = read_png(path)?;
            if img.dims() != (cam.height, cam.width) {
                return Err(CliError::input(format!(
                    "{}: partial image is {}x{} but the observer camera is {}x{}",
                    path.display(),
                    img.height(),
                    img.width(),
                    cam.height,
                    cam.width
                )));
            }
            Some(perspective_to_erp(&img, &cam, grid)?)
        }
        None => None,
    };
    let mask = match &partial {
        Some((_, mask)) => mask.clone(),
        None => perspective_to_erp(&Grid::filled(cam.height, cam.width, 0.0f64), &cam, grid)?.1,
    };
    manifest.lap("partial");

    let out = |name: &str| args.out_dir.join(name);
    let (depth, weight) = match &layout {
        Layout::FloorPlan(fp) => {
            let depth = floorplan_coarse_depth(fp, grid);
            let semantic = floorplan_semantic_map(fp, grid);
            manifest.lap("raster");
            let files = write_semantic(&semantic, grid, &out("semantic"))?;
            if let Some(index) = &files.index {
                manifest.output("semantic_index", index);
            }
            manifest.output("semantic_legend", &files.legend);
            for (k, ch) in files.channels.iter().enumerate() {
                manifest.output(&format!("semantic_channel_{:02}", k + 1), ch);
            }
            let weight = coarse_weight_floorplan(&mask, &semantic, &cfg, grid)?;
            (depth, weight)
        }
        Layout::Terrain(tm) => {
            let depth = terrain_coarse_depth(tm, grid);
            manifest.lap("raster");
            let weight = coarse_weight_terrain(&depth, &cfg)?;
            (depth, weight)
        }
    };

    write_map(&out("coarse_depth.pfm"), &depth)?;
    manifest.output("coarse_depth", &out("coarse_depth.pfm"));
    write_map(&out("coarse_weight.pfm"), &weight)?;
    manifest.output("coarse_weight", &out("coarse_weight.pfm"));
    if let Some((erp, mask)) = &partial {
        write_png(&out("partial.png"), erp)?;
        write_gray_png(&out("mask.png"), &mask.map(|&m| if m > 0.0 { 255 } else { 0 }))?;
        manifest.output("partial", &out("partial.png"));
        manifest.output("mask", &out("mask.png"));
    }
    manifest.lap("write");
    manifest.write(&out("manifest.json"))
}

/// `prefix_<k>.pfm` files in `dir`, ordered by `k`.
fn numbered_files(dir: &Path, prefix: &str) -> CliResult<Vec<(u32, String, PathBuf)>> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut found = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| CliError::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        let Some(id) = name.strip_prefix(prefix).and_then(|r| r.strip_suffix(".pfm")) else {
            continue;
        };
        if let Ok(k) = id.parse::<u32>() {
            found.push((k, id.to_string(), entry.path()));
        }
    }
    found.sort();
    Ok(found)
}

#[derive(Debug, Serialize)]
struct CoeffReport {
    view: String,
    scale: f64,
    offset: f64,
}

#[derive(Debug, Serialize)]
struct IntegrateReport {
    loss: f64,
    views: usize,
    ridge: f64,
    coefficients: Vec<CoeffReport>,
}

pub fn integrate(args: &IntegrateArgs) -> CliResult<()> {
    let mut cfg = load_config(args.config.as_deref())?;
    if let Some(r) = args.ridge {
        cfg.ridge = r;
    }
    cfg.validate()?;
    let mut manifest = RunManifest::new("integrate");
    manifest.config = config_json(&cfg);
    manifest.input("coarse", &args.coarse);
    manifest.input("coarse_weight", &args.coarse_weight);
    manifest.input("views", &args.views);

    let d0 = read_map(&args.coarse)?;
    let phi0 = read_map(&args.coarse_weight)?;
    let listed = numbered_files(&args.views, "view_")?;
    if listed.is_empty() {
        return Err(CliError::input(format!(
            "{}: no view_<k>.pfm files",
            args.views.display()
        )));
    }
    let mut views = Vec::with_capacity(listed.len());
    let mut names = Vec::with_capacity(listed.len());
    for (_, id, path) in &listed {
        let weight_path = args.views.join(format!("weight_{id}.pfm"));
        if !weight_path.exists() {
            return Err(CliError::input(format!(
                "{} has no matching {}",
                path.display(),
                weight_path.display()
            )));
        }
        views.push(ViewEstimate {
            estimate: read_map(path)?,
            weight: read_map(&weight_path)?,
        });
        names.push(format!("view_{id}"));
    }
    manifest.lap("read");

    let result = integrate::integrate(&d0, &phi0, &views, &cfg).map_err(|e| match e {
        Error::Singular { view, pivot } => CliError {
            code: crate::error::EXIT_NUMERICAL,
            message: format!(
                "normal system is singular at {} (pivot {pivot:.3e}); is its estimate constant?",
                names[view - 1]
            ),
        },
        other => other.into(),
    })?;
    manifest.lap("integrate");

    write_map(&args.out, &result.depth)?;
    let report = IntegrateReport {
        loss: result.loss,
        views: views.len(),
        ridge: cfg.ridge,
        coefficients: names
            .into_iter()
            .zip(&result.coeffs)
            .map(|(view, c)| CoeffReport {
                view,
                scale: c.scale,
                offset: c.offset,
            })
            .collect(),
    };
    write_json(&args.report, &report)?;
    manifest.output("fused", &args.out);
    manifest.output("report", &args.report);
    manifest.lap("write");
    manifest.write(&beside(&args.out))
}

pub fn evaluate(args: &EvaluateArgs) -> CliResult<()> {
    let est = read_map(&args.est)?;
    let gt = read_map(&args.gt)?;
    let report = evaluate_depth(&est, &gt)?;
    write_json(&args.report, &report)
}

/// Camera file for `export --render`. Angles in degrees.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CameraDoc {
    #[serde(default)]
    yaw_deg: f64,
    #[serde(default)]
    pitch_deg: f64,
    #[serde(default)]
    roll_deg: f64,
    hfov_deg: f64,
    width: usize,
    height: usize,
}

fn load_camera(path: &Path) -> CliResult<CameraSpec> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let doc: CameraDoc =
        serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let cam = CameraSpec {
        yaw: doc.yaw_deg.to_radians(),
        pitch: doc.pitch_deg.to_radians(),
        roll: doc.roll_deg.to_radians(),
        hfov: doc.hfov_deg.to_radians(),
        width: doc.width,
        height: doc.height,
    };
    cam.validate()?;
    Ok(cam)
}

fn parse_translation(s: &str) -> CliResult<[f64; 3]> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::input(format!("translation must be x,y,z, got {s:?}")))?;
    match parts.as_slice() {
        &[x, y, z] if parts.iter().all(|v| v.is_finite()) => Ok([x, y, z]),
        _ => Err(CliError::input(format!("translation must be x,y,z, got {s:?}"))),
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

pub fn export(args: &ExportArgs) -> CliResult<()> {
    let translation = parse_translation(&args.translate)?;
    let camera = args.render.as_deref().map(load_camera).transpose()?;
    let mut manifest = RunManifest::new("export");
    manifest.input("rgb", &args.rgb);
    manifest.input("depth", &args.depth);
    let rgb = read_png(&args.rgb)?;
    let depth = read_map(&args.depth)?;
    let cloud = unproject(&rgb, &depth)?;
    write_ply(&cloud, &args.ply)?;
    manifest.output("ply", &args.ply);
    manifest.lap("point_cloud");

    if let Some(cam) = camera {
        manifest.input("camera", args.render.as_deref().expect("camera implies path"));
        let render = render_translated(&rgb, &depth, &cam, translation)?;
        let image = sibling(&args.ply, "_render.png");
        let holes = sibling(&args.ply, "_holes.png");
        let zbuf = sibling(&args.ply, "_render_depth.pfm");
        write_png(&image, &render.image)?;
        write_gray_png(&holes, &render.holes)?;
        write_map(&zbuf, &render.depth)?;
        manifest.output("render", &image);
        manifest.output("holes", &holes);
        manifest.output("render_depth", &zbuf);
        manifest.config = serde_json::json!({ "translation": translation });
        manifest.lap("render");
    }
    manifest.write(&beside(&args.ply))
}

pub fn synth_terrain(args: &SynthTerrainArgs) -> CliResult<()> {
    let text = fs::read_to_string(&args.gmm).map_err(|e| CliError::io(&args.gmm, e))?;
    let spec = GmmSpec::from_json(&text)?;
    let heights = synth_terrain_gmm(&spec)?;
    write_map(&args.out, &heights)?;
    let mut manifest = RunManifest::new("synth-terrain");
    manifest.input("gmm", &args.gmm);
    manifest.output("heights", &args.out);
    manifest.lap("synth");
    manifest.write(&beside(&args.out))
}

#[derive(Debug, Serialize)]
struct RigEntry {
    view: String,
    yaw_deg: f64,
    pitch_deg: f64,
    roll_deg: f64,
    hfov_deg: f64,
    width: usize,
    height: usize,
}

fn rig_entries(rig: &[CameraSpec]) -> Vec<RigEntry> {
    rig.iter()
        .enumerate()
        .map(|(k, c)| RigEntry {
            view: format!("view_{:02}", k + 1),
            yaw_deg: c.yaw.to_degrees(),
            pitch_deg: c.pitch.to_degrees(),
            roll_deg: c.roll.to_degrees(),
            hfov_deg: c.hfov.to_degrees(),
            width: c.width,
            height: c.height,
        })
        .collect()
}

pub fn tangent_views(args: &TangentViewsArgs) -> CliResult<()> {
    if args.size == 0 {
        return Err(CliError::input("--size must be positive"));
    }
    let rig = tangent_rig_sized(args.size, args.size);
    let mut manifest = RunManifest::new("tangent-views");
    manifest.input("erp", &args.erp);
    create_dir(&args.out_dir)?;
    let is_pfm = args.erp.extension().is_some_and(|e| e.eq_ignore_ascii_case("pfm"));
    if is_pfm {
        let erp = read_map(&args.erp)?;
        for (k, cam) in rig.iter().enumerate() {
            let path = args.out_dir.join(format!("view_{:02}.pfm", k + 1));
            write_map(&path, &erp_to_perspective(&erp, cam)?)?;
            manifest.output(&format!("view_{:02}", k + 1), &path);
        }
    } else {
        let erp = read_png(&args.erp)?;
        for (k, cam) in rig.iter().enumerate() {
            let path = args.out_dir.join(format!("view_{:02}.png", k + 1));
            write_png(&path, &erp_to_perspective(&erp, cam)?)?;
            manifest.output(&format!("view_{:02}", k + 1), &path);
        }
    }
    let rig_path = args.out_dir.join("rig.json");
    write_json(&rig_path, &rig_entries(&rig))?;
    manifest.output("rig", &rig_path);
    manifest.lap("extract");
    manifest.write(&args.out_dir.join("manifest.json"))
}

pub fn views_to_erp(args: &ViewsToErpArgs) -> CliResult<()> {
    let grid = parse_erp(&args.erp)?;
    let listed = numbered_files(&args.tangent_dir, "view_")?;
    if listed.is_empty() {
        return Err(CliError::input(format!(
            "{}: no view_<k>.pfm files",
            args.tangent_dir.display()
        )));
    }
    let mut manifest = RunManifest::new("views-to-erp");
    manifest.input("tangent_dir", &args.tangent_dir);
    create_dir(&args.out_dir)?;
    for (k, id, path) in &listed {
        if !(1..=16).contains(k) {
            return Err(CliError::input(format!(
                "{}: rig views are numbered 1..16",
                path.display()
            )));
        }
        let depth = read_map(path)?;
        let cam = tangent_rig_sized(depth.height(), depth.width())[*k as usize - 1];
        let view = integrate::view_estimate_to_erp(&depth, &cam, grid)?;
        let est_path = args.out_dir.join(format!("view_{id}.pfm"));
        let w_path = args.out_dir.join(format!("weight_{id}.pfm"));
        write_map(&est_path, &view.estimate)?;
        write_map(&w_path, &view.weight)?;
        manifest.output(&format!("view_{id}"), &est_path);
        manifest.output(&format!("weight_{id}"), &w_path);
    }
    manifest.lap("project");
    manifest.write(&args.out_dir.join("manifest.json"))
}
