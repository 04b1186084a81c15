//! Command-line surface of the reduced fluorescence pipeline: build reduced
//! matrices, render patches, swipes and probe scenes, run the evaluation
//! harness, and validate materials.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::Vector3;
use serde::Serialize;

use fluor_core::basis::{parse_uv_knots_config, BasisKind, BasisSet, DEFAULT_UV_KNOTS};
use fluor_core::colorimetry::{delta_e_2000, Illuminant};
use fluor_core::eval::{evaluate, uv_fraction};
use fluor_core::imaging::{
    auto_exposure, db_matrix_rgb8, write_float_raster, write_png_rgb8, xyz_image_to_srgb8,
};
use fluor_core::materials::{
    builtin_materials, load_donaldson, load_manifest, material_by_name, validate,
    FluorescentMaterial,
};
use fluor_core::reduction::{downsample, reduce_naive, reduce_ours, save_reduced, NaiveNorm};
use fluor_core::spectral::WavelengthGrid;
use fluor_core::transport::{
    adjoint_trace, builtin_probe_scene, image_to_xyz, light_trace, load_scene,
    monochromatic_swipe, render_patch_reduced, render_patch_spectral, ColorImage, Method,
    PatchScene, RenderSettings,
};
use fluor_core::{FluorError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BasisArg {
    Xyz,
    Xyzu,
    Seven,
}

impl BasisArg {
    fn kind(self) -> BasisKind {
        match self {
            BasisArg::Xyz => BasisKind::Xyz,
            BasisArg::Xyzu => BasisKind::Xyzu,
            BasisArg::Seven => BasisKind::SevenBand,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Ours,
    Naive,
}

impl MethodArg {
    fn method(self) -> Method {
        match self {
            MethodArg::Ours => Method::Ours,
            MethodArg::Naive => Method::Naive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum NormArg {
    L1,
    L2,
}

impl NormArg {
    fn norm(self) -> NaiveNorm {
        match self {
            NormArg::L1 => NaiveNorm::L1,
            NormArg::L2 => NaiveNorm::L2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Forward,
    Adjoint,
}

#[derive(Parser, Debug)]
#[command(
    name = "fluor",
    version,
    about = "Reduced fluorescent reradiation for tristimulus transport"
)]
struct Cli {
    /// Sensitivity basis for reduced transport.
    #[arg(long, global = true, value_enum, default_value_t = BasisArg::Xyz)]
    basis: BasisArg,

    /// Reduction method for reduced transport.
    #[arg(long, global = true, value_enum, default_value_t = MethodArg::Ours)]
    method: MethodArg,

    /// Norm used by the naive baseline.
    #[arg(long, global = true, value_enum, default_value_t = NormArg::L2)]
    naive_norm: NormArg,

    /// Wavelength grid as min:step:max in nm.
    #[arg(long, global = true, default_value = "300:1:800")]
    grid: String,

    /// Seed for the deterministic render jitter.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Optional config file (supports `uv_knots = [..]`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Reduce a material to a K x K matrix; writes the matrix file and a
    /// dB-scale false-color image of its entries.
    Reduce {
        /// Built-in material name or path to a Donaldson text file.
        #[arg(long)]
        material: String,
    },
    /// One-bounce patch colors of a material under standard illuminants
    /// (oracle, ours, naive rows), as an image grid plus a JSON report.
    Patch {
        #[arg(long)]
        material: String,
        /// Comma-separated illuminant subset (default: the standard seven).
        #[arg(long)]
        illuminants: Option<String>,
    },
    /// Monochromatic swipe strips (ours / oracle / naive) over 300-700 nm.
    Swipe {
        #[arg(long)]
        material: String,
    },
    /// Render the probe scene (built-in crease box or a scene file).
    Render {
        /// Scene description file; omit to use the built-in crease box.
        #[arg(long)]
        scene: Option<PathBuf>,
        /// Material for the built-in scene's surfaces.
        #[arg(long, default_value = "uv-yellow")]
        material: String,
        /// Illuminant for the built-in scene's emitter.
        #[arg(long, default_value = "D65")]
        illuminant: String,
        #[arg(long, default_value_t = 3)]
        bounces: usize,
        #[arg(long, value_enum, default_value_t = ModeArg::Forward)]
        mode: ModeArg,
        #[arg(long, default_value_t = 64)]
        width: usize,
        #[arg(long, default_value_t = 64)]
        height: usize,
    },
    /// Delta E 2000 evaluation harness over materials x illuminants.
    /// Exits with code 2 if the ours-beats-naive ordering fails.
    Eval {
        /// Manifest of measured materials (name,path per line); the built-in
        /// synthetic set is used when omitted.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Comma-separated bases to evaluate (default: xyz,xyzu).
        #[arg(long)]
        bases: Option<String>,
    },
    /// Report anti-Stokes energy, row integrals and clamp counts.
    Validate {
        #[arg(long)]
        material: String,
    },
}

/// Everything needed to reproduce a run; echoed into every output.
#[derive(Debug, Clone, Serialize)]
struct RunConfig {
    command: String,
    basis: String,
    method: String,
    naive_norm: String,
    grid: String,
    seed: u64,
    uv_knots: Vec<f64>,
    data_dir: String,
}

fn parse_grid(text: &str) -> Result<WavelengthGrid> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(FluorError::InvalidGrid(format!(
            "grid must be min:step:max, got `{text}`"
        )));
    }
    let parse = |t: &str| {
        t.parse::<f64>()
            .map_err(|_| FluorError::InvalidGrid(format!("bad number `{t}` in grid spec")))
    };
    WavelengthGrid::new(parse(parts[0])?, parse(parts[2])?, parse(parts[1])?)
}

fn resolve_material(spec: &str, grid: WavelengthGrid) -> Result<FluorescentMaterial> {
    let path = Path::new(spec);
    if path.is_file() {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "material".into());
        load_donaldson(path, &name, grid)
    } else {
        material_by_name(spec, grid)
    }
}

fn build_basis(kind: BasisKind, grid: WavelengthGrid, knots: &[f64]) -> Result<BasisSet> {
    match kind {
        BasisKind::Xyz => BasisSet::xyz(grid),
        BasisKind::Xyzu => BasisSet::xyzu_with_knots(grid, knots),
        BasisKind::SevenBand => BasisSet::seven_band_with_knots(grid, knots),
    }
}

fn parse_illuminants(spec: &Option<String>) -> Result<Vec<Illuminant>> {
    match spec {
        None => Ok(Illuminant::standard_seven().to_vec()),
        Some(s) => s
            .split(',')
            .map(|t| {
                Illuminant::parse(t.trim())
                    .ok_or_else(|| FluorError::Scene(format!("unknown illuminant `{t}`")))
            })
            .collect(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                FluorError::Io(_) | FluorError::MissingData(_) | FluorError::Parse { .. } => {
                    ExitCode::from(3)
                }
                _ => ExitCode::from(2),
            }
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let grid = parse_grid(&cli.grid)?;
    let uv_knots = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|_| FluorError::MissingData(path.clone()))?;
            parse_uv_knots_config(&text)?.unwrap_or_else(|| DEFAULT_UV_KNOTS.to_vec())
        }
        None => DEFAULT_UV_KNOTS.to_vec(),
    };
    std::fs::create_dir_all(&cli.out)?;
    let config = RunConfig {
        command: format!("{:?}", cli.command),
        basis: cli.basis.kind().name().into(),
        method: cli.method.method().name().into(),
        naive_norm: cli.naive_norm.norm().name().into(),
        grid: grid.describe(),
        seed: cli.seed,
        uv_knots: uv_knots.clone(),
        data_dir: fluor_core::data::data_dir().display().to_string(),
    };
    let config_json = serde_json::to_string(&config).expect("config serializes");

    match &cli.command {
        Command::Reduce { material } => cmd_reduce(cli, grid, &uv_knots, material, &config_json),
        Command::Patch {
            material,
            illuminants,
        } => cmd_patch(cli, grid, &uv_knots, material, illuminants, &config_json),
        Command::Swipe { material } => cmd_swipe(cli, grid, &uv_knots, material, &config_json),
        Command::Render {
            scene,
            material,
            illuminant,
            bounces,
            mode,
            width,
            height,
        } => cmd_render(
            cli,
            grid,
            &uv_knots,
            scene.as_deref(),
            material,
            illuminant,
            *bounces,
            *mode,
            *width,
            *height,
            &config_json,
        ),
        Command::Eval { manifest, bases } => {
            cmd_eval(cli, grid, &uv_knots, manifest.as_deref(), bases, &config_json)
        }
        Command::Validate { material } => cmd_validate(cli, grid, material, &config_json),
    }
}

fn cmd_reduce(
    cli: &Cli,
    grid: WavelengthGrid,
    uv_knots: &[f64],
    material_spec: &str,
    config_json: &str,
) -> Result<()> {
    let material = resolve_material(material_spec, grid)?;
    if material.clamped > 0 {
        eprintln!(
            "note: clamped {} negative cells in {}",
            material.clamped, material.name
        );
    }
    let basis = build_basis(cli.basis.kind(), grid, uv_knots)?;
    let reduced = match cli.method.method() {
        Method::Ours => reduce_ours(&material.donaldson, &basis)?,
        Method::Naive => reduce_naive(&material.donaldson, &basis, cli.naive_norm.norm())?,
    };
    let stem = format!(
        "reduced_{}_{}_{}",
        material.name,
        basis.kind().name(),
        cli.method.method().name()
    );
    let matrix_path = cli.out.join(format!("{stem}.txt"));
    save_reduced(&matrix_path, &reduced, &[format!("config: {config_json}")])?;
    let (w, h, rgb) = db_matrix_rgb8(reduced.entries(), -30.0, 32);
    let png_path = cli.out.join(format!("{stem}.png"));
    write_png_rgb8(
        &png_path,
        w,
        h,
        &rgb,
        &[("fluor_config".into(), config_json.into())],
    )?;
    println!("wrote {} and {}", matrix_path.display(), png_path.display());
    Ok(())
}

#[derive(Serialize)]
struct PatchCell {
    illuminant: String,
    row: String,
    xyz: [f64; 3],
    delta_e_vs_oracle: f64,
}

fn cmd_patch(
    cli: &Cli,
    grid: WavelengthGrid,
    uv_knots: &[f64],
    material_spec: &str,
    illuminant_spec: &Option<String>,
    config_json: &str,
) -> Result<()> {
    let material = resolve_material(material_spec, grid)?;
    let basis = build_basis(cli.basis.kind(), grid, uv_knots)?;
    let xyz = BasisSet::xyz(grid)?;
    let illuminants = parse_illuminants(illuminant_spec)?;
    let norm = cli.naive_norm.norm();

    let rows = ["oracle", "ours", "naive"];
    let cell = 48usize;
    let mut image = ColorImage::new(illuminants.len() * cell, rows.len() * cell, 3);
    let mut cells = Vec::new();
    for (col, ill) in illuminants.iter().enumerate() {
        let spd = ill.spectrum(grid)?;
        let white_raw = downsample(&spd, &xyz)?;
        let scale = 100.0 / white_raw.coeffs()[1];
        let white = Vector3::new(
            white_raw.coeffs()[0],
            white_raw.coeffs()[1],
            white_raw.coeffs()[2],
        ) * scale;
        let scene = PatchScene {
            material: material.clone(),
            illuminant: spd,
        };
        let oracle = render_patch_spectral(&scene, &xyz)? * scale;
        for (row, label) in rows.iter().enumerate() {
            let c = match *label {
                "oracle" => oracle,
                "ours" => render_patch_reduced(&scene, &basis, Method::Ours, norm)? * scale,
                _ => render_patch_reduced(&scene, &basis, Method::Naive, norm)? * scale,
            };
            cells.push(PatchCell {
                illuminant: ill.name().into(),
                row: (*label).into(),
                xyz: [c.x, c.y, c.z],
                delta_e_vs_oracle: delta_e_2000(&c, &oracle, &white)?,
            });
            // white maps to Y = 100, so expose by 1/100
            for py in 0..cell {
                for px in 0..cell {
                    let p = image.pixel_mut(col * cell + px, row * cell + py);
                    p[0] = c.x / 100.0;
                    p[1] = c.y / 100.0;
                    p[2] = c.z / 100.0;
                }
            }
        }
    }
    let rgb = xyz_image_to_srgb8(&image, 1.0);
    let png_path = cli.out.join(format!("patch_{}.png", material.name));
    write_png_rgb8(
        &png_path,
        image.width,
        image.height,
        &rgb,
        &[("fluor_config".into(), config_json.into())],
    )?;
    let report = serde_json::json!({
        "config": serde_json::from_str::<serde_json::Value>(config_json).unwrap(),
        "material": material.name,
        "rows": rows,
        "cells": cells,
    });
    let json_path = cli.out.join(format!("patch_{}.json", material.name));
    std::fs::write(&json_path, serde_json::to_string_pretty(&report).unwrap())?;
    println!("wrote {} and {}", png_path.display(), json_path.display());
    Ok(())
}

fn cmd_swipe(
    cli: &Cli,
    grid: WavelengthGrid,
    uv_knots: &[f64],
    material_spec: &str,
    config_json: &str,
) -> Result<()> {
    let material = resolve_material(material_spec, grid)?;
    let basis = build_basis(cli.basis.kind(), grid, uv_knots)?;
    let xyz = BasisSet::xyz(grid)?;
    let norm = cli.naive_norm.norm();
    let (lo, hi, step) = (300.0, 700.0, 1.0);

    let ours =
        monochromatic_swipe(&material, &basis, &xyz, Some(Method::Ours), norm, lo, hi, step)?;
    let oracle = monochromatic_swipe(&material, &basis, &xyz, None, norm, lo, hi, step)?;
    let naive =
        monochromatic_swipe(&material, &basis, &xyz, Some(Method::Naive), norm, lo, hi, step)?;

    let strips = [&ours, &oracle, &naive];
    let labels = ["ours", "oracle", "naive"];
    let band = 20usize;
    let width = ours.len();
    let mut image = ColorImage::new(width, strips.len() * band, 3);
    let mut max_y = 0.0f64;
    for strip in &strips {
        for c in strip.iter() {
            max_y = max_y.max(c.y);
        }
    }
    let exposure = if max_y > 0.0 { 1.0 / max_y } else { 1.0 };
    for (s, strip) in strips.iter().enumerate() {
        for (x, c) in strip.iter().enumerate() {
            for py in 0..band {
                let p = image.pixel_mut(x, s * band + py);
                p[0] = c.x * exposure;
                p[1] = c.y * exposure;
                p[2] = c.z * exposure;
            }
        }
    }
    let rgb = xyz_image_to_srgb8(&image, 1.0);
    let stem = format!("swipe_{}_{}", material.name, basis.kind().name());
    let png_path = cli.out.join(format!("{stem}.png"));
    write_png_rgb8(
        &png_path,
        image.width,
        image.height,
        &rgb,
        &[("fluor_config".into(), config_json.into())],
    )?;

    // per-column Delta E against the oracle, luminance-anchored per column
    let white = Vector3::new(100.0, 100.0, 100.0);
    let mut de_ours = Vec::new();
    let mut de_naive = Vec::new();
    for i in 0..width {
        let scale = 100.0 / oracle[i].y.max(1e-9);
        de_ours.push(delta_e_2000(&(ours[i] * scale), &(oracle[i] * scale), &white)?);
        de_naive.push(delta_e_2000(&(naive[i] * scale), &(oracle[i] * scale), &white)?);
    }
    let report = serde_json::json!({
        "config": serde_json::from_str::<serde_json::Value>(config_json).unwrap(),
        "material": material.name,
        "lambda_start_nm": lo,
        "lambda_step_nm": step,
        "strips": labels,
        "delta_e_ours": de_ours,
        "delta_e_naive": de_naive,
    });
    let json_path = cli.out.join(format!("{stem}.json"));
    std::fs::write(&json_path, serde_json::to_string_pretty(&report).unwrap())?;
    println!("wrote {} and {}", png_path.display(), json_path.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_render(
    cli: &Cli,
    grid: WavelengthGrid,
    uv_knots: &[f64],
    scene_path: Option<&Path>,
    material: &str,
    illuminant: &str,
    bounces: usize,
    mode: ModeArg,
    width: usize,
    height: usize,
    config_json: &str,
) -> Result<()> {
    let basis = build_basis(cli.basis.kind(), grid, uv_knots)?;
    let mut scene = match scene_path {
        Some(p) => load_scene(p, grid)?,
        None => {
            let ill = Illuminant::parse(illuminant)
                .ok_or_else(|| FluorError::Scene(format!("unknown illuminant `{illuminant}`")))?;
            builtin_probe_scene(material, ill.spectrum(grid)?, bounces)
        }
    };
    scene.bounces = bounces;
    let materials = builtin_materials(grid);
    let settings = RenderSettings {
        width,
        height,
        seed: cli.seed,
        ..Default::default()
    };
    let method = cli.method.method();
    let norm = cli.naive_norm.norm();
    let coeffs = match mode {
        ModeArg::Forward => light_trace(&scene, &basis, &materials, method, norm, &settings)?,
        ModeArg::Adjoint => adjoint_trace(&scene, &basis, &materials, method, norm, &settings)?,
    };
    let xyz_img = image_to_xyz(&coeffs, &basis);
    let exposure = auto_exposure(&xyz_img);
    let rgb = xyz_image_to_srgb8(&xyz_img, exposure);
    let mode_name = match mode {
        ModeArg::Forward => "forward",
        ModeArg::Adjoint => "adjoint",
    };
    let stem = format!(
        "render_{}_{}_{}_{}",
        scene_path
            .and_then(|p| p.file_stem())
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| material.to_string()),
        mode_name,
        basis.kind().name(),
        method.name()
    );
    let png_path = cli.out.join(format!("{stem}.png"));
    write_png_rgb8(
        &png_path,
        xyz_img.width,
        xyz_img.height,
        &rgb,
        &[
            ("fluor_config".into(), config_json.into()),
            ("fluor_exposure".into(), format!("{exposure}")),
        ],
    )?;
    let raster_path = cli.out.join(format!("{stem}.raster.txt"));
    write_float_raster(&raster_path, &coeffs, &[format!("config: {config_json}")])?;

    // per-region luminance statistics over the four image quadrants
    let mut regions = Vec::new();
    for (label, x0, y0) in [
        ("top-left", 0, 0),
        ("top-right", xyz_img.width / 2, 0),
        ("bottom-left", 0, xyz_img.height / 2),
        ("bottom-right", xyz_img.width / 2, xyz_img.height / 2),
    ] {
        let (mut min, mut max, mut sum, mut n) = (f64::INFINITY, 0.0f64, 0.0, 0usize);
        for y in y0..(y0 + xyz_img.height / 2).min(xyz_img.height) {
            for x in x0..(x0 + xyz_img.width / 2).min(xyz_img.width) {
                let v = xyz_img.pixel(x, y)[1];
                min = min.min(v);
                max = max.max(v);
                sum += v;
                n += 1;
            }
        }
        regions.push(serde_json::json!({
            "region": label,
            "min_y": min,
            "mean_y": sum / n as f64,
            "max_y": max,
        }));
    }
    let report = serde_json::json!({
        "config": serde_json::from_str::<serde_json::Value>(config_json).unwrap(),
        "mode": mode_name,
        "bounces": scene.bounces,
        "exposure": exposure,
        "regions": regions,
    });
    let json_path = cli.out.join(format!("{stem}.json"));
    std::fs::write(&json_path, serde_json::to_string_pretty(&report).unwrap())?;
    println!(
        "wrote {}, {} and {}",
        png_path.display(),
        raster_path.display(),
        json_path.display()
    );
    Ok(())
}

fn cmd_eval(
    cli: &Cli,
    grid: WavelengthGrid,
    uv_knots: &[f64],
    manifest: Option<&Path>,
    bases_spec: &Option<String>,
    config_json: &str,
) -> Result<()> {
    let materials = match manifest {
        Some(path) => load_manifest(path, grid)?,
        None => builtin_materials(grid)
            .into_iter()
            .filter(|m| m.name != "identity" && m.name != "neutral-gray")
            .collect(),
    };
    let kinds: Vec<BasisKind> = match bases_spec {
        None => vec![BasisKind::Xyz, BasisKind::Xyzu],
        Some(s) => s
            .split(',')
            .map(|t| match t.trim().to_ascii_lowercase().as_str() {
                "xyz" => Ok(BasisKind::Xyz),
                "xyzu" => Ok(BasisKind::Xyzu),
                "seven" => Ok(BasisKind::SevenBand),
                other => Err(FluorError::Scene(format!("unknown basis `{other}`"))),
            })
            .collect::<Result<_>>()?,
    };
    let xyz = BasisSet::xyz(grid)?;
    let mut bases = Vec::new();
    for kind in kinds {
        bases.push(build_basis(kind, grid, uv_knots)?);
    }
    let illuminants = Illuminant::standard_seven();
    let report = evaluate(&materials, &illuminants, &bases, cli.naive_norm.norm(), &xyz)?;

    let table = report.to_table();
    print!("{table}");
    std::fs::write(
        cli.out.join("eval.txt"),
        format!("# config: {config_json}\n{table}"),
    )?;
    let json = serde_json::json!({
        "config": serde_json::from_str::<serde_json::Value>(config_json).unwrap(),
        "report": report,
    });
    std::fs::write(
        cli.out.join("eval.json"),
        serde_json::to_string_pretty(&json).unwrap(),
    )?;

    let mut fractions = Vec::new();
    for ill in &illuminants {
        fractions.push(uv_fraction(&ill.spectrum(grid)?));
    }
    if !report.ordering_holds() {
        return Err(FluorError::Scene(
            "ordering violated: the naive baseline beat the dual-basis reduction in some column"
                .into(),
        ));
    }
    if !report.uv_band_never_hurts(&fractions, 0.02, 0.5) {
        return Err(FluorError::Scene(
            "UV-band regression: XYZU averages exceed XYZ averages under a UV-rich illuminant"
                .into(),
        ));
    }
    println!("ordering holds: ours < naive in every illuminant column");
    Ok(())
}

fn cmd_validate(
    cli: &Cli,
    grid: WavelengthGrid,
    material_spec: &str,
    config_json: &str,
) -> Result<()> {
    let material = resolve_material(material_spec, grid)?;
    let report = validate(&material);
    println!(
        "{}: anti-Stokes fraction {:.6}, max row integral {:.6}, clamped {}",
        report.name, report.anti_stokes_fraction, report.max_row_integral, report.clamped_negatives
    );
    let json = serde_json::json!({
        "config": serde_json::from_str::<serde_json::Value>(config_json).unwrap(),
        "report": report,
    });
    let path = cli.out.join(format!("validate_{}.json", material.name));
    std::fs::write(&path, serde_json::to_string_pretty(&json).unwrap())?;
    println!("wrote {}", path.display());
    Ok(())
}
