//! Fluorescent materials: ingestion of measured Donaldson matrices,
//! synthetic test materials, and validation reports.

use std::path::Path;

use crate::error::{FluorError, Result};
use crate::spectral::{
    gaussian_spectrum, load_donaldson_raw, save_donaldson, DonaldsonMatrix, Spectrum,
    WavelengthGrid,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Measured,
    Synthetic,
}

#[derive(Debug, Clone)]
pub struct FluorescentMaterial {
    pub name: String,
    pub donaldson: DonaldsonMatrix,
    pub provenance: Provenance,
    /// Number of negative cells clamped at ingestion.
    pub clamped: usize,
}

/// Validation report: how close the matrix is to the physically expected
/// shape (no anti-Stokes energy, no energy gain).
#[derive(Debug, Clone, serde::Serialize)]
pub struct MaterialReport {
    pub name: String,
    /// Fraction of total energy re-emitted at shorter wavelengths than it
    /// came in at.
    pub anti_stokes_fraction: f64,
    /// Largest quadrature row integral; values above 1 indicate gain.
    pub max_row_integral: f64,
    pub clamped_negatives: usize,
}

/// Load a Donaldson matrix in the text format, resample it onto `grid` and
/// clamp negative measured cells to zero. The clamp count is kept on the
/// material for reporting.
pub fn load_donaldson(path: &Path, name: &str, grid: WavelengthGrid) -> Result<FluorescentMaterial> {
    let (lambda_in, lambda_out, raw) = load_donaldson_raw(path)?;
    let uniform_grid = |axis: &[f64]| -> Result<WavelengthGrid> {
        if axis.len() < 2 {
            return Err(FluorError::InvalidGrid("axis needs at least two samples".into()));
        }
        let step = axis[1] - axis[0];
        for w in axis.windows(2) {
            if ((w[1] - w[0]) - step).abs() > 1e-6 {
                return Err(FluorError::InvalidGrid(
                    "non-uniform wavelength axis in Donaldson file".into(),
                ));
            }
        }
        WavelengthGrid::new(axis[0], *axis.last().unwrap(), step)
    };
    let src = DonaldsonMatrix::new(uniform_grid(&lambda_in)?, uniform_grid(&lambda_out)?, raw);
    let mut resampled = src.resample_to(grid, grid);
    let clamped = resampled.clamp_negatives();
    Ok(FluorescentMaterial {
        name: name.to_string(),
        donaldson: resampled,
        provenance: Provenance::Measured,
        clamped,
    })
}

pub fn save_material(path: &Path, material: &FluorescentMaterial) -> Result<()> {
    save_donaldson(
        path,
        &material.donaldson,
        &[format!("material: {}", material.name)],
    )
}

/// Parameters of a synthetic fluorescent material: a reflective diagonal
/// plus one rank-1 absorption/emission bump below the Stokes line.
#[derive(Debug, Clone)]
pub struct SynthParams {
    pub absorb_mu: f64,
    pub absorb_sigma: f64,
    pub emit_mu: f64,
    pub emit_sigma: f64,
    pub strength: f64,
    pub diag_albedo: Spectrum,
}

/// Build a synthetic material. The bump only populates entries with
/// `lambda_o > lambda_i`, so re-emission sits strictly at longer wavelengths.
pub fn synth_fluorescent(name: &str, params: &SynthParams) -> Result<FluorescentMaterial> {
    if params.emit_mu <= params.absorb_mu {
        return Err(FluorError::StokesOrder {
            absorb: params.absorb_mu,
            emit: params.emit_mu,
        });
    }
    assert!(params.strength >= 0.0, "strength must be non-negative");
    let grid = params.diag_albedo.grid();
    let mut p = DonaldsonMatrix::from_diagonal_albedo(&params.diag_albedo);
    if params.strength > 0.0 {
        let g_in = gaussian_spectrum(params.absorb_mu, params.absorb_sigma, grid);
        let g_out = gaussian_spectrum(params.emit_mu, params.emit_sigma, grid);
        let n = grid.len();
        for o in 0..n {
            let lo = grid.wavelength(o);
            let go = g_out.values()[o];
            if go == 0.0 {
                continue;
            }
            for i in 0..n {
                if lo > grid.wavelength(i) {
                    p.entries_mut()[(o, i)] += params.strength * go * g_in.values()[i];
                }
            }
        }
    }
    Ok(FluorescentMaterial {
        name: name.to_string(),
        donaldson: p,
        provenance: Provenance::Synthetic,
        clamped: 0,
    })
}

/// Inspect a material without mutating it.
pub fn validate(material: &FluorescentMaterial) -> MaterialReport {
    let p = &material.donaldson;
    let grid_in = p.grid_in();
    let grid_out = p.grid_out();
    let mut total = 0.0;
    let mut anti_stokes = 0.0;
    let mut max_row = 0.0f64;
    for o in 0..grid_out.len() {
        let lo = grid_out.wavelength(o);
        let mut row = 0.0;
        for i in 0..grid_in.len() {
            let v = p.entries()[(o, i)];
            let cell = v * grid_in.weight(i);
            row += cell;
            total += cell;
            if lo < grid_in.wavelength(i) {
                anti_stokes += cell;
            }
        }
        max_row = max_row.max(row);
    }
    MaterialReport {
        name: material.name.clone(),
        anti_stokes_fraction: if total > 0.0 { anti_stokes / total } else { 0.0 },
        max_row_integral: max_row,
        clamped_negatives: material.clamped,
    }
}

fn ramp_albedo(grid: WavelengthGrid, low: f64, high: f64, center: f64, width: f64) -> Spectrum {
    Spectrum::from_fn(grid, |lam| {
        let t = (0.5 * ((lam - center) / width + 1.0)).clamp(0.0, 1.0);
        let s = t * t * (3.0 - 2.0 * t);
        low + (high - low) * s
    })
}

/// The built-in synthetic material set used by the evaluation harness when
/// no measured database is supplied. Covers UV-to-visible and
/// visible-to-visible reradiation at a range of strengths, plus
/// non-fluorescent controls.
pub fn builtin_materials(grid: WavelengthGrid) -> Vec<FluorescentMaterial> {
    let flat = |a: f64| Spectrum::constant(grid, a);
    let mk = |name: &str, am, asg, em, esg, strength, albedo: Spectrum| {
        synth_fluorescent(
            name,
            &SynthParams {
                absorb_mu: am,
                absorb_sigma: asg,
                emit_mu: em,
                emit_sigma: esg,
                strength,
                diag_albedo: albedo,
            },
        )
        .expect("builtin parameters are valid")
    };
    let mut set = vec![
        mk("uv-blue", 350.0, 25.0, 450.0, 30.0, 8e-3, flat(0.20)),
        mk("uv-green", 360.0, 30.0, 520.0, 35.0, 7e-3, flat(0.25)),
        mk("uv-yellow", 370.0, 40.0, 560.0, 40.0, 8e-3, ramp_albedo(grid, 0.05, 0.7, 520.0, 40.0)),
        mk("uv-orange", 380.0, 30.0, 590.0, 45.0, 6e-3, ramp_albedo(grid, 0.05, 0.6, 560.0, 35.0)),
        mk("uv-red", 390.0, 35.0, 620.0, 50.0, 6e-3, ramp_albedo(grid, 0.05, 0.55, 590.0, 35.0)),
        mk("uv-white", 340.0, 50.0, 500.0, 80.0, 3e-3, flat(0.70)),
        mk("blue-green", 450.0, 25.0, 530.0, 35.0, 7e-3, flat(0.30)),
        mk("blue-yellow", 440.0, 30.0, 570.0, 45.0, 6e-3, flat(0.35)),
        mk("green-red", 520.0, 30.0, 630.0, 40.0, 7e-3, flat(0.30)),
        mk("violet-cyan", 410.0, 20.0, 490.0, 25.0, 9e-3, flat(0.25)),
        mk("uv-magenta", 330.0, 30.0, 650.0, 60.0, 5e-3, ramp_albedo(grid, 0.5, 0.1, 500.0, 60.0)),
        mk("textile-yellow", 400.0, 40.0, 550.0, 30.0, 9e-3, ramp_albedo(grid, 0.02, 0.8, 500.0, 30.0)),
    ];
    // two-bump material: UV and blue absorption feeding one emission band
    let a = mk("dual-band", 350.0, 25.0, 540.0, 35.0, 5e-3, flat(0.25));
    let b = mk("dual-band", 440.0, 20.0, 540.0, 35.0, 5e-3, flat(0.0));
    let combined = DonaldsonMatrix::new(
        grid,
        grid,
        a.donaldson.entries() + b.donaldson.entries(),
    );
    set.push(FluorescentMaterial {
        name: "dual-band".into(),
        donaldson: combined,
        provenance: Provenance::Synthetic,
        clamped: 0,
    });
    set.push(FluorescentMaterial {
        name: "neutral-gray".into(),
        donaldson: DonaldsonMatrix::from_diagonal_albedo(&flat(0.5)),
        provenance: Provenance::Synthetic,
        clamped: 0,
    });
    set.push(FluorescentMaterial {
        name: "identity".into(),
        donaldson: DonaldsonMatrix::identity_delta(grid),
        provenance: Provenance::Synthetic,
        clamped: 0,
    });
    set
}

/// Fetch a built-in material by name.
pub fn material_by_name(name: &str, grid: WavelengthGrid) -> Result<FluorescentMaterial> {
    builtin_materials(grid)
        .into_iter()
        .find(|m| m.name == name)
        .ok_or_else(|| FluorError::UnknownMaterial(name.to_string()))
}

/// Load a `name,path` manifest of measured materials. IXCAXORA entries are
/// skipped. Paths are resolved relative to the manifest's directory.
pub fn load_manifest(path: &Path, grid: WavelengthGrid) -> Result<Vec<FluorescentMaterial>> {
    let text = std::fs::read_to_string(path).map_err(|_| FluorError::MissingData(path.into()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, rel) = line.split_once(',').ok_or_else(|| FluorError::Parse {
            path: path.into(),
            line: ln + 1,
            msg: "expected `name,path`".into(),
        })?;
        let name = name.trim();
        if name.eq_ignore_ascii_case("IXCAXORA") {
            continue;
        }
        out.push(load_donaldson(&base.join(rel.trim()), name, grid)?);
    }
    if out.is_empty() {
        return Err(FluorError::EmptyMaterialSet);
    }
    Ok(out)
}
