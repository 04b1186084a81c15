//! Delta E 2000 evaluation harness: one-bounce patches of every material
//! under every illuminant, each reduction method against the dense
//! bispectral oracle, averaged per illuminant column.

use nalgebra::Vector3;
use serde::Serialize;

use crate::basis::BasisSet;
use crate::colorimetry::{delta_e_2000, Illuminant};
use crate::error::{FluorError, Result};
use crate::materials::FluorescentMaterial;
use crate::reduction::{downsample, NaiveNorm};
use crate::spectral::{quadrature_integrate, Spectrum};
use crate::transport::{render_patch_reduced, render_patch_spectral, Method, PatchScene};

#[derive(Debug, Clone, Serialize)]
pub struct EvalEntry {
    pub material: String,
    pub illuminant: String,
    pub basis: String,
    pub method: String,
    pub delta_e: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalRow {
    pub basis: String,
    pub method: String,
    /// Mean Delta E per illuminant, in the report's illuminant order.
    pub averages: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub grid: String,
    pub naive_norm: String,
    pub material_count: usize,
    pub measured_database: bool,
    pub illuminants: Vec<String>,
    pub rows: Vec<EvalRow>,
    pub entries: Vec<EvalEntry>,
}

/// Fraction of an illuminant's power below 400 nm.
pub fn uv_fraction(spd: &Spectrum) -> f64 {
    let grid = spd.grid();
    let total = quadrature_integrate(spd);
    if total <= 0.0 {
        return 0.0;
    }
    let uv: f64 = (0..grid.len())
        .filter(|&i| grid.wavelength(i) < 400.0)
        .map(|i| grid.weight(i) * spd.values()[i])
        .sum();
    uv / total
}

/// Run the full comparison. `bases` are evaluated with both methods; every
/// Delta E uses the illuminant's own white point normalized to Y = 100.
pub fn evaluate(
    materials: &[FluorescentMaterial],
    illuminants: &[Illuminant],
    bases: &[BasisSet],
    norm: NaiveNorm,
    xyz: &BasisSet,
) -> Result<EvalReport> {
    if materials.is_empty() {
        return Err(FluorError::EmptyMaterialSet);
    }
    let grid = xyz.grid();
    let mut entries = Vec::new();
    let methods = [Method::Ours, Method::Naive];

    let mut spds = Vec::new();
    for ill in illuminants {
        spds.push(ill.spectrum(grid)?);
    }

    for (ill, spd) in illuminants.iter().zip(&spds) {
        let white_raw = downsample(spd, xyz)?;
        let white = Vector3::new(white_raw.coeffs()[0], white_raw.coeffs()[1], white_raw.coeffs()[2]);
        if !(white.y > 0.0) {
            return Err(FluorError::BadWhite);
        }
        let scale = 100.0 / white.y;
        let white = white * scale;
        for material in materials {
            let scene = PatchScene {
                material: material.clone(),
                illuminant: spd.clone(),
            };
            let oracle = render_patch_spectral(&scene, xyz)? * scale;
            for basis in bases {
                for method in methods {
                    let c = render_patch_reduced(&scene, basis, method, norm)? * scale;
                    entries.push(EvalEntry {
                        material: material.name.clone(),
                        illuminant: ill.name().to_string(),
                        basis: basis.kind().name().to_string(),
                        method: method.name().to_string(),
                        delta_e: delta_e_2000(&c, &oracle, &white)?,
                    });
                }
            }
        }
    }

    let mut rows = Vec::new();
    for basis in bases {
        for method in methods {
            let mut averages = Vec::new();
            for ill in illuminants {
                let values: Vec<f64> = entries
                    .iter()
                    .filter(|e| {
                        e.basis == basis.kind().name()
                            && e.method == method.name()
                            && e.illuminant == ill.name()
                    })
                    .map(|e| e.delta_e)
                    .collect();
                averages.push(values.iter().sum::<f64>() / values.len() as f64);
            }
            rows.push(EvalRow {
                basis: basis.kind().name().to_string(),
                method: method.name().to_string(),
                averages,
            });
        }
    }

    Ok(EvalReport {
        grid: grid.describe(),
        naive_norm: norm.name().to_string(),
        material_count: materials.len(),
        measured_database: materials
            .iter()
            .any(|m| m.provenance == crate::materials::Provenance::Measured),
        illuminants: illuminants.iter().map(|i| i.name().to_string()).collect(),
        rows,
        entries,
    })
}

impl EvalReport {
    fn row(&self, basis: &str, method: &str) -> Option<&EvalRow> {
        self.rows
            .iter()
            .find(|r| r.basis == basis && r.method == method)
    }

    /// The headline ordering: in every illuminant column and for every
    /// basis, the dual-basis reduction beats the naive baseline on average.
    pub fn ordering_holds(&self) -> bool {
        let bases: Vec<&str> = {
            let mut b: Vec<&str> = self.rows.iter().map(|r| r.basis.as_str()).collect();
            b.dedup();
            b
        };
        for basis in bases {
            let (Some(ours), Some(naive)) = (self.row(basis, "ours"), self.row(basis, "naive"))
            else {
                return false;
            };
            for (a, b) in ours.averages.iter().zip(&naive.averages) {
                if !(a < b) {
                    return false;
                }
            }
        }
        true
    }

    /// Mean-level check that the UV band does not hurt: for illuminants
    /// whose sub-400 nm power fraction exceeds `min_uv_fraction`, the XYZU
    /// average is at most the XYZ average plus `tolerance`.
    pub fn uv_band_never_hurts(
        &self,
        illuminant_uv_fractions: &[f64],
        min_uv_fraction: f64,
        tolerance: f64,
    ) -> bool {
        let (Some(xyz), Some(xyzu)) = (self.row("xyz", "ours"), self.row("xyzu", "ours")) else {
            return true; // nothing to compare
        };
        for (i, frac) in illuminant_uv_fractions.iter().enumerate() {
            if *frac >= min_uv_fraction && xyzu.averages[i] > xyz.averages[i] + tolerance {
                return false;
            }
        }
        true
    }

    /// Aligned-column text table in the style of the paper's summary table.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "# grid={} naive-norm={} materials={}{}\n",
            self.grid,
            self.naive_norm,
            self.material_count,
            if self.measured_database {
                " (measured)"
            } else {
                " (synthetic)"
            }
        ));
        out.push_str(&format!("{:<14}", "method"));
        for ill in &self.illuminants {
            out.push_str(&format!("{:>9}", ill));
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!("{:<14}", format!("{} {}", row.basis, row.method)));
            for v in &row.averages {
                out.push_str(&format!("{:>9.3}", v));
            }
            out.push('\n');
        }
        out
    }
}
