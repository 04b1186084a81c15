//! Wavelength grids, sampled spectra and dense reradiation matrices.
//!
//! Every other module resamples its inputs onto one shared grid before doing
//! any algebra. All integrals use the trapezoid rule on that grid; the
//! discrete delta and the delta-like diagonal reradiation matrices carry the
//! reciprocal trapezoid weight so the sifting identity holds exactly under
//! the quadrature, endpoints included.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{FluorError, Result};

/// Uniform wavelength grid `min, min+step, ..., min+(count-1)*step` in nm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavelengthGrid {
    min_nm: f64,
    step_nm: f64,
    count: usize,
}

impl WavelengthGrid {
    pub fn new(min_nm: f64, max_nm: f64, step_nm: f64) -> Result<Self> {
        if !(step_nm > 0.0) || !min_nm.is_finite() || !max_nm.is_finite() || max_nm <= min_nm {
            return Err(FluorError::InvalidGrid(format!(
                "min {min_nm}, max {max_nm}, step {step_nm}"
            )));
        }
        let span = (max_nm - min_nm) / step_nm;
        let count = span.round() as usize + 1;
        if ((count - 1) as f64 * step_nm + min_nm - max_nm).abs() > 1e-9 {
            return Err(FluorError::InvalidGrid(format!(
                "max {max_nm} is not min + (N-1)*step for step {step_nm}"
            )));
        }
        Ok(Self {
            min_nm,
            step_nm,
            count,
        })
    }

    /// 300-800 nm inclusive at 1 nm, N = 501.
    pub fn canonical() -> Self {
        Self {
            min_nm: 300.0,
            step_nm: 1.0,
            count: 501,
        }
    }

    pub fn min_nm(&self) -> f64 {
        self.min_nm
    }

    pub fn max_nm(&self) -> f64 {
        self.min_nm + (self.count - 1) as f64 * self.step_nm
    }

    pub fn step_nm(&self) -> f64 {
        self.step_nm
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn wavelength(&self, i: usize) -> f64 {
        self.min_nm + i as f64 * self.step_nm
    }

    pub fn wavelengths(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(move |i| self.wavelength(i))
    }

    /// Index of an on-grid wavelength; `None` if it falls between samples.
    pub fn index_of(&self, nm: f64) -> Option<usize> {
        let t = (nm - self.min_nm) / self.step_nm;
        let i = t.round();
        if i < 0.0 || i as usize >= self.count || (t - i).abs() > 1e-9 {
            None
        } else {
            Some(i as usize)
        }
    }

    /// Trapezoid quadrature weight of sample `i` (step/2 at both ends).
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.count {
            0.5 * self.step_nm
        } else {
            self.step_nm
        }
    }

    pub fn weights(&self) -> DVector<f64> {
        DVector::from_fn(self.count, |i, _| self.weight(i))
    }

    pub fn describe(&self) -> String {
        format!("{}:{}:{}", self.min_nm, self.step_nm, self.max_nm())
    }
}

/// A function of wavelength sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: WavelengthGrid,
    values: DVector<f64>,
}

impl Spectrum {
    pub fn new(grid: WavelengthGrid, values: DVector<f64>) -> Self {
        assert_eq!(values.len(), grid.len(), "sample count must match the grid");
        Self { grid, values }
    }

    pub fn zeros(grid: WavelengthGrid) -> Self {
        Self::new(grid, DVector::zeros(grid.len()))
    }

    pub fn constant(grid: WavelengthGrid, value: f64) -> Self {
        Self::new(grid, DVector::from_element(grid.len(), value))
    }

    pub fn from_fn(grid: WavelengthGrid, f: impl Fn(f64) -> f64) -> Self {
        Self::new(grid, DVector::from_fn(grid.len(), |i, _| f(grid.wavelength(i))))
    }

    /// Linear interpolation of `(wavelength, value)` samples onto `grid`,
    /// zero outside the table's support. The table must be strictly
    /// increasing in wavelength and overlap the grid.
    pub fn from_table(table: &[(f64, f64)], grid: WavelengthGrid) -> Result<Self> {
        if table.is_empty() {
            return Err(FluorError::DisjointGrids {
                source_min: f64::NAN,
                source_max: f64::NAN,
                target_min: grid.min_nm(),
                target_max: grid.max_nm(),
            });
        }
        for pair in table.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(FluorError::InvalidGrid(format!(
                    "wavelengths not strictly increasing near {} nm",
                    pair[0].0
                )));
            }
        }
        let (src_min, src_max) = (table[0].0, table[table.len() - 1].0);
        if src_max < grid.min_nm() || src_min > grid.max_nm() {
            return Err(FluorError::DisjointGrids {
                source_min: src_min,
                source_max: src_max,
                target_min: grid.min_nm(),
                target_max: grid.max_nm(),
            });
        }
        let mut values = DVector::zeros(grid.len());
        let mut j = 0usize;
        for i in 0..grid.len() {
            let lam = grid.wavelength(i);
            if lam < src_min || lam > src_max {
                continue;
            }
            while j + 2 < table.len() && table[j + 1].0 < lam {
                j += 1;
            }
            let (x0, y0) = table[j];
            let (x1, y1) = table[j + 1];
            let t = ((lam - x0) / (x1 - x0)).clamp(0.0, 1.0);
            values[i] = y0 * (1.0 - t) + y1 * t;
        }
        Ok(Self::new(grid, values))
    }

    pub fn grid(&self) -> WavelengthGrid {
        self.grid
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn value_at_index(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self::new(self.grid, &self.values * a)
    }

    pub fn add(&self, other: &Spectrum) -> Result<Spectrum> {
        self.check_grid(other.grid)?;
        Ok(Self::new(self.grid, &self.values + &other.values))
    }

    /// Pointwise product (e.g. a CMF times a window function).
    pub fn mul_pointwise(&self, other: &Spectrum) -> Result<Spectrum> {
        self.check_grid(other.grid)?;
        Ok(Self::new(self.grid, self.values.component_mul(&other.values)))
    }

    pub fn check_grid(&self, grid: WavelengthGrid) -> Result<()> {
        if self.grid == grid {
            Ok(())
        } else {
            Err(FluorError::GridMismatch {
                expected: grid.describe(),
                found: self.grid.describe(),
            })
        }
    }
}

/// Resample onto `target`: identity when the grids match (bit-exact), linear
/// interpolation inside the source support, zero extension outside.
pub fn resample(spectrum: &Spectrum, target: WavelengthGrid) -> Result<Spectrum> {
    if spectrum.grid() == target {
        return Ok(spectrum.clone());
    }
    let src = spectrum.grid();
    let table: Vec<(f64, f64)> = (0..src.len())
        .map(|i| (src.wavelength(i), spectrum.values()[i]))
        .collect();
    Spectrum::from_table(&table, target)
}

/// `exp(-(lambda-mu)^2 / (2 sigma^2))`, peak 1 at `mu`.
pub fn gaussian_spectrum(mu: f64, sigma: f64, grid: WavelengthGrid) -> Spectrum {
    assert!(sigma > 0.0, "sigma must be positive");
    Spectrum::from_fn(grid, |lam| {
        let z = (lam - mu) / sigma;
        (-0.5 * z * z).exp()
    })
}

/// Discrete delta at `lambda0`: value `1/w(lambda0)` there, zero elsewhere,
/// so the trapezoid integral is exactly 1 for every on-grid wavelength.
pub fn delta_spectrum(lambda0: f64, grid: WavelengthGrid) -> Result<Spectrum> {
    let i = grid.index_of(lambda0).ok_or(FluorError::OffGrid(lambda0))?;
    let mut s = Spectrum::zeros(grid);
    s.values[i] = 1.0 / grid.weight(i);
    Ok(s)
}

/// Trapezoid rule over the spectrum's own grid.
pub fn quadrature_integrate(spectrum: &Spectrum) -> f64 {
    let grid = spectrum.grid();
    (0..grid.len()).map(|i| grid.weight(i) * spectrum.values()[i]).sum()
}

/// Dense reradiation matrix P(lambda_i, lambda_o): rows follow the outgoing
/// axis, columns the incoming axis.
#[derive(Debug, Clone, PartialEq)]
pub struct DonaldsonMatrix {
    grid_in: WavelengthGrid,
    grid_out: WavelengthGrid,
    entries: DMatrix<f64>,
}

impl DonaldsonMatrix {
    pub fn new(grid_in: WavelengthGrid, grid_out: WavelengthGrid, entries: DMatrix<f64>) -> Self {
        assert_eq!(entries.nrows(), grid_out.len());
        assert_eq!(entries.ncols(), grid_in.len());
        Self {
            grid_in,
            grid_out,
            entries,
        }
    }

    pub fn zeros(grid: WavelengthGrid) -> Self {
        Self::new(grid, grid, DMatrix::zeros(grid.len(), grid.len()))
    }

    /// Discrete stand-in for delta(lambda_i - lambda_o): acts as the identity
    /// on spectra under the trapezoid quadrature. Interior entries are
    /// 1/step; the two endpoint entries carry 2/step to cancel the half
    /// weights.
    pub fn identity_delta(grid: WavelengthGrid) -> Self {
        let mut m = DMatrix::zeros(grid.len(), grid.len());
        for i in 0..grid.len() {
            m[(i, i)] = 1.0 / grid.weight(i);
        }
        Self::new(grid, grid, m)
    }

    /// Pure-reflective material: delta(lambda_i - lambda_o) * albedo(lambda_i).
    pub fn from_diagonal_albedo(albedo: &Spectrum) -> Self {
        let grid = albedo.grid();
        let mut m = DMatrix::zeros(grid.len(), grid.len());
        for i in 0..grid.len() {
            m[(i, i)] = albedo.values()[i] / grid.weight(i);
        }
        Self::new(grid, grid, m)
    }

    pub fn grid_in(&self) -> WavelengthGrid {
        self.grid_in
    }

    pub fn grid_out(&self) -> WavelengthGrid {
        self.grid_out
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut DMatrix<f64> {
        &mut self.entries
    }

    /// One dense diffuse bounce: L_o(lambda_o) = integral P(lambda_i, lambda_o)
    /// L_i(lambda_i) d lambda_i, realized as P * W * L_i.
    pub fn apply(&self, incident: &Spectrum) -> Result<Spectrum> {
        incident.check_grid(self.grid_in)?;
        let weighted = DVector::from_fn(self.grid_in.len(), |i, _| {
            self.grid_in.weight(i) * incident.values()[i]
        });
        Ok(Spectrum::new(self.grid_out, &self.entries * weighted))
    }

    /// Clamp negative entries to zero, returning how many were clamped.
    pub fn clamp_negatives(&mut self) -> usize {
        let mut n = 0;
        for v in self.entries.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
                n += 1;
            }
        }
        n
    }

    /// Bilinear resampling of both wavelength axes, zero outside the source
    /// support. Intended for smooth measured data; delta-like diagonals are
    /// constructed directly on the target grid instead.
    pub fn resample_to(&self, grid_in: WavelengthGrid, grid_out: WavelengthGrid) -> Self {
        if self.grid_in == grid_in && self.grid_out == grid_out {
            return self.clone();
        }
        let src_i = self.grid_in;
        let src_o = self.grid_out;
        let locate = |src: WavelengthGrid, lam: f64| -> Option<(usize, f64)> {
            if lam < src.min_nm() || lam > src.max_nm() {
                return None;
            }
            let t = (lam - src.min_nm()) / src.step_nm();
            let j = (t.floor() as usize).min(src.len() - 2);
            Some((j, t - j as f64))
        };
        let mut m = DMatrix::zeros(grid_out.len(), grid_in.len());
        for o in 0..grid_out.len() {
            let Some((jo, fo)) = locate(src_o, grid_out.wavelength(o)) else {
                continue;
            };
            for i in 0..grid_in.len() {
                let Some((ji, fi)) = locate(src_i, grid_in.wavelength(i)) else {
                    continue;
                };
                let p00 = self.entries[(jo, ji)];
                let p01 = self.entries[(jo, ji + 1)];
                let p10 = self.entries[(jo + 1, ji)];
                let p11 = self.entries[(jo + 1, ji + 1)];
                m[(o, i)] = p00 * (1.0 - fo) * (1.0 - fi)
                    + p01 * (1.0 - fo) * fi
                    + p10 * fo * (1.0 - fi)
                    + p11 * fo * fi;
            }
        }
        Self::new(grid_in, grid_out, m)
    }
}

/// Read a two-column `wavelength_nm,value` table. `#` lines and a textual
/// header line are skipped.
pub fn load_spectrum_table(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path).map_err(|_| FluorError::MissingData(path.into()))?;
    let mut table = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split(',').map(str::trim);
        let (a, b) = (cols.next().unwrap_or(""), cols.next().unwrap_or(""));
        match (a.parse::<f64>(), b.parse::<f64>()) {
            (Ok(w), Ok(v)) => table.push((w, v)),
            _ if table.is_empty() => continue, // header row
            _ => {
                return Err(FluorError::Parse {
                    path: path.into(),
                    line: ln + 1,
                    msg: format!("expected `wavelength_nm,value`, got `{line}`"),
                })
            }
        }
    }
    if table.is_empty() {
        return Err(FluorError::Parse {
            path: path.into(),
            line: 0,
            msg: "no samples found".into(),
        });
    }
    Ok(table)
}

pub fn load_spectrum(path: &Path, grid: WavelengthGrid) -> Result<Spectrum> {
    Spectrum::from_table(&load_spectrum_table(path)?, grid)
}

pub fn save_spectrum(path: &Path, spectrum: &Spectrum) -> Result<()> {
    let mut out = String::from("wavelength_nm,value\n");
    let grid = spectrum.grid();
    for i in 0..grid.len() {
        let _ = writeln!(out, "{},{}", grid.wavelength(i), spectrum.values()[i]);
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Donaldson text layout: first row is the lambda_i grid after a placeholder
/// cell, each following row starts with its lambda_o value.
pub fn save_donaldson(path: &Path, p: &DonaldsonMatrix, meta: &[String]) -> Result<()> {
    let mut out = String::new();
    for m in meta {
        let _ = writeln!(out, "# {m}");
    }
    out.push('0');
    for i in 0..p.grid_in().len() {
        let _ = write!(out, ",{}", p.grid_in().wavelength(i));
    }
    out.push('\n');
    for o in 0..p.grid_out().len() {
        let _ = write!(out, "{}", p.grid_out().wavelength(o));
        for i in 0..p.grid_in().len() {
            let _ = write!(out, ",{}", p.entries()[(o, i)]);
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Raw parse of the Donaldson text format. Returns the two wavelength axes
/// and the entry matrix without resampling or clamping.
pub fn load_donaldson_raw(path: &Path) -> Result<(Vec<f64>, Vec<f64>, DMatrix<f64>)> {
    let text = std::fs::read_to_string(path).map_err(|_| FluorError::MissingData(path.into()))?;
    let parse_err = |ln: usize, msg: String| FluorError::Parse {
        path: path.into(),
        line: ln,
        msg,
    };
    let mut lambda_in: Option<Vec<f64>> = None;
    let mut lambda_out = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if lambda_in.is_none() {
            let axis: std::result::Result<Vec<f64>, _> =
                cells[1..].iter().map(|c| c.parse::<f64>()).collect();
            lambda_in = Some(axis.map_err(|_| {
                parse_err(ln + 1, "first row must list the incoming wavelength grid".into())
            })?);
            continue;
        }
        let mut vals = Vec::with_capacity(cells.len());
        for c in &cells {
            vals.push(
                c.parse::<f64>()
                    .map_err(|_| parse_err(ln + 1, format!("bad number `{c}`")))?,
            );
        }
        let n_in = lambda_in.as_ref().unwrap().len();
        if vals.len() != n_in + 1 {
            return Err(parse_err(
                ln + 1,
                format!("expected {} cells, got {}", n_in + 1, vals.len()),
            ));
        }
        lambda_out.push(vals[0]);
        rows.push(vals[1..].to_vec());
    }
    let lambda_in = lambda_in.ok_or_else(|| parse_err(0, "empty file".into()))?;
    if rows.is_empty() {
        return Err(parse_err(0, "no matrix rows".into()));
    }
    for axis in [&lambda_in, &lambda_out] {
        for w in axis.windows(2) {
            if w[1] <= w[0] {
                return Err(parse_err(0, "wavelength axes must be strictly increasing".into()));
            }
        }
    }
    let m = DMatrix::from_fn(lambda_out.len(), lambda_in.len(), |o, i| rows[o][i]);
    Ok((lambda_in, lambda_out, m))
}
