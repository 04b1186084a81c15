//! Sensitivity bases: the XYZ CMFs, XYZU with an added UV band, and the
//! 7-band CMF split, each with its dual basis and transfer matrix.
//!
//! The quadrature weights of the shared grid are folded into the
//! downsampling matrix once at build time, so downsampling, upsampling and
//! reduction are literal matrix products everywhere else. The dual is the
//! Moore-Penrose form S (S^T S)^-1 of the weighted matrix, computed through
//! a Cholesky solve of the K x K Gram system; it satisfies S^T S_dual = I_K
//! to machine precision.

use std::path::Path;

use nalgebra::DMatrix;

use crate::data::data_file;
use crate::error::{FluorError, Result};
use crate::spectral::{Spectrum, WavelengthGrid};

/// Center/width of a smoothstep window in nm.
#[derive(Debug, Clone, Copy)]
pub struct SmoothstepParams {
    pub mu: f64,
    pub sigma: f64,
}

/// `3 t^2 - 2 t^3` with `t = ((lambda - mu)/sigma + 1) / 2` clipped to [0,1]:
/// 0 below `mu - sigma`, 1/2 at `mu`, 1 above `mu + sigma`.
pub fn smoothstep(lambda: f64, p: SmoothstepParams) -> f64 {
    let t = (0.5 * ((lambda - p.mu) / p.sigma + 1.0)).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Smoothstep split parameters for the 7-band basis.
pub const SPLIT_Y: SmoothstepParams = SmoothstepParams { mu: 570.0, sigma: 60.0 };
pub const SPLIT_X: SmoothstepParams = SmoothstepParams { mu: 590.0, sigma: 60.0 };
pub const SPLIT_X_MODES: SmoothstepParams = SmoothstepParams { mu: 500.0, sigma: 2.0 };

/// Default clamped knot vector for the degree-2, 5-element partition of
/// unity on [300, 800]. The first interior knot is tuned so the first
/// element stays above 0.5 below 400 nm while remaining monotone.
pub const DEFAULT_UV_KNOTS: [f64; 8] = [300.0, 300.0, 300.0, 650.0, 725.0, 800.0, 800.0, 800.0];

const UV_DEGREE: usize = 2;

fn bspline_value(knots: &[f64], degree: usize, i: usize, x: f64) -> f64 {
    let last = *knots.last().unwrap();
    if degree == 0 {
        let closes_end = x == last && knots[i + 1] == last;
        let inside = x >= knots[i] && (x < knots[i + 1] || closes_end);
        return if inside && knots[i] < knots[i + 1] { 1.0 } else { 0.0 };
    }
    let mut v = 0.0;
    let d1 = knots[i + degree] - knots[i];
    if d1 > 0.0 {
        v += (x - knots[i]) / d1 * bspline_value(knots, degree - 1, i, x);
    }
    let d2 = knots[i + degree + 1] - knots[i + 1];
    if d2 > 0.0 {
        v += (knots[i + degree + 1] - x) / d2 * bspline_value(knots, degree - 1, i + 1, x);
    }
    v
}

/// All elements of the degree-2 B-spline partition of unity defined by a
/// clamped knot vector, sampled on `grid`.
pub fn bspline_partition(grid: WavelengthGrid, knots: &[f64]) -> Result<Vec<Spectrum>> {
    let p = UV_DEGREE;
    if knots.len() < 2 * (p + 1) {
        return Err(FluorError::InvalidKnots(format!(
            "need at least {} knots, got {}",
            2 * (p + 1),
            knots.len()
        )));
    }
    for w in knots.windows(2) {
        if w[1] < w[0] {
            return Err(FluorError::InvalidKnots("knots must be non-decreasing".into()));
        }
    }
    let lo = knots[0];
    let hi = *knots.last().unwrap();
    if knots[..=p].iter().any(|&k| k != lo) || knots[knots.len() - p - 1..].iter().any(|&k| k != hi)
    {
        return Err(FluorError::InvalidKnots(format!(
            "knot vector must be clamped: first and last {} knots must repeat the domain ends",
            p + 1
        )));
    }
    let n = knots.len() - p - 1;
    let bases = (0..n)
        .map(|i| Spectrum::from_fn(grid, |lam| bspline_value(knots, p, i, lam.clamp(lo, hi))))
        .collect();
    Ok(bases)
}

/// First element of the UV partition of unity with the default knots.
pub fn build_uv_band(grid: WavelengthGrid) -> Spectrum {
    build_uv_band_with_knots(grid, &DEFAULT_UV_KNOTS).expect("default UV knots are valid")
}

/// First element of the UV partition of unity with custom knots. The two
/// defining properties are asserted at build time: the element decreases
/// monotonically, and stays above 0.5 for wavelengths below 400 nm.
pub fn build_uv_band_with_knots(grid: WavelengthGrid, knots: &[f64]) -> Result<Spectrum> {
    let bases = bspline_partition(grid, knots)?;
    let u = bases[0].clone();
    for i in 1..grid.len() {
        if u.values()[i] > u.values()[i - 1] + 1e-12 {
            return Err(FluorError::InvalidKnots(format!(
                "first element is not monotonically decreasing near {} nm",
                grid.wavelength(i)
            )));
        }
    }
    for i in 0..grid.len() {
        let lam = grid.wavelength(i);
        if lam < 400.0 && u.values()[i] <= 0.5 {
            return Err(FluorError::InvalidKnots(format!(
                "first element must stay above 0.5 below 400 nm (U({lam}) = {})",
                u.values()[i]
            )));
        }
    }
    Ok(u)
}

/// Parse a `uv_knots = [..]` line from a config file, if present.
pub fn parse_uv_knots_config(text: &str) -> Result<Option<Vec<f64>>> {
    for line in text.lines() {
        let line = line.trim();
        if !line.starts_with("uv_knots") {
            continue;
        }
        let Some(eq) = line.find('=') else { continue };
        let body = line[eq + 1..].trim().trim_start_matches('[').trim_end_matches(']');
        let knots: std::result::Result<Vec<f64>, _> = body
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect();
        return match knots {
            Ok(k) if !k.is_empty() => Ok(Some(k)),
            _ => Err(FluorError::InvalidKnots(format!("unparseable uv_knots line `{line}`"))),
        };
    }
    Ok(None)
}

/// Dual of an N x K matrix with independent columns: the Moore-Penrose form
/// `S (S^T S)^-1`, so that `S^T * dual = I_K`. Solved through the K x K Gram
/// system, never an N x N inverse.
pub fn compute_dual(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let gram = s.transpose() * s;
    let sv = gram.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !cond.is_finite() || cond > 1e12 {
        return Err(FluorError::DegenerateBasis { cond });
    }
    let chol = gram
        .cholesky()
        .ok_or(FluorError::DegenerateBasis { cond })?;
    // dual^T = G^-1 S^T
    let dual_t = chol.solve(&s.transpose());
    Ok(dual_t.transpose())
}

/// Identifier of a shipped basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    Xyz,
    Xyzu,
    SevenBand,
}

impl BasisKind {
    pub fn name(&self) -> &'static str {
        match self {
            BasisKind::Xyz => "xyz",
            BasisKind::Xyzu => "xyzu",
            BasisKind::SevenBand => "seven",
        }
    }
}

/// Projection from a reduced color vector to the parent basis: the identity
/// for XYZ, `[I3 | 0]` for XYZU, and the 4 x 7 band-summing matrix for the
/// seven-band basis (whose target is XYZU).
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix {
    m: DMatrix<f64>,
}

impl TransferMatrix {
    pub fn new(m: DMatrix<f64>) -> Self {
        Self { m }
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn rows(&self) -> usize {
        self.m.nrows()
    }

    pub fn cols(&self) -> usize {
        self.m.ncols()
    }
}

/// K sensitivity functions on a grid, their dual, and the transfer matrix.
#[derive(Debug, Clone)]
pub struct BasisSet {
    kind: BasisKind,
    grid: WavelengthGrid,
    labels: Vec<String>,
    /// Raw pointwise sensitivity values, N x K.
    sensitivities: DMatrix<f64>,
    /// Quadrature-weighted sensitivities, N x K; `down.transpose() * f`
    /// realizes the downsampling integrals.
    down: DMatrix<f64>,
    /// Dual matrix with `down^T * dual = I_K`.
    dual: DMatrix<f64>,
    transfer: TransferMatrix,
}

impl BasisSet {
    pub fn from_columns(
        kind: BasisKind,
        grid: WavelengthGrid,
        labels: Vec<String>,
        columns: &[Spectrum],
        transfer: TransferMatrix,
    ) -> Result<Self> {
        assert_eq!(labels.len(), columns.len());
        let n = grid.len();
        let k = columns.len();
        let mut sens = DMatrix::zeros(n, k);
        for (c, s) in columns.iter().enumerate() {
            s.check_grid(grid)?;
            sens.set_column(c, s.values());
        }
        let w = grid.weights();
        let mut down = sens.clone();
        for i in 0..n {
            for c in 0..k {
                down[(i, c)] *= w[i];
            }
        }
        let dual = compute_dual(&down)?;
        Ok(Self {
            kind,
            grid,
            labels,
            sensitivities: sens,
            down,
            dual,
            transfer,
        })
    }

    /// The CIE XYZ color matching functions, K = 3, T = I3.
    pub fn xyz(grid: WavelengthGrid) -> Result<Self> {
        let cols = load_cmf_columns(&data_file("cmf_xyz_2deg_1nm.csv"), grid)?;
        Self::from_columns(
            BasisKind::Xyz,
            grid,
            vec!["x".into(), "y".into(), "z".into()],
            &cols,
            TransferMatrix::new(DMatrix::identity(3, 3)),
        )
    }

    /// XYZ plus the UV B-spline band, K = 4, T = [I3 | 0].
    pub fn xyzu(grid: WavelengthGrid) -> Result<Self> {
        Self::xyzu_with_knots(grid, &DEFAULT_UV_KNOTS)
    }

    pub fn xyzu_with_knots(grid: WavelengthGrid, knots: &[f64]) -> Result<Self> {
        let mut cols = load_cmf_columns(&data_file("cmf_xyz_2deg_1nm.csv"), grid)?;
        cols.push(build_uv_band_with_knots(grid, knots)?);
        Self::from_columns(
            BasisKind::Xyzu,
            grid,
            vec!["x".into(), "y".into(), "z".into(), "u".into()],
            &cols,
            TransferMatrix::new(xyzu_transfer()),
        )
    }

    /// XYZU basis read from a four-column sensitivity file.
    pub fn xyzu_from_file(path: &Path, grid: WavelengthGrid) -> Result<Self> {
        let cols = load_sensitivity_columns(path, grid, 4)?;
        Self::from_columns(
            BasisKind::Xyzu,
            grid,
            vec!["x".into(), "y".into(), "z".into(), "u".into()],
            &cols,
            TransferMatrix::new(xyzu_transfer()),
        )
    }

    /// The 7-band split: x split in three, y in two, z kept, plus U.
    /// Columns are ordered [x1, x2, x3, y1, y2, z, u] to match the band
    /// summing transfer matrix.
    pub fn seven_band(grid: WavelengthGrid) -> Result<Self> {
        Self::seven_band_with_knots(grid, &DEFAULT_UV_KNOTS)
    }

    pub fn seven_band_with_knots(grid: WavelengthGrid, knots: &[f64]) -> Result<Self> {
        let cmf = load_cmf_columns(&data_file("cmf_xyz_2deg_1nm.csv"), grid)?;
        let u = build_uv_band_with_knots(grid, knots)?;
        let modes = Spectrum::from_fn(grid, |lam| smoothstep(lam, SPLIT_X_MODES));
        let win_x = Spectrum::from_fn(grid, |lam| smoothstep(lam, SPLIT_X));
        let win_y = Spectrum::from_fn(grid, |lam| smoothstep(lam, SPLIT_Y));
        let one_minus = |s: &Spectrum| {
            Spectrum::from_fn(grid, |_| 1.0).add(&s.scaled(-1.0)).expect("same grid")
        };
        let x = &cmf[0];
        let y = &cmf[1];
        let x1 = x.mul_pointwise(&one_minus(&modes))?;
        let x_upper = x.mul_pointwise(&modes)?;
        let x2 = x_upper.mul_pointwise(&win_x)?;
        let x3 = x_upper.mul_pointwise(&one_minus(&win_x))?;
        let y1 = y.mul_pointwise(&win_y)?;
        let y2 = y.mul_pointwise(&one_minus(&win_y))?;
        let cols = vec![x1, x2, x3, y1, y2, cmf[2].clone(), u];
        Self::from_columns(
            BasisKind::SevenBand,
            grid,
            ["x1", "x2", "x3", "y1", "y2", "z", "u"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            &cols,
            TransferMatrix::new(seven_band_transfer()),
        )
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn grid(&self) -> WavelengthGrid {
        self.grid
    }

    pub fn k(&self) -> usize {
        self.sensitivities.ncols()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Raw pointwise sensitivity functions, N x K.
    pub fn sensitivity_matrix(&self) -> &DMatrix<f64> {
        &self.sensitivities
    }

    pub fn sensitivity_column(&self, c: usize) -> Spectrum {
        Spectrum::new(self.grid, self.sensitivities.column(c).into_owned())
    }

    /// Quadrature-weighted sensitivities, N x K.
    pub fn down_matrix(&self) -> &DMatrix<f64> {
        &self.down
    }

    /// Dual matrix, N x K, `down^T * dual = I_K`.
    pub fn dual_matrix(&self) -> &DMatrix<f64> {
        &self.dual
    }

    /// The paper-form transfer matrix of this basis.
    pub fn transfer(&self) -> &TransferMatrix {
        &self.transfer
    }

    /// Composed 3 x K projection from this basis to an XYZ triplet.
    pub fn to_xyz_matrix(&self) -> DMatrix<f64> {
        match self.kind {
            BasisKind::Xyz => DMatrix::identity(3, 3),
            BasisKind::Xyzu => self.transfer.as_matrix().clone(),
            BasisKind::SevenBand => {
                let mut i30 = DMatrix::zeros(3, 4);
                for r in 0..3 {
                    i30[(r, r)] = 1.0;
                }
                i30 * self.transfer.as_matrix()
            }
        }
    }

    /// Residual of the dual identity, `max |down^T dual - I|`.
    pub fn dual_residual(&self) -> f64 {
        let r = self.down.transpose() * &self.dual - DMatrix::<f64>::identity(self.k(), self.k());
        r.amax()
    }
}

fn xyzu_transfer() -> DMatrix<f64> {
    let mut t = DMatrix::zeros(3, 4);
    for r in 0..3 {
        t[(r, r)] = 1.0;
    }
    t
}

fn seven_band_transfer() -> DMatrix<f64> {
    DMatrix::from_row_slice(
        4,
        7,
        &[
            1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, //
            0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0,
        ],
    )
}

fn load_sensitivity_columns(
    path: &Path,
    grid: WavelengthGrid,
    expect_cols: usize,
) -> Result<Vec<Spectrum>> {
    let text = std::fs::read_to_string(path).map_err(|_| FluorError::MissingData(path.into()))?;
    let mut tables: Vec<Vec<(f64, f64)>> = vec![Vec::new(); expect_cols];
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() < expect_cols + 1 {
            return Err(FluorError::Parse {
                path: path.into(),
                line: ln + 1,
                msg: format!("expected {} columns, got {}", expect_cols + 1, cells.len()),
            });
        }
        let Ok(lam) = cells[0].parse::<f64>() else {
            continue; // header row
        };
        for c in 0..expect_cols {
            let v = cells[c + 1].parse::<f64>().map_err(|_| FluorError::Parse {
                path: path.into(),
                line: ln + 1,
                msg: format!("bad number `{}`", cells[c + 1]),
            })?;
            tables[c].push((lam, v));
        }
    }
    tables
        .into_iter()
        .map(|t| Spectrum::from_table(&t, grid))
        .collect()
}

fn load_cmf_columns(path: &Path, grid: WavelengthGrid) -> Result<Vec<Spectrum>> {
    load_sensitivity_columns(path, grid, 3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{gaussian_spectrum, quadrature_integrate};
    use approx::assert_abs_diff_eq;

    fn canonical() -> WavelengthGrid {
        WavelengthGrid::canonical()
    }

    #[test]
    fn smoothstep_anchor_values() {
        let p = SmoothstepParams { mu: 570.0, sigma: 60.0 };
        assert_eq!(smoothstep(570.0, p), 0.5);
        assert_eq!(smoothstep(500.0, p), 0.0);
        assert_eq!(smoothstep(640.0, p), 1.0);
    }

    #[test]
    fn partition_of_unity_sums_to_one() {
        let grid = canonical();
        let bases = bspline_partition(grid, &DEFAULT_UV_KNOTS).unwrap();
        assert_eq!(bases.len(), 5);
        for i in 0..grid.len() {
            let sum: f64 = bases.iter().map(|b| b.values()[i]).sum();
            assert!(
                (sum - 1.0).abs() < 1e-12,
                "PU violated at {} nm: {}",
                grid.wavelength(i),
                sum
            );
        }
    }

    #[test]
    fn uv_band_properties() {
        let grid = canonical();
        let u = build_uv_band(grid);
        assert_eq!(u.values()[0], 1.0);
        for i in 1..grid.len() {
            assert!(u.values()[i] <= u.values()[i - 1] + 1e-12);
        }
        for i in 0..grid.len() {
            if grid.wavelength(i) < 400.0 {
                assert!(u.values()[i] > 0.5);
            }
        }
    }

    #[test]
    fn bad_knot_vectors_are_rejected() {
        let grid = canonical();
        // spec's uniform-clamped candidate: U(400) = 0.16, fails the 0.5 bound
        let uniform = [300.0, 300.0, 300.0, 466.67, 633.33, 800.0, 800.0, 800.0];
        assert!(build_uv_band_with_knots(grid, &uniform).is_err());
        let unclamped = [300.0, 310.0, 320.0, 500.0, 600.0, 780.0, 790.0, 800.0];
        assert!(build_uv_band_with_knots(grid, &unclamped).is_err());
    }

    #[test]
    fn uv_knots_config_parsing() {
        let text = "seed = 3\nuv_knots = [300, 300, 300, 660, 730, 800, 800, 800]\n";
        let knots = parse_uv_knots_config(text).unwrap().unwrap();
        assert_eq!(knots.len(), 8);
        assert_eq!(knots[3], 660.0);
        assert!(parse_uv_knots_config("other = 1\n").unwrap().is_none());
        assert!(parse_uv_knots_config("uv_knots = [a,b]\n").is_err());
    }

    #[test]
    fn dual_of_orthonormal_columns_is_identity_map() {
        let mut s = DMatrix::zeros(6, 2);
        s[(0, 0)] = 1.0;
        s[(3, 1)] = 1.0;
        let dual = compute_dual(&s).unwrap();
        assert_eq!(dual, s);
    }

    #[test]
    fn dual_of_all_ones_column() {
        let s = DMatrix::from_element(501, 1, 1.0);
        let dual = compute_dual(&s).unwrap();
        for i in 0..501 {
            assert_abs_diff_eq!(dual[(i, 0)], 1.0 / 501.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn dual_rejects_degenerate_columns() {
        let mut s = DMatrix::zeros(10, 2);
        for i in 0..10 {
            s[(i, 0)] = 1.0;
            s[(i, 1)] = 1.0; // same column twice
        }
        assert!(matches!(
            compute_dual(&s),
            Err(FluorError::DegenerateBasis { .. })
        ));
    }

    #[test]
    fn dual_scale_covariance() {
        let grid = canonical();
        let b = BasisSet::xyz(grid).unwrap();
        let s = b.down_matrix().clone();
        let dual = compute_dual(&s).unwrap();
        let alpha = 3.7;
        let mut scaled = s.clone();
        for i in 0..scaled.nrows() {
            scaled[(i, 1)] *= alpha;
        }
        let dual_scaled = compute_dual(&scaled).unwrap();
        for i in 0..s.nrows() {
            assert_abs_diff_eq!(dual_scaled[(i, 0)], dual[(i, 0)], epsilon = 1e-10);
            assert_abs_diff_eq!(dual_scaled[(i, 1)], dual[(i, 1)] / alpha, epsilon = 1e-10);
            assert_abs_diff_eq!(dual_scaled[(i, 2)], dual[(i, 2)], epsilon = 1e-10);
        }
    }

    #[test]
    fn xyz_basis_dual_identity_and_y_peak() {
        let grid = canonical();
        let b = BasisSet::xyz(grid).unwrap();
        assert_eq!(b.k(), 3);
        assert!(b.dual_residual() < 1e-10);

        let y = b.sensitivity_column(1);
        assert!(y.values().iter().all(|&v| v >= 0.0));
        let argmax = y
            .values()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        let peak_nm = grid.wavelength(argmax);
        assert!((550.0..=560.0).contains(&peak_nm), "y peak at {peak_nm} nm");
        // unimodal: rises to the peak, falls after
        for i in 1..=argmax {
            assert!(y.values()[i] >= y.values()[i - 1] - 1e-12);
        }
        for i in argmax + 1..grid.len() {
            assert!(y.values()[i] <= y.values()[i - 1] + 1e-12);
        }
    }

    #[test]
    fn flat_spectrum_downsample_matches_column_quadrature() {
        let grid = canonical();
        let b = BasisSet::xyz(grid).unwrap();
        let flat = Spectrum::constant(grid, 1.0);
        let coeffs = b.down_matrix().transpose() * flat.values();
        for c in 0..3 {
            let direct = quadrature_integrate(&b.sensitivity_column(c));
            assert_abs_diff_eq!(coeffs[c], direct, epsilon = 1e-9);
        }
    }

    #[test]
    fn cmf_column_integrals_match_published_1931_values() {
        let grid = canonical();
        let b = BasisSet::xyz(grid).unwrap();
        let expected = [106.865, 106.857, 106.892];
        for c in 0..3 {
            let integral = quadrature_integrate(&b.sensitivity_column(c));
            assert!(
                (integral - expected[c]).abs() < 0.5,
                "column {c} integral {integral}"
            );
        }
    }

    #[test]
    fn xyzu_basis_shape_and_uv_coefficient() {
        let grid = canonical();
        let b = BasisSet::xyzu(grid).unwrap();
        assert_eq!(b.k(), 4);
        assert!(b.dual_residual() < 1e-10);
        let t = b.transfer().as_matrix();
        assert_eq!((t.nrows(), t.ncols()), (3, 4));
        for r in 0..3 {
            for c in 0..4 {
                let want = if r == c { 1.0 } else { 0.0 };
                assert_eq!(t[(r, c)], want);
            }
        }
        // spectrum supported where U has decayed: U coefficient vanishes
        let f = gaussian_spectrum(720.0, 15.0, grid);
        let coeffs = b.down_matrix().transpose() * f.values();
        let direct_u =
            quadrature_integrate(&f.mul_pointwise(&b.sensitivity_column(3)).unwrap());
        assert_abs_diff_eq!(coeffs[3], direct_u, epsilon = 1e-12);
        assert!(coeffs[3].abs() <= 1e-6 * coeffs[1].abs());
    }

    #[test]
    fn seven_band_sums_reproduce_parent_cmfs() {
        let grid = canonical();
        let b7 = BasisSet::seven_band(grid).unwrap();
        let b3 = BasisSet::xyz(grid).unwrap();
        assert_eq!(b7.k(), 7);
        assert!(b7.dual_residual() < 1e-10);
        let s7 = b7.sensitivity_matrix();
        let s3 = b3.sensitivity_matrix();
        for i in 0..grid.len() {
            let x_sum = s7[(i, 0)] + s7[(i, 1)] + s7[(i, 2)];
            let y_sum = s7[(i, 3)] + s7[(i, 4)];
            assert!((x_sum - s3[(i, 0)]).abs() < 1e-12);
            assert!((y_sum - s3[(i, 1)]).abs() < 1e-12);
            assert_eq!(s7[(i, 5)], s3[(i, 2)]);
        }
    }

    #[test]
    fn seven_band_transfer_is_exact_pattern() {
        let grid = canonical();
        let b7 = BasisSet::seven_band(grid).unwrap();
        let t = b7.transfer().as_matrix();
        assert_eq!((t.nrows(), t.ncols()), (4, 7));
        let want = [
            [1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
        ];
        for r in 0..4 {
            for c in 0..7 {
                assert_eq!(t[(r, c)], want[r][c]);
            }
        }
    }

    #[test]
    fn seven_band_transfer_matches_xyzu_downsampling() {
        let grid = canonical();
        let b7 = BasisSet::seven_band(grid).unwrap();
        let b4 = BasisSet::xyzu(grid).unwrap();
        let mut centers = 320.0;
        for trial in 0..20 {
            let f = gaussian_spectrum(centers, 20.0 + (trial as f64) * 3.0, grid);
            let via7 = b7.transfer().as_matrix() * (b7.down_matrix().transpose() * f.values());
            let via4 = b4.down_matrix().transpose() * f.values();
            let scale = via4.amax().max(1e-30);
            assert!(
                (&via7 - &via4).amax() / scale < 1e-9,
                "trial {trial} deviates"
            );
            centers += 23.0;
        }
    }
}
