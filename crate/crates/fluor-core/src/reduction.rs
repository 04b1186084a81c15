//! Reduction of dense reradiation matrices into the K x K matrices a
//! tristimulus renderer multiplies per bounce.
//!
//! The principled route projects through the dual basis, `R = S^T P S_dual`,
//! which maps an identity reradiation matrix to the identity reduced matrix.
//! The baseline route integrates against normalized sensitivity functions on
//! both axes, `R = S_norm^T P S_norm`, and does not.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector, Matrix3};

use crate::basis::{BasisKind, BasisSet, TransferMatrix};
use crate::error::{FluorError, Result};
use crate::spectral::{quadrature_integrate, DonaldsonMatrix, Spectrum};

/// Color space tag carried by reduced matrices and color vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    Xyz,
    Xyzu,
    Seven,
    Rgb,
}

impl Space {
    pub fn name(&self) -> &'static str {
        match self {
            Space::Xyz => "xyz",
            Space::Xyzu => "xyzu",
            Space::Seven => "seven",
            Space::Rgb => "rgb",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "xyz" => Some(Space::Xyz),
            "xyzu" => Some(Space::Xyzu),
            "seven" => Some(Space::Seven),
            "rgb" => Some(Space::Rgb),
            _ => None,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Space::Xyz | Space::Rgb => 3,
            Space::Xyzu => 4,
            Space::Seven => 7,
        }
    }
}

impl From<BasisKind> for Space {
    fn from(kind: BasisKind) -> Self {
        match kind {
            BasisKind::Xyz => Space::Xyz,
            BasisKind::Xyzu => Space::Xyzu,
            BasisKind::SevenBand => Space::Seven,
        }
    }
}

/// K-dimensional reduced radiance (or throughput) coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorVector {
    coeffs: DVector<f64>,
    space: Space,
}

impl ColorVector {
    pub fn new(coeffs: DVector<f64>, space: Space) -> Self {
        assert_eq!(coeffs.len(), space.dim());
        Self { coeffs, space }
    }

    pub fn zeros(space: Space) -> Self {
        Self::new(DVector::zeros(space.dim()), space)
    }

    pub fn coeffs(&self) -> &DVector<f64> {
        &self.coeffs
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn check_space(&self, space: Space) -> Result<()> {
        if self.space == space {
            Ok(())
        } else {
            Err(FluorError::SpaceMismatch {
                expected: space.name().into(),
                found: self.space.name().into(),
            })
        }
    }
}

/// Norm used by the naive baseline to normalize sensitivity functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NaiveNorm {
    /// Quadrature integral of the sensitivity function.
    L1,
    /// Square root of the quadrature integral of its square (default).
    L2,
}

impl NaiveNorm {
    pub fn name(&self) -> &'static str {
        match self {
            NaiveNorm::L1 => "l1",
            NaiveNorm::L2 => "l2",
        }
    }
}

impl Default for NaiveNorm {
    fn default() -> Self {
        NaiveNorm::L2
    }
}

/// K x K (or K_out x K_in) matrix acting on reduced radiance vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedMatrix {
    entries: DMatrix<f64>,
    space_in: Space,
    space_out: Space,
}

impl ReducedMatrix {
    pub fn new(entries: DMatrix<f64>, space_in: Space, space_out: Space) -> Self {
        assert_eq!(entries.ncols(), space_in.dim());
        assert_eq!(entries.nrows(), space_out.dim());
        Self {
            entries,
            space_in,
            space_out,
        }
    }

    pub fn identity(space: Space) -> Self {
        Self::new(DMatrix::identity(space.dim(), space.dim()), space, space)
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn space_in(&self) -> Space {
        self.space_in
    }

    pub fn space_out(&self) -> Space {
        self.space_out
    }

    pub fn apply(&self, c: &ColorVector) -> Result<ColorVector> {
        c.check_space(self.space_in)?;
        Ok(ColorVector::new(&self.entries * c.coeffs(), self.space_out))
    }

    /// Max-abs deviation from the identity; only meaningful for square
    /// matrices.
    pub fn deviation_from_identity(&self) -> f64 {
        let k = self.entries.nrows().min(self.entries.ncols());
        let mut dev: f64 = 0.0;
        for r in 0..self.entries.nrows() {
            for c in 0..self.entries.ncols() {
                let want = if r == c && r < k { 1.0 } else { 0.0 };
                dev = dev.max((self.entries[(r, c)] - want).abs());
            }
        }
        dev
    }
}

/// `down[f] = S^T f` with the grid's quadrature weights folded into `S^T`.
pub fn downsample(f: &Spectrum, basis: &BasisSet) -> Result<ColorVector> {
    f.check_grid(basis.grid())?;
    Ok(ColorVector::new(
        basis.down_matrix().transpose() * f.values(),
        basis.kind().into(),
    ))
}

/// `up[c] = S_dual c`, a spectrum in the span of the dual basis.
pub fn upsample(c: &ColorVector, basis: &BasisSet) -> Result<Spectrum> {
    c.check_space(basis.kind().into())?;
    Ok(Spectrum::new(basis.grid(), basis.dual_matrix() * c.coeffs()))
}

fn check_matrix_grids(p: &DonaldsonMatrix, basis: &BasisSet) -> Result<()> {
    for (axis, grid) in [("incoming", p.grid_in()), ("outgoing", p.grid_out())] {
        if grid != basis.grid() {
            return Err(FluorError::GridMismatch {
                expected: basis.grid().describe(),
                found: format!("{} ({axis} axis)", grid.describe()),
            });
        }
    }
    Ok(())
}

/// The dual-basis reduction `R = S^T P S_dual`, with the incoming-axis
/// integration weights applied between P and the dual. Satisfies
/// `R c = down[ integral P(lambda_i, .) up[c](lambda_i) d lambda_i ]`
/// exactly, and maps the identity reradiation matrix to I_K.
pub fn reduce_ours(p: &DonaldsonMatrix, basis: &BasisSet) -> Result<ReducedMatrix> {
    check_matrix_grids(p, basis)?;
    let grid = basis.grid();
    let n = grid.len();
    // P * W * dual, column-weighted to realize the inner integral
    let mut weighted_dual = basis.dual_matrix().clone();
    for i in 0..n {
        let w = grid.weight(i);
        for c in 0..weighted_dual.ncols() {
            weighted_dual[(i, c)] *= w;
        }
    }
    let r = basis.down_matrix().transpose() * (p.entries() * weighted_dual);
    let space: Space = basis.kind().into();
    Ok(ReducedMatrix::new(r, space, space))
}

/// The baseline reduction `R = S_norm^T P S_norm` with sensitivity functions
/// normalized on both axes. No dual is involved, so an identity reradiation
/// matrix does not reduce to the identity.
pub fn reduce_naive(
    p: &DonaldsonMatrix,
    basis: &BasisSet,
    norm: NaiveNorm,
) -> Result<ReducedMatrix> {
    check_matrix_grids(p, basis)?;
    let grid = basis.grid();
    let n = grid.len();
    let k = basis.k();
    let mut normalized = basis.sensitivity_matrix().clone();
    for c in 0..k {
        let col = basis.sensitivity_column(c);
        let nrm = match norm {
            NaiveNorm::L1 => quadrature_integrate(&col),
            NaiveNorm::L2 => quadrature_integrate(&col.mul_pointwise(&col)?).sqrt(),
        };
        if nrm <= 0.0 {
            return Err(FluorError::DegenerateBasis { cond: f64::INFINITY });
        }
        for i in 0..n {
            normalized[(i, c)] /= nrm;
        }
    }
    // fold quadrature weights on both axes
    let mut weighted = normalized;
    for i in 0..n {
        let w = grid.weight(i);
        for c in 0..k {
            weighted[(i, c)] *= w;
        }
    }
    let r = weighted.transpose() * (p.entries() * weighted);
    let space: Space = basis.kind().into();
    Ok(ReducedMatrix::new(r, space, space))
}

/// Similarity transform `M R M^-1` taking an XYZ reduced matrix into the
/// working space of an RGB renderer.
pub fn conjugate_reduced(r: &ReducedMatrix, m: &Matrix3<f64>) -> Result<ReducedMatrix> {
    if r.space_in() != Space::Xyz || r.space_out() != Space::Xyz {
        return Err(FluorError::SpaceMismatch {
            expected: "xyz".into(),
            found: r.space_in().name().into(),
        });
    }
    let m_inv = m.try_inverse().ok_or(FluorError::SingularMatrix)?;
    let conjugated = m * r.entries().clone().fixed_view::<3, 3>(0, 0).into_owned() * m_inv;
    Ok(ReducedMatrix::new(
        DMatrix::from_fn(3, 3, |i, j| conjugated[(i, j)]),
        Space::Rgb,
        Space::Rgb,
    ))
}

/// The 4 x 7 light-connection matrix `T R7` used when forward tracing
/// carries seven-band vectors but the final color is XYZU.
pub fn reduce_7_to_4(r7: &ReducedMatrix, t: &TransferMatrix) -> Result<ReducedMatrix> {
    if r7.space_in() != Space::Seven || r7.space_out() != Space::Seven {
        return Err(FluorError::ShapeMismatch(format!(
            "expected a 7x7 seven-band matrix, got {}x{}",
            r7.entries().nrows(),
            r7.entries().ncols()
        )));
    }
    if t.rows() != 4 || t.cols() != 7 {
        return Err(FluorError::ShapeMismatch(format!(
            "expected the 4x7 transfer matrix, got {}x{}",
            t.rows(),
            t.cols()
        )));
    }
    Ok(ReducedMatrix::new(
        t.as_matrix() * r7.entries(),
        Space::Seven,
        Space::Xyzu,
    ))
}

/// Serialize with a `space=K_in,K_out,basis_in,basis_out` header and
/// row-major entries. Entry text is shortest-round-trip, so load restores
/// bit-identical values. `meta` lines are embedded as `#` comments.
pub fn save_reduced(path: &Path, r: &ReducedMatrix, meta: &[String]) -> Result<()> {
    let mut out = String::new();
    for m in meta {
        let _ = writeln!(out, "# {m}");
    }
    let _ = writeln!(
        out,
        "space={},{},{},{}",
        r.space_in().dim(),
        r.space_out().dim(),
        r.space_in().name(),
        r.space_out().name()
    );
    for row in 0..r.entries().nrows() {
        let cells: Vec<String> = (0..r.entries().ncols())
            .map(|col| format!("{}", r.entries()[(row, col)]))
            .collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn load_reduced(path: &Path) -> Result<ReducedMatrix> {
    let text = std::fs::read_to_string(path).map_err(|_| FluorError::MissingData(path.into()))?;
    let parse_err = |ln: usize, msg: String| FluorError::Parse {
        path: path.into(),
        line: ln,
        msg,
    };
    let mut header: Option<(usize, usize, Space, Space)> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if header.is_none() {
            let body = line
                .strip_prefix("space=")
                .ok_or_else(|| parse_err(ln + 1, "expected `space=` header".into()))?;
            let parts: Vec<&str> = body.split(',').map(str::trim).collect();
            if parts.len() != 4 {
                return Err(parse_err(ln + 1, "header needs K_in,K_out,basis_in,basis_out".into()));
            }
            let k_in: usize = parts[0]
                .parse()
                .map_err(|_| parse_err(ln + 1, "bad K_in".into()))?;
            let k_out: usize = parts[1]
                .parse()
                .map_err(|_| parse_err(ln + 1, "bad K_out".into()))?;
            let s_in = Space::parse(parts[2])
                .ok_or_else(|| parse_err(ln + 1, format!("unknown basis `{}`", parts[2])))?;
            let s_out = Space::parse(parts[3])
                .ok_or_else(|| parse_err(ln + 1, format!("unknown basis `{}`", parts[3])))?;
            if s_in.dim() != k_in || s_out.dim() != k_out {
                return Err(parse_err(ln + 1, "header dims disagree with basis names".into()));
            }
            header = Some((k_in, k_out, s_in, s_out));
            continue;
        }
        let vals: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|c| c.trim().parse::<f64>()).collect();
        rows.push(vals.map_err(|_| parse_err(ln + 1, "bad entry".into()))?);
    }
    let (k_in, k_out, s_in, s_out) =
        header.ok_or_else(|| parse_err(0, "missing header".into()))?;
    if rows.len() != k_out || rows.iter().any(|r| r.len() != k_in) {
        return Err(parse_err(0, format!("expected {k_out} rows of {k_in} entries")));
    }
    let m = DMatrix::from_fn(k_out, k_in, |r, c| rows[r][c]);
    Ok(ReducedMatrix::new(m, s_in, s_out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{gaussian_spectrum, WavelengthGrid};
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn canonical() -> WavelengthGrid {
        WavelengthGrid::canonical()
    }

    fn random_color(rng: &mut ChaCha8Rng, space: Space) -> ColorVector {
        ColorVector::new(
            DVector::from_fn(space.dim(), |_, _| rng.random_range(-1.0..1.0)),
            space,
        )
    }

    fn random_donaldson(rng: &mut ChaCha8Rng, grid: WavelengthGrid) -> DonaldsonMatrix {
        // sum of a few smooth non-negative bumps, so entries stay physical
        let n = grid.len();
        let mut entries = DMatrix::zeros(n, n);
        for _ in 0..4 {
            let mu_i = rng.random_range(320.0..760.0);
            let mu_o = rng.random_range(320.0..760.0);
            let s_i = rng.random_range(15.0..70.0);
            let s_o = rng.random_range(15.0..70.0);
            let amp = rng.random_range(0.0..2.0e-3);
            for o in 0..n {
                let lo = grid.wavelength(o);
                let go = (-0.5 * ((lo - mu_o) / s_o).powi(2)).exp();
                for i in 0..n {
                    let li = grid.wavelength(i);
                    let gi = (-0.5 * ((li - mu_i) / s_i).powi(2)).exp();
                    entries[(o, i)] += amp * go * gi;
                }
            }
        }
        DonaldsonMatrix::new(grid, grid, entries)
    }

    #[test]
    fn downsample_of_dual_columns_gives_unit_vectors() {
        let grid = canonical();
        let b = BasisSet::xyz(grid).unwrap();
        for l in 0..3 {
            let dual_col = Spectrum::new(grid, b.dual_matrix().column(l).into_owned());
            let c = downsample(&dual_col, &b).unwrap();
            for k in 0..3 {
                let want = if k == l { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(c.coeffs()[k], want, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn downsample_zero_is_zero_and_linear() {
        let grid = canonical();
        let b = BasisSet::xyz(grid).unwrap();
        let zero = Spectrum::zeros(grid);
        assert_eq!(downsample(&zero, &b).unwrap().coeffs().amax(), 0.0);

        let f = gaussian_spectrum(440.0, 35.0, grid);
        let g = gaussian_spectrum(610.0, 55.0, grid);
        let combo = f.scaled(1.25).add(&g.scaled(-0.5)).unwrap();
        let lhs = downsample(&combo, &b).unwrap();
        let rhs = downsample(&f, &b).unwrap().coeffs() * 1.25
            - downsample(&g, &b).unwrap().coeffs() * 0.5;
        assert!((lhs.coeffs() - rhs).amax() < 1e-12);
    }

    #[test]
    fn down_up_round_trip_is_identity_on_color_vectors() {
        let grid = canonical();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for basis in [
            BasisSet::xyz(grid).unwrap(),
            BasisSet::xyzu(grid).unwrap(),
            BasisSet::seven_band(grid).unwrap(),
        ] {
            for _ in 0..100 {
                let c = random_color(&mut rng, basis.kind().into());
                let back = downsample(&upsample(&c, &basis).unwrap(), &basis).unwrap();
                assert!(
                    (back.coeffs() - c.coeffs()).amax() < 1e-10,
                    "round trip failed for {:?}",
                    basis.kind()
                );
            }
        }
    }

    #[test]
    fn upsample_zero_is_zero_spectrum() {
        let grid = canonical();
        let b = BasisSet::xyzu(grid).unwrap();
        let s = upsample(&ColorVector::zeros(Space::Xyzu), &b).unwrap();
        assert_eq!(s.values().amax(), 0.0);
    }

    #[test]
    fn upsample_loses_out_of_span_content_but_keeps_coefficients() {
        let grid = canonical();
        let b = BasisSet::xyz(grid).unwrap();
        let d65_like = gaussian_spectrum(560.0, 120.0, grid);
        let c = downsample(&d65_like, &b).unwrap();
        let projected = upsample(&c, &b).unwrap();
        // the projection differs from the original spectrum...
        assert!((projected.values() - d65_like.values()).amax() > 1e-3);
        // ...but downsamples to the same coefficients
        let c2 = downsample(&projected, &b).unwrap();
        assert!((c2.coeffs() - c.coeffs()).amax() < 1e-10);
    }

    #[test]
    fn reduce_ours_maps_identity_to_identity() {
        let grid = canonical();
        let p = DonaldsonMatrix::identity_delta(grid);
        for basis in [
            BasisSet::xyz(grid).unwrap(),
            BasisSet::xyzu(grid).unwrap(),
            BasisSet::seven_band(grid).unwrap(),
        ] {
            let r = reduce_ours(&p, &basis).unwrap();
            assert!(
                r.deviation_from_identity() < 1e-10,
                "identity not preserved for {:?}: dev {}",
                basis.kind(),
                r.deviation_from_identity()
            );
        }
    }

    #[test]
    fn reduce_ours_scales_with_constant_albedo() {
        let grid = canonical();
        let albedo = Spectrum::constant(grid, 0.5);
        let p = DonaldsonMatrix::from_diagonal_albedo(&albedo);
        let b = BasisSet::xyz(grid).unwrap();
        let r = reduce_ours(&p, &b).unwrap();
        let mut dev: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 0.5 } else { 0.0 };
                dev = dev.max((r.entries()[(i, j)] - want).abs());
            }
        }
        assert!(dev < 1e-10);
    }

    #[test]
    fn reduce_ours_matches_dense_bounce_of_upsampled_vector() {
        let grid = canonical();
        let b = BasisSet::xyzu(grid).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let p = random_donaldson(&mut rng, grid);
            let r = reduce_ours(&p, &b).unwrap();
            for _ in 0..4 {
                let c = random_color(&mut rng, Space::Xyzu);
                let reduced = r.apply(&c).unwrap();
                let dense = downsample(&p.apply(&upsample(&c, &b).unwrap()).unwrap(), &b).unwrap();
                let scale = dense.coeffs().amax().max(1e-30);
                assert!(
                    (reduced.coeffs() - dense.coeffs()).amax() / scale < 1e-9,
                    "Eq. 13 route mismatch"
                );
            }
        }
    }

    #[test]
    fn reduce_naive_does_not_preserve_identity() {
        let grid = canonical();
        let p = DonaldsonMatrix::identity_delta(grid);
        let b = BasisSet::xyz(grid).unwrap();
        for norm in [NaiveNorm::L2, NaiveNorm::L1] {
            let r = reduce_naive(&p, &b, norm).unwrap();
            assert!(
                r.deviation_from_identity() > 0.05,
                "{:?} deviation {}",
                norm,
                r.deviation_from_identity()
            );
        }
        // under the L2 norm the diagonal is exactly the unit autocorrelation
        // and the off-diagonal mass comes from CMF overlap
        let r = reduce_naive(&p, &b, NaiveNorm::L2).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(r.entries()[(i, i)], 1.0, epsilon = 1e-9);
        }
        assert!(r.entries()[(0, 1)] > 0.05);
    }

    #[test]
    fn reduce_naive_of_zero_is_zero() {
        let grid = canonical();
        let p = DonaldsonMatrix::zeros(grid);
        let b = BasisSet::xyz(grid).unwrap();
        let r = reduce_naive(&p, &b, NaiveNorm::default()).unwrap();
        assert_eq!(r.entries().amax(), 0.0);
    }

    #[test]
    fn both_reductions_are_linear_in_the_donaldson_matrix() {
        let grid = canonical();
        let b = BasisSet::xyz(grid).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let p1 = random_donaldson(&mut rng, grid);
        let p2 = random_donaldson(&mut rng, grid);
        let (a, c) = (1.7, -0.4);
        let combo = DonaldsonMatrix::new(grid, grid, p1.entries() * a + p2.entries() * c);
        for reduce in [
            |p: &DonaldsonMatrix, b: &BasisSet| reduce_ours(p, b).unwrap(),
            |p: &DonaldsonMatrix, b: &BasisSet| reduce_naive(p, b, NaiveNorm::L2).unwrap(),
        ] {
            let lhs = reduce(&combo, &b);
            let rhs = reduce(&p1, &b).entries() * a + reduce(&p2, &b).entries() * c;
            assert!((lhs.entries() - rhs).amax() < 1e-10);
        }
    }

    #[test]
    fn reduce_ours_is_invariant_under_basis_scaling() {
        let grid = canonical();
        let b = BasisSet::xyz(grid).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let p = random_donaldson(&mut rng, grid);
        let r = reduce_ours(&p, &b).unwrap();

        // rebuild the basis with every column scaled by alpha
        let alpha = 2.5;
        let cols: Vec<Spectrum> = (0..3).map(|c| b.sensitivity_column(c).scaled(alpha)).collect();
        let scaled = BasisSet::from_columns(
            BasisKind::Xyz,
            grid,
            b.labels().to_vec(),
            &cols,
            TransferMatrix::new(DMatrix::identity(3, 3)),
        )
        .unwrap();
        let r_scaled = reduce_ours(&p, &scaled).unwrap();
        assert!((r.entries() - r_scaled.entries()).amax() < 1e-10);
    }

    #[test]
    fn conjugation_round_trips_and_preserves_trace() {
        let grid = canonical();
        let b = BasisSet::xyz(grid).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let p = random_donaldson(&mut rng, grid);
        let r = reduce_ours(&p, &b).unwrap();

        let identity = Matrix3::identity();
        let same = conjugate_reduced(&r, &identity).unwrap();
        assert!((same.entries() - r.entries()).amax() < 1e-15);

        let m = Matrix3::new(3.2, -1.5, -0.5, -0.97, 1.88, 0.04, 0.06, -0.2, 1.06);
        let rgb = conjugate_reduced(&r, &m).unwrap();
        assert_eq!(rgb.space_in(), Space::Rgb);
        let back = {
            let m_inv = m.try_inverse().unwrap();
            let tmp = ReducedMatrix::new(rgb.entries().clone(), Space::Xyz, Space::Xyz);
            conjugate_reduced(&tmp, &m_inv).unwrap()
        };
        assert!((back.entries() - r.entries()).amax() < 1e-12);

        let trace_r: f64 = (0..3).map(|i| r.entries()[(i, i)]).sum();
        let trace_rgb: f64 = (0..3).map(|i| rgb.entries()[(i, i)]).sum();
        assert_abs_diff_eq!(trace_r, trace_rgb, epsilon = 1e-12);
    }

    #[test]
    fn conjugation_rejects_singular_matrices() {
        let r = ReducedMatrix::identity(Space::Xyz);
        let singular = Matrix3::new(1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.0, 0.0, 1.0);
        assert!(matches!(
            conjugate_reduced(&r, &singular),
            Err(FluorError::SingularMatrix)
        ));
    }

    #[test]
    fn seven_to_four_connection_matrix() {
        let grid = canonical();
        let b7 = BasisSet::seven_band(grid).unwrap();
        let r7 = ReducedMatrix::identity(Space::Seven);
        let r74 = reduce_7_to_4(&r7, b7.transfer()).unwrap();
        assert_eq!(r74.entries(), b7.transfer().as_matrix());

        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let p = random_donaldson(&mut rng, grid);
        let r7 = reduce_ours(&p, &b7).unwrap();
        let r74 = reduce_7_to_4(&r7, b7.transfer()).unwrap();
        for _ in 0..10 {
            let c = random_color(&mut rng, Space::Seven);
            let assoc_a = r74.apply(&c).unwrap();
            let assoc_b = b7.transfer().as_matrix() * (r7.entries() * c.coeffs());
            assert!((assoc_a.coeffs() - assoc_b).amax() < 1e-12);
        }
    }

    #[test]
    fn seven_band_bounce_projects_like_xyzu() {
        let grid = canonical();
        let b7 = BasisSet::seven_band(grid).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let p = random_donaldson(&mut rng, grid);
        let r7 = reduce_ours(&p, &b7).unwrap();
        let e = gaussian_spectrum(420.0, 80.0, grid);
        let c7 = downsample(&e, &b7).unwrap();
        let lhs = b7.transfer().as_matrix() * (r7.entries() * c7.coeffs());
        let rhs = reduce_7_to_4(&r7, b7.transfer())
            .unwrap()
            .apply(&c7)
            .unwrap();
        let scale = lhs.amax().max(1e-30);
        assert!((lhs - rhs.coeffs()).amax() / scale < 1e-9);
    }

    #[test]
    fn reduced_matrix_text_round_trip_is_bit_exact() {
        let grid = canonical();
        let b = BasisSet::xyzu(grid).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let p = random_donaldson(&mut rng, grid);
        let r = reduce_ours(&p, &b).unwrap();
        let dir = std::env::temp_dir().join("fluor-reduction-tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("reduced.txt");
        save_reduced(&path, &r, &["config: test".into()]).unwrap();
        let back = load_reduced(&path).unwrap();
        assert_eq!(back.entries(), r.entries());
        assert_eq!(back.space_in(), r.space_in());
        assert_eq!(back.space_out(), r.space_out());
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let grid = canonical();
        let other = WavelengthGrid::new(380.0, 780.0, 1.0).unwrap();
        let b = BasisSet::xyz(grid).unwrap();
        let f = Spectrum::constant(other, 1.0);
        assert!(matches!(
            downsample(&f, &b),
            Err(FluorError::GridMismatch { .. })
        ));
        let p = DonaldsonMatrix::identity_delta(other);
        assert!(reduce_ours(&p, &b).is_err());
    }
}
