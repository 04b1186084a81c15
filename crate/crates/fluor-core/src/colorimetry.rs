//! Display conversion and perceptual color difference: XYZ to sRGB, CIELAB,
//! CIEDE2000, and the bundled standard illuminants.

use nalgebra::{Matrix3, Vector3};

use crate::data::data_file;
use crate::error::{FluorError, Result};
use crate::spectral::{gaussian_spectrum, load_spectrum, Spectrum, WavelengthGrid};

/// IEC 61966-2-1 linear transform, XYZ (D65) to linear sRGB.
pub fn xyz_to_srgb_matrix() -> Matrix3<f64> {
    Matrix3::new(
        3.2404542, -1.5371385, -0.4985314, //
        -0.9692660, 1.8760108, 0.0415560, //
        0.0556434, -0.2040259, 1.0572252,
    )
}

/// Inverse transform, linear sRGB to XYZ (D65).
pub fn srgb_to_xyz_matrix() -> Matrix3<f64> {
    Matrix3::new(
        0.4124564, 0.3575761, 0.1804375, //
        0.2126729, 0.7151522, 0.0721750, //
        0.0193339, 0.1191920, 0.9503041,
    )
}

fn srgb_encode(c: f64) -> f64 {
    if c <= 0.0031308 {
        12.92 * c
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    }
}

/// Linear matrix step only; may produce out-of-gamut components.
pub fn xyz_to_linear_rgb(c: &Vector3<f64>) -> Vector3<f64> {
    xyz_to_srgb_matrix() * c
}

/// Full display conversion: linear matrix, clamp to [0, 1], transfer curve.
pub fn xyz_to_srgb(c: &Vector3<f64>) -> Vector3<f64> {
    let lin = xyz_to_linear_rgb(c);
    Vector3::new(
        srgb_encode(lin.x.clamp(0.0, 1.0)),
        srgb_encode(lin.y.clamp(0.0, 1.0)),
        srgb_encode(lin.z.clamp(0.0, 1.0)),
    )
}

/// CIELAB coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lab {
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

fn lab_f(t: f64) -> f64 {
    const DELTA: f64 = 6.0 / 29.0;
    if t > DELTA * DELTA * DELTA {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

/// XYZ to Lab relative to the given white point.
pub fn xyz_to_lab(c: &Vector3<f64>, white: &Vector3<f64>) -> Result<Lab> {
    if !(white.y > 0.0) {
        return Err(FluorError::BadWhite);
    }
    let fx = lab_f(c.x / white.x);
    let fy = lab_f(c.y / white.y);
    let fz = lab_f(c.z / white.z);
    Ok(Lab {
        l: 116.0 * fy - 16.0,
        a: 500.0 * (fx - fy),
        b: 200.0 * (fy - fz),
    })
}

fn hue_degrees(a: f64, b: f64) -> f64 {
    if a == 0.0 && b == 0.0 {
        return 0.0;
    }
    let h = b.atan2(a).to_degrees();
    if h < 0.0 {
        h + 360.0
    } else {
        h
    }
}

/// CIEDE2000 on Lab pairs, parametric factors kL = kC = kH = 1.
pub fn ciede2000(lab1: Lab, lab2: Lab) -> f64 {
    const POW7_25: f64 = 6103515625.0; // 25^7

    let c1 = lab1.a.hypot(lab1.b);
    let c2 = lab2.a.hypot(lab2.b);
    let c_mean = 0.5 * (c1 + c2);
    let c_mean7 = c_mean.powi(7);
    let g = 0.5 * (1.0 - (c_mean7 / (c_mean7 + POW7_25)).sqrt());

    let a1p = (1.0 + g) * lab1.a;
    let a2p = (1.0 + g) * lab2.a;
    let c1p = a1p.hypot(lab1.b);
    let c2p = a2p.hypot(lab2.b);
    let h1p = hue_degrees(a1p, lab1.b);
    let h2p = hue_degrees(a2p, lab2.b);

    let dl = lab2.l - lab1.l;
    let dc = c2p - c1p;
    let dh_angle = if c1p * c2p == 0.0 {
        0.0
    } else {
        let d = h2p - h1p;
        if d > 180.0 {
            d - 360.0
        } else if d < -180.0 {
            d + 360.0
        } else {
            d
        }
    };
    let dh = 2.0 * (c1p * c2p).sqrt() * (0.5 * dh_angle.to_radians()).sin();

    let l_mean = 0.5 * (lab1.l + lab2.l);
    let cp_mean = 0.5 * (c1p + c2p);
    let h_mean = if c1p * c2p == 0.0 {
        h1p + h2p
    } else {
        let sum = h1p + h2p;
        if (h1p - h2p).abs() <= 180.0 {
            0.5 * sum
        } else if sum < 360.0 {
            0.5 * (sum + 360.0)
        } else {
            0.5 * (sum - 360.0)
        }
    };

    let t = 1.0 - 0.17 * (h_mean - 30.0).to_radians().cos()
        + 0.24 * (2.0 * h_mean).to_radians().cos()
        + 0.32 * (3.0 * h_mean + 6.0).to_radians().cos()
        - 0.20 * (4.0 * h_mean - 63.0).to_radians().cos();

    let l50 = (l_mean - 50.0) * (l_mean - 50.0);
    let sl = 1.0 + 0.015 * l50 / (20.0 + l50).sqrt();
    let sc = 1.0 + 0.045 * cp_mean;
    let sh = 1.0 + 0.015 * cp_mean * t;

    let d_theta = 30.0 * (-((h_mean - 275.0) / 25.0).powi(2)).exp();
    let cp_mean7 = cp_mean.powi(7);
    let rc = 2.0 * (cp_mean7 / (cp_mean7 + POW7_25)).sqrt();
    let rt = -rc * (2.0 * d_theta).to_radians().sin();

    let tl = dl / sl;
    let tc = dc / sc;
    let th = dh / sh;
    (tl * tl + tc * tc + th * th + rt * tc * th).sqrt()
}

/// CIEDE2000 between two XYZ colors expressed relative to a shared white.
pub fn delta_e_2000(c1: &Vector3<f64>, c2: &Vector3<f64>, white: &Vector3<f64>) -> Result<f64> {
    Ok(ciede2000(xyz_to_lab(c1, white)?, xyz_to_lab(c2, white)?))
}

/// The standard illuminants used by the evaluation harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Illuminant {
    A,
    E,
    D60,
    D65,
    Fl1,
    Fl2,
    Hp5,
    Gauss350,
    Gauss450,
}

impl Illuminant {
    pub fn name(&self) -> &'static str {
        match self {
            Illuminant::A => "A",
            Illuminant::E => "E",
            Illuminant::D60 => "D60",
            Illuminant::D65 => "D65",
            Illuminant::Fl1 => "FL1",
            Illuminant::Fl2 => "FL2",
            Illuminant::Hp5 => "HP5",
            Illuminant::Gauss350 => "Gauss350",
            Illuminant::Gauss450 => "Gauss450",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "a" => Some(Illuminant::A),
            "e" => Some(Illuminant::E),
            "d60" => Some(Illuminant::D60),
            "d65" => Some(Illuminant::D65),
            "fl1" | "f1" => Some(Illuminant::Fl1),
            "fl2" | "f2" => Some(Illuminant::Fl2),
            "hp5" => Some(Illuminant::Hp5),
            "gauss350" | "g350" => Some(Illuminant::Gauss350),
            "gauss450" | "g450" => Some(Illuminant::Gauss450),
            _ => None,
        }
    }

    /// The seven Table-1 columns.
    pub fn standard_seven() -> [Illuminant; 7] {
        [
            Illuminant::A,
            Illuminant::E,
            Illuminant::D60,
            Illuminant::D65,
            Illuminant::Fl1,
            Illuminant::Fl2,
            Illuminant::Hp5,
        ]
    }

    /// Spectral power distribution on `grid`. Tabulated illuminants are
    /// loaded from the bundled data files; the Gaussians are generated.
    pub fn spectrum(&self, grid: WavelengthGrid) -> Result<Spectrum> {
        let file = match self {
            Illuminant::A => "illum_a.csv",
            Illuminant::E => "illum_e.csv",
            Illuminant::D60 => "illum_d60.csv",
            Illuminant::D65 => "illum_d65.csv",
            Illuminant::Fl1 => "illum_fl1.csv",
            Illuminant::Fl2 => "illum_fl2.csv",
            Illuminant::Hp5 => "illum_hp5.csv",
            Illuminant::Gauss350 => return Ok(gaussian_spectrum(350.0, 50.0, grid).scaled(100.0)),
            Illuminant::Gauss450 => return Ok(gaussian_spectrum(450.0, 50.0, grid).scaled(100.0)),
        };
        load_spectrum(&data_file(file), grid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn srgb_of_black_is_black() {
        let rgb = xyz_to_srgb(&Vector3::zeros());
        assert_eq!(rgb, Vector3::zeros());
    }

    #[test]
    fn srgb_of_d65_white_is_unit_before_clamp() {
        // published D65 white point; the sRGB matrix maps it to (1,1,1)
        let white = Vector3::new(0.95047, 1.0, 1.08883);
        let lin = xyz_to_linear_rgb(&white);
        for c in lin.iter() {
            assert!((c - 1.0).abs() < 1e-3, "linear rgb {lin:?}");
        }
    }

    #[test]
    fn linear_step_is_linear() {
        let a = Vector3::new(0.3, 0.5, 0.2);
        let b = Vector3::new(0.1, 0.1, 0.4);
        let lhs = xyz_to_linear_rgb(&(a * 2.0 + b * 0.5));
        let rhs = xyz_to_linear_rgb(&a) * 2.0 + xyz_to_linear_rgb(&b) * 0.5;
        assert!((lhs - rhs).amax() < 1e-12);
    }

    #[test]
    fn srgb_matrices_are_mutual_inverses() {
        let prod = xyz_to_srgb_matrix() * srgb_to_xyz_matrix();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(prod[(i, j)], want, epsilon = 2e-4);
            }
        }
    }

    #[test]
    fn delta_e_zero_on_identical_colors() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let white = Vector3::new(95.047, 100.0, 108.883);
        for _ in 0..20 {
            let c = Vector3::new(
                rng.random_range(0.0..100.0),
                rng.random_range(0.0..100.0),
                rng.random_range(0.0..100.0),
            );
            assert_abs_diff_eq!(delta_e_2000(&c, &c, &white).unwrap(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn delta_e_is_symmetric() {
        let white = Vector3::new(95.047, 100.0, 108.883);
        let c1 = Vector3::new(20.0, 45.0, 30.0);
        let c2 = Vector3::new(60.0, 30.0, 80.0);
        let d12 = delta_e_2000(&c1, &c2, &white).unwrap();
        let d21 = delta_e_2000(&c2, &c1, &white).unwrap();
        assert_abs_diff_eq!(d12, d21, epsilon = 1e-12);
    }

    #[test]
    fn delta_e_invariant_under_joint_scaling() {
        let white = Vector3::new(95.047, 100.0, 108.883);
        let c1 = Vector3::new(20.0, 45.0, 30.0);
        let c2 = Vector3::new(22.0, 40.0, 33.0);
        let base = delta_e_2000(&c1, &c2, &white).unwrap();
        for s in [0.01, 0.5, 7.0, 1234.0] {
            let scaled =
                delta_e_2000(&(c1 * s), &(c2 * s), &(white * s)).unwrap();
            assert_abs_diff_eq!(base, scaled, epsilon = 1e-9);
        }
    }

    #[test]
    fn delta_e_rejects_non_positive_white() {
        let white = Vector3::new(1.0, 0.0, 1.0);
        assert!(delta_e_2000(&Vector3::zeros(), &Vector3::zeros(), &white).is_err());
    }

    /// The Sharma-Wu-Dalal verification dataset: 34 Lab pairs with expected
    /// CIEDE2000 values, covering all the hue-average discontinuities.
    #[test]
    fn sharma_wu_dalal_verification_pairs() {
        #[rustfmt::skip]
        let cases: [(f64, f64, f64, f64, f64, f64, f64); 34] = [
            (50.0000,  2.6772, -79.7751, 50.0000,  0.0000, -82.7485,  2.0425),
            (50.0000,  3.1571, -77.2803, 50.0000,  0.0000, -82.7485,  2.8615),
            (50.0000,  2.8361, -74.0200, 50.0000,  0.0000, -82.7485,  3.4412),
            (50.0000, -1.3802, -84.2814, 50.0000,  0.0000, -82.7485,  1.0000),
            (50.0000, -1.1848, -84.8006, 50.0000,  0.0000, -82.7485,  1.0000),
            (50.0000, -0.9009, -85.5211, 50.0000,  0.0000, -82.7485,  1.0000),
            (50.0000,  0.0000,   0.0000, 50.0000, -1.0000,   2.0000,  2.3669),
            (50.0000, -1.0000,   2.0000, 50.0000,  0.0000,   0.0000,  2.3669),
            (50.0000,  2.4900,  -0.0010, 50.0000, -2.4900,   0.0009,  7.1792),
            (50.0000,  2.4900,  -0.0010, 50.0000, -2.4900,   0.0010,  7.1792),
            (50.0000,  2.4900,  -0.0010, 50.0000, -2.4900,   0.0011,  7.2195),
            (50.0000,  2.4900,  -0.0010, 50.0000, -2.4900,   0.0012,  7.2195),
            (50.0000, -0.0010,   2.4900, 50.0000,  0.0009,  -2.4900,  4.8045),
            (50.0000, -0.0010,   2.4900, 50.0000,  0.0010,  -2.4900,  4.8045),
            (50.0000, -0.0010,   2.4900, 50.0000,  0.0011,  -2.4900,  4.7461),
            (50.0000,  2.5000,   0.0000, 50.0000,  0.0000,  -2.5000,  4.3065),
            (50.0000,  2.5000,   0.0000, 73.0000, 25.0000, -18.0000, 27.1492),
            (50.0000,  2.5000,   0.0000, 61.0000, -5.0000,  29.0000, 22.8977),
            (50.0000,  2.5000,   0.0000, 56.0000, -27.0000, -3.0000, 31.9030),
            (50.0000,  2.5000,   0.0000, 58.0000, 24.0000,  15.0000, 19.4535),
            (50.0000,  2.5000,   0.0000, 50.0000,  3.1736,   0.5854,  1.0000),
            (50.0000,  2.5000,   0.0000, 50.0000,  3.2972,   0.0000,  1.0000),
            (50.0000,  2.5000,   0.0000, 50.0000,  1.8634,   0.5757,  1.0000),
            (50.0000,  2.5000,   0.0000, 50.0000,  3.2592,   0.3350,  1.0000),
            (60.2574, -34.0099,  36.2677, 60.4626, -34.1751, 39.4387,  1.2644),
            (63.0109, -31.0961,  -5.8663, 62.8187, -29.7946, -4.0864,  1.2630),
            (61.2901,   3.7196,  -5.3901, 61.4292,   2.2480, -4.9620,  1.8731),
            (35.0831, -44.1164,   3.7933, 35.0232, -40.0716,  1.5901,  1.8645),
            (22.7233,  20.0904, -46.6940, 23.0331,  14.9730, -42.5619, 2.0373),
            (36.4612,  47.8580,  18.3852, 36.2715,  50.5065,  21.2231, 1.4146),
            (90.8027,  -2.0831,   1.4410, 91.1528,  -1.6435,  0.0447,  1.4441),
            (90.9257,  -0.5406,  -0.9208, 88.6381,  -0.8985, -0.7239,  1.5381),
            ( 6.7747,  -0.2908,  -2.4247,  5.8714,  -0.0985, -2.2286,  0.6377),
            ( 2.0776,   0.0795,  -1.1350,  0.9033,  -0.0636, -0.5514,  0.9082),
        ];
        for (i, &(l1, a1, b1, l2, a2, b2, want)) in cases.iter().enumerate() {
            let got = ciede2000(Lab { l: l1, a: a1, b: b1 }, Lab { l: l2, a: a2, b: b2 });
            assert!(
                (got - want).abs() < 1e-4,
                "pair {}: got {got:.5}, want {want:.5}",
                i + 1
            );
        }
    }

    #[test]
    fn standard_illuminants_load_non_negative() {
        let grid = WavelengthGrid::canonical();
        for ill in Illuminant::standard_seven() {
            let spd = ill.spectrum(grid).unwrap();
            assert!(
                spd.values().iter().all(|&v| v >= 0.0),
                "{} has negative power",
                ill.name()
            );
            assert!(spd.values().amax() > 0.0);
        }
        // E is flat
        let e = Illuminant::E.spectrum(grid).unwrap();
        assert!(e.values().iter().all(|&v| (v - 100.0).abs() < 1e-9));
    }

    #[test]
    fn gauss350_matches_its_definition() {
        let grid = WavelengthGrid::canonical();
        let g = Illuminant::Gauss350.spectrum(grid).unwrap();
        let idx = grid.index_of(350.0).unwrap();
        assert_abs_diff_eq!(g.values()[idx], 100.0, epsilon = 1e-12);
        let one_sigma = 100.0 * (-0.5f64).exp();
        assert_abs_diff_eq!(
            g.values()[grid.index_of(400.0).unwrap()],
            one_sigma,
            epsilon = 1e-9
        );
    }

    #[test]
    fn d65_has_uv_tail_below_400() {
        let grid = WavelengthGrid::canonical();
        let d65 = Illuminant::D65.spectrum(grid).unwrap();
        let sub400: f64 = (0..grid.len())
            .filter(|&i| grid.wavelength(i) < 400.0)
            .map(|i| grid.weight(i) * d65.values()[i])
            .sum();
        assert!(sub400 > 100.0, "D65 sub-400 nm energy {sub400}");
    }
}
