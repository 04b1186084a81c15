//! Image output: sRGB-encoded 8-bit PNG, a plain-text float raster, and the
//! dB false-color view of reduced matrices.

use std::fmt::Write as _;
use std::io::BufWriter;
use std::path::Path;

use nalgebra::{DMatrix, Vector3};

use crate::colorimetry::xyz_to_srgb;
use crate::error::Result;
use crate::transport::ColorImage;

/// Write an 8-bit RGB PNG. `meta` pairs are embedded as tEXt chunks.
pub fn write_png_rgb8(
    path: &Path,
    width: usize,
    height: usize,
    rgb: &[u8],
    meta: &[(String, String)],
) -> Result<()> {
    assert_eq!(rgb.len(), width * height * 3);
    let file = std::fs::File::create(path)?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), width as u32, height as u32);
    encoder.set_color(png::ColorType::Rgb);
    encoder.set_depth(png::BitDepth::Eight);
    for (k, v) in meta {
        let _ = encoder.add_text_chunk(k.clone(), v.clone());
    }
    let mut writer = encoder.write_header().map_err(png_err)?;
    writer.write_image_data(rgb).map_err(png_err)?;
    Ok(())
}

fn png_err(e: png::EncodingError) -> crate::FluorError {
    match e {
        png::EncodingError::IoError(io) => io.into(),
        other => std::io::Error::other(other.to_string()).into(),
    }
}

/// Plain-text float raster: a `width height channels` header line, then one
/// line per pixel row with `width * channels` values at 32-bit precision.
/// `meta` lines are prepended as `#` comments.
pub fn write_float_raster(path: &Path, image: &ColorImage, meta: &[String]) -> Result<()> {
    let mut out = String::new();
    for m in meta {
        let _ = writeln!(out, "# {m}");
    }
    let _ = writeln!(out, "{} {} {}", image.width, image.height, image.channels);
    for y in 0..image.height {
        let mut line = String::new();
        for x in 0..image.width {
            for c in image.pixel(x, y) {
                if !line.is_empty() {
                    line.push(' ');
                }
                let _ = write!(line, "{}", *c as f32);
            }
        }
        out.push_str(&line);
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn viridis(t: f64) -> [f64; 3] {
    const ANCHORS: [[f64; 3]; 7] = [
        [0.267, 0.005, 0.329],
        [0.254, 0.265, 0.530],
        [0.164, 0.471, 0.558],
        [0.128, 0.567, 0.551],
        [0.135, 0.659, 0.518],
        [0.478, 0.821, 0.318],
        [0.993, 0.906, 0.144],
    ];
    let t = t.clamp(0.0, 1.0) * (ANCHORS.len() - 1) as f64;
    let i = (t.floor() as usize).min(ANCHORS.len() - 2);
    let f = t - i as f64;
    [
        ANCHORS[i][0] * (1.0 - f) + ANCHORS[i + 1][0] * f,
        ANCHORS[i][1] * (1.0 - f) + ANCHORS[i + 1][1] * f,
        ANCHORS[i][2] * (1.0 - f) + ANCHORS[i + 1][2] * f,
    ]
}

/// False-color dB view of |entries|, floored at `floor_db` below the peak
/// (the matrix figures use -30 dB). Cells are blown up to `cell` pixels.
pub fn db_matrix_rgb8(m: &DMatrix<f64>, floor_db: f64, cell: usize) -> (usize, usize, Vec<u8>) {
    let peak = m.amax().max(f64::MIN_POSITIVE);
    let width = m.ncols() * cell;
    let height = m.nrows() * cell;
    let mut rgb = vec![0u8; width * height * 3];
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let v = m[(r, c)].abs();
            let db = 10.0 * (v / peak).max(1e-30).log10();
            let t = ((db - floor_db) / -floor_db).clamp(0.0, 1.0);
            let color = viridis(t);
            for py in 0..cell {
                for px in 0..cell {
                    let i = ((r * cell + py) * width + c * cell + px) * 3;
                    rgb[i] = (color[0] * 255.0).round() as u8;
                    rgb[i + 1] = (color[1] * 255.0).round() as u8;
                    rgb[i + 2] = (color[2] * 255.0).round() as u8;
                }
            }
        }
    }
    (width, height, rgb)
}

/// Tone-map an XYZ image to 8-bit sRGB. `exposure` scales the image before
/// encoding; pass the same value across images that must be comparable.
pub fn xyz_image_to_srgb8(image: &ColorImage, exposure: f64) -> Vec<u8> {
    assert_eq!(image.channels, 3);
    let mut rgb = vec![0u8; image.width * image.height * 3];
    for y in 0..image.height {
        for x in 0..image.width {
            let p = image.pixel(x, y);
            let xyz = Vector3::new(p[0], p[1], p[2]) * exposure;
            let srgb = xyz_to_srgb(&xyz);
            let i = (y * image.width + x) * 3;
            rgb[i] = (srgb.x * 255.0).round().clamp(0.0, 255.0) as u8;
            rgb[i + 1] = (srgb.y * 255.0).round().clamp(0.0, 255.0) as u8;
            rgb[i + 2] = (srgb.z * 255.0).round().clamp(0.0, 255.0) as u8;
        }
    }
    rgb
}

/// Exposure that maps the brightest luminance in the image to 1.
pub fn auto_exposure(image: &ColorImage) -> f64 {
    assert_eq!(image.channels, 3);
    let mut max_y = 0.0f64;
    for y in 0..image.height {
        for x in 0..image.width {
            max_y = max_y.max(image.pixel(x, y)[1]);
        }
    }
    if max_y > 0.0 {
        1.0 / max_y
    } else {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmpdir() -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("fluor-imaging-tests");
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn png_round_trips_through_the_decoder() {
        let (w, h) = (4, 3);
        let rgb: Vec<u8> = (0..w * h * 3).map(|i| (i * 7 % 256) as u8).collect();
        let path = tmpdir().join("test.png");
        write_png_rgb8(
            &path,
            w,
            h,
            &rgb,
            &[("fluor_config".into(), "{\"seed\":1}".into())],
        )
        .unwrap();
        let decoder =
            png::Decoder::new(std::io::BufReader::new(std::fs::File::open(&path).unwrap()));
        let mut reader = decoder.read_info().unwrap();
        let mut buf = vec![0; reader.output_buffer_size().unwrap()];
        let info = reader.next_frame(&mut buf).unwrap();
        assert_eq!((info.width, info.height), (4, 3));
        assert_eq!(&buf[..info.buffer_size()], &rgb[..]);
        let text = &reader.info().uncompressed_latin1_text;
        assert!(text.iter().any(|t| t.keyword == "fluor_config"));
    }

    #[test]
    fn float_raster_header_and_shape() {
        let mut img = ColorImage::new(3, 2, 4);
        img.data.iter_mut().enumerate().for_each(|(i, v)| *v = i as f64 * 0.5);
        let path = tmpdir().join("raster.txt");
        write_float_raster(&path, &img, &["config: {}".into()]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines().filter(|l| !l.starts_with('#'));
        assert_eq!(lines.next().unwrap(), "3 2 4");
        let row: Vec<&str> = lines.next().unwrap().split(' ').collect();
        assert_eq!(row.len(), 12);
        assert_eq!(row[1].parse::<f32>().unwrap(), 0.5);
    }

    #[test]
    fn db_floor_maps_small_entries_to_the_low_end() {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 0)] = 1.0;
        m[(1, 1)] = 1e-6; // -60 dB, well under the -30 dB floor
        let (w, h, rgb) = db_matrix_rgb8(&m, -30.0, 1);
        assert_eq!((w, h), (2, 2));
        let lo = viridis(0.0);
        let hi = viridis(1.0);
        assert_eq!(rgb[0], (hi[0] * 255.0).round() as u8);
        let i = (1 * 2 + 1) * 3;
        assert_eq!(rgb[i], (lo[0] * 255.0).round() as u8);
    }

    #[test]
    fn tone_mapping_clamps_out_of_gamut() {
        let mut img = ColorImage::new(1, 1, 3);
        img.data.copy_from_slice(&[2.0, 1.0, 0.0]); // saturated red-ish
        let rgb = xyz_image_to_srgb8(&img, 1.0);
        assert_eq!(rgb[0], 255);
    }
}
