//! Light transport in three modes: the dense bispectral oracle, reduced
//! forward tracing, and reduced adjoint tracing with throughput matrices.
//!
//! The probe integrators share one deterministic path enumerator; forward
//! and adjoint runs therefore visit exactly the same path set and differ
//! only in how the per-path matrix product is associated. Patch scenes use
//! unit hemispherical irradiance so a single bounce is literally
//! `c_o = R c_i`.

use std::path::Path;

use nalgebra::{DMatrix, DVector, Vector3};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::basis::BasisSet;
use crate::error::{FluorError, Result};
use crate::materials::FluorescentMaterial;
use crate::reduction::{downsample, reduce_naive, reduce_ours, NaiveNorm, ReducedMatrix};
use crate::spectral::{delta_spectrum, load_spectrum, Spectrum, WavelengthGrid};

/// Which reduction drives the reduced renders.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Ours,
    Naive,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Ours => "ours",
            Method::Naive => "naive",
        }
    }
}

/// Single Lambertian patch under cosine-weighted hemispherical illumination
/// of unit irradiance.
#[derive(Debug, Clone)]
pub struct PatchScene {
    pub material: FluorescentMaterial,
    pub illuminant: Spectrum,
}

/// Dense bispectral ground truth: one diffuse bounce through the full
/// Donaldson matrix, projected onto the XYZ CMFs.
pub fn render_patch_spectral(scene: &PatchScene, xyz: &BasisSet) -> Result<Vector3<f64>> {
    let reflected = scene.material.donaldson.apply(&scene.illuminant)?;
    let c = downsample(&reflected, xyz)?;
    Ok(Vector3::new(c.coeffs()[0], c.coeffs()[1], c.coeffs()[2]))
}

fn reduce_with(
    material: &FluorescentMaterial,
    basis: &BasisSet,
    method: Method,
    norm: NaiveNorm,
) -> Result<ReducedMatrix> {
    match method {
        Method::Ours => reduce_ours(&material.donaldson, basis),
        Method::Naive => reduce_naive(&material.donaldson, basis, norm),
    }
}

/// One reduced bounce `T (R down[E])` under the same irradiance
/// normalization as the oracle.
pub fn render_patch_reduced(
    scene: &PatchScene,
    basis: &BasisSet,
    method: Method,
    norm: NaiveNorm,
) -> Result<Vector3<f64>> {
    let r = reduce_with(&scene.material, basis, method, norm)?;
    let c_in = downsample(&scene.illuminant, basis)?;
    let c_out = r.apply(&c_in)?;
    let xyz = basis.to_xyz_matrix() * c_out.coeffs();
    Ok(Vector3::new(xyz[0], xyz[1], xyz[2]))
}

/// Per-wavelength one-bounce renders under a delta illuminant. `method`
/// `None` selects the dense oracle.
pub fn monochromatic_swipe(
    material: &FluorescentMaterial,
    basis: &BasisSet,
    xyz: &BasisSet,
    method: Option<Method>,
    norm: NaiveNorm,
    lambda_min: f64,
    lambda_max: f64,
    step: f64,
) -> Result<Vec<Vector3<f64>>> {
    let grid = basis.grid();
    let reduced = match method {
        Some(m) => Some(reduce_with(material, basis, m, norm)?),
        None => None,
    };
    let mut out = Vec::new();
    let mut lam = lambda_min;
    while lam <= lambda_max + 1e-9 {
        let illuminant = delta_spectrum(lam, grid)?;
        let scene = PatchScene {
            material: material.clone(),
            illuminant,
        };
        let c = match &reduced {
            None => render_patch_spectral(&scene, xyz)?,
            Some(r) => {
                let c_in = downsample(&scene.illuminant, basis)?;
                let c_out = r.apply(&c_in)?;
                let v = basis.to_xyz_matrix() * c_out.coeffs();
                Vector3::new(v[0], v[1], v[2])
            }
        };
        out.push(c);
        lam += step;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Probe scene geometry

/// Planar parallelogram `origin + a*edge_u + b*edge_v`, `a, b` in [0, 1].
#[derive(Debug, Clone)]
pub struct Quad {
    pub origin: Vector3<f64>,
    pub edge_u: Vector3<f64>,
    pub edge_v: Vector3<f64>,
    pub material: String,
}

impl Quad {
    pub fn normal(&self) -> Vector3<f64> {
        self.edge_u.cross(&self.edge_v).normalize()
    }

    pub fn area(&self) -> f64 {
        self.edge_u.cross(&self.edge_v).norm()
    }

    fn from_corners(c: [Vector3<f64>; 4], material: String) -> Result<Self> {
        let q = Quad {
            origin: c[0],
            edge_u: c[1] - c[0],
            edge_v: c[3] - c[0],
            material,
        };
        let expected = c[0] + q.edge_u + q.edge_v;
        if (expected - c[2]).norm() > 1e-6 * (q.area().sqrt() + 1.0) {
            return Err(FluorError::Scene(
                "quad corners must form a parallelogram (c2 = c0 + (c1-c0) + (c3-c0))".into(),
            ));
        }
        Ok(q)
    }
}

#[derive(Debug, Clone)]
pub struct Camera {
    pub position: Vector3<f64>,
    pub look_at: Vector3<f64>,
    pub up: Vector3<f64>,
    pub vfov_degrees: f64,
}

/// Analytic box-with-creases scene: an emitter quad, Lambertian fluorescent
/// quads, and a pinhole camera.
#[derive(Debug, Clone)]
pub struct ProbeScene {
    pub quads: Vec<Quad>,
    pub emitter: usize,
    pub emitter_spectrum: Spectrum,
    pub camera: Camera,
    pub bounces: usize,
}

/// The built-in crease box: floor, back wall and side wall meeting in
/// creases, lit by a ceiling emitter, every surface carrying `material`.
pub fn builtin_probe_scene(
    material: &str,
    emitter_spectrum: Spectrum,
    bounces: usize,
) -> ProbeScene {
    let v = Vector3::new;
    let quads = vec![
        Quad {
            origin: v(-1.0, 0.0, -1.0),
            edge_u: v(2.0, 0.0, 0.0),
            edge_v: v(0.0, 0.0, 2.0),
            material: material.to_string(),
        },
        Quad {
            origin: v(-1.0, 0.0, 1.0),
            edge_u: v(2.0, 0.0, 0.0),
            edge_v: v(0.0, 2.0, 0.0),
            material: material.to_string(),
        },
        Quad {
            origin: v(-1.0, 0.0, -1.0),
            edge_u: v(0.0, 0.0, 2.0),
            edge_v: v(0.0, 2.0, 0.0),
            material: material.to_string(),
        },
        Quad {
            origin: v(-0.6, 1.8, -0.6),
            edge_u: v(1.2, 0.0, 0.0),
            edge_v: v(0.0, 0.0, 1.2),
            material: "emitter".to_string(),
        },
    ];
    ProbeScene {
        quads,
        emitter: 3,
        emitter_spectrum,
        camera: Camera {
            position: v(0.3, 1.1, -2.8),
            look_at: v(-0.1, 0.5, 0.2),
            up: v(0.0, 1.0, 0.0),
            vfov_degrees: 42.0,
        },
        bounces,
    }
}

/// Parse the scene text format:
/// `emitter <spectrum-file>`, `quad <12 corner floats> <material-name>`,
/// `camera <pos xyz> <lookat xyz> <up xyz> <vfov>`, `bounces <n>`.
/// The quad whose material is named `emitter` is the light.
pub fn load_scene(path: &Path, grid: WavelengthGrid) -> Result<ProbeScene> {
    let text = std::fs::read_to_string(path).map_err(|_| FluorError::MissingData(path.into()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let scene_err = |ln: usize, msg: String| FluorError::Parse {
        path: path.into(),
        line: ln,
        msg,
    };
    let mut quads = Vec::new();
    let mut emitter_spectrum = None;
    let mut camera = None;
    let mut bounces = 3usize;
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("emitter") => {
                let file = tok
                    .next()
                    .ok_or_else(|| scene_err(ln + 1, "emitter needs a spectrum file".into()))?;
                emitter_spectrum = Some(load_spectrum(&base.join(file), grid)?);
            }
            Some("quad") => {
                let rest: Vec<&str> = tok.collect();
                if rest.len() != 13 {
                    return Err(scene_err(
                        ln + 1,
                        "quad needs 12 corner coordinates and a material name".into(),
                    ));
                }
                let nums: std::result::Result<Vec<f64>, _> =
                    rest[..12].iter().map(|t| t.parse::<f64>()).collect();
                let nums =
                    nums.map_err(|_| scene_err(ln + 1, "bad coordinate in quad".into()))?;
                let corner = |i: usize| Vector3::new(nums[3 * i], nums[3 * i + 1], nums[3 * i + 2]);
                quads.push(Quad::from_corners(
                    [corner(0), corner(1), corner(2), corner(3)],
                    rest[12].to_string(),
                )?);
            }
            Some("camera") => {
                let nums: std::result::Result<Vec<f64>, _> =
                    tok.map(|t| t.parse::<f64>()).collect();
                let nums = nums.map_err(|_| scene_err(ln + 1, "bad camera number".into()))?;
                if nums.len() != 10 {
                    return Err(scene_err(ln + 1, "camera needs pos, lookat, up, vfov".into()));
                }
                camera = Some(Camera {
                    position: Vector3::new(nums[0], nums[1], nums[2]),
                    look_at: Vector3::new(nums[3], nums[4], nums[5]),
                    up: Vector3::new(nums[6], nums[7], nums[8]),
                    vfov_degrees: nums[9],
                });
            }
            Some("bounces") => {
                bounces = tok
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| scene_err(ln + 1, "bounces needs an integer".into()))?;
            }
            Some(other) => {
                return Err(scene_err(ln + 1, format!("unknown directive `{other}`")));
            }
            None => {}
        }
    }
    let emitter = quads
        .iter()
        .position(|q| q.material == "emitter")
        .ok_or_else(|| FluorError::Scene("scene has no quad with material `emitter`".into()))?;
    Ok(ProbeScene {
        quads,
        emitter,
        emitter_spectrum: emitter_spectrum
            .ok_or_else(|| FluorError::Scene("scene has no emitter spectrum".into()))?,
        camera: camera.ok_or_else(|| FluorError::Scene("scene has no camera".into()))?,
        bounces,
    })
}

// ---------------------------------------------------------------------------
// Deterministic path enumeration shared by both integrators

/// Image of per-pixel coefficient vectors (K channels, row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct ColorImage {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl ColorImage {
    pub fn new(width: usize, height: usize, channels: usize) -> Self {
        Self {
            width,
            height,
            channels,
            data: vec![0.0; width * height * channels],
        }
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[f64] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [f64] {
        let i = (y * self.width + x) * self.channels;
        &mut self.data[i..i + self.channels]
    }

    pub fn max_component_deviation(&self, other: &ColorImage) -> f64 {
        assert_eq!(self.data.len(), other.data.len());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Deterministic render parameters. `indirect_strata` and `emitter_strata`
/// are per-axis counts of the stratified direction and next-event lattices.
#[derive(Debug, Clone)]
pub struct RenderSettings {
    pub width: usize,
    pub height: usize,
    pub seed: u64,
    pub indirect_strata: usize,
    pub emitter_strata: usize,
}

impl Default for RenderSettings {
    fn default() -> Self {
        Self {
            width: 64,
            height: 64,
            seed: 1,
            indirect_strata: 2,
            emitter_strata: 2,
        }
    }
}

struct Ray {
    origin: Vector3<f64>,
    dir: Vector3<f64>,
}

struct Hit {
    quad: usize,
    point: Vector3<f64>,
    normal: Vector3<f64>,
}

const RAY_EPS: f64 = 1e-9;
const SHADOW_EPS: f64 = 1e-6;

fn intersect_quad(q: &Quad, ray: &Ray) -> Option<f64> {
    let n = q.edge_u.cross(&q.edge_v);
    let denom = ray.dir.dot(&n);
    if denom.abs() < RAY_EPS {
        return None;
    }
    let t = (q.origin - ray.origin).dot(&n) / denom;
    if t <= SHADOW_EPS {
        return None;
    }
    let p = ray.origin + ray.dir * t - q.origin;
    // solve the 2x2 Gram system for the parallelogram coordinates
    let uu = q.edge_u.dot(&q.edge_u);
    let uv = q.edge_u.dot(&q.edge_v);
    let vv = q.edge_v.dot(&q.edge_v);
    let pu = p.dot(&q.edge_u);
    let pv = p.dot(&q.edge_v);
    let det = uu * vv - uv * uv;
    if det.abs() < RAY_EPS {
        return None;
    }
    let a = (pu * vv - pv * uv) / det;
    let b = (pv * uu - pu * uv) / det;
    if (0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b) {
        Some(t)
    } else {
        None
    }
}

/// Receives the shared path enumeration. `push`/`pop` bracket surface
/// interactions on the camera path; `connect` reports a light connection
/// through the current interaction chain with its scalar geometric weight;
/// `emitter_direct` reports a direct view of the emitter.
trait TransportVisitor {
    fn push(&mut self, quad: usize);
    fn pop(&mut self);
    fn connect(&mut self, weight: f64);
    fn emitter_direct(&mut self, weight: f64);
}

struct Tracer<'a> {
    scene: &'a ProbeScene,
    settings: &'a RenderSettings,
}

impl<'a> Tracer<'a> {
    fn intersect(&self, ray: &Ray) -> Option<Hit> {
        let mut best: Option<(f64, usize)> = None;
        for (i, q) in self.scene.quads.iter().enumerate() {
            if let Some(t) = intersect_quad(q, ray) {
                if best.map_or(true, |(bt, _)| t < bt) {
                    best = Some((t, i));
                }
            }
        }
        best.map(|(t, i)| {
            let q = &self.scene.quads[i];
            let mut normal = q.normal();
            if normal.dot(&ray.dir) > 0.0 {
                normal = -normal;
            }
            Hit {
                quad: i,
                point: ray.origin + ray.dir * t,
                normal,
            }
        })
    }

    fn occluded(&self, from: Vector3<f64>, to: Vector3<f64>) -> bool {
        let dir = to - from;
        let dist = dir.norm();
        let ray = Ray {
            origin: from,
            dir: dir / dist,
        };
        for (i, q) in self.scene.quads.iter().enumerate() {
            if i == self.scene.emitter {
                continue;
            }
            if let Some(t) = intersect_quad(q, &ray) {
                if t < dist - SHADOW_EPS {
                    return true;
                }
            }
        }
        false
    }

    /// Next-event weight at a surface vertex: the stratified-area quadrature
    /// of (1/pi) * integral over the emitter of cos_v cos_e / d^2.
    fn nee_weight(&self, point: Vector3<f64>, normal: Vector3<f64>) -> f64 {
        let e = &self.scene.quads[self.scene.emitter];
        let s = self.settings.emitter_strata;
        let n_e = e.normal();
        let sample_weight = e.area() / (s * s) as f64;
        let mut sum = 0.0;
        for i in 0..s {
            for j in 0..s {
                let a = (i as f64 + 0.5) / s as f64;
                let b = (j as f64 + 0.5) / s as f64;
                let target = e.origin + e.edge_u * a + e.edge_v * b;
                let to_light = target - point;
                let d2 = to_light.norm_squared();
                let dist = d2.sqrt();
                let wi = to_light / dist;
                let cos_v = normal.dot(&wi);
                let cos_e = n_e.dot(&wi).abs(); // two-sided emitter
                if cos_v <= 0.0 || cos_e <= 0.0 {
                    continue;
                }
                if self.occluded(point + normal * SHADOW_EPS, target) {
                    continue;
                }
                sum += cos_v * cos_e / d2 * sample_weight;
            }
        }
        sum / std::f64::consts::PI
    }

    fn walk(
        &self,
        ray: &Ray,
        depth_left: usize,
        scalar: f64,
        rng: &mut ChaCha8Rng,
        visitor: &mut impl TransportVisitor,
    ) {
        let Some(hit) = self.intersect(ray) else {
            return;
        };
        if hit.quad == self.scene.emitter {
            // emitters do not reflect; direct views are reported, indirect
            // hits are already covered by next-event connections
            if depth_left == self.max_depth() {
                visitor.emitter_direct(scalar);
            }
            return;
        }
        visitor.push(hit.quad);
        let w = self.nee_weight(hit.point, hit.normal);
        if w > 0.0 {
            visitor.connect(scalar * w);
        }
        if depth_left > 1 {
            // stratified cosine-weighted directions; the cos/pi Lambertian
            // kernel cancels against the pdf, leaving 1/M per branch
            let m = self.settings.indirect_strata;
            let frame_t = orthonormal_tangent(hit.normal);
            let frame_b = hit.normal.cross(&frame_t);
            let branch_scalar = scalar / (m * m) as f64;
            for i in 0..m {
                for j in 0..m {
                    let u1 = (i as f64 + rng.random::<f64>()) / m as f64;
                    let u2 = (j as f64 + rng.random::<f64>()) / m as f64;
                    let r = u1.sqrt();
                    let phi = 2.0 * std::f64::consts::PI * u2;
                    let dir = frame_t * (r * phi.cos())
                        + frame_b * (r * phi.sin())
                        + hit.normal * (1.0 - u1).max(0.0).sqrt();
                    let next = Ray {
                        origin: hit.point + hit.normal * SHADOW_EPS,
                        dir,
                    };
                    self.walk(&next, depth_left - 1, branch_scalar, rng, visitor);
                }
            }
        }
        visitor.pop();
    }

    fn max_depth(&self) -> usize {
        self.scene.bounces
    }
}

fn orthonormal_tangent(n: Vector3<f64>) -> Vector3<f64> {
    let axis = if n.x.abs() < 0.9 {
        Vector3::new(1.0, 0.0, 0.0)
    } else {
        Vector3::new(0.0, 1.0, 0.0)
    };
    n.cross(&axis).normalize()
}

fn camera_ray(camera: &Camera, settings: &RenderSettings, x: usize, y: usize) -> Ray {
    let forward = (camera.look_at - camera.position).normalize();
    let right = forward.cross(&camera.up).normalize();
    let up = right.cross(&forward);
    let tan_half = (camera.vfov_degrees.to_radians() * 0.5).tan();
    let aspect = settings.width as f64 / settings.height as f64;
    let px = (2.0 * (x as f64 + 0.5) / settings.width as f64 - 1.0) * tan_half * aspect;
    let py = (1.0 - 2.0 * (y as f64 + 0.5) / settings.height as f64) * tan_half;
    Ray {
        origin: camera.position,
        dir: (forward + right * px + up * py).normalize(),
    }
}

fn pixel_rng(seed: u64, pixel: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (pixel as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Light-order accumulation: each connection folds the emitter vector
/// through the interaction chain from the light toward the camera.
struct LightVisitor<'a> {
    reduced: &'a [DMatrix<f64>],
    c_light: &'a DVector<f64>,
    chain: Vec<usize>,
    out: DVector<f64>,
}

impl TransportVisitor for LightVisitor<'_> {
    fn push(&mut self, quad: usize) {
        self.chain.push(quad);
    }

    fn pop(&mut self) {
        self.chain.pop();
    }

    fn connect(&mut self, weight: f64) {
        let mut c = self.c_light * weight;
        for &q in self.chain.iter().rev() {
            c = &self.reduced[q] * c;
        }
        self.out += c;
    }

    fn emitter_direct(&mut self, weight: f64) {
        self.out += self.c_light * weight;
    }
}

/// Adjoint accumulation: a throughput matrix starts as the identity at the
/// sensor and right-multiplies the reduced matrix of every surface
/// interaction; connections multiply it onto the emitter vector.
struct AdjointVisitor<'a> {
    reduced: &'a [DMatrix<f64>],
    c_light: &'a DVector<f64>,
    stack: Vec<DMatrix<f64>>,
    out: DVector<f64>,
}

impl TransportVisitor for AdjointVisitor<'_> {
    fn push(&mut self, quad: usize) {
        let top = self.stack.last().expect("identity seeded");
        self.stack.push(top * &self.reduced[quad]);
    }

    fn pop(&mut self) {
        self.stack.pop();
    }

    fn connect(&mut self, weight: f64) {
        let top = self.stack.last().expect("identity seeded");
        self.out += top * (self.c_light * weight);
    }

    fn emitter_direct(&mut self, weight: f64) {
        self.out += self.c_light * weight;
    }
}

/// Scalar Lambertian reference: identical enumeration with a scalar albedo
/// in place of the reduced matrices. Returns per-pixel throughput.
struct ScalarVisitor {
    albedo: f64,
    depth: u32,
    out: f64,
}

impl TransportVisitor for ScalarVisitor {
    fn push(&mut self, _quad: usize) {
        self.depth += 1;
    }

    fn pop(&mut self) {
        self.depth -= 1;
    }

    fn connect(&mut self, weight: f64) {
        self.out += weight * self.albedo.powi(self.depth as i32);
    }

    fn emitter_direct(&mut self, weight: f64) {
        self.out += weight;
    }
}

fn resolve_reduced(
    scene: &ProbeScene,
    materials: &[FluorescentMaterial],
    basis: &BasisSet,
    method: Method,
    norm: NaiveNorm,
) -> Result<Vec<DMatrix<f64>>> {
    let mut cache: Vec<(String, DMatrix<f64>)> = Vec::new();
    let mut out = Vec::with_capacity(scene.quads.len());
    for (i, quad) in scene.quads.iter().enumerate() {
        if i == scene.emitter {
            out.push(DMatrix::zeros(basis.k(), basis.k()));
            continue;
        }
        if let Some((_, m)) = cache.iter().find(|(n, _)| *n == quad.material) {
            out.push(m.clone());
            continue;
        }
        let material = materials
            .iter()
            .find(|m| m.name == quad.material)
            .ok_or_else(|| FluorError::UnknownMaterial(quad.material.clone()))?;
        let r = reduce_with(material, basis, method, norm)?;
        cache.push((quad.material.clone(), r.entries().clone()));
        out.push(r.entries().clone());
    }
    Ok(out)
}

fn trace_image(
    scene: &ProbeScene,
    basis: &BasisSet,
    materials: &[FluorescentMaterial],
    method: Method,
    norm: NaiveNorm,
    settings: &RenderSettings,
    adjoint: bool,
) -> Result<ColorImage> {
    if scene.bounces < 1 {
        return Err(FluorError::Scene("bounces must be at least 1".into()));
    }
    let reduced = resolve_reduced(scene, materials, basis, method, norm)?;
    let c_light = downsample(&scene.emitter_spectrum, basis)?.coeffs().clone();
    let k = basis.k();
    let tracer = Tracer { scene, settings };
    let mut image = ColorImage::new(settings.width, settings.height, k);
    let width = settings.width;
    image
        .data
        .par_chunks_mut(width * k)
        .enumerate()
        .for_each(|(y, row)| {
            for x in 0..width {
                let pixel = y * width + x;
                let mut rng = pixel_rng(settings.seed, pixel);
                let ray = camera_ray(&scene.camera, settings, x, y);
                let c = if adjoint {
                    let mut v = AdjointVisitor {
                        reduced: &reduced,
                        c_light: &c_light,
                        stack: vec![DMatrix::identity(k, k)],
                        out: DVector::zeros(k),
                    };
                    tracer.walk(&ray, scene.bounces, 1.0, &mut rng, &mut v);
                    v.out
                } else {
                    let mut v = LightVisitor {
                        reduced: &reduced,
                        c_light: &c_light,
                        chain: Vec::new(),
                        out: DVector::zeros(k),
                    };
                    tracer.walk(&ray, scene.bounces, 1.0, &mut rng, &mut v);
                    v.out
                };
                row[x * k..(x + 1) * k].copy_from_slice(c.as_slice());
            }
        });
    Ok(image)
}

/// Forward (light-order) reduced transport over the probe scene.
pub fn light_trace(
    scene: &ProbeScene,
    basis: &BasisSet,
    materials: &[FluorescentMaterial],
    method: Method,
    norm: NaiveNorm,
    settings: &RenderSettings,
) -> Result<ColorImage> {
    trace_image(scene, basis, materials, method, norm, settings, false)
}

/// Adjoint reduced transport: throughput matrices accumulated camera-first
/// over exactly the same path enumeration as `light_trace`.
pub fn adjoint_trace(
    scene: &ProbeScene,
    basis: &BasisSet,
    materials: &[FluorescentMaterial],
    method: Method,
    norm: NaiveNorm,
    settings: &RenderSettings,
) -> Result<ColorImage> {
    trace_image(scene, basis, materials, method, norm, settings, true)
}

/// Scalar-albedo Lambertian render of the same scene and path set; the
/// reference for the identity-material equivalence and for geometric-factor
/// cross-checks.
pub fn scalar_trace(scene: &ProbeScene, albedo: f64, settings: &RenderSettings) -> ColorImage {
    let tracer = Tracer { scene, settings };
    let mut image = ColorImage::new(settings.width, settings.height, 1);
    let width = settings.width;
    image.data.par_chunks_mut(width).enumerate().for_each(|(y, row)| {
        for x in 0..width {
            let pixel = y * width + x;
            let mut rng = pixel_rng(settings.seed, pixel);
            let ray = camera_ray(&scene.camera, settings, x, y);
            let mut v = ScalarVisitor {
                albedo,
                depth: 0,
                out: 0.0,
            };
            tracer.walk(&ray, scene.bounces, 1.0, &mut rng, &mut v);
            row[x] = v.out;
        }
    });
    image
}

/// Project a coefficient image to XYZ through the basis transfer chain.
pub fn image_to_xyz(image: &ColorImage, basis: &BasisSet) -> ColorImage {
    let t = basis.to_xyz_matrix();
    let mut out = ColorImage::new(image.width, image.height, 3);
    for y in 0..image.height {
        for x in 0..image.width {
            let c = DVector::from_column_slice(image.pixel(x, y));
            let xyz = &t * c;
            out.pixel_mut(x, y).copy_from_slice(xyz.as_slice());
        }
    }
    out
}
