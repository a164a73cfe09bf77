//! Synthetic multipolygon datasets: alphabetic shape templates, four
//! classification tasks, JSON-lines I/O, and stratified splits.

use crate::geometry::{
    parse_multipolygon_json, serialize_multipolygon_json, GeometryError, Multipolygon, Point,
    Polygon, Ring,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("invalid dataset spec: {0}")]
    Spec(String),
    #[error("shape generation failed for template {template} after {attempts} attempts")]
    GenerationFailed { template: char, attempts: usize },
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("class {label} has {count} samples; stratified split needs at least 3")]
    Stratification { label: usize, count: usize },
    #[error("split ratios must sum to 1, got {0}")]
    Ratios(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Task {
    SingleShape,
    PairShape,
    PairRelation,
    PartialContain,
}

impl std::str::FromStr for Task {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "single-shape" | "SingleShape" => Ok(Task::SingleShape),
            "pair-shape" | "PairShape" => Ok(Task::PairShape),
            "pair-relation" | "PairRelation" => Ok(Task::PairRelation),
            "partial-contain" | "PartialContain" => Ok(Task::PartialContain),
            other => Err(format!("unknown task {other:?}")),
        }
    }
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Task::SingleShape => "single-shape",
            Task::PairShape => "pair-shape",
            Task::PairRelation => "pair-relation",
            Task::PartialContain => "partial-contain",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Template {
    I,
    L,
    T,
    U,
    O,
}

pub const TEMPLATES: [Template; 5] = [
    Template::I,
    Template::L,
    Template::T,
    Template::U,
    Template::O,
];

impl Template {
    pub fn id(self) -> char {
        match self {
            Template::I => 'I',
            Template::L => 'L',
            Template::T => 'T',
            Template::U => 'U',
            Template::O => 'O',
        }
    }

    /// Canonical rectilinear footprint, exterior CCW, holes CW.
    fn base(self) -> Polygon {
        let ring =
            |pts: &[(f64, f64)]| Ring::new(pts.iter().map(|&(x, y)| Point::new(x, y)).collect());
        match self {
            Template::I => Polygon::new(
                ring(&[(0.0, 0.0), (1.0, 0.0), (1.0, 4.0), (0.0, 4.0)]),
                vec![],
            ),
            Template::L => Polygon::new(
                ring(&[
                    (0.0, 0.0),
                    (3.0, 0.0),
                    (3.0, 1.0),
                    (1.0, 1.0),
                    (1.0, 4.0),
                    (0.0, 4.0),
                ]),
                vec![],
            ),
            Template::T => Polygon::new(
                ring(&[
                    (1.0, 0.0),
                    (2.0, 0.0),
                    (2.0, 3.0),
                    (3.0, 3.0),
                    (3.0, 4.0),
                    (0.0, 4.0),
                    (0.0, 3.0),
                    (1.0, 3.0),
                ]),
                vec![],
            ),
            Template::U => Polygon::new(
                ring(&[
                    (0.0, 0.0),
                    (3.0, 0.0),
                    (3.0, 4.0),
                    (2.0, 4.0),
                    (2.0, 1.0),
                    (1.0, 1.0),
                    (1.0, 4.0),
                    (0.0, 4.0),
                ]),
                vec![],
            ),
            Template::O => Polygon::new(
                ring(&[(0.0, 0.0), (4.0, 0.0), (4.0, 4.0), (0.0, 4.0)]),
                vec![ring(&[(1.0, 1.0), (1.0, 3.0), (3.0, 3.0), (3.0, 1.0)])],
            ),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SampleMeta {
    pub template: String,
    pub transform_seed: u64,
}

#[derive(Debug, Clone)]
pub struct LabeledSample {
    pub mp: Multipolygon,
    pub label: usize,
    pub meta: SampleMeta,
}

#[derive(Debug, Clone)]
pub struct DatasetSpec {
    pub task: Task,
    pub num_samples: usize,
    pub num_classes: usize,
    pub noise: f64,
    pub seed: u64,
}

impl DatasetSpec {
    /// Number of templates implied by (task, num_classes), or an error
    /// when the class count does not fit the task's labeling scheme.
    fn num_templates(&self) -> Result<usize, DataError> {
        let c = self.num_classes;
        let bad = |msg: String| Err(DataError::Spec(msg));
        match self.task {
            Task::SingleShape => {
                if (1..=5).contains(&c) {
                    Ok(c)
                } else {
                    bad(format!("single-shape supports 1..=5 classes, got {c}"))
                }
            }
            Task::PairShape => (2..=5).find(|t| t * t == c).map_or_else(
                || {
                    bad(format!(
                        "pair-shape needs t*t classes for t in 2..=5, got {c}"
                    ))
                },
                Ok,
            ),
            Task::PairRelation => (2..=5).find(|t| t * (t + 1) == c).map_or_else(
                || {
                    bad(format!(
                        "pair-relation needs t*(t+1) classes for t in 2..=5, got {c}"
                    ))
                },
                Ok,
            ),
            Task::PartialContain => {
                if c == 2 {
                    Ok(4)
                } else {
                    bad(format!("partial-contain is binary, got {c} classes"))
                }
            }
        }
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if self.num_samples < self.num_classes {
            return Err(DataError::Spec(format!(
                "num_samples {} < num_classes {}",
                self.num_samples, self.num_classes
            )));
        }
        if !(self.noise >= 0.0) {
            return Err(DataError::Spec(format!(
                "noise must be >= 0, got {}",
                self.noise
            )));
        }
        self.num_templates().map(|_| ())
    }
}

/// splitmix64; decorrelates per-sample sub-seeds.
pub fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn jitter_polygon(p: &Polygon, noise: f64, rng: &mut ChaCha8Rng) -> Polygon {
    let jitter_ring = |r: &Ring, rng: &mut ChaCha8Rng| {
        Ring::new(
            r.vertices
                .iter()
                .map(|v| {
                    let dx = if noise > 0.0 {
                        rng.gen_range(-noise..=noise)
                    } else {
                        0.0
                    };
                    let dy = if noise > 0.0 {
                        rng.gen_range(-noise..=noise)
                    } else {
                        0.0
                    };
                    Point::new(v.x + dx, v.y + dy)
                })
                .collect(),
        )
    };
    let boundary = jitter_ring(&p.boundary, rng);
    let holes = p.holes.iter().map(|h| jitter_ring(h, rng)).collect();
    Polygon::new(boundary, holes)
}

fn similarity(mp: &Multipolygon, scale: f64, angle: f64, shift: Point) -> Multipolygon {
    let (s, c) = angle.sin_cos();
    let map = |p: &Point| {
        let x = p.x * scale;
        let y = p.y * scale;
        Point::new(c * x - s * y + shift.x, s * x + c * y + shift.y)
    };
    let map_ring = |r: &Ring| Ring::new(r.vertices.iter().map(map).collect());
    Multipolygon::new(
        mp.polygons
            .iter()
            .map(|p| {
                Polygon::new(
                    map_ring(&p.boundary),
                    p.holes.iter().map(map_ring).collect(),
                )
            })
            .collect(),
    )
}

const GEN_RETRIES: usize = 64;

/// Jittered, rotated, and scaled instance of a template. Deterministic
/// given (template, noise, seed); invalid jitters retry on a sub-seed.
pub fn gen_shape(template: Template, noise: f64, seed: u64) -> Result<Polygon, DataError> {
    for attempt in 0..GEN_RETRIES {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, attempt as u64));
        let jittered = jitter_polygon(&template.base(), noise, &mut rng);
        let scale = rng.gen_range(0.8..1.2);
        let angle = rng.gen_range(0.0..std::f64::consts::TAU);
        let mp = similarity(
            &Multipolygon::new(vec![jittered]),
            scale,
            angle,
            Point::new(0.0, 0.0),
        );
        if mp.validate().is_ok() {
            return Ok(mp.polygons.into_iter().next().unwrap());
        }
    }
    Err(DataError::GenerationFailed {
        template: template.id(),
        attempts: GEN_RETRIES,
    })
}

fn bbox(mp: &Multipolygon) -> (Point, Point) {
    let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for ring in mp.rings() {
        for v in &ring.vertices {
            lo.x = lo.x.min(v.x);
            lo.y = lo.y.min(v.y);
            hi.x = hi.x.max(v.x);
            hi.y = hi.y.max(v.y);
        }
    }
    (lo, hi)
}

fn translate(mp: &Multipolygon, shift: Point) -> Multipolygon {
    similarity(mp, 1.0, 0.0, shift)
}

/// Place `b` beside `a` with bounding boxes separated by `gap` along the
/// given axis (0 = +x, 1 = +y). Disjoint boxes make interiors disjoint.
fn place_beside(a: &Multipolygon, b: &Multipolygon, axis: usize, gap: f64) -> Multipolygon {
    let (alo, ahi) = bbox(a);
    let (blo, _) = bbox(b);
    let shift = if axis == 0 {
        Point::new(ahi.x - blo.x + gap, alo.y - blo.y)
    } else {
        Point::new(alo.x - blo.x, ahi.y - blo.y + gap)
    };
    let b = translate(b, shift);
    Multipolygon::new(
        a.polygons
            .iter()
            .chain(b.polygons.iter())
            .cloned()
            .collect(),
    )
}

/// Unordered template pairs (a <= b) in lexicographic order.
fn unordered_pairs(t: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for a in 0..t {
        for b in a..t {
            out.push((a, b));
        }
    }
    out
}

fn gen_one(
    spec: &DatasetSpec,
    templates: usize,
    label: usize,
    sub_seed: u64,
) -> Result<LabeledSample, DataError> {
    let noise = spec.noise;
    for attempt in 0..GEN_RETRIES {
        let seed = mix_seed(sub_seed, 0x5eed_0000 + attempt as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mp, template_id) = match spec.task {
            Task::SingleShape => {
                let t = TEMPLATES[label];
                (
                    Multipolygon::new(vec![gen_shape(t, noise, rng.gen())?]),
                    t.id().to_string(),
                )
            }
            Task::PairShape => {
                let (a, b) = (TEMPLATES[label / templates], TEMPLATES[label % templates]);
                let left = Multipolygon::new(vec![gen_shape(a, noise, rng.gen())?]);
                let right = Multipolygon::new(vec![gen_shape(b, noise, rng.gen())?]);
                let gap = rng.gen_range(0.5..1.5);
                (
                    place_beside(&left, &right, 0, gap),
                    format!("{}{}", a.id(), b.id()),
                )
            }
            Task::PairRelation => {
                let pairs = unordered_pairs(templates);
                let (pa, pb) = pairs[label / 2];
                let axis = label % 2; // 0 = second is right-of, 1 = above
                                      // unordered pair: which template leads carries no label
                let (first, second) = if rng.gen::<bool>() {
                    (pa, pb)
                } else {
                    (pb, pa)
                };
                let f = Multipolygon::new(vec![gen_shape(TEMPLATES[first], noise, rng.gen())?]);
                let s = Multipolygon::new(vec![gen_shape(TEMPLATES[second], noise, rng.gen())?]);
                let gap = rng.gen_range(0.5..1.5);
                (
                    place_beside(&f, &s, axis, gap),
                    format!("{}{}", TEMPLATES[pa].id(), TEMPLATES[pb].id()),
                )
            }
            Task::PartialContain => {
                let small_t = TEMPLATES[rng.gen_range(0..4)]; // I, L, T, U
                let big = jitter_polygon(&Template::O.base(), noise, &mut rng);
                let small = jitter_polygon(&small_t.base(), noise, &mut rng);
                let small_mp = Multipolygon::new(vec![small]);
                let combined = if label == 1 {
                    // surrounded: shrink the small shape into O's courtyard
                    let (lo, hi) = bbox(&small_mp);
                    let extent = (hi.x - lo.x).max(hi.y - lo.y);
                    let target = 1.4; // courtyard is 2x2 at noise 0
                    let s = target / extent;
                    let centered = similarity(
                        &small_mp,
                        s,
                        0.0,
                        Point::new(2.0 - s * (lo.x + hi.x) / 2.0, 2.0 - s * (lo.y + hi.y) / 2.0),
                    );
                    Multipolygon::new(
                        std::iter::once(big.clone())
                            .chain(centered.polygons)
                            .collect(),
                    )
                } else {
                    let gap = rng.gen_range(0.5..1.5);
                    place_beside(&Multipolygon::new(vec![big]), &small_mp, 0, gap)
                };
                let scale = rng.gen_range(0.8..1.2);
                let angle = rng.gen_range(0.0..std::f64::consts::TAU);
                (
                    similarity(&combined, scale, angle, Point::new(0.0, 0.0)),
                    format!("O>{}", small_t.id()),
                )
            }
        };
        if mp.validate().is_ok() {
            return Ok(LabeledSample {
                mp,
                label,
                meta: SampleMeta {
                    template: template_id,
                    transform_seed: sub_seed,
                },
            });
        }
    }
    Err(DataError::GenerationFailed {
        template: '?',
        attempts: GEN_RETRIES,
    })
}

/// Balanced dataset: sample i gets label i mod num_classes. Pure function
/// of the spec.
pub fn gen_dataset(spec: &DatasetSpec) -> Result<Vec<LabeledSample>, DataError> {
    spec.validate()?;
    let templates = spec.num_templates()?;
    (0..spec.num_samples)
        .map(|i| {
            gen_one(
                spec,
                templates,
                i % spec.num_classes,
                mix_seed(spec.seed, i as u64),
            )
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Random multipolygons (round-trip and benchmark corpora)
// ---------------------------------------------------------------------------

/// Random star-shaped multipolygon: 1..=max_polys polygons on a coarse grid
/// (guaranteeing disjointness), each with up to 2 holes.
pub fn gen_random_multipolygon(seed: u64, max_polys: usize) -> Result<Multipolygon, DataError> {
    for attempt in 0..GEN_RETRIES {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, attempt as u64));
        let n_polys = rng.gen_range(1..=max_polys.max(1));
        let mut polys = Vec::new();
        for k in 0..n_polys {
            let center = Point::new(8.0 * k as f64, 0.0);
            let boundary = star_ring(&mut rng, center, 1.2, 3.5, 4, 16, true);
            let n_holes = rng.gen_range(0..=2);
            let holes = (0..n_holes)
                .map(|h| {
                    let hc = Point::new(center.x + (h as f64 - 0.5) * 0.9, center.y);
                    star_ring(&mut rng, hc, 0.15, 0.45, 3, 6, false)
                })
                .collect();
            polys.push(Polygon::new(boundary, holes));
        }
        let mp = Multipolygon::new(polys);
        if mp.validate().is_ok() {
            return Ok(mp);
        }
    }
    Err(DataError::GenerationFailed {
        template: '*',
        attempts: GEN_RETRIES,
    })
}

fn star_ring(
    rng: &mut ChaCha8Rng,
    center: Point,
    r_min: f64,
    r_max: f64,
    v_min: usize,
    v_max: usize,
    ccw: bool,
) -> Ring {
    let n = rng.gen_range(v_min..=v_max);
    let mut angles: Vec<f64> = (0..n)
        .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
        .collect();
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let ring = Ring::new(
        angles
            .iter()
            .map(|&a| {
                let r = rng.gen_range(r_min..r_max);
                Point::new(center.x + r * a.cos(), center.y + r * a.sin())
            })
            .collect(),
    );
    if ccw {
        ring
    } else {
        ring.reversed()
    }
}

// ---------------------------------------------------------------------------
// File I/O
// ---------------------------------------------------------------------------

pub fn save_dataset(samples: &[LabeledSample], path: &Path) -> Result<(), DataError> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::io::BufWriter::new(std::fs::File::create(&tmp)?);
        for s in samples {
            let geom: serde_json::Value = serde_json::from_str(&serialize_multipolygon_json(&s.mp))
                .expect("serializer emits valid JSON");
            let line = serde_json::json!({
                "polygons": geom["polygons"],
                "label": s.label,
                "meta": s.meta,
            });
            writeln!(f, "{line}")?;
        }
        f.into_inner().map_err(|e| e.into_error())?.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_dataset(path: &Path) -> Result<Vec<LabeledSample>, DataError> {
    let f = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for (idx, line) in f.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let v: serde_json::Value =
            serde_json::from_str(&line).map_err(|e| DataError::Malformed {
                line: lineno,
                msg: format!("invalid JSON: {e}"),
            })?;
        let label = v
            .get("label")
            .and_then(|l| l.as_u64())
            .ok_or_else(|| DataError::Malformed {
                line: lineno,
                msg: "missing or non-integer `label`".into(),
            })? as usize;
        let meta: SampleMeta = match v.get("meta") {
            Some(m) => serde_json::from_value(m.clone()).map_err(|e| DataError::Malformed {
                line: lineno,
                msg: format!("bad `meta`: {e}"),
            })?,
            None => SampleMeta {
                template: String::new(),
                transform_seed: 0,
            },
        };
        let geom = serde_json::json!({ "polygons": v.get("polygons").cloned().unwrap_or(serde_json::Value::Null) });
        let mp = parse_multipolygon_json(&geom.to_string()).map_err(|e| DataError::Malformed {
            line: lineno,
            msg: e.to_string(),
        })?;
        out.push(LabeledSample { mp, label, meta });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

/// Stratified split: per class, seeded shuffle then partition by the
/// ratios. Every class must have at least 3 samples.
pub fn split(
    samples: &[LabeledSample],
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<(Vec<LabeledSample>, Vec<LabeledSample>, Vec<LabeledSample>), DataError> {
    use rand::seq::SliceRandom;
    let sum = ratios.0 + ratios.1 + ratios.2;
    if (sum - 1.0).abs() > 1e-9 {
        return Err(DataError::Ratios(sum));
    }
    let mut by_label: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for (i, s) in samples.iter().enumerate() {
        by_label.entry(s.label).or_default().push(i);
    }
    let mut train = Vec::new();
    let mut val = Vec::new();
    let mut test = Vec::new();
    for (&label, indices) in &by_label {
        let n = indices.len();
        if n < 3 {
            return Err(DataError::Stratification { label, count: n });
        }
        let mut order = indices.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, label as u64));
        order.shuffle(&mut rng);
        let mut n_train = ((n as f64) * ratios.0).round() as usize;
        let mut n_val = ((n as f64) * ratios.1).round() as usize;
        n_train = n_train.clamp(1, n - 2);
        n_val = n_val.clamp(1, n - n_train - 1);
        for (k, &i) in order.iter().enumerate() {
            if k < n_train {
                train.push(samples[i].clone());
            } else if k < n_train + n_val {
                val.push(samples[i].clone());
            } else {
                test.push(samples[i].clone());
            }
        }
    }
    Ok((train, val, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::signed_area;

    fn spec(task: Task, n: usize, classes: usize) -> DatasetSpec {
        DatasetSpec {
            task,
            num_samples: n,
            num_classes: classes,
            noise: 0.05,
            seed: 42,
        }
    }

    #[test]
    fn template_i_noise_zero_is_rectangle() {
        let p = Template::I.base();
        assert_eq!(p.boundary.vertices.len(), 4);
        assert!(p.holes.is_empty());
        assert!((signed_area(&p.boundary).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn template_o_has_centered_hole() {
        let p = Template::O.base();
        assert_eq!(p.holes.len(), 1);
        assert!(signed_area(&p.holes[0]).unwrap() < 0.0);
        let mp = Multipolygon::new(vec![p]);
        assert_eq!(mp.num_parts(), 2);
        mp.validate().unwrap();
    }

    #[test]
    fn gen_shape_outputs_validate() {
        for (i, &t) in TEMPLATES.iter().enumerate() {
            for seed in 0..10u64 {
                let p = gen_shape(t, 0.08, seed * 31 + i as u64).unwrap();
                Multipolygon::new(vec![p]).validate().unwrap();
            }
        }
    }

    #[test]
    fn single_shape_is_balanced_and_deterministic() {
        let s = spec(Task::SingleShape, 50, 5);
        let a = gen_dataset(&s).unwrap();
        let b = gen_dataset(&s).unwrap();
        assert_eq!(a.len(), 50);
        for c in 0..5 {
            assert_eq!(a.iter().filter(|x| x.label == c).count(), 10);
        }
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.label, y.label);
            assert_eq!(
                serialize_multipolygon_json(&x.mp),
                serialize_multipolygon_json(&y.mp)
            );
        }
    }

    #[test]
    fn pair_shape_has_nine_classes_and_two_parts() {
        let s = spec(Task::PairShape, 27, 9);
        let data = gen_dataset(&s).unwrap();
        let labels: std::collections::BTreeSet<usize> = data.iter().map(|x| x.label).collect();
        assert_eq!(labels.len(), 9);
        for x in &data {
            assert_eq!(x.mp.polygons.len(), 2);
            x.mp.validate().unwrap();
        }
    }

    #[test]
    fn pair_relation_and_partial_contain_validate() {
        for s in [
            spec(Task::PairRelation, 12, 6),
            spec(Task::PartialContain, 12, 2),
        ] {
            let data = gen_dataset(&s).unwrap();
            for x in &data {
                x.mp.validate().unwrap();
            }
        }
        // positives carry the surrounded polygon: 3 parts (O outer, O hole, small)
        let pc = gen_dataset(&spec(Task::PartialContain, 12, 2)).unwrap();
        for x in pc.iter().filter(|x| x.label == 1) {
            assert_eq!(x.mp.num_parts(), 3);
        }
    }

    #[test]
    fn bad_specs_are_rejected() {
        assert!(gen_dataset(&spec(Task::PairShape, 20, 8)).is_err());
        assert!(gen_dataset(&spec(Task::SingleShape, 3, 5)).is_err());
        assert!(gen_dataset(&DatasetSpec {
            noise: -0.1,
            ..spec(Task::SingleShape, 10, 5)
        })
        .is_err());
        assert!(gen_dataset(&spec(Task::PartialContain, 9, 3)).is_err());
    }

    #[test]
    fn save_load_round_trip() {
        let data = gen_dataset(&spec(Task::SingleShape, 10, 5)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.jsonl");
        save_dataset(&data, &path).unwrap();
        let loaded = load_dataset(&path).unwrap();
        assert_eq!(loaded.len(), data.len());
        for (a, b) in data.iter().zip(&loaded) {
            assert_eq!(a.label, b.label);
            assert_eq!(a.meta, b.meta);
            assert_eq!(
                serialize_multipolygon_json(&a.mp),
                serialize_multipolygon_json(&b.mp)
            );
        }
    }

    #[test]
    fn empty_file_loads_empty() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        std::fs::write(&path, "").unwrap();
        assert!(load_dataset(&path).unwrap().is_empty());
    }

    #[test]
    fn missing_label_names_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        let data = gen_dataset(&spec(Task::SingleShape, 2, 2)).unwrap();
        save_dataset(&data, &path).unwrap();
        let mut text = std::fs::read_to_string(&path).unwrap();
        text.push_str("{\"polygons\": []}\n");
        std::fs::write(&path, text).unwrap();
        match load_dataset(&path) {
            Err(DataError::Malformed { line: 3, msg }) => assert!(msg.contains("label")),
            other => panic!("expected line-3 error, got {other:?}"),
        }
    }

    #[test]
    fn split_is_stratified_and_deterministic() {
        let data = gen_dataset(&spec(Task::SingleShape, 100, 5)).unwrap();
        let (tr, va, te) = split(&data, (0.6, 0.2, 0.2), 9).unwrap();
        assert_eq!((tr.len(), va.len(), te.len()), (60, 20, 20));
        for c in 0..5 {
            assert_eq!(tr.iter().filter(|s| s.label == c).count(), 12);
            assert_eq!(va.iter().filter(|s| s.label == c).count(), 4);
        }
        let (tr2, ..) = split(&data, (0.6, 0.2, 0.2), 9).unwrap();
        let key = |v: &[LabeledSample]| v.iter().map(|s| s.meta.transform_seed).collect::<Vec<_>>();
        assert_eq!(key(&tr), key(&tr2));
        // disjointness by provenance seed (unique per sample index)
        let mut all = key(&tr);
        all.extend(key(&va));
        all.extend(key(&te));
        let set: std::collections::BTreeSet<u64> = all.iter().copied().collect();
        assert_eq!(set.len(), 100);
    }

    #[test]
    fn small_class_split_errors() {
        let data = gen_dataset(&spec(Task::SingleShape, 10, 5)).unwrap();
        assert!(matches!(
            split(&data, (0.6, 0.2, 0.2), 0),
            Err(DataError::Stratification { .. })
        ));
    }

    #[test]
    fn random_multipolygons_validate() {
        for seed in 0..30 {
            gen_random_multipolygon(seed, 3)
                .unwrap()
                .validate()
                .unwrap();
        }
    }
}
