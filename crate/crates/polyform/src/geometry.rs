//! Planar geometry for multipolygons: points, rings, orientation and
//! intersection predicates, the visibility predicate, rigid transforms,
//! and WKT/JSON serialization.
//!
//! All computation is double precision. Orientation predicates classify
//! collinearity with a tolerance [`EPS_GEO`] on cross-product magnitudes.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

/// Tolerance on cross-product magnitudes when classifying collinearity.
pub const EPS_GEO: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("ring has {0} vertices, need at least 3")]
    TooFewVertices(usize),
    #[error("consecutive duplicate vertex at index {0}")]
    DuplicateConsecutiveVertex(usize),
    #[error("duplicate vertex: indices {0} and {1} coincide")]
    DuplicateVertex(usize, usize),
    #[error("ring is self-intersecting (segments {0} and {1})")]
    SelfIntersecting(usize, usize),
    #[error("ring has zero signed area")]
    ZeroArea,
    #[error("non-finite coordinate")]
    NonFiniteCoordinate,
    #[error("hole {hole} of polygon {polygon} is not strictly inside its boundary")]
    HoleOutsideBoundary { polygon: usize, hole: usize },
    #[error("holes {0} and {1} are not disjoint")]
    HolesNotDisjoint(usize, usize),
    #[error("polygons {0} and {1} have overlapping interiors")]
    PolygonsOverlap(usize, usize),
    #[error("multipolygon has no polygons")]
    EmptyMultipolygon,
    #[error("visibility query with coincident endpoints")]
    CoincidentEndpoints,
    #[error("parse error: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Closed vertex loop; the edge from the last vertex back to the first is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct Ring {
    pub vertices: Vec<Point>,
}

impl Ring {
    pub fn new(vertices: Vec<Point>) -> Self {
        Ring { vertices }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Boundary segments as vertex pairs, including the closing segment.
    pub fn segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn reversed(&self) -> Ring {
        let mut v = self.vertices.clone();
        v.reverse();
        Ring::new(v)
    }

    /// Rotate the vertex list so it starts at the lexicographically smallest (x, y).
    pub fn rotated_to_min_start(&self) -> Ring {
        let start = self
            .vertices
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                (a.x, a.y)
                    .partial_cmp(&(b.x, b.y))
                    .expect("finite coordinates")
            })
            .map(|(i, _)| i)
            .unwrap_or(0);
        let mut v = Vec::with_capacity(self.vertices.len());
        v.extend_from_slice(&self.vertices[start..]);
        v.extend_from_slice(&self.vertices[..start]);
        Ring::new(v)
    }

    /// Structural validity: length, finiteness, distinct vertices, simplicity, nonzero area.
    pub fn validate(&self) -> Result<(), GeometryError> {
        let n = self.vertices.len();
        if n < 3 {
            return Err(GeometryError::TooFewVertices(n));
        }
        for p in &self.vertices {
            if !p.is_finite() {
                return Err(GeometryError::NonFiniteCoordinate);
            }
        }
        for i in 0..n {
            if self.vertices[i] == self.vertices[(i + 1) % n] {
                return Err(GeometryError::DuplicateConsecutiveVertex(i));
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if self.vertices[i] == self.vertices[j] {
                    return Err(GeometryError::DuplicateVertex(i, j));
                }
            }
        }
        // Segment pairs: non-adjacent pairs must not intersect at all;
        // adjacent pairs must not fold back onto each other.
        for i in 0..n {
            let (a1, a2) = (self.vertices[i], self.vertices[(i + 1) % n]);
            for j in (i + 1)..n {
                let (b1, b2) = (self.vertices[j], self.vertices[(j + 1) % n]);
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    if collinear_overlap(a1, a2, b1, b2) {
                        return Err(GeometryError::SelfIntersecting(i, j));
                    }
                } else if segments_properly_cross(a1, a2, b1, b2)
                    || collinear_overlap(a1, a2, b1, b2)
                {
                    return Err(GeometryError::SelfIntersecting(i, j));
                }
            }
        }
        if signed_area(self)?.abs() <= EPS_GEO {
            return Err(GeometryError::ZeroArea);
        }
        Ok(())
    }
}

/// Exterior boundary (counterclockwise) plus hole rings (clockwise).
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    pub boundary: Ring,
    pub holes: Vec<Ring>,
}

impl Polygon {
    pub fn new(boundary: Ring, holes: Vec<Ring>) -> Self {
        Polygon { boundary, holes }
    }

    pub fn rings(&self) -> impl Iterator<Item = &Ring> {
        std::iter::once(&self.boundary).chain(self.holes.iter())
    }

    pub fn validate(&self, index: usize) -> Result<(), GeometryError> {
        self.boundary.validate()?;
        if signed_area(&self.boundary)? <= 0.0 {
            return Err(GeometryError::Parse(format!(
                "polygon {index}: boundary must be counterclockwise"
            )));
        }
        for (j, hole) in self.holes.iter().enumerate() {
            hole.validate()?;
            if signed_area(hole)? >= 0.0 {
                return Err(GeometryError::Parse(format!(
                    "polygon {index}: hole {j} must be clockwise"
                )));
            }
            for v in &hole.vertices {
                if !point_in_ring(*v, &self.boundary) {
                    return Err(GeometryError::HoleOutsideBoundary {
                        polygon: index,
                        hole: j,
                    });
                }
            }
            if rings_cross(hole, &self.boundary) {
                return Err(GeometryError::HoleOutsideBoundary {
                    polygon: index,
                    hole: j,
                });
            }
        }
        for j in 0..self.holes.len() {
            for k in (j + 1)..self.holes.len() {
                let (a, b) = (&self.holes[j], &self.holes[k]);
                if rings_cross(a, b)
                    || point_in_ring(a.vertices[0], b)
                    || point_in_ring(b.vertices[0], a)
                {
                    return Err(GeometryError::HolesNotDisjoint(j, k));
                }
            }
        }
        Ok(())
    }

    /// True if `p` is in the polygon interior: inside the boundary, outside every hole.
    pub fn contains_interior(&self, p: Point) -> bool {
        point_in_ring(p, &self.boundary) && !self.holes.iter().any(|h| point_in_ring(p, h))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Multipolygon {
    pub polygons: Vec<Polygon>,
}

impl Multipolygon {
    pub fn new(polygons: Vec<Polygon>) -> Self {
        Multipolygon { polygons }
    }

    /// Total part count: exteriors plus holes.
    pub fn num_parts(&self) -> usize {
        self.polygons.iter().map(|p| 1 + p.holes.len()).sum()
    }

    pub fn num_vertices(&self) -> usize {
        self.polygons
            .iter()
            .flat_map(|p| p.rings())
            .map(|r| r.len())
            .sum()
    }

    pub fn rings(&self) -> impl Iterator<Item = &Ring> {
        self.polygons.iter().flat_map(|p| p.rings())
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.polygons.is_empty() {
            return Err(GeometryError::EmptyMultipolygon);
        }
        for (i, p) in self.polygons.iter().enumerate() {
            p.validate(i)?;
        }
        for i in 0..self.polygons.len() {
            for j in (i + 1)..self.polygons.len() {
                let (a, b) = (&self.polygons[i], &self.polygons[j]);
                for (ra, rb) in a.rings().flat_map(|ra| b.rings().map(move |rb| (ra, rb))) {
                    if rings_cross(ra, rb) {
                        return Err(GeometryError::PolygonsOverlap(i, j));
                    }
                }
                // Nesting inside another polygon's interior is overlap;
                // sitting inside a hole is legal.
                if a.contains_interior(b.boundary.vertices[0])
                    || b.contains_interior(a.boundary.vertices[0])
                {
                    return Err(GeometryError::PolygonsOverlap(i, j));
                }
            }
        }
        Ok(())
    }
}

/// Rotation (radians, counterclockwise) followed by translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub angle: f64,
    pub dx: f64,
    pub dy: f64,
}

impl RigidTransform {
    pub fn new(angle: f64, dx: f64, dy: f64) -> Self {
        RigidTransform { angle, dx, dy }
    }

    pub fn identity() -> Self {
        RigidTransform::new(0.0, 0.0, 0.0)
    }

    pub fn apply(&self, p: Point) -> Point {
        let (s, c) = self.angle.sin_cos();
        Point::new(c * p.x - s * p.y + self.dx, s * p.x + c * p.y + self.dy)
    }
}

/// Shoelace signed area; positive iff the ring winds counterclockwise.
pub fn signed_area(ring: &Ring) -> Result<f64, GeometryError> {
    let n = ring.vertices.len();
    if n < 3 {
        return Err(GeometryError::TooFewVertices(n));
    }
    let mut acc = 0.0;
    for i in 0..n {
        let a = ring.vertices[i];
        let b = ring.vertices[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    Ok(acc / 2.0)
}

/// Cross product of (b - a) and (c - a).
pub fn cross(a: Point, b: Point, c: Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Sign of the orientation of (a, b, c) with collinearity tolerance.
pub fn orient(a: Point, b: Point, c: Point) -> i8 {
    let v = cross(a, b, c);
    if v.abs() <= EPS_GEO {
        0
    } else if v > 0.0 {
        1
    } else {
        -1
    }
}

/// True if `p` lies strictly inside the open segment a-b, assuming collinearity.
fn strictly_between(a: Point, b: Point, p: Point) -> bool {
    if p == a || p == b {
        return false;
    }
    let d = (b.x - a.x) * (p.x - a.x) + (b.y - a.y) * (p.y - a.y);
    let len2 = (b.x - a.x).powi(2) + (b.y - a.y).powi(2);
    d > 0.0 && d < len2
}

/// True iff the open interiors of segments a1-a2 and b1-b2 meet, or one
/// segment's interior contains an endpoint of the other. Shared endpoints
/// alone do not count.
pub fn segments_properly_cross(a1: Point, a2: Point, b1: Point, b2: Point) -> bool {
    let o1 = orient(a1, a2, b1);
    let o2 = orient(a1, a2, b2);
    let o3 = orient(b1, b2, a1);
    let o4 = orient(b1, b2, a2);
    if o1 * o2 < 0 && o3 * o4 < 0 {
        return true;
    }
    (o1 == 0 && strictly_between(a1, a2, b1))
        || (o2 == 0 && strictly_between(a1, a2, b2))
        || (o3 == 0 && strictly_between(b1, b2, a1))
        || (o4 == 0 && strictly_between(b1, b2, a2))
}

/// True iff the segments are collinear and share more than a single point.
pub fn collinear_overlap(a1: Point, a2: Point, b1: Point, b2: Point) -> bool {
    if orient(a1, a2, b1) != 0 || orient(a1, a2, b2) != 0 {
        return false;
    }
    // Project onto the dominant axis of a1-a2.
    let (pa1, pa2, pb1, pb2) = if (a2.x - a1.x).abs() >= (a2.y - a1.y).abs() {
        (a1.x, a2.x, b1.x, b2.x)
    } else {
        (a1.y, a2.y, b1.y, b2.y)
    };
    let (alo, ahi) = (pa1.min(pa2), pa1.max(pa2));
    let (blo, bhi) = (pb1.min(pb2), pb1.max(pb2));
    let lo = alo.max(blo);
    let hi = ahi.min(bhi);
    hi - lo > EPS_GEO
}

fn rings_cross(a: &Ring, b: &Ring) -> bool {
    a.segments().any(|(a1, a2)| {
        b.segments().any(|(b1, b2)| {
            segments_properly_cross(a1, a2, b1, b2) || collinear_overlap(a1, a2, b1, b2)
        })
    })
}

/// Ray-cast point-in-ring test (crossing number); points on the boundary
/// classify arbitrarily within EPS_GEO.
pub fn point_in_ring(p: Point, ring: &Ring) -> bool {
    let mut inside = false;
    for (a, b) in ring.segments() {
        if (a.y > p.y) != (b.y > p.y) {
            let x_int = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x_int {
                inside = !inside;
            }
        }
    }
    inside
}

/// Visibility between two vertices of different parts: the open segment p-q
/// must not properly cross any boundary segment, pass through any other
/// vertex, or overlap a boundary segment collinearly.
pub fn visible(p: Point, q: Point, mp: &Multipolygon) -> Result<bool, GeometryError> {
    if p == q {
        return Err(GeometryError::CoincidentEndpoints);
    }
    let min_x = p.x.min(q.x) - EPS_GEO;
    let max_x = p.x.max(q.x) + EPS_GEO;
    let min_y = p.y.min(q.y) - EPS_GEO;
    let max_y = p.y.max(q.y) + EPS_GEO;
    for ring in mp.rings() {
        for (a, b) in ring.segments() {
            // bounding box prefilter
            if a.x.max(b.x) < min_x
                || a.x.min(b.x) > max_x
                || a.y.max(b.y) < min_y
                || a.y.min(b.y) > max_y
            {
                continue;
            }
            if segments_properly_cross(p, q, a, b) || collinear_overlap(p, q, a, b) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

pub fn apply_transform(mp: &Multipolygon, t: &RigidTransform) -> Multipolygon {
    let map_ring = |r: &Ring| Ring::new(r.vertices.iter().map(|p| t.apply(*p)).collect());
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

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct PolygonJson {
    exterior: Vec<[f64; 2]>,
    #[serde(default)]
    holes: Vec<Vec<[f64; 2]>>,
}

/// Normalize ring orientation and drop a duplicated closing vertex.
fn normalize_ring(mut vertices: Vec<Point>, want_ccw: bool) -> Result<Ring, GeometryError> {
    if vertices.len() >= 2 && vertices.first() == vertices.last() {
        vertices.pop();
    }
    let mut ring = Ring::new(vertices);
    let area = signed_area(&ring)?;
    if (area > 0.0) != want_ccw {
        ring = ring.reversed();
    }
    Ok(ring)
}

fn polygon_from_coords(
    exterior: Vec<[f64; 2]>,
    holes: Vec<Vec<[f64; 2]>>,
) -> Result<Polygon, GeometryError> {
    let to_points = |cs: Vec<[f64; 2]>| cs.into_iter().map(|[x, y]| Point::new(x, y)).collect();
    let boundary = normalize_ring(to_points(exterior), true)?;
    let holes = holes
        .into_iter()
        .map(|h| normalize_ring(to_points(h), false))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Polygon::new(boundary, holes))
}

/// Parse the JSON object format: `{"polygons":[{"exterior":[[x,y],...],"holes":[...]}]}`.
pub fn parse_multipolygon_json(text: &str) -> Result<Multipolygon, GeometryError> {
    #[derive(Deserialize)]
    struct Mp {
        polygons: Vec<PolygonJson>,
    }
    let mp: Mp = serde_json::from_str(text)
        .map_err(|e| GeometryError::Parse(format!("invalid JSON: {e}")))?;
    let polygons = mp
        .polygons
        .into_iter()
        .map(|p| polygon_from_coords(p.exterior, p.holes))
        .collect::<Result<Vec<_>, _>>()?;
    let mp = Multipolygon::new(polygons);
    mp.validate()?;
    Ok(mp)
}

pub fn serialize_multipolygon_json(mp: &Multipolygon) -> String {
    let polys: Vec<serde_json::Value> = mp
        .polygons
        .iter()
        .map(|p| {
            let ring_coords = |r: &Ring| {
                r.vertices
                    .iter()
                    .map(|v| vec![v.x, v.y])
                    .collect::<Vec<_>>()
            };
            serde_json::json!({
                "exterior": ring_coords(&p.boundary),
                "holes": p.holes.iter().map(ring_coords).collect::<Vec<_>>(),
            })
        })
        .collect();
    serde_json::json!({ "polygons": polys }).to_string()
}

/// Parse the WKT subset: `MULTIPOLYGON (...)` or `POLYGON (...)`, no EMPTY, no Z/M.
pub fn parse_multipolygon_wkt(text: &str) -> Result<Multipolygon, GeometryError> {
    let s = text.trim();
    let upper = s.to_ascii_uppercase();
    let (tag, rest) = if let Some(rest) = upper.strip_prefix("MULTIPOLYGON") {
        ("MULTIPOLYGON", &s[s.len() - rest.len()..])
    } else if let Some(rest) = upper.strip_prefix("POLYGON") {
        ("POLYGON", &s[s.len() - rest.len()..])
    } else {
        return Err(GeometryError::Parse(
            "expected MULTIPOLYGON or POLYGON".into(),
        ));
    };
    let root = parse_nested_parens(rest.trim())?;
    let polygons_coords: Vec<Vec<Vec<[f64; 2]>>> = if tag == "MULTIPOLYGON" {
        match root {
            WktNode::List(children) => children
                .into_iter()
                .map(parse_polygon_group)
                .collect::<Result<_, _>>()?,
            WktNode::Leaf(_) => {
                return Err(GeometryError::Parse(
                    "MULTIPOLYGON requires doubly nested rings".into(),
                ))
            }
        }
    } else {
        vec![parse_polygon_group(root)?]
    };
    let polygons = polygons_coords
        .into_iter()
        .map(|mut rings| {
            if rings.is_empty() {
                return Err(GeometryError::Parse("polygon with no rings".into()));
            }
            let exterior = rings.remove(0);
            polygon_from_coords(exterior, rings)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mp = Multipolygon::new(polygons);
    mp.validate()?;
    Ok(mp)
}

/// Minimal recursive structure for WKT parenthes nesting: a node is either a
/// coordinate list leaf or a list of children.
#[derive(Debug)]
enum WktNode {
    Leaf(String),
    List(Vec<WktNode>),
}

fn parse_nested_parens(s: &str) -> Result<WktNode, GeometryError> {
    let bytes = s.as_bytes();
    if bytes.is_empty() || bytes[0] != b'(' {
        return Err(GeometryError::Parse("expected '('".into()));
    }
    let (node, consumed) = parse_node(s)?;
    if s[consumed..].trim() != "" {
        return Err(GeometryError::Parse("trailing characters after WKT".into()));
    }
    Ok(node)
}

fn parse_node(s: &str) -> Result<(WktNode, usize), GeometryError> {
    debug_assert!(s.starts_with('('));
    let inner_start = 1;
    let trimmed = s[inner_start..].trim_start();
    let offset = s.len() - trimmed.len();
    if trimmed.starts_with('(') {
        let mut children = Vec::new();
        let mut pos = offset;
        loop {
            let (child, used) = parse_node(&s[pos..])?;
            children.push(child);
            pos += used;
            let rest = s[pos..].trim_start();
            pos = s.len() - rest.len();
            if let Some(r) = rest.strip_prefix(',') {
                let r2 = r.trim_start();
                pos = s.len() - r2.len();
            } else if rest.starts_with(')') {
                return Ok((WktNode::List(children), pos + 1));
            } else {
                return Err(GeometryError::Parse("expected ',' or ')'".into()));
            }
        }
    } else {
        match s[inner_start..].find(')') {
            Some(end) => {
                let leaf = s[inner_start..inner_start + end].to_string();
                Ok((WktNode::Leaf(leaf), inner_start + end + 1))
            }
            None => Err(GeometryError::Parse("unbalanced parentheses".into())),
        }
    }
}

fn parse_coord_list(leaf: &str) -> Result<Vec<[f64; 2]>, GeometryError> {
    leaf.split(',')
        .map(|pair| {
            let nums: Vec<&str> = pair.split_whitespace().collect();
            if nums.len() != 2 {
                return Err(GeometryError::Parse(format!(
                    "expected 'x y' coordinate, got '{}'",
                    pair.trim()
                )));
            }
            let x = nums[0]
                .parse::<f64>()
                .map_err(|e| GeometryError::Parse(format!("bad number '{}': {e}", nums[0])))?;
            let y = nums[1]
                .parse::<f64>()
                .map_err(|e| GeometryError::Parse(format!("bad number '{}': {e}", nums[1])))?;
            Ok([x, y])
        })
        .collect()
}

fn parse_polygon_group(node: WktNode) -> Result<Vec<Vec<[f64; 2]>>, GeometryError> {
    match node {
        WktNode::List(children) => children
            .into_iter()
            .map(|c| match c {
                WktNode::Leaf(leaf) => parse_coord_list(&leaf),
                WktNode::List(_) => Err(GeometryError::Parse("unexpected nesting depth".into())),
            })
            .collect(),
        WktNode::Leaf(leaf) => Ok(vec![parse_coord_list(&leaf)?]),
    }
}

/// Detect format (JSON object vs WKT) and parse.
pub fn parse_multipolygon(text: &str) -> Result<Multipolygon, GeometryError> {
    let t = text.trim_start();
    if t.starts_with('{') {
        parse_multipolygon_json(text)
    } else {
        parse_multipolygon_wkt(text)
    }
}

pub fn serialize_multipolygon_wkt(mp: &Multipolygon) -> String {
    let mut out = String::from("MULTIPOLYGON (");
    for (i, p) in mp.polygons.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push('(');
        for (j, ring) in p.rings().enumerate() {
            if j > 0 {
                out.push_str(", ");
            }
            out.push('(');
            for v in ring
                .vertices
                .iter()
                .chain(std::iter::once(&ring.vertices[0]))
            {
                if !out.ends_with('(') {
                    out.push_str(", ");
                }
                let _ = write!(out, "{} {}", v.x, v.y);
            }
            out.push(')');
        }
        out.push(')');
    }
    out.push(')');
    out
}
