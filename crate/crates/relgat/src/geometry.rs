//! Bounding-box math, the 4-d relative geometry feature with its sinusoidal
//! embedding, and the rule-based spatial-relationship classifier.
//!
//! Boxes are center-format: `(cx, cy, w, h)` with `w, h > 0`. Spatial labels
//! form a closed set under complement: `inside <-> cover`,
//! `overlap <-> overlap`, and each angular octant maps to the octant 180
//! degrees away.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Clamp applied to `|dx|`, `|dy|` before taking logs; the raw formula is
/// undefined at zero offset.
pub const GEOMETRY_EPS: f64 = 1e-3;

/// Wavelength base of the sinusoidal embedding.
pub const EMBED_BASE: f64 = 1000.0;

/// Category sentinel carried by synthetic boxes such as union boxes.
pub const UNION_CATEGORY: i64 = -1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("box width/height must be positive, got w={w}, h={h}")]
    NonPositiveSize { w: f64, h: f64 },
    #[error("box fields must be finite")]
    NonFinite,
    #[error("embedding width must be a positive multiple of 8, got {0}")]
    BadEmbedWidth(usize),
    #[error("no-relation has no complement label")]
    NoRelationComplement,
}

/// One detected region: box center, size, and category label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectedObject {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
    pub category: i64,
}

impl DetectedObject {
    pub fn new(cx: f64, cy: f64, w: f64, h: f64, category: i64) -> Result<Self, GeometryError> {
        if !(cx.is_finite() && cy.is_finite() && w.is_finite() && h.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if !(w > 0.0 && h > 0.0) {
            return Err(GeometryError::NonPositiveSize { w, h });
        }
        Ok(DetectedObject { cx, cy, w, h, category })
    }

    pub fn x0(&self) -> f64 {
        self.cx - self.w / 2.0
    }

    pub fn x1(&self) -> f64 {
        self.cx + self.w / 2.0
    }

    pub fn y0(&self) -> f64 {
        self.cy - self.h / 2.0
    }

    pub fn y1(&self) -> f64 {
        self.cy + self.h / 2.0
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    /// Strict containment of `self`'s extent inside `other`'s extent.
    pub fn strictly_inside(&self, other: &DetectedObject) -> bool {
        self.x0() > other.x0() && self.x1() < other.x1() && self.y0() > other.y0() && self.y1() < other.y1()
    }
}

/// The 4-d relative geometry feature `(log |dx|/w_i, log |dy|/h_i,
/// log w_j/w_i, log h_j/h_i)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryFeature(pub [f64; 4]);

impl GeometryFeature {
    pub fn values(&self) -> &[f64; 4] {
        &self.0
    }
}

/// Spatial relationship label. `class_id` 0 is no-relation, 1 inside,
/// 2 cover, 3 overlap, 4..=11 angular octants centered at `45 * k` degrees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpatialLabel {
    NoRelation,
    Inside,
    Cover,
    Overlap,
    /// Octant index 0..=7, centered at `45 * index` degrees.
    Octant(u8),
}

impl SpatialLabel {
    pub fn class_id(&self) -> u8 {
        match self {
            SpatialLabel::NoRelation => 0,
            SpatialLabel::Inside => 1,
            SpatialLabel::Cover => 2,
            SpatialLabel::Overlap => 3,
            SpatialLabel::Octant(k) => 4 + k,
        }
    }

    pub fn from_class_id(id: u8) -> Option<SpatialLabel> {
        match id {
            0 => Some(SpatialLabel::NoRelation),
            1 => Some(SpatialLabel::Inside),
            2 => Some(SpatialLabel::Cover),
            3 => Some(SpatialLabel::Overlap),
            4..=11 => Some(SpatialLabel::Octant(id - 4)),
            _ => None,
        }
    }

    pub fn name(&self) -> String {
        match self {
            SpatialLabel::NoRelation => "no_relation".to_string(),
            SpatialLabel::Inside => "inside".to_string(),
            SpatialLabel::Cover => "cover".to_string(),
            SpatialLabel::Overlap => "overlap".to_string(),
            SpatialLabel::Octant(k) => format!("octant_{k}"),
        }
    }

    /// All labels that can appear on a spatial edge (everything except
    /// no-relation), in ascending class-id order.
    pub fn edge_labels() -> Vec<SpatialLabel> {
        let mut v = vec![SpatialLabel::Inside, SpatialLabel::Cover, SpatialLabel::Overlap];
        v.extend((0..8).map(SpatialLabel::Octant));
        v
    }
}

/// Thresholds of the rule-based spatial classifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialRules {
    /// Minimum IoU for the overlap class.
    pub iou_threshold: f64,
    /// Maximum centroid distance, as a fraction of the image diagonal,
    /// for an angular-octant relation.
    pub distance_ratio: f64,
}

impl Default for SpatialRules {
    fn default() -> Self {
        SpatialRules { iou_threshold: 0.5, distance_ratio: 0.5 }
    }
}

/// Intersection-over-union of two boxes; 0 when disjoint, symmetric.
pub fn iou(a: &DetectedObject, b: &DetectedObject) -> f64 {
    let ix = (a.x1().min(b.x1()) - a.x0().max(b.x0())).max(0.0);
    let iy = (a.y1().min(b.y1()) - a.y0().max(b.y0())).max(0.0);
    let inter = ix * iy;
    let union = a.area() + b.area() - inter;
    inter / union
}

/// Smallest axis-aligned box covering both inputs; category is the union
/// sentinel.
pub fn union_box(a: &DetectedObject, b: &DetectedObject) -> DetectedObject {
    let x0 = a.x0().min(b.x0());
    let x1 = a.x1().max(b.x1());
    let y0 = a.y0().min(b.y0());
    let y1 = a.y1().max(b.y1());
    DetectedObject {
        cx: (x0 + x1) / 2.0,
        cy: (y0 + y1) / 2.0,
        w: x1 - x0,
        h: y1 - y0,
        category: UNION_CATEGORY,
    }
}

/// 4-d relative geometry feature of the ordered pair `(o_i, o_j)`, with
/// `|dx|`, `|dy|` clamped to [`GEOMETRY_EPS`] before the log.
pub fn geometry_feature(o_i: &DetectedObject, o_j: &DetectedObject) -> GeometryFeature {
    let dx = (o_i.cx - o_j.cx).abs().max(GEOMETRY_EPS);
    let dy = (o_i.cy - o_j.cy).abs().max(GEOMETRY_EPS);
    GeometryFeature([
        (dx / o_i.w).ln(),
        (dy / o_i.h).ln(),
        (o_j.w / o_i.w).ln(),
        (o_j.h / o_i.h).ln(),
    ])
}

/// Projects the 4-d geometry feature to `d_g` dimensions via sine/cosine at
/// wavelengths `EMBED_BASE^(8k/d_g)`, ordered (component, wavelength,
/// sin-then-cos).
pub fn sinusoidal_embed(g: &GeometryFeature, d_g: usize) -> Result<Vec<f64>, GeometryError> {
    if d_g == 0 || d_g % 8 != 0 {
        return Err(GeometryError::BadEmbedWidth(d_g));
    }
    let pairs = d_g / 8;
    let mut out = Vec::with_capacity(d_g);
    for &component in g.values() {
        for k in 0..pairs {
            let wavelength = EMBED_BASE.powf(8.0 * k as f64 / d_g as f64);
            let phase = component / wavelength;
            out.push(phase.sin());
            out.push(phase.cos());
        }
    }
    Ok(out)
}

/// Octant index (0..=7) of an angle in degrees; boundaries fall at
/// `22.5 + 45k` and exact boundary hits resolve to the octant with the
/// lower class id.
fn octant_of_angle(theta_deg: f64) -> u8 {
    let t = (theta_deg + 22.5).rem_euclid(360.0);
    let q = t / 45.0;
    let fl = q.floor();
    if q == fl {
        // exact boundary: t = 45m; m = 0 can only come from theta = 337.5
        let m = fl as i64;
        if m == 0 {
            0
        } else {
            (m - 1) as u8
        }
    } else {
        (fl as i64).rem_euclid(8) as u8
    }
}

/// Classifies the ordered pair `(o_i, o_j)` with the default rule
/// thresholds. See [`spatial_classify_with`].
pub fn spatial_classify(o_i: &DetectedObject, o_j: &DetectedObject, image_diag: f64) -> SpatialLabel {
    spatial_classify_with(&SpatialRules::default(), o_i, o_j, image_diag)
}

/// Rule order: strict containment of i in j (inside), of j in i (cover),
/// IoU at or above the threshold (overlap), centroid distance within
/// `distance_ratio * image_diag` (angular octant of the i-to-j vector),
/// else no-relation.
///
/// When both centers coincide exactly the octant angle is undefined; the
/// pair is broken lexicographically on `(w, h)` so that the two directions
/// stay complements of each other.
pub fn spatial_classify_with(
    rules: &SpatialRules,
    o_i: &DetectedObject,
    o_j: &DetectedObject,
    image_diag: f64,
) -> SpatialLabel {
    assert!(image_diag > 0.0, "image diagonal must be positive");
    if o_i.strictly_inside(o_j) {
        return SpatialLabel::Inside;
    }
    if o_j.strictly_inside(o_i) {
        return SpatialLabel::Cover;
    }
    if iou(o_i, o_j) >= rules.iou_threshold {
        return SpatialLabel::Overlap;
    }
    let dx = o_j.cx - o_i.cx;
    let dy = o_j.cy - o_i.cy;
    let dist = dx.hypot(dy);
    if dist <= rules.distance_ratio * image_diag {
        if dx == 0.0 && dy == 0.0 {
            let smaller = (o_i.w, o_i.h) <= (o_j.w, o_j.h);
            return SpatialLabel::Octant(if smaller { 0 } else { 4 });
        }
        let theta = dy.atan2(dx).to_degrees().rem_euclid(360.0);
        return SpatialLabel::Octant(octant_of_angle(theta));
    }
    SpatialLabel::NoRelation
}

/// Label carried by the mirror edge: inside <-> cover, overlap self-paired,
/// octants rotated by 180 degrees. No-relation has no complement.
pub fn complement_label(c: SpatialLabel) -> Result<SpatialLabel, GeometryError> {
    match c {
        SpatialLabel::NoRelation => Err(GeometryError::NoRelationComplement),
        SpatialLabel::Inside => Ok(SpatialLabel::Cover),
        SpatialLabel::Cover => Ok(SpatialLabel::Inside),
        SpatialLabel::Overlap => Ok(SpatialLabel::Overlap),
        SpatialLabel::Octant(k) => Ok(SpatialLabel::Octant((k + 4) % 8)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obj(cx: f64, cy: f64, w: f64, h: f64) -> DetectedObject {
        DetectedObject::new(cx, cy, w, h, 0).unwrap()
    }

    #[test]
    fn rejects_degenerate_boxes() {
        assert!(DetectedObject::new(0.0, 0.0, 0.0, 1.0, 0).is_err());
        assert!(DetectedObject::new(0.0, 0.0, 1.0, -2.0, 0).is_err());
        assert!(DetectedObject::new(f64::NAN, 0.0, 1.0, 1.0, 0).is_err());
    }

    #[test]
    fn iou_identical_is_one() {
        let a = obj(5.0, 5.0, 10.0, 10.0);
        assert_eq!(iou(&a, &a), 1.0);
    }

    #[test]
    fn iou_half_shift_is_one_third() {
        let a = obj(5.0, 5.0, 10.0, 10.0);
        let b = obj(10.0, 5.0, 10.0, 10.0);
        assert!((iou(&a, &b) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(iou(&a, &b), iou(&b, &a));
    }

    #[test]
    fn iou_disjoint_is_zero() {
        let a = obj(0.0, 0.0, 2.0, 2.0);
        let b = obj(100.0, 100.0, 2.0, 2.0);
        assert_eq!(iou(&a, &b), 0.0);
    }

    #[test]
    fn union_box_contains_both() {
        let a = obj(5.0, 5.0, 10.0, 10.0);
        let b = obj(25.0, 25.0, 10.0, 10.0);
        let u = union_box(&a, &b);
        assert_eq!((u.cx, u.cy, u.w, u.h), (15.0, 15.0, 30.0, 30.0));
        assert_eq!(u.category, UNION_CATEGORY);

        let inner = obj(5.0, 5.0, 2.0, 2.0);
        let outer = obj(5.0, 5.0, 10.0, 10.0);
        let u2 = union_box(&inner, &outer);
        assert_eq!((u2.cx, u2.cy, u2.w, u2.h), (5.0, 5.0, 10.0, 10.0));

        let same = union_box(&a, &a);
        assert_eq!((same.cx, same.cy, same.w, same.h), (a.cx, a.cy, a.w, a.h));
    }

    #[test]
    fn geometry_feature_hand_computed() {
        let a = obj(5.0, 5.0, 10.0, 10.0);
        let b = obj(15.0, 15.0, 20.0, 20.0);
        let g = geometry_feature(&a, &b);
        assert_eq!(g.0[0], 0.0);
        assert_eq!(g.0[1], 0.0);
        assert!((g.0[2] - 2.0_f64.ln()).abs() < 1e-15);
        assert!((g.0[3] - 2.0_f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn geometry_feature_zero_offset_clamps() {
        let a = obj(5.0, 5.0, 10.0, 20.0);
        let g = geometry_feature(&a, &a);
        assert_eq!(g.0[0], (GEOMETRY_EPS / 10.0).ln());
        assert_eq!(g.0[1], (GEOMETRY_EPS / 20.0).ln());
        assert_eq!(g.0[2], 0.0);
        assert_eq!(g.0[3], 0.0);
    }

    #[test]
    fn geometry_feature_translation_scale_invariant() {
        let a = obj(12.0, 30.0, 8.0, 6.0);
        let b = obj(40.0, 18.0, 14.0, 10.0);
        let g0 = geometry_feature(&a, &b);
        let (s, tx, ty) = (3.5, 120.0, -45.0);
        let at = obj(s * a.cx + tx, s * a.cy + ty, s * a.w, s * a.h);
        let bt = obj(s * b.cx + tx, s * b.cy + ty, s * b.w, s * b.h);
        let g1 = geometry_feature(&at, &bt);
        for m in 0..4 {
            assert!((g0.0[m] - g1.0[m]).abs() < 1e-12, "component {m}");
        }
    }

    #[test]
    fn sinusoidal_embed_zero_feature() {
        let g = GeometryFeature([0.0; 4]);
        let e = sinusoidal_embed(&g, 8).unwrap();
        assert_eq!(e, vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn sinusoidal_embed_quarter_turn() {
        let g = GeometryFeature([std::f64::consts::FRAC_PI_2, 0.0, 0.0, 0.0]);
        let e = sinusoidal_embed(&g, 8).unwrap();
        assert_eq!(e[0], 1.0);
        assert!(e[1].abs() < 1e-16, "cos(pi/2) = {}", e[1]);
    }

    #[test]
    fn sinusoidal_embed_bounded_and_sized() {
        let g = GeometryFeature([3.7, -12.0, 0.4, 9.9]);
        for d_g in [8usize, 16, 64] {
            let e = sinusoidal_embed(&g, d_g).unwrap();
            assert_eq!(e.len(), d_g);
            assert!(e.iter().all(|v| (-1.0..=1.0).contains(v)));
        }
        assert!(sinusoidal_embed(&g, 12).is_err());
        assert!(sinusoidal_embed(&g, 0).is_err());
    }

    #[test]
    fn classify_inside_and_cover() {
        let small = obj(50.0, 50.0, 20.0, 20.0);
        let big = obj(50.0, 50.0, 100.0, 100.0);
        let diag = 200.0_f64.hypot(200.0);
        assert_eq!(spatial_classify(&small, &big, diag), SpatialLabel::Inside);
        assert_eq!(spatial_classify(&big, &small, diag), SpatialLabel::Cover);
    }

    #[test]
    fn classify_identical_boxes_overlap_both_ways() {
        let a = obj(30.0, 40.0, 12.0, 9.0);
        let diag = 500.0;
        assert_eq!(spatial_classify(&a, &a, diag), SpatialLabel::Overlap);
    }

    #[test]
    fn classify_distant_boxes_no_relation() {
        let a = obj(10.0, 10.0, 5.0, 5.0);
        let b = obj(190.0, 190.0, 5.0, 5.0);
        let diag = 200.0_f64.hypot(200.0);
        assert_eq!(spatial_classify(&a, &b, diag), SpatialLabel::NoRelation);
        assert_eq!(spatial_classify(&b, &a, diag), SpatialLabel::NoRelation);
    }

    #[test]
    fn classify_octants_by_direction() {
        let center = obj(100.0, 100.0, 5.0, 5.0);
        let diag = 1000.0;
        let east = obj(150.0, 100.0, 5.0, 5.0);
        let northeast = obj(150.0, 150.0, 5.0, 5.0);
        let west = obj(50.0, 100.0, 5.0, 5.0);
        assert_eq!(spatial_classify(&center, &east, diag), SpatialLabel::Octant(0));
        assert_eq!(spatial_classify(&center, &northeast, diag), SpatialLabel::Octant(1));
        assert_eq!(spatial_classify(&center, &west, diag), SpatialLabel::Octant(4));
    }

    #[test]
    fn classify_coincident_centers_stays_complementary() {
        // cross shape: neither contains the other, IoU well below 0.5
        let tall = obj(50.0, 50.0, 2.0, 40.0);
        let wide = obj(50.0, 50.0, 40.0, 2.0);
        let diag = 200.0;
        let ij = spatial_classify(&tall, &wide, diag);
        let ji = spatial_classify(&wide, &tall, diag);
        assert_eq!(complement_label(ij).unwrap(), ji);
    }

    #[test]
    fn octant_boundary_ties_take_lower_class() {
        assert_eq!(octant_of_angle(22.5), 0);
        assert_eq!(octant_of_angle(67.5), 1);
        assert_eq!(octant_of_angle(337.5), 0);
        assert_eq!(octant_of_angle(0.0), 0);
        assert_eq!(octant_of_angle(44.9), 1);
    }

    #[test]
    fn complement_is_involution_on_edge_labels() {
        for label in SpatialLabel::edge_labels() {
            let c = complement_label(label).unwrap();
            assert_eq!(complement_label(c).unwrap(), label);
        }
        assert_eq!(complement_label(SpatialLabel::Inside).unwrap(), SpatialLabel::Cover);
        assert_eq!(complement_label(SpatialLabel::Overlap).unwrap(), SpatialLabel::Overlap);
        assert_eq!(complement_label(SpatialLabel::Octant(1)).unwrap(), SpatialLabel::Octant(5));
        assert!(complement_label(SpatialLabel::NoRelation).is_err());
    }

    #[test]
    fn class_ids_round_trip() {
        for id in 0..=11u8 {
            let label = SpatialLabel::from_class_id(id).unwrap();
            assert_eq!(label.class_id(), id);
        }
        assert!(SpatialLabel::from_class_id(12).is_none());
    }
}
