//! Detection-file ingestion: per-image regions with center-format boxes
//! `[cx, cy, w, h]`, a category id, and one feature vector per region.

use relgat::encoder::RegionFeatureSet;
use relgat::geometry::DetectedObject;
use relgat::numerics::Matrix;
use serde::Deserialize;
use std::path::Path;

pub const DETECTION_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
pub struct DetectionFile {
    pub format_version: u32,
    pub image_id: String,
    pub image_width: f64,
    pub image_height: f64,
    pub regions: Vec<Region>,
}

#[derive(Debug, Deserialize)]
pub struct Region {
    /// Center-format box: `[cx, cy, w, h]`.
    pub bbox: [f64; 4],
    pub category: i64,
    pub feature: Vec<f64>,
}

impl DetectionFile {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let file: DetectionFile = serde_json::from_str(&text)
            .map_err(|e| format!("{}: {e}", path.display()))?;
        file.validate().map_err(|e| format!("{}: {e}", path.display()))?;
        Ok(file)
    }

    fn validate(&self) -> Result<(), String> {
        if self.format_version != DETECTION_FORMAT_VERSION {
            return Err(format!(
                "format_version {} unsupported, expected {DETECTION_FORMAT_VERSION}",
                self.format_version
            ));
        }
        if !(self.image_width > 0.0 && self.image_height > 0.0) {
            return Err("image_width and image_height must be positive".to_string());
        }
        if self.regions.is_empty() {
            return Err("regions must be non-empty".to_string());
        }
        let d = self.regions[0].feature.len();
        if d == 0 {
            return Err("feature vectors must be non-empty".to_string());
        }
        for (i, r) in self.regions.iter().enumerate() {
            if r.feature.len() != d {
                return Err(format!(
                    "regions[{i}].feature has length {}, expected {d} (all regions share one dimension)",
                    r.feature.len()
                ));
            }
            if r.feature.iter().any(|v| !v.is_finite()) {
                return Err(format!("regions[{i}].feature contains a non-finite value"));
            }
            let [cx, cy, w, h] = r.bbox;
            DetectedObject::new(cx, cy, w, h, r.category)
                .map_err(|e| format!("regions[{i}].bbox: {e}"))?;
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.regions.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.regions[0].feature.len()
    }

    pub fn image_diag(&self) -> f64 {
        self.image_width.hypot(self.image_height)
    }

    pub fn objects(&self) -> Vec<DetectedObject> {
        self.regions
            .iter()
            .map(|r| {
                let [cx, cy, w, h] = r.bbox;
                DetectedObject::new(cx, cy, w, h, r.category).expect("validated on load")
            })
            .collect()
    }

    pub fn features(&self) -> RegionFeatureSet {
        let d = self.feature_dim();
        let mut m = Matrix::zeros(self.n(), d);
        for (i, r) in self.regions.iter().enumerate() {
            m.row_mut(i).copy_from_slice(&r.feature);
        }
        RegionFeatureSet::new(m).expect("validated on load")
    }
}
