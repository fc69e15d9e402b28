//! X3D scenes of semitransparent voxels.
//!
//! Every grid node becomes a `Transform/Shape/Box` whose material color comes
//! from a blue (cold) to red (hot) ramp. Numbers are printed with exactly six
//! decimals, so identical inputs give identical bytes.

use std::fmt::Write as _;

use crate::solver::{lattice_coord, VolumeGrid};
use crate::{Error, Result};

pub const DEFAULT_TRANSPARENCY: f64 = 0.85;
/// Box edge as a fraction of the lattice spacing.
pub const FILL_FACTOR: f64 = 0.9;
pub const DEFAULT_HTML_TITLE: &str = "voxfield scene";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColorMode {
    BlueRed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transparency {
    Constant(f64),
    /// `t_max` for the coldest voxel down to `t_min` for the hottest.
    ValueWeighted {
        t_min: f64,
        t_max: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColorMapSpec {
    /// Pinned `(v_min, v_max)` in field units; `None` uses each volume's range.
    range: Option<(f64, f64)>,
    mode: ColorMode,
    transparency: Transparency,
}

impl Default for ColorMapSpec {
    fn default() -> Self {
        Self { range: None, mode: ColorMode::BlueRed, transparency: Transparency::Constant(DEFAULT_TRANSPARENCY) }
    }
}

impl ColorMapSpec {
    pub fn new(range: Option<(f64, f64)>, transparency: Transparency) -> Result<Self> {
        if let Some((lo, hi)) = range {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(Error::InvalidArgument(format!("color range ({lo}, {hi}) must satisfy max > min")));
            }
        }
        let unit = |t: f64| (0.0..=1.0).contains(&t);
        let ok = match transparency {
            Transparency::Constant(t) => unit(t),
            Transparency::ValueWeighted { t_min, t_max } => unit(t_min) && unit(t_max),
        };
        if !ok {
            return Err(Error::InvalidArgument("transparency values must lie in [0, 1]".into()));
        }
        Ok(Self { range, mode: ColorMode::BlueRed, transparency })
    }

    pub fn range(&self) -> Option<(f64, f64)> {
        self.range
    }

    pub fn mode(&self) -> ColorMode {
        self.mode
    }

    pub fn transparency(&self) -> Transparency {
        self.transparency
    }

    fn alpha(&self, v: f64) -> f64 {
        match self.transparency {
            Transparency::Constant(t) => t,
            Transparency::ValueWeighted { t_min, t_max } => t_max - (t_max - t_min) * v,
        }
    }
}

/// Blue-red ramp: `(v, 0, 1 - v)` after clamping `v` to `[0, 1]`.
pub fn map_color(v: f64) -> [f64; 3] {
    let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
    [v, 0.0, 1.0 - v]
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedVolume {
    pub values: Vec<f64>,
    pub used_min: f64,
    pub used_max: f64,
}

/// Rescales values into `[0, 1]` with the pinned or the volume's own range.
/// A constant volume maps to 0.5 with the range `(value - 0.5, value + 0.5)`.
pub fn normalize_volume(volume: &VolumeGrid, spec: &ColorMapSpec) -> NormalizedVolume {
    let (lo, hi) = spec.range.unwrap_or((volume.min(), volume.max()));
    if hi <= lo {
        return NormalizedVolume { values: vec![0.5; volume.values().len()], used_min: lo - 0.5, used_max: lo + 0.5 };
    }
    NormalizedVolume {
        values: volume.values().iter().map(|u| ((u - lo) / (hi - lo)).clamp(0.0, 1.0)).collect(),
        used_min: lo,
        used_max: hi,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct X3DDocument {
    pub text: String,
    pub shape_count: usize,
    pub source_grid_n: usize,
}

fn escape_xml(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

/// Serializes the volume as one box per grid node, `(k, j, i)` order with `i`
/// fastest.
pub fn emit_x3d(volume: &VolumeGrid, spec: &ColorMapSpec) -> X3DDocument {
    let n = volume.n();
    let norm = normalize_volume(volume, spec);
    let size = FILL_FACTOR / (n - 1) as f64;
    let field = volume.field();
    let field_label = match field.compound_label() {
        Some(c) => format!("{} {} {}", field.name().as_str(), c, field.unit()),
        None => format!("{} {}", field.name().as_str(), field.unit()),
    };

    let mut s = String::with_capacity(200 * n * n * n + 1024);
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s.push_str(
        "<!DOCTYPE X3D PUBLIC \"ISO//Web3D//DTD X3D 3.3//EN\" \"http://www.web3d.org/specifications/x3d-3.3.dtd\">\n",
    );
    s.push_str("<X3D profile=\"Interchange\" version=\"3.3\">\n");
    s.push_str("<head>\n");
    s.push_str("<meta name=\"generator\" content=\"voxfield\"/>\n");
    let _ = writeln!(s, "<meta name=\"field\" content=\"{}\"/>", escape_xml(&field_label));
    let _ = writeln!(s, "<meta name=\"range\" content=\"{:.6} {:.6}\"/>", norm.used_min, norm.used_max);
    s.push_str("</head>\n");
    s.push_str("<Scene>\n");
    s.push_str("<Viewpoint description=\"overview\" position=\"0.500000 0.500000 3.000000\"/>\n");
    for (idx, v) in norm.values.iter().enumerate() {
        let (i, j, k) = (idx % n, (idx / n) % n, idx / (n * n));
        let [r, g, b] = map_color(*v);
        let _ = writeln!(
            s,
            "<Transform translation=\"{:.6} {:.6} {:.6}\"><Shape><Appearance>\
             <Material diffuseColor=\"{r:.6} {g:.6} {b:.6}\" transparency=\"{:.6}\"/>\
             </Appearance><Box size=\"{size:.6} {size:.6} {size:.6}\"/></Shape></Transform>",
            lattice_coord(n, i),
            lattice_coord(n, j),
            lattice_coord(n, k),
            spec.alpha(*v),
        );
    }
    s.push_str("</Scene>\n");
    s.push_str("</X3D>\n");
    X3DDocument { text: s, shape_count: n * n * n, source_grid_n: n }
}

/// Static page embedding the scene for an X3DOM-capable browser. The
/// document is inserted verbatim from its `<X3D` root element on.
pub fn emit_html_wrapper(doc: &X3DDocument, title: &str) -> String {
    let title = if title.trim().is_empty() { DEFAULT_HTML_TITLE } else { title };
    let scene = doc.text.find("<X3D").map_or(doc.text.as_str(), |at| &doc.text[at..]);
    let mut s = String::with_capacity(scene.len() + 1024);
    s.push_str("<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n");
    let _ = writeln!(s, "<title>{}</title>", escape_xml(title));
    s.push_str("<script src=\"https://www.x3dom.org/download/x3dom.js\"></script>\n");
    s.push_str("<link rel=\"stylesheet\" href=\"https://www.x3dom.org/download/x3dom.css\">\n");
    s.push_str("<style>x3d, X3D { width: 100%; height: 90vh; }</style>\n");
    s.push_str("</head>\n<body>\n");
    s.push_str(scene);
    s.push_str("</body>\n</html>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldKind;
    use crate::solver::Provenance;

    fn volume(n: usize, f: impl Fn([f64; 3]) -> f64) -> VolumeGrid {
        VolumeGrid::from_fn(n, FieldKind::temperature(), Provenance::Predefined, f).unwrap()
    }

    #[test]
    fn colormap_endpoints() {
        assert_eq!(map_color(0.0), [0.0, 0.0, 1.0]);
        assert_eq!(map_color(1.0), [1.0, 0.0, 0.0]);
        assert_eq!(map_color(0.5), [0.5, 0.0, 0.5]);
        assert_eq!(map_color(-3.0), [0.0, 0.0, 1.0]);
        assert_eq!(map_color(7.0), [1.0, 0.0, 0.0]);
    }

    #[test]
    fn normalization_examples() {
        let v = volume(3, |p| 19.0 + 8.0 * p[0]);
        let norm = normalize_volume(&v, &ColorMapSpec::default());
        assert_eq!(norm.values[0], 0.0);
        assert_eq!(norm.values[1], 0.5);
        assert_eq!(norm.values[2], 1.0);
        assert_eq!((norm.used_min, norm.used_max), (19.0, 27.0));

        let flat = normalize_volume(&volume(2, |_| 20.0), &ColorMapSpec::default());
        assert!(flat.values.iter().all(|x| *x == 0.5));
        assert_eq!((flat.used_min, flat.used_max), (19.5, 20.5));

        let pinned = ColorMapSpec::new(Some((0.0, 100.0)), Transparency::Constant(0.5)).unwrap();
        let n = normalize_volume(&volume(2, |_| 27.0), &pinned);
        assert!((n.values[0] - 0.27).abs() < 1e-15);
    }

    #[test]
    fn spec_validation() {
        assert!(ColorMapSpec::new(Some((1.0, 1.0)), Transparency::Constant(0.5)).is_err());
        assert!(ColorMapSpec::new(None, Transparency::Constant(1.5)).is_err());
        assert!(ColorMapSpec::new(None, Transparency::ValueWeighted { t_min: -0.1, t_max: 0.9 }).is_err());
    }

    #[test]
    fn constant_volume_scene() {
        let doc = emit_x3d(&volume(2, |_| 20.0), &ColorMapSpec::default());
        assert_eq!(doc.shape_count, 8);
        assert_eq!(doc.text.matches("<Shape>").count(), 8);
        assert_eq!(doc.text.matches("diffuseColor=\"0.500000 0.000000 0.500000\"").count(), 8);
        assert!(doc.text.contains("transparency=\"0.850000\""));
    }

    #[test]
    fn value_weighted_transparency() {
        let spec = ColorMapSpec::new(None, Transparency::ValueWeighted { t_min: 0.2, t_max: 0.9 }).unwrap();
        let doc = emit_x3d(&volume(2, |p| p[0]), &spec);
        // cold voxel first (i = 0), hot second
        let first = doc.text.find("transparency=\"0.900000\"").unwrap();
        let second = doc.text.find("transparency=\"0.200000\"").unwrap();
        assert!(first < second);
    }

    #[test]
    fn html_wrapper() {
        let doc = emit_x3d(&volume(2, |p| p[1]), &ColorMapSpec::default());
        let page = emit_html_wrapper(&doc, "Room A");
        assert!(page.contains("<title>Room A</title>"));
        let scene_start = doc.text.find("<Scene>").unwrap();
        let scene_end = doc.text.find("</Scene>").unwrap() + "</Scene>".len();
        assert!(page.contains(&doc.text[scene_start..scene_end]));
        assert!(emit_html_wrapper(&doc, "").contains("<title>voxfield scene</title>"));
        assert!(emit_html_wrapper(&doc, "a<b").contains("<title>a&lt;b</title>"));
        assert_eq!(page, emit_html_wrapper(&doc, "Room A"));
    }
}
