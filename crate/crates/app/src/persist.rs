//! Artifact files and atomic replacement.
//!
//! Volume text format:
//!
//! ```text
//! voxfield-volume
//! format_version 1
//! n <side>
//! field temperature|nitrogen
//! unit <unit>
//! compound <label or ->
//! provenance fd_solve|surrogate_sample|predefined
//! values
//! <n^3 lines, one value each, i fastest then j then k>
//! ```
//!
//! Values carry 17 significant digits and reload bit-exactly.

use std::io::Write;
use std::path::{Path, PathBuf};

use voxfield_core::ann::{model_from_text, model_to_text, SurrogateModel};
use voxfield_core::solver::{Provenance, VolumeGrid};
use voxfield_core::textfmt::{fmt_exact, write_field, KeyValues};
use voxfield_core::x3d::{emit_html_wrapper, X3DDocument};
use voxfield_core::Error;

use crate::error::{AppError, AppResult};
use crate::pipeline::SnapshotArtifacts;

pub const VOLUME_FORMAT_VERSION: u32 = 1;
const VOLUME_MAGIC: &str = "voxfield-volume";

pub const VOLUME_FILE: &str = "volume.txt";
pub const SCENE_FILE: &str = "scene.x3d";
pub const SCENE_HTML_FILE: &str = "scene.html";
pub const MODEL_FILE: &str = "model.txt";
pub const REFINED_FILE: &str = "refined.txt";
pub const REFINED_SCENE_FILE: &str = "refined.x3d";
pub const REFINED_HTML_FILE: &str = "refined.html";

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers see either the old or the new contents.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> AppResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| AppError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| AppError::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| AppError::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| AppError::io(path, e.error))?;
    Ok(())
}

pub fn volume_to_text(volume: &VolumeGrid) -> String {
    let mut s = String::with_capacity(volume.values().len() * 25 + 128);
    s.push_str(VOLUME_MAGIC);
    s.push('\n');
    s.push_str(&format!("format_version {VOLUME_FORMAT_VERSION}\n"));
    s.push_str(&format!("n {}\n", volume.n()));
    write_field(&mut s, volume.field());
    s.push_str(&format!("provenance {}\n", volume.provenance().as_str()));
    s.push_str("values\n");
    for v in volume.values() {
        s.push_str(&fmt_exact(*v));
        s.push('\n');
    }
    s
}

pub fn volume_from_text(text: &str) -> voxfield_core::Result<VolumeGrid> {
    let format = |detail: String| Error::Format { what: "volume", detail };
    let mut lines = text.lines();
    if lines.next().map(str::trim_end) != Some(VOLUME_MAGIC) {
        return Err(format(format!("missing {VOLUME_MAGIC} header")));
    }
    let header: Vec<&str> = lines.by_ref().take_while(|l| l.trim_end() != "values").collect();
    let kv = KeyValues::parse("volume", header)?;
    let version: u32 = kv.parse_value("format_version")?;
    if version != VOLUME_FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let n: usize = kv.parse_value("n")?;
    let provenance = kv.raw("provenance")?;
    let provenance =
        Provenance::parse(provenance).ok_or_else(|| format(format!("unknown provenance {provenance:?}")))?;
    let values = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.trim().parse::<f64>().map_err(|_| format(format!("bad value {l:?}"))))
        .collect::<voxfield_core::Result<Vec<f64>>>()?;
    let expected = n.checked_pow(3).ok_or_else(|| format(format!("grid side {n} too large")))?;
    if values.len() != expected {
        return Err(format(format!("expected {expected} values, found {}", values.len())));
    }
    VolumeGrid::new(n, values, kv.field()?, provenance)
}

fn read_text(path: &Path) -> AppResult<String> {
    std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))
}

fn with_path(path: &Path, e: Error) -> AppError {
    match e {
        Error::UnsupportedVersion(_) | Error::Format { .. } => AppError::Input(format!("{}: {e}", path.display())),
        other => AppError::Core(other),
    }
}

pub fn load_volume(path: &Path) -> AppResult<VolumeGrid> {
    volume_from_text(&read_text(path)?).map_err(|e| with_path(path, e))
}

pub fn save_volume(path: &Path, volume: &VolumeGrid) -> AppResult<()> {
    write_atomic(path, volume_to_text(volume).as_bytes())
}

pub fn load_model(path: &Path) -> AppResult<SurrogateModel> {
    model_from_text(&read_text(path)?).map_err(|e| with_path(path, e))
}

pub fn save_model(path: &Path, model: &SurrogateModel) -> AppResult<()> {
    write_atomic(path, model_to_text(model).as_bytes())
}

/// Writes the scene and, when `html_title` is given, its browser page next to
/// it with the extension replaced by `.html`.
pub fn save_scene(path: &Path, doc: &X3DDocument, html_title: Option<&str>) -> AppResult<()> {
    write_atomic(path, doc.text.as_bytes())?;
    if let Some(title) = html_title {
        write_atomic(&path.with_extension("html"), emit_html_wrapper(doc, title).as_bytes())?;
    }
    Ok(())
}

/// Files written by [`persist_artifacts`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PersistedPaths {
    pub volume: PathBuf,
    pub scene: PathBuf,
    pub html: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub refined: Option<PathBuf>,
    pub refined_scene: Option<PathBuf>,
}

/// Writes every artifact present into `dir`, each by atomic replacement.
pub fn persist_artifacts(
    artifacts: &SnapshotArtifacts,
    dir: &Path,
    html_title: Option<&str>,
) -> AppResult<PersistedPaths> {
    std::fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    let mut out = PersistedPaths { volume: dir.join(VOLUME_FILE), scene: dir.join(SCENE_FILE), ..Default::default() };
    save_volume(&out.volume, &artifacts.volume)?;
    save_scene(&out.scene, &artifacts.x3d, html_title)?;
    if html_title.is_some() {
        out.html = Some(dir.join(SCENE_HTML_FILE));
    }
    if let Some(model) = &artifacts.model {
        let path = dir.join(MODEL_FILE);
        save_model(&path, model)?;
        out.model = Some(path);
    }
    if let Some(refined) = &artifacts.refined_volume {
        let path = dir.join(REFINED_FILE);
        save_volume(&path, refined)?;
        out.refined = Some(path);
    }
    if let Some(doc) = &artifacts.refined_x3d {
        let path = dir.join(REFINED_SCENE_FILE);
        save_scene(&path, doc, html_title)?;
        out.refined_scene = Some(path);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use voxfield_core::field::FieldKind;

    fn sample() -> VolumeGrid {
        VolumeGrid::from_fn(4, FieldKind::nitrogen("NH4").unwrap(), Provenance::SurrogateSample, |p| {
            (p[0] * 7.1).sin() + p[1] / 3.0 - p[2] * 1e-9
        })
        .unwrap()
    }

    #[test]
    fn volume_round_trip_is_exact() {
        let v = sample();
        let text = volume_to_text(&v);
        let back = volume_from_text(&text).unwrap();
        assert_eq!(back, v);
        assert!(back.values().iter().zip(v.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn volume_rejects_bad_files() {
        let text = volume_to_text(&sample());
        assert!(matches!(
            volume_from_text(&text.replace("format_version 1", "format_version 999")),
            Err(Error::UnsupportedVersion(999))
        ));
        assert!(volume_from_text(&text.replace("n 4", "n 5")).is_err());
        assert!(volume_from_text(&text.replace("provenance surrogate_sample", "provenance guess")).is_err());
        assert!(volume_from_text("hello").is_err());
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
        let err = write_atomic(&dir.path().join("missing/a.txt"), b"x").unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }
}
