//! Text persistence of a [`SurrogateModel`].
//!
//! ```text
//! voxfield-model
//! format_version 1
//! hidden <L>
//! seed <u64>
//! field temperature|nitrogen
//! unit <unit>
//! compound <label or ->
//! W <3L floats, row-major by input>
//! b1 <L floats>
//! Z <L floats>
//! b2 <float>
//! out_mid <float>
//! out_halfrange <float>
//! epochs_run <int>
//! final_rmse_normalized <float>
//! final_rmse_field_units <float>
//! wall_time_ms <int>
//! training_grid_n <int>
//! ```

use super::{NetParams, SurrogateModel, TrainingReport};
use crate::textfmt::{fmt_exact, fmt_exact_list, write_field, KeyValues};
use crate::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "voxfield-model";

pub fn model_to_text(model: &SurrogateModel) -> String {
    let p = model.params();
    let r = model.report();
    let mut s = String::new();
    s.push_str(MAGIC);
    s.push('\n');
    s.push_str(&format!("format_version {MODEL_FORMAT_VERSION}\n"));
    s.push_str(&format!("hidden {}\n", p.hidden()));
    s.push_str(&format!("seed {}\n", model.seed()));
    write_field(&mut s, model.field());
    s.push_str(&format!("W {}\n", fmt_exact_list(&p.w)));
    s.push_str(&format!("b1 {}\n", fmt_exact_list(&p.b1)));
    s.push_str(&format!("Z {}\n", fmt_exact_list(&p.z)));
    s.push_str(&format!("b2 {}\n", fmt_exact(p.b2)));
    s.push_str(&format!("out_mid {}\n", fmt_exact(model.out_mid())));
    s.push_str(&format!("out_halfrange {}\n", fmt_exact(model.out_halfrange())));
    s.push_str(&format!("epochs_run {}\n", r.epochs_run));
    s.push_str(&format!("final_rmse_normalized {}\n", fmt_exact(r.final_rmse_normalized)));
    s.push_str(&format!("final_rmse_field_units {}\n", fmt_exact(r.final_rmse_field_units)));
    s.push_str(&format!("wall_time_ms {}\n", r.wall_time_ms));
    s.push_str(&format!("training_grid_n {}\n", r.training_grid_n));
    s
}

pub fn model_from_text(text: &str) -> Result<SurrogateModel> {
    let mut lines = text.lines();
    if lines.next().map(str::trim_end) != Some(MAGIC) {
        return Err(Error::Format { what: "model", detail: format!("missing {MAGIC} header") });
    }
    let kv = KeyValues::parse("model", lines)?;
    let version: u32 = kv.parse_value("format_version")?;
    if version != MODEL_FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let hidden: usize = kv.parse_value("hidden")?;
    let params = NetParams {
        w: kv.f64_list("W", 3 * hidden)?,
        b1: kv.f64_list("b1", hidden)?,
        z: kv.f64_list("Z", hidden)?,
        b2: kv.f64("b2")?,
    };
    let report = TrainingReport {
        epochs_run: kv.parse_value("epochs_run")?,
        final_rmse_normalized: kv.f64("final_rmse_normalized")?,
        final_rmse_field_units: kv.f64("final_rmse_field_units")?,
        wall_time_ms: kv.parse_value("wall_time_ms")?,
        training_grid_n: kv.parse_value("training_grid_n")?,
    };
    SurrogateModel::from_parts(
        params,
        kv.f64("out_mid")?,
        kv.f64("out_halfrange")?,
        kv.field()?,
        kv.parse_value("seed")?,
        report,
    )
}
