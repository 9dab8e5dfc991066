//! Kernel-value cache keyed by a hash of everything the values depend on.

use std::path::{Path, PathBuf};

use marchenko::kernel::{FgValue, KernelLayout, KernelOptions, ScatteringPart};
use marchenko::morse::HighK;
use marchenko::MorseModel;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;
use crate::error::{CliError, Stage};
use crate::output::{num, write_atomic};

const FORMAT: &str = "kernel-values-v1";

#[derive(Serialize)]
struct Key<'a> {
    format: &'static str,
    model: &'a crate::config::ModelConfig,
    kernel: &'a crate::config::KernelSampleConfig,
    tolerances: &'a crate::config::Tolerances,
}

pub fn key(cfg: &PipelineConfig) -> String {
    let key = Key {
        format: FORMAT,
        model: &cfg.model,
        kernel: &cfg.kernel,
        tolerances: &cfg.tolerances,
    };
    let bytes = serde_json::to_vec(&key).expect("config serializes");
    let digest = Sha256::digest(bytes);
    digest.iter().take(12).map(|b| format!("{b:02x}")).collect()
}

fn path(cfg: &PipelineConfig) -> PathBuf {
    cfg.cache_dir().join(format!("kernel-{}.csv", key(cfg)))
}

/// Header line carries the high-k coefficients; rows are x, f, g, split.
fn read(path: &Path, layout: &KernelLayout) -> Option<(Vec<FgValue>, HighK)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_path(path).ok()?;
    let mut rows = rdr.records();
    let head = rows.next()?.ok()?;
    let h: Vec<f64> = head.iter().skip(1).map(|t| t.parse().ok()).collect::<Option<_>>()?;
    if head.get(0)? != "high_k" || h.len() != 4 {
        return None;
    }
    let high_k = HighK {
        a1: h[0],
        a3: h[1],
        a5: h[2],
        max_residual: h[3],
    };
    let mut values = Vec::with_capacity(layout.points.len());
    for (rec, &x) in rows.zip(&layout.points) {
        let rec = rec.ok()?;
        let v: Vec<f64> = rec.iter().map(|t| t.parse().ok()).collect::<Option<_>>()?;
        if v.len() != 4 || v[0].to_bits() != x.to_bits() {
            return None;
        }
        values.push(FgValue {
            f: v[1],
            g: v[2],
            split_estimate: v[3],
        });
    }
    (values.len() == layout.points.len()).then_some((values, high_k))
}

fn render(layout: &KernelLayout, values: &[FgValue], hk: &HighK) -> Vec<u8> {
    let mut out = format!("high_k,{},{},{},{}\n", num(hk.a1), num(hk.a3), num(hk.a5), num(hk.max_residual));
    for (x, v) in layout.points.iter().zip(values) {
        out.push_str(&format!("{},{},{},{}\n", num(*x), num(v.f), num(v.g), num(v.split_estimate)));
    }
    out.into_bytes()
}

pub struct Built {
    pub scattering: ScatteringPart,
    pub from_cache: bool,
}

/// The scattering part, from the cache when a matching entry exists.
pub fn scattering_part(cfg: &PipelineConfig, model: &MorseModel) -> Result<Built, CliError> {
    let opts: KernelOptions = cfg.kernel_options();
    let layout = KernelLayout::new(&opts).stage("kernel")?;
    let file = path(cfg);
    if let Some((values, hk)) = read(&file, &layout) {
        let sp = ScatteringPart::from_values(model, &layout, &values, hk, &opts).stage("kernel")?;
        return Ok(Built {
            scattering: sp,
            from_cache: true,
        });
    }
    let transform = marchenko::kernel::PhaseTransform::from_model(model, &opts).stage("kernel")?;
    let values: Vec<FgValue> = layout
        .points
        .par_iter()
        .map(|&x| transform.eval(x))
        .collect::<marchenko::Result<_>>()
        .stage("kernel")?;
    let sp = ScatteringPart::from_values(model, &layout, &values, transform.high_k, &opts).stage("kernel")?;
    // a failed cache write only costs time on the next run
    if let Err(e) = write_atomic(&file, &render(&layout, &values, &transform.high_k)) {
        eprintln!("warning: kernel cache not written: {e}");
    }
    Ok(Built {
        scattering: sp,
        from_cache: false,
    })
}
