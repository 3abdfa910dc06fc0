//! wasm-bindgen bindings for the browser demo. Everything is seeded and
//! deterministic; no entropy source is needed in the browser.

use wasm_bindgen::prelude::*;

use pgsp::exact::nongaussianity_gap;
use pgsp::process::{GaussianReference, PathSampler, ProcessSampler};
use pgsp::{PerturbedGaussian, VectorStream};

fn stream(k: u32, seed: u64) -> Result<VectorStream, JsValue> {
    VectorStream::new(k as usize, seed).map_err(|e| JsValue::from_str(&e.to_string()))
}

/// Path segment Y_{offset..offset+len} of the process.
#[wasm_bindgen]
pub fn simulate_path(k: u32, seed: u64, offset: i64, len: u32) -> Result<Vec<f64>, JsValue> {
    let segment = stream(k, seed)?
        .segment(offset, len as usize)
        .map_err(|e| JsValue::from_str(&e.to_string()))?;
    Ok(segment.into_values())
}

/// The i.i.d. N(0,k) twin: what the path would look like if the process
/// were Gaussian.
#[wasm_bindgen]
pub fn gaussian_twin_path(k: u32, seed: u64, offset: i64, len: u32) -> Result<Vec<f64>, JsValue> {
    let mut reference = GaussianReference::new(k as usize, seed)
        .map_err(|e| JsValue::from_str(&e.to_string()))?;
    Ok(reference.segment_values(offset, len as usize))
}

/// Exact |CF − Gaussian CF| for the k-window at t = s·(1,…,1), sampled at
/// `steps` points with s in [0, s_max]. This is the exact non-Gaussian
/// signature the detector hunts for.
#[wasm_bindgen]
pub fn gap_curve(k: u32, s_max: f64, steps: u32) -> Result<Vec<f64>, JsValue> {
    let dist =
        PerturbedGaussian::new(k as usize).map_err(|e| JsValue::from_str(&e.to_string()))?;
    let mut out = Vec::with_capacity(steps as usize);
    for i in 0..steps {
        let s = s_max * i as f64 / (steps - 1).max(1) as f64;
        let t = vec![s; k as usize];
        let gap = nongaussianity_gap(&dist, &t).map_err(|e| JsValue::from_str(&e.to_string()))?;
        out.push(gap);
    }
    Ok(out)
}

/// Running averages of the sliding k-products along one path, downsampled
/// to `points` values. Interleaved output: [process…, gaussian twin…].
/// The process trace converges to 2^{-3k/2}, the twin's to 0.
#[wasm_bindgen]
pub fn product_trace(
    k: u32,
    seed: u64,
    len: u32,
    points: u32,
) -> Result<Vec<f64>, JsValue> {
    let ku = k as usize;
    let len = (len as usize).max(ku + 1);
    let points = (points as usize).clamp(2, len);
    let mut process = ProcessSampler::new(stream(k, seed)?);
    let mut twin = GaussianReference::new(ku, seed)
        .map_err(|e| JsValue::from_str(&e.to_string()))?;
    let mut out = Vec::with_capacity(2 * points);
    for values in [
        process.segment_values(0, len + ku - 1),
        twin.segment_values(0, len + ku - 1),
    ] {
        let mut running = 0.0;
        let mut count = 0u64;
        let mut trace = Vec::with_capacity(points);
        for i in 0..len {
            running += values[i..i + ku].iter().product::<f64>();
            count += 1;
            if (i + 1) % (len / points).max(1) == 0 && trace.len() < points {
                trace.push(running / count as f64);
            }
        }
        while trace.len() < points {
            trace.push(running / count as f64);
        }
        out.extend(trace);
    }
    Ok(out)
}

/// The exact product moment 2^{-3k/2} the process trace converges to.
#[wasm_bindgen]
pub fn product_moment_exact(k: u32) -> Result<f64, JsValue> {
    PerturbedGaussian::new(k as usize)
        .map(|d| d.product_moment())
        .map_err(|e| JsValue::from_str(&e.to_string()))
}
