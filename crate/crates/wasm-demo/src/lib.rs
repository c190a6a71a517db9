//! WebAssembly bindings for the static demo page in `www/`. Every export
//! returns a JSON string; errors come back as `{"error": "..."}`.

use serde_json::{json, Value};
use wasm_bindgen::prelude::wasm_bindgen;

use ipbnn::estimator::{bernoulli_benchmark, check_regime, BenchmarkConfig};
use ipbnn::experiment::{run_cell, ExperimentConfig};

fn respond(result: Result<Value, String>) -> String {
    match result {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e }).to_string(),
    }
}

/// Mean plug-in entropy against dimension `1..=dmax` for one `p`.
#[wasm_bindgen]
pub fn entropy_curve(n: usize, p: f64, dmax: usize, reps: usize, seed: u32) -> String {
    let cfg = BenchmarkConfig {
        sample_count: n,
        dims: 1..=dmax,
        ps: vec![p],
        repetitions: reps,
        seed: seed as u64,
    };
    respond(bernoulli_benchmark(&cfg).map_err(|e| e.to_string()).map(|rows| {
        json!({
            "n": n,
            "ceiling": (n as f64).log2(),
            "rows": rows
                .iter()
                .map(|r| json!({ "d": r.dim, "truth": r.true_entropy, "mean": r.mean_estimate, "std": r.std_estimate }))
                .collect::<Vec<_>>(),
        })
    }))
}

/// Reliability verdict for `n` samples of a `width`-bit representation.
#[wasm_bindgen]
pub fn regime(n: u32, width: u32) -> String {
    if width == 0 {
        return respond(Err("width must be at least 1".into()));
    }
    let v = check_regime(n as u64, width);
    respond(Ok(json!({
        "n": n,
        "width": width,
        "reliable": v.reliable,
        "max_reliable_width": v.max_reliable_width,
        "log2_alphabet": v.log2_alphabet_size(),
    })))
}

/// Trains the SZT network on the stand-in data and returns every hidden
/// layer's information-plane trajectory.
#[wasm_bindgen]
pub fn szt_run(lambda: f64, epochs: u32, stride: u32, learning_rate: f64, seed: u32) -> String {
    let cfg = json!({
        "dataset": { "kind": "szt-standin" },
        "architecture": { "preset": "szt" },
        "lambdas": [lambda],
        "learning_rate": learning_rate,
        "batch_size": 64,
        "epochs": epochs,
        "seeds": [seed],
        "stride": stride,
        "window": (epochs / stride / 5).max(1),
    });
    respond((|| {
        let cfg = ExperimentConfig::from_json(&cfg.to_string()).map_err(|e| e.to_string())?;
        cfg.validate().map_err(|e| e.to_string())?;
        let data = cfg.load_data().map_err(|e| e.to_string())?;
        let log = run_cell(&cfg, &data, lambda, seed as u64).map_err(|e| e.to_string())?;
        let summary = log.summary().map_err(|e| e.to_string())?;
        let trajectories = log.trajectories().map_err(|e| e.to_string())?;
        let layers: Vec<Value> = trajectories
            .iter()
            .zip(&summary.layers)
            .zip(&log.header.regime_flags)
            .map(|((t, s), f)| {
                json!({
                    "offset": t.layer_offset,
                    "width": t.width,
                    "reliable": f.reliable,
                    "rho": s.rho,
                    "points": t.points().iter().map(|p| json!([p.epoch, p.mi_xt, p.mi_ty])).collect::<Vec<_>>(),
                })
            })
            .collect();
        Ok(json!({
            "run_id": log.header.run_id,
            "class_count": log.header.class_count,
            "accuracy": log.epochs.last().map(|e| e.val_accuracy),
            "layers": layers,
        }))
    })())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn curve_shape() {
        let v = parse(&entropy_curve(1000, 0.5, 3, 2, 0));
        assert_eq!(v["rows"].as_array().unwrap().len(), 3);
        assert_eq!(v["rows"][0]["truth"], 1.0);
        assert!(parse(&entropy_curve(1000, 1.5, 3, 2, 0))["error"].is_string());
    }

    #[test]
    fn regime_endpoints() {
        assert_eq!(parse(&regime(800, 7))["reliable"], true);
        assert_eq!(parse(&regime(800, 8))["max_reliable_width"], 7);
        assert!(parse(&regime(800, 0))["error"].is_string());
    }

    #[test]
    fn short_run() {
        let v = parse(&szt_run(0.0, 4, 2, 1e-3, 0));
        let layers = v["layers"].as_array().unwrap();
        assert_eq!(layers.len(), 4);
        assert_eq!(layers[0]["points"].as_array().unwrap().len(), 2);
        assert!(parse(&szt_run(0.3, 4, 2, 1e-3, 0))["error"].is_string());
    }
}
