//! Browser demo: one cloud model per synthetic dataset, trained on first use,
//! and three operations that each return an SVG plus a one-line summary.
//!
//! The scene logic lives in plain Rust and is tested natively; this file only
//! adapts it to JavaScript.

mod scene;
mod svg;

use wasm_bindgen::prelude::*;

pub use scene::{explain, extraction, lemma, Scene};

#[wasm_bindgen(js_name = Scene)]
pub struct JsScene(Scene);

#[wasm_bindgen(js_class = Scene)]
impl JsScene {
    #[wasm_bindgen(getter)]
    pub fn svg(&self) -> String {
        self.0.svg.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn summary(&self) -> String {
        self.0.summary.clone()
    }

    /// `undefined` for scenes that rebuild no model.
    #[wasm_bindgen(getter)]
    pub fn agreement(&self) -> Option<f64> {
        self.0.agreement
    }

    #[wasm_bindgen(getter, js_name = apiCalls)]
    pub fn api_calls(&self) -> u32 {
        self.0.api_calls
    }
}

fn wrap(r: cfx_core::Result<Scene>) -> Result<JsScene, JsError> {
    r.map(JsScene).map_err(|e| JsError::new(&e.to_string()))
}

/// Attack the cloud with `queries` queries of one strategy and show the substitute.
#[wasm_bindgen(js_name = extractionScene)]
pub fn extraction_scene(dataset: &str, strategy: &str, queries: usize, run: usize) -> Result<JsScene, JsError> {
    wrap(extraction(dataset, strategy, queries, run))
}

/// CF and CF-of-CF for a clicked point over the cloud's confidence contours.
#[wasm_bindgen(js_name = explainScene)]
pub fn explain_scene(dataset: &str, x1: f64, x2: f64, threshold: f64) -> Result<JsScene, JsError> {
    wrap(explain(dataset, x1, x2, threshold))
}

/// Random linear cloud recovered exactly from two explain calls.
#[wasm_bindgen(js_name = lemmaScene)]
pub fn lemma_scene(seed: u32) -> Result<JsScene, JsError> {
    wrap(lemma(u64::from(seed)))
}
