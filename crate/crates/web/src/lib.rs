//! Browser bindings for the panorama geometry demo page.

pub mod demo;

use wasm_bindgen::prelude::*;

use crate::demo::RoomParams;

fn js_err(e: panoscene::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Coarse depth of a rectangular room as RGBA bytes (`2h × h` pixels).
#[wasm_bindgen]
pub fn room_depth_rgba(
    width: f64,
    length: f64,
    ceiling: f64,
    eye_height: f64,
    observer_x: f64,
    observer_z: f64,
    erp_height: usize,
) -> Result<Vec<u8>, JsError> {
    let params = RoomParams {
        width,
        length,
        ceiling,
        eye_height,
        observer_x,
        observer_z,
    };
    let (_, image) = demo::room_depth(&params, erp_height).map_err(js_err)?;
    Ok(image.rgba)
}

/// Summed tangent-rig weights as RGBA bytes (`2h × h` pixels).
#[wasm_bindgen]
pub fn rig_coverage_rgba(erp_height: usize) -> Result<Vec<u8>, JsError> {
    let (_, image) = demo::rig_coverage(erp_height).map_err(js_err)?;
    Ok(image.rgba)
}

#[wasm_bindgen]
pub struct FusionResult {
    inner: demo::FusionDemo,
}

#[wasm_bindgen]
impl FusionResult {
    /// Truth, coarse and fused depth stacked vertically (`2h × 3h` pixels).
    pub fn rgba(&self) -> Vec<u8> {
        self.inner.image.rgba.clone()
    }

    pub fn loss(&self) -> f64 {
        self.inner.loss
    }

    pub fn coarse_rmse(&self) -> f64 {
        self.inner.coarse_rmse
    }

    pub fn fused_rmse(&self) -> f64 {
        self.inner.fused_rmse
    }

    /// Flattened `[true scale, true offset, scale, offset]` per view.
    pub fn coefficients(&self) -> Vec<f64> {
        self.inner.coefficients.iter().flatten().copied().collect()
    }
}

/// Fuses 16 distorted tangent-view depths with a furniture-free layout depth.
#[wasm_bindgen]
pub fn fuse_room(noise: f64, seed: u32, erp_height: usize) -> Result<FusionResult, JsError> {
    let inner = demo::fusion_demo(noise, u64::from(seed), erp_height).map_err(js_err)?;
    Ok(FusionResult { inner })
}
