//! Image to pixel-affinity graph.
//!
//! Pixels are nodes, candidate edges join 8-neighbors, and each weight is
//! `exp(-|I(u) - I(v)|^2 / sigma_color^2) * exp(-max(B(u), B(v)) / sigma_edge^2)`
//! where `B` is a normalized Canny edge map. Edges at or below
//! `eps_discard` are dropped.

mod canny;
mod graph;
mod raster;

pub use canny::{compute_edge_map, EdgeMap};
pub use graph::{affinity, build_graph, graph_density, grid_pair_count, WeightedGraph};
pub use raster::{load_image, RgbImage};
pub(crate) use raster::decode;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct GraphParams {
    /// Color scale; squared RGB distances are divided by `sigma_color^2`.
    pub sigma_color: f64,
    /// Boundary scale; the boundary strength is divided by `sigma_edge^2`.
    pub sigma_edge: f64,
    /// Affinities `<= eps_discard` are not stored.
    pub eps_discard: f64,
    /// Hysteresis thresholds on the Sobel magnitude of 0..255 luminance.
    pub canny_low: f64,
    pub canny_high: f64,
    /// Standard deviation of the 5x5 pre-smoothing kernel.
    pub blur_sigma: f64,
}

impl Default for GraphParams {
    fn default() -> Self {
        Self {
            // sigma^2 = 3 * 32^2
            sigma_color: 32.0 * 3f64.sqrt(),
            // sigma^2 = 0.5
            sigma_edge: 0.5f64.sqrt(),
            eps_discard: 1e-4,
            canny_low: 50.0,
            canny_high: 150.0,
            blur_sigma: 1.4,
        }
    }
}

impl GraphParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.sigma_color > 0.0) {
            return bad(format!("sigma_color must be positive, got {}", self.sigma_color));
        }
        if !(self.sigma_edge > 0.0) {
            return bad(format!("sigma_edge must be positive, got {}", self.sigma_edge));
        }
        if !(0.0..1.0).contains(&self.eps_discard) {
            return bad(format!("eps_discard must lie in [0, 1), got {}", self.eps_discard));
        }
        if !(0.0 <= self.canny_low && self.canny_low < self.canny_high) {
            return bad(format!(
                "canny thresholds need 0 <= low < high, got {} / {}",
                self.canny_low, self.canny_high
            ));
        }
        if !(self.blur_sigma > 0.0) {
            return bad(format!("blur_sigma must be positive, got {}", self.blur_sigma));
        }
        Ok(())
    }
}

/// Edge map plus graph in one call.
pub fn image_to_graph(img: &RgbImage, params: &GraphParams) -> Result<WeightedGraph> {
    params.validate()?;
    let edges = compute_edge_map(img, params);
    build_graph(img, &edges, params)
}
