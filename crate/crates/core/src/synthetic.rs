//! Deterministic test inputs: single-object scenes with three annotator masks
//! each, random graphs, and random labelings.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::pixelgraph::{RgbImage, WeightedGraph};
use crate::projection::BinaryMask;

pub struct SyntheticScene {
    pub id: String,
    pub image: RgbImage,
    /// Exact, dilated, and eroded versions of the object region.
    pub gts: Vec<BinaryMask>,
}

#[derive(Clone, Copy, Debug)]
enum Shape {
    Ellipse { cx: f64, cy: f64, rx: f64, ry: f64 },
    Rect { x0: f64, y0: f64, x1: f64, y1: f64 },
}

impl Shape {
    fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Shape::Ellipse { cx, cy, rx, ry } => {
                let (dx, dy) = ((x - cx) / rx, (y - cy) / ry);
                dx * dx + dy * dy <= 1.0
            }
            Shape::Rect { x0, y0, x1, y1 } => x >= x0 && x <= x1 && y >= y0 && y <= y1,
        }
    }
}

struct Part {
    shape: Shape,
    color: [f64; 3],
}

fn random_color(rng: &mut ChaCha8Rng) -> [f64; 3] {
    [
        rng.gen_range(20.0..235.0),
        rng.gen_range(20.0..235.0),
        rng.gen_range(20.0..235.0),
    ]
}

fn color_distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    a.iter().zip(&b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

/// A color at least `min_dist` away from every color in `avoid`.
fn distinct_color(rng: &mut ChaCha8Rng, avoid: &[[f64; 3]], min_dist: f64) -> [f64; 3] {
    loop {
        let c = random_color(rng);
        if avoid.iter().all(|&a| color_distance(a, c) >= min_dist) {
            return c;
        }
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn random_shape(rng: &mut ChaCha8Rng, w: f64, h: f64, scale: f64) -> Shape {
    let cx = rng.gen_range(0.35 * w..0.65 * w);
    let cy = rng.gen_range(0.35 * h..0.65 * h);
    if rng.gen_bool(0.5) {
        Shape::Ellipse {
            cx,
            cy,
            rx: scale * rng.gen_range(0.18 * w..0.3 * w),
            ry: scale * rng.gen_range(0.2 * h..0.35 * h),
        }
    } else {
        let hw = scale * rng.gen_range(0.15 * w..0.28 * w);
        let hh = scale * rng.gen_range(0.18 * h..0.32 * h);
        Shape::Rect {
            x0: cx - hw,
            y0: cy - hh,
            x1: cx + hw,
            y1: cy + hh,
        }
    }
}

fn dilate(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = mask.dims();
    BinaryMask::from_fn(w, h, |x, y| {
        (y.saturating_sub(1)..=(y + 1).min(h - 1))
            .any(|yy| (x.saturating_sub(1)..=(x + 1).min(w - 1)).any(|xx| mask.bits()[yy * w + xx]))
    })
}

fn erode(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = mask.dims();
    BinaryMask::from_fn(w, h, |x, y| {
        (y.saturating_sub(1)..=(y + 1).min(h - 1))
            .all(|yy| (x.saturating_sub(1)..=(x + 1).min(w - 1)).all(|xx| mask.bits()[yy * w + xx]))
    })
}

/// One scene: a textured two-tone background, optional clutter, and an
/// object made of one to three differently colored parts.
pub fn scene(index: usize, width: usize, height: usize, seed: u64) -> SyntheticScene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let (wf, hf) = (width as f64, height as f64);

    let bg_a = random_color(&mut rng);
    let bg_b = distinct_color(&mut rng, &[bg_a], 40.0);
    let mut used = vec![bg_a, bg_b];

    let n_clutter = rng.gen_range(0..=2);
    let mut clutter = Vec::new();
    for _ in 0..n_clutter {
        let color = distinct_color(&mut rng, &used, 60.0);
        used.push(color);
        let x0 = rng.gen_range(0.0..wf * 0.8);
        let y0 = rng.gen_range(0.0..hf * 0.8);
        clutter.push(Part {
            shape: Shape::Rect {
                x0,
                y0,
                x1: x0 + rng.gen_range(3.0..wf * 0.2),
                y1: y0 + rng.gen_range(3.0..hf * 0.2),
            },
            color,
        });
    }

    let n_parts = 1 + index % 3;
    let body = random_shape(&mut rng, wf, hf, 1.0);
    let mut parts = vec![Part {
        shape: body,
        color: distinct_color(&mut rng, &used, 90.0),
    }];
    used.push(parts[0].color);
    for _ in 1..n_parts {
        // secondary parts overlap the body so the object stays connected
        let (cx, cy) = match body {
            Shape::Ellipse { cx, cy, .. } => (cx, cy),
            Shape::Rect { x0, y0, x1, y1 } => ((x0 + x1) / 2.0, (y0 + y1) / 2.0),
        };
        let ox = rng.gen_range(-0.15 * wf..0.15 * wf);
        let oy = rng.gen_range(-0.15 * hf..0.15 * hf);
        let shape = Shape::Ellipse {
            cx: cx + ox,
            cy: cy + oy,
            rx: rng.gen_range(0.08 * wf..0.16 * wf),
            ry: rng.gen_range(0.1 * hf..0.2 * hf),
        };
        let color = distinct_color(&mut rng, &used, 70.0);
        used.push(color);
        parts.push(Part { shape, color });
    }

    let noise_sigma = rng.gen_range(3.0..9.0);
    let gradient_angle: f64 = rng.gen_range(0.0..std::f64::consts::PI);
    let (ga, gb) = (gradient_angle.cos(), gradient_angle.sin());

    let mut object = vec![false; width * height];
    let image = RgbImage::from_fn(width, height, |x, y| {
        let (xf, yf) = (x as f64 + 0.5, y as f64 + 0.5);
        let t = ((xf / wf - 0.5) * ga + (yf / hf - 0.5) * gb + 0.5).clamp(0.0, 1.0);
        let mut c = [0.0; 3];
        for k in 0..3 {
            c[k] = bg_a[k] * (1.0 - t) + bg_b[k] * t;
        }
        for p in &clutter {
            if p.shape.contains(xf, yf) {
                c = p.color;
            }
        }
        for p in parts.iter().rev() {
            if p.shape.contains(xf, yf) {
                c = p.color;
                object[y * width + x] = true;
                break;
            }
        }
        let mut out = [0u8; 3];
        for k in 0..3 {
            out[k] = (c[k] + noise_sigma * gaussian(&mut rng)).round().clamp(0.0, 255.0) as u8;
        }
        out
    })
    .expect("non-empty scene");

    let exact = BinaryMask::new(width, height, object).expect("mask matches image");
    let gts = vec![exact.clone(), dilate(&exact), erode(&exact)];
    SyntheticScene {
        id: format!("scene_{index:02}"),
        image,
        gts,
    }
}

pub const FIXTURE_SEED: u64 = 0x5EED_2026;
pub const FIXTURE_WIDTH: usize = 64;
pub const FIXTURE_HEIGHT: usize = 48;

/// The ten bundled scenes.
pub fn fixture_scenes() -> Vec<SyntheticScene> {
    (0..10)
        .map(|i| scene(i, FIXTURE_WIDTH, FIXTURE_HEIGHT, FIXTURE_SEED))
        .collect()
}

/// Erdos-Renyi graph. Weights are drawn from `(0, 1]` when `weighted`,
/// otherwise every edge has weight 1.
pub fn random_graph(rng: &mut impl Rng, n: usize, p: f64, weighted: bool) -> WeightedGraph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                let w = if weighted { 1.0 - rng.gen::<f64>() } else { 1.0 };
                edges.push((u, v, w));
            }
        }
    }
    WeightedGraph::from_edges(n, &edges).expect("generated edges are valid")
}

/// Like [`random_graph`] but with a random spanning tree added, so the result
/// is connected.
pub fn random_connected_graph(rng: &mut impl Rng, n: usize, p: f64, weighted: bool) -> WeightedGraph {
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    let mut present = std::collections::HashSet::new();
    let weight = |rng: &mut dyn rand::RngCore| if weighted { 1.0 - rng.gen::<f64>() } else { 1.0 };
    for v in 1..n {
        let u = rng.gen_range(0..v);
        present.insert((u, v));
        edges.push((u, v, weight(rng)));
    }
    for u in 0..n {
        for v in u + 1..n {
            if !present.contains(&(u, v)) && rng.gen_bool(p) {
                edges.push((u, v, weight(rng)));
            }
        }
    }
    WeightedGraph::from_edges(n, &edges).expect("generated edges are valid")
}

/// A random `k`-labeling of a `width x height` grid and a mask whose
/// foreground rate differs per label, so labels and mask are correlated.
pub fn random_labeling(rng: &mut impl Rng, width: usize, height: usize, k: usize) -> (Vec<usize>, BinaryMask) {
    let rates: Vec<f64> = (0..k).map(|_| rng.gen::<f64>()).collect();
    let labels: Vec<usize> = (0..width * height).map(|_| rng.gen_range(0..k)).collect();
    let bits = labels.iter().map(|&l| rng.gen_bool(rates[l])).collect();
    let mask = BinaryMask::new(width, height, bits).expect("mask matches grid");
    (labels, mask)
}
