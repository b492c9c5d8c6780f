//! Procedural stand-in for hand-drawn seed symbols, plus shift augmentation.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::image::{CellImage, CellLabel, CELL_SIDE};

/// Pixels brighter than this count as ink when locating a drawing.
pub const INK_THRESHOLD: f64 = 0.05;

type Point = (f64, f64);

fn dist_to_segment(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    let (qx, qy) = (a.0 + t * dx, a.1 + t * dy);
    ((p.0 - qx).powi(2) + (p.1 - qy).powi(2)).sqrt()
}

/// Strokes a polyline of `(x, y)` points with an anti-aliased pen.
fn stroke(img: &mut CellImage, pts: &[Point], width: f64, ink: f64) {
    let half = width / 2.0;
    for seg in pts.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let r0 = (a.1.min(b.1) - width - 1.0).floor().max(0.0) as usize;
        let r1 = ((a.1.max(b.1) + width + 1.0).ceil() as usize).min(CELL_SIDE - 1);
        let c0 = (a.0.min(b.0) - width - 1.0).floor().max(0.0) as usize;
        let c1 = ((a.0.max(b.0) + width + 1.0).ceil() as usize).min(CELL_SIDE - 1);
        for r in r0..=r1 {
            for c in c0..=c1 {
                let d = dist_to_segment((c as f64 + 0.5, r as f64 + 0.5), a, b);
                let v = ((half + 0.5 - d).clamp(0.0, 1.0)) * ink;
                if v > img.get(r, c) {
                    img.set(r, c, v);
                }
            }
        }
    }
}

fn clamp_pt(p: Point) -> Point {
    let hi = CELL_SIDE as f64 - 2.0;
    (p.0.clamp(1.0, hi), p.1.clamp(1.0, hi))
}

fn draw_circle<R: Rng>(rng: &mut R) -> CellImage {
    let mut img = CellImage::blank();
    let (cx, cy) = (20.0 + rng.gen_range(-2.0..=2.0), 20.0 + rng.gen_range(-2.0..=2.0));
    let (rx, ry) = (rng.gen_range(8.0..=13.0), rng.gen_range(8.0..=13.0));
    let segments = rng.gen_range(8..=14);
    let start = rng.gen_range(0.0..2.0 * PI);
    // Slight overshoot or gap where the pen closes the loop.
    let sweep = 2.0 * PI + rng.gen_range(-0.3..=0.4);
    let pts: Vec<Point> = (0..=segments)
        .map(|i| {
            let t = start + sweep * i as f64 / segments as f64;
            let j = rng.gen_range(-1.0..=1.0);
            clamp_pt((cx + (rx + j) * t.cos(), cy + (ry + j) * t.sin()))
        })
        .collect();
    let width = rng.gen_range(2.0..=3.0);
    let ink = rng.gen_range(0.75..=1.0);
    stroke(&mut img, &pts, width, ink);
    img
}

fn jittered_line<R: Rng>(rng: &mut R, a: Point, b: Point, segments: usize) -> Vec<Point> {
    (0..=segments)
        .map(|i| {
            let t = i as f64 / segments as f64;
            let jx = if i == 0 || i == segments {
                0.0
            } else {
                rng.gen_range(-1.0..=1.0)
            };
            let jy = if i == 0 || i == segments {
                0.0
            } else {
                rng.gen_range(-1.0..=1.0)
            };
            clamp_pt((a.0 + t * (b.0 - a.0) + jx, a.1 + t * (b.1 - a.1) + jy))
        })
        .collect()
}

fn draw_cross<R: Rng>(rng: &mut R) -> CellImage {
    let mut img = CellImage::blank();
    let (cx, cy) = (20.0 + rng.gen_range(-2.0..=2.0), 20.0 + rng.gen_range(-2.0..=2.0));
    let (sx, sy) = (rng.gen_range(7.0..=12.0), rng.gen_range(7.0..=12.0));
    let mut j = || rng.gen_range(-2.0..=2.0);
    let a1 = (cx - sx + j(), cy - sy + j());
    let b1 = (cx + sx + j(), cy + sy + j());
    let a2 = (cx + sx + j(), cy - sy + j());
    let b2 = (cx - sx + j(), cy + sy + j());
    let total = rng.gen_range(8..=14);
    let first = total / 2;
    let width = rng.gen_range(2.0..=3.0);
    let ink = rng.gen_range(0.75..=1.0);
    let l1 = jittered_line(rng, a1, b1, first);
    let l2 = jittered_line(rng, a2, b2, total - first);
    stroke(&mut img, &l1, width, ink);
    stroke(&mut img, &l2, width, ink);
    img
}

fn draw_nothing<R: Rng>(rng: &mut R) -> CellImage {
    let mut img = CellImage::blank();
    if rng.gen_bool(0.5) {
        let specks = rng.gen_range(1..=15);
        for _ in 0..specks {
            let (r, c) = (rng.gen_range(0..CELL_SIDE), rng.gen_range(0..CELL_SIDE));
            img.set(r, c, rng.gen_range(0.1..=0.5));
        }
    }
    img
}

pub fn draw_symbol<R: Rng>(label: CellLabel, rng: &mut R) -> CellImage {
    match label {
        CellLabel::Circle => draw_circle(rng),
        CellLabel::Cross => draw_cross(rng),
        CellLabel::Nothing => draw_nothing(rng),
    }
}

/// `per_class` circles, then crosses, then blanks; deterministic per seed.
pub fn synthesize_seed_set(rng_seed: u64, per_class: usize) -> Vec<(CellImage, CellLabel)> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    CellLabel::ALL
        .into_iter()
        .flat_map(|label| std::iter::repeat_n(label, per_class))
        .map(|label| (draw_symbol(label, &mut rng), label))
        .collect()
}

/// `count` copies of a seed drawing, each translated by a uniform integer
/// offset that keeps the stroke bounding box inside the frame.
///
/// Blank cells have nothing to move and are copied as-is. A drawing with no
/// room to move yields the original only.
pub fn augment<R: Rng + ?Sized>(
    seed: &(CellImage, CellLabel),
    count: usize,
    rng: &mut R,
) -> Vec<(CellImage, CellLabel)> {
    let (img, label) = seed;
    let bbox = match (label, img.ink_bbox(INK_THRESHOLD)) {
        (CellLabel::Nothing, _) | (_, None) => return vec![seed.clone(); count],
        (_, Some(b)) => b,
    };
    let (drange, crange) = shift_ranges(bbox);
    if drange == (0, 0) && crange == (0, 0) {
        return vec![seed.clone()];
    }
    (0..count)
        .map(|_| {
            let dr = rng.gen_range(drange.0..=drange.1);
            let dc = rng.gen_range(crange.0..=crange.1);
            (img.shifted(dr, dc), *label)
        })
        .collect()
}

/// Allowed (row, col) offset ranges for a bounding box.
pub fn shift_ranges(bbox: (usize, usize, usize, usize)) -> ((i32, i32), (i32, i32)) {
    let (r0, r1, c0, c1) = bbox;
    let last = CELL_SIDE as i32 - 1;
    ((-(r0 as i32), last - r1 as i32), (-(c0 as i32), last - c1 as i32))
}

/// Draws `total` shifted images by cycling over the (shuffled) seeds.
pub fn augmented_dataset<R: Rng + ?Sized>(
    seeds: &[(CellImage, CellLabel)],
    total: usize,
    rng: &mut R,
) -> Vec<(CellImage, CellLabel)> {
    if seeds.is_empty() {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..seeds.len()).collect();
    let mut out = Vec::with_capacity(total);
    while out.len() < total {
        order.shuffle(rng);
        for &i in &order {
            if out.len() == total {
                break;
            }
            out.extend(augment(&seeds[i], 1, rng));
        }
    }
    out
}
