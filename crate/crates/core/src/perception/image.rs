use std::io::Write;

use serde::{Deserialize, Serialize};

use super::PerceptionError;

pub const CELL_SIDE: usize = 40;
pub const CELL_PIXELS: usize = CELL_SIDE * CELL_SIDE;
pub const FRAME_SIDE: usize = 3 * CELL_SIDE;

/// What a grid cell contains.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellLabel {
    Circle,
    Cross,
    Nothing,
}

impl CellLabel {
    pub const ALL: [CellLabel; 3] = [CellLabel::Circle, CellLabel::Cross, CellLabel::Nothing];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<CellLabel> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            CellLabel::Circle => "circle",
            CellLabel::Cross => "cross",
            CellLabel::Nothing => "nothing",
        }
    }

    pub fn is_symbol(self) -> bool {
        self != CellLabel::Nothing
    }
}

/// 40x40 grayscale raster, row-major, intensities in [0, 1] (1 = ink).
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct CellImage {
    pixels: Vec<f64>,
}

impl std::fmt::Debug for CellImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "CellImage(mean={:.4})", self.mean())
    }
}

impl CellImage {
    pub fn blank() -> Self {
        Self {
            pixels: vec![0.0; CELL_PIXELS],
        }
    }

    pub fn new(pixels: Vec<f64>) -> Result<Self, PerceptionError> {
        if pixels.len() != CELL_PIXELS {
            return Err(PerceptionError::Input(format!(
                "cell image needs {CELL_PIXELS} pixels, got {}",
                pixels.len()
            )));
        }
        if let Some(p) = pixels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(PerceptionError::Input(format!("pixel {p} outside [0, 1]")));
        }
        Ok(Self { pixels })
    }

    /// From 8-bit intensities, rescaled to [0, 1].
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, PerceptionError> {
        if bytes.len() != CELL_PIXELS {
            return Err(PerceptionError::Input(format!(
                "cell raster needs {CELL_PIXELS} bytes, got {}",
                bytes.len()
            )));
        }
        Ok(Self {
            pixels: bytes.iter().map(|&b| b as f64 / 255.0).collect(),
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.pixels.iter().map(|p| (p * 255.0).round() as u8).collect()
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * CELL_SIDE + col]
    }

    pub(crate) fn set(&mut self, row: usize, col: usize, v: f64) {
        self.pixels[row * CELL_SIDE + col] = v.clamp(0.0, 1.0);
    }

    pub fn mean(&self) -> f64 {
        self.pixels.iter().sum::<f64>() / CELL_PIXELS as f64
    }

    /// Inclusive bounding box `(min_row, max_row, min_col, max_col)` of pixels
    /// brighter than `threshold`, or `None` for an empty image.
    pub fn ink_bbox(&self, threshold: f64) -> Option<(usize, usize, usize, usize)> {
        let mut bbox: Option<(usize, usize, usize, usize)> = None;
        for r in 0..CELL_SIDE {
            for c in 0..CELL_SIDE {
                if self.get(r, c) > threshold {
                    bbox = Some(match bbox {
                        None => (r, r, c, c),
                        Some((r0, r1, c0, c1)) => (r0.min(r), r1.max(r), c0.min(c), c1.max(c)),
                    });
                }
            }
        }
        bbox
    }

    /// Translates the content; uncovered pixels become 0.
    pub fn shifted(&self, drow: i32, dcol: i32) -> CellImage {
        let mut out = CellImage::blank();
        for r in 0..CELL_SIDE as i32 {
            for c in 0..CELL_SIDE as i32 {
                let (sr, sc) = (r - drow, c - dcol);
                if (0..CELL_SIDE as i32).contains(&sr) && (0..CELL_SIDE as i32).contains(&sc) {
                    out.pixels[(r as usize) * CELL_SIDE + c as usize] =
                        self.pixels[sr as usize * CELL_SIDE + sc as usize];
                }
            }
        }
        out
    }

    /// Binary PGM (P5), 8-bit.
    pub fn write_pgm<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        write!(w, "P5\n{CELL_SIDE} {CELL_SIDE}\n255\n")?;
        w.write_all(&self.to_bytes())
    }
}

/// 120x120 grayscale frame holding the 3x3 grid (grid lines already removed).
#[derive(Clone, Debug, PartialEq)]
pub struct GridFrame {
    pixels: Vec<f64>,
}

impl GridFrame {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self, PerceptionError> {
        if width != FRAME_SIDE || height != FRAME_SIDE || pixels.len() != FRAME_SIDE * FRAME_SIDE {
            return Err(PerceptionError::Input(format!(
                "grid frame must be {FRAME_SIDE}x{FRAME_SIDE}, got {width}x{height} with {} pixels",
                pixels.len()
            )));
        }
        Ok(Self { pixels })
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    /// Inverse of [`split_grid`].
    pub fn assemble(cells: &[CellImage; 9]) -> GridFrame {
        let mut pixels = vec![0.0; FRAME_SIDE * FRAME_SIDE];
        for (i, cell) in cells.iter().enumerate() {
            let (r0, c0) = ((i / 3) * CELL_SIDE, (i % 3) * CELL_SIDE);
            for r in 0..CELL_SIDE {
                let dst = (r0 + r) * FRAME_SIDE + c0;
                pixels[dst..dst + CELL_SIDE]
                    .copy_from_slice(&cell.pixels[r * CELL_SIDE..(r + 1) * CELL_SIDE]);
            }
        }
        GridFrame { pixels }
    }
}

/// Cuts a frame into nine row-major cells: cell `i` covers rows
/// `(i / 3) * 40 ..+40` and columns `(i % 3) * 40 ..+40`.
pub fn split_grid(frame: &GridFrame) -> [CellImage; 9] {
    std::array::from_fn(|i| {
        let (r0, c0) = ((i / 3) * CELL_SIDE, (i % 3) * CELL_SIDE);
        let mut pixels = Vec::with_capacity(CELL_PIXELS);
        for r in 0..CELL_SIDE {
            let src = (r0 + r) * FRAME_SIDE + c0;
            pixels.extend_from_slice(&frame.pixels[src..src + CELL_SIDE]);
        }
        CellImage { pixels }
    })
}
