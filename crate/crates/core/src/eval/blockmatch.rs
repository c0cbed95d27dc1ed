//! Coarse-to-fine block matching, the frame-pair baseline estimator.

use crate::render::FlowField;

use super::{same_shape, EvalError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockMatchParams {
    pub block_size: u32,
    /// Search radius in pixels at every pyramid level.
    pub search_radius: u32,
    pub pyramid_levels: u32,
}

impl Default for BlockMatchParams {
    fn default() -> Self {
        BlockMatchParams { block_size: 8, search_radius: 4, pyramid_levels: 3 }
    }
}

impl BlockMatchParams {
    pub fn validate(&self) -> Result<(), EvalError> {
        let ok = self.block_size >= 1
            && self.block_size.is_multiple_of(2)
            && self.search_radius >= 1
            && (1..=12).contains(&self.pyramid_levels);
        if ok {
            Ok(())
        } else {
            Err(EvalError::BadParams(format!("{self:?}")))
        }
    }

    /// Largest displacement the pyramid can recover, per axis.
    pub fn max_displacement(&self) -> u32 {
        self.search_radius * ((1 << self.pyramid_levels) - 1)
    }
}

/// Single-channel image with floating-point intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub width: u32,
    pub height: u32,
    pub data: Vec<f32>,
}

impl GrayImage {
    /// Luma of a BGR byte image.
    pub fn from_bgr(bgr: &[u8], width: u32, height: u32) -> Result<Self, EvalError> {
        let n = width as usize * height as usize;
        if bgr.len() != 3 * n {
            return Err(EvalError::BadParams(format!("{} bytes for a {width}x{height} BGR image", bgr.len())));
        }
        let data = bgr
            .chunks_exact(3)
            .map(|p| 0.114 * f32::from(p[0]) + 0.587 * f32::from(p[1]) + 0.299 * f32::from(p[2]))
            .collect();
        Ok(GrayImage { width, height, data })
    }

    pub fn from_fn(width: u32, height: u32, f: impl Fn(u32, u32) -> f32) -> Self {
        let data = (0..height).flat_map(|y| (0..width).map(move |x| (x, y))).map(|(x, y)| f(x, y)).collect();
        GrayImage { width, height, data }
    }

    /// Pixel with coordinates clamped to the image (edge replication).
    fn clamped(&self, x: i64, y: i64) -> f32 {
        let x = x.clamp(0, self.width as i64 - 1) as usize;
        let y = y.clamp(0, self.height as i64 - 1) as usize;
        self.data[y * self.width as usize + x]
    }

    /// Half-resolution image by 2×2 averaging (edge replicated on odd sizes).
    fn downsample(&self) -> GrayImage {
        let (w, h) = (self.width.div_ceil(2), self.height.div_ceil(2));
        GrayImage::from_fn(w, h, |x, y| {
            let (x, y) = (2 * x as i64, 2 * y as i64);
            0.25 * (self.clamped(x, y) + self.clamped(x + 1, y) + self.clamped(x, y + 1) + self.clamped(x + 1, y + 1))
        })
    }
}

/// Integer displacement per pixel of one pyramid level.
struct Field {
    width: u32,
    height: u32,
    d: Vec<(i32, i32)>,
}

impl Field {
    fn at(&self, x: u32, y: u32) -> (i32, i32) {
        self.d[(y * self.width + x) as usize]
    }
}

/// Displacement field from `a` to `b` in pixels per frame: the block at `x`
/// in `a` is best matched at `x + d` in `b` under the sum of absolute
/// differences. Ties go to the shorter displacement.
pub fn estimate_flow_blockmatch(a: &GrayImage, b: &GrayImage, params: &BlockMatchParams) -> Result<FlowField, EvalError> {
    same_shape((a.width, a.height), (b.width, b.height))?;
    params.validate()?;
    let mut pyramid = vec![(a.clone(), b.clone())];
    for _ in 1..params.pyramid_levels {
        let (pa, pb) = pyramid.last().expect("non-empty");
        let next = (pa.downsample(), pb.downsample());
        pyramid.push(next);
    }

    let mut coarse: Option<Field> = None;
    for (fa, fb) in pyramid.iter().rev() {
        let field = match_level(fa, fb, coarse.as_ref(), params);
        coarse = Some(field);
    }
    let field = coarse.expect("at least one level");
    Ok(FlowField {
        width: a.width,
        height: a.height,
        data: field.d.iter().flat_map(|&(dx, dy)| [dx as f32, dy as f32]).collect(),
    })
}

fn match_level(a: &GrayImage, b: &GrayImage, coarse: Option<&Field>, params: &BlockMatchParams) -> Field {
    let (w, h) = (a.width, a.height);
    let bs = params.block_size;
    let r = params.search_radius as i32;
    let mut out = Field { width: w, height: h, d: vec![(0, 0); w as usize * h as usize] };

    for by in (0..h).step_by(bs as usize) {
        for bx in (0..w).step_by(bs as usize) {
            let (x1, y1) = ((bx + bs).min(w), (by + bs).min(h));
            let guess = match coarse {
                Some(c) => {
                    let (cx, cy) = ((bx + x1) / 2 / 2, (by + y1) / 2 / 2);
                    let (dx, dy) = c.at(cx.min(c.width - 1), cy.min(c.height - 1));
                    (2 * dx, 2 * dy)
                }
                None => (0, 0),
            };
            let mut best = (f32::INFINITY, i64::MAX, (0, 0));
            for sy in -r..=r {
                for sx in -r..=r {
                    let d = (guess.0 + sx, guess.1 + sy);
                    let cost = sad(a, b, (bx, by, x1, y1), d);
                    let len = i64::from(d.0).pow(2) + i64::from(d.1).pow(2);
                    if cost < best.0 || (cost == best.0 && len < best.1) {
                        best = (cost, len, d);
                    }
                }
            }
            for y in by..y1 {
                let row = (y * w) as usize;
                out.d[row + bx as usize..row + x1 as usize].fill(best.2);
            }
        }
    }
    out
}

fn sad(a: &GrayImage, b: &GrayImage, (x0, y0, x1, y1): (u32, u32, u32, u32), (dx, dy): (i32, i32)) -> f32 {
    let w = a.width as usize;
    let inside = x0 as i64 + dx as i64 >= 0
        && y0 as i64 + dy as i64 >= 0
        && x1 as i64 + dx as i64 <= b.width as i64
        && y1 as i64 + dy as i64 <= b.height as i64;
    let mut total = 0.0;
    if inside {
        for y in y0..y1 {
            let ra = y as usize * w;
            let rb = (y as i64 + dy as i64) as usize * w;
            let (sa, sb) = (ra + x0 as usize, (rb as i64 + x0 as i64 + dx as i64) as usize);
            let n = (x1 - x0) as usize;
            total += a.data[sa..sa + n].iter().zip(&b.data[sb..sb + n]).map(|(p, q)| (p - q).abs()).sum::<f32>();
        }
    } else {
        for y in y0..y1 {
            for x in x0..x1 {
                let p = a.data[y as usize * w + x as usize];
                total += (p - b.clamped(x as i64 + dx as i64, y as i64 + dy as i64)).abs();
            }
        }
    }
    total
}
