use crate::render::FlowField;

use super::{same_shape, EvalError};

/// Boolean per-pixel mask, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub width: u32,
    pub height: u32,
    pub data: Vec<bool>,
}

impl Mask {
    pub fn new(width: u32, height: u32, data: Vec<bool>) -> Result<Self, EvalError> {
        if data.len() != width as usize * height as usize {
            return Err(EvalError::BadParams(format!("{} values for a {width}x{height} mask", data.len())));
        }
        Ok(Mask { width, height, data })
    }

    pub fn from_fn(width: u32, height: u32, f: impl Fn(u32, u32) -> bool) -> Self {
        let data = (0..height).flat_map(|y| (0..width).map(move |x| (x, y))).map(|(x, y)| f(x, y)).collect();
        Mask { width, height, data }
    }

    /// Pixels of a 3-byte instance image equal to `instance_id`.
    pub fn from_instance_view(object: &[u8], width: u32, height: u32, instance_id: u32) -> Result<Self, EvalError> {
        let want = crate::render::encode_instance(instance_id);
        Mask::new(width, height, object.chunks_exact(3).map(|p| p == want).collect())
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    fn shape(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    /// Tight box `(x0, y0, x1, y1)` with exclusive upper bounds.
    pub fn bounding_box(&self) -> Option<(u32, u32, u32, u32)> {
        let w = self.width as usize;
        let mut bbox: Option<(u32, u32, u32, u32)> = None;
        for (i, _) in self.data.iter().enumerate().filter(|(_, &b)| b) {
            let (x, y) = ((i % w) as u32, (i / w) as u32);
            bbox = Some(match bbox {
                None => (x, y, x + 1, y + 1),
                Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x + 1), y1.max(y + 1)),
            });
        }
        bbox
    }
}

/// |A ∩ B| / |A ∪ B|, 1 when both masks are empty.
pub fn iou(a: &Mask, b: &Mask) -> Result<f64, EvalError> {
    same_shape(a.shape(), b.shape())?;
    let (mut inter, mut union) = (0usize, 0usize);
    for (&x, &y) in a.data.iter().zip(&b.data) {
        inter += usize::from(x && y);
        union += usize::from(x || y);
    }
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

/// IoU of the tight bounding boxes: 1 when both masks are empty, 0 when
/// exactly one is.
pub fn bounding_box_iou(a: &Mask, b: &Mask) -> Result<f64, EvalError> {
    same_shape(a.shape(), b.shape())?;
    let area = |(x0, y0, x1, y1): (u32, u32, u32, u32)| u64::from(x1 - x0) * u64::from(y1 - y0);
    Ok(match (a.bounding_box(), b.bounding_box()) {
        (None, None) => 1.0,
        (None, _) | (_, None) => 0.0,
        (Some(p), Some(q)) => {
            let ix = q.2.min(p.2).saturating_sub(q.0.max(p.0));
            let iy = q.3.min(p.3).saturating_sub(q.1.max(p.1));
            let inter = u64::from(ix) * u64::from(iy);
            inter as f64 / (area(p) + area(q) - inter) as f64
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpeStats {
    pub mean: f64,
    pub median: f64,
    pub count: usize,
}

/// Per-pixel endpoint errors over the selected pixels (all when no mask).
pub fn endpoint_errors(est: &FlowField, reference: &FlowField, mask: Option<&Mask>) -> Result<Vec<f64>, EvalError> {
    same_shape((est.width, est.height), (reference.width, reference.height))?;
    if let Some(m) = mask {
        same_shape((est.width, est.height), m.shape())?;
    }
    Ok((0..est.pixel_count())
        .filter(|&i| mask.is_none_or(|m| m.data[i]))
        .map(|i| {
            let (ax, ay) = est.at(i);
            let (bx, by) = reference.at(i);
            f64::from(ax - bx).hypot(f64::from(ay - by))
        })
        .collect())
}

/// Mean and median endpoint error. Both fields must use the same units.
pub fn endpoint_error(est: &FlowField, reference: &FlowField, mask: Option<&Mask>) -> Result<EpeStats, EvalError> {
    let mut e = endpoint_errors(est, reference, mask)?;
    if e.is_empty() {
        return Err(EvalError::Empty);
    }
    let mean = e.iter().sum::<f64>() / e.len() as f64;
    e.sort_by(f64::total_cmp);
    let n = e.len();
    let median = if n % 2 == 1 { e[n / 2] } else { (e[n / 2 - 1] + e[n / 2]) / 2.0 };
    Ok(EpeStats { mean, median, count: n })
}
