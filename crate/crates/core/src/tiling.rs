//! Sliding-window tiling for frames too large to process whole.
//!
//! A plan covers each downscaled copy of the frame with fixed-size tiles laid
//! out on a stride of `tile - overlap`; the last row/column shifts inward so
//! no tile exceeds the frame. Boxes crossing a tile boundary are kept only if
//! more than half their area lies inside (strictly), the same rule used when
//! assigning ground truth to tiles. Per-tile detections are remapped to frame
//! coordinates and de-duplicated with greedy non-maximum suppression.

use serde::{Deserialize, Serialize};

use crate::anno::BoundingBox;
use crate::{Error, Result};

/// One window into a scaled copy of the frame. `x`/`y`/`w`/`h` are in
/// scaled-frame pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tile {
    pub scale: f64,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TilePlan {
    pub frame_w: u32,
    pub frame_h: u32,
    pub tile_w: u32,
    pub tile_h: u32,
    pub overlap: u32,
    pub scales: Vec<f64>,
    pub tiles: Vec<Tile>,
}

/// A scored box in some frame. Serializes flat as
/// `{frame, x, y, w, h, kind, score}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub frame: u32,
    #[serde(flatten)]
    pub bbox: BoundingBox,
    pub score: f64,
}

impl Detection {
    fn validate(&self) -> Result<()> {
        self.bbox.validate()?;
        if !self.score.is_finite() {
            return Err(Error::validation("detection score is not finite"));
        }
        Ok(())
    }
}

/// A detection expressed in the coordinates of one tile of a plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TileDetection {
    pub tile_index: usize,
    pub detection: Detection,
}

/// Intersection over union of two boxes; 0 when the union is empty.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let inter = a.intersection_area(b);
    let union = a.area() + b.area() - inter;
    if union > 0.0 {
        inter / union
    } else {
        0.0
    }
}

/// Tile origins along one axis: start at 0, advance by `stride`, and shift
/// the final origin inward to `frame - tile` so the last tile ends exactly at
/// the frame edge. A tile at least as large as the frame yields origin 0.
fn axis_origins(frame: f64, tile: f64, stride: f64) -> Vec<f64> {
    let mut origins = Vec::new();
    let mut x = 0.0;
    loop {
        if x + tile >= frame {
            origins.push((frame - tile).max(0.0));
            break;
        }
        origins.push(x);
        x += stride;
    }
    origins
}

/// Lays out tiles over every scaled copy of a `frame_w` x `frame_h` frame.
/// `overlap` applies to both axes and must be smaller than either tile side.
/// Tiles are ordered by scale (input order), then row-major top to bottom.
pub fn plan_tiles(
    frame_w: u32,
    frame_h: u32,
    tile_w: u32,
    tile_h: u32,
    overlap: u32,
    scales: &[f64],
) -> Result<TilePlan> {
    if frame_w == 0 || frame_h == 0 {
        return Err(Error::invalid_argument("frame size must be positive"));
    }
    if tile_w == 0 || tile_h == 0 {
        return Err(Error::invalid_argument("tile size must be positive"));
    }
    if overlap >= tile_w.min(tile_h) {
        return Err(Error::invalid_argument(format!(
            "overlap {overlap} must be smaller than both tile sides {tile_w}x{tile_h}"
        )));
    }
    if scales.is_empty() {
        return Err(Error::invalid_argument("at least one scale required"));
    }
    for &s in scales {
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::invalid_argument(format!("scale {s} must be positive")));
        }
    }

    let mut tiles = Vec::new();
    for &scale in scales {
        let scaled_w = frame_w as f64 * scale;
        let scaled_h = frame_h as f64 * scale;
        // A tile larger than the scaled frame collapses to the frame itself
        // on that axis.
        let tw = (tile_w as f64).min(scaled_w);
        let th = (tile_h as f64).min(scaled_h);
        let stride_x = tw - overlap as f64;
        let stride_y = th - overlap as f64;
        let xs = axis_origins(scaled_w, tw, stride_x);
        let ys = axis_origins(scaled_h, th, stride_y);
        for &y in &ys {
            for &x in &xs {
                tiles.push(Tile { scale, x, y, w: tw, h: th });
            }
        }
    }
    Ok(TilePlan { frame_w, frame_h, tile_w, tile_h, overlap, scales: scales.to_vec(), tiles })
}

/// Maps frame-coordinate boxes into one tile. The i-th output corresponds to
/// the i-th input: `Some` holds the box in tile coordinates, `None` means the
/// box was dropped. A box is retained iff the fraction of its area inside the
/// tile exceeds 0.5 strictly (so a box exactly half inside is dropped); fully
/// inside boxes are translated without clipping, partial ones are clipped to
/// the tile. Zero-area boxes are always dropped.
pub fn clip_boxes_to_tile(boxes: &[BoundingBox], tile: &Tile) -> Vec<Option<BoundingBox>> {
    boxes
        .iter()
        .map(|b| {
            // Same scale transform the tile's image underwent.
            let sx = b.x * tile.scale;
            let sy = b.y * tile.scale;
            let sw = b.w * tile.scale;
            let sh = b.h * tile.scale;
            let area = sw * sh;
            if !(area > 0.0) {
                return None;
            }
            let ix0 = sx.max(tile.x);
            let iy0 = sy.max(tile.y);
            let ix1 = (sx + sw).min(tile.x + tile.w);
            let iy1 = (sy + sh).min(tile.y + tile.h);
            let iw = ix1 - ix0;
            let ih = iy1 - iy0;
            if iw <= 0.0 || ih <= 0.0 {
                return None;
            }
            let fully_inside =
                sx >= tile.x && sy >= tile.y && sx + sw <= tile.x + tile.w && sy + sh <= tile.y + tile.h;
            if fully_inside {
                return Some(BoundingBox::new(sx - tile.x, sy - tile.y, sw, sh, b.kind));
            }
            if iw * ih / area > 0.5 {
                Some(BoundingBox::new(ix0 - tile.x, iy0 - tile.y, iw, ih, b.kind))
            } else {
                None
            }
        })
        .collect()
}

// Slack for the "detection lies inside its tile" consistency check; clipped
// boxes can exceed the tile edge by rounding when origins are fractional.
const TILE_BOUNDS_EPS: f64 = 1e-6;

/// Converts per-tile detections back to frame coordinates: translate by the
/// tile origin, then undo the tile's scale. Rejects out-of-range tile indices
/// and detections lying outside their tile.
pub fn remap_detections(dets: &[TileDetection], plan: &TilePlan) -> Result<Vec<Detection>> {
    let mut out = Vec::with_capacity(dets.len());
    for (i, td) in dets.iter().enumerate() {
        let tile = plan.tiles.get(td.tile_index).ok_or_else(|| {
            Error::invalid_argument(format!(
                "detection {i}: tile index {} out of range ({} tiles)",
                td.tile_index,
                plan.tiles.len()
            ))
        })?;
        let d = &td.detection;
        d.validate()?;
        let b = &d.bbox;
        if b.x < -TILE_BOUNDS_EPS
            || b.y < -TILE_BOUNDS_EPS
            || b.x + b.w > tile.w + TILE_BOUNDS_EPS
            || b.y + b.h > tile.h + TILE_BOUNDS_EPS
        {
            return Err(Error::invalid_argument(format!(
                "detection {i}: box ({}, {}, {}, {}) lies outside its {}x{} tile",
                b.x, b.y, b.w, b.h, tile.w, tile.h
            )));
        }
        out.push(Detection {
            frame: d.frame,
            bbox: BoundingBox::new(
                (b.x + tile.x) / tile.scale,
                (b.y + tile.y) / tile.scale,
                b.w / tile.scale,
                b.h / tile.scale,
                b.kind,
            ),
            score: d.score,
        });
    }
    Ok(out)
}

/// Greedy non-maximum suppression over same-frame detections: walk detections
/// by descending score and keep one iff its IoU with every already-kept
/// detection of the same frame stays strictly below `iou_threshold`. Equal
/// scores break ties by (x, y, area) ascending so output is deterministic.
pub fn merge_tile_detections(dets: &[Detection], iou_threshold: f64) -> Result<Vec<Detection>> {
    if !(iou_threshold > 0.0 && iou_threshold <= 1.0) {
        return Err(Error::invalid_argument(format!(
            "iou threshold {iou_threshold} must be in (0, 1]"
        )));
    }
    for d in dets {
        d.validate()?;
    }
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| {
        let (da, db) = (&dets[a], &dets[b]);
        da.frame
            .cmp(&db.frame)
            .then(db.score.total_cmp(&da.score))
            .then(da.bbox.x.total_cmp(&db.bbox.x))
            .then(da.bbox.y.total_cmp(&db.bbox.y))
            .then(da.bbox.area().total_cmp(&db.bbox.area()))
    });

    let mut kept: Vec<Detection> = Vec::new();
    let mut frame_start = 0; // index into `kept` where the current frame begins
    let mut current_frame: Option<u32> = None;
    for idx in order {
        let d = dets[idx];
        if current_frame != Some(d.frame) {
            current_frame = Some(d.frame);
            frame_start = kept.len();
        }
        let suppressed = kept[frame_start..].iter().any(|k| iou(&k.bbox, &d.bbox) >= iou_threshold);
        if !suppressed {
            kept.push(d);
        }
    }
    Ok(kept)
}
