//! Bounding-box algebra.
//!
//! Boxes are kept in MOTChallenge layout `(left, top, width, height)`; the
//! corner form is only used internally. Intersections use half-open intervals
//! on real coordinates, so boxes that merely touch have zero overlap.

use crate::error::{Error, Result};

/// Axis-aligned pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BBox {
    pub left: f64,
    pub top: f64,
    pub width: f64,
    pub height: f64,
}

impl BBox {
    pub const fn new(left: f64, top: f64, width: f64, height: f64) -> Self {
        Self {
            left,
            top,
            width,
            height,
        }
    }

    /// Builds a box and checks it is usable by trackers and metrics.
    pub fn checked(left: f64, top: f64, width: f64, height: f64) -> Result<Self> {
        let b = Self::new(left, top, width, height);
        b.validate()?;
        Ok(b)
    }

    pub(crate) fn from_corners(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        Self::new(x1, y1, x2 - x1, y2 - y1)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.left.is_finite()
            && self.top.is_finite()
            && self.width.is_finite()
            && self.height.is_finite())
        {
            return Err(Error::InvalidInput("box has a non-finite field"));
        }
        if self.width <= 0.0 || self.height <= 0.0 {
            return Err(Error::InvalidInput("box has nonpositive extent"));
        }
        Ok(())
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_ok()
    }

    pub fn right(&self) -> f64 {
        self.left + self.width
    }

    pub fn bottom(&self) -> f64 {
        self.top + self.height
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn center(&self) -> (f64, f64) {
        (self.left + self.width / 2.0, self.top + self.height / 2.0)
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self::new(self.left + dx, self.top + dy, self.width, self.height)
    }
}

/// Intersection over union of two valid boxes.
pub fn iou(a: &BBox, b: &BBox) -> Result<f64> {
    a.validate()?;
    b.validate()?;
    Ok(iou_unchecked(a, b))
}

/// IOU without validation; callers guarantee both boxes are valid.
pub(crate) fn iou_unchecked(a: &BBox, b: &BBox) -> f64 {
    let iw = a.right().min(b.right()) - a.left.max(b.left);
    let ih = a.bottom().min(b.bottom()) - a.top.max(b.top);
    if iw <= 0.0 || ih <= 0.0 {
        return 0.0;
    }
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

/// Affine map `(x, y, 1) -> (x', y')` stored as a row-major 2x3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AffineWarp {
    coeffs: [f64; 6],
}

impl AffineWarp {
    pub const IDENTITY: AffineWarp = AffineWarp {
        coeffs: [1.0, 0.0, 0.0, 0.0, 1.0, 0.0],
    };

    pub fn new(coeffs: [f64; 6]) -> Result<Self> {
        let w = Self { coeffs };
        w.validate()?;
        Ok(w)
    }

    pub fn translation(dx: f64, dy: f64) -> Self {
        Self {
            coeffs: [1.0, 0.0, dx, 0.0, 1.0, dy],
        }
    }

    pub fn coeffs(&self) -> [f64; 6] {
        self.coeffs
    }

    pub fn determinant(&self) -> f64 {
        let c = &self.coeffs;
        c[0] * c[4] - c[1] * c[3]
    }

    pub fn validate(&self) -> Result<()> {
        if !self.coeffs.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidInput("warp has a non-finite coefficient"));
        }
        if self.determinant() == 0.0 {
            return Err(Error::InvalidInput("warp is not invertible"));
        }
        Ok(())
    }

    pub fn apply_point(&self, x: f64, y: f64) -> (f64, f64) {
        let c = &self.coeffs;
        (c[0] * x + c[1] * y + c[2], c[3] * x + c[4] * y + c[5])
    }
}

impl Default for AffineWarp {
    fn default() -> Self {
        Self::IDENTITY
    }
}

/// Warps the four corners of `b` and returns their axis-aligned hull.
pub fn apply_warp(w: &AffineWarp, b: &BBox) -> Result<BBox> {
    w.validate()?;
    b.validate()?;
    let corners = [
        w.apply_point(b.left, b.top),
        w.apply_point(b.right(), b.top),
        w.apply_point(b.left, b.bottom()),
        w.apply_point(b.right(), b.bottom()),
    ];
    let (mut x1, mut y1) = corners[0];
    let (mut x2, mut y2) = corners[0];
    for &(x, y) in &corners[1..] {
        x1 = x1.min(x);
        y1 = y1.min(y);
        x2 = x2.max(x);
        y2 = y2.max(y);
    }
    let out = BBox::from_corners(x1, y1, x2, y2);
    out.validate()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Fraction of grid-cell centers covered by both boxes over cells covered by either.
    fn grid_iou(a: &BBox, b: &BBox, cells_per_unit: usize) -> f64 {
        let x_min = a.left.min(b.left);
        let y_min = a.top.min(b.top);
        let x_max = a.right().max(b.right());
        let y_max = a.bottom().max(b.bottom());
        let step = 1.0 / cells_per_unit as f64;
        let nx = ((x_max - x_min) / step).ceil() as usize;
        let ny = ((y_max - y_min) / step).ceil() as usize;
        let inside = |bb: &BBox, x: f64, y: f64| {
            x >= bb.left && x < bb.right() && y >= bb.top && y < bb.bottom()
        };
        let (mut inter, mut union) = (0usize, 0usize);
        for i in 0..nx {
            for j in 0..ny {
                let x = x_min + (i as f64 + 0.5) * step;
                let y = y_min + (j as f64 + 0.5) * step;
                let (ia, ib) = (inside(a, x, y), inside(b, x, y));
                if ia && ib {
                    inter += 1;
                }
                if ia || ib {
                    union += 1;
                }
            }
        }
        inter as f64 / union as f64
    }

    #[test]
    fn iou_examples() {
        let b = BBox::new(3.0, 4.0, 5.0, 6.0);
        assert_eq!(iou(&b, &b).unwrap(), 1.0);
        let d = iou(
            &BBox::new(0.0, 0.0, 1.0, 1.0),
            &BBox::new(5.0, 5.0, 1.0, 1.0),
        )
        .unwrap();
        assert_eq!(d, 0.0);
        let a = BBox::new(0.0, 0.0, 2.0, 2.0);
        let c = BBox::new(1.0, 0.0, 2.0, 2.0);
        let grid = grid_iou(&a, &c, 50);
        assert!((grid - 1.0 / 3.0).abs() < 1e-12);
        assert!((iou(&a, &c).unwrap() - grid).abs() < 1e-12);
    }

    #[test]
    fn touching_boxes_do_not_overlap() {
        let a = BBox::new(0.0, 0.0, 2.0, 2.0);
        let b = BBox::new(2.0, 0.0, 2.0, 2.0);
        assert_eq!(iou(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn iou_rejects_invalid_boxes() {
        let ok = BBox::new(0.0, 0.0, 1.0, 1.0);
        assert!(iou(&ok, &BBox::new(0.0, 0.0, 0.0, 1.0)).is_err());
        assert!(iou(&BBox::new(f64::NAN, 0.0, 1.0, 1.0), &ok).is_err());
        assert!(iou(&ok, &BBox::new(0.0, 0.0, 1.0, -2.0)).is_err());
    }

    #[test]
    fn warp_examples() {
        let b = BBox::new(1.5, -2.0, 3.0, 7.0);
        assert_eq!(apply_warp(&AffineWarp::IDENTITY, &b).unwrap(), b);
        let t = AffineWarp::new([1.0, 0.0, 3.0, 0.0, 1.0, -2.0]).unwrap();
        assert_eq!(
            apply_warp(&t, &BBox::new(0.0, 0.0, 4.0, 4.0)).unwrap(),
            BBox::new(3.0, -2.0, 4.0, 4.0)
        );
        // (x, y) -> (-y, x): corners (0,0),(2,0),(0,4),(2,4) -> (0,0),(0,2),(-4,0),(-4,2)
        let rot = AffineWarp::new([0.0, -1.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        let r = apply_warp(&rot, &BBox::new(0.0, 0.0, 2.0, 4.0)).unwrap();
        assert_eq!(r, BBox::new(-4.0, 0.0, 4.0, 2.0));
    }

    #[test]
    fn degenerate_warp_rejected() {
        assert!(AffineWarp::new([1.0, 2.0, 0.0, 2.0, 4.0, 0.0]).is_err());
        assert!(AffineWarp::new([1.0, 0.0, f64::INFINITY, 0.0, 1.0, 0.0]).is_err());
        let bad = AffineWarp { coeffs: [0.0; 6] };
        assert!(apply_warp(&bad, &BBox::new(0.0, 0.0, 1.0, 1.0)).is_err());
    }

    fn arb_box() -> impl Strategy<Value = BBox> {
        (
            -100.0..100.0f64,
            -100.0..100.0f64,
            0.1..50.0f64,
            0.1..50.0f64,
        )
            .prop_map(|(l, t, w, h)| BBox::new(l, t, w, h))
    }

    proptest! {
        #[test]
        fn iou_bounded_and_symmetric(a in arb_box(), b in arb_box()) {
            let ab = iou(&a, &b).unwrap();
            let ba = iou(&b, &a).unwrap();
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert_eq!(ab, ba);
            prop_assert!((iou(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn iou_translation_invariant(a in arb_box(), b in arb_box(), dx in -50.0..50.0f64, dy in -50.0..50.0f64) {
            let before = iou(&a, &b).unwrap();
            let after = iou(&a.translated(dx, dy), &b.translated(dx, dy)).unwrap();
            prop_assert!((before - after).abs() < 1e-9);
        }

        #[test]
        fn translation_warp_preserves_extent(b in arb_box(), dx in -50.0..50.0f64, dy in -50.0..50.0f64) {
            let out = apply_warp(&AffineWarp::translation(dx, dy), &b).unwrap();
            prop_assert!((out.left - (b.left + dx)).abs() < 1e-9);
            prop_assert!((out.top - (b.top + dy)).abs() < 1e-9);
            prop_assert!((out.width - b.width).abs() < 1e-9);
            prop_assert!((out.height - b.height).abs() < 1e-9);
            let id = apply_warp(&AffineWarp::IDENTITY, &b).unwrap();
            prop_assert!((id.left - b.left).abs() < 1e-12 && (id.width - b.width).abs() < 1e-12);
        }
    }
}
