//! Axis-aligned boxes in center form, the unit every stage exchanges.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Box as center `(x, y)` plus width and height, all in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub const fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    /// Builds a box from its top-left corner and size.
    pub fn from_corner(left: f64, top: f64, w: f64, h: f64) -> Self {
        Self::new(left + w / 2.0, top + h / 2.0, w, h)
    }

    pub fn left(&self) -> f64 {
        self.x - self.w / 2.0
    }

    pub fn top(&self) -> f64 {
        self.y - self.h / 2.0
    }

    pub fn right(&self) -> f64 {
        self.x + self.w / 2.0
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h / 2.0
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x, self.y)
    }

    pub fn is_valid(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.w.is_finite() && self.h.is_finite() && self.w > 0.0 && self.h > 0.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidBox(format!("{self:?}")))
        }
    }

    pub fn scaled(&self, sw: f64, sh: f64) -> Self {
        Self::new(self.x, self.y, self.w * sw, self.h * sh)
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self::new(self.x + dx, self.y + dy, self.w, self.h)
    }

    /// True when the two boxes share a region of positive area.
    pub fn intersects_frame(&self, width: f64, height: f64) -> bool {
        self.right() > 0.0 && self.bottom() > 0.0 && self.left() < width && self.top() < height
    }
}

/// Intersection over union of two boxes.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let iw = (a.right().min(b.right()) - a.left().max(b.left())).max(0.0);
    let ih = (a.bottom().min(b.bottom()) - a.top().max(b.top())).max(0.0);
    let inter = iw * ih;
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

/// Euclidean distance between box centers.
pub fn center_distance(a: &BBox, b: &BBox) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn iou_examples() {
        let a = BBox::new(1.0, 1.0, 2.0, 2.0);
        assert_eq!(iou(&a, &a), 1.0);
        let far = BBox::new(100.0, 100.0, 2.0, 2.0);
        assert_eq!(iou(&a, &far), 0.0);
        // intersection 1x2 = 2, union 4 + 4 - 2 = 6
        let b = BBox::new(2.0, 1.0, 2.0, 2.0);
        assert!((iou(&a, &b) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn center_distance_examples() {
        let a = BBox::new(0.0, 0.0, 4.0, 4.0);
        let b = BBox::new(3.0, 4.0, 1.0, 9.0);
        assert_eq!(center_distance(&a, &a), 0.0);
        assert_eq!(center_distance(&a, &b), 5.0);
        assert_eq!(center_distance(&b, &a), 5.0);
    }

    #[test]
    fn corner_form_round_trip() {
        let b = BBox::from_corner(10.0, 20.0, 30.0, 40.0);
        assert_eq!(b.center(), (25.0, 40.0));
        assert_eq!((b.left(), b.top()), (10.0, 20.0));
    }

    fn arb_box() -> impl Strategy<Value = BBox> {
        (-50.0..50.0f64, -50.0..50.0f64, 0.5..40.0f64, 0.5..40.0f64).prop_map(|(x, y, w, h)| BBox::new(x, y, w, h))
    }

    proptest! {
        #[test]
        fn iou_symmetric_and_bounded(a in arb_box(), b in arb_box()) {
            let ab = iou(&a, &b);
            prop_assert!((ab - iou(&b, &a)).abs() < 1e-15);
            prop_assert!((0.0..=1.0).contains(&ab));
            if a != b {
                prop_assert!(ab < 1.0);
            }
        }
    }
}
