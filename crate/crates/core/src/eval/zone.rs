//! Restricted-area zones: distance from a tracked box to a polygon and graded alarms.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bbox::BBox;
use crate::error::{Error, Result};

type Point = (f64, f64);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub vertices: Vec<Point>,
    /// Alarm thresholds in pixels, strictly decreasing; level k is reached below the k-th.
    pub thresholds: Vec<f64>,
}

impl Zone {
    pub fn new(vertices: Vec<Point>, thresholds: Vec<f64>) -> Result<Self> {
        let z = Self { vertices, thresholds };
        z.validate()?;
        Ok(z)
    }

    pub fn validate(&self) -> Result<()> {
        let v = &self.vertices;
        if v.len() < 3 || v.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
            return Err(Error::DegeneratePolygon(format!("{} vertices", v.len())));
        }
        if signed_area(v).abs() < 1e-12 {
            return Err(Error::DegeneratePolygon("zero area".into()));
        }
        let n = v.len();
        for i in 0..n {
            for j in i + 1..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if !adjacent && segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                    return Err(Error::DegeneratePolygon(format!("edges {i} and {j} cross")));
                }
            }
        }
        if self.thresholds.is_empty() || self.thresholds.iter().any(|t| !(*t > 0.0)) || self.thresholds.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidArgument(format!("zone thresholds {:?} must be positive and strictly decreasing", self.thresholds)));
        }
        Ok(())
    }

    pub fn max_level(&self) -> usize {
        self.thresholds.len()
    }

    fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn contains(&self, p: Point) -> bool {
        // even-odd rule
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.1 > p.1) != (b.1 > p.1) && p.0 < a.0 + (p.1 - a.1) * (b.0 - a.0) / (b.1 - a.1) {
                inside = !inside;
            }
        }
        inside
    }
}

fn signed_area(v: &[Point]) -> f64 {
    let n = v.len();
    (0..n).map(|i| v[i].0 * v[(i + 1) % n].1 - v[(i + 1) % n].0 * v[i].1).sum::<f64>() / 2.0
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn on_segment(p: Point, a: Point, b: Point) -> bool {
    p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
}

fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let (d1, d2) = (cross(q1, q2, p1), cross(q1, q2, p2));
    let (d3, d4) = (cross(p1, p2, q1), cross(p1, p2, q2));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(p1, q1, q2))
        || (d2 == 0.0 && on_segment(p2, q1, q2))
        || (d3 == 0.0 && on_segment(q1, p1, p2))
        || (d4 == 0.0 && on_segment(q2, p1, p2))
}

fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 { (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (p.0 - a.0 - t * dx).hypot(p.1 - a.1 - t * dy)
}

fn point_box_distance(p: Point, b: &BBox) -> f64 {
    let dx = (b.left() - p.0).max(0.0).max(p.0 - b.right());
    let dy = (b.top() - p.1).max(0.0).max(p.1 - b.bottom());
    dx.hypot(dy)
}

/// Shortest distance between the box and the zone; 0 when they overlap or one contains the other.
pub fn zone_distance(b: &BBox, zone: &Zone) -> Result<f64> {
    zone.validate()?;
    b.validate()?;
    let corners = [(b.left(), b.top()), (b.right(), b.top()), (b.right(), b.bottom()), (b.left(), b.bottom())];
    if corners.iter().any(|&c| zone.contains(c)) || zone.vertices.iter().any(|&v| point_box_distance(v, b) == 0.0) {
        return Ok(0.0);
    }
    let mut best = f64::INFINITY;
    for (a, e) in zone.edges() {
        for i in 0..4 {
            let (c, d) = (corners[i], corners[(i + 1) % 4]);
            if segments_intersect(a, e, c, d) {
                return Ok(0.0);
            }
            // disjoint convex pieces: the closest pair involves a vertex of one of them
            best = best.min(point_segment_distance(c, a, e)).min(point_segment_distance(a, c, d));
        }
    }
    Ok(best)
}

/// Number of thresholds the distance falls below.
pub fn zone_alarm(distance: f64, zone: &Zone) -> usize {
    zone.thresholds.iter().filter(|&&t| distance < t).count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlarmEvent {
    pub frame: usize,
    pub zone: usize,
    pub distance: f64,
    pub level: usize,
    pub triggered: bool,
}

/// Alarm state of every zone for one box.
pub fn check_zones(frame: usize, b: &BBox, zones: &[Zone]) -> Result<Vec<AlarmEvent>> {
    zones
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let d = zone_distance(b, z)?;
            let level = zone_alarm(d, z);
            Ok(AlarmEvent { frame, zone: i, distance: d, level, triggered: level == z.max_level() })
        })
        .collect()
}

/// One zone per line: `x1,y1 x2,y2 ... | t1,t2,...`. Blank lines and `#` comments are skipped.
pub fn parse_zones(text: &str) -> Result<Vec<Zone>> {
    let mut zones = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |m: String| Error::Parse { location: format!("zone line {}", no + 1), message: m };
        let (poly, thr) = line.split_once('|').ok_or_else(|| err("missing '|' before thresholds".into()))?;
        let num = |s: &str| s.trim().parse::<f64>().map_err(|e| err(format!("{s:?}: {e}")));
        let vertices = poly
            .split_whitespace()
            .map(|p| {
                let (x, y) = p.split_once(',').ok_or_else(|| err(format!("vertex {p:?} is not x,y")))?;
                Ok((num(x)?, num(y)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let thresholds = thr.split(',').filter(|s| !s.trim().is_empty()).map(num).collect::<Result<Vec<_>>>()?;
        zones.push(Zone::new(vertices, thresholds).map_err(|e| err(e.to_string()))?);
    }
    Ok(zones)
}

pub fn load_zones(path: &Path) -> Result<Vec<Zone>> {
    parse_zones(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn square() -> Zone {
        Zone::new(vec![(100.0, 100.0), (200.0, 100.0), (200.0, 200.0), (100.0, 200.0)], vec![50.0, 20.0, 5.0]).unwrap()
    }

    fn dense_oracle(b: &BBox, z: &Zone) -> f64 {
        let mut best = f64::INFINITY;
        for (a, e) in z.edges() {
            for k in 0..=4000 {
                let t = k as f64 / 4000.0;
                let p = (a.0 + t * (e.0 - a.0), a.1 + t * (e.1 - a.1));
                best = best.min(point_box_distance(p, b));
            }
        }
        best
    }

    #[test]
    fn inside_and_overlap_are_zero() {
        let z = square();
        assert_eq!(zone_distance(&BBox::new(150.0, 150.0, 10.0, 10.0), &z).unwrap(), 0.0);
        assert_eq!(zone_distance(&BBox::new(150.0, 150.0, 400.0, 400.0), &z).unwrap(), 0.0);
        assert_eq!(zone_distance(&BBox::new(95.0, 150.0, 20.0, 4.0), &z).unwrap(), 0.0);
    }

    #[test]
    fn far_box_matches_dense_sampling() {
        let z = Zone::new(vec![(100.0, 100.0), (220.0, 130.0), (160.0, 210.0)], vec![10.0]).unwrap();
        for b in [BBox::new(20.0, 30.0, 1.0, 1.0), BBox::new(300.0, 150.0, 1.0, 1.0), BBox::new(150.0, 260.0, 6.0, 3.0), BBox::new(60.0, 200.0, 1.0, 1.0)] {
            let d = zone_distance(&b, &z).unwrap();
            assert!((d - dense_oracle(&b, &z)).abs() < 0.05, "{b:?}: {d} vs {}", dense_oracle(&b, &z));
        }
        // axis-aligned case by hand: box right edge at 80.5, zone left edge at 100
        assert!((zone_distance(&BBox::new(80.0, 150.0, 1.0, 1.0), &square()).unwrap() - 19.5).abs() < 1e-12);
    }

    #[test]
    fn alarm_levels() {
        let z = square();
        assert_eq!(zone_alarm(0.0, &z), 3);
        assert_eq!(zone_alarm(60.0, &z), 0);
        assert_eq!(zone_alarm(50.0, &z), 0);
        assert_eq!(zone_alarm(49.9, &z), 1);
        assert_eq!(zone_alarm(20.0, &z), 1);
        assert_eq!(zone_alarm(19.0, &z), 2);
        assert_eq!(zone_alarm(4.0, &z), 3);
        let ev = check_zones(7, &BBox::new(150.0, 150.0, 4.0, 4.0), &[z]).unwrap();
        assert!(ev[0].triggered && ev[0].frame == 7);
    }

    #[test]
    fn invalid_zones() {
        assert!(matches!(Zone::new(vec![(0.0, 0.0), (1.0, 1.0)], vec![1.0]), Err(Error::DegeneratePolygon(_))));
        assert!(matches!(Zone::new(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)], vec![1.0]), Err(Error::DegeneratePolygon(_))));
        // bow tie
        assert!(matches!(Zone::new(vec![(0.0, 0.0), (10.0, 10.0), (10.0, 0.0), (0.0, 10.0)], vec![1.0]), Err(Error::DegeneratePolygon(_))));
        assert!(Zone::new(vec![(0.0, 0.0), (10.0, 0.0), (0.0, 10.0)], vec![5.0, 5.0]).is_err());
        assert!(Zone::new(vec![(0.0, 0.0), (10.0, 0.0), (0.0, 10.0)], vec![5.0, 10.0]).is_err());
    }

    #[test]
    fn parse_zone_file() {
        let zones = parse_zones("# harbour\n100,100 200,100 200,200 100,200 | 50,20,5\n\n0,0 10,0 5,8|3\n").unwrap();
        assert_eq!(zones.len(), 2);
        assert_eq!(zones[0], square());
        assert_eq!(zones[1].thresholds, vec![3.0]);
        assert!(parse_zones("0,0 10,0 5,8").is_err());
        assert!(parse_zones("0,0 10,0 5 | 3").is_err());
        assert!(parse_zones("0,0 10,0 5,8 | 3,4").is_err());
    }

    #[test]
    fn approaching_track_raises_levels_monotonically() {
        let z = square();
        let levels: Vec<usize> = (0..60).map(|i| zone_alarm(zone_distance(&BBox::new(20.0 + 2.0 * i as f64, 150.0, 10.0, 10.0), &z).unwrap(), &z)).collect();
        assert!(levels.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(*levels.first().unwrap(), 0);
        assert_eq!(*levels.last().unwrap(), 3);
    }

    proptest! {
        #[test]
        fn distance_is_lipschitz(x in 0.0f64..300.0, y in 0.0f64..300.0, dx in -1.0f64..1.0, dy in -1.0f64..1.0) {
            let z = square();
            let a = BBox::new(x, y, 8.0, 6.0);
            let b = BBox::new(x + dx, y + dy, 8.0, 6.0);
            let (da, db) = (zone_distance(&a, &z).unwrap(), zone_distance(&b, &z).unwrap());
            prop_assert!((da - db).abs() <= dx.hypot(dy) + 1e-9);
            prop_assert!(da >= 0.0);
        }

        #[test]
        fn levels_non_increasing(d1 in 0.0f64..80.0, d2 in 0.0f64..80.0) {
            let z = square();
            let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            prop_assert!(zone_alarm(lo, &z) >= zone_alarm(hi, &z));
        }
    }
}
