//! Exact two-objective hypervolume by staircase sweep.

use crate::pareto::{pareto_front, ObjectivePoint};

fn clamp_to(y: &ObjectivePoint, r: &ObjectivePoint) -> ObjectivePoint {
    ObjectivePoint::new(y.y_t.max(r.y_t), y.y_c.max(r.y_c))
}

/// Area of `[r, y]` boxes over a sequence sorted ascending in `y_c` and
/// non-increasing in `y_t`.
fn staircase(sorted: impl Iterator<Item = ObjectivePoint>, r: &ObjectivePoint) -> f64 {
    let mut area = 0.0;
    let mut prev_c = r.y_c;
    for y in sorted {
        area += (y.y_c - prev_c) * (y.y_t - r.y_t);
        prev_c = y.y_c;
    }
    area
}

/// Area dominated by `front` and bounded below by `r`. Points worse than `r`
/// are clamped onto it first, so they add nothing.
pub fn hypervolume(front: &[ObjectivePoint], r: &ObjectivePoint) -> f64 {
    let clamped: Vec<ObjectivePoint> = front.iter().map(|y| clamp_to(y, r)).collect();
    staircase(pareto_front(&clamped).into_iter(), r)
}

/// A front prepared for repeated improvement queries.
#[derive(Clone, Debug)]
pub struct Staircase {
    points: Vec<ObjectivePoint>,
    reference: ObjectivePoint,
    volume: f64,
}

impl Staircase {
    pub fn new(front: &[ObjectivePoint], r: &ObjectivePoint) -> Self {
        let clamped: Vec<ObjectivePoint> = front.iter().map(|y| clamp_to(y, r)).collect();
        let points = pareto_front(&clamped);
        let volume = staircase(points.iter().copied(), r);
        Self {
            points,
            reference: *r,
            volume,
        }
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn points(&self) -> &[ObjectivePoint] {
        &self.points
    }

    /// `hv(front + q) - hv(front)`: the box `[r, q]` minus the part of it the
    /// front already covers.
    pub fn improvement(&self, q: &ObjectivePoint) -> f64 {
        let r = &self.reference;
        let q = clamp_to(q, r);
        let bx = (q.y_t - r.y_t) * (q.y_c - r.y_c);
        if bx <= 0.0 {
            return 0.0;
        }
        let covered = staircase(
            self.points
                .iter()
                .map(|y| ObjectivePoint::new(y.y_t.min(q.y_t), y.y_c.min(q.y_c))),
            r,
        );
        (bx - covered).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;

    fn p(t: f64, c: f64) -> ObjectivePoint {
        ObjectivePoint::new(t, c)
    }

    const O: ObjectivePoint = ObjectivePoint::new(0.0, 0.0);

    #[test]
    fn examples() {
        assert_eq!(hypervolume(&[], &O), 0.0);
        assert_eq!(hypervolume(&[p(1.0, 1.0)], &O), 1.0);
        // inclusion-exclusion: 2*1 + 1*2 - 1*1
        assert_eq!(hypervolume(&[p(2.0, 1.0), p(1.0, 2.0)], &O), 3.0);
    }

    #[test]
    fn clamps_points_below_reference() {
        assert_eq!(hypervolume(&[p(-1.0, 5.0), p(1.0, 1.0)], &O), 1.0);
    }

    #[test]
    fn permutation_and_dominated_insertion_invariant() {
        let mut s = RandomStream::new(5, "hv-perm");
        for _ in 0..100 {
            let mut pts: Vec<_> = (0..8).map(|_| p(s.uniform(), s.uniform())).collect();
            let hv = hypervolume(&pts, &O);
            pts.reverse();
            assert_eq!(hypervolume(&pts, &O), hv);
            let base = pts[s.below(pts.len())];
            pts.push(p(base.y_t * 0.5, base.y_c * 0.9));
            assert!((hypervolume(&pts, &O) - hv).abs() < 1e-15);
        }
    }

    #[test]
    fn improvement_matches_recomputation() {
        let mut s = RandomStream::new(6, "hv-imp");
        for _ in 0..500 {
            let n = s.below(10);
            let pts: Vec<_> = (0..n).map(|_| p(s.uniform(), s.uniform())).collect();
            let q = p(s.uniform() * 1.2 - 0.1, s.uniform() * 1.2 - 0.1);
            let st = Staircase::new(&pts, &O);
            let mut with = pts.clone();
            with.push(q);
            let direct = hypervolume(&with, &O) - hypervolume(&pts, &O);
            assert!((st.improvement(&q) - direct).abs() < 1e-12);
            assert!(st.improvement(&q) >= 0.0);
        }
    }
}
