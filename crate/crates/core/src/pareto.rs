use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::bo::hypervolume::hypervolume;

/// Task and compliance objective values. Both are maximized.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectivePoint {
    pub y_t: f64,
    pub y_c: f64,
}

impl ObjectivePoint {
    pub const fn new(y_t: f64, y_c: f64) -> Self {
        Self { y_t, y_c }
    }
}

/// Strict Pareto dominance under maximization.
pub fn dominates(a: &ObjectivePoint, b: &ObjectivePoint) -> bool {
    a.y_t >= b.y_t && a.y_c >= b.y_c && (a.y_t > b.y_t || a.y_c > b.y_c)
}

/// Indices of the non-dominated points, ascending in `y_c`.
/// Among exact duplicates the earliest index is kept.
pub fn pareto_indices(points: &[ObjectivePoint]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (&points[i], &points[j]);
        b.y_c
            .partial_cmp(&a.y_c)
            .unwrap_or(Ordering::Equal)
            .then(b.y_t.partial_cmp(&a.y_t).unwrap_or(Ordering::Equal))
            .then(i.cmp(&j))
    });
    let mut best_t = f64::NEG_INFINITY;
    let mut kept = Vec::new();
    for i in order {
        if points[i].y_t > best_t {
            best_t = points[i].y_t;
            kept.push(i);
        }
    }
    kept.reverse();
    kept
}

pub fn pareto_front(points: &[ObjectivePoint]) -> Vec<ObjectivePoint> {
    pareto_indices(points).into_iter().map(|i| points[i]).collect()
}

/// Evaluated parameter vectors with their objective values, plus the fixed
/// reference (worst) and ideal (best) corners used for normalization.
#[derive(Clone, Debug)]
pub struct ParetoArchive {
    records: Vec<(Vec<f64>, ObjectivePoint)>,
    reference: ObjectivePoint,
    ideal: ObjectivePoint,
}

impl ParetoArchive {
    pub fn new(reference: ObjectivePoint, ideal: ObjectivePoint) -> Self {
        Self {
            records: Vec::new(),
            reference,
            ideal,
        }
    }

    pub fn push(&mut self, theta: Vec<f64>, y: ObjectivePoint) {
        self.records.push((theta, y));
    }

    pub fn records(&self) -> &[(Vec<f64>, ObjectivePoint)] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn reference(&self) -> ObjectivePoint {
        self.reference
    }

    pub fn ideal(&self) -> ObjectivePoint {
        self.ideal
    }

    /// Affine map sending the reference to (0,0) and the ideal to (1,1).
    /// Points worse than the reference are clamped onto it.
    pub fn normalize(&self, y: &ObjectivePoint) -> ObjectivePoint {
        let (r, i) = (self.reference, self.ideal);
        ObjectivePoint {
            y_t: ((y.y_t - r.y_t) / (i.y_t - r.y_t)).max(0.0),
            y_c: ((y.y_c - r.y_c) / (i.y_c - r.y_c)).max(0.0),
        }
    }

    pub fn normalized_points(&self) -> Vec<ObjectivePoint> {
        self.records.iter().map(|(_, y)| self.normalize(y)).collect()
    }

    /// Record indices on the front, ascending in `y_c`.
    pub fn front_indices(&self) -> Vec<usize> {
        let ys: Vec<ObjectivePoint> = self.records.iter().map(|(_, y)| *y).collect();
        pareto_indices(&ys)
    }

    pub fn front(&self) -> Vec<(Vec<f64>, ObjectivePoint)> {
        self.front_indices()
            .into_iter()
            .map(|i| self.records[i].clone())
            .collect()
    }

    /// Hypervolume of the normalized front with reference (0,0).
    pub fn hypervolume(&self) -> f64 {
        hypervolume(&self.normalized_points(), &ObjectivePoint::new(0.0, 0.0))
    }
}
