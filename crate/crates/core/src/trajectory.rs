use serde::{Deserialize, Serialize};

use crate::error::DataError;

/// A sampled end-effector trajectory: positions (m), optional velocities (m/s)
/// and external forces (N) on `n_axes` translational axes at a fixed period.
///
/// Rows are time steps. When velocities are absent they are reconstructed by
/// backward differences with the first velocity set to zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TrajectoryFile", into = "TrajectoryFile")]
pub struct Trajectory {
    dt: f64,
    n_axes: usize,
    positions: Vec<Vec<f64>>,
    forces: Vec<Vec<f64>>,
    velocities: Option<Vec<Vec<f64>>>,
}

/// On-disk layout: `{"dt", "n_axes", "x", "F", "xdot"?}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrajectoryFile {
    dt: f64,
    n_axes: usize,
    x: Vec<Vec<f64>>,
    #[serde(rename = "F")]
    f: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    xdot: Option<Vec<Vec<f64>>>,
}

impl TryFrom<TrajectoryFile> for Trajectory {
    type Error = DataError;

    fn try_from(file: TrajectoryFile) -> Result<Self, Self::Error> {
        let traj = Trajectory::new(file.dt, file.x, file.f, file.xdot)?;
        if traj.n_axes != file.n_axes {
            return Err(DataError::RaggedRow {
                field: "x",
                row: 0,
                got: traj.n_axes,
                expected: file.n_axes,
            });
        }
        Ok(traj)
    }
}

impl From<Trajectory> for TrajectoryFile {
    fn from(t: Trajectory) -> Self {
        TrajectoryFile {
            dt: t.dt,
            n_axes: t.n_axes,
            x: t.positions,
            f: t.forces,
            xdot: t.velocities,
        }
    }
}

fn check_rows(
    field: &'static str,
    rows: &[Vec<f64>],
    len: usize,
    width: usize,
) -> Result<(), DataError> {
    if rows.len() != len {
        return Err(DataError::LengthMismatch {
            field,
            got: rows.len(),
            expected: len,
        });
    }
    for (row, values) in rows.iter().enumerate() {
        if values.len() != width {
            return Err(DataError::RaggedRow {
                field,
                row,
                got: values.len(),
                expected: width,
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(DataError::NonFinite { field, row });
        }
    }
    Ok(())
}

impl Trajectory {
    pub fn new(
        dt: f64,
        positions: Vec<Vec<f64>>,
        forces: Vec<Vec<f64>>,
        velocities: Option<Vec<Vec<f64>>>,
    ) -> Result<Self, DataError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(DataError::BadPeriod(dt));
        }
        let len = positions.len();
        if len < 3 {
            return Err(DataError::TooShort(len));
        }
        let n_axes = positions[0].len();
        if n_axes == 0 {
            return Err(DataError::RaggedRow {
                field: "x",
                row: 0,
                got: 0,
                expected: 1,
            });
        }
        check_rows("x", &positions, len, n_axes)?;
        check_rows("F", &forces, len, n_axes)?;
        if let Some(v) = &velocities {
            check_rows("xdot", v, len, n_axes)?;
        }
        Ok(Self {
            dt,
            n_axes,
            positions,
            forces,
            velocities,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_axes(&self) -> usize {
        self.n_axes
    }

    pub fn duration(&self) -> f64 {
        self.dt * (self.len() - 1) as f64
    }

    pub fn position(&self, t: usize) -> &[f64] {
        &self.positions[t]
    }

    pub fn force(&self, t: usize) -> &[f64] {
        &self.forces[t]
    }

    pub fn positions(&self) -> &[Vec<f64>] {
        &self.positions
    }

    pub fn forces(&self) -> &[Vec<f64>] {
        &self.forces
    }

    pub fn has_velocities(&self) -> bool {
        self.velocities.is_some()
    }

    /// Stored velocity, or the backward difference `(x_t - x_{t-1}) / dt`.
    pub fn velocity(&self, t: usize, axis: usize) -> f64 {
        match &self.velocities {
            Some(v) => v[t][axis],
            None if t == 0 => 0.0,
            None => (self.positions[t][axis] - self.positions[t - 1][axis]) / self.dt,
        }
    }

    pub fn velocity_row(&self, t: usize) -> Vec<f64> {
        (0..self.n_axes).map(|a| self.velocity(t, a)).collect()
    }

    /// Largest external force magnitude (Euclidean norm per sample).
    pub fn peak_force(&self) -> f64 {
        self.forces
            .iter()
            .map(|f| f.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Copy with velocities removed, so they are reconstructed on demand.
    pub fn without_velocities(&self) -> Self {
        Self {
            velocities: None,
            ..self.clone()
        }
    }

    /// Copy with the same force sequence scaled by `c`.
    pub fn with_scaled_forces(&self, c: f64) -> Self {
        let forces = self
            .forces
            .iter()
            .map(|row| row.iter().map(|f| f * c).collect())
            .collect();
        Self {
            forces,
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(v: &[f64]) -> Vec<Vec<f64>> {
        v.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn reconstructs_backward_velocity() {
        let t = Trajectory::new(0.5, rows(&[0.0, 1.0, 3.0]), rows(&[0.0; 3]), None).unwrap();
        assert_eq!(t.velocity(0, 0), 0.0);
        assert_eq!(t.velocity(1, 0), 2.0);
        assert_eq!(t.velocity(2, 0), 4.0);
    }

    #[test]
    fn rejects_short_and_ragged() {
        assert_eq!(
            Trajectory::new(0.1, rows(&[0.0, 1.0]), rows(&[0.0, 0.0]), None),
            Err(DataError::TooShort(2))
        );
        let err = Trajectory::new(0.1, rows(&[0.0, 1.0, 2.0]), rows(&[0.0, 0.0]), None);
        assert!(matches!(err, Err(DataError::LengthMismatch { field: "F", .. })));
        let err = Trajectory::new(0.0, rows(&[0.0, 1.0, 2.0]), rows(&[0.0; 3]), None);
        assert!(matches!(err, Err(DataError::BadPeriod(_))));
    }

    #[test]
    fn json_layout_round_trips() {
        let t = Trajectory::new(
            0.05,
            vec![vec![0.0, 1.0], vec![0.1, 1.0], vec![0.2, 1.5]],
            vec![vec![0.0, 0.0], vec![0.0, -1.0], vec![0.5, 0.0]],
            None,
        )
        .unwrap();
        let json = serde_json::to_string(&t).unwrap();
        assert!(json.contains("\"F\""));
        assert!(!json.contains("xdot"));
        let back: Trajectory = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn json_rejects_unknown_keys_and_width_mismatch() {
        let bad = r#"{"dt":0.1,"n_axes":1,"x":[[0],[1],[2]],"F":[[0],[0],[0]],"extra":1}"#;
        assert!(serde_json::from_str::<Trajectory>(bad).is_err());
        let bad = r#"{"dt":0.1,"n_axes":2,"x":[[0],[1],[2]],"F":[[0],[0],[0]]}"#;
        assert!(serde_json::from_str::<Trajectory>(bad).is_err());
    }
}
