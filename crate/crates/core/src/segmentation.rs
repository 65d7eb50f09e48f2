use crate::error::DataError;

/// Left-to-right phase labels over a trajectory.
///
/// Labels are stored 0-based (`0..m`); files and printed output use 1-based
/// labels. The first sample is always in phase 0, the last in phase `m - 1`,
/// labels never decrease and every phase occurs.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Segmentation {
    labels: Vec<usize>,
    m: usize,
}

impl Segmentation {
    pub fn new(labels: Vec<usize>, m: usize) -> Result<Self, DataError> {
        let bad = |msg: String| Err(DataError::Segmentation(msg));
        if m == 0 {
            return bad("segment count must be at least 1".into());
        }
        if labels.is_empty() {
            return bad("empty label sequence".into());
        }
        if labels[0] != 0 {
            return bad(format!("first label is {}, expected 1", labels[0] + 1));
        }
        if *labels.last().unwrap() != m - 1 {
            return bad(format!(
                "last label is {}, expected {}",
                labels.last().unwrap() + 1,
                m
            ));
        }
        for (t, w) in labels.windows(2).enumerate() {
            if w[1] < w[0] {
                return bad(format!("label decreases at t={}", t + 1));
            }
            if w[1] > w[0] + 1 {
                return bad(format!("label {} skipped at t={}", w[0] + 2, t + 1));
            }
        }
        Ok(Self { labels, m })
    }

    /// Build from 1-based labels as found in files.
    pub fn from_one_based(labels: &[i64], m: usize) -> Result<Self, DataError> {
        let mut out = Vec::with_capacity(labels.len());
        for &l in labels {
            if l < 1 || l as usize > m {
                return Err(DataError::Segmentation(format!(
                    "label {l} outside 1..={m}"
                )));
            }
            out.push(l as usize - 1);
        }
        Self::new(out, m)
    }

    /// `starts[j]` is the first index of phase `j + 1`.
    pub fn from_boundaries(len: usize, starts: &[usize]) -> Result<Self, DataError> {
        let m = starts.len() + 1;
        let mut labels = vec![0; len];
        let mut prev = 0;
        for (j, &s) in starts.iter().enumerate() {
            if s <= prev || s >= len {
                return Err(DataError::Segmentation(format!(
                    "boundary {s} out of order or range"
                )));
            }
            labels[s..].iter_mut().for_each(|l| *l = j + 1);
            prev = s;
        }
        Self::new(labels, m)
    }

    /// All samples in one phase.
    pub fn single(len: usize) -> Self {
        Self {
            labels: vec![0; len],
            m: 1,
        }
    }

    /// `m` phases of (nearly) equal length, boundaries placed on the interior.
    pub fn uniform(len: usize, m: usize) -> Result<Self, DataError> {
        let interior = len.saturating_sub(2);
        if m == 0 || m > interior.max(1) {
            return Err(DataError::Segmentation(format!(
                "cannot place {m} phases in {len} samples"
            )));
        }
        let starts: Vec<usize> = (1..m).map(|j| 1 + j * interior / m).collect();
        Self::from_boundaries(len, &starts)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, t: usize) -> usize {
        self.labels[t]
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.labels.iter().map(|l| l + 1).collect()
    }

    /// First index of each phase after the first.
    pub fn boundaries(&self) -> Vec<usize> {
        (1..self.labels.len())
            .filter(|&t| self.labels[t] != self.labels[t - 1])
            .collect()
    }

    /// Half-open `[start, end)` range of every phase.
    pub fn ranges(&self) -> Vec<(usize, usize)> {
        let mut starts = vec![0];
        starts.extend(self.boundaries());
        let mut ends: Vec<usize> = starts[1..].to_vec();
        ends.push(self.labels.len());
        starts.into_iter().zip(ends).collect()
    }

    /// Number of samples carrying each label.
    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.m];
        for &l in &self.labels {
            c[l] += 1;
        }
        c
    }
}
