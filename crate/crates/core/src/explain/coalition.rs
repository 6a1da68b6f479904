use crate::error::{Error, Result};

/// Subset of feature indices `0..d`, stored as a membership mask.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Coalition {
    members: Vec<bool>,
}

impl Coalition {
    pub fn empty(d: usize) -> Self {
        Self {
            members: vec![false; d],
        }
    }

    pub fn full(d: usize) -> Self {
        Self {
            members: vec![true; d],
        }
    }

    pub fn from_indices(d: usize, indices: &[usize]) -> Result<Self> {
        let mut c = Self::empty(d);
        for &i in indices {
            if i >= d {
                return Err(Error::InvalidArgument(format!("feature {i} outside 0..{d}")));
            }
            if c.members[i] {
                return Err(Error::InvalidArgument(format!("feature {i} listed twice")));
            }
            c.members[i] = true;
        }
        Ok(c)
    }

    /// Bit `i` of `mask` selects feature `i`; `d ≤ 64`.
    pub fn from_mask(d: usize, mask: u64) -> Self {
        Self {
            members: (0..d).map(|i| mask >> i & 1 == 1).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.members.len()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members[i]
    }

    pub fn insert(&mut self, i: usize) {
        self.members[i] = true;
    }

    pub fn len(&self) -> usize {
        self.members.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.members.iter().any(|&m| m)
    }

    pub fn indices(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.members[i]).collect()
    }

    pub fn mask(&self) -> &[bool] {
        &self.members
    }
}

/// Keeps observed features and replaces the rest with the baseline.
pub fn mask_state(state: &[f64], coalition: &Coalition, baseline: &[f64]) -> Result<Vec<f64>> {
    if state.len() != baseline.len() || state.len() != coalition.dim() {
        return Err(Error::DimensionMismatch {
            context: "masked state",
            expected: coalition.dim(),
            actual: if state.len() != coalition.dim() { state.len() } else { baseline.len() },
        });
    }
    Ok(state
        .iter()
        .zip(baseline)
        .zip(coalition.mask())
        .map(|((&s, &b), &keep)| if keep { s } else { b })
        .collect())
}
