use crate::error::{Error, Result};

/// Probability vector with strictly positive entries, renormalized to sum 1.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(raw: Vec<f64>) -> Result<Self> {
        if raw.len() < 2 {
            return Err(Error::InvalidWeights(format!(
                "need at least two weights, got {}",
                raw.len()
            )));
        }
        if let Some(bad) = raw.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidWeights(format!("weight {bad} is not positive")));
        }
        let sum: f64 = raw.iter().sum();
        Ok(WeightVector(raw.into_iter().map(|w| w / sum).collect()))
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![1.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_uniform(&self) -> bool {
        let u = 1.0 / self.0.len() as f64;
        self.0.iter().all(|w| (w - u).abs() <= 1e-12)
    }

    /// `(w_{perm[0]}, ..., w_{perm[n-1]})`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.len())?;
        Ok(WeightVector(perm.iter().map(|&i| self.0[i]).collect()))
    }

    /// Cyclic shift `(w_2, ..., w_n, w_1)` applied `k` times.
    pub fn shifted(&self, k: usize) -> Self {
        let mut v = self.0.clone();
        v.rotate_left(k % self.len());
        WeightVector(v)
    }

    /// Renormalized weights with entry `i` removed.
    pub fn without(&self, i: usize) -> Result<Self> {
        let rest: Vec<f64> = self
            .0
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, w)| *w)
            .collect();
        if rest.len() < 2 {
            return Err(Error::InvalidWeights("cannot drop below two weights".into()));
        }
        let sum: f64 = rest.iter().sum();
        Ok(WeightVector(rest.into_iter().map(|w| w / sum).collect()))
    }
}

pub(crate) fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(Error::InvalidParameter(format!(
            "permutation has length {}, expected {n}",
            perm.len()
        )));
    }
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::InvalidParameter(format!("{perm:?} is not a permutation")));
        }
        seen[p] = true;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renormalizes_and_validates() {
        let w = WeightVector::new(vec![2.0, 3.0, 5.0]).unwrap();
        assert_eq!(w.as_slice(), &[0.2, 0.3, 0.5]);
        assert!((w.as_slice().iter().sum::<f64>() - 1.0).abs() <= 1e-14);
        assert!(WeightVector::new(vec![1.0, 0.0]).is_err());
        assert!(WeightVector::new(vec![1.0, -1.0]).is_err());
        assert!(WeightVector::new(vec![1.0]).is_err());
        assert!(WeightVector::new(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn shifts_and_removals() {
        let w = WeightVector::new(vec![0.5, 0.25, 0.25]).unwrap();
        assert_eq!(w.shifted(1).as_slice(), &[0.25, 0.25, 0.5]);
        assert_eq!(w.shifted(3), w);
        assert_eq!(w.without(0).unwrap().as_slice(), &[0.5, 0.5]);
        assert_eq!(w.permuted(&[2, 0, 1]).unwrap().as_slice(), &[0.25, 0.5, 0.25]);
        assert!(w.permuted(&[0, 0, 1]).is_err());
        assert!(WeightVector::uniform(4).unwrap().is_uniform());
    }
}
