//! The excess process on the quotient lattice `Z^d / <1>`.
//!
//! Two integer vectors are identified when they differ by a multiple of the
//! all-ones vector. Every class has exactly one representative with minimum
//! component zero; that representative is what [`ExcessState`] stores.
//! Arrivals move the excess; the server never does.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::queue::ArrivalVector;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ExcessState {
    x: Vec<i64>,
}

impl ExcessState {
    /// Accepts only canonical vectors (nonempty, minimum exactly zero).
    pub fn new(x: Vec<i64>) -> Result<Self> {
        match x.iter().min() {
            Some(0) => Ok(ExcessState { x }),
            _ => Err(Error::NonCanonical(x)),
        }
    }

    pub(crate) fn from_canonical_unchecked(x: Vec<i64>) -> Self {
        debug_assert_eq!(x.iter().min(), Some(&0));
        ExcessState { x }
    }

    pub fn origin(d: usize) -> Self {
        ExcessState { x: vec![0; d] }
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.x
    }

    pub fn into_vec(self) -> Vec<i64> {
        self.x
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn is_origin(&self) -> bool {
        self.x.iter().all(|&v| v == 0)
    }

    /// In-place [`excess_step`] for simulation loops.
    pub fn advance(&mut self, a: &[bool]) {
        debug_assert_eq!(a.len(), self.x.len());
        let mut min = i64::MAX;
        for (xi, &ai) in self.x.iter_mut().zip(a) {
            *xi += i64::from(ai);
            min = min.min(*xi);
        }
        if min != 0 {
            self.x.iter_mut().for_each(|xi| *xi -= min);
        }
    }
}

pub fn canonicalize(v: &[i64]) -> ExcessState {
    let min = v.iter().copied().min().unwrap_or(0);
    ExcessState { x: v.iter().map(|&vi| vi - min).collect() }
}

/// Whether `u - v` is an integer multiple of the all-ones vector.
pub fn equivalent(u: &[i64], v: &[i64]) -> Result<bool> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch { left: u.len(), right: v.len() });
    }
    let mut diffs = u.iter().zip(v).map(|(a, b)| a - b);
    Ok(match diffs.next() {
        None => true,
        Some(first) => diffs.all(|d| d == first),
    })
}

pub fn excess_step(x: &ExcessState, a: &ArrivalVector) -> ExcessState {
    let mut next = x.clone();
    next.advance(&a.0);
    next
}

/// Difference coordinates of a class in low dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DifferenceCoords {
    /// `x1 - x2`
    D2(i64),
    /// `(x1 - x2, x1 - x3)`
    D3(i64, i64),
}

/// Works on any representative of the class, canonical or not.
pub fn to_difference_coords(x: &[i64]) -> Result<DifferenceCoords> {
    match *x {
        [a, b] => Ok(DifferenceCoords::D2(a - b)),
        [a, b, c] => Ok(DifferenceCoords::D3(a - b, a - c)),
        _ => Err(Error::UnsupportedDimension(x.len())),
    }
}

pub fn from_difference_coords(c: DifferenceCoords) -> ExcessState {
    match c {
        DifferenceCoords::D2(u) => canonicalize(&[0, -u]),
        DifferenceCoords::D3(u, w) => canonicalize(&[0, -u, -w]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arr(bits: &[u8]) -> ArrivalVector {
        ArrivalVector::from_bits(bits)
    }

    #[test]
    fn canonicalize_examples() {
        assert_eq!(canonicalize(&[-1, 0, 0]).as_slice(), &[0, 1, 1]);
        assert_eq!(canonicalize(&[3, 1, 2]).as_slice(), &[2, 0, 1]);
        for k in [-5, 0, 9] {
            assert!(canonicalize(&[k; 4]).is_origin());
        }
    }

    #[test]
    fn equivalent_examples() {
        assert!(equivalent(&[-1, 0, 0], &[0, 1, 1]).unwrap());
        assert!(!equivalent(&[0, 0], &[0, 1]).unwrap());
        assert!(equivalent(&[5, 2, 7], &[8, 5, 10]).unwrap());
        assert!(matches!(equivalent(&[0, 0], &[0, 0, 0]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn excess_step_examples() {
        let origin = ExcessState::origin(3);
        assert!(excess_step(&origin, &arr(&[1, 1, 1])).is_origin());
        let x = ExcessState::new(vec![0, 1]).unwrap();
        assert!(excess_step(&x, &arr(&[1, 0])).is_origin());
        let x = ExcessState::new(vec![2, 0, 1]).unwrap();
        assert_eq!(excess_step(&x, &arr(&[0, 1, 0])).as_slice(), &[1, 0, 0]);
    }

    #[test]
    fn non_canonical_rejected() {
        assert!(ExcessState::new(vec![1, 2]).is_err());
        assert!(ExcessState::new(vec![-1, 0]).is_err());
        assert!(ExcessState::new(vec![]).is_err());
    }

    #[test]
    fn difference_coord_examples() {
        assert_eq!(to_difference_coords(&[0, 3]).unwrap(), DifferenceCoords::D2(-3));
        assert_eq!(to_difference_coords(&[2, 0, 1]).unwrap(), DifferenceCoords::D3(2, 1));
        assert!(matches!(to_difference_coords(&[0, 0, 0, 0]), Err(Error::UnsupportedDimension(4))));
    }

    #[test]
    fn d2_difference_increments_over_all_arrivals() {
        let x = ExcessState::new(vec![0, 2]).unwrap();
        let diff = |s: &ExcessState| match to_difference_coords(s.as_slice()).unwrap() {
            DifferenceCoords::D2(u) => u,
            _ => unreachable!(),
        };
        let before = diff(&x);
        let deltas: Vec<i64> = [[0, 0], [1, 0], [0, 1], [1, 1]]
            .iter()
            .map(|a| diff(&excess_step(&x, &arr(a))) - before)
            .collect();
        assert_eq!(deltas, vec![0, 1, -1, 0]);
    }

    /// Brute force over every arrival sequence of length n <= 6: the walk is
    /// back at its start class exactly when every component got the same
    /// number of arrivals.
    #[test]
    fn return_iff_equal_increment_counts() {
        for d in 2..=3usize {
            let start = ExcessState::new(if d == 2 { vec![0, 1] } else { vec![2, 0, 1] }).unwrap();
            let outcomes = 1u32 << d;
            for n in 0..=6u32 {
                if d == 3 && n > 5 {
                    continue;
                }
                for code in 0..outcomes.pow(n) {
                    let mut x = start.clone();
                    let mut counts = vec![0u32; d];
                    let mut c = code;
                    for _ in 0..n {
                        let a = ArrivalVector::from_mask(c % outcomes, d);
                        c /= outcomes;
                        for (cnt, &b) in counts.iter_mut().zip(&a.0) {
                            *cnt += u32::from(b);
                        }
                        x = excess_step(&x, &a);
                    }
                    let equal = counts.iter().all(|&k| k == counts[0]);
                    assert_eq!(x == start, equal);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn canonicalize_is_idempotent(v in prop::collection::vec(-50i64..50, 1..7)) {
            let c = canonicalize(&v);
            prop_assert_eq!(canonicalize(c.as_slice()), c.clone());
            prop_assert!(equivalent(&v, c.as_slice()).unwrap());
        }

        #[test]
        fn step_commutes_with_canonicalization(
            v in prop::collection::vec(-50i64..50, 2..7),
            mask in any::<u32>(),
        ) {
            let a = ArrivalVector::from_mask(mask, v.len());
            let shifted: Vec<i64> = v.iter().zip(&a.0).map(|(x, &b)| x + i64::from(b)).collect();
            prop_assert_eq!(canonicalize(&shifted), excess_step(&canonicalize(&v), &a));
        }

        #[test]
        fn class_consistency(
            u in prop::collection::vec(-6i64..6, 3),
            v in prop::collection::vec(-6i64..6, 3),
        ) {
            prop_assert_eq!(equivalent(&u, &v).unwrap(), canonicalize(&u) == canonicalize(&v));
        }

        #[test]
        fn difference_coords_round_trip(v in prop::collection::vec(-40i64..40, 2..4), k in -20i64..20) {
            let c = canonicalize(&v);
            let dc = to_difference_coords(&v).unwrap();
            let shifted: Vec<i64> = v.iter().map(|x| x + k).collect();
            prop_assert_eq!(to_difference_coords(&shifted).unwrap(), dc);
            prop_assert_eq!(from_difference_coords(dc), c);
        }
    }
}
