use crate::error::{parameter, Result};
use crate::hypercube::{Key, MAX_DPRIME};

/// Vertices within Hamming distance `rho` of a center, nearest first.
///
/// Distance class `i` flips every `i`-subset of bit positions, with subsets
/// in lexicographic order of their ascending positions. Yields
/// `sum_{i <= rho} C(dprime, i)` distinct keys.
#[derive(Debug, Clone)]
pub struct HammingBall {
    center: u64,
    dprime: u32,
    rho: u32,
    // ascending flipped positions of the next key; None once exhausted
    positions: Option<Vec<u32>>,
    radius: u32,
}

/// Enumerates the Hamming ball of radius `rho` around `key` in a
/// `dprime`-dimensional hypercube.
pub fn hamming_ball(key: Key, dprime: u32, rho: u32) -> Result<HammingBall> {
    if !(1..=MAX_DPRIME).contains(&dprime) {
        return Err(parameter(format!("d' must be in [1, {MAX_DPRIME}], got {dprime}")));
    }
    if rho > dprime {
        return Err(parameter(format!("radius {rho} exceeds d' = {dprime}")));
    }
    let key = Key::new(key.bits(), dprime)?;
    Ok(HammingBall { center: key.bits(), dprime, rho, positions: Some(Vec::new()), radius: 0 })
}

impl HammingBall {
    /// Hamming distance of the most recently yielded key.
    pub fn radius(&self) -> u32 {
        self.radius
    }

    fn advance(&mut self) {
        let Some(pos) = self.positions.as_mut() else { return };
        let i = pos.len() as u32;
        // rightmost position that can still move right
        let movable = (0..pos.len()).rev().find(|&j| pos[j] < self.dprime - (i - j as u32));
        match movable {
            Some(j) => {
                pos[j] += 1;
                for t in j + 1..pos.len() {
                    pos[t] = pos[t - 1] + 1;
                }
            }
            None if i < self.rho => *pos = (0..=i).collect(),
            None => self.positions = None,
        }
    }
}

impl Iterator for HammingBall {
    type Item = Key;

    fn next(&mut self) -> Option<Key> {
        let pos = self.positions.as_ref()?;
        self.radius = pos.len() as u32;
        let mask = pos.iter().fold(0u64, |m, &b| m | 1 << b);
        let key = Key::from_bits_unchecked(self.center ^ mask);
        self.advance();
        Some(key)
    }
}
