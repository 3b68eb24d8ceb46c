//! Mapping class group action on Dehn-Thurston coordinates by Dehn twists.
//!
//! The generating set is tied to the linear decomposition model: one twist
//! per decomposition curve, plus "hump" twists along curves crossing two
//! decomposition curves once each. Together these include a Humphries chain
//! and generate the mapping class group at genus 2.

use serde::{Deserialize, Serialize};

use crate::pants::CurveId;

/// A twist generator relative to the linear decomposition model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gen {
    /// Dehn twist along decomposition curve `K_i`.
    Pants(CurveId),
    /// Dehn twist along the i-th hump curve of the model.
    Hump(usize),
}

/// A word in signed twist generators, applied left to right.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TwistWord(pub Vec<(Gen, i64)>);

impl TwistWord {
    pub fn identity() -> Self {
        TwistWord(Vec::new())
    }

    pub fn inverse(&self) -> Self {
        TwistWord(self.0.iter().rev().map(|&(g, e)| (g, -e)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}
