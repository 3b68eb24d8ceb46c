//! Curve systems, train tracks and distance certificates on closed surfaces
//! of genus at least two.
//!
//! The crate is organised around Dehn-Thurston coordinates relative to a
//! fixed pants decomposition. On top of that sit wave detection for pairs of
//! curve systems, maximal train tracks with splitting towers, mapping class
//! group actions by Dehn twists, replayable distance certificates, and a
//! small experiment harness for sampling random pairs.

pub mod calm;
pub mod cli;
pub mod mcg;
pub mod pants;
pub mod track;
pub mod waves;
