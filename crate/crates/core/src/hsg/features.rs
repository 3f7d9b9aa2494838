//! Semantic feature vectors for object nodes.
//!
//! Layout: class one-hot, color one-hot (last slot = no color), one shared
//! bias entry. The blocks carry squared-norm shares 0.35 / 0.35 / 0.30, so
//! every encoded vector has unit norm and
//! identical attributes -> cos 1, one attribute differs -> cos 0.65,
//! both differ -> cos 0.30.

use crate::vocab::{Color, ObjectClass};

pub const CLASS_SHARE: f64 = 0.35;
pub const COLOR_SHARE: f64 = 0.35;
pub const BIAS_SHARE: f64 = 0.30;

pub const CLASS_DIMS: usize = ObjectClass::ALL.len();
pub const COLOR_DIMS: usize = Color::ALL.len() + 1;
pub const FEATURE_DIMS: usize = CLASS_DIMS + COLOR_DIMS + 1;

fn class_slot(c: ObjectClass) -> usize {
    ObjectClass::ALL.iter().position(|x| *x == c).unwrap()
}

fn color_slot(c: Option<Color>) -> usize {
    match c {
        Some(c) => Color::ALL.iter().position(|x| *x == c).unwrap(),
        None => Color::ALL.len(),
    }
}

pub fn encode(class: ObjectClass, color: Option<Color>) -> Vec<f64> {
    let mut f = vec![0.0; FEATURE_DIMS];
    f[class_slot(class)] = CLASS_SHARE.sqrt();
    f[CLASS_DIMS + color_slot(color)] = COLOR_SHARE.sqrt();
    f[FEATURE_DIMS - 1] = BIAS_SHARE.sqrt();
    f
}

/// Cosine similarity; 0 when either vector has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Dominant class and color of a (possibly averaged) feature vector.
/// Ties keep `current`.
pub fn decode(f: &[f64], current: (ObjectClass, Option<Color>)) -> (ObjectClass, Option<Color>) {
    let class_block = &f[..CLASS_DIMS];
    let color_block = &f[CLASS_DIMS..CLASS_DIMS + COLOR_DIMS];
    let class = argmax_keep(class_block, class_slot(current.0))
        .map(|i| ObjectClass::ALL[i])
        .unwrap_or(current.0);
    let color = match argmax_keep(color_block, color_slot(current.1)) {
        Some(i) if i < Color::ALL.len() => Some(Color::ALL[i]),
        Some(_) => None,
        None => current.1,
    };
    (class, color)
}

fn argmax_keep(block: &[f64], current: usize) -> Option<usize> {
    let best = block.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(best > 0.0) {
        return None;
    }
    if block[current] >= best {
        return Some(current);
    }
    block.iter().position(|v| *v == best)
}
