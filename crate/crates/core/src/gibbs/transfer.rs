use super::GibbsSpec;
use crate::error::{LabError, Result};
use crate::lattice::Site;
use crate::num::Real;

/// Widest strip handled by the transfer matrix.
pub const STRIP_WIDTH: u32 = 12;

/// Natural-log partition function of a full rectangle of width ≤ `STRIP_WIDTH`,
/// with optional pinned spins, by a site-at-a-time transfer matrix.
pub fn strip_log_z<R: Real>(spec: &GibbsSpec<R>, pins: &[Option<i8>]) -> Result<R> {
    let g = spec.graph();
    let (ll, w, h) = g.rectangle_dims().ok_or_else(|| {
        LabError::Capacity(format!(
            "{} spins: region too large and not a rectangle",
            g.len()
        ))
    })?;
    let (width, length, along_x) = if w <= h { (w, h, true) } else { (h, w, false) };
    if width > STRIP_WIDTH {
        return Err(LabError::Capacity(format!(
            "strip width {width} exceeds transfer-matrix limit {STRIP_WIDTH}"
        )));
    }
    let at = |row: u32, col: u32| -> usize {
        let s = if along_x {
            Site::new(ll.x + col as i32, ll.y + row as i32)
        } else {
            Site::new(ll.x + row as i32, ll.y + col as i32)
        };
        g.index_of(s).expect("rectangle site")
    };
    let states = 1usize << width;
    let beta = spec.beta();
    let mut v = vec![R::zero(); states];
    let mut next = vec![R::zero(); states];
    v[0] = R::one();
    let mut log_scale = R::zero();
    for row in 0..length {
        for col in 0..width {
            let i = at(row, col);
            let ext = spec.external(i);
            let bit = 1usize << col;
            next.iter_mut().for_each(|x| *x = R::zero());
            for (s, &ws) in v.iter().enumerate() {
                if ws == R::zero() {
                    continue;
                }
                let mut nb = 0i32;
                if row > 0 {
                    nb += if s & bit != 0 { 1 } else { -1 };
                }
                if col > 0 {
                    nb += if s & (bit >> 1) != 0 { 1 } else { -1 };
                }
                let local = ext + R::of(nb as f64);
                if pins[i] != Some(-1) {
                    next[s | bit] = next[s | bit] + ws * (beta * local).exp();
                }
                if pins[i] != Some(1) {
                    next[s & !bit] = next[s & !bit] + ws * (-beta * local).exp();
                }
            }
            let m = next.iter().copied().fold(R::zero(), R::max);
            if m == R::zero() {
                return Ok(R::neg_infinity());
            }
            for (a, b) in v.iter_mut().zip(&next) {
                *a = *b / m;
            }
            log_scale = log_scale + m.ln();
        }
    }
    let total: R = v.iter().copied().sum();
    Ok(log_scale + total.ln())
}
