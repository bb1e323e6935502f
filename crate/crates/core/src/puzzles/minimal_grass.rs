//! Minimal-grass semantics: pick integer dimensions for each building in
//! order. Buildings are laid out so their x- and y-projections are disjoint
//! (no building blocks another's view), which makes the bounding box
//! (sum of widths) x (sum of heights); see the oracle for the objective.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{GrassMove, MinimalGrassInstance, MinimalGrassState, PuzzleError};

/// All (width, height) factor pairs of `area`, width ascending.
pub fn divisor_pairs(area: u32) -> Vec<(u32, u32)> {
    (1..=area)
        .filter(|w| area % w == 0)
        .map(|w| (w, area / w))
        .collect()
}

/// Moves assign dimensions to the lowest-index unassigned building, one
/// factor pair per move, width ascending.
pub(super) fn legal_moves(
    instance: &MinimalGrassInstance,
    state: &MinimalGrassState,
) -> Vec<GrassMove> {
    let Some(next) = state.dims.iter().position(Option::is_none) else {
        return Vec::new();
    };
    divisor_pairs(instance.areas[next])
        .into_iter()
        .map(|(width, height)| GrassMove {
            building: next as u8 + 1,
            width,
            height,
        })
        .collect()
}

pub(super) fn apply(
    instance: &MinimalGrassInstance,
    state: &MinimalGrassState,
    mv: GrassMove,
) -> Result<MinimalGrassState, PuzzleError> {
    if !(1..=3).contains(&mv.building) {
        return Err(PuzzleError::IllegalMove(format!(
            "building index {} out of range",
            mv.building
        )));
    }
    let idx = mv.building as usize - 1;
    if state.dims[idx].is_some() {
        return Err(PuzzleError::IllegalMove(format!(
            "building {} already has dimensions",
            mv.building
        )));
    }
    if mv.width == 0 || mv.width * mv.height != instance.areas[idx] {
        return Err(PuzzleError::IllegalMove(format!(
            "{} x {} does not give area {}",
            mv.width, mv.height, instance.areas[idx]
        )));
    }
    let mut dims = state.dims;
    dims[idx] = Some((mv.width, mv.height));
    Ok(MinimalGrassState { dims })
}

impl MinimalGrassState {
    /// Green-space area once all three buildings are assigned:
    /// (sum of widths)(sum of heights) - (sum of areas).
    pub fn grass_area(&self) -> Option<u64> {
        let mut sum_w = 0u64;
        let mut sum_h = 0u64;
        let mut sum_area = 0u64;
        for d in &self.dims {
            let (w, h) = (*d)?;
            sum_w += w as u64;
            sum_h += h as u64;
            sum_area += w as u64 * h as u64;
        }
        Some(sum_w * sum_h - sum_area)
    }
}

pub(super) fn render_problem(i: &MinimalGrassInstance) -> String {
    format!(
        "Three rectangular buildings with floor areas {}, {}, and {} square units are to \
be built. Choose integer width and height for each building (width x height must equal \
its area). The buildings are then arranged so that none obstructs another's view \
horizontally or vertically, and the rest of their bounding box is filled with grass. \
Choose the dimensions so the grass area is as small as possible. A state is written as \
[dims of building 1, dims of building 2, dims of building 3] with ? for buildings not \
yet decided, starting from [?, ?, ?]. Assign dimensions to building 1 first, then 2, \
then 3, one per step, writing each operation as (width x height).",
        i.areas[0], i.areas[1], i.areas[2]
    )
}

impl core::fmt::Display for GrassMove {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{} x {}", self.width, self.height)
    }
}

impl MinimalGrassState {
    pub(super) fn render(&self) -> String {
        let part = |d: &Option<(u32, u32)>| match d {
            Some((w, h)) => format!("{w} x {h}"),
            None => "?".to_string(),
        };
        format!(
            "[{}, {}, {}]",
            part(&self.dims[0]),
            part(&self.dims[1]),
            part(&self.dims[2])
        )
    }
}
