//! Bottle-filling semantics: fill, empty, and pour until one bottle is full
//! or the other is empty.

use alloc::format;
use alloc::string::String;

use super::{DropWaterInstance, DropWaterMove, DropWaterState};

pub(super) fn apply(
    instance: &DropWaterInstance,
    state: &DropWaterState,
    mv: DropWaterMove,
) -> DropWaterState {
    let DropWaterState { level_a, level_b } = *state;
    match mv {
        DropWaterMove::FillA => DropWaterState {
            level_a: instance.cap_a,
            level_b,
        },
        DropWaterMove::FillB => DropWaterState {
            level_a,
            level_b: instance.cap_b,
        },
        DropWaterMove::EmptyA => DropWaterState { level_a: 0, level_b },
        DropWaterMove::EmptyB => DropWaterState { level_a, level_b: 0 },
        DropWaterMove::PourAToB => {
            let t = level_a.min(instance.cap_b - level_b);
            DropWaterState {
                level_a: level_a - t,
                level_b: level_b + t,
            }
        }
        DropWaterMove::PourBToA => {
            let t = level_b.min(instance.cap_a - level_a);
            DropWaterState {
                level_a: level_a + t,
                level_b: level_b - t,
            }
        }
    }
}

pub(super) fn render_problem(i: &DropWaterInstance) -> String {
    format!(
        "You have two empty bottles without any scale marks: bottle A holds {} liters and \
bottle B holds {} liters. There is a large water reservoir. In one operation you may fill \
a bottle completely, empty a bottle completely, or pour water from one bottle into the \
other until the receiving bottle is full or the pouring bottle is empty. Get exactly {} \
liters of water in either bottle using at most {} operations. A state is written as \
[level of A, level of B], starting from [0, 0].",
        i.cap_a, i.cap_b, i.target, i.max_steps
    )
}
