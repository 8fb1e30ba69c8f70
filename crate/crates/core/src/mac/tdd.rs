//! Ten-slot TDD frame. Special slots carry downlink.

use serde::{Deserialize, Serialize};

use crate::phy::Direction;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SlotKind {
    Dl,
    SpecialDl,
    Ul,
}

pub const TDD_PATTERN: [SlotKind; 10] = [
    SlotKind::Dl,
    SlotKind::SpecialDl,
    SlotKind::Ul,
    SlotKind::Ul,
    SlotKind::Ul,
    SlotKind::Dl,
    SlotKind::SpecialDl,
    SlotKind::Ul,
    SlotKind::Ul,
    SlotKind::Dl,
];

pub fn slot_kind(slot: u64) -> SlotKind {
    TDD_PATTERN[(slot % TDD_PATTERN.len() as u64) as usize]
}

pub fn slot_type(slot: u64) -> Direction {
    match slot_kind(slot) {
        SlotKind::Dl | SlotKind::SpecialDl => Direction::Dl,
        SlotKind::Ul => Direction::Ul,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_layout() {
        assert_eq!(slot_type(0), Direction::Dl);
        assert_eq!(slot_type(1), Direction::Dl);
        assert_eq!(slot_type(2), Direction::Ul);
        let dl = (0..10).filter(|s| slot_type(*s) == Direction::Dl).count();
        assert_eq!(dl, 5);
    }

    #[test]
    fn any_window_is_a_rotation_of_the_frame() {
        for start in [0u64, 3, 17, 123_456_789] {
            for i in 0..10 {
                assert_eq!(slot_kind(start + i), TDD_PATTERN[((start + i) % 10) as usize]);
            }
        }
    }
}
