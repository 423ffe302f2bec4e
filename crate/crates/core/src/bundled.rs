//! The two surfaces shipped with the crate.

use crate::io::format::parse_surface_file;
use crate::surface::{build_surface, FlatSurface};

pub const L3_SURF: &str = include_str!("../fixtures/l3.surf");
pub const OCTAGON_SURF: &str = include_str!("../fixtures/octagon.surf");

/// Three unit squares in an L with opposite sides glued by translations.
pub fn l3() -> FlatSurface {
    build_surface(&parse_surface_file(L3_SURF.as_bytes()).expect("bundled L3 parses")).expect("bundled L3 is valid")
}

/// Regular octagon with unit sides, opposite sides glued by translations.
pub fn octagon() -> FlatSurface {
    build_surface(&parse_surface_file(OCTAGON_SURF.as_bytes()).expect("bundled octagon parses")).expect("bundled octagon is valid")
}
