#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(grid) = physmap::octree::OctreeGrid::from_bytes(data) {
        assert_eq!(grid.to_bytes(), data);
    }
});
