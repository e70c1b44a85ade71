#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = physmap::pointcloud::parse_ply_points(data);
});
