#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(ckpt) = physmap::checkpoint::Checkpoint::from_bytes(data) {
        let bytes = ckpt.to_bytes();
        let again = physmap::checkpoint::Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(again.to_bytes(), bytes);
    }
});
