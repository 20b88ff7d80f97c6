#![no_main]
use libfuzzer_sys::fuzz_target;
use lowenv_bench::disks::{parse_disks, parse_disks_bytes, to_csv};

fuzz_target!(|data: &[u8]| {
    if let Ok(disks) = parse_disks_bytes(data) {
        assert_eq!(parse_disks(&to_csv(&disks)).unwrap(), disks);
    }
});
