#![no_main]
use libfuzzer_sys::fuzz_target;
use lowenv_bench::workload::{parse_workload, parse_workload_bytes, to_jsonl};

fuzz_target!(|data: &[u8]| {
    if let Ok(ops) = parse_workload_bytes(data) {
        // Anything accepted must survive a round trip unchanged.
        assert_eq!(parse_workload(&to_jsonl(&ops)).unwrap(), ops);
    }
});
