#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| pfasst_lfa_cli::fuzz_entry::argv(data));
