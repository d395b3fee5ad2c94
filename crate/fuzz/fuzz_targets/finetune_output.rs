#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    use stylus_core::probe_io::{parse_finetune_output, FinetuneStyle};
    use stylus_core::Task;
    for task in [Task::Authorship, Task::Genre] {
        for style in [FinetuneStyle::T5Mask, FinetuneStyle::CausalSuffix] {
            let _ = parse_finetune_output(s, task, style);
        }
    }
});
