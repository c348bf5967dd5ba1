#![no_main]

use libfuzzer_sys::fuzz_target;
use pcanet_harness::tensor;

fuzz_target!(|data: &[u8]| {
    match tensor::decode(data) {
        Ok(values) => assert_eq!(tensor::encode(&values), data),
        Err(_) => assert_ne!(data.len() % 8, 0),
    }
    if data.len() >= 2 {
        let shape = [data[0] as usize, data[1] as usize];
        if let Ok(v) = tensor::decode_shaped(&data[2..], &shape) {
            assert_eq!(v.len(), shape[0] * shape[1]);
        }
    }
});
