use std::io::Cursor;

use kmerco::hash::{murmur3_64, murmur3_x64_128};
use proptest::prelude::*;

fn reference(data: &[u8], seed: u32) -> (u64, u64) {
    let v = murmur3::murmur3_x64_128(&mut Cursor::new(data), seed).unwrap();
    (v as u64, (v >> 64) as u64)
}

#[test]
fn known_lengths_match_reference() {
    let data: Vec<u8> = (0..64u8).map(|i| i.wrapping_mul(37)).collect();
    for len in 0..data.len() {
        for seed in [0u32, 1, 42, u32::MAX] {
            assert_eq!(
                murmur3_x64_128(&data[..len], seed as u64),
                reference(&data[..len], seed),
                "len {len} seed {seed}"
            );
        }
    }
}

proptest! {
    #[test]
    fn agrees_with_reference(data in prop::collection::vec(any::<u8>(), 0..200), seed in any::<u32>()) {
        let (h1, h2) = reference(&data, seed);
        prop_assert_eq!(murmur3_x64_128(&data, seed as u64), (h1, h2));
        prop_assert_eq!(murmur3_64(&data, seed as u64), h1);
    }
}
