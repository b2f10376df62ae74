//! Stable seed derivation. `std`'s hasher is not stable across releases,
//! so seeds are mixed by hand.

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xCBF2_9CE4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Seed for a labelled sub-stream of `master`.
pub fn derive_seed(master: u64, ue_id: u64, label: &str) -> u64 {
    let mut h = splitmix64(master);
    h = splitmix64(h ^ ue_id);
    splitmix64(h ^ fnv1a(label.as_bytes()))
}
