use serde::{Deserialize, Serialize};

/// Spikes of one packet window, `packet_width` bits starting at neuron `base`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpikePacket {
    pub src_mpe: usize,
    pub dst_mpe: usize,
    pub base: usize,
    /// Bit `k` of word `k / 64` is neuron `base + k`.
    pub payload: Vec<u64>,
}

pub fn payload_words(packet_width: usize) -> usize {
    packet_width.div_ceil(64)
}

/// True iff every spike bit is zero.
pub fn zero_check(payload: &[u64]) -> bool {
    payload.iter().all(|&w| w == 0)
}

/// Pack the spikes of `members` (all in `[base, base + width)`) into a payload.
pub fn pack(spikes: &[bool], members: &[usize], base: usize, width: usize) -> Vec<u64> {
    let mut words = vec![0u64; payload_words(width)];
    for &n in members {
        if spikes[n] {
            let k = n - base;
            words[k / 64] |= 1 << (k % 64);
        }
    }
    words
}

pub fn bit(payload: &[u64], k: usize) -> bool {
    payload[k / 64] >> (k % 64) & 1 == 1
}
