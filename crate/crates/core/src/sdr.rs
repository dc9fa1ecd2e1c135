//! Sparse distributed representations and the seeded scalar encoder.
//!
//! An [`Sdr`] is a fixed-width binary vector stored as its strictly ascending
//! list of active bit indices.
//!
//! The encoder maps a non-negative integer `L` onto `w` active bits out of
//! `k`. Values are grouped into buckets of `w` consecutive integers; bucket
//! `b = L / w` owns a pseudo-random index stream seeded from
//! `(master_seed, b)`. With `r = L mod w`:
//!
//! * `R1` = first `w` distinct indices (mod `k`) of stream `b`,
//! * `R2` = first `w` distinct indices of stream `b + 1` not already in `R1`,
//! * output = `R1[r..w]` plus `R2[0..r]`.
//!
//! Stepping `L` by one inside a bucket swaps exactly one bit, and at
//! `L = b * w` the output is exactly `R1` of bucket `b`, which is built from the
//! same stream that fed `R2` of bucket `b - 1`. Adjacent values therefore share
//! `w - 1` bits, less any indices that stream `b + 1` had to skip because they
//! were already taken by `R1`.

use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::rng::{mix, XorShift64Star};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SdrParams {
    /// Total bit width.
    pub k: u32,
    /// Active bits per encoding.
    pub w: u32,
    pub master_seed: u64,
}

impl Default for SdrParams {
    fn default() -> Self {
        Self { k: 2045, w: 40, master_seed: 0x5EED }
    }
}

impl SdrParams {
    pub fn validate(&self) -> Result<()> {
        if self.w == 0 {
            return config("encoder w must be positive");
        }
        if self.w >= self.k {
            return config(format!("encoder w ({}) must be below k ({})", self.w, self.k));
        }
        Ok(())
    }

    pub fn sparsity(&self) -> f64 {
        self.w as f64 / self.k as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Sdr {
    width: u32,
    active: Vec<u32>,
}

impl Sdr {
    pub fn empty(width: u32) -> Self {
        Self { width, active: Vec::new() }
    }

    /// Builds an SDR from arbitrary indices; sorts and removes duplicates.
    pub fn from_indices(width: u32, mut indices: Vec<u32>) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if let Some(&last) = indices.last() {
            if last >= width {
                return Err(Error::Usage(format!("bit {last} out of range for width {width}")));
            }
        }
        Ok(Self { width, active: indices })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn active(&self) -> &[u32] {
        &self.active
    }

    pub fn count(&self) -> usize {
        self.active.len()
    }

    pub fn contains(&self, bit: u32) -> bool {
        self.active.binary_search(&bit).is_ok()
    }

    /// Dense bitmap of `width` bits.
    pub fn to_bitmap(&self) -> Vec<u64> {
        let mut words = vec![0u64; (self.width as usize).div_ceil(64)];
        for &b in &self.active {
            words[b as usize / 64] |= 1 << (b % 64);
        }
        words
    }
}

/// `|a ∩ b|` by merging the two sorted index lists.
pub fn overlap(a: &Sdr, b: &Sdr) -> Result<usize> {
    if a.width != b.width {
        return Err(Error::Usage(format!(
            "overlap of SDRs with widths {} and {}",
            a.width, b.width
        )));
    }
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.active.len() && j < b.active.len() {
        match a.active[i].cmp(&b.active[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    Ok(n)
}

/// Bitwise OR of all members. An empty list yields an empty SDR of `width`.
pub fn union_sdr(width: u32, members: &[Sdr]) -> Result<Sdr> {
    let mut all = Vec::with_capacity(members.iter().map(Sdr::count).sum());
    for m in members {
        if m.width != width {
            return Err(Error::Usage(format!(
                "union member has width {}, expected {width}",
                m.width
            )));
        }
        all.extend_from_slice(&m.active);
    }
    Sdr::from_indices(width, all)
}

/// The index stream owned by encoder bucket `bucket`.
pub fn bucket_stream(params: &SdrParams, bucket: u64) -> XorShift64Star {
    XorShift64Star::new(mix(&[params.master_seed, bucket]))
}

/// First `count` distinct values of `stream mod k` that are not in `exclude`,
/// in stream order.
fn unique_indices(stream: &mut XorShift64Star, k: u32, count: usize, exclude: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let idx = (stream.next_u64() % k as u64) as u32;
        if !out.contains(&idx) && !exclude.contains(&idx) {
            out.push(idx);
        }
    }
    out
}

/// Encodes a non-negative integer into exactly `w` of `k` bits.
pub fn encode(value: u64, params: &SdrParams) -> Result<Sdr> {
    params.validate()?;
    let w = params.w as u64;
    let bucket = value / w;
    let shift = (value % w) as usize;
    let first = unique_indices(&mut bucket_stream(params, bucket), params.k, params.w as usize, &[]);
    let second = unique_indices(&mut bucket_stream(params, bucket + 1), params.k, shift, &first);
    let mut bits = first[shift..].to_vec();
    bits.extend_from_slice(&second);
    Sdr::from_indices(params.k, bits)
}
