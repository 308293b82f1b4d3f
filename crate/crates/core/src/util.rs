//! Small numeric helpers.

/// SplitMix64: tiny deterministic PRNG for multi-start jitter and synthetic
/// test fields. Hand-rolled so that seeded runs are bit-reproducible across
/// platforms and dependency upgrades.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

/// sign(t)·|t|^q with the convention that the value at t = 0 is 0.
/// Used for the odd powers |t|^{p-2}t and |t|^{2p-2}t with possibly
/// fractional p > 1.
#[inline]
pub fn signed_pow(t: f64, q: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else if t > 0.0 {
        t.powf(q)
    } else {
        -((-t).powf(q))
    }
}

/// Surface measure of the unit sphere S^{d-1} ⊂ ℝ^d, with the 1-dimensional
/// convention |S⁰| = 2 (two half-lines).
pub fn unit_sphere_area(d: usize) -> f64 {
    use std::f64::consts::PI;
    match d {
        0 => panic!("dimension must be >= 1"),
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        4 => 2.0 * PI * PI,
        // |S^{d-1}| = 2 π^{d/2} / Γ(d/2), by the recurrence |S^{d-1}| = 2π/(d-2) |S^{d-3}|.
        d => 2.0 * PI / (d as f64 - 2.0) * unit_sphere_area(d - 2),
    }
}

/// FNV-1a 64-bit content hash, used for run manifests.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    h
}

/// Least-squares slope and intercept of y against x.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let k = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    let intercept = (sy - slope * sx) / k;
    (slope, intercept)
}
