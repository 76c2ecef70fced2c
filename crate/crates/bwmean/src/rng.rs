//! Deterministic counter-based random number generation.
//!
//! Reproducibility contract: every replication r of a simulation gets its own
//! generator derived from (seed, r) alone, so results are independent of how
//! replications are chunked across threads or streams. The generator is the
//! splitmix64 sequence (public-domain finalizer constants), which is
//! counter-based: output i is a pure function of (state0, i).

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// splitmix64 stream. Cheap to construct; one per replication.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(state: u64) -> Self {
        SplitMix64 { state }
    }

    /// Generator for one replication, keyed by (seed, global replication
    /// index). Two distinct (seed, rep) pairs give decorrelated streams.
    pub fn for_replication(seed: u64, rep: u64) -> Self {
        let key = mix(seed ^ GOLDEN) ^ mix(rep.wrapping_mul(GOLDEN).wrapping_add(1));
        SplitMix64::new(mix(key))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix(self.state)
    }

    /// Uniform on [0, 1), 53-bit resolution.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on (0, 1]; safe to pass to ln().
    #[inline]
    pub fn next_f64_open0(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box-Muller (fixed two uniforms per draw; no
    /// rejection, so the consumption pattern is static).
    pub fn next_normal(&mut self) -> f64 {
        let u1 = self.next_f64_open0();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Exponential with the given rate.
    pub fn next_exponential(&mut self, rate: f64) -> f64 {
        -self.next_f64_open0().ln() / rate
    }

    /// Gamma(shape, scale) via Marsaglia-Tsang squeeze; shape < 1 handled by
    /// the boost Gamma(shape+1)·U^(1/shape).
    pub fn next_gamma(&mut self, shape: f64, scale: f64) -> f64 {
        debug_assert!(shape > 0.0 && scale > 0.0);
        if shape < 1.0 {
            let boost = self.next_f64_open0().powf(1.0 / shape);
            return self.next_gamma(shape + 1.0, scale) * boost;
        }
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        loop {
            let z = self.next_normal();
            let t = 1.0 + c * z;
            if t <= 0.0 {
                continue;
            }
            let v = t * t * t;
            let u = self.next_f64_open0();
            let z2 = z * z;
            if u < 1.0 - 0.0331 * z2 * z2 {
                return d * v * scale;
            }
            if u.ln() < 0.5 * z2 + d * (1.0 - v + v.ln()) {
                return d * v * scale;
            }
        }
    }
}
