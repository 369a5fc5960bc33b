//! Radix-2 FFT for power-of-two envelope grids.
//!
//! The spectral propagator only ever sees power-of-two sample counts (the
//! grid builder rounds up, see [`crate::params::Scenario::grid`]), so a
//! plain iterative Cooley–Tukey transform is all that is needed and keeps
//! the crate `no_std`.
//!
//! Conventions match the usual DFT pair:
//!
//! - forward: `X_k = Σ_n x_n · e^{-2πi·kn/N}`
//! - inverse: `x_n = (1/N) · Σ_k X_k · e^{+2πi·kn/N}`
//!
//! With samples spaced `Δt`, bin `k` of the forward transform sits at the
//! angular frequency returned by [`frequencies`]: `δ_k = 2πk/(N·Δt)` for
//! `k < N/2` and the negative alias `2π(k-N)/(N·Δt)` above.

use alloc::vec::Vec;


use crate::C64;

/// In-place forward DFT. `data.len()` must be a power of two.
///
/// Panics if the length is not a power of two; callers in this crate
/// guarantee it (the spectral propagator validates grids first).
pub fn fft_in_place(data: &mut [C64]) {
    transform(data, -1.0);
}

/// In-place inverse DFT including the `1/N` factor. `data.len()` must be a
/// power of two.
pub fn ifft_in_place(data: &mut [C64]) {
    transform(data, 1.0);
    let scale = 1.0 / data.len() as f64;
    for x in data.iter_mut() {
        *x *= scale;
    }
}

/// Angular frequency of each forward-transform bin for sample spacing
/// `step`, in FFT order (non-negative bins first, negative aliases after).
pub fn frequencies(len: usize, step: f64) -> Vec<f64> {
    let base = core::f64::consts::TAU / (len as f64 * step);
    (0..len)
        .map(|k| {
            if k <= (len - 1) / 2 {
                base * k as f64
            } else {
                base * (k as f64 - len as f64)
            }
        })
        .collect()
}

fn transform(data: &mut [C64], sign: f64) {
    let n = data.len();
    assert!(
        n.is_power_of_two(),
        "FFT length must be a power of two, got {n}"
    );
    if n < 2 {
        return;
    }

    // bit-reversal permutation
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            data.swap(i, j);
        }
    }

    // butterflies, doubling the block size each stage
    let mut half = 1;
    while half < n {
        let angle = sign * core::f64::consts::PI / half as f64;
        let wstep = C64::new(angle.cos(), angle.sin());
        let mut start = 0;
        while start < n {
            let mut w = C64::new(1.0, 0.0);
            for offset in 0..half {
                let a = data[start + offset];
                let b = data[start + offset + half] * w;
                data[start + offset] = a + b;
                data[start + offset + half] = a - b;
                w *= wstep;
            }
            start += 2 * half;
        }
        half *= 2;
    }
}
