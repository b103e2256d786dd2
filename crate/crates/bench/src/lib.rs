//! Fixtures shared by the benchmarks.

use bathmodes::{DiscretizationGrid, Qnsd, RealMatrix, SpectralDensity, Temperature};

/// Ohmic bath at 300 K (s = 1, alpha = 5, omega_c = 53 cm^-1).
pub fn ohmic_300k() -> Qnsd {
    Qnsd::new(SpectralDensity::power_law(1.0, 5.0, 53.0).expect("valid power law"), Temperature::kelvin(300.0).expect("valid temperature"))
}

/// Sub-Ohmic bath at 50 K (s = 0.25), singular at the origin.
pub fn sub_ohmic_50k() -> Qnsd {
    Qnsd::new(SpectralDensity::power_law(0.25, 5.0, 53.0).expect("valid power law"), Temperature::kelvin(50.0).expect("valid temperature"))
}

/// 1000 fs by +-500 cm^-1 with `time_points` x `frequency_points` samples.
pub fn ohmic_grid(time_points: usize, frequency_points: usize) -> DiscretizationGrid {
    DiscretizationGrid::symmetric(1000.0, 500.0, time_points, frequency_points).expect("valid grid")
}

/// Deterministic dense matrix with entries in [-1, 1).
pub fn pseudo_random_matrix(rows: usize, cols: usize, seed: u64) -> RealMatrix {
    let mut state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    let data: Vec<f64> = (0..rows * cols)
        .map(|_| {
            // xorshift64*
            state ^= state >> 12;
            state ^= state << 25;
            state ^= state >> 27;
            let v = state.wrapping_mul(0x2545_F491_4F6C_DD1D) >> 11;
            v as f64 / (1u64 << 52) as f64 - 1.0
        })
        .collect();
    RealMatrix::from_rows(rows, cols, &data).expect("consistent shape")
}
