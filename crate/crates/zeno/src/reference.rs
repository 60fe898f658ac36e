//! Published values for the canonical ion-trap parameters, kept as printed so
//! comparisons can respect the printed precision.

use zeno_core::nophoton::{TABLE1_COUNTS, TABLE1_RATIOS};

/// A number as it appears in print.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Printed(pub &'static str);

impl Printed {
    pub fn value(&self) -> f64 {
        self.0.parse().expect("published values are valid numbers")
    }

    /// Half a unit in the last printed digit.
    pub fn half_unit(&self) -> f64 {
        let (mantissa, exp) = match self.0.split_once(['e', 'E']) {
            Some((m, e)) => (m, e.parse::<i32>().expect("valid exponent")),
            None => (self.0, 0),
        };
        let decimals = mantissa.split_once('.').map_or(0, |(_, f)| f.len()) as i32;
        0.5 * 10f64.powi(exp - decimals)
    }

    /// `x` agrees with the printed value to within 10% relative, or rounds
    /// to it at the printed precision.
    pub fn matches(&self, x: f64) -> bool {
        let v = self.value();
        (x - v).abs() <= 0.1 * v.abs() || (x - v).abs() <= self.half_unit()
    }
}

/// Maximal non-reduced norm for `Ω₃/A₃` in [`TABLE1_RATIOS`] (rows) and `N`
/// in [`TABLE1_COUNTS`] (columns). The first row is the `Ω₃ ≪ A₃` limit.
pub const TABLE1: [[Printed; 7]; 4] = [
    [
        Printed("0.135"),
        Printed("0.082"),
        Printed("0.050"),
        Printed("0.018"),
        Printed("6.7e-3"),
        Printed("4.5e-5"),
        Printed("1.4e-11"),
    ],
    [
        Printed("0.023"),
        Printed("0.006"),
        Printed("0.002"),
        Printed("0.0001"),
        Printed("6.7e-6"),
        Printed("4.0e-12"),
        Printed("2.9e-31"),
    ],
    [
        Printed("0.051"),
        Printed("0.027"),
        Printed("0.015"),
        Printed("0.004"),
        Printed("6.9e-4"),
        Printed("4.3e-7"),
        Printed("5.1e-17"),
    ],
    [
        Printed("0.094"),
        Printed("0.065"),
        Printed("0.038"),
        Printed("0.011"),
        Printed("3.4e-3"),
        Printed("1.2e-5"),
        Printed("5.7e-13"),
    ],
];

pub fn table1_value(ratio: f64, n_photons: u32) -> Option<Printed> {
    let i = TABLE1_RATIOS.iter().position(|&r| r == ratio)?;
    let j = TABLE1_COUNTS.iter().position(|&c| c == n_photons)?;
    Some(TABLE1[i][j])
}

/// One row of the level-2 population table at the end of the π pulse.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Table2Row {
    pub n: usize,
    /// Ideal projections every `Tπ/n`.
    pub ideal: f64,
    /// Ideal projections with the drive idle for `τ_p` per interval.
    pub modified: f64,
    pub quantum_jump: f64,
    pub bloch: f64,
    /// Measured in the ion trap; outside the model, shown for context only.
    pub observed: f64,
}

const fn row(
    n: usize,
    ideal: f64,
    modified: f64,
    quantum_jump: f64,
    bloch: f64,
    observed: f64,
) -> Table2Row {
    Table2Row {
        n,
        ideal,
        modified,
        quantum_jump,
        bloch,
        observed,
    }
}

pub const TABLE2: [Table2Row; 7] = [
    row(1, 1.00000, 0.99978, 0.99978, 0.99978, 0.995),
    row(2, 0.50000, 0.49957, 0.49960, 0.49960, 0.500),
    row(4, 0.37500, 0.35985, 0.36062, 0.36056, 0.335),
    row(8, 0.23460, 0.20857, 0.20998, 0.20993, 0.194),
    row(16, 0.13343, 0.10029, 0.10215, 0.10212, 0.103),
    row(32, 0.07156, 0.03642, 0.03841, 0.03840, 0.013),
    // The printed ideal value at n = 64 drops a digit; the formula gives
    // 0.03712.
    row(64, 0.00371, 0.00613, 0.00789, 0.00789, -0.006),
];

pub fn table2_row(n: usize) -> Option<&'static Table2Row> {
    TABLE2.iter().find(|r| r.n == n)
}

pub const TABLE2_NS: [usize; 7] = [1, 2, 4, 8, 16, 32, 64];
