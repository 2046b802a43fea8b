//! Log-domain factorials.
//!
//! All probability-mass and variety constants are ratios of factorials; they
//! are kept as sums of `ln i` so that nothing overflows before the final
//! exponentiation. The table is a cumulative sum in a fixed order, so equal
//! inputs always produce bit-identical outputs.

/// Table of `ln(i!)` for `i = 0..=max_n`.
#[derive(Debug, Clone)]
pub struct LnFactorials {
    table: Vec<f64>,
}

impl LnFactorials {
    pub fn up_to(max_n: u64) -> Self {
        let mut table = Vec::with_capacity(max_n as usize + 1);
        table.push(0.0);
        let mut acc = 0.0_f64;
        for i in 1..=max_n {
            acc += (i as f64).ln();
            table.push(acc);
        }
        LnFactorials { table }
    }

    /// ln(n!); panics if `n` exceeds the table size.
    #[inline]
    pub fn get(&self, n: u64) -> f64 {
        self.table[n as usize]
    }

    /// ln of the multinomial coefficient n! / prod(counts_i!).
    pub fn ln_multinomial(&self, n: u64, counts: &[u64]) -> f64 {
        let mut acc = self.get(n);
        for &c in counts {
            acc -= self.get(c);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_values() {
        let t = LnFactorials::up_to(10);
        assert_eq!(t.get(0), 0.0);
        assert_eq!(t.get(1), 0.0);
        assert!((t.get(5) - 120.0_f64.ln()).abs() < 1e-12);
        assert!((t.get(10) - 3628800.0_f64.ln()).abs() < 1e-11);
    }

    #[test]
    fn multinomial_coefficient() {
        let t = LnFactorials::up_to(4);
        // 4! / (1! 2! 1!) = 12
        let v = t.ln_multinomial(4, &[1, 2, 1]).exp();
        assert!((v - 12.0).abs() < 1e-10);
    }
}
