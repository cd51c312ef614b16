/// Output volume of a solver run that stores `state_vars` doubles at each
/// of `gauss_points` points per element, sampled `time_samples` times.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolutionSizeQuery {
    pub elements: u64,
    pub state_vars: u64,
    pub gauss_points: u64,
    pub time_samples: u64,
}

/// Bytes needed for the raw solution: `T·N·S·G·8`. This is a lower bound;
/// callers add their own storage overhead.
pub fn estimate_solution_size(q: SolutionSizeQuery) -> u128 {
    [q.time_samples, q.elements, q.state_vars, q.gauss_points].iter().map(|&v| u128::from(v)).product::<u128>() * 8
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: u64, s: u64, g: u64, t: u64) -> SolutionSizeQuery {
        SolutionSizeQuery { elements: n, state_vars: s, gauss_points: g, time_samples: t }
    }

    #[test]
    fn reference_values() {
        assert_eq!(estimate_solution_size(q(1, 12, 11, 1)), 1056);
        assert_eq!(estimate_solution_size(q(1, 12, 11, 0)), 0);
        assert_eq!(estimate_solution_size(q(1000, 12, 11, 10)), 10_560_000);
        // no overflow at the top of the range
        assert_eq!(estimate_solution_size(q(u64::MAX, 1, 1, 1)), u128::from(u64::MAX) * 8);
    }

    proptest! {
        #[test]
        fn doubling_any_factor_doubles(n in 0u64..1 << 20, s in 0u64..64, g in 0u64..64, t in 0u64..1 << 16, which in 0usize..4) {
            let base = estimate_solution_size(q(n, s, g, t));
            let mut f = [n, s, g, t];
            f[which] *= 2;
            prop_assert_eq!(estimate_solution_size(q(f[0], f[1], f[2], f[3])), 2 * base);
        }
    }
}
