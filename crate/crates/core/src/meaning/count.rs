use num_bigint::BigUint;

fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::from(0u32);
    }
    let k = k.min(n - k);
    let mut acc = BigUint::from(1u32);
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

fn factorial(n: u64) -> BigUint {
    (1..=n).fold(BigUint::from(1u32), |acc, i| acc * i)
}

/// Number of interpretation functions from `p` phrases into a tree of `n`
/// vertices: one-to-one partial maps whose range contains the root.
///
/// Sums, over the number `i` of mapped phrases, the ways to pick the phrases,
/// order them onto `i` vertices, and choose the `i - 1` non-root vertices.
pub fn count_interpretations(p: u64, n: u64) -> BigUint {
    let c = p.min(n);
    (1..=c)
        .map(|i| binomial(p, i) * factorial(i) * binomial(n - 1, i - 1))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_values() {
        assert_eq!(count_interpretations(1, 1), BigUint::from(1u32));
        assert_eq!(count_interpretations(2, 2), BigUint::from(4u32));
        assert_eq!(count_interpretations(3, 3), BigUint::from(21u32));
        assert_eq!(count_interpretations(0, 5), BigUint::from(0u32));
    }

    #[test]
    fn large_values_are_exact() {
        let v = count_interpretations(60, 60);
        assert!(v.bits() > 200);
    }
}
