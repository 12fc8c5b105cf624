//! Injective codings of tuples, pairs and samples into naturals.

use num_bigint::BigUint;
use num_integer::{Integer, Roots};
use num_traits::{One, Zero};

use crate::hypothesis::LabeledSample;
use crate::point::Point;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("cannot encode an empty tuple")]
    EmptyTuple,
    #[error("cannot encode an empty sample")]
    EmptySample,
    #[error("entry {0} is too large for a prime-power code")]
    EntryTooLarge(String),
}

/// `n` does not have the shape `∏ p_i^(t_i+1)` for any nonempty tuple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("not a tuple code")]
pub struct NotACode;

/// Yields 2, 3, 5, 7, ... by trial division against the primes found so far.
#[derive(Debug, Default)]
pub struct Primes {
    found: Vec<u64>,
}

impl Iterator for Primes {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        let mut candidate = match self.found.last() {
            None => 2,
            Some(2) => 3,
            Some(&p) => p + 2,
        };
        loop {
            let is_prime = self.found.iter().take_while(|&&p| p * p <= candidate).all(|&p| candidate % p != 0);
            if is_prime {
                self.found.push(candidate);
                return Some(candidate);
            }
            candidate += 2;
        }
    }
}

/// `(t_1, …, t_m) ↦ ∏ p_i^(t_i + 1)` with `p_1 = 2`.
pub fn godel_encode(tuple: &[u64]) -> Result<BigUint, CodecError> {
    if tuple.is_empty() {
        return Err(CodecError::EmptyTuple);
    }
    let mut code = BigUint::one();
    for (&entry, p) in tuple.iter().zip(Primes::default()) {
        let exp = entry
            .checked_add(1)
            .and_then(|x| u32::try_from(x).ok())
            .ok_or_else(|| CodecError::EntryTooLarge(entry.to_string()))?;
        code *= BigUint::from(p).pow(exp);
    }
    Ok(code)
}

pub fn godel_decode(n: &BigUint) -> Result<Vec<u64>, NotACode> {
    if n <= &BigUint::one() {
        return Err(NotACode);
    }
    let mut rest = n.clone();
    let mut tuple = Vec::new();
    for p in Primes::default() {
        if rest.is_one() {
            break;
        }
        let p = BigUint::from(p);
        let mut exp = 0u64;
        loop {
            let (q, r) = rest.div_rem(&p);
            if !r.is_zero() {
                break;
            }
            rest = q;
            exp += 1;
        }
        if exp == 0 {
            // a gap in the prime sequence, or a factor beyond it
            return Err(NotACode);
        }
        tuple.push(exp - 1);
    }
    Ok(tuple)
}

/// Cantor pairing `(a+b)(a+b+1)/2 + b`. Panics if the result overflows `u64`.
pub fn pair(a: u64, b: u64) -> u64 {
    let d = a as u128 + b as u128;
    let v = d * (d + 1) / 2 + b as u128;
    u64::try_from(v).expect("pair overflows u64")
}

/// Cantor pairing, `None` on overflow.
pub fn checked_pair(a: u64, b: u64) -> Option<u64> {
    let d = a as u128 + b as u128;
    u64::try_from(d * (d + 1) / 2 + b as u128).ok()
}

pub fn unpair(n: u64) -> (u64, u64) {
    let n = n as u128;
    let mut d = ((8 * n + 1).sqrt() - 1) / 2;
    while d * (d + 1) / 2 > n {
        d -= 1;
    }
    while (d + 1) * (d + 2) / 2 <= n {
        d += 1;
    }
    let b = n - d * (d + 1) / 2;
    ((d - b) as u64, b as u64)
}

pub fn pair_big(a: &BigUint, b: &BigUint) -> BigUint {
    let d = a + b;
    ((&d * (&d + 1u32)) >> 1u32) + b
}

/// Index of the diagonal containing `n`, i.e. the largest `d` with `d(d+1)/2 ≤ n`.
pub fn diagonal_of(n: &BigUint) -> BigUint {
    let mut d = ((n * 8u32 + 1u32).sqrt() - 1u32) >> 1u32;
    let tri = |d: &BigUint| (d * (d + 1u32)) >> 1u32;
    while &tri(&d) > n {
        d -= 1u32;
    }
    while &tri(&(&d + 1u32)) <= n {
        d += 1u32;
    }
    d
}

pub fn unpair_big(n: &BigUint) -> (BigUint, BigUint) {
    let d = diagonal_of(n);
    let b = n - ((&d * (&d + 1u32)) >> 1u32);
    (&d - &b, b)
}

/// Codes each labeled pair as `2x + y`, then Gödel-encodes the resulting tuple.
pub fn sample_encode(sample: &LabeledSample) -> Result<BigUint, CodecError> {
    if sample.is_empty() {
        return Err(CodecError::EmptySample);
    }
    let codes = sample
        .pairs()
        .iter()
        .map(|(x, y)| {
            x.as_u64()
                .and_then(|x| x.checked_mul(2))
                .and_then(|v| v.checked_add(*y as u64))
                .ok_or_else(|| CodecError::EntryTooLarge(x.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    godel_encode(&codes)
}

pub fn sample_decode(n: &BigUint) -> Result<LabeledSample, NotACode> {
    let codes = godel_decode(n)?;
    let pairs = codes.into_iter().map(|c| (Point::Small(c / 2), c % 2 == 1)).collect();
    LabeledSample::new(pairs).map_err(|_| NotACode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn godel_examples() {
        assert_eq!(godel_encode(&[0]).unwrap(), big(2));
        assert_eq!(godel_encode(&[1, 2]).unwrap(), big(108));
        assert_eq!(godel_encode(&[]), Err(CodecError::EmptyTuple));
        assert_eq!(godel_decode(&big(2)).unwrap(), vec![0]);
        assert_eq!(godel_decode(&big(108)).unwrap(), vec![1, 2]);
        assert_eq!(godel_decode(&big(5)), Err(NotACode));
        assert_eq!(godel_decode(&big(0)), Err(NotACode));
        assert_eq!(godel_decode(&big(1)), Err(NotACode));
        // 2·5: the factor 3 is missing
        assert_eq!(godel_decode(&big(10)), Err(NotACode));
        // 2·13: 13 appears without 3, 5, 7, 11
        assert_eq!(godel_decode(&big(2 * 13)), Err(NotACode));
    }

    fn tuples(max_len: usize, max_entry: u64) -> Vec<Vec<u64>> {
        let mut out: Vec<Vec<u64>> = Vec::new();
        let mut layer: Vec<Vec<u64>> = vec![vec![]];
        for _ in 0..max_len {
            layer = layer
                .iter()
                .flat_map(|t| {
                    (0..=max_entry).map(move |x| {
                        let mut t = t.clone();
                        t.push(x);
                        t
                    })
                })
                .collect();
            out.extend(layer.iter().cloned());
        }
        out
    }

    #[test]
    fn godel_round_trip_small() {
        for t in tuples(4, 5) {
            assert_eq!(godel_decode(&godel_encode(&t).unwrap()).unwrap(), t);
        }
    }

    #[test]
    fn godel_injective_exhaustive() {
        let all = tuples(5, 6);
        let codes: HashSet<BigUint> = all.iter().map(|t| godel_encode(t).unwrap()).collect();
        assert_eq!(codes.len(), all.len());
    }

    #[test]
    fn pairing_examples() {
        assert_eq!(pair(0, 0), 0);
        assert_eq!(pair(1, 2), 8);
        for a in 0..=20 {
            for b in 0..=20 {
                assert_eq!(unpair(pair(a, b)), (a, b));
            }
        }
    }

    #[test]
    fn pairing_bijective_on_grid() {
        let mut seen = HashSet::new();
        for a in 0..=500u64 {
            for b in 0..=500u64 {
                let n = pair(a, b);
                assert!(seen.insert(n));
                assert_eq!(unpair(n), (a, b));
            }
        }
        // the image of the first diagonals is an initial segment
        for n in 0..10_000u64 {
            let (a, b) = unpair(n);
            assert_eq!(pair(a, b), n);
        }
    }

    #[test]
    fn big_pairing_agrees() {
        for n in 0..2000u64 {
            let (a, b) = unpair(n);
            assert_eq!(unpair_big(&big(n)), (big(a), big(b)));
            assert_eq!(pair_big(&big(a), &big(b)), big(n));
        }
        let a = BigUint::from(3u32).pow(200);
        let b = BigUint::from(7u32).pow(150);
        assert_eq!(unpair_big(&pair_big(&a, &b)), (a, b));
    }

    #[test]
    fn sample_codes() {
        let s = LabeledSample::from_pairs(&[(0, false)]);
        assert_eq!(sample_encode(&s).unwrap(), big(2));
        let s = LabeledSample::from_pairs(&[(1, true), (0, false)]);
        assert_eq!(sample_encode(&s).unwrap(), big(48));
        assert_eq!(sample_decode(&big(48)).unwrap(), s);
    }

    fn samples(max_len: usize, max_x: u64) -> Vec<LabeledSample> {
        tuples(max_len, 2 * max_x + 1)
            .into_iter()
            .map(|codes| {
                LabeledSample::new(codes.into_iter().map(|c| (Point::Small(c / 2), c % 2 == 1)).collect()).unwrap()
            })
            .collect()
    }

    #[test]
    fn sample_round_trip() {
        for s in samples(3, 3) {
            assert_eq!(sample_decode(&sample_encode(&s).unwrap()).unwrap(), s);
        }
    }

    #[test]
    fn sample_codes_collision_free() {
        let all = samples(3, 4);
        let codes: HashSet<BigUint> = all.iter().map(|s| sample_encode(s).unwrap()).collect();
        assert_eq!(codes.len(), all.len());
    }
}
