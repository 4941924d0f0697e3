//! Exhaustive checks of the small LFSR-Toeplitz families used for
//! authentication and error verification.

use qkdd_core::gf2::{lfsr_toeplitz_tag, one_time_pad, BitString, Gf2Poly, LfsrToeplitzSpec};

fn irreducible(k: usize) -> Vec<Gf2Poly> {
    (0..1u64 << k)
        .step_by(2)
        .map(|low| Gf2Poly::monic(k, |i| i == 0 || (low >> i) & 1 == 1))
        .filter(|p| p.is_irreducible())
        .collect()
}

/// Every (polynomial, nonzero initial state) pair for tag length `k`.
fn family(k: usize, n: usize) -> Vec<LfsrToeplitzSpec> {
    let mut out = Vec::new();
    for p in irreducible(k) {
        for s in 1..1u64 << k {
            out.push(LfsrToeplitzSpec::new(k, n, p.clone(), BitString::from_words(vec![s], k)).unwrap());
        }
    }
    out
}

fn all_messages(n: usize) -> Vec<BitString> {
    (0..1u64 << n).map(|v| BitString::from_words(vec![v], n)).collect()
}

#[test]
fn irreducible_counts() {
    // Necklace counts of irreducible polynomials over GF(2).
    assert_eq!(irreducible(3).len(), 2);
    assert_eq!(irreducible(4).len(), 3);
    assert_eq!(irreducible(5).len(), 6);
}

/// For every pair of distinct messages and every difference `c`, at most a
/// fraction `n 2^(-k+1)` of the family maps the pair to tags differing by `c`.
/// With a one-time pad this bounds every substitution forgery.
#[test]
fn family_is_epsilon_balanced() {
    for (k, n) in [(3usize, 2usize), (3, 3), (4, 5), (4, 7), (5, 6)] {
        let fam = family(k, n);
        let msgs = all_messages(n);
        let tags: Vec<Vec<u64>> = fam
            .iter()
            .map(|h| msgs.iter().map(|m| lfsr_toeplitz_tag(h, m).unwrap().words()[0]).collect())
            .collect();
        let limit = n as f64 * 2f64.powi(1 - k as i32);
        let mut worst = 0.0f64;
        for a in 0..msgs.len() {
            for b in a + 1..msgs.len() {
                let mut hits = vec![0usize; 1 << k];
                for t in &tags {
                    hits[(t[a] ^ t[b]) as usize] += 1;
                }
                let frac = *hits.iter().max().unwrap() as f64 / fam.len() as f64;
                worst = worst.max(frac);
            }
        }
        assert!(worst <= limit + 1e-12, "k={k} n={n}: {worst} > {limit}");
    }
}

/// A flipped message bit is caught for at least `1 - n 2^(-k+1)` of the
/// hash choices, whatever the pad.
#[test]
fn flipped_bit_rejected_by_most_hashes() {
    let (k, n) = (3usize, 3usize);
    let fam = family(k, n);
    for msg in all_messages(n) {
        for bit in 0..n {
            let mut forged = msg.clone();
            forged.flip(bit);
            for pad_bits in 0..1u64 << k {
                let pad = BitString::from_words(vec![pad_bits], k);
                let accepted = fam
                    .iter()
                    .filter(|h| {
                        let sent = one_time_pad(&lfsr_toeplitz_tag(h, &msg).unwrap(), &pad).unwrap();
                        let expect = one_time_pad(&lfsr_toeplitz_tag(h, &forged).unwrap(), &pad).unwrap();
                        sent == expect
                    })
                    .count();
                let reject = 1.0 - accepted as f64 / fam.len() as f64;
                assert!(reject >= 1.0 - n as f64 * 2f64.powi(1 - k as i32));
            }
        }
    }
}

#[test]
fn identical_keys_always_verify() {
    let fam = family(4, 6);
    for m in all_messages(6) {
        for h in &fam {
            assert_eq!(lfsr_toeplitz_tag(h, &m).unwrap(), lfsr_toeplitz_tag(h, &m.clone()).unwrap());
        }
    }
}
