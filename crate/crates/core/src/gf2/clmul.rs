//! Carry-less (GF(2)[x]) multiplication of word-packed polynomials.
//!
//! Small operands use a schoolbook word loop; large ones recurse with
//! Karatsuba. The 64x64 kernel uses PCLMULQDQ when the CPU has it.

const KARATSUBA_CUTOFF: usize = 32;

/// 64x64 -> 128 bit carry-less product, returned as (low, high).
#[inline]
pub fn clmul64(a: u64, b: u64) -> (u64, u64) {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("pclmulqdq") {
            // SAFETY: feature presence checked at runtime just above.
            return unsafe { clmul64_pclmul(a, b) };
        }
    }
    clmul64_soft(a, b)
}

/// Portable kernel: 4-bit windows of `b` against a 16-entry table of `a`.
pub fn clmul64_soft(a: u64, b: u64) -> (u64, u64) {
    let mut table = [0u128; 16];
    let a = a as u128;
    for i in 1..16usize {
        table[i] = if i & 1 == 1 {
            table[i - 1] ^ a
        } else {
            table[i / 2] << 1
        };
    }
    let mut acc = 0u128;
    for nib in (0..16).rev() {
        acc <<= 4;
        acc ^= table[((b >> (4 * nib)) & 0xf) as usize];
    }
    (acc as u64, (acc >> 64) as u64)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "pclmulqdq")]
unsafe fn clmul64_pclmul(a: u64, b: u64) -> (u64, u64) {
    use std::arch::x86_64::*;
    let va = _mm_set_epi64x(0, a as i64);
    let vb = _mm_set_epi64x(0, b as i64);
    let r = _mm_clmulepi64_si128(va, vb, 0x00);
    let lo = _mm_cvtsi128_si64(r) as u64;
    let hi = _mm_extract_epi64(r, 1) as u64;
    (lo, hi)
}

/// Full product of two packed polynomials; result has `a.len() + b.len()` words.
pub fn poly_mul(a: &[u64], b: &[u64]) -> Vec<u64> {
    let mut out = vec![0u64; a.len() + b.len()];
    if a.is_empty() || b.is_empty() {
        return out;
    }
    mul_into(a, b, &mut out);
    out
}

// out ^= a*b; out must hold at least a.len()+b.len() words.
fn mul_into(a: &[u64], b: &[u64], out: &mut [u64]) {
    let (a, b) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    if b.is_empty() {
        return;
    }
    if b.len() < KARATSUBA_CUTOFF {
        schoolbook_into(a, b, out);
        return;
    }
    if a.len() > b.len() {
        // Unbalanced: slice the longer operand into |b|-sized chunks.
        for (k, chunk) in a.chunks(b.len()).enumerate() {
            let off = k * b.len();
            mul_into(chunk, b, &mut out[off..off + chunk.len() + b.len()]);
        }
        return;
    }
    karatsuba_into(a, b, out);
}

fn schoolbook_into(a: &[u64], b: &[u64], out: &mut [u64]) {
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            let (lo, hi) = clmul64(x, y);
            out[i + j] ^= lo;
            out[i + j + 1] ^= hi;
        }
    }
}

// a and b have equal length n >= KARATSUBA_CUTOFF.
fn karatsuba_into(a: &[u64], b: &[u64], out: &mut [u64]) {
    let n = a.len();
    let h = n / 2;
    let (a0, a1) = a.split_at(h);
    let (b0, b1) = b.split_at(h);

    let mut z0 = vec![0u64; 2 * h];
    mul_into(a0, b0, &mut z0);
    let mut z2 = vec![0u64; 2 * (n - h)];
    mul_into(a1, b1, &mut z2);

    let hl = n - h;
    let mut sa = a1.to_vec();
    let mut sb = b1.to_vec();
    for i in 0..h {
        sa[i] ^= a0[i];
        sb[i] ^= b0[i];
    }
    let mut z1 = vec![0u64; 2 * hl];
    mul_into(&sa, &sb, &mut z1);
    for (i, w) in z0.iter().enumerate() {
        z1[i] ^= w;
    }
    for (i, w) in z2.iter().enumerate() {
        z1[i] ^= w;
    }

    for (i, w) in z0.iter().enumerate() {
        out[i] ^= w;
    }
    for (i, w) in z1.iter().enumerate() {
        out[h + i] ^= w;
    }
    for (i, w) in z2.iter().enumerate() {
        out[2 * h + i] ^= w;
    }
}
