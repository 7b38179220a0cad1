//! BCJR MAP equalizer over the channel-state trellis.

use crate::signal::ReceivedSequence;
use crate::soft::max_star;
use crate::{Error, Result};

/// Largest channel memory accepted (1024 states).
pub const MAX_TRELLIS_MEMORY: usize = 10;

#[inline]
fn sym(bit: usize) -> f64 {
    if bit == 0 {
        1.0
    } else {
        -1.0
    }
}

fn lse(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(f64::NEG_INFINITY, max_star)
}

/// Extrinsic LLRs of the packet symbols given the guard-extended observation.
///
/// The state holds the last `L_h` symbols, bit `j` being `x_{n-1-j}`. Symbols
/// before and after the packet are zero, so positions of the state that refer
/// to them are ignored when forming branch outputs.
pub fn bcjr_equalize(r: &ReceivedSequence, taps: &[f64], n0: f64, apriori: &[f64]) -> Result<Vec<f64>> {
    if taps.is_empty() {
        return Err(Error::ZeroChannel);
    }
    let mem = taps.len() - 1;
    if mem > MAX_TRELLIS_MEMORY {
        return Err(Error::TrellisTooLarge(mem));
    }
    if !(n0 > 0.0) {
        return Err(Error::NonPositiveNoise(n0));
    }
    let n_sym = r.packet_len();
    if apriori.len() != n_sym {
        return Err(Error::LengthMismatch {
            expected: n_sym,
            actual: apriori.len(),
        });
    }
    let ns = 1usize << mem;
    let mask = ns - 1;
    let inv = 1.0 / (2.0 * n0);

    // past[t][s]: contribution of the state's symbols when only the newest t are real
    let past: Vec<Vec<f64>> = (0..=mem)
        .map(|t| {
            (0..ns)
                .map(|s| (1..=t).map(|k| taps[k] * sym((s >> (k - 1)) & 1)).sum())
                .collect()
        })
        .collect();

    // channel-only branch metric
    let gamma = |n: usize, s: usize, b: usize| -> f64 {
        let out = taps[0] * sym(b) + past[n.min(mem)][s];
        let e = r.at(n as isize) - out;
        -e * e * inv
    };
    let prior = |n: usize, b: usize| 0.5 * sym(b) * apriori[n];

    let mut alpha = vec![0.0; (n_sym + 1) * ns];
    for n in 0..n_sym {
        let (cur, next) = alpha.split_at_mut((n + 1) * ns);
        let cur = &cur[n * ns..];
        let next = &mut next[..ns];
        next.fill(f64::NEG_INFINITY);
        for s in 0..ns {
            for b in 0..2 {
                let sp = ((s << 1) | b) & mask;
                next[sp] = max_star(next[sp], cur[s] + gamma(n, s, b) + prior(n, b));
            }
        }
        let m = next.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        next.iter_mut().for_each(|v| *v -= m);
    }

    // tail samples r_N .. r_{N+L_h-1} seen from the final state
    let mut beta: Vec<f64> = (0..ns)
        .map(|s| {
            (0..mem)
                .map(|m| {
                    let out: f64 = (m + 1..=mem)
                        .filter(|&k| k - m - 1 < n_sym)
                        .map(|k| taps[k] * sym((s >> (k - m - 1)) & 1))
                        .sum();
                    let e = r.at((n_sym + m) as isize) - out;
                    -e * e * inv
                })
                .sum()
        })
        .collect();

    let mut ext = vec![0.0; n_sym];
    let mut prev = vec![0.0; ns];
    for n in (0..n_sym).rev() {
        let a = &alpha[n * ns..(n + 1) * ns];
        let mut num = [f64::NEG_INFINITY; 2];
        prev.fill(f64::NEG_INFINITY);
        for s in 0..ns {
            for b in 0..2 {
                let sp = ((s << 1) | b) & mask;
                let g = gamma(n, s, b);
                num[b] = max_star(num[b], a[s] + g + beta[sp]);
                prev[s] = max_star(prev[s], g + prior(n, b) + beta[sp]);
            }
        }
        ext[n] = num[0] - num[1];
        let m = lse(prev.iter().copied()).max(f64::MIN);
        for (d, &p) in beta.iter_mut().zip(&prev) {
            *d = p - m;
        }
    }
    Ok(ext)
}
