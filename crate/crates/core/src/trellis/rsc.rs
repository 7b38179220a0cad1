//! Rate-1/2 recursive systematic convolutional code with feedback `1 + D + D^2`
//! and parity `1 + D^2`, terminated with two tail bits.

use crate::soft::max_star;
use crate::{Error, Result};

/// Tail inputs appended to drive the encoder back to the zero state.
pub const RSC_TAIL: usize = 2;

const STATES: usize = 4;

/// Coded length `2 (K + 2)` for a `K`-bit message.
pub fn coded_len(msg_len: usize) -> usize {
    2 * (msg_len + RSC_TAIL)
}

/// One encoder step from state `a1 | a2 << 1`: returns (parity, next state).
#[inline]
fn step(state: usize, u: usize) -> (usize, usize) {
    let a1 = state & 1;
    let a2 = state >> 1;
    let a = u ^ a1 ^ a2;
    (a ^ a2, a | (a1 << 1))
}

/// Input that zeroes the feedback register.
#[inline]
fn tail_input(state: usize) -> usize {
    (state & 1) ^ (state >> 1)
}

/// Encodes `msg`, emitting `[u_0, p_0, u_1, p_1, ...]` including the tail pairs.
pub fn rsc_encode(msg: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(coded_len(msg.len()));
    let mut s = 0;
    for t in 0..msg.len() + RSC_TAIL {
        let u = if t < msg.len() { (msg[t] & 1) as usize } else { tail_input(s) };
        let (p, next) = step(s, u);
        out.push(u as u8);
        out.push(p as u8);
        s = next;
    }
    debug_assert_eq!(s, 0);
    out
}

#[derive(Clone, Debug)]
pub struct DecoderOutput {
    /// Extrinsic LLRs of every coded bit, in codeword order.
    pub extrinsic: Vec<f64>,
    /// A posteriori LLRs of the message bits.
    pub message_posterior: Vec<f64>,
}

#[inline]
fn half_llr(bit: usize, l: f64) -> f64 {
    if bit == 0 {
        0.5 * l
    } else {
        -0.5 * l
    }
}

/// Log-domain BCJR over the terminated trellis.
///
/// `coded_llr` holds channel/a priori LLRs `ln P(bit=0)/P(bit=1)` of the
/// codeword in the layout produced by [`rsc_encode`].
pub fn bcjr_decode(coded_llr: &[f64]) -> Result<DecoderOutput> {
    if coded_llr.len() % 2 != 0 || coded_llr.len() < coded_len(0) {
        return Err(Error::LengthMismatch {
            expected: coded_len(coded_llr.len().saturating_sub(2 * RSC_TAIL) / 2),
            actual: coded_llr.len(),
        });
    }
    let steps = coded_llr.len() / 2;
    let msg_len = steps - RSC_TAIL;
    let inputs = |t: usize, s: usize| -> std::ops::RangeInclusive<usize> {
        if t < msg_len {
            0..=1
        } else {
            let u = tail_input(s);
            u..=u
        }
    };

    let ninf = f64::NEG_INFINITY;
    let mut alpha = vec![[ninf; STATES]; steps + 1];
    alpha[0][0] = 0.0;
    for t in 0..steps {
        let (ls, lp) = (coded_llr[2 * t], coded_llr[2 * t + 1]);
        let mut next = [ninf; STATES];
        for s in 0..STATES {
            if alpha[t][s] == ninf {
                continue;
            }
            for u in inputs(t, s) {
                let (p, sp) = step(s, u);
                let g = half_llr(u, ls) + half_llr(p, lp);
                next[sp] = max_star(next[sp], alpha[t][s] + g);
            }
        }
        let m = next.iter().copied().fold(ninf, f64::max);
        alpha[t + 1] = next.map(|v| v - m);
    }

    let mut beta = [ninf; STATES];
    beta[0] = 0.0;
    let mut extrinsic = vec![0.0; coded_llr.len()];
    let mut message_posterior = vec![0.0; msg_len];
    for t in (0..steps).rev() {
        let (ls, lp) = (coded_llr[2 * t], coded_llr[2 * t + 1]);
        let mut su = [ninf; 2];
        let mut sp_ = [ninf; 2];
        let mut prev = [ninf; STATES];
        for s in 0..STATES {
            for u in inputs(t, s) {
                let (p, sn) = step(s, u);
                if beta[sn] == ninf {
                    continue;
                }
                let gu = half_llr(u, ls);
                let gp = half_llr(p, lp);
                let a = alpha[t][s];
                su[u] = max_star(su[u], a + gp + beta[sn]);
                sp_[p] = max_star(sp_[p], a + gu + beta[sn]);
                prev[s] = max_star(prev[s], gu + gp + beta[sn]);
            }
        }
        extrinsic[2 * t] = finite_diff(su);
        extrinsic[2 * t + 1] = finite_diff(sp_);
        if t < msg_len {
            message_posterior[t] = extrinsic[2 * t] + ls;
        }
        let m = prev.iter().copied().fold(ninf, f64::max);
        beta = prev.map(|v| v - m);
    }
    Ok(DecoderOutput {
        extrinsic,
        message_posterior,
    })
}

/// `a[0] - a[1]`, zero when neither bit value is reachable through the trellis.
fn finite_diff(a: [f64; 2]) -> f64 {
    match (a[0].is_finite(), a[1].is_finite()) {
        (true, true) => a[0] - a[1],
        _ => 0.0,
    }
}
