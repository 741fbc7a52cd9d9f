use crate::error::{Error, Result};

/// Stationary law of the M/M/N birth-death chain with arrival rate `lambda`
/// and unit service rate, computed in log space. The vector runs at least to
/// `10 N + 1` and until the remaining geometric tail is below `1e-17`.
pub fn erlang_oracle(servers: usize, lambda: f64) -> Result<Vec<f64>> {
    if servers == 0 {
        return Err(Error::Config("M/M/N needs at least one server".into()));
    }
    let n = servers as f64;
    if !(lambda > 0.0) || lambda >= n {
        return Err(Error::Unstable(format!("arrival rate {lambda} is not in (0, {servers})")));
    }
    let rho = lambda / n;
    let ln_lambda = lambda.ln();
    let tail_len = ((1e-17f64).ln() / rho.ln()).ceil() as usize;
    let len = (10 * servers + 2).max(servers + tail_len + 1);
    let mut ln_q = Vec::with_capacity(len);
    ln_q.push(0.0);
    for k in 1..len {
        let prev = ln_q[k - 1];
        ln_q.push(prev + ln_lambda - (k.min(servers) as f64).ln());
    }
    // exact normalizer: finite head plus geometric tail from N on
    let head_max = ln_q[..servers].iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let top = head_max.max(ln_q[servers] - (1.0 - rho).ln());
    let mut total: f64 = ln_q[..servers].iter().map(|v| (v - top).exp()).sum();
    total += (ln_q[servers] - top).exp() / (1.0 - rho);
    let ln_norm = top + total.ln();
    Ok(ln_q.iter().map(|v| (v - ln_norm).exp()).collect())
}

/// `sum_k |p_k - q_k| / 2` over the common support `0..=upto`, counting
/// mass outside it on both sides.
pub fn total_variation(p: &[f64], q: &[f64], upto: usize) -> f64 {
    let at = |v: &[f64], k: usize| v.get(k).copied().unwrap_or(0.0);
    let mut tv = 0.0;
    let (mut mp, mut mq) = (0.0, 0.0);
    for k in 0..=upto {
        tv += (at(p, k) - at(q, k)).abs();
        mp += at(p, k);
        mq += at(q, k);
    }
    tv += ((1.0 - mp).max(0.0) - (1.0 - mq).max(0.0)).abs();
    0.5 * tv
}

/// Relative frequencies of nonnegative integer values.
pub fn frequencies(values: &[f64]) -> Vec<f64> {
    let max = values.iter().fold(0.0f64, |m, &v| m.max(v)) as usize;
    let mut counts = vec![0.0; max + 1];
    for &v in values {
        counts[v.round().max(0.0) as usize] += 1.0;
    }
    let n = values.len() as f64;
    counts.iter_mut().for_each(|c| *c /= n);
    counts
}
