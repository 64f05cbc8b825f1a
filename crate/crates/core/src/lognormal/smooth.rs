//! Zero-phase moving-average low-pass filter.

/// Window length in samples for a window of `window_s` seconds at spacing `dt`.
pub fn window_len(window_s: f64, dt: f64) -> usize {
    if !(dt > 0.0) || !(window_s > 0.0) {
        return 1;
    }
    ((window_s / dt).round() as usize).max(1)
}

/// Forward then backward causal moving average of `window` samples.
///
/// The two passes cancel each other's delay, so peaks stay in place. Near the
/// edges the average runs over the samples available.
pub fn zero_phase_average(signal: &[f64], window: usize) -> Vec<f64> {
    if window <= 1 || signal.len() < 2 {
        return signal.to_vec();
    }
    let forward = running_mean(signal.iter().copied(), window);
    let mut backward = running_mean(forward.into_iter().rev(), window);
    backward.reverse();
    backward
}

fn running_mean(values: impl Iterator<Item = f64>, window: usize) -> Vec<f64> {
    let values: Vec<f64> = values.collect();
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for i in 0..values.len() {
        acc += values[i];
        if i >= window {
            acc -= values[i - window];
        }
        let n = (i + 1).min(window);
        out.push(acc / n as f64);
    }
    out
}
