//! Temporal band-pass filtering for externally acquired wavefields.

use std::f64::consts::PI;

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use super::WavefieldCube;

/// Filters every row of the cube with a linear-phase FIR band-pass
/// (windowed sinc, Hamming window), compensating the group delay so the
/// output is time-aligned with the input. Output dims equal input dims.
pub fn bandpass_time(
    cube: &WavefieldCube,
    f_center: f64,
    bandwidth: f64,
    taps: usize,
) -> Result<WavefieldCube> {
    let h = design_bandpass(f_center, bandwidth, taps, cube.dt)?;
    let delay = (taps - 1) / 2;
    let t = cube.t();

    let rows: Vec<Vec<f64>> = (0..cube.n())
        .into_par_iter()
        .map(|i| {
            let row = cube.data.row(i);
            let mut out = vec![0.0; t];
            for (ti, o) in out.iter_mut().enumerate() {
                // y[ti] = sum_k h[k] * x[ti + delay - k], zero outside [0, T)
                let mut acc = 0.0;
                for (k, &hk) in h.iter().enumerate() {
                    let src = ti as isize + delay as isize - k as isize;
                    if src >= 0 && (src as usize) < t {
                        acc += hk * row[src as usize];
                    }
                }
                *o = acc;
            }
            out
        })
        .collect();

    let mut data = Array2::zeros((cube.n(), t));
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            data[[i, j]] = v;
        }
    }
    WavefieldCube::new(cube.grid, cube.dt, data)
}

/// Windowed-sinc band-pass taps, gain-normalized to exactly 1 at `f_center`.
pub(crate) fn design_bandpass(f_center: f64, bandwidth: f64, taps: usize, dt: f64) -> Result<Vec<f64>> {
    if taps < 3 || taps % 2 == 0 {
        return Err(Error::arg(format!("taps must be odd and >= 3, got {taps}")));
    }
    let nyquist = 0.5 / dt;
    let f_lo = f_center - bandwidth / 2.0;
    let f_hi = f_center + bandwidth / 2.0;
    if !(f_lo > 0.0) || !(f_hi < nyquist) {
        return Err(Error::arg(format!(
            "band [{f_lo}, {f_hi}] Hz must lie strictly inside (0, {nyquist}) Hz"
        )));
    }
    let v_lo = f_lo * dt; // normalized frequencies (cycles per sample)
    let v_hi = f_hi * dt;
    let delay = (taps - 1) as f64 / 2.0;
    let sinc = |x: f64| if x == 0.0 { 1.0 } else { (PI * x).sin() / (PI * x) };
    let mut h: Vec<f64> = (0..taps)
        .map(|n| {
            let m = n as f64 - delay;
            let ideal = 2.0 * v_hi * sinc(2.0 * v_hi * m) - 2.0 * v_lo * sinc(2.0 * v_lo * m);
            let window = 0.54 - 0.46 * (2.0 * PI * n as f64 / (taps - 1) as f64).cos();
            ideal * window
        })
        .collect();
    // Symmetric taps give a real response after delay compensation.
    let gain: f64 = h
        .iter()
        .enumerate()
        .map(|(n, &hn)| hn * (2.0 * PI * f_center * dt * (n as f64 - delay)).cos())
        .sum();
    if gain.abs() < 1e-12 {
        return Err(Error::arg("degenerate band-pass design: zero gain at center"));
    }
    for hn in &mut h {
        *hn /= gain;
    }
    Ok(h)
}
