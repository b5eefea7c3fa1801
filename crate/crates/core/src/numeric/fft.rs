//! Radix-2 complex FFT, used for convolving probability mass functions.

use std::f64::consts::PI;

fn fft_in_place(re: &mut [f64], im: &mut [f64], inverse: bool) {
    let n = re.len();
    debug_assert!(n.is_power_of_two());
    // Bit-reversal permutation.
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            re.swap(i, j);
            im.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let ang = 2.0 * PI / len as f64 * if inverse { 1.0 } else { -1.0 };
        let (wr, wi) = (ang.cos(), ang.sin());
        let mut i = 0;
        while i < n {
            let (mut cr, mut ci) = (1.0, 0.0);
            for k in 0..len / 2 {
                let (ur, ui) = (re[i + k], im[i + k]);
                let (vr, vi) = (
                    re[i + k + len / 2] * cr - im[i + k + len / 2] * ci,
                    re[i + k + len / 2] * ci + im[i + k + len / 2] * cr,
                );
                re[i + k] = ur + vr;
                im[i + k] = ui + vi;
                re[i + k + len / 2] = ur - vr;
                im[i + k + len / 2] = ui - vi;
                let ncr = cr * wr - ci * wi;
                ci = cr * wi + ci * wr;
                cr = ncr;
            }
            i += len;
        }
        len <<= 1;
    }
    if inverse {
        let inv = 1.0 / n as f64;
        for v in re.iter_mut() {
            *v *= inv;
        }
        for v in im.iter_mut() {
            *v *= inv;
        }
    }
}

/// Linear convolution of two nonnegative sequences. Tiny negative results
/// from roundoff are clamped to zero.
pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let out_len = a.len() + b.len() - 1;
    let n = out_len.next_power_of_two();
    let mut ar = vec![0.0; n];
    let mut ai = vec![0.0; n];
    let mut br = vec![0.0; n];
    let mut bi = vec![0.0; n];
    ar[..a.len()].copy_from_slice(a);
    br[..b.len()].copy_from_slice(b);
    fft_in_place(&mut ar, &mut ai, false);
    fft_in_place(&mut br, &mut bi, false);
    for i in 0..n {
        let (xr, xi) = (ar[i], ai[i]);
        ar[i] = xr * br[i] - xi * bi[i];
        ai[i] = xr * bi[i] + xi * br[i];
    }
    fft_in_place(&mut ar, &mut ai, true);
    ar.truncate(out_len);
    for v in ar.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    ar
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct(a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out
    }

    #[test]
    fn matches_direct_convolution() {
        let a: Vec<f64> = (0..37).map(|i| ((i * 7 + 3) % 11) as f64 / 11.0).collect();
        let b: Vec<f64> = (0..53).map(|i| ((i * 5 + 1) % 13) as f64 / 13.0).collect();
        let fast = convolve(&a, &b);
        let slow = direct(&a, &b);
        for (x, y) in fast.iter().zip(&slow) {
            assert!((x - y).abs() < 1e-9, "{x} vs {y}");
        }
    }

    #[test]
    fn pmf_convolution_sums_to_product() {
        let a = vec![0.5, 0.25, 0.125, 0.125];
        let b = vec![0.9, 0.1];
        let c = convolve(&a, &b);
        let s: f64 = c.iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
    }
}
