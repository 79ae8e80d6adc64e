//! Integrated autocorrelation time by overlapping batch means, and the
//! computing-time criterion `CT = IAT / σ²`.

use alloc::vec::Vec;
use libm::sqrt;

use crate::kernel::Trace;
use crate::{Error, Result};

const DEGENERATE_VARIANCE: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IatEstimate {
    pub iat: f64,
    pub asymp_var: f64,
    pub batch_len: usize,
    pub n: usize,
}

/// `⌊√n⌋`, at least 1.
pub fn default_batch_len(n: usize) -> usize {
    let b = sqrt(n as f64) as usize;
    // guard against rounding just below an exact square
    let b = if (b + 1) * (b + 1) <= n { b + 1 } else { b };
    b.max(1)
}

/// OBM estimate of the asymptotic variance and the IAT of `trace`.
/// `batch_len = None` selects [`default_batch_len`].
pub fn iat_obm(trace: &[f64], batch_len: Option<usize>) -> Result<IatEstimate> {
    let n = trace.len();
    let b = batch_len.unwrap_or_else(|| default_batch_len(n));
    if b == 0 || n < 4 * b || n < 2 {
        return Err(Error::TraceTooShort {
            len: n,
            batch_len: b,
        });
    }
    let nf = n as f64;
    let mean = trace.iter().sum::<f64>() / nf;
    let var = trace.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (nf - 1.0);
    if !(var > DEGENERATE_VARIANCE) {
        return Err(Error::DegenerateTrace);
    }

    // sliding window over centred values keeps the batch sums well conditioned
    let bf = b as f64;
    let mut window: f64 = trace[..b].iter().map(|x| x - mean).sum();
    let mut ss = (window / bf) * (window / bf);
    for j in 1..=(n - b) {
        window += (trace[j + b - 1] - mean) - (trace[j - 1] - mean);
        ss += (window / bf) * (window / bf);
    }
    let asymp_var = nf * bf / ((nf - bf) * (nf - bf + 1.0)) * ss;
    Ok(IatEstimate {
        iat: asymp_var / var,
        asymp_var,
        batch_len: b,
        n,
    })
}

/// `iat / σ²`.
pub fn compute_ct(iat: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::ZeroSigma);
    }
    Ok(iat / (sigma * sigma))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceSummary {
    pub mean: f64,
    pub variance: f64,
    pub acceptance_rate: f64,
    pub iat: IatEstimate,
    pub ct: Option<f64>,
}

/// Moments, acceptance rate, IAT and (if `sigma > 0` is given) CT.
pub fn summarize(trace: &Trace, sigma: Option<f64>) -> Result<TraceSummary> {
    if trace.is_empty() {
        return Err(Error::InvalidArgument("cannot summarize an empty trace"));
    }
    let iat = iat_obm(&trace.f_values, None)?;
    let n = trace.len() as f64;
    let mean = trace.f_values.iter().sum::<f64>() / n;
    let variance = trace
        .f_values
        .iter()
        .map(|x| (x - mean) * (x - mean))
        .sum::<f64>()
        / (n - 1.0);
    let ct = match sigma {
        Some(s) => Some(compute_ct(iat.iat, s)?),
        None => None,
    };
    Ok(TraceSummary {
        mean,
        variance,
        acceptance_rate: trace.acceptance_rate(),
        iat,
        ct,
    })
}

/// `Σ_i IAT(f_i)` over per-coordinate traces. Despite being reported as an
/// average elsewhere, this is the plain sum.
pub fn iat_sum_over_coords(traces: &[Vec<f64>]) -> Result<f64> {
    if traces.is_empty() {
        return Err(Error::InvalidArgument("need at least one coordinate trace"));
    }
    let n = traces[0].len();
    let mut total = 0.0;
    for t in traces {
        if t.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: t.len(),
            });
        }
        total += iat_obm(t, None)?.iat;
    }
    Ok(total)
}

/// Alias kept for the `iat_average` naming used in reports.
pub fn iat_average(traces: &[Vec<f64>]) -> Result<f64> {
    iat_sum_over_coords(traces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::RngStream;
    use alloc::vec;
    use proptest::prelude::*;

    fn ar1(rho: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut r = RngStream::new(seed, 0);
        let innov = (1.0 - rho * rho).sqrt();
        let mut x = r.std_normal();
        (0..n)
            .map(|_| {
                x = rho * x + innov * r.std_normal();
                x
            })
            .collect()
    }

    /// Direct O(n·b) evaluation of the OBM formula.
    fn obm_naive(x: &[f64], b: usize) -> f64 {
        let n = x.len();
        let mean = x.iter().sum::<f64>() / n as f64;
        let ss: f64 = (0..=n - b)
            .map(|j| {
                let bm = x[j..j + b].iter().sum::<f64>() / b as f64;
                (bm - mean) * (bm - mean)
            })
            .sum();
        (n * b) as f64 / (((n - b) * (n - b + 1)) as f64) * ss
    }

    #[test]
    fn matches_naive_formula() {
        let x = ar1(0.7, 5000, 3);
        for b in [1, 7, 70, 1250] {
            let e = iat_obm(&x, Some(b)).unwrap();
            let naive = obm_naive(&x, b);
            assert!((e.asymp_var - naive).abs() < 1e-9 * naive, "b={b}");
        }
    }

    /// Median IAT over `seeds` independent traces. A single OBM estimate at
    /// `b = √n` has relative sd about `√(4b/3n)`, so bands are checked on
    /// the median.
    fn median_iat(rho: f64, n: usize, seeds: u64) -> f64 {
        let mut v: Vec<f64> = (0..seeds)
            .map(|s| iat_obm(&ar1(rho, n, 1000 + s), None).unwrap().iat)
            .collect();
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    }

    #[test]
    fn iid_trace() {
        let x = ar1(0.0, 1_000_000, 1);
        assert_eq!(iat_obm(&x, None).unwrap().batch_len, 1000);
        let m = median_iat(0.0, 1_000_000, 5);
        assert!((0.95..=1.05).contains(&m), "{m}");
    }

    #[test]
    fn ar1_half() {
        let m = median_iat(0.5, 1_000_000, 5);
        assert!((2.85..=3.15).contains(&m), "{m}");
    }

    #[test]
    fn ar1_nine_tenths() {
        let m = median_iat(0.9, 4_000_000, 5);
        assert!((17.1..=20.9).contains(&m), "{m}");
    }

    #[test]
    fn degenerate_and_short() {
        assert_eq!(iat_obm(&[2.0; 100], None), Err(Error::DegenerateTrace));
        assert!(matches!(
            iat_obm(&[1.0, 2.0, 3.0], Some(2)),
            Err(Error::TraceTooShort { .. })
        ));
    }

    #[test]
    fn batch_len_default() {
        assert_eq!(default_batch_len(1_000_000), 1000);
        assert_eq!(default_batch_len(99), 9);
        assert_eq!(default_batch_len(100), 10);
        assert_eq!(default_batch_len(1), 1);
    }

    #[test]
    fn ct_examples() {
        assert_eq!(compute_ct(2.0, 1.0).unwrap(), 2.0);
        assert!((compute_ct(11.40, 1.16).unwrap() - 8.47).abs() < 0.01);
        assert!((compute_ct(55.99, 1.81).unwrap() - 17.09).abs() < 0.01);
        assert_eq!(compute_ct(1.0, 0.0), Err(Error::ZeroSigma));
    }

    #[test]
    fn summarize_acceptance() {
        let f: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin()).collect();
        let all = Trace {
            f_values: f.clone(),
            accept_flags: vec![true; 100],
        };
        assert_eq!(summarize(&all, None).unwrap().acceptance_rate, 1.0);
        let alt = Trace {
            f_values: f,
            accept_flags: (0..100).map(|i| i % 2 == 0).collect(),
        };
        let s = summarize(&alt, Some(2.0)).unwrap();
        assert_eq!(s.acceptance_rate, 0.5);
        assert!((s.ct.unwrap() - s.iat.iat / 4.0).abs() < 1e-15);
    }

    #[test]
    fn sum_over_coords() {
        let a = ar1(0.0, 100_000, 10);
        let b = ar1(0.0, 100_000, 11);
        let single = iat_obm(&a, None).unwrap().iat;
        assert_eq!(
            iat_sum_over_coords(core::slice::from_ref(&a)).unwrap(),
            single
        );
        let s = iat_average(&[a.clone(), b]).unwrap();
        assert!((s - 2.0).abs() < 0.2, "{s}");
        assert_eq!(
            iat_sum_over_coords(&[a, vec![1.0; 100_000]]),
            Err(Error::DegenerateTrace)
        );
    }

    #[test]
    fn consistency_in_n() {
        // median relative error over 20 seeds shrinks with n
        let rho = 0.8;
        let truth = (1.0 + rho) / (1.0 - rho);
        let med = |n: usize| {
            let mut errs: Vec<f64> = (0..20)
                .map(|s| (iat_obm(&ar1(rho, n, 100 + s), None).unwrap().iat - truth).abs() / truth)
                .collect();
            errs.sort_by(f64::total_cmp);
            0.5 * (errs[9] + errs[10])
        };
        let (e4, e5, e6) = (med(10_000), med(100_000), med(1_000_000));
        assert!(e4 > e5 && e5 > e6, "{e4} {e5} {e6}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn affine_invariance(a in prop_oneof![-50.0f64..-0.01, 0.01f64..50.0], c in -1e3f64..1e3, seed in 0u64..1000) {
            let x = ar1(0.6, 4000, seed);
            let y: Vec<f64> = x.iter().map(|v| a * v + c).collect();
            let ix = iat_obm(&x, None).unwrap().iat;
            let iy = iat_obm(&y, None).unwrap().iat;
            prop_assert!((ix - iy).abs() <= 1e-9 * ix);
        }

        #[test]
        fn ct_decreasing_in_sigma(iat in 0.1f64..1e3, s1 in 0.01f64..5.0, ds in 0.001f64..5.0) {
            prop_assert!(compute_ct(iat, s1 + ds).unwrap() < compute_ct(iat, s1).unwrap());
        }
    }
}
