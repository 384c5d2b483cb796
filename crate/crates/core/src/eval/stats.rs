use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub d: f64,
    pub p: f64,
}

/// Two-sample Kolmogorov–Smirnov test.
///
/// `D` is the largest gap between the two empirical CDFs. The p-value uses the
/// asymptotic Kolmogorov distribution with effective size `n_a·n_b/(n_a+n_b)`
/// and the small-sample correction `λ = (√n + 0.12 + 0.11/√n)·D`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Input("KS test needs two non-empty samples".into()));
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::Input("KS samples contain NaN".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = na * nb / (na + nb);
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    Ok(KsResult { d, p: kolmogorov_p(lambda) })
}

/// `Q(λ) = 2 Σ_{k≥1} (−1)^{k−1} exp(−2k²λ²)`, summed until a term drops
/// below 1e-10, clamped to [0, 1].
pub fn kolmogorov_p(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    // Terms decrease monotonically, so the truncation error is below the
    // first dropped term.
    for k in 1..=10_000_000u64 {
        let kf = k as f64;
        let term = 2.0 * (-2.0 * kf * kf * lambda * lambda).exp();
        if term < 1e-10 {
            break;
        }
        sum += sign * term;
        sign = -sign;
    }
    sum.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TTest {
    pub t: f64,
    pub p: f64,
}

/// Two-sided paired t-test on per-query scores.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(Error::Input(format!("paired samples differ in length: {} vs {}", a.len(), b.len())));
    }
    if a.len() < 2 {
        return Err(Error::Input("paired t-test needs at least two pairs".into()));
    }
    let n = a.len() as f64;
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();
    if sd == 0.0 {
        return Ok(if mean == 0.0 {
            TTest { t: 0.0, p: 1.0 }
        } else {
            TTest { t: mean.signum() * f64::INFINITY, p: 0.0 }
        });
    }
    let t = mean / (sd / n.sqrt());
    let dist = StudentsT::new(0.0, 1.0, n - 1.0).expect("valid degrees of freedom");
    let p = (2.0 * dist.sf(t.abs())).min(1.0);
    Ok(TTest { t, p })
}

/// `min(1, n_tests · p)` for each p-value.
pub fn bonferroni_adjust(p_values: &[f64], n_tests: usize) -> Result<Vec<f64>> {
    if n_tests == 0 {
        return Err(Error::Input("Bonferroni correction needs n_tests >= 1".into()));
    }
    p_values
        .iter()
        .map(|&p| {
            if (0.0..=1.0).contains(&p) {
                Ok((p * n_tests as f64).min(1.0))
            } else {
                Err(Error::Input(format!("p-value {p} outside [0, 1]")))
            }
        })
        .collect()
}

/// Linear-interpolation quantile of sorted data (the common "type 7").
pub fn quantile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    Some(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

/// Box-plot summary of labelled values; outliers lie beyond 1.5 × IQR.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub count: usize,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub q1: Option<f64>,
    pub q3: Option<f64>,
    pub outliers: Vec<(String, f64)>,
}

impl Summary {
    pub fn new(values: &[(String, f64)]) -> Self {
        let mut sorted: Vec<f64> = values.iter().map(|(_, v)| *v).collect();
        sorted.sort_by(f64::total_cmp);
        let q1 = quantile(&sorted, 0.25);
        let q3 = quantile(&sorted, 0.75);
        let outliers = match (q1, q3) {
            (Some(q1), Some(q3)) => {
                let fence = 1.5 * (q3 - q1);
                values
                    .iter()
                    .filter(|(_, v)| *v < q1 - fence || *v > q3 + fence)
                    .cloned()
                    .collect()
            }
            _ => Vec::new(),
        };
        Self {
            count: sorted.len(),
            mean: (!sorted.is_empty()).then(|| sorted.iter().sum::<f64>() / sorted.len() as f64),
            median: quantile(&sorted, 0.5),
            q1,
            q3,
            outliers,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ks_examples() {
        let r = ks_two_sample(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((r.d, r.p), (0.0, 1.0));
        let r = ks_two_sample(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(r.d, 1.0);
        assert!(r.p < 0.1);
        assert!(ks_two_sample(&[], &[1.0]).is_err());
        assert!(ks_two_sample(&[f64::NAN], &[1.0]).is_err());
    }

    #[test]
    fn ks_handles_ties_across_samples() {
        // ECDFs: a jumps to 2/3 at 1, b to 1/2 at 1; at 2 both reach 1 and 1.
        let r = ks_two_sample(&[1.0, 1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert!((r.d - (2.0 / 3.0 - 0.5)).abs() < 1e-15);
    }

    #[test]
    fn kolmogorov_reference_values() {
        // Q(λ) tabulated values of the Kolmogorov survival function.
        assert!((kolmogorov_p(1.0) - 0.269_999_671_677_354_6).abs() < 1e-9);
        assert!((kolmogorov_p(1.36) - 0.049_485_876_755_378).abs() < 1e-9);
        assert!((kolmogorov_p(0.5) - 0.963_945_243_664_875).abs() < 1e-9);
        assert_eq!(kolmogorov_p(0.0), 1.0);
        assert!(kolmogorov_p(0.01) <= 1.0);
        assert!(kolmogorov_p(10.0) < 1e-80);
    }

    #[test]
    fn t_test_degenerate_cases() {
        let a = [0.3, 0.5, 0.7];
        assert_eq!(paired_t_test(&a, &a).unwrap(), TTest { t: 0.0, p: 1.0 });
        let r = paired_t_test(&[2.0, 3.0, 4.0, 5.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(r.p, 0.0);
        assert!(paired_t_test(&[1.0], &[1.0]).is_err());
        assert!(paired_t_test(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn t_test_closed_form() {
        let d = [0.1, -0.2, 0.3, 0.05, -0.1];
        let zeros = [0.0; 5];
        let r = paired_t_test(&d, &zeros).unwrap();
        // mean = 0.03, sample variance = 0.037, t = 0.03 / (sd / sqrt 5).
        let expected = 0.03 / (0.037f64.sqrt() / 5f64.sqrt());
        assert!((r.t - expected).abs() < 1e-9, "{} vs {expected}", r.t);
        assert!((r.t - 0.348_742_916_231_457_9).abs() < 1e-9);
        // Two-sided p for t = 0.3487 with 4 df.
        assert!((r.p - 0.744_865_201_202_443_7).abs() < 1e-9, "{}", r.p);
    }

    #[test]
    fn bonferroni_examples() {
        assert!((bonferroni_adjust(&[0.01], 16).unwrap()[0] - 0.16).abs() < 1e-15);
        assert_eq!(bonferroni_adjust(&[0.2], 16).unwrap(), [1.0]);
        assert_eq!(bonferroni_adjust(&[0.2, 0.03], 1).unwrap(), [0.2, 0.03]);
        assert!(bonferroni_adjust(&[1.2], 3).is_err());
        assert!(bonferroni_adjust(&[0.1], 0).is_err());
    }

    #[test]
    fn summary_quartiles_and_outliers() {
        let vals: Vec<(String, f64)> = [1.0, 2.0, 3.0, 4.0, 100.0]
            .iter()
            .enumerate()
            .map(|(i, &v)| (format!("t{i}"), v))
            .collect();
        let s = Summary::new(&vals);
        assert_eq!(s.count, 5);
        assert_eq!((s.q1, s.median, s.q3), (Some(2.0), Some(3.0), Some(4.0)));
        assert_eq!(s.outliers, [("t4".to_string(), 100.0)]);
        assert_eq!(s.mean, Some(22.0));
        let empty = Summary::new(&[]);
        assert_eq!((empty.count, empty.mean), (0, None));
    }

    proptest! {
        #[test]
        fn t_test_antisymmetric(pairs in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..30)) {
            let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let ab = paired_t_test(&a, &b).unwrap();
            let ba = paired_t_test(&b, &a).unwrap();
            prop_assert!((ab.t + ba.t).abs() <= 1e-9 * ab.t.abs().max(1.0) || (ab.t.is_infinite() && ab.t == -ba.t));
            prop_assert!((ab.p - ba.p).abs() < 1e-12);
        }

        #[test]
        fn bonferroni_preserves_order(p1 in 0.0f64..=1.0, p2 in 0.0f64..=1.0, n in 1usize..50) {
            let adj = bonferroni_adjust(&[p1.min(p2), p1.max(p2)], n).unwrap();
            prop_assert!(adj[0] <= adj[1]);
        }

        #[test]
        fn ks_invariant_under_monotone_maps(
            a in proptest::collection::vec(-10.0f64..10.0, 1..30),
            b in proptest::collection::vec(-10.0f64..10.0, 1..30),
        ) {
            let f = |x: &f64| x.exp() * 3.0 + 1.0;
            let raw = ks_two_sample(&a, &b).unwrap();
            let mapped = ks_two_sample(&a.iter().map(f).collect::<Vec<_>>(), &b.iter().map(f).collect::<Vec<_>>()).unwrap();
            prop_assert_eq!(raw, mapped);
            prop_assert!((0.0..=1.0).contains(&raw.d) && (0.0..=1.0).contains(&raw.p));
        }
    }
}
