use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Sample mean with a two-sided Student-t confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanCi {
    pub n: usize,
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
}

impl MeanCi {
    pub fn half_width(&self) -> f64 {
        (self.hi - self.lo) / 2.0
    }

    pub fn overlaps(&self, other: &MeanCi) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

/// `level` is the coverage, e.g. 0.95. With one sample the interval is the
/// point itself.
pub fn mean_ci(xs: &[f64], level: f64) -> MeanCi {
    let n = xs.len();
    let m = mean(xs);
    if n < 2 {
        return MeanCi { n, mean: m, lo: m, hi: m };
    }
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("dof is positive")
        .inverse_cdf(0.5 + level / 2.0);
    let half = t * (variance(xs) / n as f64).sqrt();
    MeanCi {
        n,
        mean: m,
        lo: m - half,
        hi: m + half,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchTest {
    pub t: f64,
    pub dof: f64,
    /// One-sided p-value for `mean(a) > mean(b)`.
    pub p_greater: f64,
}

/// Welch's unequal-variance t-test of `a` against `b`.
pub fn welch(a: &[f64], b: &[f64]) -> WelchTest {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (variance(a) / na, variance(b) / nb);
    let diff = mean(a) - mean(b);
    let se2 = va + vb;
    if se2 == 0.0 {
        let p = if diff > 0.0 { 0.0 } else { 1.0 };
        return WelchTest {
            t: diff.signum() * f64::INFINITY,
            dof: na + nb - 2.0,
            p_greater: p,
        };
    }
    let t = diff / se2.sqrt();
    let dof = se2.powi(2) / (va.powi(2) / (na - 1.0) + vb.powi(2) / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, dof).expect("dof is positive");
    WelchTest {
        t,
        dof,
        p_greater: 1.0 - dist.cdf(t),
    }
}

/// Empirical CDF as `(value, P(X <= value))` at each distinct value, so
/// the first point is `(min, count(min)/n)` and the last is `(max, 1)`.
pub fn ecdf(xs: &[f64]) -> Vec<(f64, f64)> {
    let mut v: Vec<f64> = xs.iter().copied().filter(|x| !x.is_nan()).collect();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, &x) in v.iter().enumerate() {
        let f = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == x => last.1 = f,
            _ => out.push((x, f)),
        }
    }
    out
}
