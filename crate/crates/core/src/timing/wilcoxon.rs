//! Two-sided Wilcoxon signed-rank test for paired samples.
//!
//! Zero differences are dropped (Pratt-style exclusion), tied absolute
//! differences receive their average rank. For `n <= 20` remaining pairs the
//! p-value comes from enumerating all `2^n` sign assignments of the observed
//! ranks; above that a normal approximation with tie-corrected variance is used.

use crate::error::{Error, Result};

/// Largest non-zero pair count handled by exact enumeration.
pub const EXACT_MAX_N: usize = 20;

/// Midranks of `|d|` for the non-zero differences, paired with their signs
/// (`true` for positive).
pub fn signed_ranks(diffs: &[f64]) -> Vec<(f64, bool)> {
    let mut nz: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
    nz.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    let mut out = Vec::with_capacity(nz.len());
    let mut i = 0;
    while i < nz.len() {
        let mut j = i;
        while j + 1 < nz.len() && nz[j + 1].abs() == nz[i].abs() {
            j += 1;
        }
        // positions i..=j (0-based) share rank (i+1 + j+1) / 2
        let rank = (i + j + 2) as f64 / 2.0;
        for d in &nz[i..=j] {
            out.push((rank, *d > 0.0));
        }
        i = j + 1;
    }
    out
}

/// Two-sided p-value for `H0: median(curr - prev) = 0`.
///
/// Returns `1.0` when every difference is zero.
pub fn wilcoxon_signed_rank(prev: &[f64], curr: &[f64]) -> Result<f64> {
    if prev.len() != curr.len() || prev.len() < 2 {
        return Err(Error::Shape(format!(
            "wilcoxon needs two equal-length samples of size >= 2, got {} and {}",
            prev.len(),
            curr.len()
        )));
    }
    if prev.iter().chain(curr).any(|x| !x.is_finite()) {
        return Err(Error::Shape("wilcoxon samples must be finite".into()));
    }
    let diffs: Vec<f64> = curr.iter().zip(prev).map(|(c, p)| c - p).collect();
    let ranks = signed_ranks(&diffs);
    let n = ranks.len();
    if n == 0 {
        return Ok(1.0);
    }
    let p = if n <= EXACT_MAX_N { exact_p(&ranks) } else { normal_p(&ranks) };
    Ok(p.clamp(f64::MIN_POSITIVE, 1.0))
}

fn exact_p(ranks: &[(f64, bool)]) -> f64 {
    // Midranks are multiples of 1/2, so doubled ranks are exact integers.
    let doubled: Vec<i64> = ranks.iter().map(|(r, _)| (2.0 * r).round() as i64).collect();
    let total: i64 = doubled.iter().sum();
    let observed: i64 = ranks.iter().zip(&doubled).filter(|((_, pos), _)| *pos).map(|(_, d)| d).sum();
    // Deviation of W+ from its null mean total/2, compared on the doubled scale.
    let obs_dev = (2 * observed - total).abs();
    let n = ranks.len();
    let count = 1u64 << n;
    // Gray-code walk: consecutive assignments differ in one sign.
    let mut w = 0i64;
    let mut extreme = 0u64;
    let mut prev_gray = 0u64;
    for i in 0..count {
        let gray = i ^ (i >> 1);
        if i > 0 {
            let flipped = (gray ^ prev_gray).trailing_zeros() as usize;
            if gray & (1 << flipped) != 0 {
                w += doubled[flipped];
            } else {
                w -= doubled[flipped];
            }
        }
        prev_gray = gray;
        if (2 * w - total).abs() >= obs_dev {
            extreme += 1;
        }
    }
    extreme as f64 / count as f64
}

fn normal_p(ranks: &[(f64, bool)]) -> f64 {
    let n = ranks.len() as f64;
    let w_plus: f64 = ranks.iter().filter(|(_, pos)| *pos).map(|(r, _)| r).sum();
    let mean = n * (n + 1.0) / 4.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < ranks.len() {
        let mut j = i;
        while j + 1 < ranks.len() && ranks[j + 1].0 == ranks[i].0 {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    let z = (w_plus - mean).abs() / var.sqrt();
    erfc(z / std::f64::consts::SQRT_2)
}

/// Complementary error function (W. J. Cody's rational approximations,
/// relative error below 1e-15 over the real line).
fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < 0.5 {
        return 1.0 - erf_small(x);
    }
    if x < 4.0 {
        const P: [f64; 9] = [
            5.641_884_969_886_700_9e-1,
            8.883_149_794_388_376,
            6.611_919_063_714_163e1,
            2.986_351_381_974_001_3e2,
            8.819_522_212_417_69e2,
            1.712_047_612_634_070_7e3,
            2.051_078_377_826_071_5e3,
            1.230_339_354_797_997_2e3,
            2.153_115_354_744_038_3e-8,
        ];
        const Q: [f64; 8] = [
            1.574_492_611_070_983_5e1,
            1.176_939_508_913_125e2,
            5.371_811_018_620_098_6e2,
            1.621_389_574_566_690_3e3,
            3.290_799_235_733_459_7e3,
            4.362_619_090_143_247e3,
            3.439_367_674_143_721_6e3,
            1.230_339_354_803_749_5e3,
        ];
        let mut num = P[8] * x;
        let mut den = x;
        for i in 0..7 {
            num = (num + P[i]) * x;
            den = (den + Q[i]) * x;
        }
        let r = (num + P[7]) / (den + Q[7]);
        return r * (-x * x).exp();
    }
    const P: [f64; 6] = [
        3.053_266_349_612_323_4e-1,
        3.603_448_999_498_044_5e-1,
        1.257_817_261_112_292_6e-1,
        1.608_378_514_874_227_5e-2,
        6.587_491_615_298_378_5e-4,
        1.631_538_713_730_709_6e-2,
    ];
    const Q: [f64; 5] = [
        2.568_520_192_289_822,
        1.872_952_849_923_460_4,
        5.279_051_029_514_284e-1,
        6.051_834_131_244_132e-2,
        2.335_204_976_268_691_8e-3,
    ];
    let z = 1.0 / (x * x);
    let mut num = P[5] * z;
    let mut den = z;
    for i in 0..4 {
        num = (num + P[i]) * z;
        den = (den + Q[i]) * z;
    }
    let r = z * (num + P[4]) / (den + Q[4]);
    let r = (1.0 / std::f64::consts::PI.sqrt() - r) / x;
    r * (-x * x).exp()
}

fn erf_small(x: f64) -> f64 {
    const A: [f64; 5] = [
        3.161_123_743_870_565_6,
        1.138_641_541_510_501_6e2,
        3.774_852_376_853_020_2e2,
        3.209_377_589_138_469_4e3,
        1.857_777_061_846_031_5e-1,
    ];
    const B: [f64; 4] = [
        2.360_129_095_234_412_2e1,
        2.440_246_379_344_441_7e2,
        1.282_616_526_077_372_3e3,
        2.844_236_833_439_170_6e3,
    ];
    let z = x * x;
    let mut num = A[4] * z;
    let mut den = z;
    for i in 0..3 {
        num = (num + A[i]) * z;
        den = (den + B[i]) * z;
    }
    x * (num + A[3]) / (den + B[3])
}
