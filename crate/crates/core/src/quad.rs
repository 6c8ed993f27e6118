//! Globally adaptive Gauss-Kronrod (10, 21) quadrature.

use alloc::vec::Vec;
use core::fmt;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Gauss weights for the odd Kronrod nodes `XGK[1], XGK[3], ..., XGK[9]`.
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadSettings {
    fn default() -> Self {
        QuadSettings {
            rel_tol: 1e-10,
            abs_tol: 0.0,
            max_intervals: 200,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum QuadError<E> {
    /// The integrand failed at `at`.
    Integrand { at: f64, source: E },
    /// Tolerance not reached within the interval budget.
    NotConverged(Estimate),
}

impl<E: fmt::Display> fmt::Display for QuadError<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuadError::Integrand { at, source } => {
                write!(f, "integrand failed at {:?}: {}", at, source)
            }
            QuadError::NotConverged(e) => write!(
                f,
                "quadrature did not converge (best estimate {:?} ± {:?})",
                e.value, e.error
            ),
        }
    }
}

impl<E: fmt::Debug + fmt::Display> core::error::Error for QuadError<E> {}

fn rule<E>(
    f: &mut impl FnMut(f64) -> Result<f64, E>,
    a: f64,
    b: f64,
) -> Result<Estimate, QuadError<E>> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut call = |x: f64| f(x).map_err(|source| QuadError::Integrand { at: x, source });
    let fc = call(center)?;
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    for (j, &node) in XGK[..10].iter().enumerate() {
        let dx = half * node;
        let pair = call(center - dx)? + call(center + dx)?;
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Ok(Estimate {
        value: kronrod * half,
        error: libm::fabs((kronrod - gauss) * half),
    })
}

/// Integrates `f` over `[a, b]` (either orientation) to
/// `max(abs_tol, rel_tol·|I|)`.
pub fn integrate<E>(
    mut f: impl FnMut(f64) -> Result<f64, E>,
    a: f64,
    b: f64,
    settings: &QuadSettings,
) -> Result<Estimate, QuadError<E>> {
    if a == b {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
        });
    }
    if b < a {
        return integrate(f, b, a, settings).map(|e| Estimate {
            value: -e.value,
            error: e.error,
        });
    }
    let first = rule(&mut f, a, b)?;
    let mut pieces: Vec<(f64, f64, Estimate)> = alloc::vec![(a, b, first)];
    let mut total = first;
    loop {
        let target = libm::fmax(settings.abs_tol, settings.rel_tol * libm::fabs(total.value));
        if total.error <= target {
            return Ok(total);
        }
        if pieces.len() >= settings.max_intervals.max(1) {
            return Err(QuadError::NotConverged(total));
        }
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .fold((0, -1.0), |(bi, be), (i, p)| {
                if p.2.error > be {
                    (i, p.2.error)
                } else {
                    (bi, be)
                }
            });
        let (lo, hi, _) = pieces.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if !(lo < mid && mid < hi) {
            return Err(QuadError::NotConverged(total));
        }
        let left = rule(&mut f, lo, mid)?;
        let right = rule(&mut f, mid, hi)?;
        pieces.push((lo, mid, left));
        pieces.push((mid, hi, right));
        // Re-sum to avoid drift from repeated subtraction.
        total = pieces.iter().fold(
            Estimate {
                value: 0.0,
                error: 0.0,
            },
            |acc, p| Estimate {
                value: acc.value + p.2.value,
                error: acc.error + p.2.error,
            },
        );
    }
}
