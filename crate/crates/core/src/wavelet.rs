//! Orthogonal discrete wavelet transform with periodic boundaries.
//!
//! The forward transform is the Mallat pyramid: at each stage the current
//! approximation is circularly convolved with the low-pass filter `h` and the
//! high-pass filter `g`, then decimated by two. Periodic wrapping keeps the
//! transform exactly orthogonal for every even length, including levels
//! shorter than the filter.
//!
//! Levels are indexed by dyadic scale: for a signal of length `N = 2^J` the
//! finest detail level is `j = J - 1` (N/2 coefficients) and the coarsest
//! retained level is `J0 = J - num_levels`.

use crate::error::{Error, Result};

/// Low-pass / high-pass quadrature-mirror filter pair.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterPair {
    low_pass: Vec<f64>,
    high_pass: Vec<f64>,
    vanishing_moments: usize,
    name: String,
}

impl FilterPair {
    /// Builds the pair from low-pass taps; the high-pass taps are the quadrature mirror
    /// `g[k] = (-1)^k h[L-1-k]`.
    pub fn from_low_pass(low_pass: Vec<f64>, vanishing_moments: usize, name: impl Into<String>) -> Result<Self> {
        let len = low_pass.len();
        if len < 2 || !len.is_multiple_of(2) {
            return Err(Error::param(format!("filter needs an even number of taps >= 2, got {len}")));
        }
        if vanishing_moments == 0 {
            return Err(Error::param("vanishing_moments must be positive"));
        }
        let sum: f64 = low_pass.iter().sum();
        let energy: f64 = low_pass.iter().map(|v| v * v).sum();
        if (sum - std::f64::consts::SQRT_2).abs() > 1e-12 || (energy - 1.0).abs() > 1e-12 {
            return Err(Error::param(format!(
                "low-pass taps are not orthonormal (sum {sum}, sum of squares {energy})"
            )));
        }
        let high_pass = (0..len)
            .map(|k| if k % 2 == 0 { low_pass[len - 1 - k] } else { -low_pass[len - 1 - k] })
            .collect();
        Ok(Self { low_pass, high_pass, vanishing_moments, name: name.into() })
    }

    /// Parses `haar` or `dbK` (K in 1..=10).
    pub fn from_name(name: &str) -> Result<Self> {
        let lower = name.trim().to_ascii_lowercase();
        if lower == "haar" {
            return daubechies_filter(1);
        }
        match lower.strip_prefix("db").and_then(|k| k.parse::<usize>().ok()) {
            Some(k) => daubechies_filter(k),
            None => Err(Error::param(format!("unknown wavelet '{name}', expected haar or db1..db10"))),
        }
    }

    pub fn low_pass(&self) -> &[f64] {
        &self.low_pass
    }

    pub fn high_pass(&self) -> &[f64] {
        &self.high_pass
    }

    pub fn vanishing_moments(&self) -> usize {
        self.vanishing_moments
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.low_pass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.low_pass.is_empty()
    }
}

// Minimum-phase Daubechies scaling filters, normalized to sum sqrt(2).
// Computed by spectral factorization at 60-digit precision.
const DB1: [f64; 2] = [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];

const DB2: [f64; 4] = [
    0.48296291314453416,
    0.8365163037378079,
    0.2241438680420134,
    -0.12940952255126037,
];

const DB3: [f64; 6] = [
    0.33267055295008263,
    0.8068915093110925,
    0.45987750211849154,
    -0.13501102001025458,
    -0.08544127388202666,
    0.03522629188570953,
];
const DB4: [f64; 8] = [
    0.2303778133088965,
    0.7148465705529157,
    0.6308807679298589,
    -0.027983769416859854,
    -0.18703481171909309,
    0.030841381835560764,
    0.0328830116668852,
    -0.010597401785069032,
];

const DB5: [f64; 10] = [
    0.16010239797419293,
    0.6038292697971896,
    0.7243085284377729,
    0.13842814590132074,
    -0.24229488706638203,
    -0.032244869584638375,
    0.07757149384004572,
    -0.006241490212798274,
    -0.012580751999081999,
    0.0033357252854737712,
];

const DB6: [f64; 12] = [
    0.11154074335010947,
    0.49462389039845306,
    0.7511339080210954,
    0.31525035170919763,
    -0.22626469396543983,
    -0.12976686756726194,
    0.09750160558732304,
    0.027522865530305727,
    -0.03158203931748603,
    0.0005538422011614961,
    0.004777257510945511,
    -0.0010773010853084796,
];

const DB7: [f64; 14] = [
    0.07785205408500918,
    0.3965393194819173,
    0.7291320908462351,
    0.4697822874051931,
    -0.14390600392856498,
    -0.22403618499387498,
    0.07130921926683026,
    0.08061260915108308,
    -0.03802993693501441,
    -0.01657454163066688,
    0.01255099855609984,
    0.0004295779729213665,
    -0.0018016407040474908,
    0.00035371379997452024,
];

const DB8: [f64; 16] = [
    0.05441584224310401,
    0.31287159091429995,
    0.6756307362972898,
    0.5853546836542067,
    -0.015829105256349306,
    -0.2840155429615469,
    0.0004724845739132828,
    0.12874742662047847,
    -0.017369301001807547,
    -0.044088253930794755,
    0.013981027917398282,
    0.008746094047405777,
    -0.004870352993451574,
    -0.00039174037337694705,
    0.0006754494064505693,
    -0.00011747678412476953,
];

const DB9: [f64; 18] = [
    0.038077947363878345,
    0.24383467461259034,
    0.6048231236901112,
    0.6572880780513005,
    0.13319738582500756,
    -0.2932737832791749,
    -0.09684078322297646,
    0.14854074933810638,
    0.03072568147933338,
    -0.06763282906132997,
    0.00025094711483145197,
    0.022361662123679096,
    -0.004723204757751397,
    -0.00428150368246343,
    0.0018476468830562265,
    0.00023038576352319597,
    -0.0002519631889427101,
    3.93473203162716e-05,
];

const DB10: [f64; 20] = [
    0.026670057900555554,
    0.1881768000776915,
    0.5272011889317256,
    0.6884590394536035,
    0.2811723436605775,
    -0.24984642432731538,
    -0.19594627437737705,
    0.12736934033579325,
    0.09305736460357235,
    -0.07139414716639708,
    -0.029457536821875813,
    0.033212674059341,
    0.0036065535669561697,
    -0.010733175483330575,
    0.001395351747052901,
    0.001992405295185056,
    -0.0006858566949597116,
    -0.00011646685512928545,
    9.358867032006959e-05,
    -1.3264202894521244e-05,
];

/// Orthonormal Daubechies filter with the given number of vanishing moments
/// (`2 * vanishing_moments` taps). Order 1 is the Haar filter.
pub fn daubechies_filter(vanishing_moments: usize) -> Result<FilterPair> {
    let taps: &[f64] = match vanishing_moments {
        1 => &DB1,
        2 => &DB2,
        3 => &DB3,
        4 => &DB4,
        5 => &DB5,
        6 => &DB6,
        7 => &DB7,
        8 => &DB8,
        9 => &DB9,
        10 => &DB10,
        other => {
            return Err(Error::param(format!(
                "unsupported Daubechies order {other}; supported orders are 1..=10"
            )))
        }
    };
    let name = if vanishing_moments == 1 { "haar".to_string() } else { format!("db{vanishing_moments}") };
    FilterPair::from_low_pass(taps.to_vec(), vanishing_moments, name)
}

/// Smooth coefficients plus one detail vector per level, coarse to fine.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletDecomposition {
    smooth: Vec<f64>,
    /// `details[i]` holds level `coarsest_level + i`.
    details: Vec<Vec<f64>>,
    signal_length: usize,
    filter: FilterPair,
    coarsest_level: u32,
}

impl WaveletDecomposition {
    /// Assembles a decomposition from parts, checking that level lengths are consistent.
    pub fn from_parts(
        smooth: Vec<f64>,
        details: Vec<Vec<f64>>,
        filter: FilterPair,
        coarsest_level: u32,
    ) -> Result<Self> {
        let signal_length = smooth.len() << details.len();
        if details.is_empty() {
            return Err(Error::Structure("decomposition has no detail levels".into()));
        }
        if smooth.len() != 1usize << coarsest_level {
            return Err(Error::Structure(format!(
                "smooth vector has {} coefficients, expected 2^{coarsest_level}",
                smooth.len()
            )));
        }
        for (i, d) in details.iter().enumerate() {
            let expected = 1usize << (coarsest_level as usize + i);
            if d.len() != expected {
                return Err(Error::Structure(format!(
                    "detail level {} has {} coefficients, expected {expected}",
                    coarsest_level as usize + i,
                    d.len()
                )));
            }
        }
        Ok(Self { smooth, details, signal_length, filter, coarsest_level })
    }

    pub fn smooth(&self) -> &[f64] {
        &self.smooth
    }

    pub fn signal_length(&self) -> usize {
        self.signal_length
    }

    pub fn filter(&self) -> &FilterPair {
        &self.filter
    }

    /// `J0`, the scale index of the smooth vector and the coarsest detail level.
    pub fn coarsest_level(&self) -> u32 {
        self.coarsest_level
    }

    /// `J - 1`, the scale index of the finest detail level.
    pub fn finest_level(&self) -> u32 {
        self.coarsest_level + self.details.len() as u32 - 1
    }

    pub fn num_levels(&self) -> usize {
        self.details.len()
    }

    /// Detail coefficients at scale index `level`.
    pub fn detail(&self, level: u32) -> Option<&[f64]> {
        let idx = level.checked_sub(self.coarsest_level)? as usize;
        self.details.get(idx).map(Vec::as_slice)
    }

    pub fn detail_mut(&mut self, level: u32) -> Option<&mut [f64]> {
        let idx = level.checked_sub(self.coarsest_level)? as usize;
        self.details.get_mut(idx).map(Vec::as_mut_slice)
    }

    /// `(level, coefficients)` pairs from coarse to fine.
    pub fn levels(&self) -> impl Iterator<Item = (u32, &[f64])> + '_ {
        self.details
            .iter()
            .enumerate()
            .map(move |(i, d)| (self.coarsest_level + i as u32, d.as_slice()))
    }

    /// Coefficients in the flat `(c_J0, d_J0, ..., d_{J-1})` order.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.signal_length);
        out.extend_from_slice(&self.smooth);
        for d in &self.details {
            out.extend_from_slice(d);
        }
        out
    }
}

/// Largest `J` with `2^J == len`, if `len` is a power of two.
pub fn dyadic_exponent(len: usize) -> Option<u32> {
    (len.is_power_of_two()).then(|| len.trailing_zeros())
}

/// Forward periodic DWT with `num_levels` pyramid stages.
pub fn dwt(signal: &[f64], filter: &FilterPair, num_levels: usize) -> Result<WaveletDecomposition> {
    let exponent = dyadic_exponent(signal.len())
        .filter(|&j| j >= 1)
        .ok_or_else(|| Error::input(format!("signal length {} is not a power of two >= 2", signal.len())))?;
    if num_levels == 0 || num_levels as u32 >= exponent {
        return Err(Error::param(format!(
            "num_levels must be in 1..={} for a signal of length {}, got {num_levels}",
            exponent.saturating_sub(1),
            signal.len()
        )));
    }

    let mut approx = signal.to_vec();
    let mut details = Vec::with_capacity(num_levels);
    for _ in 0..num_levels {
        let (next, detail) = analysis_step(&approx, filter);
        details.push(detail);
        approx = next;
    }
    details.reverse();
    WaveletDecomposition::from_parts(approx, details, filter.clone(), exponent - num_levels as u32)
}

/// Inverse of [`dwt`].
pub fn idwt(decomp: &WaveletDecomposition) -> Result<Vec<f64>> {
    let mut approx = decomp.smooth.clone();
    for d in &decomp.details {
        if d.len() != approx.len() {
            return Err(Error::Structure(format!(
                "detail length {} does not match approximation length {}",
                d.len(),
                approx.len()
            )));
        }
        approx = synthesis_step(&approx, d, &decomp.filter);
    }
    if approx.len() != decomp.signal_length {
        return Err(Error::Structure("reconstructed length does not match signal_length".into()));
    }
    Ok(approx)
}

fn analysis_step(input: &[f64], filter: &FilterPair) -> (Vec<f64>, Vec<f64>) {
    let n = input.len();
    let half = n / 2;
    let (h, g) = (filter.low_pass(), filter.high_pass());
    let mut approx = vec![0.0; half];
    let mut detail = vec![0.0; half];
    for k in 0..half {
        let (mut a, mut d) = (0.0, 0.0);
        for (m, (&hm, &gm)) in h.iter().zip(g).enumerate() {
            let x = input[(2 * k + m) % n];
            a += hm * x;
            d += gm * x;
        }
        approx[k] = a;
        detail[k] = d;
    }
    (approx, detail)
}

fn synthesis_step(approx: &[f64], detail: &[f64], filter: &FilterPair) -> Vec<f64> {
    let half = approx.len();
    let n = 2 * half;
    let (h, g) = (filter.low_pass(), filter.high_pass());
    let mut out = vec![0.0; n];
    for k in 0..half {
        for (m, (&hm, &gm)) in h.iter().zip(g).enumerate() {
            out[(2 * k + m) % n] += hm * approx[k] + gm * detail[k];
        }
    }
    out
}
