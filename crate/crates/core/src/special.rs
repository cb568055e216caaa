//! Scalar special functions and the truncated normal distribution.
//!
//! `erf`/`erfc` follow the FreeBSD msun rational approximations (`s_erf.c`),
//! which are accurate to within one ulp over the whole real line. Everything
//! else in the crate bottoms out here, so nothing downstream calls a libm.
//!
//! Normal masses over an interval are always formed from whichever of
//! `erf`/`erfc` keeps both terms away from 1, so two endpoints in the same
//! tail never cancel catastrophically.

// coefficients are kept digit-for-digit as published
#![allow(clippy::excessive_precision)]

/* ====================================================
 * Copyright (C) 1993 by Sun Microsystems, Inc. All rights reserved.
 *
 * Developed at SunPro, a Sun Microsystems, Inc. business.
 * Permission to use, copy, modify, and distribute this
 * software is freely granted, provided that this notice
 * is preserved.
 * ====================================================
 */

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 1/sqrt(2*pi)
pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

const ERX: f64 = 8.45062911510467529297e-01;
// erf on [0, 0.84375]
const EFX8: f64 = 1.02703333676410069053e+00;
const PP: [f64; 5] = [
    1.28379167095512558561e-01,
    -3.25042107247001499370e-01,
    -2.84817495755985104766e-02,
    -5.77027029648944159157e-03,
    -2.37630166566501626084e-05,
];
const QQ: [f64; 5] = [
    3.97917223959155352819e-01,
    6.50222499887672944485e-02,
    5.08130628187576562776e-03,
    1.32494738004321644526e-04,
    -3.96022827877536812320e-06,
];
// erf on [0.84375, 1.25]
const PA: [f64; 7] = [
    -2.36211856075265944077e-03,
    4.14856118683748331666e-01,
    -3.72207876035701323847e-01,
    3.18346619901161753674e-01,
    -1.10894694282396677476e-01,
    3.54783043256182359371e-02,
    -2.16637559486879084300e-03,
];
const QA: [f64; 6] = [
    1.06420880400844228286e-01,
    5.40397917702171048937e-01,
    7.18286544141962662868e-02,
    1.26171219808761642112e-01,
    1.36370839120290507362e-02,
    1.19844998467991074170e-02,
];
// erfc on [1.25, 1/0.35]
const RA: [f64; 8] = [
    -9.86494403484714822705e-03,
    -6.93858572707181764372e-01,
    -1.05586262253232909814e+01,
    -6.23753324503260060396e+01,
    -1.62396669462573470355e+02,
    -1.84605092906711035994e+02,
    -8.12874355063065934246e+01,
    -9.81432934416914548592e+00,
];
const SA: [f64; 8] = [
    1.96512716674392571292e+01,
    1.37657754143519042600e+02,
    4.34565877475229228821e+02,
    6.45387271733267880336e+02,
    4.29008140027567833386e+02,
    1.08635005541779435134e+02,
    6.57024977031928170135e+00,
    -6.04244152148580987438e-02,
];
// erfc on [1/0.35, 28]
const RB: [f64; 7] = [
    -9.86494292470009928597e-03,
    -7.99283237680523006574e-01,
    -1.77579549177547519889e+01,
    -1.60636384855821916062e+02,
    -6.37566443368389627722e+02,
    -1.02509513161107724954e+03,
    -4.83519191608651397019e+02,
];
const SB: [f64; 7] = [
    3.03380607434824582924e+01,
    3.25792512996573918826e+02,
    1.53672958608443695994e+03,
    3.19985821950859553908e+03,
    2.55305040643316442583e+03,
    4.74528541206955367215e+02,
    -2.24409524465858183362e+01,
];

/// Horner evaluation of `c[0] + c[1] x + ... + c[n] x^n`.
#[inline]
fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
}

/// `1 + x * poly(c, x)`, the shape of every denominator below.
#[inline]
fn poly1(c: &[f64], x: f64) -> f64 {
    1.0 + x * poly(c, x)
}

#[inline]
fn high_word(x: f64) -> u32 {
    (x.to_bits() >> 32) as u32
}

/// erfc(|x|) for 0.84375 <= |x| < 28, `ix` the masked high word of x.
fn erfc_tail(ix: u32, x: f64) -> f64 {
    let ax = x.abs();
    if ix < 0x3ff4_0000 {
        // |x| < 1.25
        let s = ax - 1.0;
        return 1.0 - ERX - poly(&PA, s) / poly1(&QA, s);
    }
    let s = 1.0 / (ax * ax);
    let (r, big_s) = if ix < 0x4006_db6d {
        (poly(&RA, s), poly1(&SA, s))
    } else {
        (poly(&RB, s), poly1(&SB, s))
    };
    // Split ax so that ax*ax is exact in the leading part.
    let z = f64::from_bits(ax.to_bits() & 0xffff_ffff_0000_0000);
    (-z * z - 0.5625).exp() * ((z - ax) * (z + ax) + r / big_s).exp() / ax
}

/// Error function `2/sqrt(pi) * int_0^z exp(-t^2) dt`.
pub fn erf(x: f64) -> f64 {
    let hx = high_word(x);
    let negative = hx >> 31 != 0;
    let ix = hx & 0x7fff_ffff;
    if ix >= 0x7ff0_0000 {
        if x.is_nan() {
            return x;
        }
        return if negative { -1.0 } else { 1.0 };
    }
    if ix < 0x3feb_0000 {
        // |x| < 0.84375
        if ix < 0x3e30_0000 {
            return 0.125 * (8.0 * x + EFX8 * x);
        }
        let z = x * x;
        return x + x * (poly(&PP, z) / poly1(&QQ, z));
    }
    let y = if ix < 0x4018_0000 {
        1.0 - erfc_tail(ix, x)
    } else {
        1.0 - f64::MIN_POSITIVE
    };
    if negative {
        -y
    } else {
        y
    }
}

/// Complementary error function `1 - erf(x)`, computed directly.
pub fn erfc(x: f64) -> f64 {
    let hx = high_word(x);
    let negative = hx >> 31 != 0;
    let ix = hx & 0x7fff_ffff;
    if ix >= 0x7ff0_0000 {
        if x.is_nan() {
            return x;
        }
        return if negative { 2.0 } else { 0.0 };
    }
    if ix < 0x3feb_0000 {
        if ix < 0x3c70_0000 {
            return 1.0 - x;
        }
        let z = x * x;
        let y = poly(&PP, z) / poly1(&QQ, z);
        if negative || ix < 0x3fd0_0000 {
            return 1.0 - (x + x * y);
        }
        return 0.5 - (x - 0.5 + x * y);
    }
    if ix < 0x403c_0000 {
        let t = erfc_tail(ix, x);
        return if negative { 2.0 - t } else { t };
    }
    if negative {
        2.0 - f64::MIN_POSITIVE
    } else {
        0.0
    }
}

/// Standard normal density.
#[inline]
pub fn std_normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal distribution function, `erfc(-x/sqrt 2) / 2`.
#[inline]
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal mass of `[lo, hi]` with `lo <= hi`.
fn std_normal_mass(lo: f64, hi: f64) -> f64 {
    let (l, h) = (lo * FRAC_1_SQRT_2, hi * FRAC_1_SQRT_2);
    // erfc differencing only in the tails; near the origin erf is the accurate side
    let m = if l >= 0.5 {
        0.5 * (erfc(l) - erfc(h))
    } else if h <= -0.5 {
        0.5 * (erfc(-h) - erfc(-l))
    } else {
        0.5 * (erf(h) - erf(l))
    };
    m.max(0.0)
}

/// A closed interval `[a, b]` with finite `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    a: f64,
    b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if a.is_finite() && b.is_finite() && a < b {
            Ok(Self { a, b })
        } else {
            Err(Error::InvalidInterval { a, b })
        }
    }

    #[inline]
    pub fn a(&self) -> f64 {
        self.a
    }

    #[inline]
    pub fn b(&self) -> f64 {
        self.b
    }

    #[inline]
    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        self.a <= x && x <= self.b
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.a + self.b)
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma.is_finite() && sigma > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveSigma(sigma))
    }
}

/// Mass that `N(s, sigma^2)` places on `d`; the reciprocal of the normalizer `C(s, sigma)`.
pub fn interval_mass(s: f64, sigma: f64, d: &Interval) -> Result<f64> {
    check_sigma(sigma)?;
    Ok(std_normal_mass((d.a - s) / sigma, (d.b - s) / sigma))
}

/// Natural log of [`interval_mass`].
pub fn ln_interval_mass(s: f64, sigma: f64, d: &Interval) -> Result<f64> {
    interval_mass(s, sigma, d).map(f64::ln)
}

/// Normal distribution with location `s` and scale `sigma`, conditioned on `domain`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedNormal {
    s: f64,
    sigma: f64,
    domain: Interval,
    mass: f64,
}

impl TruncatedNormal {
    pub fn new(s: f64, sigma: f64, domain: Interval) -> Result<Self> {
        check_sigma(sigma)?;
        if !domain.contains(s) {
            return Err(Error::QueryValueOutsideDomain { value: vec![s] });
        }
        let mass = interval_mass(s, sigma, &domain)?;
        Ok(Self {
            s,
            sigma,
            domain,
            mass,
        })
    }

    pub fn location(&self) -> f64 {
        self.s
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn domain(&self) -> &Interval {
        &self.domain
    }

    /// Normal mass captured by the domain.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if !self.domain.contains(x) {
            return 0.0;
        }
        std_normal_pdf((x - self.s) / self.sigma) / (self.sigma * self.mass)
    }

    /// Log density; `-inf` outside the domain.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        if !self.domain.contains(x) {
            return f64::NEG_INFINITY;
        }
        let t = (x - self.s) / self.sigma;
        -0.5 * t * t - 0.5 * (2.0 * PI).ln() - self.sigma.ln() - self.mass.ln()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.domain.a {
            return 0.0;
        }
        if x >= self.domain.b {
            return 1.0;
        }
        let lo = (self.domain.a - self.s) / self.sigma;
        let hi = (x - self.s) / self.sigma;
        (std_normal_mass(lo, hi) / self.mass).min(1.0)
    }

    /// Inverse of [`cdf`](Self::cdf) by safeguarded Newton iteration on the bracket `[a, b]`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::OutOfRangeU(u));
        }
        let (a, b) = (self.domain.a, self.domain.b);
        if u == 0.0 {
            return Ok(a);
        }
        if u == 1.0 {
            return Ok(b);
        }
        let (mut lo, mut hi) = (a, b);
        let mut x = a + u * (b - a);
        for _ in 0..200 {
            let resid = self.cdf(x) - u;
            if resid == 0.0 {
                break;
            }
            if resid > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            if hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE) {
                break;
            }
            let density = self.pdf(x);
            let newton = x - resid / density;
            let next = if density > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            let step = (next - x).abs();
            x = next;
            if resid.abs() <= 1e-15 && step <= 1e-15 * x.abs().max(1.0) {
                break;
            }
        }
        Ok(x.clamp(a, b))
    }

    /// One draw by inverse-CDF; consumes exactly one `f64` from `rng`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        // u lies in [0, 1), so the quantile cannot fail
        self.quantile(u).unwrap_or(self.s)
    }
}
