//! The five reference sources, their `g(k)` and measurement setup.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};
use crate::qrm::Mode;
use crate::scalar::Real;

/// Closed-form `g(k)` used by the scenarios.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SourceProfile {
    /// `g = ik`
    #[serde(rename = "ik")]
    ImaginaryK,
    /// `g = 1`
    #[serde(rename = "1")]
    One,
    /// `g = k`
    #[serde(rename = "k")]
    K,
    /// `g = k²`
    #[serde(rename = "k^2")]
    KSquared,
    /// `g = sin k + 2`
    #[serde(rename = "sin(k)+2")]
    SinPlusTwo,
}

impl SourceProfile {
    pub const ALL: [SourceProfile; 5] =
        [Self::ImaginaryK, Self::One, Self::K, Self::KSquared, Self::SinPlusTwo];

    pub fn id(self) -> &'static str {
        match self {
            Self::ImaginaryK => "ik",
            Self::One => "1",
            Self::K => "k",
            Self::KSquared => "k^2",
            Self::SinPlusTwo => "sin(k)+2",
        }
    }

    pub fn eval<T: Real>(self, k: T) -> Complex<T> {
        let re = |x: T| Complex::new(x, T::zero());
        match self {
            Self::ImaginaryK => Complex::new(T::zero(), k),
            Self::One => re(T::one()),
            Self::K => re(k),
            Self::KSquared => re(k * k),
            Self::SinPlusTwo => re(k.sin() + T::lit(2.0)),
        }
    }
}

impl fmt::Display for SourceProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for SourceProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        Self::ALL
            .into_iter()
            .find(|p| p.id() == key)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown source profile {s:?}")))
    }
}

/// MATLAB's `peaks` surface.
pub fn peaks<T: Real>(x: T, y: T) -> T {
    let one = T::one();
    let a = T::lit(3.0) * (one - x).powi(2) * (-(x * x) - (y + one).powi(2)).exp();
    let b = T::lit(10.0) * (x / T::lit(5.0) - x.powi(3) - y.powi(5)) * (-(x * x) - y * y).exp();
    let c = (-(x + one).powi(2) - y * y).exp() / T::lit(3.0);
    a - b - c
}

/// Variable refractive index `n² = 1 + 0.1 sin(3|x|²) / (3|x|² + 1)`.
pub fn refractive_index<T: Real>(x: T, y: T) -> T {
    let r2 = T::lit(3.0) * (x * x + y * y);
    T::one() + T::lit(0.1) * r2.sin() / (r2 + T::one())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: u8,
}

impl Scenario {
    pub fn new(id: u8) -> Result<Self> {
        if (1..=5).contains(&id) {
            Ok(Self { id })
        } else {
            Err(Error::InvalidArgument(format!("test id must be 1..5, got {id}")))
        }
    }

    pub fn all() -> impl Iterator<Item = Scenario> {
        (1..=5).map(|id| Scenario { id })
    }

    pub fn name(self) -> &'static str {
        match self.id {
            1 => "two inclusions",
            2 => "four discs",
            3 => "void in a square",
            4 => "ring",
            _ => "peaks surface",
        }
    }

    /// Tests 1 and 2 use Cauchy data on the top edge; the rest use Dirichlet data only.
    pub fn mode(self) -> Mode {
        if self.id <= 2 {
            Mode::Cauchy
        } else {
            Mode::Dirichlet
        }
    }

    pub fn profile(self) -> SourceProfile {
        match self.id {
            1 => SourceProfile::ImaginaryK,
            2 => SourceProfile::One,
            3 => SourceProfile::K,
            4 => SourceProfile::KSquared,
            _ => SourceProfile::SinPlusTwo,
        }
    }

    pub fn f_true<T: Real>(self, x: T, y: T) -> T {
        let l = T::lit;
        let r2 = x * x + y * y;
        match self.id {
            1 => {
                // The disc takes precedence where the two shapes overlap.
                if (x + l(0.75)).powi(2) + y * y < l(0.55 * 0.55) {
                    l(-2.0)
                } else if (l(0.6) * (x - l(0.75)).abs()).max(y.abs()) < l(1.1) {
                    l(2.5)
                } else {
                    T::zero()
                }
            }
            2 => {
                let disc = |cx: f64, cy: f64| (x - l(cx)).powi(2) + (y - l(cy)).powi(2) < l(0.55 * 0.55);
                if disc(0.8, 0.8) || disc(-0.8, 0.8) {
                    T::one()
                } else if disc(0.8, -0.8) || disc(-0.8, -0.8) {
                    -T::one()
                } else {
                    T::zero()
                }
            }
            3 => {
                if r2 < l(0.48 * 0.48) {
                    -T::one()
                } else if x.abs().max(y.abs()) < l(1.2) {
                    T::one()
                } else {
                    T::zero()
                }
            }
            4 => {
                if r2 <= l(0.52 * 0.52) {
                    l(-2.0)
                } else if r2 < l(1.2 * 1.2) {
                    T::one()
                } else {
                    T::zero()
                }
            }
            _ => peaks(x, y),
        }
    }

    pub fn source_field<T: Real>(self, grid: GridSpec<T>) -> ScalarField<T> {
        ScalarField::from_fn(grid, |x, y| self.f_true(x, y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(id: u8) -> Scenario {
        Scenario::new(id).unwrap()
    }

    #[test]
    fn probe_values() {
        assert_eq!(t(1).f_true(0.75, 0.0), 2.5);
        assert_eq!(t(1).f_true(2.5, 0.0), 2.5);
        assert_eq!(t(1).f_true(-0.75, 0.0), -2.0);
        assert_eq!(t(1).f_true(0.75, 1.2), 0.0);
        assert_eq!(t(2).f_true(0.8, 0.8), 1.0);
        assert_eq!(t(2).f_true(-0.8, 0.8), 1.0);
        assert_eq!(t(2).f_true(0.8, -0.8), -1.0);
        assert_eq!(t(2).f_true(-0.8, -0.8), -1.0);
        assert_eq!(t(2).f_true(0.0, 0.0), 0.0);
        assert_eq!(t(3).f_true(0.0, 0.0), -1.0);
        assert_eq!(t(3).f_true(0.47, 0.0), -1.0);
        assert_eq!(t(3).f_true(0.48, 0.0), 1.0);
        assert_eq!(t(3).f_true(1.1, 1.1), 1.0);
        assert_eq!(t(3).f_true(1.2, 0.0), 0.0);
        assert_eq!(t(4).f_true(0.52, 0.0), -2.0);
        assert_eq!(t(4).f_true(0.8, 0.0), 1.0);
        assert_eq!(t(4).f_true(1.0, 1.0), 0.0);
    }

    #[test]
    fn peaks_matches_reference_values() {
        // Reference values of MATLAB's peaks.
        assert!((peaks(0.0f64, 0.0) - 0.981_011_843_123_846).abs() < 1e-12);
        assert!((peaks(1.0f64, -1.0) - (-10.0 * (1.0 / 5.0 - 1.0 + 1.0) * (-2.0f64).exp()
            - (-5.0f64).exp() / 3.0))
            .abs()
            < 1e-14);
        let grid = GridSpec::new(2.0, 400).unwrap();
        let f = t(5).source_field(grid);
        let max = f.values.iter().cloned().fold(f64::MIN, f64::max);
        let min = f.values.iter().cloned().fold(f64::MAX, f64::min);
        assert!((max - 8.10).abs() < 0.01, "{max}");
        assert!((min + 6.55).abs() < 0.01, "{min}");
    }

    #[test]
    fn test_two_is_antisymmetric_in_y() {
        let s = t(2);
        for &(x, y) in &[(0.3, 0.7), (-0.9, 0.85), (0.8, 0.3), (1.9, 1.9)] {
            assert_eq!(s.f_true(x, -y), -s.f_true(x, y));
        }
    }

    #[test]
    fn modes_and_profiles() {
        assert_eq!(t(1).mode(), Mode::Cauchy);
        assert_eq!(t(2).mode(), Mode::Cauchy);
        for id in 3..=5 {
            assert_eq!(t(id).mode(), Mode::Dirichlet);
        }
        assert_eq!(t(1).profile().eval(2.0f64), Complex::new(0.0, 2.0));
        assert_eq!(t(4).profile().eval(3.0f64), Complex::new(9.0, 0.0));
        assert!(Scenario::new(0).is_err() && Scenario::new(6).is_err());
    }

    #[test]
    fn profiles_roundtrip_and_never_vanish() {
        for p in SourceProfile::ALL {
            assert_eq!(p.id().parse::<SourceProfile>().unwrap(), p);
            let json = serde_json::to_string(&p).unwrap();
            assert_eq!(json, format!("\"{}\"", p.id()));
            for i in 0..=300 {
                let k = 1.5 + 3.0 * i as f64 / 300.0;
                assert!(p.eval(k).norm() >= 0.5);
            }
        }
        assert!("k^3".parse::<SourceProfile>().is_err());
    }

    #[test]
    fn refractive_index_is_bounded() {
        assert_eq!(refractive_index(0.0f64, 0.0), 1.0);
        let grid = GridSpec::new(2.0, 50).unwrap();
        let n2 = ScalarField::from_fn(grid, refractive_index);
        assert!(n2.values.iter().all(|v| (0.9..=1.1).contains(v)));
    }
}
