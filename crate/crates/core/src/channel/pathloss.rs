//! Large-scale pathloss models.
//!
//! [`UmaPathloss`] follows 3GPP TR 38.901 (Table 7.4.1-1 and the UMa LOS
//! probability of Table 7.4.2-1), without shadow fading.

use rand::{Rng, RngCore};

use crate::error::{Error, Result};

const SPEED_OF_LIGHT: f64 = 3.0e8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    pub d2d_m: f64,
    pub h_bs_m: f64,
    pub h_ut_m: f64,
    pub carrier_hz: f64,
}

impl LinkGeometry {
    pub fn d3d_m(&self) -> f64 {
        (self.d2d_m * self.d2d_m + (self.h_bs_m - self.h_ut_m).powi(2)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathlossSample {
    pub db: f64,
    pub los: bool,
}

/// Draws a pathloss (and link state) for one link.
pub trait PathlossModel: Send + Sync {
    fn sample(&self, geometry: &LinkGeometry, rng: &mut dyn RngCore) -> Result<PathlossSample>;
}

/// Which LOS state to use: drawn from the model, or forced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LosPolicy {
    #[default]
    Random,
    ForceLos,
    ForceNlos,
}

/// TR 38.901 urban macro.
#[derive(Debug, Clone, Copy, Default)]
pub struct UmaPathloss {
    pub los: LosPolicy,
}

impl UmaPathloss {
    pub fn forced_los() -> Self {
        UmaPathloss {
            los: LosPolicy::ForceLos,
        }
    }
}

impl PathlossModel for UmaPathloss {
    fn sample(&self, g: &LinkGeometry, rng: &mut dyn RngCore) -> Result<PathlossSample> {
        check_uma_range(g)?;
        let los = match self.los {
            LosPolicy::ForceLos => true,
            LosPolicy::ForceNlos => false,
            LosPolicy::Random => rng.random::<f64>() < uma_los_probability(g.d2d_m, g.h_ut_m),
        };
        let h_e = uma_environment_height(g.d2d_m, g.h_ut_m, rng);
        let db = if los { uma_los_db(g, h_e) } else { uma_nlos_db(g, h_e) };
        Ok(PathlossSample { db, los })
    }
}

/// Convenience wrapper: one UMa draw with the given geometry.
pub fn pathloss_uma(
    d2d_m: f64,
    h_bs_m: f64,
    h_ut_m: f64,
    carrier_hz: f64,
    rng: &mut dyn RngCore,
) -> Result<PathlossSample> {
    UmaPathloss::default().sample(
        &LinkGeometry {
            d2d_m,
            h_bs_m,
            h_ut_m,
            carrier_hz,
        },
        rng,
    )
}

fn check_uma_range(g: &LinkGeometry) -> Result<()> {
    if !(10.0..=5000.0).contains(&g.d2d_m) {
        return Err(Error::OutOfModelRange(format!(
            "UMa requires 10 m <= d2D <= 5 km, got {} m",
            g.d2d_m
        )));
    }
    if !(1.5..=22.5).contains(&g.h_ut_m) {
        return Err(Error::OutOfModelRange(format!(
            "UMa requires 1.5 m <= hUT <= 22.5 m, got {} m",
            g.h_ut_m
        )));
    }
    if !(0.5e9..=100e9).contains(&g.carrier_hz) {
        return Err(Error::OutOfModelRange(format!(
            "UMa requires 0.5-100 GHz, got {} Hz",
            g.carrier_hz
        )));
    }
    Ok(())
}

pub fn uma_los_probability(d2d_m: f64, h_ut_m: f64) -> f64 {
    if d2d_m <= 18.0 {
        return 1.0;
    }
    let c_prime = if h_ut_m <= 13.0 {
        0.0
    } else {
        ((h_ut_m - 13.0) / 10.0).powf(1.5)
    };
    let base = 18.0 / d2d_m + (-d2d_m / 63.0).exp() * (1.0 - 18.0 / d2d_m);
    let boost = 1.0 + c_prime * 1.25 * (d2d_m / 100.0).powi(3) * (-d2d_m / 150.0).exp();
    (base * boost).min(1.0)
}

/// Effective environment height hE: 1 m with probability 1/(1+C), otherwise
/// uniform on {12, 15, ..., hUT - 1.5}.
fn uma_environment_height(d2d_m: f64, h_ut_m: f64, rng: &mut dyn RngCore) -> f64 {
    if h_ut_m < 13.0 {
        return 1.0;
    }
    let g = if d2d_m <= 18.0 {
        0.0
    } else {
        1.25 * (d2d_m / 100.0).powi(3) * (-d2d_m / 150.0).exp()
    };
    let c = ((h_ut_m - 13.0) / 10.0).powf(1.5) * g;
    if rng.random::<f64>() < 1.0 / (1.0 + c) {
        return 1.0;
    }
    let top = h_ut_m - 1.5;
    let n = ((top - 12.0) / 3.0).floor() as usize + 1;
    12.0 + 3.0 * rng.random_range(0..n) as f64
}

pub fn uma_breakpoint_m(h_bs_m: f64, h_ut_m: f64, carrier_hz: f64, h_e: f64) -> f64 {
    4.0 * (h_bs_m - h_e) * (h_ut_m - h_e) * carrier_hz / SPEED_OF_LIGHT
}

pub fn uma_los_db(g: &LinkGeometry, h_e: f64) -> f64 {
    let fc_ghz = g.carrier_hz / 1e9;
    let d3d = g.d3d_m();
    let bp = uma_breakpoint_m(g.h_bs_m, g.h_ut_m, g.carrier_hz, h_e);
    if g.d2d_m <= bp {
        28.0 + 22.0 * d3d.log10() + 20.0 * fc_ghz.log10()
    } else {
        28.0 + 40.0 * d3d.log10() + 20.0 * fc_ghz.log10() - 9.0 * (bp * bp + (g.h_bs_m - g.h_ut_m).powi(2)).log10()
    }
}

pub fn uma_nlos_db(g: &LinkGeometry, h_e: f64) -> f64 {
    let fc_ghz = g.carrier_hz / 1e9;
    let nlos = 13.54 + 39.08 * g.d3d_m().log10() + 20.0 * fc_ghz.log10() - 0.6 * (g.h_ut_m - 1.5);
    nlos.max(uma_los_db(g, h_e))
}

/// `ref_db + 10 n log10(d3D)`; always reports LOS. Used where a
/// deterministic model is more convenient than UMa.
#[derive(Debug, Clone, Copy)]
pub struct FixedExponentPathloss {
    pub exponent: f64,
    pub ref_db: f64,
}

impl PathlossModel for FixedExponentPathloss {
    fn sample(&self, g: &LinkGeometry, _rng: &mut dyn RngCore) -> Result<PathlossSample> {
        if !(g.d2d_m >= 1.0) {
            return Err(Error::OutOfModelRange(format!(
                "distance must be at least 1 m, got {}",
                g.d2d_m
            )));
        }
        Ok(PathlossSample {
            db: self.ref_db + 10.0 * self.exponent * g.d3d_m().log10(),
            los: true,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn geom(d: f64) -> LinkGeometry {
        LinkGeometry {
            d2d_m: d,
            h_bs_m: 25.0,
            h_ut_m: 1.5,
            carrier_hz: 30e9,
        }
    }

    #[test]
    fn los_probability_limits() {
        assert_eq!(uma_los_probability(10.0, 1.5), 1.0);
        let p = uma_los_probability(100.0, 1.5);
        // 0.18 + exp(-100/63) * 0.82
        assert!((p - (0.18 + (-100.0f64 / 63.0).exp() * 0.82)).abs() < 1e-12);
        assert!(uma_los_probability(1000.0, 1.5) < 0.05);
    }

    #[test]
    fn range_checks() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            pathloss_uma(5.0, 25.0, 1.5, 30e9, &mut rng),
            Err(Error::OutOfModelRange(_))
        ));
        assert!(pathloss_uma(6000.0, 25.0, 1.5, 30e9, &mut rng).is_err());
        assert!(pathloss_uma(100.0, 25.0, 30.0, 30e9, &mut rng).is_err());
    }

    #[test]
    fn nlos_never_below_los() {
        for d in [20.0, 50.0, 200.0, 1000.0, 4000.0] {
            assert!(uma_nlos_db(&geom(d), 1.0) >= uma_los_db(&geom(d), 1.0));
        }
    }

    #[test]
    fn tall_terminal_environment_height() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let h = uma_environment_height(200.0, 22.5, &mut rng);
            assert!(h == 1.0 || (12.0..=21.0).contains(&h));
            assert!(h == 1.0 || (h - 12.0).rem_euclid(3.0) == 0.0);
        }
    }
}
