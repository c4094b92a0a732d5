//! Seeded random board tilt: a sum of sinusoids under a smooth start ramp.

use std::f64::consts::TAU;

use rand::Rng as _;

use crate::rng::from_seed;
use crate::sim::{BaseKinematics, BaseMotion};

use super::TaskConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct BoardWave {
    amp: Vec<f64>,
    omega: Vec<f64>,
    phase: Vec<f64>,
    ramp: f64,
}

/// Quintic 0→1 blend with zero slope and curvature at both ends, and its
/// first two derivatives.
fn ramp(t: f64, len: f64) -> (f64, f64, f64) {
    if len <= 0.0 || t >= len {
        return (1.0, 0.0, 0.0);
    }
    if t <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let u = t / len;
    let s = u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
    let ds = 30.0 * u * u * (1.0 - u) * (1.0 - u) / len;
    let dds = 60.0 * u * (1.0 - u) * (1.0 - 2.0 * u) / (len * len);
    (s, ds, dds)
}

impl BoardWave {
    /// Component amplitudes are renormalized so their sum equals the
    /// configured bound, which caps |tilt| at that bound.
    pub fn new(seed: u64, cfg: &TaskConfig) -> Self {
        let mut rng = from_seed(seed);
        let n = cfg.wave_components.max(1);
        let mut amp: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..1.0)).collect();
        let omega: Vec<f64> = (0..n)
            .map(|_| TAU * rng.random_range(cfg.wave_freq_min..=cfg.wave_freq_max))
            .collect();
        let phase: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..TAU)).collect();
        let total: f64 = amp.iter().sum();
        for a in &mut amp {
            *a *= cfg.wave_amplitude / total;
        }
        Self {
            amp,
            omega,
            phase,
            ramp: cfg.wave_ramp,
        }
    }

    pub fn flat() -> Self {
        Self {
            amp: vec![],
            omega: vec![],
            phase: vec![],
            ramp: 0.0,
        }
    }

    pub fn kinematics(&self, t: f64) -> BaseKinematics {
        let (mut w, mut dw, mut ddw) = (0.0, 0.0, 0.0);
        for ((a, om), ph) in self.amp.iter().zip(&self.omega).zip(&self.phase) {
            let (s, c) = (om * t + ph).sin_cos();
            w += a * s;
            dw += a * om * c;
            ddw -= a * om * om * s;
        }
        let (r, dr, ddr) = ramp(t, self.ramp);
        BaseKinematics {
            tilt: r * w,
            rate: dr * w + r * dw,
            accel: ddr * w + 2.0 * dr * dw + r * ddw,
        }
    }

    pub fn angle(&self, t: f64) -> f64 {
        self.kinematics(t).tilt
    }
}

impl BaseMotion for BoardWave {
    fn at(&self, t: f64) -> BaseKinematics {
        self.kinematics(t)
    }
}

/// Board tilt (rad) at time `t` for wave `seed`.
pub fn board_wave(seed: u64, t: f64, cfg: &TaskConfig) -> f64 {
    BoardWave::new(seed, cfg).angle(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounded_and_deterministic() {
        let cfg = TaskConfig::default();
        for seed in 0..20 {
            let w = BoardWave::new(seed, &cfg);
            let again = BoardWave::new(seed, &cfg);
            let peak = (0..60_000)
                .map(|k| w.angle(k as f64 * 1e-3).abs())
                .fold(0.0, f64::max);
            assert!(peak <= 0.1745 + 1e-12, "seed {seed}: {peak}");
            assert!(peak > 0.05);
            assert_eq!(w.angle(3.3), again.angle(3.3));
        }
        assert_ne!(board_wave(1, 5.0, &cfg), board_wave(2, 5.0, &cfg));
    }

    #[test]
    fn zero_amplitude_is_flat() {
        let cfg = TaskConfig {
            wave_amplitude: 0.0,
            ..Default::default()
        };
        let w = BoardWave::new(3, &cfg);
        assert!((0..1000).all(|k| w.kinematics(k as f64 * 0.01) == BaseKinematics::default()));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let w = BoardWave::new(5, &TaskConfig::default());
        let h = 1e-5;
        for &t in &[0.3, 0.99, 1.7, 12.0] {
            let k = w.kinematics(t);
            let rate = (w.angle(t + h) - w.angle(t - h)) / (2.0 * h);
            let accel = (w.kinematics(t + h).rate - w.kinematics(t - h).rate) / (2.0 * h);
            assert!((k.rate - rate).abs() < 1e-7, "t={t}");
            assert!((k.accel - accel).abs() < 1e-5, "t={t}");
        }
        assert_eq!(w.kinematics(0.0), BaseKinematics::default());
    }
}
