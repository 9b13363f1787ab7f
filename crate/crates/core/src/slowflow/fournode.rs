//! Closed-form constants for the four-node network.
//!
//! Values are quoted in plain sums over the participating nodes (for example
//! `ζ = ζ₁ + ζ₃ + ζ₄` when Q = 2), not in the weighted convention used by
//! [`super::SlowFlowModel`]. `zeta_factor` converts between the two:
//! `ζ_ref = zeta_factor · ζ_weighted`, and the same factor scales δ.
//!
//! These are hard-coded rather than derived so they can serve as an
//! independent check on the generic construction.

use std::f64::consts::SQRT_2;

use serde::Serialize;

use crate::network::Regime;

use super::SlowFlowModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FourNodeReference {
    pub q: usize,
    pub regime: Regime,
    pub zeta_factor: f64,
    /// Amplitude law `A' = (lin_const − lin_slope·ζ_ref)A + cubic·A³ − quintic·A⁵`.
    pub lin_const: f64,
    pub lin_slope: f64,
    pub cubic: f64,
    pub quintic: f64,
    pub zeta_hb: f64,
    pub zeta_sn: f64,
    pub omega: f64,
    pub a_sn: f64,
    /// Dominant mode shape, small regime only.
    pub mode_shape: Option<[f64; 4]>,
}

/// Reference constants for the nonlinear node at `q ∈ {1, 2, 3, 4}`.
///
/// # Panics
///
/// If `q` is outside `1..=4`.
pub fn fournode_reference(q: usize, regime: Regime) -> FourNodeReference {
    let s3 = 3f64.sqrt();
    let s5 = 5f64.sqrt();
    let s6 = 6f64.sqrt();
    // nodes 1 and 4 are interchangeable
    let key = if q == 4 { 1 } else { q };
    let (factor, lc, ls, cubic, quintic, hb, sn, omega, a_sn, shape) = match (key, regime) {
        (1, Regime::Small) => (
            2.0,
            0.25,
            0.25,
            5.0 / 16.0,
            5.0 / 64.0,
            1.0,
            9.0 / 4.0,
            2.0,
            SQRT_2,
            Some([1.0 / SQRT_2, 0.0, 0.0, -1.0 / SQRT_2]),
        ),
        (2, Regime::Small) => (
            12.0,
            9.0 / 24.0,
            1.0 / 24.0,
            45.0 / 64.0,
            135.0 / 512.0,
            9.0,
            81.0 / 4.0,
            s5,
            2.0 / s3,
            Some([1.0 / (2.0 * s3), -s3 / 2.0, 1.0 / (2.0 * s3), 1.0 / (2.0 * s3)]),
        ),
        (3, Regime::Small) => (
            6.0,
            4.0 / 12.0,
            1.0 / 12.0,
            5.0 / 9.0,
            5.0 / 27.0,
            4.0,
            9.0,
            SQRT_2,
            1.5f64.sqrt(),
            Some([1.0 / s6, 0.0, -(2.0f64 / 3.0).sqrt(), 1.0 / s6]),
        ),
        (1, Regime::Large) => (
            3.0,
            0.5,
            1.0 / 6.0,
            1.25,
            0.625,
            3.0,
            27.0 / 4.0,
            s3,
            1.0,
            None,
        ),
        (2, Regime::Large) => (4.0, 0.5, 1.0 / 8.0, 1.25, 0.625, 4.0, 9.0, 2.0, 1.0, None),
        (3, Regime::Large) => (2.0, 0.5, 0.25, 1.25, 0.625, 2.0, 4.5, SQRT_2, 1.0, None),
        _ => panic!("four-node reference needs Q in 1..=4, got {q}"),
    };
    let mode_shape = shape.map(|s: [f64; 4]| if q == 4 { [s[3], s[1], s[2], s[0]] } else { s });
    FourNodeReference {
        q,
        regime,
        zeta_factor: factor,
        lin_const: lc,
        lin_slope: ls,
        cubic,
        quintic,
        zeta_hb: hb,
        zeta_sn: sn,
        omega,
        a_sn,
        mode_shape,
    }
}

impl FourNodeReference {
    pub fn amplitude_rhs(&self, a: f64, zeta_ref: f64) -> f64 {
        (self.lin_const - self.lin_slope * zeta_ref) * a + self.cubic * a.powi(3)
            - self.quintic * a.powi(5)
    }

    /// Positive amplitude roots at `zeta_ref`, ascending.
    pub fn nullcline(&self, zeta_ref: f64) -> Vec<f64> {
        let lin = self.lin_const - self.lin_slope * zeta_ref;
        let disc = self.cubic * self.cubic + 4.0 * self.quintic * lin;
        if disc < 0.0 {
            return Vec::new();
        }
        let mut out: Vec<f64> = [-1.0, 1.0]
            .iter()
            .map(|s| (self.cubic + s * disc.sqrt()) / (2.0 * self.quintic))
            .filter(|a2| *a2 > 0.0)
            .map(f64::sqrt)
            .collect();
        out.dedup();
        out
    }

    pub fn to_reference(&self, zeta_weighted: f64) -> f64 {
        self.zeta_factor * zeta_weighted
    }

    pub fn from_reference(&self, zeta_ref: f64) -> f64 {
        zeta_ref / self.zeta_factor
    }

    /// Largest deviation between these constants and a generic model, after
    /// mapping the generic model into reference units.
    pub fn max_mismatch(&self, sf: &SlowFlowModel) -> f64 {
        let b = super::bifurcation_values(sf);
        [
            (self.lin_const, 0.5 * sf.p2() * sf.nu),
            (self.lin_slope, 0.5 / self.zeta_factor),
            (self.cubic, sf.cubic()),
            (self.quintic, sf.quintic()),
            (self.zeta_hb, self.to_reference(b.zeta_hb)),
            (self.zeta_sn, self.to_reference(b.zeta_sn)),
            (self.a_sn, b.a_sn),
            (self.omega, sf.omega),
        ]
        .iter()
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q3_small_nullcline() {
        let r = fournode_reference(3, Regime::Small);
        for zeta in [0.0, 2.5, 6.0, 8.9] {
            let roots = r.nullcline(zeta);
            let s = 1.5 * ((9.0 - zeta) / 5.0).sqrt();
            let expected: Vec<f64> = [1.5 - s, 1.5 + s]
                .into_iter()
                .filter(|x| *x > 0.0)
                .map(f64::sqrt)
                .collect();
            assert_eq!(roots.len(), expected.len());
            for (a, e) in roots.iter().zip(expected) {
                assert!((a - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn q2_large_nullcline() {
        let r = fournode_reference(2, Regime::Large);
        for zeta in [4.5, 7.0, 8.99] {
            let roots = r.nullcline(zeta);
            let s = ((9.0 - zeta) / 5.0).sqrt();
            assert!((roots[0] - (1.0 - s).sqrt()).abs() < 1e-12);
            assert!((roots[1] - (1.0 + s).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn q1_small_fold_and_hopf() {
        let r = fournode_reference(1, Regime::Small);
        assert!(r.amplitude_rhs(SQRT_2, 2.25).abs() < 1e-15);
        // linear coefficient vanishes at the Hopf value
        assert_eq!(r.lin_const - r.lin_slope * r.zeta_hb, 0.0);
        let roots = r.nullcline(2.25);
        assert!((roots[0] - SQRT_2).abs() < 1e-7);
    }

    #[test]
    fn q4_matches_q1() {
        for regime in [Regime::Small, Regime::Large] {
            let a = fournode_reference(1, regime);
            let b = fournode_reference(4, regime);
            assert_eq!(a.zeta_hb, b.zeta_hb);
            assert_eq!(a.zeta_sn, b.zeta_sn);
            assert_eq!(a.omega, b.omega);
            assert_eq!(a.cubic, b.cubic);
            assert_eq!(a.quintic, b.quintic);
        }
    }

    #[test]
    fn hopf_and_fold_consistent_with_coefficients() {
        for q in 1..=3 {
            for regime in [Regime::Small, Regime::Large] {
                let r = fournode_reference(q, regime);
                assert!((r.lin_const - r.lin_slope * r.zeta_hb).abs() < 1e-14);
                let lin_sn = r.lin_const - r.lin_slope * r.zeta_sn;
                assert!((r.cubic * r.cubic + 4.0 * r.quintic * lin_sn).abs() < 1e-12);
                assert!((r.a_sn.powi(2) - r.cubic / (2.0 * r.quintic)).abs() < 1e-12);
            }
        }
    }
}
