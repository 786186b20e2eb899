//! Catalog of the standard subsystem examples with their reference gains.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::model::{GainSet, SubsystemModel};
use crate::scalar::Real;

pub const FIXTURE_NAMES: [&str; 7] = [
    "single_integrator",
    "double_integrator",
    "triple_integrator",
    "harmonic_oscillator",
    "platoon",
    "nonmin_phase",
    "aircraft",
];

/// A subsystem, its reference gains and the parameters that produced it.
#[derive(Debug, Clone)]
pub struct Fixture<T: Real> {
    pub name: &'static str,
    pub model: SubsystemModel<T>,
    /// For observer-ready fixtures `k` is the p × n state-feedback gain and
    /// `f` the observer gain; otherwise `k` is the output-feedback gain.
    pub gains: GainSet<T>,
    pub params: BTreeMap<String, f64>,
}

/// Parameters accepted by a fixture with their defaults.
pub fn fixture_defaults(name: &str) -> Result<&'static [(&'static str, f64)]> {
    Ok(match name {
        "single_integrator" => &[("a", 0.0), ("k", 1.0), ("sigma", 0.0)],
        "double_integrator" => &[
            ("a1", 0.0),
            ("a2", 0.0),
            ("b0", 0.0),
            ("b1", 1.0),
            ("k1", 1.0),
            ("k2", 1.0),
            ("f1", 1.0),
            ("f2", 1.0),
            ("position_only", 0.0),
            ("sigma", 0.0),
        ],
        "triple_integrator" => &[("k1", 1.0), ("k2", 1.0), ("k3", 1.0), ("sigma", 0.0)],
        "harmonic_oscillator" => &[
            ("m", 1.0),
            ("omega0", 1.0),
            ("zeta", 0.5),
            ("k1", 1.0),
            ("k2", 1.0),
            ("sigma", 0.0),
        ],
        "platoon" => &[("tau", 0.5), ("k1", 1.0), ("k2", 1.0), ("k3", 1.0), ("sigma", 0.0)],
        "nonmin_phase" => &[
            ("zeta", 1.0),
            ("alpha", 1.0),
            ("beta", 1.0),
            ("k1", 1.0),
            ("k2", 1.0),
            ("sigma", 0.0),
        ],
        "aircraft" => &[
            ("alpha", 1.0),
            ("beta", 1.0),
            ("position_only", 0.0),
            ("printed_a", 0.0),
            ("sigma", 0.0),
        ],
        other => {
            return Err(Error::Invalid(format!(
                "unknown fixture '{other}' (known: {})",
                FIXTURE_NAMES.join(", ")
            )))
        }
    })
}

fn m<T: Real>(r: usize, c: usize, v: &[f64]) -> Mat<T> {
    Mat::from_iterator(c, r, v.iter().map(|&x| T::lit(x))).transpose()
}

fn flag(p: &BTreeMap<String, f64>, key: &str) -> Result<bool> {
    match p[key] {
        x if x == 0.0 => Ok(false),
        x if x == 1.0 => Ok(true),
        x => Err(Error::Invalid(format!("parameter '{key}' must be 0 or 1, got {x}"))),
    }
}

pub const AIRCRAFT_A: [f64; 36] = [
    -0.003, 0.039, 0.0, -0.322, 0.0, 0.0, //
    -0.065, -0.319, 7.74, 0.0, 0.0, 0.0, //
    0.02, -0.101, -0.429, 0.0, 0.0, 0.0, //
    0.0, 0.0, 1.0, 0.0, 0.0, 0.0, //
    1.0, 0.0, 0.0, 0.0, 0.0, 0.0, //
    0.0, -1.0, 0.0, 7.74, 0.0, 0.0,
];

/// Alternative fourth row of `A` (`θ̇ = θ`), which leaves an
/// unreachable unstable mode.
pub const AIRCRAFT_A_ROW4_PRINTED: [f64; 6] = [0.0, 0.0, 0.0, 1.0, 0.0, 0.0];

pub const AIRCRAFT_B: [f64; 12] = [0.01, 1.0, -0.18, -0.04, -1.16, 0.598, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];

pub const AIRCRAFT_E: [f64; 12] = [0.003, -0.039, 0.065, 0.319, -0.02, 0.101, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];

pub const AIRCRAFT_K: [f64; 12] = [
    1.1894, 0.7756, -2.0834, -7.5558, 0.3675, -0.2017, //
    2.8779, -0.0193, 0.1032, 0.1276, 0.7532, 0.0872,
];

pub const AIRCRAFT_F: [f64; 12] = [
    9.6772, -0.3789, 1.0285, 12.6584, 0.4233, -1.9982, 0.1418, 3.3839, 9.4718, -0.0616, -0.0616, 9.0089,
];

/// Builds fixture `name`, overriding defaults with `overrides`.
pub fn fixture<T: Real>(name: &str, overrides: &BTreeMap<String, f64>) -> Result<Fixture<T>> {
    let defaults = fixture_defaults(name)?;
    let mut p: BTreeMap<String, f64> = defaults.iter().map(|&(k, v)| (k.to_string(), v)).collect();
    for (k, &v) in overrides {
        if !p.contains_key(k) {
            let known: Vec<&str> = defaults.iter().map(|d| d.0).collect();
            return Err(Error::Invalid(format!(
                "fixture '{name}' has no parameter '{k}' (accepted: {})",
                known.join(", ")
            )));
        }
        if !v.is_finite() {
            return Err(Error::Invalid(format!("parameter '{k}' must be finite, got {v}")));
        }
        p.insert(k.clone(), v);
    }
    let g = |k: &str| p[k];
    let sigma = T::lit(g("sigma"));
    let name = FIXTURE_NAMES.iter().copied().find(|&n| n == name).unwrap();
    let (model, gains) = match name {
        "single_integrator" => {
            let one = m::<T>(1, 1, &[1.0]);
            let model = SubsystemModel::new(m(1, 1, &[-g("a")]), one.clone(), one.clone(), one.clone(), one, sigma)?;
            (model, GainSet { k: m(1, 1, &[g("k")]), f: None })
        }
        "double_integrator" => {
            let a = m(2, 2, &[0.0, 1.0, -g("a2"), -g("a1")]);
            let b = m::<T>(2, 1, &[0.0, 1.0]);
            let c = m(1, 2, &[g("b1"), g("b0")]);
            let k = m(1, 2, &[g("k1"), g("k2")]);
            if flag(&p, "position_only")? {
                let model = SubsystemModel::new(a, b.clone(), b, m(1, 2, &[1.0, 0.0]), c, sigma)?;
                (model, GainSet { k, f: Some(m(2, 1, &[g("f1"), g("f2")])) })
            } else {
                (SubsystemModel::new(a, b.clone(), b, Mat::identity(2, 2), c, sigma)?, GainSet { k, f: None })
            }
        }
        "triple_integrator" => {
            let a = m(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
            let b = m::<T>(3, 1, &[0.0, 0.0, 1.0]);
            let model = SubsystemModel::new(a, b.clone(), b, Mat::identity(3, 3), m(1, 3, &[1.0, 0.0, 0.0]), sigma)?;
            (model, GainSet { k: m(1, 3, &[g("k1"), g("k2"), g("k3")]), f: None })
        }
        "harmonic_oscillator" => {
            let (mass, w, z) = (g("m"), g("omega0"), g("zeta"));
            if !(mass > 0.0) {
                return Err(Error::Invalid(format!("mass m must be positive, got {mass}")));
            }
            let a = m(2, 2, &[0.0, 1.0, -w * w, -2.0 * z * w]);
            let b = m::<T>(2, 1, &[0.0, 1.0 / mass]);
            let model = SubsystemModel::new(a, b.clone(), b, Mat::identity(2, 2), m(1, 2, &[1.0, 0.0]), sigma)?;
            (model, GainSet { k: m(1, 2, &[g("k1"), g("k2")]), f: None })
        }
        "platoon" => {
            let tau = g("tau");
            if !(tau > 0.0) {
                return Err(Error::Invalid(format!("time constant tau must be positive, got {tau}")));
            }
            let a = m(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, -1.0 / tau]);
            let b = m::<T>(3, 1, &[0.0, 0.0, 1.0 / tau]);
            let model = SubsystemModel::new(a, b.clone(), b, Mat::identity(3, 3), m(1, 3, &[1.0, 0.0, 0.0]), sigma)?;
            (model, GainSet { k: m(1, 3, &[g("k1"), g("k2"), g("k3")]), f: None })
        }
        "nonmin_phase" => {
            let model = SubsystemModel::new(
                m(2, 2, &[0.0, 1.0, 0.0, 0.0]),
                m(2, 1, &[0.0, 1.0]),
                m(2, 1, &[g("alpha"), g("beta")]),
                Mat::identity(2, 2),
                m(1, 2, &[-g("zeta"), 1.0]),
                sigma,
            )?;
            (model, GainSet { k: m(1, 2, &[g("k1"), g("k2")]), f: None })
        }
        "aircraft" => {
            let mut a = m::<T>(6, 6, &AIRCRAFT_A);
            if flag(&p, "printed_a")? {
                a.set_row(3, &m::<T>(1, 6, &AIRCRAFT_A_ROW4_PRINTED).row(0));
            }
            let c = m(2, 6, &[0.0, 0.0, 0.0, 0.0, g("alpha"), 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, g("beta")]);
            let k = m(2, 6, &AIRCRAFT_K);
            let (b, e) = (m(6, 2, &AIRCRAFT_B), m(6, 2, &AIRCRAFT_E));
            if flag(&p, "position_only")? {
                let h = m(2, 6, &[0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
                let model = SubsystemModel::new(a, b, e, h, c, sigma)?;
                (model, GainSet { k, f: Some(m(6, 2, &AIRCRAFT_F)) })
            } else {
                (SubsystemModel::new(a, b, e, Mat::identity(6, 6), c, sigma)?, GainSet { k, f: None })
            }
        }
        _ => unreachable!(),
    };
    Ok(Fixture { name, model, gains, params: p })
}

/// [`fixture`] with an override list given as `(name, value)` pairs.
pub fn fixture_with<T: Real>(name: &str, overrides: &[(&str, f64)]) -> Result<Fixture<T>> {
    fixture(name, &overrides.iter().map(|&(k, v)| (k.to_string(), v)).collect())
}
