use serde::{Deserialize, Serialize};

use super::params::{KineticParams, ThermalParams};
use crate::error::{Error, Result};

pub const SPECIES_NAMES: [&str; 6] = ["TG", "DG", "MG", "E", "A", "GL"];

/// Full physical state of the batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReactorState {
    /// Triglyceride, mol/L.
    pub tg: f64,
    /// Diglyceride, mol/L.
    pub dg: f64,
    /// Monoglyceride, mol/L.
    pub mg: f64,
    /// Fatty acid ester, mol/L.
    pub ester: f64,
    /// Alcohol, mol/L.
    pub alcohol: f64,
    /// Glycerol, mol/L.
    pub glycerol: f64,
    /// Reactor temperature, K.
    pub t_reactor: f64,
    /// Jacket temperature, K.
    pub t_jacket: f64,
    /// Batch clock, s.
    pub time: f64,
}

impl ReactorState {
    /// Concentrations in [`SPECIES_NAMES`] order.
    pub fn concentrations(&self) -> [f64; 6] {
        [
            self.tg,
            self.dg,
            self.mg,
            self.ester,
            self.alcohol,
            self.glycerol,
        ]
    }

    /// TG + DG + MG + GL.
    pub fn glyceride_total(&self) -> f64 {
        self.tg + self.dg + self.mg + self.glycerol
    }

    /// A + E.
    pub fn alcohol_ester_total(&self) -> f64 {
        self.alcohol + self.ester
    }

    fn to_vector(self) -> [f64; 8] {
        [
            self.tg,
            self.dg,
            self.mg,
            self.ester,
            self.alcohol,
            self.glycerol,
            self.t_reactor,
            self.t_jacket,
        ]
    }

    fn from_vector(y: [f64; 8], time: f64) -> Self {
        Self {
            tg: y[0],
            dg: y[1],
            mg: y[2],
            ester: y[3],
            alcohol: y[4],
            glycerol: y[5],
            t_reactor: y[6],
            t_jacket: y[7],
            time,
        }
    }
}

/// Rate constants `k_i = ko_i exp(-E_i / (R T_r))`.
pub fn arrhenius(kp: &KineticParams, t_reactor: f64) -> Result<[f64; 6]> {
    if !(t_reactor > 0.0) {
        return Err(Error::Domain(format!(
            "reactor temperature {t_reactor} K is not positive"
        )));
    }
    let mut k = [0.0; 6];
    for i in 0..6 {
        k[i] = kp.ko[i] * (-kp.activation_energy[i] / (kp.gas_constant * t_reactor)).exp();
    }
    Ok(k)
}

/// Mass balances for `[TG, DG, MG, E, A, GL]`.
pub fn species_derivatives(c: &[f64; 6], k: &[f64; 6]) -> [f64; 6] {
    let [tg, dg, mg, e, a, gl] = *c;
    let r1 = k[0] * tg * a;
    let r2 = k[1] * dg * e;
    let r3 = k[2] * dg * a;
    let r4 = k[3] * mg * e;
    let r5 = k[4] * mg * a;
    let r6 = k[5] * gl * e;
    let d_ester = r1 - r2 + r3 - r4 + r5 - r6;
    [
        -r1 + r2,
        r1 - r2 - r3 + r4,
        r3 - r4 - r5 + r6,
        d_ester,
        -d_ester,
        r5 - r6,
    ]
}

/// `(dT_r/dt, dT_j/dt)` for ester formation rate `r_e` (mol/(L s)) and
/// jacket inlet temperature `t_jin`.
pub fn energy_derivatives(
    t_reactor: f64,
    t_jacket: f64,
    r_e: f64,
    tp: &ThermalParams,
    t_jin: f64,
) -> (f64, f64) {
    let q_j = tp.ua * (t_jacket - t_reactor);
    let d_tr = tp.molar_mass / (tp.volume * tp.density * tp.heat_capacity)
        * (-tp.volume * tp.heat_of_reaction * r_e + q_j);
    let jacket_mass = tp.jacket_volume * tp.jacket_density;
    let d_tj = tp.jacket_flow * (t_jin - t_jacket) / jacket_mass
        - q_j / (jacket_mass * tp.coolant_heat_capacity);
    (d_tr, d_tj)
}

/// One classic fourth-order Runge-Kutta step of an autonomous system.
pub fn rk4<const N: usize>(f: impl Fn(&[f64; N]) -> [f64; N], y: &[f64; N], dt: f64) -> [f64; N] {
    let axpy = |a: f64, x: &[f64; N]| {
        let mut out = *y;
        for i in 0..N {
            out[i] += a * x[i];
        }
        out
    };
    let k1 = f(y);
    let k2 = f(&axpy(0.5 * dt, &k1));
    let k3 = f(&axpy(0.5 * dt, &k2));
    let k4 = f(&axpy(dt, &k3));
    let mut out = *y;
    for i in 0..N {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

fn reactor_rhs(y: &[f64; 8], kp: &KineticParams, tp: &ThermalParams, t_jin: f64) -> [f64; 8] {
    // a non-positive temperature only arises from a diverging step; let it
    // surface as a non-finite state
    let k = arrhenius(kp, y[6]).unwrap_or([f64::NAN; 6]);
    let c = [y[0], y[1], y[2], y[3], y[4], y[5]];
    let dc = species_derivatives(&c, &k);
    let (d_tr, d_tj) = energy_derivatives(y[6], y[7], dc[3], tp, t_jin);
    [dc[0], dc[1], dc[2], dc[3], dc[4], dc[5], d_tr, d_tj]
}

/// Advance the full 8-state model by `dt` seconds at constant `t_jin`.
pub fn rk4_step(
    state: &ReactorState,
    kp: &KineticParams,
    tp: &ThermalParams,
    t_jin: f64,
    dt: f64,
) -> Result<ReactorState> {
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("step size {dt} must be positive")));
    }
    let mut y = rk4(|y| reactor_rhs(y, kp, tp, t_jin), &state.to_vector(), dt);
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::IntegrationFailure { time: state.time });
    }
    for (name, c) in SPECIES_NAMES.iter().zip(y.iter_mut().take(6)) {
        if *c < 0.0 {
            log::warn!(
                "clipping [{name}] = {c:e} to zero at t = {} s",
                state.time + dt
            );
            *c = 0.0;
        }
    }
    Ok(ReactorState::from_vector(y, state.time + dt))
}
