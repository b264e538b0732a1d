//! Reduced circulation models: the prescribed left-ventricular driving
//! pressure, the three-element Windkessel afterload, boundary flow-rate
//! measurement, and the startup pressurization ramp.
//!
//! Pressures are in mmHg, flows in ml/s, compliances in ml/mmHg and
//! resistances in mmHg.s/ml; the solver converts to CGS at the boundary.

use crate::error::{Error, Result};
use crate::field::FaceField;

/// 1 mmHg in dyn/cm^2.
pub const MMHG_TO_BARYE: f64 = 1333.22387415;

/// Duration of the startup pressurization ramp (s).
pub const RAMP_DURATION: f64 = 12.8e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindkesselParams {
    /// Characteristic resistance (mmHg.s/ml).
    pub r_c: f64,
    /// Peripheral resistance (mmHg.s/ml).
    pub r_p: f64,
    /// Arterial compliance (ml/mmHg).
    pub c: f64,
}

impl WindkesselParams {
    /// Human "Type A" beat fit.
    pub fn type_a() -> Self {
        WindkesselParams { r_c: 0.033, r_p: 0.79, c: 1.75 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WindkesselMode {
    /// Stored pressure follows the startup schedule, not the ODE.
    Ramp,
    /// Stored pressure obeys C dP/dt + P/R_p = Q.
    Dynamic,
}

#[derive(Clone, Copy, Debug)]
pub struct WindkesselState {
    pub p_wk: f64,
    pub params: WindkesselParams,
    pub mode: WindkesselMode,
    /// Ramp target for the stored pressure (mmHg).
    pub ramp_target: f64,
}

impl WindkesselState {
    pub fn new(params: WindkesselParams, ramp_target: f64) -> Result<Self> {
        if params.r_c <= 0.0 || params.r_p <= 0.0 || params.c <= 0.0 {
            return Err(Error::Config("Windkessel parameters must be positive".into()));
        }
        Ok(WindkesselState { p_wk: 0.0, params, mode: WindkesselMode::Ramp, ramp_target })
    }

    /// Advance the stored pressure to time `t_new = t + dt` given the outflow
    /// rate at `t_new`. In ramp mode the schedule value is returned instead
    /// of integrating the ODE; the mode switches to dynamic at ramp end.
    pub fn step(&mut self, q_ao: f64, dt: f64, t_new: f64) -> f64 {
        match self.mode {
            WindkesselMode::Ramp => {
                self.p_wk = self.ramp_target * (t_new / RAMP_DURATION).min(1.0);
                if t_new >= RAMP_DURATION {
                    self.mode = WindkesselMode::Dynamic;
                }
            }
            WindkesselMode::Dynamic => {
                // Two-stage explicit Runge-Kutta: forward predictor, then a
                // trapezoidal corrector in the stored pressure.
                let p = self.p_wk;
                let (c, rp) = (self.params.c, self.params.r_p);
                let p_tilde = p + dt / c * (q_ao - p / rp);
                self.p_wk = p + dt / c * (q_ao - (p_tilde + p) / (2.0 * rp));
            }
        }
        self.p_wk
    }

    /// Downstream pressure boundary value P_Ao = R_c Q_Ao + P_wk.
    pub fn downstream_pressure(&self, q_ao: f64) -> f64 {
        self.params.r_c * q_ao + self.p_wk
    }
}

/// Periodic left-ventricular driving pressure with a linear startup ramp.
#[derive(Clone, Debug)]
pub struct DrivingWaveform {
    /// (time s, pressure mmHg) samples covering one period.
    pub samples: Vec<(f64, f64)>,
    pub period: f64,
    pub ramp_target: f64,
    pub ramp_duration: f64,
}

impl DrivingWaveform {
    pub fn new(samples: Vec<(f64, f64)>, period: f64) -> Result<Self> {
        if period <= 0.0 {
            return Err(Error::Config("waveform period must be positive".into()));
        }
        if samples.len() < 2 {
            return Err(Error::Config("waveform needs at least two samples".into()));
        }
        for w in samples.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::Config("waveform samples must have increasing times".into()));
            }
        }
        if samples.last().unwrap().0 > period {
            return Err(Error::Config("waveform samples extend past the period".into()));
        }
        Ok(DrivingWaveform {
            samples,
            period,
            ramp_target: 10.0,
            ramp_duration: RAMP_DURATION,
        })
    }

    /// Synthetic human-like default: 10 mmHg diastolic baseline with a
    /// sin^2 systolic pulse peaking near 120 mmHg, 0.8 s period.
    pub fn default_synthetic() -> Self {
        let period = 0.8;
        let t_sys0 = 0.1;
        let t_sys = 0.3;
        let n = 160;
        let samples = (0..=n)
            .map(|i| {
                let t = period * i as f64 / n as f64;
                let p = if t > t_sys0 && t < t_sys0 + t_sys {
                    let s = (std::f64::consts::PI * (t - t_sys0) / t_sys).sin();
                    10.0 + 110.0 * s * s
                } else {
                    10.0
                };
                (t, p)
            })
            .collect();
        DrivingWaveform::new(samples, period).unwrap()
    }

    /// Scaled copy (used by desk-size demos driving smaller loads).
    pub fn scaled(&self, factor: f64) -> Self {
        let mut w = self.clone();
        for s in &mut w.samples {
            s.1 *= factor;
        }
        w.ramp_target *= factor;
        w
    }

    fn table_lookup(&self, phase: f64) -> f64 {
        let s = &self.samples;
        // Wrap-around linear interpolation.
        if phase <= s[0].0 {
            let (t0, p0) = *s.last().unwrap();
            let (t1, p1) = s[0];
            let span = t1 + self.period - t0;
            let w = (phase + self.period - t0) / span;
            return p0 + w * (p1 - p0);
        }
        for w in s.windows(2) {
            if phase <= w[1].0 {
                let f = (phase - w[0].0) / (w[1].0 - w[0].0);
                return w[0].1 + f * (w[1].1 - w[0].1);
            }
        }
        let (t0, p0) = *s.last().unwrap();
        let (t1, p1) = s[0];
        let span = t1 + self.period - t0;
        let f = (phase - t0) / span;
        p0 + f * (p1 - p0)
    }

    /// P_LV(t): linear ramp from zero to the ramp target, then periodic
    /// interpolation of the sample table.
    pub fn driving_pressure(&self, t: f64) -> f64 {
        if t <= self.ramp_duration {
            return self.ramp_target * (t / self.ramp_duration).max(0.0);
        }
        self.table_lookup(t.rem_euclid(self.period))
    }
}

/// A rectangular region on one face of the physical domain, in level-0 cell
/// indices transverse to `axis`.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryRegion {
    pub axis: usize,
    /// false: the x_axis = 0 face; true: the x_axis = L face.
    pub high: bool,
    /// Transverse bounds (inclusive, level-0 cells); entries on `axis` ignored.
    pub lo: [i64; 3],
    pub hi: [i64; 3],
}

/// Signed outward volume flux (ml/s) through a boundary region, summed over
/// level-0 boundary faces. Requires `u` conservatively restricted, which
/// makes the coarse sum equal the composite flux exactly.
pub fn boundary_flow_outward(u: &FaceField, region: &BoundaryRegion) -> Result<f64> {
    let hier = &u.hier;
    let dim = hier.dim();
    let a = region.axis;
    if a >= dim {
        return Err(Error::Config(format!("boundary region axis {a} out of range")));
    }
    let domain = hier.domain.domain_box();
    let plane = if region.high { domain.hi[a] + 1 } else { 0 };
    let area = hier.levels[0].h.powi(dim as i32 - 1);
    let sign = if region.high { 1.0 } else { -1.0 };
    let mut q = 0.0;
    let mut hit = false;
    for (pi, pbox) in hier.levels[0].boxes.iter().enumerate() {
        let fb = pbox.face_box(a);
        if plane < fb.lo[a] || plane > fb.hi[a] {
            continue;
        }
        for f in fb.iter() {
            if f[a] != plane {
                continue;
            }
            let mut inside = true;
            for t in 0..dim {
                if t == a {
                    continue;
                }
                if f[t] < region.lo[t] || f[t] > region.hi[t] {
                    inside = false;
                    break;
                }
            }
            if inside {
                hit = true;
                q += sign * u.patches[0][pi][a].at(f) * area;
            }
        }
    }
    if !hit {
        return Err(Error::Config(format!(
            "boundary region {region:?} selects no domain-boundary faces"
        )));
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::DomainGeometry;
    use crate::hierarchy::PatchHierarchy;
    use std::sync::Arc;

    #[test]
    fn driving_pressure_ramp_and_periodicity() {
        let w = DrivingWaveform::default_synthetic();
        assert_eq!(w.driving_pressure(0.0), 0.0);
        assert!((w.driving_pressure(RAMP_DURATION) - 10.0).abs() < 1e-12);
        for t in [0.05_f64, 0.21, 0.397, 0.64] {
            let a = w.driving_pressure(t);
            let b = w.driving_pressure(t + 0.8);
            assert!((a - b).abs() < 1e-9, "periodicity at t={t}: {a} vs {b}");
        }
        // Peak is near 120 mmHg mid-systole.
        assert!((w.driving_pressure(0.25) - 120.0).abs() < 0.5);
    }

    #[test]
    fn windkessel_free_decay_matches_exponential() {
        let mut s = WindkesselState::new(WindkesselParams::type_a(), 85.0).unwrap();
        s.mode = WindkesselMode::Dynamic;
        s.p_wk = 85.0;
        let dt = 1e-4_f64;
        let tau = 0.79_f64 * 1.75;
        assert!((tau - 1.3825).abs() < 1e-12);
        let t_end = tau; // one time constant
        let steps = (t_end / dt).round() as usize;
        for k in 0..steps {
            s.step(0.0, dt, RAMP_DURATION + (k + 1) as f64 * dt);
        }
        let want = 85.0 * (-1.0_f64).exp();
        assert!(
            ((s.p_wk - want) / want).abs() < 0.01,
            "decay after one tau: {} vs {want}",
            s.p_wk
        );
    }

    #[test]
    fn windkessel_steady_state_is_q_times_rp() {
        let mut s = WindkesselState::new(WindkesselParams::type_a(), 85.0).unwrap();
        s.mode = WindkesselMode::Dynamic;
        s.p_wk = 0.0;
        let dt = 5e-4;
        for k in 0..200_000 {
            s.step(100.0, dt, (k + 1) as f64 * dt);
        }
        let want = 100.0 * 0.79;
        assert!(((s.p_wk - want) / want).abs() < 1e-3, "{} vs {want}", s.p_wk);
    }

    #[test]
    fn windkessel_rk2_second_order() {
        let params = WindkesselParams::type_a();
        let p0 = 40.0;
        let t_end = 0.5;
        let exact = p0 * (-t_end / (params.r_p * params.c)).exp();
        let mut errs = Vec::new();
        for dt in [2e-3, 1e-3] {
            let mut s = WindkesselState::new(params, 85.0).unwrap();
            s.mode = WindkesselMode::Dynamic;
            s.p_wk = p0;
            let n = (t_end / dt).round() as usize;
            for k in 0..n {
                s.step(0.0, dt, (k + 1) as f64 * dt);
            }
            errs.push((s.p_wk - exact).abs());
        }
        let order = (errs[0] / errs[1]).log2();
        assert!(order > 1.9, "RK2 order {order}, errors {errs:?}");
    }

    #[test]
    fn downstream_pressure_examples() {
        let mut s = WindkesselState::new(WindkesselParams::type_a(), 85.0).unwrap();
        s.p_wk = 80.0;
        assert!((s.downstream_pressure(0.0) - 80.0).abs() < 1e-12);
        let p = s.downstream_pressure(100.0);
        assert!((p - 83.3).abs() < 1e-9, "{p}");
        // Ramp drives the stored pressure to its target at ramp end.
        let mut s = WindkesselState::new(WindkesselParams::type_a(), 85.0).unwrap();
        s.step(0.0, RAMP_DURATION, RAMP_DURATION);
        assert!((s.p_wk - 85.0).abs() < 1e-12);
        assert_eq!(s.mode, WindkesselMode::Dynamic);
    }

    #[test]
    fn ramp_mode_ignores_flow() {
        let mut s = WindkesselState::new(WindkesselParams::type_a(), 85.0).unwrap();
        let p = s.step(1000.0, 1e-3, 6.4e-3);
        assert!((p - 42.5).abs() < 1e-12); // halfway up the ramp
        assert_eq!(s.mode, WindkesselMode::Ramp);
    }

    #[test]
    fn flow_rate_area_times_speed() {
        let d = DomainGeometry::new(3, [1.0, 1.0, 1.0], [8, 8, 8]).unwrap();
        let hier = Arc::new(PatchHierarchy::uniform(d));
        let mut u = FaceField::new(hier.clone());
        u.set_from_fn(|_, a| if a == 0 { 10.0 } else { 0.0 });
        // Whole low-x face: 1 cm^2 at 10 cm/s entering the domain.
        let region = BoundaryRegion { axis: 0, high: false, lo: [0; 3], hi: [7; 3] };
        let q_out = boundary_flow_outward(&u, &region).unwrap();
        assert!((q_out + 10.0).abs() < 1e-12); // inflow: outward flux negative
        let region_hi = BoundaryRegion { axis: 0, high: true, lo: [0; 3], hi: [7; 3] };
        let q_hi = boundary_flow_outward(&u, &region_hi).unwrap();
        assert!((q_hi - 10.0).abs() < 1e-12);
        // Flux balance for a uniform axial flow.
        assert!((q_out + q_hi).abs() < 1e-12);
    }

    #[test]
    fn zero_velocity_zero_flow() {
        let d = DomainGeometry::new(2, [1.0, 1.0, 0.0], [8, 8, 1]).unwrap();
        let hier = Arc::new(PatchHierarchy::uniform(d));
        let u = FaceField::new(hier);
        let region = BoundaryRegion { axis: 1, high: true, lo: [0; 3], hi: [7; 3] };
        assert_eq!(boundary_flow_outward(&u, &region).unwrap(), 0.0);
    }

    #[test]
    fn off_boundary_region_rejected() {
        let d = DomainGeometry::new(2, [1.0, 1.0, 0.0], [8, 8, 1]).unwrap();
        let hier = Arc::new(PatchHierarchy::uniform(d));
        let u = FaceField::new(hier);
        let bad = BoundaryRegion { axis: 0, high: false, lo: [20, 20, 0], hi: [30, 30, 0] };
        assert!(boundary_flow_outward(&u, &bad).is_err());
    }
}
