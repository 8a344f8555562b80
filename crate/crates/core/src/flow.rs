//! Shadow flow of a single bubble αφ_{a,λ} + v.
//!
//! Leading-order model with v replaced by its squared norm:
//!
//! ```text
//! ȧ      = −c₁ ∇K(a) / (K(a)^{5/4} λ²)          (tangent to the sphere)
//! λ̇      = −c₂ λ ΔK(a) / (K(a)^{5/4} λ²) + γ λ v²
//! d(v²)/dt = −c₃ v² + b (|∇K(a)|²/λ² + 1/λ⁴)
//! α̇      = 0
//! ```
//!
//! The v-equation is the majorant of a one-sided bound, so the v check is a
//! consistency test of that majorant. γ (default 0) switches on an O(v²)
//! coupling. Integration is Dormand–Prince 5(4) with steps clipped to the
//! requested output times and a renormalized after every step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::func_core::CandidateFunction;
use crate::sphere;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowState {
    pub alpha: f64,
    pub a: Vec<f64>,
    pub lambda: f64,
    pub v_norm_sq: f64,
    pub t: f64,
}

impl ShadowState {
    pub fn new(alpha: f64, a: &[f64], lambda: f64, v_norm_sq: f64) -> Result<Self> {
        if !(alpha > 0.0 && lambda > 1.0 && v_norm_sq >= 0.0) {
            return Err(Error::Invalid(
                "shadow state needs α > 0, λ > 1 and v² ≥ 0".into(),
            ));
        }
        Ok(ShadowState {
            alpha,
            a: sphere::normalize(a),
            lambda,
            v_norm_sq,
            t: 0.0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub b: f64,
    pub coupling: f64,
}

impl Default for FlowConstants {
    fn default() -> Self {
        FlowConstants {
            c1: 1.0,
            c2: 1.0,
            c3: 1.0,
            b: 1.0,
            coupling: 0.0,
        }
    }
}

impl FlowConstants {
    pub fn validate(&self) -> Result<()> {
        if [self.c1, self.c2, self.c3, self.b].iter().all(|c| *c > 0.0) && self.coupling >= 0.0 {
            Ok(())
        } else {
            Err(Error::Invalid(
                "flow constants c₁, c₂, c₃, b must be positive".into(),
            ))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowDerivative {
    pub alpha: f64,
    pub a: Vec<f64>,
    pub lambda: f64,
    pub v_norm_sq: f64,
}

pub fn shadow_rhs(s: &ShadowState, k: &CandidateFunction, fc: &FlowConstants) -> ShadowDerivative {
    let j = k.jet(&s.a);
    let grad = sphere::project_tangent(&s.a, &j.gradient());
    let lap = crate::func_core::candidate::laplacian_from_jet(&j, &s.a);
    let kk = j.value.powf(1.25);
    let l2 = s.lambda * s.lambda;
    let g2 = sphere::dot(&grad, &grad);
    ShadowDerivative {
        alpha: 0.0,
        a: grad.iter().map(|g| -fc.c1 * g / (kk * l2)).collect(),
        lambda: -fc.c2 * s.lambda * lap / (kk * l2) + fc.coupling * s.lambda * s.v_norm_sq,
        v_norm_sq: -fc.c3 * s.v_norm_sq + fc.b * (g2 / l2 + 1.0 / (l2 * l2)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSample {
    pub t: f64,
    pub a: Vec<f64>,
    pub lambda: f64,
    pub v_norm_sq: f64,
    pub alpha: f64,
    pub k: f64,
    pub laplacian: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<FlowSample>,
    /// The run ended because λ exceeded the cap.
    pub concentrated: bool,
    /// The run ended because λ fell to the floor.
    pub dispersed: bool,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// Accumulated local error estimate in (a, ln λ).
    pub error_estimate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationOptions {
    pub tol: f64,
    pub lambda_cap: f64,
    /// λ at or below this value ends the run; the bubble has spread out.
    pub lambda_floor: f64,
    pub initial_step: f64,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        IntegrationOptions {
            tol: 1e-10,
            lambda_cap: 1e8,
            lambda_floor: 1.0,
            initial_step: 1e-3,
        }
    }
}

fn pack(s: &ShadowState) -> Vec<f64> {
    let mut y = s.a.clone();
    y.extend([s.lambda.ln(), s.v_norm_sq, s.alpha]);
    y
}

fn unpack(y: &[f64], t: f64) -> ShadowState {
    let d = y.len() - 3;
    ShadowState {
        a: y[..d].to_vec(),
        lambda: y[d].exp(),
        v_norm_sq: y[d + 1],
        alpha: y[d + 2],
        t,
    }
}

/// Right-hand side in the packed variables (a, ln λ, v², α).
fn packed_rhs(y: &[f64], k: &CandidateFunction, fc: &FlowConstants) -> Vec<f64> {
    let mut s = unpack(y, 0.0);
    s.a = sphere::normalize(&s.a);
    let d = shadow_rhs(&s, k, fc);
    let mut out = d.a;
    out.extend([d.lambda / s.lambda, d.v_norm_sq, d.alpha]);
    out
}

fn sample(s: &ShadowState, k: &CandidateFunction) -> FlowSample {
    let j = k.jet(&s.a);
    let grad = sphere::project_tangent(&s.a, &j.gradient());
    FlowSample {
        t: s.t,
        a: s.a.clone(),
        lambda: s.lambda,
        v_norm_sq: s.v_norm_sq,
        alpha: s.alpha,
        k: j.value,
        laplacian: crate::func_core::candidate::laplacian_from_jet(&j, &s.a),
        grad_norm: sphere::norm(&grad),
    }
}

// Dormand–Prince 5(4) tableau. The system is autonomous so stage times are unused.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates from `s0` and records the state at each of `outputs` (ascending,
/// ≥ s0.t). Stops early once λ leaves (floor, cap).
pub fn integrate(
    s0: &ShadowState,
    k: &CandidateFunction,
    fc: &FlowConstants,
    outputs: &[f64],
    opts: &IntegrationOptions,
) -> Result<Trajectory> {
    fc.validate()?;
    if outputs.windows(2).any(|w| w[0] > w[1]) || outputs.first().is_some_and(|t| *t < s0.t) {
        return Err(Error::Invalid(
            "output times must be ascending from the start time".into(),
        ));
    }
    let d = s0.a.len();
    let mut y = pack(s0);
    let mut t = s0.t;
    let mut h = opts.initial_step;
    let mut samples = Vec::with_capacity(outputs.len());
    let mut accepted = 0;
    let mut rejected = 0;
    let mut err_sum = 0.0;
    let mut concentrated = false;
    let mut dispersed = false;
    let dim = y.len();
    let mut stages = vec![vec![0.0; dim]; 7];
    stages[0] = packed_rhs(&y, k, fc);

    'outer: for &target in outputs {
        while t < target {
            let last = target - t <= h;
            let step = if last { target - t } else { h };
            for s in 1..7 {
                let mut ys = y.clone();
                for (i, yi) in ys.iter_mut().enumerate() {
                    for (r, arow) in A[s][..s].iter().enumerate() {
                        *yi += step * arow * stages[r][i];
                    }
                }
                stages[s] = packed_rhs(&ys, k, fc);
            }
            let mut y5 = y.clone();
            let mut err = vec![0.0; dim];
            for i in 0..dim {
                let mut inc5 = 0.0;
                let mut inc4 = 0.0;
                for s in 0..7 {
                    inc5 += B5[s] * stages[s][i];
                    inc4 += B4[s] * stages[s][i];
                }
                y5[i] += step * inc5;
                err[i] = step * (inc5 - inc4);
            }
            let ratio = (0..dim)
                .map(|i| err[i].abs() / (opts.tol + opts.tol * y[i].abs().max(y5[i].abs())))
                .fold(0.0f64, f64::max);
            if !ratio.is_finite() {
                return Err(Error::Integration {
                    t,
                    msg: "non-finite error estimate".into(),
                });
            }
            let factor = if ratio == 0.0 {
                5.0
            } else {
                (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0)
            };
            if ratio <= 1.0 {
                t = if last { target } else { t + step };
                let a = sphere::normalize(&y5[..d]);
                y5[..d].copy_from_slice(&a);
                y5[d + 1] = y5[d + 1].max(0.0);
                err_sum += err[..=d].iter().fold(0.0f64, |m, e| m.max(e.abs()));
                y = y5;
                stages[0] = packed_rhs(&y, k, fc);
                accepted += 1;
                if !last {
                    h = step * factor;
                }
                let lambda = y[d].exp();
                if lambda > opts.lambda_cap || lambda <= opts.lambda_floor {
                    concentrated = lambda > opts.lambda_cap;
                    dispersed = !concentrated;
                    samples.push(sample(&unpack(&y, t), k));
                    break 'outer;
                }
            } else {
                rejected += 1;
                h = step * factor;
            }
            if h < 1e-14 * (1.0 + t.abs()) {
                return Err(Error::Integration {
                    t,
                    msg: "step size underflow".into(),
                });
            }
        }
        samples.push(sample(&unpack(&y, t), k));
    }
    Ok(Trajectory {
        samples,
        concentrated,
        dispersed,
        accepted_steps: accepted,
        rejected_steps: rejected,
        error_estimate: err_sum,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorReport {
    /// None when ΔK(a) ≥ 0 somewhere on the path (check not applicable).
    pub monotone: Option<bool>,
    pub first_monotone_violation: Option<f64>,
    pub transient_time: f64,
    pub c_v: f64,
    pub v_bound_ok: bool,
    pub lambda_final: f64,
    pub concentrated: bool,
    /// Per-sample flags: (monotone step ok, v bound ok).
    pub flags: Vec<(bool, bool)>,
}

/// Checks K⁻¹(a)·ln λ nondecreasing, the v bound after the transient and
/// terminal concentration λ(T) > λ₀. `c_v_limit` is the constant the bound
/// must hold with.
pub fn monitor_invariants(
    traj: &Trajectory,
    fc: &FlowConstants,
    lambda0: f64,
    c_v_limit: f64,
) -> MonitorReport {
    let s = &traj.samples;
    let applicable = s.iter().all(|x| x.laplacian < 0.0);
    let q: Vec<f64> = s.iter().map(|x| x.lambda.ln() / x.k).collect();
    let mut flags = vec![(true, true); s.len()];
    let mut first_violation = None;
    for i in 1..s.len() {
        if q[i] < q[i - 1] - 1e-9 {
            flags[i].0 = false;
            first_violation.get_or_insert(s[i].t);
        }
    }
    let bound = |x: &FlowSample| x.grad_norm / x.lambda + 1.0 / (x.lambda * x.lambda);
    let transient = s.first().map_or(0.0, |x0| {
        let quasi = fc.b / fc.c3 * bound(x0).powi(2);
        if x0.v_norm_sq > quasi && quasi > 0.0 {
            (x0.v_norm_sq / quasi).ln() / fc.c3 + x0.t
        } else {
            x0.t
        }
    });
    let mut c_v: f64 = 0.0;
    for (i, x) in s.iter().enumerate() {
        let r = x.v_norm_sq.sqrt() / bound(x);
        if x.t >= transient {
            c_v = c_v.max(r);
            flags[i].1 = r <= c_v_limit;
        }
    }
    let lambda_final = s.last().map_or(lambda0, |x| x.lambda);
    MonitorReport {
        monotone: applicable.then_some(first_violation.is_none()),
        first_monotone_violation: first_violation,
        transient_time: transient,
        c_v,
        v_bound_ok: c_v <= c_v_limit,
        lambda_final,
        concentrated: lambda_final > lambda0,
        flags,
    }
}

/// Equally spaced output times on (t0, t0 + horizon].
pub fn output_times(t0: f64, horizon: f64, count: usize) -> Vec<f64> {
    (1..=count)
        .map(|i| t0 + horizon * i as f64 / count as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::func_core::parse_candidate;
    use crate::sphere::SphereSpec;

    #[test]
    fn constant_candidate_freezes_a_and_lambda() {
        let k = parse_candidate("2", SphereSpec::new(3).unwrap()).unwrap();
        let s0 = ShadowState::new(1.0, &[0.0, 0.6, 0.0, 0.8], 5.0, 0.3).unwrap();
        let fc = FlowConstants::default();
        let tr = integrate(
            &s0,
            &k,
            &fc,
            &output_times(0.0, 12.0, 12),
            &IntegrationOptions::default(),
        )
        .unwrap();
        let last = tr.samples.last().unwrap();
        assert!((last.lambda - 5.0).abs() < 1e-12);
        assert!(sphere::geodesic_distance(&last.a, &s0.a) < 1e-14);
        // Fixed point of the linear v² equation: b/(c₃λ⁴).
        let fixed = 1.0 / 5f64.powi(4);
        let exact = fixed + (0.3 - fixed) * (-12.0f64).exp();
        assert!((last.v_norm_sq - exact).abs() < 1e-8);
        assert!((last.v_norm_sq / fixed - 1.0).abs() < 0.01);
    }
}
