//! Dormand–Prince 5(4) integrator with dense output.
//!
//! Steps are error-controlled unless a mesh is supplied, in which case the
//! integrator replays exactly those steps. Replaying one mesh across a family
//! of nearby initial conditions keeps finite differences across the family
//! free of step-selection noise.

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Clone, Debug)]
pub struct OdeOptions {
    pub atol: f64,
    pub rtol: f64,
    /// Initial step size; a heuristic is used when absent.
    pub h0: Option<f64>,
    pub h_min: f64,
    pub max_steps: usize,
    /// Parameters the integrator must land on exactly.
    pub stops: Vec<f64>,
    /// Replay these step endpoints without error control.
    pub mesh: Option<Vec<f64>>,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            atol: 1e-10,
            rtol: 1e-9,
            h0: None,
            h_min: 1e-12,
            max_steps: 200_000,
            stops: Vec::new(),
            mesh: None,
        }
    }
}

/// Why an integration stopped early.
#[derive(Clone, Debug, PartialEq)]
pub enum OdeFailure<E> {
    /// The right-hand side failed at the initial point.
    Initial(E),
    /// Step size collapsed while the right-hand side kept failing.
    RhsFailure { at: f64, error: E },
    /// Step size collapsed under the error test.
    StepUnderflow { at: f64 },
    TooManySteps { at: f64 },
}

#[derive(Clone, Debug)]
struct Step {
    t: f64,
    h: f64,
    rcont: [Vec<f64>; 5],
}

#[derive(Clone, Debug, Default)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Piecewise quartic interpolant of an accepted trajectory.
#[derive(Clone, Debug)]
pub struct DenseSolution {
    t0: f64,
    t_end: f64,
    y0: Vec<f64>,
    y_end: Vec<f64>,
    steps: Vec<Step>,
    pub stats: OdeStats,
}

impl DenseSolution {
    pub fn t_start(&self) -> f64 {
        self.t0
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn end_state(&self) -> &[f64] {
        &self.y_end
    }

    /// Step endpoints, suitable for [`OdeOptions::mesh`].
    pub fn mesh(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.t + s.h).collect()
    }

    /// State at parameter `t`, clamped to the integration range.
    pub fn eval(&self, t: f64) -> Vec<f64> {
        if self.steps.is_empty() || t == self.t0 {
            return self.y0.clone();
        }
        if t == self.t_end {
            return self.y_end.clone();
        }
        let forward = self.t_end >= self.t0;
        // first step whose end passes t
        let idx = self
            .steps
            .partition_point(|s| if forward { s.t + s.h < t } else { s.t + s.h > t })
            .min(self.steps.len() - 1);
        let s = &self.steps[idx];
        let theta = ((t - s.t) / s.h).clamp(0.0, 1.0);
        let th1 = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = &s.rcont;
        (0..r1.len())
            .map(|i| r1[i] + theta * (r2[i] + th1 * (r3[i] + theta * (r4[i] + th1 * r5[i]))))
            .collect()
    }
}

fn axpy(y: &[f64], h: f64, terms: &[(f64, &[f64])]) -> Vec<f64> {
    let mut out = y.to_vec();
    for (c, k) in terms {
        if *c != 0.0 {
            for (o, v) in out.iter_mut().zip(k.iter()) {
                *o += h * c * v;
            }
        }
    }
    out
}

/// Integrates y' = f(t, y) from `t0` to `t_end` (either direction).
pub fn integrate<E, F>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    opts: &OdeOptions,
) -> Result<DenseSolution, OdeFailure<E>>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>, E>,
{
    let mut stats = OdeStats::default();
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let span = (t_end - t0).abs();
    let mut sol = DenseSolution {
        t0,
        t_end,
        y0: y0.to_vec(),
        y_end: y0.to_vec(),
        steps: Vec::new(),
        stats: OdeStats::default(),
    };
    if span == 0.0 {
        return Ok(sol);
    }

    let mut stops: Vec<f64> = opts
        .stops
        .iter()
        .cloned()
        .filter(|s| (s - t0) * dir > 0.0 && (t_end - s) * dir > 0.0)
        .collect();
    stops.push(t_end);
    stops.sort_by(|a, b| ((a - t0) * dir).total_cmp(&((b - t0) * dir)));
    stops.dedup();

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k1 = f(t, &y).map_err(OdeFailure::Initial)?;
    stats.evaluations += 1;
    let mut h = opts.h0.unwrap_or(0.01 * span.min(1.0)).abs().min(span);
    let mut mesh_iter = opts.mesh.as_ref().map(|m| m.iter().cloned());
    let mut stop_idx = 0;

    while (t_end - t) * dir > 0.0 {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(OdeFailure::TooManySteps { at: t });
        }
        let (step, fixed, land) = match mesh_iter.as_mut() {
            Some(it) => match it.next() {
                Some(next) => (next - t, true, next),
                None => (t_end - t, true, t_end),
            },
            None => {
                while (stops[stop_idx] - t) * dir <= 0.0 {
                    stop_idx += 1;
                }
                let to_stop = (stops[stop_idx] - t).abs();
                // avoid leaving a sliver before the stop
                if h > 0.95 * to_stop {
                    (stops[stop_idx] - t, false, stops[stop_idx])
                } else {
                    // the step is taken as land - t so that mesh replay reproduces it bitwise
                    let land = t + dir * h;
                    (land - t, false, land)
                }
            }
        };

        let stages = (|| -> Result<_, E> {
            let k2 = f(t + C2 * step, &axpy(&y, step, &[(A21, &k1)]))?;
            let k3 = f(t + C3 * step, &axpy(&y, step, &[(A31, &k1), (A32, &k2)]))?;
            let k4 = f(
                t + C4 * step,
                &axpy(&y, step, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
            )?;
            let k5 = f(
                t + C5 * step,
                &axpy(&y, step, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            )?;
            let k6 = f(
                t + step,
                &axpy(
                    &y,
                    step,
                    &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                ),
            )?;
            let y1 = axpy(
                &y,
                step,
                &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
            );
            let k7 = f(t + step, &y1)?;
            Ok((k2, k3, k4, k5, k6, k7, y1))
        })();
        stats.evaluations += 6;

        let (_k2, k3, k4, k5, k6, k7, y1) = match stages {
            Ok(v) => v,
            Err(e) => {
                if fixed {
                    return Err(OdeFailure::RhsFailure { at: t, error: e });
                }
                stats.rejected += 1;
                h = step.abs() * 0.5;
                if h < opts.h_min {
                    return Err(OdeFailure::RhsFailure { at: t, error: e });
                }
                continue;
            }
        };

        let mut err = 0.0;
        for i in 0..y.len() {
            let e = step * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(y1[i].abs());
            err += (e / sc).powi(2);
        }
        let err = (err / y.len() as f64).sqrt();

        if !fixed && !(err <= 1.0) {
            stats.rejected += 1;
            let fac = if err.is_finite() {
                (0.9 * err.powf(-0.2)).clamp(0.2, 1.0)
            } else {
                0.2
            };
            h = step.abs() * fac;
            if h < opts.h_min {
                return Err(OdeFailure::StepUnderflow { at: t });
            }
            continue;
        }

        let ydiff: Vec<f64> = y1.iter().zip(&y).map(|(a, b)| a - b).collect();
        let bspl: Vec<f64> = (0..y.len()).map(|i| step * k1[i] - ydiff[i]).collect();
        let r4: Vec<f64> = (0..y.len())
            .map(|i| ydiff[i] - step * k7[i] - bspl[i])
            .collect();
        let r5: Vec<f64> = (0..y.len())
            .map(|i| {
                step * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
            })
            .collect();
        sol.steps.push(Step {
            t,
            h: land - t,
            rcont: [y.clone(), ydiff, bspl, r4, r5],
        });
        stats.accepted += 1;
        t = land;
        y = y1;
        k1 = k7;
        if !fixed {
            let fac = if err > 0.0 {
                (0.9 * err.powf(-0.2)).clamp(0.2, 10.0)
            } else {
                10.0
            };
            h = step.abs() * fac;
        }
    }
    sol.t_end = t;
    sol.y_end = y;
    sol.stats = stats;
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn harmonic(_t: f64, y: &[f64]) -> Result<Vec<f64>, ()> {
        Ok(vec![y[1], -y[0]])
    }

    #[test]
    fn harmonic_oscillator_endpoint_and_dense_output() {
        let sol = integrate(harmonic, 0.0, &[0.0, 1.0], 5.0, &OdeOptions::default()).unwrap();
        let end = sol.end_state();
        assert!((end[0] - 5f64.sin()).abs() < 1e-8);
        for k in 0..50 {
            let t = 0.1 * k as f64;
            let y = sol.eval(t);
            assert!((y[0] - t.sin()).abs() < 1e-8, "t = {t}");
        }
    }

    #[test]
    fn backward_integration() {
        let sol = integrate(harmonic, 0.0, &[0.0, 1.0], -2.0, &OdeOptions::default()).unwrap();
        assert!((sol.end_state()[0] - (-2f64).sin()).abs() < 1e-8);
        assert!((sol.eval(-1.0)[0] - (-1f64).sin()).abs() < 1e-8);
    }

    #[test]
    fn stops_are_hit_exactly() {
        let opts = OdeOptions {
            stops: vec![0.3, 1.7],
            ..OdeOptions::default()
        };
        let sol = integrate(harmonic, 0.0, &[0.0, 1.0], 2.0, &opts).unwrap();
        let mesh = sol.mesh();
        assert!(mesh.contains(&0.3) && mesh.contains(&1.7));
    }

    #[test]
    fn mesh_replay_is_reproducible() {
        let sol = integrate(harmonic, 0.0, &[0.0, 1.0], 3.0, &OdeOptions::default()).unwrap();
        let opts = OdeOptions {
            mesh: Some(sol.mesh()),
            ..OdeOptions::default()
        };
        let again = integrate(harmonic, 0.0, &[0.0, 1.0], 3.0, &opts).unwrap();
        assert_eq!(sol.end_state(), again.end_state());
    }

    #[test]
    fn fixed_mesh_error_is_fifth_order() {
        let error = |steps: usize| {
            let opts = OdeOptions {
                mesh: Some((1..=steps).map(|k| k as f64 / steps as f64).collect()),
                ..OdeOptions::default()
            };
            let sol = integrate(harmonic, 0.0, &[0.0, 1.0], 1.0, &opts).unwrap();
            (sol.end_state()[0] - 1f64.sin()).abs()
        };
        for steps in [4, 8] {
            let ratio = error(steps) / error(2 * steps);
            assert!((24.0..42.0).contains(&ratio), "{steps}: {ratio}");
        }
    }

    #[test]
    fn failing_rhs_reports_location() {
        let f = |_t: f64, y: &[f64]| if y[0] > 1.0 { Err("out") } else { Ok(vec![1.0]) };
        match integrate(f, 0.0, &[0.0], 3.0, &OdeOptions::default()) {
            Err(OdeFailure::RhsFailure { at, .. }) => assert!((at - 1.0).abs() < 1e-6),
            other => panic!("unexpected {other:?}"),
        }
    }
}
