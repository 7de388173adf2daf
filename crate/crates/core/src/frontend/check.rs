use std::collections::HashMap;

use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Model, ModelKind, ResetSpec};
use crate::algebra::{rat_from_f64, Rat};
use crate::filter::sim::{with_arithmetic, ArithVisitor, Arithmetic};
use crate::filter::{AbstractOptions, FilterError, FloatFormat};

/// Kernel coefficients used to steer the adversarial inputs.
const ADVERSARIAL_HORIZON: usize = 256;
/// Inputs kept in a violation report.
const TRACE_PREFIX: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckOptions {
    pub steps: usize,
    pub seed: u64,
    /// Random-input runs (adversarial runs come on top, one per output).
    pub runs: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { steps: 1000, seed: 0, runs: 4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub run: String,
    pub output: String,
    pub step: usize,
    pub value: f64,
    pub bound: f64,
    /// First inputs of the offending run, `[step][input]`.
    pub trace_prefix: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub runs: usize,
    pub steps: usize,
    /// Largest observed `|y_i|` per output.
    pub max_observed: Vec<f64>,
    /// `bound - max_observed` per output (rounded to nearest).
    pub slack: Vec<f64>,
    pub violations: Vec<Violation>,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Largest value `<= m` in magnitude, with sign of `u`, that `arith` stores
/// exactly. Falls back to zero.
fn representable<A: Arithmetic>(arith: &A, u: f64, m: &Rat) -> Rat {
    let mut scale = 1.0;
    for _ in 0..64 {
        let cand = match rat_from_f64(u * scale) {
            Some(c) => c * m,
            None => break,
        };
        let stored = arith.to_rat(&arith.value(&cand));
        if stored.abs() <= *m {
            return stored;
        }
        scale *= 1.0 - 2f64.powi(-8);
    }
    Rat::zero()
}

/// `sign * k * step` with the largest `k` keeping it within `m`.
fn grid_value(step: &Rat, m: &Rat, sign: bool) -> Rat {
    let k = (m / step).floor();
    let v = k * step;
    if sign {
        v
    } else {
        -v
    }
}

struct Harness<'a> {
    model: &'a Model,
    bounds: &'a [f64],
    opts: CheckOptions,
    /// `T_ij` developed to the adversarial horizon, `[i][j]`.
    kernels: Vec<Vec<Vec<Rat>>>,
    reset_labels: Vec<String>,
}

impl Harness<'_> {
    fn input_limit(&self, j: usize) -> Rat {
        self.model.input_bounds[j].clone().unwrap_or_else(Rat::one)
    }

    /// Reset values: extreme in magnitude, sign from the rng, and such that
    /// every stored value (including `coeff * g` for shared resets) is
    /// representable.
    fn resets<A: Arithmetic>(&self, arith: &A, rng: &mut ChaCha8Rng) -> HashMap<String, Rat> {
        let mut out = HashMap::new();
        let mut group_value = HashMap::new();
        for (g, bound) in self.model.group_decls() {
            let coeffs: Vec<&Rat> = self
                .model
                .reset_decls()
                .iter()
                .filter_map(|(_, s)| match s {
                    ResetSpec::Shared { group, coeff } if group.name == *g => Some(coeff),
                    _ => None,
                })
                .collect();
            let lcm = coeffs.iter().fold(num_bigint::BigInt::one(), |acc, c| acc.lcm(c.denom()));
            let step = Rat::from_integer(lcm);
            let m = bound.clone().unwrap_or_else(Rat::one);
            let mut v = grid_value(&step, &m, rng.gen());
            let ok = |v: &Rat| coeffs.iter().all(|c| {
                let x = *c * v;
                arith.to_rat(&arith.value(&x)) == x
            });
            if !ok(&v) {
                v = Rat::zero();
            }
            group_value.insert(g.clone(), v);
        }
        for (name, spec) in self.model.reset_decls() {
            let v = match spec {
                ResetSpec::Shared { group, coeff } => coeff * &group_value[&group.name],
                ResetSpec::Free(b) => {
                    let m = b.clone().unwrap_or_else(Rat::one);
                    representable(arith, if rng.gen() { 1.0 } else { -1.0 }, &m)
                }
            };
            out.insert(name.clone(), v);
        }
        for l in &self.reset_labels {
            if !out.contains_key(l) {
                out.insert(l.clone(), representable(arith, rng.gen_range(-1.0..=1.0), &Rat::one()));
            }
        }
        out
    }

    fn run<A: Arithmetic>(&self, arith: &A, name: String, inputs: Vec<Vec<Rat>>, resets: &HashMap<String, Rat>, out: &mut CheckOutcome) {
        let values: Vec<Vec<A::Value>> = inputs.iter().map(|row| row.iter().map(|x| arith.value(x)).collect()).collect();
        let ys = self.model.simulate(arith, &values, resets);
        let limits: Vec<Option<Rat>> = self.bounds.iter().map(|&b| rat_from_f64(b)).collect();
        for (t, row) in ys.iter().enumerate() {
            for (i, y) in row.iter().enumerate() {
                let mag = y.abs();
                let mag_f = crate::filter::sim::nearest_f64(&mag);
                if mag_f > out.max_observed[i] {
                    out.max_observed[i] = mag_f;
                }
                if let Some(limit) = &limits[i] {
                    if mag > *limit && !out.violations.iter().any(|v| v.run == name && v.output == self.model.outputs[i]) {
                        out.violations.push(Violation {
                            run: name.clone(),
                            output: self.model.outputs[i].clone(),
                            step: t,
                            value: mag_f,
                            bound: self.bounds[i],
                            trace_prefix: inputs
                                .iter()
                                .take((t + 1).min(TRACE_PREFIX))
                                .map(|r| r.iter().map(crate::filter::sim::nearest_f64).collect())
                                .collect(),
                        });
                    }
                }
            }
        }
    }
}

impl ArithVisitor for &Harness<'_> {
    type Output = CheckOutcome;

    fn visit<A: Arithmetic>(self, arith: &A) -> CheckOutcome {
        let n_o = self.model.outputs.len();
        let n_i = self.model.inputs.len();
        let steps = self.opts.steps;
        let mut rng = ChaCha8Rng::seed_from_u64(self.opts.seed);
        let mut out = CheckOutcome {
            runs: 0,
            steps,
            max_observed: vec![0.0; n_o],
            slack: vec![],
            violations: vec![],
        };
        let limits: Vec<Rat> = (0..n_i).map(|j| self.input_limit(j)).collect();
        for r in 0..self.opts.runs {
            let resets = self.resets(arith, &mut rng);
            let inputs: Vec<Vec<Rat>> = (0..steps)
                .map(|_| (0..n_i).map(|j| representable(arith, rng.gen_range(-1.0..=1.0), &limits[j])).collect())
                .collect();
            self.run(arith, format!("random#{r}"), inputs, &resets, &mut out);
            out.runs += 1;
        }
        // Sign-following inputs: make output i peak at the last step.
        for i in 0..n_o {
            let resets = self.resets(arith, &mut rng);
            let extreme: Vec<[Rat; 2]> =
                (0..n_i).map(|j| [representable(arith, 1.0, &limits[j]), representable(arith, -1.0, &limits[j])]).collect();
            let inputs: Vec<Vec<Rat>> = (0..steps)
                .map(|t| {
                    let lag = steps - 1 - t;
                    (0..n_i)
                        .map(|j| {
                            let positive = match self.kernels[i][j].get(lag) {
                                Some(h) if !h.is_zero() => h.is_positive(),
                                _ => rng.gen(),
                            };
                            extreme[j][usize::from(!positive)].clone()
                        })
                        .collect()
                })
                .collect();
            self.run(arith, format!("adversarial#{}", self.model.outputs[i]), inputs, &resets, &mut out);
            out.runs += 1;
        }
        out.slack = self.bounds.iter().zip(&out.max_observed).map(|(b, m)| b - m).collect();
        out
    }
}

/// Simulates the network in `fmt` and compares every output sample exactly
/// against `bounds` (one per output).
pub fn check(model: &Model, bounds: &[f64], fmt: &FloatFormat, opts: &CheckOptions) -> Result<CheckOutcome, FilterError> {
    assert_eq!(bounds.len(), model.outputs.len(), "one bound per output");
    let ideal = model.abstract_filter(&FloatFormat::exact(), &AbstractOptions { quantize_bits: None, ..Default::default() })?;
    let horizon = opts.steps.min(ADVERSARIAL_HORIZON);
    let kernels = (0..ideal.n_outputs())
        .map(|i| (0..ideal.n_inputs()).map(|j| ideal.t().get(i, j).develop(horizon)).collect())
        .collect();
    let reset_labels = match &model.kind {
        ModelKind::Blocks(b) => b.reset_labels(),
        ModelKind::Equations(_) => vec![],
    };
    let h = Harness { model, bounds, opts: *opts, kernels, reset_labels };
    with_arithmetic(fmt, &h)
}
