use num_traits::Signed;
use serde::{Deserialize, Serialize};

use super::norms::{kernel_bounds, linf_matrix, par_map};
use super::{AbstractFilter, FilterError, Result, SlotKind};
use crate::algebra::{Rat, RatFun};
use crate::bounds::{linf_bound, BoundConfig, KernelBound};
use crate::numeric::rounding::{add_up, mul_up_nonneg, sum_up};
use crate::numeric::Interval;

/// What is known about the value held by a reset slot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SlotBinding {
    /// Independent value with `|r| <= bound`.
    Free(f64),
    /// `r = coeff * g` for a shared reset value `g` of group `group`.
    Shared { group: usize, #[serde(with = "rat_text")] coeff: Rat },
    /// Constant slot, always 1.
    Unit,
}

mod rat_text {
    use crate::algebra::{parse_rat, Rat};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rat, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&r.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rat, D::Error> {
        let text = String::deserialize(d)?;
        parse_rat(&text).map_err(serde::de::Error::custom)
    }
}

/// Bounds on reset values: one binding per slot plus the bound of each
/// shared group.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResetEnv {
    pub bindings: Vec<SlotBinding>,
    pub groups: Vec<f64>,
}

impl ResetEnv {
    /// Every reset slot free with the same bound; constant slots are units.
    pub fn uniform(f: &AbstractFilter, bound: f64) -> Self {
        let bindings = f
            .slots()
            .iter()
            .map(|s| match s.kind {
                SlotKind::Constant => SlotBinding::Unit,
                SlotKind::Reset => SlotBinding::Free(bound),
            })
            .collect();
        ResetEnv { bindings, groups: Vec::new() }
    }

    /// Upper bound on `|r|` for slot `s`.
    fn magnitude(&self, s: usize) -> f64 {
        match &self.bindings[s] {
            SlotBinding::Free(b) => *b,
            SlotBinding::Unit => 1.0,
            SlotBinding::Shared { group, coeff } => mul_up_nonneg(Interval::from_rat(&coeff.abs()).hi(), self.groups[*group]),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputComponent {
    /// Certified bound on `sup_k |y_k|` for the executed filter.
    pub bound: f64,
    /// Ideal response to the inputs: `sum_j ||T_ij||_1 m_j`.
    pub input_term: f64,
    /// Ideal response to the reset values.
    pub reset_term: f64,
    /// Rounding error: `eps_rel_t m + eps_rel_d |R| + eps_abs`.
    pub error_term: f64,
    /// `sum_j ||T_ij||_1`.
    pub gain: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputBound {
    pub outputs: Vec<OutputComponent>,
    /// Whether resets sharing a value were combined before taking norms.
    pub refined: bool,
    /// Kernels of `T`, row-major.
    pub t_kernels: Vec<KernelBound>,
    /// Sup-norm bounds of the kernels of `D`, row-major.
    pub d_linf: Vec<f64>,
    /// Names of the quantities that made some output unbounded.
    pub unbounded: Vec<String>,
}

impl OutputBound {
    pub fn is_bounded(&self) -> bool {
        self.unbounded.is_empty()
    }

    pub fn bounds(&self) -> Vec<f64> {
        self.outputs.iter().map(|o| o.bound).collect()
    }
}

/// Certified sup-norm bound of every output of `f` for inputs with
/// `|I_j| <= m_in[j]` and resets as described by `env`.
///
/// With `refine`, the reset kernels of slots tied to one shared value are
/// added (weighted by their coefficients) before their sup norm is taken,
/// as are the kernels of all constant slots; otherwise each slot is charged
/// separately.
pub fn output_bound(f: &AbstractFilter, m_in: &[f64], env: &ResetEnv, refine: bool, cfg: &BoundConfig) -> Result<OutputBound> {
    if m_in.len() != f.n_inputs() || env.bindings.len() != f.n_resets() {
        return Err(FilterError::DimensionMismatch(format!(
            "filter has {} inputs and {} reset slots, got {} input bounds and {} bindings",
            f.n_inputs(),
            f.n_resets(),
            m_in.len(),
            env.bindings.len()
        )));
    }
    for b in &env.bindings {
        if let SlotBinding::Shared { group, .. } = b {
            if *group >= env.groups.len() {
                return Err(FilterError::DimensionMismatch(format!("reset group {group} has no bound")));
            }
        }
    }
    let (n_o, n_i, n_r) = (f.n_outputs(), f.n_inputs(), f.n_resets());
    let t_kernels = kernel_bounds(f.t(), cfg);
    let d_linf_m = linf_matrix(f.d(), cfg);
    let m_eff: Vec<f64> = (0..n_r).map(|s| env.magnitude(s)).collect();

    let mut unbounded = Vec::new();
    let mut outputs = Vec::with_capacity(n_o);
    for i in 0..n_o {
        let gains: Vec<f64> = (0..n_i).map(|j| t_kernels[i * n_i + j].l1_upper).collect();
        for (j, g) in gains.iter().enumerate() {
            if !g.is_finite() && m_in[j] != 0.0 {
                unbounded.push(format!("T[{i}][{j}]"));
            }
        }
        let input_term = sum_up(gains.iter().zip(m_in).map(|(&g, &m)| mul_up_nonneg(g, m)));
        let gain = sum_up(gains.iter().copied());

        let reset_term = if refine {
            refined_reset_term(f, i, env, &m_eff, cfg, &mut unbounded)
        } else {
            let mut acc = 0.0;
            for s in 0..n_r {
                let v = d_linf_m.get(i, s);
                if !v.is_finite() && m_eff[s] != 0.0 {
                    unbounded.push(format!("D[{i}][{s}]"));
                }
                acc = add_up(acc, mul_up_nonneg(v, m_eff[s]));
            }
            acc
        };

        let et = sum_up(f.eps_rel_t().row(i).iter().zip(m_in).map(|(&e, &m)| mul_up_nonneg(e, m)));
        let ed = sum_up(f.eps_rel_d().row(i).iter().zip(&m_eff).map(|(&e, &m)| mul_up_nonneg(e, m)));
        let error_term = sum_up([et, ed, f.eps_abs()[i]]);
        if !error_term.is_finite() {
            unbounded.push(format!("error[{i}]"));
        }
        let bound = sum_up([input_term, reset_term, error_term]);
        outputs.push(OutputComponent { bound, input_term, reset_term, error_term, gain });
    }
    Ok(OutputBound {
        outputs,
        refined: refine,
        t_kernels,
        d_linf: (0..n_o).flat_map(|i| d_linf_m.row(i).to_vec()).collect(),
        unbounded,
    })
}

/// Reset term of output `i` with shared values and constants combined.
fn refined_reset_term(
    f: &AbstractFilter,
    i: usize,
    env: &ResetEnv,
    m_eff: &[f64],
    cfg: &BoundConfig,
    unbounded: &mut Vec<String>,
) -> f64 {
    // (label, kernel, multiplier)
    let mut parts: Vec<(String, RatFun, f64)> = Vec::new();
    // members of each shared group, then of the constants: (slot, weighted kernel)
    let mut pools: Vec<Vec<(usize, RatFun)>> = vec![Vec::new(); env.groups.len() + 1];
    let unit_pool = env.groups.len();
    for (s, binding) in env.bindings.iter().enumerate() {
        let k = f.d().get(i, s);
        if k.is_zero() {
            continue;
        }
        match binding {
            SlotBinding::Free(_) => parts.push((format!("D[{i}][{s}]"), k.clone(), m_eff[s])),
            SlotBinding::Unit => pools[unit_pool].push((s, k.clone())),
            SlotBinding::Shared { group, coeff } => pools[*group].push((s, k.scale(coeff))),
        }
    }
    for (g, pool) in pools.into_iter().enumerate() {
        if pool.is_empty() {
            continue;
        }
        let (label, mult) = if g == unit_pool {
            (format!("constants at output {i}"), 1.0)
        } else {
            (format!("reset group {g} at output {i}"), env.groups[g])
        };
        let sum = pool.iter().try_fold(RatFun::zero(), |acc, (_, k)| acc.add(k));
        match sum {
            Ok(k) if k.is_zero() => {}
            Ok(k) => parts.push((label, k, mult)),
            // too large to combine exactly: charge every slot on its own
            Err(_) => parts.extend(pool.into_iter().map(|(s, _)| (format!("D[{i}][{s}]"), f.d().get(i, s).clone(), m_eff[s]))),
        }
    }
    let norms = par_map(&parts, cfg.jobs, |(_, k, _)| linf_bound(k, cfg));
    let mut acc = 0.0;
    for ((label, _, m), v) in parts.iter().zip(norms) {
        if !v.is_finite() && *m != 0.0 {
            unbounded.push(label.clone());
        }
        acc = add_up(acc, mul_up_nonneg(v, *m));
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{Poly, RatFunMatrix};
    use crate::filter::{compose_parallel, make_constant_source, FloatFormat, ResetSlot};
    use num_traits::One;

    fn q(n: i64, d: i64) -> Rat {
        Rat::new(n.into(), d.into())
    }

    #[test]
    fn shared_resets_can_cancel() {
        // y = r1 - r2 with r1 = r2 = g: the refined term is 0
        let d = RatFunMatrix::from_entries(1, 2, vec![RatFun::one(), RatFun::constant(-Rat::one())]).unwrap();
        let f = AbstractFilter::ideal(RatFunMatrix::zeros(1, 0), d, vec![ResetSlot::reset("a"), ResetSlot::reset("b")]).unwrap();
        let shared = |_| SlotBinding::Shared { group: 0, coeff: Rat::one() };
        let env = ResetEnv { bindings: (0..2).map(shared).collect(), groups: vec![5.0] };
        let cfg = BoundConfig::default();
        let fine = output_bound(&f, &[], &env, true, &cfg).unwrap();
        let coarse = output_bound(&f, &[], &env, false, &cfg).unwrap();
        assert_eq!(fine.outputs[0].bound, 0.0);
        assert_eq!(coarse.outputs[0].bound, 10.0);
    }

    #[test]
    fn constant_contributes_its_value() {
        let c = make_constant_source(&q(10, 1), "tau", &FloatFormat::ieee64());
        let env = ResetEnv::uniform(&c, 0.0);
        let b = output_bound(&c, &[], &env, true, &BoundConfig::default()).unwrap();
        assert_eq!(b.outputs[0].bound, 10.0);
    }

    #[test]
    fn unbounded_entries_are_named() {
        let integ = RatFun::new(Poly::one(), Poly::from_ints(&[1, -1])).unwrap();
        let t = RatFunMatrix::from_entries(1, 1, vec![integ]).unwrap();
        let f = AbstractFilter::ideal(t, RatFunMatrix::zeros(1, 0), Vec::new()).unwrap();
        let f = compose_parallel(&f, &AbstractFilter::empty());
        let b = output_bound(&f, &[1.0], &ResetEnv::default(), true, &BoundConfig::default()).unwrap();
        assert!(!b.is_bounded());
        assert_eq!(b.unbounded, vec!["T[0][0]".to_string()]);
        assert!(output_bound(&f, &[], &ResetEnv::default(), true, &BoundConfig::default()).is_err());
    }
}
