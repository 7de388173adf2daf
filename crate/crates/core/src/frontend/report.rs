use std::fmt::Write as _;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::Model;
use crate::bounds::{BoundConfig, KernelBound, Stability, TailMethod};
use crate::filter::{output_bound, AbstractFilter, AbstractOptions, FilterError, FloatFormat, OutputBound, SlotKind};
use crate::numeric::rounding::{add_up, mul_up, sqrt_up};
use crate::numeric::{NonnegMatrix, RootMethod};

/// Exact hexadecimal literal of a binary64 value (`0x1.8p+1`); `inf`, `-inf`
/// and `nan` for the special values.
pub fn hex_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sign = if x.is_sign_negative() { "-" } else { "" };
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let mant = bits & ((1u64 << 52) - 1);
    if exp == 0 && mant == 0 {
        return format!("{sign}0x0p+0");
    }
    let (lead, e) = if exp == 0 { (0, -1022) } else { (1, exp - 1023) };
    let mut digits = format!("{mant:013x}");
    while digits.ends_with('0') {
        digits.pop();
    }
    if digits.is_empty() {
        format!("{sign}0x{lead}p{e:+}")
    } else {
        format!("{sign}0x{lead}.{digits}p{e:+}")
    }
}

fn parse_hex_float(s: &str) -> Option<f64> {
    match s {
        "inf" => return Some(f64::INFINITY),
        "-inf" => return Some(f64::NEG_INFINITY),
        "nan" => return Some(f64::NAN),
        _ => {}
    }
    let (neg, s) = match s.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, s),
    };
    let s = s.strip_prefix("0x")?;
    let (m, e) = s.split_once('p')?;
    let e: i32 = e.parse().ok()?;
    let (lead, frac) = m.split_once('.').unwrap_or((m, ""));
    let lead: u64 = lead.parse().ok()?;
    if frac.len() > 13 {
        return None;
    }
    let frac_bits = if frac.is_empty() { 0 } else { u64::from_str_radix(&format!("{frac:0<13}"), 16).ok()? };
    let bits = if lead == 0 {
        if frac_bits == 0 {
            0
        } else if e == -1022 {
            frac_bits
        } else {
            return None;
        }
    } else {
        let biased = (e + 1023) as u64;
        (biased << 52) | frac_bits
    };
    let v = f64::from_bits(bits);
    Some(if neg { -v } else { v })
}

/// A bound, serialized both as a decimal and as an exact hex literal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Num(pub f64);

#[derive(Serialize, Deserialize)]
struct NumRepr {
    decimal: String,
    hex: String,
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let decimal = if self.0.is_finite() { format!("{:?}", self.0) } else { hex_float(self.0) };
        NumRepr { decimal, hex: hex_float(self.0) }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = NumRepr::deserialize(d)?;
        parse_hex_float(&r.hex).map(Num).ok_or_else(|| serde::de::Error::custom(format!("bad hex float `{}`", r.hex)))
    }
}

impl std::fmt::Display for Num {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.is_finite() {
            write!(f, "{:.6e}", self.0)
        } else {
            write!(f, "unbounded")
        }
    }
}

fn nums(v: impl IntoIterator<Item = f64>) -> Vec<Num> {
    v.into_iter().map(Num).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootReport {
    pub re: Num,
    pub im: Num,
    pub radius: Num,
    pub modulus_lower: Num,
    pub modulus_upper: Num,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelReport {
    pub output: String,
    pub input: String,
    pub numerator: String,
    /// Primitive integer form, e.g. `10 - 15z + 7z^2`.
    pub denominator: String,
    pub l1: Num,
    pub linf: Num,
    pub dev_length: usize,
    pub head_l1: Num,
    pub tail_l1: Num,
    pub tail_method: TailMethod,
    pub stability: Stability,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub root_method: Option<RootMethod>,
    pub roots: Vec<RootReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputReport {
    pub name: String,
    /// The certified bound (with shared resets combined when groups exist).
    pub bound: Num,
    /// Every reset slot charged separately.
    pub coarse_bound: Num,
    pub input_term: Num,
    pub reset_term: Num,
    pub error_term: Num,
    /// `||T_ij||_1` per input.
    pub gain: Vec<Num>,
    /// Sup norm of the reset kernels, per slot.
    pub reset_gain: Vec<Num>,
    pub eps_rel_t: Vec<Num>,
    pub eps_rel_d: Vec<Num>,
    pub eps_abs: Num,
    pub bounded: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlotReport {
    pub label: String,
    pub kind: SlotKind,
    pub magnitude: Num,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub format: String,
    pub n_max: usize,
    pub quantize_bits: Option<u64>,
    pub refined: bool,
    pub inputs: Vec<String>,
    pub input_bounds: Vec<Num>,
    pub slots: Vec<SlotReport>,
    pub outputs: Vec<OutputReport>,
    pub kernels: Vec<KernelReport>,
    pub stability: Stability,
    pub bounded: bool,
    pub unbounded: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
    /// Wall time; not serialized, so reports stay byte-identical.
    #[serde(skip)]
    pub elapsed: Duration,
}

#[derive(Clone, Copy, Debug)]
pub struct AnalyzeOptions {
    /// Overrides the format declared in the file.
    pub format: Option<FloatFormat>,
    pub bounds: BoundConfig,
    pub quantize_bits: Option<u64>,
    /// Combine shared resets; defaults to "when groups exist".
    pub refine: Option<bool>,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            format: None,
            bounds: BoundConfig::default(),
            quantize_bits: Some(crate::filter::DEFAULT_QUANTIZE_BITS),
            refine: None,
        }
    }
}

fn int_poly(coeffs: &[BigInt]) -> String {
    let mut s = String::new();
    for (k, c) in coeffs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let mag = c.abs();
        if s.is_empty() {
            if c.is_negative() {
                s.push('-');
            }
        } else {
            s.push_str(if c.is_negative() { " - " } else { " + " });
        }
        let unit = mag == BigInt::from(1);
        match k {
            0 => write!(s, "{mag}").unwrap(),
            1 if unit => s.push('z'),
            1 => write!(s, "{mag}z").unwrap(),
            _ if unit => write!(s, "z^{k}").unwrap(),
            _ => write!(s, "{mag}z^{k}").unwrap(),
        }
    }
    if s.is_empty() {
        s.push('0');
    }
    s
}

fn kernel_report(output: &str, input: &str, f: &crate::algebra::RatFun, kb: &KernelBound) -> KernelReport {
    let roots = kb
        .roots
        .as_ref()
        .map(|c| {
            c.enclosures
                .iter()
                .map(|e| {
                    let (re, im) = (e.center.re.abs(), e.center.im.abs());
                    let center_abs = sqrt_up(add_up(mul_up(re, re), mul_up(im, im)));
                    RootReport {
                        re: Num(e.center.re),
                        im: Num(e.center.im),
                        radius: Num(e.radius),
                        modulus_lower: Num(e.modulus_lower),
                        modulus_upper: Num(add_up(center_abs, e.radius)),
                    }
                })
                .collect()
        })
        .unwrap_or_default();
    KernelReport {
        output: output.into(),
        input: input.into(),
        numerator: int_poly(&f.num().primitive_integer()),
        denominator: int_poly(&f.den().primitive_integer()),
        l1: Num(kb.l1_upper),
        linf: Num(kb.linf_upper),
        dev_length: kb.dev_length,
        head_l1: Num(kb.head_l1),
        tail_l1: Num(kb.tail_l1),
        tail_method: kb.tail_method,
        stability: kb.stability,
        root_method: kb.roots.as_ref().map(|c| c.method),
        roots,
    }
}

/// Error envelope stand-in when the floating-point loop cannot be shown
/// contracting: the ideal part is kept, every error term is unbounded.
fn with_unbounded_error(model: &Model, fmt: &FloatFormat, opts: &AbstractOptions) -> Result<AbstractFilter, FilterError> {
    let ideal = model.abstract_filter(&FloatFormat::exact(), &AbstractOptions { quantize_bits: None, ..*opts })?;
    let (n_o, n_i, n_r) = (ideal.n_outputs(), ideal.n_inputs(), ideal.n_resets());
    let inf = |r, c| NonnegMatrix::from_vec(r, c, vec![f64::INFINITY; r * c]).expect("nonnegative");
    let _ = fmt;
    AbstractFilter::from_parts(
        ideal.t().clone(),
        ideal.d().clone(),
        inf(n_o, n_i),
        inf(n_o, n_r),
        vec![f64::INFINITY; n_o],
        ideal.slots().to_vec(),
    )
}

/// Runs the whole analysis of a validated network.
pub fn analyze(model: &Model, opts: &AnalyzeOptions) -> Result<Report, FilterError> {
    let start = Instant::now();
    let fmt = opts.format.or(model.format).unwrap_or_default();
    let aopts = AbstractOptions { bounds: opts.bounds, quantize_bits: opts.quantize_bits };
    let mut note = None;
    let f = match model.abstract_filter(&fmt, &aopts) {
        Ok(f) => f,
        Err(FilterError::NotContracting { norm }) => {
            note = Some(format!("rounding errors of a feedback loop are not contracting (|K1| <= {norm})"));
            with_unbounded_error(model, &fmt, &aopts)?
        }
        Err(e) => return Err(e),
    };
    let m_in = model.input_bounds_upper();
    let env = model.reset_env(f.slots());
    let refine = opts.refine.unwrap_or(!env.groups.is_empty());
    let fine: OutputBound = output_bound(&f, &m_in, &env, refine, &opts.bounds)?;
    let coarse = if refine { output_bound(&f, &m_in, &env, false, &opts.bounds)? } else { fine.clone() };

    let n_i = f.n_inputs();
    let mut kernels = Vec::new();
    for (i, name) in model.outputs.iter().enumerate() {
        for j in 0..n_i {
            kernels.push(kernel_report(name, &model.inputs[j], f.t().get(i, j), &fine.t_kernels[i * n_i + j]));
        }
    }
    let stability = if kernels.iter().any(|k| k.stability == Stability::Unstable) {
        Stability::Unstable
    } else if kernels.iter().all(|k| k.l1.0.is_finite()) {
        Stability::Stable
    } else {
        Stability::Unknown
    };

    let n_r = f.n_resets();
    let mut unbounded = fine.unbounded.clone();
    let outputs: Vec<OutputReport> = model
        .outputs
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let o = &fine.outputs[i];
            if !o.bound.is_finite() && !unbounded.iter().any(|u| u.contains(&format!("[{i}]"))) {
                unbounded.push(format!("output {name}"));
            }
            OutputReport {
                name: name.clone(),
                bound: Num(o.bound.min(coarse.outputs[i].bound)),
                coarse_bound: Num(coarse.outputs[i].bound),
                input_term: Num(o.input_term),
                reset_term: Num(o.reset_term),
                error_term: Num(o.error_term),
                gain: nums((0..n_i).map(|j| fine.t_kernels[i * n_i + j].l1_upper)),
                reset_gain: nums((0..n_r).map(|s| fine.d_linf[i * n_r + s])),
                eps_rel_t: nums(f.eps_rel_t().row(i).iter().copied()),
                eps_rel_d: nums(f.eps_rel_d().row(i).iter().copied()),
                eps_abs: Num(f.eps_abs()[i]),
                bounded: o.bound.is_finite(),
            }
        })
        .collect();
    let slots = f
        .slots()
        .iter()
        .zip(&env.bindings)
        .map(|(s, b)| SlotReport {
            label: s.label.clone(),
            kind: s.kind,
            magnitude: Num(match b {
                crate::filter::SlotBinding::Free(v) => *v,
                crate::filter::SlotBinding::Unit => 1.0,
                crate::filter::SlotBinding::Shared { group, coeff } => {
                    mul_up(crate::numeric::Interval::from_rat(&coeff.abs()).hi(), env.groups[*group])
                }
            }),
        })
        .collect();
    let bounded = outputs.iter().all(|o| o.bounded);
    Ok(Report {
        format: fmt.to_string(),
        n_max: opts.bounds.n_max,
        quantize_bits: opts.quantize_bits,
        refined: refine,
        inputs: model.inputs.clone(),
        input_bounds: nums(m_in),
        slots,
        outputs,
        kernels,
        stability,
        bounded,
        unbounded,
        note,
        elapsed: start.elapsed(),
    })
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Report> {
        serde_json::from_str(text)
    }

    /// Human-readable rendering of the same data.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "format {}   stability {:?}   {}", self.format, self.stability, if self.bounded { "bounded" } else { "UNBOUNDED" })
            .unwrap();
        for (name, b) in self.inputs.iter().zip(&self.input_bounds) {
            writeln!(s, "input  {name} <= {b}").unwrap();
        }
        for o in &self.outputs {
            writeln!(s, "output {}: |{}| <= {}   (coarse {})", o.name, o.name, o.bound, o.coarse_bound).unwrap();
            writeln!(s, "    inputs {}  resets {}  rounding {}", o.input_term, o.reset_term, o.error_term).unwrap();
            let list = |v: &[Num]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
            writeln!(s, "    gain [{}]  eps_rel_t [{}]  eps_abs {}", list(&o.gain), list(&o.eps_rel_t), o.eps_abs).unwrap();
        }
        for k in &self.kernels {
            write!(s, "kernel {} <- {}: ({}) / ({})  l1 <= {}  N = {}  tail {:?}", k.output, k.input, k.numerator, k.denominator, k.l1, k.dev_length, k.tail_method)
                .unwrap();
            if !k.roots.is_empty() {
                let mods: Vec<String> =
                    k.roots.iter().map(|r| format!("[{:.4}, {:.4}]", r.modulus_lower.0, r.modulus_upper.0)).collect();
                write!(s, "  |roots| in {}", mods.join(" ")).unwrap();
            }
            s.push('\n');
        }
        for u in &self.unbounded {
            writeln!(s, "unbounded: {u}").unwrap();
        }
        if let Some(n) = &self.note {
            writeln!(s, "note: {n}").unwrap();
        }
        s
    }
}
