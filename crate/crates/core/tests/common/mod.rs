//! Random stable block networks, as network-file text.
#![allow(dead_code)]

use filterbound::algebra::{Poly, Rat, RatFun};
use filterbound::bounds::{l1_bound, BoundConfig};
use rand::Rng;

pub fn q(n: i64, d: i64) -> Rat {
    Rat::new(n.into(), d.into())
}

fn rat_text(r: &Rat) -> String {
    if r.denom() == &1.into() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// A generated network: source text plus what the generator knows.
pub struct Generated {
    pub source: String,
    pub n_outputs: usize,
}

struct Gen<'a, R: Rng> {
    rng: &'a mut R,
    resets: Vec<String>,
    cfg: BoundConfig,
}

impl<R: Rng> Gen<'_, R> {
    /// Coefficients of a TF2 section with poles well outside the unit disc.
    fn tf2(&mut self) -> (String, f64) {
        let b2 = q(self.rng.gen_range(-16..=16), 20);
        // stability triangle |b1| < 1 - b2 with margin
        let lim = (Rat::from_integer(1.into()) - &b2) * q(9, 10) - q(1, 20);
        let lim_k = (lim * q(20, 1)).floor().to_integer();
        let lim_k: i64 = lim_k.try_into().unwrap_or(0);
        let b1 = q(self.rng.gen_range(-lim_k..=lim_k), 20);
        let a: Vec<Rat> = (0..3).map(|_| q(self.rng.gen_range(-8..=8), 8)).collect();
        let f = RatFun::new(
            Poly::new(a.clone()),
            Poly::new(vec![Rat::from_integer(1.into()), -b1.clone(), -b2.clone()]),
        )
        .expect("nonzero denominator");
        let l1 = l1_bound(&f, &self.cfg).l1_upper;
        assert!(l1.is_finite(), "generated section must be stable");
        let text = format!("tf2({}, {}, {}; {}, {})", rat_text(&a[0]), rat_text(&a[1]), rat_text(&a[2]), rat_text(&b1), rat_text(&b2));
        (text, l1)
    }

    /// A single-input, single-output block and an upper bound on its gain.
    fn block(&mut self, depth: usize) -> (String, f64) {
        let choice = if depth == 0 { 0 } else { self.rng.gen_range(0..6) };
        match choice {
            0 | 1 => {
                let (t, l1) = self.tf2();
                if self.rng.gen_bool(0.25) {
                    let r = format!("r{}", self.resets.len());
                    self.resets.push(r.clone());
                    (format!("serial({t}, delay_init({r}))"), l1)
                } else {
                    (t, l1)
                }
            }
            2 => {
                let (a, la) = self.block(depth - 1);
                let (b, lb) = self.block(depth - 1);
                (format!("serial({a}, {b})"), la * lb)
            }
            3 => {
                let (a, la) = self.block(depth - 1);
                let (b, lb) = self.block(depth - 1);
                (format!("serial(split(2), parallel({a}, {b}), plus)"), la + lb)
            }
            4 => {
                // small-gain loop: |k| * gain <= 1/2 keeps it stable
                let (g, lg) = self.block(depth - 1);
                let den = (2.0 * lg).ceil().max(1.0) as i64;
                let k = q(if self.rng.gen_bool(0.5) { 1 } else { -1 }, den);
                (format!("feedback(serial(parallel(delay(0), scale({})), plus, {g}), 1)", rat_text(&k)), 2.0 * lg)
            }
            _ => {
                let (g, lg) = self.block(depth - 1);
                let k = q(self.rng.gen_range(-12..=12), 8);
                (format!("serial({g}, scale({}))", rat_text(&k)), lg * 1.5)
            }
        }
    }
}

/// A random stable network of depth at most `max_depth`, with one input
/// and one or two outputs.
pub fn random_network<R: Rng>(rng: &mut R, max_depth: usize) -> Generated {
    let depth = rng.gen_range(1..=max_depth);
    let mut g = Gen { rng, resets: vec![], cfg: BoundConfig::default() };
    let two = g.rng.gen_bool(0.2);
    let system = if two {
        let (a, _) = g.block(depth - 1);
        let (b, _) = g.block(depth - 1);
        format!("serial(split(2), parallel({a}, {b}))")
    } else {
        g.block(depth).0
    };
    let bound = [1, 10, 100][g.rng.gen_range(0..3)];
    let mut source = format!("input u <= {bound};\n");
    let shared = g.resets.len() >= 2 && g.rng.gen_bool(0.5);
    if shared {
        source.push_str("group g <= 2;\n");
    }
    for (k, r) in g.resets.iter().enumerate() {
        if shared && k % 2 == 0 {
            source.push_str(&format!("reset {r} = 1/2 g;\n"));
        } else {
            source.push_str(&format!("reset {r} <= 1;\n"));
        }
    }
    source.push_str(&format!("system {system};\n"));
    Generated { source, n_outputs: if two { 2 } else { 1 } }
}
