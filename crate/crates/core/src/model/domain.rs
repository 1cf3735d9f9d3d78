use rand::Rng;
use serde::Serialize;

use crate::catalog::DtypeName;
use crate::model::{Scalar, Value};

const ALNUM: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";

/// The set of values a generated scalar may take. Mutation stays inside it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Bool { allow_false: bool, allow_true: bool },
    Int { lo: i64, hi: i64 },
    Float { lo: f64, hi: f64 },
    Str,
}

impl Domain {
    /// Values of `dtype` inside `range`. Without a range, numeric values are
    /// clamped to `[-clamp, clamp]`. `None` when the intersection is empty.
    pub fn for_dtype(dtype: DtypeName, range: Option<(f64, f64)>, clamp: f64) -> Option<Domain> {
        let (lo, hi) = range.unwrap_or((-clamp, clamp));
        match dtype {
            DtypeName::String => Some(Domain::Str),
            DtypeName::Bool => {
                let (allow_false, allow_true) = match range {
                    None => (true, true),
                    Some((lo, hi)) => (lo <= 0.0 && 0.0 <= hi, lo <= 1.0 && 1.0 <= hi),
                };
                (allow_false || allow_true).then_some(Domain::Bool {
                    allow_false,
                    allow_true,
                })
            }
            d if d.is_integer() => {
                let (dlo, dhi) = d.int_bounds().unwrap();
                let lo = lo.ceil().max(dlo as f64);
                let hi = hi.floor().min(dhi as f64);
                if lo > hi {
                    return None;
                }
                // Saturating casts; f64 rounding near i64::MAX is clamped back.
                let lo = (lo as i64).max(dlo);
                let hi = (hi as i64).min(dhi);
                (lo <= hi).then_some(Domain::Int { lo, hi })
            }
            d => {
                let m = d.float_max().unwrap();
                let lo = lo.max(-m);
                let hi = hi.min(m);
                (lo <= hi).then_some(Domain::Float { lo, hi })
            }
        }
    }

    pub fn contains(&self, v: &Value) -> bool {
        match (self, v) {
            (
                Domain::Bool {
                    allow_false,
                    allow_true,
                },
                Value::Bool(b),
            ) => {
                if *b {
                    *allow_true
                } else {
                    *allow_false
                }
            }
            (Domain::Int { lo, hi }, Value::Int(i)) => lo <= i && i <= hi,
            (Domain::Float { lo, hi }, Value::Float(x)) => lo <= x && x <= hi,
            (Domain::Str, Value::Str(_)) => true,
            _ => false,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Value {
        match self {
            Domain::Str => Value::Str(random_string(rng)),
            _ => Value::from_scalar(self.sample_scalar(rng)),
        }
    }

    /// Samples a numeric element. Endpoints are drawn with a small extra
    /// probability so boundary guards are reachable.
    pub fn sample_scalar<R: Rng + ?Sized>(&self, rng: &mut R) -> Scalar {
        match *self {
            Domain::Bool {
                allow_false,
                allow_true,
            } => match (allow_false, allow_true) {
                (true, true) => Scalar::Bool(rng.gen()),
                (false, true) => Scalar::Bool(true),
                _ => Scalar::Bool(false),
            },
            Domain::Int { lo, hi } => {
                let roll: f64 = rng.gen();
                if roll < 0.05 {
                    Scalar::Int(lo)
                } else if roll < 0.1 {
                    Scalar::Int(hi)
                } else {
                    Scalar::Int(rng.gen_range(lo..=hi))
                }
            }
            Domain::Float { lo, hi } => {
                let roll: f64 = rng.gen();
                if roll < 0.05 {
                    Scalar::Float(lo)
                } else if roll < 0.1 {
                    Scalar::Float(hi)
                } else {
                    Scalar::Float(uniform_closed(lo, hi, rng.gen()))
                }
            }
            Domain::Str => panic!("string domain has no numeric scalar"),
        }
    }

    /// A nearby value inside the domain, different from `v` whenever the
    /// domain has more than one member.
    pub fn perturb<R: Rng + ?Sized>(&self, v: &Value, rng: &mut R) -> Value {
        match (*self, v) {
            (
                Domain::Bool {
                    allow_false: true,
                    allow_true: true,
                },
                Value::Bool(b),
            ) => Value::Bool(!b),
            (Domain::Int { lo, hi }, Value::Int(i)) => {
                if lo == hi {
                    return Value::Int(lo);
                }
                let step = rng.gen_range(1..=10_i64);
                let candidate = if rng.gen_bool(0.5) {
                    i.saturating_add(step)
                } else {
                    i.saturating_sub(step)
                };
                let candidate = candidate.clamp(lo, hi);
                if candidate != *i {
                    Value::Int(candidate)
                } else {
                    loop {
                        let c = rng.gen_range(lo..=hi);
                        if c != *i {
                            break Value::Int(c);
                        }
                    }
                }
            }
            (Domain::Float { lo, hi }, Value::Float(x)) => {
                if lo == hi {
                    return Value::Float(lo);
                }
                let width = hi - lo;
                let candidate = if rng.gen_bool(0.5) && width.is_finite() {
                    let scale = (width / 10.0).max(f64::MIN_POSITIVE);
                    (x + scale * (2.0 * rng.gen::<f64>() - 1.0)).clamp(lo, hi)
                } else {
                    uniform_closed(lo, hi, rng.gen())
                };
                if candidate != *x {
                    Value::Float(candidate)
                } else {
                    Value::Float(if *x == lo { hi } else { lo })
                }
            }
            (Domain::Str, Value::Str(s)) => Value::Str(mutate_string(s, rng)),
            _ => self.sample(rng),
        }
    }
}

fn uniform_closed(lo: f64, hi: f64, u: f64) -> f64 {
    let width = hi - lo;
    let x = if width.is_finite() {
        lo + width * u
    } else {
        lo * (1.0 - u) + hi * u
    };
    x.clamp(lo, hi)
}

pub fn random_string<R: Rng + ?Sized>(rng: &mut R) -> String {
    let len = rng.gen_range(0..=10);
    (0..len)
        .map(|_| ALNUM[rng.gen_range(0..ALNUM.len())] as char)
        .collect()
}

fn mutate_string<R: Rng + ?Sized>(s: &str, rng: &mut R) -> String {
    let mut chars: Vec<char> = s.chars().collect();
    let p = 1.0 / (chars.len().max(1) as f64);
    let before = chars.clone();
    let mut i = 0;
    while i < chars.len() {
        if rng.gen_bool(p) {
            chars.remove(i);
            continue;
        }
        if rng.gen_bool(p) {
            chars[i] = ALNUM[rng.gen_range(0..ALNUM.len())] as char;
        }
        i += 1;
    }
    if chars.len() < 10 && rng.gen_bool(p) {
        let at = rng.gen_range(0..=chars.len());
        chars.insert(at, ALNUM[rng.gen_range(0..ALNUM.len())] as char);
    }
    if chars == before {
        if chars.len() < 10 {
            chars.push(ALNUM[rng.gen_range(0..ALNUM.len())] as char);
        } else {
            chars.pop();
        }
    }
    chars.into_iter().collect()
}
