//! Index sequences over `ℕ = {1, 2, ...}`.
//!
//! Every per-subsystem quantity is a [`Seq`]: either an eventually periodic
//! table ([`Periodic`]) or a monotone power law. Both admit exact infima and
//! suprema over the whole index set.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Preamble length and period of an eventually periodic structure.
///
/// Index `i > preamble` satisfies `x(i) = x(i + period)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Schedule {
    pub preamble: usize,
    pub period: usize,
}

impl Schedule {
    pub const fn new(preamble: usize, period: usize) -> Self {
        Self { preamble, period }
    }

    /// Coarsest schedule under which both inputs are periodic.
    pub fn join(self, other: Schedule) -> Schedule {
        Schedule {
            preamble: self.preamble.max(other.preamble),
            period: math::lcm(self.period.max(1), other.period.max(1)),
        }
    }

    pub fn with_preamble_at_least(self, preamble: usize) -> Schedule {
        Schedule { preamble: self.preamble.max(preamble), ..self }
    }

    pub fn with_period_multiple(self, period: usize) -> Schedule {
        Schedule { period: math::lcm(self.period.max(1), period.max(1)), ..self }
    }

    /// Last index of the first full period.
    pub fn horizon(&self) -> usize {
        self.preamble + self.period
    }

    /// True when a rule with schedule `self` is also periodic under `outer`.
    pub fn refines_into(&self, outer: &Schedule) -> bool {
        self.preamble <= outer.preamble && outer.period.is_multiple_of(self.period.max(1))
    }
}

/// Eventually periodic table: `preamble[0..]` for `i = 1..=preamble.len()`,
/// then `period` repeated forever.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "PeriodicRepr<T>"))]
pub struct Periodic<T> {
    pub preamble: Vec<T>,
    pub period: Vec<T>,
}

impl<T> Periodic<T> {
    pub fn new(preamble: Vec<T>, period: Vec<T>) -> Result<Self> {
        if period.is_empty() {
            return Err(Error::Parameter("periodic rule needs a nonempty period".into()));
        }
        Ok(Self { preamble, period })
    }

    pub fn constant(value: T) -> Self {
        Self { preamble: Vec::new(), period: alloc::vec![value] }
    }

    /// Value at index `i ≥ 1`. Index 0 is clamped to 1.
    pub fn at(&self, i: usize) -> &T {
        let i = i.max(1);
        if i <= self.preamble.len() {
            &self.preamble[i - 1]
        } else {
            let k = (i - 1 - self.preamble.len()) % self.period.len();
            &self.period[k]
        }
    }

    pub fn schedule(&self) -> Schedule {
        Schedule::new(self.preamble.len(), self.period.len())
    }

    /// Preamble followed by one period; every value the rule ever takes.
    pub fn representatives(&self) -> impl Iterator<Item = &T> {
        self.preamble.iter().chain(self.period.iter())
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> Periodic<U> {
        Periodic {
            preamble: self.preamble.iter().map(&mut f).collect(),
            period: self.period.iter().map(&mut f).collect(),
        }
    }

    /// Evaluates `f(i)` for `i = 1..=sched.horizon()` and splits the result.
    pub fn tabulate(sched: Schedule, mut f: impl FnMut(usize) -> T) -> Periodic<T> {
        let period = sched.period.max(1);
        let preamble = (1..=sched.preamble).map(&mut f).collect();
        let period = (sched.preamble + 1..=sched.preamble + period).map(&mut f).collect();
        Periodic { preamble, period }
    }

    pub fn try_tabulate(sched: Schedule, mut f: impl FnMut(usize) -> Result<T>) -> Result<Periodic<T>> {
        let period = sched.period.max(1);
        let mut pre = Vec::with_capacity(sched.preamble);
        for i in 1..=sched.preamble {
            pre.push(f(i)?);
        }
        let mut per = Vec::with_capacity(period);
        for i in sched.preamble + 1..=sched.preamble + period {
            per.push(f(i)?);
        }
        Ok(Periodic { preamble: pre, period: per })
    }
}

impl Periodic<f64> {
    pub fn min_value(&self) -> f64 {
        self.representatives().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.representatives().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Accepts a bare value as shorthand for a constant rule.
#[cfg(feature = "serde")]
#[derive(serde::Deserialize)]
#[serde(untagged)]
enum PeriodicRepr<T> {
    Table {
        #[serde(default = "Vec::new")]
        preamble: Vec<T>,
        period: Vec<T>,
    },
    Constant(T),
}

#[cfg(feature = "serde")]
impl<T> TryFrom<PeriodicRepr<T>> for Periodic<T> {
    type Error = Error;

    fn try_from(r: PeriodicRepr<T>) -> Result<Self> {
        match r {
            PeriodicRepr::Table { preamble, period } => Periodic::new(preamble, period),
            PeriodicRepr::Constant(v) => Ok(Periodic::constant(v)),
        }
    }
}

/// `offset + scale · i^exponent`, monotone in `i`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PowerLaw {
    #[cfg_attr(feature = "serde", serde(default))]
    pub offset: f64,
    pub scale: f64,
    pub exponent: f64,
}

impl PowerLaw {
    pub fn at(&self, i: usize) -> f64 {
        self.offset + self.scale * math::powf(i.max(1) as f64, self.exponent)
    }

    fn is_constant(&self) -> bool {
        self.scale == 0.0 || self.exponent == 0.0
    }

    fn increasing(&self) -> bool {
        (self.scale > 0.0) == (self.exponent > 0.0)
    }

    /// `lim_{i→∞}` of the rule.
    fn limit(&self) -> f64 {
        if self.is_constant() {
            self.at(1)
        } else if self.exponent < 0.0 {
            self.offset
        } else if self.scale > 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    }

    fn inf_from(&self, from: usize) -> f64 {
        if self.is_constant() || self.increasing() {
            self.at(from)
        } else {
            self.limit()
        }
    }

    fn sup_from(&self, from: usize) -> f64 {
        if self.is_constant() || !self.increasing() {
            self.at(from)
        } else {
            self.limit()
        }
    }
}

/// A real-valued rule over the subsystem index.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(from = "SeqRepr", into = "SeqRepr"))]
pub enum Seq {
    Periodic(Periodic<f64>),
    Power(PowerLaw),
    /// `min(base, cap)`, kept symbolic when the result is not eventually periodic.
    Capped(Box<Seq>, f64),
}

impl Seq {
    pub fn constant(value: f64) -> Seq {
        Seq::Periodic(Periodic::constant(value))
    }

    pub fn periodic(preamble: Vec<f64>, period: Vec<f64>) -> Result<Seq> {
        Ok(Seq::Periodic(Periodic::new(preamble, period)?))
    }

    pub fn power(offset: f64, scale: f64, exponent: f64) -> Seq {
        Seq::Power(PowerLaw { offset, scale, exponent })
    }

    pub fn at(&self, i: usize) -> f64 {
        match self {
            Seq::Periodic(p) => *p.at(i),
            Seq::Power(p) => p.at(i),
            Seq::Capped(base, cap) => base.at(i).min(*cap),
        }
    }

    /// `Some` iff the sequence is eventually periodic.
    pub fn schedule(&self) -> Option<Schedule> {
        match self {
            Seq::Periodic(p) => Some(p.schedule()),
            Seq::Power(p) if p.is_constant() => Some(Schedule::new(0, 1)),
            Seq::Power(_) => None,
            Seq::Capped(base, _) => base.schedule(),
        }
    }

    pub fn as_periodic(&self) -> Option<&Periodic<f64>> {
        match self {
            Seq::Periodic(p) => Some(p),
            _ => None,
        }
    }

    /// `inf_{i ≥ from} x(i)`.
    pub fn inf_from(&self, from: usize) -> f64 {
        let from = from.max(1);
        match self {
            Seq::Periodic(p) => {
                if from > p.preamble.len() {
                    p.period.iter().copied().fold(f64::INFINITY, f64::min)
                } else {
                    p.preamble[from - 1..].iter().chain(p.period.iter()).copied().fold(f64::INFINITY, f64::min)
                }
            }
            Seq::Power(p) => p.inf_from(from),
            Seq::Capped(base, cap) => base.inf_from(from).min(*cap),
        }
    }

    /// `sup_{i ≥ from} x(i)`.
    pub fn sup_from(&self, from: usize) -> f64 {
        let from = from.max(1);
        match self {
            Seq::Periodic(p) => {
                if from > p.preamble.len() {
                    p.period.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                } else {
                    p.preamble[from - 1..].iter().chain(p.period.iter()).copied().fold(f64::NEG_INFINITY, f64::max)
                }
            }
            Seq::Power(p) => p.sup_from(from),
            Seq::Capped(base, cap) => base.sup_from(from).min(*cap),
        }
    }

    pub fn inf(&self) -> f64 {
        self.inf_from(1)
    }

    pub fn sup(&self) -> f64 {
        self.sup_from(1)
    }

    pub fn sup_abs(&self) -> f64 {
        self.sup().abs().max(self.inf().abs())
    }

    /// `a · x + b`, preserving the closed form.
    pub fn affine(&self, a: f64, b: f64) -> Result<Seq> {
        match self {
            Seq::Periodic(p) => Ok(Seq::Periodic(p.map(|v| a * v + b))),
            Seq::Power(p) => {
                Ok(Seq::Power(PowerLaw { offset: a * p.offset + b, scale: a * p.scale, exponent: p.exponent }))
            }
            Seq::Capped(base, cap) if a >= 0.0 => Ok(Seq::Capped(Box::new(base.affine(a, b)?), a * cap + b)),
            other => Err(Error::Unsupported(format!("negative scaling of capped rule {other:?}"))),
        }
    }

    /// `c · x²` where the closed form allows it.
    pub fn scaled_square(&self, c: f64) -> Result<Seq> {
        match self {
            Seq::Periodic(p) => Ok(Seq::Periodic(p.map(|v| c * v * v))),
            Seq::Power(p) if p.is_constant() => Ok(Seq::constant(c * p.at(1) * p.at(1))),
            Seq::Power(p) if p.offset == 0.0 => {
                Ok(Seq::Power(PowerLaw { offset: 0.0, scale: c * p.scale * p.scale, exponent: 2.0 * p.exponent }))
            }
            other => Err(Error::Unsupported(format!("cannot square rule {other:?} in closed form"))),
        }
    }

    /// `min(x, cap)`. Increasing power laws become eventually constant.
    pub fn capped(&self, cap: f64) -> Seq {
        match self {
            Seq::Periodic(p) => Seq::Periodic(p.map(|v| v.min(cap))),
            Seq::Power(p) if p.is_constant() => Seq::constant(p.at(1).min(cap)),
            Seq::Power(p) if p.increasing() => {
                if p.limit() <= cap {
                    return self.clone();
                }
                // First index where the rule reaches the cap.
                let mut i = 1usize;
                while p.at(i) < cap {
                    i += 1;
                }
                let preamble = (1..i).map(|k| p.at(k)).collect();
                Seq::Periodic(Periodic { preamble, period: alloc::vec![cap] })
            }
            Seq::Power(p) => {
                if p.at(1) <= cap {
                    self.clone()
                } else {
                    Seq::Capped(Box::new(self.clone()), cap)
                }
            }
            Seq::Capped(base, c) => base.capped(c.min(cap)),
        }
    }

    /// Pointwise `f(x)` for periodic rules.
    pub fn map_periodic(&self, f: impl FnMut(&f64) -> f64) -> Option<Seq> {
        self.as_periodic().map(|p| Seq::Periodic(p.map(f)))
    }
}

impl From<f64> for Seq {
    fn from(v: f64) -> Self {
        Seq::constant(v)
    }
}

/// On-disk form: a bare number, `{preamble, period}`, `{power: {...}}`,
/// or `{cap: h, base: ...}`.
#[cfg(feature = "serde")]
#[derive(serde::Serialize, serde::Deserialize)]
#[serde(untagged)]
enum SeqRepr {
    Constant(f64),
    Periodic(Periodic<f64>),
    Power { power: PowerLaw },
    Capped { cap: f64, base: Box<SeqRepr> },
}

#[cfg(feature = "serde")]
impl From<SeqRepr> for Seq {
    fn from(r: SeqRepr) -> Self {
        match r {
            SeqRepr::Constant(v) => Seq::constant(v),
            SeqRepr::Periodic(p) => Seq::Periodic(p),
            SeqRepr::Power { power } => Seq::Power(power),
            SeqRepr::Capped { cap, base } => Seq::Capped(Box::new(Seq::from(*base)), cap),
        }
    }
}

#[cfg(feature = "serde")]
impl From<Seq> for SeqRepr {
    fn from(s: Seq) -> Self {
        match s {
            Seq::Periodic(p) if p.preamble.is_empty() && p.period.len() == 1 => SeqRepr::Constant(p.period[0]),
            Seq::Periodic(p) => SeqRepr::Periodic(p),
            Seq::Power(power) => SeqRepr::Power { power },
            Seq::Capped(base, cap) => SeqRepr::Capped { cap, base: Box::new(SeqRepr::from(*base)) },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn periodic_lookup() {
        let p = Periodic::new(vec![10.0, 20.0], vec![1.0, 2.0, 3.0]).unwrap();
        let got: Vec<f64> = (1..=9).map(|i| *p.at(i)).collect();
        assert_eq!(got, vec![10.0, 20.0, 1.0, 2.0, 3.0, 1.0, 2.0, 3.0, 1.0]);
        assert_eq!(p.min_value(), 1.0);
        assert_eq!(p.max_value(), 20.0);
    }

    #[test]
    fn empty_period_rejected() {
        assert!(Periodic::<f64>::new(vec![1.0], vec![]).is_err());
    }

    #[test]
    fn schedule_join_uses_lcm() {
        let s = Schedule::new(1, 4).join(Schedule::new(3, 6));
        assert_eq!(s, Schedule::new(3, 12));
        assert!(Schedule::new(1, 4).refines_into(&s));
        assert!(!Schedule::new(4, 4).refines_into(&s));
    }

    #[test]
    fn tabulate_roundtrip() {
        let s = Seq::periodic(vec![5.0], vec![1.0, 2.0]).unwrap();
        let t = Periodic::tabulate(Schedule::new(3, 4), |i| s.at(i));
        for i in 1..40 {
            assert_eq!(*t.at(i), s.at(i));
        }
    }

    #[test]
    fn power_law_bounds() {
        let harmonic = Seq::power(0.0, 2.0, -1.0);
        assert_eq!(harmonic.inf(), 0.0);
        assert_eq!(harmonic.sup(), 2.0);
        let linear = Seq::power(1.0, 1.0, 1.0);
        assert_eq!(linear.inf(), 2.0);
        assert_eq!(linear.sup(), f64::INFINITY);
        assert_eq!(linear.inf_from(10), 11.0);
        assert!(linear.schedule().is_none());
    }

    #[test]
    fn capping_increasing_power_law_is_periodic() {
        let lam = Seq::power(1.0, 1.0, 1.0);
        let capped = lam.capped(4.5);
        let sched = capped.schedule().unwrap();
        assert_eq!(sched.period, 1);
        for i in 1..30 {
            assert_eq!(capped.at(i), lam.at(i).min(4.5));
        }
        assert_eq!(capped.sup(), 4.5);
    }

    #[test]
    fn capping_decreasing_power_law_stays_symbolic() {
        let lam = Seq::power(1.0, 4.0, -1.0);
        let capped = lam.capped(2.0);
        assert!(capped.schedule().is_none());
        assert_eq!(capped.at(1), 2.0);
        assert_eq!(capped.at(4), 2.0);
        assert_eq!(capped.at(8), 1.5);
        assert_eq!(capped.inf(), 1.0);
    }

    #[test]
    fn affine_and_square_keep_closed_form() {
        let b = Seq::power(0.7, 0.5, 1.0);
        let lam = b.affine(2.0, -0.4).unwrap();
        for i in 1..20 {
            assert!((lam.at(i) - (1.0 + i as f64)).abs() < 1e-12);
        }
        let g = Seq::power(0.0, 1.0, 1.0).scaled_square(0.5).unwrap();
        assert_eq!(g.at(4), 8.0);
        assert!(Seq::power(1.0, 1.0, 1.0).scaled_square(1.0).is_err());
    }
}
