//! Countable networks of ODE subsystems and their finite truncations.
//!
//! A [`NetworkGenerator`] is a finite description from which the `i`-th
//! subsystem can be materialized on demand. Every supported family has the
//! common local form
//!
//! ```text
//! ẋᵢ = Aᵢxᵢ + Eᵢφᵢ(Gᵢxᵢ) + Bᵢuᵢ + Σ_{j∈Iᵢ} Dᵢⱼxⱼ
//! ```
//!
//! which is what [`LocalDynamics`] stores.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::seq::{Periodic, Schedule, Seq};

/// Scalar sector nonlinearity `φ` with `(φ(s) − rs)(φ(s) − ls) ≤ 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Nonlinearity {
    Zero,
    /// `((l + r)/2) s`.
    Midpoint,
    /// `r s` saturated at `±level`, then clamped into the sector.
    Saturation {
        level: f64,
    },
}

impl Nonlinearity {
    #[inline]
    pub fn eval(&self, s: f64, l: f64, r: f64) -> f64 {
        match *self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Midpoint => 0.5 * (l + r) * s,
            Nonlinearity::Saturation { level } => {
                let (lo, hi) = if l * s <= r * s { (l * s, r * s) } else { (r * s, l * s) };
                (r * s).clamp(-level, level).clamp(lo, hi)
            }
        }
    }
}

/// `ẋᵢ = −bᵢᵢxᵢ + bᵢ₍ᵢ₋₁₎xᵢ₋₁ + bᵢ₍ᵢ₊₁₎xᵢ₊₁ [+ bᵢᵤuᵢ]`, scalar states.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChainCoefficients {
    pub diag: Seq,
    pub lower: Seq,
    pub upper: Seq,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub input: Option<Seq>,
    /// Declared `b̄` with `max{bᵢᵢ, |bᵢ₍ᵢ±1₎|} ≤ b̄`.
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub bound: Option<f64>,
}

/// Sector-bounded Lur'e subsystems coupled to their two chain neighbours.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LureCoefficients {
    pub a: Periodic<Mat>,
    pub b: Periodic<Mat>,
    /// `n × 1`.
    pub e: Periodic<Mat>,
    /// `1 × n`.
    pub g: Periodic<Mat>,
    /// Block acting on `xᵢ₋₁`; ignored for `i = 1`.
    pub d_lower: Periodic<Mat>,
    /// Block acting on `xᵢ₊₁`.
    pub d_upper: Periodic<Mat>,
    pub sector_l: Seq,
    pub sector_r: Seq,
    pub nonlinearity: Nonlinearity,
}

impl LureCoefficients {
    /// Vehicle platoon tracking-error dynamics with each neighbour block
    /// scaled by `sigma`.
    pub fn platoon(k0: f64, b0: f64, sigma: f64) -> Self {
        let a = Mat::from_rows(&[&[0.0, 1.0], &[-k0, -b0]]).unwrap();
        let d = Mat::from_rows(&[&[0.0, 0.0], &[sigma * k0, sigma * b0]]).unwrap();
        Self {
            a: Periodic::constant(a),
            b: Periodic::constant(Mat::column(&[0.0, 1.0])),
            e: Periodic::constant(Mat::zeros(2, 1)),
            g: Periodic::constant(Mat::zeros(1, 2)),
            d_lower: Periodic::constant(d.clone()),
            d_upper: Periodic::constant(d),
            sector_l: Seq::constant(0.0),
            sector_r: Seq::constant(1.0),
            nonlinearity: Nonlinearity::Zero,
        }
    }

    fn state_dim(&self) -> usize {
        self.a.at(1).rows()
    }

    fn input_dim(&self) -> usize {
        self.b.at(1).cols()
    }
}

/// Cell-transmission road model; speeds in km/h, lengths in km.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrafficCoefficients {
    pub speed: Seq,
    pub length: Seq,
    pub c: f64,
    pub e: f64,
    pub r: f64,
}

impl Default for TrafficCoefficients {
    fn default() -> Self {
        Self { speed: Seq::constant(1.0), length: Seq::constant(1.0), c: 0.1, e: 0.5, r: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "family", content = "coefficients", rename_all = "kebab-case"))]
pub enum Family {
    LinearChain(ChainCoefficients),
    Lure(LureCoefficients),
    Traffic(TrafficCoefficients),
    /// `ẋᵢ = −xᵢ/i + uᵢ`.
    CounterSlow,
    /// `ẋᵢ = −xᵢ + i·uᵢ`.
    CounterGain,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::LinearChain(_) => "linear-chain",
            Family::Lure(_) => "lure",
            Family::Traffic(_) => "traffic",
            Family::CounterSlow => "counter-slow",
            Family::CounterGain => "counter-gain",
        }
    }

    /// Smallest bandwidth containing every neighbour set.
    pub fn natural_bandwidth(&self) -> usize {
        match self {
            Family::Traffic(_) => 4,
            _ => 1,
        }
    }

    /// Schedule under which `spec(i) = spec(i + P)` holds coefficient-wise,
    /// or `None` when some rule is not eventually periodic.
    pub fn schedule(&self) -> Option<Schedule> {
        match self {
            Family::LinearChain(c) => {
                let mut s = c.diag.schedule()?.join(c.lower.schedule()?).join(c.upper.schedule()?);
                if let Some(inp) = &c.input {
                    s = s.join(inp.schedule()?);
                }
                Some(s.with_preamble_at_least(1))
            }
            Family::Lure(c) => {
                let s =
                    c.a.schedule()
                        .join(c.b.schedule())
                        .join(c.e.schedule())
                        .join(c.g.schedule())
                        .join(c.d_lower.schedule())
                        .join(c.d_upper.schedule())
                        .join(c.sector_l.schedule()?)
                        .join(c.sector_r.schedule()?);
                Some(s.with_preamble_at_least(1))
            }
            Family::Traffic(c) => {
                let s = c.speed.schedule()?.join(c.length.schedule()?);
                // Neighbour coefficients are read up to four cells away.
                let shifted = Schedule::new(if s.preamble == 0 { 0 } else { s.preamble + 4 }, s.period);
                Some(shifted.join(Schedule::new(3, 8)))
            }
            Family::CounterSlow | Family::CounterGain => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CoefficientMode {
    EventuallyPeriodic {
        preamble: usize,
        period: usize,
    },
    /// Rules may be closed-form power laws; uniform bounds are taken from
    /// their exact infima and suprema.
    ClosedForm {},
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NetworkGenerator {
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub family: Family,
    pub mode: CoefficientMode,
    pub bandwidth: usize,
    pub p: f64,
    pub q: f64,
}

impl NetworkGenerator {
    /// Generator with the family's natural bandwidth, `p = q = 2` and the
    /// tightest mode the rules allow.
    pub fn new(family: Family) -> Self {
        let mode = match family.schedule() {
            Some(s) => CoefficientMode::EventuallyPeriodic { preamble: s.preamble, period: s.period },
            None => CoefficientMode::ClosedForm {},
        };
        let bandwidth = family.natural_bandwidth();
        Self { family, mode, bandwidth, p: 2.0, q: 2.0 }
    }

    pub fn declared_schedule(&self) -> Option<Schedule> {
        match self.mode {
            CoefficientMode::EventuallyPeriodic { preamble, period } => Some(Schedule::new(preamble, period)),
            CoefficientMode::ClosedForm {} => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0 && self.q >= 1.0) {
            return Err(Error::Parameter(format!("exponents must lie in [1, ∞), got p={}, q={}", self.p, self.q)));
        }
        if self.bandwidth < self.family.natural_bandwidth() {
            return Err(Error::Parameter(format!(
                "bandwidth {} is smaller than the {} family's neighbour range {}",
                self.bandwidth,
                self.family.name(),
                self.family.natural_bandwidth()
            )));
        }
        if let CoefficientMode::EventuallyPeriodic { period, .. } = self.mode {
            if period == 0 {
                return Err(Error::Parameter("declared period must be positive".into()));
            }
            let declared = self.declared_schedule().unwrap();
            match self.family.schedule() {
                Some(s) if s.refines_into(&declared) => {}
                Some(s) => {
                    return Err(Error::Parameter(format!(
                        "coefficients need preamble ≥ {} and a period dividing into {}, declared ({}, {})",
                        s.preamble, s.period, declared.preamble, declared.period
                    )))
                }
                None => return Err(Error::Parameter("closed-form coefficient rules require mode closed_form".into())),
            }
        }
        match &self.family {
            Family::LinearChain(c) => validate_chain(c),
            Family::Lure(c) => validate_lure(c),
            Family::Traffic(c) => validate_traffic(c),
            Family::CounterSlow | Family::CounterGain => Ok(()),
        }
    }
}

fn check_finite(name: &'static str, s: &Seq) -> Result<()> {
    let (lo, hi) = (s.inf(), s.sup());
    if lo.is_nan() || hi.is_nan() {
        return Err(Error::NonFinite(name));
    }
    Ok(())
}

fn validate_chain(c: &ChainCoefficients) -> Result<()> {
    for (name, s) in [("diag", &c.diag), ("lower", &c.lower), ("upper", &c.upper)] {
        check_finite(name, s)?;
    }
    if !(c.diag.inf() > 0.0) && c.diag.schedule().is_some() {
        return Err(Error::Parameter(format!("chain needs bᵢᵢ > 0, found inf {}", c.diag.inf())));
    }
    if c.diag.at(1) <= 0.0 {
        return Err(Error::Parameter("chain needs bᵢᵢ > 0".into()));
    }
    if let Some(b) = c.bound {
        let worst = c.diag.sup().max(c.lower.sup_abs()).max(c.upper.sup_abs());
        if worst > b {
            return Err(Error::Parameter(format!("chain coefficient {worst} exceeds declared bound {b}")));
        }
    }
    Ok(())
}

fn validate_lure(c: &LureCoefficients) -> Result<()> {
    let n = c.state_dim();
    let m = c.input_dim();
    if n == 0 {
        return Err(Error::Shape("Lur'e state dimension must be positive".into()));
    }
    let shape = |name: &str, rule: &Periodic<Mat>, rows: usize, cols: usize| -> Result<()> {
        for mat in rule.representatives() {
            if mat.rows() != rows || mat.cols() != cols {
                return Err(Error::Shape(format!(
                    "Lur'e {name} is {}x{}, expected {rows}x{cols}",
                    mat.rows(),
                    mat.cols()
                )));
            }
            if mat.as_slice().iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("Lur'e matrix entry"));
            }
        }
        Ok(())
    };
    shape("A", &c.a, n, n)?;
    shape("B", &c.b, n, m)?;
    shape("E", &c.e, n, 1)?;
    shape("G", &c.g, 1, n)?;
    shape("D_lower", &c.d_lower, n, n)?;
    shape("D_upper", &c.d_upper, n, n)?;
    let sched = c.sector_l.schedule().zip(c.sector_r.schedule());
    let Some((sl, sr)) = sched else {
        return Err(Error::Unsupported("Lur'e sector bounds must be eventually periodic".into()));
    };
    let s = sl.join(sr);
    for i in 1..=s.horizon() {
        let (l, r) = (c.sector_l.at(i), c.sector_r.at(i));
        if !(r > l) {
            return Err(Error::Parameter(format!("sector at index {i} needs r > l, got l={l}, r={r}")));
        }
        if c.nonlinearity == Nonlinearity::Zero && !(l <= 0.0 && 0.0 <= r) {
            let inert = c.e.at(i).is_zero() || c.g.at(i).is_zero();
            if !inert {
                return Err(Error::Parameter(format!("φ ≡ 0 lies outside the sector [{l}, {r}] at index {i}")));
            }
        }
    }
    Ok(())
}

fn validate_traffic(c: &TrafficCoefficients) -> Result<()> {
    if !(c.c > 0.0 && c.c < 0.5) {
        return Err(Error::Parameter(format!("traffic c must lie in (0, 0.5), got {}", c.c)));
    }
    if !(c.e > 0.0 && c.e < 1.0) {
        return Err(Error::Parameter(format!("traffic e must lie in (0, 1), got {}", c.e)));
    }
    if !(c.r > 0.0 && c.r.is_finite()) {
        return Err(Error::Parameter(format!("traffic r must be positive, got {}", c.r)));
    }
    for (name, s) in [("speed", &c.speed), ("length", &c.length)] {
        let (lo, hi) = (s.inf(), s.sup());
        if !(lo > 0.0 && hi.is_finite()) {
            return Err(Error::Parameter(format!("traffic {name} needs bounds 0 < {lo} ≤ {hi} < ∞")));
        }
    }
    Ok(())
}

/// Road cell classes `S₁ … S₉`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum CellClass {
    S1,
    S2,
    S3,
    S4,
    S5,
    S6,
    S7,
    S8,
    S9,
}

impl CellClass {
    /// Neighbour offsets `j − i`, in the order the coupling vector lists them.
    pub fn offsets(self) -> &'static [isize] {
        match self {
            CellClass::S1 => &[1],
            CellClass::S2 => &[4],
            CellClass::S3 => &[-4],
            CellClass::S4 | CellClass::S8 => &[-1, 4],
            CellClass::S5 | CellClass::S9 => &[-4, 1],
            CellClass::S6 => &[1, 4],
            CellClass::S7 => &[-4, -1],
        }
    }

    /// Exit share `eᵢ` in units of `e`.
    pub fn exit_multiplier(self) -> f64 {
        match self {
            CellClass::S5 => 1.0,
            CellClass::S8 => 2.0,
            _ => 0.0,
        }
    }

    /// Entry gain `Bᵢ` in units of `r`.
    pub fn entry_multiplier(self) -> f64 {
        match self {
            CellClass::S2 => 1.0,
            CellClass::S3 => 0.5,
            _ => 0.0,
        }
    }
}

pub fn classify_traffic_cell(i: usize) -> CellClass {
    if i == 1 || i == 3 {
        return CellClass::S1;
    }
    match i % 8 {
        4 => CellClass::S2,
        5 => CellClass::S3,
        6 => CellClass::S4,
        1 => CellClass::S5,
        2 => CellClass::S6,
        7 => CellClass::S7,
        0 => CellClass::S8,
        _ => CellClass::S9,
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SectorTerm {
    pub e: Mat,
    pub g: Mat,
    pub l: f64,
    pub r: f64,
    pub phi: Nonlinearity,
}

/// Right-hand side of one subsystem in the common local form.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LocalDynamics {
    pub a: Mat,
    pub b: Mat,
    /// `(j, Dᵢⱼ)` for every `j ∈ Iᵢ`, ascending in `j`.
    pub couplings: Vec<(usize, Mat)>,
    pub sector: Option<SectorTerm>,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SubsystemSpec {
    pub index: usize,
    pub state_dim: usize,
    pub input_dim: usize,
    pub neighbors: Vec<usize>,
    pub dynamics: LocalDynamics,
}

impl SubsystemSpec {
    fn scalar(index: usize, a: f64, b: Option<f64>, couplings: Vec<(usize, f64)>) -> Self {
        let neighbors = couplings.iter().map(|&(j, _)| j).collect();
        Self {
            index,
            state_dim: 1,
            input_dim: usize::from(b.is_some()),
            neighbors,
            dynamics: LocalDynamics {
                a: Mat::scalar(a),
                b: b.map_or_else(|| Mat::zeros(1, 0), Mat::scalar),
                couplings: couplings.into_iter().map(|(j, d)| (j, Mat::scalar(d))).collect(),
                sector: None,
            },
        }
    }
}

/// Materializes subsystem `i ≥ 1`.
pub fn generate_spec(gen: &NetworkGenerator, i: usize) -> Result<SubsystemSpec> {
    if i == 0 || i.checked_add(gen.bandwidth.max(4)).is_none() {
        return Err(Error::InvalidIndex(i));
    }
    let spec = match &gen.family {
        Family::LinearChain(c) => {
            let mut cpl = Vec::with_capacity(2);
            if i >= 2 {
                cpl.push((i - 1, c.lower.at(i)));
            }
            cpl.push((i + 1, c.upper.at(i)));
            SubsystemSpec::scalar(i, -c.diag.at(i), c.input.as_ref().map(|s| s.at(i)), cpl)
        }
        Family::Traffic(c) => {
            let class = classify_traffic_cell(i);
            let flow = |j: usize| c.speed.at(j) / c.length.at(j);
            let cpl = class
                .offsets()
                .iter()
                .map(|&o| {
                    let j = (i as isize + o) as usize;
                    (j, c.c * flow(j))
                })
                .collect();
            let a = -(flow(i) + class.exit_multiplier() * c.e);
            SubsystemSpec::scalar(i, a, Some(class.entry_multiplier() * c.r), cpl)
        }
        Family::CounterSlow => SubsystemSpec::scalar(i, -1.0 / i as f64, Some(1.0), Vec::new()),
        Family::CounterGain => SubsystemSpec::scalar(i, -1.0, Some(i as f64), Vec::new()),
        Family::Lure(c) => {
            let mut couplings = Vec::with_capacity(2);
            if i >= 2 {
                couplings.push((i - 1, c.d_lower.at(i).clone()));
            }
            couplings.push((i + 1, c.d_upper.at(i).clone()));
            let e = c.e.at(i).clone();
            let g = c.g.at(i).clone();
            let sector = (!e.is_zero() && !g.is_zero()).then(|| SectorTerm {
                e,
                g,
                l: c.sector_l.at(i),
                r: c.sector_r.at(i),
                phi: c.nonlinearity,
            });
            SubsystemSpec {
                index: i,
                state_dim: c.state_dim(),
                input_dim: c.input_dim(),
                neighbors: couplings.iter().map(|(j, _)| *j).collect(),
                dynamics: LocalDynamics { a: c.a.at(i).clone(), b: c.b.at(i).clone(), couplings, sector },
            }
        }
    };
    Ok(spec)
}

/// First `N` subsystems; neighbour states beyond `N` read as zero.
#[derive(Clone, Debug)]
pub struct TruncatedNetwork {
    specs: Vec<SubsystemSpec>,
    offsets: Vec<usize>,
    input_offsets: Vec<usize>,
    p: f64,
}

pub fn truncate(gen: &NetworkGenerator, n: usize) -> Result<TruncatedNetwork> {
    if n == 0 {
        return Err(Error::Parameter("truncation needs N ≥ 1".into()));
    }
    let specs = (1..=n).map(|i| generate_spec(gen, i)).collect::<Result<Vec<_>>>()?;
    Ok(TruncatedNetwork::from_specs(specs, gen.p))
}

impl TruncatedNetwork {
    pub fn from_specs(specs: Vec<SubsystemSpec>, p: f64) -> Self {
        let mut offsets = vec![0];
        let mut input_offsets = vec![0];
        for s in &specs {
            offsets.push(offsets.last().unwrap() + s.state_dim);
            input_offsets.push(input_offsets.last().unwrap() + s.input_dim);
        }
        Self { specs, offsets, input_offsets, p }
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn specs(&self) -> &[SubsystemSpec] {
        &self.specs
    }

    pub fn state_dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn input_dim(&self) -> usize {
        *self.input_offsets.last().unwrap()
    }

    /// Block boundaries: subsystem `i` occupies `offsets[i-1]..offsets[i]`.
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn input_offsets(&self) -> &[usize] {
        &self.input_offsets
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn block<'a>(&self, x: &'a [f64], i: usize) -> &'a [f64] {
        &x[self.offsets[i - 1]..self.offsets[i]]
    }

    /// Checked right-hand side evaluation.
    pub fn evaluate_rhs(&self, x: &[f64], u: &[f64], _t: f64) -> Result<Vec<f64>> {
        if x.len() != self.state_dim() {
            return Err(Error::Shape(format!("state has length {}, network needs {}", x.len(), self.state_dim())));
        }
        if u.len() != self.input_dim() {
            return Err(Error::Shape(format!("input has length {}, network needs {}", u.len(), self.input_dim())));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("state"));
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("input"));
        }
        let mut out = vec![0.0; x.len()];
        self.rhs_into(x, u, &mut out);
        Ok(out)
    }

    /// Unchecked evaluation used by the integrator; `out` is overwritten.
    pub fn rhs_into(&self, x: &[f64], u: &[f64], out: &mut [f64]) {
        let n = self.specs.len();
        for (k, spec) in self.specs.iter().enumerate() {
            let (lo, hi) = (self.offsets[k], self.offsets[k + 1]);
            let xi = &x[lo..hi];
            let oi = &mut out[lo..hi];
            oi.iter_mut().for_each(|v| *v = 0.0);
            let dy = &spec.dynamics;
            dy.a.mul_acc(xi, oi);
            if spec.input_dim > 0 {
                dy.b.mul_acc(&u[self.input_offsets[k]..self.input_offsets[k + 1]], oi);
            }
            for (j, d) in &dy.couplings {
                if *j <= n {
                    d.mul_acc(&x[self.offsets[j - 1]..self.offsets[*j]], oi);
                }
            }
            if let Some(s) = &dy.sector {
                let arg: f64 = s.g.as_slice().iter().zip(xi).map(|(g, v)| g * v).sum();
                let phi = s.phi.eval(arg, s.l, s.r);
                for (o, e) in oi.iter_mut().zip(s.e.as_slice()) {
                    *o += e * phi;
                }
            }
        }
    }
}

/// Human-readable label of the first failing family constraint, for errors.
pub fn describe_index_class(gen: &NetworkGenerator, i: usize) -> String {
    match &gen.family {
        Family::Traffic(_) => format!("cell {i} ({:?})", classify_traffic_cell(i)),
        _ => match gen.declared_schedule().or_else(|| gen.family.schedule()) {
            Some(s) if i > s.preamble => format!("indices ≡ {i} (mod {}) beyond {}", s.period, s.preamble),
            _ => format!("index {i}"),
        },
    }
}
