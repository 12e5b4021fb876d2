//! Problem parameters, admissibility and derived exponents.

use std::cmp::Ordering;
use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::symmetry::{SymmetryError, SymmetrySpec};

const FLOAT_TOL: f64 = 1e-12;
const MAX_DENOMINATOR: i64 = 1000;

/// Which of the existence hypotheses the caller claims for a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisClaims {
    pub h1: bool,
    pub h2: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub dim: usize,
    pub alpha: f64,
    pub p: f64,
    /// `λ` for the limit problem, `V∞` for the magnetic one.
    pub v_inf: f64,
    pub kappa: f64,
    pub c0: f64,
    pub rho: f64,
    pub epsilon_cutoff: f64,
    pub claims: HypothesisClaims,
    /// Permits `N = 2`; every report produced from such params is tagged.
    pub nonrigorous: bool,
}

impl ProblemParams {
    /// Reference configuration `N = 3, α = 1, p = 2` with unit `V∞`.
    pub fn reference() -> Self {
        Self {
            dim: 3,
            alpha: 1.0,
            p: 2.0,
            v_inf: 1.0,
            kappa: 0.5,
            c0: 0.5,
            rho: 1.0,
            epsilon_cutoff: 0.1,
            claims: HypothesisClaims::default(),
            nonrigorous: false,
        }
    }

    pub fn with_exponents(dim: usize, alpha: f64, p: f64) -> Self {
        Self { dim, alpha, p, ..Self::reference() }
    }

    /// Standing window `(2 − α/N, (2N − α)/(N − 2))`; the upper end is infinite for `N = 2`.
    pub fn standing_window(&self) -> (f64, f64) {
        let n = self.dim as f64;
        let lo = 2.0 - self.alpha / n;
        let hi = if self.dim > 2 { (2.0 * n - self.alpha) / (n - 2.0) } else { f64::INFINITY };
        (lo, hi)
    }

    /// `r = 2N/(2N − α)`.
    pub fn r(&self) -> f64 {
        let n = self.dim as f64;
        2.0 * n / (2.0 * n - self.alpha)
    }
}

/// Exact rational when the input is a small-denominator fraction, float otherwise.
#[derive(Clone, Copy, Debug)]
pub enum Num {
    Exact(Ratio<i64>),
    Float(f64),
}

impl Num {
    pub fn from_f64(x: f64) -> Self {
        if x.is_finite() {
            for q in 1..=MAX_DENOMINATOR {
                let a = (x * q as f64).round();
                if a.abs() < 1e15 && a / q as f64 == x {
                    return Num::Exact(Ratio::new(a as i64, q));
                }
            }
        }
        Num::Float(x)
    }

    pub fn int(n: i64) -> Self {
        Num::Exact(Ratio::from_integer(n))
    }

    pub fn to_f64(self) -> f64 {
        match self {
            Num::Exact(r) => *r.numer() as f64 / *r.denom() as f64,
            Num::Float(x) => x,
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, Num::Exact(_))
    }

    fn binop(self, o: Num, exact: fn(Ratio<i64>, Ratio<i64>) -> Ratio<i64>, float: fn(f64, f64) -> f64) -> Num {
        match (self, o) {
            (Num::Exact(a), Num::Exact(b)) => Num::Exact(exact(a, b)),
            _ => Num::Float(float(self.to_f64(), o.to_f64())),
        }
    }

    pub fn add(self, o: Num) -> Num {
        self.binop(o, |a, b| a + b, |a, b| a + b)
    }
    pub fn sub(self, o: Num) -> Num {
        self.binop(o, |a, b| a - b, |a, b| a - b)
    }
    pub fn mul(self, o: Num) -> Num {
        self.binop(o, |a, b| a * b, |a, b| a * b)
    }
    pub fn div(self, o: Num) -> Num {
        self.binop(o, |a, b| a / b, |a, b| a / b)
    }

    /// Exact comparison for two rationals, tolerance `1e−12` otherwise.
    pub fn compare(self, o: Num) -> Ordering {
        match (self, o) {
            (Num::Exact(a), Num::Exact(b)) => a.cmp(&b),
            _ => {
                let (a, b) = (self.to_f64(), o.to_f64());
                if (a - b).abs() <= FLOAT_TOL * a.abs().max(b.abs()).max(1.0) {
                    Ordering::Equal
                } else if a < b {
                    Ordering::Less
                } else {
                    Ordering::Greater
                }
            }
        }
    }
}

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Num::Exact(r) if *r.denom() == 1 => write!(f, "{}", r.numer()),
            Num::Exact(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Num::Float(x) => write!(f, "{x}"),
        }
    }
}

/// One end of a real interval.
#[derive(Clone, Copy, Debug)]
pub enum Bound {
    Finite { value: Num, closed: bool },
    Infinite,
}

#[derive(Clone, Copy, Debug)]
pub struct Interval {
    pub lo: Bound,
    pub hi: Bound,
}

impl Interval {
    fn new(lo: Num, lo_closed: bool, hi: Option<Num>, hi_closed: bool) -> Self {
        Self {
            lo: Bound::Finite { value: lo, closed: lo_closed },
            hi: match hi {
                Some(v) => Bound::Finite { value: v, closed: hi_closed },
                None => Bound::Infinite,
            },
        }
    }

    pub fn is_empty(&self) -> bool {
        match (self.lo, self.hi) {
            (Bound::Finite { value: a, closed: ca }, Bound::Finite { value: b, closed: cb }) => match a.compare(b) {
                Ordering::Greater => true,
                Ordering::Equal => !(ca && cb),
                Ordering::Less => false,
            },
            _ => false,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let x = Num::from_f64(x);
        let above = match self.lo {
            Bound::Finite { value, closed } => match x.compare(value) {
                Ordering::Greater => true,
                Ordering::Equal => closed,
                Ordering::Less => false,
            },
            Bound::Infinite => true,
        };
        let below = match self.hi {
            Bound::Finite { value, closed } => match x.compare(value) {
                Ordering::Less => true,
                Ordering::Equal => closed,
                Ordering::Greater => false,
            },
            Bound::Infinite => true,
        };
        above && below
    }

    pub fn intersect(&self, o: &Interval) -> Interval {
        let lo = match (self.lo, o.lo) {
            (Bound::Infinite, b) | (b, Bound::Infinite) => b,
            (Bound::Finite { value: a, closed: ca }, Bound::Finite { value: b, closed: cb }) => match a.compare(b) {
                Ordering::Greater => self.lo,
                Ordering::Less => o.lo,
                Ordering::Equal => Bound::Finite { value: a, closed: ca && cb },
            },
        };
        let hi = match (self.hi, o.hi) {
            (Bound::Infinite, b) | (b, Bound::Infinite) => b,
            (Bound::Finite { value: a, closed: ca }, Bound::Finite { value: b, closed: cb }) => match a.compare(b) {
                Ordering::Less => self.hi,
                Ordering::Greater => o.hi,
                Ordering::Equal => Bound::Finite { value: a, closed: ca && cb },
            },
        };
        Interval { lo, hi }
    }

    /// Endpoints as floats; an infinite upper end is `f64::INFINITY`.
    pub fn endpoints(&self) -> (f64, f64) {
        let f = |b: Bound, inf: f64| match b {
            Bound::Finite { value, .. } => value.to_f64(),
            Bound::Infinite => inf,
        };
        (f(self.lo, f64::NEG_INFINITY), f(self.hi, f64::INFINITY))
    }

    pub fn closedness(&self) -> (bool, bool) {
        let c = |b: Bound| matches!(b, Bound::Finite { closed: true, .. });
        (c(self.lo), c(self.hi))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.lo {
            Bound::Finite { value, closed } => write!(f, "{}{}", if closed { "[" } else { "(" }, value)?,
            Bound::Infinite => write!(f, "(-inf")?,
        }
        match self.hi {
            Bound::Finite { value, closed } => write!(f, ", {}{}", value, if closed { "]" } else { ")" }),
            Bound::Infinite => write!(f, ", inf)"),
        }
    }
}

impl Serialize for Interval {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Derived exponents and the four intervals defining `Λ_{α,p}`.
#[derive(Clone, Debug, Serialize)]
pub struct ExponentSet {
    pub r: f64,
    pub pr: f64,
    pub intervals: Vec<Interval>,
    /// `None` when the intersection is empty.
    pub intersection: Option<Interval>,
    /// First empty pairwise intersection `(i, j)` (0-based) when the set is empty.
    pub first_empty_pair: Option<(usize, usize)>,
    pub exact: bool,
}

impl ExponentSet {
    pub fn is_empty(&self) -> bool {
        self.intersection.is_none()
    }
}

/// The four intervals of `Λ_{α,p}` and their intersection.
pub fn lambda_set(params: &ProblemParams) -> ExponentSet {
    let n = Num::int(params.dim as i64);
    let a = Num::from_f64(params.alpha);
    let p = Num::from_f64(params.p);
    let one = Num::int(1);
    let two = Num::int(2);

    let sob = if params.dim > 2 { Some(two.mul(n).div(n.sub(two))) } else { None };
    let i1 = Interval::new(two, true, sob, true);
    let i2 = Interval::new(p, false, Some(p.mul(n).div(n.sub(a))), false);
    let d3 = n.add(two).sub(a);
    let i3 = Interval::new(two.mul(p).sub(two).mul(n).div(d3), false, Some(two.mul(p).sub(one).mul(n).div(d3)), true);
    let i4 = Interval::new(two.mul(p).sub(one).mul(n).div(two.mul(n).sub(a)), true, None, false);
    let intervals = vec![i1, i2, i3, i4];

    let mut first_empty_pair = None;
    'outer: for i in 0..4 {
        for j in (i + 1)..4 {
            if intervals[i].intersect(&intervals[j]).is_empty() {
                first_empty_pair = Some((i, j));
                break 'outer;
            }
        }
    }
    let all = intervals[1..].iter().fold(intervals[0], |acc, iv| acc.intersect(iv));
    let intersection = if all.is_empty() { None } else { Some(all) };

    let r = params.r();
    ExponentSet { r, pr: params.p * r, intervals, intersection, first_empty_pair, exact: a.is_exact() && p.is_exact() }
}

/// `δ_τ` for the cyclic rotation action: `sin(π/k)` for `k ≥ 2`, `1` for the trivial group.
pub fn delta_tau(sym: &SymmetrySpec) -> Result<f64, SymmetryError> {
    sym.check()?;
    Ok(match sym.k {
        1 | 2 => 1.0,
        4 => std::f64::consts::FRAC_1_SQRT_2,
        6 => 0.5,
        k => (std::f64::consts::PI / k as f64).sin(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub code: String,
    pub message: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub admissible: bool,
    pub violations: Vec<Violation>,
    pub nonrigorous: bool,
    pub standing_window: String,
    pub lambda_set: String,
    pub lambda_intervals: Vec<Interval>,
    pub first_empty_pair: Option<String>,
    pub r: f64,
    pub pr: f64,
    pub delta_tau: Option<f64>,
}

/// Checks every standing assumption and each claimed hypothesis; never aborts.
pub fn validate(params: &ProblemParams, sym: Option<&SymmetrySpec>) -> ValidationReport {
    let mut v = Vec::new();
    let mut push = |code: &str, message: String| v.push(Violation { code: code.into(), message });
    let n = params.dim as f64;

    if params.dim < 2 {
        push("dim", format!("N >= 2 required, got N = {}", params.dim));
    } else if params.dim == 2 && !params.nonrigorous {
        push("dim", "N >= 3 required (N = 2 needs --nonrigorous)".into());
    }
    if !(params.alpha > 0.0 && params.alpha < n) {
        push("alpha", format!("0 < alpha < N = {n} violated by alpha = {}", params.alpha));
    }
    let (lo, hi) = params.standing_window();
    let (lo_s, hi_s) = window_labels(params);
    if !(params.p > lo) {
        push("p_lower", format!("p > 2 - alpha/N = {lo_s} violated by p = {}", params.p));
    }
    if !(params.p < hi) {
        push("p_upper", format!("p < (2N - alpha)/(N - 2) = {hi_s} violated by p = {}", params.p));
    }
    if !(params.v_inf > 0.0) {
        push("v_inf", format!("V_inf > 0 violated by {}", params.v_inf));
    }
    if !(params.kappa > 0.0) {
        push("kappa", format!("kappa > 0 violated by {}", params.kappa));
    }
    if !(params.c0 >= 0.0) {
        push("c0", format!("c0 >= 0 violated by {}", params.c0));
    }
    if !(params.rho > 0.0) {
        push("rho", format!("rho > 0 violated by {}", params.rho));
    }
    if !(params.epsilon_cutoff > 0.0 && params.epsilon_cutoff < 1.0) {
        push("epsilon", format!("0 < epsilon < 1 violated by {}", params.epsilon_cutoff));
    }

    let set = lambda_set(params);
    if params.claims.h1 {
        if !(params.p >= 2.0) {
            push("h1_p", format!("H1 requires p >= 2, got p = {}", params.p));
        }
        if set.is_empty() {
            let pair = set.first_empty_pair.map(|(i, j)| format!("{} cap {}", set.intervals[i], set.intervals[j]));
            push("h1_lambda", format!("H1 requires Lambda nonempty; empty intersection {}", pair.unwrap_or_default()));
        }
    }

    let mut dt = None;
    if let Some(s) = sym {
        if s.plane.0 >= params.dim || s.plane.1 >= params.dim {
            push("plane", format!("rotation plane {:?} outside dimension {}", s.plane, params.dim));
        }
        match delta_tau(s) {
            Ok(d) => dt = Some(d),
            Err(e) => push("symmetry", e.to_string()),
        }
    }
    if params.claims.h2 {
        if !(params.c0 > 0.0) {
            push("h2_c0", format!("H2 requires c0 > 0, got {}", params.c0));
        }
        match dt {
            Some(d) => {
                let bound = 2.0 * d * params.v_inf.max(0.0).sqrt();
                if !(params.kappa < bound) {
                    push("h2_kappa", format!("H2 requires kappa < 2 delta_tau sqrt(V_inf) = {bound}, got {}", params.kappa));
                }
            }
            None => push("h2_symmetry", "H2 requires a valid symmetry spec".into()),
        }
    }

    ValidationReport {
        admissible: v.is_empty(),
        violations: v,
        nonrigorous: params.nonrigorous || params.dim == 2,
        standing_window: format!("({lo_s}, {hi_s})"),
        lambda_set: match &set.intersection {
            Some(iv) => iv.to_string(),
            None => "empty".into(),
        },
        first_empty_pair: set.first_empty_pair.map(|(i, j)| format!("{} cap {}", set.intervals[i], set.intervals[j])),
        lambda_intervals: set.intervals.clone(),
        r: set.r,
        pr: set.pr,
        delta_tau: dt,
    }
}

fn window_labels(params: &ProblemParams) -> (String, String) {
    let n = Num::int(params.dim as i64);
    let a = Num::from_f64(params.alpha);
    let two = Num::int(2);
    let lo = two.sub(a.div(n));
    let hi = if params.dim > 2 { two.mul(n).sub(a).div(n.sub(two)).to_string() } else { "inf".into() };
    (lo.to_string(), hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(lo: f64, lc: bool, hi: f64, hc: bool) -> Interval {
        Interval::new(Num::from_f64(lo), lc, Some(Num::from_f64(hi)), hc)
    }

    #[test]
    fn rational_detection() {
        assert!(Num::from_f64(2.25).is_exact());
        assert_eq!(Num::from_f64(2.25).to_string(), "9/4");
        assert!(!Num::from_f64(std::f64::consts::PI).is_exact());
    }

    #[test]
    fn closed_endpoints_survive_intersection() {
        let a = iv(1.0, true, 2.0, true);
        let b = iv(2.0, true, 3.0, false);
        let c = a.intersect(&b);
        assert!(!c.is_empty());
        assert!(c.contains(2.0));
        let d = iv(2.0, false, 3.0, false);
        assert!(a.intersect(&d).is_empty());
    }

    #[test]
    fn window_labels_are_exact() {
        let p = ProblemParams::reference();
        assert_eq!(validate(&p, None).standing_window, "(5/3, 5)");
    }
}
