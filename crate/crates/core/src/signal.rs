//! Time-parameterised control laws on `[0, T]`.
//!
//! A signal is stored as knots `t_0 = 0 < t_1 < ... < t_n = T` with a linear
//! piece on each `[t_i, t_{i+1})`. Piecewise-constant signals have equal end
//! values on every piece; sampled signals are continuous across knots.
//! Evaluating at a knot returns the right limit (the left limit at `T`).

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Control;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignalKind {
    PiecewiseConstant,
    SampledLinear,
    /// Linear pieces with jumps allowed at knots; produced by combining the
    /// two other kinds.
    PiecewiseLinear,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SignalRepr", into = "SignalRepr")]
pub struct ControlSignal {
    knots: Vec<f64>,
    starts: Vec<Control>,
    ends: Vec<Control>,
}

/// One linear piece of a signal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Piece {
    pub t0: f64,
    pub t1: f64,
    pub start: Control,
    pub end: Control,
}

impl Piece {
    /// Evaluates the linear law of this piece; valid on the closed interval.
    pub fn at(&self, t: f64) -> Control {
        if self.start == self.end {
            return self.start;
        }
        self.start.lerp(&self.end, (t - self.t0) / (self.t1 - self.t0))
    }
}

fn check_knots(knots: &[f64]) -> Result<()> {
    if knots.len() < 2 {
        return Err(Error::InvalidSignal("need at least two breakpoints"));
    }
    if knots[0] != 0.0 {
        return Err(Error::InvalidSignal("first breakpoint must be 0"));
    }
    if knots.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidSignal("breakpoints must be finite"));
    }
    if knots.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidSignal("breakpoints must be strictly ascending"));
    }
    Ok(())
}

fn check_values(values: &[Control]) -> Result<()> {
    if values.iter().all(Control::is_finite) {
        Ok(())
    } else {
        Err(Error::InvalidSignal("control values must be finite"))
    }
}

impl ControlSignal {
    pub fn piecewise_linear(knots: Vec<f64>, starts: Vec<Control>, ends: Vec<Control>) -> Result<Self> {
        check_knots(&knots)?;
        if starts.len() + 1 != knots.len() || ends.len() != starts.len() {
            return Err(Error::InvalidSignal("need one start and one end value per interval"));
        }
        check_values(&starts)?;
        check_values(&ends)?;
        Ok(ControlSignal { knots, starts, ends })
    }

    /// `values[i]` applies on `[breakpoints[i], breakpoints[i+1])`.
    pub fn piecewise_constant(breakpoints: Vec<f64>, values: Vec<Control>) -> Result<Self> {
        let ends = values.clone();
        Self::piecewise_linear(breakpoints, values, ends)
    }

    /// Linear interpolation between `(times[i], values[i])` samples.
    pub fn sampled_linear(times: Vec<f64>, values: Vec<Control>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::InvalidSignal("need one value per sample time"));
        }
        if values.is_empty() {
            return Err(Error::InvalidSignal("need at least two breakpoints"));
        }
        let starts = values[..values.len() - 1].to_vec();
        let ends = values[1..].to_vec();
        Self::piecewise_linear(times, starts, ends)
    }

    pub fn constant(u: Control, duration: f64) -> Result<Self> {
        Self::piecewise_constant(alloc::vec![0.0, duration], alloc::vec![u])
    }

    pub fn zero(duration: f64) -> Result<Self> {
        Self::constant(Control::ZERO, duration)
    }

    /// Samples `f` at `n + 1` equispaced times and interpolates linearly.
    pub fn sampled_from_fn(duration: f64, n: usize, f: impl Fn(f64) -> Control) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSignal("need at least one interval"));
        }
        let times: Vec<f64> = (0..=n).map(|i| duration * i as f64 / n as f64).collect();
        let values = times.iter().map(|&t| f(t)).collect();
        Self::sampled_linear(times, values)
    }

    pub fn duration(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    pub fn piece(&self, i: usize) -> Piece {
        Piece {
            t0: self.knots[i],
            t1: self.knots[i + 1],
            start: self.starts[i],
            end: self.ends[i],
        }
    }

    pub fn pieces(&self) -> impl Iterator<Item = Piece> + '_ {
        (0..self.len()).map(move |i| self.piece(i))
    }

    pub fn kind(&self) -> SignalKind {
        if self.starts == self.ends {
            SignalKind::PiecewiseConstant
        } else if self.ends[..self.len() - 1] == self.starts[1..] {
            SignalKind::SampledLinear
        } else {
            SignalKind::PiecewiseLinear
        }
    }

    /// Index of the piece containing `t` (right-continuous; the last piece
    /// for `t >= T`).
    pub fn piece_index(&self, t: f64) -> usize {
        let n = self.len();
        if t <= 0.0 {
            return 0;
        }
        // number of interior knots <= t
        let k = self.knots[1..n].partition_point(|&s| s <= t);
        k.min(n - 1)
    }

    /// Control at time `t`, clamped to `[0, T]`.
    pub fn eval(&self, t: f64) -> Control {
        let t = t.clamp(0.0, self.duration());
        self.piece(self.piece_index(t)).at(t)
    }

    /// Sup-norms `(|h_par|, |h_perp|)`; exact because pieces are linear.
    pub fn sup_norms(&self) -> (f64, f64) {
        self.starts
            .iter()
            .chain(self.ends.iter())
            .fold((0.0_f64, 0.0_f64), |(a, b), u| (a.max(u.h_par.abs()), b.max(u.h_perp.abs())))
    }

    /// Max over both components.
    pub fn sup_norm(&self) -> f64 {
        let (a, b) = self.sup_norms();
        a.max(b)
    }

    /// `self` followed by `other`, shifted to start at `self.duration()`.
    pub fn concat(&self, other: &ControlSignal) -> ControlSignal {
        let offset = self.duration();
        let mut knots = self.knots.clone();
        knots.extend(other.knots[1..].iter().map(|t| t + offset));
        let mut starts = self.starts.clone();
        starts.extend_from_slice(&other.starts);
        let mut ends = self.ends.clone();
        ends.extend_from_slice(&other.ends);
        ControlSignal { knots, starts, ends }
    }

    /// Pointwise sum of two signals of the same duration.
    pub fn add(&self, other: &ControlSignal) -> Result<ControlSignal> {
        let duration = self.duration();
        if (other.duration() - duration).abs() > 1e-12 * duration.max(1.0) {
            return Err(Error::InvalidSignal("cannot add signals of different durations"));
        }
        let mut knots: Vec<f64> = self.knots.iter().chain(other.knots[1..].iter()).copied().collect();
        knots.sort_by(|a, b| a.total_cmp(b));
        knots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * duration.max(1.0));
        let last = knots.len() - 1;
        knots[last] = duration;
        let mut starts = Vec::with_capacity(last);
        let mut ends = Vec::with_capacity(last);
        for w in knots.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let a = self.piece(self.piece_index(mid));
            let b = other.piece(other.piece_index(mid));
            starts.push(a.at(w[0]) + b.at(w[0]));
            ends.push(a.at(w[1]) + b.at(w[1]));
        }
        Ok(ControlSignal { knots, starts, ends })
    }

    /// Restriction to `[t0, t1]`, re-based to start at zero.
    pub fn window(&self, t0: f64, t1: f64) -> Result<ControlSignal> {
        if !(0.0 <= t0 && t0 < t1 && t1 <= self.duration() * (1.0 + 1e-12)) {
            return Err(Error::InvalidSignal("window outside signal support"));
        }
        let mut knots = alloc::vec![0.0];
        let mut starts = Vec::new();
        let mut ends = Vec::new();
        for piece in self.pieces() {
            let a = piece.t0.max(t0);
            let b = piece.t1.min(t1);
            if b - a <= 1e-12 * self.duration() {
                continue;
            }
            knots.push(b - t0);
            starts.push(piece.at(a));
            ends.push(piece.at(b));
        }
        Self::piecewise_linear(knots, starts, ends)
    }
}

/// Serialized form: compact for the two common kinds, explicit otherwise.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum SignalRepr {
    PiecewiseConstant {
        breakpoints: Vec<f64>,
        values: Vec<Control>,
    },
    SampledLinear {
        breakpoints: Vec<f64>,
        values: Vec<Control>,
    },
    PiecewiseLinear {
        breakpoints: Vec<f64>,
        starts: Vec<Control>,
        ends: Vec<Control>,
    },
}

impl TryFrom<SignalRepr> for ControlSignal {
    type Error = Error;

    fn try_from(r: SignalRepr) -> Result<Self> {
        match r {
            SignalRepr::PiecewiseConstant { breakpoints, values } => {
                ControlSignal::piecewise_constant(breakpoints, values)
            }
            SignalRepr::SampledLinear { breakpoints, values } => {
                ControlSignal::sampled_linear(breakpoints, values)
            }
            SignalRepr::PiecewiseLinear {
                breakpoints,
                starts,
                ends,
            } => ControlSignal::piecewise_linear(breakpoints, starts, ends),
        }
    }
}

impl From<ControlSignal> for SignalRepr {
    fn from(s: ControlSignal) -> Self {
        match s.kind() {
            SignalKind::PiecewiseConstant => SignalRepr::PiecewiseConstant {
                breakpoints: s.knots,
                values: s.starts,
            },
            SignalKind::SampledLinear => {
                let mut values = s.starts;
                values.push(s.ends[s.ends.len() - 1]);
                SignalRepr::SampledLinear {
                    breakpoints: s.knots,
                    values,
                }
            }
            SignalKind::PiecewiseLinear => SignalRepr::PiecewiseLinear {
                breakpoints: s.knots,
                starts: s.starts,
                ends: s.ends,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn c(a: f64, b: f64) -> Control {
        Control::new(a, b)
    }

    #[test]
    fn piecewise_constant_takes_right_limit() {
        let s = ControlSignal::piecewise_constant(vec![0.0, 1.0, 2.0], vec![c(1.0, 0.0), c(2.0, 0.0)]).unwrap();
        assert_eq!(s.eval(0.0), c(1.0, 0.0));
        assert_eq!(s.eval(0.999), c(1.0, 0.0));
        assert_eq!(s.eval(1.0), c(2.0, 0.0));
        assert_eq!(s.eval(2.0), c(2.0, 0.0));
        assert_eq!(s.eval(5.0), c(2.0, 0.0));
        assert_eq!(s.kind(), SignalKind::PiecewiseConstant);
    }

    #[test]
    fn sampled_signal_interpolates() {
        let s = ControlSignal::sampled_linear(vec![0.0, 1.0, 3.0], vec![c(0.0, 0.0), c(1.0, -1.0), c(0.0, 1.0)]).unwrap();
        assert_eq!(s.eval(0.5), c(0.5, -0.5));
        assert_eq!(s.eval(2.0), c(0.5, 0.0));
        assert_eq!(s.eval(3.0), c(0.0, 1.0));
        assert_eq!(s.kind(), SignalKind::SampledLinear);
        assert_eq!(s.sup_norms(), (1.0, 1.0));
    }

    #[test]
    fn rejects_malformed_breakpoints() {
        assert!(ControlSignal::piecewise_constant(vec![0.0, 1.0, 1.0], vec![c(0.0, 0.0); 2]).is_err());
        assert!(ControlSignal::piecewise_constant(vec![0.5, 1.0], vec![c(0.0, 0.0)]).is_err());
        assert!(ControlSignal::piecewise_constant(vec![0.0, 1.0], vec![c(f64::NAN, 0.0)]).is_err());
        assert!(ControlSignal::sampled_linear(vec![0.0, 1.0], vec![c(0.0, 0.0)]).is_err());
    }

    #[test]
    fn sum_of_constant_and_sampled() {
        let a = ControlSignal::piecewise_constant(vec![0.0, 0.5, 1.0], vec![c(1.0, 0.0), c(-1.0, 0.0)]).unwrap();
        let b = ControlSignal::sampled_linear(vec![0.0, 1.0], vec![c(0.0, 0.0), c(0.0, 2.0)]).unwrap();
        let s = a.add(&b).unwrap();
        assert_eq!(s.knots(), &[0.0, 0.5, 1.0]);
        assert_eq!(s.eval(0.25), c(1.0, 0.5));
        assert_eq!(s.eval(0.5), c(-1.0, 1.0));
        assert_eq!(s.kind(), SignalKind::PiecewiseLinear);
    }

    #[test]
    fn concat_and_window_invert() {
        let a = ControlSignal::constant(c(1.0, 2.0), 0.5).unwrap();
        let b = ControlSignal::sampled_linear(vec![0.0, 0.5], vec![c(0.0, 0.0), c(1.0, 1.0)]).unwrap();
        let ab = a.concat(&b);
        assert_eq!(ab.duration(), 1.0);
        assert_eq!(ab.window(0.5, 1.0).unwrap(), b);
        assert_eq!(ab.window(0.0, 0.5).unwrap(), a);
    }
}
