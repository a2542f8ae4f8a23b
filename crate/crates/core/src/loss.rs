//! Piecewise margin losses and their proximal steps.
//!
//! A loss is a list of pieces over the margin `u = y t`, each piece living on
//! a half-open interval `[lo, hi)` (closed on the left, so the zero-loss
//! region `u >= 1` of the built-ins contains its boundary). Pieces are
//! affine `a u + b`, quadratic `q u^2 + a u + b`, or logarithmic
//! `ln(a - u) + b`; lower semicontinuous combinations of these cover the
//! four reference losses:
//!
//! * `hinge`:         `1 - u` below 1, else 0
//! * `squared-hinge`: `(1 - u)^2` below 1, else 0
//! * `log-piecewise`: `ln(2 - u)` below 1, else 0
//! * `ramp2`:         `2 - u` below 0, `2 - 2u` on [0, 1), else 0
//!
//! The proximal step minimizes `L(y, alpha)/n + (beta/2)(alpha - e)^2` by
//! enumerating candidates: the stationary point of each piece (kept when it
//! falls inside the piece) plus every finite breakpoint. Working in margin
//! coordinates makes the label flip `(y, e) -> (-y, -e)` an exact symmetry.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HINGE: &str = "hinge";
pub const SQUARED_HINGE: &str = "squared-hinge";
pub const LOG_PIECEWISE: &str = "log-piecewise";
pub const RAMP2: &str = "ramp2";

/// Functional form of one loss piece as a function of the margin `u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PieceForm {
    /// `slope * u + intercept`
    Affine { slope: f64, intercept: f64 },
    /// `quad * u^2 + slope * u + intercept`
    Quadratic {
        quad: f64,
        slope: f64,
        intercept: f64,
    },
    /// `ln(offset - u) + shift`, defined for `u < offset`
    Log { offset: f64, shift: f64 },
}

/// One piece of a margin loss on `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub form: PieceForm,
}

/// A named piecewise margin loss. Pieces partition the real line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub name: String,
    pub pieces: Vec<Piece>,
}

impl LossSpec {
    pub fn new(name: impl Into<String>, pieces: Vec<Piece>) -> Result<Self> {
        let spec = LossSpec {
            name: name.into(),
            pieces,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks that the pieces partition the line and every form is usable.
    pub fn validate(&self) -> Result<()> {
        if self.pieces.is_empty() {
            return Err(Error::Config(format!("loss {:?} has no pieces", self.name)));
        }
        let first = &self.pieces[0];
        if first.lo != f64::NEG_INFINITY {
            return Err(Error::Config(format!(
                "loss {:?}: first piece must start at -inf",
                self.name
            )));
        }
        let last = self.pieces.last().unwrap();
        if last.hi != f64::INFINITY {
            return Err(Error::Config(format!(
                "loss {:?}: last piece must extend to +inf",
                self.name
            )));
        }
        for w in self.pieces.windows(2) {
            if w[0].hi != w[1].lo {
                return Err(Error::Config(format!(
                    "loss {:?}: pieces must be contiguous ({} != {})",
                    self.name, w[0].hi, w[1].lo
                )));
            }
        }
        for piece in &self.pieces {
            if piece.lo >= piece.hi || piece.lo.is_nan() || piece.hi.is_nan() {
                return Err(Error::Config(format!(
                    "loss {:?}: piece interval [{}, {}) is empty",
                    self.name, piece.lo, piece.hi
                )));
            }
            match piece.form {
                PieceForm::Affine { slope, intercept } => {
                    if !slope.is_finite() || !intercept.is_finite() {
                        return Err(Error::Config(format!(
                            "loss {:?}: non-finite affine coefficients",
                            self.name
                        )));
                    }
                }
                PieceForm::Quadratic {
                    quad,
                    slope,
                    intercept,
                } => {
                    if !quad.is_finite() || !slope.is_finite() || !intercept.is_finite() {
                        return Err(Error::Config(format!(
                            "loss {:?}: non-finite quadratic coefficients",
                            self.name
                        )));
                    }
                }
                PieceForm::Log { offset, shift } => {
                    if !offset.is_finite() || !shift.is_finite() {
                        return Err(Error::UnsupportedPiece(format!(
                            "loss {:?}: log piece needs finite parameters",
                            self.name
                        )));
                    }
                    if !(piece.hi.is_finite() && offset > piece.hi) {
                        return Err(Error::UnsupportedPiece(format!(
                            "loss {:?}: log piece requires offset > piece end so the \
                             loss stays bounded on the piece",
                            self.name
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Evaluates a single form at margin `u`.
fn form_value(form: &PieceForm, u: f64) -> f64 {
    match *form {
        PieceForm::Affine { slope, intercept } => slope * u + intercept,
        PieceForm::Quadratic {
            quad,
            slope,
            intercept,
        } => quad * u * u + slope * u + intercept,
        PieceForm::Log { offset, shift } => (offset - u).ln() + shift,
    }
}

/// The piece containing margin `u`. Intervals are closed on the left, so a
/// breakpoint belongs to the piece on its right.
fn piece_at(loss: &LossSpec, u: f64) -> &Piece {
    for piece in &loss.pieces {
        if u < piece.hi {
            return piece;
        }
    }
    self::last_piece(loss)
}

fn last_piece(loss: &LossSpec) -> &Piece {
    loss.pieces.last().expect("validated loss is nonempty")
}

/// Loss value `L(y, t)` at decision value `t` for label `y` in {-1, +1}.
pub fn loss_eval(loss: &LossSpec, y: f64, t: f64) -> f64 {
    debug_assert!(y == 1.0 || y == -1.0, "label must be +1 or -1");
    let u = y * t;
    form_value(&piece_at(loss, u).form, u)
}

/// Proximal step: the alpha minimizing
/// `L(y, alpha)/n + (beta/2)(alpha - e)^2`.
///
/// Ties on the objective are broken by smaller `|alpha - e|`, then by
/// smaller `alpha`. Candidate enumeration works in margin coordinates, so
/// `prox(-y, -e) = -prox(y, e)` holds exactly for the built-in losses.
pub fn prox_step(loss: &LossSpec, y: f64, e: f64, beta: f64, n: usize) -> Result<f64> {
    if !(y == 1.0 || y == -1.0) {
        return Err(Error::Config(format!("label must be +1 or -1, got {y}")));
    }
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::Config(format!("beta must be positive, got {beta}")));
    }
    if n == 0 {
        return Err(Error::Config("point count must be positive".into()));
    }
    if !e.is_finite() {
        return Err(Error::Config(format!(
            "prox target must be finite, got {e}"
        )));
    }
    let nf = n as f64;
    let e_m = y * e; // target in margin coordinates
    let mut candidates: Vec<f64> = Vec::with_capacity(3 * loss.pieces.len());
    for piece in &loss.pieces {
        push_stationary(piece, e_m, beta, nf, &mut candidates);
        if piece.lo.is_finite() {
            candidates.push(piece.lo);
        }
        if piece.hi.is_finite() {
            candidates.push(piece.hi);
        }
    }
    let mut best: Option<(f64, f64, f64)> = None; // (objective, |alpha - e|, alpha)
    for &u in &candidates {
        let alpha = y * u;
        let g = loss_eval(loss, y, alpha) / nf + 0.5 * beta * (alpha - e) * (alpha - e);
        if !g.is_finite() {
            continue;
        }
        let dist = (alpha - e).abs();
        let better = match best {
            None => true,
            Some((bg, bd, ba)) => g < bg || (g == bg && (dist < bd || (dist == bd && alpha < ba))),
        };
        if better {
            best = Some((g, dist, alpha));
        }
    }
    best.map(|(_, _, alpha)| alpha)
        .ok_or_else(|| Error::UnsupportedPiece(format!("loss {:?} admits no candidate", loss.name)))
}

/// Pushes the stationary points of `L/n + (beta/2)(u - e_m)^2` restricted to
/// one piece, keeping only points inside the closed piece interval.
fn push_stationary(piece: &Piece, e_m: f64, beta: f64, nf: f64, out: &mut Vec<f64>) {
    let mut push_if_member = |u: f64| {
        if u.is_finite() && u >= piece.lo && u <= piece.hi {
            out.push(u);
        }
    };
    match piece.form {
        PieceForm::Affine { slope, .. } => {
            push_if_member(e_m - slope / (beta * nf));
        }
        PieceForm::Quadratic { quad, slope, .. } => {
            let denom = 2.0 * quad / nf + beta;
            if denom > 0.0 {
                push_if_member((beta * e_m - slope / nf) / denom);
            }
        }
        PieceForm::Log { offset, .. } => {
            // (u - e_m)(offset - u) = 1/(beta n), a quadratic with roots
            // ((offset + e_m) +- sqrt((offset - e_m)^2 - 4/(beta n)))/2.
            let disc = (offset - e_m) * (offset - e_m) - 4.0 / (beta * nf);
            if disc >= 0.0 {
                let s = disc.sqrt();
                for u in [(offset + e_m - s) / 2.0, (offset + e_m + s) / 2.0] {
                    if u < offset {
                        push_if_member(u);
                    }
                }
            }
        }
    }
}

/// Grid-search oracle for the proximal objective, refined by iterated local
/// grids inside the piece containing the best coarse point. Exists to keep
/// the closed-form prox honest in tests.
#[allow(clippy::too_many_arguments)]
pub fn prox_oracle_grid(
    loss: &LossSpec,
    y: f64,
    e: f64,
    beta: f64,
    n: usize,
    lo: f64,
    hi: f64,
    step: f64,
) -> Result<f64> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::Config("oracle grid needs finite lo < hi".into()));
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::Config("oracle grid step must be positive".into()));
    }
    let need_lo = e.min(-3.0) - 2.0;
    let need_hi = e.max(3.0) + 2.0;
    if lo > need_lo || hi < need_hi {
        return Err(Error::Config(format!(
            "oracle grid [{lo}, {hi}] must cover [{need_lo}, {need_hi}]"
        )));
    }
    let nf = n as f64;
    let g = |alpha: f64| loss_eval(loss, y, alpha) / nf + 0.5 * beta * (alpha - e) * (alpha - e);

    let steps = ((hi - lo) / step).floor() as usize;
    let mut best_alpha = lo;
    let mut best_g = g(lo);
    for k in 1..=steps {
        let alpha = lo + k as f64 * step;
        let v = g(alpha);
        if v < best_g {
            best_g = v;
            best_alpha = alpha;
        }
    }

    // Refine within the piece that contains the coarse winner; three rounds
    // of 100x shrinking grids avoid any unimodality assumption.
    let piece = piece_at(loss, y * best_alpha);
    let (mut a, mut b) = alpha_interval(piece, y);
    a = a.max(best_alpha - step);
    b = b.min(best_alpha + step);
    for _ in 0..3 {
        if a >= b || a.is_nan() || b.is_nan() {
            break;
        }
        let fine = (b - a) / 100.0;
        for k in 0..=100 {
            let alpha = a + k as f64 * fine;
            let v = g(alpha);
            if v < best_g {
                best_g = v;
                best_alpha = alpha;
            }
        }
        a = (best_alpha - fine).max(a);
        b = (best_alpha + fine).min(b);
    }
    Ok(best_alpha)
}

/// The alpha interval on which a margin piece is active for label `y`.
fn alpha_interval(piece: &Piece, y: f64) -> (f64, f64) {
    if y > 0.0 {
        (piece.lo, piece.hi)
    } else {
        (-piece.hi, -piece.lo)
    }
}

/// The four reference losses.
pub mod builtin {
    use super::*;

    fn zero_tail(from: f64) -> Piece {
        Piece {
            lo: from,
            hi: f64::INFINITY,
            form: PieceForm::Affine {
                slope: 0.0,
                intercept: 0.0,
            },
        }
    }

    pub fn hinge() -> LossSpec {
        LossSpec::new(
            HINGE,
            vec![
                Piece {
                    lo: f64::NEG_INFINITY,
                    hi: 1.0,
                    form: PieceForm::Affine {
                        slope: -1.0,
                        intercept: 1.0,
                    },
                },
                zero_tail(1.0),
            ],
        )
        .expect("builtin hinge is valid")
    }

    pub fn squared_hinge() -> LossSpec {
        LossSpec::new(
            SQUARED_HINGE,
            vec![
                Piece {
                    lo: f64::NEG_INFINITY,
                    hi: 1.0,
                    form: PieceForm::Quadratic {
                        quad: 1.0,
                        slope: -2.0,
                        intercept: 1.0,
                    },
                },
                zero_tail(1.0),
            ],
        )
        .expect("builtin squared-hinge is valid")
    }

    pub fn log_piecewise() -> LossSpec {
        LossSpec::new(
            LOG_PIECEWISE,
            vec![
                Piece {
                    lo: f64::NEG_INFINITY,
                    hi: 1.0,
                    form: PieceForm::Log {
                        offset: 2.0,
                        shift: 0.0,
                    },
                },
                zero_tail(1.0),
            ],
        )
        .expect("builtin log-piecewise is valid")
    }

    pub fn ramp2() -> LossSpec {
        LossSpec::new(
            RAMP2,
            vec![
                Piece {
                    lo: f64::NEG_INFINITY,
                    hi: 0.0,
                    form: PieceForm::Affine {
                        slope: -1.0,
                        intercept: 2.0,
                    },
                },
                Piece {
                    lo: 0.0,
                    hi: 1.0,
                    form: PieceForm::Affine {
                        slope: -2.0,
                        intercept: 2.0,
                    },
                },
                zero_tail(1.0),
            ],
        )
        .expect("builtin ramp2 is valid")
    }

    /// All built-ins in canonical benchmark order.
    pub fn all() -> Vec<LossSpec> {
        vec![hinge(), squared_hinge(), log_piecewise(), ramp2()]
    }

    pub fn by_name(name: &str) -> Result<LossSpec> {
        match name {
            HINGE => Ok(hinge()),
            SQUARED_HINGE => Ok(squared_hinge()),
            LOG_PIECEWISE => Ok(log_piecewise()),
            RAMP2 => Ok(ramp2()),
            other => Err(Error::Config(format!(
                "unknown loss {other:?}; expected one of hinge, squared-hinge, \
                 log-piecewise, ramp2"
            ))),
        }
    }
}

/// Closed-form hinge prox from the per-label case analysis; used by tests to
/// cross-check the candidate enumeration.
pub fn hinge_prox_reference(y: f64, e: f64, beta: f64, n: usize) -> f64 {
    let bn = beta * n as f64;
    if y > 0.0 {
        if e < 1.0 - 1.0 / bn {
            e + 1.0 / bn
        } else if e < 1.0 {
            1.0
        } else {
            e
        }
    } else if e < -1.0 {
        e
    } else if e < -1.0 + 1.0 / bn {
        -1.0
    } else {
        e - 1.0 / bn
    }
}
