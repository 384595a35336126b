//! Match tallies and maximum-likelihood Elo under the Davidson draw model.
//!
//! With `t = (r − r_opp)·ln10/400` and draw parameter `ν ≥ 0`:
//!
//! ```text
//! P(win)  = e^{t/2} / (2cosh(t/2) + ν)
//! P(draw) = ν       / (2cosh(t/2) + ν)
//! P(loss) = e^{−t/2} / (2cosh(t/2) + ν)
//! ```
//!
//! At `ν = 0` the expected score is `1/(1 + 10^{−d/400})`. The rating is the
//! maximizer of the profile likelihood over `ν`; the 95% interval is where the
//! profile log-likelihood lies within `χ²₁(0.95)/2` of its maximum.

use core::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct MatchTally {
    pub wins: u32,
    pub draws: u32,
    pub losses: u32,
}

impl MatchTally {
    pub const fn new(wins: u32, draws: u32, losses: u32) -> Self {
        MatchTally { wins, draws, losses }
    }

    pub fn games(&self) -> u32 {
        self.wins + self.draws + self.losses
    }

    pub fn points(&self) -> f64 {
        self.wins as f64 + 0.5 * self.draws as f64
    }

    /// The same games seen from the opponent's side.
    pub fn swapped(&self) -> Self {
        MatchTally::new(self.losses, self.draws, self.wins)
    }

    pub fn add(&mut self, other: MatchTally) {
        self.wins += other.wins;
        self.draws += other.draws;
        self.losses += other.losses;
    }
}

/// `W--D--L (points)`, e.g. `50--7--43 (53.5)`.
impl fmt::Display for MatchTally {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}--{}--{} (", self.wins, self.draws, self.losses)?;
        let p = self.points();
        if p.fract() == 0.0 {
            write!(f, "{})", p as u64)
        } else {
            write!(f, "{p:.1})")
        }
    }
}

impl core::str::FromStr for MatchTally {
    type Err = ();

    /// Accepts `W--D--L` with an optional `(points)` suffix, which must agree.
    fn from_str(s: &str) -> Result<Self, ()> {
        let s = s.trim();
        let (counts, points) = match s.split_once('(') {
            Some((c, p)) => (c.trim(), Some(p.trim().strip_suffix(')').ok_or(())?)),
            None => (s, None),
        };
        let mut it = counts.split("--").map(|x| x.trim().parse::<u32>());
        let t = match (it.next(), it.next(), it.next(), it.next()) {
            (Some(Ok(w)), Some(Ok(d)), Some(Ok(l)), None) => MatchTally::new(w, d, l),
            _ => return Err(()),
        };
        if let Some(p) = points {
            let p: f64 = p.parse().map_err(|_| ())?;
            if p != t.points() {
                return Err(());
            }
        }
        Ok(t)
    }
}

/// Expected score at rating difference `d` (logistic, base 10, scale 400).
pub fn expected_score(d: f64) -> f64 {
    1.0 / (1.0 + libm::pow(10.0, -d / 400.0))
}

/// Rating difference whose logistic expected score is `score ∈ (0, 1)`.
pub fn logistic_gap(score: f64) -> f64 {
    400.0 * libm::log10(score / (1.0 - score))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum RatingError {
    #[error("no games to rate")]
    NoGames,
    #[error("opponent rating is not finite")]
    BadOpponent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EloEstimate {
    /// Maximum-likelihood rating; `±∞` when every game was won or lost.
    pub rating: f64,
    /// Lower end of the 95% profile-likelihood interval (may be `−∞`).
    pub lower: f64,
    /// Upper end of the 95% profile-likelihood interval (may be `+∞`).
    pub upper: f64,
    /// Fitted Davidson draw parameter.
    pub draw_param: f64,
    pub games: u32,
    pub points: f64,
}

impl EloEstimate {
    pub fn is_bounded(&self) -> bool {
        self.rating.is_finite()
    }
}

const HALF_CHI2_95: f64 = 3.841_458_820_694_124 / 2.0;
const SPAN: f64 = 4000.0;
const NU_MAX: f64 = 1e9;
/// Distance from the search bracket below which the maximum counts as unbounded.
const EDGE: f64 = 1.0;

struct Games<'a>(&'a [(f64, MatchTally)]);

impl Games<'_> {
    fn t(r: f64, opp: f64) -> f64 {
        (r - opp) * core::f64::consts::LN_10 / 400.0
    }

    fn draws(&self) -> u32 {
        self.0.iter().map(|(_, t)| t.draws).sum()
    }

    fn loglik(&self, r: f64, nu: f64) -> f64 {
        let mut ll = 0.0;
        for &(opp, tally) in self.0 {
            let t = Self::t(r, opp);
            let h = 0.5 * t;
            // ln(2cosh(h) + ν), stable for large |h|
            let a = h.abs();
            let denom = a + libm::log(1.0 + libm::exp(-2.0 * a) + nu * libm::exp(-a));
            ll += tally.wins as f64 * h - tally.losses as f64 * h - tally.games() as f64 * denom;
            if tally.draws > 0 {
                ll += tally.draws as f64 * libm::log(nu);
            }
        }
        ll
    }

    /// `argmax_ν loglik(r, ν)`; the score `D/ν − Σ n_j/(2cosh_j + ν)` is decreasing.
    fn best_nu(&self, r: f64) -> f64 {
        let d = self.draws() as f64;
        if d == 0.0 {
            return 0.0;
        }
        let score = |nu: f64| -> f64 {
            let mut s = d / nu;
            for &(opp, tally) in self.0 {
                let h = 0.5 * Self::t(r, opp);
                s -= tally.games() as f64 / (2.0 * libm::cosh(h) + nu);
            }
            s
        };
        let (mut lo, mut hi) = (-30.0f64, libm::log(NU_MAX));
        if score(libm::exp(hi)) > 0.0 {
            return NU_MAX;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if score(libm::exp(mid)) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        libm::exp(0.5 * (lo + hi))
    }

    fn profile(&self, r: f64) -> (f64, f64) {
        let nu = self.best_nu(r);
        (self.loglik(r, nu), nu)
    }
}

/// Golden-section maximization of a unimodal `f` on `[a, b]`.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (libm::sqrt(5.0) - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Point where monotone `f` crosses `target` between `inside` (above) and
/// `outside` (below); `None` if `f(outside)` is still above.
fn crossing(f: impl Fn(f64) -> f64, target: f64, mut inside: f64, mut outside: f64) -> Option<f64> {
    if f(outside) > target {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (inside + outside);
        if f(mid) > target {
            inside = mid;
        } else {
            outside = mid;
        }
        if (inside - outside).abs() < 1e-9 {
            break;
        }
    }
    Some(0.5 * (inside + outside))
}

/// Rating of one player from tallies against opponents of known rating.
pub fn elo_estimate(tallies: &[(f64, MatchTally)]) -> Result<EloEstimate, RatingError> {
    if tallies.iter().any(|(r, _)| !r.is_finite()) {
        return Err(RatingError::BadOpponent);
    }
    let mut total = MatchTally::default();
    for (_, t) in tallies {
        total.add(*t);
    }
    if total.games() == 0 {
        return Err(RatingError::NoGames);
    }
    let g = Games(tallies);
    let lo_r = tallies.iter().map(|t| t.0).fold(f64::INFINITY, f64::min) - SPAN;
    let hi_r = tallies.iter().map(|t| t.0).fold(f64::NEG_INFINITY, f64::max) + SPAN;
    let prof = |r: f64| g.profile(r).0;

    let r_hat = golden_max(prof, lo_r, hi_r, 1e-7);
    // A maximum pinned to the bracket edge means the likelihood keeps rising
    // toward ±∞: every game won or lost, or (one opponent) no wins or no
    // losses at all. The interval is then one-sided against the supremum.
    if r_hat - lo_r < EDGE || hi_r - r_hat < EDGE {
        let up = hi_r - r_hat < EDGE;
        let edge = if up { hi_r } else { lo_r };
        let (sup, nu) = g.profile(edge);
        let target = sup - HALF_CHI2_95;
        let inner = if up { lo_r - SPAN } else { hi_r + SPAN };
        let bound = crossing(prof, target, edge, inner);
        return Ok(EloEstimate {
            rating: if up { f64::INFINITY } else { f64::NEG_INFINITY },
            lower: if up { bound.unwrap_or(f64::NEG_INFINITY) } else { f64::NEG_INFINITY },
            upper: if up { f64::INFINITY } else { bound.unwrap_or(f64::INFINITY) },
            draw_param: nu,
            games: total.games(),
            points: total.points(),
        });
    }
    let (ll_hat, nu_hat) = g.profile(r_hat);
    let target = ll_hat - HALF_CHI2_95;
    let lower = crossing(prof, target, r_hat, r_hat - SPAN).unwrap_or(f64::NEG_INFINITY);
    let upper = crossing(prof, target, r_hat, r_hat + SPAN).unwrap_or(f64::INFINITY);
    Ok(EloEstimate {
        rating: r_hat,
        lower,
        upper,
        draw_param: nu_hat,
        games: total.games(),
        points: total.points(),
    })
}

/// Outcome probabilities `(win, draw, loss)` at rating difference `d`.
pub fn davidson_probs(d: f64, nu: f64) -> (f64, f64, f64) {
    let h = 0.5 * d * core::f64::consts::LN_10 / 400.0;
    let denom = 2.0 * libm::cosh(h) + nu;
    (libm::exp(h) / denom, nu / denom, libm::exp(-h) / denom)
}
