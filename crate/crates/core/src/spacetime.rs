//! 1+1 dimensional Minkowski geometry in natural units (c = 1).
//!
//! Everything here is a pure function of its inputs. Boundary cases are
//! decided with a fixed tolerance [`TAU_GEO`]; light rays count as causal
//! (the future cone is closed).

use std::fmt;

use thiserror::Error;

/// Tolerance used for every boundary classification.
pub const TAU_GEO: f64 = 1e-9;

/// A point `(x, t)` of spacetime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub x: f64,
    pub t: f64,
}

impl Event {
    pub const fn new(x: f64, t: f64) -> Self {
        Event { x, t }
    }

    pub fn try_new(x: f64, t: f64) -> Result<Self, GeometryError> {
        if x.is_finite() && t.is_finite() {
            Ok(Event { x, t })
        } else {
            Err(GeometryError::NonFinite)
        }
    }

    /// Same event up to [`TAU_GEO`] in both coordinates.
    pub fn approx_eq(&self, other: &Event) -> bool {
        (self.x - other.x).abs() <= TAU_GEO && (self.t - other.t).abs() <= TAU_GEO
    }
}

/// Index of the [`TAU_GEO`] grid cell nearest to `v`. Orders coordinates so
/// that values differing by rounding noise compare equal.
pub fn grid_index(v: f64) -> i64 {
    (v / TAU_GEO).round() as i64
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.9}, {:.9})", self.x, self.t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SeparationClass {
    Timelike,
    Lightlike,
    Spacelike,
}

impl fmt::Display for SeparationClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SeparationClass::Timelike => "timelike",
            SeparationClass::Lightlike => "lightlike",
            SeparationClass::Spacelike => "spacelike",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("coordinates must be finite")]
    NonFinite,
    #[error("x_v1 must be strictly less than x_v2 (got x_v1 = {x_v1}, x_v2 = {x_v2})")]
    VerifierOrder { x_v1: f64, x_v2: f64 },
    #[error("delta must be positive (got {0})")]
    DeltaNotPositive(f64),
    #[error("delta must be smaller than x_p - x_v1 = {limit} (got delta = {delta}); delta >= x_p")]
    DeltaTooLarge { delta: f64, limit: f64 },
    #[error("message exchange needs spacelike-separated endpoints, got {0}")]
    NotSpacelike(SeparationClass),
}

/// Verifier placement plus the adversary offset `delta`.
///
/// The prover sits halfway between the verifiers; dishonest provers sit
/// `delta` to either side of it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    x_v1: f64,
    x_v2: f64,
    delta: f64,
}

impl Geometry {
    pub fn new(x_v1: f64, x_v2: f64, delta: f64) -> Result<Self, GeometryError> {
        if !(x_v1.is_finite() && x_v2.is_finite() && delta.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if x_v1 >= x_v2 {
            return Err(GeometryError::VerifierOrder { x_v1, x_v2 });
        }
        if delta <= 0.0 {
            return Err(GeometryError::DeltaNotPositive(delta));
        }
        let limit = (x_v2 - x_v1) / 2.0;
        if delta >= limit {
            return Err(GeometryError::DeltaTooLarge { delta, limit });
        }
        Ok(Geometry { x_v1, x_v2, delta })
    }

    pub fn x_v1(&self) -> f64 {
        self.x_v1
    }

    pub fn x_v2(&self) -> f64 {
        self.x_v2
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Prover position, the midpoint of the verifiers.
    pub fn x_p(&self) -> f64 {
        (self.x_v1 + self.x_v2) / 2.0
    }

    /// Light travel time from a verifier to the prover.
    pub fn t_p(&self) -> f64 {
        self.x_p() - self.x_v1
    }

    pub fn x_p1(&self) -> f64 {
        self.x_p() - self.delta
    }

    pub fn x_p2(&self) -> f64 {
        self.x_p() + self.delta
    }

    /// The position to be verified, `p(x_p, t_p)`.
    pub fn prover_event(&self) -> Event {
        Event::new(self.x_p(), self.t_p())
    }

    /// Reply deadline at both verifiers.
    pub fn deadline(&self) -> f64 {
        2.0 * self.t_p()
    }

    /// Where dishonest provers capture flying systems emitted at `t = 0`.
    pub fn interception_events(&self) -> (Event, Event) {
        let t = self.t_p() - self.delta;
        (Event::new(self.x_p1(), t), Event::new(self.x_p2(), t))
    }
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry { x_v1: 0.0, x_v2: 2.0, delta: 0.1 }
    }
}

/// A constant-time slice or a light ray through an origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Hypersurface {
    ConstantTime { t: f64 },
    /// `direction` is `+1` for right-moving and `-1` for left-moving rays.
    Null { origin: Event, direction: i8 },
}

impl Hypersurface {
    pub fn contains(&self, e: &Event) -> bool {
        match *self {
            Hypersurface::ConstantTime { t } => (e.t - t).abs() <= TAU_GEO,
            Hypersurface::Null { origin, direction } => {
                let dt = e.t - origin.t;
                let dx = e.x - origin.x;
                (dx - f64::from(direction.signum()) * dt).abs() <= TAU_GEO
            }
        }
    }
}

/// `(t_b - t_a)^2 - (x_b - x_a)^2`.
pub fn squared_interval(a: &Event, b: &Event) -> f64 {
    let dt = b.t - a.t;
    let dx = b.x - a.x;
    dt * dt - dx * dx
}

pub fn classify(a: &Event, b: &Event) -> SeparationClass {
    let s = squared_interval(a, b);
    if s.abs() <= TAU_GEO {
        SeparationClass::Lightlike
    } else if s > 0.0 {
        SeparationClass::Timelike
    } else {
        SeparationClass::Spacelike
    }
}

/// True iff `b` lies in the closed future light cone of `a`.
pub fn causally_precedes(a: &Event, b: &Event) -> bool {
    let dt = b.t - a.t;
    dt >= -TAU_GEO && (b.x - a.x).abs() <= dt + TAU_GEO
}

/// The earliest event in the common causal future of `a` and `b`.
///
/// In 1+1D the intersection of two future cones is itself the future cone
/// of this event.
pub fn earliest_common_future(a: &Event, b: &Event) -> Event {
    if causally_precedes(a, b) {
        return *b;
    }
    if causally_precedes(b, a) {
        return *a;
    }
    let (l, r) = if a.x <= b.x { (a, b) } else { (b, a) };
    Event::new(
        (l.x + r.x + r.t - l.t) / 2.0,
        (l.t + r.t + r.x - l.x) / 2.0,
    )
}

/// Fold of [`earliest_common_future`] over a non-empty set of events.
pub fn earliest_common_future_of(events: &[Event]) -> Option<Event> {
    let (first, rest) = events.split_first()?;
    Some(rest.iter().fold(*first, |acc, e| earliest_common_future(&acc, e)))
}

/// Arrival events of a light-speed exchange between two spacelike parties.
///
/// Returns `(q_a, q_b)`: the events at `x_a` and `x_b` where the other
/// party's signal arrives.
pub fn exchange_completion_times(a: &Event, b: &Event) -> Result<(Event, Event), GeometryError> {
    let class = classify(a, b);
    if class != SeparationClass::Spacelike {
        return Err(GeometryError::NotSpacelike(class));
    }
    let dist = (a.x - b.x).abs();
    let q_a = Event::new(a.x, a.t.max(b.t + dist));
    let q_b = Event::new(b.x, b.t.max(a.t + dist));
    Ok((q_a, q_b))
}

/// The prover event lies in the common causal future of both interceptions.
pub fn theorem1_insecure(g: &Geometry, interception_a: &Event, interception_b: &Event) -> bool {
    let p = g.prover_event();
    causally_precedes(interception_a, &p) && causally_precedes(interception_b, &p)
}

/// Extraction happens exactly at the apex of the encoders' common future.
pub fn theorem2_holds(encode: (&Event, &Event), extract: &Event) -> bool {
    earliest_common_future(encode.0, encode.1).approx_eq(extract)
}

/// Neither interception can influence the extraction event.
pub fn theorem3_holds(interceptions: (&Event, &Event), extract: &Event) -> bool {
    !causally_precedes(interceptions.0, extract) && !causally_precedes(interceptions.1, extract)
}

/// Encodings and extraction share one constant-time slice and are
/// pairwise spacelike.
pub fn theorem4_holds(encode: (&Event, &Event), extract: &Event) -> bool {
    let slice = Hypersurface::ConstantTime { t: extract.t };
    let points = [*encode.0, *encode.1, *extract];
    let on_slice = points.iter().all(|e| slice.contains(e));
    let spacelike = points.iter().enumerate().all(|(i, a)| {
        points[i + 1..]
            .iter()
            .all(|b| classify(a, b) == SeparationClass::Spacelike)
    });
    on_slice && spacelike
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SecurityPredicates {
    pub theorem2: bool,
    pub theorem3: bool,
    pub theorem4: bool,
}

pub fn theorem234_predicates(
    _g: &Geometry,
    encode_events: (Event, Event),
    extract_event: Event,
    interceptions: (Event, Event),
) -> SecurityPredicates {
    let encode = (&encode_events.0, &encode_events.1);
    SecurityPredicates {
        theorem2: theorem2_holds(encode, &extract_event),
        theorem3: theorem3_holds((&interceptions.0, &interceptions.1), &extract_event),
        theorem4: theorem4_holds(encode, &extract_event),
    }
}
