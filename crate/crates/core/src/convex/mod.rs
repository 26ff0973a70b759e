//! Exact morphology and resilience classification for convex H-polytopes,
//! possibly unbounded.
//!
//! Erosion by `r` moves every facet inward by `r` along its normal; a polytope
//! is similar to its erosion exactly when the facets sit in one of three
//! special positions: tangent to a common inscribed ball (the erosion is a
//! shrinking homothety), at a common distance from an external point (the
//! erosion is a growing homothety), or at a common angle to a translation
//! direction (the erosion is a translation). `classify` decides which, and
//! `predicted_sigma`/`verify_similarity` realize the decision procedure.

mod lp;

use crate::geom::{Ball, HalfSpace, Similarity, Vector};
use lp::Lp;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative least-squares residual threshold and LP slack used when the
/// caller does not supply one.
pub fn default_tol(p: &HPolytope) -> f64 {
    let scale = p
        .halfspaces
        .iter()
        .map(|h| h.offset().abs())
        .fold(1.0f64, f64::max);
    1e-8 * scale
}

/// Condition-number ceiling beyond which ball-fitting systems are reported
/// absent with a diagnostic rather than trusted.
const COND_MAX: f64 = 1e10;

#[derive(Debug, Error)]
pub enum ConvexError {
    #[error("polytope must be reduced first")]
    NotReduced,
    #[error("half-space intersection is empty")]
    EmptySet,
    #[error("erosion by {0} empties the polytope")]
    EmptyResult(f64),
    #[error("radius must be positive, got {0}")]
    InvalidRadius(f64),
    #[error("erosion radius {r} is not below the inscribed radius {inscribed}")]
    RadiusTooLarge { r: f64, inscribed: f64 },
    #[error("certificate kind `none` carries no witness")]
    NoWitness,
    #[error("polytope needs at least one half-space")]
    NoHalfSpaces,
    #[error(transparent)]
    Geom(#[from] crate::geom::GeomError),
}

/// A finite intersection of closed half-spaces.
///
/// `reduced` certifies irredundancy: every retained half-space is
/// facet-defining (removing it strictly enlarges the intersection), which for
/// polytopes is exactly the set of regular supporting half-spaces.
#[derive(Clone, Debug, PartialEq)]
pub struct HPolytope {
    halfspaces: Vec<HalfSpace>,
    reduced: bool,
}

impl Serialize for HPolytope {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.halfspaces.serialize(s)
    }
}

impl<'de> Deserialize<'de> for HPolytope {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let halfspaces = Vec::<HalfSpace>::deserialize(de)?;
        HPolytope::new(halfspaces).map_err(serde::de::Error::custom)
    }
}

impl HPolytope {
    pub fn new(halfspaces: Vec<HalfSpace>) -> Result<Self, ConvexError> {
        if halfspaces.is_empty() {
            return Err(ConvexError::NoHalfSpaces);
        }
        let n = halfspaces[0].dim();
        if halfspaces.iter().any(|h| h.dim() != n) {
            return Err(ConvexError::Geom(
                crate::geom::GeomError::DimensionMismatch(n, 0),
            ));
        }
        Ok(HPolytope {
            halfspaces,
            reduced: false,
        })
    }

    fn reduced_from(halfspaces: Vec<HalfSpace>) -> Self {
        HPolytope {
            halfspaces,
            reduced: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.halfspaces[0].dim()
    }

    pub fn facets(&self) -> &[HalfSpace] {
        &self.halfspaces
    }

    pub fn is_reduced(&self) -> bool {
        self.reduced
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        self.halfspaces.iter().all(|h| h.contains(x, tol))
    }

    fn require_reduced(&self) -> Result<(), ConvexError> {
        if self.reduced {
            Ok(())
        } else {
            Err(ConvexError::NotReduced)
        }
    }

    /// Maps every half-space through `s`; facet structure is preserved, so a
    /// reduced polytope stays reduced.
    pub fn transformed(&self, s: &Similarity) -> HPolytope {
        HPolytope {
            halfspaces: self
                .halfspaces
                .iter()
                .map(|h| s.apply_to_halfspace(h))
                .collect(),
            reduced: self.reduced,
        }
    }

    /// Intersection; loses the irredundancy certificate.
    pub fn intersect(&self, other: &HPolytope) -> HPolytope {
        let mut halfspaces = self.halfspaces.clone();
        halfspaces.extend(other.halfspaces.iter().cloned());
        HPolytope {
            halfspaces,
            reduced: false,
        }
    }
}

/// Same normal, offset pulled inward by `r`.
pub fn erode_halfspace(h: &HalfSpace, r: f64) -> HalfSpace {
    debug_assert!(r >= 0.0);
    h.eroded(r)
}

/// Erodes every facet by `r` and re-reduces.
pub fn erode_polytope(p: &HPolytope, r: f64) -> Result<HPolytope, ConvexError> {
    p.require_reduced()?;
    if r < 0.0 {
        return Err(ConvexError::InvalidRadius(r));
    }
    let eroded: Vec<HalfSpace> = p.halfspaces.iter().map(|h| h.eroded(r)).collect();
    match reduce(&HPolytope {
        halfspaces: eroded,
        reduced: false,
    }) {
        Ok(q) => Ok(q),
        Err(ConvexError::EmptySet) => Err(ConvexError::EmptyResult(r)),
        Err(e) => Err(e),
    }
}

fn lp_rows(halfspaces: &[HalfSpace]) -> Vec<(Vec<f64>, f64)> {
    halfspaces
        .iter()
        .map(|h| (h.normal().0.clone(), h.offset()))
        .collect()
}

fn is_feasible(halfspaces: &[HalfSpace]) -> bool {
    let n = halfspaces[0].dim();
    !matches!(lp::maximize(&vec![0.0; n], &lp_rows(halfspaces)), Lp::Infeasible)
}

/// Drops redundant half-spaces until every survivor is facet-defining.
///
/// Each candidate is tested with a small LP: maximize its own functional over
/// the other constraints (capped one unit beyond its offset); exceeding the
/// offset means removal would enlarge the set, so the facet stays.
pub fn reduce(p: &HPolytope) -> Result<HPolytope, ConvexError> {
    let n = p.dim();
    if !is_feasible(&p.halfspaces) {
        return Err(ConvexError::EmptySet);
    }
    // Drop exact duplicates and dominated parallels first.
    let mut kept: Vec<HalfSpace> = Vec::new();
    for h in &p.halfspaces {
        let mut dominated = false;
        kept.retain(|k: &HalfSpace| {
            let parallel = k
                .normal()
                .0
                .iter()
                .zip(&h.normal().0)
                .all(|(a, b)| (a - b).abs() <= 1e-12);
            if parallel {
                if k.offset() <= h.offset() {
                    dominated = true;
                    true
                } else {
                    false
                }
            } else {
                true
            }
        });
        if !dominated {
            kept.push(h.clone());
        }
    }

    let tol = default_tol(p).max(1e-9);
    let mut i = 0;
    while i < kept.len() {
        if kept.len() == 1 {
            break;
        }
        let mut rows: Vec<(Vec<f64>, f64)> = Vec::with_capacity(kept.len());
        for (j, h) in kept.iter().enumerate() {
            if j == i {
                continue;
            }
            rows.push((h.normal().0.clone(), h.offset()));
        }
        // Cap to keep the objective bounded when the rest is unbounded in
        // this direction.
        rows.push((kept[i].normal().0.clone(), kept[i].offset() + 1.0));
        let obj = kept[i].normal().0.clone();
        let redundant = match lp::maximize(&obj, &rows) {
            Lp::Optimal { value, .. } => value <= kept[i].offset() + tol,
            Lp::Unbounded => false,
            Lp::Infeasible => unreachable!("superset of a feasible system"),
        };
        if redundant {
            kept.remove(i);
        } else {
            i += 1;
        }
    }
    debug_assert!(!kept.is_empty());
    debug_assert_eq!(kept[0].dim(), n);
    // Canonical order for deterministic serialization and matching.
    kept.sort_by(|a, b| {
        a.normal()
            .0
            .iter()
            .chain(std::iter::once(&a.offset()))
            .partial_cmp(b.normal().0.iter().chain(std::iter::once(&b.offset())))
            .unwrap()
    });
    Ok(HPolytope::reduced_from(kept))
}

/// True iff the recession cone `{u : <n_i, u> <= 0}` is `{0}`.
pub fn is_bounded(p: &HPolytope) -> Result<bool, ConvexError> {
    p.require_reduced()?;
    let n = p.dim();
    let mut rows: Vec<(Vec<f64>, f64)> = p
        .halfspaces
        .iter()
        .map(|h| (h.normal().0.clone(), 0.0))
        .collect();
    // Box the cone so every LP is bounded; a nonzero direction scales to the box.
    for k in 0..n {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        rows.push((e.clone(), 1.0));
        e[k] = -1.0;
        rows.push((e, 1.0));
    }
    for k in 0..n {
        for sign in [1.0, -1.0] {
            let mut obj = vec![0.0; n];
            obj[k] = sign;
            match lp::maximize(&obj, &rows) {
                Lp::Optimal { value, .. } => {
                    if value > 1e-7 {
                        return Ok(false);
                    }
                }
                Lp::Unbounded => return Ok(false),
                Lp::Infeasible => unreachable!("cone contains 0"),
            }
        }
    }
    Ok(true)
}

struct TightFit {
    point: Vec<f64>,
    radius: f64,
}

/// Solves `<n_i, c> + sign*R = d_i` in the least-squares sense. When the
/// system leaves the radius free (a lone half-space, for example), pins it to
/// 1 and re-solves for the center.
fn fit_tight_ball(p: &HPolytope, sign: f64, tol: f64) -> Option<TightFit> {
    let n = p.dim();
    let m = p.halfspaces.len();
    let mut a = DMatrix::zeros(m, n + 1);
    let mut b = DVector::zeros(m);
    for (i, h) in p.halfspaces.iter().enumerate() {
        for j in 0..n {
            a[(i, j)] = h.normal().0[j];
        }
        a[(i, n)] = sign;
        b[i] = h.offset();
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if m >= n + 1 {
        let smin = svd.singular_values.min();
        if smin > 0.0 && smax / smin > COND_MAX {
            return None; // near-degenerate facet set
        }
    }
    let rank_eps = smax * 1e-12;
    let x = svd.solve(&b, rank_eps).ok()?;
    let residual = (&a * &x - &b).amax();
    if residual > tol {
        return None;
    }
    let radius_floor = tol.max(1e-9);
    if x[n] > radius_floor {
        return Some(TightFit {
            point: x.as_slice()[..n].to_vec(),
            radius: x[n],
        });
    }
    // Radius came out nonpositive; if the solution family leaves it free,
    // pin R = 1 and solve for the center alone.
    let mut an = DMatrix::zeros(m, n);
    let mut bn = DVector::zeros(m);
    for (i, h) in p.halfspaces.iter().enumerate() {
        for j in 0..n {
            an[(i, j)] = h.normal().0[j];
        }
        bn[i] = h.offset() - sign;
    }
    let svd = an.clone().svd(true, true);
    let c = svd.solve(&bn, svd.singular_values.max() * 1e-12).ok()?;
    let residual = (&an * &c - &bn).amax();
    if residual <= tol {
        Some(TightFit {
            point: c.as_slice().to_vec(),
            radius: 1.0,
        })
    } else {
        None
    }
}

/// The ball tangent to every facet hyperplane from inside, when one exists.
pub fn inscribed_ball(p: &HPolytope, tol: f64) -> Result<Option<Ball>, ConvexError> {
    p.require_reduced()?;
    Ok(fit_tight_ball(p, 1.0, tol)
        .map(|f| Ball::closed(Vector(f.point), f.radius)))
}

/// The largest ball contained in the polytope (not necessarily tangent to
/// every facet); radius is `f64::INFINITY` when balls grow without bound.
pub fn chebyshev_ball(p: &HPolytope) -> Result<Ball, ConvexError> {
    p.require_reduced()?;
    let n = p.dim();
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::with_capacity(p.halfspaces.len());
    for h in &p.halfspaces {
        let mut row = h.normal().0.clone();
        row.push(1.0);
        rows.push((row, h.offset()));
    }
    let mut obj = vec![0.0; n + 1];
    obj[n] = 1.0;
    match lp::maximize(&obj, &rows) {
        Lp::Optimal { x, value } => Ok(Ball::closed(Vector(x[..n].to_vec()), value)),
        Lp::Unbounded => Ok(Ball::closed(Vector::zeros(n), f64::INFINITY)),
        Lp::Infeasible => Err(ConvexError::EmptySet),
    }
}

/// The point outside every facet half-space at a common distance, when one exists.
pub fn exscribed_ball(p: &HPolytope, tol: f64) -> Result<Option<Ball>, ConvexError> {
    p.require_reduced()?;
    Ok(fit_tight_ball(p, -1.0, tol)
        .map(|f| Ball::closed(Vector(f.point), f.radius)))
}

/// A vector `v` with `<n_i, v> = -r` for every facet, when one exists; the
/// erosion by `r` then equals the translation by `v`.
pub fn translation_witness(
    p: &HPolytope,
    r: f64,
    tol: f64,
) -> Result<Option<Vector>, ConvexError> {
    p.require_reduced()?;
    if r <= 0.0 {
        return Err(ConvexError::InvalidRadius(r));
    }
    let n = p.dim();
    let m = p.halfspaces.len();
    let mut a = DMatrix::zeros(m, n);
    let mut b = DVector::zeros(m);
    for (i, h) in p.halfspaces.iter().enumerate() {
        for j in 0..n {
            a[(i, j)] = h.normal().0[j];
        }
        b[i] = -r;
    }
    let svd = a.clone().svd(true, true);
    let Ok(v) = svd.solve(&b, svd.singular_values.max() * 1e-12) else {
        return Ok(None);
    };
    let residual = (&a * &v - &b).amax();
    if residual <= tol {
        Ok(Some(Vector(v.as_slice().to_vec())))
    } else {
        Ok(None)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResilienceKind {
    Decreasing,
    Increasing,
    Isometric,
    None,
}

/// Classification outcome with the witness for the matching kind and enough
/// data to predict the similarity for any erosion radius.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResilienceCertificate {
    pub kind: ResilienceKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inscribed: Option<Ball>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exscribed: Option<Ball>,
    /// Unit translation direction and the common angle between facet normals
    /// and that direction's hyperplane (nonzero away from `pi/2`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vector>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
}

/// Decides the resilience kind: inscribed ball, else exscribed ball, else
/// translation witness, else none. A lone half-space satisfies all three and
/// reports `decreasing`.
pub fn classify(p: &HPolytope, tol: f64) -> Result<ResilienceCertificate, ConvexError> {
    p.require_reduced()?;
    if let Some(ball) = inscribed_ball(p, tol)? {
        return Ok(ResilienceCertificate {
            kind: ResilienceKind::Decreasing,
            inscribed: Some(ball),
            exscribed: None,
            direction: None,
            angle: None,
        });
    }
    if let Some(ball) = exscribed_ball(p, tol)? {
        return Ok(ResilienceCertificate {
            kind: ResilienceKind::Increasing,
            inscribed: None,
            exscribed: Some(ball),
            direction: None,
            angle: None,
        });
    }
    if let Some(v) = translation_witness(p, 1.0, tol)? {
        let len = v.norm();
        let direction = v.scaled(1.0 / len);
        let angle = (1.0 / len).clamp(-1.0, 1.0).acos();
        return Ok(ResilienceCertificate {
            kind: ResilienceKind::Isometric,
            inscribed: None,
            exscribed: None,
            direction: Some(direction),
            angle: Some(angle),
        });
    }
    Ok(ResilienceCertificate {
        kind: ResilienceKind::None,
        inscribed: None,
        exscribed: None,
        direction: None,
        angle: None,
    })
}

/// The similarity predicted to realize `e_r(X) = sigma(X)` for the certified kind.
pub fn predicted_sigma(
    cert: &ResilienceCertificate,
    r: f64,
) -> Result<Similarity, ConvexError> {
    match cert.kind {
        ResilienceKind::Decreasing => {
            let ball = cert.inscribed.as_ref().ok_or(ConvexError::NoWitness)?;
            if r >= ball.radius {
                return Err(ConvexError::RadiusTooLarge {
                    r,
                    inscribed: ball.radius,
                });
            }
            Ok(Similarity::homothety(
                &ball.center,
                (ball.radius - r) / ball.radius,
            )?)
        }
        ResilienceKind::Increasing => {
            let ball = cert.exscribed.as_ref().ok_or(ConvexError::NoWitness)?;
            Ok(Similarity::homothety(
                &ball.center,
                (ball.radius + r) / ball.radius,
            )?)
        }
        ResilienceKind::Isometric => {
            let dir = cert.direction.as_ref().ok_or(ConvexError::NoWitness)?;
            let angle = cert.angle.ok_or(ConvexError::NoWitness)?;
            // The r = 1 witness had length 1 / cos(angle); magnitudes scale linearly.
            Ok(Similarity::translation(dir.scaled(r / angle.cos())))
        }
        ResilienceKind::None => Err(ConvexError::NoWitness),
    }
}

/// Outcome of matching two facet sets up to `tol`.
#[derive(Clone, Debug)]
pub struct FacetMatch {
    pub matched: bool,
    /// Worst paired deviation (normal difference or offset difference);
    /// infinite when no bijection exists.
    pub residual: f64,
}

/// Pairs facets of `a` and `b` by nearest normal and offset; a bijection
/// within `tol` on both means the polytopes are the same facet set.
pub fn facet_match(a: &HPolytope, b: &HPolytope, tol: f64) -> FacetMatch {
    if a.halfspaces.len() != b.halfspaces.len() {
        return FacetMatch {
            matched: false,
            residual: f64::INFINITY,
        };
    }
    let mut used = vec![false; b.halfspaces.len()];
    let mut residual = 0.0f64;
    for ha in &a.halfspaces {
        let mut best: Option<(usize, f64)> = None;
        for (j, hb) in b.halfspaces.iter().enumerate() {
            if used[j] {
                continue;
            }
            let dn = ha.normal().sub(hb.normal()).norm();
            let dd = (ha.offset() - hb.offset()).abs();
            let dev = dn.max(dd);
            if best.map_or(true, |(_, d)| dev < d) {
                best = Some((j, dev));
            }
        }
        match best {
            Some((j, dev)) if dev <= tol => {
                used[j] = true;
                residual = residual.max(dev);
            }
            _ => {
                return FacetMatch {
                    matched: false,
                    residual: f64::INFINITY,
                }
            }
        }
    }
    FacetMatch {
        matched: true,
        residual,
    }
}

/// True iff `reduce(e_r(p))` and `s(p)` have matching facet sets within `tol`.
pub fn verify_similarity(
    p: &HPolytope,
    r: f64,
    s: &Similarity,
    tol: f64,
) -> Result<FacetMatch, ConvexError> {
    p.require_reduced()?;
    let eroded = erode_polytope(p, r)?;
    let image = p.transformed(s);
    Ok(facet_match(&eroded, &image, tol))
}

/// Partial sums of the resilient-radius sequence: `i > 0` gives
/// `sum_{0 <= k < i} r a^k`; `i < 0` gives `sum_{1 <= k <= |i|} r / a^k`.
pub fn radius_sequence(r: f64, alpha: f64, i: i32) -> f64 {
    debug_assert!(r > 0.0 && alpha > 0.0);
    if i >= 0 {
        (0..i).map(|k| r * alpha.powi(k)).sum()
    } else {
        (1..=-i).map(|k| r / alpha.powi(k)).sum()
    }
}

/// Expansion resilience requires *all* supporting half-spaces (not only
/// facets) at a common distance from one point; among H-polytopes only a
/// lone half-space qualifies (curved bodies are out of H-representation scope).
pub fn expansion_resilient(p: &HPolytope, _r: f64, _tol: f64) -> Result<bool, ConvexError> {
    p.require_reduced()?;
    Ok(p.halfspaces.len() == 1)
}
