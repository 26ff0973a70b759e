//! Dimension-generic vectors, balls, half-spaces, and similarity transforms.
//!
//! Everything here is an immutable value. Reals are `f64`; the exact-rational
//! arithmetic lives in [`crate::interval1d`].

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Allowed drift of `QᵀQ` from the identity before a rotation is rejected
/// (or repaired after composition).
pub const ORTHO_TOL: f64 = 1e-10;
/// Allowed deviation of a half-space normal from unit length.
pub const UNIT_TOL: f64 = 1e-12;
/// Condition-number ceiling for the fixed-point solve.
const FIXED_POINT_COND_MAX: f64 = 1e12;

#[derive(Debug, Error)]
pub enum GeomError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("normal vector must be nonzero")]
    ZeroNormal,
    #[error("matrix is not orthogonal within {ORTHO_TOL:e}")]
    NotOrthogonal,
    #[error("scale must be positive, got {0}")]
    NonpositiveScale(f64),
    #[error("matrix must be square, got {0} rows of length {1}")]
    NotSquare(usize, usize),
}

/// A point or direction in `R^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector(pub Vec<f64>);

impl Vector {
    pub fn zeros(n: usize) -> Self {
        Vector(vec![0.0; n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn add(&self, other: &Vector) -> Vector {
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn scaled(&self, t: f64) -> Vector {
        Vector(self.0.iter().map(|a| a * t).collect())
    }

    pub fn dist(&self, other: &Vector) -> f64 {
        self.sub(other).norm()
    }

    /// Unit vector in the same direction.
    pub fn unit(&self) -> Result<Vector, GeomError> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(GeomError::ZeroNormal);
        }
        Ok(self.scaled(1.0 / n))
    }
}

/// Open or closed ball boundary convention.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Openness {
    Open,
    Closed,
}

/// A ball `{x : |x - center| < r}` (open) or `{x : |x - center| <= r}` (closed).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vector,
    pub radius: f64,
    pub openness: Openness,
}

impl Ball {
    pub fn closed(center: Vector, radius: f64) -> Self {
        debug_assert!(radius >= 0.0);
        Ball {
            center,
            radius,
            openness: Openness::Closed,
        }
    }
}

/// The closed half-space `{x : <normal, x> <= offset}` with a unit outward normal.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HalfSpace {
    normal: Vector,
    offset: f64,
}

impl HalfSpace {
    /// Builds a half-space, rescaling `normal` (and `offset` with it) to unit length.
    pub fn new(normal: Vector, offset: f64) -> Result<Self, GeomError> {
        let n = normal.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(GeomError::ZeroNormal);
        }
        Ok(HalfSpace {
            normal: normal.scaled(1.0 / n),
            offset: offset / n,
        })
    }

    pub fn normal(&self) -> &Vector {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn dim(&self) -> usize {
        self.normal.dim()
    }

    /// `<normal, x> - offset`; nonpositive inside.
    pub fn signed_dist(&self, x: &Vector) -> f64 {
        self.normal.dot(x) - self.offset
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        self.signed_dist(x) <= tol
    }

    /// Same normal, offset pulled inward by `r`.
    pub fn eroded(&self, r: f64) -> HalfSpace {
        HalfSpace {
            normal: self.normal.clone(),
            offset: self.offset - r,
        }
    }
}

impl<'de> Deserialize<'de> for HalfSpace {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            normal: Vector,
            offset: f64,
        }
        let raw = Raw::deserialize(de)?;
        HalfSpace::new(raw.normal, raw.offset).map_err(serde::de::Error::custom)
    }
}

/// A square orthogonal matrix, stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<Vec<f64>>", try_from = "Vec<Vec<f64>>")]
pub struct Rotation {
    n: usize,
    data: Vec<f64>,
}

impl Rotation {
    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Rotation { n, data }
    }

    /// Planar rotation by `angle` (counterclockwise) in 2-D.
    pub fn plane(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Rotation {
            n: 2,
            data: vec![c, -s, s, c],
        }
    }

    /// Rotation by `angle` about coordinate axis `axis` in 3-D.
    pub fn axis3(axis: usize, angle: f64) -> Self {
        assert!(axis < 3);
        let (s, c) = angle.sin_cos();
        let mut r = Rotation::identity(3);
        let (i, j) = match axis {
            0 => (1, 2),
            1 => (2, 0),
            _ => (0, 1),
        };
        r.data[i * 3 + i] = c;
        r.data[i * 3 + j] = -s;
        r.data[j * 3 + i] = s;
        r.data[j * 3 + j] = c;
        r
    }

    /// Reflection across the hyperplane normal to axis 0.
    pub fn reflection(n: usize) -> Self {
        let mut r = Rotation::identity(n);
        r.data[0] = -1.0;
        r
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, GeomError> {
        let n = rows.len();
        for row in &rows {
            if row.len() != n {
                return Err(GeomError::NotSquare(n, row.len()));
            }
        }
        let r = Rotation {
            n,
            data: rows.into_iter().flatten().collect(),
        };
        if !r.is_orthogonal(ORTHO_TOL) {
            return Err(GeomError::NotOrthogonal);
        }
        Ok(r)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn apply(&self, v: &Vector) -> Vector {
        debug_assert_eq!(self.n, v.dim());
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            out[i] = row.iter().zip(&v.0).map(|(a, b)| a * b).sum();
        }
        Vector(out)
    }

    pub fn transpose(&self) -> Rotation {
        let mut data = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            for j in 0..self.n {
                data[j * self.n + i] = self.data[i * self.n + j];
            }
        }
        Rotation { n: self.n, data }
    }

    pub fn mul(&self, other: &Rotation) -> Rotation {
        debug_assert_eq!(self.n, other.n);
        let n = self.n;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        Rotation { n, data }
    }

    /// Max-norm of `QᵀQ - I`.
    pub fn ortho_drift(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut dot = 0.0;
                for k in 0..n {
                    dot += self.data[k * n + i] * self.data[k * n + j];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    pub fn is_orthogonal(&self, tol: f64) -> bool {
        self.ortho_drift() <= tol
    }

    pub fn det(&self) -> f64 {
        DMatrix::from_row_slice(self.n, self.n, &self.data).determinant()
    }

    /// Gram–Schmidt on the rows; used to repair drift after long composition chains.
    fn reorthonormalize(&mut self) {
        let n = self.n;
        for i in 0..n {
            for j in 0..i {
                let dot: f64 = (0..n)
                    .map(|k| self.data[i * n + k] * self.data[j * n + k])
                    .sum();
                for k in 0..n {
                    self.data[i * n + k] -= dot * self.data[j * n + k];
                }
            }
            let norm: f64 = (0..n)
                .map(|k| self.data[i * n + k] * self.data[i * n + k])
                .sum::<f64>()
                .sqrt();
            for k in 0..n {
                self.data[i * n + k] /= norm;
            }
        }
    }
}

impl From<Rotation> for Vec<Vec<f64>> {
    fn from(r: Rotation) -> Self {
        (0..r.n)
            .map(|i| r.data[i * r.n..(i + 1) * r.n].to_vec())
            .collect()
    }
}

impl TryFrom<Vec<Vec<f64>>> for Rotation {
    type Error = GeomError;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self, GeomError> {
        Rotation::from_rows(rows)
    }
}

/// The map `x -> scale * rotation * x + offset` with `scale > 0` and an
/// orthogonal rotation part (reflections allowed).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Similarity {
    scale: f64,
    rotation: Rotation,
    offset: Vector,
}

impl Similarity {
    pub fn new(scale: f64, rotation: Rotation, offset: Vector) -> Result<Self, GeomError> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(GeomError::NonpositiveScale(scale));
        }
        if rotation.dim() != offset.dim() {
            return Err(GeomError::DimensionMismatch(rotation.dim(), offset.dim()));
        }
        if !rotation.is_orthogonal(ORTHO_TOL) {
            return Err(GeomError::NotOrthogonal);
        }
        Ok(Similarity {
            scale,
            rotation,
            offset,
        })
    }

    pub fn identity(n: usize) -> Self {
        Similarity {
            scale: 1.0,
            rotation: Rotation::identity(n),
            offset: Vector::zeros(n),
        }
    }

    pub fn translation(v: Vector) -> Self {
        Similarity {
            scale: 1.0,
            rotation: Rotation::identity(v.dim()),
            offset: v,
        }
    }

    /// `x -> scale (x - center) + center`.
    pub fn homothety(center: &Vector, scale: f64) -> Result<Self, GeomError> {
        if !(scale > 0.0) {
            return Err(GeomError::NonpositiveScale(scale));
        }
        Ok(Similarity {
            scale,
            rotation: Rotation::identity(center.dim()),
            offset: center.scaled(1.0 - scale),
        })
    }

    /// Scale plus planar rotation about `center` in 2-D.
    pub fn spiral_about(center: &Vector, scale: f64, angle: f64) -> Result<Self, GeomError> {
        let rot = Rotation::plane(angle);
        let offset = center.sub(&rot.apply(center).scaled(scale));
        Similarity::new(scale, rot, offset)
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn rotation(&self) -> &Rotation {
        &self.rotation
    }

    pub fn offset(&self) -> &Vector {
        &self.offset
    }

    pub fn dim(&self) -> usize {
        self.offset.dim()
    }

    pub fn is_orientation_preserving(&self) -> bool {
        self.rotation.det() > 0.0
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        self.rotation.apply(x).scaled(self.scale).add(&self.offset)
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Similarity) -> Result<Similarity, GeomError> {
        if self.dim() != other.dim() {
            return Err(GeomError::DimensionMismatch(self.dim(), other.dim()));
        }
        let mut rotation = self.rotation.mul(&other.rotation);
        if !rotation.is_orthogonal(ORTHO_TOL) {
            rotation.reorthonormalize();
        }
        let offset = self
            .rotation
            .apply(&other.offset)
            .scaled(self.scale)
            .add(&self.offset);
        Ok(Similarity {
            scale: self.scale * other.scale,
            rotation,
            offset,
        })
    }

    pub fn invert(&self) -> Similarity {
        let rotation = self.rotation.transpose();
        let offset = rotation.apply(&self.offset).scaled(-1.0 / self.scale);
        Similarity {
            scale: 1.0 / self.scale,
            rotation,
            offset,
        }
    }

    /// `self` composed with itself `i` times; negative `i` uses the inverse.
    pub fn pow(&self, i: i64) -> Similarity {
        let base = if i < 0 {
            self.invert()
        } else {
            self.clone()
        };
        let mut acc = Similarity::identity(self.dim());
        for _ in 0..i.unsigned_abs() {
            acc = acc.compose(&base).expect("same dimension");
        }
        acc
    }

    /// The point solving `(I - scale * Q) p = offset`, absent when the system is
    /// singular or nearly so (pure translations, screw-like isometries).
    pub fn fixed_point(&self) -> Option<Vector> {
        let n = self.dim();
        let mut m = DMatrix::identity(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] -= self.scale * self.rotation.at(i, j);
            }
        }
        let svd = m.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if smin <= 0.0 || smax / smin > FIXED_POINT_COND_MAX {
            return None;
        }
        let b = DVector::from_column_slice(&self.offset.0);
        let p = svd.solve(&b, 0.0).ok()?;
        Some(Vector(p.iter().copied().collect()))
    }

    /// Image of a half-space: `{x : <Qn, x> <= scale*d + <Qn, b>}`.
    pub fn apply_to_halfspace(&self, h: &HalfSpace) -> HalfSpace {
        let image_normal = self.rotation.apply(h.normal());
        let offset = self.scale * h.offset() + image_normal.dot(&self.offset);
        HalfSpace::new(image_normal, offset).expect("rotated unit normal stays unit")
    }
}

impl<'de> Deserialize<'de> for Similarity {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            scale: f64,
            rotation: Rotation,
            offset: Vector,
        }
        let raw = Raw::deserialize(de)?;
        Similarity::new(raw.scale, raw.rotation, raw.offset).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_vector(rng: &mut impl Rng, n: usize, span: f64) -> Vector {
        Vector((0..n).map(|_| rng.gen_range(-span..span)).collect())
    }

    fn random_similarity(rng: &mut impl Rng, n: usize) -> Similarity {
        let scale = rng.gen_range(0.2..3.0);
        let rotation = match n {
            1 => Rotation::identity(1),
            2 => Rotation::plane(rng.gen_range(0.0..std::f64::consts::TAU)),
            3 => Rotation::axis3(0, rng.gen_range(0.0..std::f64::consts::TAU))
                .mul(&Rotation::axis3(1, rng.gen_range(0.0..std::f64::consts::TAU)))
                .mul(&Rotation::axis3(2, rng.gen_range(0.0..std::f64::consts::TAU))),
            _ => unimplemented!(),
        };
        Similarity::new(scale, rotation, random_vector(rng, n, 2.0)).unwrap()
    }

    #[test]
    fn compose_identity() {
        let id = Similarity::identity(2);
        let c = id.compose(&id).unwrap();
        assert_eq!(c.scale(), 1.0);
        assert_eq!(c.offset(), &Vector::zeros(2));
    }

    #[test]
    fn compose_pure_scalings_multiply() {
        let a = Similarity::new(2.0, Rotation::identity(2), Vector::zeros(2)).unwrap();
        let b = Similarity::new(3.0, Rotation::identity(2), Vector::zeros(2)).unwrap();
        let c = a.compose(&b).unwrap();
        assert_eq!(c.scale(), 6.0);
        assert_eq!(c.rotation(), &Rotation::identity(2));
        assert_eq!(c.offset(), &Vector::zeros(2));
    }

    #[test]
    fn compose_matches_pointwise_application() {
        let sigma = Similarity::new(
            1.0,
            Rotation::plane(std::f64::consts::FRAC_PI_2),
            Vector(vec![1.0, 0.0]),
        )
        .unwrap();
        let twice = sigma.compose(&sigma).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let x = random_vector(&mut rng, 2, 10.0);
            let direct = sigma.apply(&sigma.apply(&x));
            let composed = twice.apply(&x);
            assert!(direct.dist(&composed) <= 1e-12, "{direct:?} vs {composed:?}");
        }
    }

    #[test]
    fn compose_dimension_mismatch() {
        let a = Similarity::identity(2);
        let b = Similarity::identity(3);
        assert!(matches!(
            a.compose(&b),
            Err(GeomError::DimensionMismatch(2, 3))
        ));
    }

    #[test]
    fn invert_identity_and_scaling() {
        let id = Similarity::identity(3);
        assert_eq!(id.invert().scale(), 1.0);
        let s = Similarity::new(2.0, Rotation::identity(2), Vector::zeros(2)).unwrap();
        assert_eq!(s.invert().scale(), 0.5);
    }

    #[test]
    fn invert_round_trips_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = random_similarity(&mut rng, 3);
        let inv = s.invert();
        for _ in 0..100 {
            let x = random_vector(&mut rng, 3, 1.0);
            let back = inv.apply(&s.apply(&x));
            assert!(back.dist(&x) <= 1e-10);
        }
    }

    #[test]
    fn fixed_point_of_contraction_at_origin() {
        let s = Similarity::new(0.5, Rotation::identity(2), Vector::zeros(2)).unwrap();
        let p = s.fixed_point().unwrap();
        assert!(p.norm() <= 1e-12);
    }

    #[test]
    fn translation_has_no_fixed_point() {
        let t = Similarity::translation(Vector(vec![1.0, 0.0]));
        assert!(t.fixed_point().is_none());
    }

    #[test]
    fn fixed_point_residual_small() {
        let s = Similarity::new(
            2.0,
            Rotation::plane(std::f64::consts::FRAC_PI_3),
            Vector(vec![0.3, -1.7]),
        )
        .unwrap();
        let p = s.fixed_point().unwrap();
        let residual = s.apply(&p).dist(&p);
        assert!(residual <= 1e-9 * (1.0 + p.norm()), "residual {residual}");
    }

    #[test]
    fn halfspace_maps_through_identity() {
        let h = HalfSpace::new(Vector(vec![1.0, 0.0]), 1.0).unwrap();
        let id = Similarity::identity(2);
        let img = id.apply_to_halfspace(&h);
        assert_eq!(&img, &h);
    }

    #[test]
    fn pure_dilation_doubles_offset() {
        let h = HalfSpace::new(Vector(vec![1.0]), 1.0).unwrap();
        let s = Similarity::new(2.0, Rotation::identity(1), Vector::zeros(1)).unwrap();
        let img = s.apply_to_halfspace(&h);
        assert!((img.offset() - 2.0).abs() <= 1e-15);
        assert!((img.normal().0[0] - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn halfspace_boundary_maps_onto_image_boundary() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10 {
            let s = random_similarity(&mut rng, 2);
            let h = HalfSpace::new(random_vector(&mut rng, 2, 1.0), rng.gen_range(-2.0..2.0));
            let h = match h {
                Ok(h) => h,
                Err(_) => continue,
            };
            let img = s.apply_to_halfspace(&h);
            for _ in 0..50 {
                // A boundary point of h: offset * n + t * n_perp.
                let t = rng.gen_range(-5.0..5.0);
                let perp = Vector(vec![-h.normal().0[1], h.normal().0[0]]);
                let x = h.normal().scaled(h.offset()).add(&perp.scaled(t));
                assert!(h.signed_dist(&x).abs() <= 1e-10);
                let y = s.apply(&x);
                assert!(img.signed_dist(&y).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn membership_commutes_with_halfspace_images() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..200 {
            let s = random_similarity(&mut rng, 3);
            let n = random_vector(&mut rng, 3, 1.0);
            let h = match HalfSpace::new(n, rng.gen_range(-2.0..2.0)) {
                Ok(h) => h,
                Err(_) => continue,
            };
            let img = s.apply_to_halfspace(&h);
            let x = random_vector(&mut rng, 3, 3.0);
            let inside = h.signed_dist(&x);
            let mapped = img.signed_dist(&s.apply(&x));
            // Same sign away from the boundary.
            if inside.abs() > 1e-8 {
                assert_eq!(inside > 0.0, mapped > 0.0);
            }
        }
    }

    #[test]
    fn compose_associative_on_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..50 {
            let a = random_similarity(&mut rng, 2);
            let b = random_similarity(&mut rng, 2);
            let c = random_similarity(&mut rng, 2);
            let left = a.compose(&b).unwrap().compose(&c).unwrap();
            let right = a.compose(&b.compose(&c).unwrap()).unwrap();
            for _ in 0..10 {
                let x = random_vector(&mut rng, 2, 5.0);
                assert!(left.apply(&x).dist(&right.apply(&x)) <= 1e-10);
            }
        }
    }

    #[test]
    fn contraction_always_has_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..50 {
            let mut s = random_similarity(&mut rng, 3);
            while s.scale() >= 1.0 {
                s = random_similarity(&mut rng, 3);
            }
            assert!(s.fixed_point().is_some());
        }
    }

    #[test]
    fn long_composition_chain_stays_orthogonal() {
        let step = Similarity::new(
            1.01,
            Rotation::plane(0.7),
            Vector(vec![0.1, 0.2]),
        )
        .unwrap();
        let big = step.pow(200);
        assert!(big.rotation().is_orthogonal(1e-9));
    }

    #[test]
    fn serde_round_trip() {
        let s = Similarity::new(
            2.0,
            Rotation::plane(0.3),
            Vector(vec![1.0, -2.0]),
        )
        .unwrap();
        let json = serde_json::to_string(&s).unwrap();
        let back: Similarity = serde_json::from_str(&json).unwrap();
        assert!((back.scale() - 2.0).abs() < 1e-15);
        let h = HalfSpace::new(Vector(vec![3.0, 4.0]), 10.0).unwrap();
        let json = serde_json::to_string(&h).unwrap();
        let back: HalfSpace = serde_json::from_str(&json).unwrap();
        assert!((back.normal().norm() - 1.0).abs() <= UNIT_TOL);
        assert!((back.offset() - 2.0).abs() <= 1e-12);
    }
}
