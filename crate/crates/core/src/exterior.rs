//! Exterior algebra over ℝⁿ in Plücker coordinates.
//!
//! A p-vector is stored by its coordinates on the basis ∂_{i₁}∧…∧∂_{i_p} with
//! strictly increasing multi-indices in lexicographic order. Coordinates with a
//! non-increasing index sequence (such as y³¹ for n = 3) are translated to the
//! canonical one with a permutation sign at the API boundary, so the
//! antisymmetry relation y^{…k…k'…} = −y^{…k'…k…} holds by construction.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{binomial, determinant, dot, norm};

/// Relative tolerance used by equality and decomposability tests.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Strictly increasing tuple of axis labels in `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex {
    n: usize,
    axes: Vec<usize>,
}

impl MultiIndex {
    pub fn new(n: usize, axes: Vec<usize>) -> Result<Self> {
        if axes.len() > n {
            return Err(Error::domain(format!(
                "multi-index of length {} exceeds dimension {n}",
                axes.len()
            )));
        }
        if let Some(&a) = axes.iter().find(|&&a| a == 0 || a > n) {
            return Err(Error::domain(format!("axis {a} outside 1..={n}")));
        }
        if axes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain(format!("axes {axes:?} are not strictly increasing")));
        }
        Ok(Self { n, axes })
    }

    /// All multi-indices of degree `p` in dimension `n`, in lexicographic order.
    pub fn all(n: usize, p: usize) -> Vec<MultiIndex> {
        let mut out = Vec::with_capacity(binomial(n, p));
        if p > n {
            return out;
        }
        let mut current: Vec<usize> = (1..=p).collect();
        loop {
            out.push(MultiIndex {
                n,
                axes: current.clone(),
            });
            // advance to the next combination
            let mut i = p;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                if current[i] < n - (p - 1 - i) {
                    current[i] += 1;
                    for j in i + 1..p {
                        current[j] = current[j - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    /// The index `1, 2, …, p`.
    pub fn leading(n: usize, p: usize) -> Result<Self> {
        Self::new(n, (1..=p).collect())
    }

    pub fn axes(&self) -> &[usize] {
        &self.axes
    }

    pub fn degree(&self) -> usize {
        self.axes.len()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Position in the lexicographic enumeration of [`MultiIndex::all`].
    pub fn position(&self) -> usize {
        let (n, p) = (self.n, self.axes.len());
        let mut rank = 0;
        let mut prev = 0;
        for (i, &a) in self.axes.iter().enumerate() {
            for skipped in prev + 1..a {
                rank += binomial(n - skipped, p - i - 1);
            }
            prev = a;
        }
        rank
    }

    pub fn contains(&self, axis: usize) -> bool {
        self.axes.binary_search(&axis).is_ok()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sep = if self.n >= 10 { "," } else { "" };
        let parts: Vec<String> = self.axes.iter().map(|a| a.to_string()).collect();
        write!(f, "{}", parts.join(sep))
    }
}

/// Sorts an index sequence and reports the permutation parity.
///
/// Returns `(None, 0)` when an axis repeats, since the corresponding basis
/// element vanishes.
pub fn canonicalize_index(n: usize, seq: &[usize]) -> Result<(Option<MultiIndex>, i8)> {
    if let Some(&a) = seq.iter().find(|&&a| a == 0 || a > n) {
        return Err(Error::domain(format!("axis {a} outside 1..={n}")));
    }
    let mut axes = seq.to_vec();
    let mut sign = 1i8;
    // insertion sort, counting transpositions
    for i in 1..axes.len() {
        let mut j = i;
        while j > 0 && axes[j - 1] > axes[j] {
            axes.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if axes.windows(2).any(|w| w[0] == w[1]) {
        return Ok((None, 0));
    }
    Ok((Some(MultiIndex { n, axes }), sign))
}

macro_rules! graded_coordinates {
    ($name:ident, $what:literal) => {
        #[doc = concat!("Coordinates of a ", $what, " on the canonical increasing-index basis.")]
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        pub struct $name {
            n: usize,
            p: usize,
            coords: Vec<f64>,
        }

        impl $name {
            pub fn zeros(n: usize, p: usize) -> Result<Self> {
                if p > n {
                    return Err(Error::domain(format!("degree {p} exceeds dimension {n}")));
                }
                Ok(Self {
                    n,
                    p,
                    coords: vec![0.0; binomial(n, p)],
                })
            }

            pub fn from_coords(n: usize, p: usize, coords: Vec<f64>) -> Result<Self> {
                if p > n {
                    return Err(Error::domain(format!("degree {p} exceeds dimension {n}")));
                }
                if coords.len() != binomial(n, p) {
                    return Err(Error::domain(format!(
                        "expected {} coordinates for (n={n}, p={p}), got {}",
                        binomial(n, p),
                        coords.len()
                    )));
                }
                if coords.iter().any(|c| !c.is_finite()) {
                    return Err(Error::domain("non-finite coordinate"));
                }
                Ok(Self { n, p, coords })
            }

            /// Builds from `(index sequence, value)` entries in any index order;
            /// permuted sequences are folded onto the canonical index with their sign.
            pub fn from_entries(n: usize, p: usize, entries: &[(&[usize], f64)]) -> Result<Self> {
                let mut out = Self::zeros(n, p)?;
                for &(seq, value) in entries {
                    if seq.len() != p {
                        return Err(Error::domain(format!(
                            "index {seq:?} has length {}, expected {p}",
                            seq.len()
                        )));
                    }
                    match canonicalize_index(n, seq)? {
                        (Some(idx), sign) => out.coords[idx.position()] += f64::from(sign) * value,
                        (None, _) if value == 0.0 => {}
                        (None, _) => {
                            return Err(Error::domain(format!(
                                "repeated axis in {seq:?} cannot carry a nonzero coordinate"
                            )))
                        }
                    }
                }
                Ok(out)
            }

            /// The basis element for `index`.
            pub fn basis(index: &MultiIndex) -> Self {
                let mut coords = vec![0.0; binomial(index.n, index.degree())];
                coords[index.position()] = 1.0;
                Self {
                    n: index.n,
                    p: index.degree(),
                    coords,
                }
            }

            pub fn dim(&self) -> usize {
                self.n
            }

            pub fn degree(&self) -> usize {
                self.p
            }

            pub fn coords(&self) -> &[f64] {
                &self.coords
            }

            pub fn into_coords(self) -> Vec<f64> {
                self.coords
            }

            pub fn get(&self, index: &MultiIndex) -> f64 {
                self.coords[index.position()]
            }

            /// Signed read through an arbitrary index sequence, e.g. `[3, 1]`.
            pub fn component(&self, seq: &[usize]) -> Result<f64> {
                if seq.len() != self.p {
                    return Err(Error::domain(format!(
                        "index {seq:?} has length {}, expected {}",
                        seq.len(),
                        self.p
                    )));
                }
                Ok(match canonicalize_index(self.n, seq)? {
                    (Some(idx), sign) => f64::from(sign) * self.get(&idx),
                    (None, _) => 0.0,
                })
            }

            pub fn iter(&self) -> impl Iterator<Item = (MultiIndex, f64)> + '_ {
                MultiIndex::all(self.n, self.p)
                    .into_iter()
                    .zip(self.coords.iter().copied())
            }

            pub fn norm(&self) -> f64 {
                norm(&self.coords)
            }

            pub fn is_zero(&self) -> bool {
                self.coords.iter().all(|&c| c == 0.0)
            }

            pub fn scaled(&self, factor: f64) -> Self {
                Self {
                    n: self.n,
                    p: self.p,
                    coords: self.coords.iter().map(|c| c * factor).collect(),
                }
            }

            pub fn ensure_shape(&self, n: usize, p: usize) -> Result<()> {
                if self.n != n || self.p != p {
                    return Err(Error::ShapeMismatch {
                        expected_n: n,
                        expected_p: p,
                        n: self.n,
                        p: self.p,
                    });
                }
                Ok(())
            }

            /// Coordinates `(c¹², c²³, c³¹)` for n = 3, p = 2.
            pub fn from_triple(c12: f64, c23: f64, c31: f64) -> Self {
                Self {
                    n: 3,
                    p: 2,
                    coords: vec![c12, -c31, c23],
                }
            }

            /// Inverse of [`Self::from_triple`].
            pub fn triple(&self) -> Result<[f64; 3]> {
                self.ensure_shape(3, 2)?;
                Ok([self.coords[0], self.coords[2], -self.coords[1]])
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                if let Ok([a, b, c]) = self.triple() {
                    return write!(f, "(12: {a}, 23: {b}, 31: {c})");
                }
                let parts: Vec<String> = self.iter().map(|(i, v)| format!("{i}: {v}")).collect();
                write!(f, "({})", parts.join(", "))
            }
        }

        impl std::ops::Add for &$name {
            type Output = $name;
            fn add(self, rhs: &$name) -> $name {
                assert_eq!((self.n, self.p), (rhs.n, rhs.p), "shape mismatch in addition");
                $name {
                    n: self.n,
                    p: self.p,
                    coords: self.coords.iter().zip(&rhs.coords).map(|(a, b)| a + b).collect(),
                }
            }
        }

        impl std::ops::Sub for &$name {
            type Output = $name;
            fn sub(self, rhs: &$name) -> $name {
                assert_eq!((self.n, self.p), (rhs.n, rhs.p), "shape mismatch in subtraction");
                $name {
                    n: self.n,
                    p: self.p,
                    coords: self.coords.iter().zip(&rhs.coords).map(|(a, b)| a - b).collect(),
                }
            }
        }
    };
}

graded_coordinates!(KVector, "p-vector in ΛᵖTₓℝⁿ");
graded_coordinates!(KCovector, "p-covector in ΛᵖT*ₓℝⁿ");

/// All p×p minors of the n×p matrix whose columns are `vectors`, in
/// lexicographic row-index order.
fn minors(vectors: &[Vec<f64>]) -> Result<(usize, Vec<f64>)> {
    let p = vectors.len();
    let n = vectors.first().map(Vec::len).ok_or_else(|| Error::domain("no vectors given"))?;
    if vectors.iter().any(|v| v.len() != n) {
        return Err(Error::domain("vectors have different lengths"));
    }
    if p > n {
        return Err(Error::domain(format!("{p} vectors in dimension {n}")));
    }
    if vectors.iter().flatten().any(|c| !c.is_finite()) {
        return Err(Error::domain("non-finite vector entry"));
    }
    let coords = MultiIndex::all(n, p)
        .iter()
        .map(|idx| {
            let rows: Vec<Vec<f64>> = idx
                .axes()
                .iter()
                .map(|&r| vectors.iter().map(|v| v[r - 1]).collect())
                .collect();
            determinant(&rows)
        })
        .collect();
    Ok((n, coords))
}

/// u₁∧…∧u_p: coordinate I is the determinant of the rows I of [u₁ … u_p].
pub fn wedge_vectors(vectors: &[Vec<f64>]) -> Result<KVector> {
    let (n, coords) = minors(vectors)?;
    KVector::from_coords(n, vectors.len(), coords)
}

/// α₁∧…∧α_p for 1-forms given by their components.
pub fn wedge_covectors(covectors: &[Vec<f64>]) -> Result<KCovector> {
    let (n, coords) = minors(covectors)?;
    KCovector::from_coords(n, covectors.len(), coords)
}

/// Exterior product of two multivectors of the same ambient dimension.
pub fn wedge(a: &KVector, b: &KVector) -> Result<KVector> {
    if a.n != b.n {
        return Err(Error::domain(format!("dimensions {} and {} differ", a.n, b.n)));
    }
    let mut out = KVector::zeros(a.n, a.p + b.p)?;
    for (i, av) in a.iter().filter(|(_, v)| *v != 0.0) {
        for (j, bv) in b.iter().filter(|(_, v)| *v != 0.0) {
            let seq: Vec<usize> = i.axes().iter().chain(j.axes()).copied().collect();
            if let (Some(k), sign) = canonicalize_index(a.n, &seq)? {
                out.coords[k.position()] += f64::from(sign) * av * bv;
            }
        }
    }
    Ok(out)
}

/// Duality pairing ⟨α, u⟩ = Σ_I α_I u^I.
pub fn pair(alpha: &KCovector, u: &KVector) -> Result<f64> {
    u.ensure_shape(alpha.n, alpha.p)?;
    Ok(dot(&alpha.coords, &u.coords))
}

/// Contraction u⌟ω of a p-vector into an m-form, m ≥ p, giving an (m−p)-form.
pub fn contract(u: &KVector, omega: &KCovector) -> Result<KCovector> {
    if u.n != omega.n || u.p > omega.p {
        return Err(Error::ShapeMismatch {
            expected_n: omega.n,
            expected_p: omega.p,
            n: u.n,
            p: u.p,
        });
    }
    let mut out = KCovector::zeros(u.n, omega.p - u.p)?;
    for (k, slot) in MultiIndex::all(u.n, omega.p - u.p).iter().zip(out.coords.iter_mut()) {
        let mut acc = 0.0;
        for (i, uv) in u.iter().filter(|(_, v)| *v != 0.0) {
            let seq: Vec<usize> = i.axes().iter().chain(k.axes()).copied().collect();
            if let (Some(j), sign) = canonicalize_index(u.n, &seq)? {
                acc += f64::from(sign) * uv * omega.get(&j);
            }
        }
        *slot = acc;
    }
    Ok(out)
}

/// The standard volume form dx¹∧…∧dxⁿ.
pub fn volume_form(n: usize) -> KCovector {
    KCovector::basis(&MultiIndex {
        n,
        axes: (1..=n).collect(),
    })
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Orthonormal basis of ker(u⌟ω) for a bivector in ℝ³, ordered so that its
/// wedge is a positive multiple of `u`.
pub fn plane_from_bivector(u: &KVector, omega: &KCovector) -> Result<[[f64; 3]; 2]> {
    u.ensure_shape(3, 2)?;
    omega.ensure_shape(3, 3)?;
    if u.is_zero() {
        return Err(Error::ZeroSection);
    }
    if omega.is_zero() {
        return Err(Error::domain("volume form vanishes"));
    }
    let alpha = contract(u, omega)?;
    let a_norm = alpha.norm();
    let normal = [
        alpha.coords[0] / a_norm,
        alpha.coords[1] / a_norm,
        alpha.coords[2] / a_norm,
    ];
    // the coordinate axis least aligned with the normal seeds the first basis vector
    let seed_axis = (0..3)
        .min_by(|&i, &j| normal[i].abs().total_cmp(&normal[j].abs()))
        .unwrap_or(0);
    let mut e = [0.0; 3];
    e[seed_axis] = 1.0;
    let proj = dot(&e, &normal);
    let mut first = [e[0] - proj * normal[0], e[1] - proj * normal[1], e[2] - proj * normal[2]];
    let len = norm(&first);
    first.iter_mut().for_each(|c| *c /= len);
    let second = cross(normal, first);

    let spanned = wedge_vectors(&[first.to_vec(), second.to_vec()])?;
    if dot(spanned.coords(), u.coords()) > 0.0 {
        Ok([first, second])
    } else {
        Ok([second, first])
    }
}

/// Whether `u` is (within `tol`) a wedge of p vectors.
///
/// Always true for p ∈ {1, n−1, n}; for p = 2 tests ‖u∧u‖ ≤ tol·‖u‖².
pub fn is_decomposable(u: &KVector, tol: f64) -> Result<bool> {
    if u.is_zero() {
        return Err(Error::ZeroSection);
    }
    let (n, p) = (u.n, u.p);
    if p == 1 || p + 1 == n || p == n {
        return Ok(true);
    }
    if p == 2 {
        let square = wedge(u, u)?;
        let scale = u.norm();
        return Ok(square.norm() <= tol * scale * scale);
    }
    Err(Error::UnsupportedDegree { n, p })
}

/// Oriented projective class of a nonzero p-vector.
///
/// [`GrassmannPoint::new`] additionally requires decomposability, so the class
/// is an oriented p-plane. [`GrassmannPoint::from_ray`] accepts any nonzero
/// p-vector; the Legendre layer uses it for rays through arbitrary points of
/// the fiber, which for 2 ≤ p ≤ n−2 need not be planes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrassmannPoint {
    representative: KVector,
}

impl GrassmannPoint {
    pub fn new(representative: KVector) -> Result<Self> {
        if !is_decomposable(&representative, DEFAULT_TOL)? {
            return Err(Error::domain("representative is not decomposable"));
        }
        Ok(Self { representative })
    }

    pub fn from_ray(representative: KVector) -> Result<Self> {
        if representative.is_zero() {
            return Err(Error::ZeroSection);
        }
        Ok(Self { representative })
    }

    pub fn representative(&self) -> &KVector {
        &self.representative
    }

    /// Unit-norm representative.
    pub fn unit(&self) -> KVector {
        self.representative.scaled(1.0 / self.representative.norm())
    }

    pub fn is_plane(&self) -> bool {
        is_decomposable(&self.representative, DEFAULT_TOL).unwrap_or(false)
    }
}

/// Whether `b = λ·a` for some λ > 0, comparing unit-normalized representatives.
pub fn grassmann_eq(a: &GrassmannPoint, b: &GrassmannPoint, tol: f64) -> Result<bool> {
    let (ra, rb) = (&a.representative, &b.representative);
    rb.ensure_shape(ra.n, ra.p)?;
    if ra.is_zero() || rb.is_zero() {
        return Err(Error::ZeroSection);
    }
    let diff = &a.unit() - &b.unit();
    Ok(diff.norm() <= tol)
}
