//! Random homomorphisms of F_d into S_n (acting by permutation matrices) and
//! into U(n) (Haar distributed).

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::free_group::ReducedWord;
use crate::linalg::{CMatrix, C64};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    Permutation,
    Unitary,
}

impl std::str::FromStr for Flavor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "permutation" | "cover" => Ok(Flavor::Permutation),
            "unitary" | "bundle" => Ok(Flavor::Unitary),
            _ => Err(Error::Config(format!("unknown flavor {s:?}"))),
        }
    }
}

/// The action of ρ(w) on ℂⁿ.
#[derive(Clone, Debug)]
pub enum RepAction {
    /// e_k ↦ e_{perm[k]}.
    Permutation(Vec<u32>),
    Dense(CMatrix),
}

impl RepAction {
    pub fn to_matrix(&self) -> CMatrix {
        match self {
            RepAction::Dense(m) => m.clone(),
            RepAction::Permutation(p) => permutation_matrix(p),
        }
    }
}

pub fn permutation_matrix(p: &[u32]) -> CMatrix {
    let n = p.len();
    let mut m = CMatrix::zeros(n, n);
    for (k, &img) in p.iter().enumerate() {
        m[(img as usize, k)] = C64::new(1.0, 0.0);
    }
    m
}

#[derive(Clone, Debug)]
enum Images {
    Permutation { forward: Vec<Vec<u32>>, backward: Vec<Vec<u32>> },
    Unitary { forward: Vec<CMatrix>, backward: Vec<CMatrix> },
}

/// Images of the generators under a sampled homomorphism.
#[derive(Clone, Debug)]
pub struct RepresentationSample {
    pub flavor: Flavor,
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    images: Images,
}

#[derive(Serialize, Deserialize)]
struct RepWire {
    flavor: Flavor,
    n: usize,
    d: usize,
    seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    permutations: Option<Vec<Vec<u32>>>,
}

fn invert(p: &[u32]) -> Vec<u32> {
    let mut q = vec![0u32; p.len()];
    for (k, &img) in p.iter().enumerate() {
        q[img as usize] = k as u32;
    }
    q
}

/// Haar unitary: QR of a complex Ginibre matrix with the phases of R's
/// diagonal moved into Q.
pub fn haar_unitary(n: usize, rng: &mut impl Rng) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let g = CMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * s, im * s)
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

impl RepresentationSample {
    /// Samples d independent generator images, deterministic in `seed`.
    pub fn sample(flavor: Flavor, n: usize, d: usize, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Dimension(format!("representation dimension {n} < 2")));
        }
        if d < 1 {
            return Err(Error::Dimension("rank must be at least 1".into()));
        }
        let mut rng = rng::seeded(seed);
        let images = match flavor {
            Flavor::Permutation => {
                let forward: Vec<Vec<u32>> = (0..d)
                    .map(|_| {
                        let mut p: Vec<u32> = (0..n as u32).collect();
                        p.shuffle(&mut rng);
                        p
                    })
                    .collect();
                let backward = forward.iter().map(|p| invert(p)).collect();
                Images::Permutation { forward, backward }
            }
            Flavor::Unitary => {
                let forward: Vec<CMatrix> = (0..d).map(|_| haar_unitary(n, &mut rng)).collect();
                let backward = forward.iter().map(|u| u.adjoint()).collect();
                Images::Unitary { forward, backward }
            }
        };
        Ok(RepresentationSample { flavor, n, d, seed, images })
    }

    /// A permutation representation with prescribed generator images.
    pub fn from_permutations(perms: Vec<Vec<u32>>, seed: u64) -> Result<Self> {
        let d = perms.len();
        if d == 0 {
            return Err(Error::Dimension("rank must be at least 1".into()));
        }
        let n = perms[0].len();
        if n < 2 {
            return Err(Error::Dimension(format!("representation dimension {n} < 2")));
        }
        for p in &perms {
            let mut seen = vec![false; n];
            if p.len() != n {
                return Err(Error::Shape("permutations of different sizes".into()));
            }
            for &x in p {
                let x = x as usize;
                if x >= n || seen[x] {
                    return Err(Error::Shape("image is not a permutation".into()));
                }
                seen[x] = true;
            }
        }
        let backward = perms.iter().map(|p| invert(p)).collect();
        Ok(RepresentationSample {
            flavor: Flavor::Permutation,
            n,
            d,
            seed,
            images: Images::Permutation { forward: perms, backward },
        })
    }

    pub fn permutations(&self) -> Option<&[Vec<u32>]> {
        match &self.images {
            Images::Permutation { forward, .. } => Some(forward),
            Images::Unitary { .. } => None,
        }
    }

    /// Image of generator `i` (1-based), as a matrix.
    pub fn generator_matrix(&self, i: usize) -> CMatrix {
        self.letter_action(i as i32).to_matrix()
    }

    fn letter_action(&self, x: i32) -> RepAction {
        let k = x.unsigned_abs() as usize - 1;
        match &self.images {
            Images::Permutation { forward, backward } => {
                RepAction::Permutation(if x > 0 { forward[k].clone() } else { backward[k].clone() })
            }
            Images::Unitary { forward, backward } => {
                RepAction::Dense(if x > 0 { forward[k].clone() } else { backward[k].clone() })
            }
        }
    }

    fn check_word(&self, w: &ReducedWord) -> Result<()> {
        if w.max_generator() > self.d {
            return Err(Error::Shape(format!("word {w} uses a generator beyond rank {}", self.d)));
        }
        Ok(())
    }

    /// ρ(w) in a form suited to its flavor.
    pub fn action(&self, w: &ReducedWord) -> Result<RepAction> {
        self.check_word(w)?;
        match &self.images {
            Images::Permutation { forward, backward } => {
                // ρ(s₁⋯s_k)e_j = ρ(s₁)(⋯ρ(s_k)e_j): apply the last letter first.
                let mut idx: Vec<u32> = (0..self.n as u32).collect();
                for &x in w.letters().iter().rev() {
                    let k = x.unsigned_abs() as usize - 1;
                    let p = if x > 0 { &forward[k] } else { &backward[k] };
                    for v in idx.iter_mut() {
                        *v = p[*v as usize];
                    }
                }
                Ok(RepAction::Permutation(idx))
            }
            Images::Unitary { forward, backward } => {
                let mut m = CMatrix::identity(self.n, self.n);
                for &x in w.letters() {
                    let k = x.unsigned_abs() as usize - 1;
                    m = if x > 0 { m * &forward[k] } else { m * &backward[k] };
                }
                Ok(RepAction::Dense(m))
            }
        }
    }

    /// ρ(w) as a dense n×n matrix.
    pub fn evaluate(&self, w: &ReducedWord) -> Result<CMatrix> {
        Ok(self.action(w)?.to_matrix())
    }

    /// P ρ(w) P with P the projector onto zero-mean vectors.
    pub fn restrict_zero_mean(&self, w: &ReducedWord) -> Result<CMatrix> {
        if self.flavor != Flavor::Permutation {
            return Err(Error::Flavor("zero-mean restriction needs a permutation representation".into()));
        }
        let p = ZeroMeanProjector { n: self.n }.matrix();
        Ok(&p * self.evaluate(w)? * &p)
    }

    /// Whether the generated group acts transitively on {0, …, n−1}.
    pub fn is_transitive(&self) -> Result<bool> {
        let Images::Permutation { forward, .. } = &self.images else {
            return Err(Error::Flavor("transitivity is defined for permutation representations".into()));
        };
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut components = self.n;
        for p in forward {
            for (k, &img) in p.iter().enumerate() {
                let a = find(&mut parent, k);
                let b = find(&mut parent, img as usize);
                if a != b {
                    parent[a] = b;
                    components -= 1;
                }
            }
        }
        Ok(components == 1)
    }

    /// Short identifier: flavor, sizes and seed.
    pub fn id(&self) -> String {
        let f = match self.flavor {
            Flavor::Permutation => "perm",
            Flavor::Unitary => "unitary",
        };
        format!("{f}-n{}-d{}-s{}", self.n, self.d, self.seed)
    }

    pub fn to_json(&self) -> Result<String> {
        let wire = RepWire {
            flavor: self.flavor,
            n: self.n,
            d: self.d,
            seed: self.seed,
            permutations: self.permutations().map(|p| p.to_vec()),
        };
        Ok(serde_json::to_string(&wire)?)
    }

    /// Permutation samples are read back verbatim; unitary samples are
    /// regenerated from their seed.
    pub fn from_json(s: &str) -> Result<Self> {
        let wire: RepWire = serde_json::from_str(s)?;
        match (wire.flavor, wire.permutations) {
            (Flavor::Permutation, Some(p)) => {
                let rep = Self::from_permutations(p, wire.seed)?;
                if rep.n != wire.n || rep.d != wire.d {
                    return Err(Error::Shape("permutation list disagrees with n or d".into()));
                }
                Ok(rep)
            }
            (flavor, _) => Self::sample(flavor, wire.n, wire.d, wire.seed),
        }
    }
}

/// P = Id − (1/n)·J, the orthogonal projector onto zero-mean vectors.
#[derive(Clone, Copy, Debug)]
pub struct ZeroMeanProjector {
    pub n: usize,
}

impl ZeroMeanProjector {
    pub fn matrix(&self) -> CMatrix {
        let n = self.n;
        let c = C64::new(1.0 / n as f64, 0.0);
        DMatrix::from_fn(n, n, |i, j| if i == j { C64::new(1.0, 0.0) - c } else { -c })
    }

    pub fn apply<T>(&self, x: &mut [T])
    where
        T: Copy + std::ops::SubAssign + std::iter::Sum + std::ops::Div<f64, Output = T>,
    {
        let mean = x.iter().copied().sum::<T>() / self.n as f64;
        for v in x.iter_mut() {
            *v -= mean;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dense_norm;

    #[test]
    fn deterministic_in_seed() {
        let a = RepresentationSample::sample(Flavor::Unitary, 4, 2, 11).unwrap();
        let b = RepresentationSample::sample(Flavor::Unitary, 4, 2, 11).unwrap();
        assert_eq!(a.generator_matrix(2), b.generator_matrix(2));
    }

    #[test]
    fn unitary_columns_orthonormal() {
        let r = RepresentationSample::sample(Flavor::Unitary, 4, 1, 1).unwrap();
        let u = r.generator_matrix(1);
        let e = &u.adjoint() * &u - CMatrix::identity(4, 4);
        assert!(e.iter().all(|z| z.norm() <= 1e-12));
    }

    #[test]
    fn small_dimension_rejected() {
        assert!(matches!(
            RepresentationSample::sample(Flavor::Permutation, 1, 1, 0),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn transposition_on_zero_mean() {
        let rep = RepresentationSample::from_permutations(vec![vec![1, 0]], 0).unwrap();
        let m = rep.restrict_zero_mean(&ReducedWord::letter(1)).unwrap();
        let mut ev: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        assert!((ev[0] + 1.0).abs() < 1e-14 && ev[1].abs() < 1e-14);
    }

    #[test]
    fn transitivity_examples() {
        let id = RepresentationSample::from_permutations(vec![vec![0, 1]], 0).unwrap();
        assert!(!id.is_transitive().unwrap());
        let cycle = RepresentationSample::from_permutations(vec![vec![1, 2, 3, 4, 0]], 0).unwrap();
        assert!(cycle.is_transitive().unwrap());
        let u = RepresentationSample::sample(Flavor::Unitary, 3, 1, 0).unwrap();
        assert!(u.is_transitive().is_err());
        assert!(u.restrict_zero_mean(&ReducedWord::identity()).is_err());
    }

    #[test]
    fn identity_word_is_identity() {
        let r = RepresentationSample::sample(Flavor::Permutation, 5, 2, 3).unwrap();
        assert_eq!(r.evaluate(&ReducedWord::identity()).unwrap(), CMatrix::identity(5, 5));
        let p = r.restrict_zero_mean(&ReducedWord::identity()).unwrap();
        assert!((p - ZeroMeanProjector { n: 5 }.matrix()).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn json_roundtrip() {
        for flavor in [Flavor::Permutation, Flavor::Unitary] {
            let r = RepresentationSample::sample(flavor, 6, 2, 42).unwrap();
            let back = RepresentationSample::from_json(&r.to_json().unwrap()).unwrap();
            for i in 1..=2 {
                assert_eq!(r.generator_matrix(i), back.generator_matrix(i));
            }
        }
    }

    #[test]
    fn zero_mean_compression_contracts() {
        let r = RepresentationSample::sample(Flavor::Permutation, 7, 2, 5).unwrap();
        let w = ReducedWord::reduce(&[1, 2, -1, 2], 2).unwrap();
        assert!(dense_norm(&r.restrict_zero_mean(&w).unwrap()) <= 1.0 + 1e-12);
    }
}
