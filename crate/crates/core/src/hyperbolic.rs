//! Fuchsian models: Möbius transformations, hyperbolic distance on the upper
//! half-plane, and the lattice-point sets S(T) = {γ : d(γw, w) ≤ R}.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::free_group::{generator_letters, ReducedWord};

pub type Point = Complex64;

/// Default cap on words visited while enumerating lattice points.
pub const DEFAULT_LATTICE_BUDGET: usize = 20_000_000;

/// Word length up to which generators are probed for relations.
pub const FREENESS_PROBE_LENGTH: usize = 8;

fn check_point(z: Point) -> Result<()> {
    if !(z.im > 0.0) || !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::Domain(format!("point {z} is not in the upper half-plane")));
    }
    Ok(())
}

/// cosh d(z, w) = 1 + |z − w|² / (2 Im z Im w).
pub fn cosh_distance(z: Point, w: Point) -> Result<f64> {
    check_point(z)?;
    check_point(w)?;
    Ok(1.0 + (z - w).norm_sqr() / (2.0 * z.im * w.im))
}

pub fn hyp_distance(z: Point, w: Point) -> Result<f64> {
    // acosh(1 + x) = log1p(x + sqrt(x(x + 2))) keeps precision near 0
    let x = cosh_distance(z, w)? - 1.0;
    Ok((x + (x * (x + 2.0)).sqrt()).ln_1p())
}

/// z ↦ (az + b)/(cz + d), stored up to sign.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[[f64; 2]; 2]", into = "[[f64; 2]; 2]")]
pub struct Moebius {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl From<[[f64; 2]; 2]> for Moebius {
    fn from(m: [[f64; 2]; 2]) -> Self {
        Moebius { a: m[0][0], b: m[0][1], c: m[1][0], d: m[1][1] }
    }
}

impl From<Moebius> for [[f64; 2]; 2] {
    fn from(m: Moebius) -> Self {
        [[m.a, m.b], [m.c, m.d]]
    }
}

impl Moebius {
    pub const IDENTITY: Moebius = Moebius { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    /// Checked constructor: determinant one to 1e-12.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let m = Moebius { a, b, c, d };
        if (m.det() - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("determinant {} is not 1", m.det())));
        }
        Ok(m)
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn mul(&self, o: &Moebius) -> Moebius {
        Moebius {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    pub fn inverse(&self) -> Moebius {
        Moebius { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    pub fn apply(&self, z: Point) -> Point {
        (z * self.a + self.b) / (z * self.c + self.d)
    }

    /// Distance to ±Id in the max norm.
    pub fn distance_to_identity(&self) -> f64 {
        let plus = (self.a - 1.0).abs().max(self.b.abs()).max(self.c.abs()).max((self.d - 1.0).abs());
        let minus = (self.a + 1.0).abs().max(self.b.abs()).max(self.c.abs()).max((self.d + 1.0).abs());
        plus.min(minus)
    }

    /// cosh d(γw, w), computed without cancellation for w in ℍ.
    pub fn cosh_displacement(&self, w: Point) -> f64 {
        // Im γw = Im w / |cw + d|², so the general formula simplifies.
        let gw = self.apply(w);
        let denom = (w * self.c + self.d).norm_sqr();
        1.0 + (gw - w).norm_sqr() * denom / (2.0 * w.im * w.im)
    }
}

/// Results of the checks run when a model is loaded.
#[derive(Clone, Debug, Serialize)]
pub struct ModelCheck {
    pub words_probed: usize,
    /// Smallest distance to ±Id over nonempty probed words.
    pub min_distance_to_identity: f64,
    pub commutator_trace: Option<f64>,
    pub commutator_distance_to_identity: Option<f64>,
}

/// A free Fuchsian group given by generator matrices and a base point.
#[derive(Clone, Debug, Serialize)]
pub struct SurfaceModel {
    pub name: String,
    pub generators: Vec<Moebius>,
    #[serde(serialize_with = "ser_point")]
    pub base_point: Point,
    /// Geometric constant C used in the cusp height L = C/κ.
    pub c_geo: f64,
    #[serde(skip)]
    inverses: Vec<Moebius>,
}

fn ser_point<S: serde::Serializer>(p: &Point, s: S) -> std::result::Result<S::Ok, S::Error> {
    [p.re, p.im].serialize(s)
}

#[derive(Deserialize)]
struct ModelWire {
    name: String,
    generators: Vec<Moebius>,
    base_point: [f64; 2],
    #[serde(default = "default_c_geo")]
    c_geo: f64,
}

fn default_c_geo() -> f64 {
    1.0
}

impl SurfaceModel {
    /// Builds a model and runs the freeness probe; rank-two models must also
    /// have a parabolic commutator (one cusp).
    pub fn new(name: &str, generators: Vec<Moebius>, base_point: Point, c_geo: f64) -> Result<Self> {
        check_point(base_point)?;
        if generators.is_empty() {
            return Err(Error::Dimension("a model needs at least one generator".into()));
        }
        for g in &generators {
            Moebius::new(g.a, g.b, g.c, g.d)?;
        }
        if !(c_geo >= 0.0) {
            return Err(Error::Domain("C_geo must be non-negative".into()));
        }
        let inverses = generators.iter().map(Moebius::inverse).collect();
        let model = SurfaceModel { name: name.to_string(), generators, base_point, c_geo, inverses };
        let check = model.check(FREENESS_PROBE_LENGTH);
        if check.min_distance_to_identity <= 1e-6 {
            return Err(Error::Domain(format!(
                "generators satisfy a relation of length ≤ {FREENESS_PROBE_LENGTH}"
            )));
        }
        if let (Some(t), Some(dist)) = (check.commutator_trace, check.commutator_distance_to_identity) {
            if (t.abs() - 2.0).abs() > 1e-9 || dist <= 1e-6 {
                return Err(Error::Domain(format!("commutator is not parabolic (trace {t})")));
            }
        }
        Ok(model)
    }

    /// Once-punctured torus: γ₁ = [[1,1],[1,2]], γ₂ = [[1,−1],[−1,2]], w = i.
    pub fn punctured_torus() -> Self {
        Self::new(
            "punctured-torus",
            vec![Moebius { a: 1.0, b: 1.0, c: 1.0, d: 2.0 }, Moebius { a: 1.0, b: -1.0, c: -1.0, d: 2.0 }],
            Point::new(0.0, 1.0),
            1.0,
        )
        .expect("default model is valid")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let w: ModelWire = serde_json::from_str(s)?;
        Self::new(&w.name, w.generators, Point::new(w.base_point[0], w.base_point[1]), w.c_geo)
    }

    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Out<'a> {
            name: &'a str,
            generators: &'a [Moebius],
            base_point: [f64; 2],
            c_geo: f64,
        }
        Ok(serde_json::to_string(&Out {
            name: &self.name,
            generators: &self.generators,
            base_point: [self.base_point.re, self.base_point.im],
            c_geo: self.c_geo,
        })?)
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    fn letter(&self, x: i32) -> &Moebius {
        let k = x.unsigned_abs() as usize - 1;
        if x > 0 {
            &self.generators[k]
        } else {
            &self.inverses[k]
        }
    }

    pub fn word_to_moebius(&self, w: &ReducedWord) -> Result<Moebius> {
        if w.max_generator() > self.rank() {
            return Err(Error::InvalidLetter { letter: w.max_generator() as i32, rank: self.rank() });
        }
        Ok(w.letters().iter().fold(Moebius::IDENTITY, |m, &x| m.mul(self.letter(x))))
    }

    /// d(γw, w).
    pub fn displacement(&self, g: &Moebius) -> f64 {
        let x = g.cosh_displacement(self.base_point) - 1.0;
        (x + (x * (x.max(0.0) + 2.0)).max(0.0).sqrt()).max(0.0).ln_1p()
    }

    pub fn max_generator_displacement(&self) -> f64 {
        self.generators.iter().map(|g| self.displacement(g)).fold(0.0, f64::max)
    }

    pub fn min_generator_displacement(&self) -> f64 {
        self.generators.iter().map(|g| self.displacement(g)).fold(f64::INFINITY, f64::min)
    }

    /// Cusp truncation height L = C/κ.
    pub fn cusp_region_height(&self, kappa: f64) -> f64 {
        cusp_region_height(kappa, self.c_geo)
    }

    /// Relation probe over all nonempty reduced words up to `len`.
    pub fn check(&self, len: usize) -> ModelCheck {
        let letters = generator_letters(self.rank());
        let mut probed = 0usize;
        let mut min_dist = f64::INFINITY;
        let mut stack: Vec<(Moebius, i32, usize)> = vec![(Moebius::IDENTITY, 0, 0)];
        while let Some((m, last, depth)) = stack.pop() {
            if depth == len {
                continue;
            }
            for &x in &letters {
                if x == -last {
                    continue;
                }
                let next = m.mul(self.letter(x));
                probed += 1;
                min_dist = min_dist.min(next.distance_to_identity());
                stack.push((next, x, depth + 1));
            }
        }
        let (tr, dist) = if self.rank() == 2 {
            let (a, b) = (&self.generators[0], &self.generators[1]);
            let comm = a.mul(b).mul(&a.inverse()).mul(&b.inverse());
            (Some(comm.trace()), Some(comm.distance_to_identity()))
        } else {
            (None, None)
        };
        ModelCheck {
            words_probed: probed,
            min_distance_to_identity: min_dist,
            commutator_trace: tr,
            commutator_distance_to_identity: dist,
        }
    }
}

/// L = C/κ.
pub fn cusp_region_height(kappa: f64, c_geo: f64) -> f64 {
    c_geo / kappa
}

/// C + log(1/κ).
pub fn diam_k_bound(kappa: f64, c_geo: f64) -> f64 {
    c_geo - kappa.ln()
}

/// 2(C + log(1/κ) + T).
pub fn lattice_radius_bound(t: f64, kappa: f64, c_geo: f64) -> f64 {
    2.0 * (diam_k_bound(kappa, c_geo) + t)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LatticePoint {
    pub word: ReducedWord,
    pub displacement: f64,
}

/// S(T): group elements moving the base point at most `radius_bound`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LatticePointSet {
    pub t: f64,
    pub kappa: f64,
    pub c_geo: f64,
    pub radius_bound: f64,
    pub prune_slack: f64,
    pub visited: usize,
    /// Sorted shortlex by word.
    pub elements: Vec<LatticePoint>,
}

impl LatticePointSet {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &ReducedWord> {
        self.elements.iter().map(|p| &p.word)
    }

    pub fn contains(&self, w: &ReducedWord) -> bool {
        self.elements.binary_search_by(|p| p.word.cmp(w)).is_ok()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["word", "word_length", "displacement"])?;
        for p in &self.elements {
            wtr.write_record([p.word.to_string(), p.word.len().to_string(), format!("{:.12}", p.displacement)])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Parameters of a lattice-point enumeration.
#[derive(Clone, Copy, Debug)]
pub struct LatticeQuery {
    pub t: f64,
    pub kappa: f64,
    pub c_geo: f64,
    /// Defaults to twice the largest generator displacement.
    pub prune_slack: Option<f64>,
    pub budget: usize,
}

impl LatticeQuery {
    pub fn new(t: f64, kappa: f64, c_geo: f64) -> Self {
        LatticeQuery { t, kappa, c_geo, prune_slack: None, budget: DEFAULT_LATTICE_BUDGET }
    }
}

/// Depth-first enumeration over reduced words, pruning a branch once its
/// displacement exceeds the bound plus slack.
pub fn lattice_point_set(model: &SurfaceModel, q: &LatticeQuery) -> Result<LatticePointSet> {
    if !(q.t > 0.0) {
        return Err(Error::Domain("T must be positive".into()));
    }
    if !(q.kappa > 0.0 && q.kappa <= 1.0) {
        return Err(Error::Domain("κ must lie in (0, 1]".into()));
    }
    if !(q.c_geo >= 0.0) {
        return Err(Error::Domain("C_geo must be non-negative".into()));
    }
    let bound = lattice_radius_bound(q.t, q.kappa, q.c_geo);
    let slack = q.prune_slack.unwrap_or(2.0 * model.max_generator_displacement());
    let prune = bound + slack;
    let letters = generator_letters(model.rank());
    let mut elements = vec![LatticePoint { word: ReducedWord::identity(), displacement: 0.0 }];
    let mut visited = 0usize;
    let mut stack: Vec<(Moebius, Vec<i32>)> = vec![(Moebius::IDENTITY, Vec::new())];
    while let Some((m, word)) = stack.pop() {
        let last = word.last().copied().unwrap_or(0);
        for &x in &letters {
            if x == -last {
                continue;
            }
            visited += 1;
            if visited > q.budget {
                return Err(Error::Budget {
                    what: format!("lattice enumeration at T = {}", q.t),
                    needed: visited as u128,
                    budget: q.budget,
                });
            }
            let next = m.mul(model.letter(x));
            let dist = model.displacement(&next);
            if dist > prune {
                continue;
            }
            let mut w = word.clone();
            w.push(x);
            if dist <= bound {
                let rw = ReducedWord::reduce(&w, model.rank())?;
                elements.push(LatticePoint { word: rw, displacement: dist });
            }
            stack.push((next, w));
        }
    }
    elements.sort_by(|a, b| a.word.cmp(&b.word));
    Ok(LatticePointSet {
        t: q.t,
        kappa: q.kappa,
        c_geo: q.c_geo,
        radius_bound: bound,
        prune_slack: slack,
        visited,
        elements,
    })
}

/// Word lengths inside S(T) against the two candidate envelopes.
#[derive(Clone, Debug, Serialize)]
pub struct WordLengthReport {
    pub max_word_length: usize,
    pub size: usize,
    /// max wl / (κ² e^{2T})
    pub statement_constant: f64,
    /// max wl · κ² / e^{2T}
    pub proof_constant: f64,
    /// |S(T)| / (κ² e^{2T})
    pub size_statement_constant: f64,
    /// |S(T)| · κ² / e^{2T}
    pub size_proof_constant: f64,
    /// max wl ≤ |S(T)|
    pub counting_surrogate_holds: bool,
}

pub fn word_length_bound_check(lps: &LatticePointSet) -> WordLengthReport {
    let max_wl = lps.elements.iter().map(|p| p.word.len()).max().unwrap_or(0);
    let e2t = (2.0 * lps.t).exp();
    let k2 = lps.kappa * lps.kappa;
    let size = lps.len();
    WordLengthReport {
        max_word_length: max_wl,
        size,
        statement_constant: max_wl as f64 / (k2 * e2t),
        proof_constant: max_wl as f64 * k2 / e2t,
        size_statement_constant: size as f64 / (k2 * e2t),
        size_proof_constant: size as f64 * k2 / e2t,
        counting_surrogate_holds: max_wl <= size,
    }
}

/// Least-squares slope of log|S(T)| against T.
pub fn growth_slope(points: &[(f64, usize)]) -> f64 {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| (p.1 as f64).ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_examples() {
        let i = Point::new(0.0, 1.0);
        assert_eq!(hyp_distance(i, i).unwrap(), 0.0);
        assert!((hyp_distance(i, Point::new(0.0, 2.0)).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!((cosh_distance(i, Point::new(1.0, 1.0)).unwrap() - 1.5).abs() < 1e-15);
        assert!(hyp_distance(i, Point::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn default_model_loads() {
        let m = SurfaceModel::punctured_torus();
        let c = m.check(FREENESS_PROBE_LENGTH);
        assert_eq!(c.words_probed, 13120);
        assert!((c.commutator_trace.unwrap() + 2.0).abs() < 1e-12);
        assert!(c.min_distance_to_identity > 1e-6);
    }

    #[test]
    fn relation_rejected() {
        let r = Moebius { a: 0.0, b: -1.0, c: 1.0, d: 0.0 }; // order 2 in PSL₂
        assert!(SurfaceModel::new("bad", vec![r], Point::new(0.0, 1.0), 1.0).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let m = SurfaceModel::punctured_torus();
        let back = SurfaceModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(m.generators, back.generators);
        assert_eq!(m.base_point, back.base_point);
    }

    #[test]
    fn cusp_bookkeeping() {
        assert_eq!(cusp_region_height(1.0, 1.0), 1.0);
        assert_eq!(diam_k_bound(1.0, 1.0), 1.0);
        assert!((diam_k_bound(0.01, 1.0) - (1.0 + 100f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn tiny_t_gives_identity_only() {
        let m = SurfaceModel::punctured_torus();
        let lps = lattice_point_set(&m, &LatticeQuery::new(0.3, 1.0, 0.3)).unwrap();
        assert!(lps.radius_bound < m.min_generator_displacement());
        assert_eq!(lps.len(), 1);
        assert!(lps.elements[0].word.is_identity());
    }
}
