//! The hypercube graph on `F_q^m`, its character eigenbasis, and local/global variance.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bounds::{constants, BoundReport};
use crate::error::{guard, Error, Result};
use crate::field::{Fe, Field};
use crate::linalg::{c, CMat, CVec};
use crate::measure::{BipartiteState, SubMeasurement};
use crate::poly::{point_index, points, AxisLine, MultiPoly, Point, UniPoly};
use crate::strategy::{Goodness, QuantumStrategy};

/// Largest vertex count for dense graph matrices.
pub const MAX_VERTICES: u128 = 4096;

/// Vertices `F_q^m`; edges `(u, u + x e_i)` with `u`, `i`, `x` uniform (self-loops at `x = 0`).
#[derive(Clone, Debug)]
pub struct HypercubeGraph {
    pub field: Field,
    pub m: usize,
    pub vertices: Vec<Point>,
}

/// One character eigenvector with its `K` eigenvalue.
#[derive(Clone, Debug)]
pub struct CharacterEigen {
    pub alpha: Point,
    /// Number of nonzero coordinates of `alpha`.
    pub weight: usize,
    pub eigenvalue: f64,
    pub vector: CVec,
}

impl HypercubeGraph {
    pub fn new(field: &Field, m: usize) -> Result<Self> {
        guard("hypercube vertices", (field.q() as u128).pow(m as u32), MAX_VERTICES)?;
        Ok(HypercubeGraph { field: field.clone(), m, vertices: points(field, m).collect() })
    }

    pub fn order(&self) -> usize {
        self.vertices.len()
    }

    /// `(u, v, Pr)` for every edge draw `(u, i, x)`, in draw order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let w = 1.0 / (self.order() * self.m * self.field.q() as usize) as f64;
        self.vertices.iter().enumerate().flat_map(move |(ui, u)| {
            (0..self.m).flat_map(move |i| {
                self.field.elements().map(move |x| {
                    let mut v = u.clone();
                    v[i] = self.field.add(v[i], x);
                    (ui, point_index(&self.field, &v), w)
                })
            })
        })
    }

    /// `K = E_{(u,v)~C} |u><v|`.
    pub fn adjacency(&self) -> DMatrix<f64> {
        let n = self.order();
        let mut k = DMatrix::zeros(n, n);
        for (u, v, w) in self.edges() {
            k[(u, v)] += w;
        }
        k
    }

    /// `L = I / M - K`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let n = self.order();
        DMatrix::identity(n, n) / n as f64 - self.adjacency()
    }

    /// `phi_alpha = M^{-1/2} sum_u omega^{tr(u . alpha)} |u>` with eigenvalue `(1/M)(m - |alpha|)/m`.
    pub fn character_eigensystem(&self) -> Vec<CharacterEigen> {
        let n = self.order();
        let norm = 1.0 / (n as f64).sqrt();
        self.vertices
            .iter()
            .map(|alpha| {
                let weight = alpha.iter().filter(|a| !a.is_zero()).count();
                let vector = CVec::from_iterator(n, self.vertices.iter().map(|u| self.field.character(self.field.dot(u, alpha)) * norm));
                let eigenvalue = (self.m - weight) as f64 / (self.m as f64 * n as f64);
                CharacterEigen { alpha: alpha.clone(), weight, eigenvalue, vector }
            })
            .collect()
    }

    /// Largest `||K phi - lambda phi||` and the Gram-matrix residual of the character basis.
    pub fn verify_eigensystem(&self, sys: &[CharacterEigen]) -> (f64, f64) {
        let k = self.adjacency().map(c);
        let eig = sys.iter().map(|e| (&k * &e.vector - &e.vector * c(e.eigenvalue)).norm()).fold(0.0, f64::max);
        let n = sys.len();
        let mut phi = CMat::zeros(self.order(), n);
        for (j, e) in sys.iter().enumerate() {
            phi.set_column(j, &e.vector);
        }
        let gram = phi.adjoint() * &phi - CMat::identity(n, n);
        (eig, crate::linalg::frob(&gram))
    }

    /// Laplacian eigenvalues `1/M - lambda_K(alpha)`, ascending.
    pub fn laplacian_spectrum(&self) -> Vec<f64> {
        let n = self.order() as f64;
        let mut s: Vec<f64> = self.character_eigensystem().iter().map(|e| 1.0 / n - e.eigenvalue).collect();
        s.sort_by(f64::total_cmp);
        s
    }

    /// Second-smallest Laplacian eigenvalue; equals `1/(mM)`.
    pub fn spectral_gap(&self) -> f64 {
        self.laplacian_spectrum().get(1).copied().unwrap_or(0.0)
    }
}

/// Local and global variance of a per-point operator family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub local: f64,
    pub global: f64,
}

fn check_family(graph: &HypercubeGraph, ops: &[CMat], state: &BipartiteState) -> Result<()> {
    if ops.len() != graph.order() {
        return Err(Error::Dimension(format!("family has {} points, graph has {}", ops.len(), graph.order())));
    }
    if ops.iter().any(|o| o.nrows() != state.da) {
        return Err(Error::Dimension("family does not act on the left factor".into()));
    }
    Ok(())
}

fn sq_expect(state: &BipartiteState, x: &CMat, right: Option<&CMat>) -> f64 {
    let x2 = x * x;
    match right {
        Some(y) => state.expect(&x2, y),
        None => state.expect_left(&x2),
    }
}

/// `1/2 E_{(u,v)~C} <psi| (A^u - A^v)^2 (x) I |psi>`; `ops` indexed by `point_index`.
pub fn local_variance(graph: &HypercubeGraph, ops: &[CMat], state: &BipartiteState) -> Result<f64> {
    check_family(graph, ops, state)?;
    Ok(0.5 * graph.edges().filter(|(u, v, _)| u != v).map(|(u, v, w)| w * sq_expect(state, &(&ops[u] - &ops[v]), None)).sum::<f64>())
}

/// `1/2 E_{u,v} <psi| (A^u - A^v)^2 (x) I |psi>` over independent uniform `u, v`.
pub fn global_variance(graph: &HypercubeGraph, ops: &[CMat], state: &BipartiteState) -> Result<f64> {
    check_family(graph, ops, state)?;
    let n = ops.len();
    let w = 1.0 / (n * n) as f64;
    let mut s = 0.0;
    for u in 0..n {
        for v in u + 1..n {
            s += 2.0 * w * sq_expect(state, &(&ops[u] - &ops[v]), None);
        }
    }
    Ok(0.5 * s)
}

pub fn variance_report(graph: &HypercubeGraph, ops: &[CMat], state: &BipartiteState) -> Result<VarianceReport> {
    Ok(VarianceReport { local: local_variance(graph, ops, state)?, global: global_variance(graph, ops, state)? })
}

/// Measured sides of the three points-variance lemmas for a `P(m,q,d)`-valued `G` on the
/// right factor, against the bounds `md/q`, `24(eps+delta+md/q)` and `24m(eps+delta+md/q)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointsVarianceReport {
    pub generalize_b: BoundReport,
    pub local: BoundReport,
    pub global: BoundReport,
}

fn point_op(s: &QuantumStrategy, u: &Point, a: Fe) -> Result<CMat> {
    let fam = s.roles[0].points.get(u).ok_or_else(|| Error::Strategy(format!("no point measurement at {u:?}")))?;
    Ok(fam.get(&a).cloned().unwrap_or_else(|| CMat::zeros(fam.dim, fam.dim)))
}

pub fn points_variance_diagnostics(
    field: &Field,
    s: &QuantumStrategy,
    g: &SubMeasurement<MultiPoly>,
    goodness: &Goodness,
) -> Result<PointsVarianceReport> {
    let graph = HypercubeGraph::new(field, s.m)?;
    if g.dim != s.state.db {
        return Err(Error::Dimension("G must act on the right factor".into()));
    }
    let (m, d, q) = (s.m as f64, s.d as f64, field.q() as f64);
    let sz = m * d / q;

    // E_{u, l} sum_g || (B^l_[f(u)=g(u)] - B^l_{g|l}) (x) sqrt(G_g) psi ||^2, l axis-parallel through u
    let mut gen_b = 0.0;
    let w_axis = 1.0 / (graph.order() * s.m) as f64;
    for u in &graph.vertices {
        for i in 0..s.m {
            let l = AxisLine::through(u, i);
            let fam = s.roles[0].axis.get(&l).ok_or_else(|| Error::Strategy(format!("no axis measurement at {l:?}")))?;
            let t = l.param(u);
            for (gp, gop) in g.outcomes.iter().zip(&g.ops) {
                let gu = gp.eval(field, u);
                let restricted: UniPoly = gp.restrict_axis(field, &l);
                let mut x = CMat::zeros(fam.dim, fam.dim);
                for (f, op) in fam.outcomes.iter().zip(&fam.ops) {
                    if f.eval(field, t) == gu {
                        x += op;
                    }
                    if *f == restricted {
                        x -= op;
                    }
                }
                gen_b += w_axis * sq_expect(&s.state, &x, Some(gop));
            }
        }
    }

    let mut local = 0.0;
    for (ui, vi, w) in graph.edges() {
        if ui == vi {
            continue;
        }
        let (u, v) = (&graph.vertices[ui], &graph.vertices[vi]);
        for (gp, gop) in g.outcomes.iter().zip(&g.ops) {
            let x = point_op(s, u, gp.eval(field, u))? - point_op(s, v, gp.eval(field, v))?;
            local += w * sq_expect(&s.state, &x, Some(gop));
        }
    }

    let mut global = 0.0;
    let n = graph.order();
    let w = 1.0 / (n * n) as f64;
    for (ui, u) in graph.vertices.iter().enumerate() {
        for v in &graph.vertices[ui + 1..] {
            for (gp, gop) in g.outcomes.iter().zip(&g.ops) {
                let x = point_op(s, u, gp.eval(field, u))? - point_op(s, v, gp.eval(field, v))?;
                global += 2.0 * w * sq_expect(&s.state, &x, Some(gop));
            }
        }
    }

    let base = goodness.eps + goodness.delta + sz;
    Ok(PointsVarianceReport {
        generalize_b: BoundReport::new("generalize_b", gen_b, sz),
        local: BoundReport::new("local_variance_points", local, constants::LOCAL_POINTS * base),
        global: BoundReport::new("global_variance_points", global, constants::LOCAL_POINTS * m * base),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_gaussian, random_unit_vector, spectral_map};
    use crate::poly::PolySpace;
    use crate::protocol::TestParams;
    use crate::strategy::{embed_classical, example_1_5, pass_probabilities_quantum, ClassicalStrategy};
    use num_rational::Ratio;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn smallest_graph_matrices() {
        let k = Field::of_order(2).unwrap();
        let g = HypercubeGraph::new(&k, 1).unwrap();
        let a = g.adjacency();
        assert!(a.iter().all(|&x| (x - 0.25).abs() < 1e-15));
        let l = g.laplacian();
        assert!((l[(0, 0)] - 0.25).abs() < 1e-15 && (l[(0, 1)] + 0.25).abs() < 1e-15);
    }

    #[test]
    fn stochastic_and_symmetric() {
        let k = Field::of_order(3).unwrap();
        let g = HypercubeGraph::new(&k, 2).unwrap();
        let a = g.adjacency();
        let n = g.order();
        for r in 0..n {
            assert!((a.row(r).sum() * n as f64 - 1.0).abs() < 1e-12);
        }
        assert!((&a - a.transpose()).norm() < 1e-15);
        let l = g.laplacian();
        assert!((l * DMatrix::from_element(n, 1, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn eigensystem_matches_generic_solver() {
        for (q, m) in [(2, 1), (2, 2), (3, 2), (4, 2), (2, 3)] {
            let k = Field::of_order(q).unwrap();
            let g = HypercubeGraph::new(&k, m).unwrap();
            let sys = g.character_eigensystem();
            let (eig, gram) = g.verify_eigensystem(&sys);
            assert!(eig < 1e-10 && gram < 1e-10, "q={q} m={m}");
            let recon = sys.iter().fold(CMat::zeros(g.order(), g.order()), |acc, e| acc + &e.vector * e.vector.adjoint() * c(e.eigenvalue));
            assert!((recon - g.adjacency().map(c)).norm() < 1e-9);
            let mut generic: Vec<f64> = g.laplacian().symmetric_eigen().eigenvalues.iter().copied().collect();
            generic.sort_by(f64::total_cmp);
            for (x, y) in generic.iter().zip(g.laplacian_spectrum()) {
                assert!((x - y).abs() < 1e-10);
            }
            assert!((g.spectral_gap() - 1.0 / (m as f64 * g.order() as f64)).abs() < 1e-12);
        }
        let k = Field::of_order(2).unwrap();
        let g = HypercubeGraph::new(&k, 2).unwrap();
        let e = g.character_eigensystem();
        assert!(e.iter().filter(|x| x.weight == 1).all(|x| (x.eigenvalue - 0.125).abs() < 1e-15));
        assert!((e[0].eigenvalue - 0.25).abs() < 1e-15);
    }

    fn random_family(n: usize, dim: usize, rng: &mut ChaCha8Rng) -> Vec<CMat> {
        (0..n)
            .map(|_| {
                let g = random_gaussian(dim, dim, rng);
                let h = crate::linalg::hermitian_part(&g);
                spectral_map(&h, |x| 1.0 / (1.0 + (-x).exp()))
            })
            .collect()
    }

    #[test]
    fn constant_family_has_no_variance() {
        let k = Field::of_order(3).unwrap();
        let g = HypercubeGraph::new(&k, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let one = random_family(1, 2, &mut rng).remove(0);
        let ops = vec![one; g.order()];
        let st = BipartiteState::max_entangled(2);
        let r = variance_report(&g, &ops, &st).unwrap();
        assert!(r.local.abs() < 1e-15 && r.global.abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn poincare_and_shift_invariance(seed in 0u64..1_000_000, shift in 0.0f64..0.5) {
            let k = Field::of_order(3).unwrap();
            let g = HypercubeGraph::new(&k, 2).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ops = random_family(g.order(), 2, &mut rng);
            let st = BipartiteState::new(2, 2, random_unit_vector(4, &mut rng)).unwrap();
            let r = variance_report(&g, &ops, &st).unwrap();
            prop_assert!(r.global <= 2.0 * r.local + 1e-9);
            let c0 = random_family(1, 2, &mut rng).remove(0) * c(shift);
            let shifted: Vec<CMat> = ops.iter().map(|o| o + &c0).collect();
            let r2 = variance_report(&g, &shifted, &st).unwrap();
            prop_assert!((r.local - r2.local).abs() < 1e-12 && (r.global - r2.global).abs() < 1e-12);
        }
    }

    #[test]
    fn honest_points_variance_is_zero() {
        let k = Field::of_order(3).unwrap();
        let p = TestParams::new(2, 1);
        let space = PolySpace::new(&k, 2, 1).unwrap();
        let g0 = space.get(17);
        let s = embed_classical(&[(Ratio::from_integer(1), ClassicalStrategy::honest(&k, &g0).unwrap())]).unwrap();
        let good = pass_probabilities_quantum(&k, &p, &s).unwrap();
        let gfam = SubMeasurement::new(vec![g0], vec![CMat::identity(1, 1)]).unwrap();
        let rep = points_variance_diagnostics(&k, &s, &gfam, &good).unwrap();
        for b in [&rep.generalize_b, &rep.local, &rep.global] {
            assert!(b.measured.abs() < 1e-12, "{b:?}");
        }
    }

    #[test]
    fn example_strategy_within_bounds() {
        let k = Field::of_order(3).unwrap();
        let p = TestParams::new(2, 1);
        let s = embed_classical(&[(Ratio::from_integer(1), example_1_5(&k, 2, 1).unwrap())]).unwrap();
        let good = pass_probabilities_quantum(&k, &p, &s).unwrap();
        let space = PolySpace::new(&k, 2, 1).unwrap();
        // G: the full space with uniform weights on a one-dimensional register
        let n = space.len() as f64;
        let gfam = SubMeasurement::new(space.iter().collect(), vec![CMat::identity(1, 1) * c(1.0 / n); space.len()]).unwrap();
        let rep = points_variance_diagnostics(&k, &s, &gfam, &good).unwrap();
        for b in [&rep.generalize_b, &rep.local, &rep.global] {
            assert!(b.holds(1e-9), "{b:?}");
        }
    }
}
