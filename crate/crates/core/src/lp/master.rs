//! Restricted master problem and the row-generation driver.
//!
//! The primal `max t` over weights is solved through its dual, where every cut is a column:
//!
//! ```text
//! min λ0  s.t.  λ0 + λ·t_i − Σ_k A_ki y_k − s_i = 0   (one row per weight)
//!               Σ_k d_k y_k = 1
//!               y, s ≥ 0;  λ0, λ free
//! ```
//!
//! Adding a cut adds a column, so the previous basis stays feasible and the solve warm starts.
//! The simplex multipliers of the dual are the primal weights and `t`.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::simplex::{RevisedSimplex, SimplexOptions, SimplexStatus};
use super::{LpOptions, LpStatus, TightNormal};
use crate::polytope::FacetNormal;

/// One inequality `Σ_i coeffs_i u_i − denom·t ≥ 0`.
#[derive(Debug, Clone)]
pub(crate) struct Cut {
    pub key: [i64; 4],
    pub index: Option<usize>,
    pub normal: FacetNormal,
    pub coeffs: Vec<f64>,
    pub denom: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Separation {
    /// Smallest fraction seen by the scan, with the plane that attains it.
    pub min_ratio: f64,
    pub argmin: Option<(Option<usize>, FacetNormal)>,
    /// Cuts below the threshold, most violated first.
    pub violated: Vec<Cut>,
}

pub(crate) trait CutSource: Sync {
    fn weight_count(&self) -> usize;
    /// Rows of the barycenter equalities, each of length `weight_count`.
    fn barycenter_rows(&self) -> Vec<Vec<f64>>;
    fn seed_cuts(&self) -> Vec<Cut>;
    /// Returns up to `limit` cuts with fraction below `threshold`. Non-exhaustive scans may miss
    /// some planes; an exhaustive scan must see every plane and report the true minimum.
    fn separate(&self, weights: &[f64], threshold: f64, limit: usize, exhaustive: bool) -> Separation;
    /// Whether non-exhaustive scans are already exhaustive.
    fn scan_is_exhaustive(&self) -> bool;
    /// Cuts added per round when the options leave it open.
    fn default_batch(&self) -> usize {
        self.weight_count().max(64)
    }
}

/// Relative size of the right-hand-side perturbation. Because it is positive, the perturbed
/// dual point stays feasible for the unperturbed dual once absorbed into the slacks, so the
/// master objective remains an upper bound. Its excess over `t` grows with the number of
/// cuts carrying dual weight and reaches about 1e-9 relative when every plane is present.
const PERTURBATION: f64 = 1e-11;

/// Cuts are purged once they outnumber the rows by this factor,
const PURGE_FACTOR: usize = 4;
/// if their fraction exceeds `t` by this relative margin,
const PURGE_MARGIN: f64 = 1e-2;
/// during the first rounds only, which keeps row generation finite.
const PURGE_ROUNDS: usize = 200;

pub(crate) struct MasterOutcome {
    pub status: LpStatus,
    pub value: f64,
    pub verified_value: f64,
    pub weights: Vec<f64>,
    pub tight: Vec<TightNormal>,
    pub minimizer: Option<(Option<usize>, FacetNormal)>,
    pub rounds: usize,
    pub cuts: usize,
}

struct Master {
    m: usize,
    simplex: RevisedSimplex,
    first_cut_column: usize,
    cuts: Vec<Cut>,
    keys: HashSet<[i64; 4]>,
}

impl Master {
    fn new(weight_count: usize, bary: &[Vec<f64>], first: Cut, opts: SimplexOptions) -> Option<Self> {
        let m = weight_count;
        let rows = m + 1;
        let mut cols: Vec<Vec<f64>> = Vec::new();
        let mut cost = Vec::new();
        let lift = |v: Vec<f64>| {
            let mut c = v;
            c.push(0.0);
            c
        };
        cols.push(lift(vec![1.0; m]));
        cost.push(1.0);
        for row in bary {
            cols.push(lift(row.clone()));
            cost.push(0.0);
        }
        let free_columns = cols.len();
        let slack0 = cols.len();
        for i in 0..m {
            let mut c = vec![0.0; rows];
            c[i] = -1.0;
            cols.push(c);
            cost.push(0.0);
        }
        let first_cut_column = cols.len();
        cols.push(cut_column(&first));
        cost.push(0.0);

        // Positive right-hand sides break the heavy degeneracy of the weight rows. The scale
        // follows λ0, so the perturbation is invariant under rescaling the state.
        let scale = first.coeffs.iter().fold(0.0, |m: f64, &x| m.max(x)) / first.denom;
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut b: Vec<f64> = (0..m).map(|_| scale * PERTURBATION * rng.random_range(1.0..2.0)).collect();
        b.push(1.0);

        // Crash basis: y = 1/d, λ0 = max_i (A_i/d + b_i), slacks take up the rest except at the argmax.
        let lifted: Vec<f64> = (0..m).map(|i| first.coeffs[i] / first.denom + b[i]).collect();
        let istar = (0..m)
            .max_by(|&i, &j| lifted[i].total_cmp(&lifted[j]).then(j.cmp(&i)))
            .expect("at least one weight");
        let mut basis = vec![0, first_cut_column];
        basis.extend((0..m).filter(|&i| i != istar).map(|i| slack0 + i));
        let mut simplex = RevisedSimplex::new(b, cols, cost, basis, opts)?;
        for j in 0..free_columns {
            simplex.set_free(j);
        }
        let mut keys = HashSet::new();
        keys.insert(first.key);
        Some(Self { m, simplex, first_cut_column, cuts: vec![first], keys })
    }

    fn contains(&self, key: &[i64; 4]) -> bool {
        self.keys.contains(key)
    }

    fn add(&mut self, cut: Cut) {
        if self.keys.insert(cut.key) {
            self.simplex.add_column(cut_column(&cut), 0.0);
            self.cuts.push(cut);
        }
    }

    /// Drops cuts that are slack by more than `margin` relative to `t`; they are re-added if
    /// a later scan finds them violated.
    fn purge(&mut self, t: f64, margin: f64) {
        let first = self.first_cut_column;
        let rc = self.simplex.reduced_costs().to_vec();
        let cuts = &self.cuts;
        let kept = self.simplex.remove_nonbasic_columns(first, |j| {
            let c = &cuts[j - first];
            rc[j] / c.denom > margin * t
        });
        let old = std::mem::take(&mut self.cuts);
        let mut old: Vec<Option<Cut>> = old.into_iter().map(Some).collect();
        self.cuts = kept.iter().map(|&j| old[j - first].take().expect("each cut kept once")).collect();
        self.keys = self.cuts.iter().map(|c| c.key).collect();
    }

    /// Primal weights (tiny negatives clipped) and `t`; a feasible point of the master.
    fn primal(&self) -> (Vec<f64>, f64) {
        let pi = self.simplex.duals();
        let u = pi[..self.m].iter().map(|&x| x.max(0.0)).collect();
        (u, pi[self.m])
    }

    fn tight(&self) -> Vec<TightNormal> {
        let x = self.simplex.primal();
        self.cuts
            .iter()
            .enumerate()
            .filter_map(|(k, c)| {
                let y = x[self.first_cut_column + k];
                (y > 0.0).then_some(TightNormal { index: c.index, normal: c.normal, dual: y })
            })
            .collect()
    }
}

fn cut_column(cut: &Cut) -> Vec<f64> {
    let mut c: Vec<f64> = cut.coeffs.iter().map(|a| -a).collect();
    c.push(cut.denom);
    c
}

fn trouble(rounds: usize, cuts: usize) -> MasterOutcome {
    MasterOutcome {
        status: LpStatus::NumericalTrouble,
        value: f64::NAN,
        verified_value: f64::NAN,
        weights: Vec::new(),
        tight: Vec::new(),
        minimizer: None,
        rounds,
        cuts,
    }
}

pub(crate) fn run<S: CutSource>(source: &S, opts: &LpOptions) -> MasterOutcome {
    let m = source.weight_count();
    let bary = source.barycenter_rows();
    let per_round = if opts.cuts_per_round == 0 { source.default_batch() } else { opts.cuts_per_round };
    let mut seeds = source.seed_cuts();
    if seeds.is_empty() {
        let uniform = vec![1.0 / m as f64; m];
        seeds = source.separate(&uniform, f64::INFINITY, per_round, true).violated;
    }
    let mut seeds = seeds.into_iter();
    let Some(first) = seeds.next() else {
        // Every plane is vacuous: nothing bounds t.
        return MasterOutcome {
            status: LpStatus::Optimal,
            value: f64::INFINITY,
            verified_value: f64::INFINITY,
            weights: vec![1.0 / m as f64; m],
            tight: Vec::new(),
            minimizer: None,
            rounds: 0,
            cuts: 0,
        };
    };
    let Some(mut master) = Master::new(m, &bary, first, opts.simplex) else {
        return trouble(0, 0);
    };
    for c in seeds {
        master.add(c);
    }

    let debug = std::env::var_os("STEERING_LP_DEBUG").is_some();
    let (mut t_simplex, mut t_scan) = (0.0, 0.0);
    let mut rounds = 0;
    loop {
        rounds += 1;
        let clock = std::time::Instant::now();
        let status = master.simplex.solve();
        t_simplex += clock.elapsed().as_secs_f64();
        match status {
            SimplexStatus::Optimal => {}
            SimplexStatus::Unbounded => {
                let mut out = trouble(rounds, master.cuts.len());
                out.status = LpStatus::Infeasible;
                return out;
            }
            other => {
                if debug {
                    eprintln!("master solve failed: {other:?} after {} iterations", master.simplex.iterations());
                }
                return trouble(rounds, master.cuts.len());
            }
        }
        let (u, t) = master.primal();
        let threshold = t * (1.0 - opts.violation_tol);
        let clock = std::time::Instant::now();
        let mut exhaustive = source.scan_is_exhaustive();
        let mut sep = source.separate(&u, threshold, per_round, exhaustive);
        let mut fresh: Vec<Cut> = sep.violated.drain(..).filter(|c| !master.contains(&c.key)).collect();
        if fresh.is_empty() && !exhaustive {
            exhaustive = true;
            sep = source.separate(&u, threshold, per_round, true);
            fresh = sep.violated.drain(..).filter(|c| !master.contains(&c.key)).collect();
        }
        t_scan += clock.elapsed().as_secs_f64();
        if fresh.is_empty() || rounds >= opts.max_rounds {
            if debug {
                eprintln!(
                    "row generation: {rounds} rounds, {} simplex iterations ({} Bland), simplex {t_simplex:.2}s, scan {t_scan:.2}s",
                    master.simplex.iterations(),
                    master.simplex.bland_iterations()
                );
            }
            if !exhaustive {
                sep = source.separate(&u, threshold, 0, true);
            }
            let status = if fresh.is_empty() { LpStatus::Optimal } else { LpStatus::NumericalTrouble };
            return MasterOutcome {
                status,
                value: master.simplex.objective().max(t),
                verified_value: sep.min_ratio,
                tight: master.tight(),
                weights: u,
                minimizer: sep.argmin,
                rounds,
                cuts: master.cuts.len(),
            };
        }
        if rounds <= PURGE_ROUNDS && master.cuts.len() > PURGE_FACTOR * (m + 1) {
            master.purge(t, PURGE_MARGIN);
        }
        for c in fresh {
            master.add(c);
        }
    }
}
