//! Ground state and low-lying spectrum of real symmetric operators, plus
//! orbital identification for one-particle states.
//!
//! Large problems use a thick-restart (Krylov-Schur) Lanczos iteration with
//! full reorthogonalization. Small ones fall back to dense diagonalization.

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{LatticeGeometry, Position};
use crate::operators::{SparseOperator, StateVector};

#[derive(Clone, Debug)]
pub struct EigenOptions {
    /// Relative residual target: `|H x - E x| <= tol * |H|_est`.
    pub tol: f64,
    pub max_restarts: usize,
    /// Krylov basis size; `None` picks `max(2k + 20, 40)`.
    pub basis_size: Option<usize>,
    pub seed: u64,
    /// Dimensions up to this use dense diagonalization.
    pub dense_cutoff: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_restarts: 2000,
            basis_size: None,
            seed: 0x5eed_1a2c,
            dense_cutoff: 2000,
        }
    }
}

impl EigenOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug)]
pub struct Eigenpair {
    pub energy: f64,
    pub state: StateVector,
    /// `|H x - E x|` of the returned vector.
    pub residual: f64,
}

pub fn ground_state(h: &SparseOperator, tol: f64) -> Result<Eigenpair> {
    ground_state_with(h, &EigenOptions::with_tol(tol))
}

pub fn ground_state_with(h: &SparseOperator, opts: &EigenOptions) -> Result<Eigenpair> {
    let mut pairs = solve_lowest(h, 1, opts, false)?;
    Ok(pairs.remove(0))
}

/// The `k` lowest eigenpairs in ascending order.
pub fn low_spectrum(h: &SparseOperator, k: usize, tol: f64) -> Result<Vec<Eigenpair>> {
    low_spectrum_with(h, k, &EigenOptions::with_tol(tol))
}

pub fn low_spectrum_with(h: &SparseOperator, k: usize, opts: &EigenOptions) -> Result<Vec<Eigenpair>> {
    solve_lowest(h, k, opts, true)
}

/// Full spectrum by dense diagonalization, ascending.
pub fn dense_spectrum(h: &SparseOperator) -> Vec<f64> {
    let mut e: Vec<f64> = SymmetricEigen::new(h.to_dense()).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

fn solve_lowest(h: &SparseOperator, k: usize, opts: &EigenOptions, probe: bool) -> Result<Vec<Eigenpair>> {
    let n = h.dim();
    if k == 0 || k > n {
        return Err(Error::domain(format!("cannot compute {k} eigenpairs of a {n}-dim operator")));
    }
    let norm = h.norm_bound().max(f64::MIN_POSITIVE);
    if n <= opts.dense_cutoff {
        return Ok(dense_lowest(h, k));
    }
    let tol_abs = opts.tol * norm;
    let op = |x: &[f64], y: &mut [f64]| h.apply_real_into(x, y);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let m = opts.basis_size.unwrap_or((2 * k + 20).max(40)).max(k + 2);
    let mut found = krylov_schur(&op, n, k, &[], m, tol_abs, opts.max_restarts, &mut rng)?;

    if probe && k > 1 {
        // Krylov spaces from one start vector see a single copy of each
        // degenerate eigenspace; look for missing partners with fresh starts.
        let gap_tol = (1e-9 * norm).max(10.0 * tol_abs);
        for _ in 0..k {
            let locked: Vec<Vec<f64>> = found.iter().map(|(_, v)| v.clone()).collect();
            if locked.len() >= n {
                break;
            }
            let mut extra = krylov_schur(&op, n, 1, &locked, m, tol_abs, opts.max_restarts, &mut rng)?;
            let (theta, v) = extra.remove(0);
            if theta < found[k - 1].0 - gap_tol {
                found.pop();
                let pos = found.partition_point(|(e, _)| *e <= theta);
                found.insert(pos, (theta, v));
            } else {
                break;
            }
        }
    }

    let mut out = Vec::with_capacity(k);
    let mut hv = vec![0.0; n];
    for (theta, v) in found {
        h.apply_real_into(&v, &mut hv);
        let res = hv.iter().zip(&v).map(|(a, b)| (a - theta * b).powi(2)).sum::<f64>().sqrt();
        if res > 10.0 * tol_abs.max(1e-14 * norm) {
            return Err(Error::Convergence {
                iterations: opts.max_restarts,
                residual: res,
            });
        }
        out.push(Eigenpair {
            energy: theta,
            state: fix_sign(&v),
            residual: res,
        });
    }
    Ok(out)
}

fn dense_lowest(h: &SparseOperator, k: usize) -> Vec<Eigenpair> {
    let eig = SymmetricEigen::new(h.to_dense());
    let mut order: Vec<usize> = (0..h.dim()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut hv = vec![0.0; h.dim()];
    order
        .into_iter()
        .take(k)
        .map(|c| {
            let v: Vec<f64> = eig.eigenvectors.column(c).iter().copied().collect();
            let e = eig.eigenvalues[c];
            h.apply_real_into(&v, &mut hv);
            let res = hv.iter().zip(&v).map(|(a, b)| (a - e * b).powi(2)).sum::<f64>().sqrt();
            Eigenpair {
                energy: e,
                state: fix_sign(&v),
                residual: res,
            }
        })
        .collect()
}

/// Real vector to a state whose largest component is positive.
fn fix_sign(v: &[f64]) -> StateVector {
    let big = v.iter().copied().fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
    let s = if big < 0.0 { -1.0 } else { 1.0 };
    StateVector::from_vec(v.iter().map(|&x| Complex64::new(s * x, 0.0)).collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn project_out(w: &mut [f64], basis: &[Vec<f64>]) {
    for b in basis {
        let c = dot(b, w);
        axpy(-c, b, w);
    }
}

fn random_orthogonal(n: usize, against: &[&[Vec<f64>]], rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
    for _ in 0..8 {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        for _ in 0..2 {
            for set in against {
                project_out(&mut v, set);
            }
        }
        let nv = norm(&v);
        if nv > 1e-8 {
            v.iter_mut().for_each(|x| *x /= nv);
            return Some(v);
        }
    }
    None
}

/// Symmetric Krylov-Schur iteration for the `nev` smallest eigenpairs of
/// `op` restricted to the orthogonal complement of `deflate`.
#[allow(clippy::too_many_arguments)]
fn krylov_schur(
    op: &dyn Fn(&[f64], &mut [f64]),
    n: usize,
    nev: usize,
    deflate: &[Vec<f64>],
    max_basis: usize,
    tol_abs: f64,
    max_restarts: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(f64, Vec<f64>)>> {
    let n_eff = n - deflate.len();
    if nev > n_eff {
        return Err(Error::domain("not enough dimensions left after deflation"));
    }
    let m = max_basis.min(n_eff);
    let keep = (nev + (m - nev) / 2).clamp(nev, m.saturating_sub(1).max(nev));

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    basis.push(random_orthogonal(n, &[deflate], rng).ok_or_else(|| Error::Degenerate("no start vector".into()))?);
    let mut t = DMatrix::<f64>::zeros(m, m);
    let mut p = 0; // columns with A v computed
    let mut beta_last = 0.0;
    let mut w = vec![0.0; n];
    let mut last_res = f64::INFINITY;

    for restart in 0..=max_restarts {
        while p < m {
            op(&basis[p], &mut w);
            project_out(&mut w, deflate);
            let mut coeffs = vec![0.0; p + 1];
            for _ in 0..2 {
                for (i, v) in basis[..=p].iter().enumerate() {
                    let c = dot(v, &w);
                    coeffs[i] += c;
                    axpy(-c, v, &mut w);
                }
                project_out(&mut w, deflate);
            }
            for (i, &c) in coeffs.iter().enumerate() {
                t[(i, p)] = c;
                t[(p, i)] = c;
            }
            let beta = norm(&w);
            p += 1;
            if p == n_eff {
                beta_last = 0.0;
                break;
            }
            let next = if beta > 1e-12 * tol_abs.max(1e-300).max(1.0) * 1e-2 && beta > 1e-14 {
                beta_last = beta;
                w.iter().map(|x| x / beta).collect()
            } else {
                beta_last = 0.0;
                random_orthogonal(n, &[deflate, &basis[..]], rng)
                    .ok_or_else(|| Error::Degenerate("Krylov breakdown".into()))?
            };
            if basis.len() > p {
                basis[p] = next;
            } else {
                basis.push(next);
            }
        }

        let tp = t.view((0, 0), (p, p)).into_owned();
        let tp = (&tp + tp.transpose()) * 0.5;
        let eig = SymmetricEigen::new(tp);
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

        let res: Vec<f64> = order
            .iter()
            .take(nev)
            .map(|&c| (beta_last * eig.eigenvectors[(p - 1, c)]).abs())
            .collect();
        last_res = res.iter().copied().fold(0.0, f64::max);
        let converged = last_res <= tol_abs || p == n_eff;

        let take = if converged { nev } else { keep.min(p) };
        let ritz: Vec<Vec<f64>> = order[..take]
            .iter()
            .map(|&c| {
                let mut x = vec![0.0; n];
                for (j, v) in basis[..p].iter().enumerate() {
                    axpy(eig.eigenvectors[(j, c)], v, &mut x);
                }
                x
            })
            .collect();

        if converged {
            return Ok(order[..nev]
                .iter()
                .zip(ritz)
                .map(|(&c, mut x)| {
                    let nx = norm(&x);
                    x.iter_mut().for_each(|v| *v /= nx);
                    (eig.eigenvalues[c], x)
                })
                .collect());
        }
        if restart == max_restarts {
            break;
        }

        // thick restart: Ritz vectors, then the residual direction
        let residual = std::mem::take(&mut basis[p]);
        t.fill(0.0);
        for (i, &c) in order[..take].iter().enumerate() {
            t[(i, i)] = eig.eigenvalues[c];
        }
        basis.clear();
        basis.extend(ritz);
        basis.push(residual);
        p = take;
    }
    Err(Error::Convergence {
        iterations: max_restarts,
        residual: last_res,
    })
}

/// Continuum estimate `-J / (a0^2 (2n-1)^2)` of the `n`-th principal level,
/// measured from the bottom of the band.
pub fn principal_energy(n: u32, bohr_radius: f64, hopping: f64) -> Result<f64> {
    if n == 0 || !(bohr_radius > 0.0) {
        return Err(Error::domain(format!(
            "principal energy needs n >= 1 and a0 > 0 (got n={n}, a0={bohr_radius})"
        )));
    }
    let k = (2 * n - 1) as f64;
    Ok(-hopping / (bohr_radius * bohr_radius * k * k))
}

/// Lowest single-particle energy of the empty open lattice.
///
/// Binding energies are measured from here: it is the threshold of the
/// finite lattice's scattering band.
pub fn band_bottom(geometry: &LatticeGeometry, hopping: f64) -> f64 {
    let c = |l: usize| (std::f64::consts::PI / (l as f64 + 1.0)).cos();
    -2.0 * hopping * (c(geometry.lx()) + c(geometry.ly()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OrbitalLabel {
    #[serde(rename = "1s")]
    S1,
    #[serde(rename = "2s")]
    S2,
    #[serde(rename = "2p")]
    P2,
    #[serde(rename = "3p")]
    P3,
    #[serde(rename = "3d")]
    D3,
    #[serde(rename = "4f")]
    F4,
    #[serde(rename = "other")]
    Other,
}

impl OrbitalLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            OrbitalLabel::S1 => "1s",
            OrbitalLabel::S2 => "2s",
            OrbitalLabel::P2 => "2p",
            OrbitalLabel::P3 => "3p",
            OrbitalLabel::D3 => "3d",
            OrbitalLabel::F4 => "4f",
            OrbitalLabel::Other => "other",
        }
    }

    fn from_quantum_numbers(n: usize, m: usize) -> Self {
        match (n, m) {
            (1, 0) => OrbitalLabel::S1,
            (2, 0) => OrbitalLabel::S2,
            (2, 1) => OrbitalLabel::P2,
            (3, 1) => OrbitalLabel::P3,
            (3, 2) => OrbitalLabel::D3,
            (4, 3) => OrbitalLabel::F4,
            _ => OrbitalLabel::Other,
        }
    }
}

impl fmt::Display for OrbitalLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Angular momentum decomposition of a one-particle state about a nucleus.
#[derive(Clone, Debug)]
pub struct OrbitalAnalysis {
    /// Fraction of the norm in each `|m|` channel, `m = 0..=MAX_M`.
    pub channel_weights: Vec<f64>,
    pub dominant_m: usize,
    pub radial_nodes: usize,
    pub label: OrbitalLabel,
}

const MAX_M: usize = 4;

/// Labels a one-particle state by its dominant ring harmonic and the sign
/// changes of the matching radial profile.
pub fn classify_orbital(
    state: &StateVector,
    geometry: &LatticeGeometry,
    nucleus: Position,
) -> Result<OrbitalLabel> {
    Ok(analyze_orbital(state, geometry, nucleus)?.label)
}

pub fn analyze_orbital(
    state: &StateVector,
    geometry: &LatticeGeometry,
    nucleus: Position,
) -> Result<OrbitalAnalysis> {
    crate::error::check_len("orbital state", geometry.num_sites(), state.len())?;
    let total = state.norm_sqr();
    if total == 0.0 {
        return Err(Error::Degenerate("zero state".into()));
    }
    // remove the global phase using the largest amplitude
    let big = state
        .iter()
        .copied()
        .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
        .unwrap();
    let phase = big.conj() / big.norm();
    let amp: Vec<f64> = state.iter().map(|a| (a * phase).re).collect();

    // group sites into rings of equal distance
    let mut sites: Vec<(f64, f64, usize)> = geometry
        .sites()
        .enumerate()
        .map(|(i, s)| {
            let dx = s.x as f64 - nucleus.x;
            let dy = s.y as f64 - nucleus.y;
            (dx.hypot(dy), dy.atan2(dx), i)
        })
        .collect();
    sites.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rings: Vec<Vec<(f64, usize)>> = Vec::new();
    let mut last_r = f64::NEG_INFINITY;
    for (r, theta, i) in sites {
        if (r - last_r).abs() > 1e-9 {
            rings.push(Vec::new());
            last_r = r;
        }
        rings.last_mut().unwrap().push((theta, i));
    }

    // per ring: orthonormalize harmonics in order of increasing m so that
    // aliased high harmonics are credited to the lowest m
    let mut weights = vec![0.0; MAX_M + 1];
    let mut coeffs: Vec<Vec<[f64; 2]>> = Vec::with_capacity(rings.len());
    for ring in &rings {
        let values: Vec<f64> = ring.iter().map(|&(_, i)| amp[i]).collect();
        let mut q: Vec<Vec<f64>> = Vec::new();
        let mut ring_coeffs = vec![[0.0; 2]; MAX_M + 1];
        for m in 0..=MAX_M {
            let funcs: Vec<Vec<f64>> = if m == 0 {
                vec![vec![1.0; ring.len()]]
            } else {
                vec![
                    ring.iter().map(|&(t, _)| (m as f64 * t).cos()).collect(),
                    ring.iter().map(|&(t, _)| (m as f64 * t).sin()).collect(),
                ]
            };
            for (slot, mut f) in funcs.into_iter().enumerate() {
                let f_norm = norm(&f);
                if f_norm < 1e-12 {
                    continue;
                }
                for _ in 0..2 {
                    project_out(&mut f, &q);
                }
                let nf = norm(&f);
                if nf < 1e-8 * f_norm {
                    continue;
                }
                f.iter_mut().for_each(|x| *x /= nf);
                let c = dot(&f, &values);
                weights[m] += c * c;
                ring_coeffs[m][slot] = c;
                q.push(f);
            }
        }
        coeffs.push(ring_coeffs);
    }
    weights.iter_mut().for_each(|w| *w /= total);
    let (dominant_m, &best) = weights
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();

    // orientation of the dominant channel maximizing the projected weight
    let (mut saa, mut sab, mut sbb) = (0.0, 0.0, 0.0);
    for c in &coeffs {
        let [a, b] = c[dominant_m];
        saa += a * a;
        sab += a * b;
        sbb += b * b;
    }
    let angle = 0.5 * (2.0 * sab).atan2(saa - sbb);
    let (ca, sa) = (angle.cos(), angle.sin());
    let profile: Vec<f64> = coeffs
        .iter()
        .map(|c| c[dominant_m][0] * ca + c[dominant_m][1] * sa)
        .collect();
    let peak = profile.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let mut nodes = 0;
    let mut last_sign = 0.0;
    for &v in &profile {
        if v.abs() < 0.05 * peak {
            continue;
        }
        let s = v.signum();
        if last_sign != 0.0 && s != last_sign {
            nodes += 1;
        }
        last_sign = s;
    }

    let label = if best > 0.5 {
        OrbitalLabel::from_quantum_numbers(dominant_m + 1 + nodes, dominant_m)
    } else {
        OrbitalLabel::Other
    };
    Ok(OrbitalAnalysis {
        channel_weights: weights,
        dominant_m,
        radial_nodes: nodes,
        label,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::SectorBasis;
    use crate::lattice::SiteCoord;
    use crate::operators::assemble_h0;

    fn single_h(lx: usize, ly: usize, field: &[f64]) -> SparseOperator {
        let g = LatticeGeometry::new(lx, ly).unwrap();
        assemble_h0(&SectorBasis::single(g), field, 1.0).unwrap()
    }

    fn lanczos_only() -> EigenOptions {
        EigenOptions {
            dense_cutoff: 0,
            ..EigenOptions::default()
        }
    }

    #[test]
    fn two_site_ground_state() {
        let h = single_h(2, 1, &[0.0, 0.0]);
        let gs = ground_state(&h, 1e-12).unwrap();
        assert!((gs.energy + 1.0).abs() < 1e-12);
        assert!((gs.state.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_operator_minimum() {
        let d: Vec<f64> = (0..3000).map(|i| ((i * 7919) % 3001) as f64 * 0.01 - 3.0).collect();
        let op = SparseOperator::diagonal(&d);
        let gs = ground_state(&op, 1e-10).unwrap();
        let min = d.iter().copied().fold(f64::INFINITY, f64::min);
        assert!((gs.energy - min).abs() < 1e-8);
    }

    #[test]
    fn two_by_two_plaquette_spectrum() {
        let h = single_h(2, 2, &[0.0; 4]);
        let e: Vec<f64> = low_spectrum(&h, 4, 1e-12).unwrap().iter().map(|p| p.energy).collect();
        let expect = [-2.0, 0.0, 0.0, 2.0];
        for (a, b) in e.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn lanczos_matches_dense_with_degeneracies() {
        // square lattice without potential: many exact degeneracies
        let h = single_h(12, 12, &vec![0.0; 144]);
        let dense = dense_spectrum(&h);
        let pairs = low_spectrum_with(&h, 8, &lanczos_only()).unwrap();
        for (p, d) in pairs.iter().zip(&dense) {
            assert!((p.energy - d).abs() < 1e-8, "{} vs {}", p.energy, d);
            assert!(p.residual < 1e-8);
        }
        for a in &pairs {
            for b in &pairs {
                let o = a.state.dot(&b.state).norm();
                let expect = if std::ptr::eq(a, b) { 1.0 } else { 0.0 };
                assert!((o - expect).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn k_equal_one_is_ground_state() {
        let field: Vec<f64> = (0..200).map(|i| (i as f64 * 0.37).sin()).collect();
        let h = single_h(20, 10, &field);
        let a = ground_state_with(&h, &lanczos_only()).unwrap();
        let b = low_spectrum_with(&h, 1, &lanczos_only()).unwrap();
        assert!((a.energy - b[0].energy).abs() < 1e-10);
        assert!((a.energy - dense_spectrum(&h)[0]).abs() < 1e-9);
    }

    #[test]
    fn principal_energy_examples() {
        assert_eq!(principal_energy(1, 1.0, 1.0).unwrap(), -1.0);
        assert!((principal_energy(2, 1.0, 1.0).unwrap() + 1.0 / 9.0).abs() < 1e-15);
        let gap = principal_energy(3, 1.0, 1.0).unwrap() - principal_energy(2, 1.0, 1.0).unwrap();
        assert!((gap - (1.0 / 9.0 - 1.0 / 25.0)).abs() < 1e-15);
        assert!((gap - 0.0711).abs() < 1e-4);
        assert!(principal_energy(0, 1.0, 1.0).is_err());
        assert!(principal_energy(1, 0.0, 1.0).is_err());
    }

    #[test]
    fn band_bottom_matches_empty_lattice() {
        let g = LatticeGeometry::new(7, 4).unwrap();
        let h = single_h(7, 4, &[0.0; 28]);
        assert!((dense_spectrum(&h)[0] - band_bottom(&g, 1.0)).abs() < 1e-12);
    }

    fn sampled(g: &LatticeGeometry, c: Position, f: impl Fn(f64, f64) -> f64) -> StateVector {
        let v: Vec<f64> = g
            .sites()
            .map(|s| {
                let dx = s.x as f64 - c.x;
                let dy = s.y as f64 - c.y;
                f(dx.hypot(dy), dy.atan2(dx))
            })
            .collect();
        StateVector::from_real(&v).normalized().unwrap()
    }

    #[test]
    fn classifies_model_orbitals() {
        let g = LatticeGeometry::new(41, 41).unwrap();
        let c = Position::new(20.0, 20.0);
        let s1 = sampled(&g, c, |r, _| (-r / 2.0).exp());
        assert_eq!(classify_orbital(&s1, &g, c).unwrap(), OrbitalLabel::S1);
        let p2 = sampled(&g, c, |r, t| r * (-r / 4.0).exp() * t.cos());
        assert_eq!(classify_orbital(&p2, &g, c).unwrap(), OrbitalLabel::P2);
        let s2 = sampled(&g, c, |r, _| (1.0 - r / 4.0) * (-r / 4.0).exp());
        assert_eq!(classify_orbital(&s2, &g, c).unwrap(), OrbitalLabel::S2);
        let f4 = sampled(&g, c, |r, t| r.powi(3) * (-r / 4.0).exp() * (3.0 * t).sin());
        assert_eq!(classify_orbital(&f4, &g, c).unwrap(), OrbitalLabel::F4);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noise: Vec<f64> = (0..g.num_sites()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let noise = StateVector::from_real(&noise);
        assert_eq!(classify_orbital(&noise, &g, c).unwrap(), OrbitalLabel::Other);
    }

    #[test]
    fn classification_ignores_phase_and_rotation() {
        let g = LatticeGeometry::new(31, 31).unwrap();
        let c = Position::new(15.0, 15.0);
        let p = sampled(&g, c, |r, t| r * (-r / 3.0).exp() * t.cos());
        let mut rotated = StateVector::zeros(g.num_sites());
        for s in g.sites() {
            // rotate by 90 degrees about the center
            let t = SiteCoord::new(30 - s.y, s.x);
            rotated[g.site_index(t).unwrap()] = p[g.site_index(s).unwrap()];
        }
        rotated.scale(Complex64::from_polar(1.0, 0.7));
        assert_eq!(classify_orbital(&rotated, &g, c).unwrap(), OrbitalLabel::P2);
    }
}
