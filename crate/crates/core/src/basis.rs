//! One- and two-particle spatial bases.
//!
//! The Hamiltonian never flips spin, so a two-particle spin singlet lives in
//! the exchange-symmetric spatial sector and a spin triplet in the
//! antisymmetric one. The distinguishable basis is kept for validation.
//!
//! Two-particle kets are `|i,j>_S = (|ij> + |ji>)/sqrt(2)` for `i < j` and
//! `|ii>_S = |ii>`; `|i,j>_A = (|ij> - |ji>)/sqrt(2)` for `i < j`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeGeometry;
use crate::operators::StateVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExchangeSymmetry {
    /// Spin singlet ("bosonic" spatial wavefunction).
    Symmetric,
    /// Spin triplet ("fermionic" spatial wavefunction).
    Antisymmetric,
    Distinguishable,
}

impl ExchangeSymmetry {
    /// Spin-sector name used on the command line.
    pub fn spin_label(&self) -> &'static str {
        match self {
            ExchangeSymmetry::Symmetric => "singlet",
            ExchangeSymmetry::Antisymmetric => "triplet",
            ExchangeSymmetry::Distinguishable => "distinguishable",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SectorBasis {
    geometry: LatticeGeometry,
    particles: usize,
    symmetry: ExchangeSymmetry,
    /// Site pairs in lexicographic order; empty for one particle.
    pairs: Vec<(u32, u32)>,
}

impl SectorBasis {
    pub fn single(geometry: LatticeGeometry) -> Self {
        Self {
            geometry,
            particles: 1,
            symmetry: ExchangeSymmetry::Distinguishable,
            pairs: Vec::new(),
        }
    }

    pub fn pair(geometry: LatticeGeometry, symmetry: ExchangeSymmetry) -> Self {
        let n = geometry.num_sites() as u32;
        let pairs = match symmetry {
            ExchangeSymmetry::Symmetric => (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect(),
            ExchangeSymmetry::Antisymmetric => {
                (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
            }
            ExchangeSymmetry::Distinguishable => {
                (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect()
            }
        };
        Self {
            geometry,
            particles: 2,
            symmetry,
            pairs,
        }
    }

    pub fn build(
        geometry: LatticeGeometry,
        particle_count: usize,
        symmetry: ExchangeSymmetry,
    ) -> Result<Self> {
        match particle_count {
            1 => Ok(Self::single(geometry)),
            2 => Ok(Self::pair(geometry, symmetry)),
            n => Err(Error::Unsupported(format!(
                "{n}-particle sectors (at most two particles are supported)"
            ))),
        }
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geometry
    }

    pub fn particle_count(&self) -> usize {
        self.particles
    }

    pub fn symmetry(&self) -> ExchangeSymmetry {
        self.symmetry
    }

    pub fn is_single(&self) -> bool {
        self.particles == 1
    }

    pub fn dim(&self) -> usize {
        if self.is_single() {
            self.geometry.num_sites()
        } else {
            self.pairs.len()
        }
    }

    /// Site pair of basis state `k` (`(i, i)` placeholder-free only for two particles).
    #[inline]
    pub fn pair_of(&self, k: usize) -> (usize, usize) {
        let (i, j) = self.pairs[k];
        (i as usize, j as usize)
    }

    /// Basis index of the canonical ordering of `(i, j)`, or `None` where the
    /// sector has no such ket (coincident sites in the antisymmetric sector).
    pub fn index_of(&self, i: usize, j: usize) -> Option<usize> {
        let n = self.geometry.num_sites();
        if i >= n || j >= n {
            return None;
        }
        match self.symmetry {
            ExchangeSymmetry::Distinguishable => Some(i * n + j),
            ExchangeSymmetry::Symmetric => Some(sym_index(n, i.min(j), i.max(j))),
            ExchangeSymmetry::Antisymmetric => {
                if i == j {
                    None
                } else {
                    let (a, b) = (i.min(j), i.max(j));
                    Some(antisym_index(n, a, b))
                }
            }
        }
    }

    /// Overlap `<S(a,b)|pq>` of the sector ket with an ordered product ket,
    /// together with the sector index.
    #[inline]
    pub(crate) fn project_ordered(&self, p: usize, q: usize) -> Option<(usize, f64)> {
        let n = self.geometry.num_sites();
        match self.symmetry {
            ExchangeSymmetry::Distinguishable => Some((p * n + q, 1.0)),
            ExchangeSymmetry::Symmetric => {
                if p == q {
                    Some((sym_index(n, p, p), 1.0))
                } else {
                    let (a, b) = (p.min(q), p.max(q));
                    Some((sym_index(n, a, b), std::f64::consts::FRAC_1_SQRT_2))
                }
            }
            ExchangeSymmetry::Antisymmetric => {
                if p == q {
                    None
                } else if p < q {
                    Some((antisym_index(n, p, q), std::f64::consts::FRAC_1_SQRT_2))
                } else {
                    Some((antisym_index(n, q, p), -std::f64::consts::FRAC_1_SQRT_2))
                }
            }
        }
    }

    /// Expansion of basis ket `k` in ordered product kets: up to two
    /// `((p, q), coefficient)` terms.
    #[inline]
    pub(crate) fn expand(&self, k: usize) -> ([((usize, usize), f64); 2], usize) {
        let (i, j) = self.pair_of(k);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match self.symmetry {
            ExchangeSymmetry::Distinguishable => ([((i, j), 1.0), ((0, 0), 0.0)], 1),
            ExchangeSymmetry::Symmetric if i == j => ([((i, i), 1.0), ((0, 0), 0.0)], 1),
            ExchangeSymmetry::Symmetric => ([((i, j), s), ((j, i), s)], 2),
            ExchangeSymmetry::Antisymmetric => ([((i, j), s), ((j, i), -s)], 2),
        }
    }

    /// Amplitude `<i,j|psi>` in the sector normalization: symmetric under
    /// swap in the symmetric sector, odd in the antisymmetric one.
    pub fn pair_amplitude(&self, state: &StateVector, i: usize, j: usize) -> Result<Complex64> {
        if self.is_single() {
            return Err(Error::domain("pair amplitude requested on a one-particle basis"));
        }
        crate::error::check_len("pair amplitude state", self.dim(), state.len())?;
        let zero = Complex64::new(0.0, 0.0);
        Ok(match self.symmetry {
            ExchangeSymmetry::Distinguishable => self.index_of(i, j).map_or(zero, |k| state[k]),
            ExchangeSymmetry::Symmetric => self.index_of(i, j).map_or(zero, |k| state[k]),
            ExchangeSymmetry::Antisymmetric => match self.index_of(i, j) {
                None => zero,
                Some(k) if i < j => state[k],
                Some(k) => -state[k],
            },
        })
    }

    /// Normalized two-particle state built from orbitals `a` and `b`:
    /// `|a>|b>` projected onto this sector (so `|a b> +- |b a>`).
    pub fn product_state(&self, a: &[Complex64], b: &[Complex64]) -> Result<StateVector> {
        if self.is_single() {
            return Err(Error::domain("product state requested on a one-particle basis"));
        }
        let n = self.geometry.num_sites();
        crate::error::check_len("orbital a", n, a.len())?;
        crate::error::check_len("orbital b", n, b.len())?;
        let coeffs = (0..self.dim())
            .map(|k| {
                let (terms, used) = self.expand(k);
                terms[..used].iter().map(|&((p, q), c)| a[p] * b[q] * c).sum()
            })
            .collect();
        StateVector::from_vec(coeffs)
            .normalized()
            .map_err(|_| Error::Degenerate("orbitals give no state in this sector".into()))
    }

    /// Single-site occupation `<n_i>` of a state in this basis.
    pub fn site_density(&self, state: &StateVector) -> Result<Vec<f64>> {
        crate::error::check_len("density state", self.dim(), state.len())?;
        let n = self.geometry.num_sites();
        let mut rho = vec![0.0; n];
        if self.is_single() {
            for (r, a) in rho.iter_mut().zip(state.iter()) {
                *r = a.norm_sqr();
            }
            return Ok(rho);
        }
        for (k, a) in state.iter().enumerate() {
            let (i, j) = self.pair_of(k);
            let w = a.norm_sqr();
            if self.symmetry == ExchangeSymmetry::Distinguishable || i != j {
                rho[i] += w;
                rho[j] += w;
            } else {
                rho[i] += 2.0 * w;
            }
        }
        Ok(rho)
    }
}

#[inline]
fn sym_index(n: usize, a: usize, b: usize) -> usize {
    // rows 0..a hold n, n-1, ..., n-a+1 entries
    a * n - a * a.saturating_sub(1) / 2 + (b - a)
}

#[inline]
fn antisym_index(n: usize, a: usize, b: usize) -> usize {
    a * n - a * (a + 1) / 2 + (b - a - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(lx: usize, ly: usize) -> LatticeGeometry {
        LatticeGeometry::new(lx, ly).unwrap()
    }

    #[test]
    fn dimensions() {
        let g21 = LatticeGeometry::padded(10);
        assert_eq!(SectorBasis::pair(g21, ExchangeSymmetry::Symmetric).dim(), 97_461);
        assert_eq!(SectorBasis::pair(g21, ExchangeSymmetry::Antisymmetric).dim(), 97_020);
        assert_eq!(SectorBasis::pair(g(2, 1), ExchangeSymmetry::Antisymmetric).dim(), 1);
        assert_eq!(SectorBasis::pair(g(3, 3), ExchangeSymmetry::Distinguishable).dim(), 81);
        assert_eq!(SectorBasis::single(g(3, 4)).dim(), 12);
        assert!(matches!(
            SectorBasis::build(g(3, 3), 3, ExchangeSymmetry::Symmetric),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn index_round_trip() {
        for sym in [
            ExchangeSymmetry::Symmetric,
            ExchangeSymmetry::Antisymmetric,
            ExchangeSymmetry::Distinguishable,
        ] {
            for (lx, ly) in [(1, 1), (2, 1), (5, 4), (17, 13)] {
                let b = SectorBasis::pair(g(lx, ly), sym);
                for k in 0..b.dim() {
                    let (i, j) = b.pair_of(k);
                    assert_eq!(b.index_of(i, j), Some(k), "{sym:?} {lx}x{ly} k={k}");
                }
            }
        }
    }

    #[test]
    fn large_sector_round_trip() {
        let b = SectorBasis::pair(g(21, 21), ExchangeSymmetry::Symmetric);
        assert!((0..b.dim()).all(|k| {
            let (i, j) = b.pair_of(k);
            b.index_of(i, j) == Some(k) && b.index_of(j, i) == Some(k)
        }));
    }

    #[test]
    fn pair_amplitudes() {
        let geo = g(3, 1);
        let anti = SectorBasis::pair(geo, ExchangeSymmetry::Antisymmetric);
        let mut psi = StateVector::zeros(anti.dim());
        psi[anti.index_of(0, 2).unwrap()] = Complex64::new(0.6, 0.8);
        assert_eq!(anti.pair_amplitude(&psi, 1, 1).unwrap(), Complex64::new(0.0, 0.0));
        assert_eq!(
            anti.pair_amplitude(&psi, 2, 0).unwrap(),
            -anti.pair_amplitude(&psi, 0, 2).unwrap()
        );

        let sym = SectorBasis::pair(g(2, 1), ExchangeSymmetry::Symmetric);
        let psi = StateVector::basis(sym.dim(), sym.index_of(0, 0).unwrap());
        assert_eq!(sym.pair_amplitude(&psi, 0, 0).unwrap(), Complex64::new(1.0, 0.0));
        let psi = StateVector::basis(sym.dim(), sym.index_of(0, 1).unwrap());
        assert_eq!(
            sym.pair_amplitude(&psi, 1, 0).unwrap(),
            sym.pair_amplitude(&psi, 0, 1).unwrap()
        );
    }

    #[test]
    fn density_counts_two_particles() {
        let sym = SectorBasis::pair(g(3, 2), ExchangeSymmetry::Symmetric);
        let psi = StateVector::basis(sym.dim(), sym.index_of(4, 4).unwrap());
        let rho = sym.site_density(&psi).unwrap();
        assert_eq!(rho[4], 2.0);
        assert_eq!(rho.iter().sum::<f64>(), 2.0);
    }

    #[test]
    fn product_states_follow_exchange_symmetry() {
        let g = LatticeGeometry::new(3, 2).unwrap();
        let c = |v: &[f64]| v.iter().map(|&x| Complex64::new(x, 0.0)).collect::<Vec<_>>();
        let a = c(&[0.5, 0.5, 0.0, 0.5, 0.5, 0.0]);
        let b = c(&[0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        let sym = SectorBasis::pair(g, ExchangeSymmetry::Symmetric);
        let aa = sym.product_state(&a, &a).unwrap();
        let rho = sym.site_density(&aa).unwrap();
        for (r, x) in rho.iter().zip(&a) {
            assert!((r - 2.0 * x.norm_sqr()).abs() < 1e-12);
        }
        let anti = SectorBasis::pair(g, ExchangeSymmetry::Antisymmetric);
        assert!(anti.product_state(&a, &a).is_err());
        let ab = anti.product_state(&a, &b).unwrap();
        let ba = anti.product_state(&b, &a).unwrap();
        assert!((ab.dot(&ba).re + 1.0).abs() < 1e-12);
        // <0,2|ab> = (a_0 b_2 - b_0 a_2)/sqrt(2) in the sector normalization
        let amp = anti.pair_amplitude(&ab, 0, 2).unwrap();
        assert!((amp.re - 0.5 / 2f64.sqrt() / (0.5f64).sqrt()).abs() < 1e-12);
    }
}
