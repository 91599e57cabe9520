use std::ops::Range;

use num_complex::Complex64;

use super::{Grid, QuantumError, Result, WaveFunction};

/// Projector onto the grid points with `a ≤ x(k) < b`, applied as a 0/1 mask.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionProjector {
    grid: Grid,
    a: f64,
    b: f64,
    range: Range<usize>,
}

impl RegionProjector {
    pub fn new(grid: Grid, a: f64, b: f64) -> Result<Self> {
        if !(a < b) {
            return Err(QuantumError::EmptyRegion { a, b });
        }
        Ok(Self {
            grid,
            a,
            b,
            range: grid.index_range(a, b),
        })
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Indices covered by the region.
    pub fn indices(&self) -> Range<usize> {
        self.range.clone()
    }

    pub fn mask(&self) -> Vec<f64> {
        (0..self.grid.len())
            .map(|k| if self.range.contains(&k) { 1.0 } else { 0.0 })
            .collect()
    }

    pub fn apply(&self, psi: &WaveFunction) -> Result<WaveFunction> {
        self.check(psi)?;
        let zero = Complex64::new(0.0, 0.0);
        let amp = psi
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(k, &a)| if self.range.contains(&k) { a } else { zero })
            .collect();
        WaveFunction::new(self.grid, amp)
    }

    /// `⟨φ|P|ψ⟩`.
    pub fn matrix_element(&self, phi: &WaveFunction, psi: &WaveFunction) -> Result<Complex64> {
        self.check(phi)?;
        self.check(psi)?;
        Ok(self.matrix_element_unchecked(phi, psi))
    }

    pub(crate) fn matrix_element_unchecked(&self, phi: &WaveFunction, psi: &WaveFunction) -> Complex64 {
        let r = self.range.clone();
        phi.amplitudes()[r.clone()]
            .iter()
            .zip(&psi.amplitudes()[r])
            .map(|(f, i)| f.conj() * i)
            .sum::<Complex64>()
            * self.grid.dx()
    }

    /// `⟨ψ|P|ψ⟩`.
    pub fn expectation(&self, psi: &WaveFunction) -> Result<f64> {
        self.check(psi)?;
        Ok(psi.probability_in(self.a, self.b))
    }

    fn check(&self, psi: &WaveFunction) -> Result<()> {
        if *psi.grid() == self.grid {
            Ok(())
        } else {
            Err(QuantumError::GridMismatch)
        }
    }
}

/// Shorthand for [`RegionProjector::new`].
pub fn region_projector(grid: Grid, a: f64, b: f64) -> Result<RegionProjector> {
    RegionProjector::new(grid, a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::make_gaussian_packet;
    use proptest::prelude::*;

    fn grid() -> Grid {
        Grid::new(-8.0, 0.25, 64).unwrap()
    }

    fn state(seed: &[(f64, f64)]) -> WaveFunction {
        let amp = seed.iter().map(|&(re, im)| Complex64::new(re, im)).collect();
        WaveFunction::new(grid(), amp).unwrap()
    }

    #[test]
    fn empty_region_is_rejected() {
        assert_eq!(
            RegionProjector::new(grid(), 1.0, 1.0),
            Err(QuantumError::EmptyRegion { a: 1.0, b: 1.0 })
        );
        assert!(RegionProjector::new(grid(), 2.0, 1.0).is_err());
    }

    #[test]
    fn whole_domain_is_identity() {
        let g = Grid::from_bounds(-50.0, 50.0, 512).unwrap();
        let psi = make_gaussian_packet(g, 0.0, 5.0, 0.7).unwrap();
        let p = RegionProjector::new(g, g.x_min(), g.x_max()).unwrap();
        assert_eq!(p.apply(&psi).unwrap(), psi);
    }

    #[test]
    fn expectation_is_the_direct_sum() {
        let g = Grid::from_bounds(-50.0, 50.0, 512).unwrap();
        let psi = make_gaussian_packet(g, 3.0, 5.0, 0.7).unwrap();
        let p = RegionProjector::new(g, -1.3, 7.9).unwrap();
        let mut direct = 0.0;
        for k in 0..g.len() {
            let x = g.x(k);
            if (-1.3..7.9).contains(&x) {
                direct += psi.amplitudes()[k].norm_sqr() * g.dx();
            }
        }
        assert!((p.expectation(&psi).unwrap() - direct).abs() < 1e-15);
        let via_element = p.matrix_element(&psi, &psi).unwrap();
        assert!((via_element.re - direct).abs() < 1e-14 && via_element.im == 0.0);
    }

    proptest! {
        #[test]
        fn idempotent(a in -9.0f64..8.0, w in 0.01f64..10.0,
                      amp in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 64)) {
            let p = RegionProjector::new(grid(), a, a + w).unwrap();
            let psi = state(&amp);
            let once = p.apply(&psi).unwrap();
            prop_assert_eq!(p.apply(&once).unwrap(), once);
        }

        #[test]
        fn cells_tiling_the_grid_sum_to_identity(
            mut cuts in prop::collection::vec(-7.9f64..7.9, 1..6),
            amp in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 64),
        ) {
            let g = grid();
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            let mut edges = vec![g.x_min()];
            edges.extend(cuts);
            edges.push(g.x_max());
            let psi = state(&amp);
            let mut total = vec![Complex64::new(0.0, 0.0); g.len()];
            for w in edges.windows(2) {
                let piece = RegionProjector::new(g, w[0], w[1]).unwrap().apply(&psi).unwrap();
                for (t, a) in total.iter_mut().zip(piece.amplitudes()) {
                    *t += a;
                }
            }
            prop_assert_eq!(total.as_slice(), psi.amplitudes());
        }

        #[test]
        fn inner_product_is_conjugate_symmetric(
            a in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 64),
            b in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 64),
        ) {
            let (phi, psi) = (state(&a), state(&b));
            let ab = phi.inner(&psi).unwrap();
            let ba = psi.inner(&phi).unwrap();
            prop_assert!((ab - ba.conj()).norm() < 1e-12);
        }
    }
}
