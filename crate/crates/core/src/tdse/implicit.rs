use num_complex::Complex64;

use crate::quantum::Grid;

/// Eighth-order central second difference, `d²ψ/dx² ≈ Σ_m C[|m|]·ψ_{j+m} / dx²`.
pub(crate) const LAPLACIAN_8: [f64; 5] = [-205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0];
const P: usize = LAPLACIAN_8.len() - 1;
const WIDTH: usize = 2 * P + 1;

/// Crank–Nicolson: `(1 + i·dt/2·H) ψ' = (1 − i·dt/2·H) ψ` with
/// `H = −½∂² + V` discretized by [`LAPLACIAN_8`] and ψ = 0 outside the grid.
pub(crate) struct CrankNicolson {
    /// Band of `H`, row-major, `WIDTH` entries per row, column offset `−P..=P`.
    h: Vec<f64>,
    lu: BandLu,
    tau: Complex64,
    rhs: Vec<Complex64>,
}

impl CrankNicolson {
    pub(crate) fn new(grid: &Grid, potential: &[f64], dt: f64) -> Self {
        let h = hamiltonian_band(grid, potential);
        let tau = Complex64::new(0.0, 0.5 * dt);
        let a: Vec<Complex64> = h
            .chunks_exact(WIDTH)
            .flat_map(|row| {
                row.iter().enumerate().map(move |(c, &v)| {
                    let diag = if c == P { 1.0 } else { 0.0 };
                    diag + tau * v
                })
            })
            .collect();
        Self {
            h,
            lu: BandLu::factor(a, grid.len()),
            tau,
            rhs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub(crate) fn step(&mut self, amp: &mut [Complex64]) {
        let n = amp.len();
        for j in 0..n {
            let row = &self.h[j * WIDTH..(j + 1) * WIDTH];
            let (lo, hi) = (j.saturating_sub(P), (j + P).min(n - 1));
            let mut hpsi = Complex64::new(0.0, 0.0);
            for col in lo..=hi {
                hpsi += row[col + P - j] * amp[col];
            }
            self.rhs[j] = amp[j] - self.tau * hpsi;
        }
        self.lu.solve(&mut self.rhs);
        amp.copy_from_slice(&self.rhs);
    }
}

pub(crate) fn hamiltonian_band(grid: &Grid, potential: &[f64]) -> Vec<f64> {
    let n = grid.len();
    let scale = -0.5 / (grid.dx() * grid.dx());
    let mut h = vec![0.0; n * WIDTH];
    for j in 0..n {
        for (m, c) in LAPLACIAN_8.iter().enumerate() {
            if j + m < n {
                h[j * WIDTH + P + m] = scale * c;
            }
            if m > 0 && j >= m {
                h[j * WIDTH + P - m] = scale * c;
            }
        }
        h[j * WIDTH + P] += potential[j];
    }
    h
}

/// `⟨ψ|H|ψ⟩` for the finite-difference Hamiltonian, unnormalized.
#[cfg(test)]
pub(crate) fn fd_energy(grid: &Grid, potential: &[f64], amp: &[Complex64]) -> f64 {
    let h = hamiltonian_band(grid, potential);
    let n = amp.len();
    let mut e = Complex64::new(0.0, 0.0);
    for j in 0..n {
        let (lo, hi) = (j.saturating_sub(P), (j + P).min(n - 1));
        let hpsi: Complex64 = (lo..=hi).map(|c| h[j * WIDTH + c + P - j] * amp[c]).sum();
        e += amp[j].conj() * hpsi;
    }
    e.re * grid.dx()
}

/// LU factors of a banded matrix, computed without pivoting.
///
/// `1 + iτH` with real symmetric `H` has a positive-definite Hermitian part, so
/// elimination without pivoting cannot break down.
struct BandLu {
    band: Vec<Complex64>,
    n: usize,
}

impl BandLu {
    fn factor(mut band: Vec<Complex64>, n: usize) -> Self {
        let at = |r: usize, c: usize| r * WIDTH + c + P - r;
        for k in 0..n {
            let pivot = band[at(k, k)];
            let last = (k + P).min(n - 1);
            for i in k + 1..=last {
                let l = band[at(i, k)] / pivot;
                band[at(i, k)] = l;
                for j in k + 1..=last {
                    let u = band[at(k, j)];
                    band[at(i, j)] -= l * u;
                }
            }
        }
        Self { band, n }
    }

    #[allow(clippy::needless_range_loop)]
    fn solve(&self, b: &mut [Complex64]) {
        let n = self.n;
        let at = |r: usize, c: usize| r * WIDTH + c + P - r;
        for i in 0..n {
            let mut s = b[i];
            for j in i.saturating_sub(P)..i {
                s -= self.band[at(i, j)] * b[j];
            }
            b[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..=(i + P).min(n - 1) {
                s -= self.band[at(i, j)] * b[j];
            }
            b[i] = s / self.band[at(i, i)];
        }
    }
}
