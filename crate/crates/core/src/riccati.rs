//! Explosion counting for the Riccati flow `g' = V(y) - lambda - g^2`,
//! started at `g(0) = +infinity` and restarted there after every blow-up to
//! `-infinity`. On each grid cell the potential is a constant (noise enters
//! as the cell-averaged increment), so the flow is solved in closed form cell
//! by cell and no step-size control is needed.

/// Number of explosions over the cells of width `h` whose potentials are
/// yielded by `potential`, at spectral parameter `lambda`.
pub fn explosion_count(h: f64, potential: impl IntoIterator<Item = f64>, lambda: f64) -> usize {
    let mut g = f64::INFINITY;
    let mut count = 0usize;
    for v in potential {
        let (n, next) = cell_flow(g, v - lambda, h);
        count += n;
        g = next;
    }
    count
}

/// Cell index of every explosion, in order (a cell may appear repeatedly).
pub fn explosion_cells(h: f64, potential: impl IntoIterator<Item = f64>, lambda: f64) -> Vec<usize> {
    let mut g = f64::INFINITY;
    let mut cells = Vec::new();
    for (k, v) in potential.into_iter().enumerate() {
        let (n, next) = cell_flow(g, v - lambda, h);
        cells.extend(std::iter::repeat_n(k, n));
        g = next;
    }
    cells
}

/// Exact flow of `g' = c - g^2` over a time `h`: explosions and end value.
pub fn cell_flow(g: f64, c: f64, h: f64) -> (usize, f64) {
    if c.abs() * h * h < 1e-16 {
        return free_flow(g, h);
    }
    if c < 0.0 {
        // g = k cot(psi) with psi' = k; each pass of psi through pi is a blow-up
        let k = (-c).sqrt();
        let psi0 = if g == f64::INFINITY {
            0.0
        } else {
            std::f64::consts::FRAC_PI_2 - (g / k).atan()
        };
        let psi = psi0 + k * h;
        let turns = (psi / std::f64::consts::PI).floor();
        let rest = psi - turns * std::f64::consts::PI;
        let end = if rest == 0.0 { f64::INFINITY } else { k / rest.tan() };
        (turns as usize, end)
    } else {
        // fixed points at +-k; only starts below -k blow up, at most once per cell
        let k = c.sqrt();
        if g == f64::INFINITY {
            return (0, k / (k * h).tanh());
        }
        if g < -k {
            let hit = (-k / g).atanh() / k;
            if hit <= h {
                let r = h - hit;
                let end = if r > 0.0 { k / (k * r).tanh() } else { f64::INFINITY };
                return (1, end);
            }
        }
        let th = (k * h).tanh();
        (0, k * (g + k * th) / (k + g * th))
    }
}

fn free_flow(g: f64, h: f64) -> (usize, f64) {
    if g == f64::INFINITY {
        return (0, 1.0 / h);
    }
    if g < 0.0 && -1.0 / g <= h {
        let r = h + 1.0 / g;
        let end = if r > 0.0 { 1.0 / r } else { f64::INFINITY };
        return (1, end);
    }
    (0, g / (1.0 + g * h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rk4_reference(g0: f64, c: f64, h: f64) -> f64 {
        let steps = 100_000;
        let dt = h / steps as f64;
        let f = |g: f64| c - g * g;
        let mut g = g0;
        for _ in 0..steps {
            let k1 = f(g);
            let k2 = f(g + 0.5 * dt * k1);
            let k3 = f(g + 0.5 * dt * k2);
            let k4 = f(g + dt * k3);
            g += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        g
    }

    #[test]
    fn closed_form_matches_integration_without_blowup() {
        for &(g0, c) in &[(0.3, 2.0), (-0.5, 4.0), (3.0, -1.0), (0.2, 1e-20), (5.0, 0.5)] {
            let (n, end) = cell_flow(g0, c, 0.4);
            assert_eq!(n, 0);
            let r = rk4_reference(g0, c, 0.4);
            assert!((end - r).abs() < 1e-9 * r.abs().max(1.0), "g0={g0} c={c}: {end} vs {r}");
        }
    }

    #[test]
    fn free_particle_counts_half_periods() {
        // g = sqrt(l) cot(sqrt(l) y) blows up at y = m pi / sqrt(l)
        let xi = 3.0;
        for m in 0..6 {
            let lambda = (PI / xi).powi(2) * (m as f64 + 0.5).powi(2);
            for &cells in &[1usize, 7, 1000] {
                let h = xi / cells as f64;
                assert_eq!(explosion_count(h, vec![0.0; cells], lambda), m);
            }
        }
    }

    #[test]
    fn no_explosions_below_potential() {
        assert_eq!(explosion_count(0.01, vec![1.0; 500], 0.5), 0);
        assert_eq!(explosion_count(0.01, vec![1.0; 500], 1.0), 0);
    }

    #[test]
    fn blowup_inside_positive_cell() {
        // from g0 = -2k the blow-up time is atanh(1/2)/k
        let k = 1.5;
        let hit = 0.5f64.atanh() / k;
        let (n, _) = cell_flow(-2.0 * k, k * k, hit * 1.01);
        assert_eq!(n, 1);
        let (n, g) = cell_flow(-2.0 * k, k * k, hit * 0.99);
        assert_eq!(n, 0);
        assert!(g < -100.0);
    }
}
