//! Fusion of a layout-derived coarse depth `d₀` with `N` monocular view
//! estimates that are each only known up to an affine map `s_n = (scale, offset)`.
//!
//! The objective is
//!
//! ```text
//! L(x, s) = Σ_p φ₀(p)(x(p) − d₀(p))² + Σ_n Σ_p φ_n(p)(x(p) − scale_n·d̂_n(p) − offset_n)²
//! ```
//!
//! with diagonal (per-pixel) weights. Eliminating `x` pixel by pixel leaves a
//! `2N×2N` linear system in the coefficients; with `σ = Σ_{n=0..N} φ_n` and
//! `v_k = [d̂_k, 1]ᵀ` its blocks accumulate as
//!
//! ```text
//! D_k   =  Σ_p φ_k(σ − φ_k)/σ · v_k v_kᵀ
//! U_k,l = −Σ_p φ_k φ_l / σ   · v_k v_lᵀ
//! b_k   =  Σ_p φ_k φ₀ d₀ / σ · v_k
//! ```
//!
//! Once `s` is known the fused depth is the per-pixel weighted mean.

mod oracle;
mod weights;

pub use oracle::{oracle_integrate, OracleResult};
pub use weights::{
    coarse_weight_floorplan, coarse_weight_terrain, erp_view_weights, tangent_weight, tangent_weight_map,
    view_estimate_to_erp,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DepthMap, Grid, WeightMap};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegrationConfig {
    /// Coarse weight where the partial image or an object covers the pixel.
    pub eta_low: f64,
    /// Coarse weight on bare room structure.
    pub eta_high: f64,
    /// Terrain coarse weight numerator.
    pub alpha: f64,
    /// Terrain coarse weight softening.
    pub epsilon: f64,
    /// Diagonal loading, relative to the mean diagonal of the normal matrix.
    pub ridge: f64,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        Self {
            eta_low: 0.0,
            eta_high: 2.0,
            alpha: 1.0e-3,
            epsilon: 1.0e-8,
            ridge: 1.0e-10,
        }
    }
}

impl IntegrationConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.eta_low >= 0.0
            && self.eta_high >= self.eta_low
            && self.eta_high.is_finite()
            && self.alpha > 0.0
            && self.alpha.is_finite()
            && self.epsilon > 0.0
            && self.epsilon.is_finite()
            && self.ridge >= 0.0
            && self.ridge.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "integration config out of range (need 0 ≤ η_L ≤ η_H, α > 0, ε > 0, ridge ≥ 0): {self:?}"
            )))
        }
    }
}

/// One view's monocular estimate resampled to the panorama, with its weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewEstimate {
    pub estimate: DepthMap,
    pub weight: WeightMap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineCoeff {
    pub scale: f64,
    pub offset: f64,
}

impl AffineCoeff {
    pub const IDENTITY: AffineCoeff = AffineCoeff {
        scale: 1.0,
        offset: 0.0,
    };

    pub fn apply(&self, d: f64) -> f64 {
        self.scale * d + self.offset
    }
}

type Block = [[f64; 2]; 2];

/// Block normal equations for the affine coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalSystem {
    views: usize,
    blocks: Vec<Block>,
    rhs: Vec<[f64; 2]>,
}

impl NormalSystem {
    fn zeros(views: usize) -> Self {
        Self {
            views,
            blocks: vec![[[0.0; 2]; 2]; views * views],
            rhs: vec![[0.0; 2]; views],
        }
    }

    pub fn views(&self) -> usize {
        self.views
    }

    /// Diagonal block `D_k` (0-based `k`).
    pub fn diagonal(&self, k: usize) -> Block {
        self.blocks[k * self.views + k]
    }

    /// Coupling block `U_k,l` for `k ≠ l`.
    pub fn coupling(&self, k: usize, l: usize) -> Block {
        debug_assert_ne!(k, l);
        self.blocks[k * self.views + l]
    }

    pub fn rhs(&self, k: usize) -> [f64; 2] {
        self.rhs[k]
    }

    /// Row-major dense `2N×2N` matrix.
    pub fn matrix(&self) -> Vec<f64> {
        let n = 2 * self.views;
        let mut m = vec![0.0; n * n];
        for k in 0..self.views {
            for l in 0..self.views {
                let b = self.blocks[k * self.views + l];
                for r in 0..2 {
                    for c in 0..2 {
                        m[(2 * k + r) * n + 2 * l + c] = b[r][c];
                    }
                }
            }
        }
        m
    }

    pub fn rhs_vector(&self) -> Vec<f64> {
        self.rhs.iter().flatten().copied().collect()
    }

    fn add(&mut self, other: &NormalSystem) {
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            for r in 0..2 {
                for c in 0..2 {
                    a[r][c] += b[r][c];
                }
            }
        }
        for (a, b) in self.rhs.iter_mut().zip(&other.rhs) {
            a[0] += b[0];
            a[1] += b[1];
        }
    }
}

fn check_inputs(d0: &DepthMap, phi0: &WeightMap, views: &[ViewEstimate]) -> Result<()> {
    d0.check_dims(phi0, "coarse weight")?;
    for (k, v) in views.iter().enumerate() {
        d0.check_dims(&v.estimate, &format!("estimate of view {}", k + 1))?;
        d0.check_dims(&v.weight, &format!("weight of view {}", k + 1))?;
    }
    let check = |what: &str, w: &WeightMap, values: &DepthMap| -> Result<()> {
        for (p, (&wt, &val)) in w.as_slice().iter().zip(values.as_slice()).enumerate() {
            if !(wt >= 0.0 && wt.is_finite()) {
                return Err(Error::invalid(format!("{what} has invalid weight {wt} at pixel {p}")));
            }
            if wt > 0.0 && !val.is_finite() {
                return Err(Error::invalid(format!(
                    "{what} puts weight {wt} on non-finite value {val} at pixel {p}"
                )));
            }
        }
        Ok(())
    };
    check("coarse depth", phi0, d0)?;
    for (k, v) in views.iter().enumerate() {
        check(&format!("view {}", k + 1), &v.weight, &v.estimate)?;
    }
    Ok(())
}

/// Value of the objective at `(x, coeffs)`. Zero-weight pixels contribute
/// nothing regardless of their values.
pub fn depth_loss(
    x: &DepthMap,
    d0: &DepthMap,
    phi0: &WeightMap,
    views: &[ViewEstimate],
    coeffs: &[AffineCoeff],
) -> Result<f64> {
    check_inputs(d0, phi0, views)?;
    d0.check_dims(x, "fused depth")?;
    if coeffs.len() != views.len() {
        return Err(Error::invalid(format!(
            "{} coefficients for {} views",
            coeffs.len(),
            views.len()
        )));
    }
    let mut loss = 0.0;
    for p in 0..x.len() {
        let xp = x.as_slice()[p];
        let mut term = |w: f64, target: f64| -> Result<()> {
            if w > 0.0 {
                if !xp.is_finite() {
                    return Err(Error::invalid(format!(
                        "fused depth is non-finite at weighted pixel {p}"
                    )));
                }
                let r = xp - target;
                loss += w * r * r;
            }
            Ok(())
        };
        term(phi0.as_slice()[p], d0.as_slice()[p])?;
        for (v, s) in views.iter().zip(coeffs) {
            term(v.weight.as_slice()[p], s.apply(v.estimate.as_slice()[p]))?;
        }
    }
    Ok(loss)
}

const ROWS_PER_CHUNK: usize = 8;

/// Accumulates the block normal equations. Requires a positive coarse weight
/// somewhere; otherwise the offsets and scales have nothing to anchor to.
pub fn assemble_normal_system(d0: &DepthMap, phi0: &WeightMap, views: &[ViewEstimate]) -> Result<NormalSystem> {
    check_inputs(d0, phi0, views)?;
    if !phi0.as_slice().iter().any(|&w| w > 0.0) {
        return Err(Error::NoAnchor("coarse-depth weight is zero everywhere".into()));
    }
    let n = views.len();
    let width = d0.width();
    let pixels_per_chunk = ROWS_PER_CHUNK * width.max(1);
    let chunks = d0.len().div_ceil(pixels_per_chunk);

    // Fixed chunking and in-order reduction keep the sums bit-reproducible.
    let partials: Vec<NormalSystem> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut sys = NormalSystem::zeros(n);
            let mut active: Vec<(usize, f64, f64)> = Vec::with_capacity(n);
            let end = ((c + 1) * pixels_per_chunk).min(d0.len());
            for p in c * pixels_per_chunk..end {
                let w0 = phi0.as_slice()[p];
                active.clear();
                let mut sigma = w0;
                for (k, v) in views.iter().enumerate() {
                    let w = v.weight.as_slice()[p];
                    if w > 0.0 {
                        active.push((k, w, v.estimate.as_slice()[p]));
                        sigma += w;
                    }
                }
                if sigma == 0.0 || active.is_empty() {
                    continue;
                }
                let anchor = if w0 > 0.0 { w0 * d0.as_slice()[p] / sigma } else { 0.0 };
                for &(k, wk, ek) in &active {
                    let self_coef = wk * (sigma - wk) / sigma;
                    let d = &mut sys.blocks[k * n + k];
                    d[0][0] += self_coef * ek * ek;
                    d[0][1] += self_coef * ek;
                    d[1][0] += self_coef * ek;
                    d[1][1] += self_coef;
                    let b = &mut sys.rhs[k];
                    b[0] += wk * anchor * ek;
                    b[1] += wk * anchor;
                    for &(l, wl, el) in &active {
                        if l == k {
                            continue;
                        }
                        let coef = -wk * wl / sigma;
                        let u = &mut sys.blocks[k * n + l];
                        u[0][0] += coef * ek * el;
                        u[0][1] += coef * ek;
                        u[1][0] += coef * el;
                        u[1][1] += coef;
                    }
                }
            }
            sys
        })
        .collect();

    let mut total = NormalSystem::zeros(n);
    for part in &partials {
        total.add(part);
    }
    Ok(total)
}

/// Refinement sweeps against the unloaded matrix after the loaded solve.
pub const REFINEMENT_STEPS: usize = 3;

/// Solves the block system. The diagonal is loaded with `ridge · mean(diag)`
/// before factorization, then a few iterative-refinement sweeps against the
/// unloaded matrix remove the bias the loading introduces on well-posed
/// systems. A pivot collapse is reported against its view (1-based).
pub fn solve_affine_coeffs(sys: &NormalSystem, ridge: f64) -> Result<Vec<AffineCoeff>> {
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::invalid(format!(
            "ridge must be finite and non-negative, got {ridge}"
        )));
    }
    let n = 2 * sys.views;
    if n == 0 {
        return Ok(Vec::new());
    }
    let a = sys.matrix();
    let b = sys.rhs_vector();
    let mean_diag = (0..n).map(|r| a[r * n + r]).sum::<f64>() / n as f64;
    let load = ridge * mean_diag;
    let mut loaded = a.clone();
    for r in 0..n {
        loaded[r * n + r] += load;
    }
    let lu = linalg::Lu::factor(loaded, n).map_err(|e| Error::Singular {
        view: e.column / 2 + 1,
        pivot: e.pivot,
    })?;
    let mut x = lu.solve(&b);
    if load > 0.0 {
        for _ in 0..REFINEMENT_STEPS {
            let ax = linalg::mat_vec(&a, &x);
            let residual: Vec<f64> = b.iter().zip(&ax).map(|(b, ax)| b - ax).collect();
            for (xi, dx) in x.iter_mut().zip(lu.solve(&residual)) {
                *xi += dx;
            }
        }
    }
    let coeffs: Vec<AffineCoeff> = x
        .chunks_exact(2)
        .map(|s| AffineCoeff {
            scale: s[0],
            offset: s[1],
        })
        .collect();
    if let Some(k) = coeffs
        .iter()
        .position(|c| !(c.scale.is_finite() && c.offset.is_finite()))
    {
        return Err(Error::Singular {
            view: k + 1,
            pivot: 0.0,
        });
    }
    Ok(coeffs)
}

/// Per-pixel weighted mean of the coarse depth and the affine-mapped estimates.
/// Pixels with no weight at all become +∞.
pub fn fuse_depth(d0: &DepthMap, phi0: &WeightMap, views: &[ViewEstimate], coeffs: &[AffineCoeff]) -> Result<DepthMap> {
    check_inputs(d0, phi0, views)?;
    if coeffs.len() != views.len() {
        return Err(Error::invalid(format!(
            "{} coefficients for {} views",
            coeffs.len(),
            views.len()
        )));
    }
    let mut out = Grid::filled(d0.height(), d0.width(), 0.0);
    out.as_mut_slice().par_iter_mut().enumerate().for_each(|(p, px)| {
        let w0 = phi0.as_slice()[p];
        let mut sigma = w0;
        let mut acc = if w0 > 0.0 { w0 * d0.as_slice()[p] } else { 0.0 };
        for (v, s) in views.iter().zip(coeffs) {
            let w = v.weight.as_slice()[p];
            if w > 0.0 {
                sigma += w;
                acc += w * s.apply(v.estimate.as_slice()[p]);
            }
        }
        *px = if sigma > 0.0 { acc / sigma } else { f64::INFINITY };
    });
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Integration {
    pub depth: DepthMap,
    pub coeffs: Vec<AffineCoeff>,
    pub loss: f64,
}

/// Closed-form minimizer of the objective: assemble, solve, fuse.
pub fn integrate(
    d0: &DepthMap,
    phi0: &WeightMap,
    views: &[ViewEstimate],
    cfg: &IntegrationConfig,
) -> Result<Integration> {
    cfg.validate()?;
    let sys = assemble_normal_system(d0, phi0, views)?;
    let coeffs = solve_affine_coeffs(&sys, cfg.ridge)?;
    let depth = fuse_depth(d0, phi0, views, &coeffs)?;
    let loss = depth_loss(&depth, d0, phi0, views, &coeffs)?;
    Ok(Integration { depth, coeffs, loss })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn px(v: f64) -> Grid<f64> {
        Grid::filled(1, 1, v)
    }

    fn view(est: f64, w: f64) -> ViewEstimate {
        ViewEstimate {
            estimate: px(est),
            weight: px(w),
        }
    }

    #[test]
    fn defaults_match_default_constants() {
        let c = IntegrationConfig::default();
        assert_eq!((c.eta_low, c.eta_high, c.alpha, c.epsilon), (0.0, 2.0, 1e-3, 1e-8));
    }

    #[test]
    fn loss_hand_values() {
        assert_eq!(
            depth_loss(
                &px(2.0),
                &px(2.0),
                &px(1.0),
                &[view(5.0, 0.0)],
                &[AffineCoeff::IDENTITY]
            )
            .unwrap(),
            0.0
        );
        assert_eq!(depth_loss(&px(2.0), &px(1.0), &px(3.0), &[], &[]).unwrap(), 3.0);
        let s = AffineCoeff {
            scale: 1.0,
            offset: 0.0,
        };
        assert_eq!(
            depth_loss(&px(2.0), &px(1.0), &px(3.0), &[view(2.0, 2.0)], &[s]).unwrap(),
            3.0
        );
    }

    #[test]
    fn loss_rejects_weighted_infinity() {
        let err = depth_loss(&px(2.0), &px(f64::INFINITY), &px(1.0), &[], &[]);
        assert!(err.is_err());
        assert_eq!(
            depth_loss(&px(2.0), &px(f64::INFINITY), &px(0.0), &[], &[]).unwrap(),
            0.0
        );
    }

    #[test]
    fn single_pixel_blocks() {
        let sys = assemble_normal_system(&px(2.0), &px(1.0), &[view(3.0, 1.0)]).unwrap();
        assert_eq!(sys.diagonal(0), [[4.5, 1.5], [1.5, 0.5]]);
        assert_eq!(sys.rhs(0), [3.0, 1.0]);
    }

    #[test]
    fn zero_weight_view_has_empty_blocks() {
        let d0 = Grid::from_vec(1, 2, vec![1.0, 2.0]).unwrap();
        let phi0 = Grid::filled(1, 2, 1.0);
        let dead = ViewEstimate {
            estimate: Grid::filled(1, 2, 3.0),
            weight: Grid::filled(1, 2, 0.0),
        };
        let live = ViewEstimate {
            estimate: Grid::from_vec(1, 2, vec![1.0, 5.0]).unwrap(),
            weight: Grid::filled(1, 2, 1.0),
        };
        let sys = assemble_normal_system(&d0, &phi0, &[live, dead]).unwrap();
        assert_eq!(sys.diagonal(1), [[0.0; 2]; 2]);
        assert_eq!(sys.rhs(1), [0.0; 2]);
        assert_eq!(sys.coupling(0, 1), [[0.0; 2]; 2]);
    }

    #[test]
    fn no_anchor_is_rejected() {
        let err = assemble_normal_system(&px(2.0), &px(0.0), &[view(3.0, 1.0)]).unwrap_err();
        assert!(matches!(err, Error::NoAnchor(_)));
    }

    #[test]
    fn fuse_hand_values() {
        let s = AffineCoeff {
            scale: 1.0,
            offset: 0.0,
        };
        assert_eq!(
            *fuse_depth(&px(2.0), &px(1.0), &[view(4.0, 1.0)], &[s])
                .unwrap()
                .get(0, 0),
            3.0
        );
        assert_eq!(
            *fuse_depth(&px(2.0), &px(1.0), &[view(4.0, 0.0)], &[s])
                .unwrap()
                .get(0, 0),
            2.0
        );
        assert_eq!(
            *fuse_depth(&px(f64::INFINITY), &px(0.0), &[view(4.0, 0.0)], &[s])
                .unwrap()
                .get(0, 0),
            f64::INFINITY
        );
    }

    fn random_instance(rng: &mut ChaCha8Rng, h: usize, w: usize, n: usize) -> (DepthMap, WeightMap, Vec<ViewEstimate>) {
        let d0 = Grid::from_fn(h, w, |_, _| rng.gen_range(0.5..10.0));
        let phi0 = Grid::from_fn(h, w, |_, _| rng.gen_range(0.0..1.0));
        let views = (0..n)
            .map(|_| ViewEstimate {
                estimate: Grid::from_fn(h, w, |_, _| rng.gen_range(0.5..10.0)),
                weight: Grid::from_fn(h, w, |_, _| rng.gen_range(0.0..1.0)),
            })
            .collect();
        (d0, phi0, views)
    }

    #[test]
    fn assembled_matrix_is_symmetric_with_psd_diagonal_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let (d0, phi0, views) = random_instance(&mut rng, 6, 9, 4);
            let sys = assemble_normal_system(&d0, &phi0, &views).unwrap();
            let m = sys.matrix();
            let n = 8;
            for r in 0..n {
                for c in 0..n {
                    assert_relative_eq!(m[r * n + c], m[c * n + r], max_relative = 1e-12);
                }
            }
            for k in 0..4 {
                let d = sys.diagonal(k);
                assert!(d[0][0] >= 0.0 && d[1][1] >= 0.0);
                assert!(d[0][0] * d[1][1] - d[0][1] * d[1][0] >= -1e-9 * d[0][0] * d[1][1]);
            }
        }
    }

    #[test]
    fn closed_form_beats_perturbations() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (d0, phi0, views) = random_instance(&mut rng, 8, 12, 3);
        let cfg = IntegrationConfig::default();
        let best = integrate(&d0, &phi0, &views, &cfg).unwrap();
        for _ in 0..50 {
            let coeffs: Vec<AffineCoeff> = best
                .coeffs
                .iter()
                .map(|c| AffineCoeff {
                    scale: c.scale + rng.gen_range(-0.1..0.1),
                    offset: c.offset + rng.gen_range(-0.1..0.1),
                })
                .collect();
            let x = best.depth.map(|v| v + rng.gen_range(-0.05..0.05));
            let loss = depth_loss(&x, &d0, &phi0, &views, &coeffs).unwrap();
            assert!(loss >= best.loss * (1.0 - 1e-8));
        }
    }

    #[test]
    fn consistent_views_recover_affine_maps() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let gt = Grid::from_fn(16, 32, |_, _| rng.gen_range(0.5..10.0));
        let truth = [(1.5, 0.3), (0.7, -0.8)];
        let views: Vec<ViewEstimate> = truth
            .iter()
            .map(|&(m, o)| ViewEstimate {
                estimate: gt.map(|&g| (g - o) / m),
                weight: Grid::from_fn(16, 32, |_, _| rng.gen_range(0.1..1.0)),
            })
            .collect();
        let phi0 = Grid::filled(16, 32, 1.0);
        let out = integrate(&gt, &phi0, &views, &IntegrationConfig::default()).unwrap();
        for (c, &(m, o)) in out.coeffs.iter().zip(&truth) {
            assert_abs_diff_eq!(c.scale, m, epsilon = 1e-8);
            assert_abs_diff_eq!(c.offset, o, epsilon = 1e-8);
        }
        for (x, g) in out.depth.as_slice().iter().zip(gt.as_slice()) {
            assert_relative_eq!(x, g, max_relative = 1e-8);
        }
    }

    #[test]
    fn constant_estimate_is_singular_without_ridge() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (d0, phi0, mut views) = random_instance(&mut rng, 6, 8, 3);
        views[1].estimate = Grid::filled(6, 8, 4.0);
        let sys = assemble_normal_system(&d0, &phi0, &views).unwrap();
        match solve_affine_coeffs(&sys, 0.0) {
            Err(Error::Singular { view, .. }) => assert_eq!(view, 2),
            other => panic!("expected singular view 2, got {other:?}"),
        }
        let coeffs = solve_affine_coeffs(&sys, IntegrationConfig::default().ridge).unwrap();
        assert!(coeffs.iter().all(|c| c.scale.is_finite() && c.offset.is_finite()));
    }

    #[test]
    fn infinite_coarse_region_takes_mapped_view() {
        let d0 = Grid::from_vec(1, 3, vec![2.0, 4.0, f64::INFINITY]).unwrap();
        let phi0 = Grid::from_vec(1, 3, vec![1.0, 1.0, 0.0]).unwrap();
        let v = ViewEstimate {
            estimate: Grid::from_vec(1, 3, vec![1.0, 2.0, 7.0]).unwrap(),
            weight: Grid::filled(1, 3, 1.0),
        };
        let out = integrate(&d0, &phi0, &[v], &IntegrationConfig::default()).unwrap();
        let s = out.coeffs[0];
        assert_relative_eq!(s.scale, 2.0, max_relative = 1e-8);
        assert_abs_diff_eq!(s.offset, 0.0, epsilon = 1e-8);
        assert_relative_eq!(*out.depth.get(0, 2), s.apply(7.0), max_relative = 1e-12);
    }

    #[test]
    fn no_views_returns_coarse_depth() {
        let d0 = Grid::from_vec(1, 2, vec![2.0, 3.0]).unwrap();
        let phi0 = Grid::from_vec(1, 2, vec![1.0, 0.0]).unwrap();
        let out = integrate(&d0, &phi0, &[], &IntegrationConfig::default()).unwrap();
        assert_eq!(out.depth.as_slice(), &[2.0, f64::INFINITY]);
        assert_eq!(out.loss, 0.0);
    }

    #[test]
    fn mismatched_dimensions_rejected() {
        let d0 = Grid::filled(2, 2, 1.0);
        let phi0 = Grid::filled(2, 3, 1.0);
        assert!(matches!(
            assemble_normal_system(&d0, &phi0, &[]),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
