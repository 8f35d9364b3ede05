//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test -p cusum-sentinel --test acceptance`. Extra
//! arguments that do not start with `-` select criteria by id, e.g.
//! `cargo test --test acceptance -- AC4 AC5`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use cusum_sentinel::attacks::{AttackSpec, CONSTANT};
use cusum_sentinel::bounds::{delay_ceiling, lemma1_lower_norm, lemma1_upper_norm, threshold_floor};
use cusum_sentinel::gcusum::{project_feasible, GcusumConfig, GcusumEngine, SupportPattern};
use cusum_sentinel::grid::{dc_power_flow, ieee14, parse_case, serialize_case, LinearTrajectory, LoadRamp};
use cusum_sentinel::model::{apply, column_basis, numerical_rank};
use cusum_sentinel::rgcusum::{increment, run, zeta, RgcusumState};
use cusum_sentinel::sim::{mean_se, Simulator};
use cusum_sentinel::{AttackBounds, LinearModel};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal(r: &mut ChaCha8Rng) -> f64 {
    r.sample(StandardNormal)
}

fn log_uniform(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + r.gen::<f64>() * (hi.ln() - lo.ln())).exp()
}

fn random_model(r: &mut ChaCha8Rng, m: usize, n: usize, sigma2: f64) -> LinearModel {
    loop {
        let h = DMatrix::from_fn(m, n, |_, _| normal(r));
        if let Ok(model) = LinearModel::new(h, sigma2) {
            return model;
        }
    }
}

fn wide_bounds() -> AttackBounds {
    AttackBounds::new(0.025, 100.0).unwrap()
}

fn moderate_bounds() -> AttackBounds {
    AttackBounds::new(0.5, 1.0).unwrap()
}

/// Fixture simulator in the σ² = 0.005 (or other) regime with the constant
/// attack projected onto the residual space.
fn fixture_attacked(sigma2: f64) -> Simulator {
    let (case, placement) = ieee14();
    let model = case.model(&placement, sigma2).unwrap();
    let mut spec = AttackSpec::constant(CONSTANT.to_vec());
    spec.project_to_complement = true;
    let (schedule, warnings) = spec.compile(&model.projector(), &wide_bounds()).unwrap();
    assert!(warnings.is_empty(), "{warnings:?}");
    let trajectory = LinearTrajectory::new(&case, &fixture_ramps()).unwrap();
    Simulator::new(model, trajectory, schedule, wide_bounds()).unwrap()
}

fn fixture_ramps() -> Vec<LoadRamp> {
    vec![
        LoadRamp { bus: 3, watts_per_step: -100.0 },
        LoadRamp { bus: 5, watts_per_step: 100.0 },
        LoadRamp { bus: 11, watts_per_step: 100.0 },
    ]
}

// AC1 -----------------------------------------------------------------------

fn ac1_projector() -> Check {
    let mut r = rng(1);
    let mut models: Vec<LinearModel> = (0..100)
        .map(|_| {
            let m = r.gen_range(2..=30);
            let n = r.gen_range(1..m);
            random_model(&mut r, m, n, 1.0)
        })
        .collect();
    let (case, placement) = ieee14();
    models.push(case.model(&placement, 0.005).unwrap());
    let mut worst = [0.0f64; 4];
    for model in &models {
        let p = model.projector();
        let d = p.diagnostics(model.h());
        let diag_err = (0..p.dim())
            .map(|i| {
                let pmm = p.matrix()[(i, i)];
                let outside = (-pmm).max(pmm - 1.0).max(0.0);
                outside.max((p.row_norms()[i].powi(2) - pmm).abs())
            })
            .fold(0.0, f64::max);
        for (w, v) in worst.iter_mut().zip([d.symmetry, d.idempotence, d.annihilation, diag_err]) {
            *w = w.max(v);
        }
    }
    ensure(worst.iter().all(|&w| w <= 1e-9), || format!("violations {}", sci(&worst)))?;
    Ok(format!(
        "{} models; max |P-Pᵀ| {:.1e}, |P²-P| {:.1e}, |PH| {:.1e}, P_mm/‖p_m‖² {:.1e}",
        models.len(),
        worst[0],
        worst[1],
        worst[2],
        worst[3]
    ))
}

// AC2 -----------------------------------------------------------------------

/// Constrained 1-D supremum over a grid of 10⁴ magnitudes per sign,
/// geometrically spaced so the relative resolution is uniform across wide
/// bands.
fn zeta_grid(x: f64, rl: f64, ru: f64, s2: f64) -> f64 {
    let n = 10_000;
    let ratio = ru / rl;
    let mut best = f64::NEG_INFINITY;
    for k in 0..n {
        let mag = if k == n - 1 { ru } else { rl * ratio.powf(k as f64 / (n - 1) as f64) };
        for mu in [mag, -mag] {
            best = best.max((2.0 * mu * x - mu * mu) / (2.0 * s2));
        }
    }
    best
}

fn ac2_zeta_oracle() -> Check {
    let mut r = rng(2);
    let mut worst = 0.0f64;
    for i in 0..10_000 {
        let rl = log_uniform(&mut r, 1e-3, 1e2);
        let ru = if i % 50 == 0 { rl } else { rl * log_uniform(&mut r, 1.0, 1e4) };
        let s2 = log_uniform(&mut r, 1e-4, 1e2);
        let span = (ru / rl).log10();
        let mag = rl * 10f64.powf(-2.0 + r.gen::<f64>() * (span + 4.0));
        let x = if r.gen::<bool>() { mag } else { -mag };
        let b = AttackBounds::new(rl, ru).unwrap();
        let z = zeta(x, &b, s2);
        let g = zeta_grid(x, rl, ru, s2);
        let mu = x.abs().clamp(rl, ru);
        let rounding = 8.0 * f64::EPSILON * (2.0 * x.abs() * mu + mu * mu) / (2.0 * s2);
        let err = (z - g).abs();
        ensure(z >= g - rounding, || format!("ζ below grid supremum at x={x}, ρ=({rl},{ru}), σ²={s2}"))?;
        ensure(err <= 1e-6 * z.abs() + rounding, || format!("x={x}, ρ=({rl},{ru}), σ²={s2}: ζ={z}, grid={g}"))?;
        if z != 0.0 {
            worst = worst.max((err - rounding).max(0.0) / z.abs());
        }
    }
    Ok(format!("10000 samples, max relative gap {worst:.1e}"))
}

// AC3 -----------------------------------------------------------------------

fn ac3_recursion_batch() -> Check {
    let mut r = rng(3);
    let mut steps = 0;
    for _ in 0..100 {
        let m = r.gen_range(2..=12);
        let n = r.gen_range(1..m);
        let s2 = log_uniform(&mut r, 1e-3, 10.0);
        let model = random_model(&mut r, m, n, s2);
        let proj = model.projector();
        let rl = log_uniform(&mut r, 1e-2, 1.0);
        let b = AttackBounds::new(rl, rl * log_uniform(&mut r, 1.0, 100.0)).unwrap();
        let len = r.gen_range(50..300);
        let scale = s2.sqrt() * log_uniform(&mut r, 0.1, 10.0);
        let stream: Vec<Vec<f64>> = (0..len).map(|_| (0..m).map(|_| scale * normal(&mut r)).collect()).collect();
        // Batch double sum: inner over meters, outer over time.
        let mut batch = Vec::with_capacity(len);
        let mut omega = 0.0;
        for x in &stream {
            let xt = proj.residual(x).unwrap();
            let mut inner = 0.0;
            for &v in xt.as_slice() {
                inner += zeta(v, &b, s2).max(0.0);
            }
            omega += inner;
            batch.push(omega);
        }
        let report = run(&stream, &proj, &b, s2, f64::MAX).unwrap();
        ensure(report.trace.len() == len, || "trace length".into())?;
        let mut state = RgcusumState::new(f64::MAX).unwrap();
        for (k, x) in stream.iter().enumerate() {
            state.step(proj.residual(x).unwrap().as_slice(), &b, s2).unwrap();
            ensure(
                state.omega().to_bits() == batch[k].to_bits() && report.trace[k].to_bits() == batch[k].to_bits(),
                || format!("step {k}: recursion {} vs batch {}", state.omega(), batch[k]),
            )?;
        }
        steps += len;
    }
    Ok(format!("100 streams, {steps} steps, all bit-identical"))
}

// AC4 -----------------------------------------------------------------------

/// Independent check of the documented gap instance (H = ones(3×1),
/// ρ = (0.5, 2), σ² = 1): the residual space is {Σμ = 0}; enumerate supports
/// and grid the free parameters.
fn gap_instance_oracle(x: [f64; 3]) -> f64 {
    let (rl, ru) = (0.5, 2.0);
    let ok = |v: f64| v == 0.0 || (rl..=ru).contains(&v.abs());
    let obj = |mu: [f64; 3]| (0..3).map(|i| 2.0 * mu[i] * x[i] - mu[i] * mu[i]).sum::<f64>() / 2.0;
    let mut best = f64::NEG_INFINITY;
    let n = 2000;
    let step = 2.0 * ru / n as f64;
    for i in 0..=n {
        let a = -ru + step * i as f64;
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            let mut mu = [0.0; 3];
            mu[p] = a;
            mu[q] = -a;
            if a != 0.0 && ok(a) {
                best = best.max(obj(mu));
            }
        }
        for j in 0..=n {
            let c = -ru + step * j as f64;
            let mu = [a, c, -a - c];
            if mu.iter().all(|&v| v != 0.0 && ok(v)) {
                best = best.max(obj(mu));
            }
        }
    }
    best
}

fn ac4_dominance() -> Check {
    let x = [0.4, 0.4, -0.8];
    let ones = LinearModel::new(DMatrix::from_element(3, 1, 1.0), 1.0).unwrap();
    let gb = AttackBounds::new(0.5, 2.0).unwrap();
    let v = GcusumEngine::new(&ones, gb, GcusumConfig::default()).unwrap().v_stat(&x).unwrap().value;
    let relaxed = increment(&x, &gb, 1.0);
    let oracle = gap_instance_oracle(x);
    ensure((v - 0.45).abs() < 1e-7 && (oracle - 0.45).abs() < 1e-6, || {
        format!("gap instance: v={v}, oracle={oracle}")
    })?;
    ensure((relaxed - 0.47).abs() < 1e-12 && v < relaxed, || format!("relaxed {relaxed}"))?;

    let mut r = rng(4);
    let (mut steps, mut alarms_r, mut alarms_g, mut strict) = (0, 0, 0, 0);
    for inst in 0..200u64 {
        let m = [3, 4, 5][inst as usize % 3];
        let n = r.gen_range(1..m);
        let s2 = r.gen_range(0.3..2.0);
        let model = random_model(&mut r, m, n, s2);
        let rl = r.gen_range(0.2..1.0);
        let b = AttackBounds::new(rl, rl * r.gen_range(1.0..4.0)).unwrap();
        let a: Vec<f64> = (0..m).map(|_| b.rho_u() * normal(&mut r)).collect();
        let mut spec = AttackSpec::constant(a);
        spec.project_to_complement = true;
        spec.onset = r.gen_range(1..20);
        let (schedule, _) = spec.compile(&model.projector(), &b).unwrap();
        let traj = LinearTrajectory {
            base: (0..n).map(|_| normal(&mut r)).collect(),
            slope: (0..n).map(|_| 0.1 * normal(&mut r)).collect(),
        };
        let sim = Simulator::new(model.clone(), traj, schedule, b).unwrap();
        let engine = GcusumEngine::new(&model, b, GcusumConfig::default()).unwrap();
        for xt in sim.residuals(inst, 0, 40) {
            let v = engine.v_stat(&xt).unwrap().value;
            let inc = increment(&xt, &b, s2);
            ensure(v <= inc + 1e-12 * inc.abs().max(1.0), || format!("instance {inst}: v={v} > {inc}"))?;
            strict += usize::from(v < inc - 1e-9);
            steps += 1;
        }
        let h = r.gen_range(1.0..30.0);
        let (tr, tg) = sim.run_paired(&engine, h, 500, inst, 1).unwrap();
        alarms_r += usize::from(!tr.censored);
        alarms_g += usize::from(!tg.censored);
        ensure(tr.stop_time <= tg.stop_time && (!tr.censored || tg.censored), || {
            format!("instance {inst}: T_R={} (censored {}) > T_G={}", tr.stop_time, tr.censored, tg.stop_time)
        })?;
    }
    Ok(format!(
        "gap instance v=0.45<0.47; {steps} steps dominated ({strict} strict); 200 paired runs T_R ≤ T_G ({alarms_r} / {alarms_g} alarms)"
    ))
}

// AC5 -----------------------------------------------------------------------

fn objective(mu: &[f64], x: &[f64]) -> f64 {
    mu.iter().zip(x).map(|(m, x)| 2.0 * m * x - m * m).sum()
}

/// Maximizes `eval` over a `d`-dimensional grid centred at `center`, then
/// repeatedly zooms onto the best point (±10 spacings, 81 points per axis).
fn zoom_max(center: Vec<f64>, half: f64, n0: usize, eval: impl Fn(&[f64]) -> Option<f64>) -> Option<f64> {
    let d = center.len();
    let (mut center, mut half, mut n) = (center, half, n0);
    let mut best: Option<f64> = None;
    for level in 0..16 {
        let spacing = 2.0 * half / (n - 1) as f64;
        let mut level_best: Option<(f64, Vec<f64>)> = None;
        let mut c = vec![0.0; d];
        for idx in 0..n.pow(d as u32) {
            for (j, cj) in c.iter_mut().enumerate() {
                *cj = center[j] - half + spacing * ((idx / n.pow(j as u32)) % n) as f64;
            }
            if let Some(o) = eval(&c) {
                if level_best.as_ref().is_none_or(|b| o > b.0) {
                    level_best = Some((o, c.clone()));
                }
            }
        }
        match level_best {
            Some((o, c)) => {
                center = c;
                best = Some(best.map_or(o, |b: f64| b.max(o)));
            }
            None if level == 0 => return None,
            None => {}
        }
        half = 10.0 * spacing;
        n = 81;
    }
    best
}

/// Dense grid search over the free coordinates `c` of `μ_A = V c`. In two
/// dimensions the optimum of the concave objective lies either inside the
/// feasible polygon or on an edge where one band limit is active, so each
/// band-limit line is also searched on its own 1-D grid.
fn projection_grid_oracle(xa: &[f64], v: &DMatrix<f64>, lo: &[f64], hi: &[f64]) -> Option<f64> {
    let (k, d) = v.shape();
    let scale = hi.iter().chain(lo).fold(0.0f64, |a, b| a.max(b.abs()));
    let radius = (k as f64).sqrt() * scale;
    let slack = 1e-12 * scale;
    let eval = |c: &[f64]| {
        let mu = v * DVector::from_column_slice(c);
        (0..k).all(|i| mu[i] >= lo[i] - slack && mu[i] <= hi[i] + slack).then(|| objective(mu.as_slice(), xa))
    };
    if d == 1 {
        return zoom_max(vec![0.0], radius, 40_001, eval);
    }
    let mut best = zoom_max(vec![0.0; 2], radius, 401, eval);
    for i in 0..k {
        let r = [v[(i, 0)], v[(i, 1)]];
        let r2 = r[0] * r[0] + r[1] * r[1];
        if r2 < 1e-20 {
            continue;
        }
        let dir = [-r[1] / r2.sqrt(), r[0] / r2.sqrt()];
        for beta in [lo[i], hi[i]] {
            let base = [beta * r[0] / r2, beta * r[1] / r2];
            let on_line = |t: &[f64]| eval(&[base[0] + t[0] * dir[0], base[1] + t[0] * dir[1]]);
            if let Some(o) = zoom_max(vec![0.0], 2.0 * radius, 4001, on_line) {
                best = Some(best.map_or(o, |b| b.max(o)));
            }
        }
    }
    best
}

fn ac5_inner_solver() -> Check {
    let cfg = GcusumConfig::default();
    let two = LinearModel::new(DMatrix::from_element(2, 1, 1.0), 1.0).unwrap();
    let b = AttackBounds::new(0.5, 2.0).unwrap();
    let pat = SupportPattern::new(vec![0, 1], vec![1, -1]).unwrap();
    let mu = project_feasible(&[1.0, -1.0], &two, &pat, &b, &cfg).unwrap().unwrap();
    ensure((mu[0] - 1.0).abs() < 1e-9 && (mu[1] + 1.0).abs() < 1e-9, || format!("μ* = {mu:?}"))?;
    for s in [1, -1] {
        let pat = SupportPattern::new(vec![0], vec![s]).unwrap();
        ensure(project_feasible(&[1.0, -1.0], &two, &pat, &b, &cfg).unwrap().is_none(), || {
            "single-meter support should be infeasible".into()
        })?;
    }

    let mut r = rng(5);
    let (mut compared, mut infeasible, mut thin, mut worst) = (0, 0, 0, 0.0f64);
    for _ in 0..40 {
        let m = r.gen_range(3..=4);
        let n = r.gen_range(1..m);
        let model = random_model(&mut r, m, n, 1.0);
        let rl = r.gen_range(0.1..0.8);
        let b = AttackBounds::new(rl, rl * r.gen_range(1.2..4.0)).unwrap();
        let raw: Vec<f64> = (0..m).map(|_| b.rho_u() * normal(&mut r)).collect();
        let x = model.projector().residual(&raw).unwrap().into_vec();
        for mask in 1u32..(1 << m) {
            let support: Vec<usize> = (0..m).filter(|&i| mask & (1 << i) != 0).collect();
            let k = support.len();
            let ha = DMatrix::from_fn(k, n, |i, j| model.h()[(support[i], j)]);
            let q = column_basis(&ha);
            // The free dimension comes from the rank of H_A; the complement
            // basis of a near-zero matrix would only pick up round-off.
            let d = k - q.ncols();
            if d > 2 {
                continue;
            }
            let v = if d == 0 {
                DMatrix::zeros(k, 0)
            } else {
                let eig = (DMatrix::identity(k, k) - &q * q.transpose()).symmetric_eigen();
                let keep: Vec<usize> = (0..k).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
                assert_eq!(keep.len(), d);
                eig.eigenvectors.select_columns(&keep)
            };
            for smask in 0u32..(1 << k) {
                let signs: Vec<i8> = (0..k).map(|j| if smask & (1 << j) != 0 { -1 } else { 1 }).collect();
                let pat = SupportPattern::new(support.clone(), signs.clone()).unwrap();
                let got = project_feasible(&x, &model, &pat, &b, &cfg).unwrap();
                let xa: Vec<f64> = support.iter().map(|&i| x[i]).collect();
                let (lo, hi): (Vec<f64>, Vec<f64>) = signs
                    .iter()
                    .map(|&s| if s > 0 { (b.rho_l(), b.rho_u()) } else { (-b.rho_u(), -b.rho_l()) })
                    .unzip();
                let oracle = if d == 0 { None } else { projection_grid_oracle(&xa, &v, &lo, &hi) };
                match (got, oracle) {
                    (Some(mu), Some(o)) => {
                        let mua: Vec<f64> = support.iter().map(|&i| mu[i]).collect();
                        let err = (objective(&mua, &xa) - o).abs();
                        worst = worst.max(err);
                        ensure(err <= 1e-4, || format!("objective {} vs grid {o} on {pat:?}", objective(&mua, &xa)))?;
                        compared += 1;
                    }
                    (None, None) => infeasible += 1,
                    (None, Some(o)) => return Err(format!("solver says infeasible, grid found {o} on {pat:?}")),
                    (Some(mu), None) => {
                        // The grid can miss a sliver-thin feasible set; the
                        // solver's point must then be feasible on its own.
                        let mua = DVector::from_iterator(k, support.iter().map(|&i| mu[i]));
                        let in_band = (0..k).all(|i| mua[i] >= lo[i] && mua[i] <= hi[i]);
                        let off = (ha.transpose() * &mua).amax();
                        ensure(in_band && off <= 1e-5 * ha.amax().max(1.0), || {
                            format!("grid infeasible and solver point invalid ({off:e}) on {pat:?}")
                        })?;
                        thin += 1;
                    }
                }
            }
        }
    }
    Ok(format!(
        "{compared} patterns matched (max objective gap {worst:.1e}), {infeasible} infeasible agreed, {thin} thin sets"
    ))
}

// AC6 -----------------------------------------------------------------------

fn ac6_expectation_bounds() -> Check {
    let (case, placement) = ieee14();
    let mut r = rng(6);
    let draws = 100_000;
    let mut checks = 0;
    let mut min_upper_margin = f64::INFINITY;
    let mut min_lower_margin = f64::INFINITY;
    for (s2, b) in [(0.005, wide_bounds()), (1.0, moderate_bounds())] {
        let model = case.model(&placement, s2).unwrap();
        let proj = model.projector();
        for &p in proj.row_norms() {
            let sd = s2.sqrt() * p;
            let mean_under = |mu: f64, r: &mut ChaCha8Rng| {
                let v: Vec<f64> = (0..draws).map(|_| zeta(mu + sd * normal(r), &b, s2).max(0.0)).collect();
                mean_se(&v)
            };
            let (mean, se) = mean_under(0.0, &mut r);
            let upper = lemma1_upper_norm(p, &b, s2);
            ensure(mean <= upper + 3.0 * se, || format!("σ²={s2}, ‖p‖={p}: mean {mean} > upper {upper}"))?;
            min_upper_margin = min_upper_margin.min((upper - mean) / se.max(1e-300));
            checks += 1;
            let lower = lemma1_lower_norm(p, &b, s2);
            for mu in [b.rho_l(), -b.rho_l(), b.rho_u(), -b.rho_u()] {
                let (mean, se) = mean_under(mu, &mut r);
                ensure(mean >= lower - 3.0 * se, || format!("σ²={s2}, ‖p‖={p}, μ={mu}: mean {mean} < lower {lower}"))?;
                min_lower_margin = min_lower_margin.min((mean - lower) / se.max(1e-300));
                checks += 1;
            }
        }
    }
    Ok(format!(
        "{checks} meter/law pairs; closest margins {min_upper_margin:.1} SE (upper), {min_lower_margin:.1} SE (lower)"
    ))
}

// AC7 -----------------------------------------------------------------------

fn reduced_model(sigma2: f64) -> LinearModel {
    let rows = [1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, -1.0, 2.0, 1.0, 1.0, 2.0];
    LinearModel::new(DMatrix::from_row_slice(6, 2, &rows), sigma2).unwrap()
}

fn ac7_threshold_floor() -> Check {
    let model = reduced_model(1.0);
    let b = moderate_bounds();
    let gamma = 50.0;
    let h = threshold_floor(&model.projector(), &b, 1.0, gamma).unwrap();
    let sim = Simulator::null(model, b);
    let horizon = (50.0 * gamma) as u64;
    let s = sim.estimate_arl(h, horizon, 7, 2000).unwrap();
    let lcb = s.mean_stop_time - 1.645 * s.std_error;
    ensure(lcb >= gamma, || format!("ARL {} ± {} below γ", s.mean_stop_time, s.std_error))?;
    Ok(format!(
        "h={h:.2}, ARL={:.1} (SE {:.2}, censored {:.1}%), 95% lower bound {lcb:.1} ≥ 50",
        s.mean_stop_time,
        s.std_error,
        100.0 * s.censored_fraction
    ))
}

// AC8 -----------------------------------------------------------------------

fn ac8_delay_ceiling() -> Check {
    // Both columns are orthogonal to s, so μ = c·s is a residual-space attack
    // with every entry at magnitude c.
    let s = [1.0, 1.0, -1.0, -1.0, 1.0, -1.0];
    let h = DMatrix::from_column_slice(6, 2, &[1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 1.0]);
    let model = LinearModel::new(h, 1.0).unwrap();
    let b = moderate_bounds();
    let proj = model.projector();
    let mut lines = Vec::new();
    for c in [b.rho_l(), b.rho_u()] {
        let mu: Vec<f64> = s.iter().map(|v| c * v).collect();
        let (schedule, warnings) = AttackSpec::constant(mu).compile(&proj, &b).unwrap();
        ensure(warnings.is_empty(), || format!("{warnings:?}"))?;
        let sim = Simulator::null(model.clone(), b).with_attack(schedule);
        let hs = [50.0, 200.0, 800.0];
        let stats = sim.sweep(&hs, 1_000_000, 8, 1000).unwrap();
        for st in &stats {
            let ceiling = delay_ceiling(st.h, &proj, &b, 1.0).unwrap();
            ensure(!ceiling.is_vacuous(), || "ceiling is vacuous".into())?;
            let edd = st.mean_delay.unwrap();
            let ucb = edd + 1.645 * st.delay_std_error.unwrap();
            ensure(ucb <= ceiling.value() && st.censored == 0, || {
                format!("|μ|={c}, h={}: EDD {edd} (ucb {ucb}) vs ceiling {}", st.h, ceiling.value())
            })?;
            lines.push(format!("h={} EDD {:.1}≤{:.0}", st.h, edd, ceiling.value()));
        }
    }
    Ok(lines.join(", "))
}

// AC9 -----------------------------------------------------------------------

fn ac9_overshoot() -> Check {
    let sim = fixture_attacked(0.005);
    // Attacked increments have mean ≈ 5.1e3 and sd ≈ 1.0e2 here, so the
    // crossing is nearly lattice-like until ω has accumulated enough spread
    // (√K · sd ≳ mean, i.e. K ≳ 2.6e3 steps). Below that the ratio follows
    // the sawtooth of ⌈h/g⌉g − h. The grid starts past that point.
    let hs: Vec<f64> = (0..5).map(|k| 1.25e7 * 2f64.powf(k as f64 / 2.0)).collect();
    let stats = sim.sweep(&hs, 10_000_000, 9, 600).unwrap();
    let ratios: Vec<f64> = stats.iter().map(|s| s.mean_overshoot.unwrap() / s.h).collect();
    ensure(stats.iter().all(|s| s.censored == 0), || "censored runs".into())?;
    ensure(ratios.windows(2).all(|w| w[1] < w[0]), || format!("ratios {}", sci(&ratios)))?;
    Ok(format!("h ∈ [1.25e7, 5e7], overshoot/h = {}", sci(&ratios)))
}

// AC10 ----------------------------------------------------------------------

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> Option<f64> {
    (0..xs.len() - 1).find(|&i| xs[i] <= x && x <= xs[i + 1]).map(|i| {
        if xs[i + 1] == xs[i] {
            ys[i]
        } else {
            ys[i] + (ys[i + 1] - ys[i]) * (x - xs[i]) / (xs[i + 1] - xs[i])
        }
    })
}

fn ac10_sigma_trend() -> Check {
    let hs: Vec<f64> = (0..25).map(|k| 2e3 * 50f64.powf(k as f64 / 24.0)).collect();
    let curves: Vec<_> = [0.005, 0.01]
        .iter()
        .map(|&s2| fixture_attacked(s2).curve_sweep(&hs, 100_000_000, 100_000_000, 10, 300).unwrap())
        .collect();
    let mut out = Vec::new();
    for target in [4.0, 6.0, 8.0, 12.0] {
        let mut arl = [0.0; 2];
        for (i, rows) in curves.iter().enumerate() {
            let edd: Vec<f64> = rows.iter().map(|r| r.edd.unwrap()).collect();
            let hv: Vec<f64> = rows.iter().map(|r| r.h).collect();
            let av: Vec<f64> = rows.iter().map(|r| r.arl).collect();
            let h = interpolate(&edd, &hv, target).ok_or_else(|| format!("EDD {target} outside sweep"))?;
            arl[i] = interpolate(&hv, &av, h).unwrap();
        }
        ensure(arl[0] > arl[1], || format!("EDD {target}: ARL(0.005)={} ≤ ARL(0.01)={}", arl[0], arl[1]))?;
        out.push(format!("EDD {target}: {:.0} > {:.0}", arl[0], arl[1]));
    }
    Ok(out.join(", "))
}

// AC11 ----------------------------------------------------------------------

fn zeta_sequence(sim: &Simulator, seed: u64, len: usize) -> Vec<f64> {
    let b = *sim.bounds();
    let s2 = sim.model().sigma2();
    sim.residuals(seed, 0, len).into_iter().flatten().map(|x| zeta(x, &b, s2)).collect()
}

fn ac11_invariance() -> Check {
    let (case, placement) = ieee14();
    let model = case.model(&placement, 0.005).unwrap();
    let b = wide_bounds();
    let mut r = rng(11);
    let mut spec = AttackSpec::constant(CONSTANT.to_vec());
    spec.onset = 50;
    let (schedule, _) = spec.compile(&model.projector(), &b).unwrap();
    let ramped =
        Simulator::new(model.clone(), LinearTrajectory::new(&case, &fixture_ramps()).unwrap(), schedule, b).unwrap();
    let other = ramped
        .with_trajectory(LinearTrajectory {
            base: (0..13).map(|_| 0.3 * normal(&mut r)).collect(),
            slope: (0..13).map(|_| 0.01 * normal(&mut r)).collect(),
        })
        .unwrap();
    let base = zeta_sequence(&ramped, 77, 200);
    let swapped = zeta_sequence(&other, 77, 200);
    let theta_err = base.iter().zip(&swapped).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ensure(theta_err <= 1e-8, || format!("θ swap changed ζ by {theta_err:e}"))?;

    let c: Vec<f64> = (0..13).map(|_| normal(&mut r)).collect();
    let hc = apply(model.h(), &c).unwrap();
    let shifted: Vec<f64> = CONSTANT.iter().zip(&hc).map(|(a, h)| a + h).collect();
    let mut spec2 = AttackSpec::constant(shifted);
    spec2.onset = 50;
    let (schedule2, _) = spec2.compile(&model.projector(), &b).unwrap();
    let hc_sim = ramped.with_attack(schedule2);
    let hc_seq = zeta_sequence(&hc_sim, 77, 200);
    let hc_err = base.iter().zip(&hc_seq).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ensure(hc_err <= 1e-8, || format!("Hc shift changed ζ by {hc_err:e}"))?;
    Ok(format!("200 steps × 23 meters; max |Δζ| {theta_err:.1e} (θ swap), {hc_err:.1e} (Hc)"))
}

// AC12 ----------------------------------------------------------------------

fn ac12_parser() -> Check {
    let file = parse_case(cusum_sentinel::grid::IEEE14_CASE).map_err(|e| e.to_string())?;
    let text = serialize_case(&file.case, file.placement.as_ref());
    let again = parse_case(&text).map_err(|e| e.to_string())?;
    ensure(again == file, || "round trip changed the case".into())?;
    ensure(serialize_case(&again.case, again.placement.as_ref()) == text, || "serializer not canonical".into())?;
    let placement = file.placement.as_ref().unwrap();
    let h = file.case.build_h(placement).map_err(|e| e.to_string())?;
    ensure(file.case.buses().len() == 14 && file.case.branches().len() == 20, || "bus/branch counts".into())?;
    ensure(h.nrows() == 23 && numerical_rank(&h) == 13, || format!("H {}×{}", h.nrows(), h.ncols()))?;

    let mut r = rng(12);
    for _ in 0..20 {
        let b: f64 = log_uniform(&mut r, 0.1, 100.0);
        let p: f64 = 10.0 * normal(&mut r);
        let two = format!("gridcase v1\nref 1\nbus 1 0\nbus 2 0\nbranch 1 2 {b}\n");
        let case = parse_case(&two).map_err(|e| e.to_string())?.case;
        let theta = dc_power_flow(&case, &[p]).map_err(|e| e.to_string())?;
        ensure(theta[0] == p / b, || format!("θ₂ = {} vs p/b = {}", theta[0], p / b))?;
    }
    let two = parse_case("gridcase v1\nref 1\nbus 1 0\nbus 2 0\nbranch 1 2 10\n").unwrap().case;
    ensure(dc_power_flow(&two, &[5.0]).unwrap() == vec![0.5], || "θ₂ ≠ 0.5".into())?;
    Ok("round trip exact; 14 buses, 20 branches, M = 23, rank 13; 2-bus θ₂ = p₂/b exact".into())
}

// ---------------------------------------------------------------------------

type Criterion = (&'static str, &'static str, u64, fn() -> Check);

const CRITERIA: [Criterion; 12] = [
    ("AC1", "projector suite", 5, ac1_projector),
    ("AC2", "ζ grid-oracle equivalence", 30, ac2_zeta_oracle),
    ("AC3", "recursion equals batch sum", 60, ac3_recursion_batch),
    ("AC4", "relaxation dominance", 120, ac4_dominance),
    ("AC5", "GCUSUM inner solver", 60, ac5_inner_solver),
    ("AC6", "expectation bounds sandwich", 60, ac6_expectation_bounds),
    ("AC7", "threshold floor keeps ARL ≥ γ", 120, ac7_threshold_floor),
    ("AC8", "delay ceiling holds", 120, ac8_delay_ceiling),
    ("AC9", "overshoot/h decreases", 300, ac9_overshoot),
    ("AC10", "smaller σ² gives larger ARL at matched EDD", 600, ac10_sigma_trend),
    ("AC11", "θ and Hc invariance", 60, ac11_invariance),
    ("AC12", "case parser and DC solve", 60, ac12_parser),
];

fn main() -> ExitCode {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (id, title, limit, f) in CRITERIA {
        if !filters.is_empty() && !filters.iter().any(|x| x.eq_ignore_ascii_case(id)) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > Duration::from_secs(limit) => Err(format!("exceeded {limit} s limit ({detail})")),
            other => other,
        };
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        failed += usize::from(outcome.is_err());
        println!("[{tag}] {id:<4} {title} ({:.2} s / {limit} s): {detail}", elapsed.as_secs_f64());
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
