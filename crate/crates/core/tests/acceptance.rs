//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//! Run with `cargo test -p landscape-core --test acceptance`.

use std::time::{Duration, Instant};

use landscape_core::analysis::{folding_statistic, folding_test, ice_curves, modality_summary, Category};
use landscape_core::collect::{
    run_pipeline, select_best, Bump, PhasePlan, Region, RunArchive, SurrogatePhase, SurrogateSpec, SurrogateTrainable,
};
use landscape_core::dataset::{aggregate, normalize, Affine, Band, ConfigStats, EvalKind, NormScope, PerConfigStats};
use landscape_core::models::{
    cross_validate, fit_igpr, fit_ilm, fit_surface_triple, format_cv_table, grid_eval, lml, FitOptions, GpOptions,
    GpParams, GridSpec, ModelKind, Surface,
};
use landscape_core::sobol::{sample_unit_cube, Scramble, Sobol};
use landscape_core::space::{build_space, HyperparameterDef, SearchSpace, UnitVector};
use landscape_core::stats::{iqm, quantile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn unit_space(dims: usize) -> SearchSpace {
    build_space((0..dims).map(|d| HyperparameterDef::linear(format!("x{d}"), 0.0, 1.0)).collect()).unwrap()
}

fn plan(space: SearchSpace, num_configs: usize, seeds: Vec<u64>, phase_steps: Vec<u64>) -> PhasePlan {
    let t_final = *phase_steps.last().unwrap();
    PhasePlan {
        space,
        num_configs,
        seeds,
        phase_steps,
        t_final,
        eval_episodes: 10,
        sampler_seed: 42,
        eval_seed: 4242,
    }
}

fn bump_phase(end_step: u64, center: Vec<f64>, height: f64, width: f64) -> SurrogatePhase {
    SurrogatePhase {
        end_step,
        baseline: 0.0,
        bumps: vec![Bump { center, height, width }],
    }
}

fn surrogate(space: &SearchSpace, phases: Vec<SurrogatePhase>, noise: f64) -> SurrogateTrainable {
    let spec = SurrogateSpec {
        phases,
        seed_offset: 0.0,
        noise,
        bimodal_region: None,
        skill_gain: 1.0,
    };
    SurrogateTrainable::new(space.clone(), spec).unwrap()
}

fn normal(n: usize, mu: f64, sd: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let d = Normal::new(mu, sd).unwrap();
    (0..n).map(|_| d.sample(rng)).collect()
}

fn within_budget(t: Instant, budget: Duration, what: &str) -> Result<(), String> {
    let el = t.elapsed();
    if el > budget {
        Err(format!("{what} took {el:.2?}, budget {budget:?}"))
    } else {
        Ok(())
    }
}

// 1. Sobol prefix and dyadic balance.
fn sobol_correctness() -> Outcome {
    let t = Instant::now();
    let first: Vec<f64> = Sobol::new(1)
        .unwrap()
        .points(1, 5, Scramble::None)
        .unwrap()
        .into_iter()
        .map(|p| p[0])
        .collect();
    ensure!(first == [0.5, 0.75, 0.25, 0.375, 0.875], "prefix {first:?}");

    for n in 1..=4 {
        let sob = Sobol::new(n).unwrap();
        for k in 0..=10u32 {
            let pts = sob.points(0, 1 << k, Scramble::None).unwrap();
            // every axis: 2^m cells with 2^(k-m) points each
            for d in 0..n {
                for m in 0..=k {
                    let mut counts = vec![0usize; 1 << m];
                    for p in &pts {
                        counts[(p[d] * (1u64 << m) as f64) as usize] += 1;
                    }
                    ensure!(
                        counts.iter().all(|&c| c == 1 << (k - m)),
                        "n={n} k={k} dim {d} level {m}: {counts:?}"
                    );
                }
            }
            // first two axes form a (0, k, 2)-net: every elementary box of volume 2^-k holds one point
            if n >= 2 {
                for i in 0..=k {
                    let j = k - i;
                    let mut counts = vec![0usize; 1 << k];
                    for p in &pts {
                        let a = (p[0] * (1u64 << i) as f64) as usize;
                        let b = (p[1] * (1u64 << j) as f64) as usize;
                        counts[(a << j) | b] += 1;
                    }
                    ensure!(counts.iter().all(|&c| c == 1), "n={n} k={k} box {i}x{j} unbalanced");
                }
            }
        }
    }
    within_budget(t, Duration::from_secs(1), "sobol checks")?;
    Ok(format!("prefix ok, balance exact for n<=4, k<=10 ({:.2?})", t.elapsed()))
}

// 2. Folding statistic calibration.
fn folding_calibration() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let uniform: Vec<f64> = (0..100_000).map(|_| rng.random::<f64>()).collect();
    let gauss = normal(100_000, 0.0, 1.0, &mut rng);
    let two_point: Vec<f64> = (0..1000).map(|i| if i < 500 { -5.0 } else { 5.0 }).collect();
    let pu = folding_statistic(&uniform).map_err(|e| e.to_string())?.phi;
    let pn = folding_statistic(&gauss).map_err(|e| e.to_string())?.phi;
    let pt = folding_statistic(&two_point).map_err(|e| e.to_string())?.phi;
    ensure!((0.98..=1.02).contains(&pu), "uniform phi {pu}");
    ensure!((1.43..=1.48).contains(&pn), "normal phi {pn}");
    ensure!(pt < 1e-9, "two-point phi {pt}");
    within_budget(t, Duration::from_secs(5), "calibration")?;
    Ok(format!("uniform {pu:.4}, normal {pn:.4}, two-point {pt:.1e} ({:.2?})", t.elapsed()))
}

// 3. Classification power at n = 50.
fn modality_power() -> Outcome {
    let t = Instant::now();
    let (mut bimodal_hits, mut normal_false) = (0, 0);
    for trial in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(10_000 + trial);
        let mix: Vec<f64> = (0..50)
            .map(|_| {
                let c = if rng.random::<bool>() { 5.0 } else { -5.0 };
                c + normal(1, 0.0, 1.0, &mut rng)[0]
            })
            .collect();
        let out = folding_test(&mix, 0.05, 1000, trial).map_err(|e| e.to_string())?;
        bimodal_hits += (out.category == Category::Multimodal) as usize;
        let gauss = normal(50, 0.0, 1.0, &mut rng);
        let out = folding_test(&gauss, 0.05, 1000, trial + 7).map_err(|e| e.to_string())?;
        normal_false += (out.category == Category::Multimodal) as usize;
    }
    ensure!(bimodal_hits >= 95, "mixture classified multimodal {bimodal_hits}/100");
    ensure!(normal_false == 0, "normal classified multimodal {normal_false}/100");
    within_budget(t, Duration::from_secs(60), "classification trials")?;
    Ok(format!("mixture {bimodal_hits}/100 multimodal, normal {normal_false}/100 ({:.2?})", t.elapsed()))
}

// 4. ILM interpolates every phase exactly; linear (additive) truth gives parallel ICE curves.
fn ilm_exactness() -> Outcome {
    let space = unit_space(2);
    let p = plan(space.clone(), 32, vec![0, 1], vec![100, 200, 300]);
    let tr = surrogate(
        &space,
        vec![
            bump_phase(100, vec![0.3, 0.3], 1.0, 0.2),
            bump_phase(200, vec![0.7, 0.5], 1.0, 0.2),
            bump_phase(300, vec![0.4, 0.8], 1.0, 0.2),
        ],
        0.05,
    );
    let archive = run_pipeline(&p, &tr).map_err(|e| e.to_string())?;
    let stats: Vec<PerConfigStats> = archive
        .landscape
        .phases()
        .into_iter()
        .map(|ph| aggregate(&archive.landscape, EvalKind::Landscape, ph))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let (normed, affines) = normalize(&stats, NormScope::PooledAllPhases).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for (raw, affine) in stats.iter().zip(&affines) {
        let triple = fit_surface_triple(raw, ModelKind::Ilm, &FitOptions::default(), *affine).map_err(|e| e.to_string())?;
        let st = &normed[raw.phase_index - normed[0].phase_index];
        for band in Band::ALL {
            for (u, y) in st.points().iter().zip(st.targets(band)) {
                let err = (triple.band(band).predict(u.coords()).map_err(|e| e.to_string())? - y).abs();
                worst = worst.max(err);
            }
        }
    }
    ensure!(worst <= 1e-9, "worst center residual {worst:e}");

    let pts = sample_unit_cube(3, 40, Scramble::DigitalShift(9)).unwrap();
    let data: Vec<(UnitVector, f64)> = pts
        .iter()
        .map(|u| {
            let c = u.coords();
            (u.clone(), 2.0 * c[0] - 3.0 * c[1] + 0.5 * c[2] + 1.0)
        })
        .collect();
    let surface = Surface::Ilm(fit_ilm(&data).map_err(|e| e.to_string())?);
    let set = ice_curves(&surface, 1, &pts, 25).map_err(|e| e.to_string())?;
    let mut spread = 0.0f64;
    for c in &set.curves[1..] {
        let diffs: Vec<f64> = c.iter().zip(&set.curves[0]).map(|(a, b)| a - b).collect();
        let (lo, hi) = diffs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), d| (l.min(*d), h.max(*d)));
        spread = spread.max(hi - lo);
    }
    ensure!(spread <= 1e-9, "ICE curves not parallel: spread {spread:e}");
    Ok(format!("center residual {worst:.1e} over {} phases, ICE spread {spread:.1e}", stats.len()))
}

// 5. LML gradient against central differences; sine recovery.
fn igpr_correctness() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
        let n = 1 + (seed as usize % 4);
        let x: Vec<Vec<f64>> = (0..10).map(|_| (0..n).map(|_| rng.random::<f64>()).collect()).collect();
        let y: Vec<f64> = x.iter().map(|p| (3.0 * p.iter().sum::<f64>()).cos() + 0.1 * rng.random::<f64>()).collect();
        let params = GpParams {
            signal_var: rng.random_range(0.3..3.0),
            length_scales: (0..n).map(|_| rng.random_range(0.2..2.0)).collect(),
            noise_var: rng.random_range(1e-3..1e-1),
        };
        let (_, grad) = lml(&params, &x, &y).map_err(|e| e.to_string())?;
        let theta = params.to_log();
        let h = 1e-5;
        for j in 0..theta.len() {
            let mut up = theta.clone();
            let mut dn = theta.clone();
            up[j] += h;
            dn[j] -= h;
            let fu = lml(&GpParams::from_log(&up), &x, &y).map_err(|e| e.to_string())?.0;
            let fd = lml(&GpParams::from_log(&dn), &x, &y).map_err(|e| e.to_string())?.0;
            let err = (grad[j] - (fu - fd) / (2.0 * h)).abs();
            ensure!(err < 1e-4, "problem {seed}, component {j}: error {err:e}");
            worst = worst.max(err);
        }
    }

    let tau = std::f64::consts::TAU;
    let train: Vec<(UnitVector, f64)> = (0..20)
        .map(|i| {
            let x = i as f64 / 19.0;
            (UnitVector::new(vec![x]).unwrap(), (tau * x).sin())
        })
        .collect();
    let s = fit_igpr(&train, &GpOptions::default()).map_err(|e| e.to_string())?;
    let mut sine_err = 0.0f64;
    for k in 0..19 {
        let x = (k as f64 + 0.5) / 19.0;
        sine_err = sine_err.max((s.predict(&[x]) - (tau * x).sin()).abs());
    }
    ensure!(sine_err < 1e-3, "sine held-out error {sine_err:e}");
    Ok(format!("gradient error {worst:.1e} on 20 problems, sine error {sine_err:.1e}"))
}

fn archive_bytes(a: &RunArchive) -> Vec<u8> {
    let mut out = Vec::new();
    a.landscape.write_csv(&mut out).unwrap();
    a.final_records.write_csv(&mut out).unwrap();
    for k in a.snapshots.keys() {
        out.extend(k.file_name().bytes());
        out.extend(a.snapshots.get(k).unwrap());
    }
    out
}

// 6. Designed per-phase winner is selected; reruns are byte-identical.
fn greedy_invariant() -> Outcome {
    let space = unit_space(2);
    let p = plan(space.clone(), 16, vec![3, 5, 8], vec![100, 200, 300]);
    let configs = p.configs().map_err(|e| e.to_string())?;
    let designed = [5usize, 11, 2];
    // narrow bumps on the designed configs; heights make each phase's winner
    // beat later winners even after they collect their own bump
    let heights = [20.0, 10.0, 3.0];
    let phases = (0..3)
        .map(|i| bump_phase(100 * (i as u64 + 1), configs[designed[i]].0.coords().to_vec(), heights[i], 0.05))
        .collect();
    let tr = surrogate(&space, phases, 0.1);
    let a = run_pipeline(&p, &tr).map_err(|e| e.to_string())?;
    for (i, sel) in a.chosen.iter().enumerate() {
        let phase = sel.phase_index;
        // brute-force oracle over the emitted final records
        let mut best = (f64::NEG_INFINITY, usize::MAX);
        for c in 0..p.num_configs {
            let rets: Vec<f64> = a
                .final_records
                .rows()
                .iter()
                .filter(|r| r.phase_index == phase && r.conf_index == c)
                .map(|r| r.ret)
                .collect();
            let v = iqm(&rets).map_err(|e| e.to_string())?;
            if v > best.0 {
                best = (v, c);
            }
        }
        ensure!(sel.conf_index == best.1, "phase {phase}: chose {} but oracle says {}", sel.conf_index, best.1);
        ensure!(sel.conf_index == designed[i], "phase {phase}: chose {} not designed {}", sel.conf_index, designed[i]);
        let again = select_best(a.final_records.rows(), phase, p.num_configs, &p.seeds).map_err(|e| e.to_string())?;
        ensure!(again == *sel, "phase {phase}: select_best disagrees with the archive");
    }
    let b = run_pipeline(&p, &tr).map_err(|e| e.to_string())?;
    let (ba, bb) = (archive_bytes(&a), archive_bytes(&b));
    ensure!(ba == bb, "rerun differs");
    Ok(format!("selected {:?}, rerun identical ({} bytes)", designed, ba.len()))
}

// 7. A moving bump is located by the IGPR mean surface in every phase.
fn landscape_recovery() -> Outcome {
    let t = Instant::now();
    let space = unit_space(2);
    let centers = [[0.25, 0.3], [0.7, 0.45], [0.45, 0.8]];
    let p = plan(space.clone(), 64, vec![0, 1, 2], vec![100, 200, 300]);
    let phases = centers
        .iter()
        .enumerate()
        .map(|(i, c)| bump_phase(100 * (i as u64 + 1), c.to_vec(), 1.0, 0.15))
        .collect();
    let tr = surrogate(&space, phases, 0.05);
    let a = run_pipeline(&p, &tr).map_err(|e| e.to_string())?;
    let stats: Vec<PerConfigStats> = a
        .landscape
        .phases()
        .into_iter()
        .map(|ph| aggregate(&a.landscape, EvalKind::Landscape, ph))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let (_, affines) = normalize(&stats, NormScope::PooledAllPhases).map_err(|e| e.to_string())?;
    let mut dists = Vec::new();
    for ((st, affine), c) in stats.iter().zip(&affines).zip(&centers) {
        let triple = fit_surface_triple(st, ModelKind::Igpr, &FitOptions::default(), *affine).map_err(|e| e.to_string())?;
        let grid = grid_eval(&triple.mean, &GridSpec::midpoint(2, 0, 1, 51)).map_err(|e| e.to_string())?;
        let (i, j) = grid.argmax();
        let peak = grid.node_point(i, j);
        let d = ((peak[0] - c[0]).powi(2) + (peak[1] - c[1]).powi(2)).sqrt();
        ensure!(d <= 0.1, "phase {}: peak {peak:?} is {d:.3} from {c:?}", st.phase_index);
        dists.push(format!("{d:.3}"));
    }
    within_budget(t, Duration::from_secs(120), "landscape recovery")?;
    Ok(format!("peak distances [{}] ({:.2?})", dists.join(", "), t.elapsed()))
}

// 8. Statistics oracles and modality percentages.
fn statistics_oracles() -> Outcome {
    let one_to_eight: Vec<f64> = (1..=8).map(f64::from).collect();
    let hundred: Vec<f64> = (0..=100).map(f64::from).collect();
    let v = iqm(&one_to_eight).map_err(|e| e.to_string())?;
    let lo = quantile(&hundred, 0.025).map_err(|e| e.to_string())?;
    let hi = quantile(&hundred, 0.975).map_err(|e| e.to_string())?;
    ensure!((v - 4.5).abs() < 1e-12, "IQM {v}");
    ensure!((lo - 2.5).abs() < 1e-12 && (hi - 97.5).abs() < 1e-12, "quantiles {lo}, {hi}");

    let space = unit_space(2);
    let mut p = plan(space.clone(), 32, vec![0, 1, 2, 3], vec![100, 200]);
    p.eval_episodes = 5;
    let spec = SurrogateSpec {
        phases: vec![bump_phase(100, vec![0.5, 0.5], 1.0, 0.3), bump_phase(200, vec![0.2, 0.7], 1.0, 0.3)],
        seed_offset: 4.0,
        noise: 0.3,
        bimodal_region: Some(Region {
            low: vec![0.0, 0.0],
            high: vec![0.5, 0.5],
        }),
        skill_gain: 1.0,
    };
    let tr = SurrogateTrainable::new(space, spec).map_err(|e| e.to_string())?;
    let a = run_pipeline(&p, &tr).map_err(|e| e.to_string())?;
    let summary = modality_summary(&a.landscape, 0.05, 500, 77).map_err(|e| e.to_string())?;
    let mut sums = Vec::new();
    for ph in &summary.table.phases {
        let s = ph.unimodal + ph.multimodal + ph.uncategorized;
        ensure!((s - 100.0).abs() <= 0.01, "phase {} percentages sum to {s}", ph.phase_index);
        sums.push(format!("{s:.2}"));
    }
    Ok(format!("IQM 4.5, quantiles 2.5/97.5, modality sums [{}]", sums.join(", ")))
}

// 9. ILM cross-validation on linear targets; report shape.
fn cv_sanity() -> Outcome {
    let pts = sample_unit_cube(3, 64, Scramble::DigitalShift(3)).unwrap();
    let entries = pts
        .iter()
        .enumerate()
        .map(|(i, u)| {
            let c = u.coords();
            let y = 1.5 * c[0] - 0.5 * c[1] + 2.0 * c[2];
            ConfigStats {
                conf_index: i,
                unit: u.clone(),
                iqm: y,
                q_lower: y - 0.2,
                q_upper: y + 0.3,
                sample_count: 30,
            }
        })
        .collect();
    let stats = PerConfigStats {
        phase_index: 1,
        eval_kind: EvalKind::Landscape,
        entries,
    };
    let report = cross_validate(&stats, &Affine::identity(), ModelKind::Ilm, 5, 11, &FitOptions::default())
        .map_err(|e| e.to_string())?;
    ensure!(report.mse_mean < 1e-12, "ILM CV MSE {:e}", report.mse_mean);
    ensure!(report.fold_mse.len() == 5, "{} folds", report.fold_mse.len());
    let table = format_cv_table(std::slice::from_ref(&report));
    let mut lines = table.lines();
    ensure!(
        lines.next() == Some("Phase | Mean squared error | Mean absolute error"),
        "header: {table}"
    );
    let row = lines.next().unwrap_or_default();
    let cells: Vec<&str> = row.split(" | ").collect();
    ensure!(cells.len() == 3 && cells[0].trim() == "1", "row: {row}");
    for cell in &cells[1..] {
        let parts: Vec<&str> = cell.split(" ± ").collect();
        ensure!(
            parts.len() == 2 && parts.iter().all(|p| p.parse::<f64>().is_ok()),
            "cell `{cell}` is not `mean ± std`"
        );
    }
    Ok(format!("MSE {:.1e}, table row `{row}`", report.mse_mean))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("Sobol correctness", sobol_correctness),
        ("Folding statistic calibration", folding_calibration),
        ("Modality classification power", modality_power),
        ("ILM exactness", ilm_exactness),
        ("IGPR correctness", igpr_correctness),
        ("Pipeline greedy invariant", greedy_invariant),
        ("Landscape recovery", landscape_recovery),
        ("Statistics oracles", statistics_oracles),
        ("Cross-validation sanity", cv_sanity),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {}. {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {}. {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
