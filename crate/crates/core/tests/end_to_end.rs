use landscape_core::analysis::{find_local_optima, ice_curves, modality_summary, write_modality_csv, Category};
use landscape_core::collect::{run_pipeline, Bump, PhasePlan, Region, SurrogatePhase, SurrogateSpec, SurrogateTrainable};
use landscape_core::dataset::{aggregate, normalize, EvalKind, LandscapeDataset, NormScope};
use landscape_core::models::{cross_validate, fit_surface_triple, grid_eval, FitOptions, GridSpec, ModelKind, SurfaceTriple};
use landscape_core::space::SearchSpace;

fn setup(bimodal: bool) -> (PhasePlan, SurrogateTrainable) {
    let space = SearchSpace::preset("dqn").unwrap();
    let plan = PhasePlan {
        space: space.clone(),
        num_configs: 32,
        seeds: vec![0, 1, 2, 3],
        phase_steps: vec![1000, 2000],
        t_final: 2000,
        eval_episodes: 5,
        sampler_seed: 7,
        eval_seed: 70,
    };
    let phase = |end_step, c: [f64; 3]| SurrogatePhase {
        end_step,
        baseline: 1.0,
        bumps: vec![Bump {
            center: c.to_vec(),
            height: 2.0,
            width: 0.3,
        }],
    };
    let spec = SurrogateSpec {
        phases: vec![phase(1000, [0.3, 0.6, 0.5]), phase(2000, [0.7, 0.3, 0.4])],
        seed_offset: if bimodal { 5.0 } else { 0.1 },
        noise: 0.2,
        bimodal_region: bimodal.then(|| Region {
            low: vec![0.0, 0.0, 0.0],
            high: vec![0.5, 0.5, 1.0],
        }),
        skill_gain: 1.0,
    };
    let tr = SurrogateTrainable::new(space, spec).unwrap();
    (plan, tr)
}

#[test]
fn collect_store_reload_and_analyze() {
    let (plan, tr) = setup(false);
    let archive = run_pipeline(&plan, &tr).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("landscape.csv");
    archive.landscape.save(&path).unwrap();
    let ds = LandscapeDataset::load(&path, &plan.space).unwrap();
    assert_eq!(ds.rows(), archive.landscape.rows());

    let stats: Vec<_> = ds
        .phases()
        .into_iter()
        .map(|p| aggregate(&ds, EvalKind::Landscape, p).unwrap())
        .collect();
    assert_eq!(stats.len(), 2);
    let (_, affines) = normalize(&stats, NormScope::PooledAllPhases).unwrap();
    for (st, affine) in stats.iter().zip(&affines) {
        for kind in ModelKind::ALL {
            let triple = fit_surface_triple(st, kind, &FitOptions::default(), *affine).unwrap();
            let reloaded = SurfaceTriple::from_json(&triple.to_json()).unwrap();
            let probe = [0.2, 0.4, 0.9];
            assert_eq!(reloaded.mean.predict(&probe).unwrap(), triple.mean.predict(&probe).unwrap());

            let grid = grid_eval(&triple.mean, &GridSpec::midpoint(3, 0, 1, 21)).unwrap();
            let optima = find_local_optima(&grid).unwrap();
            assert!(!optima.maxima.is_empty());
            let curves = ice_curves(&triple.mean, 2, &st.points(), 11).unwrap();
            assert_eq!(curves.curves.len(), 32);

            let cv = cross_validate(st, affine, kind, 5, 1, &FitOptions::default()).unwrap();
            assert!(cv.mse_mean.is_finite() && cv.mae_mean >= 0.0);
        }
    }
}

#[test]
fn bimodal_region_shows_up_in_modality_table() {
    let (plan, tr) = setup(true);
    let archive = run_pipeline(&plan, &tr).unwrap();
    let inside: Vec<usize> = archive
        .configs
        .iter()
        .enumerate()
        .filter(|(_, u)| u.coords()[0] <= 0.5 && u.coords()[1] <= 0.5)
        .map(|(i, _)| i)
        .collect();
    let summary = modality_summary(&archive.landscape, 0.05, 500, 3).unwrap();
    for phase in &summary.table.phases {
        assert!(phase.multimodal >= 20.0, "phase {}: {}", phase.phase_index, phase.multimodal);
        let total = phase.unimodal + phase.multimodal + phase.uncategorized;
        assert!((total - 100.0).abs() < 1e-9);
    }
    for r in &summary.results {
        let expect_bimodal = inside.contains(&r.conf_index);
        if expect_bimodal {
            assert_eq!(r.outcome.category, Category::Multimodal, "config {}", r.conf_index);
        }
    }

    // percentages recomputed from the CSV by an independent reader
    let mut buf = Vec::new();
    write_modality_csv(&summary.results, &mut buf).unwrap();
    let mut rdr = csv::Reader::from_reader(buf.as_slice());
    let mut counts = std::collections::BTreeMap::<(String, String), usize>::new();
    let mut per_phase = std::collections::BTreeMap::<String, usize>::new();
    for rec in rdr.records() {
        let rec = rec.unwrap();
        *counts.entry((rec[0].to_string(), rec[5].to_string())).or_default() += 1;
        *per_phase.entry(rec[0].to_string()).or_default() += 1;
    }
    for phase in &summary.table.phases {
        let key = phase.phase_index.to_string();
        let n = per_phase[&key] as f64;
        let multi = counts.get(&(key.clone(), "multimodal".into())).copied().unwrap_or(0) as f64;
        assert!((100.0 * multi / n - phase.multimodal).abs() < 1e-9);
    }
}
