use std::collections::BTreeMap;

use landscape_core::analysis::{
    find_local_optima, ice_curves, modality_summary, write_modality_csv, write_optima_csv, Category,
};
use landscape_core::dataset::{aggregate, normalize, Band, EvalKind, NormScope, PerConfigStats};
use landscape_core::models::{
    cross_validate, fit_surface_triple, format_cv_table, grid_eval, CvReport, FitOptions, GpOptions, GridSpec,
    SurfaceTriple,
};
use landscape_core::plot::{heatmap_svg, ice_svg, modality_svg};
use serde_json::json;

use crate::bundle::BundleWriter;
use crate::collect::{load_data, pretty};
use crate::{AnalyzeArgs, CliResult, Failure};

pub const SUMMARY_FILE: &str = "summary.json";

fn check(args: &AnalyzeArgs) -> CliResult {
    let bad = |m: &str| Err(Failure::Validation(m.to_string()));
    if args.grid_resolution < 3 {
        return bad("--grid-resolution must be at least 3");
    }
    if args.ice_resolution < 2 {
        return bad("--ice-resolution must be at least 2");
    }
    if args.cv_folds < 2 {
        return bad("--cv-folds must be at least 2");
    }
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return bad("--alpha must lie in (0, 1)");
    }
    if args.null_draws < 100 {
        return bad("--null-draws must be at least 100");
    }
    Ok(())
}

pub fn run(args: &AnalyzeArgs) -> CliResult {
    check(args)?;
    let (space, landscape, _) = load_data(&args.data)?;
    let names: Vec<String> = space.names().map(str::to_string).collect();
    let n = space.n();
    let phases = landscape.phases();
    if phases.is_empty() {
        return Err(Failure::Validation(format!("{}: no landscape records", args.data.display())));
    }
    let stats: Vec<PerConfigStats> = phases
        .iter()
        .map(|&p| aggregate(&landscape, EvalKind::Landscape, p))
        .collect::<Result<_, _>>()
        .map_err(Failure::validation)?;
    let scope = NormScope::from(args.normalization);
    let (_, affines) = normalize(&stats, scope).map_err(Failure::runtime)?;
    let opts = FitOptions {
        gp: GpOptions {
            restarts: args.gp_restarts,
            opt_seed: args.seed,
            ..GpOptions::default()
        },
    };

    let mut out = BundleWriter::new(&args.out)?;
    let mut cv: BTreeMap<&str, Vec<CvReport>> = BTreeMap::new();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|x| (x + 1..n).map(move |y| (x, y))).collect();

    for kind in args.model.kinds() {
        let kname = kind.name();
        for (st, affine) in stats.iter().zip(&affines) {
            let p = st.phase_index;
            let triple = fit_surface_triple(st, kind, &opts, *affine)
                .map_err(|e| Failure::Runtime(format!("phase {p}, {kname}: {e}")))?;
            out.write(&format!("models/phase{p}_{kname}.json"), triple.to_json().as_bytes())?;

            let report = cross_validate(st, affine, kind, args.cv_folds, args.seed, &opts)
                .map_err(|e| Failure::Runtime(format!("phase {p}, {kname} cross-validation: {e}")))?;
            cv.entry(kname).or_default().push(report);

            write_ice(&mut out, args, st, &triple, &names, kname)?;
            write_optima(&mut out, args, &triple, &pairs, &names, p, kname)?;
        }
        let table = format_cv_table(&cv[kname]);
        out.write(&format!("cv_{kname}.txt"), table.as_bytes())?;
        println!("{kname} cross-validation\n{table}");
    }

    let modality = modality_summary(&landscape, args.alpha, args.null_draws, args.seed).map_err(Failure::runtime)?;
    let mut buf = Vec::new();
    write_modality_csv(&modality.results, &mut buf).map_err(Failure::runtime)?;
    out.write("modality.csv", &buf)?;
    println!("modality\n{}", modality.table);
    if args.svg && n >= 2 {
        for st in &stats {
            let p = st.phase_index;
            let units: BTreeMap<usize, &[f64]> = st.entries.iter().map(|e| (e.conf_index, e.unit.coords())).collect();
            let points: Vec<(f64, f64, Category)> = modality
                .results
                .iter()
                .filter(|r| r.phase_index == p)
                .map(|r| {
                    let u = units[&r.conf_index];
                    (u[0], u[1], r.outcome.category)
                })
                .collect();
            let svg = modality_svg(&points, &format!("phase {p} modality"), &names[0], &names[1]);
            out.write(&format!("svg/phase{p}_modality.svg"), svg.as_bytes())?;
        }
    }

    let best: Vec<_> = stats
        .iter()
        .filter_map(|st| st.best().map(|b| json!({ "phase_index": st.phase_index, "conf_index": b.conf_index, "iqm": b.iqm })))
        .collect();
    let summary = json!({
        "hyperparameters": names,
        "phases": phases,
        "models": args.model.kinds().iter().map(|k| k.name()).collect::<Vec<_>>(),
        "normalization": { "scope": format!("{scope:?}"), "affines": affines },
        "options": {
            "grid_resolution": args.grid_resolution,
            "ice_resolution": args.ice_resolution,
            "cv_folds": args.cv_folds,
            "alpha": args.alpha,
            "null_draws": args.null_draws,
            "seed": args.seed,
            "gp_restarts": args.gp_restarts,
        },
        "best_landscape_configs": best,
        "cross_validation": cv,
        "modality_table": modality.table,
        "files": out.files,
    });
    out.write(SUMMARY_FILE, pretty(&summary).as_bytes())?;
    println!("wrote {} files to {}", out.files.len(), args.out.display());
    Ok(())
}

fn write_ice(
    out: &mut BundleWriter,
    args: &AnalyzeArgs,
    st: &PerConfigStats,
    triple: &SurfaceTriple,
    names: &[String],
    kname: &str,
) -> CliResult {
    let p = st.phase_index;
    let anchors = st.points();
    for (d, name) in names.iter().enumerate() {
        let set = ice_curves(&triple.mean, d, &anchors, args.ice_resolution).map_err(Failure::runtime)?;
        let mut buf = Vec::new();
        set.write_csv(&mut buf).map_err(Failure::runtime)?;
        out.write(&format!("ice/phase{p}_{kname}_{name}.csv"), &buf)?;
        if args.svg {
            let svg = ice_svg(&set, &format!("phase {p} {kname} ICE"), name);
            out.write(&format!("svg/phase{p}_{kname}_ice_{name}.svg"), svg.as_bytes())?;
        }
    }
    Ok(())
}

fn write_optima(
    out: &mut BundleWriter,
    args: &AnalyzeArgs,
    triple: &SurfaceTriple,
    pairs: &[(usize, usize)],
    names: &[String],
    p: usize,
    kname: &str,
) -> CliResult {
    let n = names.len();
    let mut slices = Vec::new();
    for band in Band::ALL {
        for &(x, y) in pairs {
            let spec = GridSpec::midpoint(n, x, y, args.grid_resolution);
            let grid = grid_eval(triple.band(band), &spec).map_err(Failure::runtime)?;
            let optima = find_local_optima(&grid).map_err(Failure::runtime)?;
            if args.svg {
                let title = format!("phase {p} {kname} {}", band.name());
                let svg = heatmap_svg(&grid, &optima, &title, &names[x], &names[y]);
                out.write(
                    &format!("svg/phase{p}_{kname}_{}_{}_{}.svg", band.name(), names[x], names[y]),
                    svg.as_bytes(),
                )?;
            }
            slices.push((band.name(), grid, optima));
        }
    }
    let refs: Vec<_> = slices.iter().map(|(b, g, o)| (*b, g, o)).collect();
    let mut buf = Vec::new();
    write_optima_csv(&refs, &mut buf).map_err(Failure::runtime)?;
    out.write(&format!("optima/phase{p}_{kname}.csv"), &buf)
}
