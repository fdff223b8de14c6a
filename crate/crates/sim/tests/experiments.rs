use std::fs;
use std::path::Path;

use kyle_sim::ensemble::thread_pool;
use kyle_sim::experiments::{builtin, run_experiment, CellStatus, ExperimentSpec};
use kyle_sim::io::Table;

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.is_dir() {
            out.extend(files(&p));
        } else if p.file_name().unwrap() != "manifest.json" {
            out.push((p.display().to_string(), fs::read(&p).unwrap()));
        }
    }
    out.sort();
    out
}

#[test]
fn empty_grid_is_one_cell_with_the_base_config() {
    let dir = tempfile::tempdir().unwrap();
    let pool = thread_pool(Some(2)).unwrap();
    let spec = ExperimentSpec::parse("name=base\ntau_rev=50\nrevisions=40\nn_paths=3").unwrap();
    let m = run_experiment(&spec, dir.path(), &pool).unwrap();
    assert_eq!(m.cells.len(), 1);
    assert!(m.cells[0].params.is_empty());
    assert_eq!(m.cells[0].status, CellStatus::Ok);
    let series = Table::read(&dir.path().join("base/cell-000/series.csv")).unwrap();
    assert_eq!(series.column_by_path("sigma_bar").unwrap().len(), 3);
    assert_eq!(series.rows.len(), 3 * 40);
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let text = "name=rerun\nkind=simulation\nn_paths=3\nrevisions=30\nnoise_var_fluct=0.1\ngrid.tau_rev=20,40\n\
                grid.noise_var_belief=0.6,1\noutputs=series,summary,acf,cdf,traces\nacf_max_lag=5";
    let spec = ExperimentSpec::parse(text).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_experiment(&spec, a.path(), &thread_pool(Some(1)).unwrap()).unwrap();
    run_experiment(&spec, b.path(), &thread_pool(Some(3)).unwrap()).unwrap();
    let (fa, fb) = (files(a.path()), files(b.path()));
    assert!(fa.len() >= 4 * 5);
    assert_eq!(fa.len(), fb.len());
    for ((pa, ca), (pb, cb)) in fa.iter().zip(&fb) {
        assert_eq!(
            pa.strip_prefix(&a.path().display().to_string()),
            pb.strip_prefix(&b.path().display().to_string())
        );
        assert!(ca == cb, "{pa} differs");
    }
}

#[test]
fn manifest_lists_every_cell_once() {
    let dir = tempfile::tempdir().unwrap();
    let pool = thread_pool(Some(2)).unwrap();
    let spec =
        ExperimentSpec::parse("name=m\nkind=kesten\nrevisions=200\nburn_in=5\ngrid.r=0,1\ngrid.eps2_ratio=1,1.5,3")
            .unwrap();
    let m = run_experiment(&spec, dir.path(), &pool).unwrap();
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("m/manifest.json")).unwrap()).unwrap();
    let cells = json["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 6);
    for (i, c) in cells.iter().enumerate() {
        assert_eq!(c["index"], i);
        assert!(["ok", "diverged", "failed"].contains(&c["status"].as_str().unwrap()));
        assert_eq!(c["config_hash"].as_str().unwrap().len(), 64);
        assert!(c["seed"].as_str().unwrap().parse::<u64>().is_ok());
    }
    // ε²/ε̂² = 3 is beyond the critical belief for every r.
    assert_eq!(m.diverged_cells(), 2);
    let overview = fs::read_to_string(dir.path().join("m/summary.csv")).unwrap();
    assert_eq!(overview.lines().count(), 7);
    assert!(overview.starts_with("cell,r,eps2_ratio,status,"));
}

#[test]
fn fig3_top_sharpens_with_revision_interval() {
    let dir = tempfile::tempdir().unwrap();
    let pool = thread_pool(None).unwrap();
    let spec = builtin("fig3_top").unwrap();
    let m = run_experiment(&spec, dir.path(), &pool).unwrap();
    assert!(m.within_budget());
    let spread: Vec<f64> = m
        .cells
        .iter()
        .map(|c| {
            let series = Table::read(&dir.path().join("fig3_top").join(&c.id).join("series.csv")).unwrap();
            let x: Vec<f64> = series
                .column_by_path("sigma_bar")
                .unwrap()
                .iter()
                .flat_map(|p| p.iter().skip(10).map(|s| s * s).collect::<Vec<_>>())
                .collect();
            let mean = x.iter().sum::<f64>() / x.len() as f64;
            assert!((mean - 0.5).abs() < 0.05 * 0.5, "{}: mean {mean}", c.id);
            (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / x.len() as f64).sqrt()
        })
        .collect();
    assert!(spread[0] > spread[1] && spread[1] > spread[2], "{spread:?}");
}

#[test]
fn heatmaps_are_monotone() {
    let pool = thread_pool(None).unwrap();
    for name in ["fig4_heatmap", "fig7_heatmap"] {
        let dir = tempfile::tempdir().unwrap();
        let m = run_experiment(&builtin(name).unwrap(), dir.path(), &pool).unwrap();
        assert!(m.within_budget(), "{name}: {} s", m.runtime_secs);
        // Cells are r-major; diverged cells count as infinite.
        let value = |i: usize| match m.cells[i].status {
            CellStatus::Ok => m.cells[i].mean_excess_variance().unwrap(),
            _ => f64::INFINITY,
        };
        let se = |i: usize| m.cells[i].analysis.as_ref().map_or(0.0, |a| a.excess.se);
        // Non-decreasing up to three combined standard errors.
        let ok = |i: usize, j: usize| {
            let (a, b) = (value(i), value(j));
            b >= a || (a.is_finite() && a - b <= 3.0 * se(i).hypot(se(j)))
        };
        for r in 0..8 {
            for e in 0..8 {
                let i = 8 * r + e;
                if e + 1 < 8 {
                    assert!(ok(i, i + 1), "{name} r{r} e{e}");
                }
                if r + 1 < 8 {
                    assert!(ok(i, i + 8), "{name} r{r} e{e}");
                }
            }
        }
    }
}

#[test]
fn every_builtin_runs_within_budget() {
    let pool = thread_pool(None).unwrap();
    for name in [
        "fig3_bottom",
        "fig5_pdf_acf",
        "fig6_cdf",
        "fig6_cdf_kesten",
        "fig8_liquidity",
        "flash_crash",
    ] {
        let dir = tempfile::tempdir().unwrap();
        let spec = builtin(name).unwrap();
        let m = run_experiment(&spec, dir.path(), &pool).unwrap();
        assert!(m.within_budget(), "{name}: {} s", m.runtime_secs);
        assert!(
            m.cells.iter().all(|c| !matches!(c.status, CellStatus::Failed(_))),
            "{name}"
        );
        for c in &m.cells {
            for f in &c.files {
                assert!(dir.path().join(name).join(&c.id).join(f).exists());
            }
        }
    }
}

#[test]
fn fig8_traces_show_cost_averse_liquidity() {
    let dir = tempfile::tempdir().unwrap();
    let pool = thread_pool(None).unwrap();
    run_experiment(&builtin("fig8_liquidity").unwrap(), dir.path(), &pool).unwrap();
    let lambda = |cell: &str| {
        let t = Table::read(&dir.path().join("fig8_liquidity").join(cell).join("rounds.csv")).unwrap();
        let l = t.column("lambda").unwrap();
        l.iter().sum::<f64>() / l.len() as f64
    };
    // A cost-averse noise trader who is known to be so makes the market
    // maker quote a larger impact.
    assert!(lambda("cell-001") > lambda("cell-000"));
}
