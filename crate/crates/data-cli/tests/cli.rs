//! End-to-end behavior of the `flaretk` binary: derived artifacts, exit
//! codes, determinism, and the attribution and hot-source subcommands.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use flaretk_nightfire::planck_radiance;
use tempfile::TempDir;

fn flaretk(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flaretk"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn write(path: impl AsRef<Path>, text: &str) {
    std::fs::write(path, text).unwrap();
}

fn read(path: impl AsRef<Path>) -> String {
    let path = path.as_ref();
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Deterministic synthetic month of inputs: wells with flaring tied to a
/// seasonal pattern, two detections per month near the wells.
fn write_inputs(dir: &Path) -> (PathBuf, PathBuf) {
    let mut viirs = String::from("month,lat,lon,volume_bcm\n");
    let mut ndic = String::from(
        "month,well_id,operator,oilfield,county,lat,lon,oil_bbl,gas_mcf,flared_mcf\n",
    );
    let mut stamp = (2018, 1);
    for m in 0..20 {
        let month = format!("{:04}-{:02}", stamp.0, stamp.1);
        let season = 1.0 + 0.6 * (m as f64 * 0.5).sin();
        // Independent deterministic jitters on the two streams keep the
        // linear fit away from the zero-noise degenerate case.
        let jit_v = 0.85 + 0.3 * ((m * 7919 % 101) as f64 / 101.0);
        let jit_f = 0.9 + 0.2 * ((m * 104_729 % 89) as f64 / 89.0);
        let flared_a = 4.0e6 * season * jit_f;
        let flared_b = 1.5e6 * season * jit_f;
        viirs.push_str(&format!(
            "{month},47.9,-103.1,{}\n{month},47.5,-102.9,{}\n",
            (flared_a + flared_b) * 2.0e-8 * jit_v,
            if m % 7 == 0 { 0.0 } else { flared_b * 2.0e-8 * jit_v }
        ));
        let oil = 5.0e6 + 37_000.0 * m as f64 + 90_000.0 * (m as f64 * 1.3).sin();
        let gas = 9.0e6 + 210_000.0 * (m as f64 * 0.9).cos();
        ndic.push_str(&format!(
            "{month},W-1,ACME,BLUE,MCK,47.9,-103.1,{oil},{gas},{flared_a}\n\
             {month},W-2,BADGER,ANTELOPE,DUN,47.5,-102.9,2.0e6,4.0e6,{flared_b}\n\
             {month},W-3,ACME,BLUE,MCK,47.91,-103.12,1.0e6,1.5e6,0\n"
        ));
        stamp = if stamp.1 == 12 { (stamp.0 + 1, 1) } else { (stamp.0, stamp.1 + 1) };
    }
    let v = dir.join("viirs.csv");
    let n = dir.join("ndic.csv");
    write(&v, &viirs);
    write(&n, &ndic);
    (v, n)
}

#[test]
fn ingest_writes_derived_series_and_report() {
    let tmp = TempDir::new().unwrap();
    write_inputs(tmp.path());
    let out = flaretk(
        &["ingest", "--viirs", "viirs.csv", "--ndic", "ndic.csv", "--out", "out"],
        tmp.path(),
    );
    assert_ok(&out);
    for f in [
        "viirs_monthly.csv",
        "magnitudes.csv",
        "ndic_monthly.csv",
        "county_rollup.csv",
        "oilfield_rollup.csv",
        "state_series.csv",
        "series.csv",
        "monthly_series.csv",
        "run_report.txt",
    ] {
        assert!(tmp.path().join("out").join(f).exists(), "missing {f}");
    }
    let state = read(tmp.path().join("out/state_series.csv"));
    assert!(state.starts_with("month,viirs_bcm,ndic_bcm\n"));
    assert_eq!(state.lines().count(), 21);
    let report = read(tmp.path().join("out/run_report.txt"));
    assert!(report.contains("zero-volume detections excluded from magnitudes: 3"), "{report}");
    assert!(report.contains("months joined: 20"), "{report}");
    // Magnitudes skip the zero detections.
    assert_eq!(read(tmp.path().join("out/magnitudes.csv")).lines().count(), 1 + 40 - 3);
}

#[test]
fn correlate_emits_lower_triangle_and_rejects_bad_mode() {
    let tmp = TempDir::new().unwrap();
    write_inputs(tmp.path());
    assert_ok(&flaretk(
        &["ingest", "--viirs", "viirs.csv", "--ndic", "ndic.csv", "--out", "out"],
        tmp.path(),
    ));
    for mode in ["levels", "lag1"] {
        let out = flaretk(
            &["correlate", "--series", "out/monthly_series.csv", "--mode", mode, "--out", "out"],
            tmp.path(),
        );
        assert_ok(&out);
        let corr = read(tmp.path().join("out/correlations.csv"));
        assert!(corr.starts_with("series_a,series_b,rho\n"));
        // 5 series -> 10 pairs.
        assert_eq!(corr.lines().count(), 11, "{corr}");
        for line in corr.lines().skip(1) {
            let rho: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
            assert!((-1.0..=1.0).contains(&rho));
        }
    }
    let out = flaretk(
        &["correlate", "--series", "out/monthly_series.csv", "--mode", "weekly"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn fit_state_is_byte_identical_under_a_fixed_seed() {
    let tmp = TempDir::new().unwrap();
    write_inputs(tmp.path());
    assert_ok(&flaretk(
        &["ingest", "--viirs", "viirs.csv", "--ndic", "ndic.csv", "--out", "out"],
        tmp.path(),
    ));
    let fit = |out_dir: &str, seed: &str| {
        let out = flaretk(
            &[
                "fit", "state", "--data", "out/state_series.csv", "--seed", seed,
                "--chains", "2", "--warmup", "1000", "--draws", "1000", "--out", out_dir,
            ],
            tmp.path(),
        );
        assert_ok(&out);
        read(tmp.path().join(out_dir).join("trace_state.json"))
    };
    let a = fit("run_a", "42");
    let b = fit("run_b", "42");
    assert_eq!(a, b, "same seed must reproduce the trace bytes");
    let c = fit("run_c", "43");
    assert_ne!(a, c, "different seed must change the trace");
    assert!(tmp.path().join("run_a/summary_state.csv").exists());
    assert!(tmp.path().join("run_a/report_state.txt").exists());
}

#[test]
fn summarize_matches_the_fit_summary() {
    let tmp = TempDir::new().unwrap();
    write_inputs(tmp.path());
    assert_ok(&flaretk(
        &["ingest", "--viirs", "viirs.csv", "--ndic", "ndic.csv", "--out", "out"],
        tmp.path(),
    ));
    assert_ok(&flaretk(
        &[
            "fit", "state", "--data", "out/state_series.csv", "--seed", "7",
            "--chains", "2", "--warmup", "1000", "--draws", "1000", "--out", "out",
        ],
        tmp.path(),
    ));
    assert_ok(&flaretk(
        &["summarize", "--trace", "out/trace_state.json", "--prob", "0.9", "--out", "sum"],
        tmp.path(),
    ));
    let recomputed = read(tmp.path().join("sum/summary.csv"));
    assert_eq!(recomputed, read(tmp.path().join("out/summary_state.csv")));
    assert!(recomputed.starts_with("param,mean,sd,ci_lo,ci_hi,hdi_lo,hdi_hi,rhat,ess\n"));
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let tmp = TempDir::new().unwrap();
    write_inputs(tmp.path());
    assert_ok(&flaretk(
        &["ingest", "--viirs", "viirs.csv", "--ndic", "ndic.csv", "--out", "out"],
        tmp.path(),
    ));
    write(
        tmp.path().join("run.cfg"),
        "# sampler setup\nseed = 42\nchains = 2\nwarmup = 1000\ndraws = 1000\nout = cfg_run\n",
    );
    assert_ok(&flaretk(
        &["fit", "state", "--data", "out/state_series.csv", "--config", "run.cfg"],
        tmp.path(),
    ));
    assert_ok(&flaretk(
        &[
            "fit", "state", "--data", "out/state_series.csv", "--config", "run.cfg",
            "--out", "flag_run",
        ],
        tmp.path(),
    ));
    assert_eq!(
        read(tmp.path().join("cfg_run/trace_state.json")),
        read(tmp.path().join("flag_run/trace_state.json"))
    );
    write(tmp.path().join("bad.cfg"), "mystery = 1\n");
    let out = flaretk(
        &["fit", "state", "--data", "out/state_series.csv", "--config", "bad.cfg"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_invocations_exit_one_with_usage_or_reason() {
    let tmp = TempDir::new().unwrap();
    let out = flaretk(&["frobnicate"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.to_lowercase().contains("usage"), "{err}");

    write(tmp.path().join("s.csv"), "month,viirs_bcm,ndic_bcm\n2019-01,0.1,0.2\n");
    let out = flaretk(&["fit", "mystery", "--data", "s.csv"], tmp.path());
    assert_eq!(out.status.code(), Some(1));

    // Malformed data names the row and column.
    write(tmp.path().join("bad.csv"), "month,lat,lon,volume_bcm\n2019-01,47.0,-103.0,-1\n");
    let out = flaretk(&["ingest", "--viirs", "bad.csv"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("row 2") && err.contains("volume_bcm"), "{err}");
}

#[test]
fn attribute_applies_the_distance_gates() {
    let tmp = TempDir::new().unwrap();
    // One well; detections straight north at controlled distances.
    let meters_per_deg = 6_371_000.0 * std::f64::consts::PI / 180.0;
    let (wlat, wlon) = (48.0, -103.0);
    let mut viirs = String::from("month,lat,lon,volume_bcm\n");
    for d in [100.0, 500.0, 780.0, 900.0] {
        viirs.push_str(&format!("2019-01,{},{wlon},0.001\n", wlat + d / meters_per_deg));
    }
    write(tmp.path().join("viirs.csv"), &viirs);
    write(
        tmp.path().join("ndic.csv"),
        &format!(
            "month,well_id,operator,oilfield,county,lat,lon,oil_bbl,gas_mcf,flared_mcf\n\
             2019-01,W-1,ACME,BLUE,MCK,{wlat},{wlon},100,100,10\n"
        ),
    );
    // Section square reaching ~667 m north of the well: contains the 500 m
    // detection but not the 780 m one.
    let north = wlat + 667.0 / meters_per_deg;
    write(
        tmp.path().join("sections.geojson"),
        &format!(
            r#"{{"type":"FeatureCollection","features":[{{"type":"Feature","id":"sec-1",
                "properties":{{"kind":"trs-section"}},
                "geometry":{{"type":"Polygon","coordinates":[[
                    [-103.1,47.99],[-102.9,47.99],[-102.9,{north}],[-103.1,{north}],[-103.1,47.99]
                ]]}}}}]}}"#
        ),
    );
    let out = flaretk(
        &[
            "attribute", "--detections", "viirs.csv", "--wells", "ndic.csv",
            "--sections", "sections.geojson", "--out", "out",
        ],
        tmp.path(),
    );
    assert_ok(&out);
    let got = read(tmp.path().join("out/attribution.csv"));
    let decisions: Vec<&str> = got
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap())
        .collect();
    assert_eq!(
        decisions,
        vec!["kept_secure", "kept_section_match", "dropped_section_mismatch", "dropped_far"],
        "{got}"
    );
    // Distances are within a meter of the construction.
    for (line, want) in got.lines().skip(1).zip([100.0, 500.0, 780.0, 900.0]) {
        let d: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert!((d - want).abs() < 1.0, "{line}");
    }
    assert!(got.lines().skip(1).take(2).all(|l| l.contains("ACME")), "{got}");
}

#[test]
fn nightfire_recovers_the_synthetic_graybody() {
    let tmp = TempDir::new().unwrap();
    let wavelengths = [1.6e-6, 2.25e-6];
    let (t_true, eps_true) = (1800.0, 0.01);
    for (i, wl) in wavelengths.iter().enumerate() {
        let mut grid = String::new();
        for r in 0..16 {
            let row: Vec<String> = (0..16)
                .map(|c| {
                    if (r, c) == (5, 5) {
                        format!("{}", eps_true * planck_radiance(*wl, t_true))
                    } else {
                        "0.0".to_string()
                    }
                })
                .collect();
            grid.push_str(&(row.join(",") + "\n"));
        }
        write(tmp.path().join(format!("band{i}.csv")), &grid);
        write(
            tmp.path().join(format!("band{i}.json")),
            &format!(
                r#"{{"band":"B{i}","wavelength_m":{wl},"pixel_area_m2":140625.0,
                    "geotransform":[-103.5,0.005,0.0,48.5,0.0,-0.005]}}"#
            ),
        );
    }
    let out = flaretk(
        &[
            "nightfire", "--band", "band0.csv,band0.json", "--band", "band1.csv,band1.json",
            "--out", "out",
        ],
        tmp.path(),
    );
    assert_ok(&out);
    let got = read(tmp.path().join("out/nightfire_detections.csv"));
    assert!(got.starts_with("lat,lon,T_k,epsilon,S_m2,RH_mw\n"));
    let rows: Vec<&str> = got.lines().skip(1).collect();
    assert_eq!(rows.len(), 1, "{got}");
    let fields: Vec<f64> = rows[0].split(',').map(|v| v.parse().unwrap()).collect();
    assert!((fields[2] - t_true).abs() < 1.0, "T {}", fields[2]);
    assert!((fields[3] - eps_true).abs() < 1e-4, "eps {}", fields[3]);
}

#[test]
fn geocode_labels_points_with_containing_layers() {
    let tmp = TempDir::new().unwrap();
    write_inputs(tmp.path());
    // One county box around the northern well only.
    write(
        tmp.path().join("layers.geojson"),
        r#"{"type":"FeatureCollection","features":[{"type":"Feature","id":"MCK",
            "properties":{"kind":"county"},
            "geometry":{"type":"Polygon","coordinates":[[
                [-103.3,47.7],[-102.95,47.7],[-102.95,48.1],[-103.3,48.1],[-103.3,47.7]
            ]]}}]}"#,
    );
    let out = flaretk(
        &[
            "geocode", "--viirs", "viirs.csv", "--ndic", "ndic.csv",
            "--layers", "layers.geojson", "--out", "out",
        ],
        tmp.path(),
    );
    assert_ok(&out);
    let dets = read(tmp.path().join("out/geocoded_detections.csv"));
    assert!(dets.starts_with("month,lat,lon,county,oilfield,section\n"));
    let first = dets.lines().nth(1).unwrap();
    assert!(first.ends_with("MCK,,"), "{first}");
    let second = dets.lines().nth(2).unwrap();
    assert!(second.ends_with(",,"), "{second}");
    let wells = read(tmp.path().join("out/geocoded_wells.csv"));
    assert!(wells.lines().count() == 61, "{}", wells.lines().count());
}
