use discset::cloud::read_ply;
use discset::pipeline::{analyse, write_outputs, PipelineConfig, RunReport, REPORT_SCHEMA};
use discset::synthetic::{generate_plane_fan, FanCase};

fn fan_config(out: &std::path::Path) -> PipelineConfig {
    let mut cfg = PipelineConfig::new("<memory>", out);
    cfg.cluster.min_cluster_size = 400;
    cfg.cluster.min_samples = 15;
    cfg.planes.eps_factor = 4.0;
    cfg.planes.min_pts = 8;
    cfg.output.csv = true;
    cfg.output.condensed_tree = true;
    cfg.no_timing = true;
    cfg
}

fn schema() -> jsonschema::JSONSchema {
    let schema: serde_json::Value = serde_json::from_str(REPORT_SCHEMA).unwrap();
    jsonschema::JSONSchema::compile(&schema).expect("schema compiles")
}

#[test]
fn fan_run_writes_consistent_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fan_config(dir.path());
    let (cloud, truth) = generate_plane_fan(FanCase::FixedDip45, 2500, 2.0, 4);
    let n = cloud.len();
    let out = analyse(cloud, &cfg).unwrap();
    let report = &out.report;

    assert_eq!(report.accounting.total(), n);
    assert_eq!(report.sets.len(), truth.n_sets());
    for s in &report.sets {
        let best = truth
            .set_orientations()
            .iter()
            .map(|o| o.angle_to(&s_orientation(s)))
            .fold(f64::INFINITY, f64::min);
        assert!(best < 0.5, "set {} is {best} deg off", s.id);
    }

    let written = write_outputs(&out, &cfg).unwrap();
    for name in ["report.json", "labeled.ply", "stereonet.svg", "poles.csv", "planes.csv", "condensed_tree.json"] {
        assert!(written.iter().any(|p| p.ends_with(name)), "{name} missing");
    }

    let text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    let compiled = schema();
    if let Err(errors) = compiled.validate(&value) {
        let msgs: Vec<String> = errors.map(|e| e.to_string()).collect();
        panic!("report does not match schema: {msgs:?}");
    }
    assert_eq!(&RunReport::from_json(&text).unwrap(), report);

    let svg = std::fs::read_to_string(dir.path().join("stereonet.svg")).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let legend = doc
        .descendants()
        .filter(|e| e.attribute("class") == Some("legend-entry"))
        .count();
    assert_eq!(legend, report.sets.len());

    let labeled = read_ply(dir.path().join("labeled.ply")).unwrap();
    assert_eq!(labeled.len(), n);
    let plane_id = labeled.attribute("plane_id").unwrap();
    for p in &report.planes {
        let count = plane_id.iter().filter(|&&x| x as usize == p.id && x >= 0.0).count();
        assert_eq!(count, p.point_count);
    }
    let members = labeled.attribute("set_id").unwrap().iter().filter(|&&x| x >= 0.0).count();
    assert_eq!(members, report.accounting.plane_member);
}

fn s_orientation(s: &discset::pipeline::SetSummary) -> discset::orientation::Orientation {
    discset::orientation::Orientation {
        dip: s.mean_dip,
        dip_direction: s.mean_dipdir,
    }
}

#[test]
fn schema_rejects_missing_and_unknown_keys() {
    let compiled = schema();
    let good: serde_json::Value = serde_json::json!({
        "input": {"count": 3, "ps": 0.02, "radius": 0.09},
        "filter": {"retained": 3, "removed": 0},
        "sets": [],
        "planes": [],
        "accounting": {"filtered_out": 0, "degenerate": 0, "cluster_noise": 3, "plane_noise": 0, "plane_member": 0},
        "timings_ms": {}
    });
    assert!(compiled.is_valid(&good));
    let mut missing = good.clone();
    missing.as_object_mut().unwrap().remove("sets");
    assert!(!compiled.is_valid(&missing));
    let mut extra = good;
    extra["bogus"] = serde_json::json!(1);
    assert!(!compiled.is_valid(&extra));
}

#[test]
fn too_few_poles_gives_empty_sets_not_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig::new("<memory>", dir.path());
    let (cloud, _) = generate_plane_fan(FanCase::FixedDd90, 60, 1.0, 0);
    let n = cloud.len();
    let out = analyse(cloud, &cfg).unwrap();
    assert!(out.report.sets.is_empty());
    assert_eq!(out.report.accounting.total(), n);
}
