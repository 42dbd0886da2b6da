use std::path::Path;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use qgeo::capacity::{capacity_of_points, CapacityResult};
use qgeo::channels::{depolarizing, gamma5, identity, KrausChannel};
use qgeo::mesh::{dist_points, MeshSpec, PointSet};
use qgeo::metrics::MetricKind;
use qgeo::seb::{SebConfig, Subsolver};
use qgeo::states::random::{random_bloch_on_sphere, random_faithful, random_pure};
use qgeo::states::DensityMatrix;
use qgeo::voronoi::{
    bisector_field, coincidence_report, coinciding_scale, example3_sites, section_coincidence_report, CoincidenceReport,
    FieldGrid, FieldMetric, SectionPoint,
};

use crate::error::{CliError, CliResult};
use crate::manifest::Recorder;
use crate::{effective_seed, BisectorArgs, Builtin, CapacityArgs, CoincideArgs, Expect, MeshArgs, SampleKind, SubsolverArg};

/// Point count the reference run reports at `d = 3`, spacing 0.1.
const REFERENCE_COUNT_D3_01: usize = 49486;

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("result types serialize") + "\n"
}

pub fn mesh(a: MeshArgs) -> CliResult<()> {
    let spec = MeshSpec::new(a.dim, a.delta, a.rule.into()).map_err(|e| CliError::Args(e.to_string()))?;
    let mut rec = Recorder::new(None);
    let points = dist_points(&spec).map_err(CliError::Generation)?;
    if a.dim == 3 && (a.delta - 0.1).abs() < 1e-12 {
        rec.notes.insert("reference_count".into(), REFERENCE_COUNT_D3_01.into());
        rec.notes.insert("count_difference".into(), (points.len() as i64 - REFERENCE_COUNT_D3_01 as i64).into());
    }
    rec.notes.insert("rule".into(), spec.rule.to_string().into());
    rec.write_output(&a.out, &(serde_json::to_string(&points).expect("point sets serialize") + "\n"))?;
    rec.finish(&a.out)?;
    println!("{}", points.len());
    Ok(())
}

fn load_channel(rec: &mut Recorder, path: &Path) -> CliResult<KrausChannel> {
    let text = rec.read_input(path)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Args(format!("{} is not JSON: {e}", path.display())))?;
    serde_json::from_value(value).map_err(|e| CliError::Channel(e.to_string()))
}

pub fn capacity(a: CapacityArgs) -> CliResult<()> {
    let seed = effective_seed(a.seed)?;
    let mut rec = Recorder::new(Some(seed));
    let ch = match (&a.channel, a.builtin) {
        (Some(p), _) => load_channel(&mut rec, p)?,
        (None, Some(Builtin::Gamma5)) => gamma5(),
        (None, Some(Builtin::Identity)) => identity(a.dim),
        (None, Some(Builtin::Depolarizing)) => depolarizing(a.dim),
        (None, None) => return Err(CliError::Args("give --channel or --builtin".into())),
    };
    if a.threads == 0 {
        return Err(CliError::Args("--threads must be at least 1".into()));
    }
    let spec = MeshSpec::new(ch.dim(), a.delta, a.rule.into()).map_err(|e| CliError::Args(e.to_string()))?;
    let cfg = SebConfig {
        subsolver: match a.subsolver {
            SubsolverArg::Reduced => Subsolver::Reduced,
            SubsolverArg::Penalty => Subsolver::Penalty,
        },
        ..SebConfig::default()
    }
    .with_seed(seed);
    let points = dist_points(&spec).map_err(CliError::Generation)?;
    let mut res: CapacityResult = capacity_of_points(&ch, &points, &cfg, a.threads).map_err(|e| {
        eprintln!("solver failed on {} mesh points", points.len());
        CliError::Solver(e)
    })?;
    res.mesh = Some(spec);
    rec.notes.insert("capacity_wall_time_s".into(), res.stats.wall_time_s.into());
    rec.notes.insert("subsolver_failures".into(), res.stats.seb.subsolver_failures.into());
    rec.write_output(&a.out, &to_json(&res))?;
    rec.finish(&a.out)?;
    let v = if a.bits { res.capacity_bits } else { res.capacity_nats };
    println!("{v:.7}");
    Ok(())
}

fn parse_scale(s: &str, d: usize) -> CliResult<f64> {
    if s == "auto" {
        return Ok(coinciding_scale(d));
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err(CliError::Args(format!("--scale must be a positive number or \"auto\", got {s:?}"))),
    }
}

#[derive(Debug, Serialize)]
struct ReportSummary<'a> {
    metrics: &'a [String],
    site_pairs: usize,
    samples: usize,
    comparisons: usize,
    disagreements: usize,
    max_abs_gap: f64,
    floor: f64,
    scale: Option<f64>,
    expect: Option<&'static str>,
}

fn section_sites(a: &CoincideArgs, rng: &mut ChaCha8Rng) -> CliResult<Vec<SectionPoint>> {
    if a.example3 {
        return example3_sites(a.dim).map_err(|e| CliError::Args(e.to_string()));
    }
    (0..a.sites)
        .map(|_| SectionPoint::from_sphere(a.dim, random_bloch_on_sphere(rng).to_array()).map_err(CliError::Generation))
        .collect()
}

fn section_report(a: &CoincideArgs, scale: f64, rng: &mut ChaCha8Rng) -> CliResult<CoincidenceReport> {
    if a.dim < 3 {
        return Err(CliError::Args(format!("--section needs --dim >= 3, got {}", a.dim)));
    }
    for m in &a.metrics {
        if !matches!(m.as_str(), "divergence" | "divergence-section" | "euclid" | "euclid-section") {
            return Err(CliError::Args(format!("metric {m:?} is not available on the section")));
        }
    }
    let sites = section_sites(a, rng)?;
    let samples = match a.grid {
        Some(r) => FieldGrid::new(a.dim, r).points().map_err(|e| CliError::Args(e.to_string()))?,
        None => (0..a.samples)
            .map(|_| SectionPoint::from_sphere(a.dim, random_bloch_on_sphere(rng).to_array()).map_err(CliError::Generation))
            .collect::<CliResult<_>>()?,
    };
    section_coincidence_report(a.dim, &sites, &samples, scale, a.floor).map_err(CliError::Solver)
}

fn state_report(a: &CoincideArgs, rng: &mut ChaCha8Rng) -> CliResult<CoincidenceReport> {
    let names: Vec<String> = if a.metrics.is_empty() {
        ["euclid", "bures", "divergence"].map(String::from).to_vec()
    } else {
        a.metrics.clone()
    };
    let mut kinds = Vec::new();
    for n in &names {
        match n.parse::<FieldMetric>() {
            Ok(FieldMetric::State(k)) => kinds.push(k),
            _ => return Err(CliError::Args(format!("unknown metric {n:?}"))),
        }
    }
    for k in &kinds {
        if a.sample_kind == SampleKind::Faithful && k.pure_only() {
            return Err(CliError::Args(format!("metric {k} needs pure samples")));
        }
        if *k == MetricKind::GeodesicSphere && a.dim != 2 {
            return Err(CliError::Args("the geodesic metric is defined for --dim 2 only".into()));
        }
    }
    if a.dim < 2 {
        return Err(CliError::Args("--dim must be at least 2".into()));
    }
    let sites: Vec<DensityMatrix> = (0..a.sites).map(|_| random_pure(a.dim, rng)).collect();
    let samples: Vec<DensityMatrix> = (0..a.samples)
        .map(|_| match a.sample_kind {
            SampleKind::Pure => random_pure(a.dim, rng),
            SampleKind::Faithful => random_faithful(a.dim, rng),
        })
        .collect();
    coincidence_report(&kinds, &sites, &samples, a.floor).map_err(CliError::Solver)
}

pub fn coincide(a: CoincideArgs) -> CliResult<()> {
    let seed = effective_seed(a.seed)?;
    if a.sites < 2 && !a.example3 {
        return Err(CliError::Args("--sites must be at least 2".into()));
    }
    if a.samples == 0 || !(a.floor >= 0.0) {
        return Err(CliError::Args("--samples must be positive and --floor non-negative".into()));
    }
    let mut rec = Recorder::new(Some(seed));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (report, scale) = if a.section {
        let scale = parse_scale(&a.scale, a.dim)?;
        (section_report(&a, scale, &mut rng)?, Some(scale))
    } else {
        (state_report(&a, &mut rng)?, None)
    };
    let summary = ReportSummary {
        metrics: &report.metrics,
        site_pairs: report.site_pairs,
        samples: report.samples,
        comparisons: report.comparisons,
        disagreements: report.disagreements,
        max_abs_gap: report.max_abs_gap,
        floor: report.floor,
        scale,
        expect: a.expect.map(|e| match e {
            Expect::Coincide => "coincide",
            Expect::Differ => "differ",
        }),
    };
    rec.write_output(&a.out, &report.witnesses_csv())?;
    let mut summary_path = a.out.as_os_str().to_owned();
    summary_path.push(".report.json");
    rec.write_output(Path::new(&summary_path), &to_json(&summary))?;
    rec.finish(&a.out)?;
    println!("{}", report.disagreements);
    match a.expect {
        Some(Expect::Coincide) if !report.coincide() => {
            Err(CliError::Expectation(format!("{} sign disagreements where none were expected", report.disagreements)))
        }
        Some(Expect::Differ) if report.coincide() => {
            Err(CliError::Expectation("no sign disagreement found where the diagrams should differ".into()))
        }
        _ => Ok(()),
    }
}

#[derive(Debug, Deserialize)]
struct SiteJson {
    xi1: f64,
    xid: f64,
    xid1: f64,
}

#[derive(Debug, Deserialize)]
struct SitesFile {
    dim: usize,
    sites: Vec<SiteJson>,
}

/// Reads either a section sites file or a point set whose states lie in the section.
fn parse_sites(text: &str) -> CliResult<Vec<SectionPoint>> {
    if let Ok(f) = serde_json::from_str::<SitesFile>(text) {
        return f
            .sites
            .iter()
            .map(|s| SectionPoint::new(f.dim, s.xi1, s.xid, s.xid1).map_err(|e| CliError::Args(e.to_string())))
            .collect();
    }
    let ps: PointSet = serde_json::from_str(text).map_err(|e| CliError::Args(format!("unreadable sites file: {e}")))?;
    ps.points().iter().map(|p| SectionPoint::from_density(p).map_err(|e| CliError::Args(e.to_string()))).collect()
}

pub fn bisector(a: BisectorArgs) -> CliResult<()> {
    let mut rec = Recorder::new(None);
    let sites = match (&a.sites, a.example3) {
        (Some(p), _) => parse_sites(&rec.read_input(p)?)?,
        (None, Some(d)) => example3_sites(d).map_err(|e| CliError::Args(e.to_string()))?,
        (None, None) => return Err(CliError::Args("give --sites or --example3".into())),
    };
    let dim = sites.first().map(|s| s.dim).ok_or_else(|| CliError::Args("no sites".into()))?;
    if sites.iter().any(|s| s.dim != dim) {
        return Err(CliError::Args("sites have mixed dimensions".into()));
    }
    let scale = parse_scale(&a.scale, dim)?;
    let metrics = a
        .metric
        .iter()
        .map(|m| match m.parse::<FieldMetric>() {
            Ok(FieldMetric::SectionEuclid { .. }) => Ok(FieldMetric::SectionEuclid { scale }),
            Ok(f) => Ok(f),
            Err(_) => Err(CliError::Args(format!("unknown metric {m:?}"))),
        })
        .collect::<CliResult<Vec<_>>>()?;
    if a.grid == 0 || !(a.shrink > 0.0 && a.shrink <= 1.0) {
        return Err(CliError::Args("--grid must be positive and --shrink in (0, 1]".into()));
    }
    let grid = FieldGrid { dim, resolution: a.grid, shrink: a.shrink };
    let field = bisector_field(&metrics, &sites, &grid).map_err(|e| match e {
        qgeo::Error::DimTooSmall(_) | qgeo::Error::OffEllipsoid { .. } | qgeo::Error::Domain(_) | qgeo::Error::WrongLevel { .. } => CliError::Args(e.to_string()),
        other => CliError::Generation(other),
    })?;
    rec.write_output(&a.out, &field.to_csv())?;
    if let Some(svg) = &a.svg {
        rec.write_output(svg, &field.to_svg())?;
    }
    rec.finish(&a.out)?;
    println!("{}", field.rows.len());
    Ok(())
}
