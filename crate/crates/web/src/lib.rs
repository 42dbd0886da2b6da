//! Browser bindings for three interactive views: qubit bisector sign maps,
//! the eight-site section diagrams, and qubit channel capacity.
//!
//! Every export returns a JSON string. The `demo` module holds the plain Rust
//! versions so they can be tested natively.

use wasm_bindgen::prelude::*;

pub mod demo {
    use serde::Serialize;

    use qgeo::capacity::holevo_capacity;
    use qgeo::channels::{amplitude_damping, KrausChannel};
    use qgeo::mesh::{MeshRule, MeshSpec};
    use qgeo::seb::SebConfig;
    use qgeo::voronoi::{bisector_field, coinciding_scale, example3_sites, FieldGrid, FieldMetric, SectionPoint};

    pub type DemoResult = Result<String, String>;

    fn err(e: impl std::fmt::Display) -> String {
        e.to_string()
    }

    /// One grid cell: column, row, sheet (1 upper, 0 lower) and value.
    #[derive(Debug, Serialize)]
    pub struct Cell(pub usize, pub usize, pub u8, pub f64);

    #[derive(Debug, Serialize)]
    struct BisectorView {
        metric: String,
        resolution: usize,
        cells: Vec<Cell>,
    }

    fn bloch_site(v: &[f64]) -> Result<SectionPoint, String> {
        if v.len() != 3 {
            return Err(format!("a Bloch vector needs 3 components, got {}", v.len()));
        }
        let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if r < 1e-12 {
            return Err("site vector must be non-zero".into());
        }
        // sites are projected onto the sphere so every metric applies
        SectionPoint::from_sphere(2, [v[0] / r, v[1] / r, v[2] / r]).map_err(err)
    }

    /// Sign of `dist(site1) - dist(site2)` over the Bloch sphere for one metric.
    pub fn bloch_bisector(site1: &[f64], site2: &[f64], metric: &str, resolution: usize) -> DemoResult {
        if !(2..=400).contains(&resolution) {
            return Err("resolution must be between 2 and 400".into());
        }
        let m: FieldMetric = metric.parse().map_err(err)?;
        if !matches!(m, FieldMetric::State(_)) {
            return Err(format!("{metric} is a section metric; pick a state metric"));
        }
        let grid = FieldGrid::new(2, resolution);
        let field = bisector_field(&[m], &[bloch_site(site1)?, bloch_site(site2)?], &grid).map_err(err)?;
        let cells = field
            .rows
            .iter()
            .map(|r| {
                let (i, j, upper) = grid.locate(&r.point);
                Cell(i, j, upper as u8, r.gaps[0])
            })
            .collect();
        serde_json::to_string(&BisectorView { metric: m.name(), resolution, cells }).map_err(err)
    }

    #[derive(Debug, Serialize)]
    struct SectionView {
        dim: usize,
        scale: f64,
        resolution: usize,
        /// Cells carry the nearest-site index under the divergence.
        divergence: Vec<Cell>,
        /// Cells carry the nearest-site index under the Euclidean metric.
        euclid: Vec<Cell>,
        differing_cells: usize,
    }

    /// Nearest-site diagrams of the eight-site configuration; `scale <= 0`
    /// selects the rescaling under which both diagrams agree.
    pub fn section_diagrams(dim: usize, scale: f64, resolution: usize) -> DemoResult {
        if !(2..=400).contains(&resolution) {
            return Err("resolution must be between 2 and 400".into());
        }
        let scale = if scale > 0.0 { scale } else { coinciding_scale(dim) };
        let sites = example3_sites(dim).map_err(err)?;
        let grid = FieldGrid::new(dim, resolution);
        let field = bisector_field(&[FieldMetric::SectionDivergence, FieldMetric::SectionEuclid { scale }], &sites, &grid)
            .map_err(err)?;
        let mut view = SectionView { dim, scale, resolution, divergence: Vec::new(), euclid: Vec::new(), differing_cells: 0 };
        for r in &field.rows {
            let (i, j, upper) = grid.locate(&r.point);
            view.divergence.push(Cell(i, j, upper as u8, r.nearest[0] as f64));
            view.euclid.push(Cell(i, j, upper as u8, r.nearest[1] as f64));
            view.differing_cells += usize::from(r.labels_differ(0, 1, qgeo::tol::GAP_FLOOR));
        }
        serde_json::to_string(&view).map_err(err)
    }

    #[derive(Debug, Serialize)]
    struct CapacityView {
        capacity_nats: f64,
        capacity_bits: f64,
        mesh_points: usize,
        center_bloch: [f64; 3],
        /// `(weight, input Bloch vector, image Bloch vector)` per support state.
        support: Vec<(f64, [f64; 3], [f64; 3])>,
    }

    fn capacity_view(ch: &KrausChannel, delta: f64) -> DemoResult {
        if ch.dim() != 2 {
            return Err(format!("the demo handles qubit channels only, got d = {}", ch.dim()));
        }
        let spec = MeshSpec::new(2, delta, MeshRule::Quadratic).map_err(err)?;
        let res = holevo_capacity(ch, &spec, &SebConfig::default()).map_err(err)?;
        let bloch = |m: &qgeo::states::DensityMatrix| qgeo::states::to_bloch(m).map(|b| b.to_array()).map_err(err);
        let support = res
            .support
            .iter()
            .map(|s| Ok((s.weight, bloch(&s.input)?, bloch(&s.image)?)))
            .collect::<Result<Vec<_>, String>>()?;
        serde_json::to_string(&CapacityView {
            capacity_nats: res.capacity_nats,
            capacity_bits: res.capacity_bits,
            mesh_points: res.stats.mesh_points,
            center_bloch: bloch(&res.center)?,
            support,
        })
        .map_err(err)
    }

    /// Capacity of the amplitude-damping channel with decay `gamma`.
    pub fn amplitude_damping_capacity(gamma: f64, delta: f64) -> DemoResult {
        capacity_view(&amplitude_damping(gamma).map_err(err)?, delta)
    }

    /// Capacity of a qubit channel given as channel JSON.
    pub fn channel_capacity(channel_json: &str, delta: f64) -> DemoResult {
        let ch: KrausChannel = serde_json::from_str(channel_json).map_err(err)?;
        capacity_view(&ch, delta)
    }
}

fn js(r: demo::DemoResult) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn bloch_bisector(site1: &[f64], site2: &[f64], metric: &str, resolution: usize) -> Result<String, JsError> {
    js(demo::bloch_bisector(site1, site2, metric, resolution))
}

#[wasm_bindgen]
pub fn section_diagrams(dim: usize, scale: f64, resolution: usize) -> Result<String, JsError> {
    js(demo::section_diagrams(dim, scale, resolution))
}

#[wasm_bindgen]
pub fn amplitude_damping_capacity(gamma: f64, delta: f64) -> Result<String, JsError> {
    js(demo::amplitude_damping_capacity(gamma, delta))
}

#[wasm_bindgen]
pub fn channel_capacity(channel_json: &str, delta: f64) -> Result<String, JsError> {
    js(demo::channel_capacity(channel_json, delta))
}
