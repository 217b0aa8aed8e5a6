//! Plain-text configuration files, VTK legacy snapshots, and CSV diagnostics.

use crate::experiments::{ExperimentSpec, InitKind, Smoothing};
use crate::fem::xy_to_bary;
use crate::mesh::{Mesh, WallTag};
use crate::model::{PhysParams, StabSpec, Walls};
use crate::stepper::{SimState, StepReport};
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("config error:\n{}", .0.join("\n"))]
    Config(Vec<String>),
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// What a config file asks the binary to do.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Run,
    Accuracy,
}

/// Fully parsed configuration. Field names follow the file keys.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
    pub dt: f64,
    pub t_end: f64,
    pub output_every: usize,
    pub params: PhysParams,
    pub stab: StabSpec,
    pub walls: Walls,
    pub init: InitKind,
    pub smoothing: Smoothing,
    pub solver_tol: f64,
    pub solver_maxit: usize,
    pub out_dir: String,
    pub vtk: bool,
    pub csv: bool,
    pub kind: ExperimentKind,
    pub dt_list: Vec<f64>,
}

impl Default for Config {
    fn default() -> Config {
        Config {
            lx: 1.0,
            ly: 1.0,
            nx: 16,
            ny: 16,
            dt: 1e-3,
            t_end: 1.0,
            output_every: 100,
            params: PhysParams { nu: 1.0, lambda: 0.1, mobility: 1e-3, eps: 0.025, g0: 0.0, dt: 1e-3 },
            stab: StabSpec::Auto,
            walls: Walls::default(),
            init: InitKind::Constant(1.0),
            smoothing: Smoothing::Tanh,
            solver_tol: 1e-12,
            solver_maxit: 20000,
            out_dir: "out".into(),
            vtk: true,
            csv: true,
            kind: ExperimentKind::Run,
            dt_list: vec![],
        }
    }
}

fn parse_num<T: std::str::FromStr>(value: &str, key: &str, line: usize, errs: &mut Vec<String>) -> Option<T> {
    match value.parse() {
        Ok(v) => Some(v),
        Err(_) => {
            errs.push(format!("line {line}: invalid value '{value}' for key '{key}'"));
            None
        }
    }
}

fn parse_bool(value: &str, key: &str, line: usize, errs: &mut Vec<String>) -> Option<bool> {
    match value {
        "true" => Some(true),
        "false" => Some(false),
        _ => {
            errs.push(format!("line {line}: key '{key}' expects true or false, got '{value}'"));
            None
        }
    }
}

/// Parses the `[section] key = value` format. Unknown sections or keys are
/// hard errors, reported with line numbers; all errors are collected before
/// returning.
pub fn parse_config(text: &str) -> Result<Config, IoError> {
    let mut cfg = Config::default();
    let mut errs: Vec<String> = Vec::new();
    let mut section = String::new();
    // init parameters are gathered first, the kind decides how to combine them
    let mut init_kind = String::from("constant");
    let (mut center_x, mut center_y, mut radius) = (0.5, 0.0, 0.25);
    let (mut half_width, mut value) = (0.25, 1.0);
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            match name.strip_suffix(']') {
                Some(name) => {
                    section = name.trim().to_string();
                    match section.as_str() {
                        "domain" | "time" | "model" | "walls" | "init" | "solver" | "output" | "experiment" => {}
                        other => errs.push(format!("line {lineno}: unknown section '[{other}]'")),
                    }
                }
                None => errs.push(format!("line {lineno}: malformed section header '{line}'")),
            }
            continue;
        }
        let Some((key, val)) = line.split_once('=') else {
            errs.push(format!("line {lineno}: expected 'key = value', got '{line}'"));
            continue;
        };
        let key = key.trim();
        let val = val.trim();
        let e = &mut errs;
        macro_rules! num {
            ($target:expr) => {
                if let Some(v) = parse_num(val, key, lineno, e) {
                    $target = v;
                }
            };
        }
        match (section.as_str(), key) {
            ("domain", "lx") => num!(cfg.lx),
            ("domain", "ly") => num!(cfg.ly),
            ("domain", "nx") => num!(cfg.nx),
            ("domain", "ny") => num!(cfg.ny),
            ("time", "dt") => num!(cfg.dt),
            ("time", "t_end") => num!(cfg.t_end),
            ("time", "output_every") => num!(cfg.output_every),
            ("model", "nu") => num!(cfg.params.nu),
            ("model", "lambda") => num!(cfg.params.lambda),
            ("model", "m") => num!(cfg.params.mobility),
            ("model", "eps") => num!(cfg.params.eps),
            ("model", "g0") => num!(cfg.params.g0),
            ("model", "s_mode") => match val {
                "auto" => cfg.stab = StabSpec::Auto,
                "explicit" => {
                    if !matches!(cfg.stab, StabSpec::Explicit(_)) {
                        cfg.stab = StabSpec::Explicit(f64::NAN);
                    }
                }
                other => errs.push(format!("line {lineno}: s_mode must be auto or explicit, got '{other}'")),
            },
            ("model", "s_value") => {
                if let Some(v) = parse_num::<f64>(val, key, lineno, e) {
                    cfg.stab = StabSpec::Explicit(v);
                }
            }
            ("walls", _) => {
                let (field, wall) = match key.rsplit_once('_') {
                    Some((f, w)) => (f, w),
                    None => ("", ""),
                };
                let tag = match wall {
                    "left" => Some(WallTag::Left),
                    "right" => Some(WallTag::Right),
                    "bottom" => Some(WallTag::Bottom),
                    "top" => Some(WallTag::Top),
                    _ => None,
                };
                match (field, tag) {
                    ("theta_s", Some(t)) => num!(cfg.walls.get_mut(t).theta_s_deg),
                    ("slip_l", Some(t)) => num!(cfg.walls.get_mut(t).slip_l),
                    ("u_wall", Some(t)) => num!(cfg.walls.get_mut(t).u_wall),
                    ("active_sclc", Some(t)) => {
                        if let Some(v) = parse_bool(val, key, lineno, e) {
                            cfg.walls.get_mut(t).active_sclc = v;
                        }
                    }
                    _ => errs.push(format!("line {lineno}: unknown key '{key}' in section [walls]")),
                }
            }
            ("init", "kind") => match val {
                "droplet" | "stripe" | "constant" => init_kind = val.to_string(),
                other => errs.push(format!("line {lineno}: init kind must be droplet, stripe or constant, got '{other}'")),
            },
            ("init", "smoothing") => match val {
                "sharp" => cfg.smoothing = Smoothing::Sharp,
                "tanh" => cfg.smoothing = Smoothing::Tanh,
                other => errs.push(format!("line {lineno}: smoothing must be sharp or tanh, got '{other}'")),
            },
            ("init", "center_x") => num!(center_x),
            ("init", "center_y") => num!(center_y),
            ("init", "radius") => num!(radius),
            ("init", "half_width") => num!(half_width),
            ("init", "value") => num!(value),
            ("solver", "tol") => num!(cfg.solver_tol),
            ("solver", "maxit") => num!(cfg.solver_maxit),
            ("output", "dir") => cfg.out_dir = val.to_string(),
            ("output", "vtk") => {
                if let Some(v) = parse_bool(val, key, lineno, e) {
                    cfg.vtk = v;
                }
            }
            ("output", "csv") => {
                if let Some(v) = parse_bool(val, key, lineno, e) {
                    cfg.csv = v;
                }
            }
            ("experiment", "kind") => match val {
                "run" => cfg.kind = ExperimentKind::Run,
                "accuracy" => cfg.kind = ExperimentKind::Accuracy,
                other => errs.push(format!("line {lineno}: experiment kind must be run or accuracy, got '{other}'")),
            },
            ("experiment", "dt_list") => {
                let mut list = Vec::new();
                for part in val.split(',') {
                    match part.trim().parse::<f64>() {
                        Ok(v) => list.push(v),
                        Err(_) => errs.push(format!("line {lineno}: dt_list entry '{}' is not a number", part.trim())),
                    }
                }
                cfg.dt_list = list;
            }
            ("", _) => errs.push(format!("line {lineno}: key '{key}' appears before any [section]")),
            (sec, _) => errs.push(format!("line {lineno}: unknown key '{key}' in section [{sec}]")),
        }
    }
    cfg.init = match init_kind.as_str() {
        "droplet" => InitKind::Droplet { center: [center_x, center_y], radius },
        "stripe" => InitKind::Stripe { center_x, half_width },
        _ => InitKind::Constant(value),
    };
    cfg.params.dt = cfg.dt;
    if let StabSpec::Explicit(v) = cfg.stab {
        if v.is_nan() {
            errs.push("s_mode = explicit requires an s_value".into());
        }
    }
    if errs.is_empty() {
        if let Err(e) = cfg.params.validate() {
            errs.push(format!("model parameters: {e}"));
        }
        if let Err(e) = cfg.walls.validate() {
            errs.push(format!("walls: {e}"));
        }
        if let Err(e) = cfg.stab.resolve(&cfg.walls) {
            errs.push(format!("stabilization: {e}"));
        }
        if cfg.kind == ExperimentKind::Accuracy && cfg.dt_list.is_empty() {
            errs.push("experiment kind 'accuracy' requires a dt_list".into());
        }
    }
    if errs.is_empty() {
        Ok(cfg)
    } else {
        Err(IoError::Config(errs))
    }
}

/// Renders a config in the canonical key order; `parse_config` of the result
/// reproduces the config exactly.
pub fn serialize_config(cfg: &Config) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "[domain]\nlx = {}\nly = {}\nnx = {}\nny = {}\n", cfg.lx, cfg.ly, cfg.nx, cfg.ny);
    let _ = writeln!(s, "[time]\ndt = {}\nt_end = {}\noutput_every = {}\n", cfg.dt, cfg.t_end, cfg.output_every);
    let p = &cfg.params;
    let _ = writeln!(s, "[model]\nnu = {}\nlambda = {}\nm = {}\neps = {}\ng0 = {}", p.nu, p.lambda, p.mobility, p.eps, p.g0);
    match cfg.stab {
        StabSpec::Auto => {
            let _ = writeln!(s, "s_mode = auto\n");
        }
        StabSpec::Explicit(v) => {
            let _ = writeln!(s, "s_mode = explicit\ns_value = {v}\n");
        }
    }
    let _ = writeln!(s, "[walls]");
    for tag in WallTag::ALL {
        let w = cfg.walls.get(tag);
        let name = tag.name();
        let _ = writeln!(s, "theta_s_{name} = {}", w.theta_s_deg);
        let _ = writeln!(s, "slip_l_{name} = {}", w.slip_l);
        let _ = writeln!(s, "u_wall_{name} = {}", w.u_wall);
        let _ = writeln!(s, "active_sclc_{name} = {}", w.active_sclc);
    }
    let _ = writeln!(s, "\n[init]");
    match cfg.init {
        InitKind::Droplet { center, radius } => {
            let _ = writeln!(s, "kind = droplet\ncenter_x = {}\ncenter_y = {}\nradius = {}", center[0], center[1], radius);
        }
        InitKind::Stripe { center_x, half_width } => {
            let _ = writeln!(s, "kind = stripe\ncenter_x = {center_x}\nhalf_width = {half_width}");
        }
        InitKind::Constant(v) => {
            let _ = writeln!(s, "kind = constant\nvalue = {v}");
        }
    }
    let _ = writeln!(
        s,
        "smoothing = {}\n",
        match cfg.smoothing {
            Smoothing::Sharp => "sharp",
            Smoothing::Tanh => "tanh",
        }
    );
    let _ = writeln!(s, "[solver]\ntol = {}\nmaxit = {}\n", cfg.solver_tol, cfg.solver_maxit);
    let _ = writeln!(s, "[output]\ndir = {}\nvtk = {}\ncsv = {}\n", cfg.out_dir, cfg.vtk, cfg.csv);
    let _ = writeln!(
        s,
        "[experiment]\nkind = {}",
        match cfg.kind {
            ExperimentKind::Run => "run",
            ExperimentKind::Accuracy => "accuracy",
        }
    );
    if !cfg.dt_list.is_empty() {
        let list: Vec<String> = cfg.dt_list.iter().map(|d| format!("{d}")).collect();
        let _ = writeln!(s, "dt_list = {}", list.join(", "));
    }
    s
}

impl Config {
    pub fn to_spec(&self) -> ExperimentSpec {
        ExperimentSpec {
            lx: self.lx,
            ly: self.ly,
            nx: self.nx,
            ny: self.ny,
            params: PhysParams { dt: self.dt, ..self.params },
            walls: self.walls,
            stab: self.stab,
            init: self.init,
            smoothing: self.smoothing,
            t_end: self.t_end,
            output_every: self.output_every,
            solver_tol: self.solver_tol,
            solver_maxit: self.solver_maxit,
            dt_list: self.dt_list.clone(),
        }
    }

    pub fn from_spec(spec: &ExperimentSpec, kind: ExperimentKind) -> Config {
        Config {
            lx: spec.lx,
            ly: spec.ly,
            nx: spec.nx,
            ny: spec.ny,
            dt: spec.params.dt,
            t_end: spec.t_end,
            output_every: spec.output_every,
            params: spec.params,
            stab: spec.stab,
            walls: spec.walls,
            init: spec.init,
            smoothing: spec.smoothing,
            solver_tol: spec.solver_tol,
            solver_maxit: spec.solver_maxit,
            kind,
            dt_list: spec.dt_list.clone(),
            ..Config::default()
        }
    }
}

/// Interpolates the coarse-mesh pressure onto the fine nodes through the
/// parent triangles.
pub fn pressure_on_fine(state: &SimState, fine: &Mesh) -> Vec<f64> {
    let coarse = &state.p.space.mesh;
    let parents = fine.parent_map.as_ref().expect("fine mesh carries a parent map");
    let mut out = vec![0.0; fine.n_nodes()];
    for (ft, tri) in fine.triangles.iter().enumerate() {
        let parent = parents[ft];
        for &node in tri {
            let bary = xy_to_bary(coarse, parent, fine.nodes[node]);
            out[node] = state.p.eval_scalar(parent, bary);
        }
    }
    out
}

/// Writes a VTK legacy ASCII snapshot of the state on the fine mesh.
pub fn write_vtk(path: &Path, state: &SimState) -> Result<(), IoError> {
    let fine = &state.phi.space.mesh;
    let p_interp = pressure_on_fine(state, fine);
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\n");
    let _ = writeln!(s, "two-phase flow snapshot t = {}", state.t);
    s.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {} double", fine.n_nodes());
    for p in &fine.nodes {
        let _ = writeln!(s, "{} {} 0", p[0], p[1]);
    }
    let _ = writeln!(s, "CELLS {} {}", fine.n_triangles(), 4 * fine.n_triangles());
    for t in &fine.triangles {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {}", fine.n_triangles());
    for _ in &fine.triangles {
        s.push_str("5\n");
    }
    let _ = writeln!(s, "POINT_DATA {}", fine.n_nodes());
    for (name, values) in [("phi", &state.phi.values), ("q", &state.q.values), ("p_interp", &p_interp)] {
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for v in values.iter() {
            let _ = writeln!(s, "{v}");
        }
    }
    s.push_str("VECTORS velocity double\n");
    for node in 0..fine.n_nodes() {
        let _ = writeln!(s, "{} {} 0", state.u.values[2 * node], state.u.values[2 * node + 1]);
    }
    std::fs::write(path, s).map_err(|e| IoError::Write { path: path.display().to_string(), source: e })
}

pub const CSV_HEADER: &str = "step,t,E_kin,E_grad,E_q,E_surf,E_total,grad_p_term,D_visc,D_phi,D_slip,energy_residual,mass,xi,cg_iters_phase,solver_iters_velocity,cg_iters_projection";

/// One diagnostics row per time step, in the fixed column order.
#[derive(Debug, Clone, Copy)]
pub struct DiagnosticsRow {
    pub step: usize,
    pub t: f64,
    pub report: StepReport,
}

pub fn format_csv(rows: &[DiagnosticsRow]) -> String {
    let mut s = String::with_capacity(64 * (rows.len() + 1));
    s.push_str(CSV_HEADER);
    s.push('\n');
    for row in rows {
        let r = &row.report;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            row.step,
            row.t,
            r.e_kin,
            r.e_grad,
            r.e_q,
            r.e_surf,
            r.e_total,
            r.grad_p_term,
            r.d_visc,
            r.d_phi,
            r.d_slip,
            r.energy_residual,
            r.mass,
            r.xi,
            r.cg_iters_phase,
            r.solver_iters_velocity,
            r.cg_iters_projection
        );
    }
    s
}

pub fn write_csv(path: &Path, rows: &[DiagnosticsRow]) -> Result<(), IoError> {
    std::fs::write(path, format_csv(rows)).map_err(|e| IoError::Write { path: path.display().to_string(), source: e })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::interpolate;
    use crate::mesh::{build_rectangle, refine_uniform};
    use crate::stepper::Stepper;
    use std::sync::Arc;

    const MINIMAL: &str = "\
[domain]
lx = 4
ly = 1.2
nx = 8
ny = 4

[time]
dt = 0.001
t_end = 0.01

[walls]
theta_s_bottom = 150
slip_l_bottom = 5.263157894736842

[init]
kind = droplet
center_x = 2
center_y = 0
radius = 0.8
";

    #[test]
    fn parse_minimal_with_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.lx, 4.0);
        assert_eq!(cfg.nx, 8);
        assert_eq!(cfg.walls.bottom.theta_s_deg, 150.0);
        // untouched keys keep their defaults
        assert_eq!(cfg.walls.top.theta_s_deg, 90.0);
        assert_eq!(cfg.params.nu, 1.0);
        assert_eq!(cfg.solver_maxit, 20000);
        assert_eq!(cfg.kind, ExperimentKind::Run);
        assert_eq!(cfg.init, InitKind::Droplet { center: [2.0, 0.0], radius: 0.8 });
    }

    #[test]
    fn parse_rejects_unknown_keys_with_line_numbers() {
        let text = "[walls]\nthetas_top = 103\n";
        let err = parse_config(text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2"), "{msg}");
        assert!(msg.contains("thetas_top"), "{msg}");

        let text = "[domain]\nlxx = 3\n";
        let msg = parse_config(text).unwrap_err().to_string();
        assert!(msg.contains("line 2") && msg.contains("lxx"), "{msg}");
    }

    #[test]
    fn parse_rejects_undersized_stabilization() {
        let text = "[model]\ns_mode = explicit\ns_value = 0.01\n[walls]\ntheta_s_bottom = 150\n";
        let msg = parse_config(text).unwrap_err().to_string();
        assert!(msg.contains("stabilization"), "{msg}");
    }

    #[test]
    fn config_round_trip() {
        for text in [MINIMAL, "[experiment]\nkind = accuracy\ndt_list = 0.01, 0.005\n"] {
            let cfg = parse_config(text).unwrap();
            let rendered = serialize_config(&cfg);
            let back = parse_config(&rendered).unwrap();
            assert_eq!(cfg, back, "round trip changed the config:\n{rendered}");
        }
        // preset -> config -> text -> config
        let spec = ExperimentSpec::couette(1e-3);
        let cfg = Config::from_spec(&spec, ExperimentKind::Run);
        let back = parse_config(&serialize_config(&cfg)).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn vtk_structure_on_unit_mesh() {
        let coarse = Arc::new(build_rectangle(1.0, 1.0, 1, 1).unwrap());
        let fine = Arc::new(refine_uniform(&coarse));
        let params = PhysParams { nu: 1.0, lambda: 0.1, mobility: 1e-3, eps: 0.1, g0: 0.0, dt: 1e-3 };
        let stepper = Stepper::new(coarse, fine, params, Walls::default(), StabSpec::Auto, 1e-12, 1000).unwrap();
        let state = stepper.initial_state(interpolate(&stepper.f_space, |_, _| 1.0));
        let dir = std::env::temp_dir().join("mclflow_vtk_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("snap.vtk");
        write_vtk(&path, &state).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# vtk DataFile Version 3.0");
        assert!(lines.contains(&"POINTS 9 double"));
        assert!(lines.contains(&"CELLS 8 32"));
        assert!(lines.contains(&"CELL_TYPES 8"));
        assert!(lines.contains(&"POINT_DATA 9"));
        // every cell line has the "3 i j k" shape with valid indices
        let cells_at = lines.iter().position(|l| l.starts_with("CELLS")).unwrap();
        for l in &lines[cells_at + 1..cells_at + 9] {
            let parts: Vec<usize> = l.split_whitespace().map(|p| p.parse().unwrap()).collect();
            assert_eq!(parts.len(), 4);
            assert_eq!(parts[0], 3);
            assert!(parts[1..].iter().all(|&i| i < 9));
        }
        // constant phi prints as the literal shortest decimal
        let phi_at = lines.iter().position(|l| l.starts_with("SCALARS phi")).unwrap();
        for l in &lines[phi_at + 2..phi_at + 11] {
            assert_eq!(*l, "1");
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn pressure_interpolation_is_exact_for_linear_fields() {
        let coarse = Arc::new(build_rectangle(2.0, 1.0, 4, 2).unwrap());
        let fine = Arc::new(refine_uniform(&coarse));
        let params = PhysParams { nu: 1.0, lambda: 0.1, mobility: 1e-3, eps: 0.1, g0: 0.0, dt: 1e-3 };
        let stepper = Stepper::new(coarse, fine.clone(), params, Walls::default(), StabSpec::Auto, 1e-12, 1000).unwrap();
        let mut state = stepper.initial_state(interpolate(&stepper.f_space, |_, _| 1.0));
        state.p = interpolate(&stepper.p_space, |x, y| 3.0 * x - 2.0 * y + 0.5);
        let vals = pressure_on_fine(&state, &fine);
        for (node, p) in fine.nodes.iter().enumerate() {
            let expect = 3.0 * p[0] - 2.0 * p[1] + 0.5;
            assert!((vals[node] - expect).abs() < 1e-12, "node {node}");
        }
    }

    #[test]
    fn csv_format_and_round_trip() {
        assert_eq!(format_csv(&[]).lines().count(), 1);
        assert_eq!(format_csv(&[]).lines().next().unwrap(), CSV_HEADER);
        let mut report = StepReport::default();
        report.energy_residual = -3.0e-12 * std::f64::consts::PI;
        report.e_total = 0.1 + 0.2; // deliberately not representable as 0.3
        report.cg_iters_phase = 17;
        let rows = vec![
            DiagnosticsRow { step: 1, t: 1e-3, report },
            DiagnosticsRow { step: 2, t: 2e-3, report },
        ];
        let text = format_csv(&rows);
        assert_eq!(text.lines().count(), 3);
        let first: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(first.len(), 17);
        // bit-exact round trip of the doubles
        assert_eq!(first[11].parse::<f64>().unwrap().to_bits(), report.energy_residual.to_bits());
        assert_eq!(first[6].parse::<f64>().unwrap().to_bits(), report.e_total.to_bits());
        assert_eq!(first[14], "17");
    }
}
