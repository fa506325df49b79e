//! Strict sectioned key-value run configuration and the run manifest.
//!
//! Physical quantities carry their unit in the key name (`eps0_m`,
//! `k0_per_m`, ...). Unknown sections or keys, repeated keys, and values
//! that fail to parse are errors naming the offending key; missing keys
//! take the defaults of `RunConfig::default()`. A manifest is the fully
//! resolved configuration plus a `[manifest]` section, and parses back to
//! the same configuration.

use crate::cell::{MaterialPair, DESIGN_BAND};
use crate::error::{Error, Result};
use crate::levelset::{LevelSetParams, Shape};
use crate::macroscale::{MacroConfig, MacroGeometry, Template};
use crate::optimizer::{ObjectiveSpec, OptimizerConfig};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Initial or fixed cell design.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CellDesign {
    /// Design band filled with air.
    Air,
    Shape(Shape),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub materials: MaterialPair,
    pub cell_mesh_n: usize,
    pub design: CellDesign,
    pub profile_width: f64,
    pub geometry: MacroGeometry,
    pub eps0: f64,
    pub kappa: f64,
    pub p_in: f64,
    pub macro_nx: usize,
    pub macro_ny: usize,
    pub k0: f64,
    pub w: f64,
    /// 1: minimize outlet 2, maximize outlet 1; 2: the reverse.
    pub case: u8,
    pub levelset: LevelSetParams,
    pub max_iterations: usize,
    pub threshold: f64,
    pub activation: usize,
    pub snapshot_every: usize,
    pub sweep_k0_min: f64,
    pub sweep_k0_max: f64,
    pub sweep_k0_step: f64,
    pub n_cells: usize,
    pub resonance_level: f64,
    pub td_eps: f64,
    pub td_probes: Vec<[f64; 2]>,
    pub output_dir: PathBuf,
    pub serial: bool,
    pub dump_matrices: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let opt = OptimizerConfig::default();
        RunConfig {
            materials: MaterialPair::air_aluminum(),
            cell_mesh_n: opt.cell_n,
            design: CellDesign::Shape(opt.initial_shape),
            profile_width: opt.initial_width,
            geometry: MacroGeometry::design(),
            eps0: 0.01,
            kappa: 1.0,
            p_in: 1.0,
            macro_nx: opt.macro_nx,
            macro_ny: opt.macro_ny,
            k0: 25.0,
            w: 0.5,
            case: 1,
            levelset: opt.levelset,
            max_iterations: opt.max_iterations,
            threshold: opt.threshold,
            activation: opt.activation,
            snapshot_every: opt.snapshot_every,
            sweep_k0_min: 5.0,
            sweep_k0_max: 60.0,
            sweep_k0_step: 1.0,
            n_cells: 50,
            resonance_level: 0.05,
            td_eps: 0.01,
            td_probes: vec![[0.75, 0.3], [0.25, 0.7], [0.6, 0.125]],
            output_dir: PathBuf::from("out"),
            serial: false,
            dump_matrices: false,
        }
    }
}

const SECTIONS: [&str; 11] = ["materials", "cell", "macro", "frequency", "objective", "levelset", "optimizer", "sweep", "td_check", "output", "debug"];

struct Table {
    entries: BTreeMap<(String, String), String>,
}

impl Table {
    fn parse(text: &str) -> Result<Self> {
        let ini = ini::Ini::load_from_str_noescape(text).map_err(|e| Error::Config(format!("syntax: {e}")))?;
        let mut entries = BTreeMap::new();
        for (section, props) in &ini {
            let Some(section) = section else {
                if let Some((k, _)) = props.iter().next() {
                    return Err(Error::Config(format!("key `{k}` appears before any section")));
                }
                continue;
            };
            if section == "manifest" {
                continue;
            }
            if !SECTIONS.contains(&section) {
                return Err(Error::Config(format!("unknown section [{section}]")));
            }
            for (k, v) in props.iter() {
                let key = (section.to_string(), k.to_string());
                if entries.insert(key, v.trim().to_string()).is_some() {
                    return Err(Error::Config(format!("key `{section}.{k}` given twice")));
                }
            }
        }
        Ok(Table { entries })
    }

    fn take<T: std::str::FromStr>(&mut self, section: &str, key: &str, into: &mut T) -> Result<()> {
        if let Some(v) = self.entries.remove(&(section.to_string(), key.to_string())) {
            *into = v.parse().map_err(|_| Error::Config(format!("cannot parse `{section}.{key}` = `{v}`")))?;
        }
        Ok(())
    }

    fn take_str(&mut self, section: &str, key: &str) -> Option<String> {
        self.entries.remove(&(section.to_string(), key.to_string()))
    }

    fn finish(self) -> Result<()> {
        match self.entries.keys().next() {
            Some((s, k)) => Err(Error::Config(format!("unknown key `{s}.{k}`"))),
            None => Ok(()),
        }
    }
}

fn bad(key: &str, why: impl std::fmt::Display) -> Error {
    Error::Config(format!("`{key}`: {why}"))
}

fn parse_probes(s: &str) -> Result<Vec<[f64; 2]>> {
    s.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let v: Vec<f64> = p.split_whitespace().map(|x| x.parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| bad("td_check.probes_cell", format!("bad point `{p}`")))?;
            match v[..] {
                [a, b] => Ok([a, b]),
                _ => Err(bad("td_check.probes_cell", format!("point `{p}` needs two coordinates"))),
            }
        })
        .collect()
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut t = Table::parse(text)?;
        let mut c = RunConfig::default();

        t.take("materials", "rho_air_kg_per_m3", &mut c.materials.rho_air)?;
        t.take("materials", "k_air_pa", &mut c.materials.k_air)?;
        t.take("materials", "rho_elastic_kg_per_m3", &mut c.materials.rho_elastic)?;
        t.take("materials", "k_elastic_pa", &mut c.materials.k_elastic)?;

        t.take("cell", "mesh_n", &mut c.cell_mesh_n)?;
        t.take("cell", "profile_width_cell", &mut c.profile_width)?;
        let kind = t.take_str("cell", "shape");
        let (mut center, mut radius, mut width, mut height, mut shear) = ([0.5, 0.5], 0.3, 0.25, 0.48, 0.5);
        match c.design {
            CellDesign::Shape(Shape::Circle { center: cc, radius: r }) => {
                center = cc;
                radius = r;
            }
            CellDesign::Shape(Shape::Parallelogram { center: cc, width: w, height: h, shear: s }) => {
                center = cc;
                (width, height, shear) = (w, h, s);
            }
            CellDesign::Air => {}
        }
        t.take("cell", "center_y1_cell", &mut center[0])?;
        t.take("cell", "center_y2_cell", &mut center[1])?;
        t.take("cell", "radius_cell", &mut radius)?;
        t.take("cell", "width_cell", &mut width)?;
        t.take("cell", "height_cell", &mut height)?;
        t.take("cell", "shear_cell", &mut shear)?;
        let kind = kind.unwrap_or_else(|| match c.design {
            CellDesign::Air => "air".into(),
            CellDesign::Shape(Shape::Circle { .. }) => "circle".into(),
            CellDesign::Shape(Shape::Parallelogram { .. }) => "parallelogram".into(),
        });
        c.design = match kind.as_str() {
            "air" => CellDesign::Air,
            "circle" => CellDesign::Shape(Shape::Circle { center, radius }),
            "parallelogram" => CellDesign::Shape(Shape::Parallelogram { center, width, height, shear }),
            other => return Err(bad("cell.shape", format!("expected air, circle or parallelogram, got `{other}`"))),
        };

        if let Some(v) = t.take_str("macro", "template") {
            let (w, d) = (c.geometry.width, c.geometry.depth);
            c.geometry = match v.as_str() {
                "validation" => MacroGeometry::validation(),
                "design" => MacroGeometry::design(),
                other => return Err(bad("macro.template", format!("expected validation or design, got `{other}`"))),
            };
            (c.geometry.width, c.geometry.depth) = (w, d);
        }
        t.take("macro", "width_m", &mut c.geometry.width)?;
        t.take("macro", "depth_m", &mut c.geometry.depth)?;
        t.take("macro", "outlet1_start_m", &mut c.geometry.outlet1.0)?;
        t.take("macro", "outlet1_end_m", &mut c.geometry.outlet1.1)?;
        t.take("macro", "outlet2_start_m", &mut c.geometry.outlet2.0)?;
        t.take("macro", "outlet2_end_m", &mut c.geometry.outlet2.1)?;
        t.take("macro", "eps0_m", &mut c.eps0)?;
        t.take("macro", "kappa", &mut c.kappa)?;
        t.take("macro", "p_in_pa", &mut c.p_in)?;
        t.take("macro", "mesh_nx", &mut c.macro_nx)?;
        t.take("macro", "mesh_ny", &mut c.macro_ny)?;

        let k0 = t.take_str("frequency", "k0_per_m");
        let hz = t.take_str("frequency", "freq_hz");
        match (k0, hz) {
            (Some(_), Some(_)) => return Err(Error::Config("give either `frequency.k0_per_m` or `frequency.freq_hz`, not both".into())),
            (Some(v), None) => c.k0 = v.parse().map_err(|_| bad("frequency.k0_per_m", format!("cannot parse `{v}`")))?,
            (None, Some(v)) => {
                let f: f64 = v.parse().map_err(|_| bad("frequency.freq_hz", format!("cannot parse `{v}`")))?;
                c.k0 = 2.0 * std::f64::consts::PI * f * (c.materials.rho_air / c.materials.k_air).sqrt();
            }
            (None, None) => {}
        }

        t.take("objective", "w", &mut c.w)?;
        t.take("objective", "case", &mut c.case)?;

        t.take("levelset", "k_phi", &mut c.levelset.k_phi)?;
        t.take("levelset", "tau", &mut c.levelset.tau)?;
        t.take("levelset", "dt", &mut c.levelset.dt)?;

        t.take("optimizer", "max_iterations", &mut c.max_iterations)?;
        t.take("optimizer", "threshold", &mut c.threshold)?;
        t.take("optimizer", "activation_iteration", &mut c.activation)?;
        t.take("optimizer", "snapshot_every", &mut c.snapshot_every)?;

        t.take("sweep", "k0_min_per_m", &mut c.sweep_k0_min)?;
        t.take("sweep", "k0_max_per_m", &mut c.sweep_k0_max)?;
        t.take("sweep", "k0_step_per_m", &mut c.sweep_k0_step)?;
        t.take("sweep", "n_cells", &mut c.n_cells)?;
        t.take("sweep", "resonance_level", &mut c.resonance_level)?;

        t.take("td_check", "eps_cell", &mut c.td_eps)?;
        if let Some(v) = t.take_str("td_check", "probes_cell") {
            c.td_probes = parse_probes(&v)?;
        }

        if let Some(v) = t.take_str("output", "dir") {
            c.output_dir = PathBuf::from(v);
        }
        t.take("debug", "serial", &mut c.serial)?;
        t.take("debug", "dump_matrices", &mut c.dump_matrices)?;
        t.finish()?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |e: Error| Error::Config(e.to_string());
        self.materials.validate().map_err(cfg)?;
        if self.cell_mesh_n == 0 || self.cell_mesh_n % 10 != 0 {
            return Err(bad("cell.mesh_n", "must be a positive multiple of 10"));
        }
        if let CellDesign::Shape(s) = self.design {
            s.validate().map_err(cfg)?;
            if !s.fits_design_band() {
                return Err(bad("cell.shape", format!("must stay within y₂ ∈ [{}, {}]", DESIGN_BAND.0, DESIGN_BAND.1)));
            }
        }
        if !(self.profile_width > 0.0) {
            return Err(bad("cell.profile_width_cell", "must be positive"));
        }
        if self.macro_nx == 0 || self.macro_ny == 0 {
            return Err(bad("macro.mesh_nx", "mesh counts must be positive"));
        }
        if !(self.k0 > 0.0) {
            return Err(bad("frequency.k0_per_m", "must be positive"));
        }
        self.macro_config().validate().map_err(cfg)?;
        ObjectiveSpec::case1(self.w).validate().map_err(cfg)?;
        if !matches!(self.case, 1 | 2) {
            return Err(bad("objective.case", "must be 1 or 2"));
        }
        self.levelset.validate().map_err(cfg)?;
        if !(self.threshold > 0.0) {
            return Err(bad("optimizer.threshold", "must be positive"));
        }
        if !(self.sweep_k0_min > 0.0 && self.sweep_k0_max >= self.sweep_k0_min && self.sweep_k0_step > 0.0) {
            return Err(bad("sweep.k0_*", "need 0 < min ≤ max and a positive step"));
        }
        if self.n_cells == 0 {
            return Err(bad("sweep.n_cells", "must be positive"));
        }
        if !(self.td_eps > 0.0) {
            return Err(bad("td_check.eps_cell", "must be positive"));
        }
        Ok(())
    }

    pub fn macro_config(&self) -> MacroConfig {
        OptimizerConfig {
            materials: self.materials,
            geometry: self.geometry,
            k0: self.k0,
            eps0: self.eps0,
            kappa: self.kappa,
            p_in: self.p_in,
            ..OptimizerConfig::default()
        }
        .macro_config()
    }

    pub fn objective(&self) -> ObjectiveSpec {
        if self.case == 2 {
            ObjectiveSpec::case2(self.w)
        } else {
            ObjectiveSpec::case1(self.w)
        }
    }

    pub fn optimizer_config(&self) -> Result<OptimizerConfig> {
        let CellDesign::Shape(initial_shape) = self.design else {
            return Err(bad("cell.shape", "optimization needs an initial shape"));
        };
        Ok(OptimizerConfig {
            materials: self.materials,
            geometry: self.geometry,
            k0: self.k0,
            eps0: self.eps0,
            objective: self.objective(),
            cell_n: self.cell_mesh_n,
            macro_nx: self.macro_nx,
            macro_ny: self.macro_ny,
            initial_shape,
            initial_width: self.profile_width,
            levelset: self.levelset,
            max_iterations: self.max_iterations,
            threshold: self.threshold,
            activation: self.activation,
            snapshot_every: self.snapshot_every,
            kappa: self.kappa,
            p_in: self.p_in,
            output_dir: Some(self.output_dir.clone()),
            ..OptimizerConfig::default()
        })
    }

    /// Fully resolved configuration in the input syntax.
    pub fn to_ini(&self) -> String {
        let f = crate::io::fmt;
        let mut s = String::new();
        let m = &self.materials;
        let _ = writeln!(s, "[materials]\nrho_air_kg_per_m3 = {}\nk_air_pa = {}\nrho_elastic_kg_per_m3 = {}\nk_elastic_pa = {}\n", f(m.rho_air), f(m.k_air), f(m.rho_elastic), f(m.k_elastic));
        let _ = writeln!(s, "[cell]\nmesh_n = {}\nprofile_width_cell = {}", self.cell_mesh_n, f(self.profile_width));
        match self.design {
            CellDesign::Air => {
                let _ = writeln!(s, "shape = air");
            }
            CellDesign::Shape(Shape::Circle { center, radius }) => {
                let _ = writeln!(s, "shape = circle\ncenter_y1_cell = {}\ncenter_y2_cell = {}\nradius_cell = {}", f(center[0]), f(center[1]), f(radius));
            }
            CellDesign::Shape(Shape::Parallelogram { center, width, height, shear }) => {
                let _ = writeln!(
                    s,
                    "shape = parallelogram\ncenter_y1_cell = {}\ncenter_y2_cell = {}\nwidth_cell = {}\nheight_cell = {}\nshear_cell = {}",
                    f(center[0]),
                    f(center[1]),
                    f(width),
                    f(height),
                    f(shear)
                );
            }
        }
        let g = &self.geometry;
        let template = if g.template == Template::Validation { "validation" } else { "design" };
        let _ = writeln!(
            s,
            "\n[macro]\ntemplate = {template}\nwidth_m = {}\ndepth_m = {}\noutlet1_start_m = {}\noutlet1_end_m = {}\noutlet2_start_m = {}\noutlet2_end_m = {}\neps0_m = {}\nkappa = {}\np_in_pa = {}\nmesh_nx = {}\nmesh_ny = {}\n",
            f(g.width),
            f(g.depth),
            f(g.outlet1.0),
            f(g.outlet1.1),
            f(g.outlet2.0),
            f(g.outlet2.1),
            f(self.eps0),
            f(self.kappa),
            f(self.p_in),
            self.macro_nx,
            self.macro_ny
        );
        let _ = writeln!(s, "[frequency]\nk0_per_m = {}\n", f(self.k0));
        let _ = writeln!(s, "[objective]\nw = {}\ncase = {}\n", f(self.w), self.case);
        let l = &self.levelset;
        let _ = writeln!(s, "[levelset]\nk_phi = {}\ntau = {}\ndt = {}\n", f(l.k_phi), f(l.tau), f(l.dt));
        let _ = writeln!(
            s,
            "[optimizer]\nmax_iterations = {}\nthreshold = {}\nactivation_iteration = {}\nsnapshot_every = {}\n",
            self.max_iterations,
            f(self.threshold),
            self.activation,
            self.snapshot_every
        );
        let _ = writeln!(
            s,
            "[sweep]\nk0_min_per_m = {}\nk0_max_per_m = {}\nk0_step_per_m = {}\nn_cells = {}\nresonance_level = {}\n",
            f(self.sweep_k0_min),
            f(self.sweep_k0_max),
            f(self.sweep_k0_step),
            self.n_cells,
            f(self.resonance_level)
        );
        let probes: Vec<String> = self.td_probes.iter().map(|p| format!("{} {}", f(p[0]), f(p[1]))).collect();
        let _ = writeln!(s, "[td_check]\neps_cell = {}\nprobes_cell = {}\n", f(self.td_eps), probes.join("; "));
        let _ = writeln!(s, "[output]\ndir = {}\n", self.output_dir.display());
        let _ = writeln!(s, "[debug]\nserial = {}\ndump_matrices = {}", self.serial, self.dump_matrices);
        s
    }

    /// Write `manifest.ini` (resolved config, command, version, time) to
    /// the output directory.
    pub fn write_manifest(&self, command: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.output_dir)?;
        let now = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let text = format!(
            "[manifest]\ncommand = {command}\nversion = {}\nunix_time_s = {now}\n\n{}",
            env!("CARGO_PKG_VERSION"),
            self.to_ini()
        );
        let path = self.output_dir.join("manifest.ini");
        std::fs::write(&path, text)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_default() {
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
    }

    #[test]
    fn manifest_roundtrip() {
        let mut c = RunConfig::default();
        c.k0 = 0.1 + 24.2;
        c.design = CellDesign::Shape(Shape::validation_parallelogram());
        c.geometry = MacroGeometry::validation();
        c.td_probes = vec![[0.3, 0.4]];
        let back = RunConfig::parse(&format!("[manifest]\nversion = x\n\n{}", c.to_ini())).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_and_malformed_keys_are_named() {
        let e = RunConfig::parse("[macro]\neps0 = 0.01\n").unwrap_err().to_string();
        assert!(e.contains("macro.eps0"), "{e}");
        let e = RunConfig::parse("[frequency]\nk0_per_m = fast\n").unwrap_err().to_string();
        assert!(e.contains("frequency.k0_per_m"), "{e}");
        let e = RunConfig::parse("[nonsense]\na = 1\n").unwrap_err().to_string();
        assert!(e.contains("nonsense"), "{e}");
    }

    #[test]
    fn frequency_in_hz() {
        let c = RunConfig::parse("[frequency]\nfreq_hz = 1000\n").unwrap();
        let c0 = (1.42e5f64 / 1.2).sqrt();
        assert!((c.k0 - 2.0 * std::f64::consts::PI * 1000.0 / c0).abs() < 1e-12);
        assert!(RunConfig::parse("[frequency]\nfreq_hz = 1000\nk0_per_m = 3\n").is_err());
    }
}
