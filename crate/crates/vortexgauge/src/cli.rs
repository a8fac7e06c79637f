//! Run configuration, verification suites and the subcommands behind the
//! `vortexgauge` binary.
//!
//! A run is described by one JSON document (see [`RunConfig`]). Every
//! subcommand writes its artifacts into the output directory; CSV files are
//! byte-identical across reruns with the same configuration and seed.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::automorphy::{AutomorphyFactor, Character};
use crate::curve_algebra::{
    self, is_admissible, period_matrix, principal_divisor, random_point, third_kind_differential, BakerAkhiezer,
    Certificate, Divisor, HyperellipticCurve, JacobianContext, Method, Sheet, Verdict,
};
use crate::error::{Error, Result};
use crate::gauge_fields::{Connection, EdgeComplex, FieldOperators, PerturbationClass};
use crate::gl_solver::{build_reduced_system, continue_branch, scaling_report, write_branch_csv, BranchPoint};
use crate::hodge::{
    harmonic_basis, harmonic_form, hodge_decomposition, maxwell_kernel_check, project_harmonic_dual, HodgeOperators,
};
use crate::hyperbolic::{
    build_fuchsian_group_with, build_mesh, disk_to_half_plane, DeckElement, Geometry, GroupElement, Letter,
    PairingScheme, SurfaceMesh, TorusCell,
};
use crate::spectral::{
    assemble_laplacian, kernel_window, lowest_eigenpairs, weitzenbock_residual, write_spectrum_csv, LandauLevel,
};

pub const CONFIG_VERSION: u32 = 1;

/// Names accepted by `verify`.
pub const SUITES: [&str; 8] = ["cocycle", "flux", "weitzenbock", "hodge", "spectrum", "theta", "abel", "branch"];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryKindConfig {
    #[default]
    Hyperbolic,
    Torus,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    pub kind: GeometryKindConfig,
    pub genus: usize,
    pub pairing: PairingScheme,
    /// Torus periods `[[re, im], [re, im]]`; a square of side `side` otherwise.
    pub lattice: Option<[[f64; 2]; 2]>,
    pub side: f64,
    /// Branch points `[re, im]` of the hyperelliptic curve used by `classify`
    /// and the curve suites; a fixed generic curve of the given genus otherwise.
    pub branch_points: Option<Vec<[f64; 2]>>,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            kind: GeometryKindConfig::Hyperbolic,
            genus: 2,
            pairing: PairingScheme::Commutator,
            lattice: None,
            side: 2.0,
            branch_points: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BundleConfig {
    pub n: i64,
    /// Character in turns, one per generator; trivial when absent.
    pub sigma: Option<Vec<f64>>,
    /// Draw the character from the seed instead.
    pub random_sigma: bool,
    /// Expected `dim Null d''` for the spectrum suite, when no independent
    /// count is available.
    pub expected_kernel: Option<usize>,
}

impl Default for BundleConfig {
    fn default() -> Self {
        Self { n: 1, sigma: None, random_sigma: false, expected_kernel: None }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Residual tolerance of branch points.
    pub tolerance: f64,
    /// Eigenpairs written by `spectrum`.
    pub eigenpairs: usize,
    /// Random trials of the sampling suites.
    pub trials: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tolerance: 1e-8, eigenpairs: 8, trials: 1000 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifyConfig {
    pub samples: usize,
    /// Sample points have `|x - centroid| <= radius * scale`.
    pub radius: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self { samples: 100, radius: 0.8 }
    }
}

fn default_sweep() -> Vec<f64> {
    (0..8).map(|k| 0.0125 * 2f64.powf(3.0 * k as f64 / 7.0)).collect()
}

/// One experiment.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub bundle: BundleConfig,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    /// Branch amplitudes `s`.
    #[serde(default = "default_sweep")]
    pub sweep: Vec<f64>,
    #[serde(default)]
    pub classify: ClassifyConfig,
    /// Suite run by `verify`.
    #[serde(default)]
    pub suite: Option<String>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

fn default_resolution() -> usize {
    16
}

fn default_kappa() -> f64 {
    1.0
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            geometry: GeometryConfig::default(),
            bundle: BundleConfig::default(),
            resolution: default_resolution(),
            solver: SolverConfig::default(),
            kappa: default_kappa(),
            sweep: default_sweep(),
            classify: ClassifyConfig::default(),
            suite: None,
            output: None,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&s)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.version != CONFIG_VERSION {
            return bad(format!("unsupported config version {} (expected {CONFIG_VERSION})", self.version));
        }
        if !(self.solver.tolerance > 0.0) {
            return bad("solver.tolerance must be positive".into());
        }
        if !(self.kappa > 0.0) {
            return bad("kappa must be positive".into());
        }
        if self.sweep.iter().any(|s| !(*s > 0.0)) {
            return bad("sweep amplitudes must be positive".into());
        }
        if !(self.classify.radius > 0.0) {
            return bad("classify.radius must be positive".into());
        }
        if self.geometry.kind == GeometryKindConfig::Hyperbolic && self.geometry.genus < 2 {
            return bad("hyperbolic geometry needs genus >= 2".into());
        }
        if self.geometry.kind == GeometryKindConfig::Torus && !(self.geometry.side > 0.0) {
            return bad("geometry.side must be positive".into());
        }
        Ok(())
    }

    pub fn genus(&self) -> usize {
        match self.geometry.kind {
            GeometryKindConfig::Hyperbolic => self.geometry.genus,
            GeometryKindConfig::Torus => 1,
        }
    }

    pub fn build_geometry(&self) -> Result<Geometry> {
        match self.geometry.kind {
            GeometryKindConfig::Hyperbolic => {
                Ok(Geometry::Hyperbolic(build_fuchsian_group_with(self.geometry.genus, self.geometry.pairing)?))
            }
            GeometryKindConfig::Torus => {
                let cell = match self.geometry.lattice {
                    Some([w1, w2]) => TorusCell::new(C::new(w1[0], w1[1]), C::new(w2[0], w2[1]), self.bundle.n)?,
                    None => TorusCell::square(self.geometry.side, self.bundle.n),
                };
                Ok(Geometry::Torus(cell))
            }
        }
    }

    pub fn character(&self, rng: &mut ChaCha8Rng) -> Result<Character> {
        let rank = 2 * self.genus();
        let sigma = if self.bundle.random_sigma {
            Character::random(rank, rng)
        } else {
            match &self.bundle.sigma {
                Some(t) if t.len() != rank => {
                    return Err(Error::Config(format!("bundle.sigma needs {rank} entries, got {}", t.len())))
                }
                Some(t) => Character::from_turns(t),
                None => Character::trivial(rank),
            }
        };
        sigma.validate()?;
        Ok(sigma)
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    /// The mesh and the reference connection `A^n` of the configured bundle.
    pub fn build_problem(&self) -> Result<(SurfaceMesh, Connection)> {
        let geometry = self.build_geometry()?;
        let mesh = build_mesh(&geometry, self.resolution)?;
        let sigma = self.character(&mut self.rng())?;
        let factor = AutomorphyFactor::for_geometry(&geometry, self.bundle.n, sigma)?;
        let conn = Connection::reference(&factor, &mesh)?;
        Ok((mesh, conn))
    }

    pub fn curve(&self) -> Result<HyperellipticCurve> {
        let pts: Vec<C> = match &self.geometry.branch_points {
            Some(p) => p.iter().map(|v| C::new(v[0], v[1])).collect(),
            None => default_branch_points(self.genus()),
        };
        HyperellipticCurve::new(&pts)
    }
}

/// `2g + 1` fixed points in general position.
pub fn default_branch_points(genus: usize) -> Vec<C> {
    let m = 2 * genus + 1;
    (0..m)
        .map(|k| {
            let t = k as f64 / (m - 1) as f64;
            C::new(-1.5 + 3.5 * t, 0.35 * (1.7 * k as f64 + 0.4).sin())
        })
        .collect()
}

/// One named measurement with its tolerance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Target value for two-sided checks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// `value < tolerance`.
    pub fn below(name: &str, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, expected: None, tolerance, pass: value < tolerance }
    }

    /// `|value - expected| <= tolerance`.
    pub fn near(name: &str, value: f64, expected: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            expected: Some(expected),
            tolerance,
            pass: (value - expected).abs() <= tolerance,
        }
    }

    /// Exact equality of counts.
    pub fn count(name: &str, value: usize, expected: usize) -> Self {
        Self::near(name, value as f64, expected as f64, 0.0)
    }

    /// `value > tolerance`.
    pub fn above(name: &str, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, expected: None, tolerance, pass: value > tolerance }
    }

    pub fn flag(name: &str, pass: bool) -> Self {
        Self { name: name.into(), value: pass as u8 as f64, expected: Some(1.0), tolerance: 0.0, pass }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub resolution: usize,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl SuiteReport {
    fn new(suite: &str, cfg: &RunConfig, checks: Vec<Check>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        Self { suite: suite.into(), resolution: cfg.resolution, seed: cfg.seed, checks, pass }
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }
}

/// Runs a named suite.
pub fn run_suite(name: &str, cfg: &RunConfig) -> Result<SuiteReport> {
    let checks = match name {
        "cocycle" => suite_cocycle(cfg)?,
        "flux" => suite_flux(cfg)?,
        "weitzenbock" => suite_weitzenbock(cfg)?,
        "hodge" => suite_hodge(cfg)?,
        "spectrum" => suite_spectrum(cfg)?,
        "theta" => suite_theta(cfg)?,
        "abel" => suite_abel(cfg)?,
        "branch" => suite_branch(cfg)?.0,
        _ => return Err(Error::Usage(format!("unknown suite '{name}'; expected one of {}", SUITES.join(", ")))),
    };
    Ok(SuiteReport::new(name, cfg, checks))
}

fn random_deck(geometry: &Geometry, rng: &mut ChaCha8Rng) -> DeckElement {
    match geometry {
        Geometry::Hyperbolic(group) => {
            let len = rng.random_range(1..=3);
            let word: Vec<Letter> = (0..len)
                .map(|_| Letter { generator: rng.random_range(0..group.rank()), inverse: rng.random::<bool>() })
                .collect();
            DeckElement::Fuchsian(group.evaluate_word(&word))
        }
        Geometry::Torus(cell) => {
            let (m1, m2) = (rng.random_range(-3..=3), rng.random_range(-3..=3));
            DeckElement::Translation { m1, m2, shift: cell.lattice_point(m1, m2) }
        }
    }
}

fn random_base_point(geometry: &Geometry, rng: &mut ChaCha8Rng) -> C {
    match geometry {
        Geometry::Hyperbolic(group) => {
            let r = (group.inradius() / 2.0).tanh() * rng.random::<f64>().sqrt();
            disk_to_half_plane(C::from_polar(r, rng.random::<f64>() * 2.0 * PI))
        }
        Geometry::Torus(cell) => cell.omega1 * rng.random::<f64>() + cell.omega2 * rng.random::<f64>(),
    }
}

fn suite_cocycle(cfg: &RunConfig) -> Result<Vec<Check>> {
    let mut rng = cfg.rng();
    let geometry = cfg.build_geometry()?;
    let sigma = cfg.character(&mut rng)?;
    let f = AutomorphyFactor::for_geometry(&geometry, cfg.bundle.n, sigma)?;
    let (mut cocycle, mut modulus): (f64, f64) = (0.0, 0.0);
    for _ in 0..cfg.solver.trials {
        let g1 = random_deck(&geometry, &mut rng);
        let g2 = random_deck(&geometry, &mut rng);
        let z = random_base_point(&geometry, &mut rng);
        cocycle = cocycle.max(f.check_cocycle(&g1, &g2, z));
        modulus = modulus.max((f.evaluate(&g1, z).norm() - 1.0).abs());
    }
    let id = match &geometry {
        Geometry::Hyperbolic(g) => DeckElement::Fuchsian(GroupElement::identity(g.rank())),
        Geometry::Torus(_) => geometry.identity(),
    };
    let z = random_base_point(&geometry, &mut rng);
    Ok(vec![
        Check::below("cocycle_residual", cocycle, 1e-10),
        Check::below("unit_modulus", modulus, 1e-12),
        Check::below("identity", (f.evaluate(&id, z) - 1.0).norm(), 1e-14),
    ])
}

/// Largest `|*F - b|` from pointwise one-ring fits.
pub fn pointwise_curvature_error(conn: &Connection, mesh: &SurfaceMesh) -> f64 {
    let cx = EdgeComplex::new(mesh);
    let b = conn.b();
    conn.curvature_pointwise(mesh, &cx).iter().map(|f| (f - b).abs()).fold(0.0, f64::max)
}

fn suite_flux(cfg: &RunConfig) -> Result<Vec<Check>> {
    let (mesh, conn) = cfg.build_problem()?;
    let n = cfg.bundle.n as f64;
    let flux = conn.total_flux(&mesh);
    let h = mesh.max_edge_length();
    let fine = pointwise_curvature_error(&conn, &mesh);
    let mut coarse_cfg = cfg.clone();
    coarse_cfg.resolution = (cfg.resolution / 2).max(4);
    let (cmesh, cconn) = coarse_cfg.build_problem()?;
    let coarse = pointwise_curvature_error(&cconn, &cmesh);
    Ok(vec![
        Check::near("total_flux", flux, n, (0.02 * n.abs().max(1.0)).min(0.05)),
        Check::below("pointwise_curvature", fine, 10.0 * h * h),
        Check::flag("pointwise_refines", fine <= coarse),
        Check::below("equivariance", conn.equivariance_residual(&mesh), 1e-8),
    ])
}

/// A smooth closed perturbation: a random combination of harmonic forms.
pub fn harmonic_perturbation(mesh: &SurfaceMesh, scale: f64, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let ops = HodgeOperators::new(mesh)?;
    let basis = harmonic_basis(&ops)?;
    let t: Vec<f64> = (0..basis.dimension()).map(|_| scale * (2.0 * rng.random::<f64>() - 1.0)).collect();
    Ok(harmonic_form(&t, &basis))
}

fn suite_weitzenbock(cfg: &RunConfig) -> Result<Vec<Check>> {
    let (mesh, conn) = cfg.build_problem()?;
    let mut rng = cfg.rng();
    let h = mesh.max_edge_length();
    let alpha = harmonic_perturbation(&mesh, 0.5, &mut rng)?;
    let twisted = conn.with_alpha(alpha, PerturbationClass::Harmonic);
    let mut checks = Vec::new();
    for (name, c) in [("reference", &conn), ("harmonic_twist", &twisted)] {
        let sp = assemble_laplacian(c, &mesh)?;
        let r = weitzenbock_residual(&sp, 20, cfg.seed)?;
        checks.push(Check::below(&format!("weitzenbock_{name}"), r, 10.0 * h * h));
    }
    Ok(checks)
}

fn suite_hodge(cfg: &RunConfig) -> Result<Vec<Check>> {
    let (mesh, conn) = cfg.build_problem()?;
    let h = mesh.max_edge_length();
    let ops = HodgeOperators::new(&mesh)?;
    let basis = harmonic_basis(&ops)?;
    let g = cfg.genus();
    let mut checks = vec![Check::count("harmonic_dimension", basis.dimension(), 2 * g)];
    let mx = maxwell_kernel_check(&ops)?;
    checks.push(Check::count("cohomology_dimension", mx.dimension, 2 * g));
    checks.push(Check::below("route_angle", mx.max_angle(), 1e-6));
    let mut rng = cfg.rng();
    let alpha: Vec<f64> = (0..ops.n_edges()).map(|_| rng.random::<f64>() - 0.5).collect();
    let dec = hodge_decomposition(&alpha, &basis, &ops)?;
    checks.push(Check::below("orthogonality", dec.orthogonality_residual(&ops), 1e-9));
    checks.push(Check::below("reconstruction", dec.reconstruction_residual(&alpha, &ops), 1e-9));

    let sp = assemble_laplacian(&conn, &mesh)?;
    let pairs = lowest_eigenpairs(&sp, 2)?;
    if (pairs[0].value - sp.b).abs() <= kernel_window(sp.h) {
        let phi = &pairs[0].section;
        let nrm = phi.norm(&sp.mass);
        let psi: Vec<C> = phi.values.iter().map(|v| v / nrm).collect();
        let cx = EdgeComplex::new(&mesh);
        let j = FieldOperators::new(&mesh, &cx, &conn).supercurrent_cochain(&psi, cx.n_edges());
        let p = project_harmonic_dual(&j, &basis);
        let pn = p.iter().map(|x| x * x).sum::<f64>().sqrt();
        checks.push(Check::below("harmonic_supercurrent", pn, 10.0 * h * h));
    }
    Ok(checks)
}

/// The independent count of holomorphic sections, where one is available:
/// lowest Landau levels on the torus, Riemann-Roch above the canonical degree.
pub fn independent_kernel_count(cfg: &RunConfig) -> Result<Option<usize>> {
    if let Some(k) = cfg.bundle.expected_kernel {
        return Ok(Some(k));
    }
    let n = cfg.bundle.n;
    match cfg.build_geometry()? {
        Geometry::Torus(cell) if n > 0 => {
            Ok(Some(LandauLevel::new(&cell, &cfg.character(&mut cfg.rng())?)?.dimension()))
        }
        Geometry::Torus(_) => Ok(None),
        Geometry::Hyperbolic(g) => {
            let g = g.genus as i64;
            Ok((n > 2 * g - 2).then(|| (n - g + 1) as usize))
        }
    }
}

fn suite_spectrum(cfg: &RunConfig) -> Result<Vec<Check>> {
    let (mesh, conn) = cfg.build_problem()?;
    let sp = assemble_laplacian(&conn, &mesh)?;
    let h = sp.h;
    let expected = independent_kernel_count(cfg)?;
    let k = expected.unwrap_or(1).max(1) + 2;
    let pairs = lowest_eigenpairs(&sp, k)?;
    let window = kernel_window(h);
    let kernel = pairs.iter().filter(|p| (p.value - sp.b).abs() <= window).count();
    let mut checks = vec![Check::near("lambda1", pairs[0].value, sp.b, 10.0 * h * h)];
    if let Some(e) = expected {
        checks.push(Check::count("kernel_multiplicity", kernel, e));
    }
    let max_res = pairs.iter().map(|p| p.residual).fold(0.0, f64::max);
    checks.push(Check::below("eigen_residual", max_res, 1e-8));
    Ok(checks)
}

fn suite_theta(cfg: &RunConfig) -> Result<Vec<Check>> {
    let ctx = period_matrix(&cfg.curve()?)?;
    let g = ctx.genus();
    let mut rng = cfg.rng();
    let lemn = period_matrix(&HyperellipticCurve::new(&[C::new(-1.0, 0.0), C::new(0.0, 0.0), C::new(1.0, 0.0)])?)?;
    // |int_{-1}^0 dx/y| = |int_0^1 dx/y| = pi / AGM(sqrt 2, 1); each cycle runs twice along its interval
    let two_k = 2.0 * PI / curve_algebra::agm(2f64.sqrt(), 1.0);
    let lemn_periods = ((lemn.a_periods[(0, 0)].norm() - two_k).abs() / two_k)
        .max((lemn.b_periods[(0, 0)].norm() - two_k).abs() / two_k);
    let (mut parity, mut period, mut quasi, mut brute): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    let params = |z: Vec<C>| curve_algebra::ThetaParams::new(z, ctx.tau.clone());
    for _ in 0..20 {
        let z: Vec<C> = (0..g).map(|_| C::new(rng.random::<f64>() - 0.5, 0.6 * (rng.random::<f64>() - 0.5))).collect();
        let t = curve_algebra::theta_full(&params(z.clone()))?;
        let scale = t.leading;
        let tm = curve_algebra::theta(&params(z.iter().map(|v| -v).collect()))?;
        parity = parity.max((tm - t.value).norm() / scale);
        for i in 0..g {
            let mut zs = z.clone();
            zs[i] += 1.0;
            period = period.max((curve_algebra::theta(&params(zs))? - t.value).norm() / scale);
        }
        let m: Vec<i64> = (0..g).map(|_| rng.random_range(-1..=1)).collect();
        quasi = quasi.max(curve_algebra::quasiperiod_residual(&ctx.tau, &z, &m)?);
        let bf = curve_algebra::theta_brute_force(&z, &ctx.tau, 12);
        brute = brute.max((bf - t.value).norm() / scale);
    }
    Ok(vec![
        Check::below("tau_symmetry", ctx.symmetry_defect(), 1e-8),
        Check::above("im_tau_min_eigenvalue", ctx.im_tau_min_eigenvalue(), 0.0),
        Check::below("lemniscatic_periods", lemn_periods, 1e-6),
        // (x, y) -> (-x, iy) is an automorphism of order 4, which forces tau = i
        Check::below("lemniscatic_tau", (lemn.tau[(0, 0)] - C::i()).norm(), 1e-6),
        Check::below("parity", parity, 1e-9),
        Check::below("periodicity", period, 1e-9),
        Check::below("quasi_periodicity", quasi, 1e-9),
        Check::below("brute_force", brute, 1e-9),
    ])
}

fn random_poly(deg: usize, rng: &mut ChaCha8Rng) -> Vec<C> {
    (0..=deg).map(|_| C::new(2.0 * rng.random::<f64>() - 1.0, 2.0 * rng.random::<f64>() - 1.0)).collect()
}

/// Abel's theorem, third-kind differentials and Baker-Akhiezer sections.
fn suite_abel(cfg: &RunConfig) -> Result<Vec<Check>> {
    let ctx = period_matrix(&cfg.curve()?)?;
    let g = ctx.genus();
    let mut rng = cfg.rng();
    let mut abel: f64 = 0.0;
    for _ in 0..20 {
        let d = principal_divisor(&ctx.curve, &random_poly(g, &mut rng), &random_poly(g, &mut rng))?;
        abel = abel.max(ctx.lattice_norm(&ctx.abel_jacobi_unreduced(&d)?));
    }
    let (mut res, mut aper): (f64, f64) = (0.0, 0.0);
    for _ in 0..3 {
        let p = random_point(&ctx.curve, 0.8, &mut rng);
        let q = random_point(&ctx.curve, 0.8, &mut rng);
        let t = third_kind_differential(&ctx, &p, &q)?;
        let r = 1e-2 * ctx.curve.scale();
        res = res.max((t.residue(&ctx, &p, r) + 1.0).norm()).max((t.residue(&ctx, &q, r) - 1.0).norm());
        aper = aper.max(t.a_periods(&ctx)?.iter().map(|v| v.norm()).fold(0.0, f64::max));
    }
    let pts: Vec<_> = (0..g).map(|_| random_point(&ctx.curve, 0.8, &mut rng)).collect();
    let d = Divisor::effective(&pts);
    let q0 = random_point(&ctx.curve, 0.8, &mut rng);
    let ba = BakerAkhiezer::new(&ctx, &d, &q0)?;
    let (a, b) = ba.characters(&ctx)?;
    let unitary = a.iter().chain(&b).map(|c| (c.norm() - 1.0).abs()).fold(0.0, f64::max);
    let (mut decay, mut vanish): (f64, f64) = (0.0, 0.0);
    for p in &pts {
        let sheet = if (ctx.curve.point(p.x, Sheet::One).y - p.y).norm() < 1e-12 { Sheet::One } else { Sheet::Two };
        let eps = 1e-3 * ctx.curve.scale();
        let v1 = ba.value(&ctx, &ctx.curve.point(p.x + eps, sheet))?.norm();
        let v2 = ba.value(&ctx, &ctx.curve.point(p.x + 0.1 * eps, sheet))?.norm();
        decay = decay.max((v1 / v2 - 10.0).abs() / 10.0);
        vanish = vanish.max(v2);
    }
    Ok(vec![
        Check::below("abel_theorem", abel, 1e-6),
        Check::below("third_kind_residues", res, 1e-8),
        Check::below("third_kind_a_periods", aper, 1e-8),
        Check::below("ba_character_unitarity", unitary, 1e-8),
        Check::below("ba_linear_decay", decay, 0.05),
        Check::below("ba_vanishing", vanish, 1e-2),
    ])
}

/// Branch summary written by `bifurcate`.
#[derive(Clone, Debug, Serialize)]
pub struct BranchSummary {
    pub resolution: usize,
    pub tolerance: f64,
    pub kappa: f64,
    pub b: f64,
    pub lambda1: f64,
    pub gap: f64,
    /// Least squares `c` in `mu - lambda1 = c s^2`.
    pub quadratic_coefficient: f64,
    pub mu_exponent: f64,
    pub mu_exponent_continuum: f64,
    pub alpha_ratio_drift: f64,
    pub psi_ratio_drift: f64,
    pub max_residual: f64,
    pub flux: Vec<f64>,
}

fn summarize(
    cfg: &RunConfig,
    red: &crate::gl_solver::ReducedSystem,
    pts: &[BranchPoint],
    mesh: &SurfaceMesh,
) -> BranchSummary {
    let rep = scaling_report(red, pts);
    let num: f64 = pts.iter().map(|p| (p.state.mu - red.lambda1) * p.s * p.s).sum();
    let den: f64 = pts.iter().map(|p| p.s.powi(4)).sum();
    let flux = pts
        .iter()
        .map(|p| red.problem.reference.with_alpha(p.state.alpha.clone(), PerturbationClass::General).total_flux(mesh))
        .collect();
    BranchSummary {
        resolution: cfg.resolution,
        tolerance: cfg.solver.tolerance,
        kappa: cfg.kappa,
        b: red.b,
        lambda1: red.lambda1,
        gap: red.gap,
        quadratic_coefficient: num / den,
        mu_exponent: rep.mu_exponent,
        mu_exponent_continuum: rep.mu_exponent_continuum,
        alpha_ratio_drift: rep.alpha_ratio_drift,
        psi_ratio_drift: rep.psi_ratio_drift,
        max_residual: rep.max_residual,
        flux,
    }
}

/// The degree rule of admissibility, as a certificate.
pub fn degree_certificate(n: i64, genus: usize) -> Option<Certificate> {
    (n < 0 || n > genus as i64).then_some(Certificate {
        degree: n,
        verdict: Verdict::NotAdmissible,
        method: Method::Degree,
        value: f64::NAN,
    })
}

/// Solves the branch of the configured instance.
pub fn solve_branch(cfg: &RunConfig) -> Result<(SurfaceMesh, crate::gl_solver::ReducedSystem, Vec<BranchPoint>)> {
    if let Some(c) = degree_certificate(cfg.bundle.n, cfg.genus()) {
        return Err(Error::NonAdmissible(format!(
            "degree {} outside [0, {}]: {}",
            cfg.bundle.n,
            cfg.genus(),
            serde_json::to_string(&c)?
        )));
    }
    let (mesh, conn) = cfg.build_problem()?;
    let red = build_reduced_system(&conn, &mesh, cfg.kappa)?;
    let pts = continue_branch(&red, &cfg.sweep)?;
    Ok((mesh, red, pts))
}

fn suite_branch(cfg: &RunConfig) -> Result<(Vec<Check>, BranchSummary)> {
    let (mesh, red, pts) = solve_branch(cfg)?;
    let s = summarize(cfg, &red, &pts, &mesh);
    let flux_drift = s.flux.iter().map(|f| (f - cfg.bundle.n as f64).abs()).fold(0.0, f64::max);
    let checks = vec![
        Check::below("max_gl_residual", s.max_residual, cfg.solver.tolerance),
        Check::near("mu_exponent", s.mu_exponent, 2.0, 0.2),
        Check::below("alpha_ratio_drift", s.alpha_ratio_drift, 0.2),
        Check::below("psi_ratio_drift", s.psi_ratio_drift, 0.2),
        Check::below("flux_along_branch", flux_drift, 1e-8),
    ];
    Ok((checks, s))
}

/// One row of the classification table.
#[derive(Clone, Debug, Serialize)]
pub struct ClassifyRow {
    pub sample: usize,
    pub degree: i64,
    pub points: Vec<(C, C)>,
    /// Reduced Abel-Jacobi image.
    pub abel_jacobi: Vec<C>,
    pub certificate: Certificate,
    /// `min |x_i - x_j| + |y_i + y_j|` over pairs, scaled: distance to the
    /// locus of divisors containing `P + iota P`.
    pub involution_distance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassifySummary {
    pub genus: usize,
    pub degree: i64,
    pub samples: usize,
    pub admissible: usize,
    pub not_admissible: usize,
    pub indeterminate: usize,
    pub admissible_fraction: f64,
    pub zero_threshold: f64,
    pub nonzero_threshold: f64,
    /// Involution distances of the non-admissible samples.
    pub non_admissible_involution_distances: Vec<f64>,
}

/// Random effective divisors of the configured degree and their verdicts.
pub fn classify(cfg: &RunConfig) -> Result<(JacobianContext, Vec<ClassifyRow>, ClassifySummary)> {
    let ctx = period_matrix(&cfg.curve()?)?;
    let n = cfg.bundle.n;
    let mut rng = cfg.rng();
    let mut rows = Vec::with_capacity(cfg.classify.samples);
    let scale = ctx.curve.scale();
    for sample in 0..cfg.classify.samples {
        let pts: Vec<_> = (0..n.max(0)).map(|_| random_point(&ctx.curve, cfg.classify.radius, &mut rng)).collect();
        let d = Divisor::effective(&pts);
        let certificate = is_admissible(&ctx, &d)?;
        let abel_jacobi = ctx.abel_jacobi(&d)?;
        let mut inv = f64::INFINITY;
        for i in 0..pts.len() {
            for j in 0..i {
                inv = inv.min(((pts[i].x - pts[j].x).norm() + (pts[i].y + pts[j].y).norm()) / scale);
            }
        }
        rows.push(ClassifyRow {
            sample,
            degree: n,
            points: pts.iter().map(|p| (p.x, p.y)).collect(),
            abel_jacobi,
            certificate,
            involution_distance: inv,
        });
    }
    let count = |v: Verdict| rows.iter().filter(|r| r.certificate.verdict == v).count();
    let admissible = count(Verdict::Admissible);
    let summary = ClassifySummary {
        genus: ctx.genus(),
        degree: n,
        samples: rows.len(),
        admissible,
        not_admissible: count(Verdict::NotAdmissible),
        indeterminate: count(Verdict::Indeterminate),
        admissible_fraction: admissible as f64 / rows.len().max(1) as f64,
        zero_threshold: curve_algebra::ZERO_THRESHOLD,
        nonzero_threshold: curve_algebra::NONZERO_THRESHOLD,
        non_admissible_involution_distances: rows
            .iter()
            .filter(|r| r.certificate.verdict == Verdict::NotAdmissible)
            .map(|r| r.involution_distance)
            .collect(),
    };
    Ok((ctx, rows, summary))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn fmt(x: f64) -> String {
    format!("{x:.12e}")
}

fn write_classify_csv(rows: &[ClassifyRow], genus: usize, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let n = rows.first().map_or(0, |r| r.points.len());
    let mut header = vec!["sample".to_string(), "degree".to_string()];
    for k in 0..n {
        header.extend([format!("x{k}_re"), format!("x{k}_im"), format!("y{k}_re"), format!("y{k}_im")]);
    }
    for i in 0..genus {
        header.extend([format!("aj{i}_re"), format!("aj{i}_im")]);
    }
    header.extend(["verdict", "method", "value", "involution_distance"].map(String::from));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.sample.to_string(), r.degree.to_string()];
        for (x, y) in &r.points {
            rec.extend([fmt(x.re), fmt(x.im), fmt(y.re), fmt(y.im)]);
        }
        for v in &r.abel_jacobi {
            rec.extend([fmt(v.re), fmt(v.im)]);
        }
        let verdict = serde_json::to_value(r.certificate.verdict)?;
        let method = serde_json::to_value(r.certificate.method)?;
        rec.extend([
            verdict.as_str().unwrap_or_default().to_string(),
            method.as_str().unwrap_or_default().to_string(),
            fmt(r.certificate.value),
            fmt(r.involution_distance),
        ]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn write_alpha_csv(alpha: &[f64], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["edge", "alpha"])?;
    for (e, a) in alpha.iter().enumerate() {
        w.write_record(&[e.to_string(), fmt(*a)])?;
    }
    w.flush()?;
    Ok(())
}

/// Subcommand names.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Verify,
    Bifurcate,
    Classify,
    Mesh,
    Spectrum,
}

/// Runs a subcommand, writing artifacts into `out`. Returns the paths written.
pub fn run(cmd: Command, cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out)?;
    let mut written = Vec::new();
    let mut emit = |name: &str| {
        let p = out.join(name);
        written.push(p.clone());
        p
    };
    match cmd {
        Command::Verify => {
            let suite =
                cfg.suite.as_deref().ok_or_else(|| Error::Usage("verify needs a suite in the config".into()))?;
            let rep = run_suite(suite, cfg)?;
            write_json(&emit(&format!("verify_{suite}.json")), &rep)?;
            if !rep.pass {
                let names: Vec<&str> = rep.failures().iter().map(|c| c.name.as_str()).collect();
                return Err(Error::Verification(format!("suite {suite}: {}", names.join(", "))));
            }
        }
        Command::Bifurcate => {
            let (mesh, red, pts) = solve_branch(cfg)?;
            write_branch_csv(&pts, &emit("branch.csv"))?;
            for (k, p) in pts.iter().enumerate() {
                p.state.psi.write_csv(&mesh, &emit(&format!("psi_{k:02}.csv")))?;
                write_alpha_csv(&p.state.alpha, &emit(&format!("alpha_{k:02}.csv")))?;
            }
            write_json(&emit("summary.json"), &summarize(cfg, &red, &pts, &mesh))?;
        }
        Command::Classify => {
            let (ctx, rows, summary) = classify(cfg)?;
            write_classify_csv(&rows, ctx.genus(), &emit("classify.csv"))?;
            write_json(&emit("jacobian.json"), &ctx.export())?;
            write_json(&emit("classify_summary.json"), &summary)?;
        }
        Command::Mesh => {
            let mesh = build_mesh(&cfg.build_geometry()?, cfg.resolution)?;
            fs::write(emit("mesh.json"), mesh.to_json()?)?;
            let mut w = csv::Writer::from_path(emit("mesh_vertices.csv"))?;
            w.write_record(["vertex", "x", "y", "area"])?;
            for (v, z) in mesh.vertices.iter().enumerate() {
                w.write_record(&[v.to_string(), fmt(z.re), fmt(z.im), fmt(mesh.vertex_areas[v])])?;
            }
            w.flush()?;
            let cx = EdgeComplex::new(&mesh);
            write_json(
                &emit("mesh_report.json"),
                &serde_json::json!({
                    "resolution": cfg.resolution,
                    "genus": mesh.genus,
                    "vertices": mesh.n_vertices(),
                    "edges": cx.n_edges(),
                    "cells": mesh.n_cells(),
                    "euler_characteristic": cx.euler_characteristic(),
                    "max_edge_length": mesh.max_edge_length(),
                    "total_area": mesh.total_area(),
                    "deck_residual": mesh.deck_residual(),
                    "pairing_residual": mesh.pairing_residual(),
                }),
            )?;
        }
        Command::Spectrum => {
            let (mesh, conn) = cfg.build_problem()?;
            let sp = assemble_laplacian(&conn, &mesh)?;
            let pairs = lowest_eigenpairs(&sp, cfg.solver.eigenpairs.max(1))?;
            write_spectrum_csv(&pairs, &emit("spectrum.csv"))?;
            let window = kernel_window(sp.h);
            write_json(
                &emit("spectrum_report.json"),
                &serde_json::json!({
                    "resolution": cfg.resolution,
                    "h": sp.h,
                    "b": sp.b,
                    "kernel_window": window,
                    "kernel_dimension": pairs.iter().filter(|p| (p.value - sp.b).abs() <= window).count(),
                    "eigenvalues": pairs.iter().map(|p| p.value).collect::<Vec<_>>(),
                }),
            )?;
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(json: &str) -> RunConfig {
        RunConfig::from_json(json).unwrap()
    }

    #[test]
    fn config_defaults_and_validation() {
        let c = cfg(r#"{"version": 1}"#);
        assert_eq!(c.genus(), 2);
        assert_eq!(c.bundle.n, 1);
        assert_eq!(c.sweep.len(), 8);
        assert!((c.sweep[7] - 0.1).abs() < 1e-12);
        for bad in [
            r#"{"version": 2}"#,
            r#"{"version": 1, "solver": {"tolerance": -1.0}}"#,
            r#"{"version": 1, "kappa": 0.0}"#,
            r#"{"version": 1, "geometry": {"genus": 1}}"#,
            r#"{"version": 1, "unknown": 3}"#,
        ] {
            assert!(matches!(RunConfig::from_json(bad), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn unknown_suite_is_a_usage_error() {
        let e = run_suite("nope", &RunConfig::default()).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn cocycle_suite_passes() {
        let mut c = RunConfig::default();
        c.bundle.random_sigma = true;
        c.solver.trials = 200;
        assert!(run_suite("cocycle", &c).unwrap().pass);
    }

    #[test]
    fn too_large_degree_is_rejected() {
        let mut c = RunConfig::default();
        c.bundle.n = 5;
        assert!(matches!(solve_branch(&c), Err(Error::NonAdmissible(_))));
    }

    #[test]
    fn classify_degree_above_genus_is_all_false() {
        let mut c = RunConfig::default();
        c.bundle.n = 3;
        c.classify.samples = 5;
        let (_, rows, s) = classify(&c).unwrap();
        assert_eq!(s.not_admissible, 5);
        assert!(rows.iter().all(|r| r.certificate.method == Method::Degree));
    }
}
