//! Verification suites: exact identities, the translative decomposition, the
//! ℝ⁴ Euler characteristic density and flag measure properties.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use boolmodel::boolsim::realization::stream;
use boolmodel::boolsim::table::mean_and_stderr;
use boolmodel::boolsim::{
    estimate_densities, exposed_boundary_measure, sample_realization, EstimatorSettings, GrainModel, RotationLaw,
    ScalingLaw, Window,
};
use boolmodel::flags::{flag_measure, mean_flag_measure};
use boolmodel::geom::{vector, Polytope, Vector};
use boolmodel::invert::euler4::predict;
use boolmodel::invert::{euler4_check, milesdavy_forward, milesdavy_invert};
use boolmodel::translative::{mixed_functional_pair, translative_oracle};
use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::Outcome;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Identities,
    Translative,
    Euler4,
    Flags,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Identities, Suite::Translative, Suite::Euler4, Suite::Flags];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Identities => "identities",
            Suite::Translative => "translative",
            Suite::Euler4 => "euler4",
            Suite::Flags => "flags",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown suite `{s}`; expected one of identities, translative, euler4, flags"))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySpec {
    pub identities: IdentitiesSpec,
    pub translative: TranslativeSpec,
    pub euler4: Euler4Spec,
    pub flags: FlagsCheckSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdentitiesSpec {
    /// Unit squares without rotation.
    pub gamma: f64,
    pub window_side: f64,
    pub reps: usize,
    /// Uniformly rotated unit squares.
    pub isotropic_gamma: f64,
    pub isotropic_window_side: f64,
    pub isotropic_reps: usize,
    /// Random density vectors per dimension for the inversion round trip.
    pub round_trips: usize,
}

impl Default for IdentitiesSpec {
    fn default() -> Self {
        Self {
            gamma: 0.5,
            window_side: 40.0,
            reps: 40,
            isotropic_gamma: 0.5,
            isotropic_window_side: 30.0,
            isotropic_reps: 40,
            round_trips: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TranslativeSpec {
    pub polygon_pairs: usize,
    pub polytope_pairs: usize,
    /// Grid cell sizes of the translation-integral oracle.
    pub resolution_2d: f64,
    pub resolution_3d: f64,
}

impl Default for TranslativeSpec {
    fn default() -> Self {
        Self {
            polygon_pairs: 20,
            polytope_pairs: 10,
            resolution_2d: 0.02,
            resolution_3d: 0.08,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Euler4Spec {
    pub gamma: f64,
    pub window_side: f64,
    pub reps: usize,
    /// Intensities of the predicted-vs-simulated plot data.
    pub plot_gammas: Vec<f64>,
    pub plot_reps: usize,
}

impl Default for Euler4Spec {
    fn default() -> Self {
        Self {
            gamma: 0.4,
            window_side: 12.0,
            reps: 40,
            plot_gammas: vec![0.2, 0.4, 0.6],
            plot_reps: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlagsCheckSpec {
    pub samples: usize,
}

impl Default for FlagsCheckSpec {
    fn default() -> Self {
        Self { samples: 2000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub reference: f64,
    /// Allowed |value − reference|, or the bound on a reported error.
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    fn within(name: impl Into<String>, value: f64, reference: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: (value - reference).abs() <= tolerance,
            value,
            reference,
            tolerance,
            detail: detail.into(),
        }
    }

    /// `error` ≤ `bound`.
    fn bounded(name: impl Into<String>, error: f64, bound: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: error <= bound,
            value: error,
            reference: 0.0,
            tolerance: bound,
            detail: detail.into(),
        }
    }
}

/// Tidy plot data.
#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Plot {
    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|x| x.to_string()).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub suite: Suite,
    pub passed: bool,
    pub checks: Vec<Check>,
    #[serde(skip)]
    pub plots: Vec<Plot>,
}

impl Report {
    fn new(suite: Suite, checks: Vec<Check>, plots: Vec<Plot>) -> Self {
        Self {
            suite,
            passed: checks.iter().all(|c| c.passed),
            checks,
            plots,
        }
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

pub fn run(suite: Suite, spec: &VerifySpec, seed: u64) -> Outcome<Report> {
    match suite {
        Suite::Identities => identities(&spec.identities, seed),
        Suite::Translative => translative(&spec.translative, seed),
        Suite::Euler4 => euler4(&spec.euler4, seed),
        Suite::Flags => flags(&spec.flags, seed),
    }
}

fn unit_squares(gamma: f64, rotation: RotationLaw) -> Outcome<GrainModel> {
    Ok(GrainModel::new(
        vec![(Polytope::centered_box(&[1.0, 1.0]), 1.0)],
        rotation,
        ScalingLaw::Fixed,
        gamma,
    )?)
}

/// Per-replication exposed boundary mass near ±e₁, ±e₂ for unit squares.
pub fn directional_boundary(gamma: f64, side: f64, reps: usize, seed: u64) -> Outcome<Vec<(Vector, f64, f64)>> {
    let model = unit_squares(gamma, RotationLaw::None)?;
    let window = Window::cube(2, side);
    let dirs = [vector(&[1.0, 0.0]), vector(&[0.0, 1.0]), vector(&[-1.0, 0.0]), vector(&[0.0, -1.0])];
    let mut per = vec![Vec::with_capacity(reps); 4];
    for r in 0..reps {
        let real = sample_realization(&model, &window, seed, r as u64)?;
        let s = exposed_boundary_measure(&real, 1);
        for (k, u) in dirs.iter().enumerate() {
            per[k].push(s.mass_near(u, 1e-9));
        }
    }
    Ok(dirs
        .into_iter()
        .zip(per)
        .map(|(u, v)| {
            let (m, se) = mean_and_stderr(&v);
            (u, m, se)
        })
        .collect())
}

/// Miles–Davy round trip on random density vectors, the volume fraction,
/// the boundary densities and the Euler characteristic density of unit
/// square models.
pub fn identities(spec: &IdentitiesSpec, seed: u64) -> Outcome<Report> {
    let mut checks = Vec::new();
    let mut rng = stream(seed, 0);
    for d in 2..=4 {
        let mut worst: f64 = 0.0;
        for _ in 0..spec.round_trips {
            let x: Vec<f64> = (0..=d).map(|_| rng.gen_range(0.05..2.0)).collect();
            let back = milesdavy_invert(&milesdavy_forward(&x))?;
            for (a, b) in back.iter().zip(&x) {
                worst = worst.max((a - b).abs() / b.abs());
            }
        }
        checks.push(Check::bounded(
            format!("miles_davy_round_trip_d{d}"),
            worst,
            1e-12,
            format!("largest relative error over {} random vectors", spec.round_trips),
        ));
    }

    let g = spec.gamma;
    let model = unit_squares(g, RotationLaw::None)?;
    let window = Window::cube(2, spec.window_side);
    let mut settings = EstimatorSettings::new(spec.reps, seed);
    settings.boundary = true;
    let table = estimate_densities(&model, &window, &[], &settings)?;
    let row = |q: &str| table.get(q, None).expect("estimator rows");
    let mut plot = Vec::new();
    let q = (-g).exp();
    let mut compare = |name: &str, quantity: &str, predicted: f64, checks: &mut Vec<Check>| {
        let r = row(quantity);
        plot.push(vec![checks.len() as f64, predicted, r.estimate, r.stderr]);
        checks.push(Check::within(
            name,
            r.estimate,
            predicted,
            3.0 * r.stderr,
            format!("{quantity}, {} replications, window side {}", spec.reps, spec.window_side),
        ));
    };
    compare("volume_fraction", "Z:V2", 1.0 - q, &mut checks);
    compare("boundary_density", "Z:V1", q * 2.0 * g, &mut checks);
    compare("euler_density_squares", "Z:V0", q * (g - g * g), &mut checks);
    for (u, m, se) in directional_boundary(g, spec.window_side, spec.reps, seed)? {
        checks.push(Check::within(
            format!("boundary_direction_{}_{}", u[0], u[1]),
            m,
            q * g,
            3.0 * se,
            "exposed boundary per unit area with this outer normal",
        ));
    }

    let gi = spec.isotropic_gamma;
    let iso = unit_squares(gi, RotationLaw::Uniform)?;
    let mut settings = EstimatorSettings::new(spec.isotropic_reps, seed ^ 1);
    settings.boundary = false;
    let t = estimate_densities(&iso, &Window::cube(2, spec.isotropic_window_side), &[], &settings)?;
    let r = t.get("Z:V0", None).expect("estimator rows");
    let v1 = 2.0 * gi;
    let predicted = (-gi).exp() * (gi - v1 * v1 / PI);
    plot.push(vec![checks.len() as f64, predicted, r.estimate, r.stderr]);
    checks.push(Check::within(
        "miles_davy_isotropic_euler",
        r.estimate,
        predicted,
        3.0 * r.stderr,
        "uniformly rotated unit squares",
    ));
    let plot = Plot {
        name: "identities".into(),
        header: ["check", "predicted", "simulated", "stderr"].map(String::from).to_vec(),
        rows: plot,
    };
    Ok(Report::new(Suite::Identities, checks, vec![plot]))
}

/// Hull of `n` points on a jittered circle.
pub fn random_polygon<R: Rng>(rng: &mut R, n: usize) -> Outcome<Polytope> {
    let pts: Vec<Vector> = (0..n)
        .map(|i| {
            let t = TAU * (i as f64 + rng.gen_range(0.0..0.8)) / n as f64;
            let r = rng.gen_range(0.4..1.2);
            vector(&[r * t.cos(), r * t.sin()])
        })
        .collect();
    Ok(Polytope::from_points(2, pts)?)
}

/// Hull of `n` uniform points in a shifted cube of side 2, with volume
/// above 0.3.
pub fn random_polytope3<R: Rng>(rng: &mut R, n: usize) -> Outcome<Polytope> {
    let shift = DVector::from_fn(3, |_, _| rng.gen_range(-0.5..0.5));
    loop {
        let pts: Vec<Vector> = (0..n)
            .map(|_| DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0)) + &shift)
            .collect();
        let p = Polytope::from_points(3, pts)?;
        if p.volume() > 0.3 {
            return Ok(p);
        }
    }
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Σ_m V_{m,d−m}(K, M) against vol(K ⊕ M*) and against the grid integral of
/// χ(K ∩ (M + x)).
pub fn translative(spec: &TranslativeSpec, seed: u64) -> Outcome<Report> {
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    let mut rng = stream(seed, 0);
    let mut pairs = Vec::new();
    for _ in 0..spec.polygon_pairs {
        let n = rng.gen_range(3..9);
        let k = random_polygon(&mut rng, n)?;
        let n = rng.gen_range(3..9);
        let m = random_polygon(&mut rng, n)?;
        pairs.push((k, m, spec.resolution_2d));
    }
    for _ in 0..spec.polytope_pairs {
        let n = rng.gen_range(5..12);
        let k = random_polytope3(&mut rng, n)?;
        let n = rng.gen_range(5..12);
        let m = random_polytope3(&mut rng, n)?;
        pairs.push((k, m, spec.resolution_3d));
    }
    for (i, (k, m, h)) in pairs.iter().enumerate() {
        let d = k.dim();
        let sum = (0..=d)
            .map(|j| mixed_functional_pair(j, k, m))
            .sum::<boolmodel::Result<f64>>()?;
        let direct = k.minkowski_sum(&m.reflect())?.volume();
        let oracle = translative_oracle(0, &[k.clone(), m.clone()], *h)?;
        let name = format!("pair{i}_d{d}");
        checks.push(Check::bounded(
            format!("{name}_exact"),
            relative(sum, direct),
            1e-9,
            "relative gap to the volume of the difference body",
        ));
        checks.push(Check::bounded(
            format!("{name}_grid"),
            relative(oracle.value, sum),
            1e-2,
            format!("relative gap to the grid integral (cell {h})"),
        ));
        rows.push(vec![i as f64, d as f64, sum, direct, oracle.value, oracle.error]);
    }
    let plot = Plot {
        name: "translative".into(),
        header: ["pair", "dim", "decomposition", "difference_body", "grid", "grid_error"]
            .map(String::from)
            .to_vec(),
        rows,
    };
    Ok(Report::new(Suite::Translative, checks, vec![plot]))
}

fn hypercubes(gamma: f64) -> Outcome<GrainModel> {
    Ok(GrainModel::deterministic(Polytope::centered_box(&[1.0; 4]), gamma)?)
}

/// The simulated Euler characteristic density of unit hypercubes against the
/// corrected prediction (within 3 SE) and the one without the V̄₂,₂ term
/// (at least 5 SE away).
pub fn euler4(spec: &Euler4Spec, seed: u64) -> Outcome<Report> {
    let window = Window::cube(4, spec.window_side);
    let model = hypercubes(1.0)?;
    let c = euler4_check(&model, spec.gamma, false, &window, &EstimatorSettings::new(spec.reps, seed))?;
    let uncorrected = predict(&model.with_gamma(spec.gamma)?, true)?;
    let detail = format!("{} replications, window side {}", spec.reps, spec.window_side);
    let checks = vec![
        Check::within("corrected_prediction", c.simulated, c.predicted, 3.0 * c.stderr, detail.clone()),
        Check {
            name: "uncorrected_prediction_rejected".into(),
            passed: (c.simulated - uncorrected).abs() >= 5.0 * c.stderr,
            value: c.simulated,
            reference: uncorrected,
            tolerance: 5.0 * c.stderr,
            detail: format!("must differ by at least the tolerance; {detail}"),
        },
    ];
    let mut rows = Vec::new();
    for (i, &g) in spec.plot_gammas.iter().enumerate() {
        let settings = EstimatorSettings::new(spec.plot_reps, seed.wrapping_add(1 + i as u64));
        let p = euler4_check(&model, g, false, &window, &settings)?;
        let u = predict(&model.with_gamma(g)?, true)?;
        rows.push(vec![g, p.predicted, u, p.simulated, p.stderr]);
    }
    let plot = Plot {
        name: "euler4".into(),
        header: ["gamma", "predicted", "uncorrected", "simulated", "stderr"]
            .map(String::from)
            .to_vec(),
        rows,
    };
    Ok(Report::new(Suite::Euler4, checks, vec![plot]))
}

/// Exactness for j = d − 1, constancy of mass/V₁ across dissimilar bodies
/// and the scaling degree of mean flag measures.
pub fn flags(spec: &FlagsCheckSpec, seed: u64) -> Outcome<Report> {
    let mut checks = Vec::new();
    let mut rng = stream(seed, 0);
    let n = spec.samples;

    let p = random_polytope3(&mut rng, 10)?;
    let top = flag_measure(&p, 2, n, seed)?;
    let s = p.area_measure_top();
    let worst = top
        .atoms
        .iter()
        .zip(&s.atoms)
        .map(|(a, b)| relative(a.weight, 0.5 * b.weight))
        .fold(0.0, f64::max);
    let exact = top.atoms.len() == s.atoms.len() && top.stderr == 0.0;
    checks.push(Check {
        name: "top_order_exact".into(),
        passed: exact && worst <= 1e-15,
        value: worst,
        reference: 0.0,
        tolerance: 1e-15,
        detail: format!("atoms {} vs facets {}, stderr {}", top.atoms.len(), s.atoms.len(), top.stderr),
    });

    let bodies = vec![
        Polytope::centered_box(&[1.0, 2.0, 0.5]),
        random_polytope3(&mut rng, 6)?,
        random_polytope3(&mut rng, 14)?,
        Polytope::from_points(
            3,
            vec![vector(&[0.0, 0.0, 0.0]), vector(&[3.0, 0.0, 0.0]), vector(&[0.0, 1.0, 0.0]), vector(&[0.0, 0.0, 0.4])],
        )?,
        random_polytope3(&mut rng, 20)?.scale(2.0),
    ];
    let mut ratios = Vec::new();
    for (i, b) in bodies.iter().enumerate() {
        let v1 = b.intrinsic_volumes()?[1];
        let f = flag_measure(b, 1, n, seed.wrapping_add(100 + i as u64))?;
        ratios.push((f.total_mass / v1, f.stderr / v1));
    }
    let w: f64 = ratios.iter().map(|(_, s)| 1.0 / (s * s)).sum();
    let pooled = ratios.iter().map(|(r, s)| r / (s * s)).sum::<f64>() / w;
    for (i, (r, s)) in ratios.iter().enumerate() {
        checks.push(Check::within(
            format!("kubota_ratio_body{i}"),
            *r,
            pooled,
            3.0 * s,
            "flag mass over V₁ against the precision-weighted mean",
        ));
    }

    let shape = Polytope::centered_box(&[1.0, 2.0, 0.7]);
    let law = ScalingLaw::Discrete {
        values: vec![0.5, 2.0],
        probabilities: vec![0.5, 0.5],
    };
    let gamma = 0.4;
    let model = GrainModel::new(vec![(shape.clone(), 1.0)], RotationLaw::None, law.clone(), gamma)?;
    for j in [1, 2] {
        let scaled = mean_flag_measure(&model, j, n, seed.wrapping_add(200 + j as u64))?;
        let fixed = flag_measure(&shape, j, n, seed.wrapping_add(300 + j as u64))?;
        let factor = gamma * law.moment(j);
        let se = (scaled.stderr.powi(2) + (factor * fixed.stderr).powi(2)).sqrt();
        checks.push(Check::within(
            format!("scaling_degree_j{j}"),
            scaled.total_mass,
            factor * fixed.total_mass,
            3.0 * se,
            "mean flag mass against γ E[ξ^j] times the flag mass of the shape",
        ));
    }
    Ok(Report::new(Suite::Flags, checks, Vec::new()))
}
