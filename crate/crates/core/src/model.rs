//! Scenario definition: time-varying linear system schedules, optics
//! parameters, power-process models, and validated configuration ingestion.
//!
//! All quantities are SI (seconds, meters, radians, watts). The attenuation
//! coefficient rho mixes optics quantities, so silent unit mixing is the main
//! configuration hazard; the loader derives rho itself and never accepts it
//! from the file.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::control::ControlLaw;
use crate::error::{Error, Result};
use crate::symmat::SymMat;

/// Station tag. Events, streams and reports are labelled with it; ordering is
/// a before b.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Station {
    #[serde(rename = "a")]
    A,
    #[serde(rename = "b")]
    B,
}

impl Station {
    pub const BOTH: [Station; 2] = [Station::A, Station::B];

    pub fn index(self) -> usize {
        match self {
            Station::A => 0,
            Station::B => 1,
        }
    }

    pub fn opposite(self) -> Station {
        match self {
            Station::A => Station::B,
            Station::B => Station::A,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Station::A => 'a',
            Station::B => 'b',
        }
    }
}

/// One interval's system matrices: dx = A x dt + B u dt + D dw, y = C x,
/// plus the derivative of C for smooth schedules (zero on piecewise-constant
/// ones).
#[derive(Debug, Clone, PartialEq)]
pub struct SystemMatrices {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub cdot: DMatrix<f64>,
}

/// Piecewise system description over [0, horizon]. Interval k is active on
/// [breakpoints[k], breakpoints[k+1]), left-closed right-open, with the final
/// interval closed at the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    breakpoints: Vec<f64>,
    pieces: Vec<SystemMatrices>,
    horizon: f64,
    state_dim: usize,
    noise_dim: usize,
}

impl Schedule {
    pub fn new(breakpoints: Vec<f64>, pieces: Vec<SystemMatrices>, horizon: f64) -> Result<Self> {
        if breakpoints.is_empty() || breakpoints.len() != pieces.len() {
            return Err(Error::SchemaViolation(format!(
                "schedule needs one piece per breakpoint, got {} breakpoints and {} pieces",
                breakpoints.len(),
                pieces.len()
            )));
        }
        if breakpoints[0] != 0.0 {
            return Err(Error::SchemaViolation(
                "first schedule breakpoint must be 0".into(),
            ));
        }
        for w in breakpoints.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::SchemaViolation(
                    "schedule breakpoints must be strictly ascending".into(),
                ));
            }
        }
        if *breakpoints.last().unwrap() >= horizon {
            return Err(Error::SchemaViolation(
                "schedule breakpoints must lie inside [0, horizon)".into(),
            ));
        }
        let n = pieces[0].a.nrows();
        let m = pieces[0].d.ncols();
        if n < 2 {
            return Err(Error::SchemaViolation(format!(
                "state dimension must be at least 2, got {n}"
            )));
        }
        for (k, p) in pieces.iter().enumerate() {
            let ok = p.a.nrows() == n
                && p.a.ncols() == n
                && p.b.nrows() == n
                && p.b.ncols() == 2
                && p.c.nrows() == 2
                && p.c.ncols() == n
                && p.d.nrows() == n
                && p.d.ncols() == m
                && p.cdot.nrows() == 2
                && p.cdot.ncols() == n;
            if !ok {
                return Err(Error::SchemaViolation(format!(
                    "inconsistent matrix dimensions in schedule piece {k}"
                )));
            }
        }
        Ok(Self {
            breakpoints,
            pieces,
            horizon,
            state_dim: n,
            noise_dim: m,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[SystemMatrices] {
        &self.pieces
    }

    /// Matrices of the interval containing t. A t exactly at an interior
    /// breakpoint selects the right interval; t = horizon selects the last.
    pub fn matrices_at(&self, t: f64) -> Result<&SystemMatrices> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::TimeOutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        let idx = self
            .breakpoints
            .partition_point(|&bp| bp <= t)
            .saturating_sub(1);
        Ok(&self.pieces[idx])
    }
}

/// Beam and detector optics. `rho` is derived as 2 / (psi_bar * f_c)^2 and
/// never read from configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct OpticsParams {
    /// Beam divergence half-angle (rad).
    pub psi_bar: f64,
    /// Focal length (m).
    pub f_c: f64,
    /// Photodetector sensitivity (events / (s W)).
    pub eta: f64,
    /// Derived attenuation coefficient (1/m^2).
    pub rho: f64,
    /// Spot-shape matrix of the focused image (m^2), 2x2 PD.
    pub spot_shape: SymMat,
}

/// Attenuation coefficient from beam divergence half-angle and focal length:
/// 2 / (psi_bar * f_c)^2.
pub fn rho_from_optics(psi_bar: f64, f_c: f64) -> Result<f64> {
    if !(psi_bar > 0.0) || !(f_c > 0.0) {
        return Err(Error::Domain(format!(
            "psi_bar and f_c must be positive, got {psi_bar}, {f_c}"
        )));
    }
    Ok(2.0 / (psi_bar * f_c).powi(2))
}

/// Received-power process model. Samples are held constant within a dt step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PowerModel {
    /// P_t = P.
    Constant { #[serde(rename = "P")] power: f64 },
    /// On-off keying: bit slots of `bit_duration`, each on with probability
    /// `duty`; P_t = P while on, 0 while off.
    Ook {
        #[serde(rename = "P")]
        power: f64,
        bit_duration: f64,
        duty: f64,
    },
    /// P_t = P_mean * F_t with log F a stationary Ornstein-Uhlenbeck path of
    /// stationary std `sigma_log` and correlation time `tau_corr`, mean set so
    /// E[F] = 1.
    LognormalFade {
        #[serde(rename = "P_mean")]
        power_mean: f64,
        sigma_log: f64,
        tau_corr: f64,
    },
}

impl PowerModel {
    fn validate(&self) -> Result<()> {
        match *self {
            PowerModel::Constant { power } => {
                if power < 0.0 {
                    return Err(Error::SchemaViolation("constant power must be >= 0".into()));
                }
            }
            PowerModel::Ook {
                power,
                bit_duration,
                duty,
            } => {
                if power < 0.0 {
                    return Err(Error::SchemaViolation("ook power must be >= 0".into()));
                }
                if !(bit_duration > 0.0) {
                    return Err(Error::SchemaViolation("ook bit_duration must be > 0".into()));
                }
                if !(0.0..=1.0).contains(&duty) {
                    return Err(Error::SchemaViolation("ook duty must lie in [0, 1]".into()));
                }
            }
            PowerModel::LognormalFade {
                power_mean,
                sigma_log,
                tau_corr,
            } => {
                if power_mean < 0.0 {
                    return Err(Error::SchemaViolation("fade P_mean must be >= 0".into()));
                }
                if sigma_log < 0.0 {
                    return Err(Error::SchemaViolation("fade sigma_log must be >= 0".into()));
                }
                if !(tau_corr > 0.0) {
                    return Err(Error::SchemaViolation("fade tau_corr must be > 0".into()));
                }
            }
        }
        Ok(())
    }

    /// Mean power of the process; zero-mean models are accepted for
    /// diagnostics (they make the objective identically zero).
    pub fn mean_power(&self) -> f64 {
        match *self {
            PowerModel::Constant { power } => power,
            PowerModel::Ook { power, duty, .. } => power * duty,
            PowerModel::LognormalFade { power_mean, .. } => power_mean,
        }
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self, PowerModel::Constant { .. })
    }
}

/// Per-station scenario data.
#[derive(Debug, Clone, PartialEq)]
pub struct StationConfig {
    pub schedule: Schedule,
    pub power: PowerModel,
    pub x0_mean: DVector<f64>,
    pub sigma0: SymMat,
}

/// Immutable, validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub horizon: f64,
    pub dt: f64,
    pub seed: u64,
    pub runs: usize,
    pub alpha_a: f64,
    pub alpha_b: f64,
    pub optics: OpticsParams,
    pub station_a: StationConfig,
    pub station_b: StationConfig,
    pub controller: ControlLaw,
}

impl ScenarioConfig {
    pub fn station(&self, s: Station) -> &StationConfig {
        match s {
            Station::A => &self.station_a,
            Station::B => &self.station_b,
        }
    }

    pub fn alpha(&self, s: Station) -> f64 {
        match s {
            Station::A => self.alpha_a,
            Station::B => self.alpha_b,
        }
    }

    /// Number of dt steps covering [0, horizon].
    pub fn step_count(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    /// Scalar parameters (a, d, spot radius^2, sigma0_a, sigma0_b) when the
    /// scenario lies in the isotropic subclass: n = 2, A = -a I, D = d I,
    /// C = I, Cdot = 0, R = r I, a single schedule piece, both stations
    /// identical in (a, d), and isotropic initial covariances.
    pub fn isotropic_parameters(&self) -> Option<IsotropicParams> {
        let mut per_station = Vec::new();
        for st in Station::BOTH {
            let sc = self.station(st);
            let sched = &sc.schedule;
            if sched.state_dim() != 2 || sched.pieces().len() != 1 {
                return None;
            }
            let p = &sched.pieces()[0];
            let tol = 1e-12;
            let minus_a = SymMat::new(p.a.clone()).ok()?.isotropic_scale(tol)?;
            if p.d.ncols() != 2 {
                return None;
            }
            let d_scale = SymMat::new(p.d.clone()).ok()?.isotropic_scale(tol)?;
            let c_scale = SymMat::new(p.c.clone()).ok()?.isotropic_scale(tol)?;
            if (c_scale - 1.0).abs() > tol || p.cdot.norm() > tol || d_scale < 0.0 {
                return None;
            }
            let sigma0 = sc.sigma0.isotropic_scale(tol)?;
            per_station.push((-minus_a, d_scale, sigma0));
        }
        let spot = self.optics.spot_shape.isotropic_scale(1e-12)?;
        let (a0, d0, s0a) = per_station[0];
        let (a1, d1, s0b) = per_station[1];
        if (a0 - a1).abs() > 1e-12 * a0.abs().max(1.0)
            || (d0 - d1).abs() > 1e-12 * d0.abs().max(1.0)
        {
            return None;
        }
        Some(IsotropicParams {
            decay: a0,
            diffusion: d0,
            spot_radius_sq: spot,
            sigma0_a: s0a,
            sigma0_b: s0b,
        })
    }
}

/// Scalar data of the isotropic subclass: A = -decay I, D = diffusion I,
/// C = I, R = spot_radius_sq I, isotropic initial covariances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsotropicParams {
    pub decay: f64,
    pub diffusion: f64,
    pub spot_radius_sq: f64,
    pub sigma0_a: f64,
    pub sigma0_b: f64,
}

// ---------------------------------------------------------------------------
// JSON document layer
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct ScenarioDoc {
    horizon: f64,
    dt: f64,
    seed: u64,
    runs: usize,
    alpha: AlphaDoc,
    optics: OpticsDoc,
    stations: StationsDoc,
    controller: ControllerDoc,
}

#[derive(Debug, Serialize, Deserialize)]
struct AlphaDoc {
    a: f64,
    b: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct OpticsDoc {
    psi_bar: f64,
    f_c: f64,
    eta: f64,
    #[serde(rename = "R")]
    spot_shape: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct StationsDoc {
    a: StationDoc,
    b: StationDoc,
}

#[derive(Debug, Serialize, Deserialize)]
struct StationDoc {
    schedule: ScheduleDoc,
    power: PowerModel,
    x0_mean: Vec<f64>,
    sigma0: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ScheduleDoc {
    breakpoints: Vec<f64>,
    pieces: Vec<PieceDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PieceDoc {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    c: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    d: Vec<Vec<f64>>,
    #[serde(rename = "Cdot", default, skip_serializing_if = "Option::is_none")]
    cdot: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ControllerDoc {
    Zero,
    Optimal,
    Proportional { gain: Vec<Vec<f64>> },
}

fn matrix_from_nested(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    if rows.is_empty() {
        return Err(Error::SchemaViolation(format!("{what}: empty matrix")));
    }
    let cols = rows[0].len();
    if cols == 0 || rows.iter().any(|r| r.len() != cols) {
        return Err(Error::SchemaViolation(format!(
            "{what}: ragged or empty matrix rows"
        )));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

fn matrix_to_nested(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn full_rank_2(c: &DMatrix<f64>) -> bool {
    let sv = c.clone().svd(false, false).singular_values;
    sv.len() == 2 && sv[1] > 1e-10 * sv[0].max(1.0)
}

fn station_from_doc(
    doc: &StationDoc,
    horizon: f64,
    tag: Station,
    controller: &ControlLaw,
) -> Result<StationConfig> {
    let mut pieces = Vec::with_capacity(doc.schedule.pieces.len());
    for p in &doc.schedule.pieces {
        let c = matrix_from_nested(&p.c, "C")?;
        let cdot = match &p.cdot {
            Some(rows) => matrix_from_nested(rows, "Cdot")?,
            None => DMatrix::zeros(c.nrows(), c.ncols()),
        };
        pieces.push(SystemMatrices {
            a: matrix_from_nested(&p.a, "A")?,
            b: matrix_from_nested(&p.b, "B")?,
            c,
            d: matrix_from_nested(&p.d, "D")?,
            cdot,
        });
    }
    let schedule = Schedule::new(doc.schedule.breakpoints.clone(), pieces, horizon)?;

    for (k, p) in schedule.pieces().iter().enumerate() {
        if !full_rank_2(&p.c) {
            return Err(Error::CNotFullRank {
                station: tag.letter(),
                at: schedule.breakpoints()[k],
            });
        }
        let cb = &p.c * &p.b;
        let det = cb[(0, 0)] * cb[(1, 1)] - cb[(0, 1)] * cb[(1, 0)];
        if det.abs() <= 1e-12 * cb.norm().powi(2).max(1.0) {
            return Err(Error::CbSingular {
                station: tag.letter(),
                at: schedule.breakpoints()[k],
            });
        }
    }

    doc.power.validate()?;

    let n = schedule.state_dim();
    if doc.x0_mean.len() != n {
        return Err(Error::SchemaViolation(format!(
            "x0_mean has {} entries, state dimension is {n}",
            doc.x0_mean.len()
        )));
    }
    let x0_mean = DVector::from_column_slice(&doc.x0_mean);
    let sigma0 = SymMat::new(matrix_from_nested(&doc.sigma0, "sigma0")?)?;
    if sigma0.dim() != n {
        return Err(Error::SchemaViolation(format!(
            "sigma0 is {}x{0}, state dimension is {n}",
            sigma0.dim()
        )));
    }
    if !sigma0.is_positive_definite() {
        return Err(Error::NotPositiveDefinite(format!(
            "sigma0 of station {}",
            tag.letter()
        )));
    }

    if matches!(controller, ControlLaw::Optimal) {
        let c0 = &schedule.pieces()[0].c;
        let proj = c0 * &x0_mean;
        let norm = proj.norm();
        if norm > 1e-12 * x0_mean.norm().max(1.0) {
            return Err(Error::InitialConditionViolatesHold {
                station: tag.letter(),
                norm,
            });
        }
    }

    Ok(StationConfig {
        schedule,
        power: doc.power.clone(),
        x0_mean,
        sigma0,
    })
}

/// Parses and validates a scenario JSON document.
pub fn load_scenario(text: &str) -> Result<ScenarioConfig> {
    let doc: ScenarioDoc = serde_json::from_str(text)?;

    if !(doc.horizon > 0.0) {
        return Err(Error::SchemaViolation("horizon must be positive".into()));
    }
    if !(doc.dt > 0.0) || doc.dt > doc.horizon / 100.0 {
        return Err(Error::SchemaViolation(format!(
            "dt must satisfy 0 < dt <= horizon/100, got dt = {}, horizon = {}",
            doc.dt, doc.horizon
        )));
    }
    if doc.runs == 0 {
        return Err(Error::SchemaViolation("runs must be at least 1".into()));
    }
    if doc.alpha.a < 0.0 || doc.alpha.b < 0.0 {
        return Err(Error::SchemaViolation("alpha weights must be >= 0".into()));
    }

    let rho = rho_from_optics(doc.optics.psi_bar, doc.optics.f_c)?;
    if !(doc.optics.eta > 0.0) {
        return Err(Error::SchemaViolation("eta must be positive".into()));
    }
    let spot_shape = SymMat::new(matrix_from_nested(&doc.optics.spot_shape, "R")?)?;
    if spot_shape.dim() != 2 || !spot_shape.is_positive_definite() {
        return Err(Error::NotPositiveDefinite("optics spot-shape matrix R".into()));
    }
    let optics = OpticsParams {
        psi_bar: doc.optics.psi_bar,
        f_c: doc.optics.f_c,
        eta: doc.optics.eta,
        rho,
        spot_shape,
    };

    let controller = match &doc.controller {
        ControllerDoc::Zero => ControlLaw::Zero,
        ControllerDoc::Optimal => ControlLaw::Optimal,
        ControllerDoc::Proportional { gain } => {
            let g = matrix_from_nested(gain, "proportional gain")?;
            if g.nrows() != 2 || g.ncols() != 2 || g.iter().any(|v| !v.is_finite()) {
                return Err(Error::SchemaViolation(
                    "proportional gain must be a finite 2x2 matrix".into(),
                ));
            }
            ControlLaw::Proportional { gain: g }
        }
    };

    let station_a = station_from_doc(&doc.stations.a, doc.horizon, Station::A, &controller)?;
    let station_b = station_from_doc(&doc.stations.b, doc.horizon, Station::B, &controller)?;

    Ok(ScenarioConfig {
        horizon: doc.horizon,
        dt: doc.dt,
        seed: doc.seed,
        runs: doc.runs,
        alpha_a: doc.alpha.a,
        alpha_b: doc.alpha.b,
        optics,
        station_a,
        station_b,
        controller,
    })
}

fn station_to_doc(sc: &StationConfig) -> StationDoc {
    StationDoc {
        schedule: ScheduleDoc {
            breakpoints: sc.schedule.breakpoints().to_vec(),
            pieces: sc
                .schedule
                .pieces()
                .iter()
                .map(|p| PieceDoc {
                    a: matrix_to_nested(&p.a),
                    b: matrix_to_nested(&p.b),
                    c: matrix_to_nested(&p.c),
                    d: matrix_to_nested(&p.d),
                    cdot: if p.cdot.norm() == 0.0 {
                        None
                    } else {
                        Some(matrix_to_nested(&p.cdot))
                    },
                })
                .collect(),
        },
        power: sc.power.clone(),
        x0_mean: sc.x0_mean.iter().copied().collect(),
        sigma0: matrix_to_nested(sc.sigma0.matrix()),
    }
}

/// Renders a configuration back to its JSON document form; loading the output
/// yields an equal configuration.
pub fn render_scenario(cfg: &ScenarioConfig) -> String {
    let doc = ScenarioDoc {
        horizon: cfg.horizon,
        dt: cfg.dt,
        seed: cfg.seed,
        runs: cfg.runs,
        alpha: AlphaDoc {
            a: cfg.alpha_a,
            b: cfg.alpha_b,
        },
        optics: OpticsDoc {
            psi_bar: cfg.optics.psi_bar,
            f_c: cfg.optics.f_c,
            eta: cfg.optics.eta,
            spot_shape: matrix_to_nested(cfg.optics.spot_shape.matrix()),
        },
        stations: StationsDoc {
            a: station_to_doc(&cfg.station_a),
            b: station_to_doc(&cfg.station_b),
        },
        controller: match &cfg.controller {
            ControlLaw::Zero => ControllerDoc::Zero,
            ControlLaw::Optimal => ControllerDoc::Optimal,
            ControlLaw::Proportional { gain } => ControllerDoc::Proportional {
                gain: matrix_to_nested(gain),
            },
        },
    };
    serde_json::to_string_pretty(&doc).expect("scenario serialization cannot fail")
}
