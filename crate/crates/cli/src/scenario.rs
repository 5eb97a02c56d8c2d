//! Scenario files: schema, unit conversion and validation.

use std::path::Path;

use darwinics::constrained::HamiltonianForm;
use darwinics::model::{LineCharge, LineSolenoid, MagneticDipole, PointCharge, System};
use darwinics::sim::{Body, BodySpec, DynamicalSystem, OdeConfig, Provider, ScatterMode, ScatteringSetup};
use darwinics::{Context, MomentDensity, Units, Vec3};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Description of the motion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Constrained,
    Unconstrained,
    Hamiltonian,
    HiddenMomentum,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Constrained => "constrained",
            Mode::Unconstrained => "unconstrained",
            Mode::Hamiltonian => "hamiltonian",
            Mode::HiddenMomentum => "hidden-momentum",
        }
    }

    pub fn provider(self, system: System) -> CliResult<Provider> {
        match (system, self) {
            (System::Feynman, Mode::Constrained) => Ok(Provider::Darwin),
            (System::Feynman, m) => Err(CliError::validation(
                "mode",
                format!("'{}' is not available for feynman; two point charges only have the constrained (darwin) description", m.name()),
            )),
            (_, Mode::Constrained) => Ok(Provider::ConstrainedLagrangian),
            (_, Mode::Unconstrained) => Ok(Provider::UnconstrainedForce),
            (System::AharonovCasher, Mode::Hamiltonian) => Ok(Provider::Hamiltonian),
            (System::AharonovCasher, Mode::HiddenMomentum) => Ok(Provider::HiddenMomentum),
            (s, m) => Err(CliError::validation("mode", format!("'{}' is only available for ac, not {s}", m.name()))),
        }
    }
}

/// Units the scenario's numbers are given in. SI input is converted to
/// Gaussian at ingestion and results are written back in SI.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnitSystem {
    #[default]
    Gaussian,
    Si,
    Nondimensional {
        c: f64,
        #[serde(default = "one")]
        hbar: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

/// statC per C
const STATCOULOMB_PER_COULOMB: f64 = 2.997_924_58e9;

/// Physical quantity kinds that leave the tool.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Time,
    Length,
    Velocity,
    Momentum,
    Energy,
    Force,
    Angle,
    Dimensionless,
}

impl UnitSystem {
    /// Factor taking a core (Gaussian or nondimensional) value to output units.
    pub fn factor(&self, kind: Kind) -> f64 {
        match (self, kind) {
            (UnitSystem::Si, Kind::Length | Kind::Velocity) => 1e-2,
            (UnitSystem::Si, Kind::Momentum | Kind::Force) => 1e-5,
            (UnitSystem::Si, Kind::Energy) => 1e-7,
            _ => 1.0,
        }
    }

    pub fn label(&self, kind: Kind) -> &'static str {
        match kind {
            Kind::Angle => return "rad",
            Kind::Dimensionless => return "1",
            _ => {}
        }
        match self {
            UnitSystem::Nondimensional { .. } => "nondimensional",
            UnitSystem::Gaussian => match kind {
                Kind::Time => "s",
                Kind::Length => "cm",
                Kind::Velocity => "cm/s",
                Kind::Momentum => "g*cm/s",
                Kind::Energy => "erg",
                Kind::Force => "dyn",
                _ => unreachable!(),
            },
            UnitSystem::Si => match kind {
                Kind::Time => "s",
                Kind::Length => "m",
                Kind::Velocity => "m/s",
                Kind::Momentum => "kg*m/s",
                Kind::Energy => "J",
                Kind::Force => "N",
                _ => unreachable!(),
            },
        }
    }

    fn units(&self) -> CliResult<Units> {
        match *self {
            UnitSystem::Gaussian | UnitSystem::Si => Ok(Units::gaussian()),
            UnitSystem::Nondimensional { c, hbar } => Units::nondimensional(c, hbar).map_err(|e| CliError::invalid("units", e)),
        }
    }

    fn to_core(&self, kind: Kind, v: f64) -> f64 {
        v / self.factor(kind)
    }

    fn body_to_core(&self, b: &ScenarioBody) -> ScenarioBody {
        if *self != UnitSystem::Si {
            return b.clone();
        }
        let len = |v: Vec3| v * 1e2;
        let body = match b.body {
            Body::Charge(c) => Body::Charge(PointCharge::new(c.charge * STATCOULOMB_PER_COULOMB, c.mass * 1e3, len(c.position), len(c.velocity))),
            Body::Dipole(d) => Body::Dipole(MagneticDipole::new(d.moment * 1e3, d.mass * 1e3, len(d.position), len(d.velocity))),
            Body::Solenoid(s) => Body::Solenoid(LineSolenoid::new(s.flux * 1e8, len(s.axis_point), s.mass_per_length * 10.0, len(s.velocity))),
            Body::Wire(w) => Body::Wire(LineCharge::new(
                w.density * STATCOULOMB_PER_COULOMB * 1e-2,
                len(w.axis_point),
                w.mass_per_length * 10.0,
                len(w.velocity),
            )),
        };
        ScenarioBody { body, line_length: b.line_length.map(|l| l * 1e2), ..b.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioBody {
    pub name: String,
    #[serde(flatten)]
    pub body: Body,
    #[serde(default = "yes")]
    pub dynamic: bool,
    /// Length of a line source, which sets its mass.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line_length: Option<f64>,
}

fn default_samples() -> usize {
    201
}

fn default_cutoff() -> f64 {
    200.0
}

fn default_history() -> usize {
    401
}

fn impulse_approx() -> ScatterMode {
    ScatterMode::ImpulseApprox
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RunSpec {
    Trajectory {
        #[serde(default)]
        t_start: f64,
        t_end: f64,
        #[serde(default = "default_samples")]
        samples: usize,
    },
    Scattering {
        impact_parameter: f64,
        speed: f64,
        #[serde(default = "impulse_approx")]
        mode: ScatterMode,
        /// Start and end separation in impact parameters.
        #[serde(default = "default_cutoff")]
        cutoff: f64,
        #[serde(default = "yes")]
        extrapolate: bool,
        /// Samples of the straight-path force history.
        #[serde(default = "default_history")]
        history_samples: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Output {
    Trajectory,
    Ledger,
    Forces,
}

fn default_outputs() -> Vec<Output> {
    vec![Output::Trajectory, Output::Ledger, Output::Forces]
}

/// Grid of scattering runs. An absent list takes the base scenario's value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub impact_parameter: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<Mode>>,
    /// Multiplier on the target's source strength (charge, moment, flux or line density).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub system: System,
    pub mode: Mode,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub units: UnitSystem,
    pub bodies: Vec<ScenarioBody>,
    pub run: RunSpec,
    #[serde(default)]
    pub integrator: OdeConfig,
    #[serde(default)]
    pub hamiltonian_form: HamiltonianForm,
    #[serde(default)]
    pub moment_density: MomentDensity,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<Output>,
    /// Seeds randomized probe points only; runs themselves are deterministic.
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

/// A scenario in core units, ready to run.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub system: DynamicalSystem,
    pub run: RunSpec,
    pub integrator: OdeConfig,
}

impl Resolved {
    pub fn scattering_setup(&self) -> Option<ScatteringSetup> {
        match self.run {
            RunSpec::Scattering { impact_parameter, speed, cutoff, extrapolate, .. } => {
                let mut s = ScatteringSetup::new(impact_parameter, speed);
                s.cutoff = cutoff;
                s.extrapolate = extrapolate;
                s.tol = self.integrator.rtol;
                Some(s)
            }
            RunSpec::Trajectory { .. } => None,
        }
    }
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path, text: &str) -> CliResult<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        let message = if field == "." { inner.to_string() } else { format!("field `{field}`: {inner}") };
        CliError::Parse { path: path.to_path_buf(), message }
    })
}

impl Scenario {
    /// Reads a scenario file, or the scenario recorded in a run manifest.
    pub fn load(path: &Path) -> CliResult<Scenario> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
        let value: serde_json::Value = parse_json(path, &text)?;
        if value.get("manifest_version").is_some() {
            let scenario = value.get("scenario").cloned().unwrap_or(serde_json::Value::Null);
            return parse_json(path, &scenario.to_string());
        }
        parse_json(path, &text)
    }

    pub fn with_tol(mut self, tol: Option<f64>) -> Self {
        if let Some(t) = tol {
            self.integrator.rtol = t;
            self.integrator.atol = t;
        }
        self
    }

    pub fn resolve(&self) -> CliResult<Resolved> {
        self.resolve_with(self.mode, 1.0)
    }

    /// Resolves with another mode and the target's source strength scaled.
    pub fn resolve_with(&self, mode: Mode, coupling: f64) -> CliResult<Resolved> {
        let provider = mode.provider(self.system)?;
        let units = self.units.units()?;
        if self.bodies.len() != 2 {
            return Err(CliError::validation("bodies", format!("expected 2 bodies, got {}", self.bodies.len())));
        }
        if !(self.integrator.rtol > 0.0) {
            return Err(CliError::validation("integrator.rtol", format!("must be positive, got {}", self.integrator.rtol)));
        }
        let mut bodies: Vec<BodySpec> = self
            .bodies
            .iter()
            .map(|b| {
                let b = self.units.body_to_core(b);
                BodySpec { name: b.name, body: b.body, dynamic: b.dynamic, line_length: b.line_length.unwrap_or(1.0) }
            })
            .collect();
        if bodies[0].name == bodies[1].name {
            return Err(CliError::validation("bodies", format!("duplicate body name '{}'", bodies[0].name)));
        }
        scale_source(&mut bodies[1].body, coupling);
        let run = match self.run.clone() {
            RunSpec::Trajectory { t_start, t_end, samples } => {
                if !(t_end > t_start) {
                    return Err(CliError::validation("run.t_end", format!("must exceed t_start ({t_start}), got {t_end}")));
                }
                if samples < 2 {
                    return Err(CliError::validation("run.samples", "need at least 2 samples"));
                }
                RunSpec::Trajectory { t_start, t_end, samples }
            }
            RunSpec::Scattering { impact_parameter, speed, mode, cutoff, extrapolate, history_samples } => {
                if !(impact_parameter > 0.0) {
                    return Err(CliError::validation("run.impact_parameter", format!("must be positive, got {impact_parameter}")));
                }
                if !(speed > 0.0) {
                    return Err(CliError::validation("run.speed", format!("must be positive, got {speed}")));
                }
                if !(cutoff >= 20.0) {
                    return Err(CliError::validation("run.cutoff", format!("must be at least 20 impact parameters, got {cutoff}")));
                }
                RunSpec::Scattering {
                    impact_parameter: self.units.to_core(Kind::Length, impact_parameter),
                    speed: self.units.to_core(Kind::Velocity, speed),
                    mode,
                    cutoff,
                    extrapolate,
                    history_samples,
                }
            }
        };
        let length = characteristic_length(&bodies, &run);
        let context = Context::new(units, length).with_moment_density(self.moment_density);
        let mut system = DynamicalSystem::new(context, bodies, provider).with_form(self.hamiltonian_form);
        if let RunSpec::Scattering { .. } = run {
            // the projectile's state is set by the run
            let target = system.bodies[1].body.position();
            let (b, v) = match run {
                RunSpec::Scattering { impact_parameter, speed, .. } => (impact_parameter, speed),
                _ => unreachable!(),
            };
            system.bodies[0].body.set_state(target + Vec3::new(0.0, b, 0.0), Vec3::X * v);
        }
        let pairing = system.pairing().map_err(|e| CliError::invalid("bodies", e))?;
        if pairing.system() != self.system {
            return Err(CliError::validation(
                "bodies",
                format!("a {} system needs {}, got a {} pairing", self.system, expected_bodies(self.system), pairing.system()),
            ));
        }
        system.validate().map_err(|e| CliError::invalid("bodies", e))?;
        Ok(Resolved { system, run, integrator: self.integrator })
    }
}

fn expected_bodies(s: System) -> &'static str {
    match s {
        System::Feynman => "two charges",
        System::MottSchwinger => "a charge and a dipole",
        System::AharonovBohm => "a charge and a solenoid",
        System::AharonovCasher => "a dipole and a wire",
    }
}

fn scale_source(b: &mut Body, k: f64) {
    match b {
        Body::Charge(c) => c.charge *= k,
        Body::Dipole(d) => d.moment = d.moment * k,
        Body::Solenoid(s) => s.flux *= k,
        Body::Wire(w) => w.density *= k,
    }
}

fn characteristic_length(bodies: &[BodySpec], run: &RunSpec) -> f64 {
    if let RunSpec::Scattering { impact_parameter, .. } = run {
        return *impact_parameter;
    }
    let d = bodies[0].body.position() - bodies[1].body.position();
    let d = if bodies.iter().any(|b| b.body.is_line()) { d.in_plane() } else { d };
    let n = d.norm();
    if n > 0.0 {
        n
    } else {
        1.0
    }
}
