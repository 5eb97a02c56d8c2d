//! Back-of-envelope feasibility numbers for flux-line and neutron experiments, in SI.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dims::{si, Dim, Quantity};
use crate::error::{Error, Result};

/// Electron biprism experiment around a small solenoid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolenoidExperiment {
    /// eV
    pub electron_energy: f64,
    /// m
    pub loop_diameter: f64,
    /// m
    pub interaction_length: f64,
    /// m
    pub wire_diameter: f64,
    /// A
    pub current: f64,
    /// m⁻³
    pub carrier_density: f64,
    /// K
    pub temperature: f64,
    /// Distance between the beam electron and the coil electron, m.
    pub pass_distance: f64,
}

impl Default for SolenoidExperiment {
    /// 40 keV electrons, 36 μm coil of 5 μm tungsten wire at room temperature.
    /// Current and pass distance are inferred, not measured.
    fn default() -> Self {
        SolenoidExperiment {
            electron_energy: 40e3,
            loop_diameter: 36e-6,
            interaction_length: 108e-6,
            wire_diameter: 5e-6,
            current: 16e-6,
            carrier_density: 6.3e28,
            temperature: 300.0,
            pass_distance: 36e-6,
        }
    }
}

impl SolenoidExperiment {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("electron_energy", self.electron_energy),
            ("loop_diameter", self.loop_diameter),
            ("interaction_length", self.interaction_length),
            ("current", self.current),
            ("carrier_density", self.carrier_density),
            ("temperature", self.temperature),
            ("pass_distance", self.pass_distance),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.wire_diameter.is_finite() && self.wire_diameter >= 0.0) {
            return Err(Error::InvalidInput(format!("wire_diameter must be non-negative, got {}", self.wire_diameter)));
        }
        Ok(())
    }

    fn length(v: f64) -> Quantity {
        Quantity::new(v, Dim::LENGTH)
    }

    pub fn wire_area(&self) -> Quantity {
        let r = Self::length(self.wire_diameter / 2.0);
        r.powi(2) * PI
    }
}

/// Neutron pictured as a charge circulating on a tiny loop, passing a line charge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NeutronParameters {
    /// J/T
    pub moment: f64,
    /// m
    pub loop_radius: f64,
    /// s
    pub interaction_time: f64,
}

impl Default for NeutronParameters {
    fn default() -> Self {
        NeutronParameters { moment: 1e-26, loop_radius: 1e-15, interaction_time: 1e-5 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CarrierSpeed {
    Drift,
    Thermal,
}

/// Relativistic speed of an electron with the given kinetic energy.
pub fn electron_speed(kinetic: Quantity) -> Result<Quantity> {
    let rest = si::ELECTRON_MASS * si::SPEED_OF_LIGHT.powi(2);
    let g1 = (kinetic.expect(Dim::ENERGY)? / rest).get(Dim::NONE)?;
    if g1 < 0.0 {
        return Err(Error::InvalidInput("negative kinetic energy".into()));
    }
    let gamma = 1.0 + g1;
    let beta = (g1 * (gamma + 1.0)).sqrt() / gamma;
    Ok(si::SPEED_OF_LIGHT * beta)
}

pub fn interaction_time(exp: &SolenoidExperiment) -> Result<Quantity> {
    let energy = si::ELECTRON_VOLT * exp.electron_energy;
    let v = electron_speed(energy)?;
    (Quantity::new(exp.interaction_length, Dim::LENGTH) / v).expect(Dim::TIME)
}

/// I/(nAq)
pub fn drift_velocity(current: Quantity, density: Quantity, area: Quantity) -> Result<Quantity> {
    let v = current.expect(Dim::CURRENT)?
        / (density.expect(Dim::NUMBER_DENSITY)? * area.expect(Dim::AREA)? * si::ELEMENTARY_CHARGE);
    v.expect(Dim::VELOCITY)
}

/// √(2k_BT/m_e)
pub fn thermal_velocity(temperature: Quantity) -> Result<Quantity> {
    let v2 = si::BOLTZMANN * temperature.expect(Dim::TEMPERATURE)? * 2.0 / si::ELECTRON_MASS;
    v2.sqrt()?.expect(Dim::VELOCITY)
}

pub fn thermal_displacement(temperature: Quantity, time: Quantity) -> Result<Quantity> {
    (thermal_velocity(temperature)? * time.expect(Dim::TIME)?).expect(Dim::LENGTH)
}

/// Field of the beam electron at distance r, μ₀qv/(4πr²).
pub fn passing_field(electron_speed: Quantity, distance: Quantity) -> Result<Quantity> {
    let b = si::VACUUM_PERMEABILITY * si::ELEMENTARY_CHARGE * electron_speed.expect(Dim::VELOCITY)?
        / distance.expect(Dim::LENGTH)?.powi(2)
        * (1.0 / (4.0 * PI));
    b.expect(Dim::MAGNETIC_FIELD)
}

pub fn carrier_speed(exp: &SolenoidExperiment, choice: CarrierSpeed) -> Result<Quantity> {
    match choice {
        CarrierSpeed::Drift => drift_velocity(
            Quantity::new(exp.current, Dim::CURRENT),
            Quantity::new(exp.carrier_density, Dim::NUMBER_DENSITY),
            exp.wire_area(),
        ),
        CarrierSpeed::Thermal => thermal_velocity(Quantity::new(exp.temperature, Dim::TEMPERATURE)),
    }
}

/// Force q·v_carrier·B on a coil electron from the beam electron at `exp.pass_distance`.
pub fn lorentz_force_on_coil_electron(exp: &SolenoidExperiment, choice: CarrierSpeed) -> Result<Quantity> {
    lorentz_force_at(exp, choice, exp.pass_distance)
}

pub fn lorentz_force_at(exp: &SolenoidExperiment, choice: CarrierSpeed, distance: f64) -> Result<Quantity> {
    let ve = electron_speed(si::ELECTRON_VOLT * exp.electron_energy)?;
    let b = passing_field(ve, Quantity::new(distance, Dim::LENGTH))?;
    (si::ELEMENTARY_CHARGE * carrier_speed(exp, choice)? * b).expect(Dim::FORCE)
}

/// mv²/r
pub fn centripetal_force(mass: Quantity, speed: Quantity, radius: Quantity) -> Result<Quantity> {
    let f = mass.expect(Dim::MASS)? * speed.expect(Dim::VELOCITY)?.powi(2) / radius.expect(Dim::LENGTH)?;
    f.expect(Dim::FORCE)
}

/// Period of an elementary charge on a loop of radius r with moment μ = (q/T)πr².
pub fn neutron_circulation_period(moment: Quantity, radius: Quantity) -> Result<Quantity> {
    let t = si::ELEMENTARY_CHARGE * radius.expect(Dim::LENGTH)?.powi(2) * PI / moment.expect(Dim::MAGNETIC_MOMENT)?;
    t.expect(Dim::TIME)
}

/// ½(F/m)t²
pub fn driven_displacement(force: Quantity, mass: Quantity, time: Quantity) -> Result<Quantity> {
    let x = force.expect(Dim::FORCE)? / mass.expect(Dim::MASS)? * time.expect(Dim::TIME)?.powi(2) * 0.5;
    x.expect(Dim::LENGTH)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ConstrainedPlausible,
    UnconstrainedPlausible,
    Ambiguous,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::ConstrainedPlausible => "constrained-plausible",
            Verdict::UnconstrainedPlausible => "unconstrained-plausible",
            Verdict::Ambiguous => "ambiguous",
        }
    }
}

/// Ratio of carrier motion to the confining scale: ≫ 1 means constraints act.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintVerdict {
    pub verdict: Verdict,
    pub ratio: f64,
    pub description: String,
    pub warning: Option<String>,
}

impl ConstraintVerdict {
    pub fn line(&self, label: &str) -> String {
        let mut out = format!("{label}: {} ({} = {:.3e})\n", self.verdict.as_str(), self.description, self.ratio);
        if let Some(w) = &self.warning {
            let _ = writeln!(out, "  warning: {w}");
        }
        out
    }
}

pub const CONSTRAINED_ABOVE: f64 = 10.0;
pub const UNCONSTRAINED_BELOW: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Setup {
    Solenoid(SolenoidExperiment),
    Neutron(NeutronParameters),
}

fn classify(ratio: f64) -> Verdict {
    if ratio > CONSTRAINED_ABOVE {
        Verdict::ConstrainedPlausible
    } else if ratio < UNCONSTRAINED_BELOW {
        Verdict::UnconstrainedPlausible
    } else {
        Verdict::Ambiguous
    }
}

pub fn constraint_verdict(setup: &Setup) -> Result<ConstraintVerdict> {
    match setup {
        Setup::Solenoid(exp) => {
            exp.validate()?;
            let t = interaction_time(exp)?;
            let dx = thermal_displacement(Quantity::new(exp.temperature, Dim::TEMPERATURE), t)?;
            let description = "thermal displacement during the interaction / wire diameter".to_string();
            if exp.wire_diameter == 0.0 {
                return Ok(ConstraintVerdict {
                    verdict: Verdict::Ambiguous,
                    ratio: f64::INFINITY,
                    description,
                    warning: Some("zero wire diameter: no confining scale".into()),
                });
            }
            let ratio = dx.value / exp.wire_diameter;
            Ok(ConstraintVerdict { verdict: classify(ratio), ratio, description, warning: None })
        }
        Setup::Neutron(n) => {
            let period = neutron_circulation_period(
                Quantity::new(n.moment, Dim::MAGNETIC_MOMENT),
                Quantity::new(n.loop_radius, Dim::LENGTH),
            )?;
            let ratio = n.interaction_time / period.value;
            if !(ratio.is_finite() && ratio > 0.0) {
                return Err(Error::InvalidInput(format!("degenerate neutron parameters: ratio {ratio}")));
            }
            Ok(ConstraintVerdict {
                verdict: classify(ratio),
                ratio,
                description: "interaction time / circulation period".into(),
                warning: None,
            })
        }
    }
}

/// Where an entry's number comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Basis {
    /// Compared with a published value.
    Reference,
    /// Formula evaluation with no published counterpart.
    Computed,
    /// An input chosen so that published outputs come out right.
    Inferred,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub name: String,
    pub value: f64,
    pub unit: String,
    pub reference: Option<f64>,
    pub basis: Basis,
    /// Published value known not to follow from its own formula.
    pub discrepant: bool,
    pub note: String,
}

/// Tolerance on |log₁₀(value/reference)|.
pub const ORDER_TOLERANCE: f64 = 0.7;

impl Estimate {
    fn new(name: &str, q: Quantity, basis: Basis) -> Self {
        Estimate {
            name: name.into(),
            value: q.value,
            unit: q.dim.to_string(),
            reference: None,
            basis,
            discrepant: false,
            note: String::new(),
        }
    }

    fn reference(mut self, r: f64) -> Self {
        self.reference = Some(r);
        self.basis = Basis::Reference;
        self
    }

    fn discrepant(mut self, note: &str) -> Self {
        self.discrepant = true;
        self.note = note.into();
        self
    }

    fn note(mut self, note: &str) -> Self {
        self.note = note.into();
        self
    }

    pub fn log10_ratio(&self) -> Option<f64> {
        self.reference.map(|r| (self.value / r).log10())
    }

    /// `None` when there is nothing to compare, or the reference is known to be off.
    pub fn within_order(&self) -> Option<bool> {
        if self.discrepant {
            return None;
        }
        self.log10_ratio().map(|l| l.abs() < ORDER_TOLERANCE)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub solenoid: SolenoidExperiment,
    pub neutron: NeutronParameters,
    pub entries: Vec<Estimate>,
    pub solenoid_verdict: ConstraintVerdict,
    pub neutron_verdict: ConstraintVerdict,
}

impl EstimateReport {
    pub fn get(&self, name: &str) -> Option<&Estimate> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// Entries with a usable reference that miss it.
    pub fn misses(&self) -> Vec<&Estimate> {
        self.entries.iter().filter(|e| e.within_order() == Some(false)).collect()
    }

    pub fn to_table(&self) -> String {
        let mut out = self.entries_table();
        for (label, v) in [("solenoid", &self.solenoid_verdict), ("neutron", &self.neutron_verdict)] {
            out.push_str(&v.line(label));
        }
        out
    }

    /// Aligned table of the entries with their notes, no verdicts.
    pub fn entries_table(&self) -> String {
        let rows: Vec<[String; 6]> = self
            .entries
            .iter()
            .map(|e| {
                let reference = e.reference.map_or("-".into(), |r| format!("{r:.2e}"));
                let check = match (e.discrepant, e.within_order()) {
                    (true, _) => "flagged".to_string(),
                    (_, Some(true)) => "ok".into(),
                    (_, Some(false)) => "MISS".into(),
                    (_, None) => "-".into(),
                };
                let basis = match e.basis {
                    Basis::Reference => "reference",
                    Basis::Computed => "computed",
                    Basis::Inferred => "inferred",
                };
                [e.name.clone(), format!("{:.4e}", e.value), e.unit.clone(), reference, basis.into(), check]
            })
            .collect();
        let header = ["quantity", "value", "unit", "published", "basis", "check"];
        let mut widths = header.map(str::len);
        for r in &rows {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let mut out = String::new();
        let line = |out: &mut String, cells: &[String]| {
            let padded: Vec<String> = cells.iter().zip(widths).map(|(c, w)| format!("{c:<w$}")).collect();
            let _ = writeln!(out, "{}", padded.join("  ").trim_end());
        };
        line(&mut out, &header.map(String::from));
        line(&mut out, &widths.map(|w| "-".repeat(w)));
        for r in &rows {
            line(&mut out, r);
        }
        for e in self.entries.iter().filter(|e| !e.note.is_empty()) {
            let _ = writeln!(out, "  {}: {}", e.name, e.note);
        }
        out
    }
}

pub fn estimate_report(exp: &SolenoidExperiment, neutron: &NeutronParameters) -> Result<EstimateReport> {
    exp.validate()?;
    let temperature = Quantity::new(exp.temperature, Dim::TEMPERATURE);
    let t = interaction_time(exp)?;
    let ve = electron_speed(si::ELECTRON_VOLT * exp.electron_energy)?;
    let v_drift = carrier_speed(exp, CarrierSpeed::Drift)?;
    let v_th = thermal_velocity(temperature)?;
    let dx_th = thermal_displacement(temperature, t)?;
    let f_drift = lorentz_force_on_coil_electron(exp, CarrierSpeed::Drift)?;
    let f_half = lorentz_force_at(exp, CarrierSpeed::Drift, exp.loop_diameter / 2.0)?;
    let f_thermal = lorentz_force_on_coil_electron(exp, CarrierSpeed::Thermal)?;
    let dx_int = driven_displacement(f_thermal, si::ELECTRON_MASS, t)?;
    let loop_radius = Quantity::new(exp.loop_diameter / 2.0, Dim::LENGTH);
    let f_cent = centripetal_force(si::ELECTRON_MASS, v_drift, loop_radius)?;
    let period = neutron_circulation_period(
        Quantity::new(neutron.moment, Dim::MAGNETIC_MOMENT),
        Quantity::new(neutron.loop_radius, Dim::LENGTH),
    )?;

    let entries = vec![
        Estimate::new("current", Quantity::new(exp.current, Dim::CURRENT), Basis::Inferred)
            .note("chosen so that the drift speed comes out at 80 um/s"),
        Estimate::new("pass_distance", Quantity::new(exp.pass_distance, Dim::LENGTH), Basis::Inferred)
            .note("beam-to-coil-electron distance; one loop diameter"),
        Estimate::new("electron_speed", ve, Basis::Computed),
        Estimate::new("interaction_time", t, Basis::Computed).reference(1e-12),
        Estimate::new("drift_velocity", v_drift, Basis::Computed).reference(80e-6),
        Estimate::new("thermal_velocity", v_th, Basis::Computed)
            .reference(9.5e5)
            .discrepant("published value is ten times the formula value"),
        Estimate::new("thermal_displacement", dx_th, Basis::Computed).reference(87e-9),
        Estimate::new("lorentz_force", f_drift, Basis::Computed).reference(1e-32),
        Estimate::new("lorentz_force_half_diameter", f_half, Basis::Computed)
            .note("same force with the beam at half a loop diameter"),
        Estimate::new("lorentz_force_thermal", f_thermal, Basis::Computed),
        Estimate::new("interaction_displacement", dx_int, Basis::Computed)
            .reference(3.7e-20)
            .discrepant("(F/2m)t^2 with the thermal-speed force; published value not reproduced"),
        Estimate::new("centripetal_force", f_cent, Basis::Computed).reference(1e-34),
        Estimate::new("neutron_period", period, Basis::Computed).reference(1e-23),
    ];

    Ok(EstimateReport {
        solenoid: exp.clone(),
        neutron: neutron.clone(),
        entries,
        solenoid_verdict: constraint_verdict(&Setup::Solenoid(exp.clone()))?,
        neutron_verdict: constraint_verdict(&Setup::Neutron(neutron.clone()))?,
    })
}
