//! `estimates`: order-of-magnitude table for the two laboratory setups.

use clap::{Args, ValueEnum};
use darwinics::estimates::{estimate_report, EstimateReport, NeutronParameters, SolenoidExperiment};

use crate::error::{CliError, CliResult};
use crate::output::{emit, ensure_dir, pretty, write_bytes, Format};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Electron biprism with a micro-solenoid.
    MollenstedtBayh,
    /// Neutron passing a line charge.
    Neutron,
    /// Solenoid experiment built entirely from the flags below.
    Custom,
}

/// SI inputs. With a preset they override single values; `custom` needs all
/// of the solenoid ones.
#[derive(Args, Clone, Debug, Default)]
pub struct EstimateInputs {
    /// Beam electron kinetic energy, eV.
    #[arg(long)]
    pub energy: Option<f64>,
    /// m
    #[arg(long)]
    pub loop_diameter: Option<f64>,
    /// m
    #[arg(long)]
    pub interaction_length: Option<f64>,
    /// m
    #[arg(long)]
    pub wire_diameter: Option<f64>,
    /// A
    #[arg(long)]
    pub current: Option<f64>,
    /// m^-3
    #[arg(long)]
    pub carrier_density: Option<f64>,
    /// K
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Beam to coil-electron distance, m.
    #[arg(long)]
    pub pass_distance: Option<f64>,
    /// Neutron moment, J/T.
    #[arg(long)]
    pub moment: Option<f64>,
    /// Neutron charge-loop radius, m.
    #[arg(long)]
    pub loop_radius: Option<f64>,
    /// Neutron interaction time, s.
    #[arg(long)]
    pub interaction_time: Option<f64>,
}

impl EstimateInputs {
    fn solenoid(&self, preset: Preset) -> CliResult<SolenoidExperiment> {
        let mut e = SolenoidExperiment::default();
        let fields: [(&str, Option<f64>, &mut f64); 8] = [
            ("--energy", self.energy, &mut e.electron_energy),
            ("--loop-diameter", self.loop_diameter, &mut e.loop_diameter),
            ("--interaction-length", self.interaction_length, &mut e.interaction_length),
            ("--wire-diameter", self.wire_diameter, &mut e.wire_diameter),
            ("--current", self.current, &mut e.current),
            ("--carrier-density", self.carrier_density, &mut e.carrier_density),
            ("--temperature", self.temperature, &mut e.temperature),
            ("--pass-distance", self.pass_distance, &mut e.pass_distance),
        ];
        let mut missing = Vec::new();
        for (flag, given, slot) in fields {
            match given {
                Some(v) => *slot = v,
                None if preset == Preset::Custom => missing.push(flag),
                None => {}
            }
        }
        if !missing.is_empty() {
            return Err(CliError::validation("custom", format!("missing inputs: {}", missing.join(", "))));
        }
        e.validate().map_err(|err| CliError::invalid("inputs", err))?;
        Ok(e)
    }

    fn neutron(&self) -> NeutronParameters {
        let d = NeutronParameters::default();
        NeutronParameters {
            moment: self.moment.unwrap_or(d.moment),
            loop_radius: self.loop_radius.unwrap_or(d.loop_radius),
            interaction_time: self.interaction_time.unwrap_or(d.interaction_time),
        }
    }
}

const NEUTRON_ROWS: [&str; 1] = ["neutron_period"];

/// The report restricted to the rows that belong to `preset`.
pub fn report(preset: Preset, inputs: &EstimateInputs) -> CliResult<EstimateReport> {
    let exp = inputs.solenoid(preset)?;
    let mut r = estimate_report(&exp, &inputs.neutron()).map_err(|e| CliError::invalid("inputs", e))?;
    let neutron = preset == Preset::Neutron;
    r.entries.retain(|e| NEUTRON_ROWS.contains(&e.name.as_str()) == neutron);
    Ok(r)
}

pub fn estimates(preset: Preset, inputs: &EstimateInputs, out: Option<&std::path::Path>, format: Format) -> CliResult<()> {
    let r = report(preset, inputs)?;
    let verdict = if preset == Preset::Neutron { r.neutron_verdict.line("verdict") } else { r.solenoid_verdict.line("verdict") };
    match format {
        Format::Csv => emit(&format!("{}{verdict}", r.entries_table()))?,
        Format::Json => emit(&String::from_utf8_lossy(&pretty(&r)?))?,
    }
    if let Some(dir) = out {
        ensure_dir(dir)?;
        let path = dir.join("estimates.json");
        write_bytes(&path, &pretty(&r)?)?;
        eprintln!("{}", path.display());
    }
    Ok(())
}
