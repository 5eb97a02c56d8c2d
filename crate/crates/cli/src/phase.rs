//! `phase ab | ac | composite`: numeric phases beside their closed forms.

use std::f64::consts::PI;

use clap::{Args, Subcommand};
use darwinics::model::{LineCharge, LineSolenoid, MagneticDipole, PointCharge};
use darwinics::phase::{ab_phase, ac_phase, composite_force_phase, CompositeArm, PolyPath};
use darwinics::quadrature::QuadConfig;
use darwinics::unconstrained::{ForceField, StraightPath};
use darwinics::{Context, Units, Vec3};

use crate::error::{CliError, CliResult};
use crate::output::{emit, ensure_dir, Cell, Format, Table};

/// Accepts plain numbers and multiples of pi: `2pi`, `-pi/2`, `0.5*pi`.
pub fn parse_number(s: &str) -> Result<f64, String> {
    let t = s.trim().to_ascii_lowercase();
    let bad = || format!("'{s}' is not a number or a multiple of pi");
    let Some((coef, rest)) = t.split_once("pi") else {
        return t.parse::<f64>().map_err(|_| bad());
    };
    let coef = coef.trim_end_matches('*').trim();
    let k = match coef {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().map_err(|_| bad())?,
    };
    let den = match rest.trim() {
        "" => 1.0,
        r => r.strip_prefix('/').ok_or_else(bad)?.trim().parse::<f64>().map_err(|_| bad())?,
    };
    if den == 0.0 {
        return Err(bad());
    }
    Ok(k * PI / den)
}

#[derive(Args, Clone, Debug)]
pub struct Constants {
    /// Speed of light in the chosen units.
    #[arg(long, default_value = "1", value_parser = parse_number)]
    pub c: f64,
    /// Reduced Planck constant in the chosen units.
    #[arg(long, default_value = "1", value_parser = parse_number)]
    pub hbar: f64,
}

impl Constants {
    fn context(&self) -> CliResult<Context> {
        let units = Units::nondimensional(self.c, self.hbar).map_err(|e| CliError::invalid("--c/--hbar", e))?;
        Ok(Context::new(units, 1.0))
    }
}

#[derive(Args, Clone, Debug)]
pub struct Loop {
    /// Net turns around the source; 0 keeps the loop off to the side.
    #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
    pub winding: i64,
    #[arg(long, default_value = "1", value_parser = parse_number)]
    pub radius: f64,
    #[arg(long, default_value_t = 64)]
    pub sides: usize,
}

impl Loop {
    fn path(&self) -> CliResult<PolyPath> {
        let invalid = |e| CliError::invalid("loop", e);
        let turns = self.winding.unsigned_abs() as usize;
        let center = if turns == 0 { Vec3::X * (3.0 * self.radius) } else { Vec3::ZERO };
        // later turns sit on slightly larger circles so no vertex repeats
        let mut vertices = Vec::new();
        for k in 0..turns.max(1) {
            let turn = PolyPath::regular(center, self.radius * (1.0 + 0.01 * k as f64), self.sides).map_err(invalid)?;
            vertices.extend(turn.vertices);
        }
        if self.winding < 0 {
            vertices.reverse();
        }
        PolyPath::closed(vertices).map_err(invalid)
    }
}

#[derive(Subcommand, Clone, Debug)]
pub enum PhaseCommand {
    /// Charge taken around a flux line.
    Ab {
        #[arg(long, value_parser = parse_number)]
        flux: f64,
        #[arg(long, default_value = "1", value_parser = parse_number, allow_negative_numbers = true)]
        charge: f64,
        #[command(flatten)]
        path: Loop,
        #[command(flatten)]
        constants: Constants,
    },
    /// Magnetic moment taken around a line charge.
    Ac {
        #[arg(long, value_parser = parse_number, allow_negative_numbers = true)]
        lambda: f64,
        /// Moment along the line.
        #[arg(long, value_parser = parse_number, allow_negative_numbers = true)]
        mu: f64,
        #[command(flatten)]
        path: Loop,
        #[command(flatten)]
        constants: Constants,
    },
    /// Force phase of a current loop passing a line charge on either side.
    Composite {
        /// Distance of each arm from the line charge.
        #[arg(long, value_parser = parse_number)]
        b: f64,
        #[arg(long, default_value = "1", value_parser = parse_number, allow_negative_numbers = true)]
        lambda: f64,
        #[arg(long, default_value = "1", value_parser = parse_number, allow_negative_numbers = true)]
        mu: f64,
        #[arg(long, default_value = "0.1", value_parser = parse_number)]
        speed: f64,
        #[arg(long, default_value = "1", value_parser = parse_number)]
        mass: f64,
        #[command(flatten)]
        constants: Constants,
    },
}

fn comparison_table() -> Table {
    let mut t = Table::default();
    t.column("quantity", "none");
    t.column("numeric", "rad");
    t.column("closed_form", "rad");
    t.column("difference", "rad");
    t
}

fn row(name: &str, numeric: f64, closed: f64) -> Vec<Cell> {
    vec![Cell::Text(name.into()), Cell::Num(numeric), Cell::Num(closed), Cell::Num(numeric - closed)]
}

fn compute(cmd: &PhaseCommand) -> CliResult<(String, Table)> {
    let num = |e| CliError::from_run("phase", e);
    match cmd {
        PhaseCommand::Ab { flux, charge, path, constants } => {
            let ctx = constants.context()?;
            let p = path.path()?;
            let s = LineSolenoid::stationary(*flux, Vec3::ZERO);
            let q = PointCharge::new(*charge, 1.0, Vec3::ZERO, Vec3::ZERO);
            let r = ab_phase(&ctx, &p, &s, &q).map_err(num)?;
            let n = p.winding_number(Vec3::ZERO).map_err(num)?;
            let closed = n as f64 * charge * flux / (ctx.hbar() * ctx.c());
            // a multi-turn spiral has unequal arms, so only the potential part has a closed form
            let single = n.abs() <= 1;
            let mut t = comparison_table();
            t.push(row("vector_potential", r.potential, closed));
            t.push(row("kinetic", r.kinetic, if single { 0.0 } else { f64::NAN }));
            t.push(row("total", r.phase, if single { closed } else { f64::NAN }));
            let note = if single { "" } else { "; kinetic part is the arm-length imbalance of the spiral" };
            Ok((format!("winding {n}: closed form n*q*flux/(hbar*c){note}"), t))
        }
        PhaseCommand::Ac { lambda, mu, path, constants } => {
            let ctx = constants.context()?;
            let p = path.path()?;
            let n = p.winding_number(Vec3::ZERO).map_err(num)?;
            let unit = 4.0 * PI / (ctx.hbar() * ctx.c());
            let mut t = Table::default();
            t.column("lambda", "input");
            t.column("mu", "input");
            t.column("numeric", "rad");
            t.column("closed_form", "rad");
            t.column("phase_per_lambda_mu", "rad");
            for (kl, km) in [(1.0, 1.0), (2.0, 1.0), (1.0, 2.0), (2.0, 2.0)] {
                let (l, m) = (lambda * kl, mu * km);
                let w = LineCharge::stationary(l, Vec3::ZERO);
                let d = MagneticDipole::new(Vec3::Z * m, 1.0, Vec3::ZERO, Vec3::ZERO);
                let r = ac_phase(&ctx, &p, &w, &d).map_err(num)?;
                let per = if l * m != 0.0 { r.potential / (l * m) } else { f64::NAN };
                t.push(vec![Cell::Num(l), Cell::Num(m), Cell::Num(r.potential), Cell::Num(n as f64 * unit * l * m), Cell::Num(per)]);
            }
            Ok((format!("winding {n}: closed form 4*pi*lambda*mu/(hbar*c) per turn; 4*pi/(hbar*c) = {unit:.12e}"), t))
        }
        PhaseCommand::Composite { b, lambda, mu, speed, mass, constants } => {
            if !(*b > 0.0) {
                return Err(CliError::validation("--b", format!("must be positive, got {b}")));
            }
            let ctx = constants.context()?;
            let w = LineCharge::stationary(*lambda, Vec3::ZERO);
            let d = MagneticDipole::new(Vec3::Z * *mu, *mass, Vec3::ZERO, Vec3::ZERO);
            let force = ForceField::ac_on_loop(ctx, d, w);
            let arm = |y: f64| -> CliResult<CompositeArm> {
                Ok(CompositeArm {
                    path: StraightPath::full_passage(Vec3::ZERO, y, *speed).map_err(|e| CliError::invalid("--speed", e))?,
                    momentum: Vec3::X * (mass * speed),
                })
            };
            let r = composite_force_phase(&ctx, &[arm(*b)?, arm(-*b)?], &force, &QuadConfig::default()).map_err(num)?;
            let unit = 2.0 * PI * lambda * mu / (ctx.hbar() * ctx.c());
            let mut t = comparison_table();
            t.push(row("arm_above", r.arms[0].force, -unit));
            t.push(row("arm_below", r.arms[1].force, unit));
            t.push(row("difference", r.difference, -2.0 * unit));
            Ok(("per arm -/+ 2*pi*lambda*mu/(hbar*c) by side of the line charge; kinetic parts cancel".into(), t))
        }
    }
}

pub fn phase(cmd: &PhaseCommand, out: Option<&std::path::Path>, format: Format) -> CliResult<()> {
    let (note, table) = compute(cmd)?;
    match format {
        Format::Csv => emit(&format!("{}{note}\n", table.to_text()))?,
        Format::Json => emit(&format!("{:#}\n", serde_json::json!({ "note": note, "table": table.to_json() })))?,
    }
    if let Some(dir) = out {
        ensure_dir(dir)?;
        let f = table.write(dir, "phase", format)?;
        eprintln!("{}", dir.join(f.file).display());
    }
    Ok(())
}
