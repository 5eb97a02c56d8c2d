//! Two-body systems, acceleration providers and conservation ledgers.

use serde::{Deserialize, Serialize};

use crate::constrained::{
    ab_accelerations, ab_system, ac_accelerations, ac_system, hidden_momentum_accelerations, ms_accelerations, ms_system,
    ElectricField, HamiltonianForm, StaticCharge,
};
use crate::darwin::{canonical_momenta, darwin_accelerations, darwin_energy, interaction_field_momentum, TwoBodyState};
use crate::error::{Error, Result};
use crate::lagrangian::{numeric_euler_lagrange, LagrangianSystem, StepConfig};
use crate::model::{Context, LineCharge, LineSolenoid, MagneticDipole, PointCharge, System};
use crate::unconstrained::{
    ab_force_on_charge, ab_force_on_solenoid, ac_force_on_loop, ac_force_on_wire, force_on_charge_from_loop,
    force_on_loop_from_charge,
};
use crate::vector::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Body {
    Charge(PointCharge),
    Dipole(MagneticDipole),
    Solenoid(LineSolenoid),
    Wire(LineCharge),
}

impl Body {
    pub fn position(&self) -> Vec3 {
        match self {
            Body::Charge(b) => b.position,
            Body::Dipole(b) => b.position,
            Body::Solenoid(b) => b.axis_point,
            Body::Wire(b) => b.axis_point,
        }
    }

    pub fn velocity(&self) -> Vec3 {
        match self {
            Body::Charge(b) => b.velocity,
            Body::Dipole(b) => b.velocity,
            Body::Solenoid(b) => b.velocity,
            Body::Wire(b) => b.velocity,
        }
    }

    pub fn set_state(&mut self, r: Vec3, v: Vec3) {
        match self {
            Body::Charge(b) => (b.position, b.velocity) = (r, v),
            Body::Dipole(b) => (b.position, b.velocity) = (r, v),
            Body::Solenoid(b) => (b.axis_point, b.velocity) = (r, v),
            Body::Wire(b) => (b.axis_point, b.velocity) = (r, v),
        }
    }

    pub fn is_line(&self) -> bool {
        matches!(self, Body::Solenoid(_) | Body::Wire(_))
    }

    /// The time-reversed body: velocity and magnetic sources flipped.
    pub fn reversed(&self) -> Body {
        let mut b = *self;
        match &mut b {
            Body::Charge(c) => c.velocity = -c.velocity,
            Body::Dipole(d) => {
                d.velocity = -d.velocity;
                d.moment = -d.moment;
            }
            Body::Solenoid(s) => {
                s.velocity = -s.velocity;
                s.flux = -s.flux;
            }
            Body::Wire(w) => w.velocity = -w.velocity,
        }
        b
    }

    fn kind(&self) -> &'static str {
        match self {
            Body::Charge(_) => "charge",
            Body::Dipole(_) => "dipole",
            Body::Solenoid(_) => "solenoid",
            Body::Wire(_) => "wire",
        }
    }
}

fn default_true() -> bool {
    true
}

fn default_length() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BodySpec {
    pub name: String,
    pub body: Body,
    /// A fixed body keeps its initial velocity.
    #[serde(default = "default_true")]
    pub dynamic: bool,
    /// Length assigned to a line source; its mass is mass_per_length × length.
    #[serde(default = "default_length")]
    pub line_length: f64,
}

impl BodySpec {
    pub fn new(name: &str, body: Body) -> Self {
        BodySpec { name: name.into(), body, dynamic: true, line_length: 1.0 }
    }

    pub fn fixed(mut self) -> Self {
        self.dynamic = false;
        self
    }

    pub fn mass(&self) -> f64 {
        match &self.body {
            Body::Charge(b) => b.mass,
            Body::Dipole(b) => b.mass,
            Body::Solenoid(b) => b.mass_per_length * self.line_length,
            Body::Wire(b) => b.mass_per_length * self.line_length,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provider {
    Darwin,
    UnconstrainedForce,
    ConstrainedLagrangian,
    Hamiltonian,
    HiddenMomentum,
}

impl Provider {
    pub fn name(self) -> &'static str {
        match self {
            Provider::Darwin => "darwin",
            Provider::UnconstrainedForce => "unconstrained-force",
            Provider::ConstrainedLagrangian => "constrained-lagrangian",
            Provider::Hamiltonian => "hamiltonian",
            Provider::HiddenMomentum => "hidden-momentum",
        }
    }
}

impl std::str::FromStr for Provider {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "darwin" => Provider::Darwin,
            "unconstrained" | "unconstrained-force" => Provider::UnconstrainedForce,
            "constrained" | "constrained-lagrangian" => Provider::ConstrainedLagrangian,
            "hamiltonian" => Provider::Hamiltonian,
            "hidden-momentum" => Provider::HiddenMomentum,
            _ => return Err(Error::InvalidInput(format!("unknown provider '{s}'"))),
        })
    }
}

/// Which physical system the two bodies form, with body indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pairing {
    Feynman,
    MottSchwinger { charge: usize, dipole: usize },
    AharonovBohm { charge: usize, solenoid: usize },
    AharonovCasher { dipole: usize, wire: usize },
}

impl Pairing {
    pub fn system(self) -> System {
        match self {
            Pairing::Feynman => System::Feynman,
            Pairing::MottSchwinger { .. } => System::MottSchwinger,
            Pairing::AharonovBohm { .. } => System::AharonovBohm,
            Pairing::AharonovCasher { .. } => System::AharonovCasher,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicalSystem {
    pub context: Context,
    pub bodies: Vec<BodySpec>,
    pub provider: Provider,
    #[serde(default)]
    pub hamiltonian_form: HamiltonianForm,
    #[serde(default)]
    pub step: StepConfig,
}

/// One point of the conservation ledger.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerPoint {
    pub mechanical: Vec3,
    pub canonical: Vec3,
    /// Canonical minus mechanical: the interaction (field) momentum.
    pub field: Vec3,
    pub energy: f64,
}

fn split3(y: &[f64], i: usize) -> Vec3 {
    Vec3::new(y[3 * i], y[3 * i + 1], y[3 * i + 2])
}

fn put3(y: &mut [f64], i: usize, v: Vec3) {
    y[3 * i..3 * i + 3].copy_from_slice(&v.to_array());
}

impl DynamicalSystem {
    pub fn new(context: Context, bodies: Vec<BodySpec>, provider: Provider) -> Self {
        DynamicalSystem { context, bodies, provider, hamiltonian_form: HamiltonianForm::default(), step: StepConfig::default() }
    }

    pub fn with_form(mut self, form: HamiltonianForm) -> Self {
        self.hamiltonian_form = form;
        self
    }

    pub fn pairing(&self) -> Result<Pairing> {
        if self.bodies.len() != 2 {
            return Err(Error::InvalidInput(format!("a system has two bodies, got {}", self.bodies.len())));
        }
        let (a, b) = (&self.bodies[0].body, &self.bodies[1].body);
        Ok(match (a, b) {
            (Body::Charge(_), Body::Charge(_)) => Pairing::Feynman,
            (Body::Charge(_), Body::Dipole(_)) => Pairing::MottSchwinger { charge: 0, dipole: 1 },
            (Body::Dipole(_), Body::Charge(_)) => Pairing::MottSchwinger { charge: 1, dipole: 0 },
            (Body::Charge(_), Body::Solenoid(_)) => Pairing::AharonovBohm { charge: 0, solenoid: 1 },
            (Body::Solenoid(_), Body::Charge(_)) => Pairing::AharonovBohm { charge: 1, solenoid: 0 },
            (Body::Dipole(_), Body::Wire(_)) => Pairing::AharonovCasher { dipole: 0, wire: 1 },
            (Body::Wire(_), Body::Dipole(_)) => Pairing::AharonovCasher { dipole: 1, wire: 0 },
            _ => {
                return Err(Error::InvalidInput(format!(
                    "no interaction between a {} and a {}",
                    a.kind(),
                    b.kind()
                )))
            }
        })
    }

    /// Index of the moving dipole and its fixed source, for the single-dipole providers.
    fn dipole_and_source(&self, pairing: Pairing) -> Result<(usize, usize)> {
        let (d, s) = match pairing {
            Pairing::MottSchwinger { charge, dipole } => (dipole, charge),
            Pairing::AharonovCasher { dipole, wire } => (dipole, wire),
            _ => {
                return Err(Error::InvalidInput(format!(
                    "the {} provider needs a dipole and a charge or line charge",
                    self.provider.name()
                )))
            }
        };
        let src = &self.bodies[s];
        if src.dynamic || src.body.velocity() != Vec3::ZERO {
            return Err(Error::InvalidInput(format!(
                "the {} provider needs the field source '{}' fixed and at rest",
                self.provider.name(),
                src.name
            )));
        }
        if !self.bodies[d].dynamic {
            return Err(Error::InvalidInput("the dipole must be dynamic".into()));
        }
        Ok((d, s))
    }

    pub fn validate(&self) -> Result<Pairing> {
        let pairing = self.pairing()?;
        if !self.bodies.iter().any(|b| b.dynamic) {
            return Err(Error::InvalidInput("at least one body must be dynamic".into()));
        }
        for spec in &self.bodies {
            match &spec.body {
                Body::Charge(b) => b.validate(&self.context.units)?,
                Body::Dipole(b) => b.validate(&self.context.units)?,
                Body::Solenoid(b) => b.validate(&self.context.units)?,
                Body::Wire(b) => b.validate(&self.context.units)?,
            }
            if spec.body.is_line() && !(spec.line_length > 0.0 && spec.line_length.is_finite()) {
                return Err(Error::InvalidInput(format!("line_length of '{}' must be positive", spec.name)));
            }
        }
        match self.provider {
            Provider::Darwin if pairing != Pairing::Feynman => {
                return Err(Error::InvalidInput("the darwin provider needs two point charges".into()))
            }
            Provider::Darwin if !self.bodies.iter().all(|b| b.dynamic) => {
                return Err(Error::InvalidInput("the darwin provider needs both charges dynamic".into()))
            }
            Provider::UnconstrainedForce if pairing == Pairing::Feynman => {
                return Err(Error::InvalidInput("the unconstrained provider needs an extended source; use darwin".into()))
            }
            Provider::ConstrainedLagrangian if pairing == Pairing::Feynman && !self.bodies.iter().all(|b| b.dynamic) => {
                return Err(Error::InvalidInput("two charges need both bodies dynamic".into()))
            }
            Provider::Hamiltonian | Provider::HiddenMomentum => {
                self.dipole_and_source(pairing)?;
            }
            _ => {}
        }
        Ok(pairing)
    }

    /// Packed state: positions of both bodies, then velocities (for the
    /// Hamiltonian provider the dipole slot holds its canonical momentum).
    pub fn initial_state(&self) -> Result<Vec<f64>> {
        let pairing = self.validate()?;
        let mut y = vec![0.0; 12];
        for (i, b) in self.bodies.iter().enumerate() {
            put3(&mut y, i, b.body.position());
            put3(&mut y, 2 + i, b.body.velocity());
        }
        if self.provider == Provider::Hamiltonian {
            let (d, s) = self.dipole_and_source(pairing)?;
            let Body::Dipole(dip) = self.bodies[d].body else { unreachable!() };
            let e = self.source_field(s)?.field(&self.context, dip.position)?;
            put3(&mut y, 2 + d, dip.velocity * dip.mass + dip.moment.cross(e) / self.context.c());
        }
        Ok(y)
    }

    fn source_field(&self, s: usize) -> Result<Box<dyn ElectricField>> {
        match self.bodies[s].body {
            Body::Charge(c) => Ok(Box::new(StaticCharge { charge: c.charge, position: c.position })),
            Body::Wire(w) => Ok(Box::new(w)),
            _ => Err(Error::InvalidInput("field source must be a charge or a line charge".into())),
        }
    }

    /// Bodies at a packed state, with physical velocities.
    pub fn bodies_at(&self, y: &[f64]) -> Result<[Body; 2]> {
        let mut out = [self.bodies[0].body, self.bodies[1].body];
        for (i, b) in out.iter_mut().enumerate() {
            b.set_state(split3(y, i), split3(y, 2 + i));
        }
        if self.provider == Provider::Hamiltonian {
            let (d, s) = self.dipole_and_source(self.pairing()?)?;
            let Body::Dipole(mut dip) = out[d] else { unreachable!() };
            let e = self.source_field(s)?.field(&self.context, dip.position)?;
            let p = split3(y, 2 + d);
            dip.velocity = self.hamiltonian_velocity(p, dip.moment, e, dip.mass);
            out[d] = Body::Dipole(dip);
        }
        Ok(out)
    }

    fn hamiltonian_velocity(&self, p: Vec3, mu: Vec3, e: Vec3, m: f64) -> Vec3 {
        // ∂H/∂p is the same for both forms
        (p - mu.cross(e) / self.context.c()) / m
    }

    fn masses(&self) -> [f64; 2] {
        [self.bodies[0].mass(), self.bodies[1].mass()]
    }

    /// Accelerations of both bodies (zero for fixed bodies and out-of-plane
    /// for line bodies).
    pub fn accelerations(&self, bodies: &[Body; 2]) -> Result<[Vec3; 2]> {
        let pairing = self.pairing()?;
        let ctx = &self.context;
        let m = self.masses();
        let mut a = match (self.provider, pairing) {
            (Provider::Darwin, _) | (Provider::ConstrainedLagrangian, Pairing::Feynman) => {
                let (Body::Charge(b1), Body::Charge(b2)) = (bodies[0], bodies[1]) else { unreachable!() };
                let acc = darwin_accelerations(ctx, &TwoBodyState::new(b1, b2))?;
                [acc.a1, acc.a2]
            }
            (Provider::UnconstrainedForce, Pairing::MottSchwinger { charge, dipole }) => {
                let (q, d) = (as_charge(&bodies[charge]), as_dipole(&bodies[dipole]));
                let mut a = [Vec3::ZERO; 2];
                a[charge] = force_on_charge_from_loop(ctx, &q, &d)? / m[charge];
                a[dipole] = force_on_loop_from_charge(ctx, &q, &d)? / m[dipole];
                a
            }
            (Provider::UnconstrainedForce, Pairing::AharonovBohm { charge, solenoid }) => {
                let (q, s) = (as_charge(&bodies[charge]), as_solenoid(&bodies[solenoid]));
                let mut a = [Vec3::ZERO; 2];
                a[charge] = ab_force_on_charge(ctx, &q, &s)? / m[charge];
                a[solenoid] = ab_force_on_solenoid(ctx, &q, &s)? / m[solenoid];
                a
            }
            (Provider::UnconstrainedForce, Pairing::AharonovCasher { dipole, wire }) => {
                let (d, w) = (as_dipole(&bodies[dipole]), as_wire(&bodies[wire]));
                let mut a = [Vec3::ZERO; 2];
                a[dipole] = ac_force_on_loop(ctx, &d, &w)? / m[dipole];
                a[wire] = ac_force_on_wire(ctx, &d, &w)? / m[wire];
                a
            }
            (Provider::ConstrainedLagrangian, Pairing::MottSchwinger { charge, dipole }) => {
                let (aq, ad) = ms_accelerations(ctx, &as_charge(&bodies[charge]), &as_dipole(&bodies[dipole]))?;
                place(charge, aq, dipole, ad)
            }
            (Provider::ConstrainedLagrangian, Pairing::AharonovBohm { charge, solenoid }) => {
                let (aq, as_) = ab_accelerations(ctx, &as_charge(&bodies[charge]), &as_solenoid(&bodies[solenoid]))?;
                place(charge, aq, solenoid, as_)
            }
            (Provider::ConstrainedLagrangian, Pairing::AharonovCasher { dipole, wire }) => {
                let (d, w) = (as_dipole(&bodies[dipole]), as_wire(&bodies[wire]));
                match ac_accelerations(ctx, &d, &w) {
                    Ok((ad, aw)) => place(dipole, ad, wire, aw),
                    Err(Error::OutOfRegime(_)) => {
                        let sys = ac_system(*ctx, d, w, m[wire])?;
                        let mut q = d.position.to_array().to_vec();
                        q.extend(w.axis_point.to_array());
                        let mut v = d.velocity.to_array().to_vec();
                        v.extend(w.velocity.to_array());
                        let acc = numeric_euler_lagrange(&sys, &q, &v, &self.step)?;
                        place(dipole, split3(&acc, 0), wire, split3(&acc, 1))
                    }
                    Err(e) => return Err(e),
                }
            }
            (Provider::HiddenMomentum, p) => {
                let (d, s) = self.dipole_and_source(p)?;
                let field = self.source_field(s)?;
                let mut a = [Vec3::ZERO; 2];
                a[d] = hidden_momentum_accelerations(ctx, &as_dipole(&bodies[d]), field.as_ref())?;
                a
            }
            (Provider::Hamiltonian, _) => {
                return Err(Error::InvalidInput("the Hamiltonian provider evolves momenta, not accelerations".into()))
            }
            (Provider::UnconstrainedForce, Pairing::Feynman) => unreachable!("rejected by validate"),
        };
        for (i, spec) in self.bodies.iter().enumerate() {
            if !spec.dynamic {
                a[i] = Vec3::ZERO;
            } else if spec.body.is_line() {
                a[i] = a[i].in_plane();
            }
        }
        Ok(a)
    }

    /// ṗ for the Hamiltonian provider: −∂H/∂r with the analytic field Jacobian.
    fn hamiltonian_force(&self, d: usize, s: usize, r: Vec3, p: Vec3, mu: Vec3) -> Result<Vec3> {
        let field = self.source_field(s)?;
        let ctx = &self.context;
        let m = self.bodies[d].mass();
        let e = field.field(ctx, r)?;
        let j = field.jacobian(ctx, r)?;
        let c = ctx.c();
        let kinetic = match self.hamiltonian_form {
            HamiltonianForm::Truncated => p,
            HamiltonianForm::Exact => p - mu.cross(e) / c,
        };
        let dk = |l: usize| mu.cross(Vec3::new(j[0][l], j[1][l], j[2][l])) / c;
        Ok(Vec3::new(kinetic.dot(dk(0)), kinetic.dot(dk(1)), kinetic.dot(dk(2))) / m)
    }

    /// Right-hand side of the packed first-order system.
    pub fn derivative(&self, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let bodies = self.bodies_at(y)?;
        for (i, b) in bodies.iter().enumerate() {
            put3(dy, i, b.velocity());
        }
        if self.provider == Provider::Hamiltonian {
            let (d, s) = self.dipole_and_source(self.pairing()?)?;
            let Body::Dipole(dip) = bodies[d] else { unreachable!() };
            put3(dy, 2 + d, self.hamiltonian_force(d, s, dip.position, split3(y, 2 + d), dip.moment)?);
            put3(dy, 2 + s, Vec3::ZERO);
            return Ok(());
        }
        let a = self.accelerations(&bodies)?;
        put3(dy, 2, a[0]);
        put3(dy, 3, a[1]);
        Ok(())
    }

    /// The Lagrangian of the pair with coordinates in body order.
    fn lagrangian(&self, bodies: &[Body; 2], pairing: Pairing) -> Result<(LagrangianSystem, [usize; 2])> {
        let ctx = self.context;
        let m = self.masses();
        Ok(match pairing {
            Pairing::Feynman => unreachable!("Darwin ledgers are analytic"),
            Pairing::MottSchwinger { charge, dipole } => {
                (ms_system(ctx, as_charge(&bodies[charge]), as_dipole(&bodies[dipole]))?, [charge, dipole])
            }
            Pairing::AharonovBohm { charge, solenoid } => (
                ab_system(ctx, as_charge(&bodies[charge]), as_solenoid(&bodies[solenoid]), m[solenoid])?,
                [charge, solenoid],
            ),
            Pairing::AharonovCasher { dipole, wire } => {
                (ac_system(ctx, as_dipole(&bodies[dipole]), as_wire(&bodies[wire]), m[wire])?, [dipole, wire])
            }
        })
    }

    pub fn ledger(&self, y: &[f64]) -> Result<LedgerPoint> {
        let pairing = self.pairing()?;
        let bodies = self.bodies_at(y)?;
        let m = self.masses();
        let mechanical = bodies[0].velocity() * m[0] + bodies[1].velocity() * m[1];
        let ctx = &self.context;
        if pairing == Pairing::Feynman {
            let (Body::Charge(b1), Body::Charge(b2)) = (bodies[0], bodies[1]) else { unreachable!() };
            let s = TwoBodyState::new(b1, b2);
            let (p1, p2) = canonical_momenta(ctx, &s)?;
            return Ok(LedgerPoint {
                mechanical,
                canonical: p1 + p2,
                field: interaction_field_momentum(ctx, &s)?,
                energy: darwin_energy(ctx, &s)?,
            });
        }
        if self.provider == Provider::Hamiltonian {
            let (d, s) = self.dipole_and_source(pairing)?;
            let Body::Dipole(dip) = bodies[d] else { unreachable!() };
            let p = split3(y, 2 + d);
            let e = self.source_field(s)?.field(ctx, dip.position)?;
            let c = ctx.c();
            let energy = match self.hamiltonian_form {
                HamiltonianForm::Truncated => p.norm_squared() / (2.0 * m[d]) - dip.moment.dot(e.cross(p)) / (m[d] * c),
                HamiltonianForm::Exact => (p - dip.moment.cross(e) / c).norm_squared() / (2.0 * m[d]),
            };
            let canonical = p + bodies[s].velocity() * m[s];
            return Ok(LedgerPoint { mechanical, canonical, field: canonical - mechanical, energy });
        }
        let (sys, order) = self.lagrangian(&bodies, pairing)?;
        let mut q = Vec::with_capacity(6);
        let mut v = Vec::with_capacity(6);
        for &i in &order {
            q.extend(bodies[i].position().to_array());
            v.extend(bodies[i].velocity().to_array());
        }
        let p = sys.canonical_momenta(&q, &v, &self.step)?;
        let canonical = split3(&p, 0) + split3(&p, 1);
        let pv: f64 = p.iter().zip(&v).map(|(p, v)| p * v).sum();
        let energy = pv - sys.value(&q, &v)?;
        Ok(LedgerPoint { mechanical, canonical, field: canonical - mechanical, energy })
    }

    /// The system with every velocity and magnetic source reversed.
    pub fn time_reversed(&self) -> DynamicalSystem {
        let mut s = self.clone();
        for b in &mut s.bodies {
            b.body = b.body.reversed();
        }
        s
    }

    /// The system with bodies moved to a packed state.
    pub fn at_state(&self, y: &[f64]) -> Result<DynamicalSystem> {
        let bodies = self.bodies_at(y)?;
        let mut s = self.clone();
        for (spec, b) in s.bodies.iter_mut().zip(bodies) {
            spec.body = b;
        }
        Ok(s)
    }
}

fn place(i: usize, ai: Vec3, j: usize, aj: Vec3) -> [Vec3; 2] {
    let mut a = [Vec3::ZERO; 2];
    a[i] = ai;
    a[j] = aj;
    a
}

fn as_charge(b: &Body) -> PointCharge {
    match b {
        Body::Charge(c) => *c,
        _ => unreachable!("pairing guarantees a charge"),
    }
}

fn as_dipole(b: &Body) -> MagneticDipole {
    match b {
        Body::Dipole(d) => *d,
        _ => unreachable!("pairing guarantees a dipole"),
    }
}

fn as_solenoid(b: &Body) -> LineSolenoid {
    match b {
        Body::Solenoid(s) => *s,
        _ => unreachable!("pairing guarantees a solenoid"),
    }
}

fn as_wire(b: &Body) -> LineCharge {
    match b {
        Body::Wire(w) => *w,
        _ => unreachable!("pairing guarantees a wire"),
    }
}
