//! Grid case files, DC measurement matrices and DC power flow.
//!
//! # Case file grammar
//!
//! ```text
//! file      := "gridcase v1" NL { record | comment | blank }
//! record    := "bus" ID LOAD_WATTS
//!            | "branch" FROM TO SUSCEPTANCE
//!            | "ref" ID
//!            | "flowmeter" BRANCH_INDEX ("fwd" | "rev")
//!            | "injmeter" ID
//! comment   := "#" anything to end of line
//! ```
//!
//! Fields are separated by whitespace and `#` starts a comment anywhere on a
//! line. `LOAD_WATTS` is the bus's net demand (load minus generation) and may
//! be negative. `BRANCH_INDEX` is the 1-based position of the branch among
//! the file's `branch` records. Meter records are optional in a case file and
//! may instead live in a separate placement file with the same header.
//!
//! # DC model
//!
//! A flow meter on branch `(i, j)` with susceptance `b` reads `b (θ_i − θ_j)`
//! (`fwd`) or its negation (`rev`). An injection meter at bus `i` reads the
//! sum of flows leaving `i`. The reference angle is fixed at zero, so `H` has
//! one column per non-reference bus in ascending id order.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, Dyn, LU};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::LinearModel;

/// Power base used to convert watts to per unit (100 MVA).
pub const BASE_POWER_WATTS: f64 = 1e8;

pub const HEADER: &str = "gridcase v1";

/// The bundled IEEE 14-bus case with its 23-meter placement.
pub const IEEE14_CASE: &str = include_str!("../data/ieee14.case");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: u32,
    /// Net demand in watts.
    pub load_watts: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub from: u32,
    pub to: u32,
    /// Per-unit susceptance, strictly positive.
    pub susceptance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowDirection {
    Fwd,
    Rev,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowMeter {
    /// Zero-based branch index.
    pub branch: usize,
    pub direction: FlowDirection,
}

/// Ordered meter list; the order is the row order of `H`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeterPlacement {
    pub flow_meters: Vec<FlowMeter>,
    pub injection_meters: Vec<u32>,
}

impl MeterPlacement {
    pub fn len(&self) -> usize {
        self.flow_meters.len() + self.injection_meters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Validated grid: connected, unique bus ids, positive susceptances.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridCase {
    buses: Vec<Bus>,
    branches: Vec<Branch>,
    reference_bus: u32,
}

impl GridCase {
    /// Validates and canonicalizes (buses sorted by id; branch order kept).
    pub fn new(mut buses: Vec<Bus>, branches: Vec<Branch>, reference_bus: u32) -> Result<Self> {
        buses.sort_by_key(|b| b.id);
        if let Some(w) = buses.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(Error::Semantic(format!("duplicate bus {}", w[0].id)));
        }
        if let Some(b) = buses.iter().find(|b| !b.load_watts.is_finite()) {
            return Err(Error::Semantic(format!("bus {} has a non-finite load", b.id)));
        }
        let ids: BTreeSet<u32> = buses.iter().map(|b| b.id).collect();
        if !ids.contains(&reference_bus) {
            return Err(Error::Semantic(format!("reference bus {reference_bus} does not exist")));
        }
        for (k, br) in branches.iter().enumerate() {
            for end in [br.from, br.to] {
                if !ids.contains(&end) {
                    return Err(Error::Semantic(format!("branch {} references missing bus {end}", k + 1)));
                }
            }
            if br.from == br.to {
                return Err(Error::Semantic(format!("branch {} is a self-loop at bus {}", k + 1, br.from)));
            }
            if !(br.susceptance > 0.0 && br.susceptance.is_finite()) {
                return Err(Error::Semantic(format!(
                    "branch {} has non-positive susceptance {}",
                    k + 1,
                    br.susceptance
                )));
            }
        }
        let case = Self { buses, branches, reference_bus };
        case.check_connected()?;
        Ok(case)
    }

    fn check_connected(&self) -> Result<()> {
        let mut adj: HashMap<u32, Vec<u32>> = HashMap::new();
        for br in &self.branches {
            adj.entry(br.from).or_default().push(br.to);
            adj.entry(br.to).or_default().push(br.from);
        }
        let mut seen = BTreeSet::from([self.reference_bus]);
        let mut stack = vec![self.reference_bus];
        while let Some(b) = stack.pop() {
            for &n in adj.get(&b).map(Vec::as_slice).unwrap_or(&[]) {
                if seen.insert(n) {
                    stack.push(n);
                }
            }
        }
        if let Some(b) = self.buses.iter().find(|b| !seen.contains(&b.id)) {
            return Err(Error::Semantic(format!(
                "grid is disconnected: bus {} is unreachable from the reference bus",
                b.id
            )));
        }
        Ok(())
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn reference_bus(&self) -> u32 {
        self.reference_bus
    }

    /// Number of state variables `N` (non-reference buses).
    pub fn num_states(&self) -> usize {
        self.buses.len() - 1
    }

    /// Non-reference bus ids in column order.
    pub fn state_buses(&self) -> Vec<u32> {
        self.buses.iter().map(|b| b.id).filter(|&id| id != self.reference_bus).collect()
    }

    fn columns(&self) -> HashMap<u32, usize> {
        self.state_buses().into_iter().enumerate().map(|(i, id)| (id, i)).collect()
    }

    /// Measurement matrix for `placement`.
    pub fn build_h(&self, placement: &MeterPlacement) -> Result<DMatrix<f64>> {
        let cols = self.columns();
        let n = self.num_states();
        let mut h = DMatrix::zeros(placement.len(), n);
        let mut put = |row: usize, bus: u32, v: f64| {
            if let Some(&c) = cols.get(&bus) {
                h[(row, c)] += v;
            }
        };
        for (row, fm) in placement.flow_meters.iter().enumerate() {
            let br = self.branches.get(fm.branch).ok_or_else(|| {
                Error::Placement(format!("flow meter {} references missing branch {}", row + 1, fm.branch + 1))
            })?;
            let s = match fm.direction {
                FlowDirection::Fwd => 1.0,
                FlowDirection::Rev => -1.0,
            };
            put(row, br.from, s * br.susceptance);
            put(row, br.to, -s * br.susceptance);
        }
        let offset = placement.flow_meters.len();
        for (k, &bus) in placement.injection_meters.iter().enumerate() {
            if !self.buses.iter().any(|b| b.id == bus) {
                return Err(Error::Placement(format!("injection meter references missing bus {bus}")));
            }
            let row = offset + k;
            for br in &self.branches {
                let other = if br.from == bus {
                    br.to
                } else if br.to == bus {
                    br.from
                } else {
                    continue;
                };
                put(row, bus, br.susceptance);
                put(row, other, -br.susceptance);
            }
        }
        Ok(h)
    }

    /// Validated linear model for `placement` with noise variance `sigma2`.
    pub fn model(&self, placement: &MeterPlacement, sigma2: f64) -> Result<LinearModel> {
        LinearModel::new(self.build_h(placement)?, sigma2)
    }

    /// Reduced nodal susceptance matrix `B′` (reference row and column
    /// removed).
    pub fn reduced_susceptance(&self) -> DMatrix<f64> {
        let cols = self.columns();
        let n = self.num_states();
        let mut b = DMatrix::zeros(n, n);
        for br in &self.branches {
            let (i, j) = (cols.get(&br.from).copied(), cols.get(&br.to).copied());
            if let Some(i) = i {
                b[(i, i)] += br.susceptance;
            }
            if let Some(j) = j {
                b[(j, j)] += br.susceptance;
            }
            if let (Some(i), Some(j)) = (i, j) {
                b[(i, j)] -= br.susceptance;
                b[(j, i)] -= br.susceptance;
            }
        }
        b
    }

    /// Factorizes `B′` once for repeated DC solves.
    pub fn dc_solver(&self) -> Result<DcSolver> {
        let b = self.reduced_susceptance();
        let lu = b.clone().lu();
        if !lu.is_invertible() {
            return Err(Error::SingularSystem);
        }
        Ok(DcSolver { b, lu })
    }

    /// Per-unit net injections (`−load / base`) at the non-reference buses.
    pub fn base_injections(&self) -> Vec<f64> {
        self.buses.iter().filter(|b| b.id != self.reference_bus).map(|b| -b.load_watts / BASE_POWER_WATTS).collect()
    }

    fn ramp_injections(&self, ramps: &[LoadRamp]) -> Result<Vec<f64>> {
        let cols = self.columns();
        let mut slope = vec![0.0; self.num_states()];
        for r in ramps {
            if !self.buses.iter().any(|b| b.id == r.bus) {
                return Err(Error::Semantic(format!("load ramp references missing bus {}", r.bus)));
            }
            // A ramp on the slack bus is absorbed by the slack.
            if let Some(&c) = cols.get(&r.bus) {
                slope[c] -= r.watts_per_step / BASE_POWER_WATTS;
            }
        }
        Ok(slope)
    }
}

/// LU factors of `B′`.
#[derive(Debug, Clone)]
pub struct DcSolver {
    b: DMatrix<f64>,
    lu: LU<f64, Dyn, Dyn>,
}

impl DcSolver {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.b
    }

    /// Solves `B′θ = p` for per-unit injections `p`.
    pub fn solve(&self, injections: &[f64]) -> Result<Vec<f64>> {
        let n = self.b.nrows();
        if injections.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: injections.len() });
        }
        let theta = self.lu.solve(&DVector::from_column_slice(injections)).ok_or(Error::SingularSystem)?;
        Ok(theta.iter().copied().collect())
    }
}

/// DC power flow: phase angles of the non-reference buses for per-unit net
/// injections `p`.
pub fn dc_power_flow(case: &GridCase, injections: &[f64]) -> Result<Vec<f64>> {
    case.dc_solver()?.solve(injections)
}

/// Linear load change at one bus, in watts per time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadRamp {
    pub bus: u32,
    pub watts_per_step: f64,
}

/// Phase angles `θ(1), …, θ(T)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateTrajectory {
    pub thetas: Vec<Vec<f64>>,
}

/// Solves DC power flow at every step with loads `base + ramp · t`.
pub fn load_trajectory(case: &GridCase, ramps: &[LoadRamp], horizon: usize) -> Result<StateTrajectory> {
    if horizon == 0 {
        return Err(Error::Config("horizon must be at least 1".into()));
    }
    let solver = case.dc_solver()?;
    let base = case.base_injections();
    let slope = case.ramp_injections(ramps)?;
    let thetas = (1..=horizon)
        .map(|t| {
            let p: Vec<f64> = base.iter().zip(&slope).map(|(b, s)| b + s * t as f64).collect();
            solver.solve(&p)
        })
        .collect::<Result<_>>()?;
    Ok(StateTrajectory { thetas })
}

/// Closed form of [`load_trajectory`]: DC flow is linear in the injections,
/// so `θ(t) = θ_base + t · θ_ramp`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearTrajectory {
    pub base: Vec<f64>,
    pub slope: Vec<f64>,
}

impl LinearTrajectory {
    pub fn new(case: &GridCase, ramps: &[LoadRamp]) -> Result<Self> {
        let solver = case.dc_solver()?;
        Ok(Self { base: solver.solve(&case.base_injections())?, slope: solver.solve(&case.ramp_injections(ramps)?)? })
    }

    /// Constant state `theta`.
    pub fn constant(theta: Vec<f64>) -> Self {
        let slope = vec![0.0; theta.len()];
        Self { base: theta, slope }
    }

    pub fn at(&self, t: u64, out: &mut [f64]) {
        let t = t as f64;
        for ((o, b), s) in out.iter_mut().zip(&self.base).zip(&self.slope) {
            *o = b + s * t;
        }
    }

    pub fn dim(&self) -> usize {
        self.base.len()
    }
}

/// A parsed case file with its optional meter placement.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseFile {
    pub case: GridCase,
    pub placement: Option<MeterPlacement>,
}

enum Record {
    Bus(Bus),
    Branch(Branch),
    Ref(u32),
    Flow(FlowMeter),
    Inj(u32),
}

fn syntax(line: usize, message: impl Into<String>) -> Error {
    Error::Syntax { line, message: message.into() }
}

fn parse_records(text: &str) -> Result<Vec<(usize, Record)>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()));
    match lines.by_ref().find(|(_, l)| !l.is_empty()) {
        Some((_, l)) if l.split_whitespace().collect::<Vec<_>>() == ["gridcase", "v1"] => {}
        Some((n, l)) => return Err(syntax(n, format!("expected header `{HEADER}`, found `{l}`"))),
        None => return Err(syntax(1, format!("empty file; expected header `{HEADER}`"))),
    }
    let mut out = Vec::new();
    for (n, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let arity = |k: usize| {
            if fields.len() == k + 1 {
                Ok(())
            } else {
                Err(syntax(n, format!("`{}` takes {k} field(s), found {}", fields[0], fields.len() - 1)))
            }
        };
        let id = |i: usize| {
            fields[i].parse::<u32>().map_err(|_| syntax(n, format!("field {}: invalid bus id `{}`", i + 1, fields[i])))
        };
        let num = |i: usize| {
            fields[i].parse::<f64>().map_err(|_| syntax(n, format!("field {}: invalid number `{}`", i + 1, fields[i])))
        };
        let rec = match fields[0] {
            "bus" => {
                arity(2)?;
                Record::Bus(Bus { id: id(1)?, load_watts: num(2)? })
            }
            "branch" => {
                arity(3)?;
                Record::Branch(Branch { from: id(1)?, to: id(2)?, susceptance: num(3)? })
            }
            "ref" => {
                arity(1)?;
                Record::Ref(id(1)?)
            }
            "flowmeter" => {
                arity(2)?;
                let idx: usize = fields[1]
                    .parse()
                    .ok()
                    .filter(|&i| i >= 1)
                    .ok_or_else(|| syntax(n, format!("field 2: invalid branch index `{}`", fields[1])))?;
                let direction = match fields[2] {
                    "fwd" => FlowDirection::Fwd,
                    "rev" => FlowDirection::Rev,
                    other => return Err(syntax(n, format!("field 3: direction must be fwd or rev, found `{other}`"))),
                };
                Record::Flow(FlowMeter { branch: idx - 1, direction })
            }
            "injmeter" => {
                arity(1)?;
                Record::Inj(id(1)?)
            }
            other => return Err(syntax(n, format!("unknown record `{other}`"))),
        };
        out.push((n, rec));
    }
    Ok(out)
}

/// Parses a case file, including any meter records it contains.
pub fn parse_case(text: &str) -> Result<CaseFile> {
    let mut buses = Vec::new();
    let mut branches = Vec::new();
    let mut reference = None;
    let mut placement = MeterPlacement::default();
    for (n, rec) in parse_records(text)? {
        match rec {
            Record::Bus(b) => buses.push(b),
            Record::Branch(b) => branches.push(b),
            Record::Ref(r) => {
                if reference.replace(r).is_some() {
                    return Err(Error::Semantic(format!("line {n}: reference bus given twice")));
                }
            }
            Record::Flow(f) => placement.flow_meters.push(f),
            Record::Inj(b) => placement.injection_meters.push(b),
        }
    }
    let reference = reference.ok_or_else(|| Error::Semantic("missing `ref` record".into()))?;
    let case = GridCase::new(buses, branches, reference)?;
    let placement = if placement.is_empty() { None } else { Some(placement) };
    Ok(CaseFile { case, placement })
}

/// Parses a placement file: the case header followed only by meter records.
pub fn parse_placement(text: &str) -> Result<MeterPlacement> {
    let mut placement = MeterPlacement::default();
    for (n, rec) in parse_records(text)? {
        match rec {
            Record::Flow(f) => placement.flow_meters.push(f),
            Record::Inj(b) => placement.injection_meters.push(b),
            _ => return Err(syntax(n, "placement files may contain only flowmeter and injmeter records")),
        }
    }
    Ok(placement)
}

/// Canonical text form: header, reference, buses by id, branches in order,
/// then meters.
pub fn serialize_case(case: &GridCase, placement: Option<&MeterPlacement>) -> String {
    let mut s = format!("{HEADER}\nref {}\n", case.reference_bus);
    for b in &case.buses {
        let _ = writeln!(s, "bus {} {}", b.id, b.load_watts);
    }
    for br in &case.branches {
        let _ = writeln!(s, "branch {} {} {}", br.from, br.to, br.susceptance);
    }
    if let Some(p) = placement {
        write_meters(&mut s, p);
    }
    s
}

pub fn serialize_placement(placement: &MeterPlacement) -> String {
    let mut s = format!("{HEADER}\n");
    write_meters(&mut s, placement);
    s
}

fn write_meters(s: &mut String, p: &MeterPlacement) {
    for f in &p.flow_meters {
        let dir = match f.direction {
            FlowDirection::Fwd => "fwd",
            FlowDirection::Rev => "rev",
        };
        let _ = writeln!(s, "flowmeter {} {dir}", f.branch + 1);
    }
    for b in &p.injection_meters {
        let _ = writeln!(s, "injmeter {b}");
    }
}

/// The bundled IEEE 14-bus case and placement.
pub fn ieee14() -> (GridCase, MeterPlacement) {
    let file = parse_case(IEEE14_CASE).expect("bundled case parses");
    (file.case, file.placement.expect("bundled case has meters"))
}

/// Meter readings computed directly from topology: `b (θ_i − θ_j)` per flow
/// meter and the sum over incident branches per injection meter. Independent
/// of [`GridCase::build_h`].
pub fn meter_readings(case: &GridCase, placement: &MeterPlacement, theta: &[f64]) -> Result<Vec<f64>> {
    let angle: BTreeMap<u32, f64> = case.state_buses().into_iter().zip(theta.iter().copied()).collect();
    if theta.len() != case.num_states() {
        return Err(Error::DimensionMismatch { expected: case.num_states(), actual: theta.len() });
    }
    let ang = |b: u32| angle.get(&b).copied().unwrap_or(0.0);
    let mut out = Vec::with_capacity(placement.len());
    for f in &placement.flow_meters {
        let br =
            case.branches.get(f.branch).ok_or_else(|| Error::Placement(format!("missing branch {}", f.branch + 1)))?;
        let flow = br.susceptance * (ang(br.from) - ang(br.to));
        out.push(if f.direction == FlowDirection::Fwd { flow } else { -flow });
    }
    for &bus in &placement.injection_meters {
        let mut total = 0.0;
        for br in &case.branches {
            if br.from == bus {
                total += br.susceptance * (ang(bus) - ang(br.to));
            } else if br.to == bus {
                total += br.susceptance * (ang(bus) - ang(br.from));
            }
        }
        out.push(total);
    }
    Ok(out)
}
