// Copyright 2026 The fluxquant Authors
// SPDX-License-Identifier: Apache-2.0

//! Circuit netlists: data model, line-oriented parser, serializer and
//! validator.
//!
//! ```text
//! circuit <name>
//! branch <id> junction EJ=<GHz> C=<fF> from <node> to <node>
//! branch <id> capacitor C=<fF> from <node> to <node>
//! branch <id> inductor L=<nH> from <node> to <node>
//! mesh <id> branches <[+|-]id>[,...] flux=<Phi0> [noise sigma=<Phi0> tc=<ns>] [tone A=<Phi0> w=<rad/ns> ph=<rad>]
//! ```
//!
//! `#` starts a comment. The noise clause additionally accepts
//! `band=<rad/ns>` and `modes=<count>`; a mesh may carry several tones.
//! For meshes closed by a capacitor, `flux=` is the flux after absorbing
//! the Lenz sign, so such meshes use the same orientation rule as
//! superconducting loops.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::noise::{NoiseSpec, MIN_BAND_FACTOR};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BranchKind {
    /// Josephson junction with energy `ej` (h·GHz) and capacitance `c` (fF).
    Junction { ej: f64, c: f64 },
    /// Linear capacitor, fF.
    Capacitor { c: f64 },
    /// Linear inductor, nH.
    Inductor { l: f64 },
}

impl BranchKind {
    /// Physical capacitance in fF, if the element has one.
    pub fn capacitance(&self) -> Option<f64> {
        match *self {
            BranchKind::Junction { c, .. } | BranchKind::Capacitor { c } => Some(c),
            BranchKind::Inductor { .. } => None,
        }
    }

    pub fn is_inductor(&self) -> bool {
        matches!(self, BranchKind::Inductor { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            BranchKind::Junction { .. } => "junction",
            BranchKind::Capacitor { .. } => "capacitor",
            BranchKind::Inductor { .. } => "inductor",
        }
    }
}

/// One lumped element. Its positive orientation runs `from → to`.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub id: String,
    pub kind: BranchKind,
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshMember {
    pub branch: String,
    /// +1 when the branch orientation agrees with the mesh flux, −1 otherwise.
    pub sign: i8,
}

/// Deterministic flux modulation `A cos(ωt + ph)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tone {
    /// Amplitude in units of Φ₀.
    pub amplitude: f64,
    /// Angular frequency, rad/ns.
    pub frequency: f64,
    /// Phase, rad.
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluxDrive {
    /// Working-point flux in units of Φ₀.
    pub static_value: f64,
    pub noise: Option<NoiseSpec>,
    pub tones: Vec<Tone>,
}

impl FluxDrive {
    pub fn fixed(static_value: f64) -> Self {
        Self {
            static_value,
            noise: None,
            tones: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub id: String,
    pub members: Vec<MeshMember>,
    pub drive: FluxDrive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitNetlist {
    pub name: String,
    pub branches: Vec<Branch>,
    pub meshes: Vec<Mesh>,
}

impl CircuitNetlist {
    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }

    pub fn mesh_count(&self) -> usize {
        self.meshes.len()
    }

    pub fn branch_index(&self, id: &str) -> Option<usize> {
        self.branches.iter().position(|b| b.id == id)
    }

    pub fn mesh_index(&self, id: &str) -> Option<usize> {
        self.meshes.iter().position(|m| m.id == id)
    }

    /// Static reduced fluxes φₑ⁰ of all meshes, rad.
    pub fn static_phases(&self) -> Vec<f64> {
        self.meshes
            .iter()
            .map(|m| crate::units::flux_to_phase(m.drive.static_value))
            .collect()
    }

    /// Fails with the first violation if the netlist is not valid.
    pub fn ensure_valid(&self) -> Result<()> {
        match validate(self).into_iter().next() {
            None => Ok(()),
            Some(v) => Err(Error::InvalidNetlist(v.message)),
        }
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut tokens = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                tokens.push(Token {
                    text: &line[s..i],
                    column: line[..s].chars().count() + 1,
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        tokens.push(Token {
            text: &line[s..],
            column: line[..s].chars().count() + 1,
        });
    }
    tokens
}

struct LineParser<'a> {
    line: usize,
    tokens: Vec<Token<'a>>,
    pos: usize,
    end_column: usize,
}

impl<'a> LineParser<'a> {
    fn syntax(&self, column: usize, message: impl Into<String>) -> Error {
        Error::Syntax {
            line: self.line,
            column,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<&Token<'a>> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self, what: &str) -> Result<&Token<'a>> {
        let end = self.end_column;
        let line = self.line;
        let tok = self.tokens.get(self.pos).ok_or_else(|| Error::Syntax {
            line,
            column: end,
            message: format!("expected {what}"),
        })?;
        self.pos += 1;
        Ok(tok)
    }

    fn keyword(&mut self, word: &str) -> Result<()> {
        let tok = self.next(&format!("`{word}`"))?;
        if tok.text != word {
            let (col, text) = (tok.column, tok.text.to_string());
            return Err(self.syntax(col, format!("expected `{word}`, found `{text}`")));
        }
        Ok(())
    }

    fn identifier(&mut self, what: &str) -> Result<String> {
        let tok = self.next(what)?;
        let (col, text) = (tok.column, tok.text);
        if !is_identifier(text) {
            return Err(self.syntax(col, format!("invalid {what} `{text}`")));
        }
        Ok(text.to_string())
    }

    /// Parses `key=value` and returns the value with its column.
    fn key_value(&mut self, key: &str) -> Result<(f64, usize)> {
        let tok = self.next(&format!("`{key}=`"))?;
        let (col, text) = (tok.column, tok.text);
        let value = text
            .strip_prefix(key)
            .and_then(|rest| rest.strip_prefix('='))
            .ok_or_else(|| self.syntax(col, format!("expected `{key}=<value>`, found `{text}`")))?;
        let parsed =
            parse_number(value).ok_or_else(|| self.syntax(col + key.len() + 1, format!("invalid number `{value}`")))?;
        Ok((parsed, col))
    }

    fn finish(&self) -> Result<()> {
        match self.peek() {
            None => Ok(()),
            Some(tok) => Err(self.syntax(tok.column, format!("unexpected `{}`", tok.text))),
        }
    }
}

fn is_identifier(text: &str) -> bool {
    !text.is_empty()
        && text
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-'))
        && !text.starts_with('-')
}

fn parse_number(text: &str) -> Option<f64> {
    let v: f64 = text.parse().ok()?;
    v.is_finite().then_some(v)
}

fn require_positive(line: usize, id: &str, name: &str, value: f64) -> Result<()> {
    if value > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveParameter {
            line,
            id: id.to_string(),
            name: name.to_string(),
            value,
        })
    }
}

fn require_non_negative(line: usize, id: &str, name: &str, value: f64) -> Result<()> {
    if value >= 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveParameter {
            line,
            id: id.to_string(),
            name: name.to_string(),
            value,
        })
    }
}

/// Parses netlist text.
pub fn parse_netlist(text: &str) -> Result<CircuitNetlist> {
    let mut name: Option<String> = None;
    let mut branches: Vec<Branch> = Vec::new();
    let mut meshes: Vec<Mesh> = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let tokens = tokenize(content);
        if tokens.is_empty() {
            continue;
        }
        let mut p = LineParser {
            line: line_no,
            tokens,
            pos: 0,
            end_column: content.trim_end().chars().count() + 1,
        };
        let head = p.next("statement")?;
        let (head_text, head_col) = (head.text, head.column);
        match head_text {
            "circuit" => {
                if name.is_some() {
                    return Err(p.syntax(head_col, "circuit name declared twice"));
                }
                name = Some(p.identifier("circuit name")?);
                p.finish()?;
            }
            "branch" => {
                let id = p.identifier("branch id")?;
                if !seen.insert(id.clone()) {
                    return Err(Error::DuplicateId { line: line_no, id });
                }
                let kind_tok = p.next("element kind")?;
                let (kind_text, kind_col) = (kind_tok.text, kind_tok.column);
                let kind = match kind_text {
                    "junction" => {
                        let (ej, _) = p.key_value("EJ")?;
                        let (c, _) = p.key_value("C")?;
                        require_positive(line_no, &id, "EJ", ej)?;
                        require_positive(line_no, &id, "C", c)?;
                        BranchKind::Junction { ej, c }
                    }
                    "capacitor" => {
                        let (c, _) = p.key_value("C")?;
                        require_positive(line_no, &id, "C", c)?;
                        BranchKind::Capacitor { c }
                    }
                    "inductor" => {
                        let (l, _) = p.key_value("L")?;
                        require_positive(line_no, &id, "L", l)?;
                        BranchKind::Inductor { l }
                    }
                    other => {
                        return Err(p.syntax(
                            kind_col,
                            format!("unknown element kind `{other}` (junction, capacitor, inductor)"),
                        ))
                    }
                };
                p.keyword("from")?;
                let from = p.identifier("node")?;
                p.keyword("to")?;
                let to = p.identifier("node")?;
                p.finish()?;
                branches.push(Branch { id, kind, from, to });
            }
            "mesh" => {
                let id = p.identifier("mesh id")?;
                if !seen.insert(id.clone()) {
                    return Err(Error::DuplicateId { line: line_no, id });
                }
                p.keyword("branches")?;
                let list_tok = p.next("branch list")?;
                let (list_text, list_col) = (list_tok.text, list_tok.column);
                let mut members = Vec::new();
                let mut offset = 0;
                for item in list_text.split(',') {
                    let col = list_col + offset;
                    offset += item.chars().count() + 1;
                    let (sign, branch) = match item.as_bytes().first() {
                        Some(b'+') => (1, &item[1..]),
                        Some(b'-') => (-1, &item[1..]),
                        _ => (1, item),
                    };
                    if !is_identifier(branch) {
                        return Err(p.syntax(col, format!("invalid branch reference `{item}`")));
                    }
                    if !branches.iter().any(|b| b.id == branch) {
                        return Err(Error::UnknownBranch {
                            line: line_no,
                            mesh: id,
                            branch: branch.to_string(),
                        });
                    }
                    members.push(MeshMember {
                        branch: branch.to_string(),
                        sign,
                    });
                }
                let (flux, _) = p.key_value("flux")?;
                let mut drive = FluxDrive::fixed(flux);
                while let Some(tok) = p.peek() {
                    let (text, col) = (tok.text, tok.column);
                    p.pos += 1;
                    match text {
                        "noise" => {
                            if drive.noise.is_some() {
                                return Err(p.syntax(col, "noise declared twice"));
                            }
                            let (sigma, _) = p.key_value("sigma")?;
                            let (tc, _) = p.key_value("tc")?;
                            require_positive(line_no, &id, "sigma", sigma)?;
                            require_positive(line_no, &id, "tc", tc)?;
                            let mut noise = NoiseSpec::new(sigma, tc);
                            loop {
                                match p.peek().map(|t| t.text) {
                                    Some(t) if t.starts_with("band=") => {
                                        let (band, _) = p.key_value("band")?;
                                        require_positive(line_no, &id, "band", band)?;
                                        noise.band_limit = band;
                                    }
                                    Some(t) if t.starts_with("modes=") => {
                                        let (modes, c) = p.key_value("modes")?;
                                        require_positive(line_no, &id, "modes", modes)?;
                                        if modes.fract() != 0.0 {
                                            return Err(p.syntax(c, "modes must be an integer"));
                                        }
                                        noise.mode_count = modes as usize;
                                    }
                                    _ => break,
                                }
                            }
                            drive.noise = Some(noise);
                        }
                        "tone" => {
                            let (amplitude, _) = p.key_value("A")?;
                            let (frequency, _) = p.key_value("w")?;
                            let (phase, _) = p.key_value("ph")?;
                            require_non_negative(line_no, &id, "A", amplitude)?;
                            require_non_negative(line_no, &id, "w", frequency)?;
                            drive.tones.push(Tone {
                                amplitude,
                                frequency,
                                phase,
                            });
                        }
                        other => {
                            return Err(p.syntax(col, format!("unexpected `{other}`")));
                        }
                    }
                }
                meshes.push(Mesh { id, members, drive });
            }
            other => return Err(p.syntax(head_col, format!("unknown statement `{other}` (circuit, branch, mesh)"))),
        }
    }

    let name = name.ok_or(Error::Syntax {
        line: 1,
        column: 1,
        message: "missing `circuit <name>` statement".into(),
    })?;
    Ok(CircuitNetlist { name, branches, meshes })
}

impl fmt::Display for CircuitNetlist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "circuit {}", self.name)?;
        for b in &self.branches {
            match b.kind {
                BranchKind::Junction { ej, c } => write!(f, "branch {} junction EJ={ej:?} C={c:?}", b.id)?,
                BranchKind::Capacitor { c } => write!(f, "branch {} capacitor C={c:?}", b.id)?,
                BranchKind::Inductor { l } => write!(f, "branch {} inductor L={l:?}", b.id)?,
            }
            writeln!(f, " from {} to {}", b.from, b.to)?;
        }
        for m in &self.meshes {
            let list: Vec<String> = m
                .members
                .iter()
                .map(|mm| format!("{}{}", if mm.sign < 0 { '-' } else { '+' }, mm.branch))
                .collect();
            write!(
                f,
                "mesh {} branches {} flux={:?}",
                m.id,
                list.join(","),
                m.drive.static_value
            )?;
            if let Some(n) = &m.drive.noise {
                write!(
                    f,
                    " noise sigma={:?} tc={:?} band={:?} modes={}",
                    n.sigma, n.t_c, n.band_limit, n.mode_count
                )?;
            }
            for t in &m.drive.tones {
                write!(f, " tone A={:?} w={:?} ph={:?}", t.amplitude, t.frequency, t.phase)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationKind {
    SelfLoop,
    BranchNotInMesh,
    EmptyMesh,
    RepeatedMember,
    OpenLoop,
    NotSimpleLoop,
    InductorCount,
    CapacitiveNetworkDisconnected,
    DependentMeshes,
    NoiseBand,
}

/// A violated netlist invariant. `subject` is the offending id.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub subject: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

/// Checks every structural invariant and returns all violations found.
///
/// Mesh membership is taken as declared: the check covers closure of each
/// mesh and independence of the mesh set, not whether a mesh is the
/// innermost loop of a planar drawing.
pub fn validate(netlist: &CircuitNetlist) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |kind, subject: &str, message: String| {
        out.push(Violation {
            kind,
            subject: subject.to_string(),
            message,
        })
    };
    let branch_by_id: HashMap<&str, &Branch> = netlist.branches.iter().map(|b| (b.id.as_str(), b)).collect();

    for b in &netlist.branches {
        if b.from == b.to {
            push(
                ViolationKind::SelfLoop,
                &b.id,
                format!("branch `{}` connects node `{}` to itself", b.id, b.from),
            );
        }
    }

    let mut covered: HashSet<&str> = HashSet::new();
    let mut any_open = false;
    for mesh in &netlist.meshes {
        if mesh.members.is_empty() {
            push(
                ViolationKind::EmptyMesh,
                &mesh.id,
                format!("mesh `{}` has no branches", mesh.id),
            );
            continue;
        }
        let mut in_mesh: HashSet<&str> = HashSet::new();
        let mut repeated = false;
        for m in &mesh.members {
            covered.insert(m.branch.as_str());
            if !in_mesh.insert(m.branch.as_str()) {
                repeated = true;
            }
        }
        if repeated {
            push(
                ViolationKind::RepeatedMember,
                &mesh.id,
                format!("mesh `{}` lists a branch more than once", mesh.id),
            );
            continue;
        }

        // Directed edges in traversal order.
        let mut balance: BTreeMap<&str, i32> = BTreeMap::new();
        let mut degree: BTreeMap<&str, usize> = BTreeMap::new();
        let mut edges = Vec::new();
        let mut unknown = false;
        for m in &mesh.members {
            let Some(b) = branch_by_id.get(m.branch.as_str()) else {
                unknown = true;
                continue;
            };
            let (tail, head) = if m.sign >= 0 {
                (b.from.as_str(), b.to.as_str())
            } else {
                (b.to.as_str(), b.from.as_str())
            };
            *balance.entry(tail).or_default() -= 1;
            *balance.entry(head).or_default() += 1;
            *degree.entry(tail).or_default() += 1;
            *degree.entry(head).or_default() += 1;
            edges.push((tail, head));
        }
        if unknown {
            any_open = true;
            push(
                ViolationKind::OpenLoop,
                &mesh.id,
                format!("mesh `{}` references a branch that does not exist", mesh.id),
            );
            continue;
        }
        let open: Vec<&str> = balance.iter().filter(|(_, &v)| v != 0).map(|(&k, _)| k).collect();
        if !open.is_empty() {
            any_open = true;
            push(
                ViolationKind::OpenLoop,
                &mesh.id,
                format!(
                    "mesh `{}` does not close: orientation signs leave node(s) {} unbalanced",
                    mesh.id,
                    open.join(", ")
                ),
            );
            continue;
        }
        let nodes: Vec<&str> = degree.keys().copied().collect();
        let simple = degree.values().all(|&d| d == 2) && connected(&nodes, &edges);
        if !simple {
            push(
                ViolationKind::NotSimpleLoop,
                &mesh.id,
                format!("mesh `{}` is not a single simple loop", mesh.id),
            );
        }

        let inductors: Vec<&str> = mesh
            .members
            .iter()
            .filter(|m| {
                branch_by_id
                    .get(m.branch.as_str())
                    .is_some_and(|b| b.kind.is_inductor())
            })
            .map(|m| m.branch.as_str())
            .collect();
        if inductors.len() > 1 {
            push(
                ViolationKind::InductorCount,
                &mesh.id,
                format!(
                    "mesh `{}` contains {} inductors ({}); at most one is allowed",
                    mesh.id,
                    inductors.len(),
                    inductors.join(", ")
                ),
            );
        }

        if let Some(noise) = &mesh.drive.noise {
            if noise.band_limit * noise.t_c < MIN_BAND_FACTOR {
                push(
                    ViolationKind::NoiseBand,
                    &mesh.id,
                    format!(
                        "mesh `{}` noise band limit {} rad/ns is below {}/t_c",
                        mesh.id, noise.band_limit, MIN_BAND_FACTOR
                    ),
                );
            }
        }
    }

    for b in &netlist.branches {
        if !covered.contains(b.id.as_str()) {
            push(
                ViolationKind::BranchNotInMesh,
                &b.id,
                format!("branch `{}` is not part of any mesh", b.id),
            );
        }
    }

    // Capacitive sub-network: junctions and capacitors must connect every node.
    let all_nodes: BTreeSet<&str> = netlist
        .branches
        .iter()
        .flat_map(|b| [b.from.as_str(), b.to.as_str()])
        .collect();
    let cap_edges: Vec<(&str, &str)> = netlist
        .branches
        .iter()
        .filter(|b| b.kind.capacitance().is_some())
        .map(|b| (b.from.as_str(), b.to.as_str()))
        .collect();
    if let Some(&start) = all_nodes.iter().next() {
        let reached = reachable(start, &cap_edges);
        let missing: Vec<&str> = all_nodes.iter().filter(|n| !reached.contains(*n)).copied().collect();
        if !missing.is_empty() {
            push(
                ViolationKind::CapacitiveNetworkDisconnected,
                missing[0],
                format!(
                    "capacitive sub-network of `{}` does not connect node(s) {}",
                    netlist.name,
                    missing.join(", ")
                ),
            );
        }
    }

    // Independence of the mesh constraints.
    let f = netlist.meshes.len();
    if f > 0 && !any_open {
        let n = netlist.branches.len();
        let mut r = DMatrix::<f64>::zeros(f, n);
        for (i, mesh) in netlist.meshes.iter().enumerate() {
            for m in &mesh.members {
                if let Some(j) = netlist.branch_index(&m.branch) {
                    r[(i, j)] = f64::from(m.sign.signum());
                }
            }
        }
        let rank = r.rank(1e-9);
        if rank < f {
            let ids: Vec<&str> = netlist.meshes.iter().map(|m| m.id.as_str()).collect();
            push(
                ViolationKind::DependentMeshes,
                ids[0],
                format!("meshes {} are linearly dependent (rank {rank} of {f})", ids.join(", ")),
            );
        }
    }

    out
}

fn reachable<'a>(start: &'a str, edges: &[(&'a str, &'a str)]) -> HashSet<&'a str> {
    let mut seen = HashSet::from([start]);
    let mut stack = vec![start];
    while let Some(node) = stack.pop() {
        for &(a, b) in edges {
            let next = if a == node {
                b
            } else if b == node {
                a
            } else {
                continue;
            };
            if seen.insert(next) {
                stack.push(next);
            }
        }
    }
    seen
}

fn connected(nodes: &[&str], edges: &[(&str, &str)]) -> bool {
    match nodes.first() {
        None => true,
        Some(&start) => reachable(start, edges).len() == nodes.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUID: &str = "\
circuit squid
branch jl junction EJ=10.0 C=1.0 from a to b
branch jr junction EJ=5.0  C=3.0 from a to b
mesh m1 branches +jl,-jr flux=0.25 noise sigma=0.002 tc=0.05
";

    const DOUBLE_SQUID: &str = "\
# two SQUID loops sharing the middle junction
circuit double_squid
branch j1 junction EJ=10 C=1 from a to b
branch j2 junction EJ=8  C=1 from a to b
branch j3 junction EJ=6  C=1 from a to b
mesh left  branches +j1,-j2 flux=0.1
mesh right branches +j2,-j3 flux=0.2
";

    #[test]
    fn parses_squid() {
        let n = parse_netlist(SQUID).unwrap();
        assert_eq!(n.name, "squid");
        assert_eq!(n.branch_count(), 2);
        assert_eq!(n.mesh_count(), 1);
        assert_eq!(n.branches[1].kind, BranchKind::Junction { ej: 5.0, c: 3.0 });
        assert_eq!(n.meshes[0].members[1].sign, -1);
        let noise = n.meshes[0].drive.noise.unwrap();
        assert_eq!(noise.sigma, 0.002);
        assert_eq!(noise.t_c, 0.05);
        assert!(validate(&n).is_empty());
    }

    #[test]
    fn parses_double_squid() {
        let n = parse_netlist(DOUBLE_SQUID).unwrap();
        assert_eq!((n.branch_count(), n.mesh_count()), (3, 2));
        assert!(validate(&n).is_empty());
    }

    #[test]
    fn rejects_negative_josephson_energy() {
        let text = SQUID.replace("EJ=10.0", "EJ=-1");
        match parse_netlist(&text) {
            Err(Error::NonPositiveParameter { line, id, name, .. }) => {
                assert_eq!((line, id.as_str(), name.as_str()), (2, "jl", "EJ"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reports_syntax_position() {
        let text = "circuit x\nbranch j1 junction EJ=1 C=oops from a to b\n";
        match parse_netlist(text) {
            Err(Error::Syntax { line, column, .. }) => assert_eq!((line, column), (2, 27)),
            other => panic!("unexpected {other:?}"),
        }
        let text = "circuit x\nbranch j1 resistor R=1 from a to b\n";
        match parse_netlist(text) {
            Err(Error::Syntax { line, column, .. }) => assert_eq!((line, column), (2, 11)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicates_and_unknown_members() {
        let dup = format!("{SQUID}branch jl capacitor C=1 from a to b\n");
        assert!(matches!(parse_netlist(&dup), Err(Error::DuplicateId { line: 5, .. })));
        let unknown = SQUID.replace("-jr", "-jx");
        assert!(matches!(
            parse_netlist(&unknown),
            Err(Error::UnknownBranch { ref branch, .. }) if branch == "jx"
        ));
    }

    #[test]
    fn missing_circuit_line() {
        assert!(matches!(
            parse_netlist("branch j junction EJ=1 C=1 from a to b\n"),
            Err(Error::Syntax { .. })
        ));
    }

    #[test]
    fn tones_and_noise_options() {
        let text = "circuit t\nbranch j junction EJ=1 C=1 from a to b\nbranch k junction EJ=1 C=1 from a to b\n\
mesh m branches +j,-k flux=0 noise sigma=0.01 tc=0.1 band=300 modes=64 tone A=0.01 w=2 ph=0.5 tone A=0 w=0 ph=0\n";
        let n = parse_netlist(text).unwrap();
        let d = &n.meshes[0].drive;
        assert_eq!(d.tones.len(), 2);
        assert_eq!(d.noise.unwrap().band_limit, 300.0);
        assert_eq!(d.noise.unwrap().mode_count, 64);
        let bad = text.replace("A=0.01", "A=-0.01");
        assert!(matches!(parse_netlist(&bad), Err(Error::NonPositiveParameter { .. })));
    }

    #[test]
    fn two_inductors_in_one_mesh() {
        let text = "\
circuit lloop
branch j  junction EJ=5 C=2 from a to b
branch l1 inductor L=10 from a to b
branch l2 inductor L=20 from a to b
mesh m1 branches +j,-l1 flux=0
mesh m2 branches +l1,-l2 flux=0
";
        let v = validate(&parse_netlist(text).unwrap());
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].kind, ViolationKind::InductorCount);
        assert!(v[0].message.contains("m2"));
    }

    #[test]
    fn open_loop_is_reported_once() {
        let text = SQUID.replace("-jr", "+jr");
        let v = validate(&parse_netlist(&text).unwrap());
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].kind, ViolationKind::OpenLoop);
        assert!(v[0].message.contains("m1"));
    }

    #[test]
    fn inductor_only_node_breaks_capacitive_network() {
        let text = "\
circuit bad
branch j junction EJ=5 C=2 from a to b
branch l1 inductor L=10 from b to c
branch c1 capacitor C=1 from c to a
branch l2 inductor L=10 from c to d
branch l3 inductor L=10 from d to a
mesh m1 branches +j,+l1,+c1 flux=0
mesh m2 branches -c1,+l2,+l3 flux=0
";
        // A node reached only through inductors always puts two of them in one loop.
        let v = validate(&parse_netlist(text).unwrap());
        assert!(v.iter().any(|x| x.kind == ViolationKind::InductorCount));
        let disc: Vec<_> = v
            .iter()
            .filter(|x| x.kind == ViolationKind::CapacitiveNetworkDisconnected)
            .collect();
        assert_eq!(disc.len(), 1, "{v:?}");
        assert_eq!(disc[0].subject, "d");
    }

    #[test]
    fn uncovered_branch_and_dependent_meshes() {
        let text = format!("{DOUBLE_SQUID}branch j4 junction EJ=1 C=1 from a to b\n");
        let v = validate(&parse_netlist(&text).unwrap());
        assert!(v
            .iter()
            .any(|x| x.kind == ViolationKind::BranchNotInMesh && x.subject == "j4"));

        let text = format!("{DOUBLE_SQUID}mesh outer branches +j1,-j3 flux=0\n");
        let v = validate(&parse_netlist(&text).unwrap());
        assert!(v.iter().any(|x| x.kind == ViolationKind::DependentMeshes));
    }

    #[test]
    fn validation_is_pure() {
        let text = SQUID.replace("-jr", "+jr");
        let n = parse_netlist(&text).unwrap();
        assert_eq!(validate(&n), validate(&n));
    }

    #[test]
    fn narrow_noise_band_is_flagged() {
        let text = SQUID.replace("tc=0.05", "tc=0.05 band=100");
        let v = validate(&parse_netlist(&text).unwrap());
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::NoiseBand);
    }

    #[test]
    fn serialize_round_trip_examples() {
        for text in [SQUID, DOUBLE_SQUID] {
            let n = parse_netlist(text).unwrap();
            let again = parse_netlist(&n.to_string()).unwrap();
            assert_eq!(n, again);
        }
    }
}
