//! Measurement patterns, the flow-based builder and the pattern-file parser.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::effective::{grid_edges, MAX_QUBITS};
use crate::error::{domain, Error, Result};

/// Lattice site `(m, n)`.
pub type Site = (usize, usize);

/// Single-qubit measurement basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Basis {
    /// `sigma_x`; same as `Equatorial(0)`.
    X,
    /// `sigma_z`; outcome `+1` is `|0>`.
    Z,
    /// `{|0> +- e^{i theta} |1>}`; outcome `+1` is the `+` vector.
    Equatorial(f64),
}

impl Basis {
    /// Angle of an equatorial basis (`X` is angle 0); `None` for `Z`.
    pub fn angle(&self) -> Option<f64> {
        match *self {
            Basis::X => Some(0.0),
            Basis::Z => None,
            Basis::Equatorial(theta) => Some(theta),
        }
    }
}

/// One measurement. The angle actually used is `(-1)^s theta + t pi`, with
/// `s` and `t` the parities of the outcome bits in the two domains.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub site: Site,
    pub basis: Basis,
    /// Earlier steps whose outcomes flip the angle's sign.
    pub s_domain: Vec<usize>,
    /// Earlier steps whose outcomes add `pi` to the angle.
    pub t_domain: Vec<usize>,
}

/// Byproduct correction `X^x Z^z` removed from one output qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputCorrection {
    pub site: Site,
    pub x_domain: Vec<usize>,
    pub z_domain: Vec<usize>,
}

/// Ordered measurements on an `M x N` cluster, with feedforward.
///
/// Logical inputs are the `inputs` sites, in order (input `k` is bit `k` of a
/// logical basis index); logical outputs are the `outputs` sites, likewise.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementPattern {
    pub m: usize,
    pub n: usize,
    pub periodic: bool,
    pub inputs: Vec<Site>,
    pub steps: Vec<Step>,
    pub outputs: Vec<OutputCorrection>,
}

impl MeasurementPattern {
    /// No measurements; every site is an output.
    pub fn empty(m: usize, n: usize, periodic: bool) -> Self {
        let outputs = (0..m)
            .flat_map(|r| (0..n).map(move |c| OutputCorrection { site: (r, c), x_domain: vec![], z_domain: vec![] }))
            .collect();
        MeasurementPattern { m, n, periodic, inputs: vec![], steps: vec![], outputs }
    }

    pub fn output_sites(&self) -> Vec<Site> {
        self.outputs.iter().map(|o| o.site).collect()
    }

    pub fn measured_sites(&self) -> Vec<Site> {
        self.steps.iter().map(|s| s.site).collect()
    }

    /// Checks the structural invariants: sites exist, each site is measured
    /// at most once and is either measured or an output, domains point to
    /// earlier steps, `Z` steps carry no adaptation.
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return domain("pattern lattice dimensions must be positive");
        }
        if self.m * self.n > MAX_QUBITS {
            return Err(Error::CapExceeded { what: "pattern lattice", size: self.m * self.n, cap: MAX_QUBITS });
        }
        let in_range = |s: Site| s.0 < self.m && s.1 < self.n;
        let mut role: BTreeMap<Site, &str> = BTreeMap::new();
        for (i, step) in self.steps.iter().enumerate() {
            if !in_range(step.site) {
                return domain(format!("step {i}: site {:?} outside the {}x{} lattice", step.site, self.m, self.n));
            }
            if role.insert(step.site, "measured").is_some() {
                return domain(format!("step {i}: site {:?} is measured twice", step.site));
            }
            if let Some(&d) = step.s_domain.iter().chain(&step.t_domain).find(|&&d| d >= i) {
                return domain(format!("step {i}: adaptation references step {d}, which is not earlier"));
            }
            if step.basis == Basis::Z && !(step.s_domain.is_empty() && step.t_domain.is_empty()) {
                return domain(format!("step {i}: Z measurements take no adaptation"));
            }
            if let Basis::Equatorial(theta) = step.basis {
                if !theta.is_finite() {
                    return domain(format!("step {i}: angle must be finite"));
                }
            }
        }
        for out in &self.outputs {
            if !in_range(out.site) {
                return domain(format!("output site {:?} outside the {}x{} lattice", out.site, self.m, self.n));
            }
            if let Some(prev) = role.insert(out.site, "output") {
                return domain(format!("output site {:?} is also {prev}", out.site));
            }
            if let Some(&d) = out.x_domain.iter().chain(&out.z_domain).find(|&&d| d >= self.steps.len()) {
                return domain(format!("output {:?}: correction references missing step {d}", out.site));
            }
        }
        if let Some(s) = (0..self.m).flat_map(|r| (0..self.n).map(move |c| (r, c))).find(|s| !role.contains_key(s)) {
            return domain(format!("site {s:?} is neither measured nor an output"));
        }
        let distinct: BTreeSet<Site> = self.inputs.iter().copied().collect();
        if distinct.len() != self.inputs.len() {
            return domain("input sites must be distinct");
        }
        if let Some(s) = self.inputs.iter().find(|s| !in_range(**s)) {
            return domain(format!("input site {s:?} outside the lattice"));
        }
        Ok(())
    }
}

/// Builds patterns on a grid cluster by tracking byproducts through the
/// graph: `Z`-measuring a site removes it from the graph, and measuring a
/// site `i` with flow successor `f` is corrected by the stabilizer of `f`.
#[derive(Debug, Clone)]
pub struct PatternBuilder {
    m: usize,
    n: usize,
    periodic: bool,
    inputs: Vec<Site>,
    adjacency: BTreeMap<Site, BTreeSet<Site>>,
    /// Pending `(x, z)` byproduct signals on unmeasured sites.
    pending: BTreeMap<Site, (BTreeSet<usize>, BTreeSet<usize>)>,
    steps: Vec<Step>,
}

fn toggle(set: &mut BTreeSet<usize>, signals: &BTreeSet<usize>) {
    for &s in signals {
        if !set.remove(&s) {
            set.insert(s);
        }
    }
}

impl PatternBuilder {
    pub fn new(m: usize, n: usize, periodic: bool, inputs: &[Site]) -> Self {
        let mut adjacency: BTreeMap<Site, BTreeSet<Site>> = BTreeMap::new();
        for r in 0..m {
            for c in 0..n {
                adjacency.insert((r, c), BTreeSet::new());
            }
        }
        for (a, b) in grid_edges(m, n, periodic) {
            let (sa, sb) = ((a / n, a % n), (b / n, b % n));
            adjacency.get_mut(&sa).unwrap().insert(sb);
            adjacency.get_mut(&sb).unwrap().insert(sa);
        }
        let pending = adjacency.keys().map(|&s| (s, Default::default())).collect();
        PatternBuilder { m, n, periodic, inputs: inputs.to_vec(), adjacency, pending, steps: vec![] }
    }

    fn live(&self, site: Site) -> Result<()> {
        if !self.adjacency.contains_key(&site) {
            return domain(format!("site {site:?} is already measured or outside the lattice"));
        }
        Ok(())
    }

    fn remove(&mut self, site: Site) -> BTreeSet<Site> {
        let nbrs = self.adjacency.remove(&site).unwrap_or_default();
        for nb in &nbrs {
            if let Some(set) = self.adjacency.get_mut(nb) {
                set.remove(&site);
            }
        }
        nbrs
    }

    /// `Z` measurement: detaches `site`, leaving `Z` byproducts on its neighbours.
    pub fn cut(&mut self, site: Site) -> Result<&mut Self> {
        self.live(site)?;
        let index = self.steps.len();
        self.steps.push(Step { site, basis: Basis::Z, s_domain: vec![], t_domain: vec![] });
        let (x, _) = self.pending.remove(&site).unwrap_or_default();
        let mut signal: BTreeSet<usize> = BTreeSet::from([index]);
        toggle(&mut signal, &x);
        for nb in self.remove(site) {
            toggle(&mut self.pending.get_mut(&nb).unwrap().1, &signal);
        }
        Ok(self)
    }

    /// Equatorial measurement at `angle` with flow successor `flow`, a
    /// neighbour of `site` that is not yet measured.
    pub fn measure(&mut self, site: Site, angle: f64, flow: Site) -> Result<&mut Self> {
        self.live(site)?;
        if !self.adjacency[&site].contains(&flow) {
            return domain(format!("flow target {flow:?} is not a live neighbour of {site:?}"));
        }
        let index = self.steps.len();
        let (x, z) = self.pending.remove(&site).unwrap_or_default();
        self.steps.push(Step {
            site,
            basis: Basis::Equatorial(angle),
            s_domain: x.into_iter().collect(),
            t_domain: z.into_iter().collect(),
        });
        let signal = BTreeSet::from([index]);
        toggle(&mut self.pending.get_mut(&flow).unwrap().0, &signal);
        let flow_nbrs: Vec<Site> = self.adjacency[&flow].iter().copied().filter(|&k| k != site).collect();
        for k in flow_nbrs {
            toggle(&mut self.pending.get_mut(&k).unwrap().1, &signal);
        }
        self.remove(site);
        Ok(self)
    }

    /// Finish with the given output order; every other site must be measured.
    pub fn finish(&self, outputs: &[Site]) -> Result<MeasurementPattern> {
        let outputs = outputs
            .iter()
            .map(|&site| {
                self.live(site)?;
                let (x, z) = &self.pending[&site];
                Ok(OutputCorrection {
                    site,
                    x_domain: x.iter().copied().collect(),
                    z_domain: z.iter().copied().collect(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let pattern = MeasurementPattern {
            m: self.m,
            n: self.n,
            periodic: self.periodic,
            inputs: self.inputs.clone(),
            steps: self.steps.clone(),
            outputs,
        };
        pattern.validate()?;
        Ok(pattern)
    }
}

/// Wire along row 0 of a `1 x (k+1)` open cluster: site `(0, i)` measured at
/// `angles[i]`, output at `(0, k)`.
///
/// Measuring at angle `a` applies `H P(-a)` to the logical qubit, so the
/// wire realizes `H P(-a_k) ... H P(-a_1)`, with `P(phi) = diag(1, e^{i phi})`.
pub fn wire_pattern(angles: &[f64]) -> Result<MeasurementPattern> {
    let len = angles.len() + 1;
    let mut b = PatternBuilder::new(1, len, false, &[(0, 0)]);
    for (i, &a) in angles.iter().enumerate() {
        b.measure((0, i), a, (0, i + 1))?;
    }
    b.finish(&[(0, len - 1)])
}

/// Five-site wire realizing `Rx(theta3) Rz(theta2) Rx(theta1)` up to a
/// global phase, with `R_P(t) = exp(-i t P / 2)`.
pub fn wire_rotation_pattern(theta1: f64, theta2: f64, theta3: f64) -> MeasurementPattern {
    wire_pattern(&[0.0, -theta1, -theta2, -theta3]).expect("five-site wire is well formed")
}

/// Controlled-NOT on a `2 x 3` open patch.
///
/// Control: input and output at `(1, 1)`. Target: input `(0, 0)`, output
/// `(0, 2)`, through `(0, 1)`. Sites `(1, 0)` and `(1, 2)` are cut. Logical
/// input/output 0 is the control and 1 the target; no residual Clifford.
pub fn cnot_pattern() -> MeasurementPattern {
    cnot_pattern_embedded(2, 3, false, (0, 0)).expect("2x3 patch is well formed")
}

/// The CNOT patch with its top-left corner at `origin` inside a larger
/// cluster; every site outside the patch is cut first.
pub fn cnot_pattern_embedded(m: usize, n: usize, periodic: bool, origin: Site) -> Result<MeasurementPattern> {
    if origin.0 + 2 > m || origin.1 + 3 > n {
        return domain(format!("2x3 patch at {origin:?} does not fit in a {m}x{n} lattice"));
    }
    let at = |r: usize, c: usize| (origin.0 + r, origin.1 + c);
    let patch: BTreeSet<Site> = (0..2).flat_map(|r| (0..3).map(move |c| (r, c))).map(|(r, c)| at(r, c)).collect();
    let control = at(1, 1);
    let target_in = at(0, 0);
    let mut b = PatternBuilder::new(m, n, periodic, &[control, target_in]);
    for r in 0..m {
        for c in 0..n {
            if !patch.contains(&(r, c)) {
                b.cut((r, c))?;
            }
        }
    }
    b.cut(at(1, 0))?.cut(at(1, 2))?;
    b.measure(target_in, 0.0, at(0, 1))?.measure(at(0, 1), 0.0, at(0, 2))?;
    b.finish(&[control, at(0, 2)])
}

// ---------------------------------------------------------------------------
// Pattern files
//
//   # comment
//   lattice <M> <N> [open|periodic]
//   input <m> <n>
//   output <m> <n> [adapt]
//   <m> <n> <X|Z|E> <angle> <adapt>
//
// Measurement lines are numbered 0, 1, ... in file order. `adapt` is `-` or
// `;`-separated terms `s:i,j`, `t:i` (steps) or `x:i`, `z:i` (outputs).
// Angles are radians: a number, or `pi` with an optional signed factor and
// divisor (`-pi/4`, `3*pi/8`, `0.5pi`).
// ---------------------------------------------------------------------------

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut tokens = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        match (ch.is_whitespace(), start) {
            (true, Some(s)) => {
                tokens.push(Token { text: &line[s..i], column: s + 1 });
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        tokens.push(Token { text: &line[s..], column: s + 1 });
    }
    tokens
}

fn parse_err<T>(line: usize, column: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Parse { line, column, message: message.into() })
}

fn parse_usize(tok: &Token, line: usize, what: &str) -> Result<usize> {
    tok.text
        .parse()
        .or_else(|_| parse_err(line, tok.column, format!("expected {what} (non-negative integer), found `{}`", tok.text)))
}

/// Radians from a number or a multiple of `pi`.
pub fn parse_angle(text: &str) -> Option<f64> {
    if let Ok(v) = text.parse::<f64>() {
        return v.is_finite().then_some(v);
    }
    let (body, sign) = match text.strip_prefix('-') {
        Some(rest) => (rest, -1.0),
        None => (text.strip_prefix('+').unwrap_or(text), 1.0),
    };
    let pos = body.find("pi")?;
    let factor = match body[..pos].trim_end_matches('*') {
        "" => 1.0,
        f => f.parse::<f64>().ok()?,
    };
    let divisor = match &body[pos + 2..] {
        "" => 1.0,
        d => d.strip_prefix('/')?.parse::<f64>().ok().filter(|d| *d != 0.0)?,
    };
    let v = sign * factor * PI / divisor;
    v.is_finite().then_some(v)
}

/// Parsed adaptation terms keyed by their letter.
fn parse_adapt(tok: &Token, line: usize, allowed: &[char]) -> Result<BTreeMap<char, Vec<usize>>> {
    let mut out: BTreeMap<char, Vec<usize>> = BTreeMap::new();
    if tok.text == "-" {
        return Ok(out);
    }
    let mut offset = 0;
    for term in tok.text.split(';') {
        let col = tok.column + offset;
        offset += term.len() + 1;
        let Some((key, list)) = term.split_once(':') else {
            return parse_err(line, col, format!("adaptation term `{term}` must look like `s:0,1`"));
        };
        let mut chars = key.chars();
        let (Some(k), None) = (chars.next(), chars.next()) else {
            return parse_err(line, col, format!("unknown adaptation key `{key}`"));
        };
        if !allowed.contains(&k) {
            return parse_err(line, col, format!("adaptation key `{k}` not allowed here (expected one of {allowed:?})"));
        }
        let entry = out.entry(k).or_default();
        for idx in list.split(',').filter(|s| !s.is_empty()) {
            match idx.parse::<usize>() {
                Ok(i) => entry.push(i),
                Err(_) => return parse_err(line, col, format!("bad step index `{idx}`")),
            }
        }
    }
    Ok(out)
}

fn expect_len(tokens: &[Token], range: std::ops::RangeInclusive<usize>, line: usize, what: &str) -> Result<()> {
    if !range.contains(&tokens.len()) {
        let col = tokens.get(*range.end()).or(tokens.last()).map_or(1, |t| t.column);
        return parse_err(line, col, format!("`{what}` line takes {} to {} fields, found {}", range.start(), range.end(), tokens.len()));
    }
    Ok(())
}

impl FromStr for MeasurementPattern {
    type Err = Error;

    fn from_str(src: &str) -> Result<Self> {
        let mut dims: Option<(usize, usize, bool)> = None;
        let mut inputs = Vec::new();
        let mut steps = Vec::new();
        let mut outputs = Vec::new();
        for (lineno, raw) in src.lines().enumerate() {
            let line = lineno + 1;
            let content = raw.split('#').next().unwrap_or("");
            let tokens = tokenize(content);
            let Some(head) = tokens.first() else { continue };
            match head.text {
                "lattice" => {
                    expect_len(&tokens, 3..=4, line, "lattice")?;
                    if dims.is_some() {
                        return parse_err(line, head.column, "duplicate `lattice` line");
                    }
                    let m = parse_usize(&tokens[1], line, "row count")?;
                    let n = parse_usize(&tokens[2], line, "column count")?;
                    let periodic = match tokens.get(3).map(|t| t.text) {
                        None | Some("open") => false,
                        Some("periodic") => true,
                        Some(other) => {
                            return parse_err(line, tokens[3].column, format!("expected `open` or `periodic`, found `{other}`"))
                        }
                    };
                    dims = Some((m, n, periodic));
                }
                "input" => {
                    expect_len(&tokens, 3..=3, line, "input")?;
                    inputs.push((parse_usize(&tokens[1], line, "row")?, parse_usize(&tokens[2], line, "column")?));
                }
                "output" => {
                    expect_len(&tokens, 3..=4, line, "output")?;
                    let site = (parse_usize(&tokens[1], line, "row")?, parse_usize(&tokens[2], line, "column")?);
                    let adapt = match tokens.get(3) {
                        Some(t) => parse_adapt(t, line, &['x', 'z'])?,
                        None => BTreeMap::new(),
                    };
                    outputs.push(OutputCorrection {
                        site,
                        x_domain: adapt.get(&'x').cloned().unwrap_or_default(),
                        z_domain: adapt.get(&'z').cloned().unwrap_or_default(),
                    });
                }
                _ => {
                    expect_len(&tokens, 5..=5, line, "measurement")?;
                    let site = (parse_usize(&tokens[0], line, "row")?, parse_usize(&tokens[1], line, "column")?);
                    let angle = parse_angle(tokens[3].text).map_or_else(
                        || parse_err(line, tokens[3].column, format!("bad angle `{}`", tokens[3].text)),
                        Ok,
                    )?;
                    let basis = match tokens[2].text {
                        "X" | "x" | "Z" | "z" if angle != 0.0 => {
                            return parse_err(line, tokens[3].column, "X and Z measurements take angle 0")
                        }
                        "X" | "x" => Basis::X,
                        "Z" | "z" => Basis::Z,
                        "E" | "e" => Basis::Equatorial(angle),
                        other => return parse_err(line, tokens[2].column, format!("unknown basis `{other}` (X, Z or E)")),
                    };
                    let adapt = parse_adapt(&tokens[4], line, &['s', 't'])?;
                    let index = steps.len();
                    if let Some(&bad) = adapt.values().flatten().find(|&&d| d >= index) {
                        return parse_err(line, tokens[4].column, format!("step {index} cannot depend on step {bad}"));
                    }
                    steps.push(Step {
                        site,
                        basis,
                        s_domain: adapt.get(&'s').cloned().unwrap_or_default(),
                        t_domain: adapt.get(&'t').cloned().unwrap_or_default(),
                    });
                }
            }
        }
        let Some((m, n, periodic)) = dims else {
            return parse_err(src.lines().count().max(1), 1, "missing `lattice` line");
        };
        let pattern = MeasurementPattern { m, n, periodic, inputs, steps, outputs };
        pattern.validate()?;
        Ok(pattern)
    }
}

fn write_list(f: &mut fmt::Formatter<'_>, terms: &[(char, &[usize])]) -> fmt::Result {
    let parts: Vec<String> = terms
        .iter()
        .filter(|(_, v)| !v.is_empty())
        .map(|(k, v)| format!("{k}:{}", v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")))
        .collect();
    if parts.is_empty() {
        write!(f, "-")
    } else {
        write!(f, "{}", parts.join(";"))
    }
}

impl fmt::Display for MeasurementPattern {
    /// Pattern-file form; parses back to an equal pattern.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "lattice {} {} {}", self.m, self.n, if self.periodic { "periodic" } else { "open" })?;
        for (r, c) in &self.inputs {
            writeln!(f, "input {r} {c}")?;
        }
        for (i, step) in self.steps.iter().enumerate() {
            let (basis, angle) = match step.basis {
                Basis::X => ("X", 0.0),
                Basis::Z => ("Z", 0.0),
                Basis::Equatorial(t) => ("E", t),
            };
            write!(f, "{} {} {basis} {angle:?} ", step.site.0, step.site.1)?;
            write_list(f, &[('s', &step.s_domain), ('t', &step.t_domain)])?;
            writeln!(f, "  # step {i}")?;
        }
        for out in &self.outputs {
            write!(f, "output {} {} ", out.site.0, out.site.1)?;
            write_list(f, &[('x', &out.x_domain), ('z', &out.z_domain)])?;
            writeln!(f)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles() {
        assert_eq!(parse_angle("0.25"), Some(0.25));
        assert_eq!(parse_angle("pi"), Some(PI));
        assert_eq!(parse_angle("-pi/4"), Some(-PI / 4.0));
        assert_eq!(parse_angle("3*pi/8"), Some(3.0 * PI / 8.0));
        assert_eq!(parse_angle("0.5pi"), Some(0.5 * PI));
        assert_eq!(parse_angle("pie"), None);
        assert_eq!(parse_angle("pi/0"), None);
        assert_eq!(parse_angle("inf"), None);
    }

    #[test]
    fn wire_feedforward_domains() {
        let p = wire_rotation_pattern(0.1, 0.2, 0.3);
        assert_eq!(p.steps.len(), 4);
        // each X byproduct is absorbed by the next angle, each Z by the one after
        assert_eq!(p.steps[1].s_domain, vec![0]);
        assert!(p.steps[1].t_domain.is_empty());
        assert_eq!(p.steps[2].s_domain, vec![1]);
        assert_eq!(p.steps[2].t_domain, vec![0]);
        assert_eq!(p.outputs[0].x_domain, vec![3]);
        assert_eq!(p.outputs[0].z_domain, vec![2]);
    }

    #[test]
    fn cnot_layout() {
        let p = cnot_pattern();
        assert_eq!(p.inputs, vec![(1, 1), (0, 0)]);
        assert_eq!(p.output_sites(), vec![(1, 1), (0, 2)]);
        assert_eq!(p.measured_sites(), vec![(1, 0), (1, 2), (0, 0), (0, 1)]);
        let big = cnot_pattern_embedded(4, 4, true, (0, 0)).unwrap();
        assert_eq!(big.steps.len(), 14);
        assert!(cnot_pattern_embedded(2, 2, false, (0, 0)).is_err());
    }

    #[test]
    fn file_round_trip() {
        for p in [wire_rotation_pattern(0.3, -1.2, 2.0), cnot_pattern(), MeasurementPattern::empty(2, 2, true)] {
            let text = p.to_string();
            assert_eq!(text.parse::<MeasurementPattern>().unwrap(), p, "{text}");
        }
    }

    #[test]
    fn parse_errors_name_the_line() {
        let bad = "lattice 1 2\ninput 0 0\n0 0 Q 0 -\noutput 0 1\n";
        match bad.parse::<MeasurementPattern>() {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (3, 5)),
            other => panic!("{other:?}"),
        }
        let late = "lattice 1 3\n0 0 X 0 s:1\n0 1 X 0 -\noutput 0 2\n";
        assert!(matches!(late.parse::<MeasurementPattern>(), Err(Error::Parse { line: 2, .. })));
        let angle = "lattice 1 2\n0 0 E pi/x -\noutput 0 1\n";
        assert!(matches!(angle.parse::<MeasurementPattern>(), Err(Error::Parse { line: 2, column: 7, .. })));
        assert!(matches!("input 0 0\n".parse::<MeasurementPattern>(), Err(Error::Parse { .. })));
    }

    #[test]
    fn collisions_rejected() {
        let twice = "lattice 1 2\n0 0 X 0 -\n0 0 X 0 -\noutput 0 1\n";
        assert!(matches!(twice.parse::<MeasurementPattern>(), Err(Error::Domain(_))));
        let both = "lattice 1 2\n0 0 X 0 -\noutput 0 0\noutput 0 1\n";
        assert!(matches!(both.parse::<MeasurementPattern>(), Err(Error::Domain(_))));
        let idle = "lattice 1 3\n0 0 X 0 -\noutput 0 1\n";
        assert!(idle.parse::<MeasurementPattern>().is_err());
        let outside = "lattice 1 2\n0 5 X 0 -\noutput 0 1\n";
        assert!(outside.parse::<MeasurementPattern>().is_err());
    }

    #[test]
    fn builder_rejects_bad_flow() {
        let mut b = PatternBuilder::new(1, 3, false, &[(0, 0)]);
        assert!(b.measure((0, 0), 0.0, (0, 2)).is_err());
        b.cut((0, 1)).unwrap();
        assert!(b.cut((0, 1)).is_err());
        assert!(b.finish(&[(0, 2)]).is_err());
    }
}
