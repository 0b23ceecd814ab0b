//! Member- and class-level dependency graphs.
//!
//! The input is a member-level multigraph (methods and fields with typed
//! dependencies). It is reduced to a weighted class graph where every
//! member dependency `x -> y` contributes `1 / fan_in(y)`, the dedication
//! score of the dependency. Dependencies between members of the same class
//! are dropped during that reduction.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemberKind {
    Method,
    Field,
}

impl MemberKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MemberKind::Method => "method",
            MemberKind::Field => "field",
        }
    }
}

impl FromStr for MemberKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "method" => Ok(MemberKind::Method),
            "field" => Ok(MemberKind::Field),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DependencyKind {
    Call,
    FieldAccess,
    Inheritance,
    TypeReference,
}

impl DependencyKind {
    pub const ALL: [DependencyKind; 4] = [
        DependencyKind::Call,
        DependencyKind::FieldAccess,
        DependencyKind::Inheritance,
        DependencyKind::TypeReference,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DependencyKind::Call => "call",
            DependencyKind::FieldAccess => "field_access",
            DependencyKind::Inheritance => "inheritance",
            DependencyKind::TypeReference => "type_reference",
        }
    }
}

impl FromStr for DependencyKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        DependencyKind::ALL.into_iter().find(|k| k.as_str() == s).ok_or(())
    }
}

impl fmt::Display for DependencyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A class (or source file). An empty package is the root package.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClassEntity {
    pub id: String,
    pub display_name: String,
    pub package: String,
}

impl ClassEntity {
    pub fn new(id: impl Into<String>, display_name: impl Into<String>, package: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            display_name: display_name.into(),
            package: package.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Member {
    pub id: String,
    pub owner_class: String,
    pub kind: MemberKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemberDependency {
    pub source: String,
    pub target: String,
    pub kind: DependencyKind,
}

/// A pre-weighted class-level dependency (`cdep` record).
#[derive(Debug, Clone, PartialEq)]
pub struct ClassDependency {
    pub source: String,
    pub target: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown dependency kind `{kind}`")]
    UnknownDependencyKind { line: usize, kind: String },
    #[error("line {line}: unknown member kind `{kind}`")]
    UnknownMemberKind { line: usize, kind: String },
    #[error("line {line}: duplicate {what} id `{id}`")]
    Duplicate {
        line: usize,
        what: &'static str,
        id: String,
    },
    #[error("line {line}: {what} `{id}` is not declared")]
    Undeclared {
        line: usize,
        what: &'static str,
        id: String,
    },
    #[error("line {line}: `{id}` depends on itself, which is only allowed for calls")]
    SelfDependency { line: usize, id: String },
    #[error("line {line}: invalid class dependency weight `{value}`")]
    InvalidWeight { line: usize, value: String },
}

/// Member-level dependency graph as read from a graph file.
///
/// Record order is preserved so that the text form round-trips; everything
/// derived from the graph (fan-in, the class graph) is order independent.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MemberGraph {
    classes: Vec<ClassEntity>,
    members: Vec<Member>,
    dependencies: Vec<MemberDependency>,
    class_dependencies: Vec<ClassDependency>,
    member_owner: HashMap<String, usize>,
}

impl MemberGraph {
    /// Validates the records and builds the graph. `lines` gives the source
    /// line of each record (classes, members, deps, cdeps in order) for error
    /// reporting; pass an empty slice when the records were built in memory.
    fn build(
        classes: Vec<ClassEntity>,
        members: Vec<Member>,
        dependencies: Vec<MemberDependency>,
        class_dependencies: Vec<ClassDependency>,
        lines: &RecordLines,
    ) -> Result<Self, GraphError> {
        let mut class_index = HashMap::with_capacity(classes.len());
        for (i, class) in classes.iter().enumerate() {
            if class_index.insert(class.id.clone(), i).is_some() {
                return Err(GraphError::Duplicate {
                    line: lines.class(i),
                    what: "class",
                    id: class.id.clone(),
                });
            }
        }

        let mut member_owner = HashMap::with_capacity(members.len());
        for (i, member) in members.iter().enumerate() {
            let Some(&owner) = class_index.get(&member.owner_class) else {
                return Err(GraphError::Undeclared {
                    line: lines.member(i),
                    what: "class",
                    id: member.owner_class.clone(),
                });
            };
            if member_owner.insert(member.id.clone(), owner).is_some() {
                return Err(GraphError::Duplicate {
                    line: lines.member(i),
                    what: "member",
                    id: member.id.clone(),
                });
            }
        }

        for (i, dep) in dependencies.iter().enumerate() {
            for endpoint in [&dep.source, &dep.target] {
                if !member_owner.contains_key(endpoint) {
                    return Err(GraphError::Undeclared {
                        line: lines.dep(i),
                        what: "member",
                        id: endpoint.clone(),
                    });
                }
            }
            if dep.source == dep.target && dep.kind != DependencyKind::Call {
                return Err(GraphError::SelfDependency {
                    line: lines.dep(i),
                    id: dep.source.clone(),
                });
            }
        }

        for (i, dep) in class_dependencies.iter().enumerate() {
            for endpoint in [&dep.source, &dep.target] {
                if !class_index.contains_key(endpoint) {
                    return Err(GraphError::Undeclared {
                        line: lines.cdep(i),
                        what: "class",
                        id: endpoint.clone(),
                    });
                }
            }
            if !(dep.weight.is_finite() && dep.weight > 0.0) {
                return Err(GraphError::InvalidWeight {
                    line: lines.cdep(i),
                    value: dep.weight.to_string(),
                });
            }
        }

        Ok(Self {
            classes,
            members,
            dependencies,
            class_dependencies,
            member_owner,
        })
    }

    pub fn from_records(
        classes: Vec<ClassEntity>,
        members: Vec<Member>,
        dependencies: Vec<MemberDependency>,
        class_dependencies: Vec<ClassDependency>,
    ) -> Result<Self, GraphError> {
        Self::build(
            classes,
            members,
            dependencies,
            class_dependencies,
            &RecordLines::default(),
        )
    }

    pub fn classes(&self) -> &[ClassEntity] {
        &self.classes
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn dependencies(&self) -> &[MemberDependency] {
        &self.dependencies
    }

    pub fn class_dependencies(&self) -> &[ClassDependency] {
        &self.class_dependencies
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Owning class id of a member.
    pub fn owner_of(&self, member: &str) -> Option<&str> {
        self.member_owner.get(member).map(|&i| self.classes[i].id.as_str())
    }

    /// Distinct members depending on each member. Self-recursive calls do not
    /// count as a dependent.
    pub fn dependents(&self) -> HashMap<&str, BTreeSet<&str>> {
        let mut dependents: HashMap<&str, BTreeSet<&str>> = HashMap::new();
        for dep in &self.dependencies {
            if dep.source != dep.target {
                dependents
                    .entry(dep.target.as_str())
                    .or_default()
                    .insert(dep.source.as_str());
            }
        }
        dependents
    }

    /// Number of distinct members depending on `member`.
    pub fn fan_in(&self, member: &str) -> usize {
        self.dependencies
            .iter()
            .filter(|d| d.target == member && d.source != d.target)
            .map(|d| d.source.as_str())
            .collect::<BTreeSet<_>>()
            .len()
    }

    /// Serializes back to the line-oriented graph format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.classes {
            if c.package.is_empty() {
                let _ = writeln!(out, "class {} {}", c.id, c.display_name);
            } else {
                let _ = writeln!(out, "class {} {} {}", c.id, c.display_name, c.package);
            }
        }
        for m in &self.members {
            let _ = writeln!(out, "member {} {} {}", m.id, m.owner_class, m.kind.as_str());
        }
        for d in &self.dependencies {
            let _ = writeln!(out, "dep {} {} {}", d.source, d.target, d.kind);
        }
        for d in &self.class_dependencies {
            let _ = writeln!(out, "cdep {} {} {:?}", d.source, d.target, d.weight);
        }
        out
    }
}

#[derive(Default)]
struct RecordLines {
    classes: Vec<usize>,
    members: Vec<usize>,
    deps: Vec<usize>,
    cdeps: Vec<usize>,
}

impl RecordLines {
    fn class(&self, i: usize) -> usize {
        self.classes.get(i).copied().unwrap_or(0)
    }
    fn member(&self, i: usize) -> usize {
        self.members.get(i).copied().unwrap_or(0)
    }
    fn dep(&self, i: usize) -> usize {
        self.deps.get(i).copied().unwrap_or(0)
    }
    fn cdep(&self, i: usize) -> usize {
        self.cdeps.get(i).copied().unwrap_or(0)
    }
}

/// Parses the line-oriented graph format:
///
/// ```text
/// # comment
/// class <id> <display_name> [<package>]
/// member <id> <owner_class_id> <method|field>
/// dep <source_member_id> <target_member_id> <call|field_access|inheritance|type_reference>
/// cdep <source_class_id> <target_class_id> <weight>
/// ```
///
/// Records may appear in any order; references are resolved after the whole
/// document has been read.
pub fn parse_member_graph(document: &str) -> Result<MemberGraph, GraphError> {
    let mut classes = Vec::new();
    let mut members = Vec::new();
    let mut deps = Vec::new();
    let mut cdeps = Vec::new();
    let mut lines = RecordLines::default();

    for (n, raw) in document.lines().enumerate() {
        let line = n + 1;
        let text = raw.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = text.split_whitespace().collect();
        let syntax = |message: String| GraphError::Syntax { line, message };
        match fields[0] {
            "class" => {
                if !(3..=4).contains(&fields.len()) {
                    return Err(syntax(format!(
                        "`class` expects 2 or 3 fields, found {}",
                        fields.len() - 1
                    )));
                }
                classes.push(ClassEntity::new(
                    fields[1],
                    fields[2],
                    fields.get(3).copied().unwrap_or(""),
                ));
                lines.classes.push(line);
            }
            "member" => {
                if fields.len() != 4 {
                    return Err(syntax(format!("`member` expects 3 fields, found {}", fields.len() - 1)));
                }
                let kind = fields[3].parse().map_err(|_| GraphError::UnknownMemberKind {
                    line,
                    kind: fields[3].to_string(),
                })?;
                members.push(Member {
                    id: fields[1].to_string(),
                    owner_class: fields[2].to_string(),
                    kind,
                });
                lines.members.push(line);
            }
            "dep" => {
                if fields.len() != 4 {
                    return Err(syntax(format!("`dep` expects 3 fields, found {}", fields.len() - 1)));
                }
                let kind = fields[3].parse().map_err(|_| GraphError::UnknownDependencyKind {
                    line,
                    kind: fields[3].to_string(),
                })?;
                deps.push(MemberDependency {
                    source: fields[1].to_string(),
                    target: fields[2].to_string(),
                    kind,
                });
                lines.deps.push(line);
            }
            "cdep" => {
                if fields.len() != 4 {
                    return Err(syntax(format!("`cdep` expects 3 fields, found {}", fields.len() - 1)));
                }
                let weight: f64 = fields[3].parse().map_err(|_| GraphError::InvalidWeight {
                    line,
                    value: fields[3].to_string(),
                })?;
                cdeps.push(ClassDependency {
                    source: fields[1].to_string(),
                    target: fields[2].to_string(),
                    weight,
                });
                lines.cdeps.push(line);
            }
            other => return Err(syntax(format!("unknown record kind `{other}`"))),
        }
    }

    MemberGraph::build(classes, members, deps, cdeps, &lines)
}

/// Dedication score of any dependency on `target_member`: `1 / fan_in`.
/// `None` when nothing depends on the member.
pub fn dedication_score(target_member: &str, graph: &MemberGraph) -> Option<f64> {
    match graph.fan_in(target_member) {
        0 => None,
        n => Some(1.0 / n as f64),
    }
}

/// Per-kind multipliers applied to dedication scores. All kinds weigh 1.0
/// unless configured otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KindWeights {
    pub call: f64,
    pub field_access: f64,
    pub inheritance: f64,
    pub type_reference: f64,
}

impl Default for KindWeights {
    fn default() -> Self {
        Self {
            call: 1.0,
            field_access: 1.0,
            inheritance: 1.0,
            type_reference: 1.0,
        }
    }
}

impl KindWeights {
    pub fn weight(&self, kind: DependencyKind) -> f64 {
        match kind {
            DependencyKind::Call => self.call,
            DependencyKind::FieldAccess => self.field_access,
            DependencyKind::Inheritance => self.inheritance,
            DependencyKind::TypeReference => self.type_reference,
        }
    }
}

/// Weighted directed class graph.
///
/// Node indices follow the order of the class list handed to [`ClassGraph::new`];
/// [`aggregate_to_class_graph`] sorts classes by id so index order equals id
/// order. Self-edges and non-positive weights are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassGraph {
    classes: Vec<ClassEntity>,
    index: HashMap<String, usize>,
    edges: BTreeMap<(usize, usize), f64>,
    out_adj: Vec<Vec<(usize, f64)>>,
    in_adj: Vec<Vec<(usize, f64)>>,
    out_strength: Vec<f64>,
    in_strength: Vec<f64>,
    total_weight: f64,
}

impl ClassGraph {
    /// Builds a graph from classes and `(source, target, weight)` index
    /// triples. Parallel edges are summed.
    pub fn new(classes: Vec<ClassEntity>, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let n = classes.len();
        let mut summed: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (s, t, w) in edges {
            assert!(s < n && t < n, "edge ({s}, {t}) out of range for {n} classes");
            if s != t && w > 0.0 {
                *summed.entry((s, t)).or_insert(0.0) += w;
            }
        }

        let mut out_adj = vec![Vec::new(); n];
        let mut in_adj = vec![Vec::new(); n];
        let mut out_strength = vec![0.0; n];
        let mut in_strength = vec![0.0; n];
        let mut total_weight = 0.0;
        for (&(s, t), &w) in &summed {
            out_adj[s].push((t, w));
            in_adj[t].push((s, w));
            out_strength[s] += w;
            in_strength[t] += w;
            total_weight += w;
        }
        let index = classes.iter().enumerate().map(|(i, c)| (c.id.clone(), i)).collect();

        Self {
            classes,
            index,
            edges: summed,
            out_adj,
            in_adj,
            out_strength,
            in_strength,
            total_weight,
        }
    }

    /// Graph over `n` classes named `c0000`, `c0001`, ... (id order equals
    /// index order). Handy for synthetic graphs.
    pub fn anonymous(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let classes = (0..n)
            .map(|i| ClassEntity::new(format!("c{i:04}"), format!("C{i}"), ""))
            .collect();
        Self::new(classes, edges)
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn classes(&self) -> &[ClassEntity] {
        &self.classes
    }

    pub fn class(&self, i: usize) -> &ClassEntity {
        &self.classes[i]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn weight(&self, source: usize, target: usize) -> f64 {
        self.edges.get(&(source, target)).copied().unwrap_or(0.0)
    }

    /// Edges in `(source, target)` order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.edges.iter().map(|(&(s, t), &w)| (s, t, w))
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn out_edges(&self, i: usize) -> &[(usize, f64)] {
        &self.out_adj[i]
    }

    pub fn in_edges(&self, i: usize) -> &[(usize, f64)] {
        &self.in_adj[i]
    }

    pub fn out_strength(&self, i: usize) -> f64 {
        self.out_strength[i]
    }

    pub fn in_strength(&self, i: usize) -> f64 {
        self.in_strength[i]
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }
}

/// Sums member dependencies into class dependencies weighted by dedication
/// score. Each distinct `(source, target)` member pair contributes once; when
/// one pair carries several kinds, the largest kind multiplier applies.
/// `cdep` records are added verbatim.
pub fn aggregate_to_class_graph(graph: &MemberGraph, kinds: &KindWeights) -> ClassGraph {
    let mut classes = graph.classes.clone();
    classes.sort_by(|a, b| a.id.cmp(&b.id));
    let index: HashMap<&str, usize> = classes.iter().enumerate().map(|(i, c)| (c.id.as_str(), i)).collect();

    let dependents = graph.dependents();
    let mut pairs: BTreeMap<(&str, &str), f64> = BTreeMap::new();
    for dep in &graph.dependencies {
        if dep.source == dep.target {
            continue;
        }
        let m = kinds.weight(dep.kind);
        pairs
            .entry((dep.source.as_str(), dep.target.as_str()))
            .and_modify(|w| *w = w.max(m))
            .or_insert(m);
    }

    let mut edges = Vec::with_capacity(pairs.len() + graph.class_dependencies.len());
    for ((source, target), multiplier) in pairs {
        let s = index[graph.owner_of(source).expect("validated member")];
        let t = index[graph.owner_of(target).expect("validated member")];
        if s == t {
            continue;
        }
        let fan_in = dependents[target].len();
        edges.push((s, t, multiplier / fan_in as f64));
    }
    let mut cdeps: Vec<&ClassDependency> = graph.class_dependencies.iter().collect();
    cdeps.sort_by(|a, b| {
        (a.source.as_str(), a.target.as_str())
            .cmp(&(b.source.as_str(), b.target.as_str()))
            .then(a.weight.total_cmp(&b.weight))
    });
    for dep in cdeps {
        edges.push((index[dep.source.as_str()], index[dep.target.as_str()], dep.weight));
    }

    ClassGraph::new(classes, edges)
}
