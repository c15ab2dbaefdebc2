//! AMR graphs in PENMAN notation: parsing, validation, serialization.
//!
//! A graph is a rooted, labeled, directed graph of concept nodes and
//! relations. Constants (`imperative`, `-`, numbers, quoted strings) are
//! stored as attributes of their owning node, not as nodes. Inverse
//! relations (`:ARG0-of`) are kept exactly as written; nothing is
//! normalized at parse time.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A concept node: a variable bound to a concept label.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AmrNode {
    pub variable: String,
    pub concept: String,
}

/// A labeled relation between two nodes, directed source -> target.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AmrEdge {
    pub source: String,
    pub relation: String,
    pub target: String,
}

/// A constant-valued relation hanging off a node (e.g. `:mode imperative`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AmrAttribute {
    pub owner: String,
    pub relation: String,
    pub value: String,
}

/// A rooted AMR graph. Node, edge and attribute order follows the order
/// of first mention in the source text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmrGraph {
    pub nodes: Vec<AmrNode>,
    pub edges: Vec<AmrEdge>,
    pub attributes: Vec<AmrAttribute>,
    pub root: String,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("empty input")]
    EmptyInput,
    #[error("unbalanced or trailing input at byte {offset}")]
    UnbalancedParens { offset: usize },
    #[error("duplicate definition of variable `{variable}` at byte {offset}")]
    DuplicateVariableDefinition { offset: usize, variable: String },
    #[error("dangling variable reference at byte {offset}: {detail}")]
    DanglingVariableReference { offset: usize, detail: String },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SerializeError {
    #[error("node `{variable}` is unreachable from the root and cannot be serialized as one expression")]
    DisconnectedGraph { variable: String },
}

/// Flip a relation between its plain and `-of` form, collapsing `-of-of`.
pub fn invert_relation(relation: &str) -> String {
    match relation.strip_suffix("-of") {
        Some(base) if !base.is_empty() && base != ":" => base.to_string(),
        _ => format!("{relation}-of"),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token<'a> {
    Open,
    Close,
    Slash,
    Atom(&'a str),
    Str(String),
}

fn tokenize(text: &str) -> Result<Vec<(Token<'_>, usize)>, ParseError> {
    let mut tokens = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some((offset, c)) = chars.next() {
        if c.is_whitespace() {
            continue;
        }
        match c {
            '(' => tokens.push((Token::Open, offset)),
            ')' => tokens.push((Token::Close, offset)),
            '/' => tokens.push((Token::Slash, offset)),
            '"' => {
                let mut value = String::new();
                let mut closed = false;
                while let Some((_, ch)) = chars.next() {
                    match ch {
                        '"' => {
                            closed = true;
                            break;
                        }
                        '\\' => match chars.next() {
                            Some((_, escaped)) => value.push(escaped),
                            None => break,
                        },
                        other => value.push(other),
                    }
                }
                if !closed {
                    return Err(ParseError::UnbalancedParens { offset });
                }
                tokens.push((Token::Str(value), offset));
            }
            _ => {
                let mut end = offset + c.len_utf8();
                while let Some(&(next_offset, next)) = chars.peek() {
                    if next.is_whitespace() || matches!(next, '(' | ')' | '/' | '"') {
                        break;
                    }
                    end = next_offset + next.len_utf8();
                    chars.next();
                }
                tokens.push((Token::Atom(&text[offset..end]), offset));
            }
        }
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: Vec<(Token<'a>, usize)>,
    pos: usize,
    defined: HashSet<&'a str>,
    end: usize,
    nodes: Vec<AmrNode>,
    node_index: HashMap<String, usize>,
    edges: Vec<AmrEdge>,
    edge_set: HashSet<(String, String, String)>,
    attributes: Vec<AmrAttribute>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&(Token<'a>, usize)> {
        self.tokens.get(self.pos)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(_, o)| *o)
    }

    /// Record the first mention of a defined variable, in text order.
    fn mention(&mut self, variable: &str) {
        if !self.node_index.contains_key(variable) {
            self.node_index
                .insert(variable.to_string(), self.nodes.len());
            self.nodes.push(AmrNode {
                variable: variable.to_string(),
                concept: String::new(),
            });
        }
    }

    fn push_edge(&mut self, source: &str, relation: &str, target: &str) {
        let key = (
            source.to_string(),
            relation.to_string(),
            target.to_string(),
        );
        // repeated identical triples collapse to one edge
        if self.edge_set.insert(key) {
            self.edges.push(AmrEdge {
                source: source.to_string(),
                relation: relation.to_string(),
                target: target.to_string(),
            });
        }
    }

    fn parse_node(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some((Token::Open, _)) => self.pos += 1,
            _ => {
                return Err(ParseError::UnbalancedParens {
                    offset: self.offset(),
                })
            }
        }
        let (variable, var_offset) = match self.peek() {
            Some((Token::Atom(v), off)) => (*v, *off),
            _ => {
                let offset = self.offset();
                return Err(ParseError::DanglingVariableReference {
                    offset,
                    detail: "expected a variable after `(`".to_string(),
                });
            }
        };
        self.pos += 1;
        match self.peek() {
            Some((Token::Slash, _)) => self.pos += 1,
            _ => {
                return Err(ParseError::DanglingVariableReference {
                    offset: var_offset,
                    detail: format!("`{variable}` is not followed by `/ concept`"),
                })
            }
        }
        let concept = match self.peek() {
            Some((Token::Atom(c), _)) => c.to_string(),
            Some((Token::Str(s), _)) => s.clone(),
            _ => {
                let offset = self.offset();
                return Err(ParseError::DanglingVariableReference {
                    offset,
                    detail: format!("missing concept for variable `{variable}`"),
                });
            }
        };
        self.pos += 1;

        let already_defined = self
            .node_index
            .get(variable)
            .is_some_and(|&idx| !self.nodes[idx].concept.is_empty());
        if already_defined {
            return Err(ParseError::DuplicateVariableDefinition {
                offset: var_offset,
                variable: variable.to_string(),
            });
        }
        self.mention(variable);
        let idx = self.node_index[variable];
        self.nodes[idx].concept = concept;

        loop {
            match self.peek() {
                Some((Token::Close, _)) => {
                    self.pos += 1;
                    return Ok(variable.to_string());
                }
                Some((Token::Atom(role), role_offset)) if role.starts_with(':') => {
                    let role = role.to_string();
                    let role_offset = *role_offset;
                    self.pos += 1;
                    self.parse_role_filler(variable, &role, role_offset)?;
                }
                Some((_, offset)) => {
                    return Err(ParseError::DanglingVariableReference {
                        offset: *offset,
                        detail: format!("expected a `:role` or `)` inside `{variable}`"),
                    })
                }
                None => {
                    return Err(ParseError::UnbalancedParens { offset: self.end });
                }
            }
        }
    }

    fn parse_role_filler(
        &mut self,
        source: &str,
        role: &str,
        role_offset: usize,
    ) -> Result<(), ParseError> {
        match self.peek() {
            Some((Token::Open, _)) => {
                let target = self.parse_node()?;
                self.push_edge(source, role, &target);
                Ok(())
            }
            Some((Token::Str(value), _)) => {
                let value = value.clone();
                self.attributes.push(AmrAttribute {
                    owner: source.to_string(),
                    relation: role.to_string(),
                    value,
                });
                self.pos += 1;
                Ok(())
            }
            Some((Token::Atom(atom), _)) if !atom.starts_with(':') => {
                let atom = *atom;
                // a bare token is a variable reference iff it is defined
                // somewhere in this expression, else it is a constant
                if self.defined.contains(atom) {
                    self.mention(atom);
                    self.push_edge(source, role, atom);
                } else {
                    self.attributes.push(AmrAttribute {
                        owner: source.to_string(),
                        relation: role.to_string(),
                        value: atom.to_string(),
                    });
                }
                self.pos += 1;
                Ok(())
            }
            _ => Err(ParseError::DanglingVariableReference {
                offset: role_offset,
                detail: format!("role `{role}` has no value"),
            }),
        }
    }
}

/// Parse a single PENMAN expression into an [`AmrGraph`].
///
/// Reentrant variables (including forward references) are permitted. Any
/// role filler that is neither a nested `(var / concept …)` expression nor
/// a reference to a variable defined elsewhere in the text becomes an
/// attribute constant.
pub fn parse_penman(text: &str) -> Result<AmrGraph, ParseError> {
    let tokens = tokenize(text)?;
    if tokens.is_empty() {
        return Err(ParseError::EmptyInput);
    }
    // pass 1: every `( atom /` sequence defines a variable
    let mut defined = HashSet::new();
    for window in tokens.windows(3) {
        if let [(Token::Open, _), (Token::Atom(v), _), (Token::Slash, _)] = window {
            defined.insert(*v);
        }
    }
    let end = text.len();
    let mut parser = Parser {
        tokens,
        pos: 0,
        defined,
        end,
        nodes: Vec::new(),
        node_index: HashMap::new(),
        edges: Vec::new(),
        edge_set: HashSet::new(),
        attributes: Vec::new(),
    };
    let root = parser.parse_node()?;
    if let Some((_, offset)) = parser.peek() {
        return Err(ParseError::UnbalancedParens { offset: *offset });
    }
    Ok(AmrGraph {
        nodes: parser.nodes,
        edges: parser.edges,
        attributes: parser.attributes,
        root,
    })
}

fn needs_quoting(value: &str, variables: &HashSet<&str>) -> bool {
    value.is_empty()
        || value.starts_with(':')
        || variables.contains(value)
        || value
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, '(' | ')' | '/' | '"'))
}

fn render_constant(value: &str, variables: &HashSet<&str>) -> String {
    if needs_quoting(value, variables) {
        let escaped = value.replace('\\', "\\\\").replace('"', "\\\"");
        format!("\"{escaped}\"")
    } else {
        value.to_string()
    }
}

enum RoleItem {
    /// Tree edge: the target node is defined inline at this position.
    Child { relation: String, target: usize },
    /// Reentrant edge: the target is referenced by bare variable.
    Reference { relation: String, target: usize },
}

/// Serialize a graph back to PENMAN text.
///
/// Reentrant nodes are defined once and thereafter referenced by bare
/// variable. Nodes only reachable against edge direction are attached via
/// the `-of` inversion of the connecting relation, so a graph that needs
/// inversion round-trips to the inverted edge rather than the original.
/// Output is deterministic given node/edge/attribute order.
pub fn serialize_penman(graph: &AmrGraph) -> Result<String, SerializeError> {
    if graph.nodes.is_empty() || !graph.has_variable(&graph.root) {
        return Err(SerializeError::DisconnectedGraph { variable: graph.root.clone() });
    }
    let index: HashMap<&str, usize> = graph
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.variable.as_str(), i))
        .collect();
    let variables: HashSet<&str> = index.keys().copied().collect();
    let root = index[graph.root.as_str()];

    // spanning pass: forward edges first, inverted edges only as a fallback
    let n = graph.nodes.len();
    let mut visited = vec![false; n];
    let mut items: Vec<Vec<RoleItem>> = (0..n).map(|_| Vec::new()).collect();
    let mut edge_used = vec![false; graph.edges.len()];
    visited[root] = true;
    let mut frontier = vec![root];
    while let Some(v) = frontier.pop() {
        for (e_idx, edge) in graph.edges.iter().enumerate() {
            if edge_used[e_idx] {
                continue;
            }
            let (Some(&s), Some(&t)) = (
                index.get(edge.source.as_str()),
                index.get(edge.target.as_str()),
            ) else {
                continue;
            };
            if s == v && !visited[t] {
                visited[t] = true;
                edge_used[e_idx] = true;
                items[v].push(RoleItem::Child {
                    relation: edge.relation.clone(),
                    target: t,
                });
                frontier.push(t);
            }
        }
        if frontier.is_empty() {
            // no forward progress left: invert one edge into the visited set
            for (e_idx, edge) in graph.edges.iter().enumerate() {
                if edge_used[e_idx] {
                    continue;
                }
                let (Some(&s), Some(&t)) = (
                    index.get(edge.source.as_str()),
                    index.get(edge.target.as_str()),
                ) else {
                    continue;
                };
                if visited[t] && !visited[s] {
                    visited[s] = true;
                    edge_used[e_idx] = true;
                    items[t].push(RoleItem::Child {
                        relation: invert_relation(&edge.relation),
                        target: s,
                    });
                    frontier.push(s);
                    break;
                }
            }
        }
    }
    if let Some(unreached) = (0..n).find(|&i| !visited[i]) {
        return Err(SerializeError::DisconnectedGraph {
            variable: graph.nodes[unreached].variable.clone(),
        });
    }
    // remaining edges become bare references at their source node
    for (e_idx, edge) in graph.edges.iter().enumerate() {
        if edge_used[e_idx] {
            continue;
        }
        let (Some(&s), Some(&t)) = (
            index.get(edge.source.as_str()),
            index.get(edge.target.as_str()),
        ) else {
            continue;
        };
        items[s].push(RoleItem::Reference {
            relation: edge.relation.clone(),
            target: t,
        });
    }

    let mut attrs: Vec<Vec<&AmrAttribute>> = (0..n).map(|_| Vec::new()).collect();
    for attr in &graph.attributes {
        if let Some(&owner) = index.get(attr.owner.as_str()) {
            attrs[owner].push(attr);
        }
    }

    fn emit(
        v: usize,
        graph: &AmrGraph,
        items: &[Vec<RoleItem>],
        attrs: &[Vec<&AmrAttribute>],
        variables: &HashSet<&str>,
        out: &mut String,
    ) {
        let node = &graph.nodes[v];
        out.push('(');
        out.push_str(&node.variable);
        out.push_str(" / ");
        out.push_str(&node.concept);
        for attr in &attrs[v] {
            out.push(' ');
            out.push_str(&attr.relation);
            out.push(' ');
            out.push_str(&render_constant(&attr.value, variables));
        }
        for item in &items[v] {
            match item {
                RoleItem::Child { relation, target } => {
                    out.push(' ');
                    out.push_str(relation);
                    out.push(' ');
                    emit(*target, graph, items, attrs, variables, out);
                }
                RoleItem::Reference { relation, target } => {
                    out.push(' ');
                    out.push_str(relation);
                    out.push(' ');
                    out.push_str(&graph.nodes[*target].variable);
                }
            }
        }
        out.push(')');
    }

    let mut out = String::new();
    emit(root, graph, &items, &attrs, &variables, &mut out);
    Ok(out)
}

/// Check every graph invariant; returns one description per violation.
/// Validation never fails: a broken graph yields messages, not errors.
pub fn validate(graph: &AmrGraph) -> Vec<String> {
    let mut violations = Vec::new();
    let mut seen = HashSet::new();
    for node in &graph.nodes {
        if node.variable.is_empty() {
            violations.push("EmptyVariable: node with empty variable".to_string());
        }
        if node.concept.is_empty() {
            violations.push(format!("EmptyConcept: {}", node.variable));
        }
        if !seen.insert(node.variable.as_str()) {
            violations.push(format!("DuplicateVariableDefinition: {}", node.variable));
        }
    }
    let known: HashSet<&str> = graph.nodes.iter().map(|n| n.variable.as_str()).collect();
    let mut triples = HashSet::new();
    for edge in &graph.edges {
        if edge.relation.is_empty() {
            violations.push(format!(
                "EmptyRelation: edge {} -> {}",
                edge.source, edge.target
            ));
        }
        for var in [&edge.source, &edge.target] {
            if !known.contains(var.as_str()) {
                violations.push(format!("DanglingVariableReference: {var}"));
            }
        }
        if !triples.insert((&edge.source, &edge.relation, &edge.target)) {
            violations.push(format!(
                "DuplicateEdge: ({}, {}, {})",
                edge.source, edge.relation, edge.target
            ));
        }
    }
    for attr in &graph.attributes {
        if !known.contains(attr.owner.as_str()) {
            violations.push(format!("DanglingVariableReference: {}", attr.owner));
        }
    }
    if !known.contains(graph.root.as_str()) {
        violations.push(format!("DanglingVariableReference: root {}", graph.root));
    } else {
        // connectedness over edges treated as undirected
        let mut reached: HashSet<&str> = HashSet::new();
        let mut stack = vec![graph.root.as_str()];
        reached.insert(graph.root.as_str());
        while let Some(v) = stack.pop() {
            for edge in &graph.edges {
                let next = if edge.source == v {
                    Some(edge.target.as_str())
                } else if edge.target == v {
                    Some(edge.source.as_str())
                } else {
                    None
                };
                if let Some(next) = next {
                    if known.contains(next) && reached.insert(next) {
                        stack.push(next);
                    }
                }
            }
        }
        for node in &graph.nodes {
            if !reached.contains(node.variable.as_str()) {
                violations.push(format!("Disconnected: {}", node.variable));
            }
        }
    }
    violations
}

impl AmrGraph {
    pub fn node(&self, variable: &str) -> Option<&AmrNode> {
        self.nodes.iter().find(|n| n.variable == variable)
    }

    pub fn has_variable(&self, variable: &str) -> bool {
        self.nodes.iter().any(|n| n.variable == variable)
    }

    /// Structural equality up to ordering: same variable-keyed node, edge
    /// and attribute sets, and the same root.
    pub fn is_isomorphic(&self, other: &AmrGraph) -> bool {
        use std::collections::BTreeSet;
        let nodes = |g: &AmrGraph| -> BTreeSet<(String, String)> {
            g.nodes
                .iter()
                .map(|n| (n.variable.clone(), n.concept.clone()))
                .collect()
        };
        let edges = |g: &AmrGraph| -> BTreeSet<(String, String, String)> {
            g.edges
                .iter()
                .map(|e| (e.source.clone(), e.relation.clone(), e.target.clone()))
                .collect()
        };
        let attrs = |g: &AmrGraph| -> BTreeSet<(String, String, String)> {
            g.attributes
                .iter()
                .map(|a| (a.owner.clone(), a.relation.clone(), a.value.clone()))
                .collect()
        };
        self.root == other.root
            && nodes(self) == nodes(other)
            && edges(self) == edges(other)
            && attrs(self) == attrs(other)
    }
}
