use crate::logic::{IlFormula, Term};

/// Source position (1-based). Spans never take part in equality so that
/// ASTs parsed from differently formatted sources compare equal.
#[derive(Clone, Copy, Debug, Default, Eq)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

impl std::fmt::Display for Span {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionDecl {
    pub source: String,
    pub port: String,
    pub target: String,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentTypeDecl {
    pub name: String,
    pub ports: Vec<String>,
    pub states: Vec<String>,
    pub initial: String,
    pub transitions: Vec<TransitionDecl>,
    pub span: Span,
}

/// `p(t)`: the component at node `t` fires its `p` transition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RendezvousAtom {
    pub port: String,
    pub arg: Term,
}

/// `forall var . guard -> port(var)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Broadcast {
    pub var: String,
    pub guard: IlFormula,
    pub port: String,
}

/// One disjunct of the interaction formula.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClauseDecl {
    pub bound_vars: Vec<String>,
    pub guard: IlFormula,
    pub rendezvous: Vec<RendezvousAtom>,
    pub broadcasts: Vec<Broadcast>,
    pub span: Span,
}

/// A named safety property over state predicates (`w(i)`: component at `i` is in state `w`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropertyDecl {
    pub name: String,
    pub formula: IlFormula,
    pub span: Span,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SystemSpec {
    pub component_types: Vec<ComponentTypeDecl>,
    pub clauses: Vec<ClauseDecl>,
    pub properties: Vec<PropertyDecl>,
}

impl ClauseDecl {
    /// All ports mentioned by the clause, rendezvous first, in order.
    pub fn ports(&self) -> impl Iterator<Item = &str> {
        self.rendezvous
            .iter()
            .map(|a| a.port.as_str())
            .chain(self.broadcasts.iter().map(|b| b.port.as_str()))
    }
}
