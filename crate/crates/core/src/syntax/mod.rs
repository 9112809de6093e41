//! Parsing and validation of `.cbs` system descriptions.

mod ast;
mod lexer;
mod parser;
mod print;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::logic::{IlFormula, Term};

pub use ast::*;
pub use print::{print_formula, print_system};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl SyntaxError {
    pub(crate) fn new(span: Span, message: impl Into<String>) -> SyntaxError {
        SyntaxError {
            line: span.line,
            column: span.column,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("{span}: port `{port}` used twice")]
    PortUsedTwice { port: String, span: Span },
    #[error("{span}: component `{component}` has no state `{state}`")]
    UndeclaredState { component: String, state: String, span: Span },
    #[error("{span}: component `{component}` has no port `{port}`")]
    UndeclaredPort { component: String, port: String, span: Span },
    #[error("{span}: port `{port}` labels no transition")]
    PortWithoutTransition { port: String, span: Span },
    #[error("{span}: `{name}` is declared by more than one component type or used both as a port and a state")]
    Overlap { name: String, span: Span },
    #[error("{span}: clause references undeclared port `{port}`")]
    UnknownPort { port: String, span: Span },
    #[error("{span}: variable `{var}` is not bound by the clause")]
    UnboundVariable { var: String, span: Span },
    #[error("{span}: bound variable `{var}` occurs in no rendezvous atom and not in the guard")]
    UnusedVariable { var: String, span: Span },
    #[error("{span}: bound variable `{var}` declared twice")]
    DuplicateVariable { var: String, span: Span },
    #[error("{span}: broadcast variable `{var}` clashes with a bound variable")]
    BroadcastVariable { var: String, span: Span },
    #[error("{span}: guard must be a conjunction of comparison literals")]
    GuardShape { span: Span },
    #[error("{span}: property `{property}` refers to unknown state `{state}`")]
    UnknownState { property: String, state: String, span: Span },
    #[error("{span}: property `{property}` has free variable `{var}`")]
    OpenProperty { property: String, var: String, span: Span },
    #[error("duplicate property name `{0}`")]
    DuplicateProperty(String),
    #[error("system declares no component types")]
    NoComponents,
}

/// Parses a complete system description.
pub fn parse_system(src: &str) -> Result<SystemSpec, SyntaxError> {
    let mut p = parser::Parser::new(src)?;
    let spec = p.system()?;
    p.expect_eof()?;
    check_duplicates(&spec)?;
    Ok(spec)
}

/// Parses a file holding only `property` declarations.
pub fn parse_properties(src: &str) -> Result<Vec<PropertyDecl>, SyntaxError> {
    let mut p = parser::Parser::new(src)?;
    let props = p.properties()?;
    p.expect_eof()?;
    Ok(props)
}

/// Parses a bare formula (as used inside a property).
pub fn parse_formula(src: &str) -> Result<IlFormula, SyntaxError> {
    let mut p = parser::Parser::new(src)?;
    let f = p.formula()?;
    p.expect_eof()?;
    Ok(f)
}

fn check_duplicates(spec: &SystemSpec) -> Result<(), SyntaxError> {
    let mut names = BTreeSet::new();
    for c in &spec.component_types {
        if !names.insert(&c.name) {
            return Err(SyntaxError::new(c.span, format!("duplicate component type `{}`", c.name)));
        }
        let mut local = BTreeSet::new();
        for id in c.ports.iter().chain(&c.states) {
            if !local.insert(id) {
                return Err(SyntaxError::new(
                    c.span,
                    format!("duplicate identifier `{id}` in component `{}`", c.name),
                ));
            }
        }
    }
    let mut props = BTreeSet::new();
    for p in &spec.properties {
        if !props.insert(&p.name) {
            return Err(SyntaxError::new(p.span, format!("duplicate property `{}`", p.name)));
        }
    }
    Ok(())
}

/// A checked system with the derived port maps. Component types are kept
/// in declaration order; states are numbered globally in that order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidatedSystem {
    pub spec: SystemSpec,
    pub pre: BTreeMap<String, String>,
    pub post: BTreeMap<String, String>,
    pub port_type: BTreeMap<String, usize>,
    pub state_type: BTreeMap<String, usize>,
}

impl ValidatedSystem {
    pub fn types(&self) -> &[ComponentTypeDecl] {
        &self.spec.component_types
    }

    pub fn clauses(&self) -> &[ClauseDecl] {
        &self.spec.clauses
    }

    pub fn properties(&self) -> &[PropertyDecl] {
        &self.spec.properties
    }

    /// All states of all component types, in declaration order.
    pub fn states(&self) -> Vec<&str> {
        self.types()
            .iter()
            .flat_map(|c| c.states.iter().map(String::as_str))
            .collect()
    }

    pub fn initial_states(&self) -> Vec<&str> {
        self.types().iter().map(|c| c.initial.as_str()).collect()
    }

    pub fn pre_of(&self, port: &str) -> &str {
        &self.pre[port]
    }

    pub fn post_of(&self, port: &str) -> &str {
        &self.post[port]
    }

    /// Index of the component type owning the port.
    pub fn type_of_port(&self, port: &str) -> usize {
        self.port_type[port]
    }

    /// Checks a property declaration against this system (known states, closed).
    pub fn check_property(&self, p: &PropertyDecl) -> Result<(), ValidationError> {
        for s in p.formula.predicates() {
            if !self.state_type.contains_key(&s) {
                return Err(ValidationError::UnknownState {
                    property: p.name.clone(),
                    state: s,
                    span: p.span,
                });
            }
        }
        if let Some(v) = p.formula.free_vars().into_iter().next() {
            return Err(ValidationError::OpenProperty {
                property: p.name.clone(),
                var: v,
                span: p.span,
            });
        }
        Ok(())
    }
}

fn term_vars(t: &Term, out: &mut Vec<String>) {
    match t {
        Term::Var(v) => out.push(v.clone()),
        Term::Root => {}
        Term::Succ(inner) => term_vars(inner, out),
    }
}

/// Checks the static invariants and computes the pre/post maps.
pub fn validate(spec: SystemSpec) -> Result<ValidatedSystem, ValidationError> {
    if spec.component_types.is_empty() {
        return Err(ValidationError::NoComponents);
    }
    let mut pre = BTreeMap::new();
    let mut post = BTreeMap::new();
    let mut port_type = BTreeMap::new();
    let mut state_type = BTreeMap::new();
    let mut seen = BTreeSet::new();
    for (ti, c) in spec.component_types.iter().enumerate() {
        for name in c.ports.iter().chain(&c.states) {
            if !seen.insert(name.clone()) {
                return Err(ValidationError::Overlap {
                    name: name.clone(),
                    span: c.span,
                });
            }
        }
        for p in &c.ports {
            port_type.insert(p.clone(), ti);
        }
        for s in &c.states {
            state_type.insert(s.clone(), ti);
        }
        if !c.states.contains(&c.initial) {
            return Err(ValidationError::UndeclaredState {
                component: c.name.clone(),
                state: c.initial.clone(),
                span: c.span,
            });
        }
        for t in &c.transitions {
            for s in [&t.source, &t.target] {
                if !c.states.contains(s) {
                    return Err(ValidationError::UndeclaredState {
                        component: c.name.clone(),
                        state: s.clone(),
                        span: t.span,
                    });
                }
            }
            if !c.ports.contains(&t.port) {
                return Err(ValidationError::UndeclaredPort {
                    component: c.name.clone(),
                    port: t.port.clone(),
                    span: t.span,
                });
            }
            if pre.insert(t.port.clone(), t.source.clone()).is_some() {
                return Err(ValidationError::PortUsedTwice {
                    port: t.port.clone(),
                    span: t.span,
                });
            }
            post.insert(t.port.clone(), t.target.clone());
        }
        if let Some(p) = c.ports.iter().find(|p| !pre.contains_key(*p)) {
            return Err(ValidationError::PortWithoutTransition {
                port: p.clone(),
                span: c.span,
            });
        }
    }

    for cl in &spec.clauses {
        check_clause(cl, &port_type)?;
    }

    let sys = ValidatedSystem {
        spec,
        pre,
        post,
        port_type,
        state_type,
    };
    let mut names = BTreeSet::new();
    for p in sys.properties() {
        if !names.insert(p.name.clone()) {
            return Err(ValidationError::DuplicateProperty(p.name.clone()));
        }
        sys.check_property(p)?;
    }
    Ok(sys)
}

fn check_clause(cl: &ClauseDecl, port_type: &BTreeMap<String, usize>) -> Result<(), ValidationError> {
    let span = cl.span;
    let mut bound = BTreeSet::new();
    for v in &cl.bound_vars {
        if !bound.insert(v.as_str()) {
            return Err(ValidationError::DuplicateVariable { var: v.clone(), span });
        }
    }
    for p in cl.ports() {
        if !port_type.contains_key(p) {
            return Err(ValidationError::UnknownPort {
                port: p.to_string(),
                span,
            });
        }
    }
    if !cl.guard.is_literal_conjunction() {
        return Err(ValidationError::GuardShape { span });
    }
    let mut used = Vec::new();
    for a in &cl.rendezvous {
        term_vars(&a.arg, &mut used);
    }
    used.extend(cl.guard.free_vars());
    for v in &used {
        if !bound.contains(v.as_str()) {
            return Err(ValidationError::UnboundVariable { var: v.clone(), span });
        }
    }
    if let Some(v) = cl.bound_vars.iter().find(|v| !used.contains(v)) {
        return Err(ValidationError::UnusedVariable { var: v.clone(), span });
    }
    for b in &cl.broadcasts {
        if bound.contains(b.var.as_str()) {
            return Err(ValidationError::BroadcastVariable {
                var: b.var.clone(),
                span,
            });
        }
        if !b.guard.is_literal_conjunction() {
            return Err(ValidationError::GuardShape { span });
        }
        for v in b.guard.free_vars() {
            if v != b.var && !bound.contains(v.as_str()) {
                return Err(ValidationError::UnboundVariable { var: v, span });
            }
        }
    }
    Ok(())
}
