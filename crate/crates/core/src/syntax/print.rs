use std::fmt::Write;

use crate::logic::IlFormula;

use super::ast::*;

/// Renders a system back to DSL source. Parsing the output yields an equal AST.
pub fn print_system(spec: &SystemSpec) -> String {
    let mut out = String::new();
    for c in &spec.component_types {
        writeln!(out, "component {} {{", c.name).unwrap();
        if !c.ports.is_empty() {
            writeln!(out, "  ports {};", c.ports.join(", ")).unwrap();
        }
        if !c.states.is_empty() {
            writeln!(out, "  states {};", c.states.join(", ")).unwrap();
        }
        writeln!(out, "  init {};", c.initial).unwrap();
        for t in &c.transitions {
            writeln!(out, "  {} -{}-> {};", t.source, t.port, t.target).unwrap();
        }
        out.push_str("}\n");
    }
    for cl in &spec.clauses {
        write!(out, "clause exists {}", cl.bound_vars.join(", ")).unwrap();
        if cl.guard != IlFormula::True {
            write!(out, " when {}", print_guard(&cl.guard)).unwrap();
        }
        let atoms: Vec<String> = cl.rendezvous.iter().map(|a| format!("{}({})", a.port, a.arg)).collect();
        write!(out, ": {}", atoms.join(" & ")).unwrap();
        for b in &cl.broadcasts {
            write!(out, "\n  broadcast {}({})", b.port, b.var).unwrap();
            if b.guard != IlFormula::True {
                write!(out, " when {}", print_guard(&b.guard)).unwrap();
            }
        }
        out.push_str(";\n");
    }
    for p in &spec.properties {
        writeln!(out, "property {}: {};", p.name, print_formula(&p.formula)).unwrap();
    }
    out
}

fn print_guard(g: &IlFormula) -> String {
    match g {
        IlFormula::And(gs) => gs.iter().map(print_literal).collect::<Vec<_>>().join(" & "),
        other => print_literal(other),
    }
}

fn print_literal(l: &IlFormula) -> String {
    match l {
        IlFormula::Not(inner) => match &**inner {
            IlFormula::Eq(a, b) => format!("{a} != {b}"),
            other => format!("!{}", print_literal(other)),
        },
        // a nested conjunction only arises from hand-built ASTs
        IlFormula::And(_) => format!("({})", print_guard(l)),
        other => other.to_string(),
    }
}

/// Fully parenthesized rendering of a property formula in DSL syntax.
pub fn print_formula(f: &IlFormula) -> String {
    f.to_string()
}
