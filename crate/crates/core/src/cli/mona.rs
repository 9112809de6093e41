//! Export of WS1S formulas in Mona's `m2l-str` input syntax.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::logic::{Term, Ws1sFormula};

struct Names {
    map: BTreeMap<String, String>,
    fresh: usize,
}

impl Names {
    fn get(&mut self, name: &str) -> String {
        if let Some(n) = self.map.get(name) {
            return n.clone();
        }
        let base: String = name.replace('\'', "_p").replace('#', "t_");
        let mut cand = base.clone();
        let mut k = 1;
        while self.map.values().any(|v| *v == cand) {
            cand = format!("{base}_{k}");
            k += 1;
        }
        self.map.insert(name.to_string(), cand.clone());
        cand
    }

    fn fresh(&mut self) -> String {
        self.fresh += 1;
        self.get(&format!("#succ{}", self.fresh))
    }
}

/// Mona text for `f`, with every free variable declared and the string
/// length constrained to at least `min_universe` positions.
pub fn to_mona(f: &Ws1sFormula, min_universe: usize) -> String {
    let mut names = Names {
        map: BTreeMap::new(),
        fresh: 0,
    };
    let fv = f.free_vars();
    let mut out = String::from("m2l-str;\n");
    let fo: Vec<String> = fv.first_order.iter().map(|v| names.get(v)).collect();
    let so: Vec<String> = fv.second_order.iter().map(|v| names.get(v)).collect();
    if !fo.is_empty() {
        writeln!(out, "var1 {};", fo.join(", ")).unwrap();
    }
    if !so.is_empty() {
        writeln!(out, "var2 {};", so.join(", ")).unwrap();
    }
    let k = min_universe.max(1);
    let us: Vec<String> = (0..k).map(|i| names.get(&format!("#len{i}"))).collect();
    let chain: Vec<String> = us.windows(2).map(|w| format!("{} < {}", w[0], w[1])).collect();
    let chain = if chain.is_empty() { "true".to_string() } else { chain.join(" & ") };
    writeln!(out, "ex1 {}: {};", us.join(", "), chain).unwrap();
    writeln!(out, "{};", formula(f, &mut names)).unwrap();
    out
}

/// Names every successor term with a fresh variable; returns the plain term
/// and the definitions `(base, name)` in inner-to-outer order.
fn name_term(t: &Term, names: &mut Names, defs: &mut Vec<(String, String)>) -> String {
    match t {
        Term::Var(v) => names.get(v),
        Term::Root => "0".to_string(),
        Term::Succ(inner) => {
            let base = name_term(inner, names, defs);
            let z = names.fresh();
            defs.push((base, z.clone()));
            z
        }
    }
}

/// Wraps an atom over named terms with the successor definitions (the
/// successor of the last position is itself).
fn with_defs(atom: String, defs: Vec<(String, String)>) -> String {
    defs.into_iter().rev().fold(atom, |acc, (x, z)| {
        format!("(ex1 {z}: ((({x} < $) & {z} = {x} + 1) | ({x} = $ & {z} = {x})) & ({acc}))")
    })
}

fn formula(f: &Ws1sFormula, names: &mut Names) -> String {
    use Ws1sFormula as W;
    let bin = |a: &Term, b: &Term, op: &str, names: &mut Names| {
        let mut defs = Vec::new();
        let x = name_term(a, names, &mut defs);
        let y = name_term(b, names, &mut defs);
        with_defs(format!("{x} {op} {y}"), defs)
    };
    match f {
        W::True => "true".to_string(),
        W::False => "false".to_string(),
        W::Eq(a, b) => bin(a, b, "=", names),
        W::Le(a, b) => bin(a, b, "<=", names),
        W::Lt(a, b) => bin(a, b, "<", names),
        W::Max(t) => {
            let mut defs = Vec::new();
            let x = name_term(t, names, &mut defs);
            with_defs(format!("{x} = $"), defs)
        }
        W::In(s, t) => {
            let mut defs = Vec::new();
            let x = name_term(t, names, &mut defs);
            let s = names.get(s);
            with_defs(format!("{x} in {s}"), defs)
        }
        W::Not(g) => format!("~({})", formula(g, names)),
        W::And(gs) => join(gs, " & ", "true", names),
        W::Or(gs) => join(gs, " | ", "false", names),
        W::Implies(a, b) => format!("({} => {})", formula(a, names), formula(b, names)),
        W::Iff(a, b) => format!("({} <=> {})", formula(a, names), formula(b, names)),
        W::Exists1(v, g) => quant("ex1", v, g, names),
        W::Forall1(v, g) => quant("all1", v, g, names),
        W::Exists2(v, g) => quant("ex2", v, g, names),
        W::Forall2(v, g) => quant("all2", v, g, names),
    }
}

fn join(gs: &[Ws1sFormula], sep: &str, unit: &str, names: &mut Names) -> String {
    if gs.is_empty() {
        return unit.to_string();
    }
    let parts: Vec<String> = gs.iter().map(|g| formula(g, names)).collect();
    format!("({})", parts.join(sep))
}

fn quant(q: &str, v: &str, g: &Ws1sFormula, names: &mut Names) -> String {
    let v = names.get(v);
    format!("({q} {v}: {})", formula(g, names))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn balanced(s: &str) -> bool {
        let mut d = 0i64;
        for c in s.chars() {
            match c {
                '(' => d += 1,
                ')' => d -= 1,
                _ => {}
            }
            if d < 0 {
                return false;
            }
        }
        d == 0
    }

    #[test]
    fn true_formula() {
        assert_eq!(to_mona(&Ws1sFormula::True, 1), "m2l-str;\nex1 t_len0: true;\ntrue;\n");
    }

    #[test]
    fn declarations_and_sanitizing() {
        let f = Ws1sFormula::and([
            Ws1sFormula::member("X_a'", Term::succ(Term::var("x"))),
            Ws1sFormula::exists2("Y", Ws1sFormula::member("Y", Term::var("#3"))),
        ]);
        let s = to_mona(&f, 2);
        assert!(s.starts_with("m2l-str;\nvar1 t_3, x;\nvar2 X_a_p;\n"));
        assert!(s.contains("ex1 t_len0, t_len1: t_len0 < t_len1;"));
        assert!(s.contains("in X_a_p"));
        assert!(s.contains("x < $"));
        assert!(!s.contains('\'') && !s.contains('#'));
        assert!(balanced(&s));
    }

    #[test]
    fn colliding_names_are_kept_apart() {
        let f = Ws1sFormula::and([
            Ws1sFormula::member("A'", Term::var("x")),
            Ws1sFormula::member("A_p", Term::var("x")),
        ]);
        let s = to_mona(&f, 1);
        assert!(s.contains("var2 A_p, A_p_1;") || s.contains("var2 A_p_1, A_p;"));
    }
}
