use std::collections::BTreeMap;
use std::fmt::Write;

use super::automaton::{TrackAutomaton, VarKind};

fn cube_string(width: usize, cube: &[(u32, bool)]) -> String {
    let mut s = vec!['X'; width];
    for &(v, b) in cube {
        s[v as usize] = if b { '1' } else { '0' };
    }
    s.into_iter().collect()
}

fn cubes_by_target(a: &TrackAutomaton, q: usize) -> BTreeMap<u32, Vec<String>> {
    let mut cubes = Vec::new();
    a.bdd.cubes(a.delta[q], &mut cubes, &mut Vec::new());
    let mut by_target: BTreeMap<u32, Vec<String>> = BTreeMap::new();
    for (cube, t) in cubes {
        by_target.entry(t).or_default().push(cube_string(a.tracks.len(), &cube));
    }
    by_target
}

/// Line-based dump: header lines, then one `src cube -> dst` line per cube.
/// Cube characters follow the track order (`0`, `1`, `X` for don't care).
pub fn to_text(a: &TrackAutomaton) -> String {
    let mut out = String::new();
    let tracks: Vec<String> = a
        .tracks
        .iter()
        .map(|t| match t.kind {
            VarKind::First => format!("{}:1", t.name),
            VarKind::Second => format!("{}:2", t.name),
        })
        .collect();
    writeln!(out, "tracks {}", tracks.join(" ")).unwrap();
    writeln!(out, "states {}", a.state_count()).unwrap();
    writeln!(out, "initial 0").unwrap();
    let acc: Vec<String> = (0..a.state_count())
        .filter(|&q| a.accepting[q])
        .map(|q| q.to_string())
        .collect();
    writeln!(out, "accepting {}", acc.join(" ")).unwrap();
    for q in 0..a.state_count() {
        for (t, cubes) in cubes_by_target(a, q) {
            for c in cubes {
                let c = if c.is_empty() { "-".to_string() } else { c };
                writeln!(out, "{q} {c} -> {t}").unwrap();
            }
        }
    }
    out
}

pub fn to_dot(a: &TrackAutomaton) -> String {
    let mut out = String::from("digraph automaton {\n  rankdir=LR;\n  start [shape=point];\n  start -> q0;\n");
    let names: Vec<&str> = a.tracks.iter().map(|t| t.name.as_str()).collect();
    writeln!(out, "  label=\"tracks: {}\";", names.join(" ")).unwrap();
    for q in 0..a.state_count() {
        let shape = if a.accepting[q] { "doublecircle" } else { "circle" };
        writeln!(out, "  q{q} [shape={shape}];").unwrap();
    }
    for q in 0..a.state_count() {
        for (t, cubes) in cubes_by_target(a, q) {
            let label = if a.tracks.is_empty() {
                "*".to_string()
            } else {
                cubes.join("\\n")
            };
            writeln!(out, "  q{q} -> q{t} [label=\"{label}\"];").unwrap();
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{Term, Ws1sFormula};
    use crate::ws1s_solver::compile;

    #[test]
    fn text_dump_of_max() {
        let a = compile(&Ws1sFormula::Max(Term::var("x"))).unwrap();
        let expected = "\
tracks x:1
states 3
initial 0
accepting 1
0 0 -> 0
0 1 -> 1
1 X -> 2
2 X -> 2
";
        assert_eq!(to_text(&a), expected);
    }

    #[test]
    fn dot_dump_mentions_every_state() {
        let a = compile(&Ws1sFormula::member("X", Term::var("x"))).unwrap();
        let dot = to_dot(&a);
        for q in 0..a.state_count() {
            assert!(dot.contains(&format!("q{q} [shape=")));
        }
        assert!(dot.starts_with("digraph"));
    }
}
