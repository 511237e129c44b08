//! Pretty-printers producing text accepted by the readers.

use std::collections::BTreeSet;
use std::fmt::Write;

use super::collect_vars;
use crate::system::{Lctrs, Rule};
use crate::term::{Sort, SymKind, Term};

fn rules_by_id(sys: &Lctrs) -> Vec<&Rule> {
    let mut rs: Vec<&Rule> = sys.rules.iter().collect();
    rs.sort_by_key(|r| r.id);
    rs
}

fn its_rhs(t: &Term) -> String {
    match t {
        Term::Fun(f, args) if f.is_tuple() => {
            let parts: Vec<String> = args.iter().map(its_rhs).collect();
            format!("Com_{}({})", args.len(), parts.join(", "))
        }
        t => t.to_string(),
    }
}

/// KoAT-style rendering. `None` if the system uses sorts other than
/// integers or has a non-trivial initial guard.
pub fn print_its(sys: &Lctrs) -> Option<String> {
    let vars = collect_vars(sys);
    if vars.keys().any(|s| *s != Sort::Int) || !sys.init_guard.is_true() {
        return None;
    }
    let mut s = String::new();
    let _ = writeln!(s, "(GOAL COMPLEXITY)");
    let _ = writeln!(s, "(STARTTERM (FUNCTIONSYMBOLS {}))", sys.start_symbol().name);
    let names: Vec<String> = vars.values().flatten().map(|v| v.name.to_string()).collect();
    let _ = writeln!(s, "(VAR {})", names.join(" "));
    let _ = writeln!(s, "(RULES");
    for r in rules_by_id(sys) {
        let _ = write!(s, "  {} -> {}", r.lhs, its_rhs(&r.rhs));
        let cs: Vec<String> = r.guard.conjuncts().iter().map(|c| c.to_string()).collect();
        if !cs.is_empty() {
            let _ = write!(s, " :|: {}", cs.join(" && "));
        }
        s.push('\n');
    }
    s.push_str(")\n");
    Some(s)
}

/// Native block-format rendering.
pub fn print_lctrs(sys: &Lctrs) -> String {
    let mut s = String::new();
    let syms: Vec<_> = sys.signature.symbols().into_iter().filter(|f| f.kind == SymKind::Plain).collect();
    let user: BTreeSet<String> = syms
        .iter()
        .flat_map(|f| f.arg_sorts.iter().chain(std::iter::once(&f.res_sort)))
        .filter(|s| !s.is_theory())
        .map(|s| s.to_string())
        .collect();
    if !user.is_empty() {
        let _ = writeln!(s, "SORTS {}", user.into_iter().collect::<Vec<_>>().join(" "));
    }
    let _ = writeln!(s, "SIG");
    for f in &syms {
        if f.arg_sorts.is_empty() {
            let _ = writeln!(s, "  {} : {}", f.name, f.res_sort);
        } else {
            let args: Vec<String> = f.arg_sorts.iter().map(|a| a.to_string()).collect();
            let _ = writeln!(s, "  {} : {} -> {}", f.name, args.join(" * "), f.res_sort);
        }
    }
    let vars = collect_vars(sys);
    if !vars.is_empty() {
        let _ = writeln!(s, "VARS");
        for (sort, vs) in &vars {
            let names: Vec<String> = vs.iter().map(|v| v.name.to_string()).collect();
            let _ = writeln!(s, "  {} : {}", names.join(" "), sort);
        }
    }
    let _ = write!(s, "INIT {}", sys.init);
    if !sys.init_guard.is_true() {
        let _ = write!(s, " [{}]", sys.init_guard);
    }
    s.push('\n');
    let _ = writeln!(s, "RULES");
    for r in rules_by_id(sys) {
        let _ = writeln!(s, "  {r}");
    }
    s
}
