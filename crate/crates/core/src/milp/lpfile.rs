use std::fmt::Write;

use super::{MilpModel, Relation, Sense, VarKind};

fn fmt_terms(out: &mut String, model: &MilpModel, terms: &[(super::VarId, f64)]) {
    if terms.is_empty() {
        out.push_str(" 0");
        return;
    }
    for (k, &(v, c)) in terms.iter().enumerate() {
        let name = &model.variable(v).name;
        let _ = match (k, c < 0.0) {
            (0, false) => write!(out, " {c} {name}"),
            (_, false) => write!(out, " + {c} {name}"),
            (_, true) => write!(out, " - {} {name}", -c),
        };
    }
}

/// Renders `model` in LP-format text (objective, constraints, bounds,
/// binaries).
pub fn write_lp(model: &MilpModel) -> String {
    let mut out = String::new();
    out.push_str(match model.sense() {
        Sense::Maximize => "Maximize\n",
        Sense::Minimize => "Minimize\n",
    });
    out.push_str(" obj:");
    let obj = model.objective().normalized();
    fmt_terms(&mut out, model, &obj.terms);
    if obj.constant != 0.0 {
        let _ = write!(out, " + {}", obj.constant);
    }
    out.push_str("\nSubject To\n");
    for c in model.constraints() {
        let _ = write!(out, " {}:", c.name);
        fmt_terms(&mut out, model, &c.terms);
        let rel = match c.relation {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        };
        let _ = writeln!(out, " {rel} {}", c.rhs);
    }
    out.push_str("Bounds\n");
    for v in model.variables() {
        if v.kind == VarKind::Binary {
            continue;
        }
        match (v.lower.is_finite(), v.upper.is_finite()) {
            (true, true) => {
                let _ = writeln!(out, " {} <= {} <= {}", v.lower, v.name, v.upper);
            }
            (true, false) => {
                let _ = writeln!(out, " {} >= {}", v.name, v.lower);
            }
            (false, true) => {
                let _ = writeln!(out, " -inf <= {} <= {}", v.name, v.upper);
            }
            (false, false) => {
                let _ = writeln!(out, " {} free", v.name);
            }
        }
    }
    let bins: Vec<&str> = model
        .variables()
        .iter()
        .filter(|v| v.kind == VarKind::Binary)
        .map(|v| v.name.as_str())
        .collect();
    if !bins.is_empty() {
        out.push_str("Binary\n");
        for b in bins {
            let _ = writeln!(out, " {b}");
        }
    }
    out.push_str("End\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::LinExpr;

    #[test]
    fn sections_present() {
        let mut m = MilpModel::new();
        let x = m.add_binary("x").unwrap();
        let y = m.add_continuous("y", 0.0, 2.5).unwrap();
        m.add_constraint("c1", LinExpr::term(x, 1.0).with(y, -2.0), Relation::Le, 1.0)
            .unwrap();
        m.set_objective(Sense::Maximize, LinExpr::sum([x, y]))
            .unwrap();
        let text = write_lp(&m);
        assert!(text.starts_with("Maximize\n obj: 1 x + 1 y\n"));
        assert!(text.contains(" c1: 1 x - 2 y <= 1\n"));
        assert!(text.contains(" 0 <= y <= 2.5\n"));
        assert!(text.ends_with("Binary\n x\nEnd\n"));
    }
}
