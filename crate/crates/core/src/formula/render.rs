use super::{Atom, DerivedMacro, Formula};

/// Render in the concrete syntax accepted by [`super::parse_formula`].
///
/// Binary subterms are always parenthesized and prefix operators only skip
/// parentheses around primaries, so the output re-parses to the same tree.
pub fn render_formula(f: &Formula) -> String {
    let mut out = String::new();
    write(f, &mut out);
    out
}

fn is_primary(f: &Formula) -> bool {
    match f {
        Formula::Top
        | Formula::Bottom
        | Formula::Atom(_)
        | Formula::Prop(_)
        | Formula::Active(_)
        | Formula::NegSince(..) => true,
        Formula::Derived(m) => !matches!(**m, DerivedMacro::Always(_) | DerivedMacro::Sometime(_)),
        _ => false,
    }
}

fn is_binary(f: &Formula) -> bool {
    matches!(
        f,
        Formula::And(..) | Formula::Or(..) | Formula::Implies(..) | Formula::Iff(..) | Formula::Since(..)
    )
}

fn operand(f: &Formula, out: &mut String) {
    if is_primary(f) {
        write(f, out);
    } else {
        out.push('(');
        write(f, out);
        out.push(')');
    }
}

fn binary_side(f: &Formula, out: &mut String) {
    if is_binary(f) {
        out.push('(');
        write(f, out);
        out.push(')');
    } else {
        write(f, out);
    }
}

fn binary(a: &Formula, op: &str, b: &Formula, out: &mut String) {
    binary_side(a, out);
    out.push(' ');
    out.push_str(op);
    out.push(' ');
    binary_side(b, out);
}

fn prefix(op: &str, a: &Formula, out: &mut String) {
    out.push_str(op);
    operand(a, out);
}

fn call(name: &str, args: &[&dyn Fn(&mut String)], out: &mut String) {
    out.push_str(name);
    out.push('(');
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        a(out);
    }
    out.push(')');
}

fn write(f: &Formula, out: &mut String) {
    match f {
        Formula::Top => out.push_str("true"),
        Formula::Bottom => out.push_str("false"),
        Formula::Atom(Atom::VarEq { var, value }) => out.push_str(&format!("{var} = {value}")),
        Formula::Atom(Atom::VarEqPrevSelf { var }) => out.push_str(&format!("{var} = Y {var}")),
        Formula::Atom(Atom::At { thread, loc }) => out.push_str(&format!("at({thread}, {loc})")),
        Formula::Prop(p) => out.push_str(p),
        Formula::Active(t) => out.push_str(&format!("active({t})")),
        Formula::Not(a) => prefix("!", a, out),
        Formula::Prev(a) => prefix("Y ", a, out),
        Formula::Knows(t, a) => prefix(&format!("K[{t}] "), a, out),
        Formula::And(a, b) => binary(a, "&", b, out),
        Formula::Or(a, b) => binary(a, "|", b, out),
        Formula::Implies(a, b) => binary(a, "->", b, out),
        Formula::Iff(a, b) => binary(a, "<->", b, out),
        Formula::Since(a, b) => binary(a, "S", b, out),
        Formula::NegSince(a, b) => call("nsince", &[&|o| write(a, o), &|o| write(b, o)], out),
        Formula::Derived(m) => write_macro(m, out),
    }
}

fn write_macro(m: &DerivedMacro, out: &mut String) {
    let name = m.name();
    match m {
        DerivedMacro::Always(a) => prefix("H ", a, out),
        DerivedMacro::Sometime(a) => prefix("O ", a, out),
        DerivedMacro::Init => out.push_str("init"),
        DerivedMacro::After(t) => call(name, &[&|o| o.push_str(t.as_str())], out),
        DerivedMacro::Chg(x) => call(name, &[&|o| o.push_str(x)], out),
        DerivedMacro::Pres(a) => call(name, &[&|o| write(a, o)], out),
        DerivedMacro::WriteBy(t, x) | DerivedMacro::Frame(t, x) => {
            call(name, &[&|o| o.push_str(t.as_str()), &|o| o.push_str(x)], out)
        }
        DerivedMacro::LastA(t, a)
        | DerivedMacro::PreA(t, a)
        | DerivedMacro::Est(t, a)
        | DerivedMacro::Stable(t, a)
        | DerivedMacro::PresA(t, a) => {
            call(name, &[&|o| o.push_str(t.as_str()), &|o| write(a, o)], out)
        }
        DerivedMacro::HappensBefore(a, b) | DerivedMacro::LastW(a, b) => {
            call(name, &[&|o| write(a, o), &|o| write(b, o)], out)
        }
    }
}
