//! The micro-step shared-memory language.
//!
//! Every instruction performs at most one shared-memory access. Reads are
//! instrumented: each thread owns a last-read register `lr_<x>` for every
//! shared variable it reads, updated to the value read on every read of `x`.

mod parse;

use std::fmt;

use crate::error::{Error, Result};
use crate::formula::{Atom, ThreadId, VarDomains};

pub use parse::parse_program;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    pub lo: i64,
    pub hi: i64,
    pub init: i64,
}

impl VarDecl {
    pub fn contains(&self, v: i64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn eval(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

/// Expressions over a thread's locals and constants. Booleans are 0/1;
/// any nonzero value counts as true.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Const(i64),
    Local(usize),
    Neg(Box<Expr>),
    Not(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn eval(&self, locals: &[i64]) -> i64 {
        match self {
            Expr::Const(v) => *v,
            Expr::Local(i) => locals[*i],
            Expr::Neg(a) => -a.eval(locals),
            Expr::Not(a) => (a.eval(locals) == 0) as i64,
            Expr::Add(a, b) => a.eval(locals) + b.eval(locals),
            Expr::Sub(a, b) => a.eval(locals) - b.eval(locals),
            Expr::Cmp(op, a, b) => op.eval(a.eval(locals), b.eval(locals)) as i64,
            Expr::And(a, b) => (a.eval(locals) != 0 && b.eval(locals) != 0) as i64,
            Expr::Or(a, b) => (a.eval(locals) != 0 || b.eval(locals) != 0) as i64,
        }
    }

    /// Value when the expression mentions no locals.
    pub fn constant(&self) -> Option<i64> {
        fn has_local(e: &Expr) -> bool {
            match e {
                Expr::Const(_) => false,
                Expr::Local(_) => true,
                Expr::Neg(a) | Expr::Not(a) => has_local(a),
                Expr::Add(a, b)
                | Expr::Sub(a, b)
                | Expr::Cmp(_, a, b)
                | Expr::And(a, b)
                | Expr::Or(a, b) => has_local(a) || has_local(b),
            }
        }
        (!has_local(self)).then(|| self.eval(&[]))
    }
}

/// Locations are indices into [`ThreadDef::locations`]; variables are indices
/// into the shared declarations or the owning thread's locals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instruction {
    WriteShared { var: usize, rhs: Expr, next: usize },
    ReadShared { dest: usize, var: usize, next: usize },
    ReadBranch { var: usize, op: CmpOp, value: i64, then_loc: usize, else_loc: usize },
    AssignLocal { dest: usize, rhs: Expr, next: usize },
    BranchLocal { cond: Expr, then_loc: usize, else_loc: usize },
    Halt,
}

impl Instruction {
    /// The shared variable accessed, if any.
    pub fn shared_access(&self) -> Option<usize> {
        match self {
            Instruction::WriteShared { var, .. }
            | Instruction::ReadShared { var, .. }
            | Instruction::ReadBranch { var, .. } => Some(*var),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThreadDef {
    pub id: ThreadId,
    /// Declared locals followed by the last-read registers.
    pub locals: Vec<VarDecl>,
    /// `lr[x]` is the local index of the register for shared variable `x`.
    pub lr: Vec<Option<usize>>,
    pub locations: Vec<String>,
    pub instrs: Vec<Instruction>,
    pub entry: usize,
}

impl ThreadDef {
    pub fn location_index(&self, name: &str) -> Option<usize> {
        self.locations.iter().position(|l| l == name)
    }

    pub fn local_index(&self, name: &str) -> Option<usize> {
        self.locals.iter().position(|l| l.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub shared: Vec<VarDecl>,
    /// Sorted by thread name; a thread's index is its position here.
    pub threads: Vec<ThreadDef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LocalState {
    pub pc: usize,
    pub vars: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GlobalState {
    pub shared: Vec<i64>,
    pub locals: Vec<LocalState>,
}

/// An atom bound to program positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ResolvedAtom {
    Shared { var: usize, value: i64 },
    Local { thread: usize, var: usize, value: i64 },
    At { thread: usize, pc: usize },
}

impl ResolvedAtom {
    pub fn holds(&self, s: &GlobalState) -> bool {
        match *self {
            ResolvedAtom::Shared { var, value } => s.shared[var] == value,
            ResolvedAtom::Local { thread, var, value } => s.locals[thread].vars[var] == value,
            ResolvedAtom::At { thread, pc } => s.locals[thread].pc == pc,
        }
    }
}

impl Program {
    pub fn thread_count(&self) -> usize {
        self.threads.len()
    }

    pub fn thread_index(&self, id: &str) -> Option<usize> {
        self.threads.iter().position(|t| t.id.as_str() == id)
    }

    pub fn thread_name(&self, idx: usize) -> &str {
        self.threads[idx].id.as_str()
    }

    pub fn resolve_thread(&self, id: &ThreadId) -> Result<usize> {
        self.thread_index(id.as_str())
            .ok_or_else(|| Error::UnknownThread(id.to_string()))
    }

    pub fn shared_index(&self, name: &str) -> Option<usize> {
        self.shared.iter().position(|v| v.name == name)
    }

    /// Override the initial value of a shared variable. Last-read registers
    /// for it start at the new value too.
    pub fn set_initial(&mut self, var: &str, value: i64) -> Result<()> {
        let idx = self
            .shared_index(var)
            .ok_or_else(|| Error::UnknownName(var.to_string()))?;
        let decl = &mut self.shared[idx];
        if !decl.contains(value) {
            return Err(Error::Domain(format!(
                "initial value {value} of `{var}` outside {}..{}",
                decl.lo, decl.hi
            )));
        }
        decl.init = value;
        for t in &mut self.threads {
            if let Some(r) = t.lr[idx] {
                t.locals[r].init = value;
            }
        }
        Ok(())
    }

    pub fn initial_state(&self) -> GlobalState {
        GlobalState {
            shared: self.shared.iter().map(|d| d.init).collect(),
            locals: self
                .threads
                .iter()
                .map(|t| LocalState {
                    pc: t.entry,
                    vars: t.locals.iter().map(|d| d.init).collect(),
                })
                .collect(),
        }
    }

    /// One atomic step of `thread`. Only the thread's local component and,
    /// for writes, the written shared variable change. `halt` stutters.
    pub fn step_thread(&self, s: &GlobalState, thread: usize) -> Result<GlobalState> {
        let def = &self.threads[thread];
        let local = &s.locals[thread];
        let mut next = s.clone();
        let fault = |var: &VarDecl, value: i64| Error::DomainFault {
            thread: def.id.to_string(),
            loc: def.locations[local.pc].clone(),
            var: var.name.clone(),
            value,
            lo: var.lo,
            hi: var.hi,
        };
        let record_read = |next: &mut GlobalState, var: usize| {
            if let Some(r) = def.lr[var] {
                next.locals[thread].vars[r] = s.shared[var];
            }
        };
        let pc = match &def.instrs[local.pc] {
            Instruction::WriteShared { var, rhs, next: to } => {
                let v = rhs.eval(&local.vars);
                if !self.shared[*var].contains(v) {
                    return Err(fault(&self.shared[*var], v));
                }
                next.shared[*var] = v;
                *to
            }
            Instruction::ReadShared { dest, var, next: to } => {
                let v = s.shared[*var];
                record_read(&mut next, *var);
                if !def.locals[*dest].contains(v) {
                    return Err(fault(&def.locals[*dest], v));
                }
                next.locals[thread].vars[*dest] = v;
                *to
            }
            Instruction::ReadBranch {
                var,
                op,
                value,
                then_loc,
                else_loc,
            } => {
                record_read(&mut next, *var);
                if op.eval(s.shared[*var], *value) {
                    *then_loc
                } else {
                    *else_loc
                }
            }
            Instruction::AssignLocal { dest, rhs, next: to } => {
                let v = rhs.eval(&local.vars);
                if !def.locals[*dest].contains(v) {
                    return Err(fault(&def.locals[*dest], v));
                }
                next.locals[thread].vars[*dest] = v;
                *to
            }
            Instruction::BranchLocal {
                cond,
                then_loc,
                else_loc,
            } => {
                if cond.eval(&local.vars) != 0 {
                    *then_loc
                } else {
                    *else_loc
                }
            }
            Instruction::Halt => local.pc,
        };
        next.locals[thread].pc = pc;
        Ok(next)
    }

    /// Bind an atom to positions of this program. `x = v` looks for a shared
    /// `x` first and then for a thread-qualified local `T.v`.
    pub fn resolve_atom(&self, atom: &Atom) -> Result<ResolvedAtom> {
        match atom {
            Atom::VarEq { var, value } => {
                let (decl, resolved) = self.resolve_var(var)?;
                if !decl.contains(*value) {
                    return Err(Error::Domain(format!(
                        "atom `{var} = {value}`: value outside {}..{}",
                        decl.lo, decl.hi
                    )));
                }
                Ok(match resolved {
                    VarRef::Shared(v) => ResolvedAtom::Shared { var: v, value: *value },
                    VarRef::Local(t, v) => ResolvedAtom::Local {
                        thread: t,
                        var: v,
                        value: *value,
                    },
                })
            }
            Atom::VarEqPrevSelf { var } => Err(Error::UnexpandedDerived(format!("{var} = Y {var}"))),
            Atom::At { thread, loc } => {
                let t = self.resolve_thread(thread)?;
                let pc = self.threads[t]
                    .location_index(loc)
                    .ok_or_else(|| Error::UnknownName(format!("{thread}.{loc}")))?;
                Ok(ResolvedAtom::At { thread: t, pc })
            }
        }
    }

    pub fn atom_holds(&self, s: &GlobalState, atom: &Atom) -> Result<bool> {
        Ok(self.resolve_atom(atom)?.holds(s))
    }

    fn resolve_var(&self, name: &str) -> Result<(&VarDecl, VarRef)> {
        if let Some(v) = self.shared_index(name) {
            return Ok((&self.shared[v], VarRef::Shared(v)));
        }
        if let Some((t, local)) = name.split_once('.') {
            if let Some(ti) = self.thread_index(t) {
                if let Some(li) = self.threads[ti].local_index(local) {
                    return Ok((&self.threads[ti].locals[li], VarRef::Local(ti, li)));
                }
            }
        }
        Err(Error::UnknownName(name.to_string()))
    }

    /// `x=1 y=0 T0.pc=cs T0.lr_x=1 ...`
    pub fn render_state(&self, s: &GlobalState) -> String {
        let mut parts = Vec::new();
        for (d, v) in self.shared.iter().zip(&s.shared) {
            parts.push(format!("{}={v}", d.name));
        }
        for (t, l) in self.threads.iter().zip(&s.locals) {
            parts.push(format!("{}.pc={}", t.id, t.locations[l.pc]));
            for (d, v) in t.locals.iter().zip(&l.vars) {
                parts.push(format!("{}.{}={v}", t.id, d.name));
            }
        }
        parts.join(" ")
    }
}

enum VarRef {
    Shared(usize),
    Local(usize, usize),
}

impl VarDomains for Program {
    fn domain(&self, var: &str) -> Option<(i64, i64)> {
        self.resolve_var(var).ok().map(|(d, _)| (d.lo, d.hi))
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.shared {
            writeln!(f, "shared {} : {}..{} = {}", d.name, d.lo, d.hi, d.init)?;
        }
        for t in &self.threads {
            writeln!(f, "thread {} {{", t.id)?;
            for d in t.locals.iter().filter(|d| !d.name.starts_with("lr_")) {
                writeln!(f, "  local {} : {}..{} = {}", d.name, d.lo, d.hi, d.init)?;
            }
            for (loc, ins) in t.locations.iter().zip(&t.instrs) {
                writeln!(f, "  {loc}: {}", self.render_instr(t, ins))?;
            }
            writeln!(f, "}}")?;
        }
        Ok(())
    }
}

impl Program {
    fn render_instr(&self, t: &ThreadDef, ins: &Instruction) -> String {
        let loc = |i: &usize| t.locations[*i].clone();
        let expr = |e: &Expr| render_expr(t, e);
        match ins {
            Instruction::WriteShared { var, rhs, next } => {
                format!("write {} := {} goto {}", self.shared[*var].name, expr(rhs), loc(next))
            }
            Instruction::ReadShared { dest, var, next } => format!(
                "read {} := {} goto {}",
                t.locals[*dest].name,
                self.shared[*var].name,
                loc(next)
            ),
            Instruction::ReadBranch {
                var,
                op,
                value,
                then_loc,
                else_loc,
            } => format!(
                "readbr {} {} {value} ? {} : {}",
                self.shared[*var].name,
                op.symbol(),
                loc(then_loc),
                loc(else_loc)
            ),
            Instruction::AssignLocal { dest, rhs, next } => {
                format!("let {} := {} goto {}", t.locals[*dest].name, expr(rhs), loc(next))
            }
            Instruction::BranchLocal {
                cond,
                then_loc,
                else_loc,
            } => format!("br {} ? {} : {}", expr(cond), loc(then_loc), loc(else_loc)),
            Instruction::Halt => "halt".to_string(),
        }
    }
}

fn render_expr(t: &ThreadDef, e: &Expr) -> String {
    let r = |x: &Expr| render_expr(t, x);
    match e {
        Expr::Const(v) => v.to_string(),
        Expr::Local(i) => t.locals[*i].name.clone(),
        Expr::Neg(a) => format!("-({})", r(a)),
        Expr::Not(a) => format!("!({})", r(a)),
        Expr::Add(a, b) => format!("({} + {})", r(a), r(b)),
        Expr::Sub(a, b) => format!("({} - {})", r(a), r(b)),
        Expr::Cmp(op, a, b) => format!("({} {} {})", r(a), op.symbol(), r(b)),
        Expr::And(a, b) => format!("({} && {})", r(a), r(b)),
        Expr::Or(a, b) => format!("({} || {})", r(a), r(b)),
    }
}
