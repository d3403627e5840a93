// SPDX-License-Identifier: Apache-2.0

//! Syntax tree for the toy language.
//!
//! Every block, statement and expression carries a [`NodeId`]. Parsed
//! programs are numbered in pre-order starting at zero, so re-parsing the
//! canonical pretty-print of a parsed program reproduces identical ids.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Inclusive integer range declared for a parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Domain {
    pub lo: i64,
    pub hi: i64,
}

impl Domain {
    pub fn new(lo: i64, hi: i64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, v: i64) -> bool {
        self.lo <= v && v <= self.hi
    }

    /// Number of points in the range; zero for an inverted range.
    pub fn len(&self) -> u64 {
        if self.hi < self.lo {
            0
        } else {
            (self.hi as i128 - self.lo as i128 + 1) as u64
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub domain: Domain,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionDef {
    pub name: String,
    pub params: Vec<Param>,
    pub body: Block,
}

impl FunctionDef {
    pub fn domains(&self) -> Vec<Domain> {
        self.params.iter().map(|p| p.domain).collect()
    }

    /// Number of AST nodes in the body, the body block included.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.body.walk(&mut |_| n += 1);
        n
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Program {
    pub functions: Vec<FunctionDef>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub id: NodeId,
    pub stmts: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    pub id: NodeId,
    pub kind: StmtKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    Let {
        name: String,
        value: Expr,
    },
    Assign {
        name: String,
        value: Expr,
    },
    If {
        cond: Expr,
        then_block: Block,
        else_block: Option<Block>,
    },
    While {
        cond: Expr,
        body: Block,
    },
    Return(Expr),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expr {
    pub id: NodeId,
    pub kind: ExprKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind {
    Int(i64),
    Bool(bool),
    Var(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpClass {
    Arithmetic,
    Comparison,
    Logical,
}

impl BinOp {
    pub const ARITHMETIC: [BinOp; 5] = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Rem];
    pub const COMPARISON: [BinOp; 6] = [
        BinOp::Lt,
        BinOp::Le,
        BinOp::Gt,
        BinOp::Ge,
        BinOp::Eq,
        BinOp::Ne,
    ];
    pub const LOGICAL: [BinOp; 2] = [BinOp::And, BinOp::Or];

    pub fn class(self) -> OpClass {
        match self {
            BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Rem => OpClass::Arithmetic,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne => {
                OpClass::Comparison
            }
            BinOp::And | BinOp::Or => OpClass::Logical,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength used by the parser and printer; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne => 3,
            BinOp::Add | BinOp::Sub => 4,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 5,
        }
    }

    /// Apply a comparison operator to two integers. Panics on non-comparisons.
    pub fn compare(self, a: i64, b: i64) -> bool {
        match self {
            BinOp::Lt => a < b,
            BinOp::Le => a <= b,
            BinOp::Gt => a > b,
            BinOp::Ge => a >= b,
            BinOp::Eq => a == b,
            BinOp::Ne => a != b,
            other => panic!("{other:?} is not a comparison"),
        }
    }
}

/// Borrowed view of any node, yielded by the pre-order walkers.
#[derive(Debug, Clone, Copy)]
pub enum NodeRef<'a> {
    Block(&'a Block),
    Stmt(&'a Stmt),
    Expr(&'a Expr),
}

impl NodeRef<'_> {
    pub fn id(&self) -> NodeId {
        match self {
            NodeRef::Block(b) => b.id,
            NodeRef::Stmt(s) => s.id,
            NodeRef::Expr(e) => e.id,
        }
    }
}

impl Expr {
    pub fn new(kind: ExprKind) -> Self {
        Self {
            id: NodeId(0),
            kind,
        }
    }

    pub fn int(v: i64) -> Self {
        Self::new(ExprKind::Int(v))
    }

    pub fn boolean(v: bool) -> Self {
        Self::new(ExprKind::Bool(v))
    }

    pub fn var(name: &str) -> Self {
        Self::new(ExprKind::Var(name.to_string()))
    }

    pub fn unary(op: UnOp, operand: Expr) -> Self {
        Self::new(ExprKind::Unary(op, Box::new(operand)))
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Self {
        Self::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)))
    }

    pub fn walk<'a>(&'a self, f: &mut impl FnMut(NodeRef<'a>)) {
        f(NodeRef::Expr(self));
        match &self.kind {
            ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::Var(_) => {}
            ExprKind::Unary(_, e) => e.walk(f),
            ExprKind::Binary(_, l, r) => {
                l.walk(f);
                r.walk(f);
            }
        }
    }

    /// Statically known type, assuming the expression is well-typed.
    pub fn ty(&self) -> Ty {
        match &self.kind {
            ExprKind::Int(_) | ExprKind::Var(_) => Ty::Int,
            ExprKind::Bool(_) => Ty::Bool,
            ExprKind::Unary(UnOp::Not, _) => Ty::Bool,
            ExprKind::Unary(UnOp::Neg, _) => Ty::Int,
            ExprKind::Binary(op, _, _) => match op.class() {
                OpClass::Arithmetic => Ty::Int,
                OpClass::Comparison | OpClass::Logical => Ty::Bool,
            },
        }
    }

    pub fn size(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |_| n += 1);
        n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ty {
    Int,
    Bool,
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Ty::Int => "int",
            Ty::Bool => "bool",
        })
    }
}

impl Stmt {
    pub fn new(kind: StmtKind) -> Self {
        Self {
            id: NodeId(0),
            kind,
        }
    }

    pub fn walk<'a>(&'a self, f: &mut impl FnMut(NodeRef<'a>)) {
        f(NodeRef::Stmt(self));
        match &self.kind {
            StmtKind::Let { value, .. }
            | StmtKind::Assign { value, .. }
            | StmtKind::Return(value) => value.walk(f),
            StmtKind::If {
                cond,
                then_block,
                else_block,
            } => {
                cond.walk(f);
                then_block.walk(f);
                if let Some(b) = else_block {
                    b.walk(f);
                }
            }
            StmtKind::While { cond, body } => {
                cond.walk(f);
                body.walk(f);
            }
        }
    }

    /// Condition expression for `if`/`while` statements.
    pub fn condition(&self) -> Option<&Expr> {
        match &self.kind {
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => Some(cond),
            _ => None,
        }
    }
}

impl Block {
    pub fn new(stmts: Vec<Stmt>) -> Self {
        Self {
            id: NodeId(0),
            stmts,
        }
    }

    pub fn walk<'a>(&'a self, f: &mut impl FnMut(NodeRef<'a>)) {
        f(NodeRef::Block(self));
        for s in &self.stmts {
            s.walk(f);
        }
    }
}

impl Program {
    pub fn function(&self, name: &str) -> Option<&FunctionDef> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn function_index(&self, name: &str) -> Option<usize> {
        self.functions.iter().position(|f| f.name == name)
    }

    /// Pre-order walk over every node of every function.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(NodeRef<'a>)) {
        for func in &self.functions {
            func.body.walk(f);
        }
    }

    pub fn node(&self, id: NodeId) -> Option<NodeRef<'_>> {
        let mut found = None;
        self.walk(&mut |n| {
            if found.is_none() && n.id() == id {
                found = Some(n);
            }
        });
        found
    }

    /// Index of the function whose body contains `id`.
    pub fn function_of(&self, id: NodeId) -> Option<usize> {
        self.functions.iter().position(|func| {
            let mut hit = false;
            func.body.walk(&mut |n| hit |= n.id() == id);
            hit
        })
    }

    pub fn max_node_id(&self) -> Option<NodeId> {
        let mut max = None;
        self.walk(&mut |n| max = max.max(Some(n.id())));
        max
    }

    /// Condition expressions of every `if`/`while`, keyed by the condition's id.
    pub fn condition_nodes(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        self.walk(&mut |n| {
            if let NodeRef::Stmt(s) = n {
                if let Some(c) = s.condition() {
                    out.push(c.id);
                }
            }
        });
        out
    }

    /// The `if`/`while` statement owning condition `cond`.
    pub fn statement_of_condition(&self, cond: NodeId) -> Option<&Stmt> {
        let mut found = None;
        self.walk(&mut |n| {
            if let NodeRef::Stmt(s) = n {
                if s.condition().map(|c| c.id) == Some(cond) {
                    found = Some(s);
                }
            }
        });
        found
    }

    /// All integer literal values, in pre-order, without duplicates.
    pub fn int_constants(&self) -> Vec<i64> {
        let mut out: Vec<i64> = Vec::new();
        self.walk(&mut |n| {
            if let NodeRef::Expr(Expr {
                kind: ExprKind::Int(v),
                ..
            }) = n
            {
                if !out.contains(v) {
                    out.push(*v);
                }
            }
        });
        out
    }

    /// Variables visible immediately before node `id` executes: parameters
    /// followed by `let` bindings of enclosing blocks, in declaration order.
    pub fn scope_at(&self, id: NodeId) -> Option<Vec<String>> {
        let fi = self.function_of(id)?;
        let func = &self.functions[fi];
        let mut scope: Vec<String> = func.params.iter().map(|p| p.name.clone()).collect();
        if scope_in_block(&func.body, id, &mut scope) {
            Some(scope)
        } else {
            None
        }
    }
}

fn contains_node(stmt: &Stmt, id: NodeId) -> bool {
    let mut hit = false;
    stmt.walk(&mut |n| hit |= n.id() == id);
    hit
}

fn scope_in_block(block: &Block, id: NodeId, scope: &mut Vec<String>) -> bool {
    if block.id == id {
        return true;
    }
    for s in &block.stmts {
        if contains_node(s, id) {
            if s.id == id {
                return true;
            }
            return match &s.kind {
                StmtKind::Let { .. } | StmtKind::Assign { .. } | StmtKind::Return(_) => true,
                StmtKind::If {
                    cond,
                    then_block,
                    else_block,
                } => {
                    let mut hit = false;
                    cond.walk(&mut |n| hit |= n.id() == id);
                    if hit {
                        return true;
                    }
                    let mark = scope.len();
                    if scope_in_block(then_block, id, scope) {
                        return true;
                    }
                    scope.truncate(mark);
                    match else_block {
                        Some(b) => scope_in_block(b, id, scope),
                        None => false,
                    }
                }
                StmtKind::While { cond, body } => {
                    let mut hit = false;
                    cond.walk(&mut |n| hit |= n.id() == id);
                    hit || scope_in_block(body, id, scope)
                }
            };
        }
        if let StmtKind::Let { name, .. } = &s.kind {
            scope.push(name.clone());
        }
    }
    false
}
