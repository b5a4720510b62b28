//! Text formats for programs (`.mddlog`), instances (`.facts`), MMSNP
//! sentences (`.mmsnp`) and tiling problems (`.tiling`).
//!
//! Identifiers consist of letters, digits, `_`, `$` and `'`. In argument
//! position an identifier starting with an uppercase letter or `_` is a
//! variable, anything else is a constant. `%` starts a comment.
//!
//! Besides rules, a program file may contain the directives
//! `@goal name.`, `@arity k.` and `@edb r/2, A/1.`; an instance file may
//! contain `@edb` to declare relations without facts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::error::{Error, Result, SourceSpan};
use crate::ir::{Atom, DisjointnessSet, Fact, Instance, Program, Rule, Schema, Term};
use crate::mmsnp::{Clause, MmsnpSentence};
use crate::tilegen::{TilingInput, TilingProblem};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Bar,
    Implies,
    At,
    Slash,
    Amp,
    Arrow,
    Semi,
    Eof,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Dot => "`.`".into(),
        Tok::Bar => "`|`".into(),
        Tok::Implies => "`:-`".into(),
        Tok::At => "`@`".into(),
        Tok::Slash => "`/`".into(),
        Tok::Amp => "`&`".into(),
        Tok::Arrow => "`->`".into(),
        Tok::Semi => "`;`".into(),
        Tok::Eof => "end of input".into(),
    }
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '$' || c == '\''
}

/// True for identifiers that denote variables in argument position.
pub fn is_variable_name(s: &str) -> bool {
    s.chars()
        .next()
        .is_some_and(|c| c.is_ascii_uppercase() || c == '_')
}

fn lex(text: &str) -> Result<Vec<(Tok, SourceSpan)>> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut col) = (1usize, 1usize);
    while let Some(&c) = chars.peek() {
        let span = SourceSpan { line, column: col };
        if c == '\n' {
            chars.next();
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            chars.next();
            col += 1;
            continue;
        }
        if c == '%' {
            while let Some(&c) = chars.peek() {
                if c == '\n' {
                    break;
                }
                chars.next();
            }
            continue;
        }
        if is_ident_char(c) {
            let mut s = String::new();
            while let Some(&c) = chars.peek() {
                if !is_ident_char(c) {
                    break;
                }
                s.push(c);
                chars.next();
                col += 1;
            }
            out.push((Tok::Ident(s), span));
            continue;
        }
        chars.next();
        col += 1;
        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            '.' => Tok::Dot,
            '|' => Tok::Bar,
            '@' => Tok::At,
            '/' => Tok::Slash,
            '&' => Tok::Amp,
            ';' => Tok::Semi,
            ':' if chars.peek() == Some(&'-') => {
                chars.next();
                col += 1;
                Tok::Implies
            }
            '-' if chars.peek() == Some(&'>') => {
                chars.next();
                col += 1;
                Tok::Arrow
            }
            other => {
                return Err(Error::Syntax {
                    span,
                    message: format!("unexpected character `{other}`"),
                })
            }
        };
        out.push((tok, span));
    }
    out.push((Tok::Eof, SourceSpan { line, column: col }));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, SourceSpan)>,
    pos: usize,
}

/// An atom together with where it started and where each argument was.
struct SpannedAtom {
    atom: Atom,
    span: SourceSpan,
}

impl Parser {
    fn new(text: &str) -> Result<Self> {
        Ok(Parser {
            toks: lex(text)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)].0
    }

    fn span(&self) -> SourceSpan {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            span: self.span(),
            message: message.into(),
        })
    }

    fn expect(&mut self, t: Tok) -> Result<()> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            self.err(format!(
                "expected {}, found {}",
                describe(&t),
                describe(self.peek())
            ))
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            other => self.err(format!("expected identifier, found {}", describe(&other))),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn atom(&mut self) -> Result<SpannedAtom> {
        let span = self.span();
        let rel = self.ident()?;
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                let name = self.ident()?;
                args.push(if is_variable_name(&name) {
                    Term::Var(name)
                } else {
                    Term::Const(name)
                });
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        Ok(SpannedAtom {
            atom: Atom::new(rel, args),
            span,
        })
    }

    /// `name/arity, name/arity .` after `@edb`.
    fn signature_list(
        &mut self,
        schema: &mut Schema,
        spans: &mut BTreeMap<String, SourceSpan>,
    ) -> Result<()> {
        loop {
            let span = self.span();
            let name = self.ident()?;
            self.expect(Tok::Slash)?;
            let n = self.number()?;
            check_arity(schema, spans, &name, n, span)?;
            if *self.peek() == Tok::Comma {
                self.bump();
            } else {
                break;
            }
        }
        self.expect(Tok::Dot)
    }

    fn number(&mut self) -> Result<usize> {
        let span = self.span();
        let s = self.ident()?;
        s.parse().map_err(|_| Error::Syntax {
            span,
            message: format!("expected a number, found `{s}`"),
        })
    }
}

fn check_arity(
    schema: &mut Schema,
    spans: &mut BTreeMap<String, SourceSpan>,
    rel: &str,
    arity: usize,
    span: SourceSpan,
) -> Result<()> {
    match schema.arity(rel) {
        Some(a) if a != arity => {
            let first = spans[rel];
            Err(Error::Syntax {
                span,
                message: format!(
                    "relation {rel} used with arity {arity}, but with arity {a} at {first}"
                ),
            })
        }
        Some(_) => Ok(()),
        None => {
            schema.insert(rel, arity)?;
            spans.insert(rel.to_string(), span);
            Ok(())
        }
    }
}

struct RawProgram {
    rules: Vec<(Rule, SourceSpan)>,
    goal: Option<String>,
    arity: Option<(usize, SourceSpan)>,
    schema: Schema,
    spans: BTreeMap<String, SourceSpan>,
}

fn parse_rules(text: &str) -> Result<RawProgram> {
    let mut p = Parser::new(text)?;
    let mut raw = RawProgram {
        rules: Vec::new(),
        goal: None,
        arity: None,
        schema: Schema::new(),
        spans: BTreeMap::new(),
    };
    while *p.peek() != Tok::Eof {
        if *p.peek() == Tok::At {
            p.bump();
            let span = p.span();
            let d = p.ident()?;
            match d.as_str() {
                "goal" => {
                    raw.goal = Some(p.ident()?);
                    p.expect(Tok::Dot)?;
                }
                "arity" => {
                    raw.arity = Some((p.number()?, span));
                    p.expect(Tok::Dot)?;
                }
                "edb" => p.signature_list(&mut raw.schema, &mut raw.spans)?,
                other => {
                    return Err(Error::Syntax {
                        span,
                        message: format!("unknown directive @{other}"),
                    })
                }
            }
            continue;
        }
        let span = p.span();
        let mut head = Vec::new();
        if p.at_keyword("false") && *p.peek2() == Tok::Implies {
            p.bump();
        } else {
            loop {
                head.push(p.atom()?);
                if *p.peek() == Tok::Bar {
                    p.bump();
                } else {
                    break;
                }
            }
        }
        if *p.peek() != Tok::Implies {
            return p.err(format!(
                "expected `:-` (rules need a body), found {}",
                describe(p.peek())
            ));
        }
        p.bump();
        let mut body = Vec::new();
        loop {
            body.push(p.atom()?);
            if *p.peek() == Tok::Comma {
                p.bump();
            } else {
                break;
            }
        }
        p.expect(Tok::Dot)?;
        for a in head.iter().chain(body.iter()) {
            check_arity(
                &mut raw.schema,
                &mut raw.spans,
                &a.atom.rel,
                a.atom.arity(),
                a.span,
            )?;
        }
        let body_vars: BTreeSet<&str> = body.iter().flat_map(|a| a.atom.var_names()).collect();
        for a in &head {
            if let Some(v) = a.atom.var_names().find(|v| !body_vars.contains(v)) {
                return Err(Error::Syntax {
                    span: a.span,
                    message: format!("head variable {v} does not occur in the body"),
                });
            }
        }
        raw.rules.push((
            Rule::new(
                head.into_iter().map(|a| a.atom).collect(),
                body.into_iter().map(|a| a.atom).collect(),
            ),
            span,
        ));
    }
    Ok(raw)
}

pub fn parse_program(text: &str) -> Result<Program> {
    let raw = parse_rules(text)?;
    let goal = raw.goal.unwrap_or_else(|| "goal".to_string());
    for (r, span) in &raw.rules {
        if r.body.iter().any(|a| a.rel == goal) {
            return Err(Error::Syntax {
                span: *span,
                message: format!("goal relation {goal} occurs in a rule body"),
            });
        }
        if r.head.len() > 1 && r.head.iter().any(|a| a.rel == goal) {
            return Err(Error::Syntax {
                span: *span,
                message: format!("goal relation {goal} occurs in a disjunctive head"),
            });
        }
    }
    let arity = match (raw.schema.arity(&goal), raw.arity) {
        (Some(a), Some((b, span))) if a != b => {
            return Err(Error::Syntax {
                span,
                message: format!("@arity {b} contradicts goal arity {a}"),
            })
        }
        (Some(a), _) => a,
        (None, Some((b, _))) => b,
        (None, None) => 0,
    };
    let rules = raw.rules.into_iter().map(|(r, _)| r).collect();
    Program::new(rules, goal, arity, &raw.schema)
}

/// Parses constraints written as `false :- P(X), Q(X).`
pub fn parse_disjointness(text: &str) -> Result<DisjointnessSet> {
    let raw = parse_rules(text)?;
    for (r, span) in &raw.rules {
        if !r.head.is_empty() {
            return Err(Error::Syntax {
                span: *span,
                message: "disjointness constraints must have the head `false`".into(),
            });
        }
    }
    DisjointnessSet::new(raw.rules.into_iter().map(|(r, _)| r).collect())
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let mut p = Parser::new(text)?;
    let mut schema = Schema::new();
    let mut spans = BTreeMap::new();
    let mut facts = Vec::new();
    while *p.peek() != Tok::Eof {
        if *p.peek() == Tok::At {
            p.bump();
            let span = p.span();
            let d = p.ident()?;
            if d != "edb" {
                return Err(Error::Syntax {
                    span,
                    message: format!("unknown directive @{d} in an instance"),
                });
            }
            p.signature_list(&mut schema, &mut spans)?;
            continue;
        }
        let a = p.atom()?;
        p.expect(Tok::Dot)?;
        if let Some(v) = a.atom.var_names().next() {
            return Err(Error::Syntax {
                span: a.span,
                message: format!("facts must be ground, found variable {v}"),
            });
        }
        check_arity(&mut schema, &mut spans, &a.atom.rel, a.atom.arity(), a.span)?;
        facts.push(Fact::new(
            a.atom.rel,
            a.atom.args.into_iter().map(|t| t.name().to_string()),
        ));
    }
    Instance::from_facts(&schema, facts)
}

fn render_signatures(out: &mut String, sigs: &[(&str, usize)]) {
    if sigs.is_empty() {
        return;
    }
    let list: Vec<String> = sigs.iter().map(|(n, a)| format!("{n}/{a}")).collect();
    let _ = writeln!(out, "@edb {}.", list.join(", "));
}

pub fn render_program(p: &Program) -> String {
    let mut out = String::new();
    if p.goal != "goal" {
        let _ = writeln!(out, "@goal {}.", p.goal);
    }
    let used: BTreeSet<&str> = p
        .rules
        .iter()
        .flat_map(|r| r.head.iter().chain(r.body.iter()))
        .map(|a| a.rel.as_str())
        .collect();
    if !used.contains(p.goal.as_str()) && p.arity != 0 {
        let _ = writeln!(out, "@arity {}.", p.arity);
    }
    let unused: Vec<(&str, usize)> = p
        .schema
        .iter()
        .filter(|(n, _)| !used.contains(n) && *n != p.goal)
        .collect();
    render_signatures(&mut out, &unused);
    for r in &p.rules {
        let _ = writeln!(out, "{r}");
    }
    out
}

pub fn render_disjointness(d: &DisjointnessSet) -> String {
    d.rules.iter().map(|r| format!("{r}\n")).collect()
}

pub fn render_instance(i: &Instance) -> String {
    let mut out = String::new();
    let used: BTreeSet<&str> = i.facts().map(|f| f.rel.as_str()).collect();
    let unused: Vec<(&str, usize)> = i.schema.iter().filter(|(n, _)| !used.contains(n)).collect();
    render_signatures(&mut out, &unused);
    for f in i.facts() {
        let _ = writeln!(out, "{f}.");
    }
    out
}

pub fn parse_mmsnp(text: &str) -> Result<MmsnpSentence> {
    let mut p = Parser::new(text)?;
    let mut schema = Schema::new();
    let mut spans = BTreeMap::new();
    while *p.peek() == Tok::At {
        p.bump();
        let span = p.span();
        let d = p.ident()?;
        if d != "edb" {
            return Err(Error::Syntax {
                span,
                message: format!("unknown directive @{d} in a sentence"),
            });
        }
        p.signature_list(&mut schema, &mut spans)?;
    }
    let mut so_vars = Vec::new();
    let mut fo_vars = Vec::new();
    if p.at_keyword("exists") {
        p.bump();
        while *p.peek() != Tok::Dot {
            so_vars.push(p.ident()?);
        }
        p.bump();
    }
    if p.at_keyword("forall") {
        p.bump();
        while *p.peek() != Tok::Dot {
            fo_vars.push(p.ident()?);
        }
        p.bump();
    }
    let so: BTreeSet<&str> = so_vars.iter().map(String::as_str).collect();
    let fo: BTreeSet<&str> = fo_vars.iter().map(String::as_str).collect();
    if so.len() != so_vars.len() || fo.len() != fo_vars.len() {
        return p.err("duplicate variable in quantifier prefix");
    }
    let mut clauses = Vec::new();
    while *p.peek() != Tok::Eof {
        let mut alphas = Vec::new();
        if p.at_keyword("true") && *p.peek2() == Tok::Arrow {
            p.bump();
        } else {
            loop {
                alphas.push(p.atom()?);
                if *p.peek() == Tok::Amp {
                    p.bump();
                } else {
                    break;
                }
            }
        }
        p.expect(Tok::Arrow)?;
        let mut betas = Vec::new();
        if p.at_keyword("false") && *p.peek2() != Tok::LParen {
            p.bump();
        } else {
            loop {
                betas.push(p.atom()?);
                if *p.peek() == Tok::Bar {
                    p.bump();
                } else {
                    break;
                }
            }
        }
        for a in alphas.iter().chain(betas.iter()) {
            for t in &a.atom.args {
                if !fo.contains(t.name()) {
                    return Err(Error::Syntax {
                        span: a.span,
                        message: format!("undeclared first-order variable {}", t.name()),
                    });
                }
            }
            if so.contains(a.atom.rel.as_str()) && a.atom.arity() != 1 {
                return Err(Error::Syntax {
                    span: a.span,
                    message: format!("second-order variable {} must be unary", a.atom.rel),
                });
            }
        }
        for a in &alphas {
            if !so.contains(a.atom.rel.as_str()) {
                check_arity(&mut schema, &mut spans, &a.atom.rel, a.atom.arity(), a.span)?;
            }
        }
        for b in &betas {
            if !so.contains(b.atom.rel.as_str()) {
                return Err(Error::Syntax {
                    span: b.span,
                    message: format!(
                        "{} on the right of `->` is not a second-order variable",
                        b.atom.rel
                    ),
                });
            }
        }
        let var = |a: SpannedAtom| {
            Atom::new(
                a.atom.rel,
                a.atom
                    .args
                    .into_iter()
                    .map(|t| Term::Var(t.name().to_string()))
                    .collect(),
            )
        };
        clauses.push(Clause {
            alphas: alphas.into_iter().map(var).collect(),
            betas: betas.into_iter().map(var).collect(),
        });
        if *p.peek() == Tok::Semi {
            p.bump();
        } else if *p.peek() != Tok::Eof {
            return p.err(format!("expected `;`, found {}", describe(p.peek())));
        }
    }
    for v in &so_vars {
        if schema.contains(v) {
            return Err(Error::invalid(format!(
                "{v} is both a second-order variable and a relation"
            )));
        }
    }
    Ok(MmsnpSentence {
        so_vars,
        fo_vars,
        clauses,
        schema,
    })
}

pub fn render_mmsnp(s: &MmsnpSentence) -> String {
    let mut out = String::new();
    let used: BTreeSet<&str> = s
        .clauses
        .iter()
        .flat_map(|c| c.alphas.iter())
        .map(|a| a.rel.as_str())
        .collect();
    let unused: Vec<(&str, usize)> = s.schema.iter().filter(|(n, _)| !used.contains(n)).collect();
    render_signatures(&mut out, &unused);
    if !s.so_vars.is_empty() {
        let _ = writeln!(out, "exists {} .", s.so_vars.join(" "));
    }
    if !s.fo_vars.is_empty() {
        let _ = writeln!(out, "forall {} .", s.fo_vars.join(" "));
    }
    for c in &s.clauses {
        let lhs = if c.alphas.is_empty() {
            "true".to_string()
        } else {
            c.alphas
                .iter()
                .map(|a| a.to_string())
                .collect::<Vec<_>>()
                .join(" & ")
        };
        let rhs = if c.betas.is_empty() {
            "false".to_string()
        } else {
            c.betas
                .iter()
                .map(|a| a.to_string())
                .collect::<Vec<_>>()
                .join(" | ")
        };
        let _ = writeln!(out, "  {lhs} -> {rhs} ;");
    }
    out
}

/// Parses the line-oriented tiling format: `tiles:`, `h:`, `v:` and `word:` lines.
pub fn parse_tiling(text: &str) -> Result<(TilingProblem, TilingInput)> {
    let mut tiles: Option<Vec<String>> = None;
    let mut h = BTreeSet::new();
    let mut v = BTreeSet::new();
    let mut word: Option<Vec<String>> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('%').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let span = SourceSpan {
            line: i + 1,
            column: 1,
        };
        let syntax = |message: String| Error::Syntax { span, message };
        let (key, rest) = line
            .split_once(':')
            .ok_or_else(|| syntax(format!("expected `key: values`, found `{line}`")))?;
        let vals: Vec<String> = rest.split_whitespace().map(str::to_string).collect();
        if let Some(bad) = vals.iter().find(|s| !s.chars().all(is_ident_char)) {
            return Err(syntax(format!("invalid tile name `{bad}`")));
        }
        match key.trim() {
            "tiles" => tiles = Some(vals),
            "h" | "v" => {
                if vals.len() != 2 {
                    return Err(syntax("a matching pair needs exactly two tiles".into()));
                }
                let pair = (vals[0].clone(), vals[1].clone());
                if key.trim() == "h" {
                    h.insert(pair);
                } else {
                    v.insert(pair);
                }
            }
            "word" => word = Some(vals),
            other => return Err(syntax(format!("unknown key `{other}`"))),
        }
    }
    let tiles = tiles.ok_or_else(|| Error::invalid("tiling problem without a `tiles:` line"))?;
    let word = word.ok_or_else(|| Error::invalid("tiling problem without a `word:` line"))?;
    let problem = TilingProblem::new(tiles, h, v)?;
    let input = TilingInput::new(&problem, word)?;
    Ok((problem, input))
}

pub fn render_tiling(p: &TilingProblem, w: &TilingInput) -> String {
    let mut out = format!("tiles: {}\n", p.tiles.join(" "));
    for (a, b) in &p.horizontal {
        let _ = writeln!(out, "h: {a} {b}");
    }
    for (a, b) in &p.vertical {
        let _ = writeln!(out, "v: {a} {b}");
    }
    let _ = writeln!(out, "word: {}", w.word.join(" "));
    out
}
