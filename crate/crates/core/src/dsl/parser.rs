use std::collections::{BTreeMap, BTreeSet};

use super::lexer::{lex_line, Tok, Token};
use crate::diag::{codes, sort_diagnostics, Diagnostic, SourceSpan};
use crate::events::{Event, FlowRef, RegionItem};
use crate::model::{
    is_identifier, Flow, Location, MachinePath, Model, StageKind, StageRef, Trigger, KEYWORDS,
};

/// A successful parse: the model and any warnings.
#[derive(Debug, Clone)]
pub struct Parsed {
    pub model: Model,
    pub warnings: Vec<Diagnostic>,
}

#[derive(Debug)]
struct Name {
    text: String,
    span: SourceSpan,
}

#[derive(Debug)]
struct RefAst {
    path: Vec<String>,
    kind: StageKind,
    span: SourceSpan,
}

impl RefAst {
    fn stage_ref(&self) -> StageRef {
        StageRef::new(
            MachinePath::parse(&self.path.join(".")).expect("segments checked"),
            self.kind,
        )
    }
}

#[derive(Debug)]
enum ItemAst {
    Stage(RefAst),
    Flow {
        thing: Option<Name>,
        source: RefAst,
        target: RefAst,
    },
}

#[derive(Debug)]
enum Decl {
    Model {
        name: Name,
        stages: Vec<(StageKind, SourceSpan)>,
    },
    Machine {
        path: Vec<Name>,
        stages: Vec<(StageKind, SourceSpan)>,
        folded: bool,
    },
    Thing(Name),
    Flow {
        thing: Name,
        source: RefAst,
        target: RefAst,
    },
    Trigger {
        source: RefAst,
        target: RefAst,
    },
    Event {
        name: Name,
        items: Vec<ItemAst>,
        duration: Option<(u64, SourceSpan)>,
    },
    Chronology(Vec<(Name, Name)>),
}

struct LineParser {
    toks: Vec<Token>,
    pos: usize,
    eol: SourceSpan,
}

type PResult<T> = Result<T, Diagnostic>;

impl LineParser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, n: usize) -> Option<&Tok> {
        self.toks.get(self.pos + n).map(|t| &t.tok)
    }

    fn here(&self) -> SourceSpan {
        self.toks.get(self.pos).map(|t| t.span).unwrap_or(self.eol)
    }

    fn error<T>(&self, expected: &str) -> PResult<T> {
        let found = match self.toks.get(self.pos) {
            Some(t) => t.tok.describe(),
            None => "end of line".to_string(),
        };
        Err(Diagnostic::error(
            codes::SYNTAX_ERROR,
            format!("expected {expected}, found {found}"),
            Some(self.here()),
        ))
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> PResult<SourceSpan> {
        let span = self.here();
        if self.eat(&tok) {
            Ok(span)
        } else {
            self.error(&tok.describe())
        }
    }

    fn word(&mut self) -> PResult<Name> {
        match self.toks.get(self.pos) {
            Some(Token {
                tok: Tok::Ident(s),
                span,
            }) => {
                let n = Name {
                    text: s.clone(),
                    span: *span,
                };
                self.pos += 1;
                Ok(n)
            }
            _ => self.error("a name"),
        }
    }

    fn keyword(&mut self, kw: &str) -> PResult<()> {
        match self.peek() {
            Some(Tok::Ident(s)) if s == kw => {
                self.pos += 1;
                Ok(())
            }
            _ => self.error(&format!("`{kw}`")),
        }
    }

    /// A user-chosen name: any identifier that is not a keyword.
    fn name(&mut self) -> PResult<Name> {
        let n = self.word()?;
        if KEYWORDS.contains(&n.text.as_str()) {
            return Err(Diagnostic::error(
                codes::SYNTAX_ERROR,
                format!("`{}` is a reserved keyword", n.text),
                Some(n.span),
            ));
        }
        if !is_identifier(&n.text) {
            return Err(Diagnostic::error(
                codes::SYNTAX_ERROR,
                format!("`{}` is not a valid name", n.text),
                Some(n.span),
            ));
        }
        Ok(n)
    }

    fn kind(&mut self) -> PResult<(StageKind, SourceSpan)> {
        let n = self.word()?;
        match StageKind::from_keyword(&n.text) {
            Some(k) => Ok((k, n.span)),
            None => Err(Diagnostic::error(
                codes::SYNTAX_ERROR,
                format!("expected a stage kind, found `{}`", n.text),
                Some(n.span),
            )),
        }
    }

    /// `{ KIND (, KIND)* }`, possibly empty.
    fn kind_list(&mut self) -> PResult<Vec<(StageKind, SourceSpan)>> {
        self.expect(Tok::LBrace)?;
        let mut out = Vec::new();
        if self.eat(&Tok::RBrace) {
            return Ok(out);
        }
        loop {
            out.push(self.kind()?);
            if self.eat(&Tok::RBrace) {
                return Ok(out);
            }
            if !self.eat(&Tok::Comma) {
                return self.error("`,` or `}`");
            }
        }
    }

    fn path(&mut self) -> PResult<Vec<Name>> {
        let mut segs = vec![self.name()?];
        while self.eat(&Tok::Dot) {
            segs.push(self.name()?);
        }
        Ok(segs)
    }

    /// `PATH.KIND` or a bare `KIND` for the root machine.
    fn stage_ref(&mut self) -> PResult<RefAst> {
        let start = self.here();
        let mut path = Vec::new();
        loop {
            let w = self.word()?;
            if let Some(kind) = StageKind::from_keyword(&w.text) {
                let end = w.span;
                return Ok(RefAst {
                    path,
                    kind,
                    span: SourceSpan::new(
                        start.line,
                        start.column,
                        end.column + end.length - start.column,
                    ),
                });
            }
            if !is_identifier(&w.text) {
                return Err(Diagnostic::error(
                    codes::SYNTAX_ERROR,
                    format!("`{}` is a reserved keyword", w.text),
                    Some(w.span),
                ));
            }
            path.push(w.text);
            if !self.eat(&Tok::Dot) {
                return self.error("`.` followed by a stage kind");
            }
        }
    }

    fn region_item(&mut self) -> PResult<ItemAst> {
        let labelled = matches!(self.peek(), Some(Tok::Ident(_))) && self.peek_at(1) == Some(&Tok::Colon);
        if labelled {
            let thing = self.name()?;
            self.expect(Tok::Colon)?;
            let source = self.stage_ref()?;
            self.expect(Tok::Arrow)?;
            let target = self.stage_ref()?;
            return Ok(ItemAst::Flow {
                thing: Some(thing),
                source,
                target,
            });
        }
        let source = self.stage_ref()?;
        if self.eat(&Tok::Arrow) {
            let target = self.stage_ref()?;
            Ok(ItemAst::Flow {
                thing: None,
                source,
                target,
            })
        } else {
            Ok(ItemAst::Stage(source))
        }
    }

    fn end(&self) -> PResult<()> {
        if self.pos < self.toks.len() {
            self.error("end of line")
        } else {
            Ok(())
        }
    }

    fn decl(&mut self) -> PResult<Decl> {
        let head = self.word()?;
        let d = match head.text.as_str() {
            "model" => {
                let name = self.name()?;
                let stages = if self.peek() == Some(&Tok::LBrace) {
                    self.kind_list()?
                } else {
                    Vec::new()
                };
                Decl::Model { name, stages }
            }
            "machine" => {
                let path = self.path()?;
                if matches!(self.peek(), Some(Tok::Ident(s)) if s == "folded") {
                    self.pos += 1;
                    Decl::Machine {
                        path,
                        stages: Vec::new(),
                        folded: true,
                    }
                } else {
                    let stages = self.kind_list()?;
                    Decl::Machine {
                        path,
                        stages,
                        folded: false,
                    }
                }
            }
            "thing" => Decl::Thing(self.name()?),
            "flow" => {
                let thing = self.name()?;
                self.expect(Tok::Colon)?;
                let source = self.stage_ref()?;
                self.expect(Tok::Arrow)?;
                let target = self.stage_ref()?;
                Decl::Flow {
                    thing,
                    source,
                    target,
                }
            }
            "trigger" => {
                let source = self.stage_ref()?;
                self.expect(Tok::Arrow)?;
                let target = self.stage_ref()?;
                Decl::Trigger { source, target }
            }
            "event" => {
                let name = self.name()?;
                self.expect(Tok::LBrace)?;
                self.keyword("region")?;
                self.expect(Tok::Colon)?;
                let mut items = vec![self.region_item()?];
                while self.eat(&Tok::Comma) {
                    items.push(self.region_item()?);
                }
                let mut duration = None;
                if self.eat(&Tok::Semi) && self.peek() != Some(&Tok::RBrace) {
                    self.keyword("duration")?;
                    self.expect(Tok::Colon)?;
                    match self.toks.get(self.pos) {
                        Some(Token {
                            tok: Tok::Int(n),
                            span,
                        }) => {
                            duration = Some((*n, *span));
                            self.pos += 1;
                        }
                        _ => return self.error("a duration in ticks"),
                    }
                    self.eat(&Tok::Semi);
                }
                self.expect(Tok::RBrace)?;
                Decl::Event {
                    name,
                    items,
                    duration,
                }
            }
            "chronology" => {
                self.expect(Tok::LBrace)?;
                let mut edges = Vec::new();
                while self.peek() != Some(&Tok::RBrace) {
                    let a = self.name()?;
                    self.expect(Tok::Arrow)?;
                    let b = self.name()?;
                    edges.push((a, b));
                    if !self.eat(&Tok::Semi) {
                        break;
                    }
                }
                self.expect(Tok::RBrace)?;
                Decl::Chronology(edges)
            }
            other => {
                return Err(Diagnostic::error(
                    codes::SYNTAX_ERROR,
                    format!("unknown declaration `{other}`"),
                    Some(head.span),
                ))
            }
        };
        self.end()?;
        Ok(d)
    }
}

/// Parses `.tm` source. On failure every diagnostic (errors and warnings) is
/// returned, ordered by position.
pub fn parse(text: &str) -> Result<Model, Vec<Diagnostic>> {
    parse_full(text).map(|p| p.model)
}

/// Like [`parse`], also returning warnings on success.
pub fn parse_full(text: &str) -> Result<Parsed, Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let mut decls: Vec<(Decl, SourceSpan)> = Vec::new();

    for (i, raw) in text.split('\n').enumerate() {
        let line_no = i as u32 + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        let toks = match lex_line(line_no, line) {
            Ok(t) => t,
            Err(d) => {
                diags.push(d);
                continue;
            }
        };
        if toks.is_empty() {
            continue;
        }
        let first = toks[0].span;
        let last = toks[toks.len() - 1].span;
        let whole = SourceSpan::new(line_no, first.column, last.column + last.length - first.column);
        let eol = SourceSpan::new(line_no, last.column + last.length, 1);
        let mut p = LineParser { toks, pos: 0, eol };
        match p.decl() {
            Ok(d) => decls.push((d, whole)),
            Err(d) => diags.push(d),
        }
    }

    let model = build(&decls, text, &mut diags);
    sort_diagnostics(&mut diags);
    if diags.iter().any(Diagnostic::is_error) {
        Err(diags)
    } else {
        Ok(Parsed {
            model,
            warnings: diags,
        })
    }
}

fn dup(what: &str, name: &str, span: SourceSpan) -> Diagnostic {
    Diagnostic::error(
        codes::DUPLICATE_DECLARATION,
        format!("{what} `{name}` is already declared"),
        Some(span),
    )
}

fn build(decls: &[(Decl, SourceSpan)], text: &str, diags: &mut Vec<Diagnostic>) -> Model {
    let mut model = match decls.first() {
        Some((Decl::Model { name, stages }, span)) => {
            let mut m = Model::new(name.text.clone());
            m.source.model = Some(*span);
            add_stages(&mut m, &MachinePath::root(), stages, diags);
            m
        }
        Some((_, span)) => {
            diags.push(Diagnostic::error(
                codes::SYNTAX_ERROR,
                "expected `model NAME` as the first declaration",
                Some(*span),
            ));
            Model::new("")
        }
        None => {
            let line = text.split('\n').count().max(1) as u32;
            diags.push(Diagnostic::error(
                codes::SYNTAX_ERROR,
                "expected `model NAME`, found end of input",
                Some(SourceSpan::line_start(line.min(1))),
            ));
            return Model::new("");
        }
    };

    // machines first, so later references may point forward
    let explicit: BTreeSet<String> = decls
        .iter()
        .filter_map(|(d, _)| match d {
            Decl::Machine { path, .. } => Some(join_path(path)),
            _ => None,
        })
        .collect();
    let mut declared = BTreeSet::new();
    for (d, span) in decls.iter().skip(1) {
        match d {
            Decl::Model { name, .. } => diags.push(dup("model", &name.text, name.span)),
            Decl::Machine {
                path,
                stages,
                folded,
            } => {
                let text = join_path(path);
                let p = MachinePath::parse(&text).expect("segments checked");
                if !declared.insert(p.clone()) {
                    diags.push(dup("machine", &text, path[0].span));
                    continue;
                }
                if let Some(hidden) = p
                    .ancestors()
                    .into_iter()
                    .find(|a| model.machine(a).is_some_and(|m| m.folded))
                {
                    diags.push(Diagnostic::error(
                        codes::SYNTAX_ERROR,
                        format!("`{text}` lies inside folded machine `{hidden}`"),
                        Some(path[0].span),
                    ));
                    continue;
                }
                if model.machine(&p).is_none() {
                    let created = model.insert_machine(&p, []).expect("not yet present");
                    for c in created {
                        model.source.machines.insert(c.clone(), *span);
                        if !explicit.contains(c.as_str()) {
                            diags.push(Diagnostic::warning(
                                codes::AUTO_CREATED_PARENT,
                                format!("machine `{c}` was not declared; created without stages"),
                                Some(path[0].span),
                            ));
                        }
                    }
                }
                model.source.machines.insert(p.clone(), *span);
                add_stages(&mut model, &p, stages, diags);
                if *folded {
                    model.machine_mut(&p).expect("inserted").folded = true;
                }
            }
            _ => {}
        }
    }

    for (d, span) in decls.iter().skip(1) {
        match d {
            Decl::Thing(name) => {
                if model.things.insert(name.text.clone()) {
                    model.source.things.insert(name.text.clone(), *span);
                } else {
                    diags.push(dup("thing", &name.text, name.span));
                }
            }
            Decl::Flow {
                thing,
                source,
                target,
            } => {
                let ok = check_ref(&model, source, diags) & check_ref(&model, target, diags);
                if !ok {
                    continue;
                }
                let f = Flow::new(thing.text.clone(), source.stage_ref(), target.stage_ref());
                if model.flows.insert(f.clone()) {
                    model.source.flows.insert(f, *span);
                } else {
                    diags.push(dup("flow", &f.to_string(), *span));
                }
            }
            Decl::Trigger { source, target } => {
                let ok = check_ref(&model, source, diags) & check_ref(&model, target, diags);
                if !ok {
                    continue;
                }
                let t = Trigger {
                    source: source.stage_ref(),
                    target: target.stage_ref(),
                };
                if model.triggers.insert(t.clone()) {
                    model.source.triggers.insert(t, *span);
                } else {
                    diags.push(dup("trigger", &t.to_string(), *span));
                }
            }
            Decl::Event {
                name,
                items,
                duration,
            } => {
                if model.events.contains_key(&name.text) {
                    diags.push(dup("event", &name.text, name.span));
                    continue;
                }
                let mut region = BTreeSet::new();
                let mut ok = true;
                for item in items {
                    match item {
                        ItemAst::Stage(r) => {
                            ok &= check_ref(&model, r, diags);
                            region.insert(RegionItem::Stage(r.stage_ref()));
                        }
                        ItemAst::Flow {
                            thing,
                            source,
                            target,
                        } => {
                            ok &= check_ref(&model, source, diags) & check_ref(&model, target, diags);
                            region.insert(RegionItem::Flow(FlowRef {
                                thing: thing.as_ref().map(|t| t.text.clone()),
                                source: source.stage_ref(),
                                target: target.stage_ref(),
                            }));
                        }
                    }
                }
                let duration = match duration {
                    Some((0, s)) => {
                        diags.push(Diagnostic::error(
                            codes::SYNTAX_ERROR,
                            "duration must be at least 1 tick",
                            Some(*s),
                        ));
                        ok = false;
                        1
                    }
                    Some((n, _)) => *n,
                    None => 1,
                };
                if ok {
                    model.source.events.insert(name.text.clone(), *span);
                    model.events.insert(
                        name.text.clone(),
                        Event {
                            name: name.text.clone(),
                            region,
                            duration,
                        },
                    );
                }
            }
            Decl::Chronology(edges) => {
                for (a, b) in edges {
                    let key = (a.text.clone(), b.text.clone());
                    if model.chronology.edges.insert(key.clone()) {
                        let span = SourceSpan::new(
                            a.span.line,
                            a.span.column,
                            b.span.column + b.span.length - a.span.column,
                        );
                        model.source.chronology.insert(key, span);
                    } else {
                        diags.push(dup(
                            "chronology edge",
                            &format!("{} -> {}", a.text, b.text),
                            a.span,
                        ));
                    }
                }
            }
            Decl::Model { .. } | Decl::Machine { .. } => {}
        }
    }
    model
}

fn join_path(path: &[Name]) -> String {
    path.iter()
        .map(|n| n.text.as_str())
        .collect::<Vec<_>>()
        .join(".")
}

fn add_stages(
    model: &mut Model,
    path: &MachinePath,
    stages: &[(StageKind, SourceSpan)],
    diags: &mut Vec<Diagnostic>,
) {
    let m = model.machine_mut(path).expect("machine exists");
    let mut seen = BTreeMap::new();
    for (k, span) in stages {
        if seen.insert(*k, *span).is_some() {
            diags.push(dup("stage", k.keyword(), *span));
        }
        m.stages.insert(*k);
    }
}

fn check_ref(model: &Model, r: &RefAst, diags: &mut Vec<Diagnostic>) -> bool {
    let s = r.stage_ref();
    match model.locate(&s) {
        Location::Visible | Location::Hidden(_) => true,
        Location::Missing => {
            let what = if model.machine(&s.machine).is_some() {
                format!("machine `{}` has no {} stage", display_path(&s.machine), s.kind)
            } else {
                format!("no machine `{}` is declared", s.machine)
            };
            diags.push(Diagnostic::error(
                codes::DANGLING_REFERENCE,
                format!("`{s}` does not resolve: {what}"),
                Some(r.span),
            ));
            false
        }
    }
}

fn display_path(p: &MachinePath) -> &str {
    if p.is_root() {
        "(root)"
    } else {
        p.as_str()
    }
}
