//! Definition language for sensors, features, events and object formulas.
//!
//! ```text
//! sensor radar
//! feature v from radar
//! event a1_v on v: [0, 10)
//! event a2_v on v: [15, 35)
//! object o1 := a1_v or not a2_v
//! ```
//!
//! Grammar (one statement per declaration, `#` starts a comment):
//!
//! ```text
//! file    := stmt*
//! stmt    := sensor | feature | event | object
//! sensor  := "sensor" IDENT
//! feature := "feature" IDENT "from" IDENT
//! event   := "event" IDENT "on" IDENT ":" "[" NUM "," (NUM | "inf") ")"
//! object  := "object" IDENT ":=" expr
//! expr    := term ("or" term)*
//! term    := factor ("and" factor)*
//! factor  := "not" factor | "(" expr ")" | IDENT
//! ```
//!
//! `and` binds tighter than `or`, `not` tightest. An object body may name
//! previously declared objects; their formulas are inlined at parse time.

use std::fmt;
use std::sync::Arc;

use crate::error::Error;
use crate::model::{Event, EventSpace, Interval, ObjectFormula, ResolvedFormula};

/// Why parsing failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Lex,
    Syntax,
    Resolution,
    Duplicate,
}

/// A parse failure with the earliest failing source position (1-based).
/// Errors raised while resolving a hand-assembled [`DefinitionFile`] have no
/// source to point into and use position (0, 0).
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: {:?} error: {}",
            self.line, self.column, self.kind, self.message
        )
    }
}

impl std::error::Error for ParseError {}

/// One declared event: label, owning feature and its numeric range
/// (`hi` may be `f64::INFINITY`).
#[derive(Debug, Clone, PartialEq)]
pub struct EventDecl {
    pub id: String,
    pub feature_id: String,
    pub lo: f64,
    pub hi: f64,
}

/// Parsed form of a definition file. Object formulas are stored with object
/// references already inlined, so every atom names a declared event.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DefinitionFile {
    pub sensors: Vec<String>,
    /// (feature_id, sensor_id) pairs in declaration order.
    pub features: Vec<(String, String)>,
    pub events: Vec<EventDecl>,
    pub objects: Vec<(String, ObjectFormula)>,
}

/// Event spaces and object formulas bound to them, ready for fusion.
#[derive(Debug, Clone)]
pub struct ResolvedDefinitions {
    /// One space per declared feature, in declaration order.
    pub spaces: Vec<Arc<EventSpace>>,
    pub objects: Vec<(String, ResolvedFormula)>,
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    KwSensor,
    KwFeature,
    KwFrom,
    KwEvent,
    KwOn,
    KwObject,
    KwAnd,
    KwOr,
    KwNot,
    KwInf,
    Colon,
    ColonEq,
    Comma,
    LParen,
    RParen,
    LBracket,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Num(n) => format!("number `{n}`"),
            Tok::KwSensor => "`sensor`".into(),
            Tok::KwFeature => "`feature`".into(),
            Tok::KwFrom => "`from`".into(),
            Tok::KwEvent => "`event`".into(),
            Tok::KwOn => "`on`".into(),
            Tok::KwObject => "`object`".into(),
            Tok::KwAnd => "`and`".into(),
            Tok::KwOr => "`or`".into(),
            Tok::KwNot => "`not`".into(),
            Tok::KwInf => "`inf`".into(),
            Tok::Colon => "`:`".into(),
            Tok::ColonEq => "`:=`".into(),
            Tok::Comma => "`,`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(source: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut tokens = Vec::new();
    let mut line = 1usize;
    let mut column = 1usize;
    let chars: Vec<char> = source.chars().collect();
    let mut i = 0usize;
    while i < chars.len() {
        let c = chars[i];
        let (tline, tcol) = (line, column);
        let advance = |n: usize, i: &mut usize, column: &mut usize| {
            *i += n;
            *column += n;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                column = 1;
            }
            ' ' | '\t' | '\r' => advance(1, &mut i, &mut column),
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '(' => {
                tokens.push(Spanned { tok: Tok::LParen, line: tline, column: tcol });
                advance(1, &mut i, &mut column);
            }
            ')' => {
                tokens.push(Spanned { tok: Tok::RParen, line: tline, column: tcol });
                advance(1, &mut i, &mut column);
            }
            '[' => {
                tokens.push(Spanned { tok: Tok::LBracket, line: tline, column: tcol });
                advance(1, &mut i, &mut column);
            }
            ',' => {
                tokens.push(Spanned { tok: Tok::Comma, line: tline, column: tcol });
                advance(1, &mut i, &mut column);
            }
            ':' => {
                if i + 1 < chars.len() && chars[i + 1] == '=' {
                    tokens.push(Spanned { tok: Tok::ColonEq, line: tline, column: tcol });
                    advance(2, &mut i, &mut column);
                } else {
                    tokens.push(Spanned { tok: Tok::Colon, line: tline, column: tcol });
                    advance(1, &mut i, &mut column);
                }
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_ascii_alphanumeric() || chars[i] == '_')
                {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                column += i - start;
                let tok = match word.as_str() {
                    "sensor" => Tok::KwSensor,
                    "feature" => Tok::KwFeature,
                    "from" => Tok::KwFrom,
                    "event" => Tok::KwEvent,
                    "on" => Tok::KwOn,
                    "object" => Tok::KwObject,
                    "and" => Tok::KwAnd,
                    "or" => Tok::KwOr,
                    "not" => Tok::KwNot,
                    "inf" => Tok::KwInf,
                    _ => Tok::Ident(word),
                };
                tokens.push(Spanned { tok, line: tline, column: tcol });
            }
            _ if c.is_ascii_digit() || c == '-' => {
                let start = i;
                if chars[i] == '-' {
                    i += 1;
                }
                let digits_start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                if i == digits_start {
                    return Err(ParseError {
                        line: tline,
                        column: tcol,
                        kind: ParseErrorKind::Lex,
                        message: "`-` must start a number".into(),
                    });
                }
                if i < chars.len() && chars[i] == '.' {
                    i += 1;
                    let frac_start = i;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                    if i == frac_start {
                        return Err(ParseError {
                            line: tline,
                            column: tcol,
                            kind: ParseErrorKind::Lex,
                            message: "digits expected after decimal point".into(),
                        });
                    }
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    i += 1;
                    if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                        i += 1;
                    }
                    let exp_start = i;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                    if i == exp_start {
                        return Err(ParseError {
                            line: tline,
                            column: tcol,
                            kind: ParseErrorKind::Lex,
                            message: "digits expected in exponent".into(),
                        });
                    }
                }
                let text: String = chars[start..i].iter().collect();
                column += i - start;
                let value: f64 = text.parse().map_err(|_| ParseError {
                    line: tline,
                    column: tcol,
                    kind: ParseErrorKind::Lex,
                    message: format!("malformed number `{text}`"),
                })?;
                if !value.is_finite() {
                    return Err(ParseError {
                        line: tline,
                        column: tcol,
                        kind: ParseErrorKind::Lex,
                        message: format!("number `{text}` overflows"),
                    });
                }
                tokens.push(Spanned { tok: Tok::Num(value), line: tline, column: tcol });
            }
            _ => {
                return Err(ParseError {
                    line: tline,
                    column: tcol,
                    kind: ParseErrorKind::Lex,
                    message: format!("unexpected character `{c}`"),
                });
            }
        }
    }
    tokens.push(Spanned { tok: Tok::Eof, line, column });
    Ok(tokens)
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
    file: DefinitionFile,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Spanned {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, at: &Spanned, kind: ParseErrorKind, message: String) -> ParseError {
        ParseError {
            line: at.line,
            column: at.column,
            kind,
            message,
        }
    }

    fn syntax(&self, at: &Spanned, expected: &str) -> ParseError {
        self.err(
            at,
            ParseErrorKind::Syntax,
            format!("expected {expected}, found {}", at.tok.describe()),
        )
    }

    fn expect_ident(&mut self, what: &str) -> Result<(String, Spanned), ParseError> {
        let t = self.bump();
        match &t.tok {
            Tok::Ident(s) => Ok((s.clone(), t.clone())),
            _ => Err(self.syntax(&t, what)),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Spanned, ParseError> {
        let t = self.bump();
        if std::mem::discriminant(&t.tok) == std::mem::discriminant(&tok) {
            Ok(t)
        } else {
            Err(self.syntax(&t, what))
        }
    }

    fn parse_file(&mut self) -> Result<(), ParseError> {
        loop {
            let t = self.peek().clone();
            match t.tok {
                Tok::Eof => return Ok(()),
                Tok::KwSensor => self.parse_sensor()?,
                Tok::KwFeature => self.parse_feature()?,
                Tok::KwEvent => self.parse_event()?,
                Tok::KwObject => self.parse_object()?,
                _ => {
                    return Err(self.syntax(&t, "`sensor`, `feature`, `event` or `object`"))
                }
            }
        }
    }

    fn parse_sensor(&mut self) -> Result<(), ParseError> {
        self.bump();
        let (id, at) = self.expect_ident("a sensor name")?;
        if self.file.sensors.contains(&id) {
            return Err(self.err(
                &at,
                ParseErrorKind::Duplicate,
                format!("sensor `{id}` is already declared"),
            ));
        }
        self.file.sensors.push(id);
        Ok(())
    }

    fn parse_feature(&mut self) -> Result<(), ParseError> {
        self.bump();
        let (id, at) = self.expect_ident("a feature name")?;
        if self.file.features.iter().any(|(f, _)| *f == id) {
            return Err(self.err(
                &at,
                ParseErrorKind::Duplicate,
                format!("feature `{id}` is already declared"),
            ));
        }
        self.expect(Tok::KwFrom, "`from`")?;
        let (sensor, sat) = self.expect_ident("a sensor name")?;
        if !self.file.sensors.contains(&sensor) {
            return Err(self.err(
                &sat,
                ParseErrorKind::Resolution,
                format!("sensor `{sensor}` is not declared"),
            ));
        }
        self.file.features.push((id, sensor));
        Ok(())
    }

    fn parse_event(&mut self) -> Result<(), ParseError> {
        self.bump();
        let (id, at) = self.expect_ident("an event name")?;
        if self.file.events.iter().any(|e| e.id == id)
            || self.file.objects.iter().any(|(o, _)| *o == id)
        {
            return Err(self.err(
                &at,
                ParseErrorKind::Duplicate,
                format!("`{id}` is already declared"),
            ));
        }
        self.expect(Tok::KwOn, "`on`")?;
        let (feature, fat) = self.expect_ident("a feature name")?;
        if !self.file.features.iter().any(|(f, _)| *f == feature) {
            return Err(self.err(
                &fat,
                ParseErrorKind::Resolution,
                format!("feature `{feature}` is not declared"),
            ));
        }
        self.expect(Tok::Colon, "`:`")?;
        self.expect(Tok::LBracket, "`[`")?;
        let lo_tok = self.bump();
        let lo = match lo_tok.tok {
            Tok::Num(v) => v,
            _ => return Err(self.syntax(&lo_tok, "a number")),
        };
        self.expect(Tok::Comma, "`,`")?;
        let hi_tok = self.bump();
        let hi = match hi_tok.tok {
            Tok::Num(v) => v,
            Tok::KwInf => f64::INFINITY,
            _ => return Err(self.syntax(&hi_tok, "a number or `inf`")),
        };
        self.expect(Tok::RParen, "`)`")?;
        if hi <= lo {
            return Err(self.err(
                &hi_tok,
                ParseErrorKind::Syntax,
                format!("empty interval [{lo}, {hi})"),
            ));
        }
        self.file.events.push(EventDecl {
            id,
            feature_id: feature,
            lo,
            hi,
        });
        Ok(())
    }

    fn parse_object(&mut self) -> Result<(), ParseError> {
        self.bump();
        let (id, at) = self.expect_ident("an object name")?;
        if self.file.objects.iter().any(|(o, _)| *o == id)
            || self.file.events.iter().any(|e| e.id == id)
        {
            return Err(self.err(
                &at,
                ParseErrorKind::Duplicate,
                format!("`{id}` is already declared"),
            ));
        }
        self.expect(Tok::ColonEq, "`:=`")?;
        let formula = self.parse_expr()?;
        self.file.objects.push((id, formula));
        Ok(())
    }

    fn parse_expr(&mut self) -> Result<ObjectFormula, ParseError> {
        let mut terms = vec![self.parse_term()?];
        while self.peek().tok == Tok::KwOr {
            self.bump();
            terms.push(self.parse_term()?);
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            ObjectFormula::Or(terms)
        })
    }

    fn parse_term(&mut self) -> Result<ObjectFormula, ParseError> {
        let mut factors = vec![self.parse_factor()?];
        while self.peek().tok == Tok::KwAnd {
            self.bump();
            factors.push(self.parse_factor()?);
        }
        Ok(if factors.len() == 1 {
            factors.pop().unwrap()
        } else {
            ObjectFormula::And(factors)
        })
    }

    fn parse_factor(&mut self) -> Result<ObjectFormula, ParseError> {
        let t = self.bump();
        match &t.tok {
            Tok::KwNot => Ok(ObjectFormula::Not(Box::new(self.parse_factor()?))),
            Tok::LParen => {
                let inner = self.parse_expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if let Some((_, f)) = self.file.objects.iter().find(|(o, _)| o == name) {
                    // reference to an earlier object: inline its formula
                    Ok(f.clone())
                } else if self.file.events.iter().any(|e| e.id == *name) {
                    Ok(ObjectFormula::Atom(name.clone()))
                } else {
                    Err(self.err(
                        &t,
                        ParseErrorKind::Resolution,
                        format!("`{name}` names no declared event or object"),
                    ))
                }
            }
            _ => Err(self.syntax(&t, "`not`, `(` or an event name")),
        }
    }
}

/// Parses a definition file. On success the returned file is fully checked:
/// identifiers are unique, references resolve and object formulas are
/// inlined down to event atoms.
pub fn parse(source: &str) -> Result<DefinitionFile, ParseError> {
    let tokens = lex(source)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        file: DefinitionFile::default(),
    };
    parser.parse_file()?;
    // every feature must declare at least one event or it has no atoms
    for (feature, _) in &parser.file.features {
        if !parser.file.events.iter().any(|e| e.feature_id == *feature) {
            return Err(ParseError {
                line: 1,
                column: 1,
                kind: ParseErrorKind::Resolution,
                message: format!("feature `{feature}` declares no events"),
            });
        }
    }
    Ok(parser.file)
}

/// Warns about pairs of events on the same feature whose ranges intersect.
/// Overlaps are reported, not rejected: probabilities attach to atoms and
/// the ranges are descriptive.
pub fn validate_ranges(file: &DefinitionFile) -> Vec<String> {
    let mut warnings = Vec::new();
    for (feature, _) in &file.features {
        let evts: Vec<&EventDecl> = file
            .events
            .iter()
            .filter(|e| e.feature_id == *feature)
            .collect();
        for i in 0..evts.len() {
            for j in (i + 1)..evts.len() {
                let (a, b) = (evts[i], evts[j]);
                if a.lo < b.hi && b.lo < a.hi {
                    warnings.push(format!(
                        "events `{}` [{}, {}) and `{}` [{}, {}) on feature `{}` overlap",
                        a.id, a.lo, a.hi, b.id, b.lo, b.hi, feature
                    ));
                }
            }
        }
    }
    warnings
}

fn resolution_error(message: String) -> ParseError {
    ParseError {
        line: 0,
        column: 0,
        kind: ParseErrorKind::Resolution,
        message,
    }
}

/// Builds one event space per feature (events in declaration order) and
/// binds every object formula to (axis, atom) positions.
pub fn resolve(file: &DefinitionFile) -> Result<ResolvedDefinitions, ParseError> {
    let mut spaces = Vec::with_capacity(file.features.len());
    for (feature, sensor) in &file.features {
        let events: Vec<Event> = file
            .events
            .iter()
            .filter(|e| e.feature_id == *feature)
            .map(|e| {
                let range = if e.hi.is_infinite() {
                    Interval { lo: e.lo, hi: f64::INFINITY }
                } else {
                    Interval { lo: e.lo, hi: e.hi }
                };
                Event {
                    label: e.id.clone(),
                    range: Some(range),
                }
            })
            .collect();
        let space = EventSpace::new(feature.clone(), sensor.clone(), events)
            .map_err(|e| resolution_error(e.to_string()))?;
        spaces.push(Arc::new(space));
    }
    for e in &file.events {
        if !file.features.iter().any(|(f, _)| f == &e.feature_id) {
            return Err(resolution_error(format!(
                "event `{}` references undeclared feature `{}`",
                e.id, e.feature_id
            )));
        }
    }
    let mut objects = Vec::with_capacity(file.objects.len());
    for (label, formula) in &file.objects {
        let resolved = formula.resolve(&spaces).map_err(|e| match e {
            Error::UnresolvedAtom(msg) => resolution_error(msg),
            other => resolution_error(other.to_string()),
        })?;
        objects.push((label.clone(), resolved));
    }
    Ok(ResolvedDefinitions { spaces, objects })
}

// ---------------------------------------------------------------------------
// Pretty printer
// ---------------------------------------------------------------------------

fn fmt_num(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_string()
    } else {
        format!("{v}")
    }
}

fn prec(f: &ObjectFormula) -> u8 {
    match f {
        ObjectFormula::Or(_) => 1,
        ObjectFormula::And(_) => 2,
        ObjectFormula::Not(_) => 3,
        ObjectFormula::Atom(_) => 4,
    }
}

fn fmt_formula(f: &ObjectFormula, parent: u8, out: &mut String) {
    let wrap = prec(f) <= parent;
    if wrap {
        out.push('(');
    }
    match f {
        ObjectFormula::Atom(label) => out.push_str(label),
        ObjectFormula::And(children) => {
            for (i, c) in children.iter().enumerate() {
                if i > 0 {
                    out.push_str(" and ");
                }
                fmt_formula(c, 2, out);
            }
        }
        ObjectFormula::Or(children) => {
            for (i, c) in children.iter().enumerate() {
                if i > 0 {
                    out.push_str(" or ");
                }
                fmt_formula(c, 1, out);
            }
        }
        ObjectFormula::Not(child) => {
            out.push_str("not ");
            // `not` is a prefix factor: another `not` or an atom may follow
            // bare, anything looser needs parentheses
            fmt_formula(child, 2, out);
        }
    }
    if wrap {
        out.push(')');
    }
}

impl DefinitionFile {
    /// Renders the file back to canonical source text that re-parses to a
    /// structurally identical file.
    pub fn to_source(&self) -> String {
        let mut out = String::new();
        for s in &self.sensors {
            out.push_str(&format!("sensor {s}\n"));
        }
        for (f, s) in &self.features {
            out.push_str(&format!("feature {f} from {s}\n"));
        }
        for e in &self.events {
            out.push_str(&format!(
                "event {} on {}: [{}, {})\n",
                e.id,
                e.feature_id,
                fmt_num(e.lo),
                fmt_num(e.hi)
            ));
        }
        for (o, f) in &self.objects {
            let mut body = String::new();
            fmt_formula(f, 0, &mut body);
            out.push_str(&format!("object {o} := {body}\n"));
        }
        out
    }
}
