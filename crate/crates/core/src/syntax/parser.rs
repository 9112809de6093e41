use crate::logic::{IlFormula, Term};

use super::ast::*;
use super::lexer::{tokenize, Tok};
use super::SyntaxError;

const KEYWORDS: &[&str] = &[
    "component", "ports", "states", "init", "clause", "exists", "forall", "when", "broadcast", "property", "true",
    "false", "succ", "zero", "max",
];

pub(crate) struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

impl Parser {
    pub(crate) fn new(src: &str) -> Result<Parser, SyntaxError> {
        Ok(Parser {
            toks: tokenize(src)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T, SyntaxError> {
        Err(SyntaxError::new(self.span(), msg))
    }

    fn unexpected<T>(&self, wanted: &str) -> Result<T, SyntaxError> {
        self.error(format!("expected {wanted}, found {}", self.peek().describe()))
    }

    fn expect(&mut self, tok: Tok) -> Result<(), SyntaxError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            let wanted = tok.describe();
            self.unexpected(&wanted)
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.is_keyword(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), SyntaxError> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            self.unexpected(&format!("`{kw}`"))
        }
    }

    fn ident(&mut self) -> Result<String, SyntaxError> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            Tok::Ident(s) => self.error(format!("`{s}` is a reserved keyword")),
            _ => self.unexpected("an identifier"),
        }
    }

    fn ident_list(&mut self) -> Result<Vec<String>, SyntaxError> {
        let mut out = vec![self.ident()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            out.push(self.ident()?);
        }
        Ok(out)
    }

    pub(crate) fn system(&mut self) -> Result<SystemSpec, SyntaxError> {
        let mut spec = SystemSpec::default();
        if *self.peek() == Tok::Eof {
            return self.error("empty system description");
        }
        while *self.peek() != Tok::Eof {
            if self.is_keyword("component") {
                spec.component_types.push(self.component()?);
            } else if self.is_keyword("clause") {
                spec.clauses.push(self.clause()?);
            } else if self.is_keyword("property") {
                spec.properties.push(self.property()?);
            } else {
                return self.unexpected("`component`, `clause` or `property`");
            }
        }
        Ok(spec)
    }

    pub(crate) fn properties(&mut self) -> Result<Vec<PropertyDecl>, SyntaxError> {
        let mut out = Vec::new();
        while *self.peek() != Tok::Eof {
            out.push(self.property()?);
        }
        if out.is_empty() {
            return self.error("no property declarations");
        }
        Ok(out)
    }

    fn component(&mut self) -> Result<ComponentTypeDecl, SyntaxError> {
        let span = self.span();
        self.expect_keyword("component")?;
        let name = self.ident()?;
        self.expect(Tok::LBrace)?;
        let (mut ports, mut states, mut initial, mut transitions) = (Vec::new(), Vec::new(), None, Vec::new());
        while *self.peek() != Tok::RBrace {
            if self.eat_keyword("ports") {
                ports.extend(self.ident_list()?);
            } else if self.eat_keyword("states") {
                states.extend(self.ident_list()?);
            } else if self.is_keyword("init") {
                let at = self.span();
                self.bump();
                if initial.is_some() {
                    return Err(SyntaxError::new(at, format!("component `{name}` declares `init` twice")));
                }
                initial = Some(self.ident()?);
            } else if matches!(self.peek(), Tok::Ident(_)) {
                let tspan = self.span();
                let source = self.ident()?;
                self.expect(Tok::Minus)?;
                let port = self.ident()?;
                self.expect(Tok::Arrow)?;
                let target = self.ident()?;
                transitions.push(TransitionDecl {
                    source,
                    port,
                    target,
                    span: tspan,
                });
            } else {
                return self.unexpected("`ports`, `states`, `init`, a transition or `}`");
            }
            self.expect(Tok::Semi)?;
        }
        self.expect(Tok::RBrace)?;
        let Some(initial) = initial else {
            return Err(SyntaxError::new(span, format!("component `{name}` has no `init` declaration")));
        };
        Ok(ComponentTypeDecl {
            name,
            ports,
            states,
            initial,
            transitions,
            span,
        })
    }

    fn clause(&mut self) -> Result<ClauseDecl, SyntaxError> {
        let span = self.span();
        self.expect_keyword("clause")?;
        self.expect_keyword("exists")?;
        let bound_vars = self.ident_list()?;
        let guard = if self.eat_keyword("when") {
            self.guard()?
        } else {
            IlFormula::True
        };
        self.expect(Tok::Colon)?;
        let mut rendezvous = vec![self.rendezvous_atom()?];
        while *self.peek() == Tok::Amp {
            self.bump();
            rendezvous.push(self.rendezvous_atom()?);
        }
        let mut broadcasts = Vec::new();
        while self.eat_keyword("broadcast") {
            let port = self.ident()?;
            self.expect(Tok::LParen)?;
            let var = self.ident()?;
            self.expect(Tok::RParen)?;
            let guard = if self.eat_keyword("when") {
                self.guard()?
            } else {
                IlFormula::True
            };
            broadcasts.push(Broadcast { var, guard, port });
        }
        self.expect(Tok::Semi)?;
        Ok(ClauseDecl {
            bound_vars,
            guard,
            rendezvous,
            broadcasts,
            span,
        })
    }

    fn rendezvous_atom(&mut self) -> Result<RendezvousAtom, SyntaxError> {
        let port = self.ident()?;
        self.expect(Tok::LParen)?;
        let arg = self.term()?;
        self.expect(Tok::RParen)?;
        Ok(RendezvousAtom { port, arg })
    }

    /// Conjunction of literals; parenthesized sub-conjunctions are spliced in.
    fn guard(&mut self) -> Result<IlFormula, SyntaxError> {
        let mut lits = Vec::new();
        self.guard_literals(&mut lits)?;
        Ok(match lits.len() {
            1 => lits.pop().unwrap(),
            _ => IlFormula::And(lits),
        })
    }

    fn guard_literals(&mut self, out: &mut Vec<IlFormula>) -> Result<(), SyntaxError> {
        loop {
            if *self.peek() == Tok::LParen {
                self.bump();
                self.guard_literals(out)?;
                self.expect(Tok::RParen)?;
            } else {
                out.push(self.guard_literal()?);
            }
            if *self.peek() != Tok::Amp {
                return Ok(());
            }
            self.bump();
        }
    }

    fn guard_literal(&mut self) -> Result<IlFormula, SyntaxError> {
        if *self.peek() == Tok::Bang {
            self.bump();
            let inner = self.guard_literal()?;
            return Ok(IlFormula::Not(Box::new(inner)));
        }
        if matches!(self.peek(), Tok::Ident(s) if s != "succ" && s != "zero" && s != "max" && s != "true" && s != "false")
            && *self.peek_at(1) == Tok::LParen
        {
            return self.error("port predicates are not allowed in guards");
        }
        self.atomic()
    }

    /// Atoms shared by guards and properties (everything but predicates).
    fn atomic(&mut self) -> Result<IlFormula, SyntaxError> {
        if self.eat_keyword("true") {
            return Ok(IlFormula::True);
        }
        if self.eat_keyword("false") {
            return Ok(IlFormula::False);
        }
        if self.is_keyword("zero") || self.is_keyword("max") {
            let is_zero = self.is_keyword("zero");
            self.bump();
            self.expect(Tok::LParen)?;
            let t = self.term()?;
            self.expect(Tok::RParen)?;
            return Ok(if is_zero { IlFormula::Zero(t) } else { IlFormula::Max(t) });
        }
        let lhs = self.term()?;
        let op = self.bump();
        let rhs = self.term()?;
        Ok(match op {
            Tok::Le => IlFormula::Le(lhs, rhs),
            Tok::Lt => IlFormula::Lt(lhs, rhs),
            Tok::Eq => IlFormula::Eq(lhs, rhs),
            Tok::Ne => IlFormula::Not(Box::new(IlFormula::Eq(lhs, rhs))),
            Tok::Ge => IlFormula::Le(rhs, lhs),
            Tok::Gt => IlFormula::Lt(rhs, lhs),
            other => {
                self.pos -= 2.min(self.pos);
                return Err(SyntaxError::new(
                    self.span(),
                    format!("expected a comparison operator, found {}", other.describe()),
                ));
            }
        })
    }

    fn term(&mut self) -> Result<Term, SyntaxError> {
        match self.peek().clone() {
            Tok::Ident(s) if s == "succ" || s == "succ0" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let inner = self.term()?;
                self.expect(Tok::RParen)?;
                Ok(Term::succ(inner))
            }
            Tok::Ident(s) if s.len() > 4 && s.starts_with("succ") && s[4..].chars().all(|c| c.is_ascii_digit()) => {
                self.error(format!(
                    "`{s}`: only one successor function is supported (ring and pipeline topologies)"
                ))
            }
            _ => Ok(Term::Var(self.ident()?)),
        }
    }

    fn property(&mut self) -> Result<PropertyDecl, SyntaxError> {
        let span = self.span();
        self.expect_keyword("property")?;
        let name = self.ident()?;
        self.expect(Tok::Colon)?;
        let formula = self.formula()?;
        self.expect(Tok::Semi)?;
        Ok(PropertyDecl { name, formula, span })
    }

    pub(crate) fn formula(&mut self) -> Result<IlFormula, SyntaxError> {
        let lhs = self.implication()?;
        if *self.peek() == Tok::DArrow {
            self.bump();
            let rhs = self.formula()?;
            return Ok(IlFormula::Iff(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn implication(&mut self) -> Result<IlFormula, SyntaxError> {
        let lhs = self.disjunction()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.implication()?;
            return Ok(IlFormula::Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<IlFormula, SyntaxError> {
        let mut parts = vec![self.conjunction()?];
        while *self.peek() == Tok::Bar {
            self.bump();
            parts.push(self.conjunction()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { IlFormula::Or(parts) })
    }

    fn conjunction(&mut self) -> Result<IlFormula, SyntaxError> {
        let mut parts = vec![self.unary()?];
        while *self.peek() == Tok::Amp {
            self.bump();
            parts.push(self.unary()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { IlFormula::And(parts) })
    }

    fn unary(&mut self) -> Result<IlFormula, SyntaxError> {
        match self.peek() {
            Tok::Bang => {
                self.bump();
                Ok(IlFormula::Not(Box::new(self.unary()?)))
            }
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Tok::Ident(s) if s == "exists" || s == "forall" => {
                let is_exists = s == "exists";
                self.bump();
                let vars = self.ident_list()?;
                self.expect(Tok::Dot)?;
                let body = self.formula()?;
                Ok(vars.into_iter().rev().fold(body, |acc, v| {
                    if is_exists {
                        IlFormula::Exists(v, Box::new(acc))
                    } else {
                        IlFormula::Forall(v, Box::new(acc))
                    }
                }))
            }
            Tok::Ident(s)
                if !KEYWORDS.contains(&s.as_str()) && !s.starts_with("succ") && *self.peek_at(1) == Tok::LParen =>
            {
                let p = self.ident()?;
                self.expect(Tok::LParen)?;
                let t = self.term()?;
                self.expect(Tok::RParen)?;
                Ok(IlFormula::Pred(p, t))
            }
            _ => self.atomic(),
        }
    }

    pub(crate) fn expect_eof(&mut self) -> Result<(), SyntaxError> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            self.unexpected("end of input")
        }
    }
}
