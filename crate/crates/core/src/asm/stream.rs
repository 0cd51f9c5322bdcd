//! The annotated item stream: encoded instructions with symbolic label
//! references, the substrate for macro selection before address resolution.

use std::collections::{BTreeMap, HashMap};

use super::encode::encode_literal;
use super::isa::{Instruction, Operand, Value};
use super::layout::{layout_and_resolve, Layout};
use super::parse::Program;
use super::{AsmError, MACRO_BASE};
use crate::compact::{substitute, CompactionResult, MacroSet, MAX_MACROS, MIN_MACRO_LEN};
use crate::symbol::{width_of, Symbol, Unit};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Item {
    /// A literal byte; `opcode` marks the first byte of an instruction.
    Byte { value: u8, opcode: bool },
    /// Two-byte absolute address of a label, or one byte when relaxed.
    Ref { label: String, relax: bool },
    /// Zero-width label definition.
    Def(String),
    /// One-byte reference to a macro table entry.
    Macro(u8),
}

impl Item {
    pub fn byte(value: u8) -> Item {
        Item::Byte {
            value,
            opcode: false,
        }
    }

    pub fn opcode(value: u8) -> Item {
        Item::Byte {
            value,
            opcode: true,
        }
    }

    pub fn label_ref(label: &str, relax: bool) -> Item {
        Item::Ref {
            label: label.to_string(),
            relax,
        }
    }
}

/// Item stream plus the macro bodies referenced by its `Macro` items.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AnnotatedStream {
    pub items: Vec<Item>,
    pub macros: Vec<Vec<Item>>,
}

fn value_items(v: &Value, out: &mut Vec<Item>) -> Result<(), AsmError> {
    match v {
        Value::Const(c) => out.extend(c.to_be_bytes().map(Item::byte)),
        Value::Label(l) => out.push(Item::label_ref(l, false)),
    }
    Ok(())
}

/// Opcode, header, operand extensions in order, then the branch target.
pub fn translate_mnemonic(insn: &Instruction) -> Result<Vec<Item>, AsmError> {
    let mut out = vec![Item::opcode(insn.mnemonic.opcode())];
    if let Some(h) = insn.header() {
        out.push(Item::byte(h));
    }
    for op in &insn.operands {
        match op {
            Operand::Work(a) => out.push(Item::byte(*a)),
            Operand::Literal(Value::Const(v)) | Operand::Offset(_, v) => {
                out.extend(encode_literal(*v)?.into_iter().map(Item::byte))
            }
            Operand::Literal(v) | Operand::Direct(v) => value_items(v, &mut out)?,
            _ => {}
        }
    }
    if let Some(t) = &insn.target {
        match &t.value {
            Value::Label(l) => out.push(Item::label_ref(l, t.relax)),
            Value::Const(c) => out.extend(c.to_be_bytes().map(Item::byte)),
        }
    }
    Ok(out)
}

impl AnnotatedStream {
    pub fn from_program(program: &Program) -> Result<Self, AsmError> {
        let mut items = Vec::new();
        for s in &program.stmts {
            if let Some(l) = &s.label {
                items.push(Item::Def(l.clone()));
            }
            if let Some(i) = &s.insn {
                i.validate(s.line)?;
                items.extend(translate_mnemonic(i)?);
            }
        }
        Ok(AnnotatedStream {
            items,
            macros: Vec::new(),
        })
    }
}

/// Compaction alphabet over stream items.
///
/// Label definitions, short-form branch offsets and existing macro bytes
/// become barriers; each barrier is unique, so it never matches anything.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tok {
    Op(u8),
    Byte(u8),
    Ref(u32),
    Barrier { id: u32, width: u8 },
}

impl Symbol for Tok {
    fn width(&self) -> usize {
        match self {
            Tok::Op(_) | Tok::Byte(_) => 1,
            Tok::Ref(_) => 2,
            Tok::Barrier { width, .. } => usize::from(*width),
        }
    }

    fn is_barrier(&self) -> bool {
        matches!(self, Tok::Barrier { .. })
    }

    /// Macros start on instruction boundaries only, so the emulator can
    /// recognise a macro opcode wherever it expects an opcode.
    fn can_start(&self) -> bool {
        matches!(self, Tok::Op(_))
    }
}

/// A stream viewed as tokens, one token per item.
#[derive(Clone, Debug)]
pub struct TokenView {
    pub toks: Vec<Tok>,
    labels: Vec<String>,
    ids: HashMap<String, u32>,
}

impl TokenView {
    /// Tokenise using the relaxation decisions of `layout` (a layout of
    /// this very stream).
    pub fn new(stream: &AnnotatedStream, layout: &Layout) -> Self {
        let mut view = TokenView {
            toks: Vec::with_capacity(stream.items.len()),
            labels: Vec::new(),
            ids: HashMap::new(),
        };
        for (k, item) in stream.items.iter().enumerate() {
            let barrier = |width| Tok::Barrier { id: k as u32, width };
            let tok = match item {
                Item::Byte { value, opcode: true } => Tok::Op(*value),
                Item::Byte { value, .. } => Tok::Byte(*value),
                Item::Ref { .. } if layout.relaxed[k] => barrier(1),
                Item::Ref { label, .. } => Tok::Ref(view.intern(label)),
                Item::Def(_) => barrier(0),
                Item::Macro(_) => barrier(1),
            };
            view.toks.push(tok);
        }
        view
    }

    fn intern(&mut self, label: &str) -> u32 {
        if let Some(&id) = self.ids.get(label) {
            return id;
        }
        let id = self.labels.len() as u32;
        self.labels.push(label.to_string());
        self.ids.insert(label.to_string(), id);
        id
    }

    pub fn item_of(&self, tok: &Tok) -> Item {
        match tok {
            Tok::Op(v) => Item::opcode(*v),
            Tok::Byte(v) => Item::byte(*v),
            Tok::Ref(id) => Item::label_ref(&self.labels[*id as usize], false),
            Tok::Barrier { .. } => unreachable!("barriers never enter a macro body"),
        }
    }

    /// Token form of a body; `None` if it mentions an unknown label or a
    /// non-macro-able item.
    pub fn tokens_of(&self, body: &[Item]) -> Option<Vec<Tok>> {
        body.iter()
            .map(|it| match it {
                Item::Byte { value, opcode: true } => Some(Tok::Op(*value)),
                Item::Byte { value, .. } => Some(Tok::Byte(*value)),
                Item::Ref { label, .. } => self.ids.get(label).map(|&id| Tok::Ref(id)),
                Item::Def(_) | Item::Macro(_) => None,
            })
            .collect()
    }

    /// Rebuild a stream from a residual over this view. `Unit::Macro(i)`
    /// becomes macro byte `first_code + i`.
    pub fn rebuild(
        &self,
        stream: &AnnotatedStream,
        result: &CompactionResult<Tok>,
    ) -> Result<AnnotatedStream, AsmError> {
        let base = stream.macros.len();
        if base + result.macros.len() > MAX_MACROS {
            return Err(AsmError::TooManyMacros(base + result.macros.len()));
        }
        let mut bodies = stream.macros.clone();
        for (i, body) in result.macros.bodies().iter().enumerate() {
            let items = body
                .iter()
                .map(|u| match u {
                    Unit::Sym(t) => Ok(self.item_of(t)),
                    Unit::Macro(_) => Err(AsmError::EmbeddedMacro(base + i)),
                })
                .collect::<Result<Vec<_>, _>>()?;
            bodies.push(items);
        }
        let mut items = Vec::with_capacity(result.residual.len());
        let mut k = 0;
        for u in &result.residual {
            match u {
                Unit::Sym(_) => {
                    items.push(stream.items[k].clone());
                    k += 1;
                }
                Unit::Macro(i) => {
                    let code = base + *i as usize;
                    items.push(Item::Macro(MACRO_BASE + code as u8));
                    k += bodies[code].len();
                }
            }
        }
        debug_assert_eq!(k, stream.items.len());
        Ok(AnnotatedStream { items, macros: bodies })
    }
}

/// A macro-able run of items and where it occurs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Candidate {
    pub body: Vec<Item>,
    /// Item indices of the leftmost-greedy non-overlapping occurrences.
    pub occurrences: Vec<usize>,
}

/// Every run of items that could become a macro body: it starts at an
/// instruction boundary (a label may precede it), spans 2..=`max_len`
/// bytes, and holds no label definition, short branch or macro byte.
pub fn extract_candidates(
    stream: &AnnotatedStream,
    max_len: usize,
    origin: u16,
) -> Result<Vec<Candidate>, AsmError> {
    let layout = layout_and_resolve(stream, origin)?;
    let view = TokenView::new(stream, &layout);
    let toks = &view.toks;
    let mut runs: BTreeMap<&[Tok], Vec<usize>> = BTreeMap::new();
    for i in 0..toks.len() {
        if !toks[i].can_start() {
            continue;
        }
        let mut width = 0;
        for j in i..toks.len() {
            if toks[j].is_barrier() {
                break;
            }
            width += toks[j].width();
            if width > max_len {
                break;
            }
            if width >= MIN_MACRO_LEN {
                runs.entry(&toks[i..=j]).or_default().push(i);
            }
        }
    }
    Ok(runs
        .into_iter()
        .map(|(body, starts)| {
            let mut occurrences = Vec::new();
            let mut free = 0;
            for s in starts {
                if s >= free {
                    occurrences.push(s);
                    free = s + body.len();
                }
            }
            Candidate {
                body: body.iter().map(|t| view.item_of(t)).collect(),
                occurrences,
            }
        })
        .collect())
}

/// Replace every leftmost-greedy occurrence of each body, in order, by a
/// macro byte; opcodes are assigned densely from `0x50` after any macros
/// the stream already has.
pub fn apply_macro_set(
    stream: &AnnotatedStream,
    bodies: &[Vec<Item>],
    origin: u16,
) -> Result<AnnotatedStream, AsmError> {
    if stream.macros.len() + bodies.len() > MAX_MACROS {
        return Err(AsmError::TooManyMacros(stream.macros.len() + bodies.len()));
    }
    for (i, b) in bodies.iter().enumerate() {
        if b.iter().any(|it| matches!(it, Item::Macro(_))) {
            return Err(AsmError::EmbeddedMacro(stream.macros.len() + i));
        }
        if b.iter().any(|it| matches!(it, Item::Def(_))) {
            return Err(AsmError::InvalidBody(stream.macros.len() + i));
        }
    }
    if bodies.is_empty() {
        return Ok(stream.clone());
    }
    let layout = layout_and_resolve(stream, origin)?;
    let view = TokenView::new(stream, &layout);
    let mut set = MacroSet::new();
    let mut residual: Vec<Unit<Tok>> = view.toks.iter().copied().map(Unit::Sym).collect();
    for (i, b) in bodies.iter().enumerate() {
        let toks = view.tokens_of(b).ok_or(AsmError::InvalidBody(stream.macros.len() + i))?;
        if width_of(&toks) < MIN_MACRO_LEN {
            return Err(AsmError::InvalidBody(stream.macros.len() + i));
        }
        let body: Vec<Unit<Tok>> = toks.into_iter().map(Unit::Sym).collect();
        residual = substitute(&residual, &body, Unit::Macro(i as u16));
        set.push(body).map_err(|_| AsmError::InvalidBody(stream.macros.len() + i))?;
    }
    view.rebuild(stream, &CompactionResult { macros: set, residual, objective: 0 })
}
