//! Runtime values and the C-like operator semantics shared by constant
//! folding and the engine.
//!
//! All integer arithmetic happens in a 64-bit two's-complement model. Mixing a
//! signed and an unsigned operand converts to unsigned, and any float operand
//! converts the operation to `f64`, as C's usual arithmetic conversions do.

use std::fmt::{self, Write as _};

use indexmap::IndexMap;
use thiserror::Error;

/// Scalar type of a declared variable or map output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScalarType {
    /// `int`, `short`, `long`. `sign_extend` is set only for an explicit
    /// `signed` modifier; plain `int(n)` fields read as non-negative values.
    Int {
        sign_extend: bool,
    },
    /// `unsigned ...` and `bit`.
    UInt,
    /// `char`; unsigned unless declared `signed char`.
    Char {
        signed: bool,
    },
    Float,
    Double,
}

impl ScalarType {
    pub fn is_float(self) -> bool {
        matches!(self, ScalarType::Float | ScalarType::Double)
    }

    pub fn is_integer(self) -> bool {
        !self.is_float()
    }

    /// Whether a parsed field of this type is sign-extended.
    pub fn reads_signed(self) -> bool {
        matches!(self, ScalarType::Int { sign_extend: true } | ScalarType::Char { signed: true })
    }

    /// Converts `v` to this type's runtime representation.
    pub fn coerce(self, v: &Value) -> Result<Value, OpError> {
        Ok(match self {
            ScalarType::Float | ScalarType::Double => Value::Float(v.as_f64()?),
            ScalarType::UInt | ScalarType::Char { signed: false } => Value::UInt(v.as_u64_wrapping()?),
            ScalarType::Int { .. } | ScalarType::Char { signed: true } => Value::Int(v.as_u64_wrapping()? as i64),
        })
    }

    pub fn default_value(self) -> Value {
        match self {
            ScalarType::Float | ScalarType::Double => Value::Float(0.0),
            ScalarType::UInt | ScalarType::Char { signed: false } => Value::UInt(0),
            _ => Value::Int(0),
        }
    }

    pub fn keyword(self) -> &'static str {
        match self {
            ScalarType::Int { sign_extend: true } => "signed int",
            ScalarType::Int { .. } => "int",
            ScalarType::UInt => "unsigned int",
            ScalarType::Char { signed: true } => "signed char",
            ScalarType::Char { .. } => "char",
            ScalarType::Float => "float",
            ScalarType::Double => "double",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OpError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("invalid operand: {0}")]
    InvalidOperand(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Shl,
    Shr,
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
    Ne,
    BitAnd,
    BitOr,
    BitXor,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        use BinOp::*;
        match self {
            Add => "+",
            Sub => "-",
            Mul => "*",
            Div => "/",
            Rem => "%",
            Shl => "<<",
            Shr => ">>",
            Lt => "<",
            Gt => ">",
            Le => "<=",
            Ge => ">=",
            Eq => "==",
            Ne => "!=",
            BitAnd => "&",
            BitOr => "|",
            BitXor => "^",
            And => "&&",
            Or => "||",
        }
    }

    /// C precedence level; higher binds tighter.
    pub fn precedence(self) -> u8 {
        use BinOp::*;
        match self {
            Or => 1,
            And => 2,
            BitOr => 3,
            BitXor => 4,
            BitAnd => 5,
            Eq | Ne => 6,
            Lt | Gt | Le | Ge => 7,
            Shl | Shr => 8,
            Add | Sub => 9,
            Mul | Div | Rem => 10,
        }
    }

    pub fn is_boolean(self) -> bool {
        use BinOp::*;
        matches!(self, Lt | Gt | Le | Ge | Eq | Ne | And | Or)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Plus,
    Not,
    BitNot,
}

impl UnOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnOp::Neg => "-",
            UnOp::Plus => "+",
            UnOp::Not => "!",
            UnOp::BitNot => "~",
        }
    }
}

/// A runtime value.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    UInt(u64),
    Float(f64),
    Array(ArrayValue),
    Object(Box<ObjectValue>),
}

impl Value {
    pub fn bool(b: bool) -> Value {
        Value::Int(b as i64)
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "int",
            Value::UInt(_) => "unsigned int",
            Value::Float(_) => "float",
            Value::Array(_) => "array",
            Value::Object(_) => "object",
        }
    }

    pub fn is_scalar(&self) -> bool {
        matches!(self, Value::Int(_) | Value::UInt(_) | Value::Float(_))
    }

    pub fn truthy(&self) -> Result<bool, OpError> {
        match self {
            Value::Int(v) => Ok(*v != 0),
            Value::UInt(v) => Ok(*v != 0),
            Value::Float(v) => Ok(*v != 0.0),
            other => Err(OpError::InvalidOperand(format!("{} used as a condition", other.kind_name()))),
        }
    }

    pub fn as_f64(&self) -> Result<f64, OpError> {
        match self {
            Value::Int(v) => Ok(*v as f64),
            Value::UInt(v) => Ok(*v as f64),
            Value::Float(v) => Ok(*v),
            other => Err(OpError::InvalidOperand(format!("{} is not a number", other.kind_name()))),
        }
    }

    /// Integer bits of a scalar; floats truncate toward zero.
    pub fn as_u64_wrapping(&self) -> Result<u64, OpError> {
        match self {
            Value::Int(v) => Ok(*v as u64),
            Value::UInt(v) => Ok(*v),
            Value::Float(v) => Ok(if *v < 0.0 { (*v as i64) as u64 } else { *v as u64 }),
            other => Err(OpError::InvalidOperand(format!("{} is not a number", other.kind_name()))),
        }
    }

    /// Exact integer value, if this is an integer scalar.
    pub fn as_i128(&self) -> Option<i128> {
        match self {
            Value::Int(v) => Some(*v as i128),
            Value::UInt(v) => Some(*v as i128),
            _ => None,
        }
    }

    /// Non-negative integer that fits `usize` (sizes, indices, widths).
    pub fn as_index(&self) -> Option<u64> {
        match self.as_i128()? {
            v if v >= 0 && v <= u64::MAX as i128 => Some(v as u64),
            _ => None,
        }
    }

    /// Converts to the representation family of `self` (used by assignment to
    /// keep a variable's declared type).
    pub fn convert_like(&self, v: &Value) -> Result<Value, OpError> {
        match self {
            Value::Int(_) => Ok(Value::Int(v.as_u64_wrapping()? as i64)),
            Value::UInt(_) => Ok(Value::UInt(v.as_u64_wrapping()?)),
            Value::Float(_) => Ok(Value::Float(v.as_f64()?)),
            _ => Ok(v.clone()),
        }
    }

    pub fn as_object(&self) -> Option<&ObjectValue> {
        match self {
            Value::Object(o) => Some(o),
            _ => None,
        }
    }

    pub fn as_array(&self) -> Option<&ArrayValue> {
        match self {
            Value::Array(a) => Some(a),
            _ => None,
        }
    }

    /// Numeric equality under the usual conversions; structural otherwise.
    pub fn loosely_equals(&self, other: &Value) -> bool {
        match (self, other) {
            (a, b) if a.is_scalar() && b.is_scalar() => matches!(binary(BinOp::Eq, a, b), Ok(Value::Int(1))),
            (Value::Array(a), Value::Array(b)) => {
                a.elems.len() == b.elems.len()
                    && a.elems.iter().zip(&b.elems).all(|(x, y)| match (x, y) {
                        (Some(x), Some(y)) => x.value.loosely_equals(&y.value),
                        (None, None) => true,
                        _ => false,
                    })
            }
            (Value::Object(a), Value::Object(b)) => {
                a.class == b.class
                    && a.fields.len() == b.fields.len()
                    && a.fields.iter().all(|(k, f)| match (f.last(), b.fields.get(k).and_then(Field::last)) {
                        (Some(x), Some(y)) => x.value.loosely_equals(&y.value),
                        (None, None) => true,
                        _ => false,
                    })
            }
            _ => false,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::UInt(v) => write!(f, "{v}"),
            Value::Float(v) => write!(f, "{v:?}"),
            Value::Array(a) => {
                if let Some(s) = a.as_text() {
                    return write!(f, "\"{s}\"");
                }
                f.write_char('[')?;
                for (i, e) in a.elems.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    match e {
                        Some(e) => write!(f, "{}", e.value)?,
                        None => f.write_char('_')?,
                    }
                }
                f.write_char(']')
            }
            Value::Object(o) => {
                f.write_char('{')?;
                for (i, (name, field)) in o.fields.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    match field.last() {
                        Some(inst) => write!(f, "{name}: {}", inst.value)?,
                        None => write!(f, "{name}: _")?,
                    }
                }
                f.write_char('}')
            }
        }
    }
}

enum Promoted {
    I(i64),
    U(u64),
    F(f64),
}

fn promote(a: &Value, b: &Value) -> Result<(Promoted, Promoted), OpError> {
    use Value::*;
    Ok(match (a, b) {
        (Float(_), _) | (_, Float(_)) => (Promoted::F(a.as_f64()?), Promoted::F(b.as_f64()?)),
        (UInt(_), _) | (_, UInt(_)) => (Promoted::U(a.as_u64_wrapping()?), Promoted::U(b.as_u64_wrapping()?)),
        (Int(x), Int(y)) => (Promoted::I(*x), Promoted::I(*y)),
        _ => return Err(OpError::InvalidOperand(format!("{} and {} are not numbers", a.kind_name(), b.kind_name()))),
    })
}

/// Evaluates a binary operator. `&&` and `||` here are the non-short-circuit
/// forms; callers wanting C semantics evaluate the right side lazily.
pub fn binary(op: BinOp, a: &Value, b: &Value) -> Result<Value, OpError> {
    use BinOp::*;
    match op {
        And => return Ok(Value::bool(a.truthy()? && b.truthy()?)),
        Or => return Ok(Value::bool(a.truthy()? || b.truthy()?)),
        Shl | Shr => return shift(op, a, b),
        _ => {}
    }
    let (x, y) = promote(a, b)?;
    match (x, y) {
        (Promoted::I(x), Promoted::I(y)) => Ok(match op {
            Add => Value::Int(x.wrapping_add(y)),
            Sub => Value::Int(x.wrapping_sub(y)),
            Mul => Value::Int(x.wrapping_mul(y)),
            Div if y == 0 => return Err(OpError::DivisionByZero),
            Div => Value::Int(x.wrapping_div(y)),
            Rem if y == 0 => return Err(OpError::DivisionByZero),
            Rem => Value::Int(x.wrapping_rem(y)),
            Lt => Value::bool(x < y),
            Gt => Value::bool(x > y),
            Le => Value::bool(x <= y),
            Ge => Value::bool(x >= y),
            Eq => Value::bool(x == y),
            Ne => Value::bool(x != y),
            BitAnd => Value::Int(x & y),
            BitOr => Value::Int(x | y),
            BitXor => Value::Int(x ^ y),
            And | Or | Shl | Shr => unreachable!(),
        }),
        (Promoted::U(x), Promoted::U(y)) => Ok(match op {
            Add => Value::UInt(x.wrapping_add(y)),
            Sub => Value::UInt(x.wrapping_sub(y)),
            Mul => Value::UInt(x.wrapping_mul(y)),
            Div if y == 0 => return Err(OpError::DivisionByZero),
            Div => Value::UInt(x / y),
            Rem if y == 0 => return Err(OpError::DivisionByZero),
            Rem => Value::UInt(x % y),
            Lt => Value::bool(x < y),
            Gt => Value::bool(x > y),
            Le => Value::bool(x <= y),
            Ge => Value::bool(x >= y),
            Eq => Value::bool(x == y),
            Ne => Value::bool(x != y),
            BitAnd => Value::UInt(x & y),
            BitOr => Value::UInt(x | y),
            BitXor => Value::UInt(x ^ y),
            And | Or | Shl | Shr => unreachable!(),
        }),
        (Promoted::F(x), Promoted::F(y)) => Ok(match op {
            Add => Value::Float(x + y),
            Sub => Value::Float(x - y),
            Mul => Value::Float(x * y),
            Div => Value::Float(x / y),
            Rem => Value::Float(x % y),
            Lt => Value::bool(x < y),
            Gt => Value::bool(x > y),
            Le => Value::bool(x <= y),
            Ge => Value::bool(x >= y),
            Eq => Value::bool(x == y),
            Ne => Value::bool(x != y),
            BitAnd | BitOr | BitXor => return Err(OpError::InvalidOperand(format!("'{}' on a float", op.symbol()))),
            And | Or | Shl | Shr => unreachable!(),
        }),
        _ => unreachable!("promote yields matching kinds"),
    }
}

fn shift(op: BinOp, a: &Value, b: &Value) -> Result<Value, OpError> {
    let count = match b {
        Value::Int(v) if *v < 0 => return Err(OpError::InvalidOperand(format!("negative shift count {v}"))),
        Value::Int(_) | Value::UInt(_) => b.as_u64_wrapping()?,
        _ => return Err(OpError::InvalidOperand("shift count is not an integer".into())),
    };
    match (op, a) {
        (BinOp::Shl, Value::Int(x)) => Ok(Value::Int(if count >= 64 { 0 } else { x.wrapping_shl(count as u32) })),
        (BinOp::Shl, Value::UInt(x)) => Ok(Value::UInt(if count >= 64 { 0 } else { x << count })),
        (BinOp::Shr, Value::Int(x)) => Ok(Value::Int(if count >= 64 { x >> 63 } else { x >> count })),
        (BinOp::Shr, Value::UInt(x)) => Ok(Value::UInt(if count >= 64 { 0 } else { x >> count })),
        _ => Err(OpError::InvalidOperand(format!("'{}' on a {}", op.symbol(), a.kind_name()))),
    }
}

pub fn unary(op: UnOp, v: &Value) -> Result<Value, OpError> {
    match (op, v) {
        (UnOp::Plus, x) if x.is_scalar() => Ok(x.clone()),
        (UnOp::Neg, Value::Int(x)) => Ok(Value::Int(x.wrapping_neg())),
        (UnOp::Neg, Value::UInt(x)) => Ok(Value::UInt(x.wrapping_neg())),
        (UnOp::Neg, Value::Float(x)) => Ok(Value::Float(-x)),
        (UnOp::Not, x) => Ok(Value::bool(!x.truthy()?)),
        (UnOp::BitNot, Value::Int(x)) => Ok(Value::Int(!x)),
        (UnOp::BitNot, Value::UInt(x)) => Ok(Value::UInt(!x)),
        (op, x) => Err(OpError::InvalidOperand(format!("'{}' on a {}", op.symbol(), x.kind_name()))),
    }
}

/// One array slot: the value plus the bits its last parse used.
#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub value: Value,
    pub len: u64,
}

/// An array value. Slots are `None` until populated; `sparse` marks arrays
/// built from partial (`[[i]]`) declarations.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ArrayValue {
    pub elems: Vec<Option<Element>>,
    pub sparse: bool,
    pub char_elems: bool,
}

impl ArrayValue {
    pub fn dense(values: impl IntoIterator<Item = Value>) -> Self {
        ArrayValue {
            elems: values.into_iter().map(|value| Some(Element { value, len: 0 })).collect(),
            sparse: false,
            char_elems: false,
        }
    }

    pub fn get(&self, i: usize) -> Option<&Element> {
        self.elems.get(i).and_then(|e| e.as_ref())
    }

    pub fn get_mut(&mut self, i: usize) -> Option<&mut Element> {
        self.elems.get_mut(i).and_then(|e| e.as_mut())
    }

    /// Stores `elem` at `i`, growing the array as needed.
    pub fn set(&mut self, i: usize, elem: Element) {
        if self.elems.len() <= i {
            self.elems.resize(i + 1, None);
        }
        self.elems[i] = Some(elem);
    }

    pub fn total_len(&self) -> u64 {
        self.elems.iter().flatten().map(|e| e.len).sum()
    }

    /// Printable text if this is a fully populated char array.
    pub fn as_text(&self) -> Option<String> {
        if !self.char_elems || self.sparse {
            return None;
        }
        let mut s = String::new();
        for e in &self.elems {
            let c = e.as_ref()?.value.as_index()?;
            let c = u8::try_from(c).ok()?;
            if !(0x20..0x7f).contains(&c) || c == b'"' || c == b'\\' {
                return None;
            }
            s.push(c as char);
        }
        Some(s)
    }
}

/// One execution of a declaration.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub value: Value,
    /// Bit offset where the value starts (after any alignment).
    pub offset: u64,
    /// Parse length in bits, excluding alignment. For look-ahead fields this is
    /// the peeked width even though nothing was consumed.
    pub len: u64,
    /// Bits actually consumed from or written to the stream, excluding
    /// alignment.
    pub consumed: u64,
}

/// A class member. Parsable members may hold several instances when their
/// declaration runs more than once (loops, redeclarations).
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub parsable: bool,
    pub read_only: bool,
    pub instances: Vec<Instance>,
}

impl Field {
    pub fn last(&self) -> Option<&Instance> {
        self.instances.last()
    }

    pub fn last_mut(&mut self) -> Option<&mut Instance> {
        self.instances.last_mut()
    }
}

/// A parsed (or to-be-generated) class instance.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObjectValue {
    pub class: String,
    pub fields: IndexMap<String, Field>,
    /// Bit offset of the first bit belonging to the object.
    pub start: u64,
    /// Total bits, including alignment done inside the object.
    pub bits: u64,
    /// Alignment bits skipped or padded directly inside this object.
    pub align_bits: u64,
}

impl ObjectValue {
    pub fn new(class: impl Into<String>) -> Self {
        ObjectValue { class: class.into(), ..Default::default() }
    }

    /// Last instance value of a member.
    pub fn get(&self, name: &str) -> Option<&Value> {
        self.fields.get(name).and_then(Field::last).map(|i| &i.value)
    }

    /// Convenience accessor for integer members.
    pub fn get_i128(&self, name: &str) -> Option<i128> {
        self.get(name).and_then(Value::as_i128)
    }

    pub fn set_member(&mut self, name: &str, value: Value, parsable: bool, read_only: bool) {
        let inst = Instance { value, offset: 0, len: 0, consumed: 0 };
        match self.fields.get_mut(name) {
            Some(f) if !f.parsable => f.instances = vec![inst],
            Some(f) => f.instances.push(inst),
            None => {
                self.fields.insert(name.to_string(), Field { parsable, read_only, instances: vec![inst] });
            }
        }
    }

    /// Σ consumed bits over all instances plus internal alignment, which must
    /// equal `bits` for every object in the tree.
    pub fn accounted_bits(&self) -> u64 {
        self.fields.values().flat_map(|f| &f.instances).map(|i| i.consumed).sum::<u64>() + self.align_bits
    }

    /// Checks the bit accounting invariant recursively.
    pub fn accounting_holds(&self) -> bool {
        if self.accounted_bits() != self.bits {
            return false;
        }
        self.fields.values().flat_map(|f| &f.instances).all(|i| value_accounting_holds(&i.value))
    }
}

fn value_accounting_holds(v: &Value) -> bool {
    match v {
        Value::Object(o) => o.accounting_holds(),
        Value::Array(a) => a.elems.iter().flatten().all(|e| value_accounting_holds(&e.value)),
        _ => true,
    }
}

/// Hashable identity of a value, used to index map entries for encoding.
/// Integers compare by numeric value regardless of signedness.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ValueKey {
    Int(i128),
    Float(u64),
    List(Vec<ValueKey>),
}

impl ValueKey {
    pub fn of(v: &Value) -> Option<ValueKey> {
        Some(match v {
            Value::Int(x) => ValueKey::Int(*x as i128),
            Value::UInt(x) => ValueKey::Int(*x as i128),
            Value::Float(x) => ValueKey::Float(x.to_bits()),
            Value::Array(a) => ValueKey::List(
                a.elems.iter().map(|e| e.as_ref().and_then(|e| ValueKey::of(&e.value))).collect::<Option<_>>()?,
            ),
            Value::Object(o) => ValueKey::List(
                o.fields.values().map(|f| f.last().and_then(|i| ValueKey::of(&i.value))).collect::<Option<_>>()?,
            ),
        })
    }
}
