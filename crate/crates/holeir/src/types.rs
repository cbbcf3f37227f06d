//! Value and signature types for the IR subset.

use std::fmt;

/// A first-class type: fixed-width integers, `void`, or the opaque hole type.
///
/// The hole type (`%hole.t`) marks values whose concrete type is not yet
/// known. It unifies with nothing except itself; the rewrite engine is the
/// only way a hole-typed value ever becomes concretely typed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Type {
    /// `iN`: two's complement integer, `1 <= N <= 128`.
    Int(u32),
    /// Only valid as a function return type.
    Void,
    /// The opaque `%hole.t` type.
    Hole,
}

impl Type {
    pub const MAX_INT_WIDTH: u32 = 128;

    /// Integer type of the given width. Panics if the width is outside
    /// `1..=128`; user-facing paths (the parser) validate widths first.
    pub fn int(width: u32) -> Type {
        assert!(
            (1..=Self::MAX_INT_WIDTH).contains(&width),
            "integer width out of range: {width}"
        );
        Type::Int(width)
    }

    pub fn is_int(&self) -> bool {
        matches!(self, Type::Int(_))
    }

    pub fn is_hole(&self) -> bool {
        matches!(self, Type::Hole)
    }

    /// Concrete means "not the hole type"; `void` counts as concrete.
    pub fn is_concrete(&self) -> bool {
        !self.is_hole()
    }

    pub fn int_width(&self) -> Option<u32> {
        match self {
            Type::Int(w) => Some(*w),
            _ => None,
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Int(w) => write!(f, "i{w}"),
            Type::Void => write!(f, "void"),
            Type::Hole => write!(f, "%hole.t"),
        }
    }
}

/// A function signature: return type plus ordered parameter types.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FnType {
    pub ret: Type,
    pub params: Vec<Type>,
}

impl FnType {
    pub fn new(ret: Type, params: Vec<Type>) -> FnType {
        FnType { ret, params }
    }
}

impl fmt::Display for FnType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (", self.ret)?;
        for (i, p) in self.params.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")")
    }
}

/// An integer constant: a bit pattern at a fixed width.
///
/// The stored bits are always masked to the width, so equality and hashing
/// see one canonical representation per value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntConst {
    width: u32,
    bits: u128,
}

impl IntConst {
    /// Bit mask covering `width` bits.
    pub fn mask(width: u32) -> u128 {
        if width >= 128 {
            u128::MAX
        } else {
            (1u128 << width) - 1
        }
    }

    pub fn new(width: u32, bits: u128) -> IntConst {
        assert!(
            (1..=Type::MAX_INT_WIDTH).contains(&width),
            "integer width out of range: {width}"
        );
        IntConst {
            width,
            bits: bits & Self::mask(width),
        }
    }

    /// Width-truncating two's complement conversion.
    pub fn from_i128(width: u32, value: i128) -> IntConst {
        IntConst::new(width, value as u128)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    /// The masked bit pattern (unsigned reading).
    pub fn bits(&self) -> u128 {
        self.bits
    }

    /// Two's complement (signed) reading of the bits.
    pub fn as_signed(&self) -> i128 {
        if self.width == 128 {
            self.bits as i128
        } else if self.bits >> (self.width - 1) & 1 == 1 {
            (self.bits | !Self::mask(self.width)) as i128
        } else {
            self.bits as i128
        }
    }

    pub fn ty(&self) -> Type {
        Type::Int(self.width)
    }

    /// Defensive check that the bit pattern fits the width. True by
    /// construction; the verifier still scans for it.
    pub fn fits(&self) -> bool {
        self.bits & !Self::mask(self.width) == 0
    }
}

impl fmt::Display for IntConst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // i1 prints as 0/1; wider constants print signed, matching the
        // canonical printer.
        if self.width == 1 {
            write!(f, "{}", self.bits)
        } else {
            write!(f, "{}", self.as_signed())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn const_masks_to_width() {
        let c = IntConst::new(8, 300);
        assert_eq!(c.bits(), 44);
        assert_eq!(c.as_signed(), 44);
    }

    #[test]
    fn negative_round_trip() {
        let c = IntConst::from_i128(8, -56);
        assert_eq!(c.bits(), 200);
        assert_eq!(c.as_signed(), -56);
        assert_eq!(c.to_string(), "-56");
    }

    #[test]
    fn width_one_prints_unsigned() {
        assert_eq!(IntConst::new(1, 1).to_string(), "1");
        assert_eq!(IntConst::from_i128(1, -1).to_string(), "1");
    }

    #[test]
    fn width_128_extremes() {
        let c = IntConst::from_i128(128, -1);
        assert_eq!(c.bits(), u128::MAX);
        assert_eq!(c.as_signed(), -1);
    }

    #[test]
    fn type_display() {
        assert_eq!(Type::int(32).to_string(), "i32");
        assert_eq!(Type::Void.to_string(), "void");
        assert_eq!(Type::Hole.to_string(), "%hole.t");
    }
}
