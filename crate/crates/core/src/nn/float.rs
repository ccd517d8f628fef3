use std::fmt::{Debug, Display};
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use super::extended::Extended;

/// Floating-point width: `Fast` is f32, `Verify` is f64 (used for
/// finite-difference gradient checks).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FloatMode {
    #[default]
    Fast,
    Verify,
}

impl FloatMode {
    pub fn dtype(self) -> &'static str {
        match self {
            FloatMode::Fast => "f32",
            FloatMode::Verify => "f64",
        }
    }
}

/// Scalar type of tensors, tapes and optimizers.
pub trait Float:
    Copy
    + Default
    + Debug
    + Display
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + 'static
{
    const MODE: FloatMode;
    const BYTES: usize;

    /// `c ← alpha·a·b + beta·c` on strided row/column layouts.
    ///
    /// # Safety
    /// Pointers and strides must describe valid `m×k`, `k×n` and `m×n`
    /// matrices; `c` must not alias `a` or `b`.
    #[allow(clippy::too_many_arguments)]
    unsafe fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    );

    fn from_f64_lossy(x: f64) -> Self;
    fn as_f64(self) -> f64;

    fn zero() -> Self {
        Self::from_f64_lossy(0.0)
    }

    fn one() -> Self {
        Self::from_f64_lossy(1.0)
    }

    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn tanh(self) -> Self;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
    fn is_finite(self) -> bool;

    fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn write_le(self, out: &mut Vec<u8>);
    fn read_le(bytes: &[u8]) -> Self;
    fn bits(self) -> u64;
}

macro_rules! native_float {
    ($t:ty) => {
        fn from_f64_lossy(x: f64) -> Self {
            x as $t
        }

        fn as_f64(self) -> f64 {
            f64::from(self)
        }

        fn exp(self) -> Self {
            <$t>::exp(self)
        }

        fn ln(self) -> Self {
            <$t>::ln(self)
        }

        fn tanh(self) -> Self {
            <$t>::tanh(self)
        }

        fn sqrt(self) -> Self {
            <$t>::sqrt(self)
        }

        fn abs(self) -> Self {
            <$t>::abs(self)
        }

        fn is_finite(self) -> bool {
            <$t>::is_finite(self)
        }

        fn write_le(self, out: &mut Vec<u8>) {
            out.extend_from_slice(&self.to_le_bytes());
        }

        fn read_le(bytes: &[u8]) -> Self {
            <$t>::from_le_bytes(bytes.try_into().expect("little-endian width"))
        }
    };
}

impl Float for f32 {
    const MODE: FloatMode = FloatMode::Fast;
    const BYTES: usize = 4;

    unsafe fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: f32,
        a: *const f32,
        rsa: isize,
        csa: isize,
        b: *const f32,
        rsb: isize,
        csb: isize,
        beta: f32,
        c: *mut f32,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::sgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc)
    }

    native_float!(f32);

    fn bits(self) -> u64 {
        u64::from(self.to_bits())
    }
}

impl Float for f64 {
    const MODE: FloatMode = FloatMode::Verify;
    const BYTES: usize = 8;

    unsafe fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: f64,
        a: *const f64,
        rsa: isize,
        csa: isize,
        b: *const f64,
        rsb: isize,
        csb: isize,
        beta: f64,
        c: *mut f64,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::dgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc)
    }

    native_float!(f64);

    fn bits(self) -> u64 {
        self.to_bits()
    }
}

impl Float for Extended {
    /// Only ever used for verification.
    const MODE: FloatMode = FloatMode::Verify;
    const BYTES: usize = 16;

    unsafe fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    ) {
        for i in 0..m as isize {
            for j in 0..n as isize {
                let mut acc = Extended::ZERO;
                for l in 0..k as isize {
                    acc += *a.offset(i * rsa + l * csa) * *b.offset(l * rsb + j * csb);
                }
                let out = c.offset(i * rsc + j * csc);
                *out = if beta == Extended::ZERO {
                    alpha * acc
                } else {
                    alpha * acc + beta * *out
                };
            }
        }
    }

    fn from_f64_lossy(x: f64) -> Self {
        Extended::from(x)
    }

    fn as_f64(self) -> f64 {
        self.to_f64()
    }

    fn exp(self) -> Self {
        Extended::exp(self)
    }

    fn ln(self) -> Self {
        Extended::ln(self)
    }

    fn tanh(self) -> Self {
        Extended::tanh(self)
    }

    fn sqrt(self) -> Self {
        Extended::sqrt(self)
    }

    fn abs(self) -> Self {
        Extended::abs(self)
    }

    fn is_finite(self) -> bool {
        Extended::is_finite(self)
    }

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.hi().to_le_bytes());
        out.extend_from_slice(&self.lo().to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        Extended::new(f64::read_le(&bytes[..8]), f64::read_le(&bytes[8..16]))
    }

    fn bits(self) -> u64 {
        self.hi().to_bits() ^ self.lo().to_bits().rotate_left(32)
    }
}
