use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::AddAssign;

/// Element type of graph tensors.
///
/// Training runs on `f32`; the finite-difference suite instantiates the same
/// code paths with `f64` so check tolerances stay tight.
pub trait Real:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + AddAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    const DTYPE: &'static str;

    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in element type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("element convertible to f64")
    }

    fn to_le_bytes_vec(self) -> Vec<u8>;
    fn from_le_slice(bytes: &[u8]) -> Self;

    /// Width of one element in bytes, for checkpoint layout.
    const BYTE_WIDTH: usize;
}

impl Real for f32 {
    const DTYPE: &'static str = "f32";
    const BYTE_WIDTH: usize = 4;

    fn to_le_bytes_vec(self) -> Vec<u8> {
        self.to_le_bytes().to_vec()
    }

    fn from_le_slice(bytes: &[u8]) -> Self {
        f32::from_le_bytes(bytes.try_into().expect("4-byte f32"))
    }
}

impl Real for f64 {
    const DTYPE: &'static str = "f64";
    const BYTE_WIDTH: usize = 8;

    fn to_le_bytes_vec(self) -> Vec<u8> {
        self.to_le_bytes().to_vec()
    }

    fn from_le_slice(bytes: &[u8]) -> Self {
        f64::from_le_bytes(bytes.try_into().expect("8-byte f64"))
    }
}
