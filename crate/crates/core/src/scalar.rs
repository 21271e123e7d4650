use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type usable for probabilities and similarities.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
    /// Tolerance used when two linkage values are considered tied.
    fn tie_epsilon() -> Self {
        Self::epsilon() * Self::from_u32(64).unwrap()
    }

    fn from_count(n: u64) -> Self {
        Self::from_u64(n).unwrap()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
