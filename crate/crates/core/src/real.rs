use std::fmt::{Debug, Display};
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;
use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};

/// Storage type for matrix values, labels, weights and shared vectors.
///
/// Implemented for `f32` (the default value mode) and `f64`. Inner products
/// and objectives are always accumulated in `f64` regardless of `Self`.
pub trait Real:
    Copy
    + Default
    + Debug
    + Display
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + FromStr
{
    /// Cell type used when a vector is shared between threads.
    type Atomic: Send + Sync;

    /// Default bound on `||w - A beta||_inf` for this value width.
    const CONSISTENCY_TOL: f64;

    const ZERO: Self;

    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;

    fn new_atomic(v: Self) -> Self::Atomic;
    fn load(cell: &Self::Atomic) -> Self;
    fn store(cell: &Self::Atomic, v: Self);

    /// Adds `v` to the cell with a compare-and-swap loop; never loses a
    /// concurrent contribution.
    fn fetch_add(cell: &Self::Atomic, v: Self);
}

macro_rules! impl_real {
    ($t:ty, $atomic:ty, $tol:expr) => {
        impl Real for $t {
            type Atomic = $atomic;
            const CONSISTENCY_TOL: f64 = $tol;
            const ZERO: Self = 0.0;

            #[inline]
            fn from_f64(v: f64) -> Self {
                v as $t
            }

            #[inline]
            fn to_f64(self) -> f64 {
                self as f64
            }

            #[inline]
            fn new_atomic(v: Self) -> Self::Atomic {
                <$atomic>::new(v.to_bits())
            }

            #[inline]
            fn load(cell: &Self::Atomic) -> Self {
                <$t>::from_bits(cell.load(Ordering::Relaxed))
            }

            #[inline]
            fn store(cell: &Self::Atomic, v: Self) {
                cell.store(v.to_bits(), Ordering::Relaxed)
            }

            #[inline]
            fn fetch_add(cell: &Self::Atomic, v: Self) {
                let mut current = cell.load(Ordering::Relaxed);
                loop {
                    let next = (<$t>::from_bits(current) + v).to_bits();
                    match cell.compare_exchange_weak(current, next, Ordering::Relaxed, Ordering::Relaxed) {
                        Ok(_) => return,
                        Err(actual) => current = actual,
                    }
                }
            }
        }
    };
}

impl_real!(f32, AtomicU32, 1e-4);
impl_real!(f64, AtomicU64, 1e-10);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_add_accumulates_across_threads() {
        let cell = f64::new_atomic(0.0);
        std::thread::scope(|s| {
            for _ in 0..4 {
                s.spawn(|| {
                    for _ in 0..1000 {
                        f64::fetch_add(&cell, 0.5);
                    }
                });
            }
        });
        assert_eq!(f64::load(&cell), 2000.0);
    }

    #[test]
    fn f32_roundtrip_through_f64_is_exact() {
        let v = 0.1f32;
        assert_eq!(f32::from_f64(v.to_f64()), v);
    }
}
