use super::scalar::Scalar;
use super::series::{Order, Series};
use crate::error::{Error, Result};

/// `re + i im` with a shared truncation order.
#[derive(Clone, PartialEq, Debug)]
pub struct ComplexSeries<T> {
    pub re: Series<T>,
    pub im: Series<T>,
}

impl<T: Scalar> ComplexSeries<T> {
    pub fn new(re: Series<T>, im: Series<T>) -> Result<Self> {
        if re.trunc() != im.trunc() {
            return Err(Error::ShapeError("real and imaginary parts must share a truncation order".into()));
        }
        Ok(ComplexSeries { re, im })
    }

    pub fn real(re: Series<T>) -> Self {
        let im = Series::zero(re.trunc());
        ComplexSeries { re, im }
    }

    pub fn trunc(&self) -> usize {
        self.re.trunc()
    }

    pub fn add(&self, o: &Self) -> Self {
        ComplexSeries { re: &self.re + &o.re, im: &self.im + &o.im }
    }

    pub fn sub(&self, o: &Self) -> Self {
        ComplexSeries { re: &self.re - &o.re, im: &self.im - &o.im }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let re = &(&self.re * &o.re) - &(&self.im * &o.im);
        let im = &(&self.re * &o.im) + &(&self.im * &o.re);
        let t = re.trunc().min(im.trunc());
        ComplexSeries { re: re.truncate(t), im: im.truncate(t) }
    }

    pub fn conj(&self) -> Self {
        ComplexSeries { re: self.re.clone(), im: -&self.im }
    }

    pub fn order(&self) -> Order {
        match (self.re.order(), self.im.order()) {
            (Order::Finite(a), Order::Finite(b)) => Order::Finite(a.min(b)),
            (Order::Finite(a), _) | (_, Order::Finite(a)) => Order::Finite(a),
            (o, _) => o,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    /// True when some known coefficient has a nonzero imaginary part.
    pub fn is_nonreal(&self) -> bool {
        !self.im.is_zero()
    }
}
