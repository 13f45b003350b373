use crate::error::{Error, Result};
use crate::survey::BrandId;

/// Average sales price assumed for the catch-all "Other" brand, in euros.
pub const DEFAULT_OTHER_ASP: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Purchase {
    /// Months after the survey.
    pub time: f64,
    pub brand: BrandId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RevenueSpec {
    /// Revenue per purchase, indexed by brand.
    pub asp: Vec<f64>,
    pub annual_discount: f64,
    pub horizon_months: f64,
}

impl RevenueSpec {
    /// Nokia 68, Apple 473, Samsung 178 and Other euros per purchase, 10%
    /// discount, five years.
    pub fn mobile_default() -> Self {
        Self {
            asp: vec![68.0, 473.0, 178.0, DEFAULT_OTHER_ASP],
            annual_discount: 0.10,
            horizon_months: 60.0,
        }
    }

    pub fn validate(&self, n_brands: usize) -> Result<()> {
        if self.asp.len() != n_brands {
            return Err(Error::Validation(format!(
                "{} ASP values for {n_brands} brands",
                self.asp.len()
            )));
        }
        if self.asp.iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
            return Err(Error::Validation(
                "ASP values must be finite and nonnegative".into(),
            ));
        }
        if !(self.annual_discount >= 0.0 && self.annual_discount.is_finite()) {
            return Err(Error::Validation(
                "discount rate must be nonnegative".into(),
            ));
        }
        if !(self.horizon_months >= 0.0 && self.horizon_months.is_finite()) {
            return Err(Error::Validation(
                "horizon must be finite and nonnegative".into(),
            ));
        }
        Ok(())
    }

    /// Present value of one purchase of `brand` at `time` months.
    pub fn discounted(&self, brand: BrandId, time: f64) -> f64 {
        self.asp[brand.index()] * (1.0 + self.annual_discount).powf(-time / 12.0)
    }
}

/// Net present value of a purchase history.
pub fn npv(history: &[Purchase], spec: &RevenueSpec) -> f64 {
    history
        .iter()
        .fold(0.0, |acc, p| acc + spec.discounted(p.brand, p.time))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(value: f64) -> RevenueSpec {
        RevenueSpec {
            asp: vec![value, 473.0],
            annual_discount: 0.10,
            horizon_months: 60.0,
        }
    }

    #[test]
    fn one_year_discount() {
        let h = [Purchase {
            time: 12.0,
            brand: BrandId(1),
        }];
        assert!((npv(&h, &flat(100.0)) - 90.909_090_909_090_9).abs() < 1e-9);
        assert_eq!(npv(&[], &flat(100.0)), 0.0);
    }

    #[test]
    fn two_apple_purchases() {
        let h = [
            Purchase {
                time: 12.0,
                brand: BrandId(2),
            },
            Purchase {
                time: 36.0,
                brand: BrandId(2),
            },
        ];
        let v = npv(&h, &flat(100.0));
        assert!((v - (473.0 / 1.1 + 473.0 / 1.1f64.powi(3))).abs() < 1e-9);
        assert!((v - 785.3).abs() < 0.1);
    }

    #[test]
    fn validation() {
        assert!(RevenueSpec::mobile_default().validate(4).is_ok());
        assert!(RevenueSpec::mobile_default().validate(3).is_err());
        let mut s = RevenueSpec::mobile_default();
        s.horizon_months = -1.0;
        assert!(s.validate(4).is_err());
    }
}
