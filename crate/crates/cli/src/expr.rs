//! Numeric flag values that may refer to the instance size `n`, e.g.
//! `50`, `7e-7*n`, `n/100`, `0.5*n*1e-3`.

use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizeExpr {
    coefficient: f64,
    /// Power of `n` (0 for an absolute value).
    power: i32,
}

impl SizeExpr {
    pub fn absolute(x: f64) -> Self {
        SizeExpr {
            coefficient: x,
            power: 0,
        }
    }

    pub fn eval(&self, n: f64) -> f64 {
        self.coefficient * n.powi(self.power)
    }

    /// Rounded to the nearest integer, at least `min`.
    pub fn eval_count(&self, n: usize, min: usize) -> usize {
        (self.eval(n as f64).round().max(min as f64)) as usize
    }
}

impl FromStr for SizeExpr {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err("empty expression".into());
        }
        let mut out = SizeExpr::absolute(1.0);
        let mut divide = false;
        let mut rest = s;
        loop {
            let cut = rest.find(['*', '/']).unwrap_or(rest.len());
            let factor = rest[..cut].trim();
            match factor {
                "n" => out.power += if divide { -1 } else { 1 },
                _ => {
                    let x: f64 = factor
                        .parse()
                        .map_err(|_| format!("'{factor}' in '{s}' is neither a number nor n"))?;
                    if divide {
                        if x == 0.0 {
                            return Err(format!("division by zero in '{s}'"));
                        }
                        out.coefficient /= x;
                    } else {
                        out.coefficient *= x;
                    }
                }
            }
            if cut == rest.len() {
                break;
            }
            divide = rest.as_bytes()[cut] == b'/';
            rest = &rest[cut + 1..];
        }
        if !out.coefficient.is_finite() {
            return Err(format!("'{s}' is not finite"));
        }
        Ok(out)
    }
}

impl fmt::Display for SizeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.power {
            0 => write!(f, "{}", self.coefficient),
            1 => write!(f, "{}*n", self.coefficient),
            -1 => write!(f, "{}/n", self.coefficient),
            p => write!(f, "{}*n^{}", self.coefficient, p),
        }
    }
}
