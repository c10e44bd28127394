//! Conversions between the logarithmic units used in configuration files and
//! the linear quantities used everywhere inside the library.

/// dBm to milliwatts.
pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// Decibels to a linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn m_to_km(m: f64) -> f64 {
    m / 1000.0
}

pub fn km_to_m(km: f64) -> f64 {
    km * 1000.0
}

/// `n` points log-spaced between `from` and `to` inclusive.
pub fn log_space(from: f64, to: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![from],
        _ => {
            let (a, b) = (from.ln(), to.ln());
            let step = (b - a) / (n - 1) as f64;
            (0..n)
                .map(|i| {
                    if i == 0 {
                        from
                    } else if i == n - 1 {
                        to
                    } else {
                        (a + step * i as f64).exp()
                    }
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_conversions() {
        assert!((dbm_to_mw(0.0) - 1.0).abs() < 1e-15);
        assert!((dbm_to_mw(30.0) - 1000.0).abs() < 1e-9);
        assert!((db_to_linear(-10.0) - 0.1).abs() < 1e-15);
        assert!((mw_to_dbm(dbm_to_mw(24.0)) - 24.0).abs() < 1e-12);
        assert!((linear_to_db(db_to_linear(-95.0)) + 95.0).abs() < 1e-12);
        assert_eq!(m_to_km(8.5), 0.0085);
        assert_eq!(km_to_m(0.0085), 8.5);
    }

    #[test]
    fn log_space_endpoints() {
        let g = log_space(0.1, 1e6, 29);
        assert_eq!(g.len(), 29);
        assert_eq!(g[0], 0.1);
        assert_eq!(g[28], 1e6);
        assert!((g[4] - 1.0).abs() < 1e-12);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }
}
