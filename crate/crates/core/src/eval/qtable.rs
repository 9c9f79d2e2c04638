//! Upper 5% quantiles of the studentized range distribution.

use super::EvalError;

pub const SUPPORTED_ALPHA: f64 = 0.05;

const DF: [f64; 18] = [
    2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 12.0, 15.0, 20.0, 24.0, 30.0, 36.0, 40.0, 60.0, 120.0,
];

/// Rows follow `DF` plus a final row for infinite df; columns are k = 2..=10.
const Q05: [[f64; 9]; 19] = [
    [6.0849, 8.3308, 9.7980, 10.8811, 11.7343, 12.4349, 13.0273, 13.5390, 13.9885],
    [4.5007, 5.9096, 6.8245, 7.5017, 8.0371, 8.4783, 8.8525, 9.1766, 9.4620],
    [3.9265, 5.0402, 5.7571, 6.2870, 6.7064, 7.0526, 7.3465, 7.6015, 7.8263],
    [3.6354, 4.6017, 5.2183, 5.6731, 6.0329, 6.3299, 6.5823, 6.8014, 6.9947],
    [3.4605, 4.3392, 4.8956, 5.3049, 5.6284, 5.8953, 6.1222, 6.3192, 6.4931],
    [3.3441, 4.1649, 4.6813, 5.0601, 5.3591, 5.6057, 5.8153, 5.9973, 6.1579],
    [3.2612, 4.0410, 4.5288, 4.8858, 5.1672, 5.3991, 5.5962, 5.7673, 5.9183],
    [3.1992, 3.9485, 4.4149, 4.7554, 5.0235, 5.2444, 5.4319, 5.5947, 5.7384],
    [3.1511, 3.8768, 4.3266, 4.6543, 4.9120, 5.1242, 5.3042, 5.4605, 5.5984],
    [3.0813, 3.7729, 4.1987, 4.5077, 4.7502, 4.9496, 5.1187, 5.2653, 5.3946],
    [3.0143, 3.6734, 4.0760, 4.3670, 4.5947, 4.7816, 4.9399, 5.0770, 5.1979],
    [2.9500, 3.5779, 3.9583, 4.2319, 4.4452, 4.6199, 4.7676, 4.8954, 5.0079],
    [2.9188, 3.5317, 3.9013, 4.1663, 4.3727, 4.5413, 4.6838, 4.8069, 4.9152],
    [2.8882, 3.4864, 3.8454, 4.1021, 4.3015, 4.4642, 4.6014, 4.7199, 4.8241],
    [2.8682, 3.4568, 3.8088, 4.0600, 4.2548, 4.4135, 4.5473, 4.6628, 4.7642],
    [2.8582, 3.4421, 3.7907, 4.0391, 4.2316, 4.3885, 4.5205, 4.6345, 4.7345],
    [2.8288, 3.3987, 3.7371, 3.9774, 4.1632, 4.3141, 4.4411, 4.5504, 4.6463],
    [2.8000, 3.3561, 3.6846, 3.9169, 4.0960, 4.2412, 4.3630, 4.4678, 4.5595],
    [2.7718, 3.3145, 3.6332, 3.8577, 4.0301, 4.1696, 4.2863, 4.3865, 4.4741],
];

/// `q(k, df)` at `alpha`. Between grid rows the quantile is interpolated
/// linearly in `log(df)`; beyond 120 linearly in `120/df` toward the
/// infinite-df row.
pub fn studentized_range_quantile(k: usize, df: usize, alpha: f64) -> Result<f64, EvalError> {
    if (alpha - SUPPORTED_ALPHA).abs() > 1e-12 {
        return Err(EvalError::UnsupportedAlpha(alpha));
    }
    if !(2..=10).contains(&k) {
        return Err(EvalError::UnsupportedGroupCount(k));
    }
    if df < 2 {
        return Err(EvalError::UnsupportedDegreesOfFreedom(df));
    }
    let col = k - 2;
    let v = df as f64;
    let last = DF.len() - 1;
    if v >= DF[last] {
        let t = DF[last] / v;
        let (q_inf, q_120) = (Q05[last + 1][col], Q05[last][col]);
        return Ok(q_inf + t * (q_120 - q_inf));
    }
    let hi = DF.iter().position(|&d| d >= v).expect("df below the last row");
    if DF[hi] == v {
        return Ok(Q05[hi][col]);
    }
    let lo = hi - 1;
    let t = (v.ln() - DF[lo].ln()) / (DF[hi].ln() - DF[lo].ln());
    Ok(Q05[lo][col] + t * (Q05[hi][col] - Q05[lo][col]))
}
