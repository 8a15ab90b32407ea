//! Published reference designs and small helpers shared by the integration
//! tests.

#![allow(dead_code)]

use gmac_core::codedesign::DegreeDistribution;
use gmac_core::constellation::{named_pair, LevelOrder, NamedConstellation, UserConstellation};

/// One published design point: constellation, design SNR, decoding order,
/// and per-stage `[user 1, user 2]` distributions with their rates.
pub struct ReferenceDesign {
    pub name: &'static str,
    pub constellation: NamedConstellation,
    pub dsnr_db: f64,
    pub level_capacity: [f64; 2],
    pub sum_capacity: f64,
    pub sum_rate: f64,
    pub sum_rate_tol: f64,
    pub rates: [[f64; 2]; 2],
    pub dc: [[usize; 2]; 2],
    lambdas: [[&'static [(usize, f64)]; 2]; 2],
    opt_order: bool,
}

impl ReferenceDesign {
    pub fn pair(&self) -> (UserConstellation, UserConstellation) {
        named_pair(self.constellation)
    }

    pub fn order(&self) -> LevelOrder {
        if self.opt_order {
            LevelOrder::new(vec![1, 0], vec![0, 1]).unwrap()
        } else {
            LevelOrder::natural(2)
        }
    }

    /// Distribution of user index `k` at stage `s`, renormalized to sum 1.
    pub fn distribution(&self, stage: usize, k: usize) -> DegreeDistribution {
        DegreeDistribution::normalized(self.lambdas[stage][k], self.dc[stage][k]).unwrap()
    }
}

pub const MC10: ReferenceDesign = ReferenceDesign {
    name: "MC-10dB",
    constellation: NamedConstellation::Mc,
    dsnr_db: 10.0,
    level_capacity: [1.0368, 1.1106],
    sum_capacity: 2.1474,
    sum_rate: 2.0380,
    sum_rate_tol: 0.06,
    rates: [[0.4953, 0.4954], [0.5237, 0.5238]],
    dc: [[6, 6], [6, 6]],
    lambdas: [
        [
            &[(2, 0.3609), (3, 0.4311), (34, 0.1771), (35, 0.0309)],
            &[(2, 0.3609), (3, 0.4312), (34, 0.1749), (35, 0.0330)],
        ],
        [
            &[(2, 0.4377), (3, 0.3786), (37, 0.1077), (38, 0.0760)],
            &[(2, 0.4377), (3, 0.3787), (37, 0.0960), (38, 0.0876)],
        ],
    ],
    opt_order: false,
};

pub const MC18: ReferenceDesign = ReferenceDesign {
    name: "MC-18dB",
    constellation: NamedConstellation::Mc,
    dsnr_db: 18.0,
    level_capacity: [1.1554, 1.4988],
    sum_capacity: 2.6542,
    sum_rate: 2.4692,
    sum_rate_tol: 0.08,
    rates: [[0.5237, 0.5237], [0.7109, 0.7109]],
    dc: [[6, 6], [10, 10]],
    lambdas: [
        [
            &[(2, 0.4132), (3, 0.4174), (38, 0.0370), (39, 0.1324)],
            &[(2, 0.4132), (3, 0.4174), (38, 0.0374), (39, 0.1320)],
        ],
        [&[(2, 0.6779), (46, 0.3221)], &[(2, 0.6779), (46, 0.3221)]],
    ],
    opt_order: false,
};

pub const OPT18: ReferenceDesign = ReferenceDesign {
    name: "OPT-18dB",
    constellation: NamedConstellation::Opt,
    dsnr_db: 18.0,
    level_capacity: [1.3294, 1.9880],
    sum_capacity: 3.3174,
    sum_rate: 2.9796,
    sum_rate_tol: 0.09,
    rates: [[0.6414, 0.5650], [0.9000, 0.8732]],
    dc: [[8, 8], [20, 20]],
    lambdas: [
        [
            &[(2, 0.4633), (3, 0.3390), (50, 0.1977)],
            &[(2, 0.3498), (3, 0.3175), (50, 0.3328)],
        ],
        [&[(2, 1.0)], &[(2, 0.3660), (3, 0.6340)]],
    ],
    opt_order: true,
};

pub const REFERENCES: [&ReferenceDesign; 3] = [&MC10, &MC18, &OPT18];

/// Prints and returns one acceptance line.
pub fn report(criterion: &str, pass: bool, detail: &str) -> bool {
    println!(
        "[{}] criterion {criterion}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}
