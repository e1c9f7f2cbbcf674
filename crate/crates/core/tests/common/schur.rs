//! Block LMIs against their pre-Schur matrix inequalities, evaluated on the
//! assembled constraints at random points.

use std::collections::BTreeMap;

use dclqr::linalg::min_eigenvalue;
use dclqr::model::{DifferenceInclusion, VertexSystem};
use dclqr::sdp::{assemble_dc_state, assemble_dc_state_input, names, CostWeights, SdpProblem};
use dclqr::statistics::{DataSummary, NoiseSpec};
use nalgebra::DMatrix;

use super::{gaussian_matrix, random_pd, rng};

pub const TOL: f64 = 1e-8;
/// Points closer than this to the boundary are not classified.
const GAP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Vertex,
    Frobenius,
    Z1,
    Z2,
    Z3,
}

impl Family {
    pub const ALL: [Family; 5] = [Family::Vertex, Family::Frobenius, Family::Z1, Family::Z2, Family::Z3];
}

/// Points classified on each side of the boundary.
#[derive(Debug, Default, Clone, Copy)]
pub struct Tally {
    pub inside: usize,
    pub outside: usize,
}

struct Setup {
    inc: DifferenceInclusion,
    weights: CostWeights,
    noise: NoiseSpec,
    data: DataSummary,
}

fn setup(seed: u64, rx: usize, ru: usize, a_scale: f64) -> Setup {
    let mut r = rng(seed);
    let a = gaussian_matrix(&mut r, rx, rx) * a_scale;
    let b = gaussian_matrix(&mut r, rx, ru);
    let gamma = random_pd(&mut r, rx + ru, 0.2);
    Setup {
        inc: DifferenceInclusion::new(vec![VertexSystem::new(a, b)]).unwrap(),
        weights: CostWeights::new(DMatrix::identity(rx, rx), DMatrix::identity(ru, ru)).unwrap(),
        noise: NoiseSpec::new(random_pd(&mut r, rx, 0.01) * 0.1, random_pd(&mut r, ru, 0.05) * 0.2).unwrap(),
        data: DataSummary::from_moments(
            gamma.view((0, 0), (rx, rx)).into_owned(),
            gamma.view((0, rx), (rx, ru)).into_owned(),
            gamma.view((rx, rx), (ru, ru)).into_owned(),
            10,
        )
        .unwrap(),
    }
}

fn residual(p: &SdpProblem, label: &str, values: &BTreeMap<String, DMatrix<f64>>) -> f64 {
    let v = p.values_by_id(values).unwrap();
    p.constraints().iter().find(|c| c.label == label).unwrap().residual(&v)
}

fn shift(m: &DMatrix<f64>, delta: f64) -> DMatrix<f64> {
    m + DMatrix::identity(m.nrows(), m.ncols()) * delta
}

fn design(sigma: &DMatrix<f64>, k: &DMatrix<f64>, v: &DMatrix<f64>) -> DMatrix<f64> {
    let (rx, ru) = (sigma.nrows(), v.nrows());
    let ks = k * sigma;
    let mut des = DMatrix::zeros(rx + ru, rx + ru);
    des.view_mut((0, 0), (rx, rx)).copy_from(sigma);
    des.view_mut((rx, 0), (ru, rx)).copy_from(&ks);
    des.view_mut((0, rx), (rx, ru)).copy_from(&ks.transpose());
    des.view_mut((rx, rx), (ru, ru)).copy_from(&(&ks * k.transpose() + v));
    des
}

/// Returns `(λmin of the pre-Schur inequality, λmin of the assembled block)`
/// at one random point.
fn sample(family: Family, seed: u64) -> (f64, f64) {
    let (rx, ru) = (1 + (seed % 4) as usize, 1 + (seed % 2) as usize);
    let a_scale = match family {
        Family::Vertex => 0.2 + (seed % 7) as f64 * 0.15,
        _ => 0.5,
    };
    let s = setup(seed, rx, ru, a_scale);
    let mut r = rng(seed ^ 0x5eed);
    let sigma = random_pd(&mut r, rx, 0.05) * 2.0;
    let k = gaussian_matrix(&mut r, ru, rx) * 0.5;
    let delta = ((seed % 13) as f64 - 6.0) * 0.07;
    let mut values = BTreeMap::from([
        (names::SIGMA.to_string(), sigma.clone()),
        (names::L.to_string(), &k * &sigma),
        (names::Z0.to_string(), DMatrix::identity(ru, ru)),
        (names::Z_FROB.to_string(), DMatrix::identity(rx, rx)),
        (names::Z1.to_string(), DMatrix::identity(rx + ru, rx + ru)),
        (names::Z2.to_string(), DMatrix::identity(ru, ru)),
        (names::Z3.to_string(), DMatrix::identity(rx, rx)),
    ]);
    let sigma_inv = sigma.clone().try_inverse().unwrap();
    match family {
        Family::Vertex => {
            let p = assemble_dc_state(&s.inc, &s.weights, &s.noise, &s.data.sigma, 1.0).unwrap();
            let v = &s.inc.vertices()[0];
            let m = &v.a + &v.b * &k;
            let pre = &sigma - &m * &sigma * m.transpose() - &v.b * &s.noise.v * v.b.transpose() - &s.noise.w;
            (min_eigenvalue(&pre), residual(&p, "vertex[0]", &values))
        }
        Family::Frobenius => {
            let p = assemble_dc_state(&s.inc, &s.weights, &s.noise, &s.data.sigma, 1.0).unwrap();
            let d = &sigma - &s.data.sigma;
            let sq = &d * &d;
            let z = shift(&sq, delta);
            values.insert(names::Z_FROB.into(), z.clone());
            (min_eigenvalue(&(z - sq)), residual(&p, "frobenius", &values))
        }
        Family::Z1 | Family::Z2 | Family::Z3 => {
            let p = assemble_dc_state_input(&s.inc, &s.weights, &s.noise, &s.data, 1.0).unwrap();
            let (name, floor) = match family {
                Family::Z1 => (names::Z1, design(&sigma, &k, &s.noise.v)),
                Family::Z2 => {
                    let sd_inv = s.data.sigma.clone().try_inverse().unwrap();
                    let e = &k * &sigma - s.data.cross.transpose() * sd_inv * &sigma;
                    (names::Z2, &e * &sigma_inv * e.transpose())
                }
                _ => (names::Z3, sigma_inv.clone()),
            };
            let z = shift(&floor, delta);
            values.insert(name.into(), z.clone());
            let label = match family {
                Family::Z1 => "Z1",
                Family::Z2 => "Z2",
                _ => "Z3",
            };
            (min_eigenvalue(&(z - floor)), residual(&p, label, &values))
        }
    }
}

/// Classifies `points` random points and reports the first disagreement.
pub fn check_family(family: Family, points: u64) -> Result<Tally, String> {
    let mut tally = Tally::default();
    for seed in 0..points {
        let (pre, block) = sample(family, seed);
        if pre.abs() < GAP {
            continue;
        }
        let expect = pre >= 0.0;
        if expect != (block >= -TOL) {
            return Err(format!(
                "{family:?} seed {seed}: pre-Schur λmin {pre:e}, block λmin {block:e}"
            ));
        }
        if expect {
            tally.inside += 1;
        } else {
            tally.outside += 1;
        }
    }
    Ok(tally)
}
