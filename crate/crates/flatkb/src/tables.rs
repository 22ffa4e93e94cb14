//! Parameter and cofactor listings for a vee joint, as CSV.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::cw_complex::PairVerdict;
use crate::frames::{make_tube_frame, AxisLabel, FrameKind, TubeFrame};
use crate::interval::{Interval, SignVerdict};
use crate::io::{csv_string, fmt5, IoError};
use crate::tube_joint::{
    build_tube_joint, generate_certified, generate_parameters, labelled_rows, InteriorKind, JointError, LabelledRow, TubeJoint,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VeeParams {
    pub n: usize,
    pub l: f64,
    pub theta: f64,
    pub phi: f64,
    pub psi: f64,
    pub k: usize,
    pub alpha: f64,
    pub gamma: f64,
}

impl Default for VeeParams {
    fn default() -> Self {
        VeeParams { n: 6, l: 4.0, theta: PI / 3.0, phi: PI, psi: 1.5 * PI, k: 3, alpha: 3.1, gamma: 2.5 }
    }
}

impl VeeParams {
    pub fn frame(&self) -> Result<TubeFrame, JointError> {
        Ok(make_tube_frame(FrameKind::Vee, self.n, self.l, self.theta, self.phi, self.psi, AxisLabel::Inverted)?)
    }

    pub fn joint(&self) -> Result<TubeJoint, JointError> {
        let tf = self.frame()?;
        let jp = generate_parameters(&tf, self.k, self.alpha, self.gamma)?;
        build_tube_joint(&tf, &jp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamRow {
    pub i: i64,
    pub alpha: Interval,
    pub gamma: Interval,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub j: i64,
    pub delta: Interval,
    pub sign: SignVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tables {
    pub params: VeeParams,
    pub table1a: Vec<ParamRow>,
    pub table1b: Vec<DeltaRow>,
    pub table2: Vec<LabelledRow>,
    pub table3: Vec<LabelledRow>,
    /// Largest `|alpha_{k+j} - alpha_{k-j}|`, `|gamma_{k+j} - gamma_{k-j}|`.
    pub symmetry_residual: f64,
    /// Verdicts of every labelled row at all `2n` indices, not only the listed ones.
    pub all_rows_separated: bool,
}

/// Rows `i = k..=k+n` of the parameter and cofactor listings, `j = 1..=n` of the discriminants.
pub fn compute_tables(p: &VeeParams) -> Result<Tables, JointError> {
    let tf = p.frame()?;
    let cert = generate_certified(&tf, p.k, p.alpha, p.gamma)?;
    let tj = p.joint()?;
    let len = 2 * p.n as i64;
    let k = p.k as i64;
    let at = |v: &[Interval], i: i64| v[i.rem_euclid(len) as usize];
    let range = k..=k + p.n as i64;
    let table1a = range.clone().map(|i| ParamRow { i, alpha: at(&cert.alphas, i), gamma: at(&cert.gammas, i) }).collect();
    let table1b =
        cert.deltas.iter().filter(|d| d.j > 0).map(|d| DeltaRow { j: d.j, delta: d.value, sign: d.value.sign() }).collect();
    let table2 = range.clone().flat_map(|i| labelled_rows(&tj, InteriorKind::A, i)).collect();
    let table3 = range.flat_map(|i| labelled_rows(&tj, InteriorKind::C, i)).collect();
    let jp = &tj.params;
    let symmetry_residual = (1..=p.n as i64)
        .map(|j| (jp.alpha(k + j) - jp.alpha(k - j)).abs().max((jp.gamma(k + j) - jp.gamma(k - j)).abs()))
        .fold(0.0, f64::max);
    let all_rows_separated = (0..len).all(|i| {
        [InteriorKind::A, InteriorKind::C]
            .iter()
            .all(|&kind| labelled_rows(&tj, kind, i).iter().all(|r| r.verdict == PairVerdict::Separated))
    });
    Ok(Tables { params: *p, table1a, table1b, table2, table3, symmetry_residual, all_rows_separated })
}

pub const TABLE1A_HEADER: [&str; 3] = ["i", "alpha_i", "gamma_i"];
pub const TABLE1B_HEADER: [&str; 2] = ["j", "Delta_j"];
pub const COFACTOR_HEADER: [&str; 8] = ["i", "j", "k", "c1", "c2", "c3", "c4", "verdict"];

/// Named CSV files: value tables and companion radius files.
pub fn tables_csv(t: &Tables) -> Result<Vec<(String, String)>, IoError> {
    let t1a: Vec<Vec<String>> =
        t.table1a.iter().map(|r| vec![r.i.to_string(), fmt5(r.alpha.mid()), fmt5(r.gamma.mid())]).collect();
    let t1a_r: Vec<Vec<String>> = t
        .table1a
        .iter()
        .map(|r| vec![r.i.to_string(), format!("{:e}", r.alpha.radius()), format!("{:e}", r.gamma.radius())])
        .collect();
    let t1b: Vec<Vec<String>> = t.table1b.iter().map(|r| vec![r.j.to_string(), fmt5(r.delta.mid())]).collect();
    let t1b_r: Vec<Vec<String>> =
        t.table1b.iter().map(|r| vec![r.j.to_string(), format!("{:e}", r.delta.radius()), r.sign.to_string()]).collect();
    let cof = |rows: &[LabelledRow]| -> Vec<Vec<String>> {
        rows.iter()
            .map(|r| {
                let mut v = vec![r.i.to_string(), r.j.to_string(), r.k.to_string()];
                v.extend(r.cofactors.iter().map(|&c| fmt5(c)));
                v.push(r.verdict.to_string());
                v
            })
            .collect()
    };
    let cof_r = |rows: &[LabelledRow]| -> Vec<Vec<String>> {
        rows.iter()
            .map(|r| {
                let mut v = vec![r.i.to_string(), r.j.to_string(), r.k.to_string()];
                v.extend(r.enclosures.iter().map(|c| format!("{:e}", c.radius())));
                v
            })
            .collect()
    };
    let radius_header = ["i", "j", "k", "r1", "r2", "r3", "r4"];
    Ok(vec![
        ("table1a.csv".into(), csv_string(&TABLE1A_HEADER, &t1a)?),
        ("table1a_radii.csv".into(), csv_string(&["i", "alpha_radius", "gamma_radius"], &t1a_r)?),
        ("table1b.csv".into(), csv_string(&TABLE1B_HEADER, &t1b)?),
        ("table1b_radii.csv".into(), csv_string(&["j", "Delta_radius", "sign"], &t1b_r)?),
        ("table2.csv".into(), csv_string(&COFACTOR_HEADER, &cof(&t.table2))?),
        ("table2_radii.csv".into(), csv_string(&radius_header, &cof_r(&t.table2))?),
        ("table3.csv".into(), csv_string(&COFACTOR_HEADER, &cof(&t.table3))?),
        ("table3_radii.csv".into(), csv_string(&radius_header, &cof_r(&t.table3))?),
    ])
}
