// SPDX-License-Identifier: Apache-2.0

use clap::ValueEnum;
use heatglue::graph_heat::{glue_i, glue_ii, heat_kernel, relative_heat_kernel, schur_cut};
use heatglue::path_sum::pathsum_heat;
use serde_json::json;

use crate::error::CliError;
use crate::fixture::{GraphFixture, RefKind};
use crate::report::Report;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Exact first gluing formula.
    #[default]
    Assembled,
    /// Truncated second gluing formula.
    Series,
}

/// Glued kernel at `t` against every heat reference of the fixture, or against
/// the assembled matrix exponential if it has none. Dirichlet references are
/// checked against the relative kernel.
pub fn glue(fx: &GraphFixture, t: f64, method: Method, k_max: usize, tol: f64) -> Result<Vec<Report>, CliError> {
    let d = fx.decomposition()?;
    let method_name = match method {
        Method::Assembled => "assembled",
        Method::Series => "series",
    };
    // (value, bound) by label
    let lookup: Box<dyn Fn(&str, &str) -> Result<(f64, f64), CliError>> = match method {
        Method::Assembled => {
            let k = glue_i(&d)?;
            Box::new(move |u, v| {
                let e = k
                    .entry(u, v)
                    .ok_or_else(|| CliError::Input(format!("unknown vertex pair ({u}, {v})")))?;
                Ok((e.evaluate(t)?, 0.0))
            })
        }
        Method::Series => {
            let s = glue_ii(&d, k_max)?;
            let rows = s.rows();
            let sv = s.evaluate(t)?;
            Box::new(move |u, v| {
                let pos = |w: &str| {
                    rows.iter()
                        .position(|r| r == w)
                        .ok_or_else(|| CliError::Input(format!("unknown vertex {w:?}")))
                };
                let (i, j) = (pos(u)?, pos(v)?);
                Ok((sv.value[(i, j)], sv.bound(i)))
            })
        }
    };
    let inputs = |u: &str, v: &str, kind: &str| {
        json!({"fixture": fx.name, "u": u, "v": v, "t": t, "method": method_name, "kmax": k_max, "kernel": kind})
    };
    let mut out = Vec::new();
    let heat: Vec<_> = fx.references(RefKind::Heat).collect();
    if heat.is_empty() {
        let direct = heat_kernel(d.graph())?;
        let labels = fx.vertices.clone();
        for u in &labels {
            for v in &labels {
                let (value, bound) = lookup(u, v)?;
                let reference = direct.entry(u, v).expect("same labels").evaluate(t)?;
                out.push(Report::new(format!("glue:{u}:{v}"), inputs(u, v, "heat"), value, reference, bound, tol));
            }
        }
    }
    for r in heat {
        let (value, bound) = lookup(&r.u, &r.v)?;
        let reference = r.kernel.evaluate(t)?;
        out.push(Report::new(
            format!("glue:{}:{}", r.u, r.v),
            inputs(&r.u, &r.v, "heat"),
            value,
            reference,
            bound,
            tol,
        ));
    }
    if fx.references(RefKind::Dirichlet).next().is_some() {
        let g = d.graph();
        let y = g.indices_of(&fx.dirichlet)?;
        let k = relative_heat_kernel(g, &y)?;
        for r in fx.references(RefKind::Dirichlet) {
            let e = k
                .entry(&r.u, &r.v)
                .ok_or_else(|| CliError::Input(format!("unknown vertex pair ({}, {})", r.u, r.v)))?;
            out.push(Report::new(
                format!("dirichlet:{}:{}", r.u, r.v),
                inputs(&r.u, &r.v, "dirichlet"),
                e.evaluate(t)?,
                r.kernel.evaluate(t)?,
                0.0,
                tol,
            ));
        }
    }
    Ok(out)
}

pub fn pathsum(fx: &GraphFixture, u: &str, v: &str, t: f64, eps: f64, tol: f64) -> Result<Report, CliError> {
    let g = fx.graph()?;
    let index = |w: &str| g.index_of(w).ok_or_else(|| CliError::Input(format!("unknown vertex {w:?}")));
    let (iu, iv) = (index(u)?, index(v)?);
    let r = pathsum_heat(&g, iu, iv, t, eps)?;
    let reference = match fx.reference(RefKind::Heat, u, v) {
        Some(k) => k.evaluate(t)?,
        None => heat_kernel(&g)?.get(iu, iv).evaluate(t)?,
    };
    Ok(Report::new(
        format!("pathsum:{u}:{v}"),
        json!({"fixture": fx.name, "u": u, "v": v, "t": t, "eps": eps, "cutoff": r.cutoff}),
        r.value,
        reference,
        r.tail_bound,
        tol,
    ))
}

/// `G^{X,Y}` through the Schur complement of `G^X`, entry by entry, against the
/// Laplace transform of the Dirichlet references when they use the same `Y`,
/// and against the direct inverse otherwise.
pub fn cut(fx: &GraphFixture, interface: &[String], m2: f64, tol: f64) -> Result<Vec<Report>, CliError> {
    let g = fx.graph()?;
    let y = g.indices_of(interface)?;
    let c = schur_cut(&g, &y, m2)?;
    let rest: Vec<usize> = (0..g.n()).filter(|v| !y.contains(v)).collect();
    let mut same_set = fx.dirichlet.clone();
    let mut wanted = interface.to_vec();
    same_set.sort();
    wanted.sort();
    let closed_form = same_set == wanted;
    let mut out = Vec::new();
    for (a, &u) in rest.iter().enumerate() {
        for (b, &v) in rest.iter().enumerate() {
            let (lu, lv) = (g.label(u), g.label(v));
            let reference = match fx.reference(RefKind::Dirichlet, lu, lv).filter(|_| closed_form) {
                Some(k) => k.laplace(m2)?,
                None => c.direct[(a, b)],
            };
            out.push(Report::new(
                format!("cut:{lu}:{lv}"),
                json!({"fixture": fx.name, "u": lu, "v": lv, "interface": interface, "m2": m2}),
                c.schur[(a, b)],
                reference,
                0.0,
                tol,
            ));
        }
    }
    Ok(out)
}
