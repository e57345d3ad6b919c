//! JSON encodings of fields, domains, systems, BV data and transforms.
//!
//! Expressions are trees `{"op": name, "args": [...]}` with leaves
//! `{"const": [re, im]}` and `{"var": "x" | "y" | "z" | "zbar"}`; `powi`
//! carries its exponent as `"n"`. Grids are
//! `{"x0", "x1", "y0", "y1", "n", "values": [[re, im], ...]}` in row-major
//! order.

use std::collections::HashMap;

use anyhow::{anyhow, bail, ensure, Context, Result};
use bvlab_core::elliptic::{Coefficients, RealEllipticSystem};
use bvlab_core::field::{Node, Rect, Var};
use bvlab_core::pipeline::BVData;
use bvlab_core::symmetry::{Diffeomorphism, Gauge, MapData};
use bvlab_core::{Complex64, ComplexField, Domain, Expr, Grid, Point};
use serde_json::{json, Map, Value};

/// Trees larger than this (counted without sharing) are refused.
pub const MAX_TREE_NODES: u64 = 2_000_000;

pub fn complex_to_json(c: Complex64) -> Value {
    json!([c.re, c.im])
}

pub fn complex_from_json(v: &Value) -> Result<Complex64> {
    match v {
        Value::Number(n) => Ok(Complex64::new(n.as_f64().context("number")?, 0.0)),
        Value::Array(a) if a.len() == 2 => {
            let re = a[0].as_f64().context("real part")?;
            let im = a[1].as_f64().context("imaginary part")?;
            Ok(Complex64::new(re, im))
        }
        _ => bail!("expected a complex number [re, im], got {v}"),
    }
}

/// Node count of the tree `e` unfolds to.
pub fn tree_size(e: &Expr) -> u64 {
    fn go(e: &Expr, memo: &mut HashMap<usize, u64>) -> u64 {
        let key = e.node() as *const Node as usize;
        if let Some(&s) = memo.get(&key) {
            return s;
        }
        let s = match e.node() {
            Node::Const(_) | Node::Var(_) => 1,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                1u64.saturating_add(go(a, memo)).saturating_add(go(b, memo))
            }
            Node::Neg(a) | Node::Conj(a) | Node::Exp(a) | Node::Powi(a, _) | Node::Abs2(a) | Node::Sqrt(a) => {
                1u64.saturating_add(go(a, memo))
            }
        };
        memo.insert(key, s);
        s
    }
    go(e, &mut HashMap::new())
}

pub fn expr_to_json(e: &Expr) -> Result<Value> {
    let size = tree_size(e);
    ensure!(size <= MAX_TREE_NODES, "expression unfolds to {size} nodes; sample it on a grid instead");
    Ok(expr_tree(e))
}

fn expr_tree(e: &Expr) -> Value {
    let op = |name: &str, args: &[&Expr]| json!({"op": name, "args": args.iter().map(|a| expr_tree(a)).collect::<Vec<_>>()});
    match e.node() {
        Node::Const(c) => json!({"const": [c.re, c.im]}),
        Node::Var(v) => json!({"var": match v {
            Var::X => "x",
            Var::Y => "y",
            Var::Z => "z",
            Var::ZBar => "zbar",
        }}),
        Node::Add(a, b) => op("add", &[a, b]),
        Node::Sub(a, b) => op("sub", &[a, b]),
        Node::Mul(a, b) => op("mul", &[a, b]),
        Node::Div(a, b) => op("div", &[a, b]),
        Node::Neg(a) => op("neg", &[a]),
        Node::Conj(a) => op("conj", &[a]),
        Node::Exp(a) => op("exp", &[a]),
        Node::Abs2(a) => op("abs2", &[a]),
        Node::Sqrt(a) => op("sqrt", &[a]),
        Node::Powi(a, n) => json!({"op": "powi", "args": [expr_tree(a)], "n": n}),
    }
}

pub fn expr_from_json(v: &Value) -> Result<Expr> {
    let obj = v.as_object().ok_or_else(|| anyhow!("expression must be an object, got {v}"))?;
    if let Some(c) = obj.get("const") {
        return Ok(Expr::constant(complex_from_json(c)?));
    }
    if let Some(name) = obj.get("var") {
        return Ok(match name.as_str() {
            Some("x") => Expr::x(),
            Some("y") => Expr::y(),
            Some("z") => Expr::z(),
            Some("zbar") => Expr::zbar(),
            _ => bail!("unknown variable {name}"),
        });
    }
    let op = obj.get("op").and_then(Value::as_str).ok_or_else(|| anyhow!("expression needs \"op\", \"const\" or \"var\""))?;
    let args: Vec<Expr> = obj
        .get("args")
        .and_then(Value::as_array)
        .ok_or_else(|| anyhow!("operation {op} needs \"args\""))?
        .iter()
        .map(expr_from_json)
        .collect::<Result<_>>()?;
    let arity = |k: usize| -> Result<()> {
        ensure!(args.len() == k, "operation {op} takes {k} arguments, got {}", args.len());
        Ok(())
    };
    Ok(match op {
        "add" | "sub" | "mul" | "div" => {
            arity(2)?;
            let (a, b) = (&args[0], &args[1]);
            match op {
                "add" => a + b,
                "sub" => a - b,
                "mul" => a * b,
                _ => a / b,
            }
        }
        "neg" | "conj" | "exp" | "abs2" | "sqrt" => {
            arity(1)?;
            let a = &args[0];
            match op {
                "neg" => -a,
                "conj" => a.conj(),
                "exp" => a.exp(),
                "abs2" => a.abs2(),
                _ => a.sqrt(),
            }
        }
        "powi" => {
            arity(1)?;
            let n = obj.get("n").and_then(Value::as_i64).ok_or_else(|| anyhow!("powi needs an integer \"n\""))?;
            args[0].powi(i32::try_from(n).context("exponent out of range")?)
        }
        _ => bail!("unknown operation {op}"),
    })
}

pub fn grid_to_json(g: &Grid) -> Value {
    let r = g.rect();
    let values: Vec<Value> = g.values().iter().map(|v| complex_to_json(*v)).collect();
    json!({"x0": r.x0, "x1": r.x1, "y0": r.y0, "y1": r.y1, "n": g.n(), "values": values})
}

pub fn grid_from_json(v: &Value) -> Result<Grid> {
    let num = |k: &str| v.get(k).and_then(Value::as_f64).ok_or_else(|| anyhow!("grid needs a number \"{k}\""));
    let rect = Rect::new(num("x0")?, num("x1")?, num("y0")?, num("y1")?)?;
    let n = v.get("n").and_then(Value::as_u64).ok_or_else(|| anyhow!("grid needs an integer \"n\""))? as usize;
    let values = v
        .get("values")
        .and_then(Value::as_array)
        .ok_or_else(|| anyhow!("grid needs \"values\""))?
        .iter()
        .map(complex_from_json)
        .collect::<Result<Vec<_>>>()?;
    ensure!(values.len() == n * n, "grid has {} values, expected {}", values.len(), n * n);
    Ok(Grid::new(rect, n, values)?)
}

pub fn field_to_json(f: &ComplexField) -> Result<Value> {
    match (f.as_expr(), f.as_grid()) {
        (Some(e), _) => expr_to_json(e),
        (_, Some(g)) => Ok(grid_to_json(g)),
        _ => unreachable!("a field is an expression or a grid"),
    }
}

/// A bare number or `[re, im]` pair is accepted as a constant.
pub fn field_from_json(v: &Value, domain: &Domain) -> Result<ComplexField> {
    if v.is_number() || v.is_array() {
        return Ok(ComplexField::constant(complex_from_json(v)?, domain.clone()));
    }
    if v.get("values").is_some() {
        return Ok(ComplexField::grid(grid_from_json(v)?, domain.clone()));
    }
    Ok(ComplexField::expr(expr_from_json(v)?, domain.clone()))
}

fn rect_to_json(r: &Rect) -> Value {
    json!({"x0": r.x0, "x1": r.x1, "y0": r.y0, "y1": r.y1})
}

fn rect_from_json(v: &Value) -> Result<Rect> {
    let num = |k: &str| v.get(k).and_then(Value::as_f64).ok_or_else(|| anyhow!("rectangle needs a number \"{k}\""));
    Ok(Rect::new(num("x0")?, num("x1")?, num("y0")?, num("y1")?)?)
}

/// `{"type": "disk", "center": [x, y], "radius": r}`,
/// `{"type": "rectangle", "x0", "x1", "y0", "y1"}`, or
/// `{"type": "image", "base", "forward", "inverse", "bbox"}`.
pub fn domain_to_json(d: &Domain) -> Result<Value> {
    Ok(match d {
        Domain::Rectangle(r) => {
            let mut v = rect_to_json(r);
            v["type"] = json!("rectangle");
            v
        }
        Domain::Disk { center, radius } => json!({"type": "disk", "center": [center.x, center.y], "radius": radius}),
        Domain::Image(img) => json!({
            "type": "image",
            "base": domain_to_json(&img.base)?,
            "forward": field_to_json(&img.forward)?,
            "inverse": field_to_json(&img.inverse)?,
            "bbox": rect_to_json(&img.bbox()),
        }),
    })
}

pub fn domain_from_json(v: &Value) -> Result<Domain> {
    match v.get("type").and_then(Value::as_str) {
        Some("rectangle") => Ok(Domain::Rectangle(rect_from_json(v)?)),
        Some("disk") => {
            let c = complex_from_json(v.get("center").unwrap_or(&json!([0.0, 0.0])))?;
            let r = v.get("radius").and_then(Value::as_f64).ok_or_else(|| anyhow!("disk needs \"radius\""))?;
            Ok(Domain::disk(Point::from_z(c), r)?)
        }
        Some("image") => {
            let base = domain_from_json(v.get("base").context("image domain needs \"base\"")?)?;
            let bbox = rect_from_json(v.get("bbox").context("image domain needs \"bbox\"")?)?;
            let forward = field_from_json(v.get("forward").context("image domain needs \"forward\"")?, &base)?;
            let inverse = field_from_json(v.get("inverse").context("image domain needs \"inverse\"")?, &Domain::Rectangle(bbox))?;
            Ok(Domain::image(base, forward, inverse, Some(bbox))?)
        }
        _ => bail!("domain needs \"type\": disk, rectangle or image"),
    }
}

/// A real system with an optional exact solution `{"u": .., "v": ..}`.
#[derive(Debug, Clone)]
pub struct SystemInput {
    pub system: RealEllipticSystem,
    pub solution: Option<(ComplexField, ComplexField)>,
}

const PRINCIPAL_KEYS: [&str; 4] = ["11", "12", "21", "22"];

/// `{"a": {"11": .., ...}, "f": [f1, f2], "domain": ..}`. Missing
/// lower-order coefficients and a missing forcing default to zero.
pub fn system_from_json(v: &Value) -> Result<SystemInput> {
    let domain = domain_from_json(v.get("domain").context("system needs \"domain\"")?)?;
    let a = v.get("a").and_then(Value::as_object).context("system needs an object \"a\"")?;
    let coeff = |k: &str| -> Result<ComplexField> {
        match a.get(k) {
            Some(f) => field_from_json(f, &domain).with_context(|| format!("coefficient a{k}")),
            None if PRINCIPAL_KEYS.contains(&k) => bail!("system is missing a{k}"),
            None => Ok(ComplexField::zero(domain.clone())),
        }
    };
    let coeffs = Coefficients {
        a11: coeff("11")?,
        a12: coeff("12")?,
        a21: coeff("21")?,
        a22: coeff("22")?,
        a13: coeff("13")?,
        a14: coeff("14")?,
        a23: coeff("23")?,
        a24: coeff("24")?,
    };
    let (f1, f2) = match v.get("f") {
        Some(Value::Array(f)) if f.len() == 2 => (field_from_json(&f[0], &domain)?, field_from_json(&f[1], &domain)?),
        Some(other) => bail!("\"f\" must be a pair of fields, got {other}"),
        None => (ComplexField::zero(domain.clone()), ComplexField::zero(domain.clone())),
    };
    let solution = match v.get("solution") {
        Some(s) => Some((
            field_from_json(s.get("u").context("solution needs \"u\"")?, &domain)?,
            field_from_json(s.get("v").context("solution needs \"v\"")?, &domain)?,
        )),
        None => None,
    };
    Ok(SystemInput { system: RealEllipticSystem::new(coeffs, f1, f2, domain)?, solution })
}

pub fn system_to_json(input: &SystemInput) -> Result<Value> {
    let s = &input.system;
    let mut a = Map::new();
    for (name, f) in s.coeffs.named() {
        a.insert(name.trim_start_matches('a').to_string(), field_to_json(f)?);
    }
    let mut v = json!({
        "a": a,
        "f": [field_to_json(&s.f1)?, field_to_json(&s.f2)?],
        "domain": domain_to_json(s.domain())?,
    });
    if let Some((u, w)) = &input.solution {
        v["solution"] = json!({"u": field_to_json(u)?, "v": field_to_json(w)?});
    }
    Ok(v)
}

/// `{"mu": .., "A": .., "B": .., "F": .., "domain": ..}`.
pub fn bv_to_json(bv: &BVData) -> Result<Value> {
    let mut v = Map::new();
    for (name, f) in bv.fields() {
        v.insert(name.to_string(), field_to_json(f)?);
    }
    v.insert("domain".into(), domain_to_json(bv.domain())?);
    Ok(Value::Object(v))
}

pub fn bv_from_json(v: &Value) -> Result<BVData> {
    let domain = domain_from_json(v.get("domain").context("BV data needs \"domain\"")?)?;
    let get = |k: &str| -> Result<ComplexField> {
        match v.get(k) {
            Some(f) => field_from_json(f, &domain).with_context(|| format!("field {k}")),
            None => Ok(ComplexField::zero(domain.clone())),
        }
    };
    Ok(BVData::new(get("mu")?, get("A")?, get("B")?, get("F")?, domain.clone())?)
}

#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone)]
pub enum Transform {
    Gauge(Gauge),
    Map(Diffeomorphism),
}

/// `{"type": "gauge", "phi": ..}`, `{"type": "affine", "a", "b", "c"}` or
/// `{"type": "map", "map", "inverse", "source"}`.
///
/// Without `"source"`, an affine map is taken onto `domain` (the domain of
/// the data it will pull back); a gauge always lives on `domain`.
pub fn transform_from_json(v: &Value, domain: &Domain) -> Result<Transform> {
    let source = v.get("source").map(domain_from_json).transpose()?;
    match v.get("type").and_then(Value::as_str) {
        Some("gauge") => {
            let phi = field_from_json(v.get("phi").context("gauge needs \"phi\"")?, domain)?;
            Ok(Transform::Gauge(Gauge::new(phi)?))
        }
        Some("affine") => {
            let c = |k: &str, d: f64| v.get(k).map(complex_from_json).unwrap_or(Ok(Complex64::new(d, 0.0)));
            let (a, b, c) = (c("a", 1.0)?, c("b", 0.0)?, c("c", 0.0)?);
            Ok(Transform::Map(match source {
                Some(s) => Diffeomorphism::affine(a, b, c, s)?,
                None => Diffeomorphism::affine_onto(a, b, c, domain.clone())?,
            }))
        }
        Some("map") => {
            let source = source.context("a general map needs \"source\"")?;
            let map = field_from_json(v.get("map").context("map needs \"map\"")?, &source)?;
            let inverse = field_from_json(v.get("inverse").context("map needs \"inverse\"")?, domain)?;
            let target = Domain::image(source.clone(), map.clone(), inverse.clone(), None)?;
            let fwd = MapData::new(map)?;
            let inv = MapData::new(inverse.with_domain(target.clone()))?;
            Ok(Transform::Map(Diffeomorphism::new(fwd, Some(inv), source, target)?))
        }
        _ => bail!("transform needs \"type\": gauge, affine or map"),
    }
}

pub fn map_to_json(d: &Diffeomorphism) -> Result<Value> {
    Ok(json!({
        "type": "map",
        "map": field_to_json(&d.forward.map)?,
        "inverse": d.inverse.as_ref().map(|m| field_to_json(&m.map)).transpose()?,
        "source": domain_to_json(&d.source)?,
        "inverse_error": d.inverse_error,
    }))
}
