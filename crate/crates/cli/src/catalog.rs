//! Registry of everything a scene file can name.

use minkowski_core::identity::IdentityId;
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct ParamSchema {
    pub name: &'static str,
    #[serde(rename = "type")]
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub default: Option<&'static str>,
    pub doc: &'static str,
}

#[derive(Clone, Debug, Serialize)]
pub struct EntrySchema {
    pub id: &'static str,
    pub doc: &'static str,
    pub params: Vec<ParamSchema>,
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentitySchema {
    pub id: String,
    pub integrand: &'static str,
    pub gates: Vec<&'static str>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Catalog {
    pub manifolds: Vec<EntrySchema>,
    pub surfaces: Vec<EntrySchema>,
    pub fields: Vec<EntrySchema>,
    pub identities: Vec<IdentitySchema>,
}

const fn p(name: &'static str, kind: &'static str, doc: &'static str) -> ParamSchema {
    ParamSchema {
        name,
        kind,
        default: None,
        doc,
    }
}

const fn pd(name: &'static str, kind: &'static str, default: &'static str, doc: &'static str) -> ParamSchema {
    ParamSchema {
        name,
        kind,
        default: Some(default),
        doc,
    }
}

fn integrand(id: IdentityId) -> &'static str {
    match id {
        IdentityId::Gen(0) => "L_0 - n<P,nu>H_1",
        IdentityId::Gen(1) => "L_1 - 2C(n,2)<P,nu>H_2 - Ric(P,nu) + <P,nu>Ric(nu,nu)",
        IdentityId::Gen(_) => {
            "L_2 + n<P,nu>Ric(nu,nu)H_1 - nRic(P,nu)H_1 - 3C(n,3)<P,nu>H_3 + <P,nu>tr R(nu,A.)nu - tr R(P,A.)nu + Ric(A P^T,nu)"
        }
        IdentityId::Pos(0) => "n f - n<P,nu>H_1",
        IdentityId::Pos(1) => "(n-1)n f H_1 - 2C(n,2)<P,nu>H_2 - Ric(P,nu) + <P,nu>Ric(nu,nu)",
        IdentityId::Pos(_) => {
            "(n-2)C(n,2) f H_2 + n<P,nu>Ric(nu,nu)H_1 - nRic(P,nu)H_1 - 3C(n,3)<P,nu>H_3 + <P,nu>tr R(nu,A.)nu - tr R(P,A.)nu + Ric(A P^T,nu)"
        }
        IdentityId::Ein(1) => "f H_1 - <P,nu>H_2",
        IdentityId::Ein(_) => "3C(n,3)(f H_2 - <P,nu>H_3) + <P,nu>tr R(nu,A.)nu - tr R(P,A.)nu",
        IdentityId::Csc(_) => "f H_i - <P,nu>H_{i+1}",
        IdentityId::Csc2X => "f H_2 - <P,nu>H_3",
    }
}

fn gate_names(id: IdentityId) -> Vec<&'static str> {
    let g = id.gates();
    let mut v = Vec::new();
    if g.position {
        v.push("position field (conformal defect)");
    }
    if g.einstein {
        v.push("Einstein ambient (Ricci defect)");
    }
    if g.space_form {
        v.push("constant sectional curvature");
    }
    v
}

pub fn catalog() -> Catalog {
    let manifolds = vec![
        EntrySchema {
            id: "euclidean",
            doc: "flat R^d, Cartesian chart",
            params: vec![p("dim", "integer", "ambient dimension d")],
        },
        EntrySchema {
            id: "spaceform_conformal",
            doc: "g = lambda^2 delta, lambda = 2/(1 + c|x|^2); sphere minus a point (c > 0) or ball model (c < 0)",
            params: vec![
                p("dim", "integer", "ambient dimension d"),
                p("c", "number", "sectional curvature"),
            ],
        },
        EntrySchema {
            id: "warped",
            doc: "dr^2 + phi(r)^2 g_sphere in polar coordinates",
            params: vec![
                p("dim", "integer", "ambient dimension d"),
                p("phi", "expression in r", "warping function"),
            ],
        },
        EntrySchema {
            id: "product_spheres",
            doc: "S^2(a) x S^2(a) in angle coordinates; curvature tests only",
            params: vec![p("a", "number", "sphere radius")],
        },
        EntrySchema {
            id: "einstein_cone",
            doc: "dr^2 + r^2 g over S^2(a) x S^2(a); Ricci-flat for a^2 = 1/3",
            params: vec![
                pd("dim", "integer", "5", "must be 5"),
                pd("a", "number", "0.5773502691896258", "fiber sphere radius"),
            ],
        },
        EntrySchema {
            id: "expression",
            doc: "arbitrary metric components in x1..xd",
            params: vec![
                p("dim", "integer", "ambient dimension d"),
                p("metric", "array of d*d expressions", "row-major g_ij"),
            ],
        },
    ];
    let shared = [pd(
        "negative_orientation",
        "boolean",
        "false",
        "reverse the chart orientation (manifold params)",
    )];
    let mut manifolds = manifolds;
    for m in &mut manifolds {
        m.params.extend(shared.iter().cloned());
    }
    let surfaces = vec![
        EntrySchema {
            id: "geodesic_sphere",
            doc: "sphere of geodesic radius rho about the chart origin",
            params: vec![p("rho", "number", "geodesic radius")],
        },
        EntrySchema {
            id: "perturbed_sphere",
            doc: "geodesic sphere with chart radius scaled by 1 + eps h (Cartesian) or shifted by eps h (polar); h in u1..un or w1..wd",
            params: vec![
                p("rho", "number", "base radius"),
                p("eps", "number", "perturbation size"),
                p("h", "expression", "perturbation profile"),
            ],
        },
        EntrySchema {
            id: "graph_over_fiber",
            doc: "r = rho + eps h(angles) on a polar chart",
            params: vec![
                p("rho", "number", "base radius"),
                p("eps", "number", "perturbation size"),
                p("h", "expression", "perturbation profile"),
            ],
        },
        EntrySchema {
            id: "ellipsoid",
            doc: "ellipsoid with semi-axes a1..ad in a Cartesian chart",
            params: vec![p("a1..ad", "number", "semi-axes")],
        },
        EntrySchema {
            id: "torus_of_revolution",
            doc: "torus in euclidean(3)",
            params: vec![p("R", "number", "major radius"), p("rho", "number", "tube radius")],
        },
        EntrySchema {
            id: "clifford_torus",
            doc: "S^1(r1) x S^(d-2)(r2), r1^2 + r2^2 = 1, in spaceform_conformal(d, 1)",
            params: vec![p("r1", "number", "radius of the circle factor")],
        },
        EntrySchema {
            id: "graph_torus",
            doc: "tube about the equatorial circle r = r0 in warped(3)",
            params: vec![
                p("r0", "number", "core radius"),
                p("rho", "number", "radial amplitude"),
                p("beta", "number", "polar amplitude"),
            ],
        },
        EntrySchema {
            id: "expression",
            doc: "chart components in u1..un over a box of periodic/polar axes",
            params: vec![
                p("components", "array of expressions", "x^a(u)"),
                p("axes", "array of \"periodic\" | \"polar\"", "parameter axes"),
            ],
        },
    ];
    let fields = vec![
        EntrySchema {
            id: "position",
            doc: "catalog position field of the ambient metric",
            params: vec![],
        },
        EntrySchema {
            id: "random_polynomial",
            doc: "seeded random polynomial in chart features; seed from field.seed",
            params: vec![
                pd("degree", "integer", "3", "total degree (<= 6)"),
                pd("amplitude", "number", "1.0", "coefficient bound"),
            ],
        },
        EntrySchema {
            id: "coordinate",
            doc: "chart components in x1..xd",
            params: vec![
                p("components", "array of expressions", "P^a(x)"),
                pd(
                    "claims_position",
                    "boolean",
                    "false",
                    "enable position-field identities",
                ),
            ],
        },
    ];
    let identities = IdentityId::all(4)
        .into_iter()
        .filter(|id| !matches!(id, IdentityId::Csc(i) if *i > 0))
        .map(|id| IdentitySchema {
            id: match id {
                IdentityId::Csc(_) => "CSC_i".to_string(),
                _ => id.to_string(),
            },
            integrand: integrand(id),
            gates: gate_names(id),
        })
        .collect();
    Catalog {
        manifolds,
        surfaces,
        fields,
        identities,
    }
}

pub fn render(c: &Catalog, identities_only: bool) -> String {
    let mut out = String::new();
    let section = |out: &mut String, title: &str, entries: &[EntrySchema]| {
        out.push_str(title);
        out.push('\n');
        for e in entries {
            out.push_str(&format!("  {:<22} {}\n", e.id, e.doc));
            for p in &e.params {
                let def = p.default.map(|d| format!(" = {d}")).unwrap_or_default();
                out.push_str(&format!("      {:<22} {}{}  {}\n", p.name, p.kind, def, p.doc));
            }
        }
    };
    if !identities_only {
        section(&mut out, "manifolds", &c.manifolds);
        section(&mut out, "surfaces", &c.surfaces);
        section(&mut out, "fields", &c.fields);
    }
    out.push_str("identities\n");
    for i in &c.identities {
        out.push_str(&format!("  {:<7} {}\n", i.id, i.integrand));
        if identities_only || !i.gates.is_empty() {
            let g = if i.gates.is_empty() {
                "none".to_string()
            } else {
                i.gates.join(", ")
            };
            out.push_str(&format!("          gates: {g}\n"));
        }
    }
    out
}
