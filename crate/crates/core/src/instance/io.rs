//! JSON instance format.
//!
//! ```json
//! {"pairs":[{"id":0,"cpra":0.2,"bt_patient":"O","bt_donor":"A"}],
//!  "ndds":[{"id":0,"bt_donor":"O"}],
//!  "edges":[{"id":0,"src":{"kind":"ndd","id":0},"dst":0,"weight":1.0,"discount":0.0}]}
//! ```
//!
//! Serialization is canonical: keys sorted, records sorted by id.

use serde::{Deserialize, Serialize};

use super::{BloodType, CompatibilityGraph, Edge, InstanceError, NddVertex, PairVertex, VertexRef};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    #[serde(default)]
    edges: Vec<EdgeDoc>,
    #[serde(default)]
    ndds: Vec<NddDoc>,
    #[serde(default)]
    pairs: Vec<PairDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairDoc {
    #[serde(default)]
    bt_donor: BloodType,
    #[serde(default)]
    bt_patient: BloodType,
    #[serde(default)]
    cpra: f64,
    id: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NddDoc {
    #[serde(default)]
    bt_donor: BloodType,
    id: usize,
}

#[derive(Serialize, Deserialize, Clone, Copy)]
#[serde(rename_all = "lowercase")]
enum Kind {
    Pair,
    Ndd,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VertexDoc {
    id: usize,
    kind: Kind,
}

/// Edge heads are plain pair ids; the tagged form is accepted so that an edge
/// into an NDD can be reported instead of failing as a type error.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum HeadDoc {
    Pair(usize),
    Tagged(VertexDoc),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    #[serde(default)]
    discount: f64,
    dst: HeadDoc,
    id: usize,
    src: VertexDoc,
    weight: f64,
}

pub fn parse_instance(text: &str) -> Result<CompatibilityGraph, InstanceError> {
    let doc: InstanceDoc =
        serde_json::from_str(text).map_err(|e| InstanceError::Syntax(e.to_string()))?;
    let pairs = doc
        .pairs
        .into_iter()
        .map(|p| PairVertex {
            id: p.id,
            cpra: p.cpra,
            blood_type_patient: p.bt_patient,
            blood_type_donor: p.bt_donor,
        })
        .collect();
    let ndds = doc
        .ndds
        .into_iter()
        .map(|n| NddVertex {
            id: n.id,
            blood_type_donor: n.bt_donor,
        })
        .collect();
    let mut edges = Vec::with_capacity(doc.edges.len());
    for (pos, e) in doc.edges.into_iter().enumerate() {
        let dst = match e.dst {
            HeadDoc::Pair(id) => id,
            HeadDoc::Tagged(VertexDoc {
                kind: Kind::Pair,
                id,
            }) => id,
            HeadDoc::Tagged(VertexDoc {
                kind: Kind::Ndd, ..
            }) => {
                return Err(InstanceError::invalid(
                    format!("edges[{pos}].dst"),
                    "edges may not enter an NDD",
                ))
            }
        };
        let src = match e.src.kind {
            Kind::Pair => VertexRef::Pair(e.src.id),
            Kind::Ndd => VertexRef::Ndd(e.src.id),
        };
        edges.push(Edge {
            id: e.id,
            src,
            dst,
            weight: e.weight,
            discount: e.discount,
        });
    }
    CompatibilityGraph::new(pairs, ndds, edges)
}

pub fn serialize_instance(g: &CompatibilityGraph) -> String {
    let doc = InstanceDoc {
        edges: g
            .edges()
            .iter()
            .map(|e| EdgeDoc {
                discount: e.discount,
                dst: HeadDoc::Pair(e.dst),
                id: e.id,
                src: match e.src {
                    VertexRef::Pair(id) => VertexDoc {
                        id,
                        kind: Kind::Pair,
                    },
                    VertexRef::Ndd(id) => VertexDoc {
                        id,
                        kind: Kind::Ndd,
                    },
                },
                weight: e.weight,
            })
            .collect(),
        ndds: g
            .ndds()
            .iter()
            .map(|n| NddDoc {
                bt_donor: n.blood_type_donor,
                id: n.id,
            })
            .collect(),
        pairs: g
            .pairs()
            .iter()
            .map(|p| PairDoc {
                bt_donor: p.blood_type_donor,
                bt_patient: p.blood_type_patient,
                cpra: p.cpra,
                id: p.id,
            })
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("instance serializes");
    out.push('\n');
    out
}
