//! JSON interchange format for networks:
//! `{widths, layers: [{rows, cols, triplets: [[i, j, v]], bias: [[i, v]]}], metadata}`
//! with 0-based indices. Biases list only their nonzero entries.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use relusolve_core::iter::{Method, SolverMeta};
use relusolve_core::{Layer, ReluNetwork};
use serde::ser::{SerializeSeq, SerializeStruct};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{CliError, Result};
use crate::output::write_atomic;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub method: String,
    pub n: usize,
    pub eta: usize,
    pub lambda: f64,
    #[serde(rename = "Lambda")]
    pub lambda_max: f64,
    pub epsilon: f64,
    pub c_sc: f64,
    pub m: usize,
}

impl From<&SolverMeta> for Metadata {
    fn from(m: &SolverMeta) -> Self {
        Self {
            method: m.method.name().to_string(),
            n: m.n,
            eta: m.eta,
            lambda: m.lambda,
            lambda_max: m.lambda_max,
            epsilon: m.epsilon,
            c_sc: m.c_sc,
            m: m.m,
        }
    }
}

impl Metadata {
    pub fn method(&self) -> Result<Method> {
        match self.method.as_str() {
            "richardson" => Ok(Method::Richardson),
            "cg" => Ok(Method::ChebyshevCg),
            other => Err(CliError::InvalidArgs(format!(
                "network metadata names unknown method {other:?}"
            ))),
        }
    }
}

struct LayerOut<'a>(&'a Layer);

struct Triplets<'a>(&'a Layer);

struct SparseBias<'a>(&'a [f64]);

impl Serialize for Triplets<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.0.nnz()))?;
        for t in self.0.triplets() {
            seq.serialize_element(&t)?;
        }
        seq.end()
    }
}

impl Serialize for SparseBias<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let nz = self.0.iter().enumerate().filter(|(_, v)| **v != 0.0);
        let mut seq = s.serialize_seq(Some(nz.clone().count()))?;
        for (i, v) in nz {
            seq.serialize_element(&(i, v))?;
        }
        seq.end()
    }
}

impl Serialize for LayerOut<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Layer", 4)?;
        st.serialize_field("rows", &self.0.rows())?;
        st.serialize_field("cols", &self.0.cols())?;
        st.serialize_field("triplets", &Triplets(self.0))?;
        st.serialize_field("bias", &SparseBias(self.0.bias()))?;
        st.end()
    }
}

struct NetworkOut<'a> {
    net: &'a ReluNetwork,
    metadata: Option<&'a Metadata>,
}

impl Serialize for NetworkOut<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Network", 3)?;
        st.serialize_field("widths", &self.net.widths())?;
        let layers: Vec<LayerOut> = self.net.layers().iter().map(LayerOut).collect();
        st.serialize_field("layers", &layers)?;
        if let Some(m) = self.metadata {
            st.serialize_field("metadata", m)?;
        }
        st.end()
    }
}

#[derive(Deserialize)]
struct LayerIn {
    rows: usize,
    cols: usize,
    triplets: Vec<(usize, usize, f64)>,
    bias: Vec<(usize, f64)>,
}

#[derive(Deserialize)]
struct NetworkIn {
    widths: Vec<usize>,
    layers: Vec<LayerIn>,
    metadata: Option<Metadata>,
}

pub fn to_json_writer(
    w: &mut dyn std::io::Write,
    net: &ReluNetwork,
    metadata: Option<&Metadata>,
) -> std::io::Result<()> {
    serde_json::to_writer(&mut *w, &NetworkOut { net, metadata })?;
    w.write_all(b"\n")
}

pub fn write_network(path: &Path, net: &ReluNetwork, metadata: Option<&Metadata>) -> Result<()> {
    write_atomic(path, |w| to_json_writer(w, net, metadata))
}

fn assemble(doc: NetworkIn) -> std::result::Result<(ReluNetwork, Option<Metadata>), String> {
    let mut layers = Vec::with_capacity(doc.layers.len());
    for (l, layer) in doc.layers.into_iter().enumerate() {
        let mut bias = vec![0.0; layer.rows];
        for (i, v) in layer.bias {
            *bias
                .get_mut(i)
                .ok_or_else(|| format!("layer {}: bias index {i} out of range", l + 1))? = v;
        }
        let built = Layer::from_triplets(layer.rows, layer.cols, layer.triplets, bias)
            .map_err(|e| format!("layer {}: {e}", l + 1))?;
        layers.push(built);
    }
    let net = ReluNetwork::new(layers).map_err(|e| e.to_string())?;
    if net.widths() != doc.widths {
        return Err(format!(
            "declared widths {:?} disagree with the layers {:?}",
            doc.widths,
            net.widths()
        ));
    }
    Ok((net, doc.metadata))
}

pub fn from_json_str(text: &str) -> std::result::Result<(ReluNetwork, Option<Metadata>), String> {
    let doc: NetworkIn = serde_json::from_str(text).map_err(|e| e.to_string())?;
    assemble(doc)
}

pub fn read_network(path: &Path) -> Result<(ReluNetwork, Option<Metadata>)> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let doc: NetworkIn = serde_json::from_reader(BufReader::new(file)).map_err(|source| {
        if source.is_io() {
            CliError::io(path, source.into())
        } else {
            CliError::NetworkFormat {
                path: path.to_path_buf(),
                source,
            }
        }
    })?;
    assemble(doc).map_err(|msg| CliError::InvalidArgs(format!("{}: {msg}", path.display())))
}
